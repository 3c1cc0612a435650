//! Feasible-prior polytopes and grain-of-truth restrictions.
//!
//! A [`PriorPolytope`] is `{π ∈ Δ(Θ) : Kπ = b}` intersected with agreement
//! pins `πⁱ(a) = π₀ⁱ(a)` on agent marginals. `Θ` may be a product of agent
//! type spaces (`factors`); with a single factor the marginal is `π` itself.

use std::collections::HashSet;

use itertools::Itertools;
use num::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{Prior, StochasticKernel};
use crate::linalg::Matrix;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::rational::{format_rational, Q};
use crate::revelation::{profile_of, FictitiousDirect};

/// Vertex enumeration refuses ambient spaces larger than this by default.
pub const DEFAULT_MAX_AMBIENT: usize = 20;

/// Default bound on the number of vertices returned.
pub const DEFAULT_VERTEX_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgreementPin {
    pub agent: usize,
    pub atom: usize,
    pub value: Q,
}

#[derive(Debug, Clone)]
pub struct PriorPolytope {
    labels: Vec<String>,
    factors: Vec<usize>,
    equality: Matrix,
    rhs: Vec<Q>,
    pins: Vec<AgreementPin>,
    reference: Prior,
}

/// Per-agent index sets `Aⁱ` on which beliefs must agree with the truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrainSet {
    pub sets: Vec<Vec<usize>>,
    pub epsilon: Q,
}

impl GrainSet {
    pub fn new(sets: Vec<Vec<usize>>, epsilon: Q) -> Self {
        let sets = sets.into_iter().map(|s| s.into_iter().sorted().dedup().collect()).collect();
        GrainSet { sets, epsilon }
    }

    pub fn single(set: Vec<usize>, epsilon: Q) -> Self {
        Self::new(vec![set], epsilon)
    }

    pub fn is_empty(&self) -> bool {
        self.sets.iter().all(Vec::is_empty)
    }

    /// Checks `π₀ⁱ(Aⁱ) < ε` for every agent.
    pub fn validate(&self, pi0: &Prior, factors: &[usize]) -> Result<()> {
        if self.sets.len() != factors.len() {
            return Err(Error::Grain(format!("{} index sets for {} agents", self.sets.len(), factors.len())));
        }
        for (i, set) in self.sets.iter().enumerate() {
            if let Some(&bad) = set.iter().find(|&&a| a >= factors[i]) {
                return Err(Error::Grain(format!("agent {i}: atom {bad} out of range")));
            }
            let m = marginal(pi0, factors, i);
            let mass = set.iter().fold(Q::zero(), |acc, &a| acc + &m[a]);
            if mass >= self.epsilon {
                return Err(Error::Grain(format!(
                    "agent {i}: true mass {} of the grain set is not below epsilon {}",
                    format_rational(&mass),
                    format_rational(&self.epsilon)
                )));
            }
        }
        Ok(())
    }
}

/// Marginal of `pi` on agent `agent`'s factor.
pub fn marginal(pi: &Prior, factors: &[usize], agent: usize) -> Vec<Q> {
    let mut out = vec![Q::zero(); factors[agent]];
    for (j, x) in pi.atoms().iter().enumerate() {
        out[profile_of(j, factors)[agent]] += x;
    }
    out
}

impl PriorPolytope {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn ambient(&self) -> usize {
        self.labels.len()
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn equality_matrix(&self) -> &Matrix {
        &self.equality
    }

    pub fn rhs(&self) -> &[Q] {
        &self.rhs
    }

    pub fn pins(&self) -> &[AgreementPin] {
        &self.pins
    }

    pub fn reference(&self) -> &Prior {
        &self.reference
    }

    /// Polytope from explicit equalities `Kπ = b`; `reference` must satisfy them.
    pub fn from_equalities(equality: Matrix, rhs: Vec<Q>, reference: Prior) -> Result<Self> {
        if equality.cols() != reference.dim() || equality.rows() != rhs.len() {
            return Err(Error::dim("equality system does not match the reference prior"));
        }
        let p = PriorPolytope {
            labels: reference.labels().to_vec(),
            factors: vec![reference.dim()],
            equality,
            rhs,
            pins: Vec::new(),
            reference,
        };
        if !p.satisfies(p.reference.atoms()) {
            return Err(Error::Precondition("reference prior violates the equality system".into()));
        }
        Ok(p)
    }

    fn pin_row(&self, pin: &AgreementPin) -> Vec<Q> {
        (0..self.ambient())
            .map(|j| if profile_of(j, &self.factors)[pin.agent] == pin.atom { Q::one() } else { Q::zero() })
            .collect()
    }

    /// All equality rows: kernel rows, pins, then the simplex row `Σπ = 1`.
    pub fn constraint_system(&self) -> (Matrix, Vec<Q>) {
        let mut rows = self.equality.to_rows();
        let mut rhs = self.rhs.clone();
        for pin in &self.pins {
            rows.push(self.pin_row(pin));
            rhs.push(pin.value.clone());
        }
        rows.push(vec![Q::one(); self.ambient()]);
        rhs.push(Q::one());
        (Matrix::from_rows(rows).expect("uniform width"), rhs)
    }

    fn satisfies(&self, x: &[Q]) -> bool {
        if x.len() != self.ambient() || x.iter().any(Signed::is_negative) {
            return false;
        }
        let (m, rhs) = self.constraint_system();
        m.mul_vec(x).map(|v| v == rhs).unwrap_or(false)
    }

    /// Adds the polytope's constraints on the first `ambient()` variables of `lp`.
    pub fn add_to_lp(&self, lp: &mut LinearProgram) -> Result<()> {
        let (m, rhs) = self.constraint_system();
        let extra = lp.num_vars() - self.ambient();
        for (r, b) in rhs.into_iter().enumerate() {
            let mut row = m.row(r).to_vec();
            row.extend(std::iter::repeat_n(Q::zero(), extra));
            lp.add(row, Relation::Eq, b)?;
        }
        Ok(())
    }

    /// JSON export: constraint matrix, right-hand side and pins.
    pub fn export(&self) -> PolytopeExport {
        PolytopeExport {
            labels: self.labels.clone(),
            factors: self.factors.clone(),
            equality_matrix: self.equality.to_rows().iter().map(|r| r.iter().map(format_rational).collect()).collect(),
            rhs: self.rhs.iter().map(format_rational).collect(),
            pins: self
                .pins
                .iter()
                .map(|p| PinExport { agent: p.agent, atom: p.atom, value: format_rational(&p.value) })
                .collect(),
            reference: self.reference.atoms().iter().map(format_rational).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PinExport {
    pub agent: usize,
    pub atom: usize,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolytopeExport {
    pub labels: Vec<String>,
    pub factors: Vec<usize>,
    pub equality_matrix: Vec<Vec<String>>,
    pub rhs: Vec<String>,
    pub pins: Vec<PinExport>,
    pub reference: Vec<String>,
}

/// `{π ∈ Δ(Θ) : kπ = kπ₀}`.
pub fn feasible_set(k: &StochasticKernel, pi0: &Prior) -> Result<PriorPolytope> {
    feasible_set_factored(k, pi0, &[pi0.dim()])
}

/// As [`feasible_set`], with `Θ` declared as a product of agent type spaces
/// (needed for per-agent grain pins).
pub fn feasible_set_factored(k: &StochasticKernel, pi0: &Prior, factors: &[usize]) -> Result<PriorPolytope> {
    if k.cols() != pi0.dim() {
        return Err(Error::dim(format!("kernel has {} inputs, prior has {} atoms", k.cols(), pi0.dim())));
    }
    if factors.iter().product::<usize>() != pi0.dim() || factors.is_empty() {
        return Err(Error::dim("factor sizes do not multiply to the ambient dimension"));
    }
    let rhs = k.matrix().mul_vec(pi0.atoms())?;
    Ok(PriorPolytope {
        labels: pi0.labels().to_vec(),
        factors: factors.to_vec(),
        equality: k.matrix().clone(),
        rhs,
        pins: Vec::new(),
        reference: pi0.clone(),
    })
}

/// Adds agreement pins `πⁱ(a) = π₀ⁱ(a)` for every `a ∈ Aⁱ`.
pub fn restrict_grain(p: &PriorPolytope, grain: &GrainSet, pi0: &Prior) -> Result<PriorPolytope> {
    if pi0.dim() != p.ambient() {
        return Err(Error::dim("prior does not match polytope"));
    }
    grain.validate(pi0, &p.factors)?;
    let mut out = p.clone();
    for (agent, set) in grain.sets.iter().enumerate() {
        let m = marginal(pi0, &p.factors, agent);
        for &atom in set {
            let pin = AgreementPin { agent, atom, value: m[atom].clone() };
            if !out.pins.contains(&pin) {
                out.pins.push(pin);
            }
        }
    }
    Ok(out)
}

/// Grain filter on `Θⁱ x Θⁱ`-style signals: types in `Aⁱ` are revealed
/// alongside a fixed outside type `θ̄ⁱ`; other types go through `φⁱ` paired
/// with `θ̄ⁱ`.
///
/// The first signal coordinate ranges over the original filter's signals
/// (plus `θ̄ⁱ` when it is not one of them).
pub fn build_grain_filter(fd: &FictitiousDirect, grain: &GrainSet, pi0: &Prior) -> Result<FictitiousDirect> {
    let factors = fd.game.type_sizes();
    grain.validate(pi0, &factors)?;
    let mut filters = Vec::with_capacity(fd.filters.len());
    for (i, phi) in fd.filters.iter().enumerate() {
        let types = fd.game.type_space(i);
        let set = &grain.sets[i];
        let outside = (0..types.len())
            .find(|t| !set.contains(t))
            .ok_or_else(|| Error::Grain(format!("agent {i}: grain set covers every type")))?;
        let mut first: Vec<String> = phi.row_labels().to_vec();
        let outside_first = match first.iter().position(|l| *l == types[outside]) {
            Some(pos) => pos,
            None => {
                first.push(types[outside].clone());
                first.len() - 1
            }
        };
        let t = types.len();
        let rows = first.len() * t;
        let matrix = Matrix::from_fn(rows, t, |r, c| {
            let (f, second) = (r / t, r % t);
            if set.contains(&c) {
                if f == outside_first && second == c {
                    Q::one()
                } else {
                    Q::zero()
                }
            } else if second == outside && f < phi.rows() {
                phi.entry(f, c).clone()
            } else {
                Q::zero()
            }
        });
        let row_labels = first.iter().flat_map(|a| types.iter().map(move |b| format!("({a},{b})"))).collect();
        filters.push(StochasticKernel::new(matrix, row_labels, types.to_vec())?);
    }
    Ok(FictitiousDirect {
        game: fd.game.clone(),
        delta: fd.delta.clone(),
        filters,
        cases: fd.cases.clone(),
        certificate: None,
        blackwell_witness: None,
    })
}

pub fn membership(p: &PriorPolytope, pi: &Prior) -> Result<bool> {
    if pi.dim() != p.ambient() {
        return Err(Error::dim(format!("prior has {} atoms, polytope ambient is {}", pi.dim(), p.ambient())));
    }
    Ok(p.satisfies(pi.atoms()))
}

/// Affine dimension. Coordinates that are zero on the whole polytope are
/// detected by LP and added as equalities before taking the rank.
pub fn dimension(p: &PriorPolytope) -> Result<usize> {
    let (m, _) = p.constraint_system();
    let mut rows = m.to_rows();
    for j in 0..p.ambient() {
        if p.reference.atoms()[j].is_positive() {
            continue;
        }
        let mut lp = LinearProgram::new(p.ambient());
        p.add_to_lp(&mut lp)?;
        let mut obj = vec![Q::zero(); p.ambient()];
        obj[j] = Q::one();
        lp.maximize(obj)?;
        if let LpOutcome::Optimal { value, .. } = lp.solve()? {
            if value.is_zero() {
                let mut e = vec![Q::zero(); p.ambient()];
                e[j] = Q::one();
                rows.push(e);
            }
        }
    }
    let rank = Matrix::from_rows(rows)?.rank();
    Ok(p.ambient() - rank)
}

#[derive(Debug, Clone)]
pub struct Vertices {
    pub vertices: Vec<Prior>,
    /// True when the cap stopped enumeration early.
    pub truncated: bool,
}

impl Vertices {
    /// The vertex list, or an error if enumeration was truncated.
    pub fn complete(self) -> Result<Vec<Prior>> {
        if self.truncated {
            return Err(Error::EnumerationCap(format!("vertex enumeration stopped at {} vertices", self.vertices.len())));
        }
        Ok(self.vertices)
    }
}

/// Exact vertex enumeration by basic-solution search over the reduced
/// equality system.
pub fn vertices(p: &PriorPolytope, cap: usize) -> Result<Vertices> {
    vertices_with_limit(p, cap, DEFAULT_MAX_AMBIENT)
}

pub fn vertices_with_limit(p: &PriorPolytope, cap: usize, max_ambient: usize) -> Result<Vertices> {
    let n = p.ambient();
    if n > max_ambient {
        return Err(Error::EnumerationCap(format!("ambient dimension {n} exceeds {max_ambient}")));
    }
    let (m, rhs) = p.constraint_system();
    let aug = Matrix::from_fn(m.rows(), n + 1, |r, c| if c < n { m[(r, c)].clone() } else { rhs[r].clone() });
    let ech = aug.echelon();
    if ech.pivots.last() == Some(&n) {
        return Ok(Vertices { vertices: Vec::new(), truncated: false });
    }
    let r = ech.pivots.len();
    let reduced = ech.reduced.select_rows(&(0..r).collect::<Vec<_>>());
    let system = reduced.select_cols(&(0..n).collect::<Vec<_>>());
    let b: Vec<Q> = (0..r).map(|i| reduced[(i, n)].clone()).collect();

    let mut seen: HashSet<Vec<Q>> = HashSet::new();
    let mut out = Vec::new();
    for basis in (0..n).combinations(r) {
        let Some(x) = system.select_cols(&basis).solve(&b) else {
            continue;
        };
        if x.iter().any(Signed::is_negative) {
            continue;
        }
        let mut point = vec![Q::zero(); n];
        for (&j, v) in basis.iter().zip(x) {
            point[j] = v;
        }
        if seen.insert(point.clone()) {
            if out.len() == cap {
                return Ok(Vertices { vertices: out, truncated: true });
            }
            out.push(Prior::new(point, p.labels.clone())?);
        }
    }
    Ok(Vertices { vertices: out, truncated: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn identity_pins_the_prior() {
        let pi0 = Prior::from_atoms(vec![q(1, 2), q(1, 3), q(1, 6)]).unwrap();
        let p = feasible_set(&StochasticKernel::identity(labels(3)), &pi0).unwrap();
        assert_eq!(dimension(&p).unwrap(), 0);
        let v = vertices(&p, 10).unwrap().complete().unwrap();
        assert_eq!(v, vec![pi0.clone().relabel(labels(3)).unwrap()]);
    }

    #[test]
    fn pooling_gives_the_simplex() {
        let pi0 = Prior::uniform(labels(3));
        let p = feasible_set(&StochasticKernel::pooling(vec!["m".into()], 0, labels(3)), &pi0).unwrap();
        assert_eq!(dimension(&p).unwrap(), 2);
        let v = vertices(&p, 10).unwrap().complete().unwrap();
        assert_eq!(v.len(), 3);
        for (i, vert) in v.iter().enumerate() {
            assert_eq!(vert, &Prior::dirac(labels(3), i));
        }
    }

    #[test]
    fn pooling_with_one_pin_drops_a_dimension() {
        let pi0 = Prior::uniform(labels(4));
        let p = feasible_set(&StochasticKernel::pooling(vec!["m".into()], 0, labels(4)), &pi0).unwrap();
        let r = restrict_grain(&p, &GrainSet::single(vec![1], q(1, 2)), &pi0).unwrap();
        assert_eq!(dimension(&r).unwrap(), 2);
        assert!(restrict_grain(&p, &GrainSet::single(vec![1, 2], q(1, 2)), &pi0).is_err());
        let empty = restrict_grain(&p, &GrainSet::single(vec![], q(1, 100)), &pi0).unwrap();
        assert_eq!(dimension(&empty).unwrap(), 3);
    }

    #[test]
    fn implicit_zero_coordinates_reduce_dimension() {
        // x0 + x1 = 1 with pi0 = (1,0,0)... the third atom is forced to zero.
        let pi0 = Prior::from_atoms(vec![qi(1), qi(0), qi(0)]).unwrap();
        let k = Matrix::from_rows(vec![vec![qi(1), qi(1), qi(0)]]).unwrap();
        let p = PriorPolytope::from_equalities(k, vec![qi(1)], pi0).unwrap();
        assert_eq!(dimension(&p).unwrap(), 1);
    }

    #[test]
    fn truncation_is_flagged() {
        let pi0 = Prior::uniform(labels(4));
        let p = feasible_set(&StochasticKernel::pooling(vec!["m".into()], 0, labels(4)), &pi0).unwrap();
        let v = vertices(&p, 2).unwrap();
        assert!(v.truncated);
        assert!(v.complete().is_err());
    }

    #[test]
    fn membership_rejects_wrong_dimension() {
        let pi0 = Prior::uniform(labels(2));
        let p = feasible_set(&StochasticKernel::identity(labels(2)), &pi0).unwrap();
        assert!(membership(&p, &Prior::uniform(labels(3))).is_err());
        assert!(membership(&p, &pi0).unwrap());
        assert!(!membership(&p, &Prior::dirac(labels(2), 0)).unwrap());
    }
}
