//! Single seller, single buyer: posted prices on a finite value grid.
//!
//! A posted price `p` sells iff the buyer's value is at least `p` (ties
//! trade), so its outcome data reveal exactly the tail mass `π([p,1])`. A
//! randomized price `p̃` reveals the tails at every support point.

use itertools::Itertools;
use num::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasible::PriorPolytope;
use crate::kernel::{Prior, StochasticKernel};
use crate::linalg::Matrix;
use crate::lp::{LinearProgram, Relation};
use crate::rational::{format_rational, Q};
use crate::self_confirming::{CompetitorFamily, Provenance};

/// Grids larger than this are refused by the brute-force oracle.
pub const ORACLE_MAX_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonopolyInstance {
    grid: Vec<Q>,
    pi0: Prior,
    /// `(grid index, probability)`, ascending by index, probabilities positive.
    price_support: Vec<(usize, Q)>,
}

impl MonopolyInstance {
    pub fn new(grid: Vec<Q>, pi0_atoms: Vec<Q>, price_support: Vec<(Q, Q)>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Instance("empty value grid".into()));
        }
        if grid.iter().any(|v| v.is_negative() || *v > Q::one()) {
            return Err(Error::Instance("grid values must lie in [0,1]".into()));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Instance("grid must be strictly increasing".into()));
        }
        let labels = grid.iter().map(format_rational).collect();
        let pi0 = Prior::new(pi0_atoms, labels)?;
        let mut support: Vec<(usize, Q)> = Vec::new();
        for (price, prob) in price_support {
            let idx = grid
                .iter()
                .position(|g| *g == price)
                .ok_or_else(|| Error::Instance(format!("price {} is not on the grid", format_rational(&price))))?;
            if prob.is_negative() {
                return Err(Error::Instance("negative price probability".into()));
            }
            if prob.is_zero() {
                continue;
            }
            match support.iter_mut().find(|(i, _)| *i == idx) {
                Some((_, p)) => *p += prob,
                None => support.push((idx, prob)),
            }
        }
        support.sort_by_key(|(i, _)| *i);
        let total = support.iter().fold(Q::zero(), |acc, (_, p)| acc + p);
        if !total.is_one() {
            return Err(Error::Instance(format!("price distribution sums to {}", format_rational(&total))));
        }
        Ok(MonopolyInstance { grid, pi0, price_support: support })
    }

    /// Same grid and prior with a different price distribution.
    pub fn with_prices(&self, price_support: Vec<(Q, Q)>) -> Result<Self> {
        Self::new(self.grid.clone(), self.pi0.atoms().to_vec(), price_support)
    }

    pub fn grid(&self) -> &[Q] {
        &self.grid
    }

    pub fn pi0(&self) -> &Prior {
        &self.pi0
    }

    pub fn price_support(&self) -> &[(usize, Q)] {
        &self.price_support
    }

    pub fn support_prices(&self) -> Vec<Q> {
        self.price_support.iter().map(|(i, _)| self.grid[*i].clone()).collect()
    }

    pub fn grid_index(&self, p: &Q) -> Result<usize> {
        self.grid
            .iter()
            .position(|g| g == p)
            .ok_or_else(|| Error::Precondition(format!("price {} is not a grid point", format_rational(p))))
    }

    fn check_prior(&self, pi: &Prior) -> Result<()> {
        if pi.dim() != self.grid.len() {
            return Err(Error::dim(format!("belief has {} atoms for a {}-point grid", pi.dim(), self.grid.len())));
        }
        Ok(())
    }

    /// Unified outcome labels: no trade, then trade at each grid price.
    pub fn outcome_labels(&self) -> Vec<String> {
        std::iter::once("(0,0)".to_string())
            .chain(self.grid.iter().map(|p| format!("(1,{})", format_rational(p))))
            .collect()
    }

    /// Seller revenue `u⁰` on the unified outcome space.
    pub fn designer_utility(&self) -> Matrix {
        let n = self.grid.len();
        Matrix::from_fn(n + 1, n, |o, _| if o == 0 { Q::zero() } else { self.grid[o - 1].clone() })
    }

    /// Allocation of the randomized price on the unified outcome space.
    pub fn unified_kernel(&self, prices: &[(usize, Q)]) -> StochasticKernel {
        let n = self.grid.len();
        let m = Matrix::from_fn(n + 1, n, |o, t| {
            if o == 0 {
                prices.iter().filter(|(i, _)| t < *i).fold(Q::zero(), |acc, (_, w)| acc + w)
            } else {
                prices.iter().find(|(i, _)| *i == o - 1 && t >= *i).map(|(_, w)| w.clone()).unwrap_or_else(Q::zero)
            }
        });
        StochasticKernel::new(m, self.outcome_labels(), self.pi0.labels().to_vec()).expect("columns sum to one")
    }

    /// Every pure grid price, on the unified outcome space.
    pub fn competitor_family(&self) -> CompetitorFamily {
        let members = (0..self.grid.len()).map(|i| self.unified_kernel(&[(i, Q::one())])).collect();
        CompetitorFamily::unchecked(members, Provenance::DomainGenerated)
    }
}

fn tail_from(pi: &Prior, idx: usize) -> Q {
    pi.atoms()[idx..].iter().fold(Q::zero(), |acc, x| acc + x)
}

/// Outcome kernel of posting `p`: trade `(1,p)` iff `θ >= p`, else `(0,0)`.
pub fn posted_price_kernel(inst: &MonopolyInstance, p: &Q) -> Result<StochasticKernel> {
    let idx = inst.grid_index(p)?;
    let n = inst.grid.len();
    let m = Matrix::from_fn(2, n, |r, t| if (r == 0) == (t >= idx) { Q::one() } else { Q::zero() });
    StochasticKernel::new(m, vec![format!("(1,{})", format_rational(p)), "(0,0)".into()], inst.pi0.labels().to_vec())
}

/// Outcome kernel of the randomized price: one trade row per support price, then no trade.
pub fn randomized_price_kernel(inst: &MonopolyInstance) -> StochasticKernel {
    let n = inst.grid.len();
    let s = inst.price_support.len();
    let m = Matrix::from_fn(s + 1, n, |r, t| {
        if r < s {
            let (i, w) = &inst.price_support[r];
            if t >= *i {
                w.clone()
            } else {
                Q::zero()
            }
        } else {
            inst.price_support.iter().filter(|(i, _)| t < *i).fold(Q::zero(), |acc, (_, w)| acc + w)
        }
    });
    let mut labels: Vec<String> = inst.support_prices().iter().map(|p| format!("(1,{})", format_rational(p))).collect();
    labels.push("(0,0)".into());
    StochasticKernel::new(m, labels, inst.pi0.labels().to_vec()).expect("columns sum to one")
}

/// `p · π([p,1])`.
pub fn revenue(inst: &MonopolyInstance, p: &Q, pi: &Prior) -> Result<Q> {
    inst.check_prior(pi)?;
    let idx = inst.grid_index(p)?;
    Ok(p * tail_from(pi, idx))
}

/// Expected revenue of the randomized price under `pi`.
pub fn mechanism_revenue(inst: &MonopolyInstance, pi: &Prior) -> Result<Q> {
    inst.check_prior(pi)?;
    Ok(inst
        .price_support
        .iter()
        .fold(Q::zero(), |acc, (i, w)| acc + w * &inst.grid[*i] * tail_from(pi, *i)))
}

/// `(p, p·π([p,1]))` for every grid price, ascending in `p`.
pub fn revenue_curve(inst: &MonopolyInstance, pi: &Prior) -> Result<Vec<(Q, Q)>> {
    inst.check_prior(pi)?;
    Ok((0..inst.grid.len()).map(|i| (inst.grid[i].clone(), &inst.grid[i] * tail_from(pi, i))).collect())
}

/// Tail masses at the support prices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailProfile {
    pub tails: Vec<(Q, Q)>,
}

pub fn tail_profile(inst: &MonopolyInstance, pi: &Prior) -> Result<TailProfile> {
    inst.check_prior(pi)?;
    Ok(TailProfile {
        tails: inst.price_support.iter().map(|(i, _)| (inst.grid[*i].clone(), tail_from(pi, *i))).collect(),
    })
}

/// `{π : π([p,1]) = π₀([p,1]) for every support price p}`.
pub fn feasible_tail_polytope(inst: &MonopolyInstance) -> PriorPolytope {
    let n = inst.grid.len();
    let rows = inst.price_support.len();
    let k = Matrix::from_fn(rows, n, |r, t| if t >= inst.price_support[r].0 { Q::one() } else { Q::zero() });
    let rhs = inst.price_support.iter().map(|(i, _)| tail_from(&inst.pi0, *i)).collect();
    PriorPolytope::from_equalities(k, rhs, inst.pi0.clone()).expect("true prior satisfies its own tails")
}

/// Grid prices whose revenue weakly beats each grid neighbor.
pub fn local_maximizers(inst: &MonopolyInstance, pi: &Prior) -> Result<Vec<Q>> {
    let curve = revenue_curve(inst, pi)?;
    let n = curve.len();
    Ok((0..n)
        .filter(|&i| {
            let r = &curve[i].1;
            (i == 0 || *r >= curve[i - 1].1) && (i + 1 == n || *r >= curve[i + 1].1)
        })
        .map(|i| curve[i].0.clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Characterization {
    /// All support prices earn the same revenue under `π₀`.
    pub cond_equal_revenue: bool,
    /// All support prices are grid local maximizers under `π₀`.
    pub cond_local_max: bool,
    #[serde(serialize_with = "ser_pairs")]
    pub support_revenues: Vec<(Q, Q)>,
    #[serde(serialize_with = "ser_list")]
    pub non_local_max: Vec<Q>,
}

impl Characterization {
    pub fn holds(&self) -> bool {
        self.cond_equal_revenue && self.cond_local_max
    }
}

fn ser_pairs<S: serde::Serializer>(v: &[(Q, Q)], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for (a, b) in v {
        seq.serialize_element(&[format_rational(a), format_rational(b)])?;
    }
    seq.end()
}

fn ser_list<S: serde::Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(format_rational))
}

/// Grid analogue of the two-condition characterization, evaluated under `π₀`.
pub fn check_characterization(inst: &MonopolyInstance) -> Characterization {
    let pi0 = &inst.pi0;
    let support_revenues: Vec<(Q, Q)> = inst
        .support_prices()
        .into_iter()
        .map(|p| {
            let r = revenue(inst, &p, pi0).expect("support is on the grid");
            (p, r)
        })
        .collect();
    let cond_equal_revenue = support_revenues.iter().map(|(_, r)| r).all_equal();
    let maxima = local_maximizers(inst, pi0).expect("prior matches grid");
    let non_local_max: Vec<Q> = support_revenues.iter().map(|(p, _)| p.clone()).filter(|p| !maxima.contains(p)).collect();
    Characterization { cond_equal_revenue, cond_local_max: non_local_max.is_empty(), support_revenues, non_local_max }
}

/// Limits for the oracle's grain enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrainCap {
    pub max_size: usize,
    pub max_sets: usize,
}

impl GrainCap {
    /// Largest grain size worth enumerating by default.
    pub const MAX_AUTO_SIZE: usize = 5;

    /// Sized so every grain set of `π₀` below `epsilon` is enumerated, up to
    /// [`GrainCap::MAX_AUTO_SIZE`] points.
    pub fn for_epsilon(pi0: &Prior, epsilon: &Q) -> Self {
        let mut atoms = pi0.atoms().to_vec();
        atoms.sort();
        let mut mass = Q::zero();
        let mut size = 0;
        for a in &atoms {
            mass += a;
            if mass >= *epsilon {
                break;
            }
            size += 1;
        }
        GrainCap { max_size: size.clamp(1, Self::MAX_AUTO_SIZE), ..Self::default() }
    }
}

impl Default for GrainCap {
    fn default() -> Self {
        GrainCap { max_size: 3, max_sets: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleVerdict {
    Robust,
    NotRobust,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub verdict: OracleVerdict,
    pub epsilon: Q,
    /// Minimal failing grain set (grid indices, ascending).
    pub failing_grain: Option<Vec<usize>>,
    /// Justifying belief for the unrestricted tail polytope, if any.
    pub witness_belief: Option<Prior>,
    pub sets_checked: usize,
    pub incomplete: bool,
}

impl OracleReport {
    pub fn failing_prices(&self, inst: &MonopolyInstance) -> Option<Vec<Q>> {
        self.failing_grain.as_ref().map(|a| a.iter().map(|&i| inst.grid[i].clone()).collect())
    }
}

/// Belief in the tail polytope pinned on `pinned` under which no grid price
/// beats the randomized price, if one exists.
pub fn oracle_justifying_belief(inst: &MonopolyInstance, pinned: &[usize]) -> Result<Option<Prior>> {
    let n = inst.grid.len();
    let pi0 = inst.pi0.atoms();
    let tail_row = |from: usize| -> Vec<Q> { (0..n).map(|t| if t >= from { Q::one() } else { Q::zero() }).collect() };
    let mut lp = LinearProgram::new(n);
    lp.add(vec![Q::one(); n], Relation::Eq, Q::one())?;
    for (i, _) in &inst.price_support {
        lp.add(tail_row(*i), Relation::Eq, pi0[*i..].iter().fold(Q::zero(), |a, b| a + b))?;
    }
    for &a in pinned {
        let mut row = vec![Q::zero(); n];
        row[a] = Q::one();
        lp.add(row, Relation::Eq, pi0[a].clone())?;
    }
    // With support tails pinned, the mechanism's revenue is its value under π₀.
    let value = mechanism_revenue(inst, &inst.pi0)?;
    for (q_idx, price) in inst.grid.iter().enumerate() {
        let row = tail_row(q_idx).into_iter().map(|x| x * price).collect();
        lp.add(row, Relation::Le, value.clone())?;
    }
    Ok(lp.find_feasible()?.map(|x| Prior::new(x, inst.pi0.labels().to_vec()).expect("LP point is a distribution")))
}

/// Brute-force robust self-confirmation at one ε: every grain set `A` with
/// `π₀(A) < ε` (arbitrary point sets, up to `cap.max_size` points) is tried.
pub fn oracle_robust_sc(inst: &MonopolyInstance, epsilon: &Q, cap: GrainCap) -> Result<OracleReport> {
    let n = inst.grid.len();
    if n > ORACLE_MAX_GRID {
        return Err(Error::Precondition(format!("grid of {n} points exceeds oracle bound {ORACLE_MAX_GRID}")));
    }
    let pi0 = inst.pi0.atoms();
    let witness_belief = oracle_justifying_belief(inst, &[])?;
    let mut sets_checked = 0;
    let mut incomplete = false;
    let limit = cap.max_size.min(n);
    'sizes: for size in 0..=limit {
        for a in (0..n).combinations(size) {
            let mass = a.iter().fold(Q::zero(), |acc, &i| acc + &pi0[i]);
            if mass >= *epsilon {
                continue;
            }
            if sets_checked == cap.max_sets {
                incomplete = true;
                break 'sizes;
            }
            sets_checked += 1;
            if oracle_justifying_belief(inst, &a)?.is_none() {
                return Ok(OracleReport {
                    verdict: OracleVerdict::NotRobust,
                    epsilon: epsilon.clone(),
                    failing_grain: Some(a),
                    witness_belief,
                    sets_checked,
                    incomplete,
                });
            }
        }
    }
    if limit < n {
        let mut sorted = pi0.to_vec();
        sorted.sort();
        if sorted[..=limit].iter().fold(Q::zero(), |acc, x| acc + x) < *epsilon {
            incomplete = true;
        }
    }
    Ok(OracleReport {
        verdict: if incomplete { OracleVerdict::Inconclusive } else { OracleVerdict::Robust },
        epsilon: epsilon.clone(),
        failing_grain: None,
        witness_belief,
        sets_checked,
        incomplete,
    })
}

/// `π([p,1]) >= π₀([p,1])` at every support price, for `π` in the tail polytope.
pub fn equal_tail_check(inst: &MonopolyInstance, pi: &Prior) -> Result<bool> {
    inst.check_prior(pi)?;
    let polytope = feasible_tail_polytope(inst);
    if !crate::feasible::membership(&polytope, pi)? {
        return Err(Error::Precondition("belief is not in the feasible tail polytope".into()));
    }
    Ok(inst.price_support.iter().all(|(i, _)| tail_from(pi, *i) >= tail_from(&inst.pi0, *i)))
}
