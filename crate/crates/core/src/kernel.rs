//! Finite stochastic kernels and the two informativeness orders on them.
//!
//! A kernel `g: X -> Δ(Y)` is stored as a column-stochastic matrix with one
//! column per input label and one row per output label, so pushing a
//! distribution through `g` is a matrix-vector product and composing kernels
//! is a matrix product.

use std::fmt;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{rows_span_contains, Matrix};
use crate::lp::{LinearProgram, Relation};
use crate::rational::{format_rational, Q};

/// Column-stochastic exact matrix with labelled rows (codomain) and columns (domain).
#[derive(Clone, PartialEq, Eq)]
pub struct StochasticKernel {
    matrix: Matrix,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl fmt::Debug for StochasticKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StochasticKernel")
            .field("rows", &self.row_labels)
            .field("cols", &self.col_labels)
            .field("matrix", &self.matrix)
            .finish()
    }
}

fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

impl StochasticKernel {
    /// Validates nonnegativity, exact unit column sums and label lengths.
    pub fn new(matrix: Matrix, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        if row_labels.len() != matrix.rows() || col_labels.len() != matrix.cols() {
            return Err(Error::NotStochastic(format!(
                "{} row labels / {} column labels for a {}x{} matrix",
                row_labels.len(),
                col_labels.len(),
                matrix.rows(),
                matrix.cols()
            )));
        }
        for c in 0..matrix.cols() {
            let mut sum = Q::zero();
            for r in 0..matrix.rows() {
                let x = &matrix[(r, c)];
                if x.is_negative() {
                    return Err(Error::NotStochastic(format!(
                        "negative entry {} at row {r}, column {c}",
                        format_rational(x)
                    )));
                }
                sum += x;
            }
            if !sum.is_one() {
                return Err(Error::ColumnSum { column: c, sum: format_rational(&sum) });
            }
        }
        Ok(StochasticKernel { matrix, row_labels, col_labels })
    }

    /// Kernel with generated labels `y0.. / x0..`.
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        let (r, c) = (matrix.rows(), matrix.cols());
        Self::new(matrix, default_labels("y", r), default_labels("x", c))
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self> {
        Self::from_matrix(Matrix::from_rows(rows)?)
    }

    /// Rescales every column to sum to one. Fails on a zero or negative column.
    pub fn normalized(matrix: Matrix, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        let mut m = matrix;
        for c in 0..m.cols() {
            let col = m.column(c);
            if col.iter().any(Signed::is_negative) {
                return Err(Error::NotStochastic(format!("negative entry in column {c}")));
            }
            let sum: Q = col.iter().cloned().fold(Q::zero(), |a, b| a + b);
            if sum.is_zero() {
                return Err(Error::ColumnSum { column: c, sum: "0".into() });
            }
            for r in 0..m.rows() {
                let v = &m[(r, c)] / &sum;
                m[(r, c)] = v;
            }
        }
        Self::new(m, row_labels, col_labels)
    }

    pub fn identity(labels: Vec<String>) -> Self {
        let n = labels.len();
        StochasticKernel { matrix: Matrix::identity(n), row_labels: labels.clone(), col_labels: labels }
    }

    /// Every input sent to the single output `target` of `outputs`.
    pub fn pooling(outputs: Vec<String>, target: usize, inputs: Vec<String>) -> Self {
        let matrix = Matrix::from_fn(outputs.len(), inputs.len(), |r, _| if r == target { Q::one() } else { Q::zero() });
        StochasticKernel { matrix, row_labels: outputs, col_labels: inputs }
    }

    /// Deterministic kernel from a map `input index -> output index`.
    pub fn deterministic(map: &[usize], row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        if map.len() != col_labels.len() || map.iter().any(|&m| m >= row_labels.len()) {
            return Err(Error::dim("deterministic map out of range"));
        }
        let matrix = Matrix::from_fn(row_labels.len(), col_labels.len(), |r, c| {
            if map[c] == r {
                Q::one()
            } else {
                Q::zero()
            }
        });
        Ok(StochasticKernel { matrix, row_labels, col_labels })
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> &Q {
        &self.matrix[(row, col)]
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn with_labels(mut self, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        if row_labels.len() != self.rows() || col_labels.len() != self.cols() {
            return Err(Error::dim("label count does not match kernel shape"));
        }
        self.row_labels = row_labels;
        self.col_labels = col_labels;
        Ok(self)
    }

    /// True when every entry is 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        (0..self.rows()).all(|r| (0..self.cols()).all(|c| {
            let x = self.entry(r, c);
            x.is_zero() || x.is_one()
        }))
    }

    /// For a deterministic kernel, the output index chosen by each input.
    pub fn deterministic_map(&self) -> Option<Vec<usize>> {
        if !self.is_deterministic() {
            return None;
        }
        Some((0..self.cols()).map(|c| (0..self.rows()).find(|&r| self.entry(r, c).is_one()).unwrap()).collect())
    }

    /// Drops all-zero rows; the result has the same null space and the same
    /// average on every prior up to those rows.
    pub fn without_zero_rows(&self) -> StochasticKernel {
        let keep: Vec<usize> = (0..self.rows()).filter(|&r| self.matrix.row(r).iter().any(|x| !x.is_zero())).collect();
        StochasticKernel {
            matrix: self.matrix.select_rows(&keep),
            row_labels: keep.iter().map(|&r| self.row_labels[r].clone()).collect(),
            col_labels: self.col_labels.clone(),
        }
    }
}

/// Probability vector over a labelled finite set.
#[derive(Clone, PartialEq, Eq)]
pub struct Prior {
    atoms: Vec<Q>,
    labels: Vec<String>,
}

impl fmt::Debug for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self.atoms.iter().map(format_rational).collect();
        write!(f, "Prior({})", atoms.join(", "))
    }
}

impl Prior {
    pub fn new(atoms: Vec<Q>, labels: Vec<String>) -> Result<Self> {
        if atoms.len() != labels.len() {
            return Err(Error::InvalidPrior(format!("{} atoms but {} labels", atoms.len(), labels.len())));
        }
        if let Some(i) = atoms.iter().position(Signed::is_negative) {
            return Err(Error::InvalidPrior(format!("negative mass at atom {i}")));
        }
        let total: Q = atoms.iter().cloned().fold(Q::zero(), |a, b| a + b);
        if !total.is_one() {
            return Err(Error::InvalidPrior(format!("atoms sum to {}", format_rational(&total))));
        }
        Ok(Prior { atoms, labels })
    }

    pub fn from_atoms(atoms: Vec<Q>) -> Result<Self> {
        let n = atoms.len();
        Self::new(atoms, default_labels("t", n))
    }

    pub fn uniform(labels: Vec<String>) -> Self {
        let n = labels.len() as i64;
        Prior { atoms: vec![crate::rational::q(1, n); labels.len()], labels }
    }

    pub fn dirac(labels: Vec<String>, at: usize) -> Self {
        let atoms = (0..labels.len()).map(|i| if i == at { Q::one() } else { Q::zero() }).collect();
        Prior { atoms, labels }
    }

    pub fn atoms(&self) -> &[Q] {
        &self.atoms
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.atoms.len()
    }

    pub fn mass(&self, indices: impl IntoIterator<Item = usize>) -> Q {
        indices.into_iter().fold(Q::zero(), |acc, i| acc + &self.atoms[i])
    }

    pub fn relabel(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.atoms.len() {
            return Err(Error::dim("relabel length"));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Product measure, first factor most significant (matches [`kronecker_joint`]).
    pub fn product(factors: &[Prior]) -> Result<Prior> {
        let (first, rest) = factors.split_first().ok_or_else(|| Error::dim("empty product"))?;
        let mut atoms = first.atoms.clone();
        let mut labels = first.labels.clone();
        for f in rest {
            atoms = atoms.iter().flat_map(|a| f.atoms.iter().map(move |b| a * b)).collect();
            labels = labels.iter().flat_map(|a| f.labels.iter().map(move |b| format!("{a},{b}"))).collect();
        }
        Ok(Prior { atoms, labels })
    }
}

/// Basis of the null space of a kernel matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelBasis {
    pub basis_vectors: Vec<Vec<Q>>,
    pub ambient: usize,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.basis_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis_vectors.is_empty()
    }
}

/// `g·μ`: the distribution of outputs when inputs are drawn from `mu`.
pub fn average(g: &StochasticKernel, mu: &Prior) -> Result<Prior> {
    if g.cols() != mu.dim() {
        return Err(Error::dim(format!("kernel has {} inputs, prior has {} atoms", g.cols(), mu.dim())));
    }
    let atoms = g.matrix.mul_vec(&mu.atoms)?;
    Ok(Prior { atoms, labels: g.row_labels.clone() })
}

/// `g ∘ h`: first apply `h`, then `g`.
pub fn compound(g: &StochasticKernel, h: &StochasticKernel) -> Result<StochasticKernel> {
    if g.cols() != h.rows() {
        return Err(Error::dim(format!("compound of {}-input kernel after {}-output kernel", g.cols(), h.rows())));
    }
    Ok(StochasticKernel {
        matrix: g.matrix.mul(&h.matrix)?,
        row_labels: g.row_labels.clone(),
        col_labels: h.col_labels.clone(),
    })
}

/// Independent joint of several kernels (Kronecker product, first factor
/// most significant in both row and column order).
pub fn kronecker_joint(kernels: &[StochasticKernel]) -> Result<StochasticKernel> {
    let (first, rest) = kernels.split_first().ok_or_else(|| Error::dim("kronecker_joint of empty list"))?;
    let mut acc = first.clone();
    for k in rest {
        acc = StochasticKernel {
            matrix: acc.matrix.kronecker(&k.matrix),
            row_labels: product_labels(&acc.row_labels, &k.row_labels),
            col_labels: product_labels(&acc.col_labels, &k.col_labels),
        };
    }
    Ok(acc)
}

pub(crate) fn product_labels(a: &[String], b: &[String]) -> Vec<String> {
    a.iter().flat_map(|x| b.iter().map(move |y| format!("{x},{y}"))).collect()
}

pub fn null_space(k: &StochasticKernel) -> KernelBasis {
    KernelBasis { basis_vectors: k.matrix.null_space(), ambient: k.cols() }
}

fn same_domain(g: &StochasticKernel, h: &StochasticKernel) -> Result<()> {
    if g.cols() != h.cols() {
        return Err(Error::dim(format!("kernels have {} and {} inputs", g.cols(), h.cols())));
    }
    Ok(())
}

/// `g ⪰ h` in the kernel order: `ker g ⊆ ker h`, i.e. every row of `h` is in
/// the row space of `g`.
pub fn kernel_more_informative(g: &StochasticKernel, h: &StochasticKernel) -> Result<bool> {
    same_domain(g, h)?;
    Ok(rows_span_contains(&g.matrix, &h.matrix))
}

/// Two priors that `g` cannot tell apart but `h` can, whenever `g ⪰ h`
/// fails. The first is uniform; the second moves from it along a null
/// vector of `g` (signed so its first nonzero entry is positive) until an
/// atom hits zero.
pub fn kernel_order_witness(g: &StochasticKernel, h: &StochasticKernel) -> Result<Option<(Prior, Prior)>> {
    same_domain(g, h)?;
    let Some(mut v) = g.matrix.null_space().into_iter().find(|v| h.matrix.mul_vec(v).map(|w| w.iter().any(|x| !x.is_zero())).unwrap_or(false)) else {
        return Ok(None);
    };
    if v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        v.iter_mut().for_each(|x| *x = -x.clone());
    }
    let n = g.cols();
    let base = Q::new(1.into(), (n as i64).into());
    let step = v.iter().filter(|x| x.is_negative()).map(|x| &base / -x).min().expect("null vectors of a stochastic kernel sum to zero");
    let moved = v.iter().map(|x| &base + &step * x).collect();
    let labels = g.col_labels.clone();
    Ok(Some((Prior::new(vec![base; n], labels.clone())?, Prior::new(moved, labels)?)))
}

pub fn kernel_equivalent(g: &StochasticKernel, h: &StochasticKernel) -> Result<bool> {
    Ok(kernel_more_informative(g, h)? && kernel_more_informative(h, g)?)
}

/// A stochastic garbling `S` with `h = S·g`, if one exists.
pub fn blackwell_more_informative(g: &StochasticKernel, h: &StochasticKernel) -> Result<Option<StochasticKernel>> {
    same_domain(g, h)?;
    let (gy, hz, x) = (g.rows(), h.rows(), g.cols());
    // Variables s[z][y], flattened row-major.
    let var = |z: usize, y: usize| z * gy + y;
    let mut lp = LinearProgram::new(hz * gy);
    for y in 0..gy {
        let mut row = vec![Q::zero(); hz * gy];
        for z in 0..hz {
            row[var(z, y)] = Q::one();
        }
        lp.add(row, Relation::Eq, Q::one())?;
    }
    for z in 0..hz {
        for c in 0..x {
            let mut row = vec![Q::zero(); hz * gy];
            for y in 0..gy {
                row[var(z, y)] = g.entry(y, c).clone();
            }
            lp.add(row, Relation::Eq, h.entry(z, c).clone())?;
        }
    }
    let Some(point) = lp.find_feasible()? else {
        return Ok(None);
    };
    let matrix = Matrix::from_fn(hz, gy, |z, y| point[var(z, y)].clone());
    Ok(Some(StochasticKernel::new(matrix, h.row_labels.clone(), g.row_labels.clone())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn labels(n: usize) -> Vec<String> {
        default_labels("t", n)
    }

    #[test]
    fn rejects_bad_kernels() {
        let bad = Matrix::from_rows(vec![vec![q(1, 2), qi(1)], vec![q(1, 3), qi(0)]]).unwrap();
        match StochasticKernel::from_matrix(bad.clone()) {
            Err(Error::ColumnSum { column: 0, sum }) => assert_eq!(sum, "5/6"),
            other => panic!("{other:?}"),
        }
        let repaired = StochasticKernel::normalized(bad, labels(2), labels(2)).unwrap();
        assert_eq!(repaired.entry(0, 0), &q(3, 5));
        let neg = Matrix::from_rows(vec![vec![qi(2)], vec![qi(-1)]]).unwrap();
        assert!(matches!(StochasticKernel::from_matrix(neg), Err(Error::NotStochastic(_))));
    }

    #[test]
    fn average_identity_and_pooling() {
        let mu = Prior::from_atoms(vec![q(1, 2), q(1, 3), q(1, 6)]).unwrap();
        let id = StochasticKernel::identity(labels(3));
        assert_eq!(average(&id, &mu).unwrap().atoms(), mu.atoms());
        let pool = StochasticKernel::pooling(labels(3), 1, labels(3));
        assert_eq!(average(&pool, &mu).unwrap().atoms(), &[qi(0), qi(1), qi(0)]);
        assert!(average(&id, &Prior::from_atoms(vec![qi(1)]).unwrap()).is_err());
    }

    #[test]
    fn compound_of_two_by_two_kernels() {
        // Hand multiplication: [[1/2,1/4],[1/2,3/4]] · [[1/3,1],[2/3,0]]
        let g = StochasticKernel::from_rows(vec![vec![q(1, 2), q(1, 4)], vec![q(1, 2), q(3, 4)]]).unwrap();
        let h = StochasticKernel::from_rows(vec![vec![q(1, 3), qi(1)], vec![q(2, 3), qi(0)]]).unwrap();
        let gh = compound(&g, &h).unwrap();
        assert_eq!(gh.matrix().to_rows(), vec![vec![q(1, 3), q(1, 2)], vec![q(2, 3), q(1, 2)]]);
        let id = StochasticKernel::identity(labels(2));
        assert_eq!(compound(&id, &h).unwrap().matrix(), h.matrix());
        assert_eq!(compound(&g, &id).unwrap().matrix(), g.matrix());
    }

    #[test]
    fn kronecker_labels_and_identity() {
        let a = StochasticKernel::identity(vec!["a".into(), "b".into()]);
        let b = StochasticKernel::identity(vec!["x".into(), "y".into()]);
        let ab = kronecker_joint(&[a.clone(), b]).unwrap();
        assert_eq!(ab.matrix(), &Matrix::identity(4));
        assert_eq!(ab.col_labels()[1], "a,y");
        assert_eq!(kronecker_joint(std::slice::from_ref(&a)).unwrap(), a);
        assert!(kronecker_joint(&[]).is_err());
    }

    #[test]
    fn pooling_null_space_has_dimension_two() {
        let pool = StochasticKernel::pooling(labels(3), 0, labels(3));
        let ns = null_space(&pool);
        assert_eq!(ns.dim(), 2);
        // First free column elimination: (-1, 1, 0) and (-1, 0, 1).
        assert_eq!(ns.basis_vectors[0], vec![qi(-1), qi(1), qi(0)]);
        assert_eq!(ns.basis_vectors[1], vec![qi(-1), qi(0), qi(1)]);
        assert!(null_space(&StochasticKernel::identity(labels(4))).is_empty());
    }

    #[test]
    fn blackwell_identity_returns_h() {
        let h = StochasticKernel::from_rows(vec![vec![q(1, 2), q(1, 5)], vec![q(1, 2), q(4, 5)]]).unwrap();
        let w = blackwell_more_informative(&StochasticKernel::identity(labels(2)), &h).unwrap().unwrap();
        assert_eq!(w.matrix(), h.matrix());
    }
}
