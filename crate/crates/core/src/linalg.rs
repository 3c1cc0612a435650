//! Dense exact matrices and Gaussian elimination over [`Q`].
//!
//! Pivoting always takes the first nonzero entry in the current column, so
//! every result (bases, selected rows, solutions) is a deterministic function
//! of the input order.

use std::fmt;

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, Q};

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(format_rational).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::dim("ragged rows"));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Builds an `rows x cols` matrix from a row-major iterator. Panics on a
    /// length mismatch; internal use only.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Q) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Q] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Q> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Q>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Q]) -> Result<Vec<Q>> {
        if self.cols != v.len() {
            return Err(Error::dim(format!(
                "cannot apply {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(Q::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect())
    }

    pub fn kronecker(&self, other: &Matrix) -> Matrix {
        let (r2, c2) = (other.rows, other.cols);
        Matrix::from_fn(self.rows * r2, self.cols * c2, |r, c| {
            &self[(r / r2, c / c2)] * &other[(r % r2, c % c2)]
        })
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::dim("vstack with different column counts"));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix { rows: self.rows + other.rows, cols: self.cols, data })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), self.cols, |r, c| self[(rows[r], c)].clone())
    }

    pub fn select_cols(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, cols.len(), |r, c| self[(r, cols[c])].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn rank(&self) -> usize {
        self.echelon().pivots.len()
    }

    /// Reduced row echelon form.
    pub fn echelon(&self) -> Echelon {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut lead = 0;
        for c in 0..m.cols {
            if lead == m.rows {
                break;
            }
            let Some(p) = (lead..m.rows).find(|&r| !m[(r, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(lead, p);
            let inv = m[(lead, c)].recip();
            for j in c..m.cols {
                let v = &m[(lead, j)] * &inv;
                m[(lead, j)] = v;
            }
            for r in 0..m.rows {
                if r != lead && !m[(r, c)].is_zero() {
                    let factor = m[(r, c)].clone();
                    for j in c..m.cols {
                        let delta = &factor * &m[(lead, j)];
                        if !delta.is_zero() {
                            m[(r, j)] -= delta;
                        }
                    }
                }
            }
            pivots.push(c);
            lead += 1;
        }
        Echelon { reduced: m, pivots }
    }

    /// Basis of `{x : Mx = 0}`, one vector per free column, in column order.
    pub fn null_space(&self) -> Vec<Vec<Q>> {
        let ech = self.echelon();
        let free: Vec<usize> = (0..self.cols).filter(|c| !ech.pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Q::zero(); self.cols];
                v[f] = Q::one();
                for (row, &pc) in ech.pivots.iter().enumerate() {
                    v[pc] = -ech.reduced[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    /// Rows of `self` chosen greedily in order, keeping each row that is
    /// independent of the rows kept before it.
    pub fn independent_rows(&self) -> Vec<usize> {
        let mut kept: Vec<usize> = Vec::new();
        let mut rank = 0;
        for r in 0..self.rows {
            let mut candidate = kept.clone();
            candidate.push(r);
            let new_rank = self.select_rows(&candidate).rank();
            if new_rank > rank {
                kept.push(r);
                rank = new_rank;
            }
        }
        kept
    }

    /// Solves a square nonsingular system; `None` when singular.
    pub fn solve(&self, rhs: &[Q]) -> Option<Vec<Q>> {
        if self.rows != self.cols || rhs.len() != self.rows {
            return None;
        }
        let n = self.rows;
        let aug = Matrix::from_fn(n, n + 1, |r, c| if c < n { self[(r, c)].clone() } else { rhs[r].clone() });
        let ech = aug.echelon();
        if ech.pivots.len() != n || ech.pivots.iter().any(|&p| p >= n) {
            return None;
        }
        Some((0..n).map(|r| ech.reduced[(r, n)].clone()).collect())
    }

    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let aug = Matrix::from_fn(n, 2 * n, |r, c| {
            if c < n {
                self[(r, c)].clone()
            } else if c - n == r {
                Q::one()
            } else {
                Q::zero()
            }
        });
        let ech = aug.echelon();
        if ech.pivots.len() < n || ech.pivots[n - 1] >= n {
            return None;
        }
        Some(Matrix::from_fn(n, n, |r, c| ech.reduced[(r, n + c)].clone()))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Q;
    fn index(&self, (r, c): (usize, usize)) -> &Q {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Q {
        &mut self.data[r * self.cols + c]
    }
}

pub struct Echelon {
    pub reduced: Matrix,
    pub pivots: Vec<usize>,
}

/// True iff every vector of `vectors` lies in the span of the rows of `basis_rows`.
pub fn rows_span_contains(basis_rows: &Matrix, vectors: &Matrix) -> bool {
    let r = basis_rows.rank();
    match basis_rows.vstack(vectors) {
        Ok(stacked) => stacked.rank() == r,
        Err(_) => false,
    }
}
