//! Exact two-phase simplex over [`Q`].
//!
//! All variables are nonnegative. Pivoting follows Bland's rule (lowest index
//! entering column, lowest basic index among ratio ties), which rules out
//! cycling and keeps the returned vertex deterministic.

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Q;

/// Default bound on structural variables.
pub const DEFAULT_SOLVER_CAP: usize = 10_000;

/// Environment variable that overrides [`DEFAULT_SOLVER_CAP`].
pub const SOLVER_CAP_ENV: &str = "MECHKERNEL_SOLVER_CAP";

pub fn solver_cap() -> usize {
    std::env::var(SOLVER_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_SOLVER_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Q>,
    pub relation: Relation,
    pub rhs: Q,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { point: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn point(&self) -> Option<&[Q]> {
        match self {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }
}

/// `minimize c.x  s.t.  constraints, x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    constraints: Vec<Constraint>,
    objective: Vec<Q>,
    cap: usize,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            constraints: Vec::new(),
            objective: vec![Q::zero(); num_vars],
            cap: solver_cap(),
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn add(&mut self, coeffs: Vec<Q>, relation: Relation, rhs: Q) -> Result<()> {
        if coeffs.len() != self.num_vars {
            return Err(Error::dim(format!(
                "constraint has {} coefficients for {} variables",
                coeffs.len(),
                self.num_vars
            )));
        }
        self.constraints.push(Constraint { coeffs, relation, rhs });
        Ok(())
    }

    pub fn minimize(&mut self, objective: Vec<Q>) -> Result<()> {
        if objective.len() != self.num_vars {
            return Err(Error::dim("objective length differs from variable count"));
        }
        self.objective = objective;
        Ok(())
    }

    pub fn maximize(&mut self, objective: Vec<Q>) -> Result<()> {
        self.minimize(objective.into_iter().map(|c| -c).collect())
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        if self.num_vars > self.cap {
            return Err(Error::SolverCap { variables: self.num_vars, cap: self.cap });
        }
        Ok(Simplex::build(self).run())
    }

    /// Feasibility only: a witness point or `None`.
    pub fn find_feasible(&self) -> Result<Option<Vec<Q>>> {
        let mut plain = self.clone();
        plain.objective = vec![Q::zero(); self.num_vars];
        Ok(match plain.solve()? {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        })
    }
}

struct Simplex {
    table: Vec<Vec<Q>>,
    basis: Vec<usize>,
    structural: usize,
    /// First artificial column; columns `>= artificial_start` are artificial.
    artificial_start: usize,
    width: usize,
    objective: Vec<Q>,
}

impl Simplex {
    fn build(lp: &LinearProgram) -> Simplex {
        let n = lp.num_vars;
        // Normalise to nonnegative right-hand sides.
        let rows: Vec<(Vec<Q>, Relation, Q)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs.is_negative() {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|x| -x).collect(), flipped, -c.rhs.clone())
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs.clone())
                }
            })
            .collect();
        let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let artificial_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial_start = n + slack_count;
        let width = artificial_start + artificial_count;

        let mut table = Vec::with_capacity(rows.len());
        let mut basis = Vec::with_capacity(rows.len());
        let (mut next_slack, mut next_art) = (n, artificial_start);
        for (coeffs, rel, rhs) in rows {
            let mut row = vec![Q::zero(); width + 1];
            row[..n].clone_from_slice(&coeffs);
            row[width] = rhs;
            match rel {
                Relation::Le => {
                    row[next_slack] = Q::one();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -Q::one();
                    next_slack += 1;
                    row[next_art] = Q::one();
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = Q::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            table.push(row);
        }
        Simplex { table, basis, structural: n, artificial_start, width, objective: lp.objective.clone() }
    }

    fn run(mut self) -> LpOutcome {
        // Phase 1: minimise the sum of artificials.
        if self.artificial_start < self.width {
            let mut cost = vec![Q::zero(); self.width + 1];
            for (i, &b) in self.basis.iter().enumerate() {
                if b >= self.artificial_start {
                    for (j, c) in cost.iter_mut().enumerate() {
                        if j < self.artificial_start || j == self.width {
                            *c -= &self.table[i][j];
                        }
                    }
                }
            }
            let limit = self.width;
            if !self.iterate(&mut cost, limit) {
                // Phase 1 is bounded below by zero; unreachable in exact arithmetic.
                return LpOutcome::Infeasible;
            }
            if !cost[self.width].is_zero() {
                return LpOutcome::Infeasible;
            }
            self.expel_artificials();
        }

        // Phase 2 over structural and slack columns only.
        let limit = self.artificial_start;
        let mut cost = vec![Q::zero(); self.width + 1];
        cost[..self.structural].clone_from_slice(&self.objective);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = if b < self.structural { self.objective[b].clone() } else { Q::zero() };
            if cb.is_zero() {
                continue;
            }
            for (c, t) in cost.iter_mut().zip(&self.table[i]) {
                *c -= &cb * t;
            }
        }
        if !self.iterate(&mut cost, limit) {
            return LpOutcome::Unbounded;
        }
        let mut point = vec![Q::zero(); self.structural];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.structural {
                point[b] = self.table[i][self.width].clone();
            }
        }
        LpOutcome::Optimal { point, value: -cost[self.width].clone() }
    }

    /// Runs simplex iterations with entering columns restricted to `< limit`.
    /// Returns false when unbounded.
    fn iterate(&mut self, cost: &mut [Q], limit: usize) -> bool {
        loop {
            let Some(enter) = (0..limit).find(|&j| cost[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.table.iter().enumerate() {
                if row[enter].is_positive() {
                    let ratio = &row[self.width] / &row[enter];
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return false;
            };
            self.pivot(row, enter, cost);
        }
    }

    fn pivot(&mut self, r: usize, c: usize, cost: &mut [Q]) {
        let inv = self.table[r][c].recip();
        for x in self.table[r].iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        let pivot_row = self.table[r].clone();
        for (i, row) in self.table.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
        if !cost[c].is_zero() {
            let factor = cost[c].clone();
            for (x, p) in cost.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// After a zero-cost phase 1, pivots remaining (zero-valued) artificials
    /// out of the basis and drops rows that turn out to be redundant.
    fn expel_artificials(&mut self) {
        let mut i = 0;
        while i < self.table.len() {
            if self.basis[i] >= self.artificial_start {
                match (0..self.artificial_start).find(|&j| !self.table[i][j].is_zero()) {
                    Some(j) => {
                        let mut dummy = vec![Q::zero(); self.width + 1];
                        self.pivot(i, j, &mut dummy);
                    }
                    None => {
                        self.table.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn v(xs: &[i64]) -> Vec<Q> {
        xs.iter().map(|&x| qi(x)).collect()
    }

    #[test]
    fn textbook_maximisation() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.add(v(&[1, 0]), Relation::Le, qi(4)).unwrap();
        lp.add(v(&[0, 2]), Relation::Le, qi(12)).unwrap();
        lp.add(v(&[3, 2]), Relation::Le, qi(18)).unwrap();
        lp.maximize(v(&[3, 5])).unwrap();
        match lp.solve().unwrap() {
            LpOutcome::Optimal { point, value } => {
                assert_eq!(point, v(&[2, 6]));
                assert_eq!(value, qi(-36));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(2);
        lp.add(v(&[1, 1]), Relation::Eq, qi(1)).unwrap();
        lp.add(v(&[1, 1]), Relation::Ge, qi(2)).unwrap();
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new(2);
        lp.add(v(&[1, -1]), Relation::Le, qi(1)).unwrap();
        lp.minimize(v(&[0, -1])).unwrap();
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn handles_redundant_equalities_and_negative_rhs() {
        let mut lp = LinearProgram::new(3);
        lp.add(v(&[1, 1, 1]), Relation::Eq, qi(1)).unwrap();
        lp.add(v(&[2, 2, 2]), Relation::Eq, qi(2)).unwrap();
        lp.add(v(&[-1, 0, 0]), Relation::Le, q(-1, 3)).unwrap();
        lp.minimize(v(&[1, 0, 0])).unwrap();
        match lp.solve().unwrap() {
            LpOutcome::Optimal { point, value } => {
                assert_eq!(value, q(1, 3));
                assert_eq!(point.iter().cloned().fold(Q::zero(), |a, b| a + b), qi(1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cap_is_enforced() {
        let lp = LinearProgram::new(5).with_cap(4);
        assert!(matches!(lp.solve(), Err(Error::SolverCap { variables: 5, cap: 4 })));
    }
}
