//! Designer payoffs and (robust) self-confirmation checks.
//!
//! A direct mechanism `δ` is self-confirming relative to a competitor family
//! when some belief in its feasible-prior polytope makes it weakly better for
//! the designer than every competitor. Each check is one exact LP: the
//! polytope's equalities plus one linear inequality per competitor.

use itertools::Itertools;
use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::{feasible_set_factored, marginal, restrict_grain, GrainSet, PriorPolytope};
use crate::kernel::{Prior, StochasticKernel};
use crate::linalg::Matrix;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::rational::{format_rational, q, Q};
use crate::revelation::{is_dominant_strategy_eq, is_ex_post_eq, AugmentedMechanism, GameInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    UserSupplied,
    DomainGenerated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IcNotion {
    DominantStrategy,
    ExPost,
}

/// Finite stand-in for "every incentive compatible direct mechanism".
#[derive(Debug, Clone)]
pub struct CompetitorFamily {
    members: Vec<StochasticKernel>,
    provenance: Provenance,
    checked: Option<IcNotion>,
}

impl CompetitorFamily {
    /// Family taken as given; verdicts are relative to it.
    pub fn unchecked(members: Vec<StochasticKernel>, provenance: Provenance) -> Self {
        CompetitorFamily { members, provenance, checked: None }
    }

    /// Family whose members are verified incentive compatible under truth-telling.
    pub fn checked(game: &std::sync::Arc<GameInstance>, members: Vec<StochasticKernel>, notion: IcNotion, provenance: Provenance) -> Result<Self> {
        for (k, delta) in members.iter().enumerate() {
            let am = AugmentedMechanism::truthful_direct(game.clone(), delta.clone())?;
            let check = match notion {
                IcNotion::DominantStrategy => is_dominant_strategy_eq(&am),
                IcNotion::ExPost => is_ex_post_eq(&am),
            };
            if !check.holds {
                return Err(Error::Instance(format!(
                    "competitor {k} is not incentive compatible ({} violations)",
                    check.violations.len()
                )));
            }
        }
        Ok(CompetitorFamily { members, provenance, checked: Some(notion) })
    }

    pub fn members(&self) -> &[StochasticKernel] {
        &self.members
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn ic_checked(&self) -> Option<IcNotion> {
        self.checked
    }
}

/// `θ ↦ Σ_o δ(o|θ) u⁰(o,θ)`.
pub fn pointwise_value(delta: &StochasticKernel, u0: &Matrix) -> Result<Vec<Q>> {
    if u0.rows() != delta.rows() || u0.cols() != delta.cols() {
        return Err(Error::dim(format!(
            "utility table is {}x{}, allocation is {}x{}",
            u0.rows(),
            u0.cols(),
            delta.rows(),
            delta.cols()
        )));
    }
    Ok((0..delta.cols())
        .map(|t| (0..delta.rows()).fold(Q::zero(), |acc, o| acc + delta.entry(o, t) * &u0[(o, t)]))
        .collect())
}

/// Expected designer utility of `delta` under belief `pi`.
pub fn designer_value(delta: &StochasticKernel, pi: &Prior, u0: &Matrix) -> Result<Q> {
    let v = pointwise_value(delta, u0)?;
    if pi.dim() != v.len() {
        return Err(Error::dim("belief dimension differs from allocation domain"));
    }
    Ok(v.iter().zip(pi.atoms()).fold(Q::zero(), |acc, (a, b)| acc + a * b))
}

/// A belief in `polytope` under which `delta` is weakly best in `family`.
pub fn is_self_confirming(delta: &StochasticKernel, polytope: &PriorPolytope, family: &CompetitorFamily, u0: &Matrix) -> Result<Option<Prior>> {
    let own = pointwise_value(delta, u0)?;
    if own.len() != polytope.ambient() {
        return Err(Error::dim("polytope ambient differs from allocation domain"));
    }
    let mut lp = LinearProgram::new(polytope.ambient());
    polytope.add_to_lp(&mut lp)?;
    for rival in family.members() {
        let theirs = pointwise_value(rival, u0)?;
        let diff = own.iter().zip(&theirs).map(|(a, b)| a - b).collect();
        lp.add(diff, Relation::Ge, Q::zero())?;
    }
    match lp.find_feasible()? {
        Some(point) => Ok(Some(Prior::new(point, polytope.labels().to_vec())?)),
        None => Ok(None),
    }
}

/// Worst-case designer value of `delta` over the polytope.
pub fn maxmin_value(delta: &StochasticKernel, polytope: &PriorPolytope, u0: &Matrix) -> Result<Q> {
    let own = pointwise_value(delta, u0)?;
    let mut lp = LinearProgram::new(polytope.ambient());
    polytope.add_to_lp(&mut lp)?;
    lp.minimize(own)?;
    match lp.solve()? {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Infeasible => Err(Error::Precondition("polytope is empty".into())),
        LpOutcome::Unbounded => unreachable!("objective is bounded on the simplex"),
    }
}

/// Limits on grain-set enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrainBudget {
    /// Stop after this many grain sets per level.
    pub max_sets: usize,
    /// Only sets with at most this many atoms per agent are generated.
    pub max_size: Option<usize>,
}

impl Default for GrainBudget {
    fn default() -> Self {
        GrainBudget { max_sets: 100_000, max_size: None }
    }
}

/// Powers of one half, starting at 1/2, while at least the smallest positive atom of `pi0`.
pub fn auto_schedule(pi0: &Prior) -> Vec<Q> {
    let smallest = pi0.atoms().iter().filter(|x| !x.is_zero()).min().cloned().unwrap_or_else(Q::one);
    let mut eps = q(1, 2);
    let mut out = vec![eps.clone()];
    loop {
        eps /= Q::from_integer(2.into());
        if eps < smallest {
            break;
        }
        out.push(eps.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelStatus {
    Pass,
    Fail { grain: GrainSet },
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct LevelResult {
    pub epsilon: Q,
    pub status: LevelStatus,
    pub sets_checked: usize,
    pub incomplete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RobustVerdict {
    Robust,
    NotRobust,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct RobustReport {
    pub verdict: RobustVerdict,
    /// Largest passing ε in the schedule.
    pub level: Option<Q>,
    /// Justifying belief with no grain restriction.
    pub witness_belief: Option<Prior>,
    /// Failing grain set at the smallest failing ε, when not robust.
    pub failing: Option<GrainSet>,
    pub incomplete: bool,
    pub levels: Vec<LevelResult>,
}

/// Grain sets with `π₀ⁱ(Aⁱ) < ε` for every agent, ordered by total size then
/// lexicographically. The flag reports whether sets beyond `max_size` exist.
pub fn enumerate_grain_sets(pi0: &Prior, factors: &[usize], epsilon: &Q, max_size: Option<usize>) -> (Vec<GrainSet>, bool) {
    let mut skipped = false;
    let per_agent: Vec<Vec<Vec<usize>>> = (0..factors.len())
        .map(|i| {
            let m = marginal(pi0, factors, i);
            let limit = max_size.unwrap_or(m.len()).min(m.len());
            let mut sets = Vec::new();
            for size in 0..=limit {
                for s in (0..m.len()).combinations(size) {
                    if s.iter().fold(Q::zero(), |acc, &a| acc + &m[a]) < *epsilon {
                        sets.push(s);
                    }
                }
            }
            if limit < m.len() {
                let mut sorted = m.clone();
                sorted.sort();
                let cheapest = sorted[..=limit].iter().fold(Q::zero(), |acc, x| acc + x);
                if cheapest < *epsilon {
                    skipped = true;
                }
            }
            sets
        })
        .collect();
    let mut all: Vec<Vec<Vec<usize>>> = per_agent.into_iter().multi_cartesian_product().collect();
    all.sort_by(|a, b| {
        let size = |x: &Vec<Vec<usize>>| x.iter().map(Vec::len).sum::<usize>();
        size(a).cmp(&size(b)).then_with(|| a.concat().cmp(&b.concat())).then_with(|| a.cmp(b))
    });
    (all.into_iter().map(|sets| GrainSet::new(sets, epsilon.clone())).collect(), skipped)
}

/// Inputs for [`is_robustly_self_confirming`].
#[derive(Debug, Clone)]
pub struct RobustQuery<'a> {
    pub delta: &'a StochasticKernel,
    pub base_kernel: &'a StochasticKernel,
    pub pi0: &'a Prior,
    pub family: &'a CompetitorFamily,
    pub u0: &'a Matrix,
    /// Agent type-space sizes when `Θ` is a product; `None` for one agent.
    pub factors: Option<Vec<usize>>,
}

/// Robust self-confirmation, level by level over a descending ε schedule.
pub fn is_robustly_self_confirming(query: &RobustQuery<'_>, epsilon_schedule: &[Q], budget: GrainBudget) -> Result<RobustReport> {
    let factors = query.factors.clone().unwrap_or_else(|| vec![query.pi0.dim()]);
    let base = feasible_set_factored(query.base_kernel, query.pi0, &factors)?;
    let witness_belief = is_self_confirming(query.delta, &base, query.family, query.u0)?;
    let schedule: Vec<Q> = epsilon_schedule.iter().cloned().sorted().rev().dedup().collect();

    let mut levels = Vec::with_capacity(schedule.len());
    for eps in schedule {
        let (sets, skipped) = enumerate_grain_sets(query.pi0, &factors, &eps, budget.max_size);
        let mut status = LevelStatus::Pass;
        let mut checked = 0;
        let mut incomplete = skipped;
        for grain in sets {
            if checked == budget.max_sets {
                incomplete = true;
                break;
            }
            checked += 1;
            let restricted = restrict_grain(&base, &grain, query.pi0)?;
            if is_self_confirming(query.delta, &restricted, query.family, query.u0)?.is_none() {
                status = LevelStatus::Fail { grain };
                break;
            }
        }
        if status == LevelStatus::Pass && incomplete {
            status = LevelStatus::Inconclusive;
        }
        levels.push(LevelResult { epsilon: eps, status, sets_checked: checked, incomplete });
    }

    let level = levels.iter().find(|l| l.status == LevelStatus::Pass).map(|l| l.epsilon.clone());
    let all_fail = !levels.is_empty() && levels.iter().all(|l| matches!(l.status, LevelStatus::Fail { .. }));
    let failing = if level.is_none() {
        levels.iter().rev().find_map(|l| match &l.status {
            LevelStatus::Fail { grain } => Some(grain.clone()),
            _ => None,
        })
    } else {
        None
    };
    let verdict = if level.is_some() {
        RobustVerdict::Robust
    } else if all_fail {
        RobustVerdict::NotRobust
    } else {
        RobustVerdict::Inconclusive
    };
    let incomplete = levels.iter().any(|l| l.incomplete);
    Ok(RobustReport { verdict, level, witness_belief, failing, incomplete, levels })
}

impl RobustReport {
    pub fn describe_level(&self) -> String {
        self.level.as_ref().map(format_rational).unwrap_or_else(|| "none".into())
    }
}
