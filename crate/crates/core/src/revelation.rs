//! Mechanisms, induced games, incentive checks and fictitious direct
//! representations.
//!
//! Joint spaces (type profiles, message profiles) are ordered
//! lexicographically with agent 0 most significant, which is the order the
//! Kronecker product produces.

use std::sync::Arc;

use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::{
    blackwell_more_informative, compound, kernel_equivalent, kronecker_joint, product_labels, StochasticKernel,
};
use crate::linalg::Matrix;
use crate::rational::{q, Q};

/// Violation lists are truncated at this length.
pub const VIOLATION_CAP: usize = 100;

/// Finite game form: type, message and outcome spaces plus utility tables.
///
/// Utility tables are `|O| x |Θ|` matrices whose columns run over joint type
/// profiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameInstance {
    type_spaces: Vec<Vec<String>>,
    message_spaces: Vec<Vec<String>>,
    outcomes: Vec<String>,
    agent_utilities: Vec<Matrix>,
    designer_utility: Matrix,
}

impl GameInstance {
    pub fn new(
        type_spaces: Vec<Vec<String>>,
        message_spaces: Vec<Vec<String>>,
        outcomes: Vec<String>,
        agent_utilities: Vec<Matrix>,
        designer_utility: Matrix,
    ) -> Result<Self> {
        let n = type_spaces.len();
        if n == 0 {
            return Err(Error::Instance("a game needs at least one agent".into()));
        }
        if message_spaces.len() != n || agent_utilities.len() != n {
            return Err(Error::Instance(format!(
                "{n} type spaces, {} message spaces, {} utility tables",
                message_spaces.len(),
                agent_utilities.len()
            )));
        }
        if type_spaces.iter().chain(&message_spaces).any(Vec::is_empty) || outcomes.is_empty() {
            return Err(Error::Instance("empty type, message or outcome space".into()));
        }
        let profiles: usize = type_spaces.iter().map(Vec::len).product();
        for (i, u) in agent_utilities.iter().chain(std::iter::once(&designer_utility)).enumerate() {
            if u.rows() != outcomes.len() || u.cols() != profiles {
                return Err(Error::Instance(format!(
                    "utility table {i} is {}x{}, expected {}x{profiles}",
                    u.rows(),
                    u.cols(),
                    outcomes.len()
                )));
            }
        }
        Ok(GameInstance { type_spaces, message_spaces, outcomes, agent_utilities, designer_utility })
    }

    /// Same spaces with messages replaced by types (the direct game form).
    pub fn direct(&self) -> GameInstance {
        GameInstance { message_spaces: self.type_spaces.clone(), ..self.clone() }
    }

    pub fn agent_count(&self) -> usize {
        self.type_spaces.len()
    }

    pub fn type_space(&self, agent: usize) -> &[String] {
        &self.type_spaces[agent]
    }

    pub fn message_space(&self, agent: usize) -> &[String] {
        &self.message_spaces[agent]
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn agent_utility(&self, agent: usize) -> &Matrix {
        &self.agent_utilities[agent]
    }

    pub fn designer_utility(&self) -> &Matrix {
        &self.designer_utility
    }

    pub fn type_sizes(&self) -> Vec<usize> {
        self.type_spaces.iter().map(Vec::len).collect()
    }

    pub fn message_sizes(&self) -> Vec<usize> {
        self.message_spaces.iter().map(Vec::len).collect()
    }

    pub fn joint_type_labels(&self) -> Vec<String> {
        joint_labels(&self.type_spaces)
    }

    pub fn joint_message_labels(&self) -> Vec<String> {
        joint_labels(&self.message_spaces)
    }
}

fn joint_labels(spaces: &[Vec<String>]) -> Vec<String> {
    let mut acc = spaces[0].clone();
    for s in &spaces[1..] {
        acc = product_labels(&acc, s);
    }
    acc
}

/// Mixed-radix index of a profile, first coordinate most significant.
pub fn profile_index(profile: &[usize], sizes: &[usize]) -> usize {
    profile.iter().zip(sizes).fold(0, |acc, (&p, &s)| acc * s + p)
}

pub fn profile_of(mut index: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for (slot, &s) in out.iter_mut().zip(sizes).rev() {
        *slot = index % s;
        index /= s;
    }
    out
}

/// A mechanism together with the strategy profile played in it.
#[derive(Debug, Clone)]
pub struct AugmentedMechanism {
    game: Arc<GameInstance>,
    outcome_kernel: StochasticKernel,
    strategies: Vec<StochasticKernel>,
}

impl AugmentedMechanism {
    pub fn new(game: Arc<GameInstance>, outcome_kernel: StochasticKernel, strategies: Vec<StochasticKernel>) -> Result<Self> {
        let n = game.agent_count();
        if strategies.len() != n {
            return Err(Error::Instance(format!("{} strategies for {n} agents", strategies.len())));
        }
        for (i, s) in strategies.iter().enumerate() {
            if s.cols() != game.type_space(i).len() || s.rows() != game.message_space(i).len() {
                return Err(Error::Instance(format!(
                    "strategy of agent {i} is {}x{}, expected {}x{}",
                    s.rows(),
                    s.cols(),
                    game.message_space(i).len(),
                    game.type_space(i).len()
                )));
            }
        }
        let joint_messages: usize = game.message_sizes().iter().product();
        if outcome_kernel.cols() != joint_messages || outcome_kernel.rows() != game.outcomes().len() {
            return Err(Error::Instance(format!(
                "outcome kernel is {}x{}, expected {}x{joint_messages}",
                outcome_kernel.rows(),
                outcome_kernel.cols(),
                game.outcomes().len()
            )));
        }
        Ok(AugmentedMechanism { game, outcome_kernel, strategies })
    }

    /// Direct mechanism `delta` with every agent reporting truthfully.
    pub fn truthful_direct(game: Arc<GameInstance>, delta: StochasticKernel) -> Result<Self> {
        let direct = Arc::new(game.direct());
        let strategies = (0..direct.agent_count()).map(|i| StochasticKernel::identity(direct.type_space(i).to_vec())).collect();
        Self::new(direct, delta, strategies)
    }

    pub fn game(&self) -> &Arc<GameInstance> {
        &self.game
    }

    pub fn outcome_kernel(&self) -> &StochasticKernel {
        &self.outcome_kernel
    }

    pub fn strategies(&self) -> &[StochasticKernel] {
        &self.strategies
    }

    pub fn joint_strategy(&self) -> StochasticKernel {
        kronecker_joint(&self.strategies).expect("at least one agent")
    }

    pub fn is_deterministic(&self) -> bool {
        self.outcome_kernel.is_deterministic() && self.strategies.iter().all(StochasticKernel::is_deterministic)
    }
}

/// Which construction produced an agent's weak filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterCase {
    /// `|M| <= |Θ|`: messages embedded as the first `|M|` type labels.
    EmbedMessages,
    /// `|M| > |Θ| = rank`: the identity filter.
    FullyRevealing,
    /// `|M| > |Θ| > rank`: independent rows kept, the rest summed.
    RowReduction,
    /// Selector onto the first type of each strategy fiber.
    Deterministic,
    /// Found by candidate search.
    Searched,
}

/// A direct allocation rule plus one filter per agent.
#[derive(Debug, Clone)]
pub struct FictitiousDirect {
    pub game: Arc<GameInstance>,
    pub delta: StochasticKernel,
    pub filters: Vec<StochasticKernel>,
    pub cases: Vec<FilterCase>,
    /// Mapping `f` with `f ∼ φ` and `δ = ω∘f` when the filter is only weak.
    pub certificate: Option<Vec<StochasticKernel>>,
    /// Garbling `S` with `δ = S·(⊗φ)`, once established.
    pub blackwell_witness: Option<StochasticKernel>,
}

impl FictitiousDirect {
    pub fn joint_filter(&self) -> StochasticKernel {
        kronecker_joint(&self.filters).expect("at least one agent")
    }

    /// `Some(true)` once a garbling witness is attached; `None` if not checked.
    pub fn is_strong(&self) -> Option<bool> {
        self.blackwell_witness.as_ref().map(|_| true)
    }

    /// Searches for a garbling from the joint filter to `delta`; attaches it
    /// when found.
    pub fn certify_strong(&mut self) -> Result<bool> {
        self.blackwell_witness = blackwell_more_informative(&self.joint_filter(), &self.delta)?;
        Ok(self.blackwell_witness.is_some())
    }
}

/// `δ = ω ∘ (⊗σⁱ)`.
pub fn induced_allocation(am: &AugmentedMechanism) -> StochasticKernel {
    compound(&am.outcome_kernel, &am.joint_strategy()).expect("shapes validated at construction")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub agent: usize,
    /// Joint type profile, one index per agent.
    pub types: Vec<usize>,
    /// Pure opponent messages (dominant-strategy check only; the agent's own slot is unused).
    pub opponent_messages: Option<Vec<usize>>,
    pub deviation: usize,
    pub gain: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumCheck {
    pub holds: bool,
    pub violations: Vec<Violation>,
    pub truncated: bool,
}

impl EquilibriumCheck {
    fn from(violations: Vec<Violation>, truncated: bool) -> Self {
        EquilibriumCheck { holds: violations.is_empty(), violations, truncated }
    }
}

struct Payoffs<'a> {
    am: &'a AugmentedMechanism,
    msizes: Vec<usize>,
    tsizes: Vec<usize>,
}

impl<'a> Payoffs<'a> {
    fn new(am: &'a AugmentedMechanism) -> Self {
        Payoffs { am, msizes: am.game.message_sizes(), tsizes: am.game.type_sizes() }
    }

    /// Agent `i`'s utility at type profile `theta` when messages are `m`.
    fn pure(&self, i: usize, theta: usize, m: &[usize]) -> Q {
        let col = profile_index(m, &self.msizes);
        let u = self.am.game.agent_utility(i);
        (0..u.rows())
            .map(|o| self.am.outcome_kernel.entry(o, col) * &u[(o, theta)])
            .fold(Q::zero(), |a, b| a + b)
    }

    /// Expected utility of mixing with `own[mi]` against fixed opponents.
    fn mixed_own(&self, i: usize, theta: usize, own: &dyn Fn(usize) -> Q, opp: &[usize]) -> Q {
        let mut m = opp.to_vec();
        (0..self.msizes[i]).fold(Q::zero(), |acc, mi| {
            let w = own(mi);
            if w.is_zero() {
                return acc;
            }
            m[i] = mi;
            acc + w * self.pure(i, theta, &m)
        })
    }
}

fn opponent_profiles(sizes: &[usize], agent: usize) -> Vec<Vec<usize>> {
    let mut reduced = sizes.to_vec();
    reduced[agent] = 1;
    let total: usize = reduced.iter().product();
    (0..total).map(|k| profile_of(k, &reduced)).collect()
}

/// Does the strategy profile form a dominant-strategy equilibrium?
///
/// Mixed opponent play reduces to pure opponent profiles by linearity, so
/// every agent, type profile, pure opponent profile and pure deviation is
/// checked.
pub fn is_dominant_strategy_eq(am: &AugmentedMechanism) -> EquilibriumCheck {
    let pay = Payoffs::new(am);
    let total_types: usize = pay.tsizes.iter().product();
    let mut violations = Vec::new();
    let mut truncated = false;
    'outer: for i in 0..am.game.agent_count() {
        for theta in 0..total_types {
            let types = profile_of(theta, &pay.tsizes);
            let sigma = &am.strategies[i];
            let own = |mi: usize| sigma.entry(mi, types[i]).clone();
            for opp in opponent_profiles(&pay.msizes, i) {
                let eq_value = pay.mixed_own(i, theta, &own, &opp);
                let mut m = opp.clone();
                for dev in 0..pay.msizes[i] {
                    m[i] = dev;
                    let gain = pay.pure(i, theta, &m) - &eq_value;
                    if gain > Q::zero() {
                        if violations.len() == VIOLATION_CAP {
                            truncated = true;
                            break 'outer;
                        }
                        violations.push(Violation {
                            agent: i,
                            types: types.clone(),
                            opponent_messages: Some(opp.clone()),
                            deviation: dev,
                            gain,
                        });
                    }
                }
            }
        }
    }
    EquilibriumCheck::from(violations, truncated)
}

/// Does the strategy profile form an ex post equilibrium?
pub fn is_ex_post_eq(am: &AugmentedMechanism) -> EquilibriumCheck {
    let pay = Payoffs::new(am);
    let total_types: usize = pay.tsizes.iter().product();
    let n = am.game.agent_count();
    let mut violations = Vec::new();
    let mut truncated = false;
    'outer: for i in 0..n {
        for theta in 0..total_types {
            let types = profile_of(theta, &pay.tsizes);
            // Deviation value of each own message against σ⁻ⁱ(θ⁻ⁱ).
            let mut values = vec![Q::zero(); pay.msizes[i]];
            for opp in opponent_profiles(&pay.msizes, i) {
                let weight = (0..n)
                    .filter(|&j| j != i)
                    .fold(Q::one(), |acc, j| acc * am.strategies[j].entry(opp[j], types[j]));
                if weight.is_zero() {
                    continue;
                }
                let mut m = opp.clone();
                for (mi, value) in values.iter_mut().enumerate() {
                    m[i] = mi;
                    *value += &weight * pay.pure(i, theta, &m);
                }
            }
            let eq_value = values
                .iter()
                .enumerate()
                .fold(Q::zero(), |acc, (mi, v)| acc + am.strategies[i].entry(mi, types[i]) * v);
            for (dev, v) in values.iter().enumerate() {
                let gain = v - &eq_value;
                if gain > Q::zero() {
                    if violations.len() == VIOLATION_CAP {
                        truncated = true;
                        break 'outer;
                    }
                    violations.push(Violation { agent: i, types: types.clone(), opponent_messages: None, deviation: dev, gain });
                }
            }
        }
    }
    EquilibriumCheck::from(violations, truncated)
}

/// Deterministic representation: each type is filtered to the first type
/// (in declared order) that sends the same message.
pub fn represent_deterministic(am: &AugmentedMechanism) -> Result<FictitiousDirect> {
    if !am.outcome_kernel.is_deterministic() {
        return Err(Error::NotDeterministic("outcome kernel has fractional entries".into()));
    }
    let mut filters = Vec::with_capacity(am.strategies.len());
    for (i, sigma) in am.strategies.iter().enumerate() {
        let map = sigma
            .deterministic_map()
            .ok_or_else(|| Error::NotDeterministic(format!("strategy of agent {i} is mixed")))?;
        let selector: Vec<usize> = map.iter().map(|m| map.iter().position(|x| x == m).unwrap()).collect();
        let types = am.game.type_space(i).to_vec();
        filters.push(StochasticKernel::deterministic(&selector, types.clone(), types)?);
    }
    let delta = induced_allocation(am);
    let cases = vec![FilterCase::Deterministic; filters.len()];
    // δ∘φ = δ, so δ itself is the garbling from φ to δ.
    let witness = delta.clone().with_labels(delta.row_labels().to_vec(), am.game.joint_type_labels())?;
    Ok(FictitiousDirect {
        game: Arc::new(am.game.direct()),
        delta,
        filters,
        cases,
        certificate: None,
        blackwell_witness: Some(witness),
    })
}

/// Builds `Φ` on `Θ x Θ` with `ker Φ = ker Σ` for one agent.
pub fn weak_filter_for(sigma: &StochasticKernel, types: &[String]) -> Result<(StochasticKernel, FilterCase)> {
    let (m, t) = (sigma.rows(), sigma.cols());
    if t != types.len() {
        return Err(Error::dim("type labels do not match strategy columns"));
    }
    let mat = sigma.matrix();
    let (phi, case) = if m <= t {
        let phi = Matrix::from_fn(t, t, |r, c| if r < m { mat[(r, c)].clone() } else { Q::zero() });
        (phi, FilterCase::EmbedMessages)
    } else {
        let rank = mat.rank();
        if rank == t {
            (Matrix::identity(t), FilterCase::FullyRevealing)
        } else {
            let independent = mat.independent_rows();
            let mut order = independent.clone();
            order.extend((0..m).filter(|r| !independent.contains(r)));
            let phi = Matrix::from_fn(t, t, |r, c| {
                if r + 1 < t {
                    mat[(order[r], c)].clone()
                } else {
                    order[t - 1..].iter().fold(Q::zero(), |acc, &row| acc + &mat[(row, c)])
                }
            });
            (phi, FilterCase::RowReduction)
        }
    };
    Ok((StochasticKernel::new(phi, types.to_vec(), types.to_vec())?, case))
}

/// Weak fictitious representation of any finite augmented mechanism.
pub fn synthesize_weak_filter(am: &AugmentedMechanism) -> Result<FictitiousDirect> {
    let mut filters = Vec::new();
    let mut cases = Vec::new();
    for (i, sigma) in am.strategies.iter().enumerate() {
        let (phi, case) = weak_filter_for(sigma, am.game.type_space(i))?;
        filters.push(phi);
        cases.push(case);
    }
    Ok(FictitiousDirect {
        game: Arc::new(am.game.direct()),
        delta: induced_allocation(am),
        filters,
        cases,
        certificate: Some(am.strategies.clone()),
        blackwell_witness: None,
    })
}

/// Same allocation and kernel-equivalent joint strategy and filter.
pub fn check_equivalence(am: &AugmentedMechanism, fd: &FictitiousDirect) -> Result<bool> {
    let delta = induced_allocation(am);
    if delta.matrix() != fd.delta.matrix() {
        return Ok(false);
    }
    kernel_equivalent(&am.joint_strategy(), &fd.joint_filter())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrongSearchMode {
    /// Synthesized filter, then every deterministic filter profile.
    Exhaustive,
    /// As exhaustive, then seeded random filters on a small rational grid.
    Randomized { seed: u64 },
}

#[derive(Debug, Clone)]
pub enum StrongSearchOutcome {
    Found(Box<FictitiousDirect>),
    /// No synthesized or deterministic candidate works. This is a negative
    /// result relative to that candidate class only.
    NoneInDeterministicClass,
    /// Candidate budget ran out before the search finished.
    BudgetExhausted,
}

/// Largest per-agent type space the strong search accepts.
pub const STRONG_SEARCH_MAX_TYPES: usize = 3;

/// Looks for a strong filter (`ker Φⁱ = ker Σⁱ` and `⊗Φ` Blackwell more
/// informative than `δ`). `budget` bounds the number of Blackwell checks.
pub fn search_strong_representation(am: &AugmentedMechanism, budget: usize, mode: StrongSearchMode) -> Result<StrongSearchOutcome> {
    let game = &am.game;
    let n = game.agent_count();
    if let Some(i) = (0..n).find(|&i| game.type_space(i).len() > STRONG_SEARCH_MAX_TYPES) {
        return Err(Error::Precondition(format!(
            "agent {i} has {} types; strong search supports at most {STRONG_SEARCH_MAX_TYPES}",
            game.type_space(i).len()
        )));
    }
    let delta = induced_allocation(am);
    let mut spent = 0usize;
    let try_profile = |spent: &mut usize, filters: Vec<StochasticKernel>, cases: Vec<FilterCase>| -> Result<Option<Option<FictitiousDirect>>> {
        if *spent >= budget {
            return Ok(None);
        }
        *spent += 1;
        let joint = kronecker_joint(&filters)?;
        Ok(Some(blackwell_more_informative(&joint, &delta)?.map(|w| FictitiousDirect {
            game: Arc::new(game.direct()),
            delta: delta.clone(),
            filters,
            cases,
            certificate: None,
            blackwell_witness: Some(w),
        })))
    };

    let weak = synthesize_weak_filter(am)?;
    match try_profile(&mut spent, weak.filters.clone(), weak.cases.clone())? {
        None => return Ok(StrongSearchOutcome::BudgetExhausted),
        Some(Some(fd)) => return Ok(StrongSearchOutcome::Found(Box::new(fd))),
        Some(None) => {}
    }

    // Per-agent deterministic candidates that already match the strategy's kernel.
    let mut per_agent: Vec<Vec<StochasticKernel>> = Vec::with_capacity(n);
    for (i, sigma) in am.strategies.iter().enumerate() {
        let types = game.type_space(i).to_vec();
        let t = types.len();
        let mut options = Vec::new();
        for code in 0..t.pow(t as u32) {
            let map = profile_of(code, &vec![t; t]);
            let phi = StochasticKernel::deterministic(&map, types.clone(), types.clone())?;
            if kernel_equivalent(&phi, sigma)? {
                options.push(phi);
            }
        }
        per_agent.push(options);
    }
    let sizes: Vec<usize> = per_agent.iter().map(Vec::len).collect();
    let combos: usize = sizes.iter().product();
    for k in 0..combos {
        let pick = profile_of(k, &sizes);
        let filters: Vec<StochasticKernel> = pick.iter().enumerate().map(|(i, &j)| per_agent[i][j].clone()).collect();
        match try_profile(&mut spent, filters, vec![FilterCase::Searched; n])? {
            None => return Ok(StrongSearchOutcome::BudgetExhausted),
            Some(Some(fd)) => return Ok(StrongSearchOutcome::Found(Box::new(fd))),
            Some(None) => {}
        }
    }

    let StrongSearchMode::Randomized { seed } = mode else {
        return Ok(StrongSearchOutcome::NoneInDeterministicClass);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut filters = Vec::with_capacity(n);
        let mut matched = true;
        for (i, sigma) in am.strategies.iter().enumerate() {
            let types = game.type_space(i).to_vec();
            let phi = random_grid_kernel(&mut rng, types.len(), types.len(), 4);
            let phi = phi.with_labels(types.clone(), types)?;
            if !kernel_equivalent(&phi, sigma)? {
                matched = false;
                break;
            }
            filters.push(phi);
        }
        if !matched {
            // Rejected candidates still consume budget so the loop terminates.
            if spent >= budget {
                return Ok(StrongSearchOutcome::BudgetExhausted);
            }
            spent += 1;
            continue;
        }
        match try_profile(&mut spent, filters, vec![FilterCase::Searched; n])? {
            None => return Ok(StrongSearchOutcome::BudgetExhausted),
            Some(Some(fd)) => return Ok(StrongSearchOutcome::Found(Box::new(fd))),
            Some(None) => {}
        }
    }
}

/// Random column-stochastic kernel whose entries are multiples of `1/denominator`.
pub fn random_grid_kernel(rng: &mut impl Rng, rows: usize, cols: usize, denominator: i64) -> StochasticKernel {
    let mut m = Matrix::zeros(rows, cols);
    for c in 0..cols {
        for _ in 0..denominator {
            let r = rng.gen_range(0..rows);
            m[(r, c)] += q(1, denominator);
        }
    }
    StochasticKernel::from_matrix(m).expect("grid columns sum to one")
}
