//! Seeded random instance generators for property and acceptance tests.
//!
//! All entries are small-denominator rationals so exact arithmetic stays
//! cheap.

use std::sync::Arc;

use itertools::Itertools;
use rand::seq::index::sample;
use rand::Rng;

use crate::kernel::{Prior, StochasticKernel};
use crate::linalg::Matrix;
use crate::monopoly::MonopolyInstance;
use crate::rational::{q, qi, Q};
use crate::revelation::{random_grid_kernel, AugmentedMechanism, GameInstance};

pub use crate::revelation::random_grid_kernel as grid_kernel;

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Distribution whose atoms are multiples of `1/denominator`; strictly
/// positive when `full_support` (requires `denominator >= n`).
pub fn prior(rng: &mut impl Rng, n: usize, denominator: i64, full_support: bool) -> Prior {
    let mut counts = vec![0i64; n];
    let mut remaining = denominator;
    if full_support {
        assert!(denominator >= n as i64, "denominator too small for full support");
        counts.iter_mut().for_each(|c| *c = 1);
        remaining -= n as i64;
    }
    for _ in 0..remaining {
        counts[rng.gen_range(0..n)] += 1;
    }
    Prior::new(counts.into_iter().map(|c| q(c, denominator)).collect(), labels("t", n)).expect("sums to one")
}

/// Column-stochastic kernel of rank at most `rank`: columns are either one of
/// `rank` random base columns or the midpoint of two of them.
pub fn low_rank_kernel(rng: &mut impl Rng, rows: usize, cols: usize, rank: usize) -> StochasticKernel {
    let base = random_grid_kernel(rng, rows, rank.max(1), 4);
    let mut m = Matrix::zeros(rows, cols);
    for c in 0..cols {
        let a = rng.gen_range(0..base.cols());
        let b = rng.gen_range(0..base.cols());
        let mix = rng.gen_bool(0.3);
        for r in 0..rows {
            m[(r, c)] = if mix {
                (base.entry(r, a) + base.entry(r, b)) * q(1, 2)
            } else {
                base.entry(r, a).clone()
            };
        }
    }
    StochasticKernel::from_matrix(m).expect("mixtures of stochastic columns")
}

fn random_utilities(rng: &mut impl Rng, outcomes: usize, profiles: usize) -> Matrix {
    Matrix::from_fn(outcomes, profiles, |_, _| qi(rng.gen_range(-3..=3)))
}

/// Bounds for [`augmented_mechanism`].
#[derive(Debug, Clone, Copy)]
pub struct MechanismShape {
    pub max_agents: usize,
    pub max_types: usize,
    pub max_messages: usize,
    pub max_outcomes: usize,
}

/// Random finite augmented mechanism; strategies are often rank deficient so
/// every weak-filter case is exercised.
pub fn augmented_mechanism(rng: &mut impl Rng, shape: MechanismShape) -> AugmentedMechanism {
    let n = rng.gen_range(1..=shape.max_agents);
    let types: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=shape.max_types)).collect();
    let messages: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=shape.max_messages)).collect();
    let outcomes = rng.gen_range(1..=shape.max_outcomes);
    let game = game(rng, &types, &messages, outcomes);
    let strategies = (0..n)
        .map(|i| {
            let rank = rng.gen_range(1..=types[i].min(messages[i]));
            low_rank_kernel(rng, messages[i], types[i], rank)
                .with_labels(game.message_space(i).to_vec(), game.type_space(i).to_vec())
                .unwrap()
        })
        .collect();
    let joint_m: usize = messages.iter().product();
    let omega = random_grid_kernel(rng, outcomes, joint_m, 3)
        .with_labels(game.outcomes().to_vec(), game.joint_message_labels())
        .unwrap();
    AugmentedMechanism::new(game, omega, strategies).expect("shapes agree")
}

/// Random mechanism with pure strategies and a deterministic outcome map.
pub fn pure_mechanism(rng: &mut impl Rng, shape: MechanismShape) -> AugmentedMechanism {
    let n = rng.gen_range(1..=shape.max_agents);
    let types: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=shape.max_types)).collect();
    let messages: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=shape.max_messages)).collect();
    let outcomes = rng.gen_range(1..=shape.max_outcomes);
    let game = game(rng, &types, &messages, outcomes);
    let strategies = (0..n)
        .map(|i| {
            let map: Vec<usize> = (0..types[i]).map(|_| rng.gen_range(0..messages[i])).collect();
            StochasticKernel::deterministic(&map, game.message_space(i).to_vec(), game.type_space(i).to_vec()).unwrap()
        })
        .collect();
    let joint_m: usize = messages.iter().product();
    let map: Vec<usize> = (0..joint_m).map(|_| rng.gen_range(0..outcomes)).collect();
    let omega = StochasticKernel::deterministic(&map, game.outcomes().to_vec(), game.joint_message_labels()).unwrap();
    AugmentedMechanism::new(game, omega, strategies).expect("shapes agree")
}

fn game(rng: &mut impl Rng, types: &[usize], messages: &[usize], outcomes: usize) -> Arc<GameInstance> {
    let n = types.len();
    let profiles: usize = types.iter().product();
    let type_spaces = (0..n).map(|i| labels(&format!("a{i}t"), types[i])).collect();
    let message_spaces = (0..n).map(|i| labels(&format!("a{i}m"), messages[i])).collect();
    let utilities = (0..n).map(|_| random_utilities(rng, outcomes, profiles)).collect();
    let designer = random_utilities(rng, outcomes, profiles);
    Arc::new(GameInstance::new(type_spaces, message_spaces, labels("o", outcomes), utilities, designer).unwrap())
}

/// Random monopoly instance on the uniform grid `{0, 1/(n-1), ..., 1}` with a
/// full-support prior and a random price distribution over `support` points.
pub fn monopoly(rng: &mut impl Rng, grid_len: usize, support: usize, denominator: i64) -> MonopolyInstance {
    let grid: Vec<Q> = (0..grid_len).map(|k| q(k as i64, (grid_len - 1).max(1) as i64)).collect();
    let pi0 = prior(rng, grid_len, denominator, true);
    let chosen = sample(rng, grid_len, support.min(grid_len)).into_iter().sorted().collect::<Vec<_>>();
    let weights = prior(rng, chosen.len(), 2 * chosen.len() as i64, true);
    let prices = chosen.iter().zip(weights.atoms()).map(|(&i, w)| (grid[i].clone(), w.clone())).collect();
    MonopolyInstance::new(grid, pi0.atoms().to_vec(), prices).expect("valid by construction")
}
