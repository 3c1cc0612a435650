//! Strong representation of a pure mechanism, and incentive checks for a
//! second-price auction.

use std::sync::Arc;

use mechkernel::kernel::StochasticKernel;
use mechkernel::linalg::Matrix;
use mechkernel::rational::{format_rational, qi};
use mechkernel::revelation::{check_equivalence, is_dominant_strategy_eq, represent_deterministic, AugmentedMechanism, GameInstance};

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Values and bids in {0, 1, 2}; ties go to bidder 1 at the common bid.
fn second_price(bidding: &[usize]) -> mechkernel::Result<AugmentedMechanism> {
    let outcomes: Vec<String> = (1..=2).flat_map(|w| (0..3).map(move |p| format!("bidder{w}@{p}"))).collect();
    let omega = Matrix::from_fn(6, 9, |o, col| {
        let (b1, b2) = (col / 3, col % 3);
        let (winner, price) = (o / 3, o % 3);
        match b1.cmp(&b2) {
            std::cmp::Ordering::Greater | std::cmp::Ordering::Equal if winner == 0 && price == b2 => qi(1),
            std::cmp::Ordering::Less if winner == 1 && price == b1 => qi(1),
            _ => qi(0),
        }
    });
    let utility = |agent: usize| {
        Matrix::from_fn(6, 9, |o, theta| {
            let value = if agent == 0 { theta / 3 } else { theta % 3 } as i64;
            if o / 3 == agent { qi(value - (o % 3) as i64) } else { qi(0) }
        })
    };
    let revenue = Matrix::from_fn(6, 9, |o, _| qi((o % 3) as i64));
    let (values, bids) = (labels("v", 3), labels("b", 3));
    let game = Arc::new(GameInstance::new(
        vec![values.clone(), values.clone()],
        vec![bids.clone(), bids.clone()],
        outcomes.clone(),
        vec![utility(0), utility(1)],
        revenue,
    )?);
    let omega = StochasticKernel::new(omega, outcomes, game.joint_message_labels())?;
    let first = StochasticKernel::deterministic(bidding, bids.clone(), values.clone())?;
    let second = StochasticKernel::deterministic(&[0, 1, 2], bids, values)?;
    AugmentedMechanism::new(game, omega, vec![first, second])
}

fn main() -> mechkernel::Result<()> {
    let truthful = second_price(&[0, 1, 2])?;
    println!("truthful bidding is dominant: {}", is_dominant_strategy_eq(&truthful).holds);
    let overbid = second_price(&[1, 2, 2])?;
    let check = is_dominant_strategy_eq(&overbid);
    println!("overbidding is dominant: {} ({} violations)", check.holds, check.violations.len());
    if let Some(v) = check.violations.first() {
        println!("  agent {} at types {:?} gains {} by bidding b{}", v.agent, v.types, format_rational(&v.gain), v.deviation);
    }

    // Values 1 and 2 pool under the overbidding strategy; the filter maps both to the first.
    let fd = represent_deterministic(&overbid)?;
    println!("filter of bidder 1 (value index to representative): {:?}", fd.filters[0].deterministic_map().unwrap_or_default());
    println!("equivalent: {}, strong: {:?}", check_equivalence(&overbid, &fd)?, fd.is_strong());
    Ok(())
}
