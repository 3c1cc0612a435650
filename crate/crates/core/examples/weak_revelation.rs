//! Weak fictitious representation of a mechanism whose single agent mixes over
//! four messages with a rank-2 strategy.
//!
//! The synthesized filter has the same kernel as the strategy, but it is not
//! Blackwell above the allocation, and no deterministic filter has the right
//! kernel either.

use std::sync::Arc;

use mechkernel::kernel::{kernel_equivalent, StochasticKernel};
use mechkernel::linalg::Matrix;
use mechkernel::rational::{format_rational, q, qi};
use mechkernel::revelation::{
    check_equivalence, search_strong_representation, synthesize_weak_filter, AugmentedMechanism, GameInstance, StrongSearchMode,
};

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn main() -> mechkernel::Result<()> {
    let sigma = Matrix::from_rows(vec![
        vec![q(1, 2), qi(0), q(1, 4)],
        vec![qi(0), q(1, 2), q(1, 4)],
        vec![q(1, 2), qi(0), q(1, 4)],
        vec![qi(0), q(1, 2), q(1, 4)],
    ])?;
    let sigma = StochasticKernel::new(sigma, labels("m", 4), labels("t", 3))?;
    let game = Arc::new(GameInstance::new(vec![labels("t", 3)], vec![labels("m", 4)], labels("o", 4), vec![Matrix::zeros(4, 3)], Matrix::zeros(4, 3))?);
    let omega = StochasticKernel::identity(labels("m", 4)).with_labels(labels("o", 4), labels("m", 4))?;
    let am = AugmentedMechanism::new(game, omega, vec![sigma.clone()])?;

    let mut fd = synthesize_weak_filter(&am)?;
    println!("filter case: {:?}", fd.cases[0]);
    for row in fd.filters[0].matrix().to_rows() {
        println!("  [{}]", row.iter().map(format_rational).collect::<Vec<_>>().join(", "));
    }
    println!("same kernel as the strategy: {}", kernel_equivalent(&fd.filters[0], &sigma)?);
    println!("weakly equivalent representation: {}", check_equivalence(&am, &fd)?);
    println!("synthesized filter is strong: {}", fd.certify_strong()?);
    println!("strong search: {:?}", search_strong_representation(&am, 1000, StrongSearchMode::Exhaustive)?);
    Ok(())
}
