//! Posted and randomized prices: the two-condition characterization against
//! the brute-force grain oracle.

use mechkernel::monopoly::{check_characterization, oracle_robust_sc, GrainCap, MonopolyInstance};
use mechkernel::rational::{format_rational, q, qi};
use mechkernel::Q;

fn report(name: &str, inst: &MonopolyInstance, epsilon: &Q) -> mechkernel::Result<()> {
    let ch = check_characterization(inst);
    let oracle = oracle_robust_sc(inst, epsilon, GrainCap::for_epsilon(inst.pi0(), epsilon))?;
    let grain = oracle
        .failing_prices(inst)
        .map(|ps| format!(" at {{{}}}", ps.iter().map(format_rational).collect::<Vec<_>>().join(", ")))
        .unwrap_or_default();
    println!(
        "{name}: equal revenue {}, local maxima {}; oracle at eps={}: {:?}{grain}",
        ch.cond_equal_revenue,
        ch.cond_local_max,
        format_rational(epsilon),
        oracle.verdict
    );
    Ok(())
}

fn main() -> mechkernel::Result<()> {
    let grid: Vec<Q> = (0..11).map(|k| q(k, 10)).collect();
    let uniform = vec![q(1, 11); 11];
    for (name, prices) in [
        ("posted 2/5", vec![(q(2, 5), qi(1))]),
        ("posted 1/2", vec![(q(1, 2), qi(1))]),
        ("1/2 on 2/5 and 1/2", vec![(q(2, 5), q(1, 2)), (q(1, 2), q(1, 2))]),
        ("1/2 on 1/2 and 3/5", vec![(q(1, 2), q(1, 2)), (q(3, 5), q(1, 2))]),
    ] {
        report(name, &MonopolyInstance::new(grid.clone(), uniform.clone(), prices)?, &q(2, 11))?;
    }

    // A bimodal prior on 21 points where two separated prices earn the same revenue.
    let weights = [4, 1, 2, 1, 3, 8, 8, 9, 1, 3, 2, 1, 3, 5, 4, 1, 2, 1, 1, 4, 3];
    let grid: Vec<Q> = (0..21).map(|k| q(k, 20)).collect();
    let pi0: Vec<Q> = weights.iter().map(|&w| q(w, 67)).collect();
    let bimodal = MonopolyInstance::new(grid, pi0, vec![(q(3, 10), q(1, 2)), (q(3, 5), q(1, 2))])?;
    report("bimodal", &bimodal, &q(5, 67))?;
    Ok(())
}
