//! Feasible priors of a pooling signal, before and after pinning one type.

use mechkernel::feasible::{dimension, feasible_set, restrict_grain, vertices, GrainSet};
use mechkernel::kernel::{Prior, StochasticKernel};
use mechkernel::rational::{format_rational, q};

fn labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("t{i}")).collect()
}

fn print_vertices(title: &str, p: &mechkernel::feasible::PriorPolytope) -> mechkernel::Result<()> {
    println!("{title}: dimension {}", dimension(p)?);
    for v in vertices(p, 1000)?.complete()? {
        println!("  ({})", v.atoms().iter().map(format_rational).collect::<Vec<_>>().join(", "));
    }
    Ok(())
}

fn main() -> mechkernel::Result<()> {
    let pi0 = Prior::new(vec![q(1, 5), q(3, 10), q(1, 2)], labels(3))?;
    let h = StochasticKernel::from_rows(vec![vec![q(1, 1), q(0, 1), q(1, 2)], vec![q(0, 1), q(1, 1), q(1, 2)], vec![q(0, 1), q(0, 1), q(0, 1)]])?
        .with_labels(vec!["s1".into(), "s2".into(), "s3".into()], labels(3))?;
    print_vertices("partially pooling signal", &feasible_set(&h, &pi0)?)?;

    let pool = StochasticKernel::pooling(vec!["m".into()], 0, labels(3));
    let free = feasible_set(&pool, &pi0)?;
    print_vertices("uninformative signal", &free)?;
    let pinned = restrict_grain(&free, &GrainSet::single(vec![0], q(1, 4)), &pi0)?;
    print_vertices("beliefs agreeing with the prior on t1", &pinned)?;
    Ok(())
}
