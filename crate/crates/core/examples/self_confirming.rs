//! Robust self-confirmation of posted prices on an 11-point uniform grid,
//! through the generic belief LP.

use mechkernel::monopoly::MonopolyInstance;
use mechkernel::rational::{format_rational, q, qi};
use mechkernel::self_confirming::{auto_schedule, is_robustly_self_confirming, GrainBudget, RobustQuery};

fn main() -> mechkernel::Result<()> {
    let grid: Vec<_> = (0..11).map(|k| q(k, 10)).collect();
    for price in [q(2, 5), q(1, 2), q(3, 5)] {
        let inst = MonopolyInstance::new(grid.clone(), vec![q(1, 11); 11], vec![(price.clone(), qi(1))])?;
        let delta = inst.unified_kernel(inst.price_support());
        let (family, u0) = (inst.competitor_family(), inst.designer_utility());
        let query = RobustQuery { delta: &delta, base_kernel: &delta, pi0: inst.pi0(), family: &family, u0: &u0, factors: None };
        let mut schedule = vec![q(2, 11)];
        schedule.extend(auto_schedule(inst.pi0()));
        let report = is_robustly_self_confirming(&query, &schedule, GrainBudget::default())?;
        print!("price {}: {:?}, largest passing eps {}", format_rational(&price), report.verdict, report.describe_level());
        match &report.failing {
            Some(grain) => println!(", fails when beliefs must match the prior on {:?}", grain.sets[0]),
            None => println!(),
        }
    }
    Ok(())
}
