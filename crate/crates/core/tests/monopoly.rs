use mechkernel::feasible::{membership, vertices};
use mechkernel::kernel::Prior;
use mechkernel::monopoly::{
    check_characterization, equal_tail_check, feasible_tail_polytope, local_maximizers, mechanism_revenue, oracle_robust_sc, revenue, revenue_curve, GrainCap,
    MonopolyInstance, OracleVerdict,
};
use mechkernel::random;
use mechkernel::rational::{q, qi};
use mechkernel::Q;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(n: i64) -> Vec<Q> {
    (0..n).map(|k| q(k, n - 1)).collect()
}

fn uniform11(prices: Vec<(Q, Q)>) -> MonopolyInstance {
    MonopolyInstance::new(grid(11), vec![q(1, 11); 11], prices).unwrap()
}

fn max_atom(inst: &MonopolyInstance) -> Q {
    inst.pi0().atoms().iter().max().unwrap().clone()
}

#[test]
fn uniform_revenue_curve_peaks_at_half_and_three_fifths() {
    let inst = uniform11(vec![(q(1, 2), qi(1))]);
    let curve = revenue_curve(&inst, inst.pi0()).unwrap();
    assert_eq!(curve[5], (q(1, 2), q(3, 11)));
    assert_eq!(curve[6], (q(3, 5), q(3, 11)));
    assert_eq!(curve[0].1, qi(0));
    assert_eq!(local_maximizers(&inst, inst.pi0()).unwrap(), vec![q(1, 2), q(3, 5)]);
    assert_eq!(revenue(&inst, &q(2, 5), inst.pi0()).unwrap(), q(14, 55));
}

#[test]
fn characterization_on_the_uniform_grid() {
    let peak = check_characterization(&uniform11(vec![(q(1, 2), q(1, 2)), (q(3, 5), q(1, 2))]));
    assert!(peak.holds());
    let low = check_characterization(&uniform11(vec![(q(2, 5), qi(1))]));
    assert!(low.cond_equal_revenue && !low.cond_local_max);
    assert_eq!(low.non_local_max, vec![q(2, 5)]);
    let mixed = check_characterization(&uniform11(vec![(q(2, 5), q(1, 2)), (q(1, 2), q(1, 2))]));
    assert!(!mixed.cond_equal_revenue);
}

#[test]
fn oracle_on_the_uniform_grid() {
    let eps = q(2, 11);
    let peak = oracle_robust_sc(&uniform11(vec![(q(3, 5), qi(1))]), &eps, GrainCap::default()).unwrap();
    assert_eq!(peak.verdict, OracleVerdict::Robust);
    assert!(peak.witness_belief.is_some());

    let inst = uniform11(vec![(q(2, 5), qi(1))]);
    let low = oracle_robust_sc(&inst, &eps, GrainCap::default()).unwrap();
    assert_eq!(low.verdict, OracleVerdict::NotRobust);
    assert_eq!(low.failing_prices(&inst), Some(vec![q(2, 5)]));

    let mixed = oracle_robust_sc(&uniform11(vec![(q(2, 5), q(1, 2)), (q(1, 2), q(1, 2))]), &eps, GrainCap::default()).unwrap();
    assert_eq!(mixed.failing_grain, Some(vec![]));
    assert!(mixed.witness_belief.is_none());
}

#[test]
fn equal_tails_hold_on_the_polytope() {
    let inst = uniform11(vec![(q(1, 2), qi(1))]);
    let mut atoms = vec![qi(0); 11];
    atoms[0] = q(5, 11);
    atoms[10] = q(6, 11);
    assert!(equal_tail_check(&inst, &Prior::new(atoms, inst.pi0().labels().to_vec()).unwrap()).unwrap());
    let off = Prior::dirac(inst.pi0().labels().to_vec(), 0);
    assert!(equal_tail_check(&inst, &off).is_err());
}

#[test]
fn grain_cap_covers_every_light_set() {
    let inst = uniform11(vec![(q(1, 2), qi(1))]);
    assert_eq!(GrainCap::for_epsilon(inst.pi0(), &q(2, 11)).max_size, 1);
    assert_eq!(GrainCap::for_epsilon(inst.pi0(), &q(1, 2)).max_size, 5);
    let light = Prior::from_atoms(vec![q(1, 67), q(1, 67), q(1, 67), q(1, 67), q(63, 67)]).unwrap();
    assert_eq!(GrainCap::for_epsilon(&light, &q(5, 67)).max_size, 4);
}

#[test]
fn instance_validation() {
    assert!(MonopolyInstance::new(grid(3), vec![q(1, 3); 3], vec![(q(1, 3), qi(1))]).is_err());
    assert!(MonopolyInstance::new(grid(3), vec![q(1, 2); 3], vec![(q(1, 2), qi(1))]).is_err());
    assert!(MonopolyInstance::new(grid(3), vec![q(1, 3); 3], vec![(q(1, 2), q(1, 2))]).is_err());
    assert!(MonopolyInstance::new(vec![qi(1), qi(0)], vec![q(1, 2); 2], vec![(qi(1), qi(1))]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn revenue_is_constant_on_the_tail_polytope(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, s) = (rng.gen_range(2..=7), rng.gen_range(1..=3));
        let inst = random::monopoly(&mut rng, n, s, 12);
        let polytope = feasible_tail_polytope(&inst);
        let base = mechanism_revenue(&inst, inst.pi0()).unwrap();
        let vs = vertices(&polytope, 10_000).unwrap().complete().unwrap();
        for (a, b) in vs.iter().zip(vs.iter().rev()) {
            let w: Q = q(rng.gen_range(0..=4), 4);
            let mix: Vec<Q> = a.atoms().iter().zip(b.atoms()).map(|(x, y)| &w * x + (qi(1) - &w) * y).collect();
            let mix = Prior::new(mix, a.labels().to_vec()).unwrap();
            prop_assert!(membership(&polytope, &mix).unwrap());
            prop_assert_eq!(mechanism_revenue(&inst, &mix).unwrap(), base.clone());
            prop_assert_eq!(mechanism_revenue(&inst, a).unwrap(), base.clone());
        }
    }

    #[test]
    fn unequal_revenues_fail_without_pins(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, s) = (rng.gen_range(3..=9), rng.gen_range(2..=3));
        let inst = random::monopoly(&mut rng, n, s, 12);
        if !check_characterization(&inst).cond_equal_revenue {
            let report = oracle_robust_sc(&inst, &(max_atom(&inst) * qi(2)), GrainCap::default()).unwrap();
            prop_assert_eq!(report.verdict, OracleVerdict::NotRobust);
            prop_assert_eq!(report.failing_grain, Some(vec![]));
        }
    }

    #[test]
    fn non_peak_posted_price_fails(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(3..=9);
        let inst = random::monopoly(&mut rng, n, 1, 12);
        let ch = check_characterization(&inst);
        if !ch.cond_local_max {
            let report = oracle_robust_sc(&inst, &(max_atom(&inst) * qi(2)), GrainCap::default()).unwrap();
            prop_assert_eq!(report.verdict, OracleVerdict::NotRobust);
            prop_assert!(report.failing_grain.unwrap().len() <= 1);
        }
    }
}
