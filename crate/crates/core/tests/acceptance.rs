//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::{Duration, Instant};

use itertools::Itertools;
use mechkernel::feasible::{build_grain_filter, dimension, feasible_set, membership, restrict_grain, vertices, GrainSet, PriorPolytope};
use mechkernel::kernel::{blackwell_more_informative, compound, kernel_more_informative, kernel_order_witness, kronecker_joint, average};
use mechkernel::linalg::Matrix;
use mechkernel::monopoly::{
    check_characterization, equal_tail_check, feasible_tail_polytope, oracle_justifying_belief, oracle_robust_sc, randomized_price_kernel, GrainCap,
    MonopolyInstance, OracleVerdict,
};
use mechkernel::random::{self, grid_kernel, MechanismShape};
use mechkernel::rational::{parse_rational, q, qi};
use mechkernel::revelation::{check_equivalence, induced_allocation, represent_deterministic, synthesize_weak_filter, FilterCase};
use mechkernel::self_confirming::{auto_schedule, is_robustly_self_confirming, is_self_confirming, CompetitorFamily, GrainBudget, LevelStatus, Provenance, RobustQuery};
use mechkernel::{Prior, StochasticKernel, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const A1_BUDGET: Duration = Duration::from_secs(1);
const WEAK_RP_BUDGET: Duration = Duration::from_secs(30);
const MONOPOLY_BUDGET: Duration = Duration::from_secs(60);

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dec(rows: &[&[&str]]) -> StochasticKernel {
    StochasticKernel::from_rows(rows.iter().map(|r| r.iter().map(|s| parse_rational(s).unwrap()).collect()).collect()).unwrap()
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Same rank for each and for the stacked pair: equal row spaces, hence equal null spaces.
fn same_null_space(a: &Matrix, b: &Matrix) -> bool {
    let r = a.rank();
    r == b.rank() && r == a.vstack(b).unwrap().rank()
}

/// Equal affine dimension and every vertex of each inside the other.
fn polytopes_equal(a: &PriorPolytope, b: &PriorPolytope) -> Result<(), String> {
    let (da, db) = (dimension(a).unwrap(), dimension(b).unwrap());
    ensure(da == db, || format!("dimensions {da} vs {db}"))?;
    for (x, y) in [(a, b), (b, a)] {
        for v in vertices(x, 10_000).unwrap().complete().unwrap() {
            ensure(membership(y, &v).unwrap(), || format!("vertex {v:?} not shared"))?;
        }
    }
    Ok(())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let g = dec(&[&["0.8", "0.1", "0.1"], &["0.1", "0.8", "0.1"], &["0.1", "0.1", "0.8"]]);
    let h = dec(&[&["1", "0", "0.5"], &["0", "1", "0.5"], &["0", "0", "0"]]);
    ensure(kernel_more_informative(&g, &h).unwrap(), || "G over H should hold".into())?;
    ensure(!kernel_more_informative(&h, &g).unwrap(), || "H over G should fail".into())?;

    let mu0 = Prior::from_atoms(vec![q(1, 3); 3]).unwrap();
    let mu_bar = Prior::from_atoms(vec![q(1, 2), q(1, 2), qi(0)]).unwrap();
    let h_image = vec![q(1, 2), q(1, 2), qi(0)];
    ensure(average(&h, &mu0).unwrap().atoms() == h_image.as_slice(), || "H mu0".into())?;
    ensure(average(&h, &mu_bar).unwrap().atoms() == h_image.as_slice(), || "H mu_bar".into())?;
    ensure(average(&g, &mu_bar).unwrap().atoms() == [q(9, 20), q(9, 20), q(1, 10)], || "G mu_bar".into())?;
    ensure(average(&g, &mu0).unwrap() != average(&g, &mu_bar).unwrap(), || "G separates the pair".into())?;
    let (w0, w1) = kernel_order_witness(&h, &g).unwrap().ok_or("no witness returned")?;
    ensure(w0.atoms() == mu0.atoms() && w1.atoms() == mu_bar.atoms(), || format!("witness {w0:?}, {w1:?}"))?;

    ensure(blackwell_more_informative(&g, &h).unwrap().is_none(), || "a garbling was found".into())?;

    let hg_inv = h.matrix().mul(&g.matrix().inverse().ok_or("G singular")?).unwrap();
    let expected = Matrix::from_rows(
        [[17, -3, 7], [-3, 17, 7], [0, 0, 0]].iter().map(|r| r.iter().map(|&x| q(x, 14)).collect()).collect(),
    )
    .unwrap();
    ensure(hg_inv == expected, || format!("HG^-1 = {hg_inv:?}"))?;
    // Independent of the inverse routine: (HG⁻¹)·G must give back H.
    ensure(expected.mul(g.matrix()).unwrap() == *h.matrix(), || "expected matrix times G is not H".into())?;

    let elapsed = start.elapsed();
    ensure(elapsed < A1_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{elapsed:?}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let shape = MechanismShape { max_agents: 2, max_types: 4, max_messages: 6, max_outcomes: 3 };
    let mut cases = [0usize; 3];
    for n in 0..200 {
        let am = random::augmented_mechanism(&mut rng, shape);
        let fd = synthesize_weak_filter(&am).unwrap();
        for (i, (phi, sigma)) in fd.filters.iter().zip(am.strategies()).enumerate() {
            ensure(same_null_space(phi.matrix(), sigma.matrix()), || format!("mechanism {n}, agent {i}: null spaces differ"))?;
            ensure(phi.rows() == phi.cols(), || format!("mechanism {n}: filter not on types x types"))?;
        }
        let joint_sigma = kronecker_joint(am.strategies()).unwrap();
        ensure(same_null_space(joint_sigma.matrix(), fd.joint_filter().matrix()), || format!("mechanism {n}: joint null spaces differ"))?;
        ensure(check_equivalence(&am, &fd).unwrap(), || format!("mechanism {n}: not equivalent"))?;
        for c in &fd.cases {
            match c {
                FilterCase::EmbedMessages => cases[0] += 1,
                FilterCase::FullyRevealing => cases[1] += 1,
                FilterCase::RowReduction => cases[2] += 1,
                _ => {}
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < WEAK_RP_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{elapsed:?}; filter cases embed/full/reduce = {cases:?}"))
}

fn fibers(map: &[usize]) -> Vec<Vec<usize>> {
    map.iter().unique().map(|m| (0..map.len()).filter(|&t| map[t] == *m).collect()).sorted().collect()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = MechanismShape { max_agents: 2, max_types: 4, max_messages: 4, max_outcomes: 3 };
    for n in 0..100 {
        let am = random::pure_mechanism(&mut rng, shape);
        let fd = represent_deterministic(&am).unwrap();
        for (i, (phi, sigma)) in fd.filters.iter().zip(am.strategies()).enumerate() {
            let phi_map = phi.deterministic_map().ok_or("filter is not pure")?;
            let sigma_map = sigma.deterministic_map().unwrap();
            ensure(fibers(&phi_map) == fibers(&sigma_map), || format!("mechanism {n}, agent {i}: fibers differ"))?;
        }
        let delta = induced_allocation(&am);
        let composed = compound(&delta, &fd.joint_filter()).unwrap();
        ensure(composed.matrix() == delta.matrix(), || format!("mechanism {n}: delta after phi differs"))?;
        let witness = fd.blackwell_witness.as_ref().ok_or("no garbling witness")?;
        ensure(witness.matrix().mul(fd.joint_filter().matrix()).unwrap() == *delta.matrix(), || format!("mechanism {n}: witness"))?;
    }
    Ok("100 mechanisms".into())
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 2..=6 {
        let pi0 = random::prior(&mut rng, n, 12, false);
        let types = pi0.labels().to_vec();
        let point = feasible_set(&StochasticKernel::identity(types.clone()), &pi0).unwrap();
        ensure(dimension(&point).unwrap() == 0, || format!("identity, {n} types: nonzero dimension"))?;
        let v = vertices(&point, 100).unwrap().complete().unwrap();
        ensure(v == vec![pi0.clone()], || format!("identity, {n} types: vertices {v:?}"))?;

        let pooled = feasible_set(&StochasticKernel::pooling(vec!["m".into()], 0, types.clone()), &pi0).unwrap();
        ensure(dimension(&pooled).unwrap() == n - 1, || format!("pooling, {n} types: dimension"))?;
        for t in 0..n {
            ensure(membership(&pooled, &Prior::dirac(types.clone(), t)).unwrap(), || format!("pooling, {n} types: dirac {t}"))?;
        }
    }
    Ok("|Θ| = 2..6".into())
}

fn random_grain(rng: &mut impl Rng, pi0: &Prior, denom: i64) -> GrainSet {
    let n = pi0.dim();
    let size = rng.gen_range(0..n);
    let set: Vec<usize> = rand::seq::index::sample(rng, n, size).into_iter().sorted().collect();
    let eps = pi0.mass(set.iter().copied()) + q(1, denom);
    GrainSet::single(set, eps)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shape = MechanismShape { max_agents: 1, max_types: 6, max_messages: 6, max_outcomes: 3 };
    let mut done = 0;
    while done < 50 {
        let am = random::augmented_mechanism(&mut rng, shape);
        let n = am.game().type_space(0).len();
        if n < 2 {
            continue;
        }
        let pi0 = random::prior(&mut rng, n, 12, true).relabel(am.game().type_space(0).to_vec()).unwrap();
        let fd = synthesize_weak_filter(&am).unwrap();
        let grain = random_grain(&mut rng, &pi0, 12);
        let perturbed = build_grain_filter(&fd, &grain, &pi0).unwrap();
        let direct = feasible_set(&perturbed.joint_filter(), &pi0).unwrap();
        let restricted = restrict_grain(&feasible_set(&fd.joint_filter(), &pi0).unwrap(), &grain, &pi0).unwrap();
        polytopes_equal(&direct, &restricted).map_err(|e| format!("instance {done}, grain {:?}: {e}", grain.sets))?;
        done += 1;
    }
    Ok("50 instances".into())
}

fn random_family(rng: &mut impl Rng, outcomes: usize, n: usize) -> CompetitorFamily {
    let members = (0..3)
        .map(|_| {
            let map: Vec<usize> = (0..n).map(|_| rng.gen_range(0..outcomes)).collect();
            StochasticKernel::deterministic(&map, labels("o", outcomes), labels("t", n)).unwrap()
        })
        .collect();
    CompetitorFamily::unchecked(members, Provenance::UserSupplied)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut restricted_hits, mut robust_hits) = (0, 0);
    for pair in 0..50 {
        let n = rng.gen_range(2..=4);
        let pi0 = random::prior(&mut rng, n, 8, true);
        let rows = rng.gen_range(2..=4);
        let finer = grid_kernel(&mut rng, rows, n, 4).with_labels(labels("y", rows), labels("t", n)).unwrap();
        let signals = rng.gen_range(1..=3);
        let garbling = grid_kernel(&mut rng, signals, finer.rows(), 2);
        let coarser = compound(&garbling, &finer).unwrap();
        let family = random_family(&mut rng, 2, n);
        let delta = family.members()[0].clone();
        let u0 = Matrix::from_fn(2, n, |_, _| qi(rng.gen_range(-3..=3)));

        let base = feasible_set(&finer, &pi0).unwrap();
        let grain = random_grain(&mut rng, &pi0, 8);
        let restricted = restrict_grain(&base, &grain, &pi0).unwrap();
        if is_self_confirming(&delta, &restricted, &family, &u0).unwrap().is_some() {
            restricted_hits += 1;
            ensure(is_self_confirming(&delta, &base, &family, &u0).unwrap().is_some(), || format!("pair {pair}: restricted SC but unrestricted not"))?;
        }

        let schedule = auto_schedule(&pi0);
        let run = |k: &StochasticKernel| {
            let query = RobustQuery { delta: &delta, base_kernel: k, pi0: &pi0, family: &family, u0: &u0, factors: None };
            is_robustly_self_confirming(&query, &schedule, GrainBudget::default()).unwrap()
        };
        let (fine, coarse) = (run(&finer), run(&coarser));
        for (a, b) in fine.levels.iter().zip(&coarse.levels) {
            if a.status == LevelStatus::Pass {
                robust_hits += 1;
                ensure(b.status == LevelStatus::Pass, || format!("pair {pair}: finer passes at {} but coarser does not", a.epsilon))?;
            }
        }
    }
    ensure(restricted_hits > 0 && robust_hits > 0, || "monotonicity antecedents never held".into())?;
    Ok(format!("antecedent held {restricted_hits} (grain) / {robust_hits} (levels) times"))
}

fn uniform11(prices: &[(Q, Q)]) -> MonopolyInstance {
    let grid = (0..=10).map(|k| q(k, 10)).collect();
    MonopolyInstance::new(grid, vec![q(1, 11); 11], prices.to_vec()).unwrap()
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let cap = GrainCap { max_size: 3, max_sets: 100_000 };
    let eps = q(2, 11);

    let at_04 = uniform11(&[(q(2, 5), qi(1))]);
    let r = oracle_robust_sc(&at_04, &eps, cap).unwrap();
    ensure(r.verdict == OracleVerdict::NotRobust, || "0.4 should not be robust".into())?;
    let a = r.failing_grain.clone().unwrap();
    ensure(a.len() <= 1, || format!("failing grain {a:?} is not minimal"))?;
    if a.len() == 1 {
        ensure(oracle_justifying_belief(&at_04, &[]).unwrap().is_some(), || "0.4 with no grain".into())?;
    }

    let mix = uniform11(&[(q(2, 5), q(1, 2)), (q(1, 2), q(1, 2))]);
    let c = check_characterization(&mix);
    ensure(!c.cond_equal_revenue, || "0.4/0.5 revenues should differ".into())?;
    let r = oracle_robust_sc(&mix, &eps, cap).unwrap();
    ensure(r.verdict == OracleVerdict::NotRobust && r.failing_grain == Some(vec![]), || format!("0.4/0.5 mix: {r:?}"))?;

    for argmax in [q(1, 2), q(3, 5)] {
        for e in [q(1, 11), q(3, 22), q(2, 11)] {
            let r = oracle_robust_sc(&uniform11(&[(argmax.clone(), qi(1))]), &e, cap).unwrap();
            ensure(r.verdict == OracleVerdict::Robust, || format!("argmax {argmax} at eps {e}: {:?}", r.verdict))?;
        }
    }

    let grid: Vec<Q> = (0..=10).map(|k| q(k, 10)).collect();
    let mut sweep: Vec<Vec<(Q, Q)>> = grid.iter().map(|p| vec![(p.clone(), qi(1))]).collect();
    sweep.extend(grid.iter().tuple_combinations().map(|(a, b)| vec![(a.clone(), q(1, 2)), (b.clone(), q(1, 2))]));
    for prices in &sweep {
        let inst = uniform11(prices);
        let holds = check_characterization(&inst).holds();
        let r = oracle_robust_sc(&inst, &eps, cap).unwrap();
        ensure(!r.incomplete, || "grain enumeration incomplete".into())?;
        ensure((r.verdict == OracleVerdict::Robust) == holds, || format!("disagreement at {prices:?}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < MONOPOLY_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{} price distributions, {elapsed:?}", sweep.len()))
}

/// Weights (out of 67) on the grid k/20: two bumps whose revenue peaks at
/// k = 6 and k = 12 tie at 288/1340.
const BIMODAL: [i64; 21] = [4, 1, 2, 1, 3, 8, 8, 9, 1, 3, 2, 1, 3, 5, 4, 1, 2, 1, 1, 4, 3];

fn bimodal(weights: &[i64]) -> MonopolyInstance {
    let total: i64 = weights.iter().sum();
    let grid = (0..=20).map(|k| q(k, 20)).collect();
    let pi0 = weights.iter().map(|&w| q(w, total)).collect();
    MonopolyInstance::new(grid, pi0, vec![(q(3, 10), q(1, 2)), (q(3, 5), q(1, 2))]).unwrap()
}

fn criterion_8() -> Outcome {
    // Every grain set with mass below 5/67 has at most four atoms.
    let eps = q(5, 67);
    let cap = GrainCap { max_size: 4, max_sets: 100_000 };
    let inst = bimodal(&BIMODAL);
    let revenues: Vec<Q> = BIMODAL.iter().enumerate().map(|(k, _)| q(k as i64, 20) * inst.pi0().mass(k..21)).collect();
    ensure(revenues[6] == revenues[12] && revenues[6] == q(288, 1340), || "construction: peaks do not tie".into())?;
    ensure(revenues[6] > revenues[9], || "construction: no dip between peaks".into())?;

    let c = check_characterization(&inst);
    ensure(c.holds(), || format!("characterization fails: {c:?}"))?;
    let r = oracle_robust_sc(&inst, &eps, cap).unwrap();
    ensure(r.verdict == OracleVerdict::Robust, || format!("oracle: {:?} (grain {:?})", r.verdict, r.failing_grain))?;

    // Shift one atom of mass from k = 10 to k = 12: only the upper peak rises.
    let mut bumped = BIMODAL;
    bumped[10] -= 1;
    bumped[12] += 1;
    let perturbed = bimodal(&bumped);
    let c = check_characterization(&perturbed);
    ensure(!c.holds() && !c.cond_equal_revenue, || "perturbed characterization still holds".into())?;
    let r = oracle_robust_sc(&perturbed, &eps, cap).unwrap();
    ensure(r.verdict == OracleVerdict::NotRobust, || format!("perturbed oracle: {:?}", r.verdict))?;
    Ok(format!("peaks at 3/10 and 3/5; perturbed fails on grain {:?}", r.failing_grain.unwrap()))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    while checked < 50 {
        let grid_len = rng.gen_range(3..=8);
        let support = rng.gen_range(1..=3);
        let inst = random::monopoly(&mut rng, grid_len, support, 24);
        let verts = vertices(&feasible_tail_polytope(&inst), 10_000).unwrap().complete().unwrap();
        for v in verts.iter().take(5) {
            ensure(equal_tail_check(&inst, v).unwrap(), || format!("vertex {v:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} vertices"))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for n in 0..20 {
        let grid_len = rng.gen_range(3..=9);
        let support = rng.gen_range(1..=3);
        let inst = random::monopoly(&mut rng, grid_len, support, 30);
        let tails = feasible_tail_polytope(&inst);
        let generic = feasible_set(&randomized_price_kernel(&inst), inst.pi0()).unwrap();
        polytopes_equal(&tails, &generic).map_err(|e| format!("instance {n}: {e}"))?;
    }
    Ok("20 instances".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 kernel order vs Blackwell golden case", criterion_1),
        ("2 weak revelation on 200 random mechanisms", criterion_2),
        ("3 deterministic revelation on 100 pure mechanisms", criterion_3),
        ("4 identity and pooling feasible sets", criterion_4),
        ("5 grain filter equals grain restriction", criterion_5),
        ("6 monotonicity of self-confirmation", criterion_6),
        ("7 monopoly necessity on the 11-point grid", criterion_7),
        ("8 monopoly sufficiency on a bimodal 21-point grid", criterion_8),
        ("9 equal tails at tail-polytope vertices", criterion_9),
        ("10 tail polytope equals generic feasible set", criterion_10),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match std::panic::catch_unwind(run) {
            Ok(Ok(detail)) => println!("PASS criterion {name} ({detail})"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL criterion {name}: panicked");
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
