use mechkernel::kernel::{
    average, blackwell_more_informative, compound, kernel_equivalent, kernel_more_informative, kronecker_joint, null_space, Prior, StochasticKernel,
};
use mechkernel::random::{self, grid_kernel};
use mechkernel::rational::{parse_rational, q, qi};
use mechkernel::Q;
use num::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn kernel(rows: &[&[&str]]) -> StochasticKernel {
    StochasticKernel::from_rows(rows.iter().map(|r| r.iter().map(|s| parse_rational(s).unwrap()).collect()).collect()).unwrap()
}

fn g_a1() -> StochasticKernel {
    kernel(&[&["0.8", "0.1", "0.1"], &["0.1", "0.8", "0.1"], &["0.1", "0.1", "0.8"]])
}

#[test]
fn identity_average_is_the_prior() {
    let mu = Prior::from_atoms(vec![q(1, 5), q(3, 10), q(1, 2)]).unwrap();
    let id = StochasticKernel::identity(mu.labels().to_vec());
    assert_eq!(average(&id, &mu).unwrap(), mu);
}

#[test]
fn pooling_average_is_dirac() {
    let mu = Prior::from_atoms(vec![q(1, 5), q(3, 10), q(1, 2)]).unwrap();
    let pool = StochasticKernel::pooling(labels("m", 2), 1, mu.labels().to_vec());
    assert_eq!(average(&pool, &mu).unwrap().atoms(), &[qi(0), qi(1)]);
}

#[test]
fn g_average_at_mu_bar() {
    let mu_bar = Prior::from_atoms(vec![q(1, 2), q(1, 2), qi(0)]).unwrap();
    assert_eq!(average(&g_a1(), &mu_bar).unwrap().atoms(), &[q(9, 20), q(9, 20), q(1, 10)]);
}

#[test]
fn average_rejects_mismatched_prior() {
    assert!(average(&g_a1(), &Prior::uniform(labels("t", 2))).is_err());
}

#[test]
fn compound_with_identity_and_by_hand() {
    let g = kernel(&[&["1/2", "1/3"], &["1/2", "2/3"]]);
    let h = kernel(&[&["1/4", "1"], &["3/4", "0"]]);
    let id = StochasticKernel::identity(labels("y", 2));
    assert_eq!(compound(&id, &h).unwrap().matrix(), h.matrix());
    assert_eq!(compound(&g, &StochasticKernel::identity(labels("x", 2))).unwrap().matrix(), g.matrix());
    // [1/2 1/3; 1/2 2/3]·[1/4 1; 3/4 0] = [3/8 1/2; 5/8 1/2]
    let gh = compound(&g, &h).unwrap();
    assert_eq!(gh.matrix().to_rows(), vec![vec![q(3, 8), q(1, 2)], vec![q(5, 8), q(1, 2)]]);
    assert!(compound(&g, &g_a1()).is_err());
}

#[test]
fn kronecker_by_definition() {
    let a = kernel(&[&["1/2", "1"], &["1/2", "0"]]);
    let b = kernel(&[&["1/3", "0"], &["2/3", "1"]]);
    assert_eq!(kronecker_joint(std::slice::from_ref(&a)).unwrap(), a);
    let ab = kronecker_joint(&[a.clone(), b.clone()]).unwrap();
    for (r1, r2, c1, c2) in itertools::iproduct!(0..2, 0..2, 0..2, 0..2) {
        assert_eq!(ab.entry(r1 * 2 + r2, c1 * 2 + c2), &(a.entry(r1, c1) * b.entry(r2, c2)));
    }
    let id = kronecker_joint(&[StochasticKernel::identity(labels("a", 2)), StochasticKernel::identity(labels("b", 3))]).unwrap();
    assert_eq!(id.matrix(), StochasticKernel::identity(labels("t", 6)).matrix());
    assert_eq!(id.col_labels()[4], "a1,b1");
}

#[test]
fn null_space_examples() {
    assert!(null_space(&StochasticKernel::identity(labels("t", 4))).is_empty());
    assert!(null_space(&g_a1()).is_empty());
    let pooled = null_space(&StochasticKernel::pooling(labels("m", 1), 0, labels("t", 3)));
    assert_eq!(pooled.dim(), 2);
}

#[test]
fn reflexive_and_a1_orders() {
    let h = kernel(&[&["1", "0", "0.5"], &["0", "1", "0.5"], &["0", "0", "0"]]);
    assert!(kernel_more_informative(&h, &h).unwrap());
    assert!(kernel_equivalent(&g_a1(), &g_a1()).unwrap());
    assert!(!kernel_equivalent(&g_a1(), &h).unwrap());
    assert!(kernel_more_informative(&g_a1(), &StochasticKernel::identity(labels("t", 2))).is_err());
}

#[test]
fn identity_is_blackwell_above_anything() {
    let h = kernel(&[&["1", "0", "0.5"], &["0", "1", "0.5"], &["0", "0", "0"]]);
    let s = blackwell_more_informative(&StochasticKernel::identity(labels("x", 3)), &h).unwrap().unwrap();
    assert_eq!(s.matrix(), h.matrix());
}

fn random_prior(rng: &mut impl Rng, n: usize) -> Prior {
    random::prior(rng, n, 6, false).relabel(labels("x", n)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn garbling_is_found_and_implies_kernel_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let g = grid_kernel(&mut rng, y, x, 3);
        let rows = rng.gen_range(1..=3);
        let b = grid_kernel(&mut rng, rows, y, 2);
        let h = compound(&b, &g).unwrap();
        let s = blackwell_more_informative(&g, &h).unwrap();
        prop_assert!(s.is_some());
        prop_assert_eq!(s.unwrap().matrix().mul(g.matrix()).unwrap(), h.matrix().clone());
        prop_assert!(kernel_more_informative(&g, &h).unwrap());

        // Any pair: a garbling witness implies the kernel order.
        let rows = rng.gen_range(1..=4);
        let other = grid_kernel(&mut rng, rows, x, 2);
        if blackwell_more_informative(&g, &other).unwrap().is_some() {
            prop_assert!(kernel_more_informative(&g, &other).unwrap());
        }
    }

    #[test]
    fn average_is_associative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y, z) = (rng.gen_range(1..=4), rng.gen_range(1..=4), rng.gen_range(1..=4));
        let h = grid_kernel(&mut rng, y, x, 3);
        let g = grid_kernel(&mut rng, z, y, 3);
        let mu = random_prior(&mut rng, x);
        let lhs = average(&compound(&g, &h).unwrap(), &mu).unwrap();
        let rhs = average(&g, &average(&h, &mu).unwrap()).unwrap();
        prop_assert_eq!(lhs.atoms(), rhs.atoms());
    }

    #[test]
    fn null_vectors_sum_to_zero(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r, c, k) = (rng.gen_range(1..=5), rng.gen_range(1..=5), rng.gen_range(1..=3));
        let k = random::low_rank_kernel(&mut rng, r, c, k);
        let basis = null_space(&k);
        prop_assert_eq!(basis.dim() + k.matrix().rank(), k.cols());
        for v in &basis.basis_vectors {
            prop_assert!(v.iter().fold(Q::zero(), |a, b| a + b).is_zero());
            prop_assert!(k.matrix().mul_vec(v).unwrap().iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn kernel_equivalence_matches_prior_pairs(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = rng.gen_range(2..=4);
        let (r, k) = (rng.gen_range(1..=4), rng.gen_range(1..=x));
        let g = random::low_rank_kernel(&mut rng, r, x, k);
        // Half the time compare against a row-split copy, which has the same null space.
        let h = if rng.gen_bool(0.5) {
            let mut rows = g.matrix().to_rows();
            let half: Vec<Q> = rows[0].iter().map(|v| v * q(1, 2)).collect();
            rows[0] = half.clone();
            rows.push(half);
            StochasticKernel::from_rows(rows).unwrap()
        } else {
            let (r, k) = (rng.gen_range(1..=4), rng.gen_range(1..=x));
            random::low_rank_kernel(&mut rng, r, x, k)
        };
        let equivalent = kernel_equivalent(&g, &h).unwrap();
        let mut agree = true;
        for _ in 0..50 {
            let (mu, mu0) = (random_prior(&mut rng, x), random_prior(&mut rng, x));
            let same_g = average(&g, &mu).unwrap().atoms() == average(&g, &mu0).unwrap().atoms();
            let same_h = average(&h, &mu).unwrap().atoms() == average(&h, &mu0).unwrap().atoms();
            agree &= same_g == same_h;
        }
        // Sampled pairs can miss a separating direction, so only one implication is exact.
        if equivalent {
            prop_assert!(agree);
        }
    }

    #[test]
    fn kronecker_preserves_kernel_equality(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let mut gs = Vec::new();
        let mut hs = Vec::new();
        for _ in 0..n {
            let x = rng.gen_range(1..=3);
            let (r, k) = (rng.gen_range(1..=3), rng.gen_range(1..=x));
            let g = random::low_rank_kernel(&mut rng, r, x, k);
            let mut rows = g.matrix().to_rows();
            rows.reverse();
            let h = StochasticKernel::from_rows(rows).unwrap();
            prop_assert!(kernel_equivalent(&g, &h).unwrap());
            gs.push(g);
            hs.push(h);
        }
        prop_assert!(kernel_equivalent(&kronecker_joint(&gs).unwrap(), &kronecker_joint(&hs).unwrap()).unwrap());
    }
}
