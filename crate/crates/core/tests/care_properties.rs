use hierlqr_test_support::{random_lqr, random_mat, random_spd};
use hierlqr::riccati::{self, HURWITZ_MARGIN};
use hierlqr::{mats, Vector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn care_solution_is_stabilizing_and_accurate(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, q, r) = random_lqr(&mut rng, 30, 3);
        let sol = riccati::solve_care(&a, &b, &q, &r, 1e-9).unwrap();
        let resid = riccati::care_residual(&a, &b, &q, &r, &sol.p).unwrap().norm();
        prop_assert!(resid <= 1e-8 * sol.p.norm().max(1.0), "residual {resid}");
        prop_assert!(mats::asymmetry(&sol.p) == 0.0);
        prop_assert!(mats::is_spd(&sol.p, 0.0).unwrap());
        prop_assert!(mats::is_hurwitz(&(&a - &b * &sol.k), HURWITZ_MARGIN).unwrap());
    }

    #[test]
    fn kleinman_reaches_the_care_solution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, q, r) = random_lqr(&mut rng, 8, 2);
        // A gain designed with a heavier state weight is stabilizing but suboptimal.
        let k0 = riccati::solve_care(&a, &b, &(&q * 10.0), &r, 1e-10).unwrap().k;
        let opt = riccati::solve_care(&a, &b, &q, &r, 1e-10).unwrap();
        let scale = opt.p.norm().max(1.0);
        let trace = riccati::kleinman_trace(&a, &b, &q, &r, &k0, 1e-9 * scale, 50).unwrap();
        let last = trace.p_iterates.last().unwrap();
        prop_assert!((last - &opt.p).norm() <= 1e-7 * scale);
        // Policy iteration produces monotonically non-increasing value matrices.
        for w in trace.p_iterates.windows(2) {
            prop_assert!(mats::min_sym_eigenvalue(&(&w[0] - &w[1])) >= -1e-8 * w[0].norm());
        }
    }

    #[test]
    fn lyapunov_residual_is_small(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=40);
        let g = random_mat(&mut rng, n, n);
        let shift = mats::spectral_abscissa(&g).unwrap() + 0.5;
        let a = &g - mats::eye(n) * shift;
        let q = random_spd(&mut rng, n);
        let x = riccati::solve_lyapunov(&a, &q).unwrap();
        let resid = (a.transpose() * &x + &x * &a + &q).norm();
        prop_assert!(resid <= 1e-9 * x.norm().max(1.0), "residual {resid}");
        prop_assert!(mats::is_spd(&x, 0.0).unwrap());
    }

    #[test]
    fn closed_loop_cost_is_minimized_by_the_care_gain(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, q, r) = random_lqr(&mut rng, 6, 1);
        let n = a.nrows();
        let x0 = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let opt = riccati::solve_care(&a, &b, &q, &r, 1e-10).unwrap();
        let j_opt = riccati::closed_loop_cost(&a, &b, &q, &r, &opt.k, &x0).unwrap();
        let direct = x0.dot(&(&opt.p * &x0));
        prop_assert!((j_opt - direct).abs() <= 1e-6 * j_opt.max(1.0), "{j_opt} vs {direct}");
        let k_other = riccati::solve_care(&a, &b, &(&q * 3.0), &r, 1e-10).unwrap().k;
        let j_other = riccati::closed_loop_cost(&a, &b, &q, &r, &k_other, &x0).unwrap();
        prop_assert!(j_other >= j_opt - 1e-9 * j_opt.max(1.0));
    }
}
