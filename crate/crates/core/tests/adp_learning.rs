use hierlqr_test_support::{random_lqr_bounded, random_network};
use hierlqr::adp::{self, TrajectoryLog};
use hierlqr::error::Error;
use hierlqr::hierarchy;
use hierlqr::riccati;
use hierlqr::sim::{integrate, LinearLoop, SimGrid};
use hierlqr::{mats, Mat, Vector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn explore(a: &Mat, b: &Mat, k0: &Mat, x0: &Vector, seed: u64, horizon: f64) -> TrajectoryLog {
    let noise = adp::make_exploration_noise_in_band(b.ncols(), seed, 30, 1.0, [0.5, 50.0]);
    let sys = LinearLoop {
        a,
        b,
        drift: None,
        gain: k0,
        noise: Some(&noise),
    };
    let grid = SimGrid {
        t0: 0.0,
        step: 2.5e-4,
        horizon,
        sample_period: 0.02,
    };
    integrate(&sys, x0, &grid).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn learned_iterates_match_model_based_policy_iteration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, q, r, opt) = random_lqr_bounded(&mut rng, 8, 1, 1e3);
        let n = a.nrows();
        let k0 = riccati::solve_care(&a, &b, &(&q * 10.0), &r, 1e-10).unwrap().k;
        let x0 = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let log = explore(&a, &b, &k0, &x0, seed, 10.0);
        let data = adp::build_adp_data(&log).unwrap();
        prop_assert!(data.rank_ok, "rank {} of {}", data.rank, data.unknowns());
        let eps = 1e-9 * opt.p.norm().max(1.0);
        let learned = adp::adp_learn(&data, &k0, &q, &r, eps, 30).unwrap();
        let oracle = riccati::kleinman_trace(&a, &b, &q, &r, &k0, eps, 30).unwrap();
        for (k, (pl, po)) in learned.p_iterates.iter().zip(&oracle.p_iterates).enumerate() {
            let err = (pl - po).norm();
            prop_assert!(err <= 1e-6, "iteration {k}: {err:.3e}");
        }
        prop_assert!((&learned.k_learned - &opt.k).norm() <= 1e-6);
    }
}

#[test]
fn scalar_unstable_plant() {
    let a = Mat::from_element(1, 1, 1.0);
    let b = Mat::from_element(1, 1, 1.0);
    let id = mats::eye(1);
    let k0 = Mat::from_element(1, 1, 3.0);
    let log = explore(&a, &b, &k0, &Vector::from_element(1, 1.0), 4, 4.0);
    let data = adp::build_adp_data(&log).unwrap();
    let res = adp::adp_learn(&data, &k0, &id, &id, 1e-10, 30).unwrap();
    let root = 1.0 + 2f64.sqrt();
    assert!((res.p_learned[(0, 0)] - root).abs() < 1e-7);
    assert!((res.k_learned[(0, 0)] - root).abs() < 1e-7);
}

#[test]
fn scalar_stable_plant_from_zero_gain() {
    let a = Mat::from_element(1, 1, -1.0);
    let b = Mat::from_element(1, 1, 1.0);
    let id = mats::eye(1);
    let k0 = Mat::zeros(1, 1);
    let log = explore(&a, &b, &k0, &Vector::from_element(1, 1.0), 5, 4.0);
    let data = adp::build_adp_data(&log).unwrap();
    let res = adp::adp_learn(&data, &k0, &id, &id, 1e-10, 30).unwrap();
    assert!((res.k_learned[(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-7);
}

#[test]
fn double_integrator() {
    let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let b = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
    let k0 = Mat::from_row_slice(1, 2, &[2.0, 3.0]);
    let log = explore(&a, &b, &k0, &Vector::from_vec(vec![1.0, -1.0]), 9, 6.0);
    let data = adp::build_adp_data(&log).unwrap();
    let res = adp::adp_learn(&data, &k0, &mats::eye(2), &mats::eye(1), 1e-10, 30).unwrap();
    assert!((res.k_learned[(0, 0)] - 1.0).abs() < 1e-7);
    assert!((res.k_learned[(0, 1)] - 3f64.sqrt()).abs() < 1e-7);
    for w in res.p_iterates.windows(2) {
        assert!(mats::min_sym_eigenvalue(&(&w[0] - &w[1])) > -1e-8);
    }
}

#[test]
fn integrals_match_a_closed_form_trajectory() {
    // x = (cos t, −sin t) under ẋ = [[0, 1], [−1, 0]] x.
    let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let b = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
    let k = Mat::zeros(1, 2);
    let sys = LinearLoop {
        a: &a,
        b: &b,
        drift: None,
        gain: &k,
        noise: None,
    };
    let grid = SimGrid {
        t0: 0.0,
        step: 1e-3,
        horizon: 2.0,
        sample_period: 0.1,
    };
    let log = integrate(&sys, &Vector::from_vec(vec![1.0, 0.0]), &grid).unwrap();
    let data = adp::build_adp_data(&log).unwrap();
    assert_eq!(data.num_rows(), 20);
    let cc = |t: f64| t / 2.0 + (2.0 * t).sin() / 4.0;
    let ss = |t: f64| t / 2.0 - (2.0 * t).sin() / 4.0;
    let cs = |t: f64| -(t.sin().powi(2)) / 2.0;
    for row in 0..20 {
        let (t0, t1) = (0.1 * row as f64, 0.1 * (row + 1) as f64);
        assert!((data.i_xx[(row, 0)] - (cc(t1) - cc(t0))).abs() < 1e-11);
        assert!((data.i_xx[(row, 1)] - (cs(t1) - cs(t0))).abs() < 1e-11);
        assert!((data.i_xx[(row, 2)] - (ss(t1) - ss(t0))).abs() < 1e-11);
        // Energy is conserved, so the diagonal increments cancel.
        assert!((data.delta_xx[(row, 0)] + data.delta_xx[(row, 2)]).abs() < 1e-11);
        assert!(data.i_xu.row(row).amax() == 0.0);
    }
}

#[test]
fn zero_exploration_is_rejected() {
    let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let b = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
    let k0 = Mat::from_row_slice(1, 2, &[2.0, 3.0]);
    let sys = LinearLoop {
        a: &a,
        b: &b,
        drift: None,
        gain: &k0,
        noise: None,
    };
    let grid = SimGrid {
        t0: 0.0,
        step: 1e-3,
        horizon: 5.0,
        sample_period: 0.02,
    };
    let log = integrate(&sys, &Vector::from_vec(vec![1.0, 0.0]), &grid).unwrap();
    let data = adp::build_adp_data(&log).unwrap();
    assert!(!data.rank_ok);
    let err = adp::adp_learn(&data, &k0, &mats::eye(2), &mats::eye(1), 1e-9, 10).unwrap_err();
    assert!(matches!(err, Error::InsufficientExcitation { .. }), "{err}");
}

#[test]
fn learned_global_gain_matches_the_model_based_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let net = random_network(&mut rng, &[2, 3, 2], 2, 1, true);
    let (locals, gain) = hierarchy::synthesize(&net.problems, &net.separated.coupling, 1e-11).unwrap();
    let exact: Vec<Mat> = locals.iter().map(|s| s.k.clone()).collect();
    let lg = adp::compute_global_from_learned(&exact, &net.r_blocks(), &net.separated.coupling).unwrap();
    assert!((&lg.r_tilde - &gain.r_tilde).norm() <= 1e-8 * gain.r_tilde.norm());
    assert!((&lg.k_global - &gain.k_global).norm() <= 1e-8 * gain.k_global.norm());

    let x = Vector::from_fn(gain.k_total.ncols(), |_, _| rng.random_range(-1.0..1.0));
    let u = adp::joint_control(&exact, &gain.k_global, &x).unwrap();
    assert!((u + &gain.k_total * &x).norm() < 1e-12 * x.norm() * gain.k_total.norm());
}

#[test]
fn exploration_noise_respects_band_and_seed() {
    let a = adp::make_exploration_noise_in_band(3, 7, 40, 2.0, [1.0, 9.0]);
    let b = adp::make_exploration_noise_in_band(3, 7, 40, 2.0, [1.0, 9.0]);
    let c = adp::make_exploration_noise_in_band(3, 8, 40, 2.0, [1.0, 9.0]);
    assert_eq!(a.components, b.components);
    assert_ne!(a.components, c.components);
    for ch in &a.components {
        assert_eq!(ch.len(), 40);
        assert!(ch.iter().all(|&(w, _)| (1.0..=9.0).contains(&w)));
    }
    for i in 0..200 {
        assert!(a.eval(0.05 * i as f64).amax() <= 2.0);
    }
}
