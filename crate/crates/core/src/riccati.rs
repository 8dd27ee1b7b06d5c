//! Model-based solvers for the continuous-time LQR problem.
//!
//! Sign convention throughout the crate: the control law is `u = -K x` with
//! `K = R⁻¹BᵀP`.

use nalgebra::LU;

use crate::error::{Error, Result};
use crate::mats::{self, Mat, Vector};

/// Closed loops whose spectral abscissa is not below `-HURWITZ_MARGIN` are
/// treated as unstable.
pub const HURWITZ_MARGIN: f64 = 1e-9;

/// Largest state dimension solved by Kronecker linearization; larger
/// Lyapunov equations go through the matrix sign iteration.
pub const KRON_LYAPUNOV_MAX_DIM: usize = 30;

#[derive(Debug, Clone)]
pub struct CareSolution {
    pub p: Mat,
    pub k: Mat,
    /// Frobenius norm of the Riccati residual at `p`.
    pub residual_norm: f64,
    /// False when `p` is only semidefinite (unobservable cost).
    pub positive_definite: bool,
}

/// Iterates of a Kleinman policy iteration.
#[derive(Debug, Clone)]
pub struct KleinmanTrace {
    /// `P_k` for k = 0, 1, ... (value of the k-th policy).
    pub p_iterates: Vec<Mat>,
    /// `K_k` for k = 0, 1, ...; one longer than `p_iterates`.
    pub gains: Vec<Mat>,
    /// ‖P_k − P_{k−1}‖_F for k ≥ 1.
    pub history: Vec<f64>,
}

fn check_lqr_dims(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<()> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(Error::dims("A", "square", format!("{}x{}", a.nrows(), a.ncols())));
    }
    if b.nrows() != n {
        return Err(Error::dims("B rows", n, b.nrows()));
    }
    if q.shape() != (n, n) {
        return Err(Error::dims("Q", format!("{n}x{n}"), format!("{}x{}", q.nrows(), q.ncols())));
    }
    let m = b.ncols();
    if r.shape() != (m, m) {
        return Err(Error::dims("R", format!("{m}x{m}"), format!("{}x{}", r.nrows(), r.ncols())));
    }
    Ok(())
}

/// `R⁻¹BᵀP`.
pub fn lqr_gain(b: &Mat, r: &Mat, p: &Mat) -> Result<Mat> {
    let chol = nalgebra::Cholesky::new(mats::symmetrize(r))
        .ok_or_else(|| Error::Singular("R is not positive definite".into()))?;
    Ok(chol.solve(&(b.transpose() * p)))
}

/// `PA + AᵀP + Q − PBR⁻¹BᵀP`.
pub fn care_residual(a: &Mat, b: &Mat, q: &Mat, r: &Mat, p: &Mat) -> Result<Mat> {
    let k = lqr_gain(b, r, p)?;
    Ok(p * a + a.transpose() * p + q - p * b * k)
}

/// Solves `AᵀX + XA + Q = 0` for Hurwitz `A`.
pub fn solve_lyapunov(a: &Mat, q: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if !a.is_square() || q.shape() != (n, n) {
        return Err(Error::dims(
            "solve_lyapunov",
            format!("{n}x{n}"),
            format!("A {:?}, Q {:?}", a.shape(), q.shape()),
        ));
    }
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    mats::ensure_hurwitz(a, HURWITZ_MARGIN, "solve_lyapunov")?;

    let solve = |rhs: &Mat| -> Result<Mat> {
        if n <= KRON_LYAPUNOV_MAX_DIM {
            lyapunov_kron(a, rhs)
        } else {
            lyapunov_sign(a, rhs)
        }
    };

    let mut x = mats::symmetrize(&solve(q)?);
    // One step of residual correction.
    let res = a.transpose() * &x + &x * a + q;
    let res_norm = res.norm();
    if res_norm > 0.0 {
        let dx = mats::symmetrize(&solve(&res)?);
        let candidate = &x + dx;
        let cand_res = (a.transpose() * &candidate + &candidate * a + q).norm();
        if cand_res < res_norm {
            x = candidate;
        }
    }
    Ok(x)
}

fn lyapunov_kron(a: &Mat, q: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let at = a.transpose();
    let id = mats::eye(n);
    // Column-major vec: vec(AᵀX) = (I⊗Aᵀ)vec X, vec(XA) = (Aᵀ⊗I)vec X.
    let op = mats::kron(&id, &at) + mats::kron(&at, &id);
    let rhs = Vector::from_column_slice(q.as_slice()) * -1.0;
    let sol = LU::new(op)
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("Lyapunov operator".into()))?;
    Ok(Mat::from_column_slice(n, n, sol.as_slice()))
}

fn log_abs_det(lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    lu.u().diagonal().iter().map(|d| d.abs().ln()).sum()
}

/// Scaled Newton iteration for the matrix sign of a Hurwitz `A`, carrying
/// the Lyapunov right-hand side along.
fn lyapunov_sign(a: &Mat, q: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let mut ak = a.clone();
    let mut qk = q.clone();
    let mut scaling = true;
    let mut prev_step = f64::INFINITY;
    for _ in 0..100 {
        let lu = LU::new(ak.clone());
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::Singular("sign iteration (Lyapunov)".into()))?;
        let c = if scaling {
            (-log_abs_det(&lu) / n as f64).exp()
        } else {
            1.0
        };
        let next_a = (&ak * c + &inv / c) * 0.5;
        let next_q = (&qk * c + inv.transpose() * &qk * &inv / c) * 0.5;
        let step = (&next_a - &ak).norm() / next_a.norm();
        ak = next_a;
        qk = next_q;
        if step < 1e-14 || (!scaling && step < 1e-8 && step >= prev_step) {
            return Ok(qk * 0.5);
        }
        if step < 1e-2 {
            scaling = false;
        }
        prev_step = step;
    }
    Err(Error::NoStabilizingSolution(
        "Lyapunov sign iteration did not converge".into(),
    ))
}

/// Stabilizing solution of the continuous-time ARE.
///
/// The stable invariant subspace of the Hamiltonian is extracted with the
/// scaled matrix-sign iteration, then polished with Newton (Kleinman) steps.
/// The residual must satisfy `‖res‖_F ≤ tol·max(1, ‖P‖_F)`.
pub fn solve_care(a: &Mat, b: &Mat, q: &Mat, r: &Mat, tol: f64) -> Result<CareSolution> {
    check_lqr_dims(a, b, q, r)?;
    let n = a.nrows();
    let r_inv = mats::spd_inverse(r, "R")?.0;
    let g = b * r_inv * b.transpose();

    let mut h = Mat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let w = hamiltonian_sign(&h)?;
    let id = mats::eye(n);
    let mut lhs = Mat::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(w.view((n, n), (n, n)) + &id));
    let mut rhs = Mat::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(w.view((0, 0), (n, n)) + &id)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w.view((n, 0), (n, n))));
    let mut p = mats::symmetrize(&mats::lstsq_mat(&lhs, &rhs).map_err(|_| {
        Error::NoStabilizingSolution("stable invariant subspace is not a graph".into())
    })?);

    let mut residual = care_residual(a, b, q, r, &p)?.norm();
    for step in 0..8 {
        let k = lqr_gain(b, r, &p)?;
        let closed = a - b * &k;
        if !mats::is_hurwitz(&closed, HURWITZ_MARGIN)? {
            return Err(Error::NoStabilizingSolution(format!(
                "closed loop A - BK is not Hurwitz (spectral abscissa {:.3e})",
                mats::spectral_abscissa(&closed)?
            )));
        }
        let converged = residual <= 1e-3 * tol * p.norm().max(1.0);
        if step > 0 && converged {
            break;
        }
        let cand = solve_lyapunov(&closed, &(q + k.transpose() * r * &k))?;
        let cand_res = care_residual(a, b, q, r, &cand)?.norm();
        if step > 0 && cand_res >= residual {
            break;
        }
        p = cand;
        residual = cand_res;
    }
    finish_care(a, b, q, r, p, tol)
}

fn finish_care(a: &Mat, b: &Mat, q: &Mat, r: &Mat, p: Mat, tol: f64) -> Result<CareSolution> {
    let residual_norm = care_residual(a, b, q, r, &p)?.norm();
    if !mats::all_finite(&p) || residual_norm > tol * p.norm().max(1.0) {
        return Err(Error::NoStabilizingSolution(format!(
            "Riccati residual {residual_norm:.3e} exceeds tolerance {tol:.1e}"
        )));
    }
    let k = lqr_gain(b, r, &p)?;
    let closed = a - b * &k;
    mats::ensure_hurwitz(&closed, HURWITZ_MARGIN, "closed loop A - BK")?;
    let positive_definite = mats::min_sym_eigenvalue(&p) > 1e-12 * p.norm().max(1.0);
    Ok(CareSolution {
        p,
        k,
        residual_norm,
        positive_definite,
    })
}

fn hamiltonian_sign(h: &Mat) -> Result<Mat> {
    let dim = h.nrows();
    let mut z = h.clone();
    let mut scaling = true;
    let mut prev_step = f64::INFINITY;
    for _ in 0..100 {
        let lu = LU::new(z.clone());
        let inv = lu.try_inverse().ok_or_else(|| {
            Error::NoStabilizingSolution("Hamiltonian has eigenvalues on the imaginary axis".into())
        })?;
        let c = if scaling {
            (-log_abs_det(&lu) / dim as f64).exp()
        } else {
            1.0
        };
        let next = (&z * c + inv / c) * 0.5;
        let step = (&next - &z).norm() / next.norm();
        z = next;
        if !mats::all_finite(&z) {
            break;
        }
        // Stagnation at rounding level counts as converged; Newton polishing follows.
        if step < 1e-13 || (!scaling && step < 1e-8 && step >= prev_step) {
            return Ok(z);
        }
        if step < 1e-2 {
            scaling = false;
        }
        prev_step = step;
    }
    Err(Error::NoStabilizingSolution(
        "sign iteration on the Hamiltonian did not converge (eigenvalues near the imaginary axis)"
            .into(),
    ))
}

/// Kleinman policy iteration from a stabilizing `k0`, keeping every iterate.
pub fn kleinman_trace(
    a: &Mat,
    b: &Mat,
    q: &Mat,
    r: &Mat,
    k0: &Mat,
    eps: f64,
    max_iters: usize,
) -> Result<KleinmanTrace> {
    check_lqr_dims(a, b, q, r)?;
    if k0.shape() != (b.ncols(), a.nrows()) {
        return Err(Error::dims(
            "K0",
            format!("{}x{}", b.ncols(), a.nrows()),
            format!("{}x{}", k0.nrows(), k0.ncols()),
        ));
    }
    mats::ensure_hurwitz(&(a - b * k0), HURWITZ_MARGIN, "initial gain A - BK0")?;

    let mut trace = KleinmanTrace {
        p_iterates: Vec::new(),
        gains: vec![k0.clone()],
        history: Vec::new(),
    };
    for _ in 0..=max_iters {
        let k = trace.gains.last().expect("non-empty");
        let closed = a - b * k;
        let p = solve_lyapunov(&closed, &(q + k.transpose() * r * k))?;
        let next_k = lqr_gain(b, r, &p)?;
        if let Some(prev) = trace.p_iterates.last() {
            let step = (&p - prev).norm();
            trace.history.push(step);
            trace.p_iterates.push(p);
            trace.gains.push(next_k);
            if step < eps {
                return Ok(trace);
            }
        } else {
            trace.p_iterates.push(p);
            trace.gains.push(next_k);
        }
    }
    let last = trace.p_iterates.pop().unwrap_or_else(|| Mat::zeros(0, 0));
    Err(Error::MaxIterations {
        iters: max_iters,
        last_step: trace.history.last().copied().unwrap_or(f64::NAN),
        history: trace.history,
        last_iterate: Box::new(last),
    })
}

/// Kleinman policy iteration: `P_k` solves the Lyapunov equation of
/// `A − BK_k` with weight `Q + K_kᵀRK_k`, then `K_{k+1} = R⁻¹BᵀP_k`.
/// Stops when `‖P_k − P_{k−1}‖_F < eps`.
pub fn kleinman_iterate(
    a: &Mat,
    b: &Mat,
    q: &Mat,
    r: &Mat,
    k0: &Mat,
    eps: f64,
    max_iters: usize,
) -> Result<CareSolution> {
    let trace = kleinman_trace(a, b, q, r, k0, eps, max_iters)?;
    let p = trace.p_iterates.last().cloned().expect("at least one iterate");
    let residual_norm = care_residual(a, b, q, r, &p)?.norm();
    let k = lqr_gain(b, r, &p)?;
    let positive_definite = mats::min_sym_eigenvalue(&p) > 1e-12 * p.norm().max(1.0);
    Ok(CareSolution {
        p,
        k,
        residual_norm,
        positive_definite,
    })
}

/// Infinite-horizon cost `∫ xᵀQx + uᵀRu dt` under `u = −Kx` from `x0`.
pub fn closed_loop_cost(a: &Mat, b: &Mat, q: &Mat, r: &Mat, k: &Mat, x0: &Vector) -> Result<f64> {
    check_lqr_dims(a, b, q, r)?;
    if x0.len() != a.nrows() {
        return Err(Error::dims("x0", a.nrows(), x0.len()));
    }
    let x = closed_loop_value(a, b, q, r, k)?;
    Ok(x0.dot(&(&x * x0)))
}

/// Value matrix of a fixed stabilizing gain.
pub fn closed_loop_value(a: &Mat, b: &Mat, q: &Mat, r: &Mat, k: &Mat) -> Result<Mat> {
    let closed = a - b * k;
    solve_lyapunov(&closed, &(q + k.transpose() * r * k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn double_integrator() -> (Mat, Mat, Mat, Mat) {
        (
            Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            Mat::from_row_slice(2, 1, &[0.0, 1.0]),
            mats::eye(2),
            mats::eye(1),
        )
    }

    #[test]
    fn care_double_integrator_analytic() {
        let (a, b, q, r) = double_integrator();
        let s3 = 3f64.sqrt();
        let sol = solve_care(&a, &b, &q, &r, 1e-10).unwrap();
        assert_relative_eq!(sol.p, Mat::from_row_slice(2, 2, &[s3, 1.0, 1.0, s3]), epsilon = 1e-12);
        assert_relative_eq!(sol.k, Mat::from_row_slice(1, 2, &[1.0, s3]), epsilon = 1e-12);
        assert!(sol.positive_definite);
    }

    #[test]
    fn care_scalar_root() {
        let one = Mat::from_element(1, 1, 1.0);
        let sol = solve_care(&(-&one), &one, &one, &one, 1e-12).unwrap();
        let root = 2f64.sqrt() - 1.0;
        assert_relative_eq!(sol.p[(0, 0)], root, epsilon = 1e-14);
        assert_relative_eq!(sol.k[(0, 0)], root, epsilon = 1e-14);
    }

    #[test]
    fn care_zero_cost_on_hurwitz_plant() {
        let a = Mat::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let b = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
        let sol = solve_care(&a, &b, &Mat::zeros(2, 2), &mats::eye(1), 1e-10).unwrap();
        assert!(sol.p.amax() < 1e-14);
        assert!(sol.k.amax() < 1e-14);
        assert!(!sol.positive_definite);
    }

    #[test]
    fn care_rejects_unstabilizable() {
        // Unstable mode with no actuation.
        let a = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let b = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
        let err = solve_care(&a, &b, &mats::eye(2), &mats::eye(1), 1e-10).unwrap_err();
        assert!(matches!(err, Error::NoStabilizingSolution(_) | Error::NotHurwitz { .. }));
    }

    #[test]
    fn lyapunov_examples() {
        let x = solve_lyapunov(&Mat::from_element(1, 1, -1.0), &Mat::from_element(1, 1, 2.0)).unwrap();
        assert_relative_eq!(x[(0, 0)], 1.0, epsilon = 1e-14);

        let x = solve_lyapunov(&(-mats::eye(2)), &mats::eye(2)).unwrap();
        assert_relative_eq!(x, mats::eye(2) * 0.5, epsilon = 1e-14);

        let (a, b, q, _) = double_integrator();
        let s3 = 3f64.sqrt();
        let k = Mat::from_row_slice(1, 2, &[1.0, s3]);
        let x = solve_lyapunov(&(&a - &b * &k), &(q + k.transpose() * &k)).unwrap();
        assert_relative_eq!(x, Mat::from_row_slice(2, 2, &[s3, 1.0, 1.0, s3]), epsilon = 1e-12);

        assert!(matches!(
            solve_lyapunov(&a, &mats::eye(2)),
            Err(Error::NotHurwitz { .. })
        ));
    }

    #[test]
    fn lyapunov_sign_path_matches_kron_path() {
        // Same equation through both routes.
        let n = 8;
        let a = Mat::from_fn(n, n, |i, j| {
            if i == j {
                -2.0 - i as f64 * 0.1
            } else {
                ((i * 7 + j * 3) % 5) as f64 * 0.1 - 0.2
            }
        });
        let q = Mat::from_fn(n, n, |i, j| if i == j { 1.0 + i as f64 } else { 0.1 });
        let kron_x = lyapunov_kron(&a, &q).unwrap();
        let sign_x = lyapunov_sign(&a, &q).unwrap();
        assert!((&kron_x - &sign_x).norm() < 1e-10 * kron_x.norm());
    }

    #[test]
    fn kleinman_examples() {
        let (a, b, q, r) = double_integrator();
        let s3 = 3f64.sqrt();
        let sol = kleinman_iterate(&a, &b, &q, &r, &Mat::from_row_slice(1, 2, &[1.0, 1.0]), 1e-12, 10)
            .unwrap();
        assert_relative_eq!(sol.k, Mat::from_row_slice(1, 2, &[1.0, s3]), epsilon = 1e-10);

        let opt = Mat::from_row_slice(1, 2, &[1.0, s3]);
        let trace = kleinman_trace(&a, &b, &q, &r, &opt, 1e-10, 10).unwrap();
        assert_eq!(trace.history.len(), 1);
        assert_relative_eq!(trace.p_iterates[0], trace.p_iterates[1], epsilon = 1e-12);

        let err = kleinman_iterate(&a, &b, &q, &r, &Mat::zeros(1, 2), 1e-10, 10).unwrap_err();
        assert!(matches!(err, Error::NotHurwitz { .. }));
    }

    #[test]
    fn kleinman_max_iters_carries_last_iterate() {
        let (a, b, q, r) = double_integrator();
        let err = kleinman_iterate(&a, &b, &q, &r, &Mat::from_row_slice(1, 2, &[5.0, 0.5]), 1e-30, 2)
            .unwrap_err();
        match err {
            Error::MaxIterations { history, last_iterate, .. } => {
                assert_eq!(history.len(), 2);
                assert_eq!(last_iterate.shape(), (2, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn closed_loop_cost_examples() {
        let one = Mat::from_element(1, 1, 1.0);
        let root = 2f64.sqrt() - 1.0;
        let cost = closed_loop_cost(
            &(-&one),
            &one,
            &one,
            &one,
            &Mat::from_element(1, 1, root),
            &Vector::from_element(1, 1.0),
        )
        .unwrap();
        assert_relative_eq!(cost, root, epsilon = 1e-14);

        let (a, b, q, r) = double_integrator();
        let sol = solve_care(&a, &b, &q, &r, 1e-10).unwrap();
        let x0 = Vector::from_vec(vec![0.3, -1.2]);
        let opt = closed_loop_cost(&a, &b, &q, &r, &sol.k, &x0).unwrap();
        assert_relative_eq!(opt, x0.dot(&(&sol.p * &x0)), epsilon = 1e-12);
        let worse = closed_loop_cost(&a, &b, &q, &r, &Mat::from_row_slice(1, 2, &[2.0, 1.0]), &x0)
            .unwrap();
        assert!(worse >= opt);
        assert!(closed_loop_cost(&a, &b, &q, &r, &Mat::zeros(1, 2), &x0).is_err());
    }
}
