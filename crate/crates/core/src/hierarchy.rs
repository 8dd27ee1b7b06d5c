//! Cost separation into group-local and centroid terms, and the approximate
//! hierarchical controller built from decoupled per-group Riccati equations.
//!
//! The coupling term is always realized as the congruence
//! `(M⊗I_n)ᵀ L_w (M⊗I_n)`, where `M` averages agent states into group
//! centroids and `L_w` is the Nn×Nn weighted Laplacian.
//!
//! The hierarchical gain is `K = R⁻¹ℬᵀ𝒫 + R̃*ℬᵀ𝒫` applied as `u = −K x`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mats::{self, Mat, Vector};
use crate::model::{CostSpec, GroupTopology, NetworkModel};
use crate::riccati::{self, CareSolution};

/// Condition number of `BⱼᵀPⱼPⱼBⱼ` above which a warning is logged.
pub const GRAM_COND_WARN: f64 = 1e10;

#[derive(Debug, Clone)]
pub struct SeparatedCost {
    pub q_bar: Mat,
    pub q_tilde: Mat,
    pub l_w: Mat,
    pub coupling: Mat,
    pub q_total: Mat,
    pub m_centroid: Mat,
}

/// A plain LQR problem `(A, B, Q, R)`.
#[derive(Debug, Clone)]
pub struct LqrProblem {
    pub a: Mat,
    pub b: Mat,
    pub q: Mat,
    pub r: Mat,
}

#[derive(Debug, Clone)]
pub struct RTilde {
    pub r_tilde: Mat,
    pub coupling_residual: f64,
    /// Worst condition number over the per-group Gram blocks.
    pub max_gram_condition: f64,
}

#[derive(Debug, Clone)]
pub struct HierarchicalGain {
    pub p_blocks: Vec<Mat>,
    pub p_cal: Mat,
    pub r_tilde: Mat,
    pub k_local: Mat,
    pub k_global: Mat,
    pub k_total: Mat,
    pub coupling_residual: f64,
    /// `ℛ⁻¹ = R⁻¹ + R̃*`.
    pub r_eff_inv: Mat,
    pub state_dims: Vec<usize>,
    pub input_dims: Vec<usize>,
}

impl HierarchicalGain {
    /// `ℛ`, when `R⁻¹ + R̃*` is invertible.
    pub fn r_effective(&self) -> Option<Mat> {
        self.r_eff_inv.clone().try_inverse()
    }
}

#[derive(Debug, Clone)]
pub struct SuboptimalityReport {
    pub j_opt: f64,
    pub j_hier: f64,
    pub ratio: f64,
    pub coupling_residual: f64,
    /// ‖Q̃ − ΠQ̃Π‖_F with Π the per-group projection onto range(PⱼBⱼ), i.e.
    /// the gap between Q̃ and Q̃′ lifted back to state coordinates.
    pub q_tilde_gap: f64,
    pub k_opt: Mat,
}

/// N×p averaging matrix: row j holds 1/pⱼ over the agents of group j.
pub fn centroid_matrix(group_sizes: &[usize]) -> Mat {
    let p: usize = group_sizes.iter().sum();
    let mut m = Mat::zeros(group_sizes.len(), p);
    let mut col = 0;
    for (j, &pj) in group_sizes.iter().enumerate() {
        for _ in 0..pj {
            m[(j, col)] = 1.0 / pj as f64;
            col += 1;
        }
    }
    m
}

/// `L_w = (D⊗Iₙ) diag(𝒬ₑ) (Dᵀ⊗Iₙ)`.
pub fn build_weighted_laplacian(topology: &GroupTopology, n: usize) -> Result<Mat> {
    topology.check()?;
    for (e, w) in topology.edge_weights.iter().enumerate() {
        if w.shape() != (n, n) {
            return Err(Error::dims("edge weight", format!("{n}x{n}"), format!("edge {e}: {:?}", w.shape())));
        }
    }
    let big_n = topology.num_groups();
    if topology.edges.is_empty() {
        return Ok(Mat::zeros(big_n * n, big_n * n));
    }
    let d = mats::kron(&topology.incidence()?, &mats::eye(n));
    let weights = mats::block_diag(&topology.edge_weights)?;
    Ok(&d * weights * d.transpose())
}

pub fn build_separated_cost(cost: &CostSpec, n: usize) -> Result<SeparatedCost> {
    let sizes = &cost.topology.group_sizes;
    if cost.q_bar_blocks.len() != sizes.len() {
        return Err(Error::dims("Q̄ blocks", sizes.len(), cost.q_bar_blocks.len()));
    }
    for (j, (q, &pj)) in cost.q_bar_blocks.iter().zip(sizes).enumerate() {
        if q.shape() != (n * pj, n * pj) {
            return Err(Error::dims("Q̄_j", n * pj, format!("{:?}", q.shape())).in_group(j));
        }
    }
    let q_bar = mats::block_diag(&cost.q_bar_blocks)?;
    let m_centroid = centroid_matrix(sizes);
    let m_kron = mats::kron(&m_centroid, &mats::eye(n));
    let q_tilde = m_kron.transpose() * &m_kron;
    let l_w = build_weighted_laplacian(&cost.topology, n)?;
    let coupling = mats::symmetrize(&(m_kron.transpose() * &l_w * &m_kron));
    let q_total = &q_bar + &coupling;

    // x_avᵀ L_w x_av must equal xᵀ (coupling) x.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..5 {
        let x = Vector::from_fn(q_bar.nrows(), |_, _| rng.random_range(-1.0..1.0));
        let x_av = &m_kron * &x;
        let lhs = x_av.dot(&(&l_w * &x_av));
        let rhs = x.dot(&(&coupling * &x));
        if (lhs - rhs).abs() > 1e-10 * lhs.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "centroid cost identity violated: {lhs} vs {rhs}"
            )));
        }
    }

    Ok(SeparatedCost {
        q_bar,
        q_tilde,
        l_w,
        coupling,
        q_total,
        m_centroid,
    })
}

/// Decoupled per-group Riccati solves, run in parallel and returned in
/// group order.
pub fn solve_local_problems(problems: &[LqrProblem], tol: f64) -> Result<Vec<CareSolution>> {
    problems
        .par_iter()
        .enumerate()
        .map(|(j, pr)| riccati::solve_care(&pr.a, &pr.b, &pr.q, &pr.r, tol).map_err(|e| e.in_group(j)))
        .collect()
}

pub fn solve_local(model: &NetworkModel, cost: &CostSpec, tol: f64) -> Result<Vec<CareSolution>> {
    cost.check_against(model)?;
    let problems: Vec<LqrProblem> = model
        .groups
        .iter()
        .zip(cost.q_bar_blocks.iter().zip(&cost.r_blocks))
        .map(|(g, (q, r))| LqrProblem {
            a: g.a.clone(),
            b: g.b.clone(),
            q: q.clone(),
            r: r.clone(),
        })
        .collect();
    solve_local_problems(&problems, tol)
}

/// `Zⱼ = PⱼBⱼ (BⱼᵀPⱼPⱼBⱼ)⁻¹` per group, with the Gram condition numbers.
fn pseudo_inverse_blocks(pb_blocks: &[Mat]) -> Result<(Vec<Mat>, f64)> {
    let mut worst = 1.0f64;
    let mut out = Vec::with_capacity(pb_blocks.len());
    for (j, pb) in pb_blocks.iter().enumerate() {
        let gram = pb.transpose() * pb;
        let (gram_inv, cond) = mats::spd_inverse(&gram, "BᵀPPB (rank-deficient actuation)")
            .map_err(|e| e.in_group(j))?;
        if cond > GRAM_COND_WARN {
            log::warn!("group {j}: BᵀPPB condition number {cond:.3e}");
        }
        worst = worst.max(cond);
        out.push(pb * gram_inv);
    }
    Ok((out, worst))
}

/// Least-squares `R̃*` so that `𝒫ℬR̃*ℬᵀ𝒫 ≈ coupling`, computed from the
/// per-group blocks `Pⱼ` and `Bⱼ`.
pub fn compute_r_tilde(p_blocks: &[Mat], b_blocks: &[Mat], coupling: &Mat) -> Result<RTilde> {
    if p_blocks.len() != b_blocks.len() || p_blocks.is_empty() {
        return Err(Error::dims("P/B blocks", p_blocks.len(), b_blocks.len()));
    }
    let pb_blocks: Vec<Mat> = p_blocks
        .iter()
        .zip(b_blocks)
        .map(|(p, b)| {
            if p.ncols() != b.nrows() {
                Err(Error::dims("P_j B_j", p.ncols(), b.nrows()))
            } else {
                Ok(p * b)
            }
        })
        .collect::<Result<_>>()?;
    let pb = mats::block_diag(&pb_blocks)?;
    if coupling.shape() != (pb.nrows(), pb.nrows()) {
        return Err(Error::dims("coupling", pb.nrows(), format!("{:?}", coupling.shape())));
    }
    let (z_blocks, max_gram_condition) = pseudo_inverse_blocks(&pb_blocks)?;
    let z = mats::block_diag(&z_blocks)?;
    let r_tilde = mats::symmetrize(&(z.transpose() * coupling * &z));
    let coupling_residual = (&pb * &r_tilde * pb.transpose() - coupling).norm();
    Ok(RTilde {
        r_tilde,
        coupling_residual,
        max_gram_condition,
    })
}

pub fn assemble_gain(
    locals: &[CareSolution],
    r_tilde: &RTilde,
    r_blocks: &[Mat],
    b_blocks: &[Mat],
) -> Result<HierarchicalGain> {
    if locals.len() != r_blocks.len() || locals.len() != b_blocks.len() {
        return Err(Error::dims("group count", locals.len(), format!("{} R, {} B", r_blocks.len(), b_blocks.len())));
    }
    let p_blocks: Vec<Mat> = locals.iter().map(|s| s.p.clone()).collect();
    let p_cal = mats::block_diag(&p_blocks)?;
    let b_net = mats::block_diag(b_blocks)?;
    let r_net = mats::block_diag(r_blocks)?;
    let bt_p = b_net.transpose() * &p_cal;
    let k_local = mats::block_diag(&locals.iter().map(|s| s.k.clone()).collect::<Vec<_>>())?;
    if r_tilde.r_tilde.shape() != (bt_p.nrows(), bt_p.nrows()) {
        return Err(Error::dims("R̃*", bt_p.nrows(), format!("{:?}", r_tilde.r_tilde.shape())));
    }
    let k_global = &r_tilde.r_tilde * &bt_p;
    let k_total = &k_local + &k_global;
    let r_eff_inv = mats::spd_inverse(&r_net, "R")?.0 + &r_tilde.r_tilde;
    Ok(HierarchicalGain {
        state_dims: p_blocks.iter().map(|p| p.nrows()).collect(),
        input_dims: b_blocks.iter().map(|b| b.ncols()).collect(),
        p_blocks,
        p_cal,
        r_tilde: r_tilde.r_tilde.clone(),
        k_local,
        k_global,
        k_total,
        coupling_residual: r_tilde.coupling_residual,
        r_eff_inv,
    })
}

/// `Q̃′ = diag{(BᵢᵀPᵢPᵢBᵢ)⁻¹BᵢᵀPᵢ} Q̃ diag{PᵢBᵢ(BᵢᵀPᵢPᵢBᵢ)⁻¹}`.
pub fn compute_q_tilde_prime(p_blocks: &[Mat], b_blocks: &[Mat], q_tilde: &Mat) -> Result<Mat> {
    let pb: Vec<Mat> = p_blocks.iter().zip(b_blocks).map(|(p, b)| p * b).collect();
    let z = mats::block_diag(&pseudo_inverse_blocks(&pb)?.0)?;
    if q_tilde.shape() != (z.nrows(), z.nrows()) {
        return Err(Error::dims("Q̃", z.nrows(), format!("{:?}", q_tilde.shape())));
    }
    Ok(mats::symmetrize(&(z.transpose() * q_tilde * z)))
}

/// `‖Q̃ − ΠQ̃Π‖_F`, the Q̃ → Q̃′ loss expressed in state coordinates.
pub fn q_tilde_gap(p_blocks: &[Mat], b_blocks: &[Mat], q_tilde: &Mat) -> Result<f64> {
    let pb: Vec<Mat> = p_blocks.iter().zip(b_blocks).map(|(p, b)| p * b).collect();
    let z = pseudo_inverse_blocks(&pb)?.0;
    let proj: Vec<Mat> = pb.iter().zip(&z).map(|(pb, z)| z * pb.transpose()).collect();
    let proj = mats::block_diag(&proj)?;
    Ok((q_tilde - &proj * q_tilde * &proj).norm())
}

/// Full model-based pipeline: local Riccati solves, `R̃*`, gain assembly.
pub fn synthesize(problems: &[LqrProblem], coupling: &Mat, tol: f64) -> Result<(Vec<CareSolution>, HierarchicalGain)> {
    let locals = solve_local_problems(problems, tol)?;
    let p_blocks: Vec<Mat> = locals.iter().map(|s| s.p.clone()).collect();
    let b_blocks: Vec<Mat> = problems.iter().map(|p| p.b.clone()).collect();
    let r_blocks: Vec<Mat> = problems.iter().map(|p| p.r.clone()).collect();
    let rt = compute_r_tilde(&p_blocks, &b_blocks, coupling)?;
    let gain = assemble_gain(&locals, &rt, &r_blocks, &b_blocks)?;
    Ok((locals, gain))
}

/// Compares the hierarchical gain against the centralized optimum on the
/// original cost `(Q, R)` from the initial state `x0`.
pub fn suboptimality_report(
    plant: &LqrProblem,
    gain: &HierarchicalGain,
    b_blocks: &[Mat],
    q_tilde: &Mat,
    x0: &Vector,
    tol: f64,
) -> Result<SuboptimalityReport> {
    let opt = riccati::solve_care(&plant.a, &plant.b, &plant.q, &plant.r, tol)?;
    let j_opt = riccati::closed_loop_cost(&plant.a, &plant.b, &plant.q, &plant.r, &opt.k, x0)?;
    let j_hier = riccati::closed_loop_cost(&plant.a, &plant.b, &plant.q, &plant.r, &gain.k_total, x0)?;
    let ratio = if j_opt > 0.0 { j_hier / j_opt } else { 1.0 };
    Ok(SuboptimalityReport {
        j_opt,
        j_hier,
        ratio,
        coupling_residual: gain.coupling_residual,
        q_tilde_gap: q_tilde_gap(&gain.p_blocks, b_blocks, q_tilde)?,
        k_opt: opt.k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentDynamics, GroupModel};
    use approx::assert_relative_eq;

    fn scalar_topology(sizes: Vec<usize>, edges: Vec<(usize, usize)>, w: f64) -> GroupTopology {
        let weights = edges.iter().map(|_| Mat::from_element(1, 1, w)).collect();
        GroupTopology::new(sizes, edges, weights).unwrap()
    }

    #[test]
    fn weighted_laplacian_single_edge_and_empty() {
        let w = 0.7;
        let topo = GroupTopology::new(vec![1, 1], vec![(0, 1)], vec![mats::eye(2) * w]).unwrap();
        let l = build_weighted_laplacian(&topo, 2).unwrap();
        let i = mats::eye(2) * w;
        let expected = mats::block_diag(&[i.clone(), i.clone()]).unwrap()
            - mats::kron(&Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), &i);
        assert_relative_eq!(l, expected, epsilon = 1e-15);

        let none = GroupTopology::new(vec![2, 3], vec![], vec![]).unwrap();
        assert_eq!(build_weighted_laplacian(&none, 2).unwrap(), Mat::zeros(4, 4));
    }

    #[test]
    fn weighted_laplacian_star_diagonal() {
        // Star with hub 3 and weight 0.1·SᵀS, S = [I₂ 0₂] on a 4-dim state.
        let s = Mat::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let w = s.transpose() * &s * 0.1;
        let topo = GroupTopology::new(vec![3, 4, 4, 3], vec![(0, 3), (1, 3), (2, 3)], vec![w.clone(); 3]).unwrap();
        let l = build_weighted_laplacian(&topo, 4).unwrap();
        for (j, deg) in [1.0, 1.0, 1.0, 3.0].iter().enumerate() {
            let blk = mats::block(&l, &[4; 4], &[4; 4], j, j);
            assert_relative_eq!(blk, &w * *deg, epsilon = 1e-15);
        }
        assert_relative_eq!(mats::block(&l, &[4; 4], &[4; 4], 0, 3), -&w, epsilon = 1e-15);
        assert_eq!(mats::block(&l, &[4; 4], &[4; 4], 0, 1), Mat::zeros(4, 4));
    }

    #[test]
    fn mismatched_weight_count_is_error() {
        let topo = GroupTopology {
            group_sizes: vec![1, 1],
            edges: vec![(0, 1)],
            edge_weights: vec![],
        };
        assert!(build_weighted_laplacian(&topo, 1).is_err());
    }

    #[test]
    fn separated_cost_examples() {
        let single = CostSpec {
            q_bar_blocks: vec![mats::eye(3)],
            r_blocks: vec![mats::eye(3)],
            topology: scalar_topology(vec![3], vec![], 1.0),
        };
        let sep = build_separated_cost(&single, 1).unwrap();
        assert_eq!(sep.coupling, Mat::zeros(3, 3));
        assert_eq!(sep.q_total, sep.q_bar);

        let w = 2.5;
        let two = CostSpec {
            q_bar_blocks: vec![mats::eye(1), mats::eye(1)],
            r_blocks: vec![mats::eye(1), mats::eye(1)],
            topology: scalar_topology(vec![1, 1], vec![(0, 1)], w),
        };
        let sep = build_separated_cost(&two, 1).unwrap();
        assert_relative_eq!(sep.coupling, Mat::from_row_slice(2, 2, &[w, -w, -w, w]), epsilon = 1e-15);

        // p = (2, 2): every entry is ±w/4 with the sign of the group pair.
        let pairs = CostSpec {
            q_bar_blocks: vec![mats::eye(2), mats::eye(2)],
            r_blocks: vec![mats::eye(2), mats::eye(2)],
            topology: scalar_topology(vec![2, 2], vec![(0, 1)], w),
        };
        let sep = build_separated_cost(&pairs, 1).unwrap();
        let expected = Mat::from_fn(4, 4, |i, j| if (i < 2) == (j < 2) { w / 4.0 } else { -w / 4.0 });
        assert_relative_eq!(sep.coupling, expected, epsilon = 1e-15);
        let q_tilde = Mat::from_fn(4, 4, |i, j| if (i < 2) == (j < 2) { 0.25 } else { 0.0 });
        assert_relative_eq!(sep.q_tilde, q_tilde, epsilon = 1e-15);
        for i in 0..2 {
            assert_relative_eq!(sep.m_centroid.row(i).sum(), 1.0, epsilon = 1e-15);
        }
    }

    fn double_integrator_net(sizes: &[usize]) -> NetworkModel {
        let di = AgentDynamics::new(
            Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            Mat::from_row_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap();
        NetworkModel::new(
            sizes
                .iter()
                .map(|&p| GroupModel::new(vec![di.clone(); p]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn solve_local_examples() {
        let net = double_integrator_net(&[1, 1, 1]);
        let cost = CostSpec {
            q_bar_blocks: vec![mats::eye(2); 3],
            r_blocks: vec![mats::eye(1); 3],
            topology: GroupTopology::new(vec![1, 1, 1], vec![], vec![]).unwrap(),
        };
        let locals = solve_local(&net, &cost, 1e-10).unwrap();
        let s3 = 3f64.sqrt();
        for sol in &locals {
            assert_relative_eq!(sol.p, Mat::from_row_slice(2, 2, &[s3, 1.0, 1.0, s3]), epsilon = 1e-12);
        }
    }

    #[test]
    fn solve_local_names_failing_group() {
        let mut net = double_integrator_net(&[1, 1]);
        net.groups[1].b = Mat::zeros(2, 1);
        let cost = CostSpec {
            q_bar_blocks: vec![mats::eye(2); 2],
            r_blocks: vec![mats::eye(1); 2],
            topology: GroupTopology::new(vec![1, 1], vec![], vec![]).unwrap(),
        };
        match solve_local(&net, &cost, 1e-10) {
            Err(Error::Group { group, .. }) => assert_eq!(group, 1),
            other => panic!("expected group error, got {other:?}"),
        }
    }

    #[test]
    fn r_tilde_examples() {
        let (p1, p2, w) = (1.7, 0.6, 0.3);
        let p_blocks = vec![Mat::from_element(1, 1, p1), Mat::from_element(1, 1, p2)];
        let b_blocks = vec![mats::eye(1), mats::eye(1)];

        let zero = compute_r_tilde(&p_blocks, &b_blocks, &Mat::zeros(2, 2)).unwrap();
        assert_eq!(zero.r_tilde, Mat::zeros(2, 2));
        assert_eq!(zero.coupling_residual, 0.0);

        let coupling = Mat::from_row_slice(2, 2, &[w, -w, -w, w]);
        let rt = compute_r_tilde(&p_blocks, &b_blocks, &coupling).unwrap();
        let expected = Mat::from_row_slice(
            2,
            2,
            &[w / (p1 * p1), -w / (p1 * p2), -w / (p1 * p2), w / (p2 * p2)],
        );
        assert_relative_eq!(rt.r_tilde, expected, epsilon = 1e-15);
        assert!(rt.coupling_residual < 1e-15);

        let singular = compute_r_tilde(&p_blocks, &[Mat::zeros(1, 1), mats::eye(1)], &coupling);
        assert!(singular.is_err());
    }

    #[test]
    fn assemble_gain_without_coupling_is_local() {
        let net = double_integrator_net(&[2, 1]);
        let problems: Vec<LqrProblem> = net
            .groups
            .iter()
            .map(|g| LqrProblem {
                a: g.a.clone(),
                b: g.b.clone(),
                q: mats::eye(g.a.nrows()),
                r: mats::eye(g.b.ncols()),
            })
            .collect();
        let (_, gain) = synthesize(&problems, &Mat::zeros(6, 6), 1e-10).unwrap();
        assert_eq!(gain.k_total, gain.k_local);
        assert_eq!(gain.k_global, Mat::zeros(3, 6));
    }

    #[test]
    fn fully_actuated_scalar_groups_match_direct_care() {
        let a = [0.4, -0.3];
        let problems: Vec<LqrProblem> = a
            .iter()
            .map(|&ai| LqrProblem {
                a: Mat::from_element(1, 1, ai),
                b: mats::eye(1),
                q: mats::eye(1),
                r: mats::eye(1),
            })
            .collect();
        let w = 0.8;
        let coupling = Mat::from_row_slice(2, 2, &[w, -w, -w, w]);
        let (_, gain) = synthesize(&problems, &coupling, 1e-12).unwrap();
        assert!(gain.coupling_residual < 1e-12);
        let a_net = Mat::from_diagonal(&Vector::from_vec(a.to_vec()));
        let q = mats::eye(2) + &coupling;
        let r_eff = gain.r_effective().unwrap();
        let direct = riccati::solve_care(&a_net, &mats::eye(2), &q, &r_eff, 1e-12).unwrap();
        assert_relative_eq!(gain.k_total, direct.k, epsilon = 1e-10);

        // Scalar Q̃′ is Q̃ scaled by 1/(pᵢpⱼ).
        let q_tilde = Mat::from_element(2, 2, 0.25);
        let qp = compute_q_tilde_prime(&gain.p_blocks, &[mats::eye(1), mats::eye(1)], &q_tilde).unwrap();
        let (p1, p2) = (gain.p_blocks[0][(0, 0)], gain.p_blocks[1][(0, 0)]);
        let expected = Mat::from_row_slice(
            2,
            2,
            &[0.25 / (p1 * p1), 0.25 / (p1 * p2), 0.25 / (p1 * p2), 0.25 / (p2 * p2)],
        );
        assert_relative_eq!(qp, expected, epsilon = 1e-14);
    }

    #[test]
    fn q_tilde_prime_projection_cases() {
        let b = Mat::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let q_tilde = Mat::from_fn(3, 3, |i, j| 1.0 + (i + j) as f64);
        let qp = compute_q_tilde_prime(&[mats::eye(3)], std::slice::from_ref(&b), &q_tilde).unwrap();
        assert_relative_eq!(qp, b.transpose() * &q_tilde * &b, epsilon = 1e-15);

        let zero = compute_q_tilde_prime(&[mats::eye(3)], &[b], &Mat::zeros(3, 3)).unwrap();
        assert_eq!(zero, Mat::zeros(1, 1));
    }

    #[test]
    fn suboptimality_ratio_is_one_without_coupling() {
        let net = double_integrator_net(&[2, 1]);
        let problems: Vec<LqrProblem> = net
            .groups
            .iter()
            .map(|g| LqrProblem {
                a: g.a.clone(),
                b: g.b.clone(),
                q: mats::eye(g.a.nrows()),
                r: mats::eye(g.b.ncols()),
            })
            .collect();
        let (_, gain) = synthesize(&problems, &Mat::zeros(6, 6), 1e-10).unwrap();
        let plant = LqrProblem {
            a: net.a_net.clone(),
            b: net.b_net.clone(),
            q: mats::eye(6),
            r: mats::eye(3),
        };
        let b_blocks: Vec<Mat> = problems.iter().map(|p| p.b.clone()).collect();
        let x0 = Vector::from_vec(vec![1.0, -0.5, 0.3, 0.2, -1.0, 0.4]);
        let rep = suboptimality_report(&plant, &gain, &b_blocks, &Mat::zeros(6, 6), &x0, 1e-10).unwrap();
        assert_relative_eq!(rep.ratio, 1.0, epsilon = 1e-10);
    }
}
