//! Random LQR problems and grouped networks for tests.

use hierlqr::hierarchy::{self, LqrProblem, SeparatedCost};
use hierlqr::model::{AgentDynamics, CostSpec, GroupModel, GroupTopology, NetworkModel};
use hierlqr::riccati::{self, CareSolution};
use hierlqr::{mats, Mat};
use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random SPD matrix with eigenvalues bounded away from zero.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    let g = random_mat(rng, n, n);
    mats::symmetrize(&(&g * g.transpose())) + mats::eye(n) * 0.5
}

/// Random symmetric matrix with unit-scale entries.
pub fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    mats::symmetrize(&random_mat(rng, n, n))
}

/// Random PSD matrix of rank at most `rank`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> Mat {
    let g = random_mat(rng, n, rank);
    mats::symmetrize(&(&g * g.transpose()))
}

pub struct RandomNetwork {
    pub model: NetworkModel,
    pub cost: CostSpec,
    pub separated: SeparatedCost,
    pub problems: Vec<LqrProblem>,
}

impl RandomNetwork {
    pub fn b_blocks(&self) -> Vec<Mat> {
        self.problems.iter().map(|p| p.b.clone()).collect()
    }

    pub fn r_blocks(&self) -> Vec<Mat> {
        self.problems.iter().map(|p| p.r.clone()).collect()
    }

    pub fn centralized(&self) -> LqrProblem {
        LqrProblem {
            a: self.model.a_net.clone(),
            b: self.model.b_net.clone(),
            q: self.separated.q_total.clone(),
            r: self.cost.r_net().unwrap(),
        }
    }
}

/// Random network of `sizes.len()` groups of agents with state dimension
/// `n` and input dimension `m`. `star` links group 0 to every other group;
/// otherwise a random tree is drawn.
pub fn random_network(rng: &mut ChaCha8Rng, sizes: &[usize], n: usize, m: usize, star: bool) -> RandomNetwork {
    let groups: Vec<GroupModel> = sizes
        .iter()
        .map(|&p| {
            let agents = (0..p).map(|_| random_agent(rng, n, m)).collect();
            GroupModel::new(agents).unwrap()
        })
        .collect();
    let model = NetworkModel::new(groups).unwrap();
    let edges: Vec<(usize, usize)> = (1..sizes.len())
        .map(|k| if star { (0, k) } else { (rng.random_range(0..k), k) })
        .collect();
    let edge_weights = edges.iter().map(|_| random_psd(rng, n, n) + mats::eye(n) * 0.1).collect();
    let topology = GroupTopology::new(sizes.to_vec(), edges, edge_weights).unwrap();
    let cost = CostSpec {
        q_bar_blocks: sizes.iter().map(|&p| random_spd(rng, n * p)).collect(),
        r_blocks: sizes.iter().map(|&p| random_spd(rng, m * p)).collect(),
        topology,
    };
    let separated = hierarchy::build_separated_cost(&cost, n).unwrap();
    let problems = model
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
    RandomNetwork {
        model,
        cost,
        separated,
        problems,
    }
}

/// Random agent away from unstabilizable; square input matrices are kept
/// well conditioned.
pub fn random_agent(rng: &mut ChaCha8Rng, n: usize, m: usize) -> AgentDynamics {
    loop {
        let g = random_mat(rng, n, n);
        let h = random_mat(rng, n, m);
        if n == m {
            let sv = h.singular_values();
            if sv.min() < 0.1 * sv.max() {
                continue;
            }
        }
        if stabilizability_margin(&g, &h) >= 1e-2 {
            return AgentDynamics::new(g, h).unwrap();
        }
    }
}

pub fn random_sizes(rng: &mut ChaCha8Rng, groups: std::ops::RangeInclusive<usize>, max_size: usize) -> Vec<usize> {
    let count = rng.random_range(groups);
    (0..count).map(|_| rng.random_range(1..=max_size)).collect()
}

/// Distance to unstabilizability: the smallest `σ_min([A − λI, B])` over
/// eigenvalues `λ` of `A` with non-negative real part, relative to `‖[A, B]‖`.
pub fn stabilizability_margin(a: &Mat, b: &Mat) -> f64 {
    let (n, m) = (a.nrows(), b.ncols());
    let scale = a.norm().max(b.norm());
    let mut worst = f64::INFINITY;
    for lam in mats::eigenvalues(a).unwrap() {
        if lam.re < 0.0 {
            continue;
        }
        let pbh = DMatrix::<Complex<f64>>::from_fn(n, n + m, |i, j| {
            if j < n {
                Complex::new(a[(i, j)], 0.0) - if i == j { lam } else { Complex::new(0.0, 0.0) }
            } else {
                Complex::new(b[(i, j - n)], 0.0)
            }
        });
        worst = worst.min(pbh.singular_values().min() / scale);
    }
    worst
}

/// Random LQR data `(A, B, Q, R)` with `A` of order-one spectrum and a
/// pair comfortably away from unstabilizable. The input count grows with
/// the state dimension, between `⌈n/5⌉` and `⌈n/5⌉ + extra_m`.
pub fn random_lqr(rng: &mut ChaCha8Rng, max_n: usize, extra_m: usize) -> (Mat, Mat, Mat, Mat) {
    let n = rng.random_range(1..=max_n);
    let base = n.div_ceil(5);
    let m = rng.random_range(base..=(base + extra_m).min(n));
    loop {
        let a = random_mat(rng, n, n) * (3.0 / n as f64).sqrt();
        let b = random_mat(rng, n, m);
        if stabilizability_margin(&a, &b) >= 1e-2 {
            return (a, b, random_spd(rng, n), random_spd(rng, m));
        }
    }
}

/// Like [`random_lqr`] but keeps only problems whose Riccati solution has
/// `‖P‖_F ≤ p_max`; returns the solution too.
pub fn random_lqr_bounded(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    extra_m: usize,
    p_max: f64,
) -> (Mat, Mat, Mat, Mat, CareSolution) {
    loop {
        let (a, b, q, r) = random_lqr(rng, max_n, extra_m);
        let sol = riccati::solve_care(&a, &b, &q, &r, 1e-10).expect("stabilizable draw");
        if sol.p.norm() <= p_max {
            return (a, b, q, r, sol);
        }
    }
}
