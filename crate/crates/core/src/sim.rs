//! Planar multi-robot formation and target tracking: plant construction,
//! centroid coordinates with integral action, fixed-step RK4 simulation, and
//! the learn / deploy / baseline experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adp::{self, ExplorationNoise, TrajectoryLog};
use crate::error::{Error, Result};
use crate::hierarchy;
use crate::mats::{self, Mat, Vector};
use crate::model::{AgentDynamics, GroupModel};
use crate::riccati::{self, HURWITZ_MARGIN};

/// State norm beyond which a simulation is declared diverged.
pub const DIVERGENCE_NORM: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotParams {
    pub mass: f64,
    pub damping: f64,
}

impl RobotParams {
    pub fn check(&self) -> Result<()> {
        if !(self.mass > 0.0) || !(self.damping >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "robot mass must be > 0 and damping ≥ 0 (got {}, {})",
                self.mass, self.damping
            )));
        }
        Ok(())
    }
}

/// `[q; q̇]` with `m q̈ = −c q̇ + u` in the plane.
pub fn robot_state_space(params: &RobotParams) -> Result<AgentDynamics> {
    params.check()?;
    let mut g = Mat::zeros(4, 4);
    let mut h = Mat::zeros(4, 2);
    for k in 0..2 {
        g[(k, k + 2)] = 1.0;
        g[(k + 2, k + 2)] = -params.damping / params.mass;
        h[(k + 2, k)] = 1.0 / params.mass;
    }
    AgentDynamics::new(g, h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub size: usize,
    pub robot: RobotParams,
    pub target: [f64; 2],
    /// Desired positions of agents 2..p relative to agent 1.
    pub offsets: Vec<[f64; 2]>,
    /// Exploration window length in seconds.
    pub exploration_time: f64,
    pub noise_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationScenario {
    pub groups: Vec<GroupSpec>,
    /// Undirected edges between group centroids.
    pub edges: Vec<[usize; 2]>,
    /// `Q̄ⱼ = q_bar_weight·I` over the augmented group state.
    pub q_bar_weight: f64,
    /// `Rⱼ = r_weight·I`.
    pub r_weight: f64,
    /// `Q̃ = q_tilde_scale·(L ⊗ SᵀS)`.
    pub q_tilde_scale: f64,
    pub num_freqs: usize,
    /// Exploration frequencies are drawn uniformly from this band (rad/s).
    pub noise_band: [f64; 2],
    pub sample_period: f64,
    /// Integration step during exploration; must divide `sim_step`.
    pub exploration_step: f64,
    /// Integration and logging step for the noise-free phases.
    pub sim_step: f64,
    /// Deployment duration after the longest exploration window.
    pub horizon: f64,
    pub seed: u64,
    /// Initial positions are uniform in `[−b, b]²`.
    pub initial_box: f64,
    /// Coarse model used to design the initial stabilizing gain.
    pub k0_guess: RobotParams,
}

impl FormationScenario {
    /// Four groups of sizes (3, 4, 4, 3) with masses j and damping 0.1/j,
    /// triangle and square formations, targets at (±5, ±5), star topology
    /// around group 4.
    pub fn paper(q_tilde_scale: f64) -> Self {
        let tri = vec![[1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]];
        let square = vec![[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let spec = |j: usize, size: usize, target: [f64; 2], offsets: &Vec<[f64; 2]>, explore: f64| GroupSpec {
            size,
            robot: RobotParams {
                mass: j as f64,
                damping: 0.1 / j as f64,
            },
            target,
            offsets: offsets.clone(),
            exploration_time: explore,
            noise_amplitude: 2000.0,
        };
        FormationScenario {
            groups: vec![
                spec(1, 3, [5.0, 5.0], &tri, 6.0),
                spec(2, 4, [5.0, -5.0], &square, 15.0),
                spec(3, 4, [-5.0, 5.0], &square, 15.0),
                spec(4, 3, [-5.0, -5.0], &tri, 6.0),
            ],
            edges: vec![[0, 3], [1, 3], [2, 3]],
            q_bar_weight: 0.1,
            r_weight: 1.0,
            q_tilde_scale,
            num_freqs: 100,
            noise_band: [0.5, 150.0],
            sample_period: 0.01,
            exploration_step: 1e-4,
            sim_step: 0.005,
            horizon: 40.0,
            seed: 1,
            initial_box: 8.0,
            k0_guess: RobotParams {
                mass: 2.5,
                damping: 0.0,
            },
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::Empty("scenario groups"));
        }
        for (j, g) in self.groups.iter().enumerate() {
            let bad = |msg: String| Err(Error::InvalidParameter(msg).in_group(j));
            if g.size == 0 {
                return bad("group size must be positive".into());
            }
            if g.offsets.len() != g.size - 1 {
                return bad(format!("{} offsets for {} agents (need size − 1)", g.offsets.len(), g.size));
            }
            if !(g.exploration_time > 0.0) || !(g.noise_amplitude >= 0.0) {
                return bad("exploration time must be > 0 and noise amplitude ≥ 0".into());
            }
            g.robot.check().map_err(|e| e.in_group(j))?;
        }
        self.k0_guess.check()?;
        for &[a, b] in &self.edges {
            if a == b || a >= self.groups.len() || b >= self.groups.len() {
                return Err(Error::InvalidEdge {
                    from: a,
                    to: b,
                    nodes: self.groups.len(),
                });
            }
        }
        if !(self.q_bar_weight > 0.0) || !(self.r_weight > 0.0) || !(self.q_tilde_scale >= 0.0) {
            return Err(Error::InvalidParameter(
                "weights must satisfy q_bar_weight > 0, r_weight > 0, q_tilde_scale ≥ 0".into(),
            ));
        }
        if self.num_freqs == 0 || !(self.initial_box >= 0.0) || !(self.horizon > 0.0) {
            return Err(Error::InvalidParameter(
                "num_freqs, horizon must be positive and initial_box non-negative".into(),
            ));
        }
        if !(self.noise_band[0] > 0.0) || !(self.noise_band[1] >= self.noise_band[0]) {
            return Err(Error::InvalidParameter(format!("invalid noise band {:?}", self.noise_band)));
        }
        for step in [self.sim_step, self.exploration_step] {
            let grid = SimGrid {
                t0: 0.0,
                step,
                horizon: self.sample_period,
                sample_period: self.sample_period,
            };
            grid.steps()?;
        }
        self.decimation()?;
        Ok(())
    }

    /// Exploration steps per `sim_step`.
    pub fn decimation(&self) -> Result<usize> {
        let k = (self.sim_step / self.exploration_step).round();
        if k < 1.0 || (k * self.exploration_step - self.sim_step).abs() > 1e-9 * self.sim_step {
            return Err(Error::InvalidParameter(format!(
                "exploration step {} does not divide sim step {}",
                self.exploration_step, self.sim_step
            )));
        }
        Ok(k as usize)
    }

    /// Time at which every group has finished exploring.
    pub fn switch_time(&self) -> f64 {
        self.groups.iter().map(|g| g.exploration_time).fold(0.0, f64::max)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|&[a, b]| (a, b)).collect()
    }
}

/// One group in centroid coordinates with integral action on
/// `X = [z; ζ]`, `z = T x`, `ζ̇ = (I⊗C) z − q̄`.
#[derive(Debug, Clone)]
pub struct AugmentedGroupPlant {
    pub size: usize,
    pub t_transform: Mat,
    pub t_inverse: Mat,
    pub a_aug: Mat,
    pub b_aug: Mat,
    pub setpoint: Vector,
    /// Extracts the 4-dim centroid state from `X`.
    pub s_centroid: Mat,
}

impl AugmentedGroupPlant {
    pub fn state_dim(&self) -> usize {
        self.a_aug.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b_aug.ncols()
    }

    /// Constant drift `[0; −q̄]` of the integrator rows.
    pub fn drift(&self) -> Vector {
        let n = self.state_dim();
        let mut d = Vector::zeros(n);
        let k = self.setpoint.len();
        d.rows_mut(n - k, k).copy_from(&(-&self.setpoint));
        d
    }

    /// Augmented state for stacked agent states `[q; q̇]` and zero integrators.
    pub fn lift(&self, agent_states: &Vector) -> Vector {
        let z = &self.t_transform * agent_states;
        let mut x = Vector::zeros(self.state_dim());
        x.rows_mut(0, z.len()).copy_from(&z);
        x
    }

    /// Per-agent `[px, py, vx, vy]` recovered from `X`.
    pub fn agent_states(&self, x_aug: &Vector) -> Vec<[f64; 4]> {
        let nz = 4 * self.size;
        let x = &self.t_inverse * x_aug.rows(0, nz);
        (0..self.size)
            .map(|i| [x[4 * i], x[4 * i + 1], x[4 * i + 2], x[4 * i + 3]])
            .collect()
    }

    /// `|q_i − q_1 − q_iᵈ|` for agents 2..p.
    pub fn formation_errors(&self, x_aug: &Vector) -> Vec<f64> {
        (0..self.size - 1)
            .map(|i| {
                let dx = x_aug[4 * i] - self.setpoint[2 * i];
                let dy = x_aug[4 * i + 1] - self.setpoint[2 * i + 1];
                dx.hypot(dy)
            })
            .collect()
    }

    /// `|z̄_pos − q_T|`.
    pub fn centroid_error(&self, x_aug: &Vector) -> f64 {
        let c = 4 * (self.size - 1);
        let t = 2 * (self.size - 1);
        (x_aug[c] - self.setpoint[t]).hypot(x_aug[c + 1] - self.setpoint[t + 1])
    }
}

/// Rows `e_i − e_1` for i = 2..p followed by the average `1ᵀ/p`.
pub fn relative_transform(p: usize) -> Mat {
    let mut t = Mat::zeros(p, p);
    for i in 1..p {
        t[(i - 1, 0)] = -1.0;
        t[(i - 1, i)] = 1.0;
    }
    for k in 0..p {
        t[(p - 1, k)] = 1.0 / p as f64;
    }
    t
}

pub fn build_augmented_group(group: &GroupModel, target: [f64; 2], offsets: &[[f64; 2]]) -> Result<AugmentedGroupPlant> {
    let p = group.size();
    if group.agent_state_dim() != 4 || group.agent_input_dim() != 2 {
        return Err(Error::dims("planar robot agent", "n=4, m=2", format!("n={}, m={}", group.agent_state_dim(), group.agent_input_dim())));
    }
    if offsets.len() != p - 1 {
        return Err(Error::dims("formation offsets", p - 1, offsets.len()));
    }
    if group.agents.iter().any(|a| *a != group.agents[0]) {
        log::warn!("heterogeneous dynamics within a group; centroid coordinates are coupled");
    }
    let t = mats::kron(&relative_transform(p), &mats::eye(4));
    let t_inv = mats::inverse(&t, "coordinate transform")?;
    let a_z = &t * &group.a * &t_inv;
    let b_z = &t * &group.b;
    let c_out = mats::kron(&mats::eye(p), &Mat::from_fn(2, 4, |i, j| f64::from(u8::from(i == j))));

    let (nz, ni) = (4 * p, 2 * p);
    let mut a_aug = Mat::zeros(nz + ni, nz + ni);
    a_aug.view_mut((0, 0), (nz, nz)).copy_from(&a_z);
    a_aug.view_mut((nz, 0), (ni, nz)).copy_from(&c_out);
    let mut b_aug = Mat::zeros(nz + ni, 2 * p);
    b_aug.view_mut((0, 0), (nz, 2 * p)).copy_from(&b_z);

    let mut setpoint = Vector::zeros(2 * p);
    for (i, o) in offsets.iter().enumerate() {
        setpoint[2 * i] = o[0];
        setpoint[2 * i + 1] = o[1];
    }
    setpoint[2 * p - 2] = target[0];
    setpoint[2 * p - 1] = target[1];

    let mut s = Mat::zeros(4, nz + ni);
    s.view_mut((0, 4 * (p - 1)), (4, 4)).copy_from(&mats::eye(4));
    Ok(AugmentedGroupPlant {
        size: p,
        t_transform: t,
        t_inverse: t_inv,
        a_aug,
        b_aug,
        setpoint,
        s_centroid: s,
    })
}

/// `scale·blockdiag(Sⱼ)ᵀ (L ⊗ I₄) blockdiag(Sⱼ)`, which is `scale·(L ⊗ SᵀS)`
/// over the stacked augmented states.
pub fn build_global_coupling(plants: &[AugmentedGroupPlant], edges: &[(usize, usize)], scale: f64) -> Result<Mat> {
    let s = mats::block_diag(&plants.iter().map(|p| p.s_centroid.clone()).collect::<Vec<_>>())?;
    let n = s.ncols();
    if edges.is_empty() || scale == 0.0 {
        return Ok(Mat::zeros(n, n));
    }
    let d = mats::incidence_from_edges(plants.len(), edges)?;
    let l = mats::kron(&(&d * d.transpose()), &mats::eye(4));
    Ok(mats::symmetrize(&(s.transpose() * l * s * scale)))
}

/// Time grid of one simulation run.
#[derive(Debug, Clone, Copy)]
pub struct SimGrid {
    pub t0: f64,
    pub step: f64,
    pub horizon: f64,
    pub sample_period: f64,
}

impl SimGrid {
    /// `(total steps, steps per sample)`.
    pub fn steps(&self) -> Result<(usize, usize)> {
        if !(self.step > 0.0) || !(self.horizon >= self.step) || !(self.sample_period >= self.step) {
            return Err(Error::InvalidParameter(format!(
                "need step > 0, horizon ≥ step, sample period ≥ step (got {}, {}, {})",
                self.step, self.horizon, self.sample_period
            )));
        }
        let whole = |x: f64, what: &str| -> Result<usize> {
            let k = (x / self.step).round();
            if (k * self.step - x).abs() > 1e-9 * x.max(1.0) {
                return Err(Error::InvalidParameter(format!("step {} does not divide {what} {x}", self.step)));
            }
            Ok(k as usize)
        };
        let sub = whole(self.sample_period, "sample period")?;
        let total = whole(self.horizon, "horizon")?;
        if total % sub != 0 {
            return Err(Error::InvalidParameter(format!(
                "horizon {} is not a whole number of sample periods {}",
                self.horizon, self.sample_period
            )));
        }
        Ok((total, sub))
    }
}

/// Closed loop `ẋ = A x + B u + d` with `u = −K x + u₀(t)`.
#[derive(Debug, Clone, Copy)]
pub struct LinearLoop<'a> {
    pub a: &'a Mat,
    pub b: &'a Mat,
    pub drift: Option<&'a Vector>,
    pub gain: &'a Mat,
    pub noise: Option<&'a ExplorationNoise>,
}

impl LinearLoop<'_> {
    fn noise_at(&self, t: f64) -> Vector {
        match self.noise {
            Some(n) => n.eval(t),
            None => Vector::zeros(self.b.ncols()),
        }
    }
}

/// Classical fixed-step RK4; logs every step.
pub fn integrate(sys: &LinearLoop, x0: &Vector, grid: &SimGrid) -> Result<TrajectoryLog> {
    let (total, sub) = grid.steps()?;
    let n = sys.a.nrows();
    if x0.len() != n || sys.b.nrows() != n || sys.gain.shape() != (sys.b.ncols(), n) {
        return Err(Error::dims("simulation", format!("n={n}"), format!("x0 of {}, K {:?}", x0.len(), sys.gain.shape())));
    }
    let h = grid.step;
    let closed = sys.a - sys.b * sys.gain;
    let forcing = |u0: &Vector| {
        let mut f = sys.b * u0;
        if let Some(d) = sys.drift {
            f += d;
        }
        f
    };
    let mut times = Vec::with_capacity(total + 1);
    let mut states = Vec::with_capacity(total + 1);
    let mut inputs = Vec::with_capacity(total + 1);
    let mut noise = Vec::with_capacity(total + 1);
    let mut x = x0.clone();
    let mut u0 = sys.noise_at(grid.t0);
    for k in 0..=total {
        let t = grid.t0 + k as f64 * h;
        times.push(t);
        inputs.push(-(sys.gain * &x) + &u0);
        states.push(x.clone());
        if k == total {
            noise.push(u0);
            break;
        }
        let u_mid = sys.noise_at(t + h / 2.0);
        let u_end = sys.noise_at(t + h);
        let (f0, f_mid, f_end) = (forcing(&u0), forcing(&u_mid), forcing(&u_end));
        let k1 = &closed * &x + f0;
        let k2 = &closed * (&x + &k1 * (h / 2.0)) + &f_mid;
        let k3 = &closed * (&x + &k2 * (h / 2.0)) + f_mid;
        let k4 = &closed * (&x + &k3 * h) + f_end;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        noise.push(std::mem::replace(&mut u0, u_end));
        let norm = x.norm();
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            return Err(Error::Diverged { time: t + h, norm });
        }
    }
    TrajectoryLog::new(grid.sample_period, sub, times, states, inputs, noise)
}

/// Solver tolerances for an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub care_tol: f64,
    pub adp_eps: f64,
    pub max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            care_tol: 1e-9,
            adp_eps: 1e-5,
            max_iters: 25,
        }
    }
}

/// Everything model-side derived from a scenario.
#[derive(Debug, Clone)]
pub struct ScenarioModel {
    pub plants: Vec<AugmentedGroupPlant>,
    pub a_net: Mat,
    pub b_net: Mat,
    pub drift: Vector,
    pub q_bar_blocks: Vec<Mat>,
    pub r_blocks: Vec<Mat>,
    /// Stacked augmented initial state at t = 0.
    pub x0: Vector,
}

impl ScenarioModel {
    pub fn state_dims(&self) -> Vec<usize> {
        self.plants.iter().map(|p| p.state_dim()).collect()
    }

    pub fn input_dims(&self) -> Vec<usize> {
        self.plants.iter().map(|p| p.input_dim()).collect()
    }

    pub fn q_bar(&self) -> Mat {
        mats::block_diag(&self.q_bar_blocks).expect("non-empty")
    }

    pub fn r(&self) -> Mat {
        mats::block_diag(&self.r_blocks).expect("non-empty")
    }

    pub fn group_slice(&self, x: &Vector, j: usize) -> Vector {
        let dims = self.state_dims();
        let start: usize = dims[..j].iter().sum();
        x.rows(start, dims[j]).into_owned()
    }
}

pub fn build_scenario_model(scenario: &FormationScenario) -> Result<ScenarioModel> {
    scenario.check()?;
    let plants: Vec<AugmentedGroupPlant> = scenario
        .groups
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let agent = robot_state_space(&g.robot)?;
            let group = GroupModel::new(vec![agent; g.size])?;
            build_augmented_group(&group, g.target, &g.offsets).map_err(|e| e.in_group(j))
        })
        .collect::<Result<_>>()?;
    let a_net = mats::block_diag(&plants.iter().map(|p| p.a_aug.clone()).collect::<Vec<_>>())?;
    let b_net = mats::block_diag(&plants.iter().map(|p| p.b_aug.clone()).collect::<Vec<_>>())?;
    let drift = Vector::from_iterator(a_net.nrows(), plants.iter().flat_map(|p| p.drift().iter().copied().collect::<Vec<_>>()));
    let q_bar_blocks = plants.iter().map(|p| mats::eye(p.state_dim()) * scenario.q_bar_weight).collect();
    let r_blocks = plants.iter().map(|p| mats::eye(p.input_dim()) * scenario.r_weight).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let b = scenario.initial_box;
    let mut x0 = Vec::with_capacity(a_net.nrows());
    for p in &plants {
        let mut agents = Vector::zeros(4 * p.size);
        for i in 0..p.size {
            for k in 0..2 {
                agents[4 * i + k] = if b > 0.0 { rng.random_range(-b..=b) } else { 0.0 };
            }
        }
        x0.extend(p.lift(&agents).iter().copied());
    }
    Ok(ScenarioModel {
        plants,
        a_net,
        b_net,
        drift,
        q_bar_blocks,
        r_blocks,
        x0: Vector::from_vec(x0),
    })
}

/// LQR gain for each group designed on the coarse `k0_guess` model.
pub fn initial_gains(scenario: &FormationScenario, model: &ScenarioModel, tol: f64) -> Result<Vec<Mat>> {
    let guess = robot_state_space(&scenario.k0_guess)?;
    model
        .plants
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let group = GroupModel::new(vec![guess.clone(); p.size])?;
            let nominal = build_augmented_group(&group, [0.0; 2], &vec![[0.0; 2]; p.size - 1])?;
            let k0 = riccati::solve_care(&nominal.a_aug, &nominal.b_aug, &model.q_bar_blocks[j], &model.r_blocks[j], tol)
                .map_err(|e| e.in_group(j))?
                .k;
            mats::ensure_hurwitz(&(&p.a_aug - &p.b_aug * &k0), HURWITZ_MARGIN, "initial gain on the true group plant")
                .map_err(|e| e.in_group(j))?;
            Ok(k0)
        })
        .collect()
}

/// Logged states and inputs on a uniform grid.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub inputs: Vec<Vector>,
}

impl Trace {
    /// Every `stride`-th grid point of `log`.
    pub fn from_log(log: &TrajectoryLog, stride: usize) -> Self {
        let mut t = Trace::default();
        t.extend(log, stride);
        t
    }

    /// Appends every `stride`-th point of `log`, skipping a first point that
    /// repeats the current last time.
    pub fn extend(&mut self, log: &TrajectoryLog, stride: usize) {
        let stride = stride.max(1);
        for k in (0..log.times.len()).step_by(stride) {
            if k == 0 && self.times.last().is_some_and(|&t| (t - log.times[0]).abs() < 1e-12) {
                continue;
            }
            self.times.push(log.times[k]);
            self.states.push(log.states[k].clone());
            self.inputs.push(log.inputs[k].clone());
        }
    }

    pub fn last_state(&self) -> Option<&Vector> {
        self.states.last()
    }
}

/// Phase-1 outcome for one group.
#[derive(Debug, Clone)]
pub struct GroupLearning {
    pub k0: Mat,
    pub rows: usize,
    pub rank: usize,
    pub unknowns: usize,
    pub learn: adp::LearnResult,
    pub k_oracle: Mat,
    pub gain_error: f64,
    /// Exploration run followed by the noise-free run up to the switch
    /// time, on the `sim_step` grid.
    pub pre_switch: Trace,
}

/// Explores group `j` from its initial state and learns its local gain.
pub fn learn_group(
    scenario: &FormationScenario,
    model: &ScenarioModel,
    j: usize,
    k0: &Mat,
    settings: &SolverSettings,
) -> Result<GroupLearning> {
    let spec = &scenario.groups[j];
    let plant = &model.plants[j];
    let noise = adp::make_exploration_noise_in_band(
        plant.input_dim(),
        scenario.seed.wrapping_add(1 + j as u64),
        scenario.num_freqs,
        spec.noise_amplitude,
        scenario.noise_band,
    );
    let explore = LinearLoop {
        a: &plant.a_aug,
        b: &plant.b_aug,
        drift: None,
        gain: k0,
        noise: Some(&noise),
    };
    let grid = SimGrid {
        t0: 0.0,
        step: scenario.exploration_step,
        horizon: spec.exploration_time,
        sample_period: scenario.sample_period,
    };
    let log = integrate(&explore, &model.group_slice(&model.x0, j), &grid)?;
    let data = adp::build_adp_data(&log)?;
    let learn = adp::adp_learn(&data, k0, &model.q_bar_blocks[j], &model.r_blocks[j], settings.adp_eps, settings.max_iters)?;
    let oracle = riccati::kleinman_iterate(
        &plant.a_aug,
        &plant.b_aug,
        &model.q_bar_blocks[j],
        &model.r_blocks[j],
        k0,
        settings.adp_eps,
        settings.max_iters,
    )?;
    let gain_error = (&learn.k_learned - &oracle.k).norm() / oracle.k.norm();
    let explore_end = log.states.last().expect("non-empty").clone();

    let mut pre_switch = Trace::from_log(&log, scenario.decimation()?);
    drop(log);
    let rest = scenario.switch_time() - spec.exploration_time;
    if rest > 0.0 {
        let quiet = LinearLoop { noise: None, ..explore };
        let grid = SimGrid {
            t0: spec.exploration_time,
            step: scenario.sim_step,
            horizon: rest,
            sample_period: scenario.sample_period,
        };
        pre_switch.extend(&integrate(&quiet, &explore_end, &grid)?, 1);
    }
    Ok(GroupLearning {
        k0: k0.clone(),
        rows: data.num_rows(),
        rank: data.rank,
        unknowns: data.unknowns(),
        learn,
        k_oracle: oracle.k,
        gain_error,
        pre_switch,
    })
}

/// Costs of the learned hierarchical gain against the centralized optimum.
#[derive(Debug, Clone)]
pub struct CostComparison {
    pub q_tilde_scale: f64,
    pub j_opt: f64,
    pub j_hier: f64,
    pub ratio: f64,
    pub coupling_residual: f64,
    pub q_tilde_gap: f64,
    pub k_opt: Mat,
    pub k_hier: Mat,
}

/// Hierarchical gain from learned local gains for the given coupling scale,
/// with its cost on `(Q̄ + Q̃, R)` from `x0` against the centralized optimum.
pub fn compare_costs(
    scenario: &FormationScenario,
    model: &ScenarioModel,
    learned: &[Mat],
    scale: f64,
    settings: &SolverSettings,
) -> Result<CostComparison> {
    let coupling = build_global_coupling(&model.plants, &scenario.edges(), scale)?;
    let global = adp::compute_global_from_learned(learned, &model.r_blocks, &coupling)?;
    let k_hier = mats::block_diag(learned)? + &global.k_global;
    let plant = hierarchy::LqrProblem {
        a: model.a_net.clone(),
        b: model.b_net.clone(),
        q: model.q_bar() + &coupling,
        r: model.r(),
    };
    let opt = riccati::solve_care(&plant.a, &plant.b, &plant.q, &plant.r, settings.care_tol)?;
    let j_opt = riccati::closed_loop_cost(&plant.a, &plant.b, &plant.q, &plant.r, &opt.k, &model.x0)?;
    let j_hier = riccati::closed_loop_cost(&plant.a, &plant.b, &plant.q, &plant.r, &k_hier, &model.x0)?;

    // Residual and Q̃ gap use Pⱼ recovered from the model-based local solves.
    let b_blocks: Vec<Mat> = model.plants.iter().map(|p| p.b_aug.clone()).collect();
    let p_blocks: Vec<Mat> = model
        .plants
        .iter()
        .zip(model.q_bar_blocks.iter().zip(&model.r_blocks))
        .map(|(p, (q, r))| riccati::solve_care(&p.a_aug, &p.b_aug, q, r, settings.care_tol).map(|s| s.p))
        .collect::<Result<_>>()?;
    let rt = hierarchy::compute_r_tilde(&p_blocks, &b_blocks, &coupling)?;
    let q_tilde_gap = hierarchy::q_tilde_gap(&p_blocks, &b_blocks, &coupling)?;
    Ok(CostComparison {
        q_tilde_scale: scale,
        j_opt,
        j_hier,
        ratio: if j_opt > 0.0 { j_hier / j_opt } else { 1.0 },
        coupling_residual: rt.coupling_residual,
        q_tilde_gap,
        k_opt: opt.k,
        k_hier,
    })
}

/// Final errors of one closed-loop run.
#[derive(Debug, Clone)]
pub struct TrackingErrors {
    pub centroid: Vec<f64>,
    pub formation: Vec<Vec<f64>>,
    /// Largest `|(I⊗C)z − q̄|` over all groups, i.e. the integrator drift.
    pub integrator_rate: f64,
}

impl TrackingErrors {
    pub fn max_centroid(&self) -> f64 {
        self.centroid.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_formation(&self) -> f64 {
        self.formation.iter().flatten().copied().fold(0.0, f64::max)
    }
}

pub fn tracking_errors(model: &ScenarioModel, x: &Vector) -> TrackingErrors {
    let mut centroid = Vec::new();
    let mut formation = Vec::new();
    let mut integrator_rate = 0.0f64;
    for (j, p) in model.plants.iter().enumerate() {
        let xj = model.group_slice(x, j);
        centroid.push(p.centroid_error(&xj));
        formation.push(p.formation_errors(&xj));
        let rate = (&p.a_aug * &xj + p.drift()).rows(4 * p.size, 2 * p.size).norm();
        integrator_rate = integrator_rate.max(rate);
    }
    TrackingErrors {
        centroid,
        formation,
        integrator_rate,
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub groups: Vec<GroupLearning>,
    pub centralized_unknowns: usize,
    pub switch_time: f64,
    pub k_learned: Mat,
    pub k_optimal: Mat,
    pub learned_abscissa: f64,
    pub learned_hurwitz: bool,
    pub learned_errors: TrackingErrors,
    pub baseline_errors: TrackingErrors,
    /// Max over agents of the sup-distance between learned and baseline position traces.
    pub trajectory_deviation: f64,
    pub costs: CostComparison,
    pub learned_run: TrajectoryLog,
    pub baseline_run: TrajectoryLog,
}

/// Noise-free closed loop with setpoints over the deployment horizon.
pub fn deploy(scenario: &FormationScenario, model: &ScenarioModel, gain: &Mat, x_start: &Vector, t0: f64) -> Result<TrajectoryLog> {
    let grid = SimGrid {
        t0,
        step: scenario.sim_step,
        horizon: scenario.horizon,
        sample_period: scenario.sample_period,
    };
    integrate(
        &LinearLoop {
            a: &model.a_net,
            b: &model.b_net,
            drift: Some(&model.drift),
            gain,
            noise: None,
        },
        x_start,
        &grid,
    )
}

/// Learns all groups in parallel, deploys the learned hierarchical gain
/// with setpoints from the switch time, and runs the centralized optimal
/// baseline from the same state.
pub fn run_experiment(scenario: &FormationScenario, settings: &SolverSettings) -> Result<ExperimentReport> {
    let model = build_scenario_model(scenario)?;
    let k0 = initial_gains(scenario, &model, settings.care_tol)?;
    let groups: Vec<GroupLearning> = (0..model.plants.len())
        .into_par_iter()
        .map(|j| learn_group(scenario, &model, j, &k0[j], settings).map_err(|e| e.in_group(j)))
        .collect::<Result<_>>()?;
    run_deployment(scenario, &model, groups, settings)
}

/// Phases 2 and 3 given the learned groups.
pub fn run_deployment(
    scenario: &FormationScenario,
    model: &ScenarioModel,
    groups: Vec<GroupLearning>,
    settings: &SolverSettings,
) -> Result<ExperimentReport> {
    let learned: Vec<Mat> = groups.iter().map(|g| g.learn.k_learned.clone()).collect();
    let costs = compare_costs(scenario, model, &learned, scenario.q_tilde_scale, settings)?;
    let k_learned = costs.k_hier.clone();
    let closed = &model.a_net - &model.b_net * &k_learned;
    let learned_abscissa = mats::spectral_abscissa(&closed)?;

    let x_switch = Vector::from_iterator(
        model.a_net.nrows(),
        groups
            .iter()
            .flat_map(|g| g.pre_switch.last_state().expect("non-empty").iter().copied().collect::<Vec<_>>()),
    );
    let switch_time = scenario.switch_time();
    let learned_run = deploy(scenario, model, &k_learned, &x_switch, switch_time)?;
    let baseline_run = deploy(scenario, model, &costs.k_opt, &x_switch, switch_time)?;

    let mut deviation = 0.0f64;
    for (xl, xb) in learned_run.states.iter().zip(&baseline_run.states) {
        for (j, p) in model.plants.iter().enumerate() {
            let al = p.agent_states(&model.group_slice(xl, j));
            let ab = p.agent_states(&model.group_slice(xb, j));
            for (l, b) in al.iter().zip(&ab) {
                deviation = deviation.max((l[0] - b[0]).hypot(l[1] - b[1]));
            }
        }
    }

    let n_total: usize = model.state_dims().iter().sum();
    let m_total: usize = model.input_dims().iter().sum();
    Ok(ExperimentReport {
        centralized_unknowns: adp::unknown_count(n_total, m_total),
        switch_time,
        learned_abscissa,
        learned_hurwitz: learned_abscissa < -HURWITZ_MARGIN,
        learned_errors: tracking_errors(model, learned_run.states.last().expect("non-empty")),
        baseline_errors: tracking_errors(model, baseline_run.states.last().expect("non-empty")),
        trajectory_deviation: deviation,
        k_optimal: costs.k_opt.clone(),
        k_learned,
        costs,
        groups,
        learned_run,
        baseline_run,
    })
}
