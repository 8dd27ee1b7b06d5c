//! Off-policy adaptive dynamic programming for the local gains.
//!
//! Along any trajectory of `ẋ = Ax + Bu` and for the current gain `K_k`,
//!
//! ```text
//! xᵀP_kx |ₜ^{t+T} − 2∫(K_k x + u)ᵀ R K_{k+1} x dτ = −∫xᵀ(Q̄ + K_kᵀRK_k)x dτ
//! ```
//!
//! which is linear in `(P_k, K_{k+1})` and needs neither `A` nor `B`. Rows are
//! stacked over sampling intervals and solved by pivoted-QR least squares.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mats::{self, Mat, PivotedQr, Vector};

/// Relative threshold on the R diagonal for the excitation rank test.
pub const RANK_REL_TOL: f64 = 1e-8;
/// Least-squares condition number above which a warning is logged.
pub const COND_WARN: f64 = 1e12;

/// Number of unknowns `n(n+1)/2 + nm` in one policy-iteration step.
pub fn unknown_count(n: usize, m: usize) -> usize {
    mats::vecs_len(n) + n * m
}

/// Sampled trajectory of one group on a fine integration grid.
///
/// Every `substeps`-th grid point is a sampling instant; quadrature runs over
/// the grid points between consecutive samples.
#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub sample_period: f64,
    pub substeps: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    /// Applied input at each grid point.
    pub inputs: Vec<Vector>,
    /// Exploration component of the applied input.
    pub noise: Vec<Vector>,
}

impl TrajectoryLog {
    pub fn new(
        sample_period: f64,
        substeps: usize,
        times: Vec<f64>,
        states: Vec<Vector>,
        inputs: Vec<Vector>,
        noise: Vec<Vector>,
    ) -> Result<Self> {
        let log = TrajectoryLog {
            sample_period,
            substeps,
            times,
            states,
            inputs,
            noise,
        };
        log.check()?;
        Ok(log)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.sample_period > 0.0) || self.substeps == 0 {
            return Err(Error::InvalidParameter("sample period and substeps must be positive".into()));
        }
        let len = self.times.len();
        if len < 2 {
            return Err(Error::Empty("trajectory log"));
        }
        if self.states.len() != len || self.inputs.len() != len || self.noise.len() != len {
            return Err(Error::dims(
                "trajectory log columns",
                len,
                format!("{} states, {} inputs, {} noise", self.states.len(), self.inputs.len(), self.noise.len()),
            ));
        }
        if (len - 1) % self.substeps != 0 {
            return Err(Error::InvalidParameter(format!(
                "grid of {} intervals is not a whole number of {}-substep samples",
                len - 1,
                self.substeps
            )));
        }
        let n = self.states[0].len();
        let m = self.inputs[0].len();
        if self.states.iter().any(|x| x.len() != n)
            || self.inputs.iter().any(|u| u.len() != m)
            || self.noise.iter().any(|u| u.len() != m)
        {
            return Err(Error::dims("trajectory log rows", format!("n={n}, m={m}"), "ragged rows"));
        }
        let h = self.step();
        for (k, w) in self.times.windows(2).enumerate() {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * self.sample_period.max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "non-uniform sampling at grid index {k}: spacing {} vs {h}",
                    w[1] - w[0]
                )));
            }
        }
        Ok(())
    }

    /// Fine-grid step.
    pub fn step(&self) -> f64 {
        self.sample_period / self.substeps as f64
    }

    /// Number of sampling intervals `l`.
    pub fn num_samples(&self) -> usize {
        (self.times.len() - 1) / self.substeps
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.times.iter().step_by(self.substeps).copied().collect()
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    /// CSV with columns `time, sample, x0.., u0.., w0..`; `sample` is 1 on
    /// sampling instants.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let (n, m) = (self.state_dim(), self.input_dim());
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["time".to_string(), "sample".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..m).map(|i| format!("u{i}")));
        header.extend((0..m).map(|i| format!("w{i}")));
        w.write_record(&header).map_err(io_err)?;
        for k in 0..self.times.len() {
            let mut rec = vec![
                format!("{:e}", self.times[k]),
                u8::from(k % self.substeps == 0).to_string(),
            ];
            rec.extend(self.states[k].iter().map(|v| format!("{v:e}")));
            rec.extend(self.inputs[k].iter().map(|v| format!("{v:e}")));
            rec.extend(self.noise[k].iter().map(|v| format!("{v:e}")));
            w.write_record(&rec).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers().map_err(io_err)?.clone();
        let count = |prefix: char| {
            header
                .iter()
                .filter(|h| h.starts_with(prefix) && h[1..].parse::<usize>().is_ok())
                .count()
        };
        let (n, m) = (count('x'), count('u'));
        if header.len() != 2 + n + 2 * m || count('w') != m {
            return Err(Error::Io(format!("unexpected trajectory header: {header:?}")));
        }
        let (mut times, mut states, mut inputs, mut noise) = (vec![], vec![], vec![], vec![]);
        let mut sample_idx = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec.map_err(io_err)?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Io(format!("row {row}: {e}")))?;
            if vals.len() != header.len() {
                return Err(Error::Io(format!("row {row}: {} fields", vals.len())));
            }
            times.push(vals[0]);
            if vals[1] != 0.0 {
                sample_idx.push(row);
            }
            states.push(Vector::from_row_slice(&vals[2..2 + n]));
            inputs.push(Vector::from_row_slice(&vals[2 + n..2 + n + m]));
            noise.push(Vector::from_row_slice(&vals[2 + n + m..]));
        }
        if sample_idx.len() < 2 || sample_idx[0] != 0 {
            return Err(Error::Io("trajectory needs at least two sample rows, the first at row 0".into()));
        }
        let substeps = sample_idx[1];
        if substeps == 0 || sample_idx.iter().enumerate().any(|(k, &i)| i != k * substeps) {
            return Err(Error::InvalidParameter("non-uniform sampling in trajectory log".into()));
        }
        let sample_period = times[substeps] - times[0];
        TrajectoryLog::new(sample_period, substeps, times, states, inputs, noise)
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Data matrices for one group.
#[derive(Debug, Clone)]
pub struct AdpData {
    /// Increments of the quadratic monomials, off-diagonal ones doubled.
    pub delta_xx: Mat,
    /// `∫ xᵢxⱼ` over each interval, upper triangle row by row.
    pub i_xx: Mat,
    /// `∫ xᵢu_c` over each interval, index `c + m·i`.
    pub i_xu: Mat,
    /// Same layout as `i_xu`, against the exploration component only.
    pub i_xu0: Mat,
    pub rank: usize,
    pub rank_ok: bool,
    pub state_dim: usize,
    pub input_dim: usize,
}

impl AdpData {
    pub fn num_rows(&self) -> usize {
        self.delta_xx.nrows()
    }

    pub fn unknowns(&self) -> usize {
        unknown_count(self.state_dim, self.input_dim)
    }
}

/// Quadrature weights over `substeps + 1` equally spaced points: composite
/// Boole when the substep count is a multiple of 4, composite Simpson when
/// it is even, trapezoid otherwise.
fn quadrature_weights(substeps: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; substeps + 1];
    let (pattern, scale): (&[f64], f64) = if substeps % 4 == 0 {
        (&[7.0, 32.0, 12.0, 32.0, 7.0], 2.0 * h / 45.0)
    } else if substeps % 2 == 0 {
        (&[1.0, 4.0, 1.0], h / 3.0)
    } else {
        (&[1.0, 1.0], h / 2.0)
    };
    let panel = pattern.len() - 1;
    for start in (0..substeps).step_by(panel) {
        for (k, c) in pattern.iter().enumerate() {
            w[start + k] += c * scale;
        }
    }
    w
}

pub fn build_adp_data(log: &TrajectoryLog) -> Result<AdpData> {
    log.check()?;
    let (n, m) = (log.state_dim(), log.input_dim());
    let l = log.num_samples();
    let s = log.substeps;
    let nv = mats::vecs_len(n);
    let weights = quadrature_weights(s, log.step());

    let mut delta_xx = Mat::zeros(l, nv);
    let mut i_xx = Mat::zeros(l, nv);
    let mut i_xu = Mat::zeros(l, n * m);
    let mut i_xu0 = Mat::zeros(l, n * m);
    for row in 0..l {
        let (x0, x1) = (&log.states[row * s], &log.states[(row + 1) * s]);
        let mut idx = 0;
        for i in 0..n {
            for j in i..n {
                let d = x1[i] * x1[j] - x0[i] * x0[j];
                delta_xx[(row, idx)] = if i == j { d } else { 2.0 * d };
                idx += 1;
            }
        }
        for (k, &wk) in weights.iter().enumerate() {
            let g = row * s + k;
            let (x, u, u0) = (&log.states[g], &log.inputs[g], &log.noise[g]);
            let mut idx = 0;
            for i in 0..n {
                for j in i..n {
                    i_xx[(row, idx)] += wk * x[i] * x[j];
                    idx += 1;
                }
                for c in 0..m {
                    i_xu[(row, c + m * i)] += wk * x[i] * u[c];
                    i_xu0[(row, c + m * i)] += wk * x[i] * u0[c];
                }
            }
        }
    }

    let mut stacked = Mat::zeros(l, nv + n * m);
    stacked.view_mut((0, 0), (l, nv)).copy_from(&i_xx);
    stacked.view_mut((0, nv), (l, n * m)).copy_from(&i_xu);
    let rank = PivotedQr::new(&stacked).rank(RANK_REL_TOL);
    Ok(AdpData {
        delta_xx,
        i_xx,
        i_xu,
        i_xu0,
        rank,
        rank_ok: rank == nv + n * m,
        state_dim: n,
        input_dim: m,
    })
}

#[derive(Debug, Clone)]
pub struct LearnResult {
    pub p_learned: Mat,
    pub k_learned: Mat,
    pub iterations: usize,
    /// `‖P_k − P_{k−1}‖_F` for k ≥ 1.
    pub history: Vec<f64>,
    /// `P_0, P_1, …`; `P_k` evaluates `gains[k]`.
    pub p_iterates: Vec<Mat>,
    /// `K_0, K_1, …`; `gains[k+1]` improves on `gains[k]`.
    pub gains: Vec<Mat>,
    /// Largest least-squares condition estimate over the iterations.
    pub max_condition: f64,
}

/// Index of `(i, j)` in the upper-triangle half-vectorization.
fn vecs_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

pub fn adp_learn(data: &AdpData, k0: &Mat, q_bar: &Mat, r: &Mat, eps: f64, max_iters: usize) -> Result<LearnResult> {
    let (n, m) = (data.state_dim, data.input_dim);
    if k0.shape() != (m, n) || q_bar.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::dims(
            "adp_learn K0/Q̄/R",
            format!("{m}x{n}, {n}x{n}, {m}x{m}"),
            format!("{:?}, {:?}, {:?}", k0.shape(), q_bar.shape(), r.shape()),
        ));
    }
    let required = data.unknowns();
    if !data.rank_ok {
        return Err(Error::InsufficientExcitation {
            rank: data.rank,
            required,
            rows: data.num_rows(),
        });
    }
    let l = data.num_rows();
    let nv = mats::vecs_len(n);

    // Accessors for ∫xᵢxⱼ and ∫x_b u_c.
    let ixx = |row: usize, i: usize, j: usize| data.i_xx[(row, vecs_index(n, i, j))];
    let ixu = |row: usize, b: usize, c: usize| data.i_xu[(row, c + m * b)];

    let mut result = LearnResult {
        p_learned: Mat::zeros(n, n),
        k_learned: k0.clone(),
        iterations: 0,
        history: Vec::new(),
        p_iterates: Vec::new(),
        gains: vec![k0.clone()],
        max_condition: 0.0,
    };
    let mut theta = Mat::zeros(l, required);
    theta.view_mut((0, 0), (l, nv)).copy_from(&data.delta_xx);

    for _ in 0..=max_iters {
        let k = result.gains.last().expect("non-empty").clone();
        let rk = r * &k;
        let cost = q_bar + k.transpose() * &rk;
        let mut rhs = Vector::zeros(l);
        for row in 0..l {
            let mut acc = 0.0;
            for i in 0..n {
                for j in i..n {
                    let wgt = if i == j { 1.0 } else { 2.0 };
                    acc += wgt * (cost[(i, j)] + cost[(j, i)]) * 0.5 * ixx(row, i, j);
                }
            }
            rhs[row] = -acc;
            // Column of K_{k+1}[a, b] at nv + a + m·b.
            for b in 0..n {
                for a in 0..m {
                    let mut v = 0.0;
                    for c in 0..n {
                        v += rk[(a, c)] * ixx(row, c, b);
                    }
                    for c in 0..m {
                        v += r[(a, c)] * ixu(row, b, c);
                    }
                    theta[(row, nv + a + m * b)] = -2.0 * v;
                }
            }
        }
        let qr = PivotedQr::new(&theta);
        let cond = qr.condition_estimate();
        if cond > COND_WARN {
            log::warn!("ADP least squares condition estimate {cond:.3e}");
        }
        result.max_condition = result.max_condition.max(cond);
        let sol = qr.solve(&rhs, 1e-14)?;
        let p = mats::unvecs(&sol.as_slice()[..nv], n)?;
        let next_k = Mat::from_column_slice(m, n, &sol.as_slice()[nv..]);

        let step = result.p_iterates.last().map(|prev| (&p - prev).norm());
        result.p_iterates.push(p.clone());
        result.gains.push(next_k.clone());
        result.p_learned = p;
        result.k_learned = next_k;
        if let Some(step) = step {
            result.history.push(step);
            result.iterations = result.history.len();
            log::debug!("ADP iteration {}: step {step:.3e}", result.iterations);
            if step < eps {
                return Ok(result);
            }
        }
    }
    Err(Error::MaxIterations {
        iters: max_iters,
        last_step: result.history.last().copied().unwrap_or(f64::NAN),
        history: result.history,
        last_iterate: Box::new(result.p_learned),
    })
}

/// Seeded sum-of-sinusoids exploration signal, one independent set of
/// frequencies and phases per channel.
#[derive(Debug, Clone)]
pub struct ExplorationNoise {
    pub amplitude: f64,
    /// `(ω, φ)` pairs per channel.
    pub components: Vec<Vec<(f64, f64)>>,
}

impl ExplorationNoise {
    pub fn dims(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, t: f64) -> Vector {
        Vector::from_iterator(
            self.components.len(),
            self.components.iter().map(|ch| {
                if self.amplitude == 0.0 || ch.is_empty() {
                    return 0.0;
                }
                let s: f64 = ch.iter().map(|&(w, phi)| (w * t + phi).sin()).sum();
                self.amplitude * s / ch.len() as f64
            }),
        )
    }
}

/// Default exploration band in rad/s.
pub const DEFAULT_NOISE_BAND: [f64; 2] = [0.5, 25.0];

pub fn make_exploration_noise(dims: usize, seed: u64, num_freqs: usize, amplitude: f64) -> ExplorationNoise {
    make_exploration_noise_in_band(dims, seed, num_freqs, amplitude, DEFAULT_NOISE_BAND)
}

/// Same as [`make_exploration_noise`] with frequencies drawn from `band`.
pub fn make_exploration_noise_in_band(
    dims: usize,
    seed: u64,
    num_freqs: usize,
    amplitude: f64,
    band: [f64; 2],
) -> ExplorationNoise {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components = (0..dims)
        .map(|_| {
            (0..num_freqs)
                .map(|_| (rng.random_range(band[0]..=band[1]), rng.random_range(0.0..2.0 * PI)))
                .collect()
        })
        .collect();
    ExplorationNoise { amplitude, components }
}

/// Global controller rebuilt from learned quantities only.
#[derive(Debug, Clone)]
pub struct LearnedGlobal {
    pub r_tilde: Mat,
    /// `R̃*·blockdiag(αᵢ)` with `αᵢ = RᵢKᵢ = BᵢᵀPᵢ`.
    pub k_global: Mat,
}

pub fn compute_global_from_learned(learned: &[Mat], r_blocks: &[Mat], coupling: &Mat) -> Result<LearnedGlobal> {
    if learned.len() != r_blocks.len() || learned.is_empty() {
        return Err(Error::dims("learned gains vs R blocks", r_blocks.len(), learned.len()));
    }
    let alphas: Vec<Mat> = learned.iter().zip(r_blocks).map(|(k, r)| r * k).collect();
    let rows: Vec<usize> = alphas.iter().map(|a| a.nrows()).collect();
    let cols: Vec<usize> = alphas.iter().map(|a| a.ncols()).collect();
    let n_total: usize = cols.iter().sum();
    if coupling.shape() != (n_total, n_total) {
        return Err(Error::dims("coupling", n_total, format!("{:?}", coupling.shape())));
    }
    // Wᵢ = αᵢᵀ(αᵢαᵢᵀ)⁻¹ plays the role of PᵢBᵢ(BᵢᵀPᵢPᵢBᵢ)⁻¹.
    let w: Vec<Mat> = alphas
        .iter()
        .enumerate()
        .map(|(i, a)| {
            mats::spd_inverse(&(a * a.transpose()), "learned αᵢαᵢᵀ")
                .map(|(inv, _)| a.transpose() * inv)
                .map_err(|e| e.in_group(i))
        })
        .collect::<Result<_>>()?;
    let m_total: usize = rows.iter().sum();
    let mut r_tilde = Mat::zeros(m_total, m_total);
    let mut r0 = 0;
    for i in 0..alphas.len() {
        let mut c0 = 0;
        for l in 0..alphas.len() {
            let blk = mats::block(coupling, &cols, &cols, i, l);
            if blk.iter().any(|v| *v != 0.0) {
                let rt = w[i].transpose() * blk * &w[l];
                r_tilde.view_mut((r0, c0), (rows[i], rows[l])).copy_from(&rt);
            }
            c0 += rows[l];
        }
        r0 += rows[i];
    }
    let r_tilde = mats::symmetrize(&r_tilde);
    let k_global = &r_tilde * mats::block_diag(&alphas)?;
    Ok(LearnedGlobal { r_tilde, k_global })
}

/// `u = −(K_local x + K_global x)`.
pub fn joint_control(k_local_blocks: &[Mat], k_global: &Mat, x: &Vector) -> Result<Vector> {
    let k_local = mats::block_diag(k_local_blocks)?;
    if k_global.shape() != k_local.shape() || x.len() != k_local.ncols() {
        return Err(Error::dims(
            "joint control",
            format!("{:?}, x of {}", k_local.shape(), k_local.ncols()),
            format!("{:?}, x of {}", k_global.shape(), x.len()),
        ));
    }
    Ok(-(k_local * x + k_global * x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn analytic_log(substeps: usize, intervals: usize, period: f64) -> TrajectoryLog {
        // x(t) = e^{−t}, u(t) = sin t.
        let h = period / substeps as f64;
        let len = substeps * intervals + 1;
        let times: Vec<f64> = (0..len).map(|k| k as f64 * h).collect();
        TrajectoryLog::new(
            period,
            substeps,
            times.clone(),
            times.iter().map(|t| Vector::from_element(1, (-t).exp())).collect(),
            times.iter().map(|t| Vector::from_element(1, t.sin())).collect(),
            times.iter().map(|t| Vector::from_element(1, t.sin())).collect(),
        )
        .unwrap()
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        for substeps in [10, 9] {
            let log = analytic_log(substeps, 3, 0.01);
            let data = build_adp_data(&log).unwrap();
            assert_relative_eq!(data.delta_xx[(0, 0)], (-0.02f64).exp() - 1.0, epsilon = 1e-15);
            for row in 0..3 {
                let (a, b) = (row as f64 * 0.01, (row + 1) as f64 * 0.01);
                let ixx = ((-2.0 * a).exp() - (-2.0 * b).exp()) / 2.0;
                // ∫ e^{−t} sin t = −e^{−t}(sin t + cos t)/2.
                let f = |t: f64| -(-t).exp() * (t.sin() + t.cos()) / 2.0;
                assert_relative_eq!(data.i_xx[(row, 0)], ixx, epsilon = 1e-8);
                assert_relative_eq!(data.i_xu[(row, 0)], f(b) - f(a), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn constant_state_gives_zero_increment() {
        let times: Vec<f64> = (0..5).map(|k| k as f64 * 0.005).collect();
        let x = Vector::from_vec(vec![1.0, -2.0]);
        let log = TrajectoryLog::new(
            0.01,
            2,
            times,
            vec![x; 5],
            vec![Vector::zeros(1); 5],
            vec![Vector::zeros(1); 5],
        )
        .unwrap();
        let data = build_adp_data(&log).unwrap();
        assert!(data.delta_xx.iter().all(|v| *v == 0.0));
        assert!(!data.rank_ok);
    }

    #[test]
    fn bad_logs_are_rejected() {
        let mut log = analytic_log(2, 2, 0.01);
        log.times[2] += 1e-4;
        assert!(log.check().is_err());
        let empty = TrajectoryLog {
            sample_period: 0.01,
            substeps: 1,
            times: vec![],
            states: vec![],
            inputs: vec![],
            noise: vec![],
        };
        assert!(build_adp_data(&empty).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let log = analytic_log(4, 3, 0.02);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let back = TrajectoryLog::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.substeps, 4);
        assert_eq!(back.num_samples(), 3);
        assert_relative_eq!(back.sample_period, 0.02, epsilon = 1e-15);
        assert_eq!(back.states, log.states);
        assert_eq!(back.inputs, log.inputs);
    }

    #[test]
    fn noise_is_deterministic() {
        let a = make_exploration_noise(3, 7, 10, 0.5);
        let b = make_exploration_noise(3, 7, 10, 0.5);
        assert_eq!(a.eval(1.234), b.eval(1.234));
        assert!(a.eval(1.234).iter().any(|v| *v != 0.0));
        assert!(a.eval(0.7).iter().all(|v| v.abs() <= 0.5));
        let silent = make_exploration_noise(3, 7, 10, 0.0);
        assert_eq!(silent.eval(2.0), Vector::zeros(3));
        for ch in &a.components {
            assert!(ch.iter().all(|&(w, phi)| (0.5..=25.0).contains(&w) && (0.0..2.0 * PI).contains(&phi)));
        }
    }

    #[test]
    fn global_from_learned_zero_coupling() {
        let k = vec![Mat::from_row_slice(1, 2, &[1.0, 2.0]), Mat::from_row_slice(1, 2, &[0.5, 1.0])];
        let r = vec![mats::eye(1), mats::eye(1)];
        let g = compute_global_from_learned(&k, &r, &Mat::zeros(4, 4)).unwrap();
        assert_eq!(g.k_global, Mat::zeros(2, 4));
        let singular = compute_global_from_learned(&[Mat::zeros(1, 2), k[1].clone()], &r, &Mat::zeros(4, 4));
        assert!(singular.is_err());
    }

    #[test]
    fn joint_control_cases() {
        let k = vec![Mat::from_row_slice(1, 2, &[1.0, 2.0])];
        let x = Vector::from_vec(vec![0.5, -1.0]);
        assert_eq!(joint_control(&k, &Mat::zeros(1, 2), &Vector::zeros(2)).unwrap(), Vector::zeros(1));
        assert_eq!(joint_control(&k, &Mat::zeros(1, 2), &x).unwrap(), -(&k[0] * &x));
    }

    #[test]
    fn unknown_counts() {
        assert_eq!(unknown_count(24, 8), 492);
        assert_eq!(unknown_count(18, 6), 279);
        assert_eq!(vecs_index(3, 1, 2), 4);
        assert_eq!(vecs_index(3, 2, 2), 5);
        assert_eq!(vecs_index(3, 2, 0), 2);
    }
}
