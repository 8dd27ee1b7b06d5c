//! Serializable run reports.

use hierlqr::mats;
use hierlqr::sim::{CostComparison, FormationScenario, GroupLearning, SolverSettings, TrackingErrors};
use hierlqr::Mat;
use serde::Serialize;

pub type Rows = Vec<Vec<f64>>;

pub fn rows(m: &Mat) -> Rows {
    mats::to_rows(m)
}

/// Configuration echo without the output location, so reports from
/// different output directories compare equal.
#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub name: String,
    pub scenario: FormationScenario,
    pub solver: SolverSettings,
}

#[derive(Debug, Serialize)]
pub struct SynthGroup {
    pub group: usize,
    pub state_dim: usize,
    pub input_dim: usize,
    pub are_residual: f64,
    /// Residual over `max(1, ‖P‖_F)`.
    pub are_residual_relative: f64,
    pub positive_definite: bool,
    pub p: Rows,
    pub k: Rows,
}

#[derive(Debug, Serialize)]
pub struct CostSummary {
    pub q_tilde_scale: f64,
    pub j_opt: f64,
    pub j_hier: f64,
    pub ratio: f64,
    pub coupling_residual: f64,
    pub q_tilde_gap: f64,
}

impl From<&CostComparison> for CostSummary {
    fn from(c: &CostComparison) -> Self {
        CostSummary {
            q_tilde_scale: c.q_tilde_scale,
            j_opt: c.j_opt,
            j_hier: c.j_hier,
            ratio: c.ratio,
            coupling_residual: c.coupling_residual,
            q_tilde_gap: c.q_tilde_gap,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SynthReport {
    pub command: &'static str,
    pub config: ConfigEcho,
    pub groups: Vec<SynthGroup>,
    pub r_tilde: Rows,
    pub max_gram_condition: f64,
    pub k_global: Rows,
    pub k_total: Rows,
    pub cost: CostSummary,
    pub files: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct LearnedGroup {
    pub group: usize,
    pub agents: usize,
    pub state_dim: usize,
    pub input_dim: usize,
    pub data_rows: usize,
    pub unknowns: usize,
    pub rank: usize,
    pub rank_ok: bool,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub max_condition: f64,
    /// `‖K_learned − K_oracle‖_F / ‖K_oracle‖_F`.
    pub gain_error: f64,
    pub k0: Rows,
    pub k_learned: Rows,
    pub k_oracle: Rows,
    pub p_learned: Rows,
}

impl LearnedGroup {
    pub fn new(j: usize, agents: usize, g: &GroupLearning) -> Self {
        LearnedGroup {
            group: j + 1,
            agents,
            state_dim: g.k0.ncols(),
            input_dim: g.k0.nrows(),
            data_rows: g.rows,
            unknowns: g.unknowns,
            rank: g.rank,
            rank_ok: g.rank == g.unknowns,
            iterations: g.learn.iterations,
            history: g.learn.history.clone(),
            max_condition: g.learn.max_condition,
            gain_error: g.gain_error,
            k0: rows(&g.k0),
            k_learned: rows(&g.learn.k_learned),
            k_oracle: rows(&g.k_oracle),
            p_learned: rows(&g.learn.p_learned),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Tracking {
    pub centroid_errors: Vec<f64>,
    pub formation_errors: Vec<Vec<f64>>,
    pub max_centroid_error: f64,
    pub max_formation_error: f64,
    pub integrator_rate: f64,
}

impl From<&TrackingErrors> for Tracking {
    fn from(t: &TrackingErrors) -> Self {
        Tracking {
            centroid_errors: t.centroid.clone(),
            formation_errors: t.formation.clone(),
            max_centroid_error: t.max_centroid(),
            max_formation_error: t.max_formation(),
            integrator_rate: t.integrator_rate,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Deployment {
    pub switch_time: f64,
    pub horizon: f64,
    pub spectral_abscissa: f64,
    pub hurwitz: bool,
    pub final_errors: Tracking,
    pub k_hierarchical: Rows,
}

#[derive(Debug, Serialize)]
pub struct LearnReport {
    pub command: &'static str,
    pub config: ConfigEcho,
    pub groups: Vec<LearnedGroup>,
    pub centralized_unknowns: usize,
    pub deployment: Deployment,
    pub files: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub command: &'static str,
    pub config: ConfigEcho,
    pub groups: Vec<LearnedGroup>,
    pub centralized_unknowns: usize,
    pub deployment: Deployment,
    pub baseline_errors: Tracking,
    pub k_optimal: Rows,
    /// Largest distance between learned and baseline agent positions.
    pub trajectory_deviation: f64,
    pub cost_table: Vec<CostSummary>,
    pub files: Vec<String>,
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}
