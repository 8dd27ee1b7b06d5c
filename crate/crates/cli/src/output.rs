//! Per-agent trajectory tables, CSV files, and plots.

use std::path::Path;

use hierlqr::adp::TrajectoryLog;
use hierlqr::sim::{ExperimentReport, ScenarioModel};
use hierlqr::Vector;

use crate::plot::{Marker, Plot, Series, Stroke, PALETTE};
use crate::CliError;

const FIELDS: [&str; 6] = ["px", "py", "vx", "vy", "ux", "uy"];

/// One row per time with six values per agent, groups and agents in order.
#[derive(Debug, Clone)]
pub struct AgentTrajectory {
    pub group_sizes: Vec<usize>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl AgentTrajectory {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["time".to_string()];
        for (j, &p) in self.group_sizes.iter().enumerate() {
            for a in 0..p {
                for f in FIELDS {
                    h.push(format!("g{}_a{}_{f}", j + 1, a + 1));
                }
            }
        }
        h
    }

    /// Column offset of agent `a` of group `j` (0-based) within a row.
    pub fn agent_offset(&self, j: usize, a: usize) -> usize {
        6 * (self.group_sizes[..j].iter().sum::<usize>() + a)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        w.write_record(self.header()).map_err(io)?;
        for (t, row) in self.times.iter().zip(&self.rows) {
            let rec = std::iter::once(t).chain(row).map(|v| v.to_string());
            w.write_record(rec).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn agent_row(model: &ScenarioModel, x: &Vector, u: &Vector) -> Vec<f64> {
    let mut row = Vec::new();
    let mut u0 = 0;
    for (j, p) in model.plants.iter().enumerate() {
        let states = p.agent_states(&model.group_slice(x, j));
        for (i, s) in states.iter().enumerate() {
            row.extend_from_slice(s);
            row.push(u[u0 + 2 * i]);
            row.push(u[u0 + 2 * i + 1]);
        }
        u0 += p.input_dim();
    }
    row
}

/// Pre-switch exploration traces of every group followed by `run`.
pub fn assemble(model: &ScenarioModel, report: &ExperimentReport, run: &TrajectoryLog) -> Result<AgentTrajectory, CliError> {
    let len = report.groups[0].pre_switch.times.len();
    if report.groups.iter().any(|g| g.pre_switch.times.len() != len) {
        return Err(CliError::Io("pre-switch traces of the groups have different lengths".into()));
    }
    let mut out = AgentTrajectory {
        group_sizes: model.plants.iter().map(|p| p.size).collect(),
        times: Vec::with_capacity(len + run.times.len()),
        rows: Vec::with_capacity(len + run.times.len()),
    };
    for k in 0..len {
        let x = Vector::from_iterator(
            model.a_net.nrows(),
            report.groups.iter().flat_map(|g| g.pre_switch.states[k].iter().copied().collect::<Vec<_>>()),
        );
        let u = Vector::from_iterator(
            model.b_net.ncols(),
            report.groups.iter().flat_map(|g| g.pre_switch.inputs[k].iter().copied().collect::<Vec<_>>()),
        );
        out.times.push(report.groups[0].pre_switch.times[k]);
        out.rows.push(agent_row(model, &x, &u));
    }
    for (k, t) in run.times.iter().enumerate() {
        if k == 0 && out.times.last().is_some_and(|last| (last - t).abs() < 1e-9) {
            continue;
        }
        out.times.push(*t);
        out.rows.push(agent_row(model, &run.states[k], &run.inputs[k]));
    }
    Ok(out)
}

/// Row indices at or after `t0`.
fn from_time(traj: &AgentTrajectory, t0: f64) -> impl Iterator<Item = usize> + '_ {
    traj.times.iter().enumerate().filter(move |(_, t)| **t >= t0 - 1e-9).map(|(k, _)| k)
}

/// Agent paths from `t0` on.
pub fn trajectory_plot(model: &ScenarioModel, baseline: &AgentTrajectory, learned: &AgentTrajectory, t0: f64) -> Plot {
    let mut plot = Plot {
        title: format!("Agent positions from t = {t0} s"),
        x_label: "x (m)".into(),
        y_label: "y (m)".into(),
        equal_aspect: true,
        ..Plot::default()
    };
    for (j, p) in model.plants.iter().enumerate() {
        let color = PALETTE[j % PALETTE.len()];
        for a in 0..p.size {
            for (traj, stroke) in [(baseline, Stroke::Solid), (learned, Stroke::DashDot)] {
                let c = traj.agent_offset(j, a);
                plot.series.push(Series {
                    points: from_time(traj, t0).map(|k| (traj.rows[k][c], traj.rows[k][c + 1])).collect(),
                    color,
                    stroke,
                });
            }
        }
        let n = 2 * p.size;
        plot.markers.push(Marker {
            at: (p.setpoint[n - 2], p.setpoint[n - 1]),
            color,
        });
    }
    plot
}

/// Input traces of agent `a` in group `j`, both 0-based, from `t0` on.
pub fn input_plot(baseline: &AgentTrajectory, learned: &AgentTrajectory, j: usize, a: usize, t0: f64) -> Plot {
    let mut plot = Plot {
        title: format!("Inputs of group {} agent {}", j + 1, a + 1),
        x_label: "time (s)".into(),
        y_label: "input ux (blue), uy (red)".into(),
        ..Plot::default()
    };
    let c = baseline.agent_offset(j, a);
    for (axis, color) in [(4, PALETTE[0]), (5, PALETTE[1])] {
        for (traj, stroke) in [(baseline, Stroke::Solid), (learned, Stroke::DashDot)] {
            plot.series.push(Series {
                points: from_time(traj, t0).map(|k| (traj.times[k], traj.rows[k][c + axis])).collect(),
                color,
                stroke,
            });
        }
    }
    plot
}
