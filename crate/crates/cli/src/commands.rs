//! The `synth`, `learn`, and `compare` subcommands.

use std::fmt::Write;
use std::fs;
use std::path::PathBuf;

use hierlqr::hierarchy::{self, LqrProblem};
use hierlqr::sim::{self, build_global_coupling, build_scenario_model, ExperimentReport, ScenarioModel};
use hierlqr::Mat;

use crate::config::ScenarioConfig;
use crate::output::{self, AgentTrajectory};
use crate::report::{
    self, rows, CompareReport, ConfigEcho, CostSummary, Deployment, LearnReport, LearnedGroup, SynthGroup, SynthReport,
};
use crate::CliError;

/// Files written by a command and the report text.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report_json: String,
    pub files: Vec<PathBuf>,
    /// Human-readable tables for the terminal.
    pub summary: String,
}

fn echo(cfg: &ScenarioConfig) -> ConfigEcho {
    ConfigEcho {
        name: cfg.name.clone(),
        scenario: cfg.scenario.clone(),
        solver: cfg.solver,
    }
}

fn prepare_out(cfg: &ScenarioConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out_dir.display())))
}

fn write_file(cfg: &ScenarioConfig, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = cfg.out_dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(())
}

pub fn cmd_synth(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let sc = &cfg.scenario;
    let tol = cfg.solver.care_tol;
    let model = build_scenario_model(sc)?;
    let problems: Vec<LqrProblem> = model
        .plants
        .iter()
        .zip(model.q_bar_blocks.iter().zip(&model.r_blocks))
        .map(|(p, (q, r))| LqrProblem {
            a: p.a_aug.clone(),
            b: p.b_aug.clone(),
            q: q.clone(),
            r: r.clone(),
        })
        .collect();
    let coupling = build_global_coupling(&model.plants, &sc.edges(), sc.q_tilde_scale)?;
    let (locals, gain) = hierarchy::synthesize(&problems, &coupling, tol)?;
    let b_blocks: Vec<Mat> = problems.iter().map(|p| p.b.clone()).collect();
    let rt = hierarchy::compute_r_tilde(&gain.p_blocks, &b_blocks, &coupling)?;
    let plant = LqrProblem {
        a: model.a_net.clone(),
        b: model.b_net.clone(),
        q: model.q_bar() + &coupling,
        r: model.r(),
    };
    let sub = hierarchy::suboptimality_report(&plant, &gain, &b_blocks, &coupling, &model.x0, tol)?;

    let groups: Vec<SynthGroup> = locals
        .iter()
        .enumerate()
        .map(|(j, s)| SynthGroup {
            group: j + 1,
            state_dim: s.p.nrows(),
            input_dim: s.k.nrows(),
            are_residual: s.residual_norm,
            are_residual_relative: s.residual_norm / s.p.norm().max(1.0),
            positive_definite: s.positive_definite,
            p: rows(&s.p),
            k: rows(&s.k),
        })
        .collect();
    let mut summary = String::new();
    let _ = writeln!(summary, "group  dim(P)  ARE residual (rel)");
    for g in &groups {
        let _ = writeln!(summary, "{:>5}  {:>6}  {:.3e}", g.group, g.state_dim, g.are_residual_relative);
    }
    let _ = writeln!(
        summary,
        "coupling residual {:.4e}, cost ratio J_hier/J_opt = {:.6}",
        gain.coupling_residual, sub.ratio
    );

    prepare_out(cfg)?;
    let report = SynthReport {
        command: "synth",
        config: echo(cfg),
        groups,
        r_tilde: rows(&gain.r_tilde),
        max_gram_condition: rt.max_gram_condition,
        k_global: rows(&gain.k_global),
        k_total: rows(&gain.k_total),
        cost: CostSummary {
            q_tilde_scale: sc.q_tilde_scale,
            j_opt: sub.j_opt,
            j_hier: sub.j_hier,
            ratio: sub.ratio,
            coupling_residual: sub.coupling_residual,
            q_tilde_gap: sub.q_tilde_gap,
        },
        files: vec!["report.json".into()],
    };
    let json = report::to_json(&report);
    let mut files = Vec::new();
    write_file(cfg, "report.json", &json, &mut files)?;
    Ok(Outcome {
        report_json: json,
        files,
        summary,
    })
}

fn learned_groups(model: &ScenarioModel, exp: &ExperimentReport) -> Vec<LearnedGroup> {
    exp.groups
        .iter()
        .enumerate()
        .map(|(j, g)| LearnedGroup::new(j, model.plants[j].size, g))
        .collect()
}

fn deployment(cfg: &ScenarioConfig, exp: &ExperimentReport) -> Deployment {
    Deployment {
        switch_time: exp.switch_time,
        horizon: cfg.scenario.horizon,
        spectral_abscissa: exp.learned_abscissa,
        hurwitz: exp.learned_hurwitz,
        final_errors: (&exp.learned_errors).into(),
        k_hierarchical: rows(&exp.k_learned),
    }
}

fn learning_summary(groups: &[LearnedGroup], central: usize, exp: &ExperimentReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "group  rows  unknowns  rank  iters  gain error vs oracle");
    for g in groups {
        let _ = writeln!(
            s,
            "{:>5}  {:>4}  {:>8}  {:>4}  {:>5}  {:.3e}",
            g.group, g.data_rows, g.unknowns, g.rank, g.iterations, g.gain_error
        );
    }
    let _ = writeln!(s, "centralized unknowns: {central}");
    let _ = writeln!(
        s,
        "deployed loop abscissa {:.4}, max centroid error {:.3e} m, max formation error {:.3e} m",
        exp.learned_abscissa,
        exp.learned_errors.max_centroid(),
        exp.learned_errors.max_formation()
    );
    s
}

struct Experiment {
    model: ScenarioModel,
    exp: ExperimentReport,
    learned: AgentTrajectory,
}

fn run(cfg: &ScenarioConfig) -> Result<Experiment, CliError> {
    cfg.validate()?;
    let model = build_scenario_model(&cfg.scenario)?;
    let exp = sim::run_experiment(&cfg.scenario, &cfg.solver)?;
    let learned = output::assemble(&model, &exp, &exp.learned_run)?;
    Ok(Experiment { model, exp, learned })
}

pub fn cmd_learn(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let Experiment { model, exp, learned } = run(cfg)?;
    prepare_out(cfg)?;
    let mut files = Vec::new();
    let csv = cfg.out_dir.join("traj_learned.csv");
    learned.write_csv(&csv)?;
    files.push(csv);

    let groups = learned_groups(&model, &exp);
    let summary = learning_summary(&groups, exp.centralized_unknowns, &exp);
    let report = LearnReport {
        command: "learn",
        config: echo(cfg),
        groups,
        centralized_unknowns: exp.centralized_unknowns,
        deployment: deployment(cfg, &exp),
        files: vec!["report.json".into(), "traj_learned.csv".into()],
    };
    let json = report::to_json(&report);
    write_file(cfg, "report.json", &json, &mut files)?;
    Ok(Outcome {
        report_json: json,
        files,
        summary,
    })
}

pub fn cmd_compare(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let Experiment { model, exp, learned } = run(cfg)?;
    let baseline = output::assemble(&model, &exp, &exp.baseline_run)?;
    let learned_gains: Vec<Mat> = exp.groups.iter().map(|g| g.learn.k_learned.clone()).collect();
    let cost_table: Vec<CostSummary> = cfg
        .compare_scales
        .iter()
        .map(|&scale| {
            sim::compare_costs(&cfg.scenario, &model, &learned_gains, scale, &cfg.solver).map(|c| CostSummary::from(&c))
        })
        .collect::<Result<_, _>>()?;

    prepare_out(cfg)?;
    let mut files = Vec::new();
    let mut names = vec!["report.json".to_string()];
    for (name, traj) in [("traj_learned.csv", &learned), ("traj_baseline.csv", &baseline)] {
        let path = cfg.out_dir.join(name);
        traj.write_csv(&path)?;
        files.push(path);
        names.push(name.into());
    }
    let svg = output::trajectory_plot(&model, &baseline, &learned, exp.switch_time).to_svg();
    write_file(cfg, "plots/trajectories.svg", &svg, &mut files)?;
    names.push("plots/trajectories.svg".into());
    for &[g, a] in &cfg.input_traces {
        let name = format!("plots/inputs_g{g}_a{a}.svg");
        let svg = output::input_plot(&baseline, &learned, g - 1, a - 1, exp.switch_time).to_svg();
        write_file(cfg, &name, &svg, &mut files)?;
        names.push(name);
    }

    let groups = learned_groups(&model, &exp);
    let mut summary = learning_summary(&groups, exp.centralized_unknowns, &exp);
    let _ = writeln!(summary, "largest learned vs optimal position deviation {:.4} m", exp.trajectory_deviation);
    let _ = writeln!(summary, "Q̃ scale  J_opt          J_hier         ratio");
    for c in &cost_table {
        let _ = writeln!(summary, "{:>7}  {:<13.6e}  {:<13.6e}  {:.6}", c.q_tilde_scale, c.j_opt, c.j_hier, c.ratio);
    }
    let report = CompareReport {
        command: "compare",
        config: echo(cfg),
        groups,
        centralized_unknowns: exp.centralized_unknowns,
        deployment: deployment(cfg, &exp),
        baseline_errors: (&exp.baseline_errors).into(),
        k_optimal: rows(&exp.k_optimal),
        trajectory_deviation: exp.trajectory_deviation,
        cost_table,
        files: names,
    };
    let json = report::to_json(&report);
    write_file(cfg, "report.json", &json, &mut files)?;
    Ok(Outcome {
        report_json: json,
        files,
        summary,
    })
}
