use std::path::Path;

use localopt_core::diagnostics::gradient_stats;
use localopt_core::engine::RecordLevel;
use localopt_core::theory::{
    recommend_gamma, thm1_bound, thm2_bound, thm3_bound, thm4_terms, BoundInputs, BoundReport, GammaRecommendation,
    TermReport,
};
use localopt_core::tuner::{h_objective, tune, TunerInputs, TunerResult, SCORE_WINDOW};
use localopt_core::{run, OuterKind, QuadraticProblem, RunConfig, RunResult};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentSpec;
use crate::error::CliError;
use crate::output::{ensure_dir, fmt_float, write_csv, write_json, write_trace_csv};

/// `sqrt(E ||v||^2)`, the noise level the bounds see.
pub fn effective_sigma(cfg: &RunConfig, dim: usize) -> f64 {
    cfg.noise_model().variance(dim).sqrt()
}

pub fn initial_distance(problem: &QuadraticProblem, cfg: &RunConfig) -> f64 {
    match &cfg.x0 {
        Some(x0) if x0.len() == problem.dim() => x0
            .iter()
            .zip(problem.minimizer().iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
        _ => problem.minimizer().norm(),
    }
}

pub fn bound_inputs(problem: &QuadraticProblem, cfg: &RunConfig) -> BoundInputs {
    BoundInputs {
        smoothness: problem.smoothness(),
        distance: initial_distance(problem, cfg),
        sigma: effective_sigma(cfg, problem.dim()),
        nodes: cfg.nodes,
        local_steps: cfg.local_steps,
        rounds: cfg.rounds,
        eta: cfg.inner_lr,
        gamma: cfg.outer.gamma,
        mu: Some(cfg.outer.mu),
    }
}

fn tail_loss(result: &RunResult) -> f64 {
    let tail = &result.traces[result.traces.len().saturating_sub(SCORE_WINDOW)..];
    tail.iter().map(|t| t.loss_x).sum::<f64>() / tail.len() as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub dim: usize,
    pub smoothness: f64,
    pub distance: f64,
    pub config: RunConfig,
    pub final_loss: f64,
    pub final_dist_sq: f64,
    pub avg_local_loss: f64,
    pub loss_avg_iterate: f64,
    pub tail_loss: f64,
    pub gradient_evals: u64,
    /// Evaluated for the plain outer optimizer only.
    pub thm1: Option<BoundReport>,
}

pub fn execute_run(spec: &ExperimentSpec) -> Result<(RunResult, RunSummary), CliError> {
    let problem = spec.build_problem()?;
    let cfg = spec.run_config();
    let result = run(&problem, &cfg)?;
    let thm1 = match cfg.outer.kind {
        OuterKind::Plain => Some(thm1_bound(&bound_inputs(&problem, &cfg))?),
        _ => None,
    };
    let summary = RunSummary {
        name: spec.name.clone(),
        dim: problem.dim(),
        smoothness: problem.smoothness(),
        distance: initial_distance(&problem, &cfg),
        final_loss: problem.loss(&result.final_x)?,
        final_dist_sq: (&result.final_x - problem.minimizer()).norm_squared(),
        avg_local_loss: result.avg_local_loss,
        loss_avg_iterate: problem.loss(&result.avg_iterate)?,
        tail_loss: tail_loss(&result),
        gradient_evals: result.wall_stats.gradient_evals,
        thm1,
        config: cfg,
    };
    Ok((result, summary))
}

/// Writes `trace.csv` and `summary.json` into `out`.
pub fn cmd_run(spec: &ExperimentSpec, out: &Path) -> Result<RunSummary, CliError> {
    let (result, summary) = execute_run(spec)?;
    ensure_dir(out)?;
    write_trace_csv(&out.join("trace.csv"), &result.traces)?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// One flattened record per `(config, seed)` of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub name: String,
    pub dim: usize,
    pub problem_seed: u64,
    pub kind: OuterKind,
    pub nodes: usize,
    pub local_steps: usize,
    pub rounds: usize,
    pub inner_lr: f64,
    pub gamma: f64,
    pub mu: f64,
    pub sf_beta: f64,
    pub sigma: f64,
    pub noise_scaling: &'static str,
    pub seed: u64,
    /// `ok`, `diverged` or `error`.
    pub status: &'static str,
    pub message: String,
    pub final_loss: f64,
    pub final_dist_sq: f64,
    pub avg_local_loss: f64,
    pub loss_avg_iterate: f64,
    pub tail_loss: f64,
    pub thm1_bound: f64,
    pub thm1_constraint_ok: bool,
    pub tuner_eta: f64,
    pub tuner_gamma: f64,
}

impl ResultRow {
    pub const HEADER: [&'static str; 25] = [
        "name",
        "dim",
        "problem_seed",
        "kind",
        "nodes",
        "local_steps",
        "rounds",
        "inner_lr",
        "gamma",
        "mu",
        "sf_beta",
        "sigma",
        "noise_scaling",
        "seed",
        "status",
        "message",
        "final_loss",
        "final_dist_sq",
        "avg_local_loss",
        "loss_avg_iterate",
        "tail_loss",
        "thm1_bound",
        "thm1_constraint_ok",
        "tuner_eta",
        "tuner_gamma",
    ];

    pub fn record(&self) -> Vec<String> {
        let f = fmt_float;
        vec![
            self.name.clone(),
            self.dim.to_string(),
            self.problem_seed.to_string(),
            self.kind.as_str().to_owned(),
            self.nodes.to_string(),
            self.local_steps.to_string(),
            self.rounds.to_string(),
            f(self.inner_lr),
            f(self.gamma),
            f(self.mu),
            f(self.sf_beta),
            f(self.sigma),
            self.noise_scaling.to_owned(),
            self.seed.to_string(),
            self.status.to_owned(),
            self.message.clone(),
            f(self.final_loss),
            f(self.final_dist_sq),
            f(self.avg_local_loss),
            f(self.loss_avg_iterate),
            f(self.tail_loss),
            f(self.thm1_bound),
            self.thm1_constraint_ok.to_string(),
            f(self.tuner_eta),
            f(self.tuner_gamma),
        ]
    }
}

fn scaling_name(cfg: &RunConfig) -> &'static str {
    match cfg.noise_scaling {
        localopt_core::NoiseScaling::Total => "total",
        localopt_core::NoiseScaling::PerCoord => "per-coord",
    }
}

fn result_row(name: &str, problem: &QuadraticProblem, cfg: &RunConfig) -> ResultRow {
    let mut row = ResultRow {
        name: name.to_owned(),
        dim: problem.dim(),
        problem_seed: cfg.problem_seed,
        kind: cfg.outer.kind,
        nodes: cfg.nodes,
        local_steps: cfg.local_steps,
        rounds: cfg.rounds,
        inner_lr: cfg.inner_lr,
        gamma: cfg.outer.gamma,
        mu: cfg.outer.mu,
        sf_beta: cfg.outer.sf_beta,
        sigma: cfg.sigma,
        noise_scaling: scaling_name(cfg),
        seed: cfg.seed,
        status: "ok",
        message: String::new(),
        final_loss: f64::NAN,
        final_dist_sq: f64::NAN,
        avg_local_loss: f64::NAN,
        loss_avg_iterate: f64::NAN,
        tail_loss: f64::NAN,
        thm1_bound: f64::NAN,
        thm1_constraint_ok: false,
        tuner_eta: f64::NAN,
        tuner_gamma: f64::NAN,
    };
    let inputs = bound_inputs(problem, cfg);
    if let Ok(rep) = thm1_bound(&inputs) {
        row.thm1_bound = rep.value;
        row.thm1_constraint_ok = rep.constraint_ok;
    }
    if let Ok(t) = tune(&tuner_inputs(&inputs)) {
        row.tuner_eta = t.eta;
        row.tuner_gamma = t.gamma;
    }
    let outcome = cfg.validate().and_then(|_| run(problem, cfg)).and_then(|res| {
        Ok((
            problem.loss(&res.final_x)?,
            (&res.final_x - problem.minimizer()).norm_squared(),
            res.avg_local_loss,
            problem.loss(&res.avg_iterate)?,
            tail_loss(&res),
        ))
    });
    match outcome {
        Ok((final_loss, final_dist_sq, avg_local_loss, loss_avg_iterate, tail)) => {
            row.final_loss = final_loss;
            row.final_dist_sq = final_dist_sq;
            row.avg_local_loss = avg_local_loss;
            row.loss_avg_iterate = loss_avg_iterate;
            row.tail_loss = tail;
        }
        Err(localopt_core::Error::Diverged { round }) => {
            row.status = "diverged";
            row.message = format!("round {round}");
        }
        Err(e) => {
            row.status = "error";
            row.message = e.to_string();
        }
    }
    row
}

fn tuner_inputs(inp: &BoundInputs) -> TunerInputs {
    TunerInputs {
        distance: inp.distance,
        smoothness: inp.smoothness,
        sigma: inp.sigma,
        nodes: inp.nodes,
        local_steps: inp.local_steps,
        rounds: inp.rounds,
    }
}

/// Runs every sweep cell for every seed; rows come out in canonical order
/// whatever the pool size.
pub fn sweep_rows(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, CliError> {
    let problem = spec.build_problem()?;
    let seeds = spec.seeds();
    let cells: Vec<RunConfig> = spec
        .sweep_configs()
        .into_iter()
        .flat_map(|cfg| {
            seeds.iter().map(move |&seed| {
                let mut c = cfg.clone();
                c.seed = seed;
                c
            })
        })
        .collect();
    Ok(cells
        .par_iter()
        .map(|cfg| result_row(&spec.name, &problem, cfg))
        .collect())
}

pub fn cmd_sweep(spec: &ExperimentSpec, out: &Path) -> Result<Vec<ResultRow>, CliError> {
    let rows = sweep_rows(spec)?;
    ensure_dir(out)?;
    let records: Vec<Vec<String>> = rows.iter().map(ResultRow::record).collect();
    write_csv(&out.join("results.csv"), &ResultRow::HEADER, &records)?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCheck {
    pub points: usize,
    pub grid_min: f64,
    /// `h(winner) / grid_min`.
    pub ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneOutput {
    #[serde(flatten)]
    pub result: TunerResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_check: Option<GridCheck>,
}

/// Minimum of `h` over an `n x n` log grid restricted to the constraint set.
pub fn feasible_grid_min(inp: &TunerInputs, n: usize) -> Result<f64, CliError> {
    let cap = 1.0 / (4.0 * inp.smoothness);
    let logspace = |lo: f64, hi: f64, i: usize| lo * (hi / lo).powf(i as f64 / (n - 1).max(1) as f64);
    let mut best = f64::INFINITY;
    for i in 0..n {
        let eta = logspace(cap * 1e-4, cap, i);
        for j in 0..n {
            let gamma = logspace(1e-2, 1e2, j);
            if inp.constraint(eta, gamma) <= 0.25 {
                best = best.min(h_objective(eta, gamma, inp)?);
            }
        }
    }
    Ok(best)
}

pub fn cmd_tune(inp: &TunerInputs, grid: Option<usize>) -> Result<TuneOutput, CliError> {
    let result = tune(inp)?;
    let grid_check = match grid {
        Some(n) => {
            let grid_min = feasible_grid_min(inp, n)?;
            let ratio = result.h / grid_min;
            Some(GridCheck {
                points: n * n,
                grid_min,
                ratio,
                passed: ratio <= 1.01,
            })
        }
        None => None,
    };
    Ok(TuneOutput { result, grid_check })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    Plain,
    Momentum,
    Accelerated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plain: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momentum: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accelerated: Option<BoundReport>,
}

/// Evaluates the selected bounds, or all of them when `which` is empty.
pub fn cmd_bound(inp: &BoundInputs, which: &[Theorem]) -> Result<BoundOutput, CliError> {
    let wants = |t| which.is_empty() || which.contains(&t);
    Ok(BoundOutput {
        plain: wants(Theorem::Plain).then(|| thm1_bound(inp)).transpose()?,
        momentum: wants(Theorem::Momentum).then(|| thm2_bound(inp)).transpose()?,
        accelerated: wants(Theorem::Accelerated).then(|| thm3_bound(inp)).transpose()?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseReport {
    pub name: String,
    pub g1_rms: f64,
    pub g2_rms: f64,
    pub mean_cosine: f64,
    pub max_drift: f64,
    pub data_dependent_terms: TermReport,
    pub recommendation: GammaRecommendation,
}

/// Step-level run with gradient statistics, the data-dependent bound terms
/// and the recommended outer learning rate. Writes `diagnose.json` and a
/// per-step `drift.csv`.
pub fn cmd_diagnose(spec: &ExperimentSpec, out: &Path, log_factor: f64) -> Result<DiagnoseReport, CliError> {
    let problem = spec.build_problem()?;
    let mut cfg = spec.run_config();
    cfg.record_level = RecordLevel::Step;
    let result = run(&problem, &cfg)?;
    let steps = result.steps.as_deref();
    let inputs = bound_inputs(&problem, &cfg);
    let stats = gradient_stats(steps.unwrap_or_default())?;
    let cosines: Vec<f64> = result
        .traces
        .iter()
        .map(|t| t.cos_sim_mean)
        .filter(|c| c.is_finite())
        .collect();
    let report = DiagnoseReport {
        name: spec.name.clone(),
        g1_rms: stats.g1_rms,
        g2_rms: stats.g2_rms,
        mean_cosine: if cosines.is_empty() {
            f64::NAN
        } else {
            cosines.iter().sum::<f64>() / cosines.len() as f64
        },
        max_drift: result.traces.iter().map(|t| t.drift_max).fold(0.0, f64::max),
        data_dependent_terms: thm4_terms(steps, &inputs, log_factor)?,
        recommendation: recommend_gamma(steps, &inputs)?,
    };
    let mut rows = Vec::new();
    for sr in steps.unwrap_or_default() {
        for (h, (v, lambda)) in sr.drift.iter().enumerate() {
            rows.push(vec![
                sr.round.to_string(),
                h.to_string(),
                fmt_float(*v),
                fmt_float(*lambda),
            ]);
        }
    }
    ensure_dir(out)?;
    write_csv(&out.join("drift.csv"), &["round", "h", "v", "lambda"], &rows)?;
    write_json(&out.join("diagnose.json"), &report)?;
    Ok(report)
}
