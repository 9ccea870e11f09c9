//! Optimal outer learning rate versus noise level on a random quadratic.
//!
//! For every `sigma` the `gamma` grid is scored by the mean of `f(x_r)` over
//! the last ten rounds, averaged over several noise seeds; the best `gamma`
//! per `sigma` and its seed-averaged loss trajectory are reported.

use std::path::Path;

use localopt_core::problems::make_random_quadratic;
use localopt_core::tuner::{empirical_tune_gamma, GammaScore};
use localopt_core::{run, NoiseScaling, OuterOptimizerSpec, RunConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::output::{ensure_dir, fmt_float, write_csv, write_json};

pub const SIGMAS: [f64; 10] = [1e-3, 1e-2, 1e-1, 0.5, 1.0, 5.0, 10.0, 15.0, 25.0, 50.0];
pub const GAMMAS: [f64; 10] = [0.001, 0.01, 0.1, 0.5, 0.9, 1.0, 1.1, 1.25, 1.5, 2.0];
pub const PROBLEM_SEED: u64 = 7;
pub const DEFAULT_NODES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Options {
    pub dim: usize,
    pub problem_seed: u64,
    pub nodes: usize,
    pub local_steps: usize,
    pub rounds: usize,
    pub inner_lr: f64,
    pub noise_scaling: NoiseScaling,
    pub seeds: Vec<u64>,
    pub sigmas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for Fig1Options {
    fn default() -> Self {
        Self {
            dim: 50,
            problem_seed: PROBLEM_SEED,
            nodes: DEFAULT_NODES,
            local_steps: 50,
            rounds: 1000,
            inner_lr: 0.001,
            noise_scaling: NoiseScaling::Total,
            seeds: (1..=5).collect(),
            sigmas: SIGMAS.to_vec(),
            gammas: GAMMAS.to_vec(),
        }
    }
}

impl Fig1Options {
    /// Replaces the noise seeds with `count` consecutive seeds from `base`.
    pub fn with_base_seed(mut self, base: u64) -> Self {
        let count = self.seeds.len() as u64;
        self.seeds = (0..count).map(|i| base.wrapping_add(i)).collect();
        self
    }

    fn base_config(&self) -> RunConfig {
        let mut cfg = RunConfig::new(
            self.nodes,
            self.local_steps,
            self.rounds,
            self.inner_lr,
            OuterOptimizerSpec::plain(1.0),
        );
        cfg.noise_scaling = self.noise_scaling;
        cfg.problem_seed = self.problem_seed;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaResult {
    pub sigma: f64,
    pub best_gamma: f64,
    pub best_index: usize,
    pub best_score: f64,
    pub table: Vec<GammaScore>,
    /// Seed-averaged `f(x_r)` of the best `gamma`, one entry per round.
    #[serde(skip)]
    pub trajectory: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Report {
    pub options: Fig1Options,
    pub smoothness: f64,
    /// Scores are averaged over `options.seeds` rather than a single run.
    pub multi_seed_average: bool,
    pub results: Vec<SigmaResult>,
}

impl Fig1Report {
    pub fn best_indices(&self) -> Vec<usize> {
        self.results.iter().map(|r| r.best_index).collect()
    }
}

pub fn reproduce_fig1(opts: &Fig1Options) -> Result<Fig1Report, CliError> {
    if opts.seeds.is_empty() || opts.sigmas.is_empty() || opts.gammas.is_empty() {
        return Err(CliError::invalid("fig1", "seeds, sigmas and gammas must be nonempty"));
    }
    let problem = make_random_quadratic(opts.dim, opts.problem_seed)?;
    let base = opts.base_config();
    let mut results = Vec::with_capacity(opts.sigmas.len());
    for &sigma in &opts.sigmas {
        let tuned = empirical_tune_gamma(&problem, &base, &opts.gammas, sigma, &opts.seeds)?;
        let best_index = opts
            .gammas
            .iter()
            .position(|&g| g == tuned.best_gamma)
            .expect("best gamma comes from the grid");

        let mut cfg = base.clone();
        cfg.sigma = sigma;
        cfg.outer.gamma = tuned.best_gamma;
        let runs = opts
            .seeds
            .par_iter()
            .map(|&seed| {
                let mut c = cfg.clone();
                c.seed = seed;
                run(&problem, &c)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let trajectory = (0..opts.rounds)
            .map(|r| runs.iter().map(|res| res.traces[r].loss_x).sum::<f64>() / runs.len() as f64)
            .collect();

        results.push(SigmaResult {
            sigma,
            best_gamma: tuned.best_gamma,
            best_index,
            best_score: tuned.table[best_index].score,
            table: tuned.table,
            trajectory,
        });
    }
    Ok(Fig1Report {
        options: opts.clone(),
        smoothness: problem.smoothness(),
        multi_seed_average: opts.seeds.len() > 1,
        results,
    })
}

/// Writes `optimal_gamma.csv`, `scores.csv`, `trajectories.csv` and
/// `fig1_summary.json`.
pub fn write_fig1(report: &Fig1Report, out: &Path) -> Result<(), CliError> {
    ensure_dir(out)?;
    let optimal: Vec<Vec<String>> = report
        .results
        .iter()
        .map(|r| vec![fmt_float(r.sigma), fmt_float(r.best_gamma), fmt_float(r.best_score)])
        .collect();
    write_csv(
        &out.join("optimal_gamma.csv"),
        &["sigma", "best_gamma", "best_score"],
        &optimal,
    )?;

    let mut scores = Vec::new();
    for r in &report.results {
        for row in &r.table {
            scores.push(vec![fmt_float(r.sigma), fmt_float(row.gamma), fmt_float(row.score)]);
        }
    }
    write_csv(&out.join("scores.csv"), &["sigma", "gamma", "score"], &scores)?;

    let mut traj = Vec::new();
    for r in &report.results {
        for (round, loss) in r.trajectory.iter().enumerate() {
            traj.push(vec![
                fmt_float(r.sigma),
                fmt_float(r.best_gamma),
                round.to_string(),
                fmt_float(*loss),
            ]);
        }
    }
    write_csv(
        &out.join("trajectories.csv"),
        &["sigma", "gamma", "round", "loss"],
        &traj,
    )?;
    write_json(&out.join("fig1_summary.json"), report)
}
