//! Round-by-round simulation of Generalized Local SGD.
//!
//! Every round broadcasts `x_r`, runs `H` SGD steps independently on each
//! node, averages the displacements into `delta` and hands it to the outer
//! optimizer. Node loops run on the rayon pool; each gradient draws noise
//! from its own `(seed, node, round, step)` stream and all reductions happen
//! serially in node order, so results do not depend on the thread count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{cosine_similarity, drift};
use crate::error::{Error, Result};
use crate::outer::{OuterOptimizerSpec, OuterState};
use crate::problems::{NoiseModel, NoiseScaling, QuadraticProblem};
use crate::rng::substream;
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordLevel {
    #[default]
    Round,
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub nodes: usize,
    pub local_steps: usize,
    pub rounds: usize,
    pub inner_lr: f64,
    pub outer: OuterOptimizerSpec,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub noise_scaling: NoiseScaling,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub problem_seed: u64,
    #[serde(default)]
    pub record_level: RecordLevel,
    /// Starting point; the origin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn new(nodes: usize, local_steps: usize, rounds: usize, inner_lr: f64, outer: OuterOptimizerSpec) -> Self {
        Self {
            nodes,
            local_steps,
            rounds,
            inner_lr,
            outer,
            sigma: 0.0,
            noise_scaling: NoiseScaling::Total,
            seed: 0,
            problem_seed: 0,
            record_level: RecordLevel::Round,
            x0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::invalid("nodes", "must be at least 1"));
        }
        if self.local_steps == 0 {
            return Err(Error::invalid("local_steps", "must be at least 1"));
        }
        if self.rounds == 0 {
            return Err(Error::invalid("rounds", "must be at least 1"));
        }
        if !(self.inner_lr > 0.0 && self.inner_lr.is_finite()) {
            return Err(Error::invalid("inner_lr", "must be positive and finite"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and nonnegative"));
        }
        self.outer.validate()
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel {
            sigma: self.sigma,
            scaling: self.noise_scaling,
        }
    }

    fn starting_point(&self, dim: usize) -> Result<Vector> {
        match &self.x0 {
            None => Ok(Vector::zeros(dim)),
            Some(x0) if x0.len() != dim => Err(Error::DimensionMismatch {
                expected: dim,
                got: x0.len(),
            }),
            Some(x0) if x0.iter().any(|v| !v.is_finite()) => Err(Error::invalid("x0", "must be finite")),
            Some(x0) => Ok(Vector::from_column_slice(x0)),
        }
    }
}

/// Source of the additive gradient noise.
pub trait NoiseSource: Sync {
    /// Adds the noise of `node` at local `step` of `round` to `grad`.
    fn add_noise(&self, node: usize, round: usize, step: usize, grad: &mut Vector);
}

/// Gaussian noise drawn from the counter-based streams of [`crate::rng`].
#[derive(Debug, Clone, Copy)]
pub struct SeededNoise {
    pub seed: u64,
    pub model: NoiseModel,
}

impl NoiseSource for SeededNoise {
    fn add_noise(&self, node: usize, round: usize, step: usize, grad: &mut Vector) {
        if self.model.sigma == 0.0 {
            return;
        }
        let std = self.model.coordinate_std(grad.len());
        let mut rng = substream(self.seed, node as u64, round as u64, step as u64);
        for g in grad.iter_mut() {
            *g += std * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

/// Per-round observables.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    pub round: usize,
    /// `f(x_r)` at the broadcast point of this round.
    pub loss_x: f64,
    /// `f` at the running average of all node-averaged iterates so far.
    pub loss_running_avg: f64,
    pub dist_sq: f64,
    pub delta_norm: f64,
    /// `max_h V_{r,h}` over `h = 0..=H`.
    pub drift_max: f64,
    /// `sum_h ||g_{r,h}||^2` for the node-averaged gradients.
    pub grad_sq_sum_avg: f64,
    pub grad_norm_sum_avg: f64,
    /// `(1/M) sum_{m,h} ||g_{m,r,h}||^2`.
    pub grad_sq_sum_local: f64,
    pub grad_norm_sum_local: f64,
    /// NaN for a single node.
    pub cos_sim_mean: f64,
    pub cos_sim_std: f64,
    pub cos_zero_flag: bool,
}

/// Virtual-sequence data of one round, kept at step record level.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRound {
    pub round: usize,
    /// `y_{r,h}` for `h = 0..=H`.
    pub avg_iterates: Vec<Vector>,
    /// `g_{r,h}` for `h < H`.
    pub avg_grads: Vec<Vector>,
    /// `||g_{m,r,h}||` indexed `[h][m]`.
    pub node_grad_norms: Vec<Vec<f64>>,
    /// `(V_{r,h}, Lambda_{r,h})` for `h = 0..=H`.
    pub drift: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WallStats {
    pub rounds: usize,
    /// Stochastic gradient evaluations over all nodes.
    pub gradient_evals: u64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub traces: Vec<RoundTrace>,
    /// Present at step record level.
    pub steps: Option<Vec<StepRound>>,
    pub final_x: Vector,
    pub final_state: OuterState,
    /// Mean of `y_{r,h}` over `r < R`, `h < H`.
    pub avg_iterate: Vector,
    /// `(1/(MRH)) sum f(y_{m,r,h})`.
    pub avg_local_loss: f64,
    pub wall_stats: WallStats,
}

/// One node's local trajectory within a round.
#[derive(Debug, Clone)]
pub struct NodeTrajectory {
    /// Column `h` holds `y_{m,r,h}`, `h = 0..=H`.
    pub iterates: Matrix,
    /// Column `h` holds the stochastic gradient `g_{m,r,h}`, `h < H`.
    pub grads: Matrix,
    /// `sum_{h<H} f(y_{m,r,h})`.
    pub loss_sum: f64,
}

impl NodeTrajectory {
    pub fn endpoint(&self) -> Vector {
        self.iterates.column(self.iterates.ncols() - 1).into_owned()
    }
}

fn node_epoch(
    problem: &QuadraticProblem,
    x_r: &Vector,
    config: &RunConfig,
    round: usize,
    node: usize,
    noise: &dyn NoiseSource,
) -> Result<NodeTrajectory> {
    let dim = problem.dim();
    let steps = config.local_steps;
    let mut iterates = Matrix::zeros(dim, steps + 1);
    let mut grads = Matrix::zeros(dim, steps);
    let mut y = x_r.clone();
    let mut err = Vector::zeros(dim);
    let mut g = Vector::zeros(dim);
    let mut loss_sum = 0.0;
    iterates.set_column(0, &y);
    for h in 0..steps {
        err.copy_from(&y);
        err -= problem.minimizer();
        g.gemv(1.0, problem.hessian(), &err, 0.0);
        loss_sum += 0.5 * err.dot(&g);
        noise.add_noise(node, round, h, &mut g);
        y.axpy(-config.inner_lr, &g, 1.0);
        grads.set_column(h, &g);
        iterates.set_column(h + 1, &y);
    }
    if !loss_sum.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { round });
    }
    Ok(NodeTrajectory {
        iterates,
        grads,
        loss_sum,
    })
}

/// Runs the `H` local steps of every node from `x_r`, in node order.
pub fn local_epoch(
    problem: &QuadraticProblem,
    x_r: &Vector,
    config: &RunConfig,
    round: usize,
    noise: &dyn NoiseSource,
) -> Result<Vec<NodeTrajectory>> {
    if x_r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { round });
    }
    (0..config.nodes)
        .into_par_iter()
        .map(|node| node_epoch(problem, x_r, config, round, node, noise))
        .collect()
}

/// `(1/M) sum_m (y_m - x_r)`.
pub fn aggregate(endpoints: &[Vector], x_r: &Vector) -> Result<Vector> {
    if endpoints.is_empty() {
        return Err(Error::invalid("nodes", "at least one endpoint is required"));
    }
    let mut sum = Vector::zeros(x_r.len());
    for y in endpoints {
        if y.len() != x_r.len() {
            return Err(Error::DimensionMismatch {
                expected: x_r.len(),
                got: y.len(),
            });
        }
        sum += y - x_r;
    }
    Ok(sum / endpoints.len() as f64)
}

pub fn run(problem: &QuadraticProblem, config: &RunConfig) -> Result<RunResult> {
    let noise = SeededNoise {
        seed: config.seed,
        model: NoiseModel::new(config.sigma, config.noise_scaling)?,
    };
    run_with_noise(problem, config, &noise)
}

pub fn run_with_noise(problem: &QuadraticProblem, config: &RunConfig, noise: &dyn NoiseSource) -> Result<RunResult> {
    config.validate()?;
    let dim = problem.dim();
    let m = config.nodes;
    let big_h = config.local_steps;
    let keep_steps = config.record_level == RecordLevel::Step;

    let mut state = OuterState::new(config.starting_point(dim)?);
    let mut traces = Vec::with_capacity(config.rounds);
    let mut steps = keep_steps.then(|| Vec::with_capacity(config.rounds));
    let mut avg_iterate = Vector::zeros(dim);
    let mut averaged = 0usize;
    let mut local_loss_sum = 0.0;
    let mut gradient_evals = 0u64;

    for round in 0..config.rounds {
        let x_r = state.x.clone();
        let nodes = local_epoch(problem, &x_r, config, round, noise)?;
        gradient_evals += (m * big_h) as u64;

        let mut drift_max = 0.0_f64;
        let mut grad_sq_sum_avg = 0.0;
        let mut grad_norm_sum_avg = 0.0;
        let mut grad_sq_sum_local = 0.0;
        let mut grad_norm_sum_local = 0.0;
        let mut step_round = keep_steps.then(|| StepRound {
            round,
            avg_iterates: Vec::with_capacity(big_h + 1),
            avg_grads: Vec::with_capacity(big_h),
            node_grad_norms: Vec::with_capacity(big_h),
            drift: Vec::with_capacity(big_h + 1),
        });

        let mut y_avg = Vector::zeros(dim);
        let mut g_avg = Vector::zeros(dim);
        for h in 0..=big_h {
            y_avg.fill(0.0);
            for node in &nodes {
                y_avg += node.iterates.column(h);
            }
            y_avg /= m as f64;
            let v = nodes
                .iter()
                .map(|n| {
                    n.iterates
                        .column(h)
                        .iter()
                        .zip(y_avg.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                })
                .sum::<f64>()
                / m as f64;
            drift_max = drift_max.max(v);
            if h < big_h {
                averaged += 1;
                let w = 1.0 / averaged as f64;
                avg_iterate.axpy(w, &y_avg, 1.0 - w);

                g_avg.fill(0.0);
                let mut norms = Vec::with_capacity(if keep_steps { m } else { 0 });
                for node in &nodes {
                    let g = node.grads.column(h);
                    g_avg += g;
                    let n = g.norm();
                    grad_sq_sum_local += n * n;
                    grad_norm_sum_local += n;
                    if keep_steps {
                        norms.push(n);
                    }
                }
                g_avg /= m as f64;
                let n = g_avg.norm();
                grad_sq_sum_avg += n * n;
                grad_norm_sum_avg += n;
                if let Some(sr) = step_round.as_mut() {
                    sr.avg_grads.push(g_avg.clone());
                    sr.node_grad_norms.push(norms);
                }
            }
            if let Some(sr) = step_round.as_mut() {
                let ys: Vec<Vector> = nodes.iter().map(|n| n.iterates.column(h).into_owned()).collect();
                sr.avg_iterates.push(y_avg.clone());
                sr.drift.push(drift(&ys));
            }
        }
        local_loss_sum += nodes.iter().map(|n| n.loss_sum).sum::<f64>();

        let endpoints: Vec<Vector> = nodes.iter().map(NodeTrajectory::endpoint).collect();
        let delta = aggregate(&endpoints, &x_r)?;
        let deltas: Vec<Vector> = endpoints.iter().map(|y| y - &x_r).collect();
        let similarity = cosine_similarity(round, &deltas);

        traces.push(RoundTrace {
            round,
            loss_x: problem.loss(&x_r)?,
            loss_running_avg: problem.loss(&avg_iterate)?,
            dist_sq: (&x_r - problem.minimizer()).norm_squared(),
            delta_norm: delta.norm(),
            drift_max,
            grad_sq_sum_avg,
            grad_norm_sum_avg,
            grad_sq_sum_local: grad_sq_sum_local / m as f64,
            grad_norm_sum_local: grad_norm_sum_local / m as f64,
            cos_sim_mean: similarity.mean,
            cos_sim_std: similarity.std,
            cos_zero_flag: similarity.zero_flag,
        });
        if let (Some(all), Some(sr)) = (steps.as_mut(), step_round) {
            all.push(sr);
        }

        state = state.apply(&config.outer, &delta);
        if state.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { round });
        }
    }

    let avg_local_loss = local_loss_sum / (m * big_h * config.rounds) as f64;
    if !avg_local_loss.is_finite() {
        return Err(Error::Diverged {
            round: config.rounds - 1,
        });
    }
    Ok(RunResult {
        traces,
        steps,
        final_x: state.x.clone(),
        final_state: state,
        avg_iterate,
        avg_local_loss,
        wall_stats: WallStats {
            rounds: config.rounds,
            gradient_evals,
        },
    })
}
