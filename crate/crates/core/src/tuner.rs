//! Optimal `(eta, gamma)` pairs for the plain outer optimizer.
//!
//! The analytic tuner minimizes
//! `h(eta, gamma) = D^2/(eta gamma R H) + L sigma^2 H eta^2 + eta (1 + (gamma-1)_+) sigma^2 / M`
//! subject to `eta L (1 + (gamma - 1)_+ H) <= 1/4` by comparing two KKT
//! candidates: `gamma = 1` with an interior or capped `eta` (A), and the
//! constraint-active branch `gamma >= 1` (B). The empirical tuner grid
//! searches `gamma` with the simulator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run, RunConfig};
use crate::error::{Error, Result};
use crate::problems::QuadraticProblem;
use crate::roots::bisect_increasing;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunerInputs {
    pub distance: f64,
    pub smoothness: f64,
    pub sigma: f64,
    pub nodes: usize,
    pub local_steps: usize,
    pub rounds: usize,
}

impl TunerInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::invalid("distance", "must be positive and finite"));
        }
        if !(self.smoothness > 0.0 && self.smoothness.is_finite()) {
            return Err(Error::invalid("smoothness", "must be positive and finite"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and nonnegative"));
        }
        for (key, n) in [
            ("nodes", self.nodes),
            ("local_steps", self.local_steps),
            ("rounds", self.rounds),
        ] {
            if n == 0 {
                return Err(Error::invalid(key, "must be at least 1"));
            }
        }
        Ok(())
    }

    fn counts(&self) -> (f64, f64, f64) {
        (self.nodes as f64, self.local_steps as f64, self.rounds as f64)
    }

    /// Left side of the stepsize constraint, `eta L (1 + (gamma - 1)_+ H)`.
    pub fn constraint(&self, eta: f64, gamma: f64) -> f64 {
        eta * self.smoothness * (1.0 + (gamma - 1.0).max(0.0) * self.local_steps as f64)
    }

    /// Whether the candidate-B optimum is attained at a positive `eta`.
    /// Outside this region the infimum over the constraint-active branch is
    /// only approached as `eta -> 0`, `gamma -> inf`.
    pub fn well_posed(&self) -> bool {
        let (m, h, r) = self.counts();
        let (l, d, s2) = (self.smoothness, self.distance, self.sigma * self.sigma);
        s2 == 0.0 || (self.local_steps >= 2 && s2 < 16.0 * l * l * d * d * m * h / r)
    }
}

pub fn h_objective(eta: f64, gamma: f64, inp: &TunerInputs) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be positive"));
    }
    let (m, h, r) = inp.counts();
    let s2 = inp.sigma * inp.sigma;
    let d2 = inp.distance * inp.distance;
    Ok(
        d2 / (eta * gamma * r * h)
            + inp.smoothness * s2 * h * eta * eta
            + eta * (1.0 + (gamma - 1.0).max(0.0)) * s2 / m,
    )
}

/// `2 L H sigma^2 eta^3 + (sigma^2/M) eta^2 - D^2/(R H)`.
pub fn cubic_a(eta: f64, inp: &TunerInputs) -> f64 {
    let (m, h, r) = inp.counts();
    let s2 = inp.sigma * inp.sigma;
    2.0 * inp.smoothness * h * s2 * eta.powi(3) + s2 / m * eta * eta - inp.distance * inp.distance / (r * h)
}

/// Stationarity of `h` along `gamma = gamma_B(eta)`, multiplied through by
/// `s^2` with `s = 4 L eta (H - 1) + 1`:
/// `-16 L^2 D^2 (H-1)/R + 2 L sigma^2 H eta s^2 + sigma^2 (H-1) s^2 / (M H)`.
pub fn cubic_b(eta: f64, inp: &TunerInputs) -> f64 {
    let (m, h, r) = inp.counts();
    let (l, d) = (inp.smoothness, inp.distance);
    let s2 = inp.sigma * inp.sigma;
    let s = 4.0 * l * eta * (h - 1.0) + 1.0;
    -16.0 * l * l * d * d * (h - 1.0) / r + 2.0 * l * s2 * h * eta * s * s + s2 * (h - 1.0) * s * s / (m * h)
}

/// Largest `gamma` allowed by the constraint at `eta`.
pub fn gamma_b(eta: f64, inp: &TunerInputs) -> f64 {
    1.0 + (1.0 / (4.0 * inp.smoothness * eta) - 1.0) / inp.local_steps as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub eta: f64,
    pub gamma: f64,
    pub h: f64,
    /// Cubic residual at the bisection root; zero for closed-form values.
    pub residual: f64,
    /// Scale the residual is measured against.
    pub residual_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateBStatus {
    Feasible,
    /// `H = 1`: the constraint-active branch coincides with `gamma = 1`.
    Degenerate,
    /// `sigma = 0`: the branch has no stationary point.
    Noiseless,
    /// The stationarity equation has no positive root.
    Unattained,
    /// The root gives `gamma_B < 1`, outside the branch.
    BelowUnitGamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Winner {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TunerResult {
    pub candidate_a: Candidate,
    /// Present whenever a root was found, even if it is infeasible.
    pub candidate_b: Option<Candidate>,
    pub candidate_b_status: CandidateBStatus,
    pub winner: Winner,
    pub eta: f64,
    pub gamma: f64,
    pub h: f64,
    pub well_posed: bool,
}

pub fn solve_candidate_a(inp: &TunerInputs) -> Result<Candidate> {
    inp.validate()?;
    let (_, h, r) = inp.counts();
    let cap = 1.0 / (4.0 * inp.smoothness);
    let scale = (inp.distance * inp.distance / (r * h)).max(1.0);
    if inp.sigma == 0.0 {
        return Ok(Candidate {
            eta: cap,
            gamma: 1.0,
            h: h_objective(cap, 1.0, inp)?,
            residual: 0.0,
            residual_scale: scale,
        });
    }
    let root = bisect_increasing(|eta| cubic_a(eta, inp), cap)?;
    let eta = root.min(cap);
    Ok(Candidate {
        eta,
        gamma: 1.0,
        h: h_objective(eta, 1.0, inp)?,
        residual: cubic_a(root, inp),
        residual_scale: scale,
    })
}

/// Solves the constraint-active branch. Errors carry the reason the branch
/// has no candidate; an infeasible root is returned with its status.
pub fn solve_candidate_b(inp: &TunerInputs) -> Result<(Candidate, CandidateBStatus)> {
    inp.validate()?;
    if inp.local_steps == 1 {
        return Err(Error::DegenerateInput("candidate B needs H >= 2"));
    }
    if inp.sigma == 0.0 {
        return Err(Error::DegenerateInput("candidate B needs sigma > 0"));
    }
    if cubic_b(0.0, inp) >= 0.0 {
        return Err(Error::DegenerateInput("candidate B optimum is not attained"));
    }
    let (_, h, r) = inp.counts();
    let (l, d) = (inp.smoothness, inp.distance);
    let eta = bisect_increasing(|eta| cubic_b(eta, inp), 1.0 / (4.0 * l))?;
    let gamma = gamma_b(eta, inp);
    let status = if gamma < 1.0 {
        CandidateBStatus::BelowUnitGamma
    } else {
        CandidateBStatus::Feasible
    };
    Ok((
        Candidate {
            eta,
            gamma,
            h: h_objective(eta, gamma, inp)?,
            residual: cubic_b(eta, inp),
            residual_scale: 16.0 * l * l * d * d * (h - 1.0) / r,
        },
        status,
    ))
}

pub fn tune(inp: &TunerInputs) -> Result<TunerResult> {
    let a = solve_candidate_a(inp)?;
    let (b, status) = match solve_candidate_b(inp) {
        Ok((b, status)) => (Some(b), status),
        Err(Error::DegenerateInput(_)) => {
            let status = if inp.local_steps == 1 {
                CandidateBStatus::Degenerate
            } else if inp.sigma == 0.0 {
                CandidateBStatus::Noiseless
            } else {
                CandidateBStatus::Unattained
            };
            (None, status)
        }
        Err(e) => return Err(e),
    };
    let winner = match (b, status) {
        (Some(b), CandidateBStatus::Feasible) if b.h < a.h && (a.h - b.h) > 1e-12 * a.h.max(b.h) => Winner::B,
        _ => Winner::A,
    };
    let chosen = match winner {
        Winner::A => a,
        Winner::B => b.expect("winner B implies a candidate"),
    };
    Ok(TunerResult {
        candidate_a: a,
        candidate_b: b,
        candidate_b_status: status,
        winner,
        eta: chosen.eta,
        gamma: chosen.gamma,
        h: chosen.h,
        well_posed: inp.well_posed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaScore {
    pub gamma: f64,
    /// Mean over seeds; `+inf` when any seed diverged.
    pub score: f64,
    pub per_seed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalTune {
    pub best_gamma: f64,
    pub table: Vec<GammaScore>,
}

/// Number of trailing rounds averaged into a run's score.
pub const SCORE_WINDOW: usize = 10;

/// Mean of `f(x_r)` over the last [`SCORE_WINDOW`] rounds of `base` run
/// with outer learning rate `gamma` and noise `seed`; `+inf` on divergence.
pub fn score_run(problem: &QuadraticProblem, base: &RunConfig, gamma: f64, seed: u64) -> Result<f64> {
    let mut cfg = base.clone();
    cfg.outer.gamma = gamma;
    cfg.seed = seed;
    match run(problem, &cfg) {
        Ok(res) => {
            let tail = &res.traces[res.traces.len().saturating_sub(SCORE_WINDOW)..];
            Ok(tail.iter().map(|t| t.loss_x).sum::<f64>() / tail.len() as f64)
        }
        Err(Error::Diverged { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Grid search over `gamma` scored by the trailing-window loss averaged over
/// `seeds`. Ties go to the earlier grid entry.
pub fn empirical_tune_gamma(
    problem: &QuadraticProblem,
    base: &RunConfig,
    gamma_grid: &[f64],
    sigma: f64,
    seeds: &[u64],
) -> Result<EmpiricalTune> {
    if gamma_grid.is_empty() {
        return Err(Error::invalid("gamma_grid", "must not be empty"));
    }
    if seeds.is_empty() {
        return Err(Error::invalid("seeds", "must not be empty"));
    }
    let mut cfg = base.clone();
    cfg.sigma = sigma;
    for &gamma in gamma_grid {
        cfg.outer.gamma = gamma;
        cfg.validate()?;
    }
    let cells: Vec<(f64, u64)> = gamma_grid
        .iter()
        .flat_map(|&g| seeds.iter().map(move |&s| (g, s)))
        .collect();
    let scores = cells
        .par_iter()
        .map(|&(g, s)| score_run(problem, &cfg, g, s))
        .collect::<Result<Vec<f64>>>()?;

    let table: Vec<GammaScore> = gamma_grid
        .iter()
        .zip(scores.chunks(seeds.len()))
        .map(|(&gamma, per_seed)| GammaScore {
            gamma,
            score: per_seed.iter().sum::<f64>() / per_seed.len() as f64,
            per_seed: per_seed.to_vec(),
        })
        .collect();
    let mut best: Option<&GammaScore> = None;
    for row in &table {
        if row.score.is_finite() && best.is_none_or(|b| row.score < b.score) {
            best = Some(row);
        }
    }
    let best_gamma = best.ok_or(Error::AllDiverged)?.gamma;
    Ok(EmpiricalTune { best_gamma, table })
}
