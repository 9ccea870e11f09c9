//! Server-side update rules.
//!
//! Every rule receives the averaged displacement
//! `delta = (1/M) sum_m (y_{m,r,H} - x_r)` and adds `gamma * delta` (or a
//! scheduled multiple of it) to its state. All rules are affine in `delta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterKind {
    #[default]
    Plain,
    Momentum,
    NesterovAccelerated,
    ScheduleFree,
}

impl OuterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OuterKind::Plain => "plain",
            OuterKind::Momentum => "momentum",
            OuterKind::NesterovAccelerated => "nesterov_accelerated",
            OuterKind::ScheduleFree => "schedule_free",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuterOptimizerSpec {
    #[serde(default)]
    pub kind: OuterKind,
    pub gamma: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "default_sf_beta")]
    pub sf_beta: f64,
}

fn default_sf_beta() -> f64 {
    0.2
}

impl OuterOptimizerSpec {
    pub fn plain(gamma: f64) -> Self {
        Self {
            kind: OuterKind::Plain,
            gamma,
            mu: 0.0,
            sf_beta: default_sf_beta(),
        }
    }

    pub fn momentum(gamma: f64, mu: f64) -> Self {
        Self {
            kind: OuterKind::Momentum,
            mu,
            ..Self::plain(gamma)
        }
    }

    pub fn nesterov(gamma: f64) -> Self {
        Self {
            kind: OuterKind::NesterovAccelerated,
            ..Self::plain(gamma)
        }
    }

    pub fn schedule_free(gamma: f64, beta: f64) -> Self {
        Self {
            kind: OuterKind::ScheduleFree,
            sf_beta: beta,
            ..Self::plain(gamma)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", "must be positive and finite"));
        }
        if !(0.0..1.0).contains(&self.mu) {
            return Err(Error::invalid("mu", "must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.sf_beta) {
            return Err(Error::invalid("sf_beta", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterState {
    /// Broadcast point for the next round.
    pub x: Vector,
    pub prev_x: Vector,
    pub u: Vector,
    pub z: Vector,
    pub sf_z: Vector,
    pub sf_xbar: Vector,
    pub round: usize,
}

impl OuterState {
    pub fn new(x0: Vector) -> Self {
        Self {
            prev_x: x0.clone(),
            u: x0.clone(),
            z: x0.clone(),
            sf_z: x0.clone(),
            sf_xbar: x0.clone(),
            x: x0,
            round: 0,
        }
    }

    /// Applies the rule selected by `spec`.
    pub fn apply(self, spec: &OuterOptimizerSpec, delta: &Vector) -> Self {
        match spec.kind {
            OuterKind::Plain => step_plain(self, delta, spec.gamma),
            OuterKind::Momentum => step_momentum(self, delta, spec.gamma, spec.mu),
            OuterKind::NesterovAccelerated => step_nesterov_accelerated(self, delta, spec.gamma),
            OuterKind::ScheduleFree => step_schedule_free(self, delta, spec.gamma, spec.sf_beta),
        }
    }
}

/// `x_{r+1} = x_r + gamma * delta`.
pub fn step_plain(mut state: OuterState, delta: &Vector, gamma: f64) -> OuterState {
    state.prev_x.copy_from(&state.x);
    state.x.axpy(gamma, delta, 1.0);
    state.round += 1;
    state
}

/// Heavy ball: `x_{r+1} = x_r + gamma * delta + mu * (x_r - x_{r-1})`.
pub fn step_momentum(mut state: OuterState, delta: &Vector, gamma: f64, mu: f64) -> OuterState {
    let mut next = &state.x + delta * gamma;
    next.axpy(mu, &(&state.x - &state.prev_x), 1.0);
    state.prev_x = std::mem::replace(&mut state.x, next);
    state.round += 1;
    state
}

/// Accelerated rule with `gamma_r = gamma (r+1)/2` and `tau_{r+1} = 2/(r+3)`.
pub fn step_nesterov_accelerated(mut state: OuterState, delta: &Vector, gamma: f64) -> OuterState {
    let r = state.round as f64;
    let gamma_r = gamma * (r + 1.0) / 2.0;
    let tau = 2.0 / (r + 3.0);
    state.u = &state.x + delta;
    state.z.axpy(gamma_r, delta, 1.0);
    let next = &state.u * (1.0 - tau) + &state.z * tau;
    state.prev_x = std::mem::replace(&mut state.x, next);
    state.round += 1;
    state
}

/// Schedule-free SGD: a z-step, a uniform running average of the z iterates,
/// and a broadcast point interpolated by `beta`.
pub fn step_schedule_free(mut state: OuterState, delta: &Vector, gamma: f64, beta: f64) -> OuterState {
    let c = 1.0 / (state.round as f64 + 2.0);
    state.sf_z.axpy(gamma, delta, 1.0);
    state.sf_xbar.axpy(c, &state.sf_z, 1.0 - c);
    let next = &state.sf_xbar * (1.0 - beta) + &state.sf_z * beta;
    state.prev_x = std::mem::replace(&mut state.x, next);
    state.round += 1;
    state
}
