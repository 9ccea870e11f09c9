//! Experiment configuration files.
//!
//! A config is a single JSON object:
//!
//! ```json
//! {
//!   "name": "demo",
//!   "problem": { "dim": 20, "problem_seed": 7 },
//!   "run": {
//!     "nodes": 4, "local_steps": 10, "rounds": 200, "inner_lr": 0.001,
//!     "outer": { "kind": "plain", "gamma": 1.0 },
//!     "sigma": 0.5, "seed": 1
//!   },
//!   "sweep": { "gamma": [0.5, 1.0, 2.0], "sigma": [0.1, 1.0] },
//!   "seeds": [1, 2, 3]
//! }
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::path::Path;

use localopt_core::engine::RecordLevel;
use localopt_core::problems::make_random_quadratic;
use localopt_core::{NoiseScaling, OuterKind, OuterOptimizerSpec, QuadraticProblem, RunConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub problem: ProblemSpec,
    pub run: RunSection,
    #[serde(default)]
    pub sweep: SweepAxes,
    /// Noise seeds for sweeps; defaults to `run.seed`.
    #[serde(default)]
    pub seeds: Vec<u64>,
}

fn default_name() -> String {
    "experiment".to_owned()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub dim: usize,
    #[serde(default)]
    pub problem_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
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
    pub record_level: RecordLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub kind: Option<Vec<OuterKind>>,
    pub inner_lr: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub noise_scaling: Option<NoiseScaling>,
    pub nodes: Option<usize>,
}

impl ExperimentSpec {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: Self = serde_path_to_error::deserialize(de).map_err(schema_error)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.run.seed = seed;
            self.seeds = vec![seed];
        }
        if let Some(scaling) = overrides.noise_scaling {
            self.run.noise_scaling = scaling;
        }
        if let Some(nodes) = overrides.nodes {
            self.run.nodes = nodes;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.problem.dim == 0 {
            return Err(CliError::invalid("dim", "must be at least 1"));
        }
        let axes = [
            ("kind", self.sweep.kind.as_ref().map(Vec::len)),
            ("inner_lr", self.sweep.inner_lr.as_ref().map(Vec::len)),
            ("mu", self.sweep.mu.as_ref().map(Vec::len)),
            ("gamma", self.sweep.gamma.as_ref().map(Vec::len)),
            ("sigma", self.sweep.sigma.as_ref().map(Vec::len)),
        ];
        for (key, len) in axes {
            if len == Some(0) {
                return Err(CliError::invalid(key, "sweep axis must not be empty"));
            }
        }
        self.run_config().validate()?;
        Ok(())
    }

    pub fn run_config(&self) -> RunConfig {
        let r = &self.run;
        RunConfig {
            nodes: r.nodes,
            local_steps: r.local_steps,
            rounds: r.rounds,
            inner_lr: r.inner_lr,
            outer: r.outer,
            sigma: r.sigma,
            noise_scaling: r.noise_scaling,
            seed: r.seed,
            problem_seed: self.problem.problem_seed,
            record_level: r.record_level,
            x0: r.x0.clone(),
        }
    }

    pub fn build_problem(&self) -> Result<QuadraticProblem, CliError> {
        Ok(make_random_quadratic(self.problem.dim, self.problem.problem_seed)?)
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.run.seed]
        } else {
            self.seeds.clone()
        }
    }

    /// Every configuration of the sweep, in axis declaration order
    /// (`kind`, `inner_lr`, `mu`, `gamma`, `sigma`) with the last axis fastest.
    pub fn sweep_configs(&self) -> Vec<RunConfig> {
        let base = self.run_config();
        let axis = |values: &Option<Vec<f64>>, current: f64| values.clone().unwrap_or_else(|| vec![current]);
        let kinds = self.sweep.kind.clone().unwrap_or_else(|| vec![base.outer.kind]);
        let mut out = Vec::new();
        for &kind in &kinds {
            for &inner_lr in &axis(&self.sweep.inner_lr, base.inner_lr) {
                for &mu in &axis(&self.sweep.mu, base.outer.mu) {
                    for &gamma in &axis(&self.sweep.gamma, base.outer.gamma) {
                        for &sigma in &axis(&self.sweep.sigma, base.sigma) {
                            let mut cfg = base.clone();
                            cfg.outer.kind = kind;
                            cfg.inner_lr = inner_lr;
                            cfg.outer.mu = mu;
                            cfg.outer.gamma = gamma;
                            cfg.sigma = sigma;
                            out.push(cfg);
                        }
                    }
                }
            }
        }
        out
    }
}

fn schema_error(err: serde_path_to_error::Error<serde_json::Error>) -> CliError {
    let message = err.inner().to_string();
    let mut key = err.path().to_string();
    // missing fields are reported at the containing object
    for marker in ["unknown field `", "missing field `"] {
        if let Some(rest) = message.split(marker).nth(1) {
            if let Some(field) = rest.split('`').next() {
                if key == "." {
                    key = field.to_owned();
                } else if !key.ends_with(&format!(".{field}")) {
                    key = format!("{key}.{field}");
                }
            }
        }
    }
    CliError::Schema { key, message }
}
