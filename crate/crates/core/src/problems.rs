//! Convex quadratic objectives and the stochastic gradient oracle.
//!
//! The objective is `f(x) = 1/2 ||Q (x - x*)||^2` with `Q = A^T A / d` for a
//! square matrix `A` of i.i.d. standard normals. Its Hessian is `Q^2`, and
//! that Hessian is the single linear operator used by the gradient, the
//! smoothness constant and the exact round map.

use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::problem_stream;
use crate::{Matrix, Vector};

/// Largest dimension for which `L` comes from a full eigendecomposition.
const EIGEN_DIM_LIMIT: usize = 200;
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    factor: Matrix,
    q: Matrix,
    hessian: Matrix,
    minimizer: Vector,
    smoothness: f64,
}

impl QuadraticProblem {
    /// Builds the problem from the raw factor `A`, using `Q = A^T A / d`.
    pub fn from_factor(factor: Matrix, minimizer: Vector) -> Result<Self> {
        if !factor.is_square() {
            return Err(Error::invalid("factor", "matrix must be square"));
        }
        let dim = factor.nrows();
        let q = factor.tr_mul(&factor) / dim as f64;
        let mut problem = Self::from_q(q, minimizer)?;
        problem.factor = factor;
        Ok(problem)
    }

    /// Builds the problem directly from a symmetric `Q`.
    pub fn from_q(q: Matrix, minimizer: Vector) -> Result<Self> {
        let dim = q.nrows();
        if dim == 0 {
            return Err(Error::invalid("dim", "dimension must be at least 1"));
        }
        if !q.is_square() {
            return Err(Error::invalid("q", "matrix must be square"));
        }
        if minimizer.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: minimizer.len(),
            });
        }
        let scale = q.amax().max(f64::MIN_POSITIVE);
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(Error::invalid("q", "matrix must be symmetric"));
        }
        let q = (&q + q.transpose()) * 0.5;
        let hessian = &q * &q;
        let hessian = (&hessian + hessian.transpose()) * 0.5;
        let smoothness = largest_eigenvalue(&hessian);
        Ok(Self {
            factor: q.clone(),
            q,
            hessian,
            minimizer,
            smoothness,
        })
    }

    pub fn dim(&self) -> usize {
        self.minimizer.len()
    }

    /// The raw factor `A` (equal to `Q` for problems built with [`Self::from_q`]).
    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn hessian(&self) -> &Matrix {
        &self.hessian
    }

    pub fn minimizer(&self) -> &Vector {
        &self.minimizer
    }

    /// Smoothness constant `L`, the largest Hessian eigenvalue.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `f(x) = 1/2 ||Q (x - x*)||^2`.
    pub fn loss(&self, x: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        let residual = &self.q * (x - &self.minimizer);
        Ok(0.5 * residual.norm_squared())
    }

    /// `grad f(x) = Q^2 (x - x*)`.
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        Ok(&self.hessian * (x - &self.minimizer))
    }

    /// Exact one-round map `(1 - gamma) I + gamma (I - eta Hess)^H` of plain
    /// Generalized Local SGD; in expectation when the gradients are noisy.
    pub fn expected_round_map(&self, eta: f64, gamma: f64, local_steps: usize) -> Result<Matrix> {
        if local_steps == 0 {
            return Err(Error::invalid("local_steps", "must be at least 1"));
        }
        let dim = self.dim();
        let identity = Matrix::identity(dim, dim);
        let step = &identity - &self.hessian * eta;
        let power = matrix_power(&step, local_steps);
        Ok(identity * (1.0 - gamma) + power * gamma)
    }
}

fn matrix_power(base: &Matrix, mut exp: usize) -> Matrix {
    let n = base.nrows();
    let mut result = Matrix::identity(n, n);
    let mut acc = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &acc;
        }
        exp >>= 1;
        if exp > 0 {
            acc = &acc * &acc;
        }
    }
    result
}

fn largest_eigenvalue(sym: &Matrix) -> f64 {
    if sym.nrows() <= EIGEN_DIM_LIMIT {
        SymmetricEigen::new(sym.clone()).eigenvalues.max()
    } else {
        power_iteration(sym)
    }
}

/// Power iteration for the dominant eigenvalue of a symmetric PSD matrix.
pub(crate) fn power_iteration(sym: &Matrix) -> f64 {
    let n = sym.nrows();
    // deterministic start with components in every direction
    let mut v = Vector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = sym * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - estimate).abs() <= POWER_TOL * next.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Draws a `dim`-dimensional problem: `A` and `x*` with i.i.d. standard
/// normal entries from the stream keyed by `seed`.
pub fn make_random_quadratic(dim: usize, seed: u64) -> Result<QuadraticProblem> {
    if dim == 0 {
        return Err(Error::invalid("dim", "dimension must be at least 1"));
    }
    let mut rng = problem_stream(seed);
    // row-major draw order
    let mut entries = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        entries.push(rng.sample::<f64, _>(StandardNormal));
    }
    let factor = Matrix::from_row_slice(dim, dim, &entries);
    let minimizer = Vector::from_fn(dim, |_, _| rng.sample(StandardNormal));
    QuadraticProblem::from_factor(factor, minimizer)
}

/// How `sigma` is spread over coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseScaling {
    /// Per-coordinate variance `sigma^2 / d`, so `E ||v||^2 = sigma^2`.
    #[default]
    Total,
    /// Per-coordinate variance `sigma^2`, so `E ||v||^2 = d sigma^2`.
    PerCoord,
}

/// Isotropic Gaussian gradient noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub scaling: NoiseScaling,
}

impl NoiseModel {
    pub fn new(sigma: f64, scaling: NoiseScaling) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and nonnegative"));
        }
        Ok(Self { sigma, scaling })
    }

    pub fn noiseless() -> Self {
        Self {
            sigma: 0.0,
            scaling: NoiseScaling::Total,
        }
    }

    pub fn coordinate_std(&self, dim: usize) -> f64 {
        match self.scaling {
            NoiseScaling::Total => self.sigma / (dim as f64).sqrt(),
            NoiseScaling::PerCoord => self.sigma,
        }
    }

    /// `E ||v||^2`, the variance bound the theory sees.
    pub fn variance(&self, dim: usize) -> f64 {
        match self.scaling {
            NoiseScaling::Total => self.sigma * self.sigma,
            NoiseScaling::PerCoord => dim as f64 * self.sigma * self.sigma,
        }
    }

    /// Draws one noise vector. A zero `sigma` leaves `rng` untouched.
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vector {
        if self.sigma == 0.0 {
            return Vector::zeros(dim);
        }
        let std = self.coordinate_std(dim);
        Vector::from_fn(dim, |_, _| std * rng.sample::<f64, _>(StandardNormal))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub value: Vector,
    /// Exact gradient, kept for diagnostics.
    pub clean: Vector,
}

pub fn stochastic_gradient<R: Rng + ?Sized>(
    problem: &QuadraticProblem,
    x: &Vector,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<GradientSample> {
    let clean = problem.gradient(x)?;
    let value = &clean + noise.sample(problem.dim(), rng);
    Ok(GradientSample { value, clean })
}
