//! Objective functions with exact gradients and Hessians, stochastic
//! gradient oracles, and the smallest-eigenvalue probe.
//!
//! Every catalog objective carries certified constants (gradient Lipschitz,
//! Hessian Lipschitz, per-sample Lipschitz) valid on a stated box; the
//! quartic confinement of `saddle2d` means its constants are local by
//! construction. Per-sample noise is a symmetric truncated Gaussian so the
//! sub-Gaussian assumption holds with a certifiable scale and the oracle
//! mean is exactly the gradient.

use crate::linalg::{self, SymMatrix};
use crate::streams;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> SymMatrix;
    /// Certified gradient Lipschitz constant on the objective's box.
    fn smoothness(&self) -> f64;
    /// Certified Hessian Lipschitz constant on the objective's box.
    fn hessian_lipschitz(&self) -> f64;
    /// Certified per-sample gradient Lipschitz constant.
    fn sample_lipschitz(&self) -> f64;
    /// Gradient of the sample selected by `theta`. Defaults to the exact
    /// gradient; finite sums override.
    fn sample_grad(&self, x: &[f64], _theta: u64) -> Vec<f64> {
        self.grad(x)
    }
}

/// f(x) = 1/2 x^T H x with constant Hessian H.
pub struct Quadratic {
    h: SymMatrix,
    spectral: f64,
}

impl Quadratic {
    pub fn new(h: SymMatrix) -> Self {
        let spectral = h.spectral_norm();
        Quadratic { h, spectral }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(SymMatrix::identity(dim))
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.h
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.h.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * linalg::dot(x, &self.h.matvec(x))
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.h.matvec(x)
    }
    fn hessian(&self, _x: &[f64]) -> SymMatrix {
        self.h.clone()
    }
    fn smoothness(&self) -> f64 {
        self.spectral
    }
    fn hessian_lipschitz(&self) -> f64 {
        0.0
    }
    fn sample_lipschitz(&self) -> f64 {
        self.spectral
    }
}

/// Confined strict saddle in two dimensions:
/// f(x, y) = x^2/2 - gamma y^2/2 + y^4/4.
///
/// The origin is a strict saddle with Hessian diag(1, -gamma); the quartic
/// keeps trajectories bounded. Constants are certified on [-R, R]^2.
pub struct Saddle2d {
    gamma: f64,
    box_radius: f64,
}

impl Saddle2d {
    pub fn new(gamma: f64) -> Self {
        Self::with_box(gamma, 10.0)
    }

    pub fn with_box(gamma: f64, box_radius: f64) -> Self {
        assert!(gamma >= 0.0 && box_radius > 0.0);
        Saddle2d { gamma, box_radius }
    }

    pub fn unstable_curvature(&self) -> f64 {
        self.gamma
    }

    /// The two minima sit at (0, +-sqrt(gamma)).
    pub fn minimum(&self) -> Vec<f64> {
        vec![0.0, self.gamma.sqrt()]
    }
}

impl Objective for Saddle2d {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x[0] * x[0] - 0.5 * self.gamma * x[1] * x[1] + 0.25 * x[1].powi(4)
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0], -self.gamma * x[1] + x[1].powi(3)]
    }
    fn hessian(&self, x: &[f64]) -> SymMatrix {
        SymMatrix::diagonal(&[1.0, -self.gamma + 3.0 * x[1] * x[1]])
    }
    fn smoothness(&self) -> f64 {
        let r = self.box_radius;
        (3.0 * r * r - self.gamma).max(self.gamma).max(1.0)
    }
    fn hessian_lipschitz(&self) -> f64 {
        6.0 * self.box_radius
    }
    fn sample_lipschitz(&self) -> f64 {
        self.smoothness()
    }
}

/// Finite-sum wrapper: f = (1/n) sum_i f_i with f_i = base + a_i . x and
/// sum_i a_i = 0, so averaging per-sample gradients over all samples
/// recovers the base gradient exactly.
pub struct FiniteSum {
    base: Box<dyn Objective>,
    offsets: Vec<Vec<f64>>,
    offset_norm: f64,
}

impl FiniteSum {
    /// Deterministic offsets from `seed`, laid out as adjacent exact +-
    /// pairs (odd n gets one zero offset): summing them in index order
    /// cancels bitwise, so the zero-mean identity is exact, not rounded.
    pub fn new(n: usize, base: Box<dyn Objective>, spread: f64, seed: u64) -> Self {
        assert!(n >= 2, "a finite sum needs at least two samples");
        let dim = base.dim();
        let mut rng = streams::substream(seed, streams::DOMAIN_TRIAL, 0xf1, 0);
        let mut offsets: Vec<Vec<f64>> = Vec::with_capacity(n);
        while offsets.len() + 1 < n {
            let v = streams::normal_vec(&mut rng, dim, spread);
            offsets.push(v.iter().map(|x| -x).collect());
            offsets.push(v);
        }
        if offsets.len() < n {
            offsets.push(vec![0.0; dim]);
        }
        let offset_norm = offsets.iter().map(|o| linalg::norm(o)).fold(0.0, f64::max);
        FiniteSum {
            base,
            offsets,
            offset_norm,
        }
    }

    pub fn samples(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[Vec<f64>] {
        &self.offsets
    }

    pub fn sample_value(&self, x: &[f64], theta: u64) -> f64 {
        let i = (theta as usize) % self.offsets.len();
        self.base.value(x) + linalg::dot(&self.offsets[i], x)
    }

    pub fn max_offset_norm(&self) -> f64 {
        self.offset_norm
    }
}

impl Objective for FiniteSum {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x)
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.base.grad(x)
    }
    fn hessian(&self, x: &[f64]) -> SymMatrix {
        self.base.hessian(x)
    }
    fn smoothness(&self) -> f64 {
        self.base.smoothness()
    }
    fn hessian_lipschitz(&self) -> f64 {
        self.base.hessian_lipschitz()
    }
    fn sample_lipschitz(&self) -> f64 {
        // per-sample gradients differ from the base by constants
        self.base.smoothness()
    }
    fn sample_grad(&self, x: &[f64], theta: u64) -> Vec<f64> {
        let i = (theta as usize) % self.offsets.len();
        let mut g = self.base.grad(x);
        linalg::axpy(1.0, &self.offsets[i], &mut g);
        g
    }
}

/// Objective selection for JSON experiment configs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum ProblemConfig {
    Quadratic {
        /// Diagonal of the Hessian.
        diag: Vec<f64>,
    },
    Saddle2d {
        gamma: f64,
        #[serde(default = "default_box")]
        box_radius: f64,
    },
    FiniteSum {
        samples: usize,
        spread: f64,
        seed: u64,
        base: Box<ProblemConfig>,
    },
}

fn default_box() -> f64 {
    10.0
}

impl ProblemConfig {
    pub fn build(&self) -> Box<dyn Objective> {
        match self {
            ProblemConfig::Quadratic { diag } => {
                Box::new(Quadratic::new(SymMatrix::diagonal(diag)))
            }
            ProblemConfig::Saddle2d { gamma, box_radius } => {
                Box::new(Saddle2d::with_box(*gamma, *box_radius))
            }
            ProblemConfig::FiniteSum {
                samples,
                spread,
                seed,
                base,
            } => Box::new(FiniteSum::new(*samples, base.build(), *spread, *seed)),
        }
    }
}

/// Stochastic gradient oracle: exact per-sample gradient plus truncated
/// Gaussian noise of sub-Gaussian scale `noise_scale`.
pub struct StochasticOracle<'a> {
    pub objective: &'a dyn Objective,
    pub noise_scale: f64,
}

impl<'a> StochasticOracle<'a> {
    pub fn new(objective: &'a dyn Objective, noise_scale: f64) -> Self {
        assert!(noise_scale >= 0.0);
        StochasticOracle {
            objective,
            noise_scale,
        }
    }

    /// g(x, theta): consumes no randomness when the noise scale is zero.
    pub fn sample(&self, x: &[f64], theta: u64, rng: &mut impl Rng) -> Vec<f64> {
        let mut g = self.objective.sample_grad(x, theta);
        if self.noise_scale > 0.0 {
            let noise = streams::truncated_noise(rng, self.objective.dim(), self.noise_scale);
            linalg::axpy(1.0, &noise, &mut g);
        }
        g
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EigError {
    #[error("power iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("dimension mismatch")]
    DimensionMismatch,
}

/// Threshold between the exact dense path and shifted power iteration.
pub const DENSE_EIG_LIMIT: usize = 64;

/// Smallest eigenvalue of `hessian(x)` with a unit eigenvector, sign fixed
/// deterministically.
///
/// Dense Jacobi eigendecomposition for d <= 64; shifted power iteration on
/// (c I - H) with c >= L above that.
pub fn min_eig(
    objective: &dyn Objective,
    x: &[f64],
    tol: f64,
) -> Result<(f64, Vec<f64>), EigError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let h = objective.hessian(x);
    min_eig_sym(&h, objective.smoothness(), tol)
}

pub fn min_eig_sym(
    h: &SymMatrix,
    smoothness_hint: f64,
    tol: f64,
) -> Result<(f64, Vec<f64>), EigError> {
    let n = h.dim();
    if n <= DENSE_EIG_LIMIT {
        let (eigs, vecs) = h.jacobi_eigen();
        let mut v = vecs[0].clone();
        linalg::canonical_sign(&mut v);
        return Ok((eigs[0], v));
    }
    // Shifted power iteration: the dominant eigenpair of B = cI - H is
    // (c - lambda_min, v_min).
    let shift = smoothness_hint.abs() * 1.000001 + 1e-12;
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.3 * ((i as f64) * 0.7).sin())
        .collect();
    linalg::normalize(&mut v);
    let max_iter = 200_000;
    let mut rayleigh = 0.0;
    for it in 0..max_iter {
        // B v = shift*v - H v
        let hv = h.matvec(&v);
        let mut bv: Vec<f64> = v
            .iter()
            .zip(&hv)
            .map(|(vi, hvi)| shift * vi - hvi)
            .collect();
        rayleigh = linalg::dot(&v, &bv);
        // residual ||B v - rayleigh v||
        let mut res = 0.0;
        for (bvi, vi) in bv.iter().zip(&v) {
            let r = bvi - rayleigh * vi;
            res += r * r;
        }
        if res.sqrt() <= tol * shift.max(rayleigh.abs()) {
            linalg::canonical_sign(&mut bv);
            linalg::normalize(&mut bv);
            return Ok((shift - rayleigh, bv));
        }
        if linalg::normalize(&mut bv) == 0.0 {
            // degenerate direction; restart deterministically
            for (i, x) in bv.iter_mut().enumerate() {
                *x = ((it + i) as f64 * 0.37).cos();
            }
            linalg::normalize(&mut bv);
        }
        v = bv;
    }
    let _ = rayleigh;
    Err(EigError::NoConvergence(max_iter))
}
