//! Two-run coupling around a strict saddle and escape-probability
//! estimation.
//!
//! Both runs start at the anchor and consume identical sample indices,
//! per-sample noise values, and delays; only the injected Gaussian differs:
//! its component along the unstable eigendirection e1 is negated between the
//! runs while the orthogonal component is shared. The perturbations are
//! stored in decomposed form (parallel coefficient + shared perpendicular
//! part), which is what makes the mirror property exact by construction
//! rather than up to rounding.
//!
//! Per-sample gradient noise in this crate is additive (state-independent),
//! so sharing sample indices already shares the realized noise values and
//! the stochastic-gradient part of the run difference vanishes identically;
//! the difference dynamics is curvature plus the mirrored Gaussian.

use crate::delay::{self, DelayModel, DelaySchedule};
use crate::engine::{self, GradRecord, Trajectory};
use crate::linalg;
use crate::oracles::{self, EigError, Objective, StochasticOracle};
use crate::params::HyperParams;
use crate::stats;
use crate::streams::{self, DOMAIN_GRAD, DOMAIN_TRIAL, DOMAIN_ZETA};
use crate::tds::{self, MatrixFundamentalSolution};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

pub const EIGEN_GAP_WARNING: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("anchor has no unstable direction: lambda_min = {0} >= 0")]
    NotUnstable(f64),
    #[error("anchor curvature {lambda_min} is above the required {needed}")]
    NotStrictEnough { lambda_min: f64, needed: f64 },
    #[error("infeasible parameters: eta L M T = {0} > 1/3")]
    InfeasibleParams(f64),
    #[error("fundamental solution was computed on a different schedule")]
    ScheduleMismatch,
    #[error(transparent)]
    Eig(#[from] EigError),
    #[error(transparent)]
    Engine(#[from] engine::EngineError),
    #[error(transparent)]
    Delay(#[from] delay::DelayError),
}

/// One step's injected perturbation for both runs, stored decomposed:
/// zeta_run = parallel_run * e1 + perp.
#[derive(Clone, Debug)]
pub struct CoupledNoise {
    pub parallel1: f64,
    pub parallel2: f64,
    pub perp: Vec<f64>,
}

/// Two coupled runs in anchor-relative time (index 0 is the anchor).
pub struct CoupledPair {
    pub traj1: Trajectory,
    pub traj2: Trajectory,
    pub anchor: Vec<f64>,
    pub unstable_dir: Vec<f64>,
    pub lambda_min: f64,
    /// Smallest-eigenvalue gap below the warning threshold: e1 is
    /// ill-conditioned, results still reported.
    pub eigen_gap_warning: bool,
    pub noise: Vec<CoupledNoise>,
}

impl CoupledPair {
    pub fn horizon(&self) -> usize {
        self.traj1.steps()
    }

    /// x1(t) - x2(t).
    pub fn diff(&self, t: usize) -> Vec<f64> {
        linalg::sub(&self.traj1.iterates[t], &self.traj2.iterates[t])
    }

    pub fn diff_norms(&self) -> Vec<f64> {
        (0..=self.horizon())
            .map(|t| linalg::norm(&self.diff(t)))
            .collect()
    }

    /// First t with ||diff(t)|| >= threshold.
    pub fn first_diff_exit(&self, threshold: f64) -> Option<usize> {
        (0..=self.horizon()).find(|&t| linalg::norm(&self.diff(t)) >= threshold)
    }

    /// max(||x1(t) - anchor||, ||x2(t) - anchor||), the quantity that turns
    /// pair statistics into single-run statistics: it is always at least
    /// half of ||diff(t)||.
    pub fn max_run_displacement(&self, t: usize) -> f64 {
        let d1 = linalg::norm(&linalg::sub(&self.traj1.iterates[t], &self.anchor));
        let d2 = linalg::norm(&linalg::sub(&self.traj2.iterates[t], &self.anchor));
        d1.max(d2)
    }

    /// The mirrored forcing zeta1 - zeta2 = 2 parallel1 e1 at step t.
    pub fn mirrored_forcing(&self, t: usize) -> Vec<f64> {
        linalg::scaled(&self.unstable_dir, 2.0 * self.noise[t].parallel1)
    }
}

fn compose(parallel: f64, e1: &[f64], perp: &[f64]) -> Vec<f64> {
    let mut z = linalg::scaled(e1, parallel);
    linalg::axpy(1.0, perp, &mut z);
    z
}

/// Run the coupled pair over the whole schedule from a curvature anchor.
pub fn run_coupled(
    h: &HyperParams,
    objective: &dyn Objective,
    anchor: &[f64],
    schedule: &DelaySchedule,
    seed: u64,
) -> Result<CoupledPair, CouplingError> {
    let hessian = objective.hessian(anchor);
    let (eigs, vecs) = hessian.jacobi_eigen();
    let lambda_min = eigs[0];
    if lambda_min >= 0.0 {
        return Err(CouplingError::NotUnstable(lambda_min));
    }
    let eigen_gap_warning = eigs.len() > 1 && (eigs[1] - eigs[0]).abs() < EIGEN_GAP_WARNING;
    let mut e1 = vecs[0].clone();
    linalg::canonical_sign(&mut e1);

    let steps = schedule.steps();
    let batch = h.base.batch;
    let dim = h.base.dim;
    let eta = h.learning_rate;
    let zeta_scale = h.base.perturbation_radius / (dim as f64).sqrt();

    let mut x1 = vec![anchor.to_vec()];
    let mut x2 = vec![anchor.to_vec()];
    let mut grads1: Vec<Vec<GradRecord>> = Vec::with_capacity(steps);
    let mut grads2: Vec<Vec<GradRecord>> = Vec::with_capacity(steps);
    let mut zetas1 = Vec::with_capacity(steps);
    let mut zetas2 = Vec::with_capacity(steps);
    let mut noise = Vec::with_capacity(steps);

    for t in 0..steps {
        let mut step1 = Vec::with_capacity(batch);
        let mut step2 = Vec::with_capacity(batch);
        for i in 0..batch {
            let tau = schedule.tau(t, i);
            let src = t - tau;
            let mut rng = streams::substream(seed, DOMAIN_GRAD, t as u64, i as u64);
            let theta: u64 = rng.gen();
            // shared per-sample noise value, evaluated once
            let shared_noise = if h.base.noise_scale > 0.0 {
                streams::truncated_noise(&mut rng, dim, h.base.noise_scale)
            } else {
                vec![0.0; dim]
            };
            let mut g1 = objective.sample_grad(&x1[src], theta);
            linalg::axpy(1.0, &shared_noise, &mut g1);
            let mut g2 = objective.sample_grad(&x2[src], theta);
            linalg::axpy(1.0, &shared_noise, &mut g2);
            step1.push(GradRecord {
                source_step: src,
                stream_key: (t as u64, i as u64),
                theta,
                value: g1,
            });
            step2.push(GradRecord {
                source_step: src,
                stream_key: (t as u64, i as u64),
                theta,
                value: g2,
            });
        }
        let mut zeta_rng = streams::substream(seed, DOMAIN_ZETA, t as u64, 0);
        let raw = streams::normal_vec(&mut zeta_rng, dim, zeta_scale);
        let parallel = linalg::dot(&e1, &raw);
        let mut perp = raw;
        linalg::axpy(-parallel, &e1, &mut perp);
        let zeta1 = compose(parallel, &e1, &perp);
        let zeta2 = compose(-parallel, &e1, &perp);
        noise.push(CoupledNoise {
            parallel1: parallel,
            parallel2: -parallel,
            perp,
        });

        let acc1 = engine::accumulate(&step1);
        let acc2 = engine::accumulate(&step2);
        let next1 = engine::apply_update(x1.last().unwrap(), &acc1, &zeta1, eta, batch);
        let next2 = engine::apply_update(x2.last().unwrap(), &acc2, &zeta2, eta, batch);
        for next in [&next1, &next2] {
            if !next.iter().all(|v| v.is_finite()) || linalg::norm(next) > engine::DIVERGENCE_NORM {
                return Err(CouplingError::Engine(engine::EngineError::Diverged {
                    step: t,
                }));
            }
        }
        x1.push(next1);
        x2.push(next2);
        zetas1.push(zeta1);
        zetas2.push(zeta2);
        grads1.push(step1);
        grads2.push(step2);
    }

    let mk = |iterates: Vec<Vec<f64>>, perturbations, grads| Trajectory {
        iterates,
        perturbations,
        grads,
        schedule: schedule.clone(),
        params: h.clone(),
        seed,
    };
    Ok(CoupledPair {
        traj1: mk(x1, zetas1, grads1),
        traj2: mk(x2, zetas2, grads2),
        anchor: anchor.to_vec(),
        unstable_dir: e1,
        lambda_min,
        eigen_gap_warning,
        noise,
    })
}

/// Escape-event statistics over independent single runs from an anchor.
#[derive(Clone, Debug, Serialize)]
pub struct EscapeStats {
    pub trials: usize,
    pub successes: usize,
    pub frequency: f64,
    /// One-sided 95% lower confidence bound.
    pub lcb95: f64,
    /// Two-sided 90% interval (Clopper-Pearson style).
    pub interval90: (f64, f64),
    pub threshold: f64,
    pub horizon: usize,
    /// First t with ||x(t) - anchor|| >= threshold, capped at horizon + 1
    /// for trials that never exit.
    pub first_exit: Vec<usize>,
    pub median_first_exit: f64,
    pub max_displacements: Vec<f64>,
}

pub struct EscapeConfig<'a> {
    pub params: &'a HyperParams,
    pub objective: &'a dyn Objective,
    pub anchor: &'a [f64],
    pub model: &'a DelayModel,
    pub trials: usize,
    pub seed: u64,
    /// Defaults to the derived displacement threshold S.
    pub threshold: Option<f64>,
    /// Defaults to the derived escape horizon T_max.
    pub horizon: Option<usize>,
}

/// Frequency of {max_{t <= horizon} ||x_{k+t} - x_k|| >= S} over independent
/// perturbed runs started at the anchor.
pub fn escape_stats(config: &EscapeConfig) -> Result<EscapeStats, CouplingError> {
    let h = config.params;
    if !h.escape_precondition() {
        let gate =
            h.learning_rate * h.base.smoothness * h.base.batch as f64 * h.base.max_delay as f64;
        return Err(CouplingError::InfeasibleParams(gate));
    }
    let (lambda_min, _) = oracles::min_eig(config.objective, config.anchor, 1e-10)?;
    let needed = -h.curvature_scale;
    if lambda_min > needed {
        return Err(CouplingError::NotStrictEnough { lambda_min, needed });
    }
    let threshold = config.threshold.unwrap_or(h.displacement_threshold);
    let horizon = config.horizon.unwrap_or(h.escape_horizon);
    let oracle = StochasticOracle::new(config.objective, h.base.noise_scale);
    let mut successes = 0usize;
    let mut first_exit = Vec::with_capacity(config.trials);
    let mut max_displacements = Vec::with_capacity(config.trials);
    for trial in 0..config.trials {
        let mut trial_rng = streams::substream(config.seed, DOMAIN_TRIAL, trial as u64, 1);
        let trial_seed: u64 = trial_rng.gen();
        let schedule = delay::generate(
            config.model,
            horizon,
            h.base.batch,
            h.base.max_delay,
            trial_seed,
        )?;
        let traj = engine::run(&engine::RunConfig {
            params: h,
            oracle: &oracle,
            schedule: &schedule,
            x0: config.anchor.to_vec(),
            seed: trial_seed,
        })?;
        let mut exit = horizon + 1;
        let mut max_disp = 0.0f64;
        for (t, x) in traj.iterates.iter().enumerate() {
            let disp = linalg::norm(&linalg::sub(x, config.anchor));
            max_disp = max_disp.max(disp);
            if disp >= threshold && exit > horizon {
                exit = t;
            }
        }
        if exit <= horizon {
            successes += 1;
        }
        first_exit.push(exit);
        max_displacements.push(max_disp);
    }
    let exits_f: Vec<f64> = first_exit.iter().map(|&t| t as f64).collect();
    Ok(EscapeStats {
        trials: config.trials,
        successes,
        frequency: successes as f64 / config.trials as f64,
        lcb95: stats::binomial_lower_bound(successes, config.trials, 0.05),
        interval90: (
            stats::binomial_lower_bound(successes, config.trials, 0.05),
            stats::binomial_upper_bound(successes, config.trials, 0.05),
        ),
        threshold,
        horizon,
        first_exit,
        median_first_exit: stats::median(&exits_f).unwrap_or(f64::NAN),
        max_displacements,
    })
}

/// Linear/residual split of a coupled difference.
#[derive(Clone, Debug)]
pub struct Decomposition {
    /// psi(t): the response of the delayed linear recursion at the anchor
    /// Hessian to the mirrored Gaussian forcing.
    pub psi: Vec<Vec<f64>>,
    /// diff(t) - psi(t) = phi(t) + phi_sg(t).
    pub residual: Vec<Vec<f64>>,
    pub psi_norms: Vec<f64>,
    pub residual_norms: Vec<f64>,
    /// 2 beta(t) sqrt(M) eta r / (3 sqrt(d)) at the horizon.
    pub psi_threshold: f64,
    /// beta(t) sqrt(M) eta r / (2 sqrt(d)) at the horizon.
    pub residual_threshold: f64,
    /// ||psi(horizon)|| >= psi_threshold.
    pub psi_event: bool,
    /// ||residual(horizon)|| <= residual_threshold.
    pub residual_event: bool,
}

/// Split a coupled difference against the matrix fundamental solution of
/// H = -hessian(anchor) computed on the same schedule.
pub fn decompose(
    pair: &CoupledPair,
    msol: &MatrixFundamentalSolution,
) -> Result<Decomposition, CouplingError> {
    if msol.schedule != pair.traj1.schedule {
        return Err(CouplingError::ScheduleMismatch);
    }
    let h = &pair.traj1.params;
    let horizon = pair.horizon().min(msol.horizon);
    let eta = h.learning_rate;
    let m_sqrt = (h.base.batch as f64).sqrt();
    // forcing entering at index j: -eta sqrt(M) (zeta1 - zeta2)(j-1)
    let forcing: Vec<Vec<f64>> = (0..horizon)
        .map(|j| linalg::scaled(&pair.mirrored_forcing(j), -eta * m_sqrt))
        .collect();
    let zero = vec![0.0; h.base.dim];
    let mut psi = Vec::with_capacity(horizon + 1);
    let mut residual = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        let p = msol.superpose(&zero, &forcing, t);
        let r = linalg::sub(&pair.diff(t), &p);
        psi.push(p);
        residual.push(r);
    }
    let psi_norms: Vec<f64> = psi.iter().map(|v| linalg::norm(v)).collect();
    let residual_norms: Vec<f64> = residual.iter().map(|v| linalg::norm(v)).collect();

    let gamma = -pair.lambda_min;
    let fsol = tds::FundamentalSolution::compute(gamma, eta, &pair.traj1.schedule, horizon)
        .expect("schedule covers the horizon");
    let beta_h = fsol.beta(horizon);
    let r = h.base.perturbation_radius;
    let d_sqrt = (h.base.dim as f64).sqrt();
    let psi_threshold = 2.0 * beta_h * m_sqrt * eta * r / (3.0 * d_sqrt);
    let residual_threshold = beta_h * m_sqrt * eta * r / (2.0 * d_sqrt);
    Ok(Decomposition {
        psi_event: psi_norms[horizon] >= psi_threshold,
        residual_event: residual_norms[horizon] <= residual_threshold,
        psi,
        residual,
        psi_norms,
        residual_norms,
        psi_threshold,
        residual_threshold,
    })
}

/// Monte-Carlo frequencies of the two decomposition events at the horizon.
#[derive(Clone, Debug, Serialize)]
pub struct DecomposeStats {
    pub trials: usize,
    pub psi_successes: usize,
    pub psi_frequency: f64,
    pub psi_lcb95: f64,
    pub residual_successes: usize,
    pub residual_frequency: f64,
    pub residual_lcb95: f64,
    pub horizon: usize,
}

pub fn decompose_experiment(
    h: &HyperParams,
    objective: &dyn Objective,
    anchor: &[f64],
    model: &DelayModel,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> Result<DecomposeStats, CouplingError> {
    let hessian = objective.hessian(anchor);
    let neg = hessian.neg();
    let mut psi_successes = 0usize;
    let mut residual_successes = 0usize;
    for trial in 0..trials {
        let mut trial_rng = streams::substream(seed, DOMAIN_TRIAL, trial as u64, 2);
        let trial_seed: u64 = trial_rng.gen();
        let schedule = delay::generate(model, horizon, h.base.batch, h.base.max_delay, trial_seed)?;
        let pair = run_coupled(h, objective, anchor, &schedule, trial_seed)?;
        let msol = MatrixFundamentalSolution::compute(&neg, h.learning_rate, &schedule, horizon)
            .expect("horizon fits schedule");
        let dec = decompose(&pair, &msol)?;
        if dec.psi_event {
            psi_successes += 1;
        }
        if dec.residual_event {
            residual_successes += 1;
        }
    }
    Ok(DecomposeStats {
        trials,
        psi_successes,
        psi_frequency: psi_successes as f64 / trials as f64,
        psi_lcb95: stats::binomial_lower_bound(psi_successes, trials, 0.05),
        residual_successes,
        residual_frequency: residual_successes as f64 / trials as f64,
        residual_lcb95: stats::binomial_lower_bound(residual_successes, trials, 0.05),
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use crate::oracles::{Quadratic, Saddle2d};
    use crate::params::{BaseConfig, HyperParams};

    fn params(eta: f64, batch: usize, max_delay: usize, r: f64, s: f64) -> HyperParams {
        let base = BaseConfig {
            smoothness: 1.0,
            hessian_lipschitz: 1.0,
            sample_lipschitz: 1.0,
            noise_scale: s,
            perturbation_radius: r,
            dim: 2,
            batch,
            max_delay,
            steps: 100,
            target_accuracy: 0.5,
            lr_margin: 1.0,
            horizon_margin: 1.0,
            displacement_margin: 0.25,
        };
        HyperParams::explicit(base, eta).unwrap()
    }

    fn saddle_quadratic() -> Quadratic {
        Quadratic::new(SymMatrix::diagonal(&[1.0, -1.0]))
    }

    #[test]
    fn mirror_is_exact_by_construction() {
        let h = params(0.05, 2, 2, 1.0, 0.5);
        let obj = saddle_quadratic();
        let schedule = delay::generate(&DelayModel::Uniform, 50, 2, 2, 3).unwrap();
        let pair = run_coupled(&h, &obj, &[0.0, 0.0], &schedule, 3).unwrap();
        for n in &pair.noise {
            assert_eq!(n.parallel1.to_bits(), (-n.parallel2).to_bits());
        }
        // orthogonal part of the stored decomposition is shared bitwise, so
        // (I - e1 e1^T)(zeta1 - zeta2) vanishes identically
        for t in 0..pair.horizon() {
            let forced = pair.mirrored_forcing(t);
            let along = linalg::dot(&pair.unstable_dir, &forced);
            let mut residue = forced.clone();
            linalg::axpy(-along, &pair.unstable_dir, &mut residue);
            assert!(linalg::norm(&residue) < 1e-16);
        }
        // both runs replay bit-exactly
        pair.traj1.replay_check().unwrap();
        pair.traj2.replay_check().unwrap();
    }

    #[test]
    fn no_perturbation_means_identical_runs() {
        let h = params(0.05, 1, 2, 0.0, 0.5);
        let obj = saddle_quadratic();
        let schedule = delay::generate(&DelayModel::Uniform, 40, 1, 2, 9).unwrap();
        let pair = run_coupled(&h, &obj, &[0.1, 0.2], &schedule, 9).unwrap();
        for t in 0..=pair.horizon() {
            assert_eq!(linalg::norm(&pair.diff(t)), 0.0);
        }
    }

    #[test]
    fn swapping_runs_negates_diff() {
        let h = params(0.05, 1, 1, 1.0, 0.0);
        let obj = saddle_quadratic();
        let schedule = delay::generate(&DelayModel::Uniform, 30, 1, 1, 4).unwrap();
        let pair = run_coupled(&h, &obj, &[0.0, 0.0], &schedule, 4).unwrap();
        for t in 0..=pair.horizon() {
            let d = pair.diff(t);
            let swapped = linalg::sub(&pair.traj2.iterates[t], &pair.traj1.iterates[t]);
            for (a, b) in d.iter().zip(&swapped) {
                // exact float equality; subtraction is antisymmetric up to
                // the sign of zero
                assert!(*a == -*b, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn quadratic_difference_matches_superposition_exactly() {
        let h = params(0.03, 2, 3, 1.0, 0.4);
        let obj = saddle_quadratic();
        let schedule = delay::generate(&DelayModel::Uniform, 120, 2, 3, 21).unwrap();
        let pair = run_coupled(&h, &obj, &[0.0, 0.0], &schedule, 21).unwrap();
        let neg = obj.hessian(&[0.0, 0.0]).neg();
        let msol =
            MatrixFundamentalSolution::compute(&neg, h.learning_rate, &schedule, 120).unwrap();
        let dec = decompose(&pair, &msol).unwrap();
        for t in 0..=120 {
            let scale = dec.psi_norms[t].max(1e-12);
            assert!(
                dec.residual_norms[t] / scale < 1e-10,
                "t={t}: residual {} vs psi {}",
                dec.residual_norms[t],
                dec.psi_norms[t]
            );
        }
    }

    #[test]
    fn decompose_rejects_mismatched_schedule() {
        let h = params(0.03, 1, 2, 1.0, 0.0);
        let obj = saddle_quadratic();
        let schedule = delay::generate(&DelayModel::Uniform, 30, 1, 2, 5).unwrap();
        let other = delay::generate(&DelayModel::AdversarialMax, 30, 1, 2, 5).unwrap();
        let pair = run_coupled(&h, &obj, &[0.0, 0.0], &schedule, 5).unwrap();
        let neg = obj.hessian(&[0.0, 0.0]).neg();
        let msol = MatrixFundamentalSolution::compute(&neg, h.learning_rate, &other, 30).unwrap();
        assert!(matches!(
            decompose(&pair, &msol),
            Err(CouplingError::ScheduleMismatch)
        ));
    }

    #[test]
    fn degenerate_eigen_gap_warns_but_runs() {
        let h = params(0.05, 1, 1, 1.0, 0.0);
        let obj = Quadratic::new(SymMatrix::diagonal(&[-1.0, -1.0]));
        let schedule = delay::generate(&DelayModel::Uniform, 10, 1, 1, 0).unwrap();
        let pair = run_coupled(&h, &obj, &[0.0, 0.0], &schedule, 0).unwrap();
        assert!(pair.eigen_gap_warning);
        let distinct = Quadratic::new(SymMatrix::diagonal(&[1.0, -1.0]));
        let pair = run_coupled(&h, &distinct, &[0.0, 0.0], &schedule, 0).unwrap();
        assert!(!pair.eigen_gap_warning);
    }

    #[test]
    fn pair_displacement_dominates_half_diff() {
        let h = params(0.04, 2, 2, 1.0, 0.5);
        let obj = saddle_quadratic();
        let schedule = delay::generate(&DelayModel::Uniform, 80, 2, 2, 13).unwrap();
        let pair = run_coupled(&h, &obj, &[0.0, 0.0], &schedule, 13).unwrap();
        for t in 0..=pair.horizon() {
            let diff = linalg::norm(&pair.diff(t));
            assert!(pair.max_run_displacement(t) >= 0.5 * diff - 1e-15);
        }
    }

    #[test]
    fn coupled_run_requires_negative_curvature() {
        let h = params(0.05, 1, 1, 1.0, 0.0);
        let obj = Quadratic::identity(2);
        let schedule = delay::generate(&DelayModel::Uniform, 10, 1, 1, 0).unwrap();
        assert!(matches!(
            run_coupled(&h, &obj, &[0.0, 0.0], &schedule, 0),
            Err(CouplingError::NotUnstable(_))
        ));
    }

    #[test]
    fn noiseless_escape_frequency_is_zero() {
        let h = params(0.05, 1, 1, 0.0, 0.0);
        let obj = Saddle2d::new(1.0);
        let stats = escape_stats(&EscapeConfig {
            params: &h,
            objective: &obj,
            anchor: &[0.0, 0.0],
            model: &DelayModel::Uniform,
            trials: 8,
            seed: 0,
            threshold: Some(0.25),
            horizon: Some(100),
        })
        .unwrap();
        assert_eq!(stats.successes, 0);
        assert_eq!(stats.median_first_exit, 101.0);
    }

    #[test]
    fn perturbed_escape_fires() {
        let h = params(1.0 / 24.0, 4, 1, 1.0, 1.0);
        let obj = Saddle2d::new(1.0);
        let stats = escape_stats(&EscapeConfig {
            params: &h,
            objective: &obj,
            anchor: &[0.0, 0.0],
            model: &DelayModel::Uniform,
            trials: 50,
            seed: 7,
            threshold: None,
            horizon: None,
        })
        .unwrap();
        assert!(
            stats.frequency > 0.5,
            "escape should dominate: {}",
            stats.frequency
        );
    }

    #[test]
    fn escape_refuses_infeasible_eta() {
        let h = params(0.5, 4, 4, 1.0, 1.0);
        let obj = Saddle2d::new(1.0);
        let err = escape_stats(&EscapeConfig {
            params: &h,
            objective: &obj,
            anchor: &[0.0, 0.0],
            model: &DelayModel::Uniform,
            trials: 2,
            seed: 0,
            threshold: None,
            horizon: Some(10),
        })
        .unwrap_err();
        assert!(matches!(err, CouplingError::InfeasibleParams(_)));
    }
}
