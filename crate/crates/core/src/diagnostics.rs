//! Trajectory diagnostics: block classification, second-order-point
//! extraction, path-wise descent inequalities, and the Monte-Carlo escape
//! energy experiment.
//!
//! Iterations are divided into blocks of length 2T. A block is of the first
//! kind when its gradient energy reaches F, of the second kind when the
//! energy is below F but the Hessian probe at the first iterate after the
//! block shows an eigenvalue at or below -sqrt(rho eps)/2, and of the third
//! kind otherwise. Third-kind blocks contain approximate second-order
//! stationary points, which `extract_second_order_point` certifies.

use crate::delay::{self, DelayModel};
use crate::engine::Trajectory;
use crate::linalg;
use crate::oracles::{self, EigError, Objective, StochasticOracle};
use crate::params::HyperParams;
use crate::stats;
use crate::streams::{self, DOMAIN_TRIAL};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

pub const EIG_PROBE_TOL: f64 = 1e-10;
pub const INEQUALITY_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DiagError {
    #[error("blocks are undefined for T = 0; use plain stationarity checks instead")]
    ZeroDelayBlocks,
    #[error("block {0} is not of the third kind")]
    NotThirdKind(usize),
    #[error("descent precondition eta^2 (3L/4 - L^2 M T^2 eta) - eta/(2M) < 0 is violated")]
    DescentPrecondition,
    #[error("window [{t0}, {end}] does not fit a trajectory of {steps} steps")]
    WindowOutOfRange { t0: usize, end: usize, steps: usize },
    #[error("anchor is not a strict saddle: lambda_min = {lambda_min}, needed <= {needed}")]
    NotStrictSaddle { lambda_min: f64, needed: f64 },
    #[error("pre-window energy {energy} exceeds the block threshold {threshold}")]
    PreWindowEnergy { energy: f64, threshold: f64 },
    #[error("infeasible parameters: eta L M T = {0} > 1/3")]
    InfeasibleParams(f64),
    #[error(transparent)]
    Eig(#[from] EigError),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
    #[error(transparent)]
    Delay(#[from] delay::DelayError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    First,
    Second,
    Third,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockReport {
    pub index: usize,
    /// Iterate range [start, end).
    pub start: usize,
    pub end: usize,
    pub grad_energy: f64,
    /// Probe index F_k = (last index in the block) + 1.
    pub probe_index: usize,
    pub lambda_min: f64,
    pub kind: BlockKind,
}

/// Squared gradient norms along a trajectory (exact gradients).
pub fn grad_energy_profile(traj: &Trajectory, objective: &dyn Objective) -> Vec<f64> {
    traj.iterates
        .iter()
        .map(|x| linalg::norm_sq(&objective.grad(x)))
        .collect()
}

/// Classify every block of a trajectory.
pub fn classify_blocks(
    traj: &Trajectory,
    h: &HyperParams,
    objective: &dyn Objective,
) -> Result<Vec<BlockReport>, DiagError> {
    let t_bound = h.base.max_delay;
    if t_bound == 0 {
        return Err(DiagError::ZeroDelayBlocks);
    }
    let steps = traj.steps();
    let block_len = 2 * t_bound;
    let energy = grad_energy_profile(traj, objective);
    let threshold = h.block_energy_threshold;
    let curvature_cut = -h.curvature_scale;
    let blocks = steps.div_ceil(block_len);
    let mut reports = Vec::with_capacity(blocks);
    for k in 0..blocks {
        let start = k * block_len;
        let end = ((k + 1) * block_len).min(steps);
        let grad_energy: f64 = energy[start..end].iter().sum();
        let probe_index = end;
        let (lambda_min, _) =
            oracles::min_eig(objective, &traj.iterates[probe_index], EIG_PROBE_TOL)?;
        let kind = if grad_energy >= threshold {
            BlockKind::First
        } else if lambda_min <= curvature_cut {
            BlockKind::Second
        } else {
            BlockKind::Third
        };
        reports.push(BlockReport {
            index: k,
            start,
            end,
            grad_energy,
            probe_index,
            lambda_min,
            kind,
        });
    }
    Ok(reports)
}

/// Certificate for an extracted candidate second-order stationary point.
#[derive(Clone, Debug, Serialize)]
pub struct SecondOrderCertificate {
    pub index: usize,
    pub grad_norm: f64,
    /// ||grad f(x_i*)|| <= eps.
    pub grad_ok: bool,
    pub lambda_min: f64,
    /// lambda_min(hessian(x_i*)) >= -sqrt(rho eps).
    pub curvature_ok: bool,
    pub displacement_sq: f64,
    /// ||x_i* - x_{F_k}||^2 <= eps^2 / (4 L^2).
    pub displacement_ok: bool,
    /// The two defining second-order conditions hold.
    pub second_order_ok: bool,
}

/// Pick the gradient-argmin over the last T indices of a third-kind block
/// and evaluate its certificate.
pub fn extract_second_order_point(
    traj: &Trajectory,
    h: &HyperParams,
    objective: &dyn Objective,
    block: &BlockReport,
) -> Result<(usize, SecondOrderCertificate), DiagError> {
    if block.kind != BlockKind::Third {
        return Err(DiagError::NotThirdKind(block.index));
    }
    let window = h.base.max_delay.min(block.end - block.start);
    let lo = block.end - window;
    let mut best = lo;
    let mut best_energy = f64::INFINITY;
    for i in lo..block.end {
        let e = linalg::norm_sq(&objective.grad(&traj.iterates[i]));
        if e < best_energy {
            best_energy = e;
            best = i;
        }
    }
    let eps = h.base.target_accuracy;
    let grad_norm = best_energy.sqrt();
    let (lambda_min, _) = oracles::min_eig(objective, &traj.iterates[best], EIG_PROBE_TOL)?;
    let curvature_floor = -(h.base.hessian_lipschitz * eps).sqrt();
    let displacement_sq = linalg::norm_sq(&linalg::sub(
        &traj.iterates[best],
        &traj.iterates[block.probe_index],
    ));
    let disp_cap = eps * eps / (4.0 * h.base.smoothness * h.base.smoothness);
    let grad_ok = grad_norm <= eps;
    let curvature_ok = lambda_min >= curvature_floor;
    let cert = SecondOrderCertificate {
        index: best,
        grad_norm,
        grad_ok,
        lambda_min,
        curvature_ok,
        displacement_sq,
        displacement_ok: displacement_sq <= disp_cap,
        second_order_ok: grad_ok && curvature_ok,
    };
    Ok((best, cert))
}

/// Evaluated two-sided inequality; `residual` has the sign convention that
/// non-positive means "holds".
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub scale: f64,
    pub satisfied: bool,
}

fn window_check(t0: usize, end: usize, steps: usize) -> Result<(), DiagError> {
    if end > steps {
        return Err(DiagError::WindowOutOfRange { t0, end, steps });
    }
    Ok(())
}

/// Empirical check of the descent bound over [t0, t0 + span]:
///
/// f(x_{t0+span+1}) - f(x_{t0}) <= -(3 M eta / 8) sum ||grad f||^2
///   + c eta sigma^2 iota + 2 eta^2 L M^2 c sigma^2 (span + 1 + iota)
///   + L^2 T^2 M eta^3 * (pre-window stale-gradient energy).
///
/// The returned residual is lhs - rhs; the bound is distributional, so a
/// positive residual is a recorded violation, not an error.
pub fn check_descent_inequality(
    traj: &Trajectory,
    h: &HyperParams,
    objective: &dyn Objective,
    t0: usize,
    span: usize,
    iota: f64,
) -> Result<ResidualReport, DiagError> {
    if !h.descent_precondition() {
        return Err(DiagError::DescentPrecondition);
    }
    let steps = traj.steps();
    window_check(t0, t0 + span + 1, steps)?;
    let eta = h.learning_rate;
    let m = h.base.batch as f64;
    let big_l = h.base.smoothness;
    let t_bound = h.base.max_delay;
    let c = h.proof.chernoff_c;
    let sigma_sq = h.sigma_sq;

    let lhs = objective.value(&traj.iterates[t0 + span + 1]) - objective.value(&traj.iterates[t0]);

    let descent_sum: f64 = (t0..=t0 + span)
        .map(|k| linalg::norm_sq(&objective.grad(&traj.iterates[k])))
        .sum();
    let mut memory = 0.0;
    for k in t0.saturating_sub(t_bound)..t0 {
        let mut stale_sum = vec![0.0; h.base.dim];
        for i in 0..h.base.batch {
            let src = k - traj.schedule.tau(k, i);
            linalg::axpy(1.0, &objective.grad(&traj.iterates[src]), &mut stale_sum);
        }
        memory += linalg::norm_sq(&stale_sum);
    }
    let t_f = t_bound as f64;
    let rhs = -(3.0 * m * eta / 8.0) * descent_sum
        + c * eta * sigma_sq * iota
        + 2.0 * eta * eta * big_l * m * m * c * sigma_sq * (span as f64 + 1.0 + iota)
        + big_l * big_l * t_f * t_f * m * eta.powi(3) * memory;
    let scale = lhs.abs().max(rhs.abs()).max(1e-300);
    let residual = lhs - rhs;
    Ok(ResidualReport {
        lhs,
        rhs,
        residual,
        scale,
        satisfied: residual <= INEQUALITY_REL_TOL * scale,
    })
}

/// Path-wise check of the local displacement inequality over [t0, t0 + span):
/// an algebraic consequence of smoothness given the realized noise, so it
/// must hold on every trajectory satisfying the descent precondition.
pub fn check_local_inequality(
    traj: &Trajectory,
    h: &HyperParams,
    objective: &dyn Objective,
    t0: usize,
    span: usize,
) -> Result<ResidualReport, DiagError> {
    if !h.descent_precondition() {
        return Err(DiagError::DescentPrecondition);
    }
    assert!(span >= 1, "the window must contain at least one step");
    let steps = traj.steps();
    window_check(t0, t0 + span, steps)?;
    let eta = h.learning_rate;
    let m = h.base.batch as f64;
    let big_l = h.base.smoothness;
    let t_bound = h.base.max_delay;
    let t_f = t_bound as f64;
    let noise = traj.combined_noise(objective);
    let energy = grad_energy_profile(traj, objective);

    let stretch = 2.0 * big_l * big_l * eta * eta * m * m * t_f.powi(3);
    let lhs: f64 = (t0..t0 + span).map(|k| (1.0 + stretch) * energy[k]).sum();

    // cumulative combined noise over the window
    let mut cum = vec![0.0; h.base.dim];
    for item in noise.iter().take(t0 + span).skip(t0) {
        linalg::axpy(1.0, item, &mut cum);
    }
    let displacement = linalg::norm_sq(&linalg::sub(&traj.iterates[t0 + span], &traj.iterates[t0]));
    let main_term = (displacement - 3.0 * eta * eta * linalg::norm_sq(&cum))
        / (3.0 * eta * eta * m * m * span as f64);

    let pre_window: f64 = (t0.saturating_sub(2 * t_bound)..t0)
        .map(|k| stretch * energy[k])
        .sum();

    // delayed-noise term with the realized largest-displacement delay
    let mut delayed_noise = 0.0;
    for k in t0..t0 + span {
        let mut tau_max = 0usize;
        let mut best = -1.0f64;
        for i in 0..h.base.batch {
            let tau = traj.schedule.tau(k, i);
            let disp = linalg::norm_sq(&linalg::sub(&traj.iterates[k], &traj.iterates[k - tau]));
            if disp > best {
                best = disp;
                tau_max = tau;
            }
        }
        if tau_max > 0 {
            let mut acc = vec![0.0; h.base.dim];
            for item in noise.iter().take(k).skip(k - tau_max) {
                linalg::axpy(1.0, item, &mut acc);
            }
            delayed_noise += 2.0 * big_l * big_l * eta * eta * linalg::norm_sq(&acc);
        }
    }

    let rhs = main_term - pre_window - delayed_noise;
    let scale = lhs
        .abs()
        .max(main_term.abs())
        .max(pre_window)
        .max(delayed_noise)
        .max(1e-300);
    // holds when lhs >= rhs
    let residual = rhs - lhs;
    Ok(ResidualReport {
        lhs,
        rhs,
        residual,
        scale,
        satisfied: residual <= INEQUALITY_REL_TOL * scale,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MonteCarloConfig {
    pub trials: usize,
    /// Confidence parameter iota of the distributional bounds.
    pub iota: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Tl2Trial {
    pub energy: f64,
    pub max_displacement_sq: f64,
    pub energy_event: bool,
    pub confined: bool,
}

/// Outcome of the saddle-window energy experiment.
#[derive(Clone, Debug, Serialize)]
pub struct Tl2Outcome {
    pub trials: usize,
    pub horizon: usize,
    pub energy_threshold: f64,
    pub displacement_threshold: f64,
    pub energy_successes: usize,
    pub energy_frequency: f64,
    /// One-sided 95% lower confidence bound on the energy-event frequency.
    pub energy_lcb95: f64,
    /// Frequency of {energy >= F2} or {confined below S for the whole horizon}.
    pub disjunction_successes: usize,
    pub disjunction_frequency: f64,
    pub per_trial: Vec<Tl2Trial>,
}

/// Monte-Carlo estimate of the escape-window gradient energy event: start
/// frozen at a strict saddle, run the escape horizon, and count
/// sum_{t < T_max} ||grad f(x_t)||^2 >= F2.
pub fn tl2_experiment(
    h: &HyperParams,
    objective: &dyn Objective,
    anchor: &[f64],
    model: &DelayModel,
    mc: &MonteCarloConfig,
) -> Result<Tl2Outcome, DiagError> {
    let gate = h.learning_rate * h.base.smoothness * h.base.batch as f64 * h.base.max_delay as f64;
    if !h.escape_precondition() {
        return Err(DiagError::InfeasibleParams(gate));
    }
    let (lambda_min, _) = oracles::min_eig(objective, anchor, EIG_PROBE_TOL)?;
    let needed = -h.curvature_scale;
    if lambda_min > needed {
        return Err(DiagError::NotStrictSaddle { lambda_min, needed });
    }
    // frozen pre-window: 2T iterates pinned at the anchor
    let pre_energy = 2.0 * h.base.max_delay as f64 * linalg::norm_sq(&objective.grad(anchor));
    if pre_energy > h.block_energy_threshold {
        return Err(DiagError::PreWindowEnergy {
            energy: pre_energy,
            threshold: h.block_energy_threshold,
        });
    }

    let horizon = h.escape_horizon;
    let oracle = StochasticOracle::new(objective, h.base.noise_scale);
    let s_sq = h.displacement_threshold * h.displacement_threshold;
    let mut per_trial = Vec::with_capacity(mc.trials);
    for trial in 0..mc.trials {
        let mut trial_rng = streams::substream(mc.seed, DOMAIN_TRIAL, trial as u64, 0);
        let trial_seed: u64 = trial_rng.gen();
        let schedule = delay::generate(model, horizon, h.base.batch, h.base.max_delay, trial_seed)?;
        let traj = crate::engine::run(&crate::engine::RunConfig {
            params: h,
            oracle: &oracle,
            schedule: &schedule,
            x0: anchor.to_vec(),
            seed: trial_seed,
        })?;
        let energy: f64 = (0..horizon)
            .map(|t| linalg::norm_sq(&objective.grad(&traj.iterates[t])))
            .sum();
        let max_displacement_sq = traj
            .iterates
            .iter()
            .map(|x| linalg::norm_sq(&linalg::sub(x, anchor)))
            .fold(0.0, f64::max);
        // a noiseless run degenerates the threshold to zero; only strictly
        // positive energy counts as an escape there
        let energy_event = if h.escape_energy_threshold > 0.0 {
            energy >= h.escape_energy_threshold
        } else {
            energy > 0.0
        };
        per_trial.push(Tl2Trial {
            energy,
            max_displacement_sq,
            energy_event,
            confined: max_displacement_sq <= s_sq,
        });
    }
    let energy_successes = per_trial.iter().filter(|t| t.energy_event).count();
    let disjunction_successes = per_trial
        .iter()
        .filter(|t| t.energy_event || t.confined)
        .count();
    Ok(Tl2Outcome {
        trials: mc.trials,
        horizon,
        energy_threshold: h.escape_energy_threshold,
        displacement_threshold: h.displacement_threshold,
        energy_successes,
        energy_frequency: energy_successes as f64 / mc.trials as f64,
        energy_lcb95: stats::binomial_lower_bound(energy_successes, mc.trials, 0.05),
        disjunction_successes,
        disjunction_frequency: disjunction_successes as f64 / mc.trials as f64,
        per_trial,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct KindTally {
    pub first: usize,
    pub second: usize,
    pub third: usize,
    /// floor(K / 4T): the counting bound on third-kind blocks.
    pub third_bound: usize,
    pub bound_satisfied: bool,
}

/// Tally block kinds and check the third-kind counting bound.
pub fn count_kinds(reports: &[BlockReport], steps: usize, max_delay: usize) -> KindTally {
    let first = reports
        .iter()
        .filter(|r| r.kind == BlockKind::First)
        .count();
    let second = reports
        .iter()
        .filter(|r| r.kind == BlockKind::Second)
        .count();
    let third = reports
        .iter()
        .filter(|r| r.kind == BlockKind::Third)
        .count();
    let third_bound = steps / (4 * max_delay.max(1));
    KindTally {
        first,
        second,
        third,
        third_bound,
        bound_satisfied: third >= third_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::generate;
    use crate::engine::{run, RunConfig};
    use crate::oracles::{Quadratic, Saddle2d};
    use crate::params::BaseConfig;

    fn desk_base(batch: usize, max_delay: usize, eps: f64) -> BaseConfig {
        BaseConfig {
            smoothness: 1.0,
            hessian_lipschitz: 1.0,
            sample_lipschitz: 1.0,
            noise_scale: 1.0,
            perturbation_radius: 1.0,
            dim: 2,
            batch,
            max_delay,
            steps: 200,
            target_accuracy: eps,
            lr_margin: 3.0,
            horizon_margin: 3.0,
            displacement_margin: 0.25,
        }
    }

    fn frozen_trajectory(h: &HyperParams, x: Vec<f64>, steps: usize) -> Trajectory {
        // trajectory pinned at x: zero gradients recorded, zero noise
        let schedule = generate(
            &DelayModel::Constant { value: 0 },
            steps,
            h.base.batch,
            h.base.max_delay,
            0,
        )
        .unwrap();
        Trajectory {
            iterates: vec![x.clone(); steps + 1],
            perturbations: vec![vec![0.0; h.base.dim]; steps],
            grads: vec![
                vec![
                    crate::engine::GradRecord {
                        source_step: 0,
                        stream_key: (0, 0),
                        theta: 0,
                        value: vec![0.0; h.base.dim],
                    };
                    h.base.batch
                ];
                steps
            ],
            schedule,
            params: h.clone(),
            seed: 0,
        }
    }

    #[test]
    fn frozen_flat_point_is_all_third_kind() {
        let h = crate::params::derive_params(&desk_base(1, 2, 0.5)).unwrap();
        // grad = 0 and lambda_min = 0 at the minimum of a PSD quadratic
        let obj = Quadratic::new(crate::linalg::SymMatrix::diagonal(&[0.0, 1.0]));
        let traj = frozen_trajectory(&h, vec![0.0, 0.0], 40);
        let reports = classify_blocks(&traj, &h, &obj).unwrap();
        assert!(reports.iter().all(|r| r.kind == BlockKind::Third));
        let tally = count_kinds(&reports, 40, 2);
        assert!(tally.bound_satisfied);
    }

    #[test]
    fn frozen_saddle_is_all_second_kind() {
        let h = crate::params::derive_params(&desk_base(1, 2, 0.5)).unwrap();
        // lambda_min = -1 <= -sqrt(rho eps)/2 = -0.354
        let obj = Saddle2d::new(1.0);
        let traj = frozen_trajectory(&h, vec![0.0, 0.0], 40);
        let reports = classify_blocks(&traj, &h, &obj).unwrap();
        assert!(reports.iter().all(|r| r.kind == BlockKind::Second));
    }

    #[test]
    fn steep_segment_is_first_kind() {
        // far from the optimum of a quadratic the block energy is enormous
        let base = desk_base(1, 2, 0.5);
        let h = crate::params::HyperParams::explicit(base, 0.01).unwrap();
        let obj = Quadratic::identity(2);
        let oracle = StochasticOracle::new(&obj, 0.0);
        let schedule = generate(&DelayModel::Uniform, 8, 1, 2, 3).unwrap();
        let traj = run(&RunConfig {
            params: &h,
            oracle: &oracle,
            schedule: &schedule,
            x0: vec![50.0, 50.0],
            seed: 1,
        })
        .unwrap();
        let reports = classify_blocks(&traj, &h, &obj).unwrap();
        assert_eq!(reports[0].kind, BlockKind::First);
    }

    #[test]
    fn zero_delay_classification_rejected() {
        let h = crate::params::derive_params(&desk_base(1, 0, 0.5)).unwrap();
        let obj = Quadratic::identity(2);
        let traj = frozen_trajectory(&h, vec![0.0, 0.0], 10);
        assert!(matches!(
            classify_blocks(&traj, &h, &obj),
            Err(DiagError::ZeroDelayBlocks)
        ));
    }

    #[test]
    fn extraction_on_frozen_second_order_point() {
        let h = crate::params::derive_params(&desk_base(1, 2, 0.5)).unwrap();
        let obj = Quadratic::new(crate::linalg::SymMatrix::diagonal(&[0.5, 1.0]));
        let traj = frozen_trajectory(&h, vec![0.0, 0.0], 40);
        let reports = classify_blocks(&traj, &h, &obj).unwrap();
        let (idx, cert) = extract_second_order_point(&traj, &h, &obj, &reports[0]).unwrap();
        assert!(idx < reports[0].end && idx >= reports[0].end - 2);
        assert!(cert.grad_ok && cert.curvature_ok && cert.displacement_ok);
        assert!(cert.second_order_ok);
        // non-third blocks are rejected
        let obj2 = Saddle2d::new(1.0);
        let reports2 = classify_blocks(&traj, &h, &obj2).unwrap();
        assert!(matches!(
            extract_second_order_point(&traj, &h, &obj2, &reports2[0]),
            Err(DiagError::NotThirdKind(0))
        ));
    }

    #[test]
    fn extraction_argmin_matches_brute_force() {
        let base = desk_base(2, 3, 0.5);
        let h = crate::params::HyperParams::explicit(base, 0.02).unwrap();
        let obj = Saddle2d::new(1.0);
        let oracle = StochasticOracle::new(&obj, 1.0);
        let schedule = generate(&DelayModel::Uniform, 60, 2, 3, 5).unwrap();
        let traj = run(&RunConfig {
            params: &h,
            oracle: &oracle,
            schedule: &schedule,
            x0: vec![0.3, 0.9],
            seed: 5,
        })
        .unwrap();
        let reports = classify_blocks(&traj, &h, &obj).unwrap();
        for block in reports.iter().filter(|b| b.kind == BlockKind::Third) {
            let (idx, _) = extract_second_order_point(&traj, &h, &obj, block).unwrap();
            let window = h.base.max_delay.min(block.end - block.start);
            let brute = (block.end - window..block.end)
                .min_by(|&a, &b| {
                    let ea = linalg::norm_sq(&obj.grad(&traj.iterates[a]));
                    let eb = linalg::norm_sq(&obj.grad(&traj.iterates[b]));
                    ea.partial_cmp(&eb).unwrap()
                })
                .unwrap();
            assert_eq!(idx, brute);
        }
    }

    #[test]
    fn descent_inequality_noiseless_synchronous() {
        // s = r = 0 on a quadratic: every noise term vanishes and the
        // inequality is a deterministic descent statement.
        let mut base = desk_base(1, 0, 0.5);
        base.noise_scale = 0.0;
        base.perturbation_radius = 0.0;
        let h = crate::params::HyperParams::explicit(base, 0.05).unwrap();
        let obj = Quadratic::identity(2);
        let oracle = StochasticOracle::new(&obj, 0.0);
        let schedule = generate(&DelayModel::Constant { value: 0 }, 50, 1, 0, 0).unwrap();
        let traj = run(&RunConfig {
            params: &h,
            oracle: &oracle,
            schedule: &schedule,
            x0: vec![2.0, -1.0],
            seed: 0,
        })
        .unwrap();
        let rep = check_descent_inequality(&traj, &h, &obj, 0, 49, 4.0).unwrap();
        assert!(rep.satisfied, "{rep:?}");
        assert!(rep.residual <= 0.0);
    }

    #[test]
    fn descent_memory_term_empty_at_origin() {
        let base = desk_base(1, 3, 0.5);
        let h = crate::params::HyperParams::explicit(base, 0.02).unwrap();
        let obj = Saddle2d::new(1.0);
        let oracle = StochasticOracle::new(&obj, 1.0);
        let schedule = generate(&DelayModel::Uniform, 30, 1, 3, 2).unwrap();
        let traj = run(&RunConfig {
            params: &h,
            oracle: &oracle,
            schedule: &schedule,
            x0: vec![0.1, 0.1],
            seed: 2,
        })
        .unwrap();
        // t0 = 0: the memory sum has no terms; the call must simply succeed
        let rep = check_descent_inequality(&traj, &h, &obj, 0, 20, 4.0).unwrap();
        assert!(rep.scale > 0.0);
    }

    #[test]
    fn local_inequality_single_synchronous_step() {
        // span 1, zero noise, zero delay: reduces to
        // ||x_{t0+1} - x_{t0}||^2 <= 3 eta^2 M^2 ||grad f(x_{t0})||^2.
        let mut base = desk_base(1, 0, 0.5);
        base.noise_scale = 0.0;
        base.perturbation_radius = 0.0;
        let h = crate::params::HyperParams::explicit(base, 0.05).unwrap();
        let obj = Quadratic::identity(2);
        let oracle = StochasticOracle::new(&obj, 0.0);
        let schedule = generate(&DelayModel::Constant { value: 0 }, 5, 1, 0, 0).unwrap();
        let traj = run(&RunConfig {
            params: &h,
            oracle: &oracle,
            schedule: &schedule,
            x0: vec![1.0, 2.0],
            seed: 0,
        })
        .unwrap();
        let rep = check_local_inequality(&traj, &h, &obj, 2, 1).unwrap();
        assert!(rep.satisfied, "{rep:?}");
    }

    #[test]
    fn local_inequality_holds_pathwise_on_random_runs() {
        for (seed, model) in [
            (3u64, DelayModel::Uniform),
            (4, DelayModel::AdversarialMax),
            (5, DelayModel::RoundRobin { workers: 3 }),
        ] {
            let base = desk_base(2, 3, 0.5);
            let h = crate::params::HyperParams::explicit(base, 0.02).unwrap();
            let obj = Saddle2d::new(1.0);
            let oracle = StochasticOracle::new(&obj, 1.0);
            let schedule = generate(&model, 120, 2, 3, seed).unwrap();
            let traj = run(&RunConfig {
                params: &h,
                oracle: &oracle,
                schedule: &schedule,
                x0: vec![0.0, 0.0],
                seed,
            })
            .unwrap();
            for (t0, span) in [(0usize, 10usize), (5, 30), (20, 60), (50, 70), (100, 20)] {
                let rep = check_local_inequality(&traj, &h, &obj, t0, span).unwrap();
                assert!(rep.satisfied, "seed {seed} window ({t0},{span}): {rep:?}");
            }
        }
    }

    #[test]
    fn tl2_rejects_non_saddle_anchor() {
        let h = crate::params::derive_params(&desk_base(4, 1, 0.5)).unwrap();
        // gamma = 0: lambda_min = 0 at the origin, not a strict saddle
        let obj = Saddle2d::new(0.0);
        let mc = MonteCarloConfig {
            trials: 4,
            iota: 4.0,
            seed: 0,
        };
        let err = tl2_experiment(&h, &obj, &[0.0, 0.0], &DelayModel::Uniform, &mc).unwrap_err();
        assert!(matches!(err, DiagError::NotStrictSaddle { .. }));
    }

    #[test]
    fn tl2_noiseless_never_moves() {
        // r = s = 0 at an exact saddle: the trajectory is a fixed point and
        // the energy event has frequency zero.
        let mut base = desk_base(4, 1, 0.5);
        base.noise_scale = 0.0;
        base.perturbation_radius = 0.0;
        let h = crate::params::HyperParams::explicit(base, 1.0 / 24.0).unwrap();
        let obj = Saddle2d::new(1.0);
        let mc = MonteCarloConfig {
            trials: 8,
            iota: 4.0,
            seed: 1,
        };
        let out = tl2_experiment(&h, &obj, &[0.0, 0.0], &DelayModel::Uniform, &mc).unwrap();
        assert_eq!(out.energy_successes, 0);
        // the confinement side of the disjunction holds instead
        assert_eq!(out.disjunction_successes, mc.trials);
    }

    #[test]
    fn tl2_feasibility_gate() {
        let base = desk_base(4, 4, 0.5);
        let h = crate::params::HyperParams::explicit(base, 0.5).unwrap();
        let obj = Saddle2d::new(1.0);
        let mc = MonteCarloConfig {
            trials: 2,
            iota: 4.0,
            seed: 0,
        };
        assert!(matches!(
            tl2_experiment(&h, &obj, &[0.0, 0.0], &DelayModel::Uniform, &mc),
            Err(DiagError::InfeasibleParams(_))
        ));
    }
}
