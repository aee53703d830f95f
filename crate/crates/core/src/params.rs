//! Hyperparameter derivation, feasibility conditions, and worker-count
//! scaling thresholds.
//!
//! A small [`BaseConfig`] (problem constants plus the three tunable
//! multipliers) expands into the full [`HyperParams`] ledger: learning rate,
//! block and escape energy thresholds, escape horizon, displacement
//! threshold, growth rate, and the fixed proof constants. `check_conditions`
//! evaluates the feasibility ledger (a)-(e) plus the descent-bound
//! precondition and reports each side numerically; `feasible_search` scans
//! the multipliers until everything passes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Base problem description from which everything else is derived.
///
/// `lr_margin`, `horizon_margin`, `displacement_margin` are the three
/// order-one multipliers the analysis leaves free (they scale the learning
/// rate down, the escape horizon up, and the displacement threshold up,
/// respectively).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BaseConfig {
    /// Gradient Lipschitz constant L.
    pub smoothness: f64,
    /// Hessian Lipschitz constant rho.
    pub hessian_lipschitz: f64,
    /// Per-sample gradient Lipschitz constant ell.
    pub sample_lipschitz: f64,
    /// Per-sample noise sub-Gaussian scale s.
    pub noise_scale: f64,
    /// Perturbation radius r.
    pub perturbation_radius: f64,
    /// Parameter dimension d.
    pub dim: usize,
    /// Mini-batch size M (gradients aggregated per step).
    pub batch: usize,
    /// Maximum gradient staleness T.
    pub max_delay: usize,
    /// Total iterations K.
    pub steps: usize,
    /// Target gradient-norm accuracy epsilon.
    pub target_accuracy: f64,
    #[serde(default = "one")]
    pub lr_margin: f64,
    #[serde(default = "one")]
    pub horizon_margin: f64,
    #[serde(default = "one")]
    pub displacement_margin: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("field `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("combined noise scale is zero (noise_scale and perturbation_radius both zero)")]
    ZeroNoise,
    #[error("target accuracy too large: sqrt(rho * eps) = {0} exceeds smoothness {1}")]
    AccuracyTooCoarse(f64, f64),
    #[error("multiplier search exhausted without satisfying conditions (a)-(e)")]
    SearchExhausted,
    #[error("escape horizon overflows an integer step count (T_max ~ {0:.3e} steps)")]
    HorizonOverflow(f64),
}

impl BaseConfig {
    /// Hard input validation. Returns non-fatal warnings (currently the
    /// second-order-target sanity flag eps <= L^2 / rho).
    pub fn validate(&self) -> Result<Vec<String>, ParamError> {
        let positives = [
            (self.smoothness, "smoothness"),
            (self.hessian_lipschitz, "hessian_lipschitz"),
            (self.sample_lipschitz, "sample_lipschitz"),
            (self.target_accuracy, "target_accuracy"),
            (self.lr_margin, "lr_margin"),
            (self.horizon_margin, "horizon_margin"),
            (self.displacement_margin, "displacement_margin"),
        ];
        for (v, name) in positives {
            if !v.is_finite() || v <= 0.0 {
                return Err(ParamError::NonPositive(name));
            }
        }
        if self.noise_scale < 0.0 || self.perturbation_radius < 0.0 {
            return Err(ParamError::NonPositive("noise scales"));
        }
        if self.dim == 0 {
            return Err(ParamError::NonPositive("dim"));
        }
        if self.batch == 0 {
            return Err(ParamError::NonPositive("batch"));
        }
        if self.steps == 0 {
            return Err(ParamError::NonPositive("steps"));
        }
        let mut warnings = Vec::new();
        if self.target_accuracy > self.smoothness * self.smoothness / self.hessian_lipschitz {
            warnings.push(format!(
                "target_accuracy {} exceeds smoothness^2/hessian_lipschitz {}; \
                 the curvature threshold sqrt(rho*eps) is larger than L",
                self.target_accuracy,
                self.smoothness * self.smoothness / self.hessian_lipschitz
            ));
        }
        Ok(warnings)
    }
}

/// Fixed constants of the concentration toolbox.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProofConstants {
    /// Sub-Gaussian moment constant c = 4.
    pub chernoff_c: f64,
    /// b = ln(2(d+1)) + ln 2.
    pub dim_log_b: f64,
    /// C = 2 (2 sqrt(48 c) + 2 b).
    pub split_c: f64,
    /// c2 = ln 96 + ln(d+1).
    pub tail_c2: f64,
    /// p = 1 / (1 + C).
    pub contraction_p: f64,
}

impl ProofConstants {
    pub fn for_dim(dim: usize) -> Self {
        let c = 4.0f64;
        let d = dim as f64;
        let b = (2.0 * (d + 1.0)).ln() + 2f64.ln();
        let big_c = 2.0 * (2.0 * (48.0 * c).sqrt() + 2.0 * b);
        ProofConstants {
            chernoff_c: c,
            dim_log_b: b,
            split_c: big_c,
            tail_c2: 96f64.ln() + (d + 1.0).ln(),
            contraction_p: 1.0 / (1.0 + big_c),
        }
    }
}

/// The full derived parameter ledger.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HyperParams {
    pub base: BaseConfig,
    /// sigma^2 = s^2 + r^2.
    pub sigma_sq: f64,
    /// eta.
    pub learning_rate: f64,
    /// gamma = sqrt(rho * eps) / 2, the curvature threshold of the saddle probe.
    pub curvature_scale: f64,
    /// f = (T+1) M eta gamma, the exponent controlling the delay penalty.
    pub growth_exponent: f64,
    /// T_max, rounded up to an integer step count.
    pub escape_horizon: usize,
    /// F, block gradient-energy threshold.
    pub block_energy_threshold: f64,
    /// F2, escape gradient-energy threshold.
    pub escape_energy_threshold: f64,
    /// q = M eta gamma exp(-(T+1) M eta gamma), per-step growth rate.
    pub growth_rate: f64,
    /// S, displacement threshold.
    pub displacement_threshold: f64,
    pub proof: ProofConstants,
}

impl HyperParams {
    /// Derived quantities for an explicitly chosen learning rate. Skips the
    /// eta = eps^2 / (w sigma^2 L) binding; used by noiseless diagnostics and
    /// tests that pin eta directly.
    pub fn explicit(base: BaseConfig, learning_rate: f64) -> Result<Self, ParamError> {
        base.validate()?;
        if !learning_rate.is_finite() || learning_rate <= 0.0 {
            return Err(ParamError::NonPositive("learning_rate"));
        }
        Self::assemble(base, learning_rate)
    }

    fn assemble(base: BaseConfig, eta: f64) -> Result<Self, ParamError> {
        let sigma_sq = base.noise_scale * base.noise_scale
            + base.perturbation_radius * base.perturbation_radius;
        let m = base.batch as f64;
        let t = base.max_delay as f64;
        let big_l = base.smoothness;
        let gamma = (base.hessian_lipschitz * base.target_accuracy).sqrt() / 2.0;
        let f_exp = (t + 1.0) * m * eta * gamma;
        let horizon_steps = (base.horizon_margin * f_exp.exp() / (m * eta * gamma)).ceil();
        if !horizon_steps.is_finite() || horizon_steps > 1.0e18 {
            return Err(ParamError::HorizonOverflow(horizon_steps));
        }
        let escape_horizon = base.max_delay + horizon_steps as usize;
        let proof = ProofConstants::for_dim(base.dim);
        let block_energy_threshold = 60.0 * proof.chernoff_c * sigma_sq * eta * big_l * t;
        let escape_energy_threshold = escape_horizon as f64 * eta * big_l * sigma_sq;
        let growth_rate = m * eta * gamma * (-f_exp).exp();
        let t_max = escape_horizon as f64;
        let displacement_threshold = base.displacement_margin
            * (big_l * eta * m * t_max).sqrt()
            * eta
            * m.sqrt()
            * t_max.sqrt()
            * sigma_sq.sqrt();
        Ok(HyperParams {
            base,
            sigma_sq,
            learning_rate: eta,
            curvature_scale: gamma,
            growth_exponent: f_exp,
            escape_horizon,
            block_energy_threshold,
            escape_energy_threshold,
            growth_rate,
            displacement_threshold,
            proof,
        })
    }

    /// sigma.
    pub fn sigma(&self) -> f64 {
        self.sigma_sq.sqrt()
    }

    /// The standalone escape-experiment precondition eta L M T <= 1/3; this is
    /// the gate the escape experiments enforce (the full ledger (a)-(e) is
    /// what `check_conditions` reports).
    pub fn escape_precondition(&self) -> bool {
        self.learning_rate
            * self.base.smoothness
            * self.base.batch as f64
            * self.base.max_delay as f64
            <= 1.0 / 3.0 + 1e-15
    }

    /// Descent-bound precondition eta^2 (3L/4 - L^2 M T^2 eta) - eta/(2M) < 0.
    pub fn descent_precondition(&self) -> bool {
        descent_precondition_lhs(
            self.learning_rate,
            self.base.smoothness,
            self.base.batch as f64,
            self.base.max_delay as f64,
        ) < 0.0
    }
}

fn descent_precondition_lhs(eta: f64, big_l: f64, m: f64, t: f64) -> f64 {
    eta * eta * (0.75 * big_l - big_l * big_l * m * t * t * eta) - eta / (2.0 * m)
}

/// Derive the full ledger from a base configuration.
pub fn derive_params(base: &BaseConfig) -> Result<HyperParams, ParamError> {
    base.validate()?;
    let sigma_sq =
        base.noise_scale * base.noise_scale + base.perturbation_radius * base.perturbation_radius;
    if sigma_sq == 0.0 {
        return Err(ParamError::ZeroNoise);
    }
    let sqrt_rho_eps = (base.hessian_lipschitz * base.target_accuracy).sqrt();
    if sqrt_rho_eps > base.smoothness {
        return Err(ParamError::AccuracyTooCoarse(sqrt_rho_eps, base.smoothness));
    }
    let eta =
        base.target_accuracy * base.target_accuracy / (base.lr_margin * sigma_sq * base.smoothness);
    HyperParams::assemble(base.clone(), eta)
}

/// One evaluated feasibility condition: `lhs <= rhs` (or the documented
/// direction for that name).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

impl ConditionCheck {
    fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        ConditionCheck {
            name: name.to_string(),
            lhs,
            rhs,
            satisfied: lhs <= rhs,
        }
    }

    fn ge(name: &str, lhs: f64, rhs: f64) -> Self {
        ConditionCheck {
            name: name.to_string(),
            lhs,
            rhs,
            satisfied: lhs >= rhs,
        }
    }
}

/// Report of the ledger conditions (a)-(e) plus the descent precondition,
/// with the definitional bound F <= T eps^2 listed as a non-gating
/// recommendation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    pub conditions: Vec<ConditionCheck>,
    pub recommendations: Vec<ConditionCheck>,
    pub feasible: bool,
}

impl ConditionReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Evaluate the feasibility ledger for a derived parameter set.
pub fn check_conditions(h: &HyperParams) -> ConditionReport {
    let eta = h.learning_rate;
    let m = h.base.batch as f64;
    let t = h.base.max_delay as f64;
    let big_l = h.base.smoothness;
    let rho = h.base.hessian_lipschitz;
    let ell = h.base.sample_lipschitz;
    let d = h.base.dim as f64;
    let t_max = h.escape_horizon as f64;
    let sigma_sq = h.sigma_sq;
    let c = h.proof.chernoff_c;
    let c2 = h.proof.tail_c2;
    let p = h.proof.contraction_p;
    let s_thr = h.displacement_threshold;
    let q = h.growth_rate;
    let r = h.base.perturbation_radius;
    let u = h.base.horizon_margin;

    let mut conditions = Vec::new();

    conditions.push(ConditionCheck::le(
        "a1",
        eta,
        1.0 / (3.0 * m * big_l * (t + 1.0)),
    ));
    conditions.push(ConditionCheck::le(
        "a2",
        2.0 * eta * eta * m * m * big_l * big_l * t * t * t,
        0.2,
    ));
    conditions.push(ConditionCheck::le(
        "b",
        (3.0 * 65.0f64).sqrt() * (m * t_max * eta * rho * s_thr + (t_max * m).sqrt() * eta * ell),
        p,
    ));
    // (c): escape energy budget.
    let c_lhs = (s_thr * s_thr - 3.0 * eta * eta * m * sigma_sq * t_max * c * c * c2)
        / (3.0 * eta * eta * m * m * t_max)
        - 2.0 * big_l * big_l * eta * eta * t * t * t * m * m * h.block_energy_threshold
        - 4.0 * c * big_l * big_l * m * eta * eta * t * t_max * sigma_sq;
    conditions.push(ConditionCheck::ge(
        "c",
        c_lhs,
        2.0 * t * h.escape_energy_threshold,
    ));
    conditions.push(ConditionCheck::ge(
        "d",
        2f64.powf(u) * m.sqrt() * eta * r / (6.0 * 3f64.sqrt() * (2.0 * q * d).sqrt()),
        2.0 * s_thr,
    ));
    // (e): T * T_max * exp(-T_max) <= 1/48 (zero when T = 0).
    conditions.push(ConditionCheck::le(
        "e",
        t * t_max * (-t_max).exp(),
        1.0 / 48.0,
    ));
    conditions.push(ConditionCheck::le(
        "descent_precondition",
        descent_precondition_lhs(eta, big_l, m, t),
        0.0,
    ));

    let recommendations = vec![ConditionCheck::le(
        "block_energy_le_t_eps2",
        h.block_energy_threshold,
        t * h.base.target_accuracy * h.base.target_accuracy,
    )];

    let feasible = conditions.iter().all(|c| c.satisfied);
    ConditionReport {
        conditions,
        recommendations,
        feasible,
    }
}

/// Raw worker-count scaling thresholds: (K^{1/2} M^{-1/2}, K^{1/3} M^{-1/3}).
/// The hidden logarithmic factors are not reported by the analysis, so the
/// bare powers are returned.
pub fn worker_bounds(steps: usize, batch: usize) -> (f64, f64) {
    assert!(steps > 0 && batch > 0, "steps and batch must be positive");
    let ratio = steps as f64 / batch as f64;
    (ratio.sqrt(), ratio.cbrt())
}

/// Result of the multiplier search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeasibleSearchResult {
    pub params: HyperParams,
    pub report: ConditionReport,
    pub lr_margin: f64,
    pub horizon_margin: f64,
    pub displacement_margin: f64,
}

/// Search (w, u, B) by doubling/bisection until the ledger passes.
///
/// w is bisected to satisfy the eta-monotone conditions, then u is scanned
/// upward; for each u the window of admissible B is computed in closed form
/// from (c) (lower end) and (b), (d) (upper end).
pub fn feasible_search(base: &BaseConfig) -> Result<FeasibleSearchResult, ParamError> {
    base.validate()?;
    let eta_ok = |w: f64| -> bool {
        let mut cfg = base.clone();
        cfg.lr_margin = w;
        let h = match derive_params(&cfg) {
            Ok(h) => h,
            Err(_) => return false,
        };
        let rep = check_conditions(&h);
        rep.condition("a1").is_some_and(|c| c.satisfied)
            && rep.condition("a2").is_some_and(|c| c.satisfied)
            && rep
                .condition("descent_precondition")
                .is_some_and(|c| c.satisfied)
            && rep.recommendations.iter().all(|c| c.satisfied)
    };

    // Minimal w making the eta-side conditions hold, then margin.
    let mut w_hi = base.lr_margin.max(1e-6);
    let mut grew = false;
    for _ in 0..200 {
        if eta_ok(w_hi) {
            break;
        }
        w_hi *= 2.0;
        grew = true;
    }
    if !eta_ok(w_hi) {
        return Err(ParamError::SearchExhausted);
    }
    let mut w_lo = if grew { w_hi / 2.0 } else { w_hi / 1024.0 };
    for _ in 0..80 {
        let mid = 0.5 * (w_lo + w_hi);
        if eta_ok(mid) {
            w_hi = mid;
        } else {
            w_lo = mid;
        }
    }

    let sqrt_195 = (3.0 * 65.0f64).sqrt();
    for w_boost in 0..55 {
        let w = w_hi * 2f64.powi(w_boost + 1);
        if !eta_ok(w) {
            continue;
        }
        let mut u = 1.0 / 16.0;
        while u <= 2f64.powi(30) {
            let mut cfg = base.clone();
            cfg.lr_margin = w;
            cfg.horizon_margin = u;
            cfg.displacement_margin = 1.0;
            let h = match derive_params(&cfg) {
                Ok(h) => h,
                // horizon overflow only worsens as u grows; move to next w
                Err(ParamError::HorizonOverflow(_)) => break,
                Err(e) => return Err(e),
            };
            let eta = h.learning_rate;
            let m = h.base.batch as f64;
            let t = h.base.max_delay as f64;
            let t_max = h.escape_horizon as f64;
            let big_l = h.base.smoothness;
            let sigma_sq = h.sigma_sq;
            let c = h.proof.chernoff_c;
            let c2 = h.proof.tail_c2;

            // (e) first: needs the horizon long enough.
            if t * t_max * (-t_max).exp() > 1.0 / 48.0 {
                u *= 2.0;
                continue;
            }
            // Unit-B displacement scale: S = B * s_unit.
            let s_unit =
                (big_l * eta * m * t_max).sqrt() * eta * m.sqrt() * t_max.sqrt() * sigma_sq.sqrt();
            // Lower end from (c).
            let needed = 2.0 * t * h.escape_energy_threshold
                + c * c * c2 * sigma_sq / m
                + 2.0 * big_l * big_l * eta * eta * t * t * t * m * m * h.block_energy_threshold
                + 4.0 * c * big_l * big_l * m * eta * eta * t * t_max * sigma_sq;
            let b_min_sq = 3.0 * needed / (big_l * eta * t_max * sigma_sq);
            let b_min = b_min_sq.max(0.0).sqrt() * (1.0 + 1e-9);
            // Upper end from (b).
            let ell_part = (t_max * m).sqrt() * eta * h.base.sample_lipschitz;
            let s_cap_b = (h.proof.contraction_p / sqrt_195 - ell_part)
                / (m * t_max * eta * h.base.hessian_lipschitz);
            // Upper end from (d).
            let d_lhs_unit = 2f64.powf(u) * m.sqrt() * eta * h.base.perturbation_radius
                / (6.0 * 3f64.sqrt() * (2.0 * h.growth_rate * h.base.dim as f64).sqrt());
            let s_cap_d = d_lhs_unit / 2.0;
            let s_cap = s_cap_b.min(s_cap_d);
            if s_cap > 0.0 && b_min * s_unit < s_cap {
                let b_hi = s_cap / s_unit;
                let b = (b_min.max(b_hi * 1e-9) * b_hi).sqrt();
                let mut final_cfg = base.clone();
                final_cfg.lr_margin = w;
                final_cfg.horizon_margin = u;
                final_cfg.displacement_margin = b;
                let params = derive_params(&final_cfg)?;
                let report = check_conditions(&params);
                if report.feasible {
                    return Ok(FeasibleSearchResult {
                        params,
                        report,
                        lr_margin: w,
                        horizon_margin: u,
                        displacement_margin: b,
                    });
                }
            }
            u *= 2.0;
        }
    }
    Err(ParamError::SearchExhausted)
}
