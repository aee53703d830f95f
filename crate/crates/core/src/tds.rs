//! Delayed linear recursions: fundamental solutions, the beta energy sums,
//! per-step growth certificates, and Razumikhin-type instability checks.
//!
//! The recursion analyzed here is
//!
//! ```text
//! x(t) = x(t-1) + eta * sum_m  gamma * x(t - 1 - tau(t-1, m))
//! ```
//!
//! driven by the same delay schedule as the optimizer: the gradient applied
//! while producing iterate t was read tau(t-1, m) steps before t-1. Written
//! with a shifted delay tau~ = tau + 1 in [1, T+1] the right-hand side never
//! references x(t) itself, which is the only explicit reading of the
//! recursion. The fundamental solution f(t0, .) starts from a unit impulse
//! at t0 with zero prehistory.

use crate::delay::DelaySchedule;
use crate::linalg::{self, SymMatrix};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TdsError {
    #[error("horizon {0} exceeds the schedule length {1}")]
    HorizonTooLong(usize, usize),
    #[error("start vector has no component in the top eigenspace")]
    DegenerateStart,
    #[error("Lyapunov trace must be positive everywhere (index {0})")]
    NonPositiveTrace(usize),
    #[error("matrix fundamental solutions are limited to dimension <= {0}")]
    DimensionTooLarge(usize),
}

/// Low-level scalar row: writes f(t0, t) for t = t0..=horizon into `out`.
/// `coef` is eta*gamma and `tau(t, m)` the engine-convention delay consumed
/// by the step that produces iterate t+1.
pub fn scalar_row_into(
    coef: f64,
    batch: usize,
    tau: &impl Fn(usize, usize) -> usize,
    t0: usize,
    horizon: usize,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.push(1.0);
    for t in (t0 + 1)..=horizon {
        let prev = out[t - 1 - t0];
        let mut feedback = 0.0;
        for m in 0..batch {
            let src = (t - 1) - tau(t - 1, m);
            if src >= t0 {
                feedback += out[src - t0];
            }
        }
        out.push(prev + coef * feedback);
    }
}

/// One row of the scalar fundamental solution over a schedule.
pub fn fundamental_solution_row(
    gamma: f64,
    eta: f64,
    schedule: &DelaySchedule,
    t0: usize,
    horizon: usize,
) -> Result<Vec<f64>, TdsError> {
    if horizon > schedule.steps() {
        return Err(TdsError::HorizonTooLong(horizon, schedule.steps()));
    }
    let mut out = Vec::with_capacity(horizon - t0 + 1);
    scalar_row_into(
        eta * gamma,
        schedule.batch(),
        &|t, m| schedule.tau(t, m),
        t0,
        horizon,
        &mut out,
    );
    Ok(out)
}

/// Full scalar fundamental-solution table with the beta energy sums and the
/// certified growth rate q = M eta gamma exp(-(T+1) M eta gamma).
#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    pub gamma: f64,
    pub eta: f64,
    pub batch: usize,
    pub bound: usize,
    pub horizon: usize,
    rows: Vec<Vec<f64>>,
    betas: Vec<f64>,
    pub growth_rate: f64,
}

impl FundamentalSolution {
    pub fn compute(
        gamma: f64,
        eta: f64,
        schedule: &DelaySchedule,
        horizon: usize,
    ) -> Result<Self, TdsError> {
        if horizon > schedule.steps() {
            return Err(TdsError::HorizonTooLong(horizon, schedule.steps()));
        }
        let batch = schedule.batch();
        let coef = eta * gamma;
        let mut rows = Vec::with_capacity(horizon + 1);
        for t0 in 0..=horizon {
            let mut row = Vec::with_capacity(horizon - t0 + 1);
            scalar_row_into(
                coef,
                batch,
                &|t, m| schedule.tau(t, m),
                t0,
                horizon,
                &mut row,
            );
            rows.push(row);
        }
        let betas = (0..=horizon)
            .map(|k| {
                (0..=k)
                    .map(|i| {
                        let f = rows[i][k - i];
                        f * f
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        let growth_rate = growth_rate(gamma, eta, batch, schedule.bound());
        Ok(FundamentalSolution {
            gamma,
            eta,
            batch,
            bound: schedule.bound(),
            horizon,
            rows,
            betas,
            growth_rate,
        })
    }

    /// f(t0, t); zero for t < t0.
    pub fn value(&self, t0: usize, t: usize) -> f64 {
        if t < t0 {
            0.0
        } else {
            self.rows[t0][t - t0]
        }
    }

    /// beta(k) = sqrt(sum_{i=0}^{k} f(i, k)^2).
    pub fn beta(&self, k: usize) -> f64 {
        self.betas[k]
    }
}

pub fn growth_rate(gamma: f64, eta: f64, batch: usize, bound: usize) -> f64 {
    let a = batch as f64 * eta * gamma;
    a * (-((bound as f64 + 1.0) * a)).exp()
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GrowthViolation {
    pub row: usize,
    pub t: usize,
    pub ratio: f64,
    pub required: f64,
}

pub const GROWTH_REL_TOL: f64 = 1e-12;

/// Certify f(k, t+1) >= (1+q) f(k, t) whenever t - k >= T.
pub fn check_growth(fsol: &FundamentalSolution) -> Vec<GrowthViolation> {
    let required = 1.0 + fsol.growth_rate;
    let floor = required * (1.0 - GROWTH_REL_TOL);
    let mut violations = Vec::new();
    for (k, row) in fsol.rows.iter().enumerate() {
        if fsol.bound >= row.len() {
            continue;
        }
        for (offset, w) in row[fsol.bound..].windows(2).enumerate() {
            if w[1] < w[0] * floor {
                violations.push(GrowthViolation {
                    row: k,
                    t: k + fsol.bound + offset,
                    ratio: w[1] / w[0],
                    required,
                });
            }
        }
    }
    violations
}

/// Per-property outcome of the f / beta ledger.
#[derive(Clone, Debug, Serialize)]
pub struct FPropertyReport {
    /// (1) f(t0,t1) f(t1,t2) <= f(t0,t2): (checked, violations)
    pub submultiplicative: (usize, usize),
    /// (2) monotone nondecreasing rows
    pub monotone: (usize, usize),
    /// (3) f(k,t) beta(k) <= beta(t)
    pub beta_domination: (usize, usize),
    /// (5) beta^2(k) >= (1+q)^{2(k-T)} / (6q) for k - T >= ln2/q
    pub beta_lower_bound: (usize, usize),
}

impl FPropertyReport {
    pub fn total_violations(&self) -> usize {
        self.submultiplicative.1
            + self.monotone.1
            + self.beta_domination.1
            + self.beta_lower_bound.1
    }
}

/// Verify properties (1)-(3) and (5) on a computed table. `triple_stride`
/// subsamples the (t0, t1, t2) triples of property (1) for large horizons
/// (1 checks every triple).
pub fn check_f_properties(fsol: &FundamentalSolution, triple_stride: usize) -> FPropertyReport {
    let stride = triple_stride.max(1);
    let tol = GROWTH_REL_TOL;
    let h = fsol.horizon;

    // (1) walks row slices directly; the enumeration sweeps visit millions
    // of tables, so the inner loop stays free of per-element bounds checks.
    let mut submul = (0usize, 0usize);
    for t0 in (0..=h).step_by(stride) {
        let row0 = &fsol.rows[t0];
        for t1 in (t0..=h).step_by(stride) {
            let f01 = row0[t1 - t0];
            let row1 = &fsol.rows[t1];
            for (&f12, &f02) in row1
                .iter()
                .step_by(stride)
                .zip(row0[t1 - t0..].iter().step_by(stride))
            {
                submul.0 += 1;
                if f01 * f12 > f02 * (1.0 + tol) {
                    submul.1 += 1;
                }
            }
        }
    }

    let mut mono = (0usize, 0usize);
    for row in &fsol.rows {
        for w in row.windows(2) {
            mono.0 += 1;
            if w[1] < w[0] * (1.0 - tol) {
                mono.1 += 1;
            }
        }
    }

    let mut dom = (0usize, 0usize);
    for (k, row) in fsol.rows.iter().enumerate() {
        let beta_k = fsol.betas[k];
        for (&f, &beta_t) in row.iter().zip(&fsol.betas[k..]) {
            dom.0 += 1;
            if f * beta_k > beta_t * (1.0 + tol) {
                dom.1 += 1;
            }
        }
    }

    let q = fsol.growth_rate;
    let mut lower = (0usize, 0usize);
    if q > 0.0 {
        let min_gap = (2f64.ln() / q).ceil() as usize;
        for k in 0..=h {
            if k < fsol.bound + min_gap {
                continue;
            }
            lower.0 += 1;
            let gap = (k - fsol.bound) as f64;
            let bound = (1.0 + q).powf(2.0 * gap) / (6.0 * q);
            let beta_sq = fsol.beta(k) * fsol.beta(k);
            if beta_sq < bound * (1.0 - tol) {
                lower.1 += 1;
            }
        }
    }

    FPropertyReport {
        submultiplicative: submul,
        monotone: mono,
        beta_domination: dom,
        beta_lower_bound: lower,
    }
}

/// A positive Lyapunov trace V(-T), ..., V(0), V(1), ..., V(N) together with
/// the certificate constants.
#[derive(Clone, Debug)]
pub struct LyapunovTrace {
    /// Delay window T.
    pub delay_window: usize,
    /// q: certified per-step growth.
    pub growth_rate: f64,
    /// q_m: bounded-difference floor.
    pub step_floor: f64,
    /// p: initial-window fraction of V(0).
    pub init_fraction: f64,
    values: Vec<f64>,
}

impl LyapunovTrace {
    /// `values[0]` is V(-T); `values[delay_window]` is V(0).
    pub fn new(
        delay_window: usize,
        growth_rate: f64,
        step_floor: f64,
        init_fraction: f64,
        values: Vec<f64>,
    ) -> Result<Self, TdsError> {
        assert!(values.len() > delay_window, "trace must reach time 0");
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v <= 0.0 {
                return Err(TdsError::NonPositiveTrace(i));
            }
        }
        Ok(LyapunovTrace {
            delay_window,
            growth_rate,
            step_floor,
            init_fraction,
            values,
        })
    }

    /// V at signed time t (t = 0 is the certificate origin).
    pub fn v(&self, t: isize) -> f64 {
        self.values[(t + self.delay_window as isize) as usize]
    }

    /// Largest time in the trace.
    pub fn end(&self) -> isize {
        (self.values.len() - 1 - self.delay_window) as isize
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RazumikhinCertificate {
    pub bounded_difference_ok: bool,
    pub first_bounded_difference_violation: Option<isize>,
    pub razumikhin_ok: bool,
    pub first_razumikhin_violation: Option<isize>,
    pub init_window_ok: bool,
    pub conclusion_ok: bool,
    pub first_conclusion_violation: Option<isize>,
    /// All hypotheses hold and the exponential lower bound is realized.
    pub certified: bool,
}

pub const RAZUMIKHIN_REL_TOL: f64 = 1e-9;

/// Check conditions (a) and (b) on the trace, then assert the exponential
/// conclusion V(t) >= (1+q)^t p V(0) for t > 0.
pub fn razumikhin_verify(trace: &LyapunovTrace) -> RazumikhinCertificate {
    let t_big = trace.delay_window as isize;
    let q = trace.growth_rate;
    let q_m = trace.step_floor;
    let p = trace.init_fraction;
    let end = trace.end();
    let tol = RAZUMIKHIN_REL_TOL;

    let mut first_a = None;
    let mut first_b = None;
    for t in 0..end {
        let cur = trace.v(t);
        let next = trace.v(t + 1);
        if next < q_m * cur * (1.0 - tol) && first_a.is_none() {
            first_a = Some(t);
        }
        // Razumikhin implication: premise over the delayed window
        // (t - tau stays >= -T, which the trace always covers).
        let premise_floor = (1.0 + q).powi(-(t_big as i32)) * q_m / (1.0 + q) * cur;
        let premise = (0..=t_big).all(|tau| trace.v(t - tau) >= premise_floor * (1.0 - tol));
        if premise && next < (1.0 + q) * cur * (1.0 - tol) && first_b.is_none() {
            first_b = Some(t);
        }
    }

    let v0 = trace.v(0);
    let init_window_ok = (1..=t_big).all(|back| trace.v(-back) >= p * v0 * (1.0 - tol));

    let mut first_conclusion = None;
    for t in 1..=end {
        let bound = (1.0 + q).powi(t as i32) * p * v0;
        if trace.v(t) < bound * (1.0 - tol) {
            first_conclusion = Some(t);
            break;
        }
    }

    let bounded_difference_ok = first_a.is_none();
    let razumikhin_ok = first_b.is_none();
    let conclusion_ok = first_conclusion.is_none();
    RazumikhinCertificate {
        bounded_difference_ok,
        first_bounded_difference_violation: first_a,
        razumikhin_ok,
        first_razumikhin_violation: first_b,
        init_window_ok,
        conclusion_ok,
        first_conclusion_violation: first_conclusion,
        certified: bounded_difference_ok && razumikhin_ok && init_window_ok && conclusion_ok,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RoughGrowthReport {
    /// a = M eta gamma.
    pub rate_scale: f64,
    /// q~ = a - a^3 T^2.
    pub rough_rate: f64,
    /// Whether q~ > 0 (the regime the rough estimate covers).
    pub precondition_met: bool,
    /// (n, ratio) pairs with V(n+1) < (1 + q~) V(n) for n > T.
    pub growth_violations: Vec<(usize, f64)>,
    /// (n, ratio) pairs with V(n+1) < V(n) for n <= T.
    pub monotonicity_violations: Vec<(usize, f64)>,
    pub horizon: usize,
}

/// Run x(n+1) = x(n) + eta sum_m A x(n - tau(n, m)) from x0 and check the
/// projected energy V(n) = ||P x(n)||^2 against the rough growth estimate,
/// where P projects onto the top eigenspace of A.
pub fn rough_growth(
    a_matrix: &SymMatrix,
    eta: f64,
    schedule: &DelaySchedule,
    x0: &[f64],
    horizon: usize,
) -> Result<RoughGrowthReport, TdsError> {
    if horizon > schedule.steps() {
        return Err(TdsError::HorizonTooLong(horizon, schedule.steps()));
    }
    let dim = a_matrix.dim();
    assert_eq!(x0.len(), dim);
    let (eigs, vecs) = a_matrix.jacobi_eigen();
    let gamma = *eigs.last().unwrap();
    let top: Vec<&Vec<f64>> = eigs
        .iter()
        .zip(&vecs)
        .filter(|(e, _)| (gamma - **e).abs() <= 1e-9 * gamma.abs().max(1.0))
        .map(|(_, v)| v)
        .collect();
    let project = |x: &[f64]| -> f64 {
        top.iter()
            .map(|v| {
                let c = linalg::dot(v, x);
                c * c
            })
            .sum()
    };
    if project(x0) == 0.0 {
        return Err(TdsError::DegenerateStart);
    }

    let m = schedule.batch();
    let t_bound = schedule.bound();
    let a = m as f64 * eta * gamma;
    let rough_rate = a - a.powi(3) * (t_bound as f64) * (t_bound as f64);
    let precondition_met = rough_rate > 0.0;

    let mut iterates: Vec<Vec<f64>> = Vec::with_capacity(horizon + 1);
    iterates.push(x0.to_vec());
    for n in 0..horizon {
        let mut next = iterates[n].clone();
        for i in 0..m {
            let src = n - schedule.tau(n, i);
            let av = a_matrix.matvec(&iterates[src]);
            linalg::axpy(eta, &av, &mut next);
        }
        iterates.push(next);
    }
    let energies: Vec<f64> = iterates.iter().map(|x| project(x)).collect();

    let mut growth_violations = Vec::new();
    let mut monotonicity_violations = Vec::new();
    let tol = 1e-12;
    for n in 0..horizon {
        let ratio = energies[n + 1] / energies[n];
        if n <= t_bound {
            if ratio < 1.0 - tol {
                monotonicity_violations.push((n, ratio));
            }
        } else if precondition_met && ratio < (1.0 + rough_rate) * (1.0 - tol) {
            growth_violations.push((n, ratio));
        }
    }

    Ok(RoughGrowthReport {
        rate_scale: a,
        rough_rate,
        precondition_met,
        growth_violations,
        monotonicity_violations,
        horizon,
    })
}

/// Matrix fundamental solution table f(t0, t, H) for the recursion
/// x(t) = x(t-1) + eta sum_m H x(t - 1 - tau(t-1, m)).
#[derive(Clone, Debug)]
pub struct MatrixFundamentalSolution {
    pub eta: f64,
    pub horizon: usize,
    pub batch: usize,
    pub dim: usize,
    /// Fingerprint of the schedule the table was built on.
    pub schedule: DelaySchedule,
    rows: Vec<Vec<SymMatrix>>,
}

impl MatrixFundamentalSolution {
    pub fn compute(
        h: &SymMatrix,
        eta: f64,
        schedule: &DelaySchedule,
        horizon: usize,
    ) -> Result<Self, TdsError> {
        if horizon > schedule.steps() {
            return Err(TdsError::HorizonTooLong(horizon, schedule.steps()));
        }
        let dim = h.dim();
        if dim > crate::oracles::DENSE_EIG_LIMIT {
            return Err(TdsError::DimensionTooLarge(crate::oracles::DENSE_EIG_LIMIT));
        }
        let batch = schedule.batch();
        let mut rows: Vec<Vec<SymMatrix>> = Vec::with_capacity(horizon + 1);
        for t0 in 0..=horizon {
            let mut row = Vec::with_capacity(horizon - t0 + 1);
            row.push(SymMatrix::identity(dim));
            for t in (t0 + 1)..=horizon {
                let mut feedback = SymMatrix::zeros(dim);
                for m in 0..batch {
                    let src = (t - 1) - schedule.tau(t - 1, m);
                    if src >= t0 {
                        feedback = feedback.add_scaled(&row[src - t0], 1.0);
                    }
                }
                let step = h.mul(&feedback);
                row.push(row[t - 1 - t0].add_scaled(&step, eta));
            }
            rows.push(row);
        }
        Ok(MatrixFundamentalSolution {
            eta,
            horizon,
            batch,
            dim,
            schedule: schedule.clone(),
            rows,
        })
    }

    /// f(t0, t, H); zero matrix for t < t0.
    pub fn value(&self, t0: usize, t: usize) -> SymMatrix {
        if t < t0 {
            SymMatrix::zeros(self.dim)
        } else {
            self.rows[t0][t - t0].clone()
        }
    }

    /// Superposition: x(t) = f(0,t) x0 + sum_{j=1..t} f(j,t) w(j), where
    /// `forcing[j-1]` is the forcing entering at index j.
    pub fn superpose(&self, x0: &[f64], forcing: &[Vec<f64>], t: usize) -> Vec<f64> {
        let mut x = self.rows[0][t].matvec(x0);
        for j in 1..=t {
            if j > forcing.len() {
                break;
            }
            let contrib = self.value(j, t).matvec(&forcing[j - 1]);
            linalg::axpy(1.0, &contrib, &mut x);
        }
        x
    }
}

/// Direct solve of the forced recursion
/// x(t) = x(t-1) + eta sum_m H x(t-1-tau(t-1,m)) + w(t); `forcing[t-1]` is
/// w(t). The independent oracle for `superpose`.
pub fn solve_forced(
    h: &SymMatrix,
    eta: f64,
    schedule: &DelaySchedule,
    x0: &[f64],
    forcing: &[Vec<f64>],
    horizon: usize,
) -> Result<Vec<Vec<f64>>, TdsError> {
    if horizon > schedule.steps() {
        return Err(TdsError::HorizonTooLong(horizon, schedule.steps()));
    }
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(horizon + 1);
    xs.push(x0.to_vec());
    for t in 1..=horizon {
        let mut next = xs[t - 1].clone();
        for m in 0..schedule.batch() {
            let src = (t - 1) - schedule.tau(t - 1, m);
            let hv = h.matvec(&xs[src]);
            linalg::axpy(eta, &hv, &mut next);
        }
        if t - 1 < forcing.len() {
            linalg::axpy(1.0, &forcing[t - 1], &mut next);
        }
        xs.push(next);
    }
    Ok(xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::{generate, DelayModel};
    use crate::streams::{normal_vec, substream, DOMAIN_TRIAL};

    fn schedule(model: &DelayModel, steps: usize, batch: usize, bound: usize) -> DelaySchedule {
        generate(model, steps, batch, bound, 7).unwrap()
    }

    #[test]
    fn zero_delay_is_geometric() {
        let s = schedule(&DelayModel::Constant { value: 0 }, 30, 2, 0);
        let fsol = FundamentalSolution::compute(0.7, 0.1, &s, 30).unwrap();
        let rate: f64 = 1.0 + 2.0 * 0.1 * 0.7;
        for t0 in [0usize, 3, 11] {
            for t in t0..=30 {
                let expect = rate.powi((t - t0) as i32);
                let got = fsol.value(t0, t);
                assert!((got - expect).abs() <= 1e-12 * expect);
            }
        }
    }

    #[test]
    fn impulse_value_is_one() {
        let s = schedule(&DelayModel::AdversarialMax, 10, 1, 3);
        let fsol = FundamentalSolution::compute(1.0, 0.1, &s, 10).unwrap();
        for t0 in 0..=10 {
            assert_eq!(fsol.value(t0, t0), 1.0);
        }
        assert_eq!(fsol.value(5, 4), 0.0);
    }

    #[test]
    fn constant_delay_row_matches_hand_unroll() {
        // M = 1, eta*gamma = 0.1, constant engine delay 1 (shifted delay 2):
        // f(t) = f(t-1) + 0.1 f(t-2), with the first step clipped to delay 0.
        let s = schedule(&DelayModel::Constant { value: 1 }, 6, 1, 1);
        let row = fundamental_solution_row(1.0, 0.1, &s, 0, 6).unwrap();
        let mut expect = vec![1.0f64];
        expect.push(1.0 + 0.1 * 1.0); // t=1 references t=0 (clipped)
        for t in 2..=6 {
            let v = expect[t - 1] + 0.1 * expect[t - 2];
            expect.push(v);
        }
        for (got, want) in row.iter().zip(&expect) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn growth_certificate_zero_delay() {
        let s = schedule(&DelayModel::Constant { value: 0 }, 40, 1, 0);
        let fsol = FundamentalSolution::compute(1.0, 0.1, &s, 40).unwrap();
        // actual ratio 1 + M eta gamma, required 1 + M eta gamma e^{-M eta gamma}
        assert!(check_growth(&fsol).is_empty());
    }

    #[test]
    fn growth_and_properties_on_random_schedules() {
        let mut rng = substream(3, DOMAIN_TRIAL, 0, 0);
        for trial in 0..40 {
            use rand::Rng;
            let bound = rng.gen_range(0..=5usize);
            let batch = rng.gen_range(1..=2usize);
            let gamma = if trial % 2 == 0 { 0.1 } else { 1.0 };
            let s = generate(&DelayModel::Uniform, 60, batch, bound, trial as u64).unwrap();
            let fsol = FundamentalSolution::compute(gamma, 0.1, &s, 60).unwrap();
            assert!(check_growth(&fsol).is_empty(), "trial {trial}");
            let rep = check_f_properties(&fsol, 1);
            assert_eq!(rep.total_violations(), 0, "trial {trial}: {rep:?}");
        }
    }

    #[test]
    fn beta_lower_bound_gate_requires_long_horizon() {
        // gamma small: ln2/q is far beyond the horizon, so no (5) instances.
        let s = schedule(&DelayModel::Uniform, 20, 1, 2);
        let fsol = FundamentalSolution::compute(0.1, 0.1, &s, 20).unwrap();
        let rep = check_f_properties(&fsol, 1);
        assert_eq!(rep.beta_lower_bound.0, 0);
        // gamma = 1, eta = 0.3: q ~ 0.12, ln2/q ~ 6; plenty of instances.
        let s = schedule(&DelayModel::Uniform, 40, 1, 2);
        let fsol = FundamentalSolution::compute(1.0, 0.3, &s, 40).unwrap();
        let rep = check_f_properties(&fsol, 1);
        assert!(rep.beta_lower_bound.0 > 0);
        assert_eq!(rep.beta_lower_bound.1, 0);
    }

    #[test]
    fn razumikhin_exact_geometric_passes() {
        // No delay window: p = 1 is admissible and the conclusion is exact.
        let q: f64 = 0.07;
        let values: Vec<f64> = (0..=20).map(|i| (1.0 + q).powi(i)).collect();
        let trace = LyapunovTrace::new(0, q, 1.0, 1.0, values).unwrap();
        let cert = razumikhin_verify(&trace);
        assert!(cert.certified, "{cert:?}");

        // With a window the geometric prehistory sits below V(0); the
        // largest admissible fraction is p = (1+q)^{-T}.
        let t_big = 3usize;
        let values: Vec<f64> = (0..=20).map(|i| (1.0 + q).powi(i - t_big as i32)).collect();
        let p = (1.0 + q).powi(-(t_big as i32));
        let trace = LyapunovTrace::new(t_big, q, 1.0, p, values).unwrap();
        let cert = razumikhin_verify(&trace);
        assert!(cert.certified, "{cert:?}");
    }

    #[test]
    fn razumikhin_reports_violation_index() {
        let q: f64 = 0.05;
        let t_big = 2usize;
        let mut values: Vec<f64> = (0..=15).map(|i| (1.0 + q).powi(i - t_big as i32)).collect();
        values[10] = values[9] * 0.2; // breaks (a) at time 10 - T - 1 = 7
        let trace = LyapunovTrace::new(t_big, q, 1.0, 1.0, values).unwrap();
        let cert = razumikhin_verify(&trace);
        assert!(!cert.bounded_difference_ok);
        assert_eq!(cert.first_bounded_difference_violation, Some(7));
        assert!(!cert.certified);
    }

    #[test]
    fn razumikhin_rejects_nonpositive_trace() {
        let err = LyapunovTrace::new(1, 0.1, 1.0, 1.0, vec![1.0, 0.0, 1.0]);
        assert!(matches!(err, Err(TdsError::NonPositiveTrace(1))));
    }

    #[test]
    fn fundamental_run_satisfies_razumikhin_certificate() {
        // V from |f(0, t)| of a delayed run, q from the growth certificate.
        let s = schedule(&DelayModel::Uniform, 50, 1, 3);
        let fsol = FundamentalSolution::compute(1.0, 0.2, &s, 50).unwrap();
        // start the certificate at time T so the initial window is positive
        let t_big = 3usize;
        let values: Vec<f64> = (0..=50).map(|t| fsol.value(0, t)).collect();
        let p = (0..=t_big)
            .map(|i| values[i] / values[t_big])
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        let trace = LyapunovTrace::new(t_big, fsol.growth_rate, 1.0, p, values).unwrap();
        let cert = razumikhin_verify(&trace);
        assert!(cert.certified, "{cert:?}");
    }

    #[test]
    fn rough_growth_hand_numbers() {
        // a = 0.1, T = 2: q~ = 0.1 - 0.004 = 0.096.
        let s = schedule(&DelayModel::Uniform, 40, 1, 2);
        let a_matrix = SymMatrix::diagonal(&[1.0, -0.5]);
        let rep = rough_growth(&a_matrix, 0.1, &s, &[1.0, 0.3], 40).unwrap();
        assert!((rep.rate_scale - 0.1).abs() < 1e-15);
        assert!((rep.rough_rate - 0.096).abs() < 1e-15);
        assert!(rep.precondition_met);
        assert!(rep.growth_violations.is_empty());
        assert!(rep.monotonicity_violations.is_empty());
    }

    #[test]
    fn rough_growth_out_of_regime_but_razumikhin_still_certifies() {
        // a = 0.5, T = 2: q~ = 0.5 - 0.5 = 0 fails the rough precondition,
        // while the Razumikhin growth rate q = a e^{-(T+1)a} stays positive.
        let s = schedule(&DelayModel::AdversarialMax, 60, 1, 2);
        let a_matrix = SymMatrix::diagonal(&[1.0]);
        let rep = rough_growth(&a_matrix, 0.5, &s, &[1.0], 60).unwrap();
        assert!(!rep.precondition_met);
        let fsol = FundamentalSolution::compute(1.0, 0.5, &s, 60).unwrap();
        assert!(fsol.growth_rate > 0.0);
        assert!(check_growth(&fsol).is_empty());
    }

    #[test]
    fn superposition_matches_direct_solve() {
        let s = generate(&DelayModel::Uniform, 40, 2, 4, 11).unwrap();
        let h = SymMatrix::from_rows(2, &[0.8, 0.1, 0.1, -0.6]);
        let msol = MatrixFundamentalSolution::compute(&h, 0.07, &s, 40).unwrap();
        let mut rng = substream(9, DOMAIN_TRIAL, 1, 0);
        let x0 = normal_vec(&mut rng, 2, 1.0);
        let forcing: Vec<Vec<f64>> = (0..40).map(|_| normal_vec(&mut rng, 2, 0.3)).collect();
        let direct = solve_forced(&h, 0.07, &s, &x0, &forcing, 40).unwrap();
        for (t, expected) in direct.iter().enumerate() {
            let sup = msol.superpose(&x0, &forcing, t);
            let err = linalg::norm(&linalg::sub(&sup, expected));
            let scale = linalg::norm(expected).max(1e-12);
            assert!(err / scale < 1e-12, "t={t}: rel err {}", err / scale);
        }
    }
}
