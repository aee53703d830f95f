//! Perturbed asynchronous SGD with consistent read.
//!
//! One step aggregates M stochastic gradients, each evaluated at a single
//! complete stale iterate x_{t - tau(t,i)}, adds the isotropic perturbation
//! sqrt(M) zeta_t with zeta_t ~ N(0, (r^2/d) I), and moves against the sum:
//!
//! ```text
//! x_{t+1} = x_t - eta * (sum_i g(x_{t - tau(t,i)}, theta_{t,i}) + sqrt(M) zeta_t)
//! ```
//!
//! The simulated mode is a deterministic function of (config, seed). The
//! live mode runs W worker threads against a master that serializes updates;
//! workers read atomic snapshots of the whole parameter vector (consistent
//! read) and may contribute several of the M gradients of one step. Both
//! modes record enough to replay the arithmetic bit-exactly.
//!
//! Stream discipline (shared with reference implementations): the
//! perturbation of step t comes from substream (seed, ZETA, t, 0); gradient
//! slot (t, i) draws its sample index and noise from (seed, GRAD, t, i). In
//! racy live mode workers draw from (seed, LIVE, worker, counter) instead,
//! which is recorded per gradient.

use crate::delay::{self, DelaySchedule};
use crate::linalg;
use crate::oracles::StochasticOracle;
use crate::params::HyperParams;
use crate::streams::{self, DOMAIN_GRAD, DOMAIN_LIVE, DOMAIN_ZETA};
use rand::Rng;
use std::collections::VecDeque;
use std::sync::mpsc;
use std::sync::{Condvar, Mutex};
use thiserror::Error;

/// Abort threshold on the iterate norm.
pub const DIVERGENCE_NORM: f64 = 1.0e8;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("iterate diverged at step {step}")]
    Diverged { step: usize },
    #[error("schedule batch {schedule} does not match configured batch {params}")]
    BatchMismatch { schedule: usize, params: usize },
    #[error("history lookup failed for step {0}")]
    HistoryMiss(usize),
    #[error("measured delay {delay} at step {step} exceeds the hard cap {cap}")]
    DelayCapExceeded {
        step: usize,
        delay: usize,
        cap: usize,
    },
    #[error("forced-synchrony handshake requires exactly one worker")]
    HandshakeNeedsSingleWorker,
    #[error("live workers disappeared before the run finished")]
    WorkersLost,
    #[error(transparent)]
    Schedule(#[from] delay::DelayError),
}

/// Ring of the last T+1 iterates keyed by step index.
pub struct HistoryBuffer {
    capacity: usize,
    entries: VecDeque<(usize, Vec<f64>)>,
}

impl HistoryBuffer {
    pub fn new(max_delay: usize) -> Self {
        HistoryBuffer {
            capacity: max_delay + 1,
            entries: VecDeque::with_capacity(max_delay + 2),
        }
    }

    pub fn push(&mut self, step: usize, x: Vec<f64>) {
        self.entries.push_back((step, x));
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
    }

    pub fn lookup(&self, step: usize) -> Option<&[f64]> {
        self.entries
            .iter()
            .find(|(s, _)| *s == step)
            .map(|(_, x)| x.as_slice())
    }

    pub fn latest(&self) -> &[f64] {
        &self.entries.back().expect("history is never empty").1
    }
}

/// One applied stochastic gradient with its provenance.
#[derive(Clone, Debug)]
pub struct GradRecord {
    /// Step whose iterate the gradient was evaluated at.
    pub source_step: usize,
    /// Substream key that produced theta and the noise.
    pub stream_key: (u64, u64),
    /// Sample index.
    pub theta: u64,
    pub value: Vec<f64>,
}

/// Full record of one run; the substrate for every diagnostic.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// x_0 ... x_K.
    pub iterates: Vec<Vec<f64>>,
    /// zeta_0 ... zeta_{K-1}.
    pub perturbations: Vec<Vec<f64>>,
    /// grads[t] lists the M gradients applied at step t in aggregation order.
    pub grads: Vec<Vec<GradRecord>>,
    pub schedule: DelaySchedule,
    pub params: HyperParams,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq)]
#[error("replay mismatch at step {step}, coordinate {coordinate}")]
pub struct ReplayError {
    pub step: usize,
    pub coordinate: usize,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.iterates.len() - 1
    }

    /// Recompute every iterate from the stored gradients and perturbations
    /// and require bit equality with the stored ones.
    pub fn replay_check(&self) -> Result<(), ReplayError> {
        let eta = self.params.learning_rate;
        let batch = self.params.base.batch;
        for t in 0..self.steps() {
            let acc = accumulate(&self.grads[t]);
            let next = apply_update(&self.iterates[t], &acc, &self.perturbations[t], eta, batch);
            for (coordinate, (a, b)) in next.iter().zip(&self.iterates[t + 1]).enumerate() {
                if a.to_bits() != b.to_bits() {
                    return Err(ReplayError {
                        step: t,
                        coordinate,
                    });
                }
            }
        }
        Ok(())
    }

    /// Combined noise sum_m zeta_{t,m} = sum_i (g_i - grad f(x_{t-tau})) +
    /// sqrt(M) zeta_t for every step, using exact gradients of `objective`.
    pub fn combined_noise(&self, objective: &dyn crate::oracles::Objective) -> Vec<Vec<f64>> {
        let m_sqrt = (self.params.base.batch as f64).sqrt();
        (0..self.steps())
            .map(|t| {
                let mut acc = linalg::scaled(&self.perturbations[t], m_sqrt);
                for rec in &self.grads[t] {
                    let exact = objective.grad(&self.iterates[rec.source_step]);
                    for ((a, g), e) in acc.iter_mut().zip(&rec.value).zip(&exact) {
                        *a += g - e;
                    }
                }
                acc
            })
            .collect()
    }
}

/// Pinned aggregation order: gradients are summed in slot order.
pub fn accumulate(grads: &[GradRecord]) -> Vec<f64> {
    let dim = grads[0].value.len();
    let mut acc = vec![0.0; dim];
    for g in grads {
        linalg::axpy(1.0, &g.value, &mut acc);
    }
    acc
}

/// Pinned update arithmetic: x - eta * (acc + sqrt(M) * zeta), evaluated
/// componentwise in exactly this association.
pub fn apply_update(x: &[f64], grad_acc: &[f64], zeta: &[f64], eta: f64, batch: usize) -> Vec<f64> {
    let m_sqrt = (batch as f64).sqrt();
    x.iter()
        .zip(grad_acc)
        .zip(zeta)
        .map(|((xi, gi), zi)| xi - eta * (gi + m_sqrt * zi))
        .collect()
}

fn check_finite(x: &[f64], step: usize) -> Result<(), EngineError> {
    if x.iter().all(|v| v.is_finite()) && linalg::norm(x) <= DIVERGENCE_NORM {
        Ok(())
    } else {
        Err(EngineError::Diverged { step })
    }
}

pub struct StepOutcome {
    pub next: Vec<f64>,
    pub zeta: Vec<f64>,
    pub grads: Vec<GradRecord>,
}

/// One simulated step at time t with the given per-slot delays.
pub fn step(
    history: &HistoryBuffer,
    t: usize,
    params: &HyperParams,
    oracle: &StochasticOracle,
    taus: &[usize],
    seed: u64,
) -> Result<StepOutcome, EngineError> {
    let x_t = history.latest();
    let mut grads = Vec::with_capacity(taus.len());
    for (i, tau) in taus.iter().enumerate() {
        let source_step = t - tau;
        let stale = history
            .lookup(source_step)
            .ok_or(EngineError::HistoryMiss(source_step))?;
        let mut rng = streams::substream(seed, DOMAIN_GRAD, t as u64, i as u64);
        let theta: u64 = rng.gen();
        let value = oracle.sample(stale, theta, &mut rng);
        grads.push(GradRecord {
            source_step,
            stream_key: (t as u64, i as u64),
            theta,
            value,
        });
    }
    let mut zeta_rng = streams::substream(seed, DOMAIN_ZETA, t as u64, 0);
    let scale = params.base.perturbation_radius / (params.base.dim as f64).sqrt();
    let zeta = streams::normal_vec(&mut zeta_rng, params.base.dim, scale);
    let acc = accumulate(&grads);
    let next = apply_update(x_t, &acc, &zeta, params.learning_rate, params.base.batch);
    check_finite(&next, t)?;
    Ok(StepOutcome { next, zeta, grads })
}

pub struct RunConfig<'a> {
    pub params: &'a HyperParams,
    pub oracle: &'a StochasticOracle<'a>,
    pub schedule: &'a DelaySchedule,
    pub x0: Vec<f64>,
    pub seed: u64,
}

/// Simulated run over the whole schedule. Deterministic in (config, seed).
pub fn run(config: &RunConfig) -> Result<Trajectory, EngineError> {
    let params = config.params;
    if config.schedule.batch() != params.base.batch {
        return Err(EngineError::BatchMismatch {
            schedule: config.schedule.batch(),
            params: params.base.batch,
        });
    }
    let steps = config.schedule.steps();
    let mut history = HistoryBuffer::new(config.schedule.bound());
    history.push(0, config.x0.clone());
    let mut iterates = Vec::with_capacity(steps + 1);
    iterates.push(config.x0.clone());
    let mut perturbations = Vec::with_capacity(steps);
    let mut grads = Vec::with_capacity(steps);
    let mut taus = vec![0usize; params.base.batch];
    for t in 0..steps {
        for (i, tau) in taus.iter_mut().enumerate() {
            *tau = config.schedule.tau(t, i);
        }
        let out = step(&history, t, params, config.oracle, &taus, config.seed)?;
        history.push(t + 1, out.next.clone());
        iterates.push(out.next);
        perturbations.push(out.zeta);
        grads.push(out.grads);
    }
    Ok(Trajectory {
        iterates,
        perturbations,
        grads,
        schedule: config.schedule.clone(),
        params: params.clone(),
        seed: config.seed,
    })
}

pub struct LiveConfig<'a> {
    pub params: &'a HyperParams,
    pub oracle: &'a StochasticOracle<'a>,
    pub x0: Vec<f64>,
    pub seed: u64,
    pub steps: usize,
    pub workers: usize,
    /// Lock-step mode: the single worker waits for each apply before taking
    /// the next snapshot, forcing all delays to zero.
    pub sync_handshake: bool,
    /// Hard cap on any measured delay; exceeding it aborts the run.
    pub delay_cap: usize,
}

#[derive(Debug)]
pub struct LiveRunResult {
    pub trajectory: Trajectory,
    pub measured: DelaySchedule,
    pub max_observed_delay: usize,
    pub within_configured_bound: bool,
}

struct SnapshotCell {
    state: Mutex<(usize, Vec<f64>)>,
    applied: Condvar,
}

/// Live asynchronous run: master in the calling thread, W workers pulling
/// atomic snapshots and pushing gradients over a queue.
pub fn run_live(config: &LiveConfig) -> Result<LiveRunResult, EngineError> {
    if config.workers == 0 {
        return Err(EngineError::WorkersLost);
    }
    if config.sync_handshake && config.workers != 1 {
        return Err(EngineError::HandshakeNeedsSingleWorker);
    }
    let params = config.params;
    let batch = params.base.batch;
    let steps = config.steps;
    let cell = SnapshotCell {
        state: Mutex::new((0usize, config.x0.clone())),
        applied: Condvar::new(),
    };
    // Rendezvous queue: a push hands the gradient to the master directly, so
    // each worker has at most one gradient in flight and staleness stays
    // proportional to the worker count as in a real parameter server.
    let (tx, rx) = mpsc::sync_channel::<(usize, u64, (u64, u64), Vec<f64>)>(0);

    let mut iterates = Vec::with_capacity(steps + 1);
    iterates.push(config.x0.clone());
    let mut perturbations = Vec::with_capacity(steps);
    let mut grads: Vec<Vec<GradRecord>> = Vec::with_capacity(steps);
    let mut events: Vec<(usize, usize)> = Vec::with_capacity(steps * batch);
    let mut run_error = None;

    std::thread::scope(|scope| {
        for w in 0..config.workers {
            let tx = tx.clone();
            let cell = &cell;
            let oracle = config.oracle;
            let seed = config.seed;
            let handshake = config.sync_handshake;
            scope.spawn(move || {
                let mut local_counter = 0u64;
                let mut per_step: (usize, u64) = (usize::MAX, 0);
                loop {
                    let (snap_step, snap_x) = {
                        let guard = cell.state.lock().unwrap();
                        (guard.0, guard.1.clone())
                    };
                    if snap_step >= steps {
                        break;
                    }
                    let key = if handshake {
                        // matches the simulated (t, i) discipline
                        if per_step.0 == snap_step {
                            per_step.1 += 1;
                        } else {
                            per_step = (snap_step, 0);
                        }
                        (snap_step as u64, per_step.1)
                    } else {
                        local_counter += 1;
                        (w as u64, local_counter - 1)
                    };
                    let domain = if handshake { DOMAIN_GRAD } else { DOMAIN_LIVE };
                    let mut rng = streams::substream(seed, domain, key.0, key.1);
                    let theta: u64 = rng.gen();
                    let g = oracle.sample(&snap_x, theta, &mut rng);
                    if tx.send((snap_step, theta, key, g)).is_err() {
                        break;
                    }
                    if handshake {
                        let mut guard = cell.state.lock().unwrap();
                        while guard.0 <= snap_step {
                            guard = cell.applied.wait(guard).unwrap();
                        }
                    }
                }
            });
        }
        drop(tx);

        'master: for t in 0..steps {
            let mut step_grads = Vec::with_capacity(batch);
            for _ in 0..batch {
                let (snap_step, theta, key, value) = match rx.recv() {
                    Ok(msg) => msg,
                    Err(_) => {
                        run_error = Some(EngineError::WorkersLost);
                        break 'master;
                    }
                };
                let delay_t = t - snap_step;
                if delay_t > config.delay_cap {
                    run_error = Some(EngineError::DelayCapExceeded {
                        step: t,
                        delay: delay_t,
                        cap: config.delay_cap,
                    });
                    break 'master;
                }
                events.push((t, snap_step));
                step_grads.push(GradRecord {
                    source_step: snap_step,
                    stream_key: key,
                    theta,
                    value,
                });
            }
            let mut zeta_rng = streams::substream(config.seed, DOMAIN_ZETA, t as u64, 0);
            let scale = params.base.perturbation_radius / (params.base.dim as f64).sqrt();
            let zeta = streams::normal_vec(&mut zeta_rng, params.base.dim, scale);
            let acc = accumulate(&step_grads);
            let next = apply_update(
                iterates.last().unwrap(),
                &acc,
                &zeta,
                params.learning_rate,
                batch,
            );
            if let Err(e) = check_finite(&next, t) {
                run_error = Some(e);
                break 'master;
            }
            perturbations.push(zeta);
            grads.push(step_grads);
            iterates.push(next.clone());
            let mut guard = cell.state.lock().unwrap();
            *guard = (t + 1, next);
            cell.applied.notify_all();
        }
        // release the workers regardless of how the loop ended: advance the
        // snapshot past the end and unblock any pending push
        let mut guard = cell.state.lock().unwrap();
        guard.0 = steps;
        cell.applied.notify_all();
        drop(guard);
        drop(rx);
    });

    if let Some(e) = run_error {
        return Err(e);
    }
    let traced = delay::from_live_trace(&events, batch, params.base.max_delay)?;
    let trajectory = Trajectory {
        iterates,
        perturbations,
        grads,
        schedule: traced.schedule.clone(),
        params: params.clone(),
        seed: config.seed,
    };
    Ok(LiveRunResult {
        trajectory,
        measured: traced.schedule,
        max_observed_delay: traced.max_observed,
        within_configured_bound: traced.within_bound,
    })
}
