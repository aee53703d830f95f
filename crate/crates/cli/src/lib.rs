//! Configuration, orchestration, and experiment sweeps over the core
//! laboratory. Everything is flat files: JSON summaries on stdout and under
//! the output directory, CSV tables for anything meant for external
//! plotting.

use apsgd_core::coupling::{self, EscapeConfig};
use apsgd_core::delay::{self, DelayModel};
use apsgd_core::diagnostics::{self, MonteCarloConfig};
use apsgd_core::engine::{self, LiveConfig, RunConfig};
use apsgd_core::linalg;
use apsgd_core::oracles::{Objective, ProblemConfig, StochasticOracle};
use apsgd_core::params::{self, BaseConfig, HyperParams};
use apsgd_core::tds;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

fn default_trials() -> usize {
    100
}
fn default_iota() -> f64 {
    4.0
}
fn default_workers() -> usize {
    1
}
fn default_op() -> String {
    "run".to_string()
}
fn default_model() -> DelayModel {
    DelayModel::Uniform
}

/// One experiment: problem, schedule model, parameters, and trial counts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub base: BaseConfig,
    pub problem: ProblemConfig,
    #[serde(default = "default_model")]
    pub schedule: DelayModel,
    /// Explicit learning rate; otherwise derived from the base config.
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Saddle anchor for tl2/escape (defaults to x0, then to the origin).
    #[serde(default)]
    pub anchor: Option<Vec<f64>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_iota")]
    pub iota: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub live: bool,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub sync_handshake: bool,
    #[serde(default)]
    pub delay_cap: Option<usize>,
    /// Escape/tds horizon override.
    #[serde(default)]
    pub horizon: Option<usize>,
    /// Escape displacement threshold override.
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Operation a sweep runs per cell.
    #[serde(default = "default_op")]
    pub op: String,
}

/// Failures are split by exit code: rejected configs and violated
/// preconditions exit 2, everything else 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Rejected(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Internal(_) => 1,
            CliError::Rejected(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Rejected(m) | CliError::Internal(m) => m,
        }
    }
}

fn rejected<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Rejected(e.to_string())
}

fn internal<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Internal(e.to_string())
}

fn map_diag(e: diagnostics::DiagError) -> CliError {
    use diagnostics::DiagError::*;
    match e {
        ZeroDelayBlocks
        | NotThirdKind(_)
        | DescentPrecondition
        | NotStrictSaddle { .. }
        | PreWindowEnergy { .. }
        | InfeasibleParams(_)
        | WindowOutOfRange { .. } => rejected(e),
        other => internal(other),
    }
}

fn map_coupling(e: coupling::CouplingError) -> CliError {
    use coupling::CouplingError::*;
    match e {
        NotUnstable(_) | NotStrictEnough { .. } | InfeasibleParams(_) | ScheduleMismatch => {
            rejected(e)
        }
        other => internal(other),
    }
}

/// Parsed command line.
#[derive(Clone, Debug, Default)]
pub struct CliOptions {
    pub config_path: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub live: bool,
    pub workers: Option<usize>,
    pub feasible_search: bool,
    pub axis: Option<String>,
    pub values: Option<Vec<f64>>,
}

pub const USAGE: &str =
    "usage: apsgd <params|run|classify|tl2|escape|tds|sweep> --config <file.json> \
[--seed N] [--out DIR] [--trials N] [--live] [--workers W] [--feasible-search] \
[--axis FIELD --values v1,v2,...]";

pub fn parse_args(args: &[String]) -> Result<(String, CliOptions), CliError> {
    if args.is_empty() {
        return Err(CliError::Usage(USAGE.to_string()));
    }
    let command = args[0].clone();
    let mut opts = CliOptions::default();
    let mut it = args[1..].iter();
    while let Some(flag) = it.next() {
        let mut grab = || {
            it.next()
                .cloned()
                .ok_or_else(|| CliError::Usage(format!("flag {flag} needs a value")))
        };
        match flag.as_str() {
            "--config" => opts.config_path = Some(PathBuf::from(grab()?)),
            "--out" => opts.out_dir = Some(PathBuf::from(grab()?)),
            "--seed" => {
                opts.seed = Some(
                    grab()?
                        .parse()
                        .map_err(|e| CliError::Usage(format!("--seed: {e}")))?,
                )
            }
            "--trials" => {
                opts.trials = Some(
                    grab()?
                        .parse()
                        .map_err(|e| CliError::Usage(format!("--trials: {e}")))?,
                )
            }
            "--workers" => {
                opts.workers = Some(
                    grab()?
                        .parse()
                        .map_err(|e| CliError::Usage(format!("--workers: {e}")))?,
                )
            }
            "--live" => opts.live = true,
            "--feasible-search" => opts.feasible_search = true,
            "--axis" => opts.axis = Some(grab()?),
            "--values" => {
                let raw = grab()?;
                let parsed: Result<Vec<f64>, _> =
                    raw.split(',').map(|v| v.trim().parse()).collect();
                opts.values = Some(parsed.map_err(|e| CliError::Usage(format!("--values: {e}")))?);
            }
            other => return Err(CliError::Usage(format!("unknown flag {other}\n{USAGE}"))),
        }
    }
    Ok((command, opts))
}

pub fn load_config(opts: &CliOptions) -> Result<ExperimentConfig, CliError> {
    let path = opts
        .config_path
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("--config is required\n{USAGE}")))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config: {e}")))?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(trials) = opts.trials {
        config.trials = trials;
    }
    if let Some(workers) = opts.workers {
        config.workers = workers;
    }
    if opts.live {
        config.live = true;
    }
    Ok(config)
}

/// FNV-1a content hash of the serialized config; stable across runs.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(internal)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(internal)?;
    fs::rename(&tmp, path).map_err(internal)?;
    Ok(())
}

fn hyper_params(config: &ExperimentConfig) -> Result<HyperParams, CliError> {
    match config.learning_rate {
        Some(eta) => HyperParams::explicit(config.base.clone(), eta).map_err(rejected),
        None => params::derive_params(&config.base).map_err(rejected),
    }
}

fn start_point(config: &ExperimentConfig) -> Vec<f64> {
    config
        .x0
        .clone()
        .unwrap_or_else(|| vec![0.0; config.base.dim])
}

fn anchor_point(config: &ExperimentConfig) -> Vec<f64> {
    config
        .anchor
        .clone()
        .or_else(|| config.x0.clone())
        .unwrap_or_else(|| vec![0.0; config.base.dim])
}

/// Result of one operation: a JSON summary plus any files written.
pub struct OpOutput {
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

pub fn cmd_params(config: &ExperimentConfig, feasible_search: bool) -> Result<OpOutput, CliError> {
    if feasible_search {
        let found = params::feasible_search(&config.base).map_err(rejected)?;
        return Ok(OpOutput {
            summary: json!({
                "hyper_params": found.params,
                "conditions": found.report,
                "lr_margin": found.lr_margin,
                "horizon_margin": found.horizon_margin,
                "displacement_margin": found.displacement_margin,
            }),
            files: Vec::new(),
        });
    }
    let h = hyper_params(config)?;
    let report = params::check_conditions(&h);
    let (first_order, second_order) = params::worker_bounds(config.base.steps, config.base.batch);
    Ok(OpOutput {
        summary: json!({
            "hyper_params": h,
            "conditions": report,
            "worker_bounds": {
                "first_order": first_order,
                "second_order": second_order,
            },
        }),
        files: Vec::new(),
    })
}

fn trajectory_csv(traj: &engine::Trajectory, objective: &dyn Objective) -> String {
    let mut out = String::from("t");
    for j in 0..traj.iterates[0].len() {
        let _ = write!(out, ",x{j}");
    }
    out.push_str(",grad_norm\n");
    for (t, x) in traj.iterates.iter().enumerate() {
        let _ = write!(out, "{t}");
        for v in x {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{}", linalg::norm(&objective.grad(x)));
    }
    out
}

pub fn cmd_run(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<OpOutput, CliError> {
    let h = hyper_params(config)?;
    let objective = config.problem.build();
    let oracle = StochasticOracle::new(objective.as_ref(), config.base.noise_scale);
    let x0 = start_point(config);
    let mut files = Vec::new();

    let (traj, live_info) = if config.live {
        let live = engine::run_live(&LiveConfig {
            params: &h,
            oracle: &oracle,
            x0,
            seed: config.seed,
            steps: config.base.steps,
            workers: config.workers,
            sync_handshake: config.sync_handshake,
            delay_cap: config.delay_cap.unwrap_or(config.base.steps),
        })
        .map_err(internal)?;
        let info = json!({
            "max_observed_delay": live.max_observed_delay,
            "within_configured_bound": live.within_configured_bound,
        });
        (live.trajectory, Some(info))
    } else {
        let schedule = delay::generate(
            &config.schedule,
            config.base.steps,
            config.base.batch,
            config.base.max_delay,
            config.seed,
        )
        .map_err(rejected)?;
        let traj = engine::run(&RunConfig {
            params: &h,
            oracle: &oracle,
            schedule: &schedule,
            x0,
            seed: config.seed,
        })
        .map_err(internal)?;
        (traj, None)
    };

    let replay_ok = traj.replay_check().is_ok();
    let grad_norms: Vec<f64> = traj
        .iterates
        .iter()
        .map(|x| linalg::norm(&objective.grad(x)))
        .collect();
    let min_grad = grad_norms.iter().cloned().fold(f64::INFINITY, f64::min);
    if let Some(dir) = out_dir {
        let traj_path = dir.join("trajectory.csv");
        write_atomic(&traj_path, &trajectory_csv(&traj, objective.as_ref()))?;
        files.push(traj_path);
        let mut sched_csv = Vec::new();
        traj.schedule.write_csv(&mut sched_csv).map_err(internal)?;
        let sched_path = dir.join("schedule.csv");
        write_atomic(&sched_path, &String::from_utf8(sched_csv).unwrap())?;
        files.push(sched_path);
    }
    let mut summary = json!({
        "steps": traj.steps(),
        "final_iterate": traj.iterates.last().unwrap(),
        "final_grad_norm": grad_norms.last().unwrap(),
        "min_grad_norm": min_grad,
        "replay_ok": replay_ok,
        "seed": config.seed,
    });
    if let Some(info) = live_info {
        summary["live"] = info;
    }
    Ok(OpOutput { summary, files })
}

pub fn cmd_classify(
    config: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<OpOutput, CliError> {
    let h = hyper_params(config)?;
    let objective = config.problem.build();
    let oracle = StochasticOracle::new(objective.as_ref(), config.base.noise_scale);
    let schedule = delay::generate(
        &config.schedule,
        config.base.steps,
        config.base.batch,
        config.base.max_delay,
        config.seed,
    )
    .map_err(rejected)?;
    let traj = engine::run(&RunConfig {
        params: &h,
        oracle: &oracle,
        schedule: &schedule,
        x0: start_point(config),
        seed: config.seed,
    })
    .map_err(internal)?;
    let reports = diagnostics::classify_blocks(&traj, &h, objective.as_ref()).map_err(map_diag)?;
    let tally = diagnostics::count_kinds(&reports, traj.steps(), h.base.max_delay);

    let mut certificates = Vec::new();
    for block in reports
        .iter()
        .filter(|b| b.kind == diagnostics::BlockKind::Third)
    {
        if let Ok((index, cert)) =
            diagnostics::extract_second_order_point(&traj, &h, objective.as_ref(), block)
        {
            certificates.push(json!({
                "block": block.index,
                "index": index,
                "certificate": cert,
            }));
        }
    }

    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        let mut csv = String::from("k,grad_energy,lambda_min,kind\n");
        for r in &reports {
            let kind = match r.kind {
                diagnostics::BlockKind::First => "first",
                diagnostics::BlockKind::Second => "second",
                diagnostics::BlockKind::Third => "third",
            };
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                r.index, r.grad_energy, r.lambda_min, kind
            );
        }
        let path = dir.join("blocks.csv");
        write_atomic(&path, &csv)?;
        files.push(path);
    }
    Ok(OpOutput {
        summary: json!({
            "blocks": reports.len(),
            "tally": tally,
            "certified_points": certificates,
        }),
        files,
    })
}

pub fn cmd_tl2(config: &ExperimentConfig) -> Result<OpOutput, CliError> {
    let h = hyper_params(config)?;
    let objective = config.problem.build();
    let mc = MonteCarloConfig {
        trials: config.trials,
        iota: config.iota,
        seed: config.seed,
    };
    let outcome = diagnostics::tl2_experiment(
        &h,
        objective.as_ref(),
        &anchor_point(config),
        &config.schedule,
        &mc,
    )
    .map_err(map_diag)?;
    Ok(OpOutput {
        summary: json!({
            "trials": outcome.trials,
            "horizon": outcome.horizon,
            "energy_threshold": outcome.energy_threshold,
            "energy_frequency": outcome.energy_frequency,
            "energy_lcb95": outcome.energy_lcb95,
            "disjunction_frequency": outcome.disjunction_frequency,
        }),
        files: Vec::new(),
    })
}

pub fn cmd_escape(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<OpOutput, CliError> {
    let h = hyper_params(config)?;
    let objective = config.problem.build();
    let anchor = anchor_point(config);
    let stats = coupling::escape_stats(&EscapeConfig {
        params: &h,
        objective: objective.as_ref(),
        anchor: &anchor,
        model: &config.schedule,
        trials: config.trials,
        seed: config.seed,
        threshold: config.threshold,
        horizon: config.horizon,
    })
    .map_err(map_coupling)?;
    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        let mut csv = String::from("trial,first_exit,max_displacement\n");
        for (i, (exit, disp)) in stats
            .first_exit
            .iter()
            .zip(&stats.max_displacements)
            .enumerate()
        {
            let _ = writeln!(csv, "{i},{exit},{disp}");
        }
        let path = dir.join("escape_trials.csv");
        write_atomic(&path, &csv)?;
        files.push(path);
    }
    Ok(OpOutput {
        summary: json!({
            "trials": stats.trials,
            "successes": stats.successes,
            "frequency": stats.frequency,
            "lcb95": stats.lcb95,
            "median_first_exit": stats.median_first_exit,
            "threshold": stats.threshold,
            "horizon": stats.horizon,
        }),
        files,
    })
}

pub fn cmd_tds(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<OpOutput, CliError> {
    let h = hyper_params(config)?;
    let horizon = config.horizon.unwrap_or_else(|| config.base.steps.min(200));
    let schedule = delay::generate(
        &config.schedule,
        horizon,
        config.base.batch,
        config.base.max_delay,
        config.seed,
    )
    .map_err(rejected)?;
    let fsol =
        tds::FundamentalSolution::compute(h.curvature_scale, h.learning_rate, &schedule, horizon)
            .map_err(rejected)?;
    let growth = tds::check_growth(&fsol);
    let properties = tds::check_f_properties(&fsol, if horizon > 120 { 3 } else { 1 });
    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        let mut csv = String::from("t0,t,f\n");
        for t0 in 0..=horizon {
            for t in t0..=horizon {
                let _ = writeln!(csv, "{t0},{t},{}", fsol.value(t0, t));
            }
        }
        let fpath = dir.join("ftable.csv");
        write_atomic(&fpath, &csv)?;
        files.push(fpath);
        let mut beta_csv = String::from("k,beta\n");
        for k in 0..=horizon {
            let _ = writeln!(beta_csv, "{k},{}", fsol.beta(k));
        }
        let bpath = dir.join("beta.csv");
        write_atomic(&bpath, &beta_csv)?;
        files.push(bpath);
    }
    Ok(OpOutput {
        summary: json!({
            "horizon": horizon,
            "growth_rate": fsol.growth_rate,
            "growth_violations": growth.len(),
            "properties": properties,
        }),
        files,
    })
}

/// One sweep cell.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub axis: String,
    pub value: f64,
    pub summary: Value,
    pub files: Vec<String>,
    pub error: Option<String>,
}

fn apply_axis(config: &mut ExperimentConfig, axis: &str, value: f64) -> Result<(), CliError> {
    let as_usize = || value as usize;
    match axis {
        "max_delay" | "T" => config.base.max_delay = as_usize(),
        "batch" | "M" => config.base.batch = as_usize(),
        "steps" | "K" => config.base.steps = as_usize(),
        "dim" | "d" => config.base.dim = as_usize(),
        "target_accuracy" | "epsilon" => config.base.target_accuracy = value,
        "smoothness" | "L" => config.base.smoothness = value,
        "hessian_lipschitz" | "rho" => config.base.hessian_lipschitz = value,
        "noise_scale" | "s" => config.base.noise_scale = value,
        "perturbation_radius" | "r" => config.base.perturbation_radius = value,
        "lr_margin" | "w" => config.base.lr_margin = value,
        "horizon_margin" | "u" => config.base.horizon_margin = value,
        "displacement_margin" | "B" => config.base.displacement_margin = value,
        "seed" => config.seed = value as u64,
        "trials" => config.trials = as_usize(),
        "workers" => config.workers = as_usize(),
        other => return Err(CliError::Rejected(format!("unknown sweep axis `{other}`"))),
    }
    Ok(())
}

fn dispatch_op(
    op: &str,
    config: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<OpOutput, CliError> {
    match op {
        "params" => cmd_params(config, false),
        "run" => cmd_run(config, out_dir),
        "classify" => cmd_classify(config, out_dir),
        "tl2" => cmd_tl2(config),
        "escape" => cmd_escape(config, out_dir),
        "tds" => cmd_tds(config, out_dir),
        other => Err(CliError::Usage(format!("unknown operation `{other}`"))),
    }
}

/// Run `config.op` once per axis value. Cell failures are recorded and the
/// sweep continues; cells get deterministic sub-directories.
pub fn sweep(
    config: &ExperimentConfig,
    axis: &str,
    values: &[f64],
    out_dir: Option<&Path>,
) -> Result<Vec<RunRecord>, CliError> {
    // reject unknown axes up front, before any cell runs
    let mut probe = config.clone();
    apply_axis(&mut probe, axis, values.first().copied().unwrap_or(0.0))?;
    let mut records = Vec::with_capacity(values.len());
    for value in values {
        let mut cell = config.clone();
        apply_axis(&mut cell, axis, *value)?;
        let cell_dir = out_dir.map(|d| d.join(format!("{axis}_{value}")));
        let outcome = dispatch_op(&cell.op, &cell, cell_dir.as_deref());
        let hash = config_hash(&cell);
        match outcome {
            Ok(out) => records.push(RunRecord {
                config_hash: hash,
                axis: axis.to_string(),
                value: *value,
                summary: out.summary,
                files: out.files.iter().map(|p| p.display().to_string()).collect(),
                error: None,
            }),
            Err(e) => records.push(RunRecord {
                config_hash: hash,
                axis: axis.to_string(),
                value: *value,
                summary: Value::Null,
                files: Vec::new(),
                error: Some(e.message().to_string()),
            }),
        }
    }
    Ok(records)
}

/// Flatten shared-schema records into a CSV table. An empty record list
/// yields the bare header.
pub fn report(records: &[RunRecord]) -> Result<String, CliError> {
    let mut keys: Vec<String> = Vec::new();
    for record in records {
        if record.error.is_some() {
            continue;
        }
        let obj = record
            .summary
            .as_object()
            .ok_or_else(|| CliError::Rejected("summary is not an object".into()))?;
        let mut record_keys: Vec<String> = obj
            .iter()
            .filter(|(_, v)| v.is_number() || v.is_boolean() || v.is_string())
            .map(|(k, _)| k.clone())
            .collect();
        record_keys.sort();
        if keys.is_empty() {
            keys = record_keys;
        } else if keys != record_keys {
            return Err(CliError::Rejected(
                "records do not share a summary schema".into(),
            ));
        }
    }
    let mut out = String::from("config_hash,axis,value,error");
    for k in &keys {
        let _ = write!(out, ",{k}");
    }
    out.push('\n');
    for record in records {
        let _ = write!(
            out,
            "{},{},{},{}",
            record.config_hash,
            record.axis,
            record.value,
            record.error.as_deref().unwrap_or("")
        );
        for k in &keys {
            let cell = record
                .summary
                .as_object()
                .and_then(|o| o.get(k))
                .map(render_scalar)
                .unwrap_or_default();
            let _ = write!(out, ",{cell}");
        }
        out.push('\n');
    }
    Ok(out)
}

fn render_scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Entrypoint shared by the binary and the tests. Returns the summary
/// printed to stdout.
pub fn execute(command: &str, opts: &CliOptions) -> Result<Value, CliError> {
    match command {
        "params" => {
            let config = load_config(opts)?;
            let out = cmd_params(&config, opts.feasible_search)?;
            Ok(out.summary)
        }
        "run" | "classify" | "tl2" | "escape" | "tds" => {
            let config = load_config(opts)?;
            let out = dispatch_op(command, &config, opts.out_dir.as_deref())?;
            Ok(out.summary)
        }
        "sweep" => {
            let config = load_config(opts)?;
            let axis = opts
                .axis
                .clone()
                .ok_or_else(|| CliError::Usage("sweep needs --axis".into()))?;
            let values = opts
                .values
                .clone()
                .ok_or_else(|| CliError::Usage("sweep needs --values".into()))?;
            let records = sweep(&config, &axis, &values, opts.out_dir.as_deref())?;
            let table = report(&records)?;
            if let Some(dir) = opts.out_dir.as_deref() {
                write_atomic(
                    &dir.join("sweep_records.json"),
                    &serde_json::to_string_pretty(&records).map_err(internal)?,
                )?;
                write_atomic(&dir.join("sweep_report.csv"), &table)?;
            }
            Ok(json!({
                "cells": records.len(),
                "failed": records.iter().filter(|r| r.error.is_some()).count(),
                "records": records,
                "report_csv": table,
            }))
        }
        other => Err(CliError::Usage(format!(
            "unknown command `{other}`\n{USAGE}"
        ))),
    }
}
