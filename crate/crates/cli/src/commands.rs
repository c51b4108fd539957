//! The four subcommands: train, eval, curves, sweep.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use psurr_core::checkpoint;
use psurr_core::envs::{evaluate_policy, EnvName, EvalStats};
use psurr_core::scalar::Sign;
use psurr_core::surrogate::{loss_curve, SurrogateSpec, SurrogateVariant};
use psurr_core::trainer::{train, StepMetrics};

use crate::config::{ConfigOverrides, RunConfig};
use crate::outputs::{fmt_f64, line_svg, prepare_out_dir, resolve_out_dir, write_file, Csv, Manifest};
use crate::CmdError;

pub const METRICS_HEADER: [&str; 9] = [
    "step",
    "episode_return",
    "surrogate_loss",
    "value_loss",
    "mean_ratio",
    "mean_reg_amount",
    "entropy",
    "grad_norm",
    "skipped_updates",
];

fn metrics_csv(rows: &[StepMetrics<f64>]) -> String {
    let mut csv = Csv::new(&METRICS_HEADER);
    for m in rows {
        csv.row(&[
            m.step.to_string(),
            fmt_f64(m.episode_return),
            fmt_f64(m.surrogate_loss),
            fmt_f64(m.value_loss),
            fmt_f64(m.mean_ratio),
            fmt_f64(m.mean_reg_amount),
            fmt_f64(m.entropy),
            fmt_f64(m.grad_norm),
            m.skipped_updates.to_string(),
        ]);
    }
    csv.finish()
}

fn evals_csv(evals: &[psurr_core::trainer::EvalPoint<f64>]) -> String {
    let mut csv = Csv::new(&["step", "median", "mean", "ci_lo", "ci_hi"]);
    for e in evals {
        csv.row(&[
            e.step.to_string(),
            fmt_f64(e.stats.median),
            fmt_f64(e.stats.mean),
            fmt_f64(e.stats.ci_lo),
            fmt_f64(e.stats.ci_hi),
        ]);
    }
    csv.finish()
}

const TRAIN_OUTPUTS: [&str; 5] =
    ["manifest.json", "metrics.csv", "evals.csv", "policy.json", "value.json"];

/// Runs one training job into `dir` and returns its outcome.
fn train_into(dir: &Path, config: &RunConfig, force: bool) -> Result<psurr_core::trainer::TrainOutcome<f64>, CmdError> {
    let trainer_config = config.to_trainer_config()?;
    prepare_out_dir(dir, &TRAIN_OUTPUTS, force)?;
    Manifest::new("train", Some(config.clone()), vec![config.seed], &TRAIN_OUTPUTS).write(dir)?;
    let outcome = train(&trainer_config).map_err(CmdError::from_runtime)?;
    write_file(dir, "metrics.csv", &metrics_csv(&outcome.metrics))?;
    write_file(dir, "evals.csv", &evals_csv(&outcome.evals))?;
    write_file(
        dir,
        "policy.json",
        &checkpoint::policy_to_json(&outcome.policy).map_err(CmdError::from_runtime)?,
    )?;
    write_file(
        dir,
        "value.json",
        &checkpoint::value_to_json(&outcome.value).map_err(CmdError::from_runtime)?,
    )?;
    Ok(outcome)
}

pub fn cmd_train(
    config_path: &Path,
    overrides: &ConfigOverrides,
    out: Option<&Path>,
    force: bool,
) -> Result<(), CmdError> {
    let mut config = RunConfig::from_file(config_path)?;
    overrides.apply(&mut config);
    let dir = resolve_out_dir(out, "train");
    let outcome = train_into(&dir, &config, force)?;
    let last = outcome.metrics.last();
    println!(
        "trained {} with {} for {} steps (seed {})",
        config.env, config.variant, config.total_steps, config.seed
    );
    if let Some(m) = last {
        println!(
            "final rollout: episode_return {} surrogate_loss {} mean_ratio {}",
            fmt_f64(m.episode_return),
            fmt_f64(m.surrogate_loss),
            fmt_f64(m.mean_ratio)
        );
    }
    println!("outputs in {}", dir.display());
    Ok(())
}

fn eval_summary_csv(stats: &EvalStats<f64>) -> String {
    let mut csv = Csv::new(&["episodes", "median", "mean", "ci_lo", "ci_hi"]);
    csv.row(&[
        stats.returns.len().to_string(),
        fmt_f64(stats.median),
        fmt_f64(stats.mean),
        fmt_f64(stats.ci_lo),
        fmt_f64(stats.ci_hi),
    ]);
    csv.finish()
}

pub fn cmd_eval(
    checkpoint_path: &Path,
    env: &str,
    episodes: usize,
    seed: u64,
    trace: usize,
    out: Option<&Path>,
    force: bool,
) -> Result<(), CmdError> {
    if !checkpoint_path.exists() {
        return Err(CmdError::usage(format!(
            "checkpoint {} does not exist",
            checkpoint_path.display()
        )));
    }
    let policy = checkpoint::load_policy::<f64>(checkpoint_path).map_err(CmdError::from_config)?;
    let env = EnvName::parse(env).map_err(CmdError::from_config)?;
    if episodes == 0 {
        return Err(CmdError::usage("--episodes must be at least 1"));
    }
    let trace = trace.min(episodes);

    let dir = resolve_out_dir(out, "eval");
    let mut outputs: Vec<String> =
        vec!["manifest.json".into(), "returns.csv".into(), "summary.csv".into()];
    outputs.extend((0..trace).map(|i| format!("trace_ep{i}.csv")));
    let output_refs: Vec<&str> = outputs.iter().map(|s| s.as_str()).collect();
    prepare_out_dir(&dir, &output_refs, force)?;
    Manifest::new("eval", None, vec![seed], &output_refs).write(&dir)?;

    let (stats, traces) = psurr_core::envs::evaluate_policy_traced(env, &policy, episodes, seed, trace)
        .map_err(CmdError::from_runtime)?;
    for (i, tr) in traces.iter().enumerate() {
        let spec = psurr_core::envs::EnvSpec::of(env);
        write_file(&dir, &format!("trace_ep{i}.csv"), &psurr_core::envs::trace_csv(&spec, tr))?;
    }

    let mut returns = Csv::new(&["episode", "return"]);
    for (i, r) in stats.returns.iter().enumerate() {
        returns.row(&[i.to_string(), fmt_f64(*r)]);
    }
    write_file(&dir, "returns.csv", &returns.finish())?;
    write_file(&dir, "summary.csv", &eval_summary_csv(&stats))?;

    println!("evaluated {} episodes on {} (seed {seed})", stats.returns.len(), env);
    println!(
        "median {}  mean {}  95% CI [{}, {}]",
        fmt_f64(stats.median),
        fmt_f64(stats.mean),
        fmt_f64(stats.ci_lo),
        fmt_f64(stats.ci_hi)
    );
    println!("outputs in {}", dir.display());
    Ok(())
}

const RELATIVE_RATIO_BETAS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[allow(clippy::too_many_arguments)]
pub fn cmd_curves(
    variants: &[String],
    epsilon: f64,
    beta: f64,
    eta: f64,
    rho_min: f64,
    rho_max: f64,
    points: usize,
    svg: bool,
    out: Option<&Path>,
    force: bool,
) -> Result<(), CmdError> {
    if points < 2 {
        return Err(CmdError::usage("--points must be at least 2"));
    }
    if rho_min <= 0.0 || rho_max <= rho_min || !rho_min.is_finite() || !rho_max.is_finite() {
        return Err(CmdError::usage(format!(
            "need 0 < rho_min < rho_max, got ({rho_min}, {rho_max})"
        )));
    }
    let mut specs = Vec::new();
    for name in variants {
        let variant = SurrogateVariant::parse(name).map_err(CmdError::from_config)?;
        let spec = match variant {
            SurrogateVariant::PpoClip => SurrogateSpec::ppo_clip(epsilon),
            SurrogateVariant::PpoRb => SurrogateSpec::ppo_rb(epsilon, eta),
            SurrogateVariant::PpoRpe => SurrogateSpec::ppo_rpe(epsilon, beta),
        };
        spec.validate().map_err(CmdError::from_config)?;
        specs.push(spec);
    }

    let mut planned: Vec<String> = vec!["manifest.json".into(), "relative_ratio.csv".into()];
    for spec in &specs {
        for side in ["pos", "neg"] {
            planned.push(format!("curve_{}_{side}.csv", spec.variant));
        }
    }
    if svg {
        let csvs: Vec<String> = planned.iter().skip(1).cloned().collect();
        planned.extend(csvs.iter().map(|n| n.replace(".csv", ".svg")));
    }
    let planned_refs: Vec<&str> = planned.iter().map(|s| s.as_str()).collect();

    let dir = resolve_out_dir(out, "curves");
    prepare_out_dir(&dir, &planned_refs, force)?;
    Manifest::new("curves", None, vec![], &planned_refs).write(&dir)?;

    let grid: Vec<f64> = (0..points)
        .map(|i| rho_min + i as f64 * (rho_max - rho_min) / (points - 1) as f64)
        .collect();

    for spec in &specs {
        for (sigma, side) in [(Sign::Plus, "pos"), (Sign::Minus, "neg")] {
            let rows = loss_curve(spec, sigma, &grid).map_err(CmdError::from_runtime)?;
            let mut csv = Csv::new(&["rho", "neg_loss", "dloss_drho"]);
            for r in &rows {
                csv.row(&[fmt_f64(r.rho), fmt_f64(r.neg_loss), fmt_f64(r.dloss_drho)]);
            }
            let name = format!("curve_{}_{side}.csv", spec.variant);
            write_file(&dir, &name, &csv.finish())?;
            if svg {
                let series = vec![
                    (
                        "neg_loss".to_string(),
                        rows.iter().map(|r| (r.rho, r.neg_loss)).collect::<Vec<_>>(),
                    ),
                    (
                        "dloss_drho".to_string(),
                        rows.iter().map(|r| (r.rho, r.dloss_drho)).collect::<Vec<_>>(),
                    ),
                ];
                let title = format!("{} (sigma {})", spec.variant, sigma);
                write_file(&dir, &name.replace(".csv", ".svg"), &line_svg(&title, &series))?;
            }
        }
    }

    let mut rel = Csv::new(&["rho", "beta", "rho_beta"]);
    let mut rel_series = Vec::new();
    for b in RELATIVE_RATIO_BETAS {
        let mut pts = Vec::with_capacity(grid.len());
        for &rho in &grid {
            let rb = psurr_core::ratio::relative_ratio(rho, b).map_err(CmdError::from_runtime)?;
            rel.row(&[fmt_f64(rho), fmt_f64(b), fmt_f64(rb)]);
            pts.push((rho, rb));
        }
        rel_series.push((format!("beta={b}"), pts));
    }
    write_file(&dir, "relative_ratio.csv", &rel.finish())?;
    if svg {
        write_file(&dir, "relative_ratio.svg", &line_svg("relative density ratio", &rel_series))?;
    }

    println!("wrote {} curve files to {}", 2 * specs.len() + 1, dir.display());
    Ok(())
}

/// Per-run record a sweep aggregates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub variant: String,
    pub seed: u64,
    pub median_return: f64,
    pub mean_return: f64,
    pub eval_episodes: usize,
}

fn run_dir_name(variant: &str, seed: u64) -> String {
    format!("run_{variant}_s{seed}")
}

/// Seed for a run's final evaluation, derived from (not equal to) the
/// training seed so evaluation episodes never replay training resets.
fn eval_seed_for(seed: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1)
}

fn sweep_one(
    base: &RunConfig,
    variant: &str,
    seed: u64,
    dir: PathBuf,
    force: bool,
) -> Result<RunSummary, CmdError> {
    let summary_path = dir.join("eval_summary.json");
    if !force && summary_path.exists() {
        let text = std::fs::read_to_string(&summary_path)
            .map_err(|e| CmdError::runtime(format!("cannot read {}: {e}", summary_path.display())))?;
        if let Ok(existing) = serde_json::from_str::<RunSummary>(&text) {
            if existing.variant == variant && existing.seed == seed {
                return Ok(existing);
            }
        }
        return Err(CmdError::usage(format!(
            "{} exists but does not match this run; pass --force to redo it",
            summary_path.display()
        )));
    }

    let mut config = base.clone();
    config.variant = variant.to_string();
    config.seed = seed;
    let outcome = train_into(&dir, &config, true)?;
    let stats = evaluate_policy(
        config.to_trainer_config()?.env,
        &outcome.policy,
        config.eval_episodes,
        eval_seed_for(seed),
    )
    .map_err(CmdError::from_runtime)?;
    let summary = RunSummary {
        variant: variant.to_string(),
        seed,
        median_return: stats.median,
        mean_return: stats.mean,
        eval_episodes: stats.returns.len(),
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CmdError::runtime(format!("summary: {e}")))?;
    std::fs::write(&summary_path, json)
        .map_err(|e| CmdError::runtime(format!("cannot write {}: {e}", summary_path.display())))?;
    Ok(summary)
}

pub fn cmd_sweep(
    config_path: &Path,
    seeds: &[u64],
    variants: &[String],
    workers: usize,
    out: Option<&Path>,
    force: bool,
) -> Result<(), CmdError> {
    let config = RunConfig::from_file(config_path)?;
    if seeds.is_empty() {
        return Err(CmdError::usage("--seeds needs at least one seed"));
    }
    if variants.is_empty() {
        return Err(CmdError::usage("--variants needs at least one variant"));
    }
    for v in variants {
        SurrogateVariant::parse(v).map_err(CmdError::from_config)?;
    }
    // fail fast on an invalid base config before spawning anything
    {
        let mut probe = config.clone();
        probe.variant = variants[0].clone();
        probe.to_trainer_config()?;
    }

    let dir = resolve_out_dir(out, "sweep");
    let mut planned: Vec<String> = vec!["manifest.json".into(), "summary.csv".into()];
    let jobs: Vec<(String, u64)> = variants
        .iter()
        .flat_map(|v| seeds.iter().map(move |&s| (v.clone(), s)))
        .collect();
    planned.extend(jobs.iter().map(|(v, s)| run_dir_name(v, *s)));
    // run directories are resumable; only the aggregate files gate on --force
    prepare_out_dir(&dir, &["manifest.json", "summary.csv"], force)?;
    let planned_refs: Vec<&str> = planned.iter().map(|s| s.as_str()).collect();
    Manifest::new("sweep", Some(config.clone()), seeds.to_vec(), &planned_refs).write(&dir)?;

    let worker_count = workers.max(1).min(jobs.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<RunSummary>> = Mutex::new(Vec::with_capacity(jobs.len()));
    let failure: Mutex<Option<CmdError>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                if failure.lock().unwrap().is_some() {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let (variant, seed) = &jobs[i];
                let run_dir = dir.join(run_dir_name(variant, *seed));
                match sweep_one(&config, variant, *seed, run_dir, force) {
                    Ok(summary) => {
                        println!(
                            "run {variant} seed {seed}: median {}",
                            fmt_f64(summary.median_return)
                        );
                        results.lock().unwrap().push(summary);
                    }
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        break;
                    }
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mut summaries = results.into_inner().unwrap();
    summaries.sort_by(|a, b| (a.variant.as_str(), a.seed).cmp(&(b.variant.as_str(), b.seed)));

    let mut csv = Csv::new(&["variant", "seed", "median_return"]);
    for s in &summaries {
        csv.row(&[s.variant.clone(), s.seed.to_string(), fmt_f64(s.median_return)]);
    }
    write_file(&dir, "summary.csv", &csv.finish())?;
    println!("sweep complete: {} runs, summary in {}", summaries.len(), dir.display());
    Ok(())
}
