//! Training-run orchestration: curve files, manifests, checkpoints, and the
//! multi-variant comparison driver.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use slimrnn_core::rng::RNG_ALGORITHM;
use slimrnn_core::tasks::TaskKind;
use slimrnn_core::taxonomy::param_count;
use slimrnn_core::train::{init_model, train_epochs, TrainRecord, TrainState};

use crate::checkpoint::Checkpoint;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::fmt::sig9;

pub const CURVE_HEADER: &str = "epoch,train_loss,val_metric,seconds,param_count";

/// Worker-thread budget from `SLIMRNN_THREADS`; 0 (the default) selects
/// single-threaded deterministic mode.
pub fn thread_budget() -> Result<usize> {
    match std::env::var("SLIMRNN_THREADS") {
        Err(_) => Ok(0),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::usage(format!("SLIMRNN_THREADS must be an integer, got '{s}'"))),
    }
}

/// In deterministic mode wall-clock fields in machine-readable outputs are
/// zeroed so identical runs produce identical bytes.
pub fn deterministic_mode() -> Result<bool> {
    Ok(thread_budget()? == 0)
}

pub struct RunPaths {
    pub curve: PathBuf,
    pub checkpoint: PathBuf,
    pub manifest: PathBuf,
}

pub fn run_paths(output_dir: &Path, variant: &str) -> RunPaths {
    RunPaths {
        curve: output_dir.join(format!("{variant}.curve.csv")),
        checkpoint: output_dir.join(format!("{variant}.ckpt")),
        manifest: output_dir.join(format!("{variant}.manifest.toml")),
    }
}

fn curve_row(r: &TrainRecord, deterministic: bool) -> String {
    let seconds = if deterministic { 0.0 } else { r.seconds };
    format!(
        "{},{},{},{},{}",
        r.epoch,
        sig9(r.train_loss),
        sig9(r.val_metric),
        sig9(seconds),
        r.param_count
    )
}

fn append_curve(path: &Path, records: &[TrainRecord], deterministic: bool) -> Result<()> {
    let existing = path.exists();
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    if !existing {
        writeln!(file, "{CURVE_HEADER}")?;
    }
    for r in records {
        writeln!(file, "{}", curve_row(r, deterministic))?;
    }
    Ok(())
}

fn write_manifest(path: &Path, config: &ExperimentConfig, state: &TrainState) -> Result<()> {
    let cell = param_count(&state.model.config, state.model.params.n, state.model.params.m);
    let text = format!(
        "config_hash = \"{:08x}\"\nrng = \"{}\"\nversion = \"{}\"\nvariant = \"{}\"\ncell_params = {}\ntotal_params = {}\n",
        config.identity_hash()?,
        RNG_ALGORITHM,
        env!("CARGO_PKG_VERSION"),
        config.experiment.variant.as_deref().unwrap_or(""),
        cell,
        state.model.scalar_count(),
    );
    fs::write(path, text)?;
    Ok(())
}

/// Summary of one completed (or faulted) training run.
pub struct RunSummary {
    pub variant: String,
    pub cell_params: usize,
    pub final_metric: Option<f64>,
    pub epochs_to_threshold: Option<usize>,
    pub seconds: f64,
    pub fault: Option<String>,
}

/// Whether the validation metric improves downward (MSE) or upward (accuracy).
fn lower_is_better(kind: &TaskKind) -> bool {
    matches!(kind, TaskKind::AddingProblem)
}

fn epochs_to_threshold(
    records: &[TrainRecord],
    threshold: Option<f64>,
    lower: bool,
) -> Option<usize> {
    let gate = threshold?;
    records
        .iter()
        .find(|r| if lower { r.val_metric < gate } else { r.val_metric >= gate })
        .map(|r| r.epoch)
}

/// Trains one variant to the configured epoch budget, writing the curve file
/// (appending when resuming), the final checkpoint, and the run manifest.
/// On a numeric fault the partial curve is kept and the fault is reported.
pub fn run_train(
    config: &ExperimentConfig,
    resume: Option<&Path>,
    deterministic: bool,
) -> Result<RunSummary> {
    let variant = config
        .experiment
        .variant
        .as_deref()
        .ok_or_else(|| CliError::usage("config has no experiment.variant (use [experiment] variant or --variant)"))?
        .to_string();
    let cell = config.cell_config(&variant)?;
    let task = config.task_spec()?;
    let settings = config.train_settings();
    let output_dir = PathBuf::from(&config.experiment.output_dir);
    fs::create_dir_all(&output_dir)?;
    let paths = run_paths(&output_dir, &variant);

    let mut state = match resume {
        Some(path) => Checkpoint::load(path)?.into_state(config)?,
        None => {
            // A fresh run must not silently extend an older curve file.
            if paths.curve.exists() {
                fs::remove_file(&paths.curve)?;
            }
            let model = init_model(&cell, config.experiment.n, &task, config.experiment.seed)?;
            let opt = config.optimizer_state(model.scalar_count())?;
            TrainState { model, opt, epochs_done: 0, global_step: 0 }
        }
    };
    if state.epochs_done >= settings.epochs {
        return Err(CliError::usage(format!(
            "checkpoint already has {} epochs done; config asks for {}",
            state.epochs_done, settings.epochs
        )));
    }

    let start = Instant::now();
    let outcome = train_epochs(&mut state, &task, &settings)?;
    let seconds = start.elapsed().as_secs_f64();
    append_curve(&paths.curve, &outcome.records, deterministic)?;

    let cell_params = param_count(&cell, config.experiment.n, config.m()?);
    if let Some(fault) = outcome.fault {
        return Ok(RunSummary {
            variant,
            cell_params,
            final_metric: outcome.records.last().map(|r| r.val_metric),
            epochs_to_threshold: None,
            seconds,
            fault: Some(fault.to_string()),
        });
    }

    Checkpoint::from_state(config, &state).save(&paths.checkpoint)?;
    write_manifest(&paths.manifest, config, &state)?;
    let lower = lower_is_better(&task.kind);
    Ok(RunSummary {
        variant,
        cell_params,
        final_metric: outcome.records.last().map(|r| r.val_metric),
        epochs_to_threshold: epochs_to_threshold(
            &outcome.records,
            config.experiment.threshold,
            lower,
        ),
        seconds,
        fault: None,
    })
}

/// Runs every listed variant under identical task/optimizer/seed settings.
/// Per-variant failures are recorded without aborting the siblings, and the
/// report order follows the input list. With a thread budget > 1 the runs
/// execute concurrently; each run stays internally deterministic.
pub fn run_compare(config: &ExperimentConfig, deterministic: bool) -> Result<Vec<RunSummary>> {
    let variants = config
        .experiment
        .variants
        .clone()
        .ok_or_else(|| CliError::usage("compare needs [experiment] variants = [...]"))?;
    if variants.len() < 2 {
        return Err(CliError::usage("compare needs at least 2 variants"));
    }
    let budget = thread_budget()?;
    let jobs: Vec<ExperimentConfig> = variants.iter().map(|v| config.for_variant(v)).collect();

    let run_one = |cfg: &ExperimentConfig, variant: &str| -> RunSummary {
        match run_train(cfg, None, deterministic) {
            Ok(summary) => summary,
            Err(e) => RunSummary {
                variant: variant.to_string(),
                cell_params: 0,
                final_metric: None,
                epochs_to_threshold: None,
                seconds: 0.0,
                fault: Some(e.to_string()),
            },
        }
    };

    if budget <= 1 {
        return Ok(jobs
            .iter()
            .zip(&variants)
            .map(|(cfg, v)| run_one(cfg, v))
            .collect());
    }
    let mut out: Vec<Option<RunSummary>> = (0..jobs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (cfg, variant) in jobs.iter().zip(&variants) {
            handles.push(scope.spawn(move || run_one(cfg, variant)));
        }
        for (slot, handle) in out.iter_mut().zip(handles) {
            *slot = Some(handle.join().expect("comparison worker panicked"));
        }
    });
    Ok(out.into_iter().map(|s| s.expect("all slots filled")).collect())
}

/// Combined comparison table; timing is zeroed in deterministic mode.
pub fn render_compare_table(summaries: &[RunSummary], deterministic: bool) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>10} {:>16} {:>10} {:>12}\n",
        "variant", "params", "final_metric", "to_thresh", "seconds"
    ));
    for s in summaries {
        if let Some(fault) = &s.fault {
            out.push_str(&format!("{:<12} failed: {}\n", s.variant, fault));
            continue;
        }
        let seconds = if deterministic { 0.0 } else { s.seconds };
        out.push_str(&format!(
            "{:<12} {:>10} {:>16} {:>10} {:>12}\n",
            s.variant,
            s.cell_params,
            s.final_metric.map(sig9).unwrap_or_else(|| "-".into()),
            s.epochs_to_threshold.map(|e| e.to_string()).unwrap_or_else(|| "-".into()),
            sig9(seconds),
        ));
    }
    out
}
