//! `slimrnn`: experiment front end for the slim recurrent-cell library.
//!
//! Subcommands: `catalog`, `param-table`, `gradcheck`, `train`, `compare`.
//! Exit statuses: 0 success, 1 check failed, 2 usage/config error, 3 numeric
//! fault, 4 persistence error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slimrnn_core::gradcheck::gradient_check_with_corruption;
use slimrnn_core::numerics::ActivationKind;
use slimrnn_core::taxonomy::{
    param_count, reduction_vs_standard, variant_config, VariantId, DEFAULT_ALPHA,
};

use slimrnn_cli::config::ExperimentConfig;
use slimrnn_cli::error::{CliError, Result};
use slimrnn_cli::fmt;
use slimrnn_cli::run::{deterministic_mode, render_compare_table, run_compare, run_train};

#[derive(Parser)]
#[command(name = "slimrnn", version, about = "Slim recurrent-cell experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the variant catalog with per-variant update equations.
    Catalog,
    /// Parameter counts and reductions for the given sizes.
    ParamTable {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Variant names; all catalog variants when omitted.
        variants: Vec<String>,
    },
    /// Check analytic BPTT against central finite differences.
    Gradcheck {
        #[arg(long)]
        variant: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[arg(long, default_value_t = 1e-5)]
        threshold: f64,
        /// Debug fault injection: corrupt this flat analytic-gradient index.
        #[arg(long)]
        corrupt: Option<usize>,
    },
    /// Train one variant from a config file; writes curve, checkpoint, manifest.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Continue from a checkpoint instead of initializing fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Overrides for config file keys.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        output_dir: Option<String>,
    },
    /// Train every variant in the config's list under identical settings.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
}

fn cmd_catalog() -> Result<()> {
    for id in VariantId::ALL {
        println!("{:<12} {}", id.name(), id.equations());
    }
    Ok(())
}

fn cmd_param_table(n: usize, m: usize, variants: &[String]) -> Result<()> {
    if n < 1 || m < 1 {
        return Err(CliError::usage("n and m must be >= 1"));
    }
    let ids: Vec<VariantId> = if variants.is_empty() {
        VariantId::ALL.to_vec()
    } else {
        variants.iter().map(|v| VariantId::parse(v)).collect::<slimrnn_core::Result<_>>()?
    };
    println!("{:<12} {:>10} {:>10} {:>10}", "variant", "params", "reduction", "reduction%");
    let standard = {
        let cfg = variant_config(VariantId::LSTM, DEFAULT_ALPHA, ActivationKind::Tanh)?;
        param_count(&cfg, n, m)
    };
    for id in ids {
        let cfg = variant_config(id, DEFAULT_ALPHA, ActivationKind::Tanh)?;
        let count = param_count(&cfg, n, m);
        let reduction = reduction_vs_standard(&cfg, n, m);
        let pct = 100.0 * reduction as f64 / standard as f64;
        println!("{:<12} {:>10} {:>10} {:>9.1}%", id.name(), count, reduction, pct);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gradcheck(
    variant: &str,
    n: usize,
    m: usize,
    t: usize,
    seed: u64,
    eps: f64,
    threshold: f64,
    corrupt: Option<usize>,
) -> Result<()> {
    let id = VariantId::parse(variant)?;
    let cfg = variant_config(id, DEFAULT_ALPHA, ActivationKind::Tanh)?;
    let report =
        gradient_check_with_corruption(&cfg, n, m, t, seed, eps, threshold, corrupt)?;
    print!("{}", report.render_table());
    if report.pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("gradient check failed for {}", id.name())))
    }
}

fn cmd_train(
    config_path: &PathBuf,
    resume: Option<&PathBuf>,
    variant: Option<&str>,
    epochs: Option<usize>,
    seed: Option<u64>,
    lr: Option<f64>,
    output_dir: Option<&str>,
) -> Result<()> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(v) = variant {
        config.experiment.variant = Some(v.to_string());
        config.experiment.variants = None;
    }
    if let Some(e) = epochs {
        config.experiment.epochs = e;
    }
    if let Some(s) = seed {
        config.experiment.seed = s;
    }
    if let Some(lr) = lr {
        config.optimizer.lr = lr;
    }
    if let Some(dir) = output_dir {
        config.experiment.output_dir = dir.to_string();
    }
    // Re-validate after flag overrides.
    let config = ExperimentConfig::parse(&config.canonical())?;

    let deterministic = deterministic_mode()?;
    let summary = run_train(&config, resume.map(|p| p.as_path()), deterministic)?;
    if let Some(fault) = summary.fault {
        return Err(CliError::Numeric(format!(
            "{fault}; partial curve retained in {}",
            config.experiment.output_dir
        )));
    }
    println!(
        "trained {} ({} cell params): final val metric {}",
        summary.variant,
        summary.cell_params,
        summary.final_metric.map(fmt::sig9).unwrap_or_else(|| "-".into())
    );
    Ok(())
}

fn cmd_compare(config_path: &PathBuf) -> Result<()> {
    let config = ExperimentConfig::load(config_path)?;
    let deterministic = deterministic_mode()?;
    let summaries = run_compare(&config, deterministic)?;
    print!("{}", render_compare_table(&summaries, deterministic));
    // Machine-readable copy alongside the per-variant artifacts.
    let mut csv = String::from("variant,params,final_metric,epochs_to_threshold,seconds\n");
    for s in &summaries {
        let seconds = if deterministic { 0.0 } else { s.seconds };
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            s.variant,
            s.cell_params,
            s.final_metric.map(fmt::sig9).unwrap_or_else(|| "-".into()),
            s.epochs_to_threshold.map(|e| e.to_string()).unwrap_or_else(|| "-".into()),
            fmt::sig9(seconds),
        ));
    }
    let out = PathBuf::from(&config.experiment.output_dir).join("compare.csv");
    std::fs::create_dir_all(&config.experiment.output_dir)?;
    std::fs::write(out, csv)?;
    Ok(())
}

fn run_cli(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Catalog => cmd_catalog(),
        Command::ParamTable { n, m, variants } => cmd_param_table(*n, *m, variants),
        Command::Gradcheck { variant, n, m, t, seed, eps, threshold, corrupt } => {
            cmd_gradcheck(variant, *n, *m, *t, *seed, *eps, *threshold, *corrupt)
        }
        Command::Train { config, resume, variant, epochs, seed, lr, output_dir } => cmd_train(
            config,
            resume.as_ref(),
            variant.as_deref(),
            *epochs,
            *seed,
            *lr,
            output_dir.as_deref(),
        ),
        Command::Compare { config } => cmd_compare(config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slimrnn: {e}");
            e.exit_code()
        }
    }
}
