//! `legwork` CLI: config-driven training runs, batch-size sweeps, grid
//! tuning, schedule export, and curvature probing. Exit codes: 0 success,
//! 2 divergence, 1 any other error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use legwork::error::Error;
use legwork::harness::{self, ExperimentConfig, FactorValue, RunOutput, SweepRun};
use legwork::schedule::write_schedule_csv;

#[derive(Parser)]
#[command(name = "legwork", version, about = "Warmup-scheduled training runs at desk scale")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train once with the configured schedule.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Scale the base schedule by each sweep factor and train every batch size.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Try each learning rate in a grid (same seed) and report the best.
    Tune {
        config: PathBuf,
        /// Comma-separated learning rates, e.g. 0.05,0.1,0.2
        #[arg(long, value_delimiter = ',', required = true)]
        lr_grid: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write the full iteration,lr curve for the configured schedule.
    ScheduleExport {
        config: PathBuf,
        /// Output file (defaults to <out_dir>/schedule.csv)
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train with the curvature probe enabled and write probe.csv.
    Probe {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Flag overrides for the most commonly swept config keys.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    batch_size: Option<u64>,
    #[arg(long)]
    base_lr: Option<f64>,
    #[arg(long)]
    warmup_epochs: Option<f64>,
    #[arg(long)]
    total_epochs: Option<f64>,
    /// Optimizer kind: sgd, momentum, nesterov, adagrad, rmsprop, adam,
    /// adadelta, lars
    #[arg(long)]
    optimizer: Option<String>,
    /// Comma-separated sweep factors (integers or N/D)
    #[arg(long, value_delimiter = ',')]
    factors: Option<Vec<String>>,
    /// Zero out the wall-clock column for bitwise-reproducible metrics.csv
    #[arg(long)]
    no_timing: bool,
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) -> Result<(), Error> {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            config.out_dir = dir.clone();
        }
        if let Some(b) = self.batch_size {
            config.schedule.batch_size = b;
        }
        if let Some(lr) = self.base_lr {
            config.schedule.base_lr = Some(lr);
            config.schedule.lr_log2 = None;
        }
        if let Some(w) = self.warmup_epochs {
            config.schedule.warmup_epochs = w;
        }
        if let Some(e) = self.total_epochs {
            config.schedule.total_epochs = e;
        }
        if let Some(kind) = &self.optimizer {
            let parsed = serde_json::from_value(serde_json::Value::String(kind.clone()))
                .map_err(|_| Error::config(format!("unknown optimizer '{kind}'")))?;
            config.optimizer.kind = parsed;
        }
        if let Some(factors) = &self.factors {
            config.sweep.factors = factors
                .iter()
                .map(|f| FactorValue::Text(f.clone()))
                .collect();
        }
        if self.no_timing {
            config.timing = false;
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(Error::Divergence { iteration, loss }) => {
            eprintln!("diverged at iteration {iteration} (loss {loss})");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch() -> Result<ExitCode, Error> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { config, overrides } => {
            let config = load(&config, &overrides)?;
            let output = harness::run(&config)?;
            harness::write_outputs(&config.out_dir, &output)?;
            report_run(&output);
            Ok(exit_for(&[&output]))
        }
        Cmd::Sweep { config, overrides } => {
            let config = load(&config, &overrides)?;
            let runs = harness::run_sweep(&config)?;
            harness::write_sweep_outputs(&config.out_dir, &runs)?;
            report_sweep(&runs);
            let outputs: Vec<&RunOutput> = runs.iter().map(|r| &r.output).collect();
            Ok(exit_for(&outputs))
        }
        Cmd::Tune {
            config,
            lr_grid,
            overrides,
        } => {
            let config = load(&config, &overrides)?;
            let tuned = harness::tune_grid(&config, &lr_grid)?;
            for r in &tuned.results {
                let metric = r
                    .summary
                    .final_metric
                    .map(|m| m.to_string())
                    .unwrap_or_else(|| "-".into());
                let mark = if r.summary.diverged { " (diverged)" } else { "" };
                println!("lr {:<10} {} {}{}", r.lr, r.summary.metric_kind, metric, mark);
            }
            println!("best: lr {} ({})", tuned.best_lr, tuned.best_metric);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::ScheduleExport {
            config,
            out,
            overrides,
        } => {
            let config = load(&config, &overrides)?;
            let (train, _) = harness::load_data(&config)?;
            let spec = config.schedule.to_spec(train.len() as u64)?;
            let path = out.unwrap_or_else(|| config.out_dir.join("schedule.csv"));
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            let mut buf = Vec::new();
            write_schedule_csv(&spec, &mut buf)?;
            std::fs::write(&path, buf)?;
            println!(
                "wrote {} ({} iterations, base lr {})",
                path.display(),
                spec.total_iterations(),
                spec.base_lr()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Probe { config, overrides } => {
            let mut config = load(&config, &overrides)?;
            config.probe.enabled = true;
            let output = harness::run(&config)?;
            harness::write_outputs(&config.out_dir, &output)?;
            report_run(&output);
            if let Some(peak) = &output.summary.probe_peak {
                println!(
                    "probe peak: iteration {} (smoothed L = {:.6})",
                    peak.peak_iteration, peak.peak_value
                );
            }
            Ok(exit_for(&[&output]))
        }
    }
}

fn load(path: &PathBuf, overrides: &Overrides) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::from_path(path)?;
    overrides.apply(&mut config)?;
    Ok(config)
}

fn report_run(output: &RunOutput) {
    let s = &output.summary;
    if s.diverged {
        eprintln!(
            "run diverged at iteration {} of {}",
            s.divergence_iteration.unwrap_or_default(),
            s.total_iterations
        );
        return;
    }
    let metric = s
        .final_metric
        .map(|m| format!("{} {m:.6}", s.metric_kind))
        .unwrap_or_else(|| "no eval".into());
    println!(
        "{}: B={} lr={} warmup={}ep iters={} loss={:.6} {} ({} ms)",
        s.model_id, s.batch_size, s.base_lr, s.warmup_epochs, s.total_iterations, s.final_loss,
        metric, s.wall_ms
    );
}

fn report_sweep(runs: &[SweepRun]) {
    println!("factor  batch    init_lr           warmup_ep   metric");
    for run in runs {
        let s = &run.output.summary;
        let metric = if s.diverged {
            "diverged".to_string()
        } else {
            s.final_metric
                .map(|m| format!("{m:.6}"))
                .unwrap_or_else(|| "-".into())
        };
        println!(
            "{:<7} {:<8} {:<17} {:<11} {}",
            run.factor.to_string(),
            s.batch_size,
            s.base_lr,
            s.warmup_epochs,
            metric
        );
    }
}

fn exit_for(outputs: &[&RunOutput]) -> ExitCode {
    if outputs.iter().any(|o| o.summary.diverged) {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
