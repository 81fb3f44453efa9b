//! Auto-tuning face-off at desk scale: Adam with a grid-tuned learning rate
//! versus warmup-scheduled momentum whose rate was never tuned past the
//! baseline (the scaling rule derives it). Both train the same model on the
//! same blobs task at a 4x batch size.
//!
//!     cargo run --release --example adam_vs_warmup

use legwork::harness::{
    run, tune_grid, DataConfig, ExperimentConfig, ProbeSection, ScheduleConfig, SweepConfig,
};
use legwork::models::ModelSpec;
use legwork::optim::{OptimizerConfig, OptimizerKind};
use legwork::schedule::{DecaySpec, Ratio, ScalingRule};

fn base_config() -> ExperimentConfig {
    ExperimentConfig {
        model: ModelSpec::Mlp {
            layers: vec![12, 24, 3],
        },
        data: DataConfig::SyntheticBlobs {
            n: 2_400,
            dim: 12,
            classes: 3,
            spread: 0.55,
            data_seed: 21,
            train_n: 2_000,
            test_n: 400,
        },
        optimizer: OptimizerConfig::new(OptimizerKind::Momentum),
        schedule: ScheduleConfig {
            batch_size: 25,
            base_lr: Some(0.05),
            lr_log2: None,
            lr_coeff: 1.0,
            warmup_epochs: 0.25,
            total_epochs: 15.0,
            decay: DecaySpec::Poly { power: 2.0 },
        },
        sweep: SweepConfig::default(),
        probe: ProbeSection::default(),
        seed: 13,
        out_dir: std::env::temp_dir().join("legwork-adam-vs-warmup"),
        timing: false,
        eval_batch_size: 400,
    }
}

fn main() -> legwork::Result<()> {
    let k = 4u64;

    // untuned path: scale the baseline schedule to 4x batch
    let config = base_config();
    let (train, test) = legwork::harness::load_data(&config)?;
    let scaled = config
        .schedule
        .to_spec(train.len() as u64)?
        .legw_scale(Ratio::int(k)?, ScalingRule::Sqrt)?;
    println!(
        "warmup-momentum at B={}: lr {:.6} and warmup {} epochs derived, not tuned",
        scaled.batch_size(),
        scaled.base_lr(),
        scaled.warmup_epochs()
    );
    let warmup_run = legwork::harness::run_prepared(&config, &train, &test, scaled)?;

    // tuned path: Adam gets a 10-point grid at the large batch
    let mut adam = base_config();
    adam.optimizer = OptimizerConfig::new(OptimizerKind::Adam);
    adam.schedule.batch_size *= k;
    adam.schedule.warmup_epochs = 0.0;
    adam.schedule.decay = DecaySpec::Constant;
    let grid: Vec<f64> = (1..=10).map(|i| i as f64 * 1e-3).collect();
    println!("tuning adam over {} rates in [0.001, 0.010]...", grid.len());
    let tuned = tune_grid(&adam, &grid)?;
    adam.schedule.base_lr = Some(tuned.best_lr);
    let adam_run = run(&adam)?;

    println!("\n{:<22} {:<10} {:<10} {}", "method", "batch", "tuned?", "accuracy");
    println!(
        "{:<22} {:<10} {:<10} {:.4}",
        "momentum + warmup",
        warmup_run.summary.batch_size,
        "no",
        warmup_run.summary.final_metric.unwrap_or(f64::NAN)
    );
    println!(
        "{:<22} {:<10} {:<10} {:.4}",
        format!("adam (lr {})", tuned.best_lr),
        adam_run.summary.batch_size,
        "grid of 10",
        adam_run.summary.final_metric.unwrap_or(f64::NAN)
    );
    Ok(())
}
