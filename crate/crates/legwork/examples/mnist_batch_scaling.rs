//! The headline experiment: tune one small-batch baseline on the bundled
//! digit subset, then let the scaling rule derive every larger batch size.
//! A row-sequence LSTM (28 timesteps of 28 pixels) trains at B=32 with a
//! constant rate; B in {64, 128, 256} get sqrt-scaled rates and
//! linearly-scaled warmup, with zero extra tuning.
//!
//!     cargo run --release --example mnist_batch_scaling [epochs]
//!
//! Defaults to 4 epochs (~2 minutes); the full 12-epoch version matches the
//! acceptance suite.

use std::path::PathBuf;

use legwork::harness::{
    run_sweep, DataConfig, ExperimentConfig, FactorValue, ProbeSection, ScheduleConfig,
    SweepConfig,
};
use legwork::models::ModelSpec;
use legwork::optim::{OptimizerConfig, OptimizerKind};
use legwork::schedule::{DecaySpec, ScalingRule};

fn main() -> legwork::Result<()> {
    let epochs: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(4.0);
    let data_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");

    let config = ExperimentConfig {
        model: ModelSpec::LstmClassifier {
            input: 28,
            transform: 128,
            hidden: 128,
            classes: 10,
            seq_len: 28,
        },
        data: DataConfig::MnistIdx {
            images: data_dir.join("mnist-subset-images-idx3-ubyte.gz"),
            labels: data_dir.join("mnist-subset-labels-idx1-ubyte.gz"),
            subset: 0,
            subset_seed: 1,
            train_n: 9000,
            test_n: 1000,
        },
        optimizer: OptimizerConfig::new(OptimizerKind::Momentum),
        schedule: ScheduleConfig {
            batch_size: 32,
            base_lr: Some(0.1),
            lr_log2: None,
            lr_coeff: 1.0,
            warmup_epochs: 0.25,
            total_epochs: epochs,
            decay: DecaySpec::Constant,
        },
        sweep: SweepConfig {
            factors: [1, 2, 4, 8].iter().map(|&k| FactorValue::Int(k)).collect(),
            rule: ScalingRule::Sqrt,
        },
        probe: ProbeSection::default(),
        seed: 7,
        out_dir: std::env::temp_dir().join("legwork-mnist-scaling"),
        timing: true,
        eval_batch_size: 1000,
    };

    println!("training 4 batch sizes for {epochs} epochs each (runs execute concurrently)...");
    let runs = run_sweep(&config)?;
    let baseline = runs[0].output.summary.final_metric.unwrap_or(f64::NAN);
    println!(
        "\n{:<7} {:<8} {:<20} {:<11} {:<10} {}",
        "factor", "batch", "init LR", "warmup(ep)", "accuracy", "gap vs baseline"
    );
    for r in &runs {
        let s = &r.output.summary;
        let acc = s.final_metric.unwrap_or(f64::NAN);
        println!(
            "{:<7} {:<8} {:<20.12} {:<11} {:<10.4} {:+.2}pp",
            r.factor.to_string(),
            s.batch_size,
            s.base_lr,
            s.warmup_epochs,
            acc,
            (acc - baseline) * 100.0
        );
    }
    Ok(())
}
