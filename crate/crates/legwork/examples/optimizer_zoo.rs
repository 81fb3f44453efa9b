//! Race all eight solvers on the same task with the same seed: a small MLP
//! on synthetic separable two-class data.
//!
//!     cargo run --release --example optimizer_zoo

use legwork::harness::{
    run, DataConfig, ExperimentConfig, ProbeSection, ScheduleConfig, SweepConfig,
};
use legwork::models::ModelSpec;
use legwork::optim::{OptimizerConfig, OptimizerKind};
use legwork::schedule::DecaySpec;

fn main() -> legwork::Result<()> {
    // rate each solver actually wants on this task
    let rates = [
        (OptimizerKind::Sgd, 0.5),
        (OptimizerKind::Momentum, 0.1),
        (OptimizerKind::Nesterov, 0.1),
        (OptimizerKind::Adagrad, 0.1),
        (OptimizerKind::Rmsprop, 0.01),
        (OptimizerKind::Adam, 0.01),
        (OptimizerKind::Adadelta, 1.0),
        (OptimizerKind::Lars, 10.0),
    ];

    println!("{:<10} {:<8} {:<12} {}", "solver", "lr", "final loss", "accuracy");
    for (kind, lr) in rates {
        let config = ExperimentConfig {
            model: ModelSpec::Mlp {
                layers: vec![8, 16, 2],
            },
            data: DataConfig::SyntheticLinear {
                n: 600,
                dim: 8,
                margin: 0.05,
                data_seed: 12,
                train_n: 500,
                test_n: 100,
            },
            optimizer: OptimizerConfig::new(kind),
            schedule: ScheduleConfig {
                batch_size: 50,
                base_lr: Some(lr),
                lr_log2: None,
                lr_coeff: 1.0,
                warmup_epochs: 0.5,
                total_epochs: 20.0,
                decay: DecaySpec::Constant,
            },
            sweep: SweepConfig::default(),
            probe: ProbeSection::default(),
            seed: 4,
            out_dir: std::env::temp_dir().join("legwork-zoo"),
            timing: false,
            eval_batch_size: 100,
        };
        let out = run(&config)?;
        println!(
            "{:<10} {:<8} {:<12.6} {:.3}",
            format!("{kind:?}").to_lowercase(),
            lr,
            out.summary.final_loss,
            out.summary.final_metric.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
