//! Export iteration/LR curves for each decay family as CSV files, ready for
//! plotting: linear warmup into multi-step, polynomial, per-epoch
//! exponential, and constant decay.
//!
//!     cargo run --release --example schedule_curves [out_dir]

use std::fs;
use std::path::PathBuf;

use legwork::schedule::{write_schedule_csv, DecaySpec, ScheduleSpec};

fn main() -> legwork::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("curves"));
    fs::create_dir_all(&out_dir)?;

    let n = 50_000;
    let curves = [
        (
            "multi_step.csv",
            DecaySpec::MultiStep {
                boundaries_epochs: vec![30.0, 60.0, 80.0],
                factor: 0.1,
            },
        ),
        ("poly.csv", DecaySpec::Poly { power: 2.0 }),
        (
            "exponential.csv",
            DecaySpec::Exponential {
                decay_rate: 0.4,
                start_epoch: 7.0,
            },
        ),
        ("constant.csv", DecaySpec::Constant),
    ];

    for (name, decay) in curves {
        let epochs = if matches!(decay, DecaySpec::Exponential { .. }) {
            13.0
        } else {
            90.0
        };
        let spec = ScheduleSpec::with_pow2_lr(512, 1.0, 2.5, 0.625, decay, epochs, n)?;
        let mut buf = Vec::new();
        write_schedule_csv(&spec, &mut buf)?;
        let path = out_dir.join(name);
        fs::write(&path, buf)?;
        println!(
            "{}: {} iterations, peak lr {}, warmup {} iterations",
            path.display(),
            spec.total_iterations(),
            spec.base_lr(),
            spec.warmup_iterations()?
        );
    }
    Ok(())
}
