//! Derive whole batch-size scaling tables from a single tuned base row.
//!
//! With sqrt LR scaling and linear-epoch warmup scaling, one (batch, LR,
//! warmup) row determines every other row. This prints two classic tables:
//! a ResNet-style 90-epoch schedule scaled 1024 -> 32768, and a
//! seq2seq-style 2-epoch schedule scaled 256 -> 4096, then walks the
//! largest row back down to show the scaling is exactly invertible.
//!
//!     cargo run --release --example scaling_tables

use legwork::schedule::{DecaySpec, Ratio, ScalingRule, ScheduleSpec};

fn print_table(title: &str, base: &ScheduleSpec, factors: &[u64]) {
    println!("{title}");
    println!("{:<8} {:<10} {:<22} {:<12} {}", "factor", "batch", "init LR", "warmup(ep)", "warmup iterations");
    let ratios: Vec<Ratio> = factors.iter().map(|&k| Ratio::int(k).unwrap()).collect();
    for (k, spec) in factors.iter().zip(base.sweep(&ratios, ScalingRule::Sqrt).unwrap()) {
        println!(
            "{:<8} {:<10} {:<22} {:<12} {}",
            k,
            spec.batch_size(),
            spec.base_lr(),
            spec.warmup_epochs(),
            spec.warmup_iterations().unwrap()
        );
    }
    println!();
}

fn main() {
    let resnet_style = ScheduleSpec::with_pow2_lr(
        1024,
        1.0,
        2.5, // LR = 2^2.5
        10.0 / 32.0,
        DecaySpec::MultiStep {
            boundaries_epochs: vec![30.0, 60.0, 80.0],
            factor: 0.1,
        },
        90.0,
        1_281_167,
    )
    .unwrap();
    print_table(
        "image classification, 90 epochs, multi-step decay:",
        &resnet_style,
        &[1, 2, 4, 8, 16, 32],
    );

    let seq2seq_style = ScheduleSpec::with_pow2_lr(
        256,
        1e-3,
        -0.5, // LR = 2^-0.5 / 10^3
        0.0145,
        DecaySpec::Constant,
        2.0,
        3_500_000,
    )
    .unwrap();
    print_table(
        "translation, 2 epochs, constant after warmup:",
        &seq2seq_style,
        &[1, 2, 4, 8, 16],
    );

    // scaling down works the same way: tune the big batch, derive the small
    let largest = resnet_style
        .legw_scale(Ratio::int(32).unwrap(), ScalingRule::Sqrt)
        .unwrap();
    let recovered = largest
        .legw_downscale(Ratio::int(32).unwrap(), ScalingRule::Sqrt)
        .unwrap();
    println!(
        "downscale check: B={} lr={} -> B={} lr={} (matches base: {})",
        largest.batch_size(),
        largest.base_lr(),
        recovered.batch_size(),
        recovered.base_lr(),
        recovered == resnet_style
    );
}
