//! Probe the local Lipschitz constant along the gradient direction.
//!
//! First on quadratics where the closed form g'Ag/||g||^2 is known, then on
//! a live MLP training run where the early peak of L(x, g) is the reason
//! warmup exists: the largest stable step is roughly 1/L.
//!
//!     cargo run --release --example curvature_probe

use legwork::harness::{
    run, DataConfig, ExperimentConfig, ProbeSection, ScheduleConfig, SweepConfig,
};
use legwork::models::ModelSpec;
use legwork::optim::{OptimizerConfig, OptimizerKind};
use legwork::probe::{lipschitz_estimate, peak_statistics, DEFAULT_PEAK_WINDOW};
use legwork::schedule::DecaySpec;
use legwork::tensor::Tensor;

fn main() -> legwork::Result<()> {
    // closed-form sanity on a diagonal quadratic f = 1/2 w' diag(2,1) w
    let grad = |w: &[Tensor]| -> legwork::Result<Vec<Tensor>> {
        let d = w[0].data();
        Ok(vec![Tensor::from_vec(vec![2.0 * d[0], d[1]])])
    };
    let w = vec![Tensor::from_vec(vec![1.0, 1.0])];
    let g = vec![Tensor::from_vec(vec![2.0, 1.0])];
    let l = lipschitz_estimate(&grad, &w, &g, 1e-5)?;
    println!("quadratic diag(2,1) at (1,1): L = {l:.9} (closed form 1.8)");
    println!("ideal second-order step 1/L = {:.6}", 1.0 / l);

    // live trace on a synthetic classification run
    let config = ExperimentConfig {
        model: ModelSpec::Mlp {
            layers: vec![16, 32, 4],
        },
        data: DataConfig::SyntheticBlobs {
            n: 4_200,
            dim: 16,
            classes: 4,
            spread: 0.4,
            data_seed: 6,
            train_n: 4_000,
            test_n: 200,
        },
        optimizer: OptimizerConfig::new(OptimizerKind::Sgd),
        schedule: ScheduleConfig {
            batch_size: 200,
            base_lr: Some(0.2),
            lr_log2: None,
            lr_coeff: 1.0,
            warmup_epochs: 0.0,
            total_epochs: 30.0,
            decay: DecaySpec::Constant,
        },
        sweep: SweepConfig::default(),
        probe: ProbeSection {
            enabled: true,
            epsilon: 1e-4,
            batch_size: 256,
            every: 1,
            seed: 2,
        },
        seed: 8,
        out_dir: std::env::temp_dir().join("legwork-probe-example"),
        timing: false,
        eval_batch_size: 200,
    };
    let out = run(&config)?;
    let trace = out.probe_trace.expect("probe enabled");
    let peak = peak_statistics(&trace, DEFAULT_PEAK_WINDOW)?;
    println!(
        "\nmlp run: {} probes over {} iterations, accuracy {:.3}",
        trace.entries.len(),
        out.summary.total_iterations,
        out.summary.final_metric.unwrap_or(f64::NAN)
    );
    println!(
        "smoothed curvature peak at iteration {} (L = {:.4}), i.e. {:.0}% into the run",
        peak.peak_iteration,
        peak.peak_value,
        100.0 * peak.peak_iteration as f64 / out.summary.total_iterations as f64
    );

    // coarse ASCII profile of the trace
    let vals: Vec<f64> = trace.values().collect();
    let max = vals.iter().cloned().fold(f64::MIN, f64::max);
    let buckets = 24usize;
    print!("profile: ");
    for c in 0..buckets {
        let idx = c * vals.len() / buckets;
        let bar = (vals[idx] / max * 8.0).round() as usize;
        print!("{}", [".", ":", "-", "=", "+", "*", "#", "%", "@"][bar.min(8)]);
    }
    println!(" (each glyph is one sample of L, left to right in time)");
    Ok(())
}
