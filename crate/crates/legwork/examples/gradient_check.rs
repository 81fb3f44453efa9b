//! Verify analytic gradients against central finite differences for the MLP
//! and the LSTM classifier.
//!
//!     cargo run --release --example gradient_check

use std::collections::BTreeMap;

use legwork::autodiff::grad_check;
use legwork::data::Batch;
use legwork::models::{self, ModelSpec};
use legwork::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check(name: &str, spec: &ModelSpec, batch: &Batch) -> legwork::Result<()> {
    let params = models::build(spec, 0)?;
    let loss = models::loss(spec, &params, batch)?;
    let inputs: BTreeMap<String, Tensor> = params
        .iter()
        .map(|(n, t)| (n.clone(), t.clone()))
        .collect();
    let report = grad_check(&loss.graph, &inputs, loss.output, 1e-4)?;
    println!(
        "{name}: {} ({} parameters, max rel err {:.3e})",
        if report.passed() { "ok" } else { "FAILED" },
        params.element_count(),
        report.max_rel_error
    );
    for (input, err) in &report.per_input {
        println!("    {input:<16} {err:.3e}");
    }
    Ok(())
}

fn main() -> legwork::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut random_batch = |b: usize, d: usize, classes: u32| Batch {
        inputs: Tensor::new(vec![b, d], (0..b * d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .expect("consistent dims"),
        labels: (0..b).map(|i| i as u32 % classes).collect(),
    };

    let mlp = ModelSpec::Mlp {
        layers: vec![20, 16, 10],
    };
    let batch = random_batch(3, 20, 10);
    check("mlp 20-16-10", &mlp, &batch)?;

    let lstm = ModelSpec::LstmClassifier {
        input: 6,
        transform: 8,
        hidden: 12,
        classes: 5,
        seq_len: 5,
    };
    let batch = random_batch(2, 30, 5);
    check("lstm classifier (hidden 12)", &lstm, &batch)?;
    Ok(())
}
