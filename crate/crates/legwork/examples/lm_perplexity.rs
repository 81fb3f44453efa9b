//! Tokenize a tiny corpus and fit the two-layer LSTM language model,
//! reporting perplexity (exp of mean next-token cross-entropy) against the
//! unigram baseline.
//!
//!     cargo run --release --example lm_perplexity [corpus.txt]
//!
//! Without an argument a small synthetic corpus with predictable structure
//! is generated in memory.

use std::collections::BTreeMap;

use legwork::data::{tokenize_corpus, Dataset};
use legwork::harness::evaluate;
use legwork::models::{self, ModelSpec};
use legwork::optim::{self, OptimizerConfig, OptimizerKind, OptimizerState};
use legwork::schedule::{DecaySpec, ScheduleSpec};

fn synthetic_corpus() -> String {
    // cyclic phrases: the next token is predictable from two of context
    let phrases = ["the cat sat on the mat", "a dog ran to the park", "the bird flew over a tree"];
    let mut text = String::new();
    for i in 0..240 {
        text.push_str(phrases[i % phrases.len()]);
        text.push(' ');
    }
    text
}

fn unigram_perplexity(d: &Dataset) -> f64 {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &l in d.labels() {
        *counts.entry(l).or_insert(0) += 1;
    }
    let n = d.len() as f64;
    let entropy: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    entropy.exp()
}

fn main() -> legwork::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => synthetic_corpus(),
    };
    let seq_len = 4;
    let corpus = tokenize_corpus(&text, 50, seq_len)?;
    println!(
        "corpus: {} windows, vocab {} (+unk), unk rate {:.4}",
        corpus.dataset.len(),
        corpus.vocab.len(),
        corpus.unk_rate
    );
    println!("unigram-baseline perplexity: {:.3}", unigram_perplexity(&corpus.dataset));

    let spec = ModelSpec::LstmLm {
        embed: 16,
        hidden: 24,
        layers: 2,
        vocab: corpus.vocab.len() + 1,
        seq_len,
    };
    let mut params = models::build(&spec, 3)?;
    let mut state = OptimizerState::new(
        OptimizerConfig {
            clip_norm: Some(5.0),
            ..OptimizerConfig::new(OptimizerKind::Adam)
        },
        &params,
    );
    let schedule = ScheduleSpec::new(
        32,
        0.01,
        0.5,
        DecaySpec::Exponential {
            decay_rate: 0.8,
            start_epoch: 10.0,
        },
        20.0,
        corpus.dataset.len() as u64,
    )?;

    let mut iteration = 0u64;
    let total = schedule.total_iterations();
    'train: for epoch in 0.. {
        for batch in corpus.dataset.epoch_batches(32, 9, epoch, true)? {
            if iteration >= total {
                break 'train;
            }
            let lr = schedule.lr_at(iteration)?;
            let loss = models::loss(&spec, &params, &batch)?;
            let grads = loss.gradients()?;
            let (p, s) = optim::step(&state, &params, &grads, lr)?;
            params = p;
            state = s;
            iteration += 1;
        }
        let ppl = evaluate(&spec, &params, &corpus.dataset, 256)?;
        println!("epoch {:>2}: perplexity {ppl:.3}", epoch + 1);
    }
    Ok(())
}
