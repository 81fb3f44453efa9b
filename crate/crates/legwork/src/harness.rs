//! Experiment runner: binds a TOML config to (model, dataset, optimizer,
//! schedule, probe), executes seeded training runs and batch-size sweeps,
//! and emits metrics/schedule/probe CSVs plus a JSON summary.

use std::collections::BTreeMap;
use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset};
use crate::error::{Error, Result};
use crate::models::{self, ModelSpec, ParameterSet};
use crate::optim::{self, OptimizerConfig, OptimizerState};
use crate::probe::{self, GradientSource, PeakStats, ProbeConfig, ProbeTrace};
use crate::schedule::{write_schedule_csv, DecaySpec, Ratio, ScalingRule, ScheduleSpec};
use crate::tensor::Tensor;

/// Everything needed to reproduce a run. Every field has a default except
/// the dataset description and the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    pub data: DataConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub probe: ProbeSection,
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Record wall-clock milliseconds in metrics.csv. Turn off to make the
    /// file bitwise reproducible across executions.
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Batch size used for held-out evaluation (defaults to 512).
    #[serde(default = "default_eval_batch")]
    pub eval_batch_size: usize,
}

fn default_model() -> ModelSpec {
    ModelSpec::Mlp {
        layers: vec![784, 32, 10],
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_true() -> bool {
    true
}

fn default_eval_batch() -> usize {
    512
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }
}

/// Dataset source. `train_n`/`test_n` carve the (optionally subsetted)
/// dataset into a train split and a held-out split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    MnistIdx {
        images: PathBuf,
        labels: PathBuf,
        /// Take this many samples (after a seeded permutation) before
        /// splitting; 0 keeps everything.
        #[serde(default)]
        subset: usize,
        #[serde(default = "default_subset_seed")]
        subset_seed: u64,
        train_n: usize,
        test_n: usize,
    },
    Corpus {
        path: PathBuf,
        vocab_limit: usize,
        train_n: usize,
        test_n: usize,
    },
    SyntheticLinear {
        n: usize,
        dim: usize,
        #[serde(default = "default_margin")]
        margin: f64,
        #[serde(default)]
        data_seed: u64,
        train_n: usize,
        test_n: usize,
    },
    SyntheticBlobs {
        n: usize,
        dim: usize,
        classes: usize,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default)]
        data_seed: u64,
        train_n: usize,
        test_n: usize,
    },
}

fn default_subset_seed() -> u64 {
    1
}

fn default_margin() -> f64 {
    0.05
}

fn default_spread() -> f64 {
    0.3
}

/// Schedule half of the config. The learning rate is given either as a
/// plain `base_lr` or as `lr_coeff * 2^lr_log2` (half-integer `lr_log2`),
/// the form that keeps power-of-two rates exact under scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub batch_size: u64,
    pub base_lr: Option<f64>,
    pub lr_log2: Option<f64>,
    pub lr_coeff: f64,
    pub warmup_epochs: f64,
    pub total_epochs: f64,
    pub decay: DecaySpec,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            batch_size: 32,
            base_lr: Some(0.1),
            lr_log2: None,
            lr_coeff: 1.0,
            warmup_epochs: 0.0,
            total_epochs: 3.0,
            decay: DecaySpec::Constant,
        }
    }
}

impl ScheduleConfig {
    pub fn to_spec(&self, dataset_size: u64) -> Result<ScheduleSpec> {
        match (self.base_lr, self.lr_log2) {
            (Some(lr), None) => ScheduleSpec::new(
                self.batch_size,
                lr,
                self.warmup_epochs,
                self.decay.clone(),
                self.total_epochs,
                dataset_size,
            ),
            (None, Some(log2)) => ScheduleSpec::with_pow2_lr(
                self.batch_size,
                self.lr_coeff,
                log2,
                self.warmup_epochs,
                self.decay.clone(),
                self.total_epochs,
                dataset_size,
            ),
            (Some(_), Some(_)) => Err(Error::config(
                "schedule.base_lr and schedule.lr_log2 are mutually exclusive",
            )),
            (None, None) => Err(Error::config(
                "schedule needs either base_lr or lr_log2",
            )),
        }
    }
}

/// Batch-size factors for `sweep`, as integers or "N/D" strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactorValue {
    Int(u64),
    Text(String),
}

impl FactorValue {
    pub fn to_ratio(&self) -> Result<Ratio> {
        match self {
            FactorValue::Int(k) => Ratio::int(*k),
            FactorValue::Text(s) => s.parse(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub factors: Vec<FactorValue>,
    pub rule: ScalingRule,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            factors: Vec::new(),
            rule: ScalingRule::Sqrt,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub enabled: bool,
    pub epsilon: f64,
    pub batch_size: usize,
    pub every: u64,
    pub seed: u64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        let cfg = ProbeConfig::default();
        ProbeSection {
            enabled: false,
            epsilon: cfg.epsilon,
            batch_size: cfg.probe_batch_size,
            every: cfg.probe_every,
            seed: cfg.seed,
        }
    }
}

impl ProbeSection {
    fn to_config(&self) -> ProbeConfig {
        ProbeConfig {
            epsilon: self.epsilon,
            probe_batch_size: self.batch_size,
            probe_every: self.every,
            seed: self.seed,
        }
    }
}

/// One metrics row. `lr` always equals `ScheduleSpec::lr_at(iteration)`;
/// `metric` is filled on epoch-end rows; `ms` is cumulative wall-clock.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub iteration: u64,
    pub epoch: f64,
    pub lr: f64,
    pub loss: f64,
    pub metric: Option<f64>,
    pub ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub model_id: String,
    pub metric_kind: &'static str,
    pub seed: u64,
    pub batch_size: u64,
    pub base_lr: f64,
    pub warmup_epochs: f64,
    pub total_iterations: u64,
    pub final_loss: f64,
    pub final_metric: Option<f64>,
    pub diverged: bool,
    pub divergence_iteration: Option<u64>,
    pub wall_ms: u64,
    pub probe_peak: Option<PeakStats>,
}

pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub summary: RunSummary,
    pub probe_trace: Option<ProbeTrace>,
    pub schedule_spec: ScheduleSpec,
    pub final_params: ParameterSet,
}

/// Short human-readable architecture tag for summaries and trace metadata.
pub fn model_id(spec: &ModelSpec) -> String {
    match spec {
        ModelSpec::Mlp { layers } => {
            let dims: Vec<String> = layers.iter().map(|d| d.to_string()).collect();
            format!("mlp-{}", dims.join("x"))
        }
        ModelSpec::LstmClassifier {
            input,
            transform,
            hidden,
            classes,
            seq_len,
        } => format!("lstm-cls-{input}x{seq_len}-t{transform}-h{hidden}-c{classes}"),
        ModelSpec::LstmLm {
            embed,
            hidden,
            layers,
            vocab,
            seq_len,
        } => format!("lstm-lm-e{embed}-h{hidden}-l{layers}-v{vocab}-s{seq_len}"),
    }
}

/// Load and split the dataset named by the config.
pub fn load_data(config: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let (full, train_n, test_n) = match &config.data {
        DataConfig::MnistIdx {
            images,
            labels,
            subset,
            subset_seed,
            train_n,
            test_n,
        } => {
            let mut d = data::load_mnist_idx(images, labels)?;
            if *subset > 0 {
                d = d.seeded_subset(*subset, *subset_seed)?;
            }
            (d, *train_n, *test_n)
        }
        DataConfig::Corpus {
            path,
            vocab_limit,
            train_n,
            test_n,
        } => {
            let seq_len = match &config.model {
                ModelSpec::LstmLm { seq_len, .. } => *seq_len,
                other => {
                    return Err(Error::config(format!(
                        "corpus data requires an lstm-lm model, got {}",
                        model_id(other)
                    )))
                }
            };
            let text = std::fs::read_to_string(path)?;
            let corpus = data::tokenize_corpus(&text, *vocab_limit, seq_len)?;
            (corpus.dataset, *train_n, *test_n)
        }
        DataConfig::SyntheticLinear {
            n,
            dim,
            margin,
            data_seed,
            train_n,
            test_n,
        } => (
            data::synthetic_linear(*n, *dim, *margin, *data_seed)?,
            *train_n,
            *test_n,
        ),
        DataConfig::SyntheticBlobs {
            n,
            dim,
            classes,
            spread,
            data_seed,
            train_n,
            test_n,
        } => (
            data::synthetic_blobs(*n, *dim, *classes, *spread, *data_seed)?,
            *train_n,
            *test_n,
        ),
    };
    if train_n + test_n > full.len() {
        return Err(Error::config(format!(
            "train_n + test_n = {} exceeds the {} available samples",
            train_n + test_n,
            full.len()
        )));
    }
    let (head, _) = if train_n + test_n < full.len() {
        full.split(train_n + test_n)?
    } else {
        (full, Dataset::new(Tensor::zeros(&[1, 1]), vec![0], 1)?)
    };
    head.split(train_n)
}

/// Evaluate the held-out metric: accuracy for classifiers, perplexity
/// (exp of mean token cross-entropy) for language models.
pub fn evaluate(
    spec: &ModelSpec,
    params: &ParameterSet,
    dataset: &Dataset,
    eval_batch: usize,
) -> Result<f64> {
    let n = dataset.len();
    let b = eval_batch.max(1);
    if spec.is_language_model() {
        let mut total_loss = 0.0;
        let mut total = 0usize;
        let mut start = 0usize;
        while start < n {
            let end = (start + b).min(n);
            let idx: Vec<u32> = (start as u32..end as u32).collect();
            let batch = dataset.gather(&idx);
            let l = models::loss(spec, params, &batch)?;
            total_loss += l.loss * (end - start) as f64;
            total += end - start;
            start = end;
        }
        Ok((total_loss / total as f64).exp())
    } else {
        let mut correct = 0usize;
        let mut start = 0usize;
        while start < n {
            let end = (start + b).min(n);
            let idx: Vec<u32> = (start as u32..end as u32).collect();
            let batch = dataset.gather(&idx);
            let preds = models::predict(spec, params, &batch)?;
            correct += preds
                .iter()
                .zip(&batch.labels)
                .filter(|(p, l)| p == l)
                .count();
            start = end;
        }
        Ok(correct as f64 / n as f64)
    }
}

/// Gradient oracle over a fixed probe batch; reads parameters, never writes.
struct ProbeGradSource<'a> {
    spec: &'a ModelSpec,
    template: &'a ParameterSet,
    batch: data::Batch,
}

impl GradientSource for ProbeGradSource<'_> {
    fn gradient(&self, values: &[Tensor]) -> Result<Vec<Tensor>> {
        let params = self.template.from_values(values.to_vec())?;
        let grads = optim::mini_batch_gradient(self.spec, &params, &self.batch)?;
        Ok(grads.into_values().collect())
    }
}

/// Execute one training run. A NaN loss terminates the run with a
/// divergence record in the summary (the CLI maps that to its own exit
/// status); hard errors are returned as `Err`.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let (train, test) = load_data(config)?;
    let spec = config.schedule.to_spec(train.len() as u64)?;
    run_prepared(config, &train, &test, spec)
}

/// Run with data and schedule already prepared (shared by `run`, `run_sweep`
/// and `tune_grid`).
pub fn run_prepared(
    config: &ExperimentConfig,
    train: &Dataset,
    test: &Dataset,
    spec: ScheduleSpec,
) -> Result<RunOutput> {
    config.model.validate()?;
    if config.model.input_dim() != train.feature_dim() {
        return Err(Error::ShapeMismatch {
            context: "model input vs dataset features".into(),
            expected: vec![config.model.input_dim()],
            found: vec![train.feature_dim()],
        });
    }

    let start = Instant::now();
    let clock = |timing: bool| -> u64 {
        if timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        }
    };

    let mut params = models::build(&config.model, config.seed)?;
    let template = params.clone();
    let mut opt = OptimizerState::new(config.optimizer, &params);

    let probe_source = if config.probe.enabled {
        config.probe.to_config().validate()?;
        let m = config.probe.batch_size.min(train.len());
        let probe_set = train.seeded_subset(m, config.probe.seed)?;
        let idx: Vec<u32> = (0..probe_set.len() as u32).collect();
        Some(ProbeGradSource {
            spec: &config.model,
            template: &template,
            batch: probe_set.gather(&idx),
        })
    } else {
        None
    };
    let probe_cfg = config.probe.to_config();
    let mut trace = ProbeTrace::new(spec.batch_size(), model_id(&config.model));

    let total = spec.total_iterations();
    let batch_size = spec.batch_size() as usize;
    let n = spec.dataset_size() as f64;
    let mut records: Vec<RunRecord> = Vec::with_capacity(total as usize);
    let mut iteration = 0u64;
    let mut epoch_idx = 0u64;
    let mut diverged_at: Option<(u64, f64)> = None;

    'training: while iteration < total {
        // drop_last keeps every executed iteration inside the schedule's
        // iteration budget
        for batch in train.epoch_batches(batch_size, config.seed, epoch_idx, true)? {
            if iteration >= total {
                break;
            }
            let lr = spec.lr_at(iteration)?;
            let loss_graph = models::loss(&config.model, &params, &batch)?;
            let loss = loss_graph.loss;
            let epoch = iteration as f64 * spec.batch_size() as f64 / n;
            if !loss.is_finite() {
                records.push(RunRecord {
                    iteration,
                    epoch,
                    lr,
                    loss,
                    metric: None,
                    ms: clock(config.timing),
                });
                diverged_at = Some((iteration, loss));
                break 'training;
            }
            if let Some(source) = &probe_source {
                probe::observe(&mut trace, &probe_cfg, iteration, &params.values(), source)?;
            }
            let grads = loss_graph.gradients()?;
            let (next_params, next_opt) = optim::step(&opt, &params, &grads, lr)?;
            params = next_params;
            opt = next_opt;
            records.push(RunRecord {
                iteration,
                epoch,
                lr,
                loss,
                metric: None,
                ms: clock(config.timing),
            });
            iteration += 1;
        }
        epoch_idx += 1;
        if diverged_at.is_none() {
            let metric = evaluate(&config.model, &params, test, config.eval_batch_size)?;
            if let Some(last) = records.last_mut() {
                last.metric = Some(metric);
                last.ms = clock(config.timing);
            }
        }
    }

    let final_metric = records.iter().rev().find_map(|r| r.metric);
    let probe_peak = if config.probe.enabled && !trace.entries.is_empty() {
        Some(probe::peak_statistics(&trace, probe::DEFAULT_PEAK_WINDOW)?)
    } else {
        None
    };
    let summary = RunSummary {
        model_id: model_id(&config.model),
        metric_kind: if config.model.is_language_model() {
            "perplexity"
        } else {
            "accuracy"
        },
        seed: config.seed,
        batch_size: spec.batch_size(),
        base_lr: spec.base_lr(),
        warmup_epochs: spec.warmup_epochs(),
        total_iterations: total,
        final_loss: records.last().map_or(f64::NAN, |r| r.loss),
        final_metric,
        diverged: diverged_at.is_some(),
        divergence_iteration: diverged_at.map(|(i, _)| i),
        wall_ms: clock(config.timing),
        probe_peak,
    };
    Ok(RunOutput {
        records,
        summary,
        probe_trace: if config.probe.enabled { Some(trace) } else { None },
        schedule_spec: spec,
        final_params: params,
    })
}

pub struct SweepRun {
    pub factor: Ratio,
    pub output: RunOutput,
}

/// Scale the base schedule by each sweep factor and run every derived
/// config with all other hyperparameters held fixed. Runs execute
/// concurrently (they share no mutable state); per-run divergences are
/// recorded in their summaries and the sweep continues.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRun>> {
    let factors: Vec<Ratio> = config
        .sweep
        .factors
        .iter()
        .map(FactorValue::to_ratio)
        .collect::<Result<_>>()?;
    if factors.is_empty() {
        return Err(Error::config("sweep.factors is empty"));
    }
    let (train, test) = load_data(config)?;
    let base = config.schedule.to_spec(train.len() as u64)?;
    let specs = base.sweep(&factors, config.sweep.rule)?;

    let mut outputs: Vec<Option<Result<RunOutput>>> = Vec::new();
    outputs.resize_with(specs.len(), || None);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for spec in &specs {
            let train = &train;
            let test = &test;
            let spec = spec.clone();
            handles.push(scope.spawn(move || run_prepared(config, train, test, spec)));
        }
        for (slot, handle) in outputs.iter_mut().zip(handles) {
            *slot = Some(handle.join().expect("run thread panicked"));
        }
    });

    let mut runs = Vec::new();
    for (factor, output) in factors.into_iter().zip(outputs) {
        runs.push(SweepRun {
            factor,
            output: output.expect("slot filled")?,
        });
    }
    Ok(runs)
}

pub struct TuneResult {
    pub lr: f64,
    pub summary: RunSummary,
}

pub struct TuneOutput {
    pub best_lr: f64,
    pub best_metric: f64,
    pub results: Vec<TuneResult>,
}

/// Run every learning rate in `grid` with an identical seed and return the
/// best by final eval metric (max accuracy / min perplexity; ties go to the
/// smaller rate). Errors if every run diverged.
pub fn tune_grid(config: &ExperimentConfig, grid: &[f64]) -> Result<TuneOutput> {
    if grid.is_empty() {
        return Err(Error::config("empty learning-rate grid"));
    }
    let (train, test) = load_data(config)?;
    let minimize = config.model.is_language_model();

    let mut results = Vec::new();
    for &lr in grid {
        let mut sched = config.schedule.clone();
        sched.base_lr = Some(lr);
        sched.lr_log2 = None;
        let spec = sched.to_spec(train.len() as u64)?;
        let output = run_prepared(config, &train, &test, spec)?;
        results.push(TuneResult {
            lr,
            summary: output.summary,
        });
    }

    let mut best: Option<(f64, f64)> = None; // (lr, metric)
    let mut order: Vec<&TuneResult> = results.iter().collect();
    order.sort_by(|a, b| a.lr.total_cmp(&b.lr));
    for r in order {
        if r.summary.diverged {
            continue;
        }
        let Some(metric) = r.summary.final_metric else {
            continue;
        };
        let better = match best {
            None => true,
            Some((_, m)) => {
                if minimize {
                    metric < m
                } else {
                    metric > m
                }
            }
        };
        if better {
            best = Some((r.lr, metric));
        }
    }
    let (best_lr, best_metric) =
        best.ok_or_else(|| Error::invalid("every run in the grid diverged"))?;
    Ok(TuneOutput {
        best_lr,
        best_metric,
        results,
    })
}

// ---- file outputs -----------------------------------------------------------

pub fn write_metrics_csv(records: &[RunRecord], out: &mut impl IoWrite) -> Result<()> {
    writeln!(out, "iteration,epoch,lr,loss,metric,ms")?;
    for r in records {
        let metric = r.metric.map(|m| m.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iteration, r.epoch, r.lr, r.loss, metric, r.ms
        )?;
    }
    Ok(())
}

/// Write metrics.csv, schedule.csv, probe.csv (when probing) and
/// summary.json into `dir`.
pub fn write_outputs(dir: &Path, output: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut metrics = Vec::new();
    write_metrics_csv(&output.records, &mut metrics)?;
    std::fs::write(dir.join("metrics.csv"), metrics)?;

    let mut sched = Vec::new();
    write_schedule_csv(&output.schedule_spec, &mut sched)?;
    std::fs::write(dir.join("schedule.csv"), sched)?;

    if let Some(trace) = &output.probe_trace {
        let mut buf = Vec::new();
        probe::write_probe_csv(trace, &mut buf)?;
        std::fs::write(dir.join("probe.csv"), buf)?;
    }

    let json = serde_json::to_string_pretty(&output.summary)
        .map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(dir.join("summary.json"), json)?;
    Ok(())
}

/// Comparison table for a sweep: one row per batch size.
pub fn write_sweep_csv(runs: &[SweepRun], out: &mut impl IoWrite) -> Result<()> {
    writeln!(out, "factor,batch_size,base_lr,warmup_epochs,metric,diverged")?;
    for run in runs {
        let s = &run.output.summary;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            run.factor,
            s.batch_size,
            s.base_lr,
            s.warmup_epochs,
            s.final_metric.map(|m| m.to_string()).unwrap_or_default(),
            s.diverged
        )?;
    }
    Ok(())
}

pub fn write_sweep_outputs(dir: &Path, runs: &[SweepRun]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for run in runs {
        let sub = dir.join(format!("b{}", run.output.summary.batch_size));
        write_outputs(&sub, &run.output)?;
    }
    let mut buf = Vec::new();
    write_sweep_csv(runs, &mut buf)?;
    std::fs::write(dir.join("sweep.csv"), buf)?;
    let summaries: Vec<&RunSummary> = runs.iter().map(|r| &r.output.summary).collect();
    let json = serde_json::to_string_pretty(&summaries)
        .map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(dir.join("sweep_summary.json"), json)?;
    Ok(())
}

/// Gradient oracle access for external probe drivers: the fixed-batch
/// gradient of the configured model at arbitrary parameter values.
pub fn probe_gradient(
    spec: &ModelSpec,
    template: &ParameterSet,
    batch: &data::Batch,
    values: &[Tensor],
) -> Result<Vec<Tensor>> {
    let params = template.from_values(values.to_vec())?;
    let grads: BTreeMap<String, Tensor> = optim::mini_batch_gradient(spec, &params, batch)?;
    Ok(grads.into_values().collect())
}
