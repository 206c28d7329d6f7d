//! Source pretraining and the adaptation loops.
//!
//! Pretraining minimizes plain source cross-entropy. Adaptation continues
//! from a pretrained model and minimizes, per mini-batch step,
//!
//! ```text
//! lambda*CE(source) + lambda*CE(pseudo) + swd(target emb, pseudo) + swd(source emb, pseudo)
//! ```
//!
//! with a fresh projection set each step, or the two-term direct-alignment
//! baseline `lambda*CE(source) + swd(source emb, target emb)`.
//!
//! Mini-batches are equal-sized across datasets; each dataset cycles through
//! its own seeded shuffle stream independently. Everything is deterministic
//! given the config seed.
//!
//! Per-epoch records evaluate the objective on the full training splits
//! (subsampled to matched sizes for the transport terms) with one fixed
//! evaluation projection set per run, so learning curves are comparable
//! across epochs instead of inheriting mini-batch noise.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{subsample_indices, subsample_rows, Dataset};
use crate::error::{Error, Result};
use crate::gmm::GmmModel;
use crate::metrics::evaluate;
use crate::nn::{
    adam_step, compute_objective_and_gradients, init_model, objective_value, ArchSpec,
    ModelParams, ObjectiveBatch, ObjectiveSpec, OptimizerState, TermValues,
};
use crate::pseudo::{generate_pseudo, PseudoDataset};
use crate::rng;
use crate::swd::ProjectionSet;

/// Training stops once the relative epoch-objective change stays below
/// `rel_tol` for `patience` consecutive epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStopSpec {
    pub rel_tol: f64,
    pub patience: usize,
}

impl Default for EarlyStopSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-4, patience: 5 }
    }
}

/// Every scalar hyperparameter of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptConfig {
    /// Weight on both classification terms.
    pub lambda: f64,
    /// Confidence threshold for pseudo-dataset generation.
    pub tau: f64,
    /// Slice count for the transport terms.
    pub num_projections: usize,
    pub pretrain_epochs: usize,
    pub adapt_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Covariance regularization; `None` selects the data-driven default.
    pub cov_reg: Option<f64>,
    /// Estimate diagonal covariances only.
    pub diagonal_cov: bool,
    /// Pseudo-dataset size; `None` matches the source size.
    pub n_pseudo: Option<usize>,
    pub max_attempt_factor: usize,
    pub enable_source_ce: bool,
    pub enable_pseudo_ce: bool,
    pub enable_target_pseudo_swd: bool,
    pub enable_source_pseudo_swd: bool,
    /// Regenerate the pseudo-dataset at the start of every epoch instead of
    /// fixing it once before the loop. Experimental; off by default.
    pub regen_pseudo_each_epoch: bool,
    pub early_stop: Option<EarlyStopSpec>,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            tau: 0.95,
            num_projections: 100,
            pretrain_epochs: 200,
            adapt_epochs: 100,
            batch_size: 128,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            cov_reg: None,
            diagonal_cov: false,
            n_pseudo: None,
            max_attempt_factor: 100,
            enable_source_ce: true,
            enable_pseudo_ce: true,
            enable_target_pseudo_swd: true,
            enable_source_pseudo_swd: true,
            regen_pseudo_each_epoch: false,
            early_stop: Some(EarlyStopSpec::default()),
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(0.0 < self.tau && self.tau < 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if self.num_projections == 0 {
            return Err(Error::Config("num_projections must be >= 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config(format!(
                "batch_size must be >= 2, got {}",
                self.batch_size
            )));
        }
        if self.pretrain_epochs == 0 || self.adapt_epochs == 0 {
            return Err(Error::Config("epoch counts must be >= 1".into()));
        }
        if self.learning_rate < 0.0 {
            return Err(Error::Config("learning rate must be >= 0".into()));
        }
        Ok(())
    }
}

/// Which objective a report belongs to; fixes the meaning of the term
/// columns in the emitted CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Pretrain,
    Adaptation,
    Baseline,
}

/// Per-epoch mean objective values and accuracies.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-step total objective.
    pub total: f64,
    pub source_ce: f64,
    pub pseudo_ce: f64,
    pub swd_target_pseudo: f64,
    pub swd_source_pseudo: f64,
    pub swd_source_target: f64,
    pub source_accuracy: f64,
    /// Present when the target dataset carries evaluation labels.
    pub target_accuracy: Option<f64>,
}

/// Learning-curve data for one run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub kind: RunKind,
    pub epochs: Vec<EpochRecord>,
    /// In-memory only; never written to output files so reruns stay
    /// byte-identical.
    pub wall_time_secs: f64,
}

impl TrainReport {
    pub fn final_record(&self) -> &EpochRecord {
        self.epochs.last().expect("at least one epoch")
    }
}

/// Cycles through a dataset in seeded shuffled order, reshuffling whenever a
/// full batch no longer fits.
struct Cycler {
    order: Vec<usize>,
    pos: usize,
    rng: rand_chacha::ChaCha8Rng,
}

impl Cycler {
    fn new(n: usize, seed: u64) -> Self {
        let mut c = Cycler { order: (0..n).collect(), pos: 0, rng: rng::chacha(seed) };
        c.reshuffle();
        c
    }

    fn reshuffle(&mut self) {
        use rand::Rng;
        let n = self.order.len();
        for i in (1..n).rev() {
            let j = self.rng.random_range(0..=i);
            self.order.swap(i, j);
        }
        self.pos = 0;
    }

    fn next_batch(&mut self, batch: usize) -> &[usize] {
        if self.pos + batch > self.order.len() {
            self.reshuffle();
        }
        let slice = &self.order[self.pos..self.pos + batch];
        self.pos += batch;
        slice
    }
}

fn gather_rows(x: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((idx.len(), x.ncols()));
    for (row, &i) in idx.iter().enumerate() {
        out.row_mut(row).assign(&x.row(i));
    }
    out
}

fn gather_labels(labels: &[usize], idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|&i| labels[i]).collect()
}

fn record_from_terms(
    epoch: usize,
    total: f64,
    terms: &TermValues,
    source_accuracy: f64,
    target_accuracy: Option<f64>,
) -> EpochRecord {
    EpochRecord {
        epoch,
        total,
        source_ce: terms.source_ce,
        pseudo_ce: terms.pseudo_ce,
        swd_target_pseudo: terms.swd_target_pseudo,
        swd_source_pseudo: terms.swd_source_pseudo,
        swd_source_target: terms.swd_source_target,
        source_accuracy,
        target_accuracy,
    }
}

struct EarlyStopState {
    spec: Option<EarlyStopSpec>,
    prev: Option<f64>,
    streak: usize,
}

impl EarlyStopState {
    fn new(spec: Option<EarlyStopSpec>) -> Self {
        Self { spec, prev: None, streak: 0 }
    }

    /// Returns true when training should stop after this epoch.
    fn observe(&mut self, total: f64) -> bool {
        let Some(spec) = self.spec else { return false };
        let stop = if let Some(prev) = self.prev {
            let rel = (total - prev).abs() / prev.abs().max(1e-12);
            if rel < spec.rel_tol {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
            self.streak >= spec.patience
        } else {
            false
        };
        self.prev = Some(total);
        stop
    }
}

/// Pretrain on the labeled source domain: mini-batch cross-entropy with Adam
/// until `pretrain_epochs` or the loss stabilizes.
pub fn pretrain(
    config: &AdaptConfig,
    arch: &ArchSpec,
    source: &Dataset,
) -> Result<(ModelParams, TrainReport)> {
    config.validate()?;
    arch.validate()?;
    let labels = source.require_labels()?;
    if source.dim() != arch.input_dim {
        return Err(Error::Input(format!(
            "source has {} features, architecture expects {}",
            source.dim(),
            arch.input_dim
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= arch.num_classes) {
        return Err(Error::Input(format!(
            "source label {bad} out of range for {} classes",
            arch.num_classes
        )));
    }
    if config.batch_size > source.len() {
        return Err(Error::Config(format!(
            "batch_size {} exceeds the source size {}",
            config.batch_size,
            source.len()
        )));
    }

    let start = Instant::now();
    let mut params = init_model(arch, rng::derive(config.seed, "init"))?;
    let mut opt = OptimizerState::new(
        &params,
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.adam_eps,
    );
    let mut cycler = Cycler::new(source.len(), rng::derive(config.seed, "pretrain/shuffle"));
    let steps = (source.len() / config.batch_size).max(1);
    let spec = ObjectiveSpec::pretraining();

    let mut records = Vec::new();
    let mut stopper = EarlyStopState::new(config.early_stop);
    for epoch in 0..config.pretrain_epochs {
        for _ in 0..steps {
            let idx = cycler.next_batch(config.batch_size).to_vec();
            let xb = gather_rows(&source.x, &idx);
            let yb = gather_labels(labels, &idx);
            let batch = ObjectiveBatch { source: Some((xb.view(), &yb)), ..Default::default() };
            let (_, _, grads) = compute_objective_and_gradients(&params, &batch, &spec)
                .map_err(|e| annotate_epoch(e, epoch))?;
            adam_step(&mut params, &grads, &mut opt)?;
        }
        // epoch record: loss on the full training split
        let full = ObjectiveBatch { source: Some((source.x.view(), labels)), ..Default::default() };
        let (total, terms) =
            objective_value(&params, &full, &spec).map_err(|e| annotate_epoch(e, epoch))?;
        let src_acc = evaluate(&params, source)?.accuracy;
        records.push(record_from_terms(epoch, total, &terms, src_acc, None));
        if stopper.observe(total) {
            break;
        }
    }

    Ok((
        params,
        TrainReport {
            kind: RunKind::Pretrain,
            epochs: records,
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
    ))
}

fn annotate_epoch(e: Error, epoch: usize) -> Error {
    match e {
        Error::Numerical(msg) => Error::Numerical(format!("epoch {epoch}: {msg}")),
        other => other,
    }
}

enum PseudoSource<'a> {
    Fixed(&'a PseudoDataset),
    Regen(&'a GmmModel),
    Unused,
}

/// Adapt with the four-term objective against a fixed pseudo-dataset.
pub fn adapt_imuda(
    params: &ModelParams,
    source: &Dataset,
    target: &Dataset,
    pseudo: &PseudoDataset,
    config: &AdaptConfig,
) -> Result<(ModelParams, TrainReport)> {
    run_adaptation(params, source, target, PseudoSource::Fixed(pseudo), config, RunKind::Adaptation)
}

/// Adapt with per-epoch pseudo-dataset regeneration from the mixture and the
/// current classifier (set `regen_pseudo_each_epoch`; experimental).
pub fn adapt_imuda_regen(
    params: &ModelParams,
    source: &Dataset,
    target: &Dataset,
    gmm: &GmmModel,
    config: &AdaptConfig,
) -> Result<(ModelParams, TrainReport)> {
    run_adaptation(params, source, target, PseudoSource::Regen(gmm), config, RunKind::Adaptation)
}

/// Two-term direct source-target alignment baseline (no pseudo-dataset).
pub fn adapt_baseline_swd(
    params: &ModelParams,
    source: &Dataset,
    target: &Dataset,
    config: &AdaptConfig,
) -> Result<(ModelParams, TrainReport)> {
    run_adaptation(params, source, target, PseudoSource::Unused, config, RunKind::Baseline)
}

fn run_adaptation(
    params: &ModelParams,
    source: &Dataset,
    target: &Dataset,
    pseudo_source: PseudoSource<'_>,
    config: &AdaptConfig,
    kind: RunKind,
) -> Result<(ModelParams, TrainReport)> {
    config.validate()?;
    let labels = source.require_labels()?;
    let d = params.arch.input_dim;
    if source.dim() != d || target.dim() != d {
        return Err(Error::Input(format!(
            "source/target have {}/{} features, model expects {d}",
            source.dim(),
            target.dim()
        )));
    }

    let uses_pseudo = kind == RunKind::Adaptation;
    let start = Instant::now();
    let mut model = params.clone();
    let mut opt = OptimizerState::new(
        &model,
        config.learning_rate,
        config.beta1,
        config.beta2,
        config.adam_eps,
    );

    let spec = match kind {
        RunKind::Adaptation => ObjectiveSpec::adaptation(
            config.lambda,
            config.enable_source_ce,
            config.enable_pseudo_ce,
            config.enable_target_pseudo_swd,
            config.enable_source_pseudo_swd,
        ),
        RunKind::Baseline => ObjectiveSpec::baseline(config.lambda),
        RunKind::Pretrain => unreachable!("pretraining has its own loop"),
    };

    let mut pseudo_owned: Option<PseudoDataset> = None;
    let mut pseudo: Option<&PseudoDataset> = None;
    if let PseudoSource::Fixed(p) = pseudo_source {
        if p.is_empty() {
            return Err(Error::Input("pseudo-dataset is empty".into()));
        }
        if p.dim() != model.embedding_dim() {
            return Err(Error::Input(format!(
                "pseudo points have dimension {}, embedding space is {}",
                p.dim(),
                model.embedding_dim()
            )));
        }
        pseudo = Some(p);
    }

    let check_batch = |n_pseudo: Option<usize>| -> Result<()> {
        let mut smallest = source.len().min(target.len());
        if let Some(np) = n_pseudo {
            smallest = smallest.min(np);
        }
        if config.batch_size > smallest {
            return Err(Error::Config(format!(
                "batch_size {} exceeds the smallest dataset ({smallest} rows)",
                config.batch_size
            )));
        }
        Ok(())
    };
    check_batch(pseudo.map(|p| p.len()))?;

    let steps = (source.len() / config.batch_size).max(1);
    let mut src_cycler = Cycler::new(source.len(), rng::derive(config.seed, "adapt/shuffle/source"));
    let mut tgt_cycler = Cycler::new(target.len(), rng::derive(config.seed, "adapt/shuffle/target"));
    let mut pseudo_cycler: Option<Cycler> =
        pseudo.map(|p| Cycler::new(p.len(), rng::derive(config.seed, "adapt/shuffle/pseudo")));

    // one fixed projection set for all per-epoch evaluations
    let eval_proj = ProjectionSet::sample(
        model.embedding_dim(),
        config.num_projections,
        rng::derive(config.seed, "adapt/eval-projections"),
    )?;

    let mut records = Vec::new();
    let mut stopper = EarlyStopState::new(config.early_stop);
    let mut global_step = 0u64;

    for epoch in 0..config.adapt_epochs {
        if let PseudoSource::Regen(gmm) = &pseudo_source {
            if epoch == 0 || config.regen_pseudo_each_epoch {
                let n_target = config.n_pseudo.unwrap_or_else(|| source.len());
                let regen = generate_pseudo(
                    gmm,
                    &model,
                    config.tau,
                    n_target,
                    config.max_attempt_factor,
                    rng::derive_indexed(config.seed, "adapt/pseudo-regen", epoch as u64),
                )?;
                check_batch(Some(regen.len()))?;
                pseudo_cycler = Some(Cycler::new(
                    regen.len(),
                    rng::derive_indexed(config.seed, "adapt/shuffle/pseudo", epoch as u64),
                ));
                pseudo_owned = Some(regen);
            }
        }
        let epoch_pseudo: Option<&PseudoDataset> = pseudo.or(pseudo_owned.as_ref());

        for _ in 0..steps {
            let idx_s = src_cycler.next_batch(config.batch_size).to_vec();
            let xs = gather_rows(&source.x, &idx_s);
            let ys = gather_labels(labels, &idx_s);
            let idx_t = tgt_cycler.next_batch(config.batch_size).to_vec();
            let xt = gather_rows(&target.x, &idx_t);

            let (zp, yp) = if let (Some(p), Some(cycler)) = (epoch_pseudo, pseudo_cycler.as_mut())
            {
                let idx_p = cycler.next_batch(config.batch_size).to_vec();
                (gather_rows(&p.z, &idx_p), gather_labels(&p.labels, &idx_p))
            } else {
                (Array2::zeros((0, model.embedding_dim())), vec![])
            };

            let proj = ProjectionSet::sample(
                model.embedding_dim(),
                config.num_projections,
                rng::derive_indexed(config.seed, "adapt/projections", global_step),
            )?;
            let batch = ObjectiveBatch {
                source: Some((xs.view(), &ys)),
                target: Some(xt.view()),
                pseudo: uses_pseudo.then_some((zp.view(), yp.as_slice())),
                projections: Some(&proj),
            };
            let (_, _, grads) = compute_objective_and_gradients(&model, &batch, &spec)
                .map_err(|e| annotate_epoch(e, epoch))?;
            adam_step(&mut model, &grads, &mut opt)?;
            global_step += 1;
        }

        // epoch record: objective on the full splits, subsampled to matched
        // sizes for the transport terms, under the fixed evaluation slices
        let mut m = source.len().min(target.len());
        if let Some(p) = epoch_pseudo {
            m = m.min(p.len());
        }
        let src_idx = subsample_indices(source.len(), m, rng::derive(config.seed, "adapt/eval/source"));
        let xs_eval = gather_rows(&source.x, &src_idx);
        let ys_eval = gather_labels(labels, &src_idx);
        let xt_eval = subsample_rows(&target.x, m, rng::derive(config.seed, "adapt/eval/target"));
        let pseudo_eval = epoch_pseudo.map(|p| {
            let idx = subsample_indices(p.len(), m, rng::derive(config.seed, "adapt/eval/pseudo"));
            (gather_rows(&p.z, &idx), gather_labels(&p.labels, &idx))
        });
        let full = ObjectiveBatch {
            source: Some((xs_eval.view(), &ys_eval)),
            target: Some(xt_eval.view()),
            pseudo: pseudo_eval.as_ref().map(|(z, y)| (z.view(), y.as_slice())),
            projections: Some(&eval_proj),
        };
        let (total, terms) =
            objective_value(&model, &full, &spec).map_err(|e| annotate_epoch(e, epoch))?;

        let src_acc = evaluate(&model, source)?.accuracy;
        let tgt_acc = if target.labels.is_some() {
            Some(evaluate(&model, target)?.accuracy)
        } else {
            None
        };
        records.push(record_from_terms(epoch, total, &terms, src_acc, tgt_acc));
        if stopper.observe(total) {
            break;
        }
    }

    Ok((
        model,
        TrainReport { kind, epochs: records, wall_time_secs: start.elapsed().as_secs_f64() },
    ))
}

// --- report files ------------------------------------------------------------

/// CSV layout: `epoch,total,term1,term2,term3,term4,src_acc,tgt_acc`.
///
/// Term columns follow the run's objective: for adaptation runs they are
/// source CE, pseudo CE, target-pseudo alignment, source-pseudo alignment;
/// for the baseline, term1 is source CE and term2 the source-target
/// alignment; for pretraining only term1 is nonzero.
pub fn report_to_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,total,term1,term2,term3,term4,src_acc,tgt_acc\n");
    for r in &report.epochs {
        let (t1, t2, t3, t4) = match report.kind {
            RunKind::Adaptation | RunKind::Pretrain => {
                (r.source_ce, r.pseudo_ce, r.swd_target_pseudo, r.swd_source_pseudo)
            }
            RunKind::Baseline => (r.source_ce, r.swd_source_target, 0.0, 0.0),
        };
        let tgt = r.target_accuracy.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.epoch, r.total, t1, t2, t3, t4, r.source_accuracy, tgt
        );
    }
    out
}

pub fn write_report_csv(report: &TrainReport, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, report_to_csv(report))?;
    Ok(())
}

/// Short structured-text summary of a run (deterministic; no timings).
pub fn report_summary(report: &TrainReport) -> String {
    let last = report.final_record();
    let kind = match report.kind {
        RunKind::Pretrain => "pretrain",
        RunKind::Adaptation => "adaptation",
        RunKind::Baseline => "baseline-swd",
    };
    let mut out = String::new();
    let _ = writeln!(out, "kind = \"{kind}\"");
    let _ = writeln!(out, "epochs_run = {}", report.epochs.len());
    let _ = writeln!(out, "final_total = {}", last.total);
    let _ = writeln!(out, "final_source_ce = {}", last.source_ce);
    let _ = writeln!(out, "final_pseudo_ce = {}", last.pseudo_ce);
    let _ = writeln!(out, "final_swd_target_pseudo = {}", last.swd_target_pseudo);
    let _ = writeln!(out, "final_swd_source_pseudo = {}", last.swd_source_pseudo);
    let _ = writeln!(out, "final_swd_source_target = {}", last.swd_source_target);
    let _ = writeln!(out, "final_source_accuracy = {}", last.source_accuracy);
    if let Some(t) = last.target_accuracy {
        let _ = writeln!(out, "final_target_accuracy = {t}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_blobs, ShiftSpec};
    use crate::nn::Activation;

    fn small_arch() -> ArchSpec {
        ArchSpec {
            input_dim: 2,
            hidden_dims: vec![16],
            embedding_dim: 4,
            num_classes: 2,
            activation: Activation::Relu,
        }
    }

    fn fast_config(seed: u64) -> AdaptConfig {
        AdaptConfig {
            seed,
            pretrain_epochs: 40,
            adapt_epochs: 10,
            batch_size: 32,
            num_projections: 20,
            ..Default::default()
        }
    }

    #[test]
    fn pretraining_separable_blobs_reaches_high_accuracy() {
        let (src, _) = gen_blobs(2, 100, 10.0, &ShiftSpec::Scaling(1.0), 2, 3).unwrap();
        let (params, report) = pretrain(&fast_config(1), &small_arch(), &src).unwrap();
        let acc = evaluate(&params, &src).unwrap().accuracy;
        assert!(acc >= 0.99, "source accuracy {acc}");
        assert_eq!(report.kind, RunKind::Pretrain);
        assert!(report.epochs.len() <= 40);
    }

    #[test]
    fn zero_learning_rate_leaves_init_unchanged() {
        let (src, _) = gen_blobs(2, 50, 8.0, &ShiftSpec::Scaling(1.0), 2, 5).unwrap();
        let mut config = fast_config(2);
        config.learning_rate = 0.0;
        config.pretrain_epochs = 1;
        config.early_stop = None;
        let (params, _) = pretrain(&config, &small_arch(), &src).unwrap();
        let fresh = init_model(&small_arch(), rng::derive(2, "init")).unwrap();
        assert_eq!(params, fresh);
    }

    #[test]
    fn pretraining_is_deterministic() {
        let (src, _) = gen_blobs(2, 60, 8.0, &ShiftSpec::Scaling(1.0), 2, 7).unwrap();
        let (a, _) = pretrain(&fast_config(3), &small_arch(), &src).unwrap();
        let (b, _) = pretrain(&fast_config(3), &small_arch(), &src).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_terms_disabled_is_a_no_op() {
        let (src, tgt) = gen_blobs(2, 40, 8.0, &ShiftSpec::Rotation(30.0), 2, 9).unwrap();
        let mut config = fast_config(4);
        config.enable_source_ce = false;
        config.enable_pseudo_ce = false;
        config.enable_target_pseudo_swd = false;
        config.enable_source_pseudo_swd = false;
        config.adapt_epochs = 3;
        config.early_stop = None;
        let params = init_model(&small_arch(), 11).unwrap();
        let pseudo = PseudoDataset {
            z: Array2::zeros((40, 4)),
            labels: vec![0; 40],
            confidences: vec![1.0; 40],
            tau: 0.5,
            acceptance_rate: 1.0,
            missing_classes: vec![],
        };
        let (adapted, report) = adapt_imuda(&params, &src, &tgt, &pseudo, &config).unwrap();
        assert_eq!(adapted, params);
        for r in &report.epochs {
            assert_eq!(r.total, 0.0);
        }
    }

    #[test]
    fn baseline_with_zero_lambda_and_identical_batches_is_a_no_op() {
        let (src, _) = gen_blobs(2, 32, 8.0, &ShiftSpec::Scaling(1.0), 2, 13).unwrap();
        let mut config = fast_config(5);
        config.lambda = 0.0;
        config.batch_size = 32 * 2; // full batch: source and target batches coincide as sets
        config.adapt_epochs = 3;
        config.early_stop = None;
        let params = init_model(&small_arch(), 15).unwrap();
        let (adapted, report) = adapt_baseline_swd(&params, &src, &src.without_labels(), &config).unwrap();
        assert_eq!(adapted, params);
        for r in &report.epochs {
            assert_eq!(r.swd_source_target, 0.0);
        }
    }

    #[test]
    fn batch_size_larger_than_smallest_dataset_is_rejected() {
        let (src, tgt) = gen_blobs(2, 40, 8.0, &ShiftSpec::Scaling(1.0), 2, 17).unwrap();
        let params = init_model(&small_arch(), 19).unwrap();
        let pseudo = PseudoDataset {
            z: Array2::zeros((10, 4)),
            labels: vec![0; 10],
            confidences: vec![1.0; 10],
            tau: 0.5,
            acceptance_rate: 1.0,
            missing_classes: vec![],
        };
        let mut config = fast_config(6);
        config.batch_size = 16; // pseudo has only 10 rows
        assert!(matches!(
            adapt_imuda(&params, &src, &tgt, &pseudo, &config),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn term_accounting_holds_every_epoch() {
        let (src, tgt) = gen_blobs(2, 40, 6.0, &ShiftSpec::Rotation(25.0), 2, 21).unwrap();
        let config = AdaptConfig {
            seed: 23,
            pretrain_epochs: 10,
            adapt_epochs: 6,
            batch_size: 20,
            num_projections: 10,
            early_stop: None,
            ..Default::default()
        };
        let (params, _) = pretrain(&config, &small_arch(), &src).unwrap();
        let z = crate::nn::forward_encoder(&params, src.x.view()).unwrap();
        let gmm =
            crate::gmm::estimate_map(&z, src.labels.as_ref().unwrap(), 2, None, false).unwrap();
        let pseudo = generate_pseudo(&gmm, &params, 0.5, 80, 100, 25).unwrap();
        let (_, report) = adapt_imuda(&params, &src, &tgt, &pseudo, &config).unwrap();
        for r in &report.epochs {
            let sum = r.source_ce
                + r.pseudo_ce
                + r.swd_target_pseudo
                + r.swd_source_pseudo
                + r.swd_source_target;
            assert!((r.total - sum).abs() <= 1e-10, "epoch {}: {} vs {sum}", r.epoch, r.total);
        }
    }

    #[test]
    fn adaptation_is_deterministic() {
        let (src, tgt) = gen_blobs(2, 40, 6.0, &ShiftSpec::Rotation(25.0), 2, 27).unwrap();
        let config = AdaptConfig {
            seed: 29,
            pretrain_epochs: 8,
            adapt_epochs: 5,
            batch_size: 20,
            num_projections: 10,
            ..Default::default()
        };
        let (params, _) = pretrain(&config, &small_arch(), &src).unwrap();
        let z = crate::nn::forward_encoder(&params, src.x.view()).unwrap();
        let gmm =
            crate::gmm::estimate_map(&z, src.labels.as_ref().unwrap(), 2, None, false).unwrap();
        let pseudo = generate_pseudo(&gmm, &params, 0.5, 80, 100, 31).unwrap();
        let (a, ra) = adapt_imuda(&params, &src, &tgt, &pseudo, &config).unwrap();
        let (b, rb) = adapt_imuda(&params, &src, &tgt, &pseudo, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.epochs, rb.epochs);
    }

    #[test]
    fn report_csv_has_fixed_schema() {
        let report = TrainReport {
            kind: RunKind::Adaptation,
            epochs: vec![EpochRecord {
                epoch: 0,
                total: 1.5,
                source_ce: 0.5,
                pseudo_ce: 0.25,
                swd_target_pseudo: 0.5,
                swd_source_pseudo: 0.25,
                swd_source_target: 0.0,
                source_accuracy: 0.875,
                target_accuracy: None,
            }],
            wall_time_secs: 0.0,
        };
        let csv = report_to_csv(&report);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "epoch,total,term1,term2,term3,term4,src_acc,tgt_acc");
        assert_eq!(lines.next().unwrap(), "0,1.5,0.5,0.25,0.5,0.25,0.875,");
    }
}
