//! Weighted multi-term training objective and its exact gradient.
//!
//! The objective is any weighted sum of:
//!
//! - source cross-entropy          (encoder + classifier gradients)
//! - pseudo cross-entropy          (classifier gradients only; pseudo points
//!   live in the embedding space and are treated as constants)
//! - swd(target embeddings, pseudo points)   (encoder gradients, target side)
//! - swd(source embeddings, pseudo points)   (encoder gradients, source side)
//! - swd(source embeddings, target embeddings)  (encoder gradients, both
//!   sides; the direct-alignment baseline objective)
//!
//! Embedding-space gradients from all enabled terms are accumulated first and
//! pushed through the encoder once per input batch.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::swd::{swd_value_and_grad, ProjectionSet};

use super::{
    ce_grad_logits, classifier_logits, cross_entropy, encoder_backward, forward_encoder_trace,
    softmax, Gradients, ModelParams,
};

/// Per-term weights; `None` disables a term entirely (zero value, zero
/// gradient, inputs not required).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ObjectiveSpec {
    pub source_ce: Option<f64>,
    pub pseudo_ce: Option<f64>,
    pub swd_target_pseudo: Option<f64>,
    pub swd_source_pseudo: Option<f64>,
    pub swd_source_target: Option<f64>,
}

impl ObjectiveSpec {
    /// Plain source classification (the pretraining objective).
    pub fn pretraining() -> Self {
        Self { source_ce: Some(1.0), ..Default::default() }
    }

    /// The four-term adaptation objective: classification terms weighted by
    /// `lambda`, alignment terms unweighted. Flags drop individual terms.
    pub fn adaptation(
        lambda: f64,
        enable_source_ce: bool,
        enable_pseudo_ce: bool,
        enable_target_pseudo_swd: bool,
        enable_source_pseudo_swd: bool,
    ) -> Self {
        Self {
            source_ce: enable_source_ce.then_some(lambda),
            pseudo_ce: enable_pseudo_ce.then_some(lambda),
            swd_target_pseudo: enable_target_pseudo_swd.then_some(1.0),
            swd_source_pseudo: enable_source_pseudo_swd.then_some(1.0),
            swd_source_target: None,
        }
    }

    /// Two-term direct source-target alignment baseline.
    pub fn baseline(lambda: f64) -> Self {
        Self {
            source_ce: Some(lambda),
            swd_source_target: Some(1.0),
            ..Default::default()
        }
    }

    fn needs_source(&self) -> bool {
        self.source_ce.is_some()
            || self.swd_source_pseudo.is_some()
            || self.swd_source_target.is_some()
    }

    fn needs_target(&self) -> bool {
        self.swd_target_pseudo.is_some() || self.swd_source_target.is_some()
    }

    fn needs_pseudo(&self) -> bool {
        self.pseudo_ce.is_some()
            || self.swd_target_pseudo.is_some()
            || self.swd_source_pseudo.is_some()
    }

    fn needs_projections(&self) -> bool {
        self.swd_target_pseudo.is_some()
            || self.swd_source_pseudo.is_some()
            || self.swd_source_target.is_some()
    }
}

/// Inputs for one objective evaluation. Only the pieces required by the
/// enabled terms have to be present.
#[derive(Clone, Copy, Default)]
pub struct ObjectiveBatch<'a> {
    /// Labeled source features (raw input space).
    pub source: Option<(ArrayView2<'a, f64>, &'a [usize])>,
    /// Unlabeled target features (raw input space).
    pub target: Option<ArrayView2<'a, f64>>,
    /// Labeled pseudo points (embedding space; constants).
    pub pseudo: Option<(ArrayView2<'a, f64>, &'a [usize])>,
    /// Slice directions for the transport terms.
    pub projections: Option<&'a ProjectionSet>,
}

/// Weighted value of each term; disabled terms report zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TermValues {
    pub source_ce: f64,
    pub pseudo_ce: f64,
    pub swd_target_pseudo: f64,
    pub swd_source_pseudo: f64,
    pub swd_source_target: f64,
}

impl TermValues {
    pub fn total(&self) -> f64 {
        self.source_ce
            + self.pseudo_ce
            + self.swd_target_pseudo
            + self.swd_source_pseudo
            + self.swd_source_target
    }
}

fn check_finite(value: f64, term: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numerical(format!("term '{term}' produced a non-finite value ({value})")))
    }
}

/// Evaluate the weighted objective and its exact gradient with respect to
/// every encoder and classifier parameter.
pub fn compute_objective_and_gradients(
    params: &ModelParams,
    batch: &ObjectiveBatch<'_>,
    spec: &ObjectiveSpec,
) -> Result<(f64, TermValues, Gradients)> {
    let mut grads = Gradients::zeros_like(params);
    let mut values = TermValues::default();
    let classifier_idx = params.blocks.len() - 1;

    let source_trace = if spec.needs_source() {
        let (x, _) = batch
            .source
            .ok_or_else(|| Error::Input("objective needs a source batch".into()))?;
        Some(forward_encoder_trace(params, x)?)
    } else {
        None
    };
    let target_trace = if spec.needs_target() {
        let x = batch
            .target
            .ok_or_else(|| Error::Input("objective needs a target batch".into()))?;
        Some(forward_encoder_trace(params, x)?)
    } else {
        None
    };
    if spec.needs_pseudo() && batch.pseudo.is_none() {
        return Err(Error::Input("objective needs a pseudo batch".into()));
    }
    if let Some((zp, _)) = batch.pseudo {
        if spec.needs_pseudo() && zp.ncols() != params.arch.embedding_dim {
            return Err(Error::Input(format!(
                "pseudo points have dimension {}, embedding space is {}",
                zp.ncols(),
                params.arch.embedding_dim
            )));
        }
    }
    let proj = if spec.needs_projections() {
        Some(
            batch
                .projections
                .ok_or_else(|| Error::Input("objective needs a projection set".into()))?,
        )
    } else {
        None
    };

    let mut g_source_emb: Option<Array2<f64>> =
        source_trace.as_ref().map(|t| Array2::zeros(t.embedding().dim()));
    let mut g_target_emb: Option<Array2<f64>> =
        target_trace.as_ref().map(|t| Array2::zeros(t.embedding().dim()));

    if let Some(w) = spec.source_ce {
        let (_, labels) = batch.source.unwrap();
        let trace = source_trace.as_ref().unwrap();
        let logits = classifier_logits(params, trace.embedding().view())?;
        let probs = softmax(&logits);
        let raw = cross_entropy(&probs, labels)?;
        values.source_ce = check_finite(w * raw, "source cross-entropy")?;
        let g_logits = ce_grad_logits(&probs, labels, w);
        grads.blocks[classifier_idx].w += &trace.embedding().t().dot(&g_logits);
        grads.blocks[classifier_idx].b += &g_logits.sum_axis(Axis(0));
        *g_source_emb.as_mut().unwrap() += &g_logits.dot(&params.classifier().w.t());
    }

    if let Some(w) = spec.pseudo_ce {
        let (zp, labels) = batch.pseudo.unwrap();
        let logits = classifier_logits(params, zp)?;
        let probs = softmax(&logits);
        let raw = cross_entropy(&probs, labels)?;
        values.pseudo_ce = check_finite(w * raw, "pseudo cross-entropy")?;
        let g_logits = ce_grad_logits(&probs, labels, w);
        grads.blocks[classifier_idx].w += &zp.t().dot(&g_logits);
        grads.blocks[classifier_idx].b += &g_logits.sum_axis(Axis(0));
        // pseudo points are constants: nothing flows back into the encoder
    }

    if let Some(w) = spec.swd_target_pseudo {
        let (zp, _) = batch.pseudo.unwrap();
        let trace = target_trace.as_ref().unwrap();
        let (raw, g_a, _) = swd_value_and_grad(trace.embedding(), &zp.to_owned(), proj.unwrap())?;
        values.swd_target_pseudo = check_finite(w * raw, "target-pseudo alignment")?;
        g_target_emb.as_mut().unwrap().scaled_add(w, &g_a);
    }

    if let Some(w) = spec.swd_source_pseudo {
        let (zp, _) = batch.pseudo.unwrap();
        let trace = source_trace.as_ref().unwrap();
        let (raw, g_a, _) = swd_value_and_grad(trace.embedding(), &zp.to_owned(), proj.unwrap())?;
        values.swd_source_pseudo = check_finite(w * raw, "source-pseudo alignment")?;
        g_source_emb.as_mut().unwrap().scaled_add(w, &g_a);
    }

    if let Some(w) = spec.swd_source_target {
        let s_trace = source_trace.as_ref().unwrap();
        let t_trace = target_trace.as_ref().unwrap();
        let (raw, g_a, g_b) =
            swd_value_and_grad(s_trace.embedding(), t_trace.embedding(), proj.unwrap())?;
        values.swd_source_target = check_finite(w * raw, "source-target alignment")?;
        g_source_emb.as_mut().unwrap().scaled_add(w, &g_a);
        g_target_emb.as_mut().unwrap().scaled_add(w, &g_b);
    }

    if let (Some(trace), Some(g)) = (&source_trace, &g_source_emb) {
        encoder_backward(params, trace, g, &mut grads);
    }
    if let (Some(trace), Some(g)) = (&target_trace, &g_target_emb) {
        encoder_backward(params, trace, g, &mut grads);
    }

    Ok((values.total(), values, grads))
}

/// Objective value and per-term breakdown without the gradient.
pub fn objective_value(
    params: &ModelParams,
    batch: &ObjectiveBatch<'_>,
    spec: &ObjectiveSpec,
) -> Result<(f64, TermValues)> {
    let (total, values, _) = compute_objective_and_gradients(params, batch, spec)?;
    Ok((total, values))
}
