//! Evaluation, alignment diagnostics, and a PCA embedding export.

use ndarray::{Array2, Axis};

use crate::data::{subsample_rows as subsample, Dataset};
use crate::error::{Error, Result};
use crate::linalg::jacobi_eigh;
use crate::nn::{argmax_rows, forward_encoder, predict_probs, ModelParams};
use crate::pseudo::PseudoDataset;
use crate::rng;
use crate::swd::{swd_empirical, ProjectionSet};

/// Classification report over a labeled dataset.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub accuracy: f64,
    pub per_class: Vec<f64>,
    /// Row = true class, column = predicted class.
    pub confusion: Array2<usize>,
    pub n: usize,
}

/// Argmax classification with exact confusion counts.
pub fn evaluate(params: &ModelParams, data: &Dataset) -> Result<EvalReport> {
    let labels = data.require_labels()?;
    let k = params.num_classes();
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::Input(format!("label {bad} out of range for {k} classes")));
    }
    let probs = predict_probs(params, data.x.view())?;
    let preds = argmax_rows(&probs);
    let mut confusion = Array2::<usize>::zeros((k, k));
    for (&truth, &pred) in labels.iter().zip(&preds) {
        confusion[[truth, pred]] += 1;
    }
    let n = labels.len();
    let correct: usize = (0..k).map(|j| confusion[[j, j]]).sum();
    let per_class = (0..k)
        .map(|j| {
            let row_total: usize = confusion.row(j).sum();
            if row_total == 0 {
                0.0
            } else {
                confusion[[j, j]] as f64 / row_total as f64
            }
        })
        .collect();
    Ok(EvalReport { accuracy: correct as f64 / n as f64, per_class, confusion, n })
}

/// Computable terms of the adaptation error bound: the source empirical
/// error, both alignment distances to the pseudo-dataset, and `1 - tau`.
/// The bound's nonconstructive constants are not represented.
#[derive(Debug, Clone, Copy)]
pub struct BoundDiagnostics {
    pub source_error: f64,
    pub swd_source_pseudo: f64,
    pub swd_target_pseudo: f64,
    pub one_minus_tau: f64,
    pub n_source: usize,
    pub n_target: usize,
}


/// Evaluate the bound terms on matched-size subsets; both alignment values
/// use the same projection set.
pub fn bound_diagnostics(
    params: &ModelParams,
    source: &Dataset,
    target: &Dataset,
    pseudo: &PseudoDataset,
    tau: f64,
    num_projections: usize,
    seed: u64,
) -> Result<BoundDiagnostics> {
    if source.is_empty() || target.is_empty() || pseudo.is_empty() {
        return Err(Error::Input("bound diagnostics need nonempty source, target, and pseudo sets".into()));
    }
    let source_error = 1.0 - evaluate(params, source)?.accuracy;

    let z_source = forward_encoder(params, source.x.view())?;
    let z_target = forward_encoder(params, target.x.view())?;
    let m = source.len().min(target.len()).min(pseudo.len());
    let zs = subsample(&z_source, m, rng::derive(seed, "diagnostics/source"));
    let zt = subsample(&z_target, m, rng::derive(seed, "diagnostics/target"));
    let zp = subsample(&pseudo.z, m, rng::derive(seed, "diagnostics/pseudo"));

    let proj = ProjectionSet::sample(
        params.embedding_dim(),
        num_projections,
        rng::derive(seed, "diagnostics/projections"),
    )?;
    let swd_source_pseudo = swd_empirical(&zs, &zp, &proj)?.value;
    let swd_target_pseudo = swd_empirical(&zt, &zp, &proj)?.value;

    Ok(BoundDiagnostics {
        source_error,
        swd_source_pseudo,
        swd_target_pseudo,
        one_minus_tau: 1.0 - tau,
        n_source: source.len(),
        n_target: target.len(),
    })
}

/// Project onto the top-2 principal components of the centered data.
///
/// Component signs are fixed by making each component's largest-magnitude
/// loading positive, so the output is deterministic.
pub fn pca2(z: &Array2<f64>) -> Result<Array2<f64>> {
    let n = z.nrows();
    let p = z.ncols();
    if n < 2 {
        return Err(Error::Input(format!("pca needs at least 2 rows, got {n}")));
    }
    let mean = z.mean_axis(Axis(0)).expect("nonempty");
    let centered = z - &mean;
    let cov = centered.t().dot(&centered) / n as f64;
    if cov.diag().sum() <= 0.0 {
        return Err(Error::Degenerate("all rows are identical; no principal directions".into()));
    }
    let (_, vecs) = jacobi_eigh(&cov)?;

    let mut basis = Array2::<f64>::zeros((p, 2));
    for comp in 0..2usize.min(p) {
        let mut v = vecs.column(comp).to_owned();
        let mut lead = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[lead].abs() {
                lead = i;
            }
        }
        if v[lead] < 0.0 {
            v.mapv_inplace(|x| -x);
        }
        basis.column_mut(comp).assign(&v);
    }
    Ok(centered.dot(&basis))
}
