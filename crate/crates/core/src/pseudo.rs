//! Confident pseudo-dataset generation by rejection sampling.
//!
//! Candidates are drawn from the estimated mixture in fixed-size chunks and
//! passed through the classifier; a candidate is kept when its softmax
//! maximum is strictly above the confidence threshold, labeled by the argmax.
//! The raw candidate stream depends only on the mixture and the seed, so runs
//! with different thresholds filter the same stream.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::gmm::{sample_gmm, GmmModel};
use crate::nn::{argmax_rows, forward_classifier, ModelParams};
use crate::rng;

/// Candidates are drawn and classified this many at a time.
const CHUNK: usize = 512;

/// Embedding-space points the classifier is confident about.
#[derive(Debug, Clone)]
pub struct PseudoDataset {
    /// n x p points in the embedding space.
    pub z: Array2<f64>,
    /// Classifier argmax per point.
    pub labels: Vec<usize>,
    /// Softmax maximum per point; strictly above `tau`.
    pub confidences: Vec<f64>,
    /// Threshold the points were filtered at.
    pub tau: f64,
    /// Accepted / attempted candidates.
    pub acceptance_rate: f64,
    /// Classes with no accepted point (a warning, not an error).
    pub missing_classes: Vec<usize>,
}

impl PseudoDataset {
    pub fn len(&self) -> usize {
        self.z.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.z.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.z.ncols()
    }
}

/// Generate up to `n_target` confident points, giving up after
/// `max_attempt_factor * n_target` candidates.
pub fn generate_pseudo(
    gmm: &GmmModel,
    params: &ModelParams,
    tau: f64,
    n_target: usize,
    max_attempt_factor: usize,
    seed: u64,
) -> Result<PseudoDataset> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::Config(format!("confidence threshold must lie in [0, 1), got {tau}")));
    }
    if n_target == 0 {
        return Err(Error::Config("pseudo-dataset size must be >= 1".into()));
    }
    if max_attempt_factor == 0 {
        return Err(Error::Config("attempt factor must be >= 1".into()));
    }
    let p = gmm.dim();
    if p != params.embedding_dim() {
        return Err(Error::Input(format!(
            "classifier expects embedding dimension {}, mixture has {p}",
            params.embedding_dim()
        )));
    }

    let budget = max_attempt_factor.saturating_mul(n_target);
    let k = params.num_classes();
    let mut accepted_rows: Vec<f64> = Vec::with_capacity(n_target * p);
    let mut labels = Vec::with_capacity(n_target);
    let mut confidences = Vec::with_capacity(n_target);
    let mut attempts = 0usize;
    let mut observed_max = f64::NEG_INFINITY;

    'outer: for chunk_idx in 0u64.. {
        let (z, _) = sample_gmm(gmm, CHUNK, rng::derive_indexed(seed, "pseudo/chunk", chunk_idx));
        let probs = forward_classifier(params, z.view())?;
        let argmax = argmax_rows(&probs);
        for i in 0..CHUNK {
            attempts += 1;
            let conf = probs[[i, argmax[i]]];
            observed_max = observed_max.max(conf);
            if conf > tau {
                accepted_rows.extend(z.row(i).iter());
                labels.push(argmax[i]);
                confidences.push(conf);
                if labels.len() == n_target {
                    break 'outer;
                }
            }
            if attempts == budget {
                break 'outer;
            }
        }
    }

    if labels.is_empty() {
        return Err(Error::Generation(format!(
            "no candidate passed the threshold {tau} within {budget} attempts; \
             highest confidence observed was {observed_max:.6}"
        )));
    }

    let missing_classes: Vec<usize> =
        (0..k).filter(|class| !labels.contains(class)).collect();
    let n = labels.len();
    let z = Array2::from_shape_vec((n, p), accepted_rows)
        .expect("accepted rows form a rectangular matrix");

    Ok(PseudoDataset {
        z,
        labels,
        confidences,
        tau,
        acceptance_rate: n as f64 / attempts as f64,
        missing_classes,
    })
}

/// Write the points as CSV: `f0..f{p-1},label,confidence`.
pub fn save_pseudo_csv(ds: &PseudoDataset, path: impl AsRef<Path>) -> Result<()> {
    let p = ds.dim();
    let mut out = String::new();
    for j in 0..p {
        let _ = write!(out, "f{j},");
    }
    out.push_str("label,confidence\n");
    for i in 0..ds.len() {
        for j in 0..p {
            let _ = write!(out, "{},", ds.z[[i, j]]);
        }
        let _ = writeln!(out, "{},{}", ds.labels[i], ds.confidences[i]);
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read points written by [`save_pseudo_csv`].
///
/// The CSV stores only points, labels, and confidences; the generation
/// metadata is not recoverable, so `tau` loads as 0, `acceptance_rate` as 1,
/// and `missing_classes` empty.
pub fn load_pseudo_csv(path: impl AsRef<Path>) -> Result<PseudoDataset> {
    let text = std::fs::read_to_string(&path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) =
        lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[cols.len() - 2] != "label" || cols[cols.len() - 1] != "confidence" {
        return Err(Error::Parse {
            line: 1,
            msg: "expected header f0,...,label,confidence".into(),
        });
    }
    let p = cols.len() - 2;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut confidences = Vec::new();
    let mut n = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != p + 2 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {} fields, found {}", p + 2, fields.len()),
            });
        }
        for f in &fields[..p] {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("non-numeric feature '{f}'"),
            })?;
            values.push(v);
        }
        labels.push(fields[p].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad label '{}'", fields[p]),
        })?);
        confidences.push(fields[p + 1].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad confidence '{}'", fields[p + 1]),
        })?);
        n += 1;
    }
    let z = Array2::from_shape_vec((n, p), values)
        .map_err(|e| Error::Format(format!("bad pseudo csv shape: {e}")))?;
    Ok(PseudoDataset {
        z,
        labels,
        confidences,
        tau: 0.0,
        acceptance_rate: 1.0,
        missing_classes: Vec::new(),
    })
}
