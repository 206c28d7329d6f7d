//! Class-conditional Gaussian mixture over the embedding space.
//!
//! With labeled embeddings the mixture has one component per class and its
//! parameters have closed forms: component weights are class frequencies,
//! means are class means, covariances are biased per-class scatter matrices.
//! No iterative fitting is involved. Component index doubles as the class
//! label.

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cholesky_lower;
use crate::rng;

#[derive(Debug, Clone)]
pub struct GmmComponent {
    /// Mixture weight in [0, 1].
    pub weight: f64,
    pub mean: Array1<f64>,
    /// Symmetric covariance (before regularization).
    pub cov: Array2<f64>,
    /// Lower-triangular factor of `cov + eps*I`.
    pub chol: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct GmmModel {
    pub components: Vec<GmmComponent>,
    /// Regularization added to every covariance diagonal before factorization.
    pub eps: f64,
}

impl GmmModel {
    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.mean.len())
    }
}

/// Estimate the mixture from labeled embeddings.
///
/// `eps` is the covariance regularization; `None` picks
/// `max(1e-8, 1e-4 * mean diagonal)` from the pooled raw covariances.
/// `diagonal` zeroes off-diagonal covariance entries (useful for very small
/// classes).
pub fn estimate_map(
    z: &Array2<f64>,
    labels: &[usize],
    k: usize,
    eps: Option<f64>,
    diagonal: bool,
) -> Result<GmmModel> {
    let n = z.nrows();
    let p = z.ncols();
    if labels.len() != n {
        return Err(Error::Input(format!(
            "got {} labels for {} embeddings",
            labels.len(),
            n
        )));
    }
    if k < 2 {
        return Err(Error::Config(format!("mixture needs k >= 2 components, got {k}")));
    }
    if n < k {
        return Err(Error::Input(format!("need at least k={k} points, got {n}")));
    }
    if let Some(e) = eps {
        if e < 0.0 {
            return Err(Error::Config(format!("covariance regularization must be >= 0, got {e}")));
        }
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
        return Err(Error::Input(format!("label {bad} out of range for k={k}")));
    }

    let mut sizes = vec![0usize; k];
    for &y in labels {
        sizes[y] += 1;
    }
    if let Some(j) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Estimation(format!("class {j} has no samples")));
    }

    // means
    let mut means = vec![Array1::<f64>::zeros(p); k];
    for (row, &y) in z.rows().into_iter().zip(labels) {
        means[y] += &row;
    }
    for (j, mean) in means.iter_mut().enumerate() {
        *mean /= sizes[j] as f64;
    }

    // biased scatter: mean outer product of centered rows
    let mut covs = vec![Array2::<f64>::zeros((p, p)); k];
    for (row, &y) in z.rows().into_iter().zip(labels) {
        let c = &row.to_owned() - &means[y];
        for a in 0..p {
            for b in 0..p {
                covs[y][[a, b]] += c[a] * c[b];
            }
        }
    }
    for (j, cov) in covs.iter_mut().enumerate() {
        *cov /= sizes[j] as f64;
        // enforce exact symmetry before factorization
        for a in 0..p {
            for b in (a + 1)..p {
                let s = 0.5 * (cov[[a, b]] + cov[[b, a]]);
                cov[[a, b]] = s;
                cov[[b, a]] = s;
            }
        }
        if diagonal {
            for a in 0..p {
                for b in 0..p {
                    if a != b {
                        cov[[a, b]] = 0.0;
                    }
                }
            }
        }
    }

    let eps = eps.unwrap_or_else(|| {
        let diag_mean =
            covs.iter().map(|c| c.diag().sum()).sum::<f64>() / (k * p) as f64;
        (1e-4 * diag_mean).max(1e-8)
    });

    let mut components = Vec::with_capacity(k);
    for j in 0..k {
        let mut reg = covs[j].clone();
        for a in 0..p {
            reg[[a, a]] += eps;
        }
        let chol = cholesky_lower(&reg).map_err(|e| {
            Error::Numerical(format!("covariance factorization failed for class {j}: {e}"))
        })?;
        components.push(GmmComponent {
            weight: sizes[j] as f64 / n as f64,
            mean: means[j].clone(),
            cov: covs[j].clone(),
            chol,
        });
    }
    Ok(GmmModel { components, eps })
}

/// Draw `n` points: component by the weight distribution, point by
/// `mean + chol * u` with standard normal `u`. Deterministic per seed.
pub fn sample_gmm(gmm: &GmmModel, n: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let p = gmm.dim();
    let k = gmm.num_components();
    let mut rng = rng::chacha(rng::derive(seed, "gmm-sample"));
    let mut z = Array2::<f64>::zeros((n, p));
    let mut components = Vec::with_capacity(n);
    let mut u = Array1::<f64>::zeros(p);
    for i in 0..n {
        let draw: f64 = rng.random_range(0.0..1.0);
        let mut acc = 0.0;
        let mut j = k - 1;
        for (idx, c) in gmm.components.iter().enumerate() {
            acc += c.weight;
            if draw < acc {
                j = idx;
                break;
            }
        }
        let comp = &gmm.components[j];
        for v in u.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let point = &comp.mean + &comp.chol.dot(&u);
        z.row_mut(i).assign(&point);
        components.push(j);
    }
    (z, components)
}

// --- mixture file ----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ComponentFile {
    weight: f64,
    mean: Vec<f64>,
    cov: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GmmFile {
    k: usize,
    p: usize,
    eps: f64,
    components: Vec<ComponentFile>,
}

/// Write the mixture as a structured text document; round-trips bit-exactly.
pub fn save_gmm(gmm: &GmmModel, path: impl AsRef<Path>) -> Result<()> {
    let file = GmmFile {
        k: gmm.num_components(),
        p: gmm.dim(),
        eps: gmm.eps,
        components: gmm
            .components
            .iter()
            .map(|c| ComponentFile {
                weight: c.weight,
                mean: c.mean.to_vec(),
                cov: c.cov.iter().copied().collect(),
            })
            .collect(),
    };
    let text =
        toml::to_string(&file).map_err(|e| Error::Format(format!("cannot serialize gmm: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Read a mixture written by [`save_gmm`]; the Cholesky factors are rebuilt.
pub fn load_gmm(path: impl AsRef<Path>) -> Result<GmmModel> {
    let text = std::fs::read_to_string(&path)?;
    let file: GmmFile =
        toml::from_str(&text).map_err(|e| Error::Format(format!("bad gmm file: {e}")))?;
    if file.components.len() != file.k {
        return Err(Error::Format(format!(
            "gmm file declares k={} but has {} components",
            file.k,
            file.components.len()
        )));
    }
    let p = file.p;
    let mut components = Vec::with_capacity(file.k);
    for (j, c) in file.components.into_iter().enumerate() {
        if c.mean.len() != p || c.cov.len() != p * p {
            return Err(Error::Format(format!("gmm component {j} has inconsistent shape")));
        }
        let cov = Array2::from_shape_vec((p, p), c.cov)
            .map_err(|e| Error::Format(format!("gmm component {j}: {e}")))?;
        let mut reg = cov.clone();
        for a in 0..p {
            reg[[a, a]] += file.eps;
        }
        let chol = cholesky_lower(&reg)?;
        components.push(GmmComponent { weight: c.weight, mean: Array1::from_vec(c.mean), cov, chol });
    }
    Ok(GmmModel { components, eps: file.eps })
}
