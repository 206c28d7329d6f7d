//! Sliced Wasserstein distance between equal-size empirical point sets.
//!
//! The squared-cost distance is estimated by projecting both sets onto L
//! random unit directions, sorting the projections, and averaging the
//! squared gaps of rank-matched pairs:
//!
//! ```text
//! swd(A, B) = (1/L) sum_l (1/n) sum_i ( <g_l, a_{s_l[i]}> - <g_l, b_{t_l[i]}> )^2
//! ```
//!
//! where `s_l`, `t_l` sort the slice-l projections of A and B. The inner sum
//! is divided by n so values are per-point means and independent of batch
//! size; multiply by n to recover the unnormalized convention.
//!
//! Exact small-instance Wasserstein oracles live here too so tests can bound
//! the sliced estimate from above.

use itertools::Itertools;
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

/// L unit directions on the sphere in R^p, one per row.
#[derive(Debug, Clone)]
pub struct ProjectionSet {
    dirs: Array2<f64>,
    seed: u64,
}

impl ProjectionSet {
    /// Sample L directions i.i.d. uniformly on the unit sphere
    /// (standard normal vector, normalized). Deterministic per seed.
    pub fn sample(p: usize, l: usize, seed: u64) -> Result<Self> {
        if p == 0 {
            return Err(Error::Config("projection dimension must be >= 1".into()));
        }
        if l == 0 {
            return Err(Error::Config("projection count must be >= 1".into()));
        }
        let mut rng = rng::chacha(rng::derive(seed, "projections"));
        let mut dirs = Array2::<f64>::zeros((l, p));
        for mut row in dirs.rows_mut() {
            loop {
                for v in row.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    row.mapv_inplace(|v| v / norm);
                    break;
                }
                // zero-norm draw: redraw (probability ~ 0)
            }
        }
        Ok(Self { dirs, seed })
    }

    pub fn num_projections(&self) -> usize {
        self.dirs.nrows()
    }

    pub fn dim(&self) -> usize {
        self.dirs.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn directions(&self) -> &Array2<f64> {
        &self.dirs
    }
}

/// Sliced Wasserstein estimate in squared-cost units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwdValue {
    pub value: f64,
    pub num_projections: usize,
}

fn check_pair(a: &Array2<f64>, b: &Array2<f64>, proj: &ProjectionSet) -> Result<()> {
    if a.nrows() != b.nrows() {
        return Err(Error::AlignmentBatch(format!(
            "point sets must have equal sizes, got {} and {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if a.nrows() == 0 {
        return Err(Error::Input("point sets are empty".into()));
    }
    if a.ncols() != proj.dim() || b.ncols() != proj.dim() {
        return Err(Error::Input(format!(
            "dimension mismatch: sets are {}x{} / {}x{}, projections expect p={}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            proj.dim()
        )));
    }
    Ok(())
}

/// Argsort by value, stable on index so ties break deterministically.
fn argsort(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap_or(std::cmp::Ordering::Equal));
    idx
}

/// Empirical sliced Wasserstein (squared cost, per-point mean).
pub fn swd_empirical(a: &Array2<f64>, b: &Array2<f64>, proj: &ProjectionSet) -> Result<SwdValue> {
    check_pair(a, b, proj)?;
    let n = a.nrows();
    let l = proj.num_projections();

    let mut total = 0.0;
    for dir in proj.directions().rows() {
        let pa: Vec<f64> = a.rows().into_iter().map(|r| r.dot(&dir)).collect();
        let pb: Vec<f64> = b.rows().into_iter().map(|r| r.dot(&dir)).collect();
        let sa = argsort(&pa);
        let sb = argsort(&pb);
        let mut slice = 0.0;
        for i in 0..n {
            let d = pa[sa[i]] - pb[sb[i]];
            slice += d * d;
        }
        total += slice / n as f64;
    }
    Ok(SwdValue { value: total / l as f64, num_projections: l })
}

/// Value and gradients in one pass; the sorting permutations are held fixed
/// at their evaluated values (the subgradient almost everywhere).
pub fn swd_value_and_grad(
    a: &Array2<f64>,
    b: &Array2<f64>,
    proj: &ProjectionSet,
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    check_pair(a, b, proj)?;
    let n = a.nrows();
    let l = proj.num_projections();
    let scale = 1.0 / (l as f64 * n as f64);

    let mut total = 0.0;
    let mut grad_a = Array2::<f64>::zeros(a.dim());
    let mut grad_b = Array2::<f64>::zeros(b.dim());
    for dir in proj.directions().rows() {
        let pa: Vec<f64> = a.rows().into_iter().map(|r| r.dot(&dir)).collect();
        let pb: Vec<f64> = b.rows().into_iter().map(|r| r.dot(&dir)).collect();
        let sa = argsort(&pa);
        let sb = argsort(&pb);
        for i in 0..n {
            let (ra, rb) = (sa[i], sb[i]);
            let d = pa[ra] - pb[rb];
            total += d * d;
            let g = 2.0 * d * scale;
            for (j, gj) in dir.iter().enumerate() {
                grad_a[[ra, j]] += g * gj;
                grad_b[[rb, j]] -= g * gj;
            }
        }
    }
    Ok((total * scale, grad_a, grad_b))
}

/// Gradient of [`swd_empirical`] with respect to both point sets.
pub fn swd_gradient(
    a: &Array2<f64>,
    b: &Array2<f64>,
    proj: &ProjectionSet,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (_, ga, gb) = swd_value_and_grad(a, b, proj)?;
    Ok((ga, gb))
}

/// Exact squared 2-Wasserstein between 1-D samples of equal size:
/// the mean squared difference of sorted values.
pub fn exact_1d_w2_squared(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::AlignmentBatch(format!(
            "1-D samples must have equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Input("1-D samples are empty".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let n = sa.len() as f64;
    Ok(sa.iter().zip(&sb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n)
}

/// Maximum instance size accepted by the permutation-enumeration oracle.
pub const EXACT_ORACLE_MAX_N: usize = 8;

/// Exact squared 2-Wasserstein between equal-weight empirical measures by
/// exhaustive search over all n! pairings. Test oracle; n is capped at
/// [`EXACT_ORACLE_MAX_N`].
pub fn exact_w2_squared_small(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::AlignmentBatch(format!(
            "point sets must have equal sizes, got {} and {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Err(Error::Input("point sets are empty".into()));
    }
    if n > EXACT_ORACLE_MAX_N {
        return Err(Error::OracleSize(format!(
            "enumeration oracle is limited to n <= {EXACT_ORACLE_MAX_N}, got {n}"
        )));
    }
    if a.ncols() != b.ncols() {
        return Err(Error::Input("point sets have different dimensions".into()));
    }

    // pairwise squared Euclidean costs
    let mut cost = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            cost[[i, j]] = a
                .row(i)
                .iter()
                .zip(b.row(j).iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
        }
    }

    let best = (0..n)
        .permutations(n)
        .map(|perm| perm.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(best / n as f64)
}
