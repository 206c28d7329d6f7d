//! Synthetic covariate-shift generators and dataset file I/O.
//!
//! Datasets are row-major feature matrices with optional integer labels.
//! The CSV layout is `f0,...,f{d-1}[,label]`; literals are written with
//! Rust's shortest round-trip float rendering so that save/load is
//! bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

/// A feature matrix with optional class labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// n x d feature matrix.
    pub x: Array2<f64>,
    /// Per-row labels in `[0, num_classes)`, when the dataset is labeled.
    pub labels: Option<Vec<usize>>,
    /// Class count; inferred as `max(label) + 1` on load.
    pub num_classes: Option<usize>,
    pub name: String,
}

impl Dataset {
    pub fn new(x: Array2<f64>, labels: Option<Vec<usize>>, name: impl Into<String>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != x.nrows() {
                return Err(Error::Input(format!(
                    "label count {} does not match row count {}",
                    l.len(),
                    x.nrows()
                )));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("dataset contains non-finite features".into()));
        }
        let num_classes = labels.as_ref().map(|l| l.iter().max().map_or(0, |m| m + 1));
        Ok(Self { x, labels, num_classes, name: name.into() })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Labels or an input error naming the dataset.
    pub fn require_labels(&self) -> Result<&[usize]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::Input(format!("dataset '{}' has no labels", self.name)))
    }

    /// Copy without the label column.
    pub fn without_labels(&self) -> Dataset {
        Dataset {
            x: self.x.clone(),
            labels: None,
            num_classes: None,
            name: self.name.clone(),
        }
    }
}

/// Deterministic input-space transform applied to the target domain.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftSpec {
    /// Rotation in degrees about the origin of the first two coordinates.
    Rotation(f64),
    /// Per-coordinate offset.
    Translation(Vec<f64>),
    /// Uniform positive scaling.
    Scaling(f64),
}

impl ShiftSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ShiftSpec::Rotation(deg) => {
                if !(0.0..360.0).contains(deg) {
                    return Err(Error::Config(format!(
                        "rotation must lie in [0, 360), got {deg}"
                    )));
                }
                if dim < 2 {
                    return Err(Error::Config("rotation needs at least 2 dimensions".into()));
                }
            }
            ShiftSpec::Translation(v) => {
                if v.len() != dim {
                    return Err(Error::Config(format!(
                        "translation has {} components but data has {} dims",
                        v.len(),
                        dim
                    )));
                }
            }
            ShiftSpec::Scaling(c) => {
                if *c <= 0.0 {
                    return Err(Error::Config(format!("scaling factor must be > 0, got {c}")));
                }
            }
        }
        Ok(())
    }

    /// Apply the shift to every row of `x`.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        match self {
            ShiftSpec::Rotation(deg) => {
                let t = deg.to_radians();
                let (c, s) = (t.cos(), t.sin());
                let mut out = x.clone();
                for mut row in out.rows_mut() {
                    let (a, b) = (row[0], row[1]);
                    row[0] = c * a - s * b;
                    row[1] = s * a + c * b;
                }
                out
            }
            ShiftSpec::Translation(v) => {
                let mut out = x.clone();
                for mut row in out.rows_mut() {
                    for (j, off) in v.iter().enumerate() {
                        row[j] += off;
                    }
                }
                out
            }
            ShiftSpec::Scaling(c) => x * *c,
        }
    }

    /// Exact inverse transform.
    pub fn inverse(&self) -> ShiftSpec {
        match self {
            ShiftSpec::Rotation(deg) => ShiftSpec::Rotation(if *deg == 0.0 { 0.0 } else { 360.0 - deg }),
            ShiftSpec::Translation(v) => ShiftSpec::Translation(v.iter().map(|a| -a).collect()),
            ShiftSpec::Scaling(c) => ShiftSpec::Scaling(1.0 / c),
        }
    }
}

/// Inverse rotation must undo the forward one exactly up to trig rounding,
/// so it is applied with the transposed matrix rather than 360-deg wrap.
fn rotate_inverse(deg: f64, x: &Array2<f64>) -> Array2<f64> {
    let t = deg.to_radians();
    let (c, s) = (t.cos(), t.sin());
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let (a, b) = (row[0], row[1]);
        row[0] = c * a + s * b;
        row[1] = -s * a + c * b;
    }
    out
}

/// Undo a shift; used by tests to check generator exactness.
pub fn apply_inverse(shift: &ShiftSpec, x: &Array2<f64>) -> Array2<f64> {
    match shift {
        ShiftSpec::Rotation(deg) => rotate_inverse(*deg, x),
        other => other.inverse().apply(x),
    }
}

/// Two interleaving half-circles with Gaussian noise, plus a shifted copy.
///
/// The source is the canonical two-moons layout; the target is a fresh draw
/// from the same generator (independent noise stream) passed through `shift`.
/// Labels are exactly balanced: `n/2` per moon.
pub fn gen_two_moons(
    n: usize,
    noise_sigma: f64,
    shift: &ShiftSpec,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::Config(format!("two-moons size must be even and positive, got {n}")));
    }
    if noise_sigma < 0.0 {
        return Err(Error::Config("noise sigma must be >= 0".into()));
    }
    shift.validate(2)?;

    let draw = |rng_seed: u64| -> (Array2<f64>, Vec<usize>) {
        let half = n / 2;
        let mut rng = rng::chacha(rng_seed);
        let mut x = Array2::<f64>::zeros((n, 2));
        let mut labels = Vec::with_capacity(n);
        for i in 0..half {
            let t = std::f64::consts::PI * i as f64 / (half - 1).max(1) as f64;
            x[[i, 0]] = t.cos();
            x[[i, 1]] = t.sin();
            labels.push(0);
        }
        for i in 0..half {
            let t = std::f64::consts::PI * i as f64 / (half - 1).max(1) as f64;
            x[[half + i, 0]] = 1.0 - t.cos();
            x[[half + i, 1]] = 0.5 - t.sin();
            labels.push(1);
        }
        if noise_sigma > 0.0 {
            for v in x.iter_mut() {
                let u: f64 = rng.sample(StandardNormal);
                *v += noise_sigma * u;
            }
        }
        (x, labels)
    };

    let (xs, ys) = draw(rng::derive(seed, "twomoons/source"));
    let (xt_raw, yt) = draw(rng::derive(seed, "twomoons/target"));
    let xt = shift.apply(&xt_raw);

    Ok((
        Dataset::new(xs, Some(ys), "twomoons-source")?,
        Dataset::new(xt, Some(yt), "twomoons-target")?,
    ))
}

/// k isotropic Gaussian blobs with centers spaced `separation` apart on a
/// ring in the first two coordinates, plus a shifted copy.
pub fn gen_blobs(
    k: usize,
    n_per_class: usize,
    separation: f64,
    shift: &ShiftSpec,
    d: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if k < 2 {
        return Err(Error::Config(format!("blobs need k >= 2 classes, got {k}")));
    }
    if d < 2 {
        return Err(Error::Config(format!("blobs need d >= 2 dimensions, got {d}")));
    }
    if n_per_class == 0 {
        return Err(Error::Config("n_per_class must be >= 1".into()));
    }
    shift.validate(d)?;

    // Ring radius such that adjacent centers sit `separation` apart.
    let radius = separation / (2.0 * (std::f64::consts::PI / k as f64).sin());
    let centers: Vec<Array1<f64>> = (0..k)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            let mut c = Array1::<f64>::zeros(d);
            c[0] = radius * t.cos();
            c[1] = radius * t.sin();
            c
        })
        .collect();

    let draw = |rng_seed: u64| -> (Array2<f64>, Vec<usize>) {
        let mut rng = rng::chacha(rng_seed);
        let n = k * n_per_class;
        let mut x = Array2::<f64>::zeros((n, d));
        let mut labels = Vec::with_capacity(n);
        for j in 0..k {
            for i in 0..n_per_class {
                let r = j * n_per_class + i;
                for col in 0..d {
                    let u: f64 = rng.sample(StandardNormal);
                    x[[r, col]] = centers[j][col] + u;
                }
                labels.push(j);
            }
        }
        (x, labels)
    };

    let (xs, ys) = draw(rng::derive(seed, "blobs/source"));
    let (xt_raw, yt) = draw(rng::derive(seed, "blobs/target"));
    let xt = shift.apply(&xt_raw);

    Ok((
        Dataset::new(xs, Some(ys), "blobs-source")?,
        Dataset::new(xt, Some(yt), "blobs-target")?,
    ))
}

/// Deterministically pick `m` of `n` indices: the identity when `m >= n`,
/// otherwise a seeded draw without replacement (kept sorted).
pub(crate) fn subsample_indices(n: usize, m: usize, seed: u64) -> Vec<usize> {
    if m >= n {
        return (0..n).collect();
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = rng::chacha(seed);
    for i in 0..m {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut chosen = idx[..m].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Row-subsampled copy of a matrix, per [`subsample_indices`].
pub(crate) fn subsample_rows(x: &Array2<f64>, m: usize, seed: u64) -> Array2<f64> {
    let chosen = subsample_indices(x.nrows(), m, seed);
    if chosen.len() == x.nrows() {
        return x.clone();
    }
    let mut out = Array2::<f64>::zeros((chosen.len(), x.ncols()));
    for (row, &i) in chosen.iter().enumerate() {
        out.row_mut(row).assign(&x.row(i));
    }
    out
}

/// Render a float with Rust's shortest round-trip formatting.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Write a dataset as CSV. A `label` column is present iff labels are.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let d = ds.dim();
    let mut out = String::new();
    for j in 0..d {
        if j > 0 {
            out.push(',');
        }
        let _ = write!(out, "f{j}");
    }
    if ds.labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for (i, row) in ds.x.rows().into_iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(*v));
        }
        if let Some(labels) = &ds.labels {
            let _ = write!(out, ",{}", labels[i]);
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a dataset written by [`save_csv`] (or hand-authored in that layout).
///
/// A missing or entirely blank `label` column yields an unlabeled dataset.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let has_label_col = cols.last() == Some(&"label");
    let d = if has_label_col { cols.len() - 1 } else { cols.len() };
    if d == 0 {
        return Err(Error::Parse { line: 1, msg: "no feature columns".into() });
    }
    for (j, c) in cols.iter().take(d).enumerate() {
        let expect = format!("f{j}");
        if *c != expect {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected column '{expect}', found '{c}'"),
            });
        }
    }

    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<Option<usize>> = Vec::new();
    let mut n = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = if has_label_col { d + 1 } else { d };
        if fields.len() != expected {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        for f in fields.iter().take(d) {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("non-numeric feature '{f}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: lineno, msg: format!("non-finite feature '{f}'") });
            }
            values.push(v);
        }
        if has_label_col {
            let raw = fields[d];
            if raw.is_empty() {
                labels.push(None);
            } else {
                let l: usize = raw.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("label '{raw}' is not a nonnegative integer"),
                })?;
                labels.push(Some(l));
            }
        }
        n += 1;
    }

    let x = Array2::from_shape_vec((n, d), values)
        .map_err(|e| Error::Format(format!("bad csv shape: {e}")))?;

    let labels = if has_label_col && labels.iter().any(Option::is_some) {
        if let Some(pos) = labels.iter().position(Option::is_none) {
            return Err(Error::Parse {
                line: pos + 2,
                msg: "label missing in a labeled file".into(),
            });
        }
        Some(labels.into_iter().map(Option::unwrap).collect())
    } else {
        None
    };

    Dataset::new(x, labels, name)
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_be_u32(bytes: &[u8], off: usize, what: &str) -> Result<u32> {
    let end = off + 4;
    if bytes.len() < end {
        return Err(Error::Format(format!("truncated idx file while reading {what}")));
    }
    Ok(u32::from_be_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]]))
}

/// Load an IDX image/label file pair (the classic digit-dataset layout).
///
/// Pixels are scaled to `[0, 1]` and flattened row-major; `limit` truncates
/// the number of items (0 means all).
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    limit: usize,
) -> Result<Dataset> {
    let img = std::fs::read(&images_path)?;
    let lab = std::fs::read(&labels_path)?;

    if read_be_u32(&img, 0, "image magic")? != IDX_IMAGES_MAGIC {
        return Err(Error::Format("bad magic number in idx image file".into()));
    }
    if read_be_u32(&lab, 0, "label magic")? != IDX_LABELS_MAGIC {
        return Err(Error::Format("bad magic number in idx label file".into()));
    }
    let n_img = read_be_u32(&img, 4, "image count")? as usize;
    let rows = read_be_u32(&img, 8, "rows")? as usize;
    let cols = read_be_u32(&img, 12, "cols")? as usize;
    let n_lab = read_be_u32(&lab, 4, "label count")? as usize;
    if n_img != n_lab {
        return Err(Error::Format(format!(
            "idx image count {n_img} does not match label count {n_lab}"
        )));
    }
    let d = rows * cols;
    if img.len() != 16 + n_img * d {
        return Err(Error::Format("idx image payload length mismatch".into()));
    }
    if lab.len() != 8 + n_lab {
        return Err(Error::Format("idx label payload length mismatch".into()));
    }

    let n = if limit == 0 { n_img } else { limit.min(n_img) };
    let mut x = Array2::<f64>::zeros((n, d));
    for i in 0..n {
        for j in 0..d {
            x[[i, j]] = f64::from(img[16 + i * d + j]) / 255.0;
        }
    }
    let labels: Vec<usize> = lab[8..8 + n].iter().map(|&b| b as usize).collect();

    let name = images_path
        .as_ref()
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "idx".into());
    Dataset::new(x, Some(labels), name)
}
