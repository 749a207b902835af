//! Matrix primitives shared by every post-processing method: row centering,
//! a deterministic thin SVD, gram matrices and centered kernel alignment.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// Singular values below `ZERO_TOLERANCE * s_max` are treated as exactly zero
/// and never enter a logarithm.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Largest `n` for which [`gram`] will materialize an `n × n` matrix.
pub const DEFAULT_GRAM_LIMIT: usize = 20_000;

const SVD_MAX_ITERATIONS: usize = 10_000;

/// Non-increasing, non-negative, finite singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "spectrum entries must be finite and non-negative, got {v}"
            )));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument(
                "spectrum must be sorted non-increasing".into(),
            ));
        }
        Ok(Spectrum { values })
    }

    /// Sorts arbitrary non-negative values into a spectrum.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(|a, b| b.total_cmp(a));
        Spectrum::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Singular values that survive the zero tolerance.
    pub fn significant(&self) -> &[f64] {
        let cutoff = ZERO_TOLERANCE * self.max();
        let keep = self.values.iter().take_while(|&&s| s > 0.0 && s >= cutoff).count();
        &self.values[..keep]
    }

    /// Gram eigenvalues `s²` of the significant singular values.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.significant().iter().map(|s| s * s).collect()
    }

    /// Ratio of the largest to the smallest significant singular value.
    pub fn condition_number(&self) -> f64 {
        match self.significant() {
            [] => f64::INFINITY,
            sig => sig[0] / sig[sig.len() - 1],
        }
    }
}

/// Thin decomposition `M = U · diag(S) · Vᵀ` with `r = min(n, d)` components.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: Spectrum,
    pub v: DMatrix<f64>,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `U · diag(f(s_i)) · Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled_u = self.u.clone();
        for (j, &s) in self.s.values().iter().enumerate() {
            let mut col = scaled_u.column_mut(j);
            col *= f(s);
        }
        scaled_u * self.v.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.reconstruct_with(|s| s)
    }
}

/// Subtracts the column mean from every row.
pub fn center_rows(emb: &Embedding) -> Embedding {
    emb.with_matrix(center_matrix(emb.matrix()))
}

pub(crate) fn center_matrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    let means = m.row_mean();
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        row -= &means;
    }
    out
}

/// Thin SVD of the embedding matrix.
pub fn thin_svd(emb: &Embedding) -> Result<ThinSvd> {
    svd_of(emb.matrix())
}

/// Thin SVD with singular values sorted non-increasing and each right singular
/// vector signed so that its largest-magnitude entry is non-negative.
pub(crate) fn svd_of(m: &DMatrix<f64>) -> Result<ThinSvd> {
    let (n, d) = m.shape();
    let r = n.min(d);
    if m.iter().all(|v| *v == 0.0) {
        return Ok(ThinSvd {
            u: DMatrix::identity(n, r),
            s: Spectrum::new(vec![0.0; r])?,
            v: DMatrix::identity(d, r),
        });
    }
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITERATIONS)
        .ok_or(Error::Decomposition)?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Decomposition),
    };
    let sv = svd.singular_values;
    if sv.iter().any(|s| !s.is_finite()) {
        return Err(Error::Decomposition);
    }

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let mut u_out = DMatrix::zeros(n, r);
    let mut v_out = DMatrix::zeros(d, r);
    let mut s_out = Vec::with_capacity(r);
    for (j, &src) in order.iter().enumerate() {
        let mut v_col: DVector<f64> = v_t.row(src).transpose();
        let mut u_col: DVector<f64> = u.column(src).into_owned();
        let pivot = v_col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, x)| {
                if x.abs() > best.1 {
                    (i, x.abs())
                } else {
                    best
                }
            })
            .0;
        if v_col[pivot] < 0.0 {
            v_col.neg_mut();
            u_col.neg_mut();
        }
        v_out.set_column(j, &v_col);
        u_out.set_column(j, &u_col);
        s_out.push(sv[src].max(0.0));
    }
    Ok(ThinSvd {
        u: u_out,
        s: Spectrum::new(s_out)?,
        v: v_out,
    })
}

/// A symmetric positive semi-definite `n × n` matrix of pairwise inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
}

impl GramMatrix {
    /// Wraps an externally supplied matrix after checking symmetry and
    /// positive semi-definiteness.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::InvalidGram(format!(
                "expected a non-empty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let scale = entries.amax().max(1.0);
        let n = entries.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidGram(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        let eig = SymmetricEigen::new(entries.clone());
        let largest = eig.eigenvalues.max();
        let smallest = eig.eigenvalues.min();
        if smallest < -1e-8 * largest.max(0.0) {
            return Err(Error::InvalidGram(format!(
                "not positive semi-definite (smallest eigenvalue {smallest:e})"
            )));
        }
        Ok(GramMatrix { entries })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Multiplies every entry by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> GramMatrix {
        GramMatrix {
            entries: &self.entries * factor,
        }
    }
}

/// `E · Eᵀ`, refusing when `n` exceeds [`DEFAULT_GRAM_LIMIT`].
pub fn gram(emb: &Embedding) -> Result<GramMatrix> {
    gram_with_limit(emb, DEFAULT_GRAM_LIMIT)
}

pub fn gram_with_limit(emb: &Embedding, limit: usize) -> Result<GramMatrix> {
    gram_of(emb.matrix(), limit)
}

pub(crate) fn gram_of(m: &DMatrix<f64>, limit: usize) -> Result<GramMatrix> {
    let n = m.nrows();
    if n > limit {
        return Err(Error::GramTooLarge { rows: n, limit });
    }
    let mut k = m * m.transpose();
    // force exact symmetry; the product is symmetric only up to rounding
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (k[(i, j)] + k[(j, i)]);
            k[(i, j)] = avg;
            k[(j, i)] = avg;
        }
    }
    Ok(GramMatrix { entries: k })
}

fn double_center(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).mean()).collect();
    let col_means: Vec<f64> = (0..n).map(|j| k.column(j).mean()).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    DMatrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// Centered kernel alignment `⟨K₁c, K₂c⟩_F / (‖K₁c‖_F ‖K₂c‖_F)`, with both
/// inputs double-centered internally.
pub fn cka(k1: &GramMatrix, k2: &GramMatrix) -> Result<f64> {
    if k1.size() != k2.size() {
        return Err(Error::DimensionMismatch(format!(
            "gram matrices of size {} and {}",
            k1.size(),
            k2.size()
        )));
    }
    let a = double_center(&k1.entries);
    let b = double_center(&k2.entries);
    let (na, nb) = (a.norm(), b.norm());
    for (centered, raw, which) in [(na, k1, "first"), (nb, k2, "second")] {
        if centered <= 1e-14 * raw.entries.norm() || centered == 0.0 {
            return Err(Error::UndefinedSimilarity(format!(
                "{which} centered gram matrix has zero norm"
            )));
        }
    }
    let inner = a.dot(&b);
    Ok((inner / (na * nb)).clamp(0.0, 1.0))
}

/// The AM–GM lower bound on `log cka` for grams with eigenvalues `oracle`
/// (length `k`) and `estimate` (length `d`):
///
/// `(1/d)Σ log λσ + (1/d)Σ log λν − ½ log Σ λσ² − ½ log Σ λν²`.
///
/// Eigenvalues below `ZERO_TOLERANCE²` of the largest are dropped first.
pub fn log_cka_lower_bound(oracle: &[f64], estimate: &[f64]) -> Result<f64> {
    let oracle = positive_eigenvalues(oracle, "oracle")?;
    let estimate = positive_eigenvalues(estimate, "estimate")?;
    let d = estimate.len() as f64;
    let log_sum = |v: &[f64]| v.iter().map(|x| x.ln()).sum::<f64>();
    let sq_sum = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    Ok(log_sum(&oracle) / d + log_sum(&estimate) / d
        - 0.5 * sq_sum(&oracle).ln()
        - 0.5 * sq_sum(&estimate).ln())
}

fn positive_eigenvalues(values: &[f64], which: &str) -> Result<Vec<f64>> {
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "{which} eigenvalues must be finite and non-negative, got {v}"
        )));
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    let cutoff = ZERO_TOLERANCE * ZERO_TOLERANCE * max;
    let kept: Vec<f64> = values.iter().copied().filter(|&l| l > 0.0 && l >= cutoff).collect();
    if kept.is_empty() {
        return Err(Error::DegenerateSpectrum(format!(
            "{which} spectrum has no positive eigenvalues"
        )));
    }
    Ok(kept)
}
