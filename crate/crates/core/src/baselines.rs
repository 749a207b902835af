//! Comparison partners: removing the top principal components, and
//! Ledoit–Wolf linear shrinkage of the covariance toward `αI`.

use log::warn;
use nalgebra::DMatrix;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::spectral::{center_matrix, center_rows, svd_of, Spectrum};

/// Number of components removed when the caller does not say otherwise.
pub const DEFAULT_TOP_K: usize = 2;

/// Orthogonal projection onto the complement of `k` fitted directions.
/// Inputs are centered with their own column means before projecting.
#[derive(Debug, Clone)]
pub struct TopPcProjection {
    /// `d × k`, orthonormal columns
    directions: DMatrix<f64>,
}

impl TopPcProjection {
    /// Fits the mean and the top-`k` right singular vectors of the centered matrix.
    pub fn fit(emb: &Embedding, k: usize) -> Result<Self> {
        let d = emb.dim();
        if k > d {
            return Err(Error::InvalidArgument(format!(
                "cannot remove {k} components from {d}-dimensional vectors"
            )));
        }
        let centered = center_matrix(emb.matrix());
        let directions = if k == 0 {
            DMatrix::zeros(d, 0)
        } else {
            let svd = svd_of(&centered)?;
            let r = svd.rank();
            let mut dirs = svd.v.columns(0, k.min(r)).into_owned();
            if k > r {
                // fewer rows than requested components: complete the basis
                dirs = complete_basis(dirs, k);
            }
            dirs
        };
        Ok(TopPcProjection { directions })
    }

    pub fn directions(&self) -> &DMatrix<f64> {
        &self.directions
    }

    /// `(v − μ) − Σ ((v − μ)·uᵢ) uᵢ` for every row `v`, `μ` the row mean of `emb`.
    pub fn apply(&self, emb: &Embedding) -> Embedding {
        let mut m = center_matrix(emb.matrix());
        if self.directions.ncols() > 0 {
            let proj = &m * &self.directions;
            m -= proj * self.directions.transpose();
        }
        emb.with_matrix(m)
    }
}

fn complete_basis(mut basis: DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let d = basis.nrows();
    let mut e = 0;
    while basis.ncols() < k && e < d {
        let mut cand = nalgebra::DVector::<f64>::zeros(d);
        cand[e] = 1.0;
        for col in basis.column_iter() {
            let c = col.dot(&cand);
            cand -= c * col;
        }
        let norm = cand.norm();
        if norm > 1e-8 {
            let n = basis.ncols();
            basis = basis.insert_column(n, 0.0);
            basis.set_column(n, &(cand / norm));
        }
        e += 1;
    }
    basis
}

/// Centers, then removes the projections onto the top `k` principal directions.
pub fn remove_top_pcs(emb: &Embedding, k: usize) -> Result<Embedding> {
    Ok(TopPcProjection::fit(emb, k)?.apply(emb))
}

/// Summary of a Ledoit–Wolf fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LwResult {
    /// Weight on the sample covariance; `1 − mixing` goes to the target.
    pub mixing: f64,
    /// Target scale `tr(S)/d`.
    pub alpha: f64,
    /// Eigenvalues of the shrunk covariance, all `d` of them.
    pub shrunk_spectrum: Spectrum,
    /// Eigenvalues of the sample covariance `S = XᵀX/n`.
    pub sample_spectrum: Spectrum,
    /// Set when the input has no variance and was returned unchanged.
    pub degenerate: bool,
}

/// Shrinks the sample covariance of the centered embedding toward `αI` with the
/// Ledoit–Wolf intensity and rebuilds vectors with singular values
/// `sqrt(n · λ′ᵢ)` on the original singular basis.
///
/// With `m = tr(S)/d`, `δ² = ‖S − mI‖²/d` and
/// `b̄² = Σₖ ‖xₖxₖᵀ − S‖² / (n² d)`, the weight on `S` is
/// `(δ² − min(b̄², δ²)) / δ²`.
pub fn ledoit_wolf(emb: &Embedding) -> Result<(Embedding, LwResult)> {
    let n = emb.len();
    let d = emb.dim();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Ledoit-Wolf needs at least 2 rows, got {n}"
        )));
    }
    let centered = center_rows(emb);
    let x = centered.matrix();
    let nf = n as f64;
    let df = d as f64;
    let cov = (x.transpose() * x) / nf;

    let svd = svd_of(x)?;
    let mut sample: Vec<f64> = svd.s.values().iter().map(|s| s * s / nf).collect();
    sample.resize(d, 0.0);
    let sample_spectrum = Spectrum::from_unsorted(sample.clone())?;

    let trace = cov.trace();
    if trace <= 0.0 {
        warn!("Ledoit-Wolf on a matrix with no variance; returning input unchanged");
        return Ok((
            emb.clone(),
            LwResult {
                mixing: 0.0,
                alpha: 0.0,
                shrunk_spectrum: sample_spectrum.clone(),
                sample_spectrum,
                degenerate: true,
            },
        ));
    }
    let alpha = trace / df;
    let dispersion = {
        let mut diff = cov.clone();
        for i in 0..d {
            diff[(i, i)] -= alpha;
        }
        diff.norm_squared() / df
    };
    let mixing = if dispersion <= 0.0 {
        1.0
    } else {
        let cov_sq = cov.norm_squared();
        let mut total = 0.0;
        for row in x.row_iter() {
            let v = row.transpose();
            let sq = v.norm_squared();
            let quad = (&cov * &v).dot(&v);
            total += sq * sq - 2.0 * quad + cov_sq;
        }
        let b_bar = total / (nf * nf * df);
        let b = b_bar.min(dispersion);
        ((dispersion - b) / dispersion).clamp(0.0, 1.0)
    };

    let shrink = |l: f64| (1.0 - mixing) * alpha + mixing * l;
    let shrunk: Vec<f64> = sample.iter().map(|&l| shrink(l)).collect();
    let out = svd.reconstruct_with(|s| (nf * shrink(s * s / nf)).sqrt());
    Ok((
        centered.with_matrix(out),
        LwResult {
            mixing,
            alpha,
            shrunk_spectrum: Spectrum::from_unsorted(shrunk)?,
            sample_spectrum,
            degenerate: false,
        },
    ))
}
