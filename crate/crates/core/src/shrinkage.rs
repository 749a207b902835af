//! Geodesic shrinkage of the gram spectrum toward a scaled identity.
//!
//! Moving the estimated gram matrix `K′` along the geodesic toward `αI` gives
//! `α^{1−β} K′^β`, so in terms of word vectors the transform is simply
//! `E* = U · S^β · Vᵀ` of the centered embedding. The mixing parameter is
//! chosen from the lower bound on log-CKA, which depends on `β` only through
//!
//! ```text
//! L(β)   = (β/d) Σ log λᵢ − ½ log Σ λᵢ^{2β}
//! L′(β)  = (1/d) Σ log λᵢ − Σ r(β)ᵢ log λᵢ
//! L″(β)  = −2 Σ r(β)ᵢ log² λᵢ + 2 (Σ r(β)ᵢ log λᵢ)²
//! ```
//!
//! with `r(β)ᵢ = λᵢ^{2β} / Σⱼ λⱼ^{2β}`. `L′` is negative everywhere on `(0, 1]`
//! so `L` is maximised at the target itself; `β*` is instead the grid point on
//! which `L″` is smallest, i.e. where `L` changes the slowest.
//!
//! All quantities are computed from log-eigenvalues shifted by `log λ_max`,
//! which leaves every formula unchanged (they are invariant to isotropic
//! scaling of the spectrum) and keeps `λ^{2β}` from overflowing.

use std::io::Write;

use log::warn;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::spectral::{center_rows, svd_of, Spectrum, ThinSvd, ZERO_TOLERANCE};

/// Half-open grid `start, start + step, …` strictly below `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaGrid {
    start: f64,
    stop: f64,
    step: f64,
}

impl Default for BetaGrid {
    fn default() -> Self {
        BetaGrid {
            start: 0.5,
            stop: 1.0,
            step: 0.001,
        }
    }
}

impl BetaGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if !(0.0 < start && start < stop && stop <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < start < stop <= 1, got start={start} stop={stop}"
            )));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        Ok(BetaGrid { start, stop, step })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        let span = (self.stop - self.start) / self.step;
        ((span - 1e-9).ceil() as usize).max(1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid points, computed as `start + i·step` and rounded to 12 decimals so
    /// that e.g. the default grid ends exactly at `0.999`.
    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| round12(self.start + i as f64 * self.step))
            .collect()
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Strictly positive gram eigenvalues `λ = s²`, with the zero tolerance applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenvalues {
    values: Vec<f64>,
    /// `log λᵢ − log λ_max`
    shifted_logs: Vec<f64>,
}

impl Eigenvalues {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eigenvalues must be finite and non-negative, got {v}"
            )));
        }
        let max = values.iter().copied().fold(0.0, f64::max);
        let cutoff = ZERO_TOLERANCE * ZERO_TOLERANCE * max;
        let values: Vec<f64> = values.into_iter().filter(|&l| l > 0.0 && l >= cutoff).collect();
        if values.is_empty() {
            return Err(Error::DegenerateSpectrum("no positive eigenvalues".into()));
        }
        let log_max = max.ln();
        let shifted_logs = values.iter().map(|l| l.ln() - log_max).collect();
        Ok(Eigenvalues {
            values,
            shifted_logs,
        })
    }

    /// Eigenvalues of the gram matrix whose singular values are `spectrum`.
    pub fn from_spectrum(spectrum: &Spectrum) -> Result<Self> {
        Eigenvalues::new(spectrum.eigenvalues())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// True when every eigenvalue is identical (including `d = 1`).
    pub fn is_uniform(&self) -> bool {
        self.shifted_logs.iter().all(|&c| c == 0.0)
    }

    fn mean_log(&self) -> f64 {
        self.shifted_logs.iter().sum::<f64>() / self.dim() as f64
    }

    /// `log Σ exp(2β cᵢ)` over the shifted logs.
    fn log_partition(&self, beta: f64) -> f64 {
        // every shifted log is ≤ 0 with one exactly 0, so the sum is in [1, d]
        self.shifted_logs
            .iter()
            .map(|c| (2.0 * beta * c).exp())
            .sum::<f64>()
            .ln()
    }

    /// `log r(β)ᵢ`, evaluated without forming `λ^{2β}`.
    fn log_tilted(&self, beta: f64) -> Vec<f64> {
        let z = self.log_partition(beta);
        self.shifted_logs.iter().map(|c| 2.0 * beta * c - z).collect()
    }

    fn tilted(&self, beta: f64) -> Vec<f64> {
        self.log_tilted(beta).into_iter().map(f64::exp).collect()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("beta must lie in (0, 1], got {beta}")))
    }
}

/// The β-dependent part of the log-CKA lower bound.
pub fn objective_l(beta: f64, eig: &Eigenvalues) -> Result<f64> {
    check_beta(beta)?;
    Ok(beta * eig.mean_log() - 0.5 * eig.log_partition(beta))
}

/// `dL/dβ`.
pub fn first_derivative(beta: f64, eig: &Eigenvalues) -> Result<f64> {
    check_beta(beta)?;
    if eig.is_uniform() {
        return Ok(0.0);
    }
    let r = eig.tilted(beta);
    let tilted_mean: f64 = r.iter().zip(&eig.shifted_logs).map(|(r, c)| r * c).sum();
    Ok(eig.mean_log() - tilted_mean)
}

/// `d²L/dβ²`, i.e. `−2` times the variance of `log λ` under `r(β)`.
pub fn second_derivative(beta: f64, eig: &Eigenvalues) -> Result<f64> {
    check_beta(beta)?;
    Ok(second_derivative_unchecked(beta, eig))
}

fn second_derivative_unchecked(beta: f64, eig: &Eigenvalues) -> f64 {
    if eig.is_uniform() {
        return 0.0;
    }
    let r = eig.tilted(beta);
    let mean: f64 = r.iter().zip(&eig.shifted_logs).map(|(r, c)| r * c).sum();
    let var: f64 = r
        .iter()
        .zip(&eig.shifted_logs)
        .map(|(r, c)| r * (c - mean) * (c - mean))
        .sum();
    -2.0 * var
}

/// The three distributions over eigen-directions used in the entropy reading
/// of the derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDistributions {
    /// `λᵢ / Σ λ`
    pub p: Vec<f64>,
    /// uniform `1/d`
    pub q: Vec<f64>,
    /// `λᵢ^{2β} / Σ λ^{2β}`
    pub r: Vec<f64>,
}

/// Entropies of [`EigenDistributions`] at a given `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyDecomposition {
    pub beta: f64,
    pub distributions: EigenDistributions,
    /// `H(r)`
    pub entropy_r: f64,
    /// `H(q) = log d`
    pub entropy_q: f64,
    /// `H(q, r) = −Σ qᵢ log rᵢ`
    pub cross_entropy_q_r: f64,
    /// `H(r, p) = −Σ rᵢ log pᵢ`
    pub cross_entropy_r_p: f64,
    /// `D_KL(q ‖ r)`
    pub kl_q_r: f64,
}

impl EntropyDecomposition {
    /// `(1/2β)(H(r) − H(q) − D_KL(q‖r))`, which equals [`first_derivative`].
    pub fn first_derivative(&self) -> f64 {
        (self.entropy_r - self.entropy_q - self.kl_q_r) / (2.0 * self.beta)
    }

    /// `H(r, p) − ½ H(q)`. Its zero is the entropy-based characterisation of
    /// the slowest-change point; [`search_beta`] does not use it.
    pub fn half_entropy_gap(&self) -> f64 {
        self.cross_entropy_r_p - 0.5 * self.entropy_q
    }
}

pub fn entropy_decomposition(beta: f64, eig: &Eigenvalues) -> Result<EntropyDecomposition> {
    check_beta(beta)?;
    let d = eig.dim() as f64;
    let log_q = -d.ln();
    let log_r = eig.log_tilted(beta);
    let log_p_norm = eig.shifted_logs.iter().map(|c| c.exp()).sum::<f64>().ln();
    let log_p: Vec<f64> = eig.shifted_logs.iter().map(|c| c - log_p_norm).collect();

    let r: Vec<f64> = log_r.iter().map(|l| l.exp()).collect();
    let entropy_r = -r.iter().zip(&log_r).map(|(r, l)| r * l).sum::<f64>();
    let entropy_q = d.ln();
    let cross_entropy_q_r = -log_r.iter().sum::<f64>() / d;
    let cross_entropy_r_p = -r.iter().zip(&log_p).map(|(r, l)| r * l).sum::<f64>();
    let kl_q_r = log_r.iter().map(|l| log_q - l).sum::<f64>() / d;

    Ok(EntropyDecomposition {
        beta,
        distributions: EigenDistributions {
            p: log_p.iter().map(|l| l.exp()).collect(),
            q: vec![1.0 / d; eig.dim()],
            r,
        },
        entropy_r,
        entropy_q,
        cross_entropy_q_r,
        cross_entropy_r_p,
        kl_q_r: kl_q_r.max(0.0),
    })
}

/// Outcome of the β* grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageReport {
    pub grid: BetaGrid,
    pub betas: Vec<f64>,
    /// `L″(β)` at each grid point; the quantity minimised.
    pub objective_values: Vec<f64>,
    pub l_values: Vec<f64>,
    pub l_prime_values: Vec<f64>,
    pub beta_star: f64,
    pub beta_star_index: usize,
    /// Singular values the search ran on.
    pub spectrum: Spectrum,
    /// Set when all eigenvalues coincide and `β*` defaults to the grid maximum.
    pub degenerate: bool,
}

impl ShrinkageReport {
    /// CSV for plotting: a `# beta_star=…` comment, a header, then one row per
    /// grid point. The `beta_star` column repeats the chosen value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# beta_star={}", self.beta_star)?;
        writeln!(out, "beta,l,l_prime,l_double_prime,beta_star")?;
        for i in 0..self.betas.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                self.betas[i],
                self.l_values[i],
                self.l_prime_values[i],
                self.objective_values[i],
                self.beta_star
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Grid search for `β* = argmin L″(β)` over the singular values `spectrum`.
pub fn search_beta(spectrum: &Spectrum, grid: &BetaGrid) -> Result<ShrinkageReport> {
    let eig = Eigenvalues::from_spectrum(spectrum)?;
    search_eigenvalues(&eig, grid)
}

/// [`search_beta`] on gram eigenvalues directly. Ties go to the largest β.
pub fn search_eigenvalues(eig: &Eigenvalues, grid: &BetaGrid) -> Result<ShrinkageReport> {
    let betas = grid.points();
    let mut l_values = Vec::with_capacity(betas.len());
    let mut l_prime_values = Vec::with_capacity(betas.len());
    let mut objective_values = Vec::with_capacity(betas.len());
    for &b in &betas {
        l_values.push(objective_l(b, eig)?);
        l_prime_values.push(first_derivative(b, eig)?);
        objective_values.push(second_derivative_unchecked(b, eig));
    }

    let degenerate = eig.is_uniform();
    let beta_star_index = if degenerate {
        warn!("uniform spectrum of {} eigenvalues; beta* defaults to the grid maximum", eig.dim());
        betas.len() - 1
    } else {
        let mut best = 0;
        for (i, v) in objective_values.iter().enumerate() {
            if *v <= objective_values[best] {
                best = i;
            }
        }
        best
    };

    let spectrum = Spectrum::from_unsorted(eig.values().iter().map(|l| l.sqrt()).collect())?;
    Ok(ShrinkageReport {
        grid: *grid,
        beta_star: betas[beta_star_index],
        beta_star_index,
        betas,
        objective_values,
        l_values,
        l_prime_values,
        spectrum,
        degenerate,
    })
}

/// `U · diag(s^β) · Vᵀ` of the centered embedding. Singular values below the
/// zero tolerance stay zero, so `β = 0` whitens only the occupied subspace.
pub fn transform(emb: &Embedding, beta: f64) -> Result<Embedding> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta must lie in [0, 1], got {beta}")));
    }
    let centered = center_rows(emb);
    let svd = svd_of(centered.matrix())?;
    Ok(centered.with_matrix(repower(&svd, beta)))
}

fn repower(svd: &ThinSvd, beta: f64) -> nalgebra::DMatrix<f64> {
    let cutoff = ZERO_TOLERANCE * svd.s.max();
    svd.reconstruct_with(|s| if s > 0.0 && s >= cutoff { s.powf(beta) } else { 0.0 })
}

/// Centre, decompose, pick `β*` on `grid`, and rebuild `U · S^{β*} · Vᵀ`.
pub fn postprocess_beta(emb: &Embedding, grid: &BetaGrid) -> Result<(Embedding, ShrinkageReport)> {
    let centered = center_rows(emb);
    let svd = svd_of(centered.matrix())?;
    let report = search_beta(&svd.s, grid)?;
    let out = centered.with_matrix(repower(&svd, report.beta_star));
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn eig(v: &[f64]) -> Eigenvalues {
        Eigenvalues::new(v.to_vec()).unwrap()
    }

    /// Direct evaluation of the unshifted formulas.
    fn naive_l(beta: f64, l: &[f64]) -> f64 {
        let d = l.len() as f64;
        beta / d * l.iter().map(|x| x.ln()).sum::<f64>()
            - 0.5 * l.iter().map(|x| x.powf(2.0 * beta)).sum::<f64>().ln()
    }

    #[test]
    fn default_grid_has_500_points() {
        let g = BetaGrid::default();
        let pts = g.points();
        assert_eq!(pts.len(), 500);
        assert_eq!(pts[0], 0.5);
        assert_eq!(pts[499], 0.999);
        assert_eq!(pts[123], 0.623);
    }

    #[test]
    fn grid_validation() {
        assert!(BetaGrid::new(0.0, 1.0, 0.1).is_err());
        assert!(BetaGrid::new(0.6, 0.5, 0.1).is_err());
        assert!(BetaGrid::new(0.5, 1.1, 0.1).is_err());
        assert!(BetaGrid::new(0.5, 1.0, 0.0).is_err());
        assert_eq!(BetaGrid::new(0.5, 1.0, 0.1).unwrap().points().len(), 5);
        assert_eq!(BetaGrid::new(0.5, 1.0, 0.3).unwrap().points(), vec![0.5, 0.8]);
    }

    #[test]
    fn objective_examples() {
        let u = eig(&[1.0, 1.0]);
        for b in [0.2, 0.5, 1.0] {
            assert!((objective_l(b, &u).unwrap() + 0.5 * 2f64.ln()).abs() < 1e-15);
        }
        let v = objective_l(1.0, &eig(&[E, 1.0])).unwrap();
        assert!((v - (0.5 - 0.5 * (E * E + 1.0).ln())).abs() < 1e-14);
        let l = [3.0, 1.2, 0.4, 0.05];
        assert!((objective_l(0.7, &eig(&l)).unwrap() - naive_l(0.7, &l)).abs() < 1e-13);
    }

    #[test]
    fn first_derivative_examples() {
        assert_eq!(first_derivative(0.3, &eig(&[2.0, 2.0, 2.0])).unwrap(), 0.0);
        let a = first_derivative(0.5, &eig(&[E, 1.0])).unwrap();
        assert!((a - (0.5 - E / (E + 1.0))).abs() < 1e-14);
        assert!((a + 0.2311).abs() < 1e-4);
        let b = first_derivative(0.5, &eig(&[E * E, 1.0])).unwrap();
        assert!((b - (1.0 - 2.0 * E * E / (E * E + 1.0))).abs() < 1e-14);
        assert!((b + 0.7616).abs() < 1e-4);
    }

    #[test]
    fn finite_difference_slope() {
        let l = [5.0, 2.5, 1.0, 0.3, 0.01];
        let h = 1e-5;
        let e = eig(&l);
        let fd = (objective_l(0.7 + h, &e).unwrap() - objective_l(0.7 - h, &e).unwrap()) / (2.0 * h);
        let exact = first_derivative(0.7, &e).unwrap();
        assert!((fd - exact).abs() / exact.abs() < 1e-5);
    }

    #[test]
    fn second_derivative_examples() {
        assert_eq!(second_derivative(0.9, &eig(&[3.0, 3.0])).unwrap(), 0.0);
        let e = eig(&[E, 1.0]);
        let h = 1e-5;
        let fd = (first_derivative(0.5 + h, &e).unwrap() - first_derivative(0.5 - h, &e).unwrap()) / (2.0 * h);
        let v = second_derivative(0.5, &e).unwrap();
        assert!((v - fd).abs() < 1e-8);
        assert!((v + 0.3932).abs() < 1e-3);
        let scaled = second_derivative(0.5, &eig(&[4.0 * E, 4.0])).unwrap();
        assert!((scaled - v).abs() < 1e-14);
    }

    #[test]
    fn beta_out_of_range_is_rejected() {
        let e = eig(&[2.0, 1.0]);
        assert!(objective_l(0.0, &e).is_err());
        assert!(first_derivative(1.5, &e).is_err());
        assert!(second_derivative(f64::NAN, &e).is_err());
    }

    #[test]
    fn entropy_examples() {
        let u = entropy_decomposition(0.4, &eig(&[1.5, 1.5, 1.5])).unwrap();
        assert!(u.kl_q_r.abs() < 1e-15);
        assert!((u.entropy_r - 3f64.ln()).abs() < 1e-15);
        assert!((u.entropy_q - 3f64.ln()).abs() < 1e-15);

        let h = entropy_decomposition(0.5, &eig(&[E, 1.0])).unwrap();
        assert!((h.entropy_r - 0.582).abs() < 1e-3);
        assert!((h.cross_entropy_q_r - 0.813).abs() < 1e-3);
        assert!((h.first_derivative() + 0.2311).abs() < 1e-4);
        for dist in [&h.distributions.p, &h.distributions.q, &h.distributions.r] {
            assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        let single = entropy_decomposition(0.8, &eig(&[7.0])).unwrap();
        assert_eq!(single.entropy_q, 0.0);
        assert_eq!(single.kl_q_r, 0.0);
        assert_eq!(single.first_derivative(), 0.0);
    }

    #[test]
    fn search_on_uniform_spectrum_takes_grid_max() {
        let r = search_eigenvalues(&eig(&[2.0; 4]), &BetaGrid::default()).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.beta_star, 0.999);
        assert!(r.objective_values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn search_on_steep_spectrum_hits_lower_edge() {
        let e = eig(&[100.0, 10.0, 1.0]);
        let r = search_eigenvalues(&e, &BetaGrid::default()).unwrap();
        assert_eq!(r.beta_star, 0.5);
        assert_eq!(r.beta_star_index, 0);
        assert!(r.objective_values.windows(2).all(|w| w[1] > w[0]));
        // unshifted means-form values, evaluated independently
        let means_form = |b: f64| {
            let l = [100f64, 10.0, 1.0];
            let w: Vec<f64> = l.iter().map(|x| x.powf(2.0 * b)).collect();
            let s: f64 = w.iter().sum();
            let m1: f64 = w.iter().zip(&l).map(|(w, x)| w * x.ln()).sum::<f64>() / s;
            let m2: f64 = w.iter().zip(&l).map(|(w, x)| w * x.ln().powi(2)).sum::<f64>() / s;
            -2.0 * (m2 - m1 * m1)
        };
        assert!((r.objective_values[0] - means_form(0.5)).abs() < 1e-12);
        assert!((r.objective_values[0] + 1.213_485_323_557_26).abs() < 1e-10);
        assert!((second_derivative(1.0, &e).unwrap() - means_form(1.0)).abs() < 1e-12);
    }

    #[test]
    fn search_is_scale_invariant() {
        let base = [9.0, 4.0, 3.5, 1.0, 0.2, 0.01];
        let a = search_eigenvalues(&eig(&base), &BetaGrid::default()).unwrap();
        for c in [1e-3, 1e3] {
            let scaled: Vec<f64> = base.iter().map(|x| x * c).collect();
            let b = search_eigenvalues(&eig(&scaled), &BetaGrid::default()).unwrap();
            assert_eq!(a.beta_star, b.beta_star);
        }
    }

    #[test]
    fn transform_repowers_singular_values() {
        // rows chosen so the centered matrix has singular values 9, 4, 1
        let m = nalgebra::DMatrix::from_row_slice(
            6,
            3,
            &[
                9.0, 0.0, 0.0, -9.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, -4.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0,
                -1.0,
            ],
        ) / 2f64.sqrt();
        let e = Embedding::anonymous("w", m).unwrap();
        let s = |b: f64| svd_of(transform(&e, b).unwrap().matrix()).unwrap().s.values().to_vec();
        for (got, want) in s(0.5).iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        for got in s(0.0) {
            assert!((got - 1.0).abs() < 1e-12);
        }
        let same = transform(&e, 1.0).unwrap();
        assert!((same.matrix() - center_rows(&e).matrix()).amax() < 1e-10);
        assert!(transform(&e, 1.5).is_err());
    }

    #[test]
    fn csv_layout() {
        let r = search_eigenvalues(&eig(&[3.0, 1.0]), &BetaGrid::new(0.5, 1.0, 0.25).unwrap()).unwrap();
        let csv = r.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], format!("# beta_star={}", r.beta_star));
        assert_eq!(lines[1], "beta,l,l_prime,l_double_prime,beta_star");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("0.5,"));
    }
}
