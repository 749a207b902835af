//! Synthetic oracle experiment: a ground-truth gram with a flat spectrum, an
//! estimate that overstates its large eigenvalues, and how the alignment and
//! its lower bound move with β.
//!
//! ```text
//! cargo run --example cka_bound
//! ```

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use spectral_shrink::shrinkage::{postprocess_beta, transform, BetaGrid};
use spectral_shrink::spectral::{cka, gram, log_cka_lower_bound, GramMatrix};
use spectral_shrink::Embedding;

fn main() -> spectral_shrink::Result<()> {
    let (n, d) = (300, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut noise = DMatrix::from_fn(n, d, |_, _| Distribution::<f64>::sample(&StandardNormal, &mut rng));
    let mean = noise.row_mean();
    for mut row in noise.row_iter_mut() {
        row -= &mean;
    }
    let q = noise.qr().q();

    let s_true: Vec<f64> = (0..d).map(|i| (-0.04 * i as f64).exp()).collect();
    let s_est: Vec<f64> = s_true.iter().map(|s| 5.0 * s.powi(8)).collect();
    let oracle_eig: Vec<f64> = s_true.iter().map(|s| s * s).collect();
    let oracle = GramMatrix::new(&q * DMatrix::from_diagonal(&DVector::from_vec(oracle_eig.clone())) * q.transpose())?;
    let emb = Embedding::anonymous("w", &q * DMatrix::from_diagonal(&DVector::from_vec(s_est.clone())))?;

    println!("beta   cka      log-bound");
    for beta in [0.25, 0.5, 0.75, 1.0] {
        let shrunk = transform(&emb, beta)?;
        let est_eig: Vec<f64> = s_est.iter().map(|s| s.powf(2.0 * beta)).collect();
        println!(
            "{beta:.2}   {:.4}   {:.4}",
            cka(&oracle, &gram(&shrunk)?)?,
            log_cka_lower_bound(&oracle_eig, &est_eig)?
        );
    }
    let (shrunk, report) = postprocess_beta(&emb, &BetaGrid::default())?;
    println!("beta* = {}: cka {:.4}", report.beta_star, cka(&oracle, &gram(&shrunk)?)?);
    Ok(())
}
