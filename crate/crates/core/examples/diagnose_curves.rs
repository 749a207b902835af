//! The bound L(β) and its derivatives over the grid, plus the entropy terms
//! that make up L′.
//!
//! ```text
//! cargo run --example diagnose_curves
//! ```

use std::path::PathBuf;

use spectral_shrink::io::load_embedding;
use spectral_shrink::shrinkage::{entropy_decomposition, search_beta, BetaGrid, Eigenvalues};
use spectral_shrink::spectral::{center_rows, thin_svd};

fn main() -> spectral_shrink::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/embedding.txt");
    let spectrum = thin_svd(&center_rows(&load_embedding(&path)?))?.s;
    let report = search_beta(&spectrum, &BetaGrid::default())?;

    println!("beta    L          L'         L''");
    for i in (0..report.betas.len()).step_by(50) {
        println!(
            "{:.3}  {:<9.5}  {:<9.5}  {:.5}",
            report.betas[i], report.l_values[i], report.l_prime_values[i], report.objective_values[i]
        );
    }
    println!("beta* = {}", report.beta_star);

    let eig = Eigenvalues::from_spectrum(&spectrum)?;
    println!();
    println!("beta  H(r)     H(q)     KL(q||r)  L'");
    for beta in [0.5, 0.75, 1.0] {
        let e = entropy_decomposition(beta, &eig)?;
        println!(
            "{beta:.2}  {:<7.4}  {:<7.4}  {:<8.4}  {:.5}",
            e.entropy_r,
            e.entropy_q,
            e.kl_q_r,
            e.first_derivative()
        );
    }
    println!();
    let mut csv = Vec::new();
    report.write_csv(&mut csv).expect("in-memory write");
    let text = String::from_utf8(csv).expect("utf-8 csv");
    println!("csv head:");
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
