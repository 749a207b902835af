//! Top-PC removal and Ledoit-Wolf shrinkage on the bundled embedding.
//!
//! ```text
//! cargo run --example baselines
//! ```

use std::path::PathBuf;

use spectral_shrink::baselines::{ledoit_wolf, TopPcProjection};
use spectral_shrink::io::load_embedding;
use spectral_shrink::spectral::{center_rows, thin_svd};
use spectral_shrink::Embedding;

fn main() -> spectral_shrink::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/embedding.txt");
    let emb = load_embedding(&path)?;
    let cond = |e: &Embedding| thin_svd(e).map(|svd| svd.s.condition_number());
    println!("input condition number {:.2}", cond(&center_rows(&emb))?);

    for k in [1, 2, 3] {
        let projector = TopPcProjection::fit(&emb, k)?;
        let out = projector.apply(&emb);
        let leak = (out.matrix() * projector.directions()).amax();
        println!("top-pc k={k}: max projection on removed directions {leak:.2e}");
    }

    let (shrunk, lw) = ledoit_wolf(&emb)?;
    println!(
        "ledoit-wolf: mixing {:.4}, target {:.4}, condition number {:.2}",
        lw.mixing,
        lw.alpha,
        cond(&shrunk)?
    );
    let sample: f64 = lw.sample_spectrum.values().iter().sum();
    let shrunk_total: f64 = lw.shrunk_spectrum.values().iter().sum();
    println!("  covariance trace {sample:.4} -> {shrunk_total:.4}");
    Ok(())
}
