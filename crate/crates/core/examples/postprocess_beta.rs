//! Picks β* for the bundled embedding and repowers its spectrum.
//!
//! ```text
//! cargo run --example postprocess_beta -- [embedding.txt] [output.txt]
//! ```

use std::path::PathBuf;

use spectral_shrink::io::{load_embedding, save_embedding, Format};
use spectral_shrink::shrinkage::{postprocess_beta, BetaGrid};
use spectral_shrink::spectral::{center_rows, thin_svd};

fn main() -> spectral_shrink::Result<()> {
    let mut args = std::env::args_os().skip(1).map(PathBuf::from);
    let input = args
        .next()
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/embedding.txt"));
    let emb = load_embedding(&input)?;

    let (shrunk, report) = postprocess_beta(&emb, &BetaGrid::default())?;
    let before = thin_svd(&center_rows(&emb))?.s;
    let after = thin_svd(&shrunk)?.s;

    println!("{} words x {} dims", emb.len(), emb.dim());
    println!("beta* = {} (grid index {})", report.beta_star, report.beta_star_index);
    println!("condition number {:.2} -> {:.2}", before.condition_number(), after.condition_number());
    println!("rank  s_in        s_out");
    for (i, (a, b)) in before.values().iter().zip(after.values()).enumerate().take(8) {
        println!("{:>4}  {a:<10.4}  {b:.4}", i + 1);
    }

    if let Some(output) = args.next() {
        save_embedding(&shrunk, &output, Format::Word2Vec)?;
        println!("wrote {}", output.display());
    }
    Ok(())
}
