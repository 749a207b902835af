//! Regenerates the bundled synthetic suite.
//!
//! ```text
//! cargo run --example make_fixtures -- [output-dir]
//! ```

use std::path::PathBuf;

use spectral_shrink::fixtures::{generate, write_suite, FixtureSpec};

fn main() -> spectral_shrink::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    let spec = FixtureSpec::default();
    let suite = generate(&spec)?;
    let manifest = write_suite(&suite, &dir)?;
    println!(
        "{} words x {} dims, {} similarity pairs, {} analogies, {} concept items, {} sts pairs",
        suite.embedding.len(),
        suite.embedding.dim(),
        suite.similarity.pairs.len(),
        suite.analogy.questions.len(),
        suite.concept.items.len(),
        suite.sts.items.len()
    );
    println!("manifest: {}", manifest.display());
    Ok(())
}
