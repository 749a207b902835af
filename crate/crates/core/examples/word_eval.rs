//! Word similarity, analogy and concept categorization under each method.
//!
//! ```text
//! cargo run --example word_eval
//! ```

use std::path::PathBuf;

use spectral_shrink::eval::{
    eval_analogy, eval_categorization, eval_similarity, AnalogyTask, CategorizationTask, SimilarityTask,
    DEFAULT_RESTARTS,
};
use spectral_shrink::io::load_embedding;
use spectral_shrink::shrinkage::BetaGrid;
use spectral_shrink::Method;

fn main() -> spectral_shrink::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let emb = load_embedding(&dir.join("embedding.txt"))?;
    let sim = SimilarityTask::load(&dir.join("ws-toy.txt"))?;
    let analogy = AnalogyTask::load(&dir.join("analogy-toy.txt"))?;
    let concept = CategorizationTask::load(&dir.join("concept-toy.txt"))?;

    let methods = [Method::None, Method::TopPc(2), Method::LedoitWolf, Method::Beta(BetaGrid::default())];
    for method in methods {
        let processed = method.apply(&emb)?.embedding;
        println!("{}", method.name());
        println!("  {}", eval_similarity(&processed, &sim)?);
        println!("  {}", eval_analogy(&processed, &analogy)?);
        println!("  {}", eval_categorization(&processed, &concept, 42, DEFAULT_RESTARTS)?);
    }
    Ok(())
}
