//! Sentence similarity with post-processing applied to word vectors or to
//! the averaged sentence vectors.
//!
//! ```text
//! cargo run --example sts_levels
//! ```

use std::path::PathBuf;

use spectral_shrink::eval::{eval_sts, Level, StsTask};
use spectral_shrink::io::load_embedding;
use spectral_shrink::shrinkage::BetaGrid;
use spectral_shrink::Method;

fn main() -> spectral_shrink::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let emb = load_embedding(&dir.join("embedding.txt"))?;
    let task = StsTask::load(&dir.join("sts-toy.txt"))?;

    println!("method        word     sentence");
    for method in [Method::None, Method::TopPc(2), Method::LedoitWolf, Method::Beta(BetaGrid::default())] {
        let word = eval_sts(&emb, &task, Level::Word, &method)?;
        let sentence = eval_sts(&emb, &task, Level::Sentence, &method)?;
        println!("{:<12}  {:.4}   {:.4}", method.name(), word.score, sentence.score);
    }
    Ok(())
}
