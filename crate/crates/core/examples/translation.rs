//! Word translation between the bundled embedding and a rotated, noisy copy
//! of it, with nearest-neighbour and CSLS retrieval.
//!
//! ```text
//! cargo run --example translation
//! ```

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use spectral_shrink::align::{Alignment, BilingualDictionary, Retrieval, DEFAULT_CSLS_K};
use spectral_shrink::io::load_embedding;
use spectral_shrink::Embedding;

fn main() -> spectral_shrink::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/embedding.txt");
    let src = load_embedding(&path)?;
    let d = src.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rotation = DMatrix::from_fn(d, d, |_, _| Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .qr()
        .q();
    let spread = src.matrix().norm() / ((src.len() * d) as f64).sqrt();

    let dictionary = |range: std::ops::Range<usize>| BilingualDictionary {
        name: "same-word".into(),
        entries: src.vocab()[range].iter().map(|w| (w.clone(), w.clone())).collect(),
    };
    let (train, test) = (dictionary(0..600), dictionary(600..1000));

    println!("noise   nn       csls");
    for level in [0.0, 0.2, 0.4, 0.6] {
        let noise = Normal::new(0.0, level * spread).expect("finite sigma");
        let mut tgt = src.matrix() * &rotation;
        tgt.apply(|x| *x += noise.sample(&mut rng));
        let tgt = Embedding::new(src.vocab().to_vec(), tgt)?;

        let alignment = Alignment::fit(&src, &tgt, &train)?;
        let nn = alignment.evaluate(&test, Retrieval::Nn, DEFAULT_CSLS_K)?;
        let csls = alignment.evaluate(&test, Retrieval::Csls, DEFAULT_CSLS_K)?;
        println!("{level:<6.2}  {:.4}   {:.4}", nn.score, csls.score);
    }
    Ok(())
}
