use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use super::metrics::pearson;
use super::tasks::StsTask;
use super::{EvalResult, Metric};
use crate::embedding::{cosine, Embedding};
use crate::error::{Error, Result};
use crate::method::Method;

/// Where the post-processor runs in the STS pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Process the word embedding, then average words into sentences.
    Word,
    /// Average raw words, then process the matrix of sentence vectors.
    Sentence,
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(Level::Word),
            "sentence" => Ok(Level::Sentence),
            other => Err(Error::InvalidArgument(format!("unknown level `{other}`"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Word => "word",
            Level::Sentence => "sentence",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVector {
    pub vector: DVector<f64>,
    /// No token was in vocabulary; `vector` is zero and the pair must be skipped.
    pub all_oov: bool,
}

/// Mean of the in-vocabulary token vectors.
pub fn sentence_embed(emb: &Embedding, sentence: &[String]) -> SentenceVector {
    let mut sum = DVector::zeros(emb.dim());
    let mut count = 0usize;
    for token in sentence {
        if let Some(i) = emb.index_of(token) {
            sum += emb.matrix().row(i).transpose();
            count += 1;
        }
    }
    if count == 0 {
        return SentenceVector { vector: sum, all_oov: true };
    }
    SentenceVector { vector: sum / count as f64, all_oov: false }
}

/// Pearson correlation between sentence-pair cosines and human scores.
pub fn eval_sts(emb: &Embedding, task: &StsTask, level: Level, method: &Method) -> Result<EvalResult> {
    let word_level;
    let source = match level {
        Level::Word => {
            word_level = method.apply(emb)?.embedding;
            &word_level
        }
        Level::Sentence => emb,
    };

    let mut pairs = Vec::new();
    let mut gold = Vec::new();
    for item in &task.items {
        let a = sentence_embed(source, &item.first);
        let b = sentence_embed(source, &item.second);
        if !a.all_oov && !b.all_oov {
            pairs.push((a.vector, b.vector));
            gold.push(item.score);
        }
    }
    if pairs.len() < 2 {
        return Err(Error::not_enough(
            &task.name,
            format!("{} evaluable sentence pairs, need 2", pairs.len()),
        ));
    }

    let predicted: Vec<f64> = match level {
        Level::Word => pairs.iter().map(|(a, b)| cosine(a, b)).collect(),
        Level::Sentence => {
            // rows 2i and 2i+1 are the two sides of pair i
            let m = pairs.len();
            let stacked = DMatrix::from_fn(2 * m, emb.dim(), |r, c| {
                let (a, b) = &pairs[r / 2];
                if r % 2 == 0 { a[c] } else { b[c] }
            });
            let sentences = Embedding::anonymous("s", stacked)?;
            let processed = method.apply(&sentences)?.embedding;
            (0..m)
                .map(|i| cosine(&processed.row(2 * i).transpose(), &processed.row(2 * i + 1).transpose()))
                .collect()
        }
    };

    Ok(EvalResult {
        task: task.name.clone(),
        metric: Metric::Pearson,
        score: pearson(&predicted, &gold)?,
        evaluated: pairs.len(),
        skipped: task.items.len() - pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::tasks::StsItem;
    use crate::shrinkage::BetaGrid;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn fixture() -> Embedding {
        let words = ["a", "b", "c", "d", "e", "f"];
        let rows = [
            vec![1.0, 0.2, 0.0],
            vec![0.8, 1.0, 0.1],
            vec![0.0, 1.0, 0.5],
            vec![-0.3, 0.1, 1.0],
            vec![0.5, -0.7, 0.2],
            vec![0.1, 0.4, -0.9],
        ];
        Embedding::from_rows(words.iter().map(|w| w.to_string()).collect(), &rows).unwrap()
    }

    fn task(emb: &Embedding) -> StsTask {
        let sentences = [("a b", "c"), ("a", "d e"), ("b c d", "f"), ("e f", "a c"), ("d", "b f"), ("zz", "a")];
        let items = sentences
            .iter()
            .map(|(x, y)| {
                let (x, y) = (toks(x), toks(y));
                let (sx, sy) = (sentence_embed(emb, &x), sentence_embed(emb, &y));
                let score = if sx.all_oov || sy.all_oov { 0.0 } else { cosine(&sx.vector, &sy.vector) };
                StsItem { first: x, second: y, score }
            })
            .collect();
        StsTask { name: "toy".into(), items }
    }

    #[test]
    fn averaging() {
        let e = fixture();
        let one = sentence_embed(&e, &toks("c"));
        assert_eq!(one.vector, e.vector("c").unwrap());
        let two = sentence_embed(&e, &toks("a zz b"));
        assert_eq!(two.vector, (e.vector("a").unwrap() + e.vector("b").unwrap()) / 2.0);
        let none = sentence_embed(&e, &toks("zz yy"));
        assert!(none.all_oov && none.vector.iter().all(|v| *v == 0.0));
        assert!(sentence_embed(&e, &[]).all_oov);
    }

    #[test]
    fn gold_from_cosines_scores_one() {
        let e = fixture();
        let t = task(&e);
        let word = eval_sts(&e, &t, Level::Word, &Method::None).unwrap();
        let sentence = eval_sts(&e, &t, Level::Sentence, &Method::None).unwrap();
        assert!((word.score - 1.0).abs() < 1e-12);
        assert_eq!(word, sentence);
        assert_eq!((word.evaluated, word.skipped), (5, 1));
    }

    #[test]
    fn levels_differ_under_a_real_method() {
        let e = fixture();
        let t = task(&e);
        let m = Method::Beta(BetaGrid::default());
        let word = eval_sts(&e, &t, Level::Word, &m).unwrap();
        let sentence = eval_sts(&e, &t, Level::Sentence, &m).unwrap();
        assert!((-1.0..=1.0).contains(&word.score));
        assert!((-1.0..=1.0).contains(&sentence.score));
        assert_ne!(word.score, sentence.score);
    }
}
