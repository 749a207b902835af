use nalgebra::DVector;
use rayon::prelude::*;

use super::metrics::spearman;
use super::tasks::{AnalogyTask, SimilarityTask};
use super::{EvalResult, Metric};
use crate::embedding::{cosine, Embedding};
use crate::error::{Error, Result};

/// Spearman correlation between cosine similarities and human scores.
pub fn eval_similarity(emb: &Embedding, task: &SimilarityTask) -> Result<EvalResult> {
    let mut predicted = Vec::new();
    let mut gold = Vec::new();
    for pair in &task.pairs {
        if let (Some(a), Some(b)) = (emb.vector(&pair.first), emb.vector(&pair.second)) {
            predicted.push(cosine(&a, &b));
            gold.push(pair.score);
        }
    }
    if predicted.len() < 2 {
        return Err(Error::not_enough(
            &task.name,
            format!("{} in-vocabulary pairs, need 2", predicted.len()),
        ));
    }
    Ok(EvalResult {
        task: task.name.clone(),
        metric: Metric::Spearman,
        score: spearman(&predicted, &gold)?,
        evaluated: predicted.len(),
        skipped: task.pairs.len() - predicted.len(),
    })
}

/// 3CosAdd on a row-normalized embedding: the row index maximizing
/// `cos(x, a* − a + b)` over all words except `a`, `a*` and `b`. Ties go to the
/// lower index; `None` when every word is excluded.
pub fn predict_analogy(normalized: &Embedding, a: usize, a_star: usize, b: usize) -> Option<usize> {
    let m = normalized.matrix();
    let query: DVector<f64> = (m.row(a_star) - m.row(a) + m.row(b)).transpose();
    // rows are unit length (or zero), so cosine ordering equals dot ordering
    let scores = m * query;
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if i == a || i == a_star || i == b {
            continue;
        }
        if best.is_none_or(|(_, bs)| s > bs) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Accuracy of 3CosAdd over questions whose four words are all in vocabulary.
pub fn eval_analogy(emb: &Embedding, task: &AnalogyTask) -> Result<EvalResult> {
    let normalized = emb.normalized();
    let indexed: Vec<[usize; 4]> = task
        .questions
        .iter()
        .filter_map(|q| {
            Some([
                emb.index_of(&q.a)?,
                emb.index_of(&q.a_star)?,
                emb.index_of(&q.b)?,
                emb.index_of(&q.b_star)?,
            ])
        })
        .collect();
    let outcomes: Vec<Option<bool>> = indexed
        .par_iter()
        .map(|&[a, a_star, b, b_star]| predict_analogy(&normalized, a, a_star, b).map(|p| p == b_star))
        .collect();
    let evaluated = outcomes.iter().filter(|o| o.is_some()).count();
    if evaluated == 0 {
        return Err(Error::not_enough(&task.name, "no evaluable analogy questions"));
    }
    let correct = outcomes.iter().filter(|o| **o == Some(true)).count();
    Ok(EvalResult {
        task: task.name.clone(),
        metric: Metric::Accuracy,
        score: correct as f64 / evaluated as f64,
        evaluated,
        skipped: task.questions.len() - evaluated,
    })
}
