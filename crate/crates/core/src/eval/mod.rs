//! Word- and sentence-level evaluation harness.
//!
//! Every task skips items with out-of-vocabulary words and reports how many
//! were evaluated and how many were skipped.

mod cluster;
mod metrics;
mod sts;
mod table;
mod tasks;
mod word;

use std::fmt;

pub use cluster::{eval_categorization, kmeans, purity, Clustering, DEFAULT_RESTARTS, MAX_ITERATIONS};
pub use metrics::{average_ranks, pearson, spearman};
pub use sts::{eval_sts, sentence_embed, Level, SentenceVector};
pub use table::{cell_text, macro_average, Category, MethodRun, ScoreTable};
pub use tasks::{
    tokenize, AnalogyQuestion, AnalogyTask, CategorizationTask, SimilarityPair, SimilarityTask,
    StsItem, StsTask,
};
pub use word::{eval_analogy, eval_similarity, predict_analogy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Spearman,
    Accuracy,
    Purity,
    Pearson,
    PrecisionAt1,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Spearman => "spearman",
            Metric::Accuracy => "accuracy",
            Metric::Purity => "purity",
            Metric::Pearson => "pearson",
            Metric::PrecisionAt1 => "precision@1",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub task: String,
    pub metric: Metric,
    pub score: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

impl EvalResult {
    pub fn total(&self) -> usize {
        self.evaluated + self.skipped
    }
}

impl fmt::Display for EvalResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}={:.4}\tevaluated={}\tskipped={}",
            self.task, self.metric, self.score, self.evaluated, self.skipped
        )
    }
}
