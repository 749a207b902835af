//! Word embeddings: an ordered vocabulary paired with a dense row-per-word matrix.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};

/// A vocabulary of unique words and an `n × d` matrix whose row `i` is the
/// vector of word `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    matrix: DMatrix<f64>,
}

impl Embedding {
    /// Builds an embedding, checking that the vocabulary is unique, matches
    /// the row count, and that every entry is finite.
    pub fn new(vocab: Vec<String>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::InvalidEmbedding(format!(
                "matrix must be non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if vocab.len() != matrix.nrows() {
            return Err(Error::InvalidEmbedding(format!(
                "{} words for {} rows",
                vocab.len(),
                matrix.nrows()
            )));
        }
        if let Some(pos) = matrix.iter().position(|v| !v.is_finite()) {
            let row = pos % matrix.nrows();
            return Err(Error::InvalidEmbedding(format!(
                "non-finite value in row {row} (`{}`)",
                vocab[row]
            )));
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, word) in vocab.iter().enumerate() {
            if index.insert(word.clone(), i).is_some() {
                return Err(Error::InvalidEmbedding(format!("duplicate word `{word}`")));
            }
        }
        Ok(Embedding {
            vocab,
            index,
            matrix,
        })
    }

    /// Builds an embedding from row vectors.
    pub fn from_rows(vocab: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidEmbedding(format!(
                "row {bad} has {} values, expected {d}",
                rows[bad].len()
            )));
        }
        let matrix = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Embedding::new(vocab, matrix)
    }

    /// An embedding whose words are `prefix0`, `prefix1`, ...; handy for
    /// matrices that are not word-indexed (e.g. stacked sentence vectors).
    pub fn anonymous(prefix: &str, matrix: DMatrix<f64>) -> Result<Self> {
        let vocab = (0..matrix.nrows()).map(|i| format!("{prefix}{i}")).collect();
        Embedding::new(vocab, matrix)
    }

    /// Same vocabulary, new matrix of identical shape.
    pub(crate) fn with_matrix(&self, matrix: DMatrix<f64>) -> Self {
        debug_assert_eq!(matrix.shape(), self.matrix.shape());
        Embedding {
            vocab: self.vocab.clone(),
            index: self.index.clone(),
            matrix,
        }
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Number of words.
    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    /// Always false; an embedding holds at least one word.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn row(&self, i: usize) -> RowDVector<f64> {
        self.matrix.row(i).into_owned()
    }

    pub fn vector(&self, word: &str) -> Option<DVector<f64>> {
        self.index_of(word).map(|i| self.matrix.row(i).transpose())
    }

    /// Copy with every row scaled to unit Euclidean length; zero rows stay zero.
    pub fn normalized(&self) -> Embedding {
        self.with_matrix(normalize_rows(&self.matrix))
    }

    /// Copy with the whole matrix multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Embedding {
        self.with_matrix(&self.matrix * factor)
    }
}

pub(crate) fn normalize_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

pub(crate) fn cosine(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        0.0
    } else {
        a.dot(b) / denom
    }
}
