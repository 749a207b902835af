//! Supervised word translation: an orthogonal map fitted on a seed dictionary,
//! then nearest-neighbor or CSLS retrieval in the target space.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::embedding::{normalize_rows, Embedding};
use crate::error::{Error, Result};
use crate::eval::{EvalResult, Metric};
use crate::spectral::svd_of;

pub const DEFAULT_CSLS_K: usize = 10;

/// Word pairs, one `source target` per line; many-to-many allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BilingualDictionary {
    pub name: String,
    pub entries: Vec<(String, String)>,
}

impl BilingualDictionary {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(&name, path, &text)
    }

    pub fn parse(name: &str, origin: &Path, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            if words.len() != 2 {
                return Err(Error::parse(
                    origin,
                    i + 1,
                    format!("expected `source target`, got {} fields", words.len()),
                ));
            }
            entries.push((words[0].to_string(), words[1].to_string()));
        }
        if entries.is_empty() {
            return Err(Error::parse(origin, 0, "dictionary has no entries"));
        }
        Ok(BilingualDictionary { name: name.to_string(), entries })
    }
}

/// Orthogonal `d×d` map applied on the right: `x ↦ x·W`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMap {
    w: DMatrix<f64>,
}

impl OrthogonalMap {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn apply(&self, rows: &DMatrix<f64>) -> DMatrix<f64> {
        rows * &self.w
    }

    /// `‖WᵀW − I‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        let d = self.w.ncols();
        (self.w.transpose() * &self.w - DMatrix::identity(d, d)).norm()
    }
}

/// `W = U·Vᵀ` from the SVD of `srcᵀ·tgt`, the orthogonal minimizer of
/// `‖src·W − tgt‖_F`.
pub fn procrustes(src: &DMatrix<f64>, tgt: &DMatrix<f64>) -> Result<OrthogonalMap> {
    if src.shape() != tgt.shape() {
        return Err(Error::DimensionMismatch(format!(
            "source {}×{} vs target {}×{}",
            src.nrows(),
            src.ncols(),
            tgt.nrows(),
            tgt.ncols()
        )));
    }
    if src.nrows() == 0 || src.ncols() == 0 {
        return Err(Error::InvalidArgument("procrustes on an empty matrix".into()));
    }
    let svd = svd_of(&(src.transpose() * tgt))?;
    Ok(OrthogonalMap { w: &svd.u * svd.v.transpose() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retrieval {
    Nn,
    Csls,
}

impl FromStr for Retrieval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nn" => Ok(Retrieval::Nn),
            "csls" => Ok(Retrieval::Csls),
            other => Err(Error::InvalidArgument(format!("unknown retrieval mode `{other}`"))),
        }
    }
}

impl fmt::Display for Retrieval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Retrieval::Nn => "nn",
            Retrieval::Csls => "csls",
        })
    }
}

fn mean_top_k(mut values: Vec<f64>, k: usize) -> f64 {
    let k = k.min(values.len());
    values.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    values[..k].iter().sum::<f64>() / k as f64
}

/// Ranks target words for a query vector.
///
/// In CSLS mode the score is `2·cos(x, y) − r_T(y) − r_S(x)`, where `r_T(y)`
/// is the mean cosine of `y` to its `k` nearest mapped source vectors and
/// `r_S(x)` the mean cosine of `x` to its `k` nearest targets. `r_T` is
/// computed once when the retriever is built.
#[derive(Debug, Clone)]
pub struct Retriever {
    vocab: Vec<String>,
    targets: DMatrix<f64>,
    mode: Retrieval,
    k: usize,
    r_t: Option<Vec<f64>>,
}

impl Retriever {
    pub fn nn(tgt: &Embedding) -> Self {
        Retriever {
            vocab: tgt.vocab().to_vec(),
            targets: normalize_rows(tgt.matrix()),
            mode: Retrieval::Nn,
            k: 1,
            r_t: None,
        }
    }

    /// `sources` are the mapped source vectors, one per row.
    pub fn csls(tgt: &Embedding, sources: &DMatrix<f64>, k: usize) -> Result<Self> {
        if sources.ncols() != tgt.dim() {
            return Err(Error::DimensionMismatch(format!(
                "sources have {} columns, targets {}",
                sources.ncols(),
                tgt.dim()
            )));
        }
        if k == 0 || k > tgt.len() || k > sources.nrows() {
            return Err(Error::InvalidArgument(format!(
                "csls k = {k} with {} targets and {} sources",
                tgt.len(),
                sources.nrows()
            )));
        }
        let targets = normalize_rows(tgt.matrix());
        let sources = normalize_rows(sources);
        let r_t = (0..targets.nrows())
            .into_par_iter()
            .map(|j| {
                let sims = (&sources * targets.row(j).transpose()).as_slice().to_vec();
                mean_top_k(sims, k)
            })
            .collect();
        Ok(Retriever {
            vocab: tgt.vocab().to_vec(),
            targets,
            mode: Retrieval::Csls,
            k,
            r_t: Some(r_t),
        })
    }

    pub fn build(tgt: &Embedding, sources: &DMatrix<f64>, mode: Retrieval, k: usize) -> Result<Self> {
        match mode {
            Retrieval::Nn => Ok(Self::nn(tgt)),
            Retrieval::Csls => Self::csls(tgt, sources, k),
        }
    }

    pub fn mode(&self) -> Retrieval {
        self.mode
    }

    /// Per-target hubness `r_T`, CSLS only.
    pub fn hubness(&self) -> Option<&[f64]> {
        self.r_t.as_deref()
    }

    /// Score of every target word, in vocabulary order.
    pub fn scores(&self, query: &DVector<f64>) -> Vec<f64> {
        let norm = query.norm();
        let q = if norm > 0.0 { query / norm } else { query.clone() };
        let cos = (&self.targets * q).as_slice().to_vec();
        match &self.r_t {
            None => cos,
            Some(r_t) => {
                let r_s = mean_top_k(cos.clone(), self.k);
                cos.iter().zip(r_t).map(|(c, r)| 2.0 * c - r - r_s).collect()
            }
        }
    }

    /// Best target index; ties go to the lower index.
    pub fn top1(&self, query: &DVector<f64>) -> usize {
        let scores = self.scores(query);
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        best
    }

    /// The `top` highest-scoring target words, best first.
    pub fn retrieve(&self, query: &DVector<f64>, top: usize) -> Result<Vec<&str>> {
        if top == 0 || top > self.vocab.len() {
            return Err(Error::InvalidArgument(format!(
                "requested {top} neighbors from {} words",
                self.vocab.len()
            )));
        }
        let scores = self.scores(query);
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Ok(order[..top].iter().map(|&i| self.vocab[i].as_str()).collect())
    }
}

/// A fitted source → target map on length-normalized vectors.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub map: OrthogonalMap,
    /// Normalized source vectors after mapping.
    pub mapped_source: Embedding,
    pub target: Embedding,
    pub train_used: usize,
    pub train_dropped: usize,
}

impl Alignment {
    pub fn fit(src: &Embedding, tgt: &Embedding, train: &BilingualDictionary) -> Result<Self> {
        if src.dim() != tgt.dim() {
            return Err(Error::DimensionMismatch(format!(
                "source dimension {} vs target dimension {}",
                src.dim(),
                tgt.dim()
            )));
        }
        let src_n = src.normalized();
        let tgt_n = tgt.normalized();
        let pairs: Vec<(usize, usize)> = train
            .entries
            .iter()
            .filter_map(|(s, t)| Some((src_n.index_of(s)?, tgt_n.index_of(t)?)))
            .collect();
        if pairs.is_empty() {
            return Err(Error::not_enough(&train.name, "no training pair is in both vocabularies"));
        }
        let xs: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let map = procrustes(&src_n.matrix().select_rows(&xs), &tgt_n.matrix().select_rows(&ys))?;
        let mapped_source = src_n.with_matrix(map.apply(src_n.matrix()));
        Ok(Alignment {
            map,
            mapped_source,
            target: tgt_n,
            train_used: pairs.len(),
            train_dropped: train.entries.len() - pairs.len(),
        })
    }

    /// Precision@1 over distinct test source words. A word counts when its
    /// top retrieval is any of its listed translations; words that are out
    /// of vocabulary, or whose translations all are, are skipped.
    pub fn evaluate(&self, test: &BilingualDictionary, mode: Retrieval, k: usize) -> Result<EvalResult> {
        let mut order: Vec<&str> = Vec::new();
        let mut gold: HashMap<&str, Vec<&str>> = HashMap::new();
        for (s, t) in &test.entries {
            let slot = gold.entry(s.as_str()).or_insert_with(|| {
                order.push(s.as_str());
                Vec::new()
            });
            slot.push(t.as_str());
        }
        let queries: Vec<(usize, Vec<usize>)> = order
            .iter()
            .filter_map(|s| {
                let qi = self.mapped_source.index_of(s)?;
                let answers: Vec<usize> =
                    gold[s].iter().filter_map(|t| self.target.index_of(t)).collect();
                (!answers.is_empty()).then_some((qi, answers))
            })
            .collect();
        if queries.is_empty() {
            return Err(Error::not_enough(&test.name, "no test entry is in both vocabularies"));
        }
        let retriever = Retriever::build(&self.target, self.mapped_source.matrix(), mode, k)?;
        let correct = queries
            .par_iter()
            .filter(|(qi, answers)| {
                let best = retriever.top1(&self.mapped_source.row(*qi).transpose());
                answers.contains(&best)
            })
            .count();
        Ok(EvalResult {
            task: test.name.clone(),
            metric: Metric::PrecisionAt1,
            score: correct as f64 / queries.len() as f64,
            evaluated: queries.len(),
            skipped: order.len() - queries.len(),
        })
    }
}

/// Fits on `train` and scores precision@1 on `test`.
pub fn eval_translation(
    src: &Embedding,
    tgt: &Embedding,
    train: &BilingualDictionary,
    test: &BilingualDictionary,
    mode: Retrieval,
    k: usize,
) -> Result<EvalResult> {
    Alignment::fit(src, tgt, train)?.evaluate(test, mode, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
    }

    fn rotation(d: usize, seed: u64) -> DMatrix<f64> {
        random(d, d, seed).qr().q()
    }

    fn dict(pairs: &[(String, String)]) -> BilingualDictionary {
        BilingualDictionary { name: "d".into(), entries: pairs.to_vec() }
    }

    #[test]
    fn identity_and_rotation_recovered() {
        let x = random(40, 6, 1);
        let w = procrustes(&x, &x).unwrap();
        assert!((w.matrix() - DMatrix::<f64>::identity(6, 6)).norm() < 1e-8);
        let r = rotation(6, 2);
        let w = procrustes(&x, &(&x * &r)).unwrap();
        assert!((w.matrix() - &r).norm() < 1e-6);
        assert!(w.orthogonality_error() < 1e-8);
        assert!(procrustes(&x, &random(40, 5, 3)).is_err());
    }

    #[test]
    fn nn_matches_brute_force() {
        let t = Embedding::anonymous("t", random(30, 4, 4)).unwrap();
        let q = DVector::from_column_slice(&[0.3, -1.0, 0.2, 0.5]);
        let nn = Retriever::nn(&t);
        let ranked = nn.retrieve(&q, 30).unwrap();
        let mut brute: Vec<(usize, f64)> = (0..30)
            .map(|i| {
                let v = t.row(i).transpose();
                (i, v.dot(&q) / (v.norm() * q.norm()))
            })
            .collect();
        brute.sort_by(|a, b| b.1.total_cmp(&a.1));
        let expected: Vec<String> = brute.iter().map(|(i, _)| t.vocab()[*i].clone()).collect();
        assert_eq!(ranked, expected);
        assert!(nn.retrieve(&q, 31).is_err());
    }

    #[test]
    fn csls_demotes_a_hub() {
        // "hub" is close to every source vector, so plain cosine prefers it
        let tgt = Embedding::from_rows(
            vec!["hub".into(), "match".into(), "far".into(), "other".into()],
            &[vec![1.0, 1.0, 1.0], vec![1.0, 0.0, -0.6], vec![-1.0, 0.0, 0.2], vec![0.0, -1.0, 0.3]],
        )
        .unwrap();
        let sources = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.2, 0.0, 1.0, 0.1, 0.1, 0.0, 1.0]);
        let q = sources.row(0).transpose();
        assert_eq!(Retriever::nn(&tgt).retrieve(&q, 1).unwrap(), vec!["hub"]);
        let csls = Retriever::csls(&tgt, &sources, 2).unwrap();
        assert_eq!(csls.retrieve(&q, 2).unwrap(), vec!["match", "hub"]);
        let hub = csls.hubness().unwrap();
        assert!(hub[0] > hub[1]);
        assert!(Retriever::csls(&tgt, &sources, 4).is_err());
    }

    #[test]
    fn rotated_language_translates_perfectly() {
        let x = random(60, 8, 5);
        let words: Vec<String> = (0..60).map(|i| format!("w{i}")).collect();
        let src = Embedding::new(words.clone(), x.clone()).unwrap();
        let tgt_words: Vec<String> = (0..60).map(|i| format!("v{i}")).collect();
        let tgt = Embedding::new(tgt_words.clone(), &x * rotation(8, 6)).unwrap();
        let pairs: Vec<(String, String)> = words.iter().cloned().zip(tgt_words.iter().cloned()).collect();
        let train = dict(&pairs[..40]);
        let mut test_pairs = pairs[40..].to_vec();
        test_pairs.push(("unknown".into(), "v0".into()));
        let test = dict(&test_pairs);
        for mode in [Retrieval::Nn, Retrieval::Csls] {
            let r = eval_translation(&src, &tgt, &train, &test, mode, DEFAULT_CSLS_K).unwrap();
            assert_eq!((r.score, r.evaluated, r.skipped), (1.0, 20, 1));
        }
    }

    #[test]
    fn dictionary_format() {
        let d = BilingualDictionary::parse("d", Path::new("d.txt"), "# c\ncat gato\ncat minino\n\n").unwrap();
        assert_eq!(d.entries.len(), 2);
        let err = BilingualDictionary::parse("d", Path::new("d.txt"), "cat\n").unwrap_err();
        assert!(err.to_string().starts_with("d.txt:1:"));
        assert!(BilingualDictionary::parse("d", Path::new("d.txt"), "# only\n").is_err());
    }
}
