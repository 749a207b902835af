//! Deterministic synthetic benchmark suite.
//!
//! A clean latent space holds category clusters and relation offsets; the
//! published embedding is that space pushed through an anisotropic linear map
//! plus a shared offset, the kind of distortion post-processing is meant to
//! undo. Gold scores for every task come from the clean space.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embedding::{cosine, Embedding};
use crate::error::{Error, Result};
use crate::eval::{
    AnalogyQuestion, AnalogyTask, CategorizationTask, Category, SimilarityPair, SimilarityTask, StsItem,
    StsTask,
};
use crate::io::{format_value, save_embedding, write_text_atomic, Format};

const CATEGORIES: [&str; 8] = ["animal", "city", "color", "tool", "food", "sport", "metal", "music"];
const RELATIONS: [&str; 6] = ["plural", "past", "female", "capital", "comparative", "opposite"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureSpec {
    pub words: usize,
    pub dim: usize,
    pub seed: u64,
    pub per_category: usize,
    pub per_relation: usize,
    /// Log-ratio between the largest and smallest distortion gain.
    pub anisotropy: f64,
    /// Norm of the offset shared by every word.
    pub common_offset: f64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            words: 1000,
            dim: 32,
            seed: 42,
            per_category: 20,
            per_relation: 16,
            anisotropy: 4.0,
            common_offset: 4.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixtureSuite {
    /// Distorted vectors, the input to post-processing.
    pub embedding: Embedding,
    /// Latent vectors the gold scores were computed from.
    pub clean: Embedding,
    pub similarity: SimilarityTask,
    pub analogy: AnalogyTask,
    pub concept: CategorizationTask,
    pub sts: StsTask,
}

fn normal_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| scale * Distribution::<f64>::sample(&StandardNormal, rng))
}

fn random_rotation(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng)).qr().q()
}

pub fn generate(spec: &FixtureSpec) -> Result<FixtureSuite> {
    let needed = CATEGORIES.len() * spec.per_category + RELATIONS.len() * spec.per_relation * 2;
    if spec.words < needed || spec.dim < 4 || spec.per_category < 2 || spec.per_relation < 2 {
        return Err(Error::InvalidArgument(format!(
            "fixture needs at least {needed} words, dimension 4 and 2 items per group"
        )));
    }
    let d = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut words: Vec<String> = Vec::with_capacity(spec.words);
    let mut latent: Vec<DVector<f64>> = Vec::with_capacity(spec.words);
    let mut labelled: Vec<(String, String)> = Vec::new();

    for name in CATEGORIES {
        let center = normal_vec(&mut rng, d, 1.0);
        for i in 0..spec.per_category {
            let w = format!("{name}{i:02}");
            words.push(w.clone());
            latent.push(&center + normal_vec(&mut rng, d, 0.8));
            labelled.push((w, name.to_string()));
        }
    }

    let mut relation_pairs: Vec<(String, Vec<(String, String)>)> = Vec::new();
    for rel in RELATIONS {
        let offset = normal_vec(&mut rng, d, 0.9);
        let mut pairs = Vec::new();
        for i in 0..spec.per_relation {
            let base = normal_vec(&mut rng, d, 1.0);
            let a = format!("{rel}{i:02}");
            let b = format!("{rel}{i:02}x");
            words.push(a.clone());
            latent.push(base.clone());
            words.push(b.clone());
            latent.push(base + &offset + normal_vec(&mut rng, d, 0.3));
            pairs.push((a, b));
        }
        relation_pairs.push((rel.to_string(), pairs));
    }

    while words.len() < spec.words {
        words.push(format!("w{:04}", words.len()));
        latent.push(normal_vec(&mut rng, d, 1.0));
    }

    let clean_m = DMatrix::from_fn(spec.words, d, |i, j| latent[i][j]);
    let clean = Embedding::new(words.clone(), clean_m.clone())?;

    let rotation = random_rotation(&mut rng, d);
    let gains = DVector::from_fn(d, |j, _| (spec.anisotropy * (1.0 - j as f64 / (d - 1) as f64)).exp());
    let distortion = &rotation * DMatrix::from_diagonal(&gains);
    let offset = normal_vec(&mut rng, d, 1.0).normalize() * spec.common_offset * gains.mean();
    let mut distorted = &clean_m * distortion;
    for mut row in distorted.row_iter_mut() {
        row += offset.transpose();
    }
    let embedding = Embedding::new(words.clone(), distorted)?;

    let similarity = similarity_task(&mut rng, &clean, &labelled);
    let analogy = analogy_task(&relation_pairs);
    let concept = CategorizationTask { name: "concept-toy".into(), items: labelled.clone() };
    let sts = sts_task(&mut rng, &clean, &labelled);

    Ok(FixtureSuite { embedding, clean, similarity, analogy, concept, sts })
}

fn similarity_task(rng: &mut ChaCha8Rng, clean: &Embedding, labelled: &[(String, String)]) -> SimilarityTask {
    let mut pairs = Vec::new();
    for _ in 0..60 {
        let i = rng.random_range(0..labelled.len());
        // half of the pairs share a category so the gold range is wide
        let j = if rng.random_bool(0.5) {
            let same: Vec<usize> = (0..labelled.len())
                .filter(|&j| j != i && labelled[j].1 == labelled[i].1)
                .collect();
            same[rng.random_range(0..same.len())]
        } else {
            rng.random_range(0..clean.len())
        };
        let (a, b) = (labelled[i].0.clone(), clean.vocab()[j].clone());
        if a == b {
            continue;
        }
        let cos = cosine(&clean.vector(&a).expect("fixture word"), &clean.vector(&b).expect("fixture word"));
        pairs.push(SimilarityPair { first: a, second: b, score: round2(10.0 * (cos + 1.0) / 2.0) });
    }
    SimilarityTask { name: "ws-toy".into(), pairs }
}

fn analogy_task(relations: &[(String, Vec<(String, String)>)]) -> AnalogyTask {
    let mut questions = Vec::new();
    for (rel, pairs) in relations {
        for (i, (a, a_star)) in pairs.iter().enumerate() {
            for (b, b_star) in pairs.iter().skip(i + 1).take(3) {
                questions.push(AnalogyQuestion {
                    a: a.clone(),
                    a_star: a_star.clone(),
                    b: b.clone(),
                    b_star: b_star.clone(),
                    section: Some(rel.clone()),
                });
            }
        }
    }
    AnalogyTask { name: "analogy-toy".into(), questions }
}

fn sts_task(rng: &mut ChaCha8Rng, clean: &Embedding, labelled: &[(String, String)]) -> StsTask {
    let mut items = Vec::new();
    let mut pool: Vec<&str> = labelled.iter().map(|(w, _)| w.as_str()).collect();
    for _ in 0..40 {
        let len1 = rng.random_range(2..5);
        let len2 = rng.random_range(2..5);
        pool.shuffle(rng);
        let first: Vec<String> = pool[..len1].iter().map(|w| w.to_string()).collect();
        // the second sentence reuses a word from the first half of the time
        let mut second: Vec<String> = pool[len1..len1 + len2].iter().map(|w| w.to_string()).collect();
        if rng.random_bool(0.5) {
            second[0] = first[0].clone();
        }
        let mean = |ws: &[String]| {
            ws.iter().map(|w| clean.vector(w).expect("fixture word")).sum::<DVector<f64>>() / ws.len() as f64
        };
        let score = round2(5.0 * (cosine(&mean(&first), &mean(&second)) + 1.0) / 2.0);
        items.push(StsItem { first, second, score });
    }
    StsTask { name: "sts-toy".into(), items }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn similarity_text(task: &SimilarityTask) -> String {
    let mut s = String::from("# word1\tword2\tscore\n");
    for p in &task.pairs {
        let _ = writeln!(s, "{}\t{}\t{}", p.first, p.second, format_value(p.score));
    }
    s
}

pub fn analogy_text(task: &AnalogyTask) -> String {
    let mut s = String::new();
    let mut section: Option<&str> = None;
    for q in &task.questions {
        if q.section.as_deref() != section {
            section = q.section.as_deref();
            let _ = writeln!(s, ": {}", section.unwrap_or(""));
        }
        let _ = writeln!(s, "{} {} {} {}", q.a, q.a_star, q.b, q.b_star);
    }
    s
}

pub fn categorization_text(task: &CategorizationTask) -> String {
    let mut s = String::from("# word\tlabel\n");
    for (w, l) in &task.items {
        let _ = writeln!(s, "{w}\t{l}");
    }
    s
}

pub fn sts_text(task: &StsTask) -> String {
    let mut s = String::from("# sentence1\tsentence2\tscore\n");
    for item in &task.items {
        let _ = writeln!(s, "{}\t{}\t{}", item.first.join(" "), item.second.join(" "), format_value(item.score));
    }
    s
}

/// Writes the embedding, the four task files and `manifest.txt` into `dir`.
/// The manifest lists similarity, analogy and concept; the STS file sits
/// alongside for the sentence-level commands. Returns the manifest path.
pub fn write_suite(suite: &FixtureSuite, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_embedding(&suite.embedding, &dir.join("embedding.txt"), Format::Word2Vec)?;
    write_text_atomic(&dir.join("ws-toy.txt"), &similarity_text(&suite.similarity))?;
    write_text_atomic(&dir.join("analogy-toy.txt"), &analogy_text(&suite.analogy))?;
    write_text_atomic(&dir.join("concept-toy.txt"), &categorization_text(&suite.concept))?;
    write_text_atomic(&dir.join("sts-toy.txt"), &sts_text(&suite.sts))?;
    let manifest = dir.join("manifest.txt");
    let body = format!(
        "# category path\n{} ws-toy.txt\n{} analogy-toy.txt\n{} concept-toy.txt\n",
        Category::Similarity,
        Category::Analogy,
        Category::Concept
    );
    write_text_atomic(&manifest, &body)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        let spec = FixtureSpec { words: 400, dim: 12, ..FixtureSpec::default() };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.embedding, b.embedding);
        assert_eq!(a.similarity, b.similarity);
        assert_eq!(a.embedding.len(), 400);
        assert_eq!(a.concept.num_categories(), CATEGORIES.len());
        assert!(a.analogy.questions.iter().all(|q| a.embedding.contains(&q.b_star)));
        assert!(a.similarity.pairs.len() >= 50);
        assert!(generate(&FixtureSpec { words: 10, ..spec }).is_err());
    }

    #[test]
    fn task_text_round_trips() {
        let suite = generate(&FixtureSpec { words: 400, dim: 12, ..FixtureSpec::default() }).unwrap();
        let origin = Path::new("mem");
        let sim = SimilarityTask::parse("ws-toy", origin, &similarity_text(&suite.similarity)).unwrap();
        assert_eq!(sim, suite.similarity);
        let ana = AnalogyTask::parse("analogy-toy", origin, &analogy_text(&suite.analogy)).unwrap();
        assert_eq!(ana, suite.analogy);
        let cat = CategorizationTask::parse("concept-toy", origin, &categorization_text(&suite.concept)).unwrap();
        assert_eq!(cat, suite.concept);
        let sts = StsTask::parse("sts-toy", origin, &sts_text(&suite.sts)).unwrap();
        assert_eq!(sts, suite.sts);
    }
}
