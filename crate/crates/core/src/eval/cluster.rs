use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tasks::CategorizationTask;
use super::{EvalResult, Metric};
use crate::embedding::Embedding;
use crate::error::{Error, Result};

pub const DEFAULT_RESTARTS: usize = 10;
pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub sse: f64,
    pub iterations: usize,
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    (0..points.ncols()).map(|j| (points[(i, j)] - centers[(c, j)]).powi(2)).sum()
}

/// Closest center; on ties the current assignment is kept, else the lowest index.
fn nearest(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, current: usize) -> (usize, f64) {
    let mut best = if current < centers.nrows() {
        (current, sq_dist(points, i, centers, current))
    } else {
        (0, f64::INFINITY)
    };
    for c in 0..centers.nrows() {
        let d = sq_dist(points, i, centers, c);
        if d < best.1 || (d == best.1 && c < best.0 && best.0 != current) {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n, d) = points.shape();
    let mut centers = DMatrix::zeros(k, d);
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from(&points.row(first));
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            // every point coincides with a center already
            rng.random_range(0..n)
        };
        centers.row_mut(c).copy_from(&points.row(pick));
        for (i, slot) in dist.iter_mut().enumerate() {
            *slot = slot.min(sq_dist(points, i, &centers, c));
        }
    }
    centers
}

fn lloyd(points: &DMatrix<f64>, k: usize, seed: u64) -> Clustering {
    let (n, d) = points.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_init(points, k, &mut rng);
    let mut assignments = vec![usize::MAX; n];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut changed = false;
        for (i, slot) in assignments.iter_mut().enumerate() {
            let (c, _) = nearest(points, i, &centers, *slot);
            if *slot != c {
                *slot = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = DMatrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            counts[c] += 1;
            for j in 0..d {
                sums[(c, j)] += points[(i, j)];
            }
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let row = sums.row(c) / count as f64;
                centers.row_mut(c).copy_from(&row);
            }
        }
        // an empty cluster takes the point farthest from its own center
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[assignments[i]] > 1)
                .map(|i| (i, sq_dist(points, i, &centers, assignments[i])))
                .fold(None::<(usize, f64)>, |acc, (i, dist)| match acc {
                    Some((_, best)) if best >= dist => acc,
                    _ => Some((i, dist)),
                });
            if let Some((i, _)) = far {
                counts[assignments[i]] -= 1;
                counts[c] = 1;
                assignments[i] = c;
                centers.row_mut(c).copy_from(&points.row(i));
            }
        }
    }
    let sse = assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(points, i, &centers, c))
        .sum();
    Clustering { assignments, sse, iterations }
}

/// k-means over the rows of `points` with k-means++ seeding.
///
/// Restart `i` is seeded with `seed + i`; the lowest SSE wins, earlier
/// restarts on ties.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Result<Clustering> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} with {n} points")));
    }
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite point coordinate".into()));
    }
    let runs: Vec<Clustering> = (0..restarts as u64)
        .into_par_iter()
        .map(|i| lloyd(points, k, seed.wrapping_add(i)))
        .collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.sse < runs[best].sse {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).expect("at least one restart"))
}

/// Fraction of items whose cluster's majority label matches their own.
pub fn purity(assignments: &[usize], labels: &[&str]) -> Result<f64> {
    if assignments.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} assignments vs {} labels",
            assignments.len(),
            labels.len()
        )));
    }
    if assignments.is_empty() {
        return Err(Error::InvalidArgument("purity of an empty clustering".into()));
    }
    let mut votes: HashMap<usize, HashMap<&str, usize>> = HashMap::new();
    for (&c, &l) in assignments.iter().zip(labels) {
        *votes.entry(c).or_default().entry(l).or_default() += 1;
    }
    let correct: usize = votes.values().map(|v| v.values().copied().max().unwrap_or(0)).sum();
    Ok(correct as f64 / assignments.len() as f64)
}

/// Clusters in-vocabulary word vectors into as many groups as there are gold
/// categories and scores purity.
pub fn eval_categorization(
    emb: &Embedding,
    task: &CategorizationTask,
    seed: u64,
    restarts: usize,
) -> Result<EvalResult> {
    let k = task.num_categories();
    let present: Vec<(usize, &str)> = task
        .items
        .iter()
        .filter_map(|(w, l)| emb.index_of(w).map(|i| (i, l.as_str())))
        .collect();
    if present.len() < k.max(2) {
        return Err(Error::not_enough(
            &task.name,
            format!("{} in-vocabulary items for {k} categories", present.len()),
        ));
    }
    let rows: Vec<usize> = present.iter().map(|(i, _)| *i).collect();
    let points = emb.matrix().select_rows(&rows);
    let clustering = kmeans(&points, k, seed, restarts)?;
    let labels: Vec<&str> = present.iter().map(|(_, l)| *l).collect();
    Ok(EvalResult {
        task: task.name.clone(),
        metric: Metric::Purity,
        score: purity(&clustering.assignments, &labels)?,
        evaluated: present.len(),
        skipped: task.items.len() - present.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> DMatrix<f64> {
        let mut rows = Vec::new();
        for i in 0..5 {
            let t = i as f64 * 0.1;
            rows.extend([t, -t]);
        }
        for i in 0..5 {
            let t = i as f64 * 0.1;
            rows.extend([10.0 + t, 10.0 - t]);
        }
        DMatrix::from_row_slice(10, 2, &rows)
    }

    #[test]
    fn separates_two_blobs() {
        let c = kmeans(&blobs(), 2, 7, 3).unwrap();
        assert!(c.assignments[..5].iter().all(|&a| a == c.assignments[0]));
        assert!(c.assignments[5..].iter().all(|&a| a == c.assignments[5]));
        assert_ne!(c.assignments[0], c.assignments[5]);
    }

    #[test]
    fn one_cluster_per_point() {
        let p = blobs();
        let c = kmeans(&p, 10, 1, 2).unwrap();
        assert_eq!(c.sse, 0.0);
        let mut seen = c.assignments.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 10);
    }

    #[test]
    fn deterministic_and_validated() {
        let p = blobs();
        assert_eq!(kmeans(&p, 3, 9, 4).unwrap(), kmeans(&p, 3, 9, 4).unwrap());
        assert!(kmeans(&p, 11, 0, 1).is_err());
        assert!(kmeans(&p, 0, 0, 1).is_err());
    }

    #[test]
    fn duplicate_points_fill_every_cluster() {
        let p = DMatrix::from_row_slice(4, 1, &[1.0, 1.0, 1.0, 5.0]);
        let c = kmeans(&p, 3, 3, 1).unwrap();
        let mut seen = c.assignments.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn purity_definition() {
        assert_eq!(purity(&[0, 0, 0, 0], &["a", "a", "a", "b"]).unwrap(), 0.75);
        let a = purity(&[0, 0, 1, 1, 1], &["x", "y", "y", "y", "x"]).unwrap();
        let b = purity(&[5, 5, 2, 2, 2], &["x", "y", "y", "y", "x"]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, 0.6);
    }

    #[test]
    fn categorization_on_separated_blobs() {
        let p = blobs();
        let words: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
        let emb = Embedding::new(words.clone(), p).unwrap();
        let mut items: Vec<(String, String)> = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), if i < 5 { "low" } else { "high" }.to_string()))
            .collect();
        items.push(("missing".into(), "low".into()));
        let task = CategorizationTask { name: "blobs".into(), items };
        let r = eval_categorization(&emb, &task, 42, DEFAULT_RESTARTS).unwrap();
        assert_eq!((r.score, r.evaluated, r.skipped), (1.0, 10, 1));
    }
}
