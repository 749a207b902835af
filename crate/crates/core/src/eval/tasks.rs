//! Benchmark task types and their line-oriented text formats.
//!
//! All formats are UTF-8 with one record per line; blank lines and lines
//! starting with `#` are ignored.
//!
//! | task           | line format                              |
//! |----------------|------------------------------------------|
//! | similarity     | `word1<TAB>word2<TAB>score`              |
//! | analogy        | `: section` headers, else `a a* b b*`    |
//! | categorization | `word<TAB>label`                         |
//! | sts            | `sentence1<TAB>sentence2<TAB>score`      |

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityPair {
    pub first: String,
    pub second: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTask {
    pub name: String,
    pub pairs: Vec<SimilarityPair>,
}

/// "`a` is to `a_star` as `b` is to `b_star`".
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyQuestion {
    pub a: String,
    pub a_star: String,
    pub b: String,
    pub b_star: String,
    pub section: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyTask {
    pub name: String,
    pub questions: Vec<AnalogyQuestion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategorizationTask {
    pub name: String,
    pub items: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StsItem {
    pub first: Vec<String>,
    pub second: Vec<String>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StsTask {
    pub name: String,
    pub items: Vec<StsItem>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn task_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Non-comment lines with 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_score(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid score `{}`", field.trim())))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, "score must be finite"));
    }
    Ok(v)
}

fn tab_fields<'a>(path: &Path, line: usize, text: &'a str, expected: usize) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = text.split('\t').collect();
    if fields.len() != expected || fields.iter().any(|f| f.trim().is_empty()) {
        return Err(Error::parse(
            path,
            line,
            format!("expected {expected} non-empty tab-separated fields, got {}", fields.len()),
        ));
    }
    Ok(fields)
}

impl SimilarityTask {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&task_name(path), path, &read(path)?)
    }

    pub fn parse(name: &str, origin: &Path, text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (line, rec) in records(text) {
            let f = tab_fields(origin, line, rec, 3)?;
            pairs.push(SimilarityPair {
                first: f[0].trim().to_string(),
                second: f[1].trim().to_string(),
                score: parse_score(origin, line, f[2])?,
            });
        }
        if pairs.len() < 2 {
            return Err(Error::parse(origin, 0, "similarity task needs at least 2 pairs"));
        }
        Ok(SimilarityTask {
            name: name.to_string(),
            pairs,
        })
    }
}

impl AnalogyTask {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&task_name(path), path, &read(path)?)
    }

    pub fn parse(name: &str, origin: &Path, text: &str) -> Result<Self> {
        let mut section = None;
        let mut questions = Vec::new();
        for (line, rec) in records(text) {
            if let Some(rest) = rec.strip_prefix(':') {
                section = Some(rest.trim().to_string());
                continue;
            }
            let words: Vec<&str> = rec.split_whitespace().collect();
            if words.len() != 4 {
                return Err(Error::parse(
                    origin,
                    line,
                    format!("expected 4 words, got {}", words.len()),
                ));
            }
            questions.push(AnalogyQuestion {
                a: words[0].to_string(),
                a_star: words[1].to_string(),
                b: words[2].to_string(),
                b_star: words[3].to_string(),
                section: section.clone(),
            });
        }
        if questions.is_empty() {
            return Err(Error::parse(origin, 0, "analogy task has no questions"));
        }
        Ok(AnalogyTask {
            name: name.to_string(),
            questions,
        })
    }
}

impl CategorizationTask {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&task_name(path), path, &read(path)?)
    }

    pub fn parse(name: &str, origin: &Path, text: &str) -> Result<Self> {
        let mut items = Vec::new();
        for (line, rec) in records(text) {
            let f = tab_fields(origin, line, rec, 2)?;
            items.push((f[0].trim().to_string(), f[1].trim().to_string()));
        }
        let task = CategorizationTask {
            name: name.to_string(),
            items,
        };
        if task.num_categories() < 2 {
            return Err(Error::parse(origin, 0, "categorization task needs at least 2 categories"));
        }
        Ok(task)
    }

    pub fn categories(&self) -> BTreeSet<&str> {
        self.items.iter().map(|(_, c)| c.as_str()).collect()
    }

    pub fn num_categories(&self) -> usize {
        self.categories().len()
    }
}

/// Lowercases, splits on whitespace and strips surrounding punctuation.
/// Tokens that are pure punctuation disappear.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

impl StsTask {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&task_name(path), path, &read(path)?)
    }

    pub fn parse(name: &str, origin: &Path, text: &str) -> Result<Self> {
        let mut items = Vec::new();
        for (line, rec) in records(text) {
            let f = tab_fields(origin, line, rec, 3)?;
            items.push(StsItem {
                first: tokenize(f[0]),
                second: tokenize(f[1]),
                score: parse_score(origin, line, f[2])?,
            });
        }
        if items.len() < 2 {
            return Err(Error::parse(origin, 0, "sts task needs at least 2 sentence pairs"));
        }
        Ok(StsTask {
            name: name.to_string(),
            items,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> &'static Path {
        Path::new("mem.txt")
    }

    #[test]
    fn similarity_format() {
        let t = SimilarityTask::parse("s", origin(), "# header\nking\tqueen\t8.5\n\ncat\tdog\t7\n").unwrap();
        assert_eq!(t.pairs.len(), 2);
        assert_eq!(t.pairs[1].score, 7.0);
        let err = SimilarityTask::parse("s", origin(), "a\tb\t1\na\tb\n").unwrap_err();
        assert!(err.to_string().starts_with("mem.txt:2:"), "{err}");
        assert!(SimilarityTask::parse("s", origin(), "a\tb\tx\nc\td\t1\n").is_err());
        assert!(SimilarityTask::parse("s", origin(), "a\tb\t1\n").is_err());
    }

    #[test]
    fn analogy_sections() {
        let text = ": capital\nathens greece paris france\n: gram\ngood better bad worse\n";
        let t = AnalogyTask::parse("a", origin(), text).unwrap();
        assert_eq!(t.questions.len(), 2);
        assert_eq!(t.questions[0].section.as_deref(), Some("capital"));
        assert_eq!(t.questions[1].b_star, "worse");
        assert!(AnalogyTask::parse("a", origin(), "a b c\n").is_err());
    }

    #[test]
    fn categorization_format() {
        let t = CategorizationTask::parse("c", origin(), "cat\tanimal\ncar\tvehicle\ndog\tanimal\n").unwrap();
        assert_eq!(t.num_categories(), 2);
        assert!(CategorizationTask::parse("c", origin(), "cat\tanimal\n").is_err());
    }

    #[test]
    fn sts_tokenization() {
        assert_eq!(tokenize("  Hello, World! (it's) -- ok."), vec!["hello", "world", "it's", "ok"]);
        let t = StsTask::parse("t", origin(), "A cat.\tThe dog!\t3.2\nx\ty\t1\n").unwrap();
        assert_eq!(t.items[0].first, vec!["a", "cat"]);
        assert_eq!(t.items[0].second, vec!["the", "dog"]);
    }
}
