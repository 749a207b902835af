use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::EvalResult;
use crate::error::{Error, Result};

/// Task family used for macro-averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Similarity,
    Analogy,
    Concept,
    Sts,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Similarity, Category::Analogy, Category::Concept, Category::Sts];

    pub fn name(&self) -> &'static str {
        match self {
            Category::Similarity => "similarity",
            Category::Analogy => "analogy",
            Category::Concept => "concept",
            Category::Sts => "sts",
        }
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown task category `{s}`")))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Results of one method over a task list. Tasks that failed are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub method: String,
    pub results: Vec<EvalResult>,
}

impl MethodRun {
    pub fn score(&self, task: &str) -> Option<f64> {
        self.results.iter().find(|r| r.task == task).map(|r| r.score)
    }
}

/// Rectangular method × column table; `None` cells print as `n/a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

pub fn cell_text(cell: Option<f64>) -> String {
    match cell {
        Some(v) => format!("{v:.4}"),
        None => "n/a".to_string(),
    }
}

fn mean(values: &[Option<f64>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let present: Option<Vec<f64>> = values.iter().copied().collect();
    present.map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-category means and an overall column.
///
/// `tasks` lists every task with its category, in column order. A category
/// average is `n/a` when any of its tasks has no score; `overall` is the mean
/// over all tasks.
pub fn macro_average(runs: &[MethodRun], tasks: &[(String, Category)]) -> Result<ScoreTable> {
    if runs.is_empty() || tasks.is_empty() {
        return Err(Error::InvalidArgument("macro average of an empty run set".into()));
    }
    let present: Vec<Category> = Category::ALL
        .into_iter()
        .filter(|c| tasks.iter().any(|(_, tc)| tc == c))
        .collect();
    let mut columns: Vec<String> = present.iter().map(|c| c.name().to_string()).collect();
    columns.push("overall".into());
    let cells = runs
        .iter()
        .map(|run| {
            let mut row: Vec<Option<f64>> = present
                .iter()
                .map(|c| {
                    let scores: Vec<Option<f64>> =
                        tasks.iter().filter(|(_, tc)| tc == c).map(|(t, _)| run.score(t)).collect();
                    mean(&scores)
                })
                .collect();
            let all: Vec<Option<f64>> = tasks.iter().map(|(t, _)| run.score(t)).collect();
            row.push(mean(&all));
            row
        })
        .collect();
    Ok(ScoreTable {
        rows: runs.iter().map(|r| r.method.clone()).collect(),
        columns,
        cells,
    })
}

impl ScoreTable {
    /// One column per task, in the given order.
    pub fn per_task(runs: &[MethodRun], tasks: &[String]) -> ScoreTable {
        ScoreTable {
            rows: runs.iter().map(|r| r.method.clone()).collect(),
            columns: tasks.to_vec(),
            cells: runs.iter().map(|run| tasks.iter().map(|t| run.score(t)).collect()).collect(),
        }
    }

    /// Appends the columns of `other`, which must have the same rows.
    pub fn join(mut self, other: ScoreTable) -> Result<ScoreTable> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch("score tables have different rows".into()));
        }
        self.columns.extend(other.columns);
        for (row, extra) in self.cells.iter_mut().zip(other.cells) {
            row.extend(extra);
        }
        Ok(self)
    }

    pub fn get(&self, row: &str, column: &str) -> Option<Option<f64>> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.columns.iter().position(|x| x == column)?;
        Some(self.cells[r][c])
    }

    fn text_rows(&self) -> Vec<Vec<String>> {
        let mut out = Vec::with_capacity(self.rows.len() + 1);
        let mut header = vec!["method".to_string()];
        header.extend(self.columns.iter().cloned());
        out.push(header);
        for (name, cells) in self.rows.iter().zip(&self.cells) {
            let mut line = vec![name.clone()];
            line.extend(cells.iter().map(|c| cell_text(*c)));
            out.push(line);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for line in self.text_rows() {
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    /// Markdown with every column padded to its widest cell.
    pub fn to_markdown(&self) -> String {
        let lines = self.text_rows();
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0).max(3))
            .collect();
        let mut s = String::new();
        let render = |s: &mut String, line: &[String]| {
            s.push('|');
            for (i, (cell, w)) in line.iter().zip(&widths).enumerate() {
                if i == 0 {
                    let _ = write!(s, " {cell:<w$} |");
                } else {
                    let _ = write!(s, " {cell:>w$} |");
                }
            }
            s.push('\n');
        };
        render(&mut s, &lines[0]);
        s.push('|');
        for (i, w) in widths.iter().enumerate() {
            if i == 0 {
                let _ = write!(s, " {} |", "-".repeat(*w));
            } else {
                let _ = write!(s, " {}: |", "-".repeat(w - 1));
            }
        }
        s.push('\n');
        for line in &lines[1..] {
            render(&mut s, line);
        }
        s
    }

    /// Columns whose value is known for every row, keyed by name.
    pub fn complete_columns(&self) -> HashMap<&str, Vec<f64>> {
        self.columns
            .iter()
            .enumerate()
            .filter_map(|(c, name)| {
                let col: Option<Vec<f64>> = self.cells.iter().map(|row| row[c]).collect();
                col.map(|v| (name.as_str(), v))
            })
            .collect()
    }
}
