//! word2vec text format: an optional `n d` header line, then one
//! `word v1 … vd` line per word, space separated.
//!
//! A first line of exactly two unsigned integers is read as the header, so a
//! headerless one-dimensional file whose first word is numeric is ambiguous
//! and will be misread.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use tempfile::NamedTempFile;

use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// Significant digits written per value.
pub const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    /// With the `n d` header line.
    #[default]
    Word2Vec,
    /// Body only, as GloVe writes it.
    Headerless,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word2vec" => Ok(Format::Word2Vec),
            "headerless" | "glove" => Ok(Format::Headerless),
            other => Err(Error::InvalidArgument(format!("unknown embedding format `{other}`"))),
        }
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split_whitespace();
    let n = it.next()?.parse().ok()?;
    let d = it.next()?.parse().ok()?;
    it.next().is_none().then_some((n, d))
}

/// Reads an embedding from any buffered reader; `origin` names it in errors.
pub fn read_embedding<R: BufRead>(reader: R, origin: &Path) -> Result<Embedding> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut vocab: Vec<String> = Vec::new();
    let mut lines_of: HashMap<String, usize> = HashMap::new();
    let mut values: Vec<f64> = Vec::new();
    let mut dim: Option<(usize, usize)> = None;
    let mut seen_content = false;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        if !seen_content {
            seen_content = true;
            if let Some((n, d)) = parse_header(line) {
                header = Some((n, d, lineno));
                continue;
            }
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-blank line has a field");
        let start = values.len();
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(origin, lineno, format!("invalid number `{f}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(origin, lineno, format!("non-finite value `{f}`")));
            }
            values.push(v);
        }
        let d = values.len() - start;
        if d == 0 {
            return Err(Error::parse(origin, lineno, format!("word `{word}` has no values")));
        }
        match dim {
            None => dim = Some((d, lineno)),
            Some((expected, first)) if expected != d => {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("{d} values, but line {first} has {expected}"),
                ));
            }
            _ => {}
        }
        if let Some(first) = lines_of.insert(word.to_string(), lineno) {
            return Err(Error::parse(
                origin,
                lineno,
                format!("duplicate word `{word}` (first on line {first})"),
            ));
        }
        vocab.push(word.to_string());
    }

    let Some((d, _)) = dim else {
        return Err(Error::parse(origin, 0, "no embedding rows"));
    };
    if let Some((n, hd, line)) = header {
        if hd != d || n != vocab.len() {
            return Err(Error::parse(
                origin,
                line,
                format!("header says {n}×{hd}, body has {}×{d}", vocab.len()),
            ));
        }
    }
    let matrix = DMatrix::from_row_slice(vocab.len(), d, &values);
    Embedding::new(vocab, matrix)
}

/// Loads a word2vec text file, with or without header.
pub fn load_embedding(path: &Path) -> Result<Embedding> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embedding(BufReader::new(file), path)
}

/// Shortest decimal text with [`SIGNIFICANT_DIGITS`] significant digits:
/// fixed notation for magnitudes in `[1e-4, 1e9)`, scientific otherwise.
pub fn format_value(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_fraction(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Streams `emb` to `out` one line at a time.
pub fn write_embedding<W: Write>(emb: &Embedding, out: W, format: Format) -> Result<()> {
    let mut out = BufWriter::new(out);
    let wrap = |e| Error::io("<output>", e);
    if let Some(bad) = emb.vocab().iter().find(|w| w.chars().any(char::is_whitespace)) {
        return Err(Error::InvalidArgument(format!("word `{bad}` contains whitespace")));
    }
    if format == Format::Word2Vec {
        writeln!(out, "{} {}", emb.len(), emb.dim()).map_err(wrap)?;
    }
    let m = emb.matrix();
    let mut line = String::new();
    for (i, word) in emb.vocab().iter().enumerate() {
        line.clear();
        line.push_str(word);
        for j in 0..emb.dim() {
            line.push(' ');
            line.push_str(&format_value(m[(i, j)]));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(wrap)?;
    }
    out.flush().map_err(wrap)?;
    Ok(())
}

/// Writes through a temporary file in the destination directory, then renames
/// it over `path`, so readers never see a partial file.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    fill(tmp.as_file_mut()).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    #[cfg(unix)]
    {
        // temporary files are created owner-only
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(tmp.path(), fs::Permissions::from_mode(0o644)).map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_text_atomic(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e)))
}

pub fn save_embedding(emb: &Embedding, path: &Path, format: Format) -> Result<()> {
    write_atomic(path, |w| write_embedding(emb, w, format))
}
