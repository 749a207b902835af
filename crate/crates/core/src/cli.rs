//! Command-line surface. Every subcommand is a `cmd_*` function over a
//! [`RunConfig`], so the pipelines can be driven from code as well.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use crate::align::{Alignment, BilingualDictionary, Retrieval, DEFAULT_CSLS_K};
use crate::baselines::DEFAULT_TOP_K;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::eval::{
    self, macro_average, AnalogyTask, CategorizationTask, Category, EvalResult, Level, MethodRun,
    ScoreTable, SimilarityTask, StsTask, DEFAULT_RESTARTS,
};
use crate::io::{format_value, load_embedding, save_embedding, write_text_atomic, Format};
use crate::method::Method;
use crate::shrinkage::BetaGrid;
use crate::spectral::{center_rows, thin_svd};

/// Environment variable capping the worker threads; `0` or unset means one
/// per core.
pub const THREADS_ENV: &str = "SPECTRAL_SHRINK_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodName {
    None,
    Beta,
    TopPc,
    LedoitWolf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Word,
    Sentence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RetrievalArg {
    Nn,
    Csls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SaveFormat {
    Word2vec,
    Headerless,
}

#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    /// Post-processing method.
    #[arg(long, value_enum, default_value = "beta")]
    pub method: MethodName,
    /// Principal components removed by `top-pc`.
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub beta_start: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta_stop: f64,
    #[arg(long, default_value_t = 0.001)]
    pub beta_step: f64,
    /// Seed for k-means restarts.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Parser)]
#[command(name = "spectral-shrink", version, about = "Spectrum shrinkage for word embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Post-process an embedding and write the result.
    Postprocess {
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// β-grid report CSV for `--method beta`; defaults to `<output>.beta.csv`.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "word2vec")]
        save_format: SaveFormat,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Write β-grid and spectrum CSVs for plotting.
    Diagnose {
        input: PathBuf,
        /// Output directory.
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Word similarity (Spearman).
    EvalSim {
        embedding: PathBuf,
        task: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Word analogy (3CosAdd accuracy).
    EvalAnalogy {
        embedding: PathBuf,
        task: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Concept categorization (k-means purity).
    EvalCat {
        embedding: PathBuf,
        task: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Sentence similarity (Pearson).
    EvalSts {
        embedding: PathBuf,
        task: PathBuf,
        #[arg(long, value_enum, default_value = "word")]
        level: LevelArg,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Supervised word translation, precision@1.
    Translate {
        source: PathBuf,
        target: PathBuf,
        train: PathBuf,
        test: PathBuf,
        /// Report one retrieval mode only; both by default.
        #[arg(long, value_enum)]
        retrieval: Option<RetrievalArg>,
        #[arg(long, default_value_t = DEFAULT_CSLS_K)]
        csls_k: usize,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Every method on every task of a manifest.
    Compare {
        embedding: PathBuf,
        manifest: PathBuf,
        /// Directory receiving `scores.csv` and `scores.md`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Table format printed to stdout.
        #[arg(long, value_enum, default_value = "markdown")]
        format: TableFormat,
        #[arg(long, value_enum, default_value = "word")]
        level: LevelArg,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[command(flatten)]
        method: MethodArgs,
    },
}

/// Settings shared by the pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub top_k: usize,
    pub grid: BetaGrid,
    pub seed: u64,
    pub restarts: usize,
    pub level: Level,
    pub csls_k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::Beta(BetaGrid::default()),
            top_k: DEFAULT_TOP_K,
            grid: BetaGrid::default(),
            seed: 42,
            restarts: DEFAULT_RESTARTS,
            level: Level::Word,
            csls_k: DEFAULT_CSLS_K,
        }
    }
}

impl RunConfig {
    pub fn from_args(args: &MethodArgs) -> Result<Self> {
        let grid = BetaGrid::new(args.beta_start, args.beta_stop, args.beta_step)?;
        let method = match args.method {
            MethodName::None => Method::None,
            MethodName::Beta => Method::Beta(grid),
            MethodName::TopPc => Method::TopPc(args.top_k),
            MethodName::LedoitWolf => Method::LedoitWolf,
        };
        Ok(RunConfig { method, top_k: args.top_k, grid, seed: args.seed, ..RunConfig::default() })
    }

    /// The methods `compare` runs, in table order.
    pub fn comparison_methods(&self) -> [Method; 4] {
        [Method::None, Method::TopPc(self.top_k), Method::LedoitWolf, Method::Beta(self.grid)]
    }
}

/// Reads [`THREADS_ENV`] and sizes the global worker pool. Returns the
/// requested count, `0` meaning automatic.
pub fn configure_threads() -> Result<usize> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(0);
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV}=`{raw}` is not a thread count")))?;
    if n > 0 {
        // a second initialisation in the same process keeps the first pool
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            warn!("worker pool already initialised; {THREADS_ENV} ignored");
        }
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostprocessOutcome {
    pub beta_star: Option<f64>,
    pub report_path: Option<PathBuf>,
}

pub fn cmd_postprocess(
    config: &RunConfig,
    input: &Path,
    output: &Path,
    report: Option<&Path>,
    format: Format,
) -> Result<PostprocessOutcome> {
    let emb = load_embedding(input)?;
    let processed = config.method.apply(&emb)?;
    save_embedding(&processed.embedding, output, format)?;
    let mut outcome = PostprocessOutcome { beta_star: None, report_path: None };
    if let Some(r) = &processed.beta_report {
        let path = report.map(Path::to_path_buf).unwrap_or_else(|| {
            let mut p = output.as_os_str().to_owned();
            p.push(".beta.csv");
            PathBuf::from(p)
        });
        write_text_atomic(&path, &r.to_csv_string())?;
        outcome.beta_star = Some(r.beta_star);
        outcome.report_path = Some(path);
    }
    if let Some(lw) = &processed.ledoit_wolf {
        info!("ledoit-wolf mixing {:.6}, target scale {:.6}", lw.mixing, lw.alpha);
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseOutcome {
    pub beta_star: f64,
    pub grid_csv: PathBuf,
    pub spectrum_csv: PathBuf,
}

/// Writes `beta_grid.csv` and `spectrum.csv` into `out_dir`.
pub fn cmd_diagnose(config: &RunConfig, input: &Path, out_dir: &Path) -> Result<DiagnoseOutcome> {
    let emb = load_embedding(input)?;
    let svd = thin_svd(&center_rows(&emb))?;
    let report = crate::shrinkage::search_beta(&svd.s, &config.grid)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let grid_csv = out_dir.join("beta_grid.csv");
    write_text_atomic(&grid_csv, &report.to_csv_string())?;
    let mut spectrum = String::from("rank,singular_value\n");
    for (i, s) in svd.s.values().iter().enumerate() {
        let _ = writeln!(spectrum, "{},{}", i + 1, format_value(*s));
    }
    let spectrum_csv = out_dir.join("spectrum.csv");
    write_text_atomic(&spectrum_csv, &spectrum)?;
    Ok(DiagnoseOutcome { beta_star: report.beta_star, grid_csv, spectrum_csv })
}

fn processed(config: &RunConfig, emb: &Embedding) -> Result<Embedding> {
    let p = config.method.apply(emb)?;
    if let Some(r) = &p.beta_report {
        info!("beta* = {}", r.beta_star);
    }
    Ok(p.embedding)
}

pub fn cmd_eval_sim(config: &RunConfig, embedding: &Path, task: &Path) -> Result<EvalResult> {
    let task = SimilarityTask::load(task)?;
    eval::eval_similarity(&processed(config, &load_embedding(embedding)?)?, &task)
}

pub fn cmd_eval_analogy(config: &RunConfig, embedding: &Path, task: &Path) -> Result<EvalResult> {
    let task = AnalogyTask::load(task)?;
    eval::eval_analogy(&processed(config, &load_embedding(embedding)?)?, &task)
}

pub fn cmd_eval_cat(config: &RunConfig, embedding: &Path, task: &Path) -> Result<EvalResult> {
    let task = CategorizationTask::load(task)?;
    let emb = processed(config, &load_embedding(embedding)?)?;
    eval::eval_categorization(&emb, &task, config.seed, config.restarts)
}

pub fn cmd_eval_sts(config: &RunConfig, embedding: &Path, task: &Path) -> Result<EvalResult> {
    let task = StsTask::load(task)?;
    eval::eval_sts(&load_embedding(embedding)?, &task, config.level, &config.method)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslateOutcome {
    pub nn: EvalResult,
    pub csls: EvalResult,
    pub train_used: usize,
    pub train_dropped: usize,
}

/// Post-processes both embeddings, fits the map on `train`, scores `test`.
pub fn cmd_translate(
    config: &RunConfig,
    source: &Path,
    target: &Path,
    train: &Path,
    test: &Path,
) -> Result<TranslateOutcome> {
    let train = BilingualDictionary::load(train)?;
    let test = BilingualDictionary::load(test)?;
    let src = processed(config, &load_embedding(source)?)?;
    let tgt = processed(config, &load_embedding(target)?)?;
    let alignment = Alignment::fit(&src, &tgt, &train)?;
    if alignment.train_dropped > 0 {
        warn!("{} training pairs dropped as out of vocabulary", alignment.train_dropped);
    }
    Ok(TranslateOutcome {
        nn: alignment.evaluate(&test, Retrieval::Nn, config.csls_k)?,
        csls: alignment.evaluate(&test, Retrieval::Csls, config.csls_k)?,
        train_used: alignment.train_used,
        train_dropped: alignment.train_dropped,
    })
}

/// Task files with their categories; blank lines and `#` comments ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<(Category, PathBuf)>,
}

impl Manifest {
    /// Each line is `category path`, the path relative to the manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (cat, file) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| Error::parse(path, i + 1, "expected `category path`"))?;
            let category: Category = cat
                .parse()
                .map_err(|e: Error| Error::parse(path, i + 1, e.to_string()))?;
            entries.push((category, base.join(file.trim())));
        }
        if entries.is_empty() {
            return Err(Error::parse(path, 0, "manifest lists no tasks"));
        }
        Ok(Manifest { entries })
    }
}

enum Task {
    Similarity(SimilarityTask),
    Analogy(AnalogyTask),
    Concept(CategorizationTask),
    Sts(StsTask),
}

impl Task {
    fn name(&self) -> &str {
        match self {
            Task::Similarity(t) => &t.name,
            Task::Analogy(t) => &t.name,
            Task::Concept(t) => &t.name,
            Task::Sts(t) => &t.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOutcome {
    /// Per-task columns followed by category averages and `overall`.
    pub table: ScoreTable,
    pub runs: Vec<MethodRun>,
    pub beta_star: f64,
}

pub fn cmd_compare(config: &RunConfig, embedding: &Path, manifest: &Path) -> Result<CompareOutcome> {
    let manifest = Manifest::load(manifest)?;
    let mut tasks = Vec::new();
    for (category, path) in &manifest.entries {
        let task = match category {
            Category::Similarity => Task::Similarity(SimilarityTask::load(path)?),
            Category::Analogy => Task::Analogy(AnalogyTask::load(path)?),
            Category::Concept => Task::Concept(CategorizationTask::load(path)?),
            Category::Sts => Task::Sts(StsTask::load(path)?),
        };
        if tasks.iter().any(|(_, t): &(Category, Task)| t.name() == task.name()) {
            return Err(Error::InvalidArgument(format!("task name `{}` listed twice", task.name())));
        }
        tasks.push((*category, task));
    }
    let emb = load_embedding(embedding)?;

    let mut runs = Vec::new();
    let mut beta_star = None;
    for method in config.comparison_methods() {
        let p = method.apply(&emb)?;
        if let Some(r) = &p.beta_report {
            beta_star = Some(r.beta_star);
        }
        let mut results = Vec::new();
        for (_, task) in &tasks {
            let outcome = match task {
                Task::Similarity(t) => eval::eval_similarity(&p.embedding, t),
                Task::Analogy(t) => eval::eval_analogy(&p.embedding, t),
                Task::Concept(t) => eval::eval_categorization(&p.embedding, t, config.seed, config.restarts),
                Task::Sts(t) => match config.level {
                    Level::Word => eval::eval_sts(&p.embedding, t, Level::Word, &Method::None),
                    Level::Sentence => eval::eval_sts(&emb, t, Level::Sentence, &method),
                },
            };
            match outcome {
                Ok(r) => results.push(r),
                Err(e @ (Error::NotEnoughData { .. } | Error::UndefinedCorrelation(_))) => {
                    warn!("{method} on {}: {e}", task.name());
                }
                Err(e) => return Err(e),
            }
        }
        runs.push(MethodRun { method: method.to_string(), results });
    }

    let names: Vec<String> = tasks.iter().map(|(_, t)| t.name().to_string()).collect();
    let categories: Vec<(String, Category)> = tasks.iter().map(|(c, t)| (t.name().to_string(), *c)).collect();
    let table = ScoreTable::per_task(&runs, &names).join(macro_average(&runs, &categories)?)?;
    Ok(CompareOutcome { table, runs, beta_star: beta_star.expect("beta is among the compared methods") })
}

fn method_args(command: &Command) -> &MethodArgs {
    match command {
        Command::Postprocess { method, .. }
        | Command::Diagnose { method, .. }
        | Command::EvalSim { method, .. }
        | Command::EvalAnalogy { method, .. }
        | Command::EvalCat { method, .. }
        | Command::EvalSts { method, .. }
        | Command::Translate { method, .. }
        | Command::Compare { method, .. } => method,
    }
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Runs a parsed command, writing its human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let mut config = RunConfig::from_args(method_args(&cli.command))?;
    match &cli.command {
        Command::Postprocess { input, output, report, save_format, .. } => {
            let format = match save_format {
                SaveFormat::Word2vec => Format::Word2Vec,
                SaveFormat::Headerless => Format::Headerless,
            };
            let o = cmd_postprocess(&config, input, output, report.as_deref(), format)?;
            writeln!(out, "wrote {}", output.display()).map_err(io_out)?;
            if let (Some(b), Some(p)) = (o.beta_star, &o.report_path) {
                writeln!(out, "beta*\t{b}\nreport\t{}", p.display()).map_err(io_out)?;
            }
        }
        Command::Diagnose { input, output, .. } => {
            let o = cmd_diagnose(&config, input, output)?;
            writeln!(
                out,
                "beta*\t{}\ngrid\t{}\nspectrum\t{}",
                o.beta_star,
                o.grid_csv.display(),
                o.spectrum_csv.display()
            )
            .map_err(io_out)?;
        }
        Command::EvalSim { embedding, task, .. } => {
            writeln!(out, "{}", cmd_eval_sim(&config, embedding, task)?).map_err(io_out)?;
        }
        Command::EvalAnalogy { embedding, task, .. } => {
            writeln!(out, "{}", cmd_eval_analogy(&config, embedding, task)?).map_err(io_out)?;
        }
        Command::EvalCat { embedding, task, restarts, .. } => {
            config.restarts = *restarts;
            writeln!(out, "{}", cmd_eval_cat(&config, embedding, task)?).map_err(io_out)?;
        }
        Command::EvalSts { embedding, task, level, .. } => {
            config.level = level_of(*level);
            writeln!(out, "{}", cmd_eval_sts(&config, embedding, task)?).map_err(io_out)?;
        }
        Command::Translate { source, target, train, test, retrieval, csls_k, .. } => {
            config.csls_k = *csls_k;
            let o = cmd_translate(&config, source, target, train, test)?;
            writeln!(out, "train pairs\tused={}\tdropped={}", o.train_used, o.train_dropped).map_err(io_out)?;
            for (mode, r) in [(RetrievalArg::Nn, &o.nn), (RetrievalArg::Csls, &o.csls)] {
                if retrieval.is_none_or(|m| m == mode) {
                    let label = if mode == RetrievalArg::Nn { "nn" } else { "csls" };
                    writeln!(out, "{label}\t{r}").map_err(io_out)?;
                }
            }
        }
        Command::Compare { embedding, manifest, output, format, level, restarts, .. } => {
            config.level = level_of(*level);
            config.restarts = *restarts;
            let o = cmd_compare(&config, embedding, manifest)?;
            if let Some(dir) = output {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                write_text_atomic(&dir.join("scores.csv"), &o.table.to_csv())?;
                write_text_atomic(&dir.join("scores.md"), &o.table.to_markdown())?;
            }
            let text = match format {
                TableFormat::Csv => o.table.to_csv(),
                TableFormat::Markdown => o.table.to_markdown(),
            };
            write!(out, "{text}").map_err(io_out)?;
            writeln!(out, "beta*\t{}", o.beta_star).map_err(io_out)?;
        }
    }
    Ok(())
}

fn level_of(level: LevelArg) -> Level {
    match level {
        LevelArg::Word => Level::Word,
        LevelArg::Sentence => Level::Sentence,
    }
}

/// Parses `args`, runs, and returns the process exit code. Errors go to
/// `err` as a single `error[<kind>]: <message>` line.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid usage");
            let _ = writeln!(err, "error[usage]: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    let result = configure_threads().and_then(|_| run(&cli, out));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "error[{}]: {msg}", e.kind());
            1
        }
    }
}
