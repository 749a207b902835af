use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tempfile::TempDir;

use spectral_shrink::io::{load_embedding, save_embedding, Format};
use spectral_shrink::Embedding;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectral-shrink"))
        .args(args)
        .env("SPECTRAL_SHRINK_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = SymmetricEigen::new(m.transpose() * m).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn centered(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = m.row_mean();
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        row -= &mean;
    }
    out
}

/// Data rows of a CSV, skipping `#` comments and the header.
fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn help_and_usage_errors() {
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for sub in ["postprocess", "diagnose", "eval-sim", "eval-analogy", "eval-cat", "eval-sts", "translate", "compare"] {
        assert!(stdout(&help).contains(sub), "help lists {sub}");
    }

    let bad = run(&["postprocess"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).starts_with("error[usage]: "), "{}", stderr(&bad));

    let bad = run(&["eval-sim", "a", "b", "--method", "whiten"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn runtime_errors_are_one_prefixed_line() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.txt");
    let o = run(&["postprocess", path_str(&missing), "--output", path_str(&dir.path().join("o.txt"))]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[io]: "), "{err}");
    assert!(err.contains("nope.txt"));

    let broken = dir.path().join("broken.txt");
    fs::write(&broken, "a 1 0\nb 0 1 2\n").unwrap();
    let o = run(&["postprocess", path_str(&broken), "--output", path_str(&dir.path().join("o.txt"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[parse]: "), "{}", stderr(&o));
    assert!(stderr(&o).contains(":2:"));
}

#[test]
fn postprocess_none_copies_input() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("none.txt");
    let o = run(&["postprocess", path_str(&fixture("embedding.txt")), "--output", path_str(&out), "--method", "none"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(load_embedding(&out).unwrap(), load_embedding(&fixture("embedding.txt")).unwrap());
    assert!(!dir.path().join("none.txt.beta.csv").exists());
}

#[test]
fn postprocess_beta_repowers_the_spectrum() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("beta.txt");
    let o = run(&["postprocess", path_str(&fixture("embedding.txt")), "--output", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let printed = stdout(&o);
    let beta: f64 = printed
        .lines()
        .find_map(|l| l.strip_prefix("beta*\t"))
        .expect("beta* line")
        .parse()
        .unwrap();
    assert!((0.5..=1.0).contains(&beta));

    let input = load_embedding(&fixture("embedding.txt")).unwrap();
    let output = load_embedding(&out).unwrap();
    assert_eq!(input.vocab(), output.vocab());
    let s_in = singular_values(&centered(input.matrix()));
    let s_out = singular_values(output.matrix());
    for (a, b) in s_out.iter().zip(&s_in) {
        // output passes through 9-digit text
        assert!((a - b.powf(beta)).abs() / b.powf(beta) < 1e-6, "{a} vs {}", b.powf(beta));
    }

    let (header, rows) = csv_rows(&dir.path().join("beta.txt.beta.csv"));
    assert_eq!(header, ["beta", "l", "l_prime", "l_double_prime", "beta_star"]);
    assert_eq!(rows.len(), 500);
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() == beta));
    assert!(rows.iter().any(|r| r[0].parse::<f64>().unwrap() == beta));
}

#[test]
fn postprocess_top_pc_removes_directions() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("pc.txt");
    let o = run(&[
        "postprocess",
        path_str(&fixture("embedding.txt")),
        "--output",
        path_str(&out),
        "--method",
        "top-pc",
        "--top-k",
        "2",
        "--save-format",
        "headerless",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = fs::read_to_string(&out).unwrap();
    assert!(first.lines().next().unwrap().starts_with("animal00 "));

    let input = load_embedding(&fixture("embedding.txt")).unwrap();
    let xc = centered(input.matrix());
    let eig = SymmetricEigen::new(xc.transpose() * &xc);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let output = load_embedding(&out).unwrap();
    for &j in &order[..2] {
        let proj = output.matrix() * eig.eigenvectors.column(j);
        assert!(proj.amax() < 1e-5 * xc.amax(), "leak {}", proj.amax());
    }
}

#[test]
fn diagnose_writes_curves() {
    let dir = TempDir::new().unwrap();
    let o = run(&["diagnose", path_str(&fixture("embedding.txt")), "--output", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, rows) = csv_rows(&dir.path().join("beta_grid.csv"));
    assert_eq!(rows.len(), 500);
    for r in &rows {
        assert!(r[2].parse::<f64>().unwrap() < 0.0, "l_prime {}", r[2]);
        assert!(r[3].parse::<f64>().unwrap() < 0.0, "l_double_prime {}", r[3]);
    }
    let (header, spectrum) = csv_rows(&dir.path().join("spectrum.csv"));
    assert_eq!(header, ["rank", "singular_value"]);
    assert_eq!(spectrum.len(), 32);
    assert_eq!(spectrum[0][0], "1");
}

#[test]
fn diagnose_uniform_spectrum_is_flat() {
    let dir = TempDir::new().unwrap();
    let d = 6;
    let mut rows = Vec::new();
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[i] = sign * 3.0;
            rows.push(v);
        }
    }
    let words = (0..rows.len()).map(|i| format!("u{i}")).collect();
    let emb = Embedding::from_rows(words, &rows).unwrap();
    let input = dir.path().join("flat.txt");
    save_embedding(&emb, &input, Format::Word2Vec).unwrap();

    let o = run(&["diagnose", path_str(&input), "--output", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, rows) = csv_rows(&dir.path().join("beta_grid.csv"));
    assert_eq!(rows.len(), 500);
    for r in &rows {
        assert_eq!(r[3].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn eval_subcommands_print_one_result() {
    let emb = fixture("embedding.txt");
    let cases: [(&str, &str, &str); 4] = [
        ("eval-sim", "ws-toy.txt", "spearman="),
        ("eval-analogy", "analogy-toy.txt", "accuracy="),
        ("eval-cat", "concept-toy.txt", "purity="),
        ("eval-sts", "sts-toy.txt", "pearson="),
    ];
    for (sub, task, metric) in cases {
        let o = run(&[sub, path_str(&emb), path_str(&fixture(task)), "--method", "none"]);
        assert_eq!(o.status.code(), Some(0), "{sub}: {}", stderr(&o));
        let text = stdout(&o);
        assert_eq!(text.lines().count(), 1, "{text}");
        assert!(text.contains(metric), "{sub}: {text}");
    }
    let o = run(&["eval-sts", path_str(&emb), path_str(&fixture("sts-toy.txt")), "--level", "sentence"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

fn write_dictionary(path: &Path, words: &[String]) {
    let text: String = words.iter().map(|w| format!("{w} {w}\n")).collect();
    fs::write(path, text).unwrap();
}

#[test]
fn translate_identity_and_rotated_languages() {
    let dir = TempDir::new().unwrap();
    let src = load_embedding(&fixture("embedding.txt")).unwrap();
    let train = dir.path().join("train.txt");
    let test = dir.path().join("test.txt");
    write_dictionary(&train, &src.vocab()[..500]);
    write_dictionary(&test, &src.vocab()[500..]);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = DMatrix::from_fn(src.dim(), src.dim(), |_, _| Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .qr()
        .q();
    let rotated = Embedding::new(src.vocab().to_vec(), src.matrix() * r).unwrap();
    let rotated_path = dir.path().join("rotated.txt");
    save_embedding(&rotated, &rotated_path, Format::Word2Vec).unwrap();

    for target in [fixture("embedding.txt"), rotated_path] {
        let o = run(&["translate", path_str(&fixture("embedding.txt")), path_str(&target), path_str(&train), path_str(&test)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = stdout(&o);
        assert!(text.contains("used=500\tdropped=0"), "{text}");
        let nn = text.lines().find(|l| l.starts_with("nn\t")).expect("nn line");
        let csls = text.lines().find(|l| l.starts_with("csls\t")).expect("csls line");
        assert!(nn.contains("precision@1=1.0000"), "{nn}");
        assert!(csls.contains("precision@1=1.0000"), "{csls}");
    }

    let only = run(&[
        "translate",
        path_str(&fixture("embedding.txt")),
        path_str(&fixture("embedding.txt")),
        path_str(&train),
        path_str(&test),
        "--retrieval",
        "csls",
    ]);
    assert!(!stdout(&only).lines().any(|l| l.starts_with("nn\t")));

    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "# nothing\n").unwrap();
    let o = run(&["translate", path_str(&fixture("embedding.txt")), path_str(&fixture("embedding.txt")), path_str(&train), path_str(&empty)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error["), "{}", stderr(&o));
}

#[test]
fn compare_is_byte_stable() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let o = run(&[
            "compare",
            path_str(&fixture("embedding.txt")),
            path_str(&fixture("manifest.txt")),
            "--output",
            path_str(dir.path()),
            "--format",
            "csv",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).starts_with("method,"));
    }
    for name in ["scores.csv", "scores.md"] {
        let first = fs::read(a.path().join(name)).unwrap();
        assert_eq!(first, fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let (header, rows) = csv_rows(&a.path().join("scores.csv"));
    assert_eq!(header.len(), 8);
    let methods: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(methods, ["none", "top-pc", "ledoit-wolf", "beta"]);
}

#[test]
fn compare_missing_task_names_it() {
    let dir = TempDir::new().unwrap();
    let manifest = dir.path().join("manifest.txt");
    fs::write(&manifest, format!("similarity {}\nanalogy absent.txt\n", fixture("ws-toy.txt").display())).unwrap();
    let o = run(&["compare", path_str(&fixture("embedding.txt")), path_str(&manifest)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.txt"), "{}", stderr(&o));
}
