use std::path::Path;
use std::process::{Command, Output};

fn ngt(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ngt"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn ngt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TOY: &str = r#"{"text": "the cat sat on the mat", "label": "factual"}
{"text": "the dog ran in the park", "label": "factual"}
{"text": "the moon is made of cheese", "label": "hallucinated"}
{"text": "paris is the capital of spain", "label": "hallucinated"}
"#;

fn toy_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("toy.jsonl"), TOY).unwrap();
    dir
}

#[test]
fn missing_dataset_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = ngt(&["stats", "--data", "nope/missing.jsonl"], dir.path());
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("nope/missing.jsonl"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
}

#[test]
fn toy_stats_have_two_rows() {
    let dir = toy_dir();
    let o = ngt(&["stats", "--data", "toy.jsonl", "--out", "s"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().filter(|l| l.starts_with("other")).collect();
    assert_eq!(rows.len(), 2, "{out}");
    assert!(dir.path().join("s/stats.json").exists());
}

#[test]
fn features_shape_and_determinism() {
    let dir = toy_dir();
    let args = [
        "features",
        "--data",
        "toy.jsonl",
        "--k",
        "3",
        "--train-fraction",
        "0.5",
        "--out",
    ];
    for out in ["a", "b"] {
        let mut a = args.to_vec();
        a.push(out);
        let o = ngt(&a, dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["train_features.csv", "eval_features.csv"] {
        let a = std::fs::read_to_string(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read_to_string(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines[0], "label,v1,v2,v3");
        assert_eq!(lines.len(), 3);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 4));
    }
}

#[test]
fn flags_override_config_file() {
    let dir = toy_dir();
    std::fs::write(
        dir.path().join("run.toml"),
        "dataset = \"toy.jsonl\"\nk = 5\ntrain_fraction = 0.5\nout = \"from-config\"\n",
    )
    .unwrap();
    let o = ngt(
        &["features", "--config", "run.toml", "--k", "2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("from-config/train_features.csv")).unwrap();
    assert!(csv.starts_with("label,v1,v2\n"), "{csv}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = toy_dir();
    std::fs::write(dir.path().join("bad.toml"), "datset = \"toy.jsonl\"\n").unwrap();
    let o = ngt(&["stats", "--config", "bad.toml"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("bad.toml"));
}

#[test]
fn synth_then_train_eval_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = ngt(
        &["synth", "--out", "syn.jsonl", "--docs-per-class", "60"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = ngt(
        &[
            "train-eval",
            "--data",
            "syn.jsonl",
            "--group-size",
            "5",
            "--epochs",
            "2",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("SVD-G5"));
    for f in ["model.json", "report.json", "report.txt", "loss.csv"] {
        assert!(dir.path().join("run").join(f).exists(), "{f}");
    }
    let o = ngt(
        &[
            "baseline",
            "--method",
            "perplexity",
            "--data",
            "syn.jsonl",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("Perplexity"));
}

#[test]
fn bad_flag_value_fails() {
    let dir = toy_dir();
    let o = ngt(
        &["features", "--data", "toy.jsonl", "--decomp", "qr"],
        dir.path(),
    );
    assert!(!o.status.success());
}
