use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn smirk(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_smirk"))
        .args(args)
        .env_remove("SMIRK_THREADS")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    // feed stdin from another thread so a full stdout pipe cannot deadlock us
    let mut pipe = child.stdin.take().unwrap();
    let input = stdin.to_string();
    let feeder = std::thread::spawn(move || {
        let _ = pipe.write_all(input.as_bytes());
    });
    let out = child.wait_with_output().unwrap();
    feeder.join().unwrap();
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn tokenize_bracket_atoms_into_glyphs() {
    let o = smirk(&["tokenize", "--scheme", "smirk"], "OC[C@@H][OH]\n");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "O\tC\t[\tC\t@@\tH\t]\t[\tO\tH\t]\n");
}

#[test]
fn empty_input_is_empty_output() {
    let o = smirk(&["tokenize"], "");
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
}

#[test]
fn output_order_follows_input() {
    let input: String = (0..20_000)
        .map(|i| format!("{}\n", "C".repeat(1 + i % 13)))
        .collect();
    let o = smirk(&["--threads", "4", "tokenize", "--scheme", "char"], &input);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 20_000);
    for (i, line) in lines.iter().enumerate() {
        assert_eq!(line.split('\t').count(), 1 + i % 13);
    }
}

#[test]
fn strict_oov_exits_2_with_span() {
    let o = smirk(
        &["tokenize", "--scheme", "moses", "--strict"],
        "CC\nC[F-]\nO\n",
    );
    assert_eq!(o.status.code(), Some(2));
    // molecules before the offender are still written
    assert_eq!(stdout(&o), "C\tC\n");
    let err = stderr(&o);
    assert!(err.contains("molecule 2"), "{err}");
    assert!(err.contains("1..5"), "{err}");
}

#[test]
fn permissive_json_reports_unknown_spans() {
    let o = smirk(&["tokenize", "--scheme", "moses", "--json"], "C[F-]\n");
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["tokens"], serde_json::json!(["C", "[UNK]"]));
    assert_eq!(v["offsets"], serde_json::json!([[0, 1], [1, 5]]));
    assert_eq!(v["unk_spans"], serde_json::json!([[1, 5]]));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(smirk(&["frobnicate"], "").status.code(), Some(64));
    assert_eq!(
        smirk(&["tokenize", "--scheme", "gpe"], "C\n").status.code(),
        Some(64)
    );
    assert_eq!(
        smirk(&["audit", "--probe-sets", ""], "").status.code(),
        Some(64)
    );
    assert_eq!(
        smirk(&["audit", "--probe-sets", "metals"], "")
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        smirk(&["--threads", "0", "synth"], "").status.code(),
        Some(64)
    );
    assert_eq!(smirk(&["--help"], "").status.code(), Some(0));
}

#[test]
fn missing_files_exit_74() {
    let o = smirk(&["tokenize", "/nonexistent/input.smi"], "");
    assert_eq!(o.status.code(), Some(74));
}

#[test]
fn train_gpe_reports_stop_reason() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("CCO\nCCO\nCCN\n", 166, 1, "target reached"),
        ("C\n", 200, 0, "merges exhausted"),
        ("CCC\n", 200, 1, "frequency floor"),
    ];
    for (i, (corpus, target, merges, reason)) in cases.into_iter().enumerate() {
        let path = write(dir.path(), &format!("c{i}.smi"), corpus);
        let out = dir.path().join(format!("v{i}.json"));
        let o = smirk(
            &[
                "train-gpe",
                "--corpus",
                &path,
                "--target-size",
                &target.to_string(),
                "--out",
                out.to_str().unwrap(),
            ],
            "",
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
        assert_eq!(v["merges"], merges);
        assert_eq!(v["stop_reason"], reason);
        if i == 0 {
            let t = smirk(
                &[
                    "tokenize",
                    "--scheme",
                    "gpe",
                    "--vocab",
                    out.to_str().unwrap(),
                ],
                "CCO\n",
            );
            assert_eq!(stdout(&t), "CC\tO\n");
        }
    }
}

#[test]
fn audit_findings_are_data() {
    let dir = tempfile::tempdir().unwrap();
    let extra = write(dir.path(), "ions.smi", "[F-]\nCC\n");
    let o = smirk(
        &["audit", "--vocabs", "smirk,moses", "--extra-set", &extra],
        "",
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.starts_with("tokenizer,probe_set,total,oov_count,oov_percent\n"));
    for line in csv.lines().filter(|l| l.starts_with("smirk,")) {
        assert!(line.ends_with(",0,0.00"), "{line}");
    }
    assert!(csv.contains("moses,ions,2,1,50.00"), "{csv}");

    let o = smirk(
        &[
            "audit",
            "--vocabs",
            "moses",
            "--extra-set",
            &extra,
            "--probe-sets",
            "bonds",
            "--json",
        ],
        "",
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"][1]["failing"], serde_json::json!(["[F-]"]));
}

#[test]
fn ngram_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = d.join("desk.smi");
    let o = smirk(
        &[
            "synth",
            "-n",
            "3000",
            "--seed",
            "5",
            "-o",
            corpus.to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(o.status.code(), Some(0));
    let o = smirk(
        &["split", "--corpus", corpus.to_str().unwrap(), "--seed", "2"],
        "",
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let counts: Vec<u64> = serde_json::from_value(manifest["counts"].clone()).unwrap();
    assert_eq!(counts.iter().sum::<u64>(), 3000);
    assert!(d.join("desk.split.json").exists());

    let train = d.join("desk.train.smi");
    let test = d.join("desk.test.smi");
    let template = d.join("m{order}.ngm");
    let o = smirk(
        &[
            "ngram",
            "train",
            "--scheme",
            "smirk",
            "--order",
            "1,3",
            "--corpus",
            train.to_str().unwrap(),
            "--out",
            template.to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (m1, m3) = (d.join("m1.ngm"), d.join("m3.ngm"));
    let o = smirk(
        &[
            "ngram",
            "eval",
            "--scheme",
            "smirk",
            "--model",
            m1.to_str().unwrap(),
            "--model",
            m3.to_str().unwrap(),
            "--corpus",
            test.to_str().unwrap(),
        ],
        "",
    );
    let table = stdout(&o);
    let rows: Vec<Vec<&str>> = table
        .lines()
        .skip(1)
        .map(|l| l.split('\t').collect())
        .collect();
    let loss = |r: &Vec<&str>| r[3].parse::<f64>().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(loss(&rows[1]) < loss(&rows[0]), "{table}");

    // smirk never emits [UNK], so masking by its own unknowns loses nothing
    let o = smirk(
        &[
            "ngram",
            "info-loss",
            "--scheme",
            "smirk",
            "--model",
            m3.to_str().unwrap(),
            "--mask-tokenizer",
            "smirk",
            "--corpus",
            test.to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().skip(1) {
        assert!(line.ends_with("\t0\t0.000000000"), "{line}");
    }
    let summary: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(summary["mean_kl"], 0.0);

    let odds = d.join("odds.jsonl");
    let o = smirk(
        &[
            "ngram",
            "info-loss",
            "--scheme",
            "smirk",
            "--model",
            m3.to_str().unwrap(),
            "--mask-tokenizer",
            "moses",
            "--corpus",
            test.to_str().unwrap(),
            "--log-odds",
            odds.to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert!(summary["mean_kl"].as_f64().unwrap() > 0.0);
    let first = std::fs::read_to_string(&odds).unwrap();
    let row: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert!(row["log_odds"].is_number());
}

#[test]
fn model_for_another_vocabulary_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write(dir.path(), "c.smi", "CCO\nc1ccccc1\n");
    let model = dir.path().join("m.ngm");
    smirk(
        &[
            "ngram",
            "train",
            "--scheme",
            "char",
            "--order",
            "2",
            "--corpus",
            &corpus,
            "--out",
            model.to_str().unwrap(),
        ],
        "",
    );
    let o = smirk(
        &[
            "ngram",
            "eval",
            "--scheme",
            "smirk",
            "--model",
            model.to_str().unwrap(),
            "--corpus",
            &corpus,
        ],
        "",
    );
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("m.ngm"));
}

#[test]
fn stats_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write(dir.path(), "c.smi", "CCO\n\nc1ccccc1\n");
    let csv = dir.path().join("s.csv");
    let o = smirk(
        &[
            "stats",
            "--scheme",
            "smirk",
            "--corpus",
            &corpus,
            "-o",
            csv.to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(summary["molecules"], 2);
    assert_eq!(summary["total_tokens"], 11);
    assert_eq!(summary["fertility"], 5.5);
    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(
        body.starts_with("rank,token,count,frequency,information_nats\n1,c,6,"),
        "{body}"
    );
}

#[test]
fn deterministic_outputs() {
    let a = smirk(&["synth", "-n", "50", "--seed", "9"], "");
    let b = smirk(&["synth", "-n", "50", "--seed", "9"], "");
    assert_eq!(a.stdout, b.stdout);
    let one = smirk(&["--threads", "1", "tokenize", "--json"], &stdout(&a));
    let many = smirk(&["--threads", "8", "tokenize", "--json"], &stdout(&a));
    assert_eq!(one.stdout, many.stdout);
}
