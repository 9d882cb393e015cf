use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const SMALL: &str = "\
[model]
latent_dim = 8
heads = 2
window = 6
blocks = 1
seed = 4

[train]
epochs = 3
batch_size = 16
";

fn sentinel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentinel"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    ok(sentinel(
        &[
            "gen",
            "--accounts",
            "6",
            "--records",
            "120",
            "--anomaly-rate",
            "0.05",
            "--seed",
            "3",
            "--patterns",
            "amount-spike,burst",
            "--out",
            "ledger.csv",
        ],
        dir.path(),
    ));
    dir
}

fn train(dir: &Path) {
    ok(sentinel(
        &[
            "train",
            "--data",
            "ledger.csv",
            "--config",
            "small.toml",
            "--out",
            "model.lsnt",
        ],
        dir,
    ));
}

#[test]
fn gen_is_reproducible() {
    let dir = prepared();
    ok(sentinel(
        &[
            "gen",
            "--accounts",
            "6",
            "--records",
            "120",
            "--anomaly-rate",
            "0.05",
            "--seed",
            "3",
            "--patterns",
            "amount-spike,burst",
            "--out",
            "again.csv",
        ],
        dir.path(),
    ));
    let a = std::fs::read(dir.path().join("ledger.csv")).unwrap();
    let b = std::fs::read(dir.path().join("again.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 721);
}

#[test]
fn train_then_eval_reports() {
    let dir = prepared();
    train(dir.path());
    let bytes = std::fs::read(dir.path().join("model.lsnt")).unwrap();
    assert_eq!(&bytes[..4], b"LSNT");

    ok(sentinel(
        &[
            "eval",
            "--model",
            "model.lsnt",
            "--data",
            "ledger.csv",
            "--report",
            "r.csv",
            "--format",
            "csv",
        ],
        dir.path(),
    ));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "model,auc,f1,precision,recall,threshold");
    assert!(lines[1].starts_with("sentinel,"));
    assert_eq!(lines.len(), 2);

    ok(sentinel(
        &[
            "eval",
            "--model",
            "model.lsnt",
            "--data",
            "ledger.csv",
            "--report",
            "r.json",
        ],
        dir.path(),
    ));
    let json = std::fs::read_to_string(dir.path().join("r.json")).unwrap();
    assert!(json.contains("\"auc\""));
}

#[test]
fn training_twice_writes_identical_models() {
    let dir = prepared();
    train(dir.path());
    let first = std::fs::read(dir.path().join("model.lsnt")).unwrap();
    train(dir.path());
    assert_eq!(first, std::fs::read(dir.path().join("model.lsnt")).unwrap());
}

#[test]
fn sweep_emits_four_rows_deterministically() {
    let dir = prepared();
    let run = |name: &str| {
        let stdout = ok(sentinel(
            &[
                "sweep",
                "--heads",
                "1,2,4,8",
                "--data",
                "ledger.csv",
                "--config",
                "small.toml",
                "--report",
                name,
                "--format",
                "csv",
            ],
            dir.path(),
        ));
        (
            stdout,
            std::fs::read_to_string(dir.path().join(name)).unwrap(),
        )
    };
    let (out_a, a) = run("a.csv");
    let (out_b, b) = run("b.csv");
    assert_eq!(a, b);
    assert_eq!(out_a, out_b);
    assert_eq!(a.lines().count(), 5);
    assert!(out_a.lines().last().unwrap().starts_with("best heads "));
}

#[test]
fn bad_head_count_fails() {
    let dir = prepared();
    let out = sentinel(
        &[
            "sweep",
            "--heads",
            "3",
            "--data",
            "ledger.csv",
            "--config",
            "small.toml",
            "--report",
            "x.csv",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("must divide"));
}

#[test]
fn unknown_config_key_fails() {
    let dir = prepared();
    std::fs::write(dir.path().join("bad.toml"), "[model]\nlayers = 3\n").unwrap();
    let out = sentinel(
        &[
            "train",
            "--data",
            "ledger.csv",
            "--config",
            "bad.toml",
            "--out",
            "m.lsnt",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
}

#[test]
fn gradcheck_passes() {
    let out = ok(sentinel(&["gradcheck"], Path::new(".")));
    let last = out.lines().last().unwrap();
    let err: f64 = last
        .trim_start_matches("max relative error ")
        .parse()
        .unwrap();
    assert!(err <= 1e-4);
    assert_eq!(out.lines().count(), 6);
}

#[test]
fn score_stdin_streams_events() {
    let dir = prepared();
    train(dir.path());
    ok(sentinel(
        &[
            "gen",
            "--accounts",
            "2",
            "--records",
            "10",
            "--seed",
            "9",
            "--out",
            "live.jsonl",
        ],
        dir.path(),
    ));
    let mut input = std::fs::read_to_string(dir.path().join("live.jsonl")).unwrap();
    input.push_str("not json\n");

    let mut child = Command::new(env!("CARGO_BIN_EXE_sentinel"))
        .args(["score", "--model", "model.lsnt", "--threshold", "0.0"])
        .current_dir(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let events: Vec<_> = stdout.lines().collect();
    assert_eq!(events.len(), 20);
    assert_eq!(
        events.iter().filter(|e| e.contains("\"warmup\"")).count(),
        10
    );
    assert!(events
        .iter()
        .filter(|e| e.contains("\"scored\""))
        .all(|e| e.contains("\"alert\":true")));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("\"malformed\""));
    assert!(stderr.contains("\"rejected\":1"));
}

#[test]
fn score_listens_until_interrupted() {
    let dir = prepared();
    train(dir.path());
    ok(sentinel(
        &[
            "gen",
            "--accounts",
            "1",
            "--records",
            "8",
            "--seed",
            "2",
            "--out",
            "live.jsonl",
        ],
        dir.path(),
    ));
    let mut child = Command::new(env!("CARGO_BIN_EXE_sentinel"))
        .args(["score", "--model", "model.lsnt", "--listen", "127.0.0.1:0"])
        .current_dir(dir.path())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut banner = String::new();
    stderr.read_line(&mut banner).unwrap();
    let addr = banner
        .trim()
        .trim_start_matches("listening on ")
        .to_string();

    let stream = TcpStream::connect(&addr).unwrap();
    let mut writer = stream.try_clone().unwrap();
    let mut reader = BufReader::new(stream);
    let lines = std::fs::read_to_string(dir.path().join("live.jsonl")).unwrap();
    let mut replies = Vec::new();
    for line in lines.lines() {
        writeln!(writer, "{line}").unwrap();
        let mut reply = String::new();
        reader.read_line(&mut reply).unwrap();
        replies.push(reply);
    }
    drop(writer);
    drop(reader);
    assert_eq!(
        replies.iter().filter(|r| r.contains("\"scored\"")).count(),
        3
    );

    let status = Command::new("kill")
        .args(["-INT", &child.id().to_string()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(child.wait().unwrap().success());
    let mut summary = String::new();
    stderr.read_line(&mut summary).unwrap();
    assert!(summary.contains("scored 3 warmup 5"), "{summary}");
}
