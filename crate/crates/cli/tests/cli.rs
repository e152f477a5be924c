use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::thread;

use serde_json::Value;

const ENV_VARS: &[&str] = &[
    "TEXTSTATE_CONFIG",
    "TEXTSTATE_MODE",
    "TEXTSTATE_TAU",
    "TEXTSTATE_BETA",
    "TEXTSTATE_LANG",
    "TEXTSTATE_LEXICON",
    "TEXTSTATE_FIXTURES",
    "TEXTSTATE_PROVIDER",
    "TEXTSTATE_PROVIDER_CONFIG",
    "TEXTSTATE_CORPUS",
    "TEXTSTATE_JOBS",
];

fn cmd() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_textstate"));
    for v in ENV_VARS {
        c.env_remove(v);
    }
    c
}

fn run(args: &[&str]) -> Output {
    cmd().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn detect_examples() {
    let v = json(&run(&["detect", "maybe I will"]));
    assert_eq!(v["bits"]["hedging"], true);
    assert_eq!(v["hits"][0]["surface"], "maybe");

    let v = json(&run(&["detect", "plain sentence"]));
    assert!(v["bits"].as_object().unwrap().values().all(|b| b == false));
    assert_eq!(v["has_conflict"], false);

    let out = run(&["detect", ""]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["detect", "x", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["map"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["map", "--tau", "2", "a, but b"]).status.code(),
        Some(2)
    );
}

#[test]
fn map_rule_example() {
    let v = json(&run(&["map", "--mode", "rule", "Yametai kedo yametakunai"]));
    assert_eq!(v["entries"].as_array().unwrap().len(), 2);
    assert_eq!(v["metrics"]["entropy_bits"], 1.0);
    assert_eq!(v["entries"][0]["context"], "pre-adv");
    assert_eq!(v["entries"][1]["context"], "post-adv");
}

#[test]
fn map_llm_from_fixtures() {
    let v = json(&run(&["map", "--mode", "llm", "I saw her duck."]));
    assert_eq!(v["entries"].as_array().unwrap().len(), 2);
    assert_eq!(v["entries"][0]["source"], "llm");

    let empty = tempfile::tempdir().unwrap();
    let out = run(&[
        "map",
        "--mode",
        "llm",
        "--fixtures",
        empty.path().to_str().unwrap(),
        "I saw her duck.",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no fixture"));
}

#[test]
fn map_from_stdin_with_embeddings() {
    let mut child = cmd()
        .args(["map", "--mode", "rule", "--stdin", "--emit-embeddings"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"I like it, but it is loud.\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    let v = json(&out);
    assert_eq!(v["source_text"], "I like it, but it is loud.");
    assert_eq!(v["entries"][0]["embedding"].as_array().unwrap().len(), 256);
}

#[test]
fn eval_formats_and_determinism() {
    let a = run(&["eval", "--format", "json", "--jobs", "3"]);
    let b = run(&["eval", "--format", "json", "--jobs", "1"]);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["overall"]["n"], 68);
    assert!(v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["mean_entropy"].as_f64().unwrap() > 0.0));

    let text = run(&["eval"]);
    let first = String::from_utf8(text.stdout).unwrap();
    let header: Vec<&str> = first.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["Category", "N", "|S|", "H(S)", "Method"]);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = run(&["eval", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("category,n,mean_size,mean_entropy"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn precedence_flag_env_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("textstate.toml");
    std::fs::write(&cfg, "mode = \"rule\"\n").unwrap();
    let size = |out: Output| json(&out)["metrics"]["size"].as_u64().unwrap();
    let text = "I saw her duck.";
    let cfg_s = cfg.to_str().unwrap();

    // file: rule -> collapsed single entry
    assert_eq!(
        size(
            cmd()
                .args(["--config", cfg_s, "map", text])
                .output()
                .unwrap()
        ),
        1
    );
    // env beats file
    assert_eq!(
        size(
            cmd()
                .args(["--config", cfg_s, "map", text])
                .env("TEXTSTATE_MODE", "llm")
                .output()
                .unwrap()
        ),
        2
    );
    // flag beats env
    assert_eq!(
        size(
            cmd()
                .args(["--config", cfg_s, "map", "--mode", "rule", text])
                .env("TEXTSTATE_MODE", "llm")
                .output()
                .unwrap()
        ),
        1
    );
}

#[test]
fn lexicon_dump_and_custom_lexicon() {
    let out = run(&["lexicon-dump"]);
    let v = json(&out);
    assert!(v.as_array().unwrap().len() > 40);

    let dir = tempfile::tempdir().unwrap();
    let lex = dir.path().join("lex.json");
    std::fs::write(
        &lex,
        r#"[{"surface": "nevertheless", "language": "en", "category": "adversative"}]"#,
    )
    .unwrap();
    let v = json(&run(&[
        "detect",
        "--lexicon",
        lex.to_str().unwrap(),
        "It rained, nevertheless we went but came back.",
    ]));
    assert_eq!(v["hits"].as_array().unwrap().len(), 1);

    std::fs::write(
        &lex,
        r#"[{"surface": "but", "language": "en", "category": "adversive"}]"#,
    )
    .unwrap();
    let out = run(&["detect", "--lexicon", lex.to_str().unwrap(), "a but b"]);
    assert_eq!(out.status.code(), Some(1));
}

fn stub_provider() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!(
        "http://{}/v1/chat/completions",
        listener.local_addr().unwrap()
    );
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            let _ = reader.read_exact(&mut body);
            let content = "INTERP: first reading\nCONTEXT: a\nCONFIDENCE: 0.5\n---\nINTERP: an entirely different second reading\nCONTEXT: b\nCONFIDENCE: 0.5\n---";
            let payload =
                serde_json::json!({"choices": [{"message": {"content": content}}]}).to_string();
            let mut out = stream;
            let _ = write!(
                out,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
        }
    });
    url
}

fn write_provider(dir: &Path, url: &str) -> String {
    let path = dir.join("provider.json");
    std::fs::write(
        &path,
        serde_json::json!({
            "endpoint": url,
            "model_id": "stub-model",
            "provider_label": "stub",
            "backoff_ms": 1,
            "max_retries": 1,
            "timeout_secs": 5
        })
        .to_string(),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn record_and_replay_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let provider = write_provider(dir.path(), &stub_provider());
    let corpus = dir.path().join("corpus.jsonl");
    std::fs::write(
        &corpus,
        concat!(
            r#"{"id": "x1", "text": "The bat flew away.", "language": "en", "category": "lexical", "expected_method": "llm"}"#,
            "\n",
            r#"{"id": "x2", "text": "I like it, but it is loud.", "language": "en", "category": "adversative", "expected_method": "rule"}"#,
            "\n"
        ),
    )
    .unwrap();
    let fixtures = dir.path().join("fx");
    let out = run(&[
        "record",
        "--corpus",
        corpus.to_str().unwrap(),
        "--provider-config",
        &provider,
        "--fixtures-out",
        fixtures.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("recorded 1 of 1"));
    assert!(fixtures.join("x1__stub.json").exists());

    let v = json(&run(&[
        "map",
        "--mode",
        "llm",
        "--fixtures",
        fixtures.to_str().unwrap(),
        "--provider",
        "stub",
        "--id",
        "x1",
        "The bat flew away.",
    ]));
    assert_eq!(v["metrics"]["size"], 2);

    // live mapping goes straight to the provider
    let v = json(&run(&[
        "map",
        "--mode",
        "llm",
        "--provider-config",
        &provider,
        "Anything at all.",
    ]));
    assert_eq!(v["metrics"]["size"], 2);
}

#[test]
fn record_reports_unreachable_provider() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let dir = tempfile::tempdir().unwrap();
    let provider = write_provider(dir.path(), &format!("http://127.0.0.1:{port}/v1"));
    let out = run(&[
        "record",
        "--provider-config",
        &provider,
        "--fixtures-out",
        dir.path().join("fx").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("recorded 0 of 28"));
}
