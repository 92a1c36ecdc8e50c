use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chromanet")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn subcommands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    assert_eq!(code(&["--seed", "2", "--out-dir", d, "gen-synthetic", "--subjects", "12"]), 0);
    let ann = dir.path().join("synthetic.csv");
    assert_eq!(code(&["--out-dir", d, "color-dist", "--annotations", s(&ann)]), 0);
    assert_eq!(code(&["--out-dir", d, "color-dist", "--annotations", s(&ann), "--subject", "syn03"]), 0);
    let human = dir.path().join("human_avg.csv");
    let subject = dir.path().join("syn03.csv");

    fs::create_dir(dir.path().join("emb")).unwrap();
    let emb = dir.path().join("emb/toy.csv");
    let mut body = String::from("char,d0,d1,d2\n");
    for (i, c) in ('A'..='Z').enumerate() {
        body.push_str(&format!("{c},{},{},{}\n", 1 + i % 3, (i * 7) % 5, 1 + (i * 3) % 4));
    }
    fs::write(&emb, body).unwrap();
    assert_eq!(code(&["--out-dir", d, "embed-dist", "--embeddings", s(&emb)]), 0);
    let model = dir.path().join("toy.csv");

    assert_eq!(code(&["--out-dir", d, "average", s(&human), s(&subject)]), 0);
    assert!(dir.path().join("average.csv").exists());
    assert_eq!(code(&["--out-dir", d, "cluster", "--matrix", s(&human), "--cutoffs", "0.2,0.6"]), 0);
    assert!(dir.path().join("cluster.json").exists());
    assert_eq!(code(&["--out-dir", d, "metrics", "--matrix", s(&human), "--degree-mode", "strength"]), 0);
    assert!(dir.path().join("betweenness.csv").exists());

    let out = run(&["cutnorm", "--matrix", s(&human), "--other", s(&human), "--cutnorm-method", "exact"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["value"], 0.0);

    let out = run(&[
        "--out-dir",
        d,
        "correlate",
        "--human",
        s(&human),
        "--model",
        &format!("self={}", s(&human)),
        "--model",
        s(&model),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["correlations"]["ranking"][0]["tag"], "self");
    assert_eq!(v["correlations"]["ranking"][0]["r"], 1.0);

    let rep = dir.path().join("rep");
    let out = run(&[
        "--out-dir",
        s(&rep),
        "report",
        "--annotations",
        s(&ann),
        "--embeddings",
        &format!("toy={}", s(&emb)),
        "--embeddings",
        &format!("toy={}", s(&emb)),
        "--baseline-iters",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(rep.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["sources"][1]["summary"]["tag"], "toy");
    assert_eq!(report["sources"][1]["summary"]["inputs"], 2);
    assert_eq!(report["correlations"]["labels"][0], "human_avg");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    // configuration
    assert_eq!(code(&["report"]), 2);
    assert_eq!(code(&["--out-dir", d, "gen-synthetic", "--groups", "40"]), 2);
    assert_eq!(code(&["--alphabet", "AA", "gen-synthetic"]), 2);

    // ingestion
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "subject_id,letter,hex\ns1,A,#GG0000\n").unwrap();
    assert_eq!(code(&["--out-dir", d, "report", "--annotations", s(&bad)]), 3);
    assert_eq!(code(&["--out-dir", d, "report", "--annotations", s(&dir.path().join("none.csv"))]), 3);
    assert!(!dir.path().join("report.json").exists());

    // computation
    assert_eq!(code(&["--out-dir", d, "gen-synthetic", "--groups", "5", "--between", "400"]), 4);
    let m = dir.path().join("m.csv");
    fs::write(&m, ",A,B,C\nA,0,0.9,0.2\nB,0.9,0,0.3\nC,0.2,0.3,0\n").unwrap();
    assert_eq!(code(&["metrics", "--matrix", s(&m), "--epsilon", "off"]), 4);
}

#[test]
fn lowercase_letters_are_folded() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("in.csv");
    let mut body = String::from("subject_id,letter,hex\n");
    for (i, c) in "abc".chars().enumerate() {
        body.push_str(&format!("p1,{c},#{:02x}8040\n", i * 60));
    }
    fs::write(&src, body).unwrap();
    let out = run(&[
        "--alphabet",
        "ABC",
        "--out-dir",
        s(dir.path()),
        "color-dist",
        "--annotations",
        s(&src),
        "--no-normalize",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let matrix = fs::read_to_string(dir.path().join("human_avg.csv")).unwrap();
    assert!(matrix.starts_with(",A,B,C\nA,0,"));
}
