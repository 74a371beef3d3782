//! End-to-end runs of the `rowquant` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn rowquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rowquant"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, rows: u32, dim: u32, seed: u32) -> PathBuf {
    let p = dir.path().join(name);
    let o = rowquant(&[
        "gen",
        "--rows",
        &rows.to_string(),
        "--dim",
        &dim.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path_str(&p),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    p
}

fn quantize(input: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["quantize", "--in", path_str(input), "--out", path_str(out)];
    args.extend_from_slice(extra);
    rowquant(&args)
}

#[test]
fn gen_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.embt", 4, 6, 9);
    let b = gen(&dir, "b.embt", 4, 6, 9);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn gen_rejects_bad_parameters() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.embt");
    assert_eq!(code(&rowquant(&["gen", "--rows", "0", "--dim", "4", "--out", path_str(&out)])), 1);
    assert_eq!(
        code(&rowquant(&["gen", "--rows", "2", "--dim", "4", "--std", "-1", "--out", path_str(&out)])),
        1
    );
}

#[test]
fn zero_std_gives_constant_table() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("c.embt");
    let o = rowquant(&[
        "gen", "--rows", "3", "--dim", "4", "--mean", "2.5", "--std", "0", "--out", path_str(&p),
    ]);
    assert_eq!(code(&o), 0);
    let t = rowquant::embt::load(&p).unwrap();
    assert!(t.data().iter().all(|&v| v == 2.5));
}

#[test]
fn greedy_quantize_reports_size() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.embt", 10, 64, 1);
    let o = quantize(&t, &dir.path().join("q.embq"), &["--method", "greedy"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,d,loss,bytes,percent");
    assert!(lines[1].starts_with("greedy,64,"));
    assert!(lines[1].ends_with(",400,15.62"), "{}", lines[1]);
}

#[test]
fn usage_errors() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.embt", 4, 8, 1);
    let q = dir.path().join("q.embq");
    for extra in [
        &["--method", "kmeans", "--bits", "8"][..],
        &["--method", "kmeans-cls"],
        &["--method", "kmeans-cls", "--k", "3"],
        &["--method", "asym", "--k", "2"],
        &["--method", "hist-brute", "--r", "0.2"],
        &["--method", "asym", "--seed", "1"],
        &["--method", "aciq", "--bits", "8"],
        &["--method", "aciq", "--aciq-dist", "gaussian"],
        &["--method", "asym", "--bits", "3"],
        &["--method", "nope"],
    ] {
        let o = quantize(&t, &q, extra);
        assert_eq!(code(&o), 1, "{extra:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(code(&rowquant(&["frobnicate"])), 1);
    assert_eq!(code(&rowquant(&["--help"])), 0);
}

#[test]
fn data_errors() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.embt");
    std::fs::write(&bad, b"NOPE").unwrap();
    let q = dir.path().join("q.embq");
    let o = quantize(&bad, &q, &["--method", "asym"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad magic"));
    let missing = dir.path().join("missing.embt");
    assert_eq!(code(&quantize(&missing, &q, &["--method", "asym"])), 2);

    let a = gen(&dir, "a.embt", 4, 8, 1);
    let b = gen(&dir, "b.embt", 4, 16, 1);
    assert_eq!(code(&quantize(&a, &q, &["--method", "asym"])), 0);
    let o = rowquant(&["evaluate", "--orig", path_str(&b), "--quant", path_str(&q)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn evaluate_emits_both_aggregations() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.embt", 5, 16, 2);
    let q = dir.path().join("q.embq");
    assert_eq!(code(&quantize(&t, &q, &["--method", "kmeans"])), 0);
    let o = rowquant(&["evaluate", "--orig", path_str(&t), "--quant", path_str(&q)]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,d,agg,loss,bytes,percent");
    assert!(lines[1].starts_with("kmeans_row,16,flattened,0.00000000,"));
    assert!(lines[2].starts_with("kmeans_row,16,row-mean,0.00000000,"));

    let o = rowquant(&["evaluate", "--orig", path_str(&t), "--quant", path_str(&q), "--agg", "row-mean"]);
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn every_method_quantizes_and_evaluates() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.embt", 8, 12, 3);
    let q = dir.path().join("q.embq");
    for (m, extra) in [
        ("sym", &[][..]),
        ("asym", &["--bits", "8", "--aux", "fp16"]),
        ("table", &[]),
        ("gss", &["--tol", "1e-3"]),
        ("greedy", &["--b", "100", "--r", "0.3"]),
        ("greedy-opt", &[]),
        ("aciq", &["--aciq-dist", "gaussian", "--aciq-alpha", "2.5"]),
        ("hist-apprx", &["--b", "50"]),
        ("hist-brute", &["--b", "30"]),
        ("kmeans", &["--aux", "fp16"]),
        ("kmeans-cls", &["--k", "4", "--seed", "7"]),
    ] {
        let mut args = vec!["--method", m];
        args.extend_from_slice(extra);
        let o = quantize(&t, &q, &args);
        assert_eq!(code(&o), 0, "{m}: {}", String::from_utf8_lossy(&o.stderr));
        let e = rowquant(&["evaluate", "--orig", path_str(&t), "--quant", path_str(&q)]);
        assert_eq!(code(&e), 0, "{m}");
    }
}

#[test]
fn sweeps_and_dumps_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let t = gen(&dir, "t.embt", 3, 64, 4);
    let runs: Vec<Vec<String>> = vec![
        ["sweep-dim", "--dims", "8,64", "--methods", "asym,greedy,table", "--seed", "3", "--trials", "2"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        vec![
            "hist-dump".into(),
            "--in".into(),
            path_str(&t).into(),
            "--row".into(),
            "1".into(),
            "--methods".into(),
            "asym,kmeans".into(),
        ],
    ];
    for args in runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = rowquant(&args);
        let b = rowquant(&args);
        assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout);
    }
    let o = rowquant(&["sweep-dim", "--dims", "8,64", "--methods", "asym,table"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("method,d,loss"));
    assert_eq!(text.lines().count(), 5);

    let o = rowquant(&["hist-dump", "--in", path_str(&t), "--row", "3", "--methods", "asym"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sweep_time_reports_counters() {
    let o = rowquant(&["sweep-time", "--dims", "16", "--methods", "hist-brute", "--b", "20", "--repeats", "1"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "hist-brute");
    assert_eq!(row[5], "4200");
}

#[test]
fn bench_runs() {
    let o = rowquant(&["bench", "--rows", "500", "--batch", "8", "--repeats", "3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "dtype,d,mode,median_s,gsums_per_s,bytes_per_row");
    assert!(lines[1].starts_with("fp32,128,cache_resident,") && lines[1].ends_with(",512"));
    assert!(lines[3].starts_with("int4,128,") && lines[3].ends_with(",72"));
}
