use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unipolar")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn compress_round_trip_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    // Sparse bytes: mostly zero bits.
    let data: Vec<u8> = (0..700u32).map(|i| if i % 37 == 0 { 1 << (i % 8) } else { 0 }).collect();
    fs::write(dir.path().join("in.bin"), &data).unwrap();
    let common = ["--n", "1024", "--rate", "0.5", "--samples", "300", "--seed", "5"];
    let mut a = vec!["compress", "--in"];
    let (src, c1, c2, back) = (p(dir.path(), "in.bin"), p(dir.path(), "c1"), p(dir.path(), "c2"), p(dir.path(), "back"));
    a.extend([src.as_str(), "--out", c1.as_str()]);
    a.extend(common);
    let report = ok(&a);
    a[4] = c2.as_str();
    assert_eq!(report, ok(&a));
    assert_eq!(fs::read(&c1).unwrap(), fs::read(&c2).unwrap());
    let rate: f64 = report.lines().find_map(|l| l.strip_prefix("rate ")).unwrap().parse().unwrap();
    assert!(rate < 0.75, "{report}");
    let report = ok(&["decompress", "--in", &c1, "--out", &back, "--seed", "0"]);
    assert!(report.contains("blocks 6"));
    assert_eq!(fs::read(&back).unwrap(), data);
}

#[test]
fn sketch_and_recover() {
    let dir = tempfile::tempdir().unwrap();
    let spec = p(dir.path(), "spec");
    let x: Vec<String> = (0..16).map(|i| if i == 5 { "2".into() } else { "0".into() }).collect();
    fs::write(dir.path().join("x.txt"), x.join(" ")).unwrap();
    let (xin, y, xr) = (p(dir.path(), "x.txt"), p(dir.path(), "y.txt"), p(dir.path(), "xr.txt"));
    let out = ok(&[
        "sketch", "--a", "3", "--epsilon", "0.05", "--n", "16", "--method", "pcp", "--seed", "1",
        "--storage", "mc", "--samples", "500", "--spec", &spec, "--in", &xin, "--out", &y,
    ]);
    assert!(out.contains("m "));
    assert!(dir.path().join("spec.pset").exists() && dir.path().join("spec.json").exists());
    ok(&["recover", "--spec", &spec, "--in", &y, "--out", &xr]);
    let rec: Vec<String> = fs::read_to_string(&xr).unwrap().split_whitespace().map(String::from).collect();
    assert_eq!(rec, x);
}

#[test]
fn curves_are_csv_with_params() {
    let out = ok(&["eta-curve", "--a", "3", "--grid", "10"]);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("# params: {"));
    assert_eq!(lines[1], "epsilon,eta");
    assert_eq!(lines.len(), 12);
    for l in &lines[2..] {
        let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(v[1] <= 2.0 * v[0] + 1e-9);
    }
    let region = ok(&["dom-region", "--p", "0.6,0.3,0.1", "--mode", "dominated-by-c", "--grid", "10"]);
    assert_eq!(region.lines().nth(1), Some("x,y,flag"));
    assert_eq!(region.lines().count(), 2 + 66);
}

#[test]
fn compound_defaults_to_counterexample() {
    let out = ok(&["compound"]);
    assert!(out.contains("exceeds_C"));
    let lb = out.lines().find(|l| l.starts_with("lower_bound_l1")).unwrap();
    let v: f64 = lb.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((v - 0.8174).abs() < 1e-3);
}

#[test]
fn storage_set_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (pset, csv) = (p(dir.path(), "s.pset"), p(dir.path(), "s.csv"));
    let out = ok(&["storage-set", "--p", "0.9,0.1", "--n", "2", "--delta", "0.5", "--storage", "exact", "--out", &pset, "--csv", &csv]);
    assert!(out.contains("size 1"));
    let s = unipolar::storage::decode_storage_set(&fs::read(&pset).unwrap()).unwrap();
    assert_eq!(s.indices(), &[0]);
    assert!(fs::read_to_string(&csv).unwrap().lines().nth(2).unwrap().starts_with("0,"));
}

#[test]
fn trials_are_reproducible() {
    let args = ["trials", "--kind", "roundtrip", "--n", "256", "--trials", "20", "--samples", "300", "--seed", "9"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    assert!(a.contains("successes "));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["eta-curve", "--a", "4"]).status.code(), Some(2));
    assert_eq!(run(&["trials", "--kind", "roundtrip"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let junk = p(dir.path(), "junk");
    fs::write(&junk, b"not a stream").unwrap();
    let out = p(dir.path(), "out");
    assert_eq!(run(&["decompress", "--in", &junk, "--out", &out, "--seed", "0"]).status.code(), Some(3));
    let missing = p(dir.path(), "missing");
    assert_eq!(run(&["decompress", "--in", &missing, "--out", &out, "--seed", "0"]).status.code(), Some(5));
    assert_eq!(run(&["storage-set", "--p", "0.2,0.3,0.5", "--n", "16", "--storage", "exact"]).status.code(), Some(4));
}
