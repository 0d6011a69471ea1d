use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_sublevel");
const TWO_TERM: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/two_term.json");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("SUBLEVEL_THREADS")
        .output()
        .unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Header and data rows, metadata dropped.
fn table(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn jf_two_term_matches_closed_form() {
    let t = table(&stdout(&[
        "jf",
        "--poly",
        TWO_TERM,
        "--u",
        "0.5",
        "--samples",
        "1000000",
    ]));
    assert_eq!(t[0], ["u", "j_estimate", "std_error"]);
    let j: f64 = t[1][1].parse().unwrap();
    let se: f64 = t[1][2].parse().unwrap();
    let exact = 2.0 / std::f64::consts::PI * 0.25f64.asin();
    assert!((j - exact).abs() <= 3.0 * se);
}

#[test]
fn metadata_line_records_configuration() {
    let text = stdout(&[
        "--seed",
        "5",
        "jf",
        "--coeffs",
        "1,-1",
        "--u",
        "0.5",
        "--samples",
        "1000",
    ]);
    let first = text.lines().next().unwrap();
    let meta: serde_json::Value = serde_json::from_str(first.strip_prefix("# ").unwrap()).unwrap();
    assert_eq!(meta["command"], "jf");
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["samples"], 1000);
    assert_eq!(meta["window"], "auto");
    assert!(meta.get("threads").is_some());
}

#[test]
fn cn_checkpoints() {
    let t = table(&stdout(&["cn", "--n-max", "1000000"]));
    assert_eq!(t[0], ["n", "log_cn", "cn_over_n"]);
    assert_eq!(t[1][0], "1");
    assert_eq!(t[1][2], "0.5");
    assert_eq!(t.last().unwrap()[0], "1000000");
    let ratios: Vec<f64> = t[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(ratios.windows(2).skip(3).all(|w| w[1] > w[0]));
}

#[test]
fn phin_growth_rows_ascend() {
    let t = table(&stdout(&[
        "phin-growth",
        "--N-list",
        "5,10,20",
        "--samples",
        "200000",
    ]));
    assert_eq!(
        t[0],
        ["N", "log_mplus_quadrature", "log_mplus_sampling", "err"]
    );
    assert_eq!(t.len(), 4);
    let q: Vec<f64> = t[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(q[0] < q[1] && q[1] < q[2]);
    for r in &t[1..] {
        let (a, b): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((a - b).abs() < 1e-3);
    }
}

#[test]
fn mahler_json_for_lehmer() {
    let text = stdout(&[
        "mahler",
        "--coeffs",
        "1,1,0,-1,-1,-1,-1,-1,0,1,1",
        "--format",
        "json",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let triples = doc["data"]["triples"].as_array().unwrap();
    assert_eq!(triples.len(), 2);
    for t in triples {
        assert!((t["m"].as_f64().unwrap() - 1.1762808182599175).abs() < 1e-9);
    }
    assert_eq!(triples[0]["method"], "jensen");
}

#[test]
fn mahler_of_phi_n_is_one() {
    let t = table(&stdout(&["mahler", "--N", "12", "--method", "quadrature"]));
    let log_m: f64 = t[1][1].parse().unwrap();
    assert!(log_m.abs() < 1e-6);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("farey.csv");
    let out = run(&["farey", "--N", "4", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let t = table(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(t.len(), 1 + 6);
    assert_eq!(t[2], ["1", "4", "0.25"]);
}

#[test]
fn thread_setting_from_environment() {
    let out = Command::new(BIN)
        .args(["discrepancy", "--angles", "0,0.5"])
        .env("SUBLEVEL_THREADS", "2")
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# ") && text.contains("\"threads\":2"));
    assert_eq!(table(&text)[1], ["angles", "2", "0.5"]);
}

#[test]
fn exit_codes() {
    let unknown = run(&["jf", "--bogus"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(!unknown.stderr.is_empty() && unknown.stdout.is_empty());
    assert_eq!(run(&["nonsense"]).status.code(), Some(1));
    assert_eq!(
        run(&["jf", "--coeffs", "0", "--u", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["jf", "--coeffs", "1,1"]).status.code(), Some(1));
    assert_eq!(
        run(&["jf", "--poly", "/nonexistent.json", "--u", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["discrepancy", "--angles", "1.5"]).status.code(),
        Some(1)
    );
    // a panel budget far too small for the tolerance
    let starved = run(&[
        "mahler",
        "--coeffs",
        "1,0.3,-2,0.7",
        "--method",
        "quadrature",
        "--tol",
        "1e-14",
        "--max-panels",
        "16",
    ]);
    assert_eq!(
        starved.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&starved.stderr)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn examples_and_probes_emit_tables() {
    let t = table(&stdout(&["examples"]));
    assert_eq!(t.len(), 12);
    assert_eq!(t[0][0], "n");
    let c = table(&stdout(&[
        "conj3", "--n", "3", "--trials", "10", "--dense", "--real",
    ]));
    assert_eq!(c[1][4], "true");
    assert_eq!(c[1][5], "true");
    let b = table(&stdout(&[
        "best-constant",
        "--n",
        "1",
        "--trials",
        "5",
        "--samples",
        "10000",
    ]));
    let value: f64 = b[1][2].parse().unwrap();
    assert!(value <= 0.5 + 0.05);
    let l = table(&stdout(&["lemma2", "--trials", "50"]));
    assert_eq!(l[1][2], "0");
}

#[test]
fn bound_and_moments() {
    let t = table(&stdout(&["bound", "--n", "2", "--height", "1", "--u", "1"]));
    assert_eq!(t[0], ["u", "bound", "j_estimate", "std_error"]);
    assert!((t[1][1].parse::<f64>().unwrap() - 1.6434564029725032).abs() < 1e-12);
    let m = table(&stdout(&[
        "bound",
        "--coeffs",
        "1,0.5,-1",
        "--p",
        "1,2",
        "--samples",
        "10000",
    ]));
    assert_eq!(m.len(), 3);
    let mean: f64 = m[2][3].parse().unwrap();
    let bound: f64 = m[2][1].parse().unwrap();
    assert!(mean < bound);
}
