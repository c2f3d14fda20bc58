use std::process::Command;

use serde_json::Value;
use tracest_core::bounds::gaussian_necessary_min_n;
use tracest_core::TolerancePair;

fn tracest(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tracest"))
        .args(args)
        .env_remove("TRACEST_SEED")
        .output()
        .expect("run tracest");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let (code, out, err) = tracest(&full);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

fn bound_row(v: &Value, name: &str) -> Value {
    v.as_array().unwrap().iter().find(|r| r["bound"] == name).unwrap()["N"].clone()
}

#[test]
fn estimate_exact_unit_case() {
    let v = json(&["estimate", "--generator", "diag-const:n=5,value=2", "--method", "unit", "--samples", "1"]);
    assert_eq!(v[0]["estimate"].as_f64(), Some(10.0));
    assert_eq!(v[0]["rel_error"].as_f64(), Some(0.0));
    assert_eq!(v[0]["samples"].as_u64(), Some(1));
}

#[test]
fn estimate_is_deterministic_with_17_digits() {
    let args = ["estimate", "--generator", "all-ones:n=100", "--method", "hutchinson", "--samples", "1", "--seed", "1"];
    let (c1, a, _) = tracest(&args);
    let (c2, b, _) = tracest(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let row = a.lines().nth(1).unwrap();
    let value = row.split_whitespace().nth(3).unwrap();
    let mantissa = value.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{value}");
}

#[test]
fn seed_env_var_is_the_default_seed() {
    let args = ["estimate", "--generator", "gram-gaussian:n=30,m=4", "--samples", "3"];
    let flag = {
        let mut a = args.to_vec();
        a.extend(["--seed", "99"]);
        tracest(&a).1
    };
    let out = Command::new(env!("CARGO_BIN_EXE_tracest")).args(args).env("TRACEST_SEED", "99").output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), flag);
    assert_ne!(tracest(&args).1, flag);
}

#[test]
fn matrix_file_round_trip_and_variance_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.mtx");
    let p = path.to_str().unwrap();
    let (code, _, err) = tracest(&["genmat", "--generator", "gram-uniform:n=40,m=8,seed=3", "--out", p, "--symmetric"]);
    assert_eq!(code, 0, "{err}");
    let from_file = json(&["estimate", "--matrix", p, "--method", "gaussian", "--samples", "6000", "--seed", "2"]);
    let from_gen = json(&[
        "estimate", "--generator", "gram-uniform:n=40,m=8,seed=3", "--method", "gaussian", "--samples", "6000", "--seed", "2",
    ]);
    let tr_file = from_file[0]["exact_trace"].as_f64().unwrap();
    let tr_gen = from_gen[0]["exact_trace"].as_f64().unwrap();
    assert!((tr_file - tr_gen).abs() < 1e-12);

    let op = tracest_core::linop::mtx::read_matrix_market_file(&path).unwrap();
    let fro = op.to_dense().frobenius_norm_sq();
    let var = from_file[0]["sample_variance"].as_f64().unwrap();
    assert!((var / (2.0 * fro) - 1.0).abs() < 0.15, "{var} vs {}", 2.0 * fro);
}

#[test]
fn bounds_examples() {
    let v = json(&["bounds", "--eps", "0.05", "--delta", "0.05"]);
    assert_eq!(bound_row(&v, "hutchinson").as_u64(), Some(8854));
    assert_eq!(bound_row(&v, "gaussian").as_u64(), Some(11805));
    assert!(bound_row(&v, "gaussian-necessary").is_null());

    let v = json(&["bounds", "--eps", "0.05", "--delta", "0.05", "--rank", "200"]);
    let want = gaussian_necessary_min_n(200, TolerancePair::new(0.05, 0.05).unwrap()).unwrap();
    assert_eq!(bound_row(&v, "gaussian-necessary").as_u64(), Some(want));

    let v = json(&["bounds", "--eps", "0.05", "--delta", "0.05", "--ku", "0", "--n", "1000"]);
    assert_eq!(bound_row(&v, "unit").as_u64(), Some(1));
    assert_eq!(bound_row(&v, "unit-noreplace").as_u64(), Some(1));

    let (code, table, _) = tracest(&["bounds", "--eps", "0.05", "--delta", "0.05"]);
    assert_eq!(code, 0);
    assert!(table.lines().any(|l| l.starts_with("hutchinson-matrix") && l.trim_end().ends_with('-')));
}

#[test]
fn bounds_from_matrix_diagnostics() {
    let v = json(&["bounds", "--eps", "0.2", "--delta", "0.2", "--generator", "projection:n=50,rank=5", "--materialize"]);
    assert!(bound_row(&v, "hutchinson-matrix").is_u64());
    assert!(bound_row(&v, "gaussian-matrix").is_u64());
    assert!(bound_row(&v, "unit").is_u64());
    assert!(bound_row(&v, "gaussian-necessary").is_u64());
}

#[test]
fn necessary_verb() {
    let v = json(&["necessary", "--eps", "0.1", "--delta", "0.1", "--rank", "100", "--n", "5"]);
    assert_eq!(v[0]["N"].as_u64(), Some(6));
    assert_eq!(v[0]["exceeds_n"].as_bool(), Some(true));
    assert!(v[0]["phi_at_N"].as_f64().unwrap() <= 0.1);
}

#[test]
fn stats_formats_agree() {
    let args = ["stats", "--generator", "gram-gaussian:n=25,m=5", "--materialize"];
    let (_, table, _) = tracest(&args);
    let mut csv_args = vec!["--format", "csv"];
    csv_args.extend_from_slice(&args);
    let (_, csv, _) = tracest(&csv_args);
    let v = json(&args);
    let kv: std::collections::HashMap<&str, &str> = table.lines().filter_map(|l| l.split_once('=')).collect();
    let k_g: f64 = kv["k_g"].parse().unwrap();
    assert_eq!(k_g, v["k_g"].as_f64().unwrap());
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == "k_u").unwrap();
    assert_eq!(row[idx].parse::<f64>().unwrap(), v["k_u"].as_f64().unwrap());
}

#[test]
fn experiment_csv_is_worker_independent() {
    let args = |w: &'static str| {
        vec![
            "--format", "csv", "--workers", w, "experiment", "--generator", "gram-uniform:n=30,m=5", "--method",
            "hutchinson,unit", "--eps", "0.2", "--delta", "0.2", "--trials", "100", "--seed", "5",
        ]
    };
    let (c1, a, _) = tracest(&args("1"));
    let (c2, b, _) = tracest(&args("3"));
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    assert!(a.starts_with("figure,method,n,rank,theta_or_param,N,trials,successes,success_prob,eps,delta,seed\n"));
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn figure_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig.cfg");
    std::fs::write(&cfg, "figure=randsamp-bounds\n# sweep\nk_points=5\n").unwrap();
    let out_dir = dir.path().join("out");
    let (code, _, err) = tracest(&[
        "figure", "--id", "randsamp-bounds", "--config", cfg.to_str().unwrap(), "--set", "k_max=1", "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(out_dir.join("randsamp-bounds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    assert!(std::fs::read_to_string(out_dir.join("randsamp-bounds.svg")).unwrap().contains("</svg>"));
    let (code, _, _) = tracest(&["figure", "--id", "thetas", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn exit_codes() {
    assert_eq!(tracest(&["bounds", "--eps", "0", "--delta", "0.5"]).0, 2);
    assert_eq!(tracest(&["estimate", "--matrix", "/nonexistent.mtx", "--samples", "1"]).0, 2);
    assert_eq!(tracest(&["estimate", "--generator", "all-ones:n=3", "--matrix", "x.mtx", "--samples", "1"]).0, 2);
    assert_eq!(tracest(&["estimate", "--generator", "all-ones:n=3", "--method", "unit-noreplace", "--samples", "4"]).0, 2);
    assert_eq!(tracest(&["stats", "--generator", "diag-const:n=4,value=0"]).0, 3);
    let (code, out, _) = tracest(&[
        "--format", "csv", "experiment", "--generator", "all-ones:n=40", "--method", "gaussian", "--eps", "0.01", "--trials",
        "10", "--n-max", "2",
    ]);
    assert_eq!(code, 1);
    assert!(out.lines().nth(1).unwrap().contains(",gaussian,40,"));
}

#[test]
fn every_verb_has_help_with_defaults() {
    for verb in ["estimate", "bounds", "necessary", "stats", "experiment", "figure", "genmat"] {
        let (code, out, _) = tracest(&[verb, "--help"]);
        assert_eq!(code, 0, "{verb}");
        assert!(out.contains("--format") && out.contains("--workers") && out.contains("--seed"), "{verb}");
    }
    let (_, out, _) = tracest(&["experiment", "--help"]);
    assert!(out.contains("[default: 500]"));
    let (_, out, _) = tracest(&["estimate", "--help"]);
    assert!(out.contains("rank-one-decay"));
}
