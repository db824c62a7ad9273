use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ctinfo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctinfo"))
        .args(args)
        .env_remove("CTINFO_SEED")
        .output()
        .expect("binary runs")
}

fn in_dir(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctinfo"))
        .args(args)
        .current_dir(dir)
        .env_remove("CTINFO_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn kl_beta31_to_uniform_is_log3_minus_two_thirds() {
    let out = ctinfo(&["divergence", "--kind", "kl", "--from", "beta31", "--to", "uniform"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let expected = 3f64.ln() - 2.0 / 3.0;
    assert!((v["value"].as_f64().unwrap() - expected).abs() < 1e-9, "{v}");
}

#[test]
fn closed_form_flag_agrees_with_quadrature() {
    let quad = json(&ctinfo(&[
        "divergence",
        "--kind",
        "kl",
        "--from",
        "beta31",
        "--to",
        "uniform",
    ]));
    let closed = json(&ctinfo(&[
        "divergence",
        "--kind",
        "kl",
        "--from",
        "beta31",
        "--to",
        "uniform",
        "--closed-form",
    ]));
    let (a, b) = (quad["value"].as_f64().unwrap(), closed["value"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-10);
}

#[test]
fn entropy_of_identity_map_is_zero() {
    let out = ctinfo(&["entropy", "--dist", "ct:l1=1,l2=1@uniform"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["entropy"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn malformed_spec_is_a_usage_error_with_position() {
    let out = ctinfo(&["entropy", "--dist", "ct:l1=1,l2=@uniform"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("position"), "{err}");
}

#[test]
fn unknown_verb_and_missing_flags_exit_one() {
    assert_eq!(ctinfo(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ctinfo(&["entropy"]).status.code(), Some(1));
    assert_eq!(ctinfo(&["sample", "--dist", "uniform"]).status.code(), Some(1));
}

#[test]
fn non_convergence_exits_two_and_still_prints_data() {
    // A Pareto tail this heavy leaves an endpoint singularity the quadrature
    // cannot resolve to the requested tolerance.
    let out = ctinfo(&[
        "--abs-tol",
        "1e-13",
        "--rel-tol",
        "1e-13",
        "gini",
        "--dist",
        "pareto:alpha=1.2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["converged"], false);
    assert!((v["gmd"].as_f64().unwrap() - 2.0 * 1.2 / (0.2 * 1.4)).abs() < 1e-3);
}

#[test]
fn help_exits_zero() {
    assert_eq!(ctinfo(&["--help"]).status.code(), Some(0));
}

#[test]
fn csv_always_has_a_header() {
    for args in [
        &["fisher", "--dist", "ct1:l=0.5@uniform", "--format", "csv"][..],
        &[
            "gini",
            "--dist",
            "ct:l1=0.4,l2=0.6@weibull:k=2",
            "--decompose",
            "--format",
            "csv",
        ],
        &["entropy", "--dist", "exponential:beta=2", "--format", "csv"],
    ] {
        let out = ctinfo(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let text = stdout(&out);
        let first = text.lines().next().unwrap();
        assert!(
            first.split(',').all(|c| !c.is_empty() && c.parse::<f64>().is_err()),
            "{first}"
        );
    }
}

#[test]
fn every_verb_emits_single_json_document() {
    for args in [
        &[
            "entropy",
            "--dist",
            "ct:l1=0.3,l2=-0.2@exponential:beta=1",
            "--decompose",
        ][..],
        &["gini", "--dist", "ct:l1=0.3,l2=0.2@uniform", "--ctg"],
        &["fisher", "--dist", "ct:l1=0.4,l2=0.6@uniform"],
        &[
            "divergence",
            "--kind",
            "symchi2",
            "--from",
            "os13:min@uniform",
            "--to",
            "os13:max@uniform",
        ],
        &["sample", "--dist", "uniform", "--n", "5", "--format", "json"],
    ] {
        let out = ctinfo(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        json(&out);
    }
}

#[test]
fn sample_is_seeded_and_honours_env_default() {
    let a = ctinfo(&[
        "sample",
        "--dist",
        "ct:l1=0.4,l2=0.6@uniform",
        "--n",
        "50",
        "--seed",
        "7",
    ]);
    let b = Command::new(env!("CARGO_BIN_EXE_ctinfo"))
        .args(["sample", "--dist", "ct:l1=0.4,l2=0.6@uniform", "--n", "50"])
        .env("CTINFO_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 51);
    let c = ctinfo(&[
        "sample",
        "--dist",
        "ct:l1=0.4,l2=0.6@uniform",
        "--n",
        "50",
        "--seed",
        "8",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn fit_recovers_sampled_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.csv");
    let out = ctinfo(&[
        "sample",
        "--dist",
        "ct:l1=0.4,l2=0.6@uniform",
        "--n",
        "2000",
        "--seed",
        "3",
    ]);
    std::fs::write(&data, &out.stdout).unwrap();
    let fit = ctinfo(&["fit", "--model", "ctu", "--data", data.to_str().unwrap()]);
    assert_eq!(fit.status.code(), Some(0));
    let v = json(&fit);
    assert_eq!(v["converged"], true);
    let l1 = v["estimates"][0]["value"].as_f64().unwrap();
    assert!((l1 - 0.4).abs() < 0.15, "{l1}");
}

#[test]
fn table1_csv_header_is_exact() {
    let out = ctinfo(&[
        "simulate",
        "table1",
        "--mix",
        "0.9,0.05,0.05",
        "--n",
        "150,300",
        "--reps",
        "20",
        "--seed",
        "42",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "mix1,mix2,mix3,n,KL1,KL2,KL3,prop1,prop2,prop3");
    assert_eq!(lines.count(), 2);
}

#[test]
fn table1_is_deterministic_and_resume_matches_fresh_run() {
    let dir = tempfile::tempdir().unwrap();
    let common = [
        "simulate",
        "table1",
        "--mix",
        "0.9,0.05,0.05",
        "--reps",
        "30",
        "--seed",
        "42",
    ];
    let run = |n: &str, out: &str, resume: bool| {
        let mut args = common.to_vec();
        args.extend(["--n", n, "--out", out]);
        if resume {
            args.push("--resume");
        }
        let o = in_dir(dir.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.path().join(out)).unwrap()
    };
    let fresh = run("150,300,500", "fresh.csv", false);
    assert_eq!(fresh, run("150,300,500", "again.csv", false));
    run("150", "partial.csv", false);
    assert_eq!(fresh, run("150,300,500", "partial.csv", true));
}

#[test]
fn ci_study_reports_every_parameter_and_level() {
    let out = ctinfo(&[
        "simulate",
        "ci",
        "--model",
        "ctu",
        "--params",
        "l1=0.4,l2=0.6",
        "--n",
        "150",
        "--reps",
        "10",
        "--level",
        "0.90,0.95",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert!(v["metadata"]["wall_time_s"].as_f64().is_some());
}

#[test]
fn simulate_run_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"study": "kl_selection", "mix": [0.05, 0.05, 0.9], "n_list": [100], "replications": 20, "seed": 1}"#,
    )
    .unwrap();
    let out = ctinfo(&["simulate", "run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("mix1,"));

    std::fs::write(
        &cfg,
        r#"{"study": "kl_selection", "mix": [0.5, 0.5, 0.5], "n_list": [100]}"#,
    )
    .unwrap();
    assert_eq!(
        ctinfo(&["simulate", "run", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn verify_writes_erratum_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = in_dir(dir.path(), &["verify", "--suite", "closed-forms", "--grid", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["all_within_tolerance"], true);
    let text = std::fs::read_to_string(dir.path().join("erratum_report.json")).unwrap();
    let report: Value = serde_json::from_str(&text).unwrap();
    assert!(!report["mismatches"].as_array().unwrap().is_empty());
    assert_eq!(report["internally_consistent"], true);
}
