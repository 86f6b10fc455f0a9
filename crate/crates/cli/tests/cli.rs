use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mvops(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvops"))
        .args(args)
        .env_remove("MVOPS_TOL_RANK")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("report is JSON")
}

fn export_disk(dir: &Path) {
    let out = mvops(&["family", "disk", "--mu", "0", "--N", "5", "--export", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn disk_family_passes() {
    let out = mvops(&["family", "disk", "--mu", "0", "--N", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("matches paper: orthogonal"));
    assert!(text.contains("overall: PASS"));
}

#[test]
fn chebyshev_negatives_fail_as_predicted() {
    for (kind, rho) in [("1", "0.5"), ("4", "-1")] {
        let out = mvops(&["family", "cheb-koornwinder", "--kind", kind, "--rho", rho, "--N", "5"]);
        assert_eq!(out.status.code(), Some(1));
        let text = stdout(&out);
        assert!(text.contains("matches paper: not orthogonal"), "{text}");
        assert!(text.contains("expected failure"));
    }
    let out = mvops(&["family", "cheb-koornwinder:kind=2,rho=-2", "--N", "4"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn counterexample_ranks_drop_by_one() {
    let out = mvops(&["counterexample", "--n", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for n in 2..=8 {
        let line = text
            .lines()
            .find(|l| l.contains(&format!("rank C̃_({n},1)")))
            .unwrap_or_else(|| panic!("no line for n={n}"));
        assert!(line.starts_with("[PASS]"));
        assert!(line.contains(&format!("rank {}, expected n−1 = {}", n - 1, n - 1)));
    }
}

#[test]
fn json_reports_are_deterministic() {
    let args = ["--json", "family", "simplex", "--k", "0.5,0.5,0.5", "--j", "1", "--N", "4"];
    let (a, b) = (mvops(&args), mvops(&args));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["pass"], Value::Bool(true));
    assert!(v.get("elapsed_ms").is_none());
    let records = v["records"].as_array().unwrap();
    assert!(records.iter().all(|r| r["pass"] == Value::Bool(true)));
    let timed = json(&mvops(&["--json", "--timing", "counterexample", "--n", "3"]));
    assert!(timed["elapsed_ms"].is_number());
}

#[test]
fn theorem_checks_on_exported_files() {
    let dir = tempfile::tempdir().unwrap();
    export_disk(dir.path());
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    let out = mvops(&["check", "--theorem", "4", "--ttr", &p("ttr_p.json"), "--relation", &p("relation.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let ms: Vec<String> = (1..=5).map(|n| p(&format!("m_{n}.txt"))).collect();
    let ttr_q = p("ttr_q.json");
    let mut args = vec!["check", "--theorem", "3", "--ttr", &ttr_q, "--m"];
    args.extend(ms.iter().map(String::as_str));
    let out = mvops(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    // M ≡ 0: Q = P, nothing to check beyond P's own data
    let zeros: Vec<String> = (1..=5)
        .map(|n| {
            let path = p(&format!("zero_{n}.txt"));
            let rows = (n + 1).to_string();
            let text = format!("{rows} {n}\n") + &format!("{}\n", vec!["0"; n].join(" ")).repeat(n + 1);
            std::fs::write(&path, text).unwrap();
            path
        })
        .collect();
    let ttr_p = p("ttr_p.json");
    let mut args = vec!["check", "--theorem", "3", "--ttr", &ttr_p, "--m"];
    args.extend(zeros.iter().map(String::as_str));
    let out = mvops(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn perturbed_data_is_rejected_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    export_disk(dir.path());
    let ttr = dir.path().join("ttr_p.json");
    let rel = dir.path().join("relation.json");
    let args = |seed: &'static str| {
        mvops(&[
            "--json", "--seed", seed, "check", "--theorem", "4", "--ttr", ttr.to_str().unwrap(),
            "--relation", rel.to_str().unwrap(), "--perturb", "1e-3",
        ])
    };
    let (a, b, c) = (args("5"), args("5"), args("6"));
    assert_eq!(a.status.code(), Some(1));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn generate_and_relate_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    export_disk(dir.path());
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    let out = mvops(&["generate", "--ttr", &p("ttr_p.json"), "--out", &p("gen.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let gen: Value = serde_json::from_str(&std::fs::read_to_string(p("gen.json")).unwrap()).unwrap();
    let orig: Value = serde_json::from_str(&std::fs::read_to_string(p("p.json")).unwrap()).unwrap();
    assert_eq!(gen["max_degree"], orig["max_degree"]);
    assert_eq!(gen["monic"], Value::Bool(true));

    let out = mvops(&["relate", "--p", &p("gen.json"), "--q", &p("q.json"), "--out", &p("rel.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("rank pattern of M_n: full"));
    let out = mvops(&["check", "--theorem", "4", "--ttr", &p("ttr_p.json"), "--relation", &p("rel.json")]);
    assert_eq!(out.status.code(), Some(0));

    // P in terms of Q is not a two-term relation
    let out = mvops(&["relate", "--p", &p("q.json"), "--q", &p("p.json")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(mvops(&["family", "nope", "--N", "3"]).status.code(), Some(2));
    assert_eq!(mvops(&["family", "disk"]).status.code(), Some(2), "missing mu");
    assert_eq!(mvops(&["check", "--theorem", "5", "--ttr", "x", "--m", "y"]).status.code(), Some(2));
    assert_eq!(mvops(&["bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "2 2\n1 x\n0 1\n").unwrap();
    let ttr = dir.path().join("t.json");
    std::fs::write(&ttr, "{ not json").unwrap();
    let out = mvops(&["check", "--theorem", "4", "--ttr", ttr.to_str().unwrap(), "--m", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    export_disk(dir.path());
    let good = dir.path().join("ttr_p.json");
    let out = mvops(&["check", "--theorem", "4", "--ttr", good.to_str().unwrap(), "--m", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rank_tolerance_flag_beats_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_mvops"));
        c.env_remove("MVOPS_TOL_RANK");
        if let Some(v) = env {
            c.env("MVOPS_TOL_RANK", v);
        }
        c.args(["--json", "counterexample", "--n", "3"]);
        if let Some(v) = flag {
            c.args(["--tol-rank", v]);
        }
        let v = json(&c.output().unwrap());
        v["tolerances"]["rank"].as_f64().unwrap()
    };
    assert_eq!(run(None, None), 1e-9);
    assert_eq!(run(Some("1e-6"), None), 1e-6);
    assert_eq!(run(Some("1e-6"), Some("1e-7")), 1e-7);
}

#[test]
fn quasi_definiteness_failure_is_reported_in_band() {
    // at alpha = 0, (a_1 - 1)(1 + 1/2) + 1 = 0 removes q_3, so H_2 is singular
    let out = mvops(&["family", "krall-laguerre", "--alpha", "0", "--a1", "0.3333333333333333", "--N", "4"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(1), "{text}");
    assert!(text.contains("not quasi-definite at degree 2"), "{text}");
}
