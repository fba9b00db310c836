use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ssm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssm"))
        .args(args)
        .current_dir(dir)
        .env_remove("SSM_SEED")
        .env_remove("SSM_RC_TOL")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = ssm(dir, args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn file(&self, name: &str) -> PathBuf {
        self.path().join(name)
    }

    fn write(&self, name: &str, contents: &str) {
        fs::write(self.file(name), contents).unwrap();
    }

    fn simulate(&self, n: usize, support: usize, transactions: usize, seed: u64) -> Value {
        ok(
            self.path(),
            &[
                "--seed",
                &seed.to_string(),
                "simulate",
                "--n",
                &n.to_string(),
                "--support",
                &support.to_string(),
                "--transactions",
                &transactions.to_string(),
                "--model-out",
                "model.json",
                "--transactions-out",
                "tx.csv",
            ],
        )
    }
}

#[test]
fn simulate_is_deterministic() {
    let a = Workspace::new();
    let b = Workspace::new();
    let ra = a.simulate(5, 6, 2000, 7);
    let rb = b.simulate(5, 6, 2000, 7);
    assert_eq!(ra, rb);
    for name in ["model.json", "tx.csv"] {
        assert_eq!(fs::read(a.file(name)).unwrap(), fs::read(b.file(name)).unwrap(), "{name}");
    }
    assert_eq!(ra["transactions"], 2000);
    let c = Workspace::new();
    c.simulate(5, 6, 2000, 8);
    assert_ne!(fs::read(a.file("tx.csv")).unwrap(), fs::read(c.file("tx.csv")).unwrap());
}

#[test]
fn simulate_without_transactions_writes_header_only() {
    let w = Workspace::new();
    let r = w.simulate(3, 2, 0, 1);
    assert_eq!(r["transactions"], 0);
    assert_eq!(fs::read_to_string(w.file("tx.csv")).unwrap().trim(), "assortment,choice");
}

#[test]
fn fit_beats_generating_model() {
    let w = Workspace::new();
    let sim = w.simulate(4, 5, 3000, 3);
    let fit = ok(w.path(), &["fit", "--transactions", "tx.csv", "--model-out", "fit.json", "--report-out", "report.json"]);
    assert!(f(&fit["final_log_likelihood"]) >= f(&sim["true_log_likelihood"]) - 1e-6);
    assert_eq!(fit["stop"], "optimal");
    let total: f64 = fit["support"].as_array().unwrap().iter().map(|e| f(&e["weight"])).sum();
    assert!((total - 1.0).abs() < 1e-9);
    let report: Value = serde_json::from_str(&fs::read_to_string(w.file("report.json")).unwrap()).unwrap();
    assert_eq!(report["columns_added"], fit["columns_added"]);
    assert!(w.file("fit.json").exists());
}

#[test]
fn fit_with_milp_pricing_matches_enumeration() {
    let w = Workspace::new();
    w.simulate(4, 4, 1500, 5);
    let brute = ok(w.path(), &["fit", "--transactions", "tx.csv", "--model-out", "a.json"]);
    let milp = ok(w.path(), &["fit", "--transactions", "tx.csv", "--model-out", "b.json", "--solver", "milp"]);
    let (a, b) = (f(&brute["final_log_likelihood"]), f(&milp["final_log_likelihood"]));
    assert!((a - b).abs() <= 1e-3 * a.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn table_identify_round_trip() {
    let w = Workspace::new();
    let sim = w.simulate(4, 6, 10, 11);
    ok(w.path(), &["table", "--model", "model.json", "--out", "table.json"]);
    for strategy in ["outside", "per-item"] {
        let r = ok(w.path(), &["identify", "--table", "table.json", "--strategy", strategy, "--model-out", "rec.json"]);
        assert_eq!(r["consistent"], true);
        assert!(f(&r["reproduction_error"]) <= 1e-8);
        let truth = sim["support"].as_array().unwrap();
        let got = r["support"].as_array().unwrap();
        for e in truth {
            let m = got.iter().find(|g| g["set"] == e["set"]).expect("set recovered");
            assert!((f(&m["weight"]) - f(&e["weight"])).abs() <= 1e-9);
        }
    }
}

#[test]
fn axioms_accept_ssm_and_reject_logit() {
    let w = Workspace::new();
    w.simulate(4, 5, 10, 2);
    ok(w.path(), &["table", "--model", "model.json", "--out", "ssm.json"]);
    let r = ok(w.path(), &["check-axioms", "--table", "ssm.json", "--extended"]);
    assert_eq!(r["consistent"], true);

    ok(w.path(), &["table", "--mnl-weights", "1,2,3", "--out", "mnl.json"]);
    let out = ssm(w.path(), &["check-axioms", "--table", "mnl.json"]);
    assert_eq!(out.status.code(), Some(2));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["consistent"], false);
    let violations = r["violations"].as_array().unwrap();
    assert!(!violations.is_empty());
    assert!(violations.iter().all(|v| f(&v["magnitude"]) > 1e-9 && v["witness"].is_object()));

    let out = ssm(w.path(), &["identify", "--table", "mnl.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn optimize_methods_agree() {
    let w = Workspace::new();
    w.simulate(5, 6, 10, 4);
    w.write("prices.csv", "id,price\n1,4\n2,9\n3,2\n4,7\n5,12\n");
    let run = |method: &str| {
        ok(w.path(), &["optimize", "--model", "model.json", "--prices", "prices.csv", "--method", method])
    };
    let brute = f(&run("brute")["expected_revenue"]);
    let dp = f(&run("dp")["expected_revenue"]);
    let fptas = f(&run("fptas")["expected_revenue"]);
    assert!((brute - dp).abs() <= 1e-9 * brute.max(1.0));
    assert!(fptas >= 0.9 * brute - 1e-12 && fptas <= brute + 1e-9);
}

#[test]
fn evaluate_scores_every_model() {
    let w = Workspace::new();
    w.simulate(4, 5, 4000, 9);
    let r = ok(w.path(), &["evaluate", "--transactions", "tx.csv"]);
    let models = r["models"].as_array().unwrap();
    let names: Vec<&str> = models.iter().map(|m| m["model"].as_str().unwrap()).collect();
    assert_eq!(names, ["ssm", "mnl", "independent"]);
    assert_eq!(f(&r["train_transactions"]) + f(&r["test_transactions"]), 4000.0);
    let ssm_ll = f(&models[0]["train_log_likelihood"]);
    assert!(models[1..].iter().all(|m| f(&m["train_log_likelihood"]) <= ssm_ll + 1e-6));

    ok(w.path(), &["--seed", "1", "simulate", "--n", "4", "--support", "5", "--transactions", "500", "--model-out", "m2.json", "--transactions-out", "test.csv"]);
    let r = ok(w.path(), &["evaluate", "--transactions", "tx.csv", "--test", "test.csv", "--models", "mnl,independent"]);
    assert_eq!(r["test_transactions"], 500);
    assert_eq!(r["models"].as_array().unwrap().len(), 2);
}

#[test]
fn asymmetry_separates_ssm_from_logit() {
    let w = Workspace::new();
    w.simulate(5, 6, 10, 6);
    let sampled = ok(w.path(), &["asymmetry", "--model", "model.json", "--samples", "500"]);
    assert!(f(&sampled["index"]).abs() <= 1e-12);
    let exhaustive = ok(w.path(), &["asymmetry", "--model", "model.json", "--exhaustive"]);
    assert!(f(&exhaustive["index"]).abs() <= 1e-12);
    ok(w.path(), &["table", "--model", "model.json", "--out", "t.json"]);
    let table = ok(w.path(), &["asymmetry", "--table", "t.json", "--exhaustive"]);
    assert!(f(&table["index"]).abs() <= 1e-12);
    let mnl = ok(w.path(), &["asymmetry", "--mnl-weights", "1,2,3", "--exhaustive"]);
    assert!(f(&mnl["index"]) > 0.01);
}

#[test]
fn reduce_vc_decides_cover() {
    let w = Workspace::new();
    // Path 1-2-3-4 has a cover of size 2 and none of size 1.
    w.write("g.txt", "1 2\n2 3\n3 4\n");
    let yes = ok(w.path(), &["reduce-vc", "--graph", "g.txt", "--k", "2", "--solve", "--model-out", "vc.json", "--prices-out", "vc.csv"]);
    assert_eq!(yes["cover_within_k"], true);
    assert_eq!(yes["products"], 5);
    let no = ok(w.path(), &["reduce-vc", "--graph", "g.txt", "--k", "1", "--solve"]);
    assert_eq!(no["cover_within_k"], false);
    let opt = ok(w.path(), &["optimize", "--model", "vc.json", "--prices", "vc.csv", "--method", "brute"]);
    assert!((f(&opt["expected_revenue"]) - f(&yes["optimal_revenue"])).abs() <= 1e-12);
}

#[test]
fn bad_input_exits_one() {
    let w = Workspace::new();
    let missing = ssm(w.path(), &["fit", "--transactions", "missing.csv", "--model-out", "x.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.csv"));

    w.write("bad.csv", "assortment,choice\n1;2,3\n");
    assert_eq!(ssm(w.path(), &["fit", "--transactions", "bad.csv", "--model-out", "x.json"]).status.code(), Some(1));

    w.write("bad.json", "{\"n\": 2, \"support\": [{\"set\": [3], \"weight\": 1.0}]}");
    assert_eq!(ssm(w.path(), &["table", "--model", "bad.json", "--out", "t.json"]).status.code(), Some(1));

    assert_eq!(ssm(w.path(), &["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(ssm(w.path(), &["table", "--out", "t.json"]).status.code(), Some(1));
}

#[test]
fn tolerances_read_from_environment() {
    let w = Workspace::new();
    w.simulate(3, 3, 300, 1);
    let out = Command::new(env!("CARGO_BIN_EXE_ssm"))
        .args(["fit", "--transactions", "tx.csv", "--model-out", "x.json"])
        .current_dir(w.path())
        .env("SSM_RC_TOL", "-1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rc-tol"));

    let out = Command::new(env!("CARGO_BIN_EXE_ssm"))
        .args(["fit", "--transactions", "tx.csv", "--model-out", "x.json"])
        .current_dir(w.path())
        .env("SSM_MAX_COLUMNS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["columns_added"], 0);
}

#[test]
fn help_documents_every_flag() {
    let w = Workspace::new();
    let top = ssm(w.path(), &["--help"]);
    assert_eq!(top.status.code(), Some(0));
    let text = String::from_utf8_lossy(&top.stdout);
    for verb in ["simulate", "fit", "table", "identify", "check-axioms", "optimize", "evaluate", "asymmetry", "reduce-vc"] {
        assert!(text.contains(verb), "{verb}");
        let help = ssm(w.path(), &[verb, "--help"]);
        assert_eq!(help.status.code(), Some(0));
        let body = String::from_utf8_lossy(&help.stdout).to_string();
        // A description follows the flag on its own line or after a gap.
        let lines: Vec<&str> = body.lines().map(str::trim).collect();
        let flags = lines.iter().enumerate().filter(|(_, l)| l.starts_with("--") || (l.starts_with('-') && l.get(2..3) == Some(",")));
        let mut count = 0;
        for (i, line) in flags {
            count += 1;
            let inline = line.split("  ").filter(|p| !p.trim().is_empty()).count() >= 2;
            let next = lines.get(i + 1).copied().unwrap_or("");
            let below = !next.is_empty() && !next.starts_with('-');
            assert!(inline || below, "{verb}: undocumented `{line}`");
        }
        assert!(count >= 3, "{verb}");
    }
}

#[test]
fn output_uses_twelve_significant_digits() {
    let w = Workspace::new();
    let sim = w.simulate(4, 5, 1000, 12);
    for e in sim["support"].as_array().unwrap() {
        let text = e["weight"].to_string();
        let digits = text.split(['e', 'E']).next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect::<String>();
        assert!(digits.trim_start_matches('0').len() <= 12, "{text}");
    }
}
