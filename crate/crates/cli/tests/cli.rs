use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use costfolio::tailfit::{sample, Model};
use serde_json::Value;
use sha2::{Digest, Sha256};
use statrs::function::erf::erfc;

const BIN: &str = env!("CARGO_BIN_EXE_costfolio");

const MARKET: &str = r#"{"expected_market_return":0.08,"market_variance":0.04,"risk_free":0.02,
"mean_beta":1.0,"mean_idio_variance":0.09}"#;

fn population_toml(n: usize, seed: u64) -> String {
    format!(
        r#"n_traders = {n}
seed = {seed}
kappa_noise = 0.2

[pv_law]
mu = 13.94
sigma = 2.87

[market]
expected_market_return = 0.08
market_variance = 0.04
risk_free = 0.02
mean_beta = 1.0
mean_idio_variance = 0.09

[[fees]]
C = 0.15
delta = 0.63
"#
    )
}

fn run(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.current_dir(dir).args(args).env_remove("COSTFOLIO_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args, &[]);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON object")
}

fn simulate(dir: &Path, n: usize, seed: u64) -> PathBuf {
    fs::write(dir.join("pop.toml"), population_toml(n, seed)).unwrap();
    ok(dir, &["simulate", "--config", "pop.toml", "--out", "sim"]);
    dir.join("sim")
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn fit_dist_recovers_lognormal_wealth() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), 3000, 1);
    ok(
        tmp.path(),
        &[
            "fit-dist",
            "--input",
            "sim/snapshots.csv",
            "--column",
            "account_value",
            "--family",
            "lognormal",
            "--bootstrap",
            "200",
            "--out",
            "fit",
        ],
    );
    let fit = json(tmp.path().join("fit/fit.json"));
    let p = &fit["report"]["params"];
    let (mu, sigma) = (p["mu"].as_f64().unwrap(), p["sigma"].as_f64().unwrap());
    assert!(fit["report"]["ci"]["mu"].is_object());
    assert!((mu - 13.94).abs() < 0.2 && (sigma - 2.87).abs() < 0.15, "mu {mu} sigma {sigma}");
    let curve = fs::read_to_string(tmp.path().join("fit/survival.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("x,empirical_sf,model_sf"));
    assert_eq!(curve.lines().count(), 101);
}

#[test]
fn fit_dist_zm_cutoff_recovers_gamma() {
    let tmp = tempfile::tempdir().unwrap();
    let data = sample(&Model::ZipfMandelbrot { c: 2.0e4, gamma: 1.97, beta_cut: 0.98e-6 }, 20_000, 8);
    let csv: String =
        std::iter::once("pv".to_string()).chain(data.iter().map(|v| v.to_string())).collect::<Vec<_>>().join("\n");
    fs::write(tmp.path().join("pv.csv"), csv).unwrap();
    ok(
        tmp.path(),
        &[
            "fit-dist",
            "--input",
            "pv.csv",
            "--column",
            "pv",
            "--family",
            "zm-cutoff",
            "--bootstrap",
            "200",
            "--out",
            "f",
        ],
    );
    let fit = json(tmp.path().join("f/fit.json"));
    let gamma = fit["report"]["params"]["gamma"].as_f64().unwrap();
    assert!((gamma - 1.97).abs() < 0.1, "gamma {gamma}");
    let ci = &fit["report"]["ci"]["gamma"];
    assert!(ci["lower"].as_f64().unwrap() < gamma && gamma < ci["upper"].as_f64().unwrap());
}

#[test]
fn missing_input_is_exit_2_with_no_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        tmp.path(),
        &["fit-dist", "--input", "nope.csv", "--column", "v", "--family", "pareto", "--out", "fit"],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["exit_code"], 2);
    assert_eq!(err["error"]["kind"], "io");
    assert!(!tmp.path().join("fit").exists());
}

#[test]
fn malformed_csv_reports_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("v.csv"), "v\n1.5\n2.5\nabc\n").unwrap();
    let out =
        run(tmp.path(), &["fit-dist", "--input", "v.csv", "--column", "v", "--family", "pareto", "--out", "f"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr_json(&out)["error"]["message"].as_str().unwrap().to_string();
    assert!(msg.contains("line 4"), "{msg}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("q.toml"), "out = \"q\"\nparams = \"p.json\"\npoints = 10\nbogus = 1\n").unwrap();
    let out = run(tmp.path(), &["q", "--config", "q.toml"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "config");
}

#[test]
fn turnover_law_slope_and_category_filter() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), 3000, 2);
    let args = ["turnover-law", "--transactions", "sim/transactions.csv", "--snapshots", "sim/snapshots.csv"];
    ok(tmp.path(), &[&args[..], &["--out", "law"]].concat());
    let law = json(tmp.path().join("law/turnover_law.json"));
    assert_eq!(law["law"]["single_regime"], true);
    assert_eq!(law["traders_by_category"]["individual"], 3000);
    assert_eq!(law["n_traders"], 3000);
    let slope = law["law"]["single"]["slope"].as_f64().unwrap();
    assert!((slope - 1.0 / (2.0 - 0.63)).abs() < 0.02, "slope {slope}");
    assert!(tmp.path().join("law/loess.csv").exists());

    // The two reports chain into `q`.
    let fit = ["fit-dist", "--input", "sim/snapshots.csv", "--column", "account_value", "--family", "lognormal"];
    ok(tmp.path(), &[&fit[..], &["--bootstrap", "0", "--out", "fit"]].concat());
    ok(tmp.path(), &["q", "--from-fits", "law/turnover_law.json", "fit/fit.json", "--out", "q"]);
    let q = json(tmp.path().join("q/q.json"));
    assert_eq!(q["params"]["turnover_wealth"]["regimes"][0]["beta"].as_f64(), Some(slope));
    assert!(q["closed_form"].is_object());

    let out = run(tmp.path(), &[&args[..], &["--category", "company", "--out", "law2"]].concat(), &[]);
    assert!(!out.status.success());
    assert!(!tmp.path().join("law2").exists());
    let out = run(tmp.path(), &[&args[..], &["--category", "retail", "--out", "law3"]].concat(), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn turnover_law_two_regimes() {
    let tmp = tempfile::tempdir().unwrap();
    let toml = population_toml(3000, 12).replace(
        "[[fees]]\nC = 0.15\ndelta = 0.63\n",
        "[[fees]]\nC = 0.02\ndelta = 0.82\n\n[[fees]]\nC = 5.7188\ndelta = 0.04\n",
    );
    fs::write(tmp.path().join("pop.toml"), format!("theta = 14.0\n{toml}")).unwrap();
    ok(tmp.path(), &["simulate", "--config", "pop.toml", "--out", "sim"]);
    ok(
        tmp.path(),
        &["turnover-law", "--transactions", "sim/transactions.csv", "--snapshots", "sim/snapshots.csv", "--out", "law"],
    );
    let law = json(tmp.path().join("law/turnover_law.json"));
    assert_eq!(law["law"]["single_regime"], false);
    let seg = &law["law"]["segmented"];
    for (side, target) in [("lower", 1.0 / (2.0 - 0.82)), ("upper", 1.0 / (2.0 - 0.04))] {
        let slope = seg[side]["slope"].as_f64().unwrap();
        assert!((slope - target).abs() < 0.03, "{side} slope {slope} vs {target}");
    }
}

fn q_params(dir: &Path, beta: f64) {
    let p = format!(
        r#"{{"turnover_wealth":{{"regimes":[{{"a":-0.5,"beta":{beta},"xi":0.4}}]}},
"pv":{{"family":"lognormal","mu":13.94,"sigma":2.87}}}}"#
    );
    fs::write(dir.join("p.json"), p).unwrap();
}

#[test]
fn q_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    q_params(a.path(), 0.73);
    q_params(b.path(), 0.73);
    ok(a.path(), &["q", "--params", "p.json", "--out", "q"]);
    ok(b.path(), &["q", "--params", "p.json", "--out", "q", "--threads", "3"]);
    assert!(dir_bytes(&a.path().join("q")) == dir_bytes(&b.path().join("q")));
    let q = json(a.path().join("q/q.json"));
    assert!(q["closed_form"].is_object());
    assert!(q["moments"]["1"].as_f64().unwrap() > 0.0);
}

#[test]
fn q_with_unit_beta_is_lognormal_in_the_noise() {
    // With beta = 1 the wealth drops out: ln Q = a + xi z.
    let tmp = tempfile::tempdir().unwrap();
    q_params(tmp.path(), 1.0);
    ok(tmp.path(), &["q", "--params", "p.json", "--out", "q", "--q-min", "0.05", "--q-max", "5", "--points", "40"]);
    let text = fs::read_to_string(tmp.path().join("q/q_cdf.csv")).unwrap();
    let mut n = 0;
    for line in text.lines().skip(1) {
        let (q, f) = line.split_once(',').unwrap();
        let (q, f): (f64, f64) = (q.parse().unwrap(), f.parse().unwrap());
        let z = (q.ln() + 0.5) / 0.4;
        let expected = 0.5 * erfc(-z / std::f64::consts::SQRT_2);
        assert!((f - expected).abs() < 1e-6, "q {q}: {f} vs {expected}");
        n += 1;
    }
    assert_eq!(n, 40);
}

#[test]
fn optimize_explicit_fee_and_frictionless_limit() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("m.json"), MARKET).unwrap();
    let base = ["optimize", "--market", "m.json", "--pv", "1e6", "--x", "1"];
    ok(tmp.path(), &[&base[..], &["--fee-c", "0.15", "--fee-delta", "0.63", "--out", "o"]].concat());
    let a = json(tmp.path().join("o/allocation.json"));
    let n = a["allocation"]["n_star"].as_f64().unwrap();
    // Asymptotic N* = A (x P_v)^alpha; the finite-N risk ratio is smaller
    // than its limit, which pulls the exact optimum a few percent lower.
    let asymptotic = (0.128_424_780_9 + (1.0 - 0.63) / (2.0 - 0.63) * 1e6f64.ln()).exp();
    assert!(n < asymptotic && n > 0.9 * asymptotic, "n {n} vs {asymptotic}");

    let out = run(tmp.path(), &[&base[..], &["--fee-c", "0", "--fee-delta", "0.63", "--out", "o0"]].concat(), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"]["kind"], "unsupported");

    let out = run(tmp.path(), &[&base[..], &["--fee-c", "0.15", "--out", "o1"]].concat(), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn optimize_frictionless_matches_mean_variance() {
    // Without fees and with N fixed, x* = lambda/2 beta(E - r) / (beta^2 V_M + V_eps/N).
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("m.json"), MARKET).unwrap();
    let args = ["optimize", "--market", "m.json", "--pv", "5e4", "--fee-c", "0", "--fee-delta", "0.5"];
    ok(tmp.path(), &[&args[..], &["--n", "10", "--lambda", "0.5", "--out", "o"]].concat());
    let x = json(tmp.path().join("o/allocation.json"))["allocation"]["x_star"].as_f64().unwrap();
    let expected = 0.25 * 0.06 / (0.04 + 0.09 / 10.0);
    assert!((x - expected).abs() < 1e-9, "x {x} vs {expected}");
}

#[test]
fn optimize_flat_fee_gives_square_root_diversification() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("m.json"), MARKET).unwrap();
    let mut pts = Vec::new();
    for (i, pv) in ["1e5", "1e6", "1e7", "1e8"].iter().enumerate() {
        let out = format!("o{i}");
        let args = ["optimize", "--market", "m.json", "--fee-c", "9", "--fee-delta", "0", "--x", "1", "--pv", pv];
        ok(tmp.path(), &[&args[..], &["--out", &out]].concat());
        let n = json(tmp.path().join(&out).join("allocation.json"))["allocation"]["n_star"].as_f64().unwrap();
        pts.push((pv.parse::<f64>().unwrap().ln(), n.ln()));
    }
    let slope = (pts[3].1 - pts[1].1) / (pts[3].0 - pts[1].0);
    assert!((slope - 0.5).abs() < 0.02, "slope {slope}");
}

#[test]
fn simulate_is_identical_across_thread_counts() {
    let runs: Vec<_> = ["1", "4"]
        .into_iter()
        .map(|threads| {
            let tmp = tempfile::tempdir().unwrap();
            fs::write(tmp.path().join("pop.toml"), population_toml(2000, 5)).unwrap();
            let o =
                run(tmp.path(), &["simulate", "--config", "pop.toml", "--out", "s"], &[("COSTFOLIO_THREADS", threads)]);
            assert!(o.status.success());
            dir_bytes(&tmp.path().join("s"))
        })
        .collect();
    assert_eq!(runs[0].len(), 5);
    for (name, bytes) in &runs[0] {
        assert!(bytes == &runs[1][name], "{name} differs");
    }
}

#[test]
fn flags_override_config_values() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("pop.toml"), population_toml(2000, 5)).unwrap();
    ok(tmp.path(), &["simulate", "--config", "pop.toml", "--out", "s", "--seed", "77", "--n-traders", "2100"]);
    let m = json(tmp.path().join("s/manifest.json"));
    assert_eq!(m["seed"], 77);
    assert_eq!(m["config"]["n_traders"], 2100);
    let traders = fs::read_to_string(tmp.path().join("s/traders.csv")).unwrap();
    assert_eq!(traders.lines().count(), 2101);
}

#[test]
fn validate_recovers_the_exponents() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("pop.toml"), population_toml(4000, 3)).unwrap();
    ok(tmp.path(), &["validate", "--config", "pop.toml", "--out", "v"]);
    let v = json(tmp.path().join("v/validation.json"));
    assert_eq!(v["validation"]["pass"], true);
    let r = &v["validation"]["regimes"][0];
    let beta = r["beta_hat"]["value"].as_f64().unwrap();
    let alpha = r["alpha_hat"]["value"].as_f64().unwrap();
    assert!((beta - 0.7299).abs() < 0.01, "beta {beta}");
    assert!((alpha - 0.2701).abs() < 0.01, "alpha {alpha}");
    assert_eq!(v["q"]["pass"], true);
    let text = fs::read_to_string(tmp.path().join("v/validation.txt")).unwrap();
    assert!(text.contains("overall: PASS"));
}

#[test]
fn validate_fails_with_exit_4_on_a_bad_fit() {
    // Noise this large pushes many traders below one asset; dropping the
    // clamped ones truncates the noise and biases both exponents.
    let tmp = tempfile::tempdir().unwrap();
    let toml = population_toml(2000, 4).replace("kappa_noise = 0.2", "kappa_noise = 3.0");
    fs::write(tmp.path().join("pop.toml"), toml).unwrap();
    let out = run(tmp.path(), &["validate", "--config", "pop.toml", "--out", "v"], &[]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_json(&out)["error"]["kind"], "validation_failed");
    let text = fs::read_to_string(tmp.path().join("v/validation.txt")).unwrap();
    assert!(text.contains("overall: FAIL"));
}

#[test]
fn manifest_hashes_match_files() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = simulate(tmp.path(), 2000, 6);
    let m = json(sim.join("manifest.json"));
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["tool"], "costfolio");
    let inputs = m["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 1);
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 4);
    for f in outputs {
        let bytes = fs::read(sim.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
    let cfg = fs::read(tmp.path().join("pop.toml")).unwrap();
    assert_eq!(inputs[0]["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&cfg)));
}
