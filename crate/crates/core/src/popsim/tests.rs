use super::*;
use crate::optimize::{n_star_asymptotic, MarketParams, PowerLawFee};
use crate::qtheory::{TurnoverWealthModel, TwRegime};
use crate::regress::{ols, LawConfig};
use crate::tailfit::{ks_statistic, Model};
use crate::trader_data::Category;
use crate::Exec;

pub(crate) fn market() -> MarketParams {
    MarketParams {
        expected_market_return: 0.08,
        market_variance: 0.04,
        risk_free: 0.02,
        mean_beta: 1.0,
        mean_idio_variance: 0.09,
    }
}

fn fee(c: f64, delta: f64) -> PowerLawFee {
    PowerLawFee { c, delta, f_max: None }
}

pub(crate) fn single(n: usize, delta: f64, c: f64) -> PopulationConfig {
    PopulationConfig {
        n_traders: n,
        seed: 11,
        pv_law: PvLaw { mu: 13.94, sigma: 2.87 },
        market: market(),
        fees: vec![fee(c, delta)],
        theta: None,
        kappa_noise: 0.0,
        x: 1.0,
        category: Category::Individual,
        trade_date: "2024-01-03".parse().unwrap(),
    }
}

/// Lower regime with `delta = 0.82`, upper with `delta = 0.04`, joined
/// continuously at `theta = 14`.
pub(crate) fn two_regime(n: usize) -> PopulationConfig {
    let mut cfg = single(n, 0.82, 0.02);
    cfg.theta = Some(14.0);
    cfg.fees.push(fee(1.0, 0.04));
    cfg.fees[1].c = cfg.continuous_upper_cost(0.04).unwrap();
    cfg
}

#[test]
fn degenerate_population_is_identical() {
    let mut cfg = single(50, 0.63, 0.15);
    cfg.pv_law.sigma = 0.0;
    let pop = generate_population(&cfg, Exec::Parallel).unwrap();
    let want = n_star_asymptotic(1.0, 13.94f64.exp(), &cfg.market, &cfg.fees[0]).unwrap();
    for t in &pop.traders {
        assert_eq!(t.pv, 13.94f64.exp());
        assert_eq!(t.n_raw, want);
        assert_eq!(t.n_assets, want.round() as usize);
        assert_eq!(t.turnover, pop.traders[0].turnover);
    }
}

#[test]
fn wealth_draws_follow_the_log_normal() {
    let pop = generate_population(&single(10_000, 0.63, 0.15), Exec::Parallel).unwrap();
    let pv: Vec<f64> = pop.traders.iter().map(|t| t.pv).collect();
    let d = ks_statistic(&pv, &Model::Lognormal { mu: 13.94, sigma: 2.87 });
    assert!(d < 1.358 / 100.0, "ks {d}");
}

#[test]
fn turnover_is_conserved_and_equal() {
    let mut cfg = single(300, 0.63, 0.15);
    cfg.x = 0.7;
    cfg.kappa_noise = 0.5;
    let pop = generate_population(&cfg, Exec::Parallel).unwrap();
    let txs = pop.transactions();
    let mut k = 0;
    for t in &pop.traders {
        let mine = &txs[k..k + t.n_assets];
        k += t.n_assets;
        let total: f64 = mine.iter().map(|x| x.turnover).sum();
        assert!((total - 0.7 * t.pv).abs() <= 1e-9 * t.pv, "{total} vs {}", 0.7 * t.pv);
        assert!(mine.iter().all(|x| x.turnover == mine[0].turnover && x.trader_id == t.trader_id));
        let mut ids: Vec<&str> = mine.iter().map(|x| x.asset_id.as_str()).collect();
        ids.dedup();
        assert_eq!(ids.len(), t.n_assets);
    }
    assert_eq!(k, txs.len());
}

#[test]
fn csv_output_is_reproducible_across_modes() {
    let mut cfg = single(500, 0.63, 0.15);
    cfg.kappa_noise = 0.3;
    let bytes = |cfg: &PopulationConfig, exec| {
        let pop = generate_population(cfg, exec).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        pop.write_transactions_csv(&mut a).unwrap();
        pop.write_snapshots_csv(&mut b).unwrap();
        (a, b)
    };
    let first = bytes(&cfg, Exec::Parallel);
    assert_eq!(first, bytes(&cfg, Exec::Parallel));
    assert_eq!(first, bytes(&cfg, Exec::Sequential));
    cfg.seed += 1;
    assert_ne!(first.0, bytes(&cfg, Exec::Parallel).0);
}

#[test]
fn small_optimal_n_is_clamped_and_flagged() {
    let pop = generate_population(&single(2000, 0.63, 50.0), Exec::Parallel).unwrap();
    let clamped: Vec<_> = pop.traders.iter().filter(|t| t.clamped).collect();
    assert!(!clamped.is_empty());
    assert!(clamped.iter().all(|t| t.n_assets == 1 && t.n_raw < 1.0));
    assert!(pop.traders.iter().filter(|t| !t.clamped).all(|t| t.n_raw >= 1.0));
}

#[test]
fn implied_model_matches_the_emitted_turnover() {
    let mut cfg = two_regime(200);
    cfg.x = 0.8;
    let model = cfg.implied_tw_model().unwrap();
    let pop = generate_population(&cfg, Exec::Sequential).unwrap();
    for t in &pop.traders {
        let u = t.pv.ln();
        let r = model.regime_at(u);
        // Exact before rounding N.
        let ln_t = (cfg.x * t.pv / t.n_raw).ln();
        assert!((ln_t - (r.a + r.beta * u)).abs() < 1e-9);
    }
}

#[test]
fn continuous_upper_cost_joins_the_regimes() {
    let cfg = two_regime(10);
    let pv = 14f64.exp();
    let lo = n_star_asymptotic(1.0, pv, &cfg.market, &cfg.fees[0]).unwrap();
    let hi = n_star_asymptotic(1.0, pv, &cfg.market, &cfg.fees[1]).unwrap();
    assert!((lo / hi - 1.0).abs() < 1e-10, "{lo} vs {hi}");
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = single(10, 0.63, 0.15);
    cfg.n_traders = 0;
    assert!(generate_population(&cfg, Exec::Parallel).is_err());
    let mut cfg = single(10, 1.0, 0.15);
    assert!(generate_population(&cfg, Exec::Parallel).is_err());
    cfg.fees[0].delta = 0.5;
    cfg.theta = Some(14.0);
    assert!(generate_population(&cfg, Exec::Parallel).is_err());
    let cfg = single(100, 0.63, 0.15);
    assert!(run_validation(&cfg, &LawConfig::default(), Exec::Parallel).is_err());
}

#[test]
fn brennan_population_has_half_exponent() {
    let pop = generate_population(&single(2000, 0.0, 2.0), Exec::Parallel).unwrap();
    let (x, y): (Vec<f64>, Vec<f64>) =
        pop.traders.iter().filter(|t| !t.clamped).map(|t| (t.pv.ln(), (t.n_assets as f64).ln())).unzip();
    let f = ols(&x, &y, false).unwrap();
    assert!((f.slope - 0.5).abs() < 0.005, "alpha {}", f.slope);
}

#[test]
fn closed_loop_single_regime() {
    let cfg = single(4000, 0.63, 0.15);
    let rep = run_validation(&cfg, &LawConfig::default(), Exec::Parallel).unwrap();
    println!("{}", rep.to_text());
    assert!(rep.thresholds.single_regime);
    let r = &rep.regimes[0];
    assert!((r.alpha_hat.unwrap().value - 0.27).abs() < 0.01);
    assert!((r.beta_hat.unwrap().value - 0.73).abs() < 0.01);
    assert!((rep.chi_hat.value - 1.0).abs() < 0.02);
    assert!(rep.pass);
}

#[test]
fn closed_loop_two_regimes() {
    let mut cfg = two_regime(6000);
    cfg.kappa_noise = 0.3;
    let rep = run_validation(&cfg, &LawConfig::default(), Exec::Parallel).unwrap();
    println!("{}", rep.to_text());
    let b1 = rep.regimes[0].beta_hat.unwrap();
    let b2 = rep.regimes[1].beta_hat.unwrap();
    // 1/(2 - 0.82) and 1/(2 - 0.04).
    assert!((b1.value - 0.85).abs() < 0.02 && b1.ci.contains(1.0 / 1.18), "{b1:?}");
    assert!((b2.value - 0.51).abs() < 0.01 && b2.ci.contains(1.0 / 1.96), "{b2:?}");
    assert!(rep.pass);
}

#[test]
fn q_distribution_matches_prediction() {
    // Empirical individual-trader exponents and residual spreads, joined at 14.
    let mut cfg = single(10_000, 2.0 - 1.0 / 0.84, 0.02);
    cfg.theta = Some(14.0);
    cfg.kappa_noise = 0.71;
    cfg.fees.push(fee(1.0, 2.0 - 1.0 / 0.54));
    cfg.fees[1].c = cfg.continuous_upper_cost(cfg.fees[1].delta).unwrap();
    let pop = generate_population(&cfg, Exec::Parallel).unwrap();
    let ok = validate_q(&pop, None, Exec::Parallel).unwrap();
    assert!(ok.ks < 0.02, "ks {}", ok.ks);
    assert!(ok.pass, "ks {} vs {}", ok.ks, ok.critical_5pct);

    // Negative control: the upper-regime slope fed to the predictor is off.
    let m = cfg.implied_tw_model().unwrap();
    let wrong = TurnoverWealthModel::bilinear(
        m.regimes[0],
        TwRegime { beta: m.regimes[1].beta + 0.1, a: m.regimes[1].a - 1.4, ..m.regimes[1] },
        14.0,
    )
    .unwrap();
    let bad = validate_q(&pop, Some(&wrong), Exec::Parallel).unwrap();
    assert!(!bad.pass, "ks {}", bad.ks);
}

#[test]
fn report_serializes() {
    let rep = run_validation(&single(2000, 0.63, 0.15), &LawConfig::default(), Exec::Parallel).unwrap();
    let json = serde_json::to_string(&rep).unwrap();
    let back: ValidationReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.regimes.len(), 1);
    assert!(rep.to_text().contains("overall: PASS"));
}
