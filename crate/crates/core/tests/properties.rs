//! Property-based checks of the invariants that hold for any valid input.

use chrono::{TimeZone, Utc};
use costfolio::optimize::{delta_eff, exponents, objective, solve_x_star, MarketParams, PowerLawFee};
use costfolio::popsim::{generate_population, PopulationConfig, PvLaw};
use costfolio::qtheory::{closed_form_q, q_cdf, TurnoverWealthModel, TwRegime};
use costfolio::regress::ols;
use costfolio::tailfit::{ks_statistic, sample, Model};
use costfolio::trader_data::{parse_transactions, write_transactions, AssetClass, Category, Side, Transaction};
use costfolio::Exec;
use proptest::prelude::*;

fn market() -> impl Strategy<Value = MarketParams> {
    (0.05..0.15f64, 0.01..0.06f64, 0.0..0.04f64, 0.7..1.3f64, 0.02..0.2f64).prop_map(|(e, vm, r, b, ve)| MarketParams {
        expected_market_return: e,
        market_variance: vm,
        risk_free: r,
        mean_beta: b,
        mean_idio_variance: ve,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn exponents_partition_unity(delta in 0.0..=1.0f64) {
        let e = exponents(delta).unwrap();
        prop_assert!((e.alpha + e.beta - 1.0).abs() < 1e-15);
        prop_assert!((0.5..=1.0).contains(&e.beta));
        prop_assert!((delta_eff(e.beta).unwrap() - delta).abs() < 1e-14);
    }

    #[test]
    fn fee_is_monotone_and_capped(c in 0.0..5.0f64, delta in 0.0..=1.0f64, a in 0.0..1e6f64, b in 0.0..1e6f64, cap in 1.0..500.0f64) {
        let f = PowerLawFee { c, delta, f_max: Some(cap) };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(f.fee(lo) <= f.fee(hi));
        prop_assert!(f.fee(hi) <= cap);
        prop_assert!(f.fee(lo) >= 0.0);
    }

    #[test]
    fn cash_only_objective_is_the_risk_free_rate(m in market(), c in 0.0..2.0f64, delta in 0.0..1.0f64, lambda in 0.1..5.0f64, n in 1.0..100.0f64) {
        let f = PowerLawFee { c, delta, f_max: None };
        prop_assert_eq!(objective(0.0, n, lambda, 1e5, &m, &f), lambda * m.risk_free);
    }

    #[test]
    fn optimal_fraction_beats_neighbours(m in market(), c in 0.0..1.0f64, delta in 0.0..1.0f64, lambda in 0.1..3.0f64, n in 1.0..100.0f64, lpv in 3.0..7.0f64) {
        let f = PowerLawFee { c, delta, f_max: None };
        let pv = 10f64.powf(lpv);
        let s = solve_x_star(n, lambda, pv, &m, &f).unwrap();
        prop_assert!((0.0..=1.0).contains(&s.x));
        for x in [s.x - 1e-4, s.x + 1e-4] {
            if (0.0..=1.0).contains(&x) {
                prop_assert!(objective(x, n, lambda, pv, &m, &f) <= s.objective + 1e-12);
            }
        }
    }

    #[test]
    fn q_cdf_is_a_distribution_function(a in -2.0..2.0f64, beta in 0.05..=1.0f64, xi in 0.2..1.5f64, mu in 8.0..18.0f64, sigma in 0.3..3.0f64, q1 in 1e-4..10.0f64, q2 in 1e-4..10.0f64) {
        let m = TurnoverWealthModel::single(a, beta, xi).unwrap();
        let pv = Model::Lognormal { mu, sigma };
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let (f1, f2) = (q_cdf(lo, &m, &pv).unwrap(), q_cdf(hi, &m, &pv).unwrap());
        prop_assert!((0.0..=1.0).contains(&f1) && (0.0..=1.0).contains(&f2));
        prop_assert!(f1 <= f2 + 1e-12);
        let cf = closed_form_q(&m, mu, sigma).unwrap();
        prop_assert!((f2 - cf.cdf(hi)).abs() < 1e-6);
    }

    #[test]
    fn bilinear_split_at_extreme_theta_is_single(a in -2.0..2.0f64, beta in 0.05..=1.0f64, xi in 0.2..1.5f64, q in 1e-3..5.0f64) {
        let r = TwRegime { a, beta, xi };
        let other = TwRegime { a: a + 1.0, beta: 0.5, xi: 0.7 };
        let pv = Model::Lognormal { mu: 12.0, sigma: 1.0 };
        let split = TurnoverWealthModel::bilinear(r, other, 1e3).unwrap();
        let single = TurnoverWealthModel::single(a, beta, xi).unwrap();
        prop_assert!((q_cdf(q, &split, &pv).unwrap() - q_cdf(q, &single, &pv).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn ols_residuals_are_orthogonal(xs in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 5..60)) {
        let (x, y): (Vec<f64>, Vec<f64>) = xs.into_iter().unzip();
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
        let f = ols(&x, &y, false).unwrap();
        let s: f64 = f.residuals.iter().sum();
        let sx: f64 = f.residuals.iter().zip(&x).map(|(r, v)| r * v).sum();
        prop_assert!(s.abs() < 1e-8 && sx.abs() < 1e-7, "{s} {sx}");
    }

    #[test]
    fn ks_distance_is_bounded(gamma in 1.2..4.0f64, seed in 0..1000u64, n in 1..300usize) {
        let m = Model::Pareto { gamma, x_min: 1.0 };
        let d = ks_statistic(&sample(&m, n, seed), &m);
        prop_assert!(d >= 1.0 / (2.0 * n as f64) - 1e-12 && d <= 1.0);
    }

    #[test]
    fn transactions_round_trip(rows in prop::collection::vec(("[A-Z][0-9]{1,3}", "[A-Z]{1,4}", 0.01..1e5f64, 0.01..1e4f64, any::<bool>(), 0..86_400i64), 1..40)) {
        let txs: Vec<Transaction> = rows
            .iter()
            .map(|(id, asset, price, vol, buy, secs)| {
                Transaction::new(
                    id.clone(),
                    Category::Company,
                    Utc.timestamp_opt(1_700_000_000 + secs, 0).unwrap(),
                    asset.clone(),
                    AssetClass::Stock,
                    if *buy { Side::Buy } else { Side::Sell },
                    *price,
                    *vol,
                )
            })
            .collect();
        let mut buf = Vec::new();
        write_transactions(&mut buf, &txs).unwrap();
        let mut back = parse_transactions(buf.as_slice()).unwrap();
        let mut want = txs.clone();
        let key = |t: &Transaction| (t.trader_id.clone(), t.timestamp, t.asset_id.clone(), t.price.to_bits(), t.volume.to_bits());
        want.sort_by_key(key);
        back.sort_by_key(key);
        prop_assert_eq!(back, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn population_conserves_turnover(seed in any::<u64>(), delta in 0.0..0.95f64, kappa in 0.0..1.0f64, x in 0.1..=1.0f64, mu in 10.0..16.0f64, sigma in 0.0..2.5f64) {
        let cfg = PopulationConfig {
            n_traders: 40,
            seed,
            pv_law: PvLaw { mu, sigma },
            market: MarketParams {
                expected_market_return: 0.08,
                market_variance: 0.04,
                risk_free: 0.02,
                mean_beta: 1.0,
                mean_idio_variance: 0.09,
            },
            fees: vec![PowerLawFee { c: 0.5, delta, f_max: None }],
            theta: None,
            kappa_noise: kappa,
            x,
            category: Category::Individual,
            trade_date: "2024-01-03".parse().unwrap(),
        };
        let pop = generate_population(&cfg, Exec::Sequential).unwrap();
        let txs = pop.transactions();
        let mut k = 0;
        for t in &pop.traders {
            prop_assert!(t.n_assets >= 1);
            let total: f64 = txs[k..k + t.n_assets].iter().map(|r| r.turnover).sum();
            prop_assert!((total / (x * t.pv) - 1.0).abs() < 1e-9);
            k += t.n_assets;
        }
    }
}
