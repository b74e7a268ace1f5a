//! Parallel against sequential execution on the data-parallel hot paths:
//! population generation, per-trader aggregation and bootstrap replicates.

use costfolio::optimize::{MarketParams, PowerLawFee};
use costfolio::popsim::{generate_population, PopulationConfig, PvLaw};
use costfolio::tailfit::{bca_bootstrap_multi, sample, BootstrapConfig, Model};
use costfolio::trader_data::{aggregate_all, SnapshotIndex};
use costfolio::Exec;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn population(n: usize) -> PopulationConfig {
    PopulationConfig {
        n_traders: n,
        seed: 1,
        pv_law: PvLaw { mu: 13.94, sigma: 2.87 },
        market: MarketParams {
            expected_market_return: 0.08,
            market_variance: 0.04,
            risk_free: 0.02,
            mean_beta: 1.0,
            mean_idio_variance: 0.09,
        },
        fees: vec![PowerLawFee { c: 0.15, delta: 0.63, f_max: None }],
        theta: None,
        kappa_noise: 0.3,
        x: 1.0,
        category: costfolio::trader_data::Category::Individual,
        trade_date: "2024-01-03".parse().unwrap(),
    }
}

fn bench_generate(c: &mut Criterion) {
    let cfg = population(5000);
    let mut g = c.benchmark_group("generate_population");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| generate_population(black_box(&cfg), e).unwrap())
        });
    }
    g.finish();
}

fn bench_aggregate(c: &mut Criterion) {
    let pop = generate_population(&population(5000), Exec::Parallel).unwrap();
    let mut txs = pop.transactions();
    txs.sort_by(|a, b| a.trader_id.cmp(&b.trader_id));
    let snaps = SnapshotIndex::new(pop.snapshots()).unwrap();
    let mut g = c.benchmark_group("aggregate_all");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| aggregate_all(black_box(&txs), &snaps, e))
        });
    }
    g.finish();
}

fn bench_bootstrap(c: &mut Criterion) {
    let data = sample(&Model::Lognormal { mu: 0.0, sigma: 1.0 }, 2000, 3);
    let mean_sd = |d: &[f64]| -> costfolio::Result<Vec<f64>> {
        let n = d.len() as f64;
        let m = d.iter().sum::<f64>() / n;
        Ok(vec![m, (d.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()])
    };
    let mut g = c.benchmark_group("bca_bootstrap");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = BootstrapConfig { replicates: 499, seed: 7, exec, ..BootstrapConfig::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| bca_bootstrap_multi(mean_sd, black_box(&data), cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_generate, bench_aggregate, bench_bootstrap);
criterion_main!(benches);
