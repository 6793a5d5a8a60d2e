//! Benchmarks for the data-parallel hot paths, each measured on the default
//! thread pool and inside a single-thread pool, so the parallel speedup is
//! visible in one run. Building with `--no-default-features` removes the
//! parallel code path entirely; the same benchmarks then measure the
//! sequential fallback.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use vn_core::adversary::{contaminate, AdversaryConfig};
use vn_core::embedding::ase;
use vn_core::evaluation::{monte_carlo_harness, HarnessConfig, Regime};
use vn_core::gmm::{fit_gmm, GmmConfig};
use vn_core::models::{sample_corr_sbm, sample_sbm, SbmParams};
use vn_core::nomination::PipelineConfig;
use vn_core::regularization::TrimSemantics;
use vn_core::rng::derive;

#[cfg(feature = "parallel")]
fn single_thread<T>(f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("pool")
        .install(f)
}

#[cfg(not(feature = "parallel"))]
fn single_thread<T>(f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    f()
}

fn bench_generators(c: &mut Criterion) {
    let params = SbmParams::two_block(2000, 0.4, 0.5, 0.3).unwrap();
    let adv = AdversaryConfig::new(0.1, 0.1, 0.8, 0.8).unwrap();
    c.bench_function("sample_corr_sbm_n2000", |b| {
        b.iter(|| {
            let mut rng = derive(1, "bench-corr");
            black_box(sample_corr_sbm(0.7, &params, &mut rng).unwrap());
        })
    });
    let mut rng = derive(2, "bench-adv-graph");
    let (g, _) = sample_sbm(&params, &mut rng);
    c.bench_function("contaminate_n2000", |b| {
        b.iter(|| {
            let mut rng = derive(3, "bench-adv");
            black_box(contaminate(&g, &adv, &mut rng).unwrap());
        })
    });
}

fn bench_embedding(c: &mut Criterion) {
    let params = SbmParams::two_block(1000, 0.4, 0.5, 0.3).unwrap();
    let mut rng = derive(4, "bench-ase");
    let (g, _) = sample_sbm(&params, &mut rng);
    let mut group = c.benchmark_group("ase_n1000");
    group.sample_size(10);
    group.bench_function("d2", |b| b.iter(|| black_box(ase(&g, 2).unwrap())));
    group.finish();
}

fn bench_gmm(c: &mut Criterion) {
    use rand::Rng as _;
    use rand_distr::StandardNormal;
    let mut rng = derive(5, "bench-gmm-data");
    let n = 400;
    let d = 3;
    let mut pts = ndarray::Array2::<f64>::zeros((n, d));
    for (i, mut row) in pts.rows_mut().into_iter().enumerate() {
        let center = if i % 2 == 0 { -3.0 } else { 3.0 };
        row[0] = center + rng.sample::<f64, _>(StandardNormal);
        for j in 1..d {
            row[j] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let cfg = GmmConfig::default();
    let mut group = c.benchmark_group("fit_gmm_400x3_k1to9");
    group.sample_size(10);
    group.bench_function("default_pool", |b| {
        b.iter(|| {
            let mut rng = derive(6, "bench-gmm");
            black_box(fit_gmm(&pts, &cfg, &mut rng).unwrap());
        })
    });
    group.bench_function("single_thread", |b| {
        b.iter(|| {
            single_thread(|| {
                let mut rng = derive(6, "bench-gmm");
                black_box(fit_gmm(&pts, &cfg, &mut rng).unwrap());
            })
        })
    });
    group.finish();
}

fn bench_harness(c: &mut Criterion) {
    let cfg = HarnessConfig {
        params: SbmParams::two_block(100, 0.4, 0.5, 0.3).unwrap(),
        rho: 0.7,
        adversary: AdversaryConfig::new(0.1, 0.1, 0.8, 0.8).unwrap(),
        regimes: vec![Regime::Idealized, Regime::Contaminated],
        replicates: 4,
        seed_size: 8,
        x_max: 10,
        loss_ks: vec![5],
        pipeline: PipelineConfig {
            dim_override: Some(2),
            gmm: GmmConfig {
                k_max: 4,
                restarts: 3,
                ..GmmConfig::default()
            },
            ..PipelineConfig::default()
        },
        trim_semantics: TrimSemantics::Prose,
        master_seed: 7,
    };
    let mut group = c.benchmark_group("monte_carlo_4reps_n100");
    group.sample_size(10);
    group.bench_function("default_pool", |b| {
        b.iter(|| black_box(monte_carlo_harness(&cfg).unwrap()))
    });
    group.bench_function("single_thread", |b| {
        b.iter(|| single_thread(|| black_box(monte_carlo_harness(&cfg).unwrap())))
    });
    group.finish();
}

criterion_group!(benches, bench_generators, bench_embedding, bench_gmm, bench_harness);
criterion_main!(benches);
