//! Sequential-vs-parallel benchmarks over the hot loops: session
//! featurization, forest importance, and a LOPO fold sweep.
//!
//! The "seq" variants run the same work through a 1-thread rayon pool (or
//! plain iterators when the `parallel` feature is off), so the comparison
//! isolates the data-parallel speedup.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use moodcam_core::config::RunConfig;
use moodcam_core::features::featurize_sessions;
use moodcam_core::learn::{lopo_evaluate, rf_gini_importance, ForestParams, LopoConfig, Target};
use moodcam_core::pipeline::{build_extractor, build_sets};
use moodcam_core::synth::{generate_cohort, CohortConfig};
use moodcam_core::types::{SampleSet, Session};

fn bench_cohort() -> (RunConfig, Vec<Session>, Vec<moodcam_core::types::SurveyResponse>) {
    let mut cfg = RunConfig::default();
    cfg.features.pair_stride = 8; // keep the IVA dimension bench-sized
    cfg.features.pca_max_rows = 512;
    let cohort = generate_cohort(&CohortConfig {
        n_participants: 6,
        n_days: 5,
        sessions_per_day: 6.0,
        seed: 404,
        ..CohortConfig::default()
    })
    .unwrap();
    (cfg, cohort.sessions, cohort.surveys)
}

fn with_threads<R>(n: usize, f: impl FnOnce() -> R + Send) -> R
where
    R: Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        f()
    }
}

fn bench_featurize(c: &mut Criterion) {
    let (cfg, sessions, _) = bench_cohort();
    let refs: Vec<&Session> = sessions.iter().collect();
    let (extractor, _) = build_extractor(&cfg, &refs).unwrap();
    let mut group = c.benchmark_group("featurize");
    for threads in [1usize, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| with_threads(t, || featurize_sessions(&extractor, &sessions).sessions.len()))
        });
    }
    group.finish();
}

fn planted(n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let mut row: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        row[0] += if label == 1 { 0.8 } else { -0.8 };
        x.push(row);
        y.push(label);
    }
    (x, y)
}

fn bench_forest(c: &mut Criterion) {
    let (x, y) = planted(300, 40);
    let params = ForestParams::default();
    let mut group = c.benchmark_group("forest_importance");
    for threads in [1usize, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| with_threads(t, || rf_gini_importance(&x, &y, &params, 5).unwrap()))
        });
    }
    group.finish();
}

fn at_moment_set() -> SampleSet {
    let (cfg, sessions, surveys) = bench_cohort();
    let refs: Vec<&Session> = sessions.iter().collect();
    let (extractor, _) = build_extractor(&cfg, &refs).unwrap();
    let feat = featurize_sessions(&extractor, &sessions);
    let built = build_sets(&cfg, &feat.sessions, &surveys, &feat.schema).unwrap();
    built
        .get(moodcam_core::pipeline::SetKind::AtMoment)
        .unwrap()
        .clone()
}

fn bench_lopo(c: &mut Criterion) {
    let set = at_moment_set();
    let lopo = LopoConfig {
        forest: ForestParams {
            n_trees: 30,
            ..ForestParams::default()
        },
        ..LopoConfig::default()
    };
    let mut group = c.benchmark_group("lopo_at_moment");
    group.sample_size(10);
    for threads in [1usize, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| with_threads(t, || lopo_evaluate(&set, Target::Valence, &lopo).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_featurize, bench_forest, bench_lopo);
criterion_main!(benches);
