use criterion::{black_box, criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use mettle::experiment::{run_mettle_trial, run_trials_sequential, trial_payload, MettleConfig};
use mettle::{derive_edge_set, encode_all, CodeParams, Decoder, Overhead};

fn config(k: u64, symbol_size: usize) -> MettleConfig {
    MettleConfig {
        params: CodeParams::new(Overhead::new(11, 200).unwrap(), 600, 4, 0, symbol_size).unwrap(),
        channel: "bec:0.01".parse().unwrap(),
        k,
        trials: 8,
        seed: 1,
    }
}

fn monte_carlo(c: &mut Criterion) {
    let cfg = config(10_000, 8);
    let mut group = c.benchmark_group("trials");
    group.sample_size(10);
    group.throughput(Throughput::Elements(cfg.trials));
    group.bench_function("sequential", |b| {
        b.iter(|| run_trials_sequential(0..cfg.trials, |t| run_mettle_trial(&cfg, t).unwrap().decoded))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| mettle::experiment::run_trials_parallel(0..cfg.trials, |t| run_mettle_trial(&cfg, t).unwrap().decoded))
    });
    group.finish();
}

fn codec(c: &mut Criterion) {
    let k = 10_000u64;
    let mut group = c.benchmark_group("codec");
    group.sample_size(10);
    group.throughput(Throughput::Elements(k));
    for size in [64usize, 1500] {
        let params = config(k, size).params;
        let payloads: Vec<Vec<u8>> = (0..k)
            .map(|x| {
                let mut p = vec![0u8; size];
                trial_payload(7, x, &mut p);
                p
            })
            .collect();
        group.bench_with_input(BenchmarkId::new("encode", size), &payloads, |b, payloads| {
            b.iter(|| encode_all(params, payloads.iter().map(Vec::as_slice)).unwrap().len())
        });
        let coded = encode_all(params, payloads.iter().map(Vec::as_slice)).unwrap();
        group.bench_with_input(BenchmarkId::new("decode_lossless", size), &coded, |b, coded| {
            b.iter_batched(
                || coded.clone(),
                |coded| {
                    let mut decoder = Decoder::new(params, k).unwrap();
                    let mut out = Vec::new();
                    for sym in coded {
                        decoder.push_into(sym, &mut out).unwrap();
                        out.clear();
                    }
                    decoder.peel_ops()
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn edges(c: &mut Criterion) {
    let params = config(1, 8).params;
    let mut group = c.benchmark_group("edges");
    group.throughput(Throughput::Elements(1000));
    group.bench_function("derive_edge_set_x1000", |b| {
        b.iter(|| (0..1000u64).map(|x| derive_edge_set(black_box(x), &params).max_bin()).sum::<u64>())
    });
    group.finish();
}

criterion_group!(benches, monte_carlo, codec, edges);
criterion_main!(benches);
