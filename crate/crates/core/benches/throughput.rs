use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sympursuit::pursuit::{fit_term, predict, symbolic_pursuit, FitConfig, SampleSet};

fn samples(n: usize, d: usize) -> SampleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();
    let values = points.iter().map(|x| (-x.iter().sum::<f64>() / d as f64).exp()).collect();
    SampleSet::new(points, values).unwrap()
}

fn cfg(parallel: bool) -> FitConfig {
    FitConfig {
        max_iters: 60,
        restarts: 2,
        parallel,
        ..Default::default()
    }
}

fn fit(c: &mut Criterion) {
    let set = samples(200, 4);
    let mut g = c.benchmark_group("fit_term");
    g.sample_size(10);
    for parallel in [false, true] {
        let name = if parallel { "parallel" } else { "sequential" };
        g.bench_with_input(BenchmarkId::from_parameter(name), &parallel, |b, &p| {
            b.iter(|| fit_term(black_box(&set), &cfg(p), 0).unwrap())
        });
    }
    g.finish();
}

fn batch_predict(c: &mut Criterion) {
    let set = samples(200, 4);
    let model = symbolic_pursuit_model(&set);
    let query = samples(20_000, 4).points;
    let mut g = c.benchmark_group("predict_20k");
    g.sample_size(10);
    for parallel in [false, true] {
        let name = if parallel { "parallel" } else { "sequential" };
        g.bench_with_input(BenchmarkId::from_parameter(name), &parallel, |b, &p| {
            b.iter(|| predict(&model, black_box(&query), p).unwrap())
        });
    }
    g.finish();
}

fn symbolic_pursuit_model(set: &SampleSet) -> sympursuit::pursuit::SymbolicModel {
    let cfg = FitConfig {
        max_terms: 2,
        ..cfg(true)
    };
    symbolic_pursuit(set, None, &cfg).unwrap().0
}

criterion_group!(benches, fit, batch_predict);
criterion_main!(benches);
