//! Bloch-grid coherent-information evaluation: rayon-mapped (when the
//! `parallel` feature is on) vs an explicit sequential loop. Run with
//! `--no-default-features` to benchmark the pure sequential build.

use bhchan::capacity::{bloch_grid, coherent_information, ChannelPair};
use bhchan::channels::TwoRailChannel;
use bhchan::fock::{unruh_isometry, FockCutoff, SqueezeParam};
use bhchan::tensor::DensityMatrix;
use bhchan::par;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_grid(c: &mut Criterion) {
    let p = SqueezeParam::from_z(0.5).unwrap();
    let cutoff = FockCutoff::for_tolerance(0.5, 1e-8);
    let iso = unruh_isometry(&p, &cutoff).unwrap();
    let rail = TwoRailChannel::from_isometry(&iso).unwrap();
    let pair = ChannelPair::from_two_rail(&rail);
    let grid = bloch_grid();
    let states: Vec<_> = grid
        .iter()
        .map(|&n| DensityMatrix::from_bloch(n).unwrap().into_matrix())
        .collect();

    let mut group = c.benchmark_group("bloch_grid_eval");
    group.sample_size(10);
    let label = if par::is_parallel() { "feature-mapped" } else { "feature-sequential" };
    group.bench_function(BenchmarkId::new(label, states.len()), |b| {
        b.iter(|| {
            let vals = par::map_ordered(states.clone(), |rho| {
                coherent_information(&pair, &rho).unwrap()
            });
            vals.iter().sum::<f64>()
        })
    });
    group.bench_function(BenchmarkId::new("plain-sequential", states.len()), |b| {
        b.iter(|| {
            states
                .iter()
                .map(|rho| coherent_information(&pair, rho).unwrap())
                .sum::<f64>()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_grid);
criterion_main!(benches);
