use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mbl_memory::config::SweepConfig;
use mbl_memory::scaling::{collapse_quality, ScalingDataset};
use mbl_memory::sweep::{jobs, run_realization, sample_fields, RealizationKey};
use mbl_memory::{evolution::SectorSpectrum, BlockedHamiltonian, Chain, Topology};

fn fields(size: usize) -> Vec<f64> {
    let key = RealizationKey {
        master_seed: 1,
        size,
        disorder_index: 0,
        realization: 0,
    };
    sample_fields(3.0, size, &key)
}

fn half_filling_sector(c: &mut Criterion) {
    let mut group = c.benchmark_group("half_filling_sector");
    group.sample_size(10);
    for size in [8, 10, 12] {
        let chain = Chain::new(fields(size), 1.0, Topology::Ring).unwrap();
        group.bench_function(format!("L{size}"), |b| {
            b.iter(|| {
                let h = BlockedHamiltonian::with_sectors(&chain, [size / 2]).unwrap();
                black_box(SectorSpectrum::from_block(h.block(size / 2).unwrap()).unwrap())
            })
        });
    }
    group.finish();
}

fn realization(c: &mut Criterion) {
    let mut group = c.benchmark_group("realization");
    group.sample_size(10);
    for (size, env) in [(9, "neel"), (9, "eigenstate"), (12, "neel")] {
        let config = SweepConfig::from_toml_str(&format!(
            "[physics]\nsizes = [{size}]\nratio = \"1/3\"\nenvironments = [\"{env}\"]\ndisorder = [3.0]\n\
             [sampling]\nrealizations = 1\n"
        ))
        .unwrap();
        let job = jobs(&config)[0];
        group.bench_function(format!("L{size}_{env}"), |b| {
            b.iter(|| black_box(run_realization(&config, &job).unwrap()))
        });
    }
    group.finish();
}

fn quality(c: &mut Criterion) {
    let hs: Vec<f64> = (0..9).map(|i| 1.5 + 0.5 * i as f64).collect();
    let data = ScalingDataset::from_ansatz(&[6, 9, 12], &hs, (3.2, 1.4, 0.0), |x| (0.3 * x).tanh(), 0.01).unwrap();
    c.bench_function("collapse_quality", |b| {
        b.iter(|| black_box(collapse_quality(&data, 3.1, 1.3, 0.02, 4).unwrap()))
    });
}

criterion_group!(benches, half_filling_sector, realization, quality);
criterion_main!(benches);
