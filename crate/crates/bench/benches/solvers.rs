use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use supermode_core::model::uniform_chain;
use supermode_core::resonator::scattering_amplitudes;
use supermode_core::{analysis, chain, oracle, AtomParams, CavityParams, ChainSpec, SubsystemParams};

fn subsystem() -> SubsystemParams {
    SubsystemParams::with_atom(CavityParams::new(50.0, 50.0, 9.0), AtomParams::coupled_to_b(70.0))
}

fn chain_of(n: usize) -> ChainSpec {
    uniform_chain(n, subsystem(), 100.2).expect("valid chain")
}

fn single_subsystem(c: &mut Criterion) {
    let sub = subsystem();
    c.bench_function("subsystem/scattering_amplitudes", |b| {
        b.iter(|| scattering_amplitudes(black_box(&sub), black_box(13.0)).unwrap())
    });
}

fn transfer_vs_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("chain");
    for n in [2, 5, 20] {
        let spec = chain_of(n);
        group.bench_with_input(BenchmarkId::new("transfer", n), &spec, |b, spec| {
            b.iter(|| chain::evaluate(black_box(spec), black_box(13.0), 0.0).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("oracle", n), &spec, |b, spec| {
            b.iter(|| oracle::transmission_reflection(black_box(spec), black_box(13.0)).unwrap())
        });
    }
    group.finish();
}

fn pathway_expansion(c: &mut Criterion) {
    let spec = chain_of(2);
    let mut group = c.benchmark_group("pathways");
    for bounces in [10, 40] {
        group.bench_with_input(BenchmarkId::from_parameter(bounces), &bounces, |b, &k| {
            b.iter(|| analysis::pathways(black_box(&spec), black_box(13.0), k, 1 << 16).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, single_subsystem, transfer_vs_oracle, pathway_expansion);
criterion_main!(benches);
