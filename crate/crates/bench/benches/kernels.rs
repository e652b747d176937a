use std::hint::black_box;
use std::sync::Arc;

use bqed_bench::{free_operator, packet, sector_fixture};
use bqed_core::bohm_dynamics::{velocity, Configuration};
use bqed_core::fock_sectors::{build_sector_space, evolve_sectors, SectorState, Truncation};
use bqed_core::lattice_core::{build_dirac, Lattice1D};
use bqed_core::locality_lab::hs_norm_offdiag;
use bqed_core::sea_models::{charge_operator, step_potential, FockBasis, SeaConvention};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn dirac_evolve(c: &mut Criterion) {
    let mut g = c.benchmark_group("dirac_evolve");
    for sites in [256, 1024, 4096] {
        let op = free_operator(sites, 0.05);
        let f = packet(*op.lattice());
        g.bench_with_input(BenchmarkId::from_parameter(sites), &sites, |b, _| {
            b.iter(|| op.evolve(black_box(&f), 1.0).unwrap())
        });
    }
    g.finish();
}

fn sectors(c: &mut Criterion) {
    let mut g = c.benchmark_group("sectors");
    for (m, n) in [(1, 1), (2, 1)] {
        let (ham, state) = sector_fixture(8, m, n);
        g.bench_function(format!("apply_L8_M{m}_N{n}"), |b| b.iter(|| ham.apply(black_box(state.amplitudes()))));
        g.bench_function(format!("evolve_L8_M{m}_N{n}"), |b| b.iter(|| evolve_sectors(black_box(&state), &ham, 0.5).unwrap()));
    }
    g.finish();
}

fn guidance(c: &mut Criterion) {
    let lat = Lattice1D::new(512, 0.1).unwrap();
    let space = Arc::new(build_sector_space(lat, Truncation::new(1, 0)).unwrap());
    let state = SectorState::from_spinor(space, &packet(lat)).unwrap();
    let config = Configuration { positions: vec![lat.length() / 2.0 + 0.37], sector: (1, 0) };
    c.bench_function("guidance_velocity_L512", |b| b.iter(|| velocity(black_box(&state), &config).unwrap()));
}

fn fock(c: &mut Criterion) {
    let mut g = c.benchmark_group("charge_operator");
    for sites in [3, 4] {
        let lat = Lattice1D::small(sites, 1.0).unwrap();
        let basis = FockBasis::new(lat, 1.0, 0.3, SeaConvention::FilledSea).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(sites), &sites, |b, _| {
            b.iter(|| charge_operator(&basis, black_box(&[0, 1])).unwrap())
        });
    }
    g.finish();
}

fn hilbert_schmidt(c: &mut Criterion) {
    let lat = Lattice1D::new(256, 0.1).unwrap();
    let op = build_dirac(lat, 1.0, 1.0, &step_potential(256, 1.0)).unwrap();
    c.bench_function("hs_norm_offdiag_L256", |b| b.iter(|| hs_norm_offdiag(black_box(&op)).unwrap()));
}

criterion_group!(benches, dirac_evolve, sectors, guidance, fock, hilbert_schmidt);
criterion_main!(benches);
