use std::sync::Arc;

use bqed_core::fock_sectors::{
    build_sector_space, evolve_sectors, CouplingKernel, PairKernel, SectorHamiltonian, SectorState, Truncation,
};
use bqed_core::lattice_core::{build_dirac, charge_conjugate, spectral_split, DiracOperator, Lattice1D, SpinorField};
use bqed_core::locality_lab::{hs_norm_offdiag, hs_norm_offdiag_dense};
use bqed_core::rng::stream;
use bqed_core::sea_models::{charge_operator, total_charge, FockBasis, SeaConvention};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn random_field(lat: Lattice1D, amps: &[(f64, f64)]) -> SpinorField {
    let v = (0..lat.num_sites())
        .map(|i| {
            let a = amps[(2 * i) % amps.len()];
            let b = amps[(2 * i + 1) % amps.len()];
            [Complex64::new(a.0, a.1), Complex64::new(b.0 * (i as f64).cos(), b.1)]
        })
        .collect();
    SpinorField::new(lat, v).unwrap().normalized()
}

fn max_diff(a: &SpinorField, b: &SpinorField) -> f64 {
    a.sub(b).norm_sq().sqrt()
}

fn amps() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3..17)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evolution_preserves_norm(
        exp in 3u32..7,
        mass in 0.1..3.0f64,
        pot in prop::collection::vec(-2.0..2.0f64, 4),
        t in 0.0..10.0f64,
        a in amps(),
    ) {
        let sites = 1usize << exp;
        let lat = Lattice1D::new(sites, 0.3).unwrap();
        let v: Vec<f64> = (0..sites).map(|i| pot[i * pot.len() / sites]).collect();
        let op = build_dirac(lat, mass, 1.0, &v).unwrap();
        let f = random_field(lat, &a);
        let out = op.evolve(&f, t).unwrap();
        prop_assert!((out.norm_sq() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn evolution_composes(mass in 0.1..2.0f64, t1 in 0.0..3.0f64, t2 in 0.0..3.0f64, a in amps()) {
        let lat = Lattice1D::new(32, 0.5).unwrap();
        let op = DiracOperator::free(lat, mass).unwrap();
        let f = random_field(lat, &a);
        let two = op.evolve(&op.evolve(&f, t1).unwrap(), t2).unwrap();
        let one = op.evolve(&f, t1 + t2).unwrap();
        prop_assert!(max_diff(&one, &two) < 1e-10);
    }

    #[test]
    fn energy_split_is_complete_and_orthogonal(mass in 0.2..3.0f64, a in amps()) {
        let lat = Lattice1D::new(16, 0.5).unwrap();
        let op = DiracOperator::free(lat, mass).unwrap();
        let p = spectral_split(&op).unwrap();
        let f = random_field(lat, &a);
        let plus = p.apply_plus(&f);
        let minus = p.apply_minus(&f);
        prop_assert!(max_diff(&plus.add(&minus), &f) < 1e-12);
        prop_assert!((plus.norm_sq() + minus.norm_sq() - 1.0).abs() < 1e-12);
        prop_assert!(max_diff(&p.apply_plus(&plus), &plus) < 1e-12);
    }

    #[test]
    fn conjugation_is_an_involution(a in amps()) {
        let lat = Lattice1D::new(16, 1.0).unwrap();
        let f = random_field(lat, &a);
        prop_assert!(max_diff(&charge_conjugate(&charge_conjugate(&f)), &f) < 1e-15);
    }

    #[test]
    fn sector_evolution_is_unitary(e in -1.0..1.0f64, lambda in 0.0..1.0f64, t in 0.0..4.0f64) {
        let lat = Lattice1D::new(8, 1.0).unwrap();
        let sp = Arc::new(build_sector_space(lat, Truncation::new(2, 1)).unwrap());
        let op = DiracOperator::free(lat, 1.0).unwrap();
        let ham = SectorHamiltonian::new(
            sp.clone(),
            &op,
            Some(CouplingKernel::with_default_width(&lat, e).unwrap()),
            Some(PairKernel::new(lambda, 2.0).unwrap()),
        )
        .unwrap();
        let out = evolve_sectors(&SectorState::vacuum(sp), &ham, t).unwrap();
        prop_assert!((out.norm_sq() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_potential_has_no_offdiagonal_part(c in -5.0..5.0f64, mass in 0.2..2.0f64) {
        let lat = Lattice1D::new(32, 0.5).unwrap();
        let op = build_dirac(lat, mass, 1.0, &[c; 32]).unwrap();
        prop_assert!(hs_norm_offdiag(&op).unwrap() < 1e-12);
    }

    #[test]
    fn offdiagonal_norm_matches_dense(h in prop::collection::vec(-1.0..1.0f64, 32), mass in 0.3..2.0f64) {
        let lat = Lattice1D::new(32, 0.5).unwrap();
        let op = build_dirac(lat, mass, 0.7, &h).unwrap();
        let fast = hs_norm_offdiag(&op).unwrap();
        let dense = hs_norm_offdiag_dense(&op).unwrap();
        prop_assert!((fast - dense).abs() <= 1e-10 * dense.max(1.0));
    }

    #[test]
    fn streams_are_reproducible(seed in any::<u64>(), index in 0u64..1000) {
        let a: Vec<u64> = (0..4).map({ let mut r = stream(seed, "x", index); move |_| r.random() }).collect();
        let b: Vec<u64> = (0..4).map({ let mut r = stream(seed, "x", index); move |_| r.random() }).collect();
        let c: Vec<u64> = (0..4).map({ let mut r = stream(seed, "x", index + 1); move |_| r.random() }).collect();
        prop_assert_eq!(&a, &b);
        prop_assert_ne!(&a, &c);
    }
}

#[test]
fn cell_charges_add_up_to_total() {
    for sites in 2..=4 {
        let lat = Lattice1D::small(sites, 1.0).unwrap();
        let basis = FockBasis::new(lat, 1.0, 0.3, SeaConvention::FilledSea).unwrap();
        let total = total_charge(&basis).unwrap();
        let mut sum = charge_operator(&basis, &[]).unwrap();
        for x in 0..sites {
            sum = sum.add(&charge_operator(&basis, &[x]).unwrap());
        }
        assert!(sum.sub(&total).norm() < 1e-12, "sites {sites}");
        assert!(total.hermiticity_residual() < 1e-12);
    }
}

#[test]
fn total_charge_is_conserved_by_the_sea_hamiltonian() {
    let lat = Lattice1D::small(3, 1.0).unwrap();
    let basis = FockBasis::new(lat, 1.0, 0.3, SeaConvention::FilledSea).unwrap();
    let q = total_charge(&basis).unwrap();
    assert!(basis.hamiltonian().commutator_norm(&q) < 1e-12);
}
