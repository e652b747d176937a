//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use bqed_core::fock_sectors::{build_sector_space, CouplingKernel, PairKernel, SectorHamiltonian, SectorState, Truncation};
use bqed_core::lattice_core::{DiracOperator, Lattice1D, SpinorField};
use num_complex::Complex64;

/// Normalized Gaussian packet centered in the domain.
pub fn packet(lat: Lattice1D) -> SpinorField {
    let spin = [Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.1)];
    SpinorField::gaussian(lat, lat.length() / 2.0, lat.length() / 16.0, 1.0, spin).normalized()
}

pub fn free_operator(sites: usize, spacing: f64) -> DiracOperator {
    DiracOperator::free(Lattice1D::new(sites, spacing).expect("lattice"), 1.0).expect("operator")
}

/// Interacting sector Hamiltonian and a one-electron state on it.
pub fn sector_fixture(sites: usize, electrons: usize, photons: usize) -> (SectorHamiltonian, SectorState) {
    let lat = Lattice1D::new(sites, 1.0).expect("lattice");
    let space = Arc::new(build_sector_space(lat, Truncation::new(electrons, photons)).expect("space"));
    let op = DiracOperator::free(lat, 1.0).expect("operator");
    let ham = SectorHamiltonian::new(
        space.clone(),
        &op,
        Some(CouplingKernel::with_default_width(&lat, 0.5).expect("coupling")),
        Some(PairKernel::new(0.3, 2.0).expect("pairs")),
    )
    .expect("hamiltonian");
    let state = SectorState::from_spinor(space, &packet(lat)).expect("state");
    (ham, state)
}
