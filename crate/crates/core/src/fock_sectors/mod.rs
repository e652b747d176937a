//! Truncated sector expansion `Psi^(m,n)` with emission, absorption and pair terms.

mod evolve;
mod hamiltonian;
mod io;
mod space;
mod state;

pub use evolve::{evolve_frames, evolve_sectors, evolve_with, multitime_consistency, DENSE_LIMIT};
pub use hamiltonian::{
    lp_hamiltonian_apply, pair_terms_apply, photon_dispersion, smearing_profile, CouplingKernel,
    PairKernel, Parts, SectorHamiltonian,
};
pub use io::{read_sector_state, write_sector_state, SectorEntry, SectorHeader, INDEX_LAYOUT};
pub use space::{build_sector_space, SectorInfo, SectorSpace, Truncation, DEFAULT_BUDGET};
pub use state::{born_density, sector_probabilities, SectorState};
