use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fock_sectors::hamiltonian::check_space;
use crate::fock_sectors::{SectorHamiltonian, SectorState};
use crate::lattice_core::{DiracOperator, SpinorField};
use crate::linalg::{krylov_propagate, KrylovSettings};

/// Spaces up to this dimension are propagated through a dense eigendecomposition.
pub const DENSE_LIMIT: usize = 600;

/// `exp(-i H t)` applied to `state`.
///
/// Small spaces use the cached dense eigensystem of `ham`; larger ones use
/// adaptive Lanczos steps, which fail loudly instead of losing accuracy.
pub fn evolve_sectors(state: &SectorState, ham: &SectorHamiltonian, t: f64) -> Result<SectorState> {
    evolve_with(state, ham, t, KrylovSettings::default())
}

pub fn evolve_with(
    state: &SectorState,
    ham: &SectorHamiltonian,
    t: f64,
    settings: KrylovSettings,
) -> Result<SectorState> {
    check_space(state, ham)?;
    if !t.is_finite() {
        return Err(invalid("evolution time must be finite"));
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let out = if ham.dim() <= DENSE_LIMIT {
        ham.eigensystem().propagate(state.amplitudes(), t)
    } else {
        krylov_propagate(|v| ham.apply(v), state.amplitudes(), t, settings)?
    };
    SectorState::from_amplitudes(state.space().clone(), out)
}

/// States at `0, dt, 2 dt, ..., steps * dt`.
pub fn evolve_frames(state: &SectorState, ham: &SectorHamiltonian, dt: f64, steps: usize) -> Result<Vec<SectorState>> {
    let mut frames = Vec::with_capacity(steps + 1);
    frames.push(state.clone());
    for _ in 0..steps {
        let next = evolve_sectors(frames.last().expect("nonempty"), ham, dt)?;
        frames.push(next);
    }
    Ok(frames)
}

/// Residual `|(U1 U2 - U2 U1) Psi|` of the two-electron sector under separate slot evolutions.
///
/// `U_j` evolves only electron slot `j` with the Dirac operator `op` for time `dt`.
pub fn multitime_consistency(state: &SectorState, op: &DiracOperator, dt: f64) -> Result<f64> {
    let space = state.space();
    if space.sector(2, 0).is_none() {
        return Err(invalid("two-electron sector is outside the truncation"));
    }
    if op.lattice() != space.lattice() {
        return Err(invalid("operator lives on a different lattice"));
    }
    let n = space.num_modes();
    let mut tensor = vec![Complex64::new(0.0, 0.0); n * n];
    for p in 0..n {
        for q in 0..n {
            tensor[p * n + q] = state.tensor_element(&[p, q], &[]);
        }
    }
    let slot1_then_2 = evolve_slot(op, &evolve_slot(op, &tensor, n, 0, dt)?, n, 1, dt)?;
    let slot2_then_1 = evolve_slot(op, &evolve_slot(op, &tensor, n, 1, dt)?, n, 0, dt)?;
    Ok(slot1_then_2
        .iter()
        .zip(&slot2_then_1)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

fn evolve_slot(op: &DiracOperator, tensor: &[Complex64], n: usize, slot: usize, dt: f64) -> Result<Vec<Complex64>> {
    let lattice = *op.lattice();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for fixed in 0..n {
        let line: Vec<Complex64> = (0..n)
            .map(|i| if slot == 0 { tensor[i * n + fixed] } else { tensor[fixed * n + i] })
            .collect();
        let evolved = op.evolve(&SpinorField::from_flat(lattice, &line)?, dt)?.to_flat();
        for (i, v) in evolved.into_iter().enumerate() {
            if slot == 0 {
                out[i * n + fixed] = v;
            } else {
                out[fixed * n + i] = v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::fock_sectors::{build_sector_space, sector_probabilities, CouplingKernel, PairKernel, Parts, SectorSpace, Truncation};
    use crate::lattice_core::Lattice1D;
    use crate::linalg::{hermitian_eigen, vec_dot};

    fn space(lat: Lattice1D, m: usize, n: usize) -> Arc<SectorSpace> {
        Arc::new(build_sector_space(lat, Truncation::new(m, n)).unwrap())
    }

    fn electron(lat: Lattice1D, sp: &Arc<SectorSpace>) -> SectorState {
        let f = SpinorField::gaussian(lat, lat.length() / 2.0, 1.0, 0.8, [Complex64::new(1.0, 0.0), Complex64::new(0.2, 0.1)]).normalized();
        SectorState::from_spinor(sp.clone(), &f).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let lat = Lattice1D::new(8, 1.0).unwrap();
        let sp = space(lat, 1, 1);
        let op = DiracOperator::free(lat, 1.0).unwrap();
        let ham = SectorHamiltonian::new(sp.clone(), &op, Some(CouplingKernel::with_default_width(&lat, 0.5).unwrap()), None).unwrap();
        let st = electron(lat, &sp);
        assert_eq!(evolve_sectors(&st, &ham, 0.0).unwrap(), st);
    }

    #[test]
    fn no_photons_reproduces_dirac_evolution() {
        let lat = Lattice1D::new(16, 0.5).unwrap();
        let sp = space(lat, 1, 0);
        let op = DiracOperator::free(lat, 1.0).unwrap();
        let ham = SectorHamiltonian::new(sp.clone(), &op, Some(CouplingKernel::with_default_width(&lat, 0.5).unwrap()), None).unwrap();
        let st = electron(lat, &sp);
        let f = st.to_spinor().unwrap();
        let ours = evolve_sectors(&st, &ham, 2.3).unwrap().to_spinor().unwrap();
        let direct = op.evolve(&f, 2.3).unwrap();
        assert!(ours.sub(&direct).norm() < 1e-10);
    }

    #[test]
    fn energy_and_norm_conserved() {
        let lat = Lattice1D::new(8, 1.0).unwrap();
        let sp = space(lat, 1, 1);
        let op = DiracOperator::free(lat, 1.0).unwrap();
        let ham = SectorHamiltonian::new(sp.clone(), &op, Some(CouplingKernel::with_default_width(&lat, 0.8).unwrap()), None).unwrap();
        let st = electron(lat, &sp);
        let e0 = ham.energy(&st);
        let frames = evolve_frames(&st, &ham, 0.5, 10).unwrap();
        for f in &frames {
            assert!((f.norm_sq() - 1.0).abs() < 1e-8);
            assert!((ham.energy(f) - e0).abs() < 1e-8);
        }
        assert!(sector_probabilities(frames.last().unwrap())[&(1, 1)] > 1e-4);
    }

    #[test]
    fn krylov_path_matches_dense() {
        let lat = Lattice1D::new(8, 0.5).unwrap();
        let sp = space(lat, 1, 2);
        assert!(sp.total_dim() > DENSE_LIMIT);
        let op = DiracOperator::free(lat, 1.0).unwrap();
        let ham = SectorHamiltonian::new(sp.clone(), &op, Some(CouplingKernel::with_default_width(&lat, 0.6).unwrap()), None).unwrap();
        let st = electron(lat, &sp);
        let ours = evolve_sectors(&st, &ham, 1.5).unwrap();
        let dense = hermitian_eigen(&ham.dense()).propagate(st.amplitudes(), 1.5);
        let diff: f64 = ours.amplitudes().iter().zip(&dense).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-9, "{diff}");
        assert!((ours.norm_sq() - 1.0).abs() < 1e-8);
    }

    /// First-order amplitude `-i int_0^t U0(t-s) V U0(s) psi ds` in the eigenbasis of `H0`.
    fn first_order(h0: &crate::linalg::Eigensystem, v: &crate::linalg::CMatrix, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let c = h0.vectors.ad_mul(&crate::linalg::CVector::from_column_slice(psi));
        let vb = h0.vectors.adjoint() * v * &h0.vectors;
        let n = c.len();
        let mut out = crate::linalg::CVector::zeros(n);
        for f in 0..n {
            let ef = h0.values[f];
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                if c[i] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let w = ef - h0.values[i];
                // int_0^t exp(i w s) ds
                let integral = if w.abs() < 1e-12 {
                    Complex64::new(t, 0.0)
                } else {
                    (Complex64::from_polar(1.0, w * t) - 1.0) / Complex64::new(0.0, w)
                };
                acc += vb[(f, i)] * c[i] * integral;
            }
            out[f] = Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0, -ef * t) * acc;
        }
        (&h0.vectors * out).as_slice().to_vec()
    }

    #[test]
    fn weak_emission_matches_first_order() {
        let lat = Lattice1D::new(8, 1.0).unwrap();
        let sp = space(lat, 1, 1);
        let op = DiracOperator::free(lat, 1.0).unwrap();
        let charge = 0.05;
        let ham = SectorHamiltonian::new(sp.clone(), &op, Some(CouplingKernel::with_default_width(&lat, charge).unwrap()), None).unwrap();
        let h0 = hermitian_eigen(&ham.dense_parts(Parts::FREE));
        let v = ham.dense() - ham.dense_parts(Parts::FREE);
        let st = electron(lat, &sp);
        let info = *sp.sector(1, 1).unwrap();
        for t in [0.5, 1.0, 2.0] {
            assert!(charge * t <= 0.1);
            let exact = sector_probabilities(&evolve_sectors(&st, &ham, t).unwrap())[&(1, 1)];
            let pert: f64 = first_order(&h0, &v, st.amplitudes(), t)[info.offset..info.offset + info.dim()]
                .iter()
                .map(|c| c.norm_sqr())
                .sum();
            assert!(pert > 0.0);
            assert!(((exact - pert) / pert).abs() < 0.05, "t={t}: {exact} vs {pert}");
        }
    }

    #[test]
    fn pair_sector_grows_quadratically() {
        let lat = Lattice1D::new(8, 1.0).unwrap();
        let sp = space(lat, 2, 1);
        let op = DiracOperator::free(lat, 1.0).unwrap();
        let lambda = 0.2;
        let ham = SectorHamiltonian::new(sp.clone(), &op, None, Some(PairKernel::new(lambda, 2.0).unwrap())).unwrap();
        let wave: Vec<Complex64> = (0..8)
            .map(|y| Complex64::from_polar((-(y as f64 - 4.0).powi(2) / 4.0).exp(), 0.0))
            .collect();
        let st = SectorState::one_photon(sp.clone(), &wave).unwrap().normalized();
        // leading order: P(2,0) = t^2 |V psi|^2 restricted to the pair sector
        let vpsi = ham.apply_parts(st.amplitudes(), Parts::PAIRS);
        let info = *sp.sector(2, 0).unwrap();
        let rate: f64 = vpsi[info.offset..info.offset + info.dim()].iter().map(|c| c.norm_sqr()).sum();
        assert!(rate > 0.0);
        for t in [0.01, 0.02, 0.04] {
            let p = sector_probabilities(&evolve_sectors(&st, &ham, t).unwrap())[&(2, 0)];
            assert!((p / (rate * t * t) - 1.0).abs() < 0.01, "t={t}: {p}");
        }
        assert!(vec_dot(st.amplitudes(), &vpsi).norm() < 1e-14);
    }

    #[test]
    fn free_slot_evolutions_commute() {
        let lat = Lattice1D::new(8, 1.0).unwrap();
        let sp = space(lat, 2, 0);
        let op = DiracOperator::free(lat, 1.0).unwrap();
        let mut st = SectorState::zeros(sp.clone());
        let info = *sp.sector(2, 0).unwrap();
        let mut seed = 3u64;
        for c in &mut st.amplitudes_mut()[info.offset..] {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            *c = Complex64::new((seed >> 40) as f64 / 16777216.0 - 0.5, (seed >> 20 & 0xfffff) as f64 / 1048576.0 - 0.5);
        }
        let st = st.normalized();
        assert_eq!(multitime_consistency(&st, &op, 0.0).unwrap(), 0.0);
        assert!(multitime_consistency(&st, &op, 0.1).unwrap() < 1e-10);
        assert!(multitime_consistency(&st, &op, 1.0).unwrap() < 1e-9);
    }

    #[test]
    fn evolution_keeps_antisymmetry() {
        let lat = Lattice1D::new(8, 1.0).unwrap();
        let sp = space(lat, 2, 1);
        let op = DiracOperator::free(lat, 1.0).unwrap();
        let ham = SectorHamiltonian::new(sp.clone(), &op, Some(CouplingKernel::with_default_width(&lat, 0.5).unwrap()), Some(PairKernel::new(0.3, 2.0).unwrap())).unwrap();
        let wave = vec![Complex64::new(1.0, 0.0); 8];
        let st = SectorState::one_photon(sp.clone(), &wave).unwrap().normalized();
        let out = evolve_sectors(&st, &ham, 0.7).unwrap();
        let mut worst: f64 = 0.0;
        for a in 0..16 {
            for b in 0..16 {
                for y in 0..8 {
                    let x = out.tensor_element(&[a, b], &[y]);
                    worst = worst.max((x + out.tensor_element(&[b, a], &[y])).norm());
                }
            }
        }
        assert!(worst < 1e-12);
        assert!((out.norm_sq() - 1.0).abs() < 1e-8);
    }
}
