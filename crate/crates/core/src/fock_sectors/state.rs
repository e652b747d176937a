use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fock_sectors::SectorSpace;
use crate::lattice_core::SpinorField;

/// Amplitudes of all sectors `Psi^(m,n)` in the orthonormal slot basis of a [`SectorSpace`].
///
/// Coefficients are l2-normalized: a normalized state has `sum |c|^2 = 1`. The
/// first-quantized tensor is recovered by [`SectorState::tensor_element`].
#[derive(Clone, Debug)]
pub struct SectorState {
    space: Arc<SectorSpace>,
    amps: Vec<Complex64>,
}

impl PartialEq for SectorState {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.space, &other.space) && self.amps == other.amps
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl SectorState {
    pub fn zeros(space: Arc<SectorSpace>) -> Self {
        let dim = space.total_dim();
        Self {
            space,
            amps: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    pub fn from_amplitudes(space: Arc<SectorSpace>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != space.total_dim() {
            return Err(invalid(format!(
                "state has {} amplitudes, space has {}",
                amps.len(),
                space.total_dim()
            )));
        }
        Ok(Self { space, amps })
    }

    /// Electron and photon vacuum `(0,0)`.
    pub fn vacuum(space: Arc<SectorSpace>) -> Self {
        let mut s = Self::zeros(space);
        s.amps[0] = Complex64::new(1.0, 0.0);
        s
    }

    /// One-electron state in sector `(1,0)` carrying `field`.
    pub fn from_spinor(space: Arc<SectorSpace>, field: &SpinorField) -> Result<Self> {
        if field.lattice() != space.lattice() {
            return Err(invalid("spinor field lives on a different lattice"));
        }
        let info = *space
            .sector(1, 0)
            .ok_or_else(|| invalid("truncation has no one-electron sector"))?;
        let mut s = Self::zeros(space);
        let scale = field.lattice().spacing().sqrt();
        for (mode, c) in field.to_flat().into_iter().enumerate() {
            s.amps[info.offset + mode] = c * scale;
        }
        Ok(s)
    }

    /// One-photon state in sector `(0,1)` with site amplitudes `wave` (continuum-normalized).
    pub fn one_photon(space: Arc<SectorSpace>, wave: &[Complex64]) -> Result<Self> {
        let info = *space
            .sector(0, 1)
            .ok_or_else(|| invalid("truncation has no one-photon sector"))?;
        if wave.len() != space.lattice().num_sites() {
            return Err(invalid("photon wave has the wrong length"));
        }
        let scale = space.lattice().spacing().sqrt();
        let mut s = Self::zeros(space);
        for (y, c) in wave.iter().enumerate() {
            s.amps[info.offset + y] = c * scale;
        }
        Ok(s)
    }

    /// Spinor field of the `(1,0)` sector.
    pub fn to_spinor(&self) -> Result<SpinorField> {
        let info = self
            .space
            .sector(1, 0)
            .ok_or_else(|| invalid("truncation has no one-electron sector"))?;
        let scale = 1.0 / self.space.lattice().spacing().sqrt();
        let flat: Vec<Complex64> = self.amps[info.offset..info.offset + info.dim()]
            .iter()
            .map(|c| c * scale)
            .collect();
        SpinorField::from_flat(*self.space.lattice(), &flat)
    }

    pub fn space(&self) -> &Arc<SectorSpace> {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    /// Block of sector `(m, n)`.
    pub fn sector(&self, electrons: usize, photons: usize) -> Option<&[Complex64]> {
        self.space
            .sector(electrons, photons)
            .map(|info| &self.amps[info.offset..info.offset + info.dim()])
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm_sq().sqrt();
        if n > 0.0 {
            for c in &mut self.amps {
                *c /= n;
            }
        }
        self
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Squared norm of each sector.
    pub fn sector_norms(&self) -> BTreeMap<(usize, usize), f64> {
        self.space
            .sectors()
            .iter()
            .map(|info| {
                let block = &self.amps[info.offset..info.offset + info.dim()];
                (info.label(), block.iter().map(|c| c.norm_sqr()).sum())
            })
            .collect()
    }

    /// Complex conjugate of every amplitude.
    pub fn conjugated(&self) -> Self {
        Self {
            space: self.space.clone(),
            amps: self.amps.iter().map(|c| c.conj()).collect(),
        }
    }

    /// First-quantized tensor element `Psi^(m,n)(modes; photon_sites)` in l2 normalization.
    ///
    /// `modes` lists one single-particle mode (`2 * site + spinor`) per electron
    /// slot in slot order; `photon_sites` one site per photon slot. Antisymmetry
    /// in the electron slots and symmetry in the photon slots follow from the
    /// basis: `sum over all ordered tuples |element|^2` equals the sector norm.
    pub fn tensor_element(&self, modes: &[usize], photon_sites: &[usize]) -> Complex64 {
        let (m, n) = (modes.len(), photon_sites.len());
        let zero = Complex64::new(0.0, 0.0);
        if self.space.sector(m, n).is_none() {
            return zero;
        }
        let mut sorted = modes.to_vec();
        let mut sign = 1.0;
        // insertion sort, counting transpositions
        for i in 1..sorted.len() {
            let mut j = i;
            while j > 0 && sorted[j - 1] > sorted[j] {
                sorted.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return zero;
        }
        let mut ys = photon_sites.to_vec();
        ys.sort_unstable();
        let mut occupancy_factor = 1.0;
        let mut run = 1usize;
        for i in 1..=ys.len() {
            if i < ys.len() && ys[i] == ys[i - 1] {
                run += 1;
            } else {
                occupancy_factor *= factorial(run);
                run = 1;
            }
        }
        let e_rank = self.space.rank_combination(&sorted);
        let p_rank = self.space.rank_multiset(&ys);
        let c = self.amps[self.space.flat_index(m, n, e_rank, p_rank)];
        let scale = sign * (occupancy_factor / factorial(n)).sqrt() / factorial(m).sqrt();
        c * scale
    }
}

/// Probability of each sector; sums to the squared norm.
pub fn sector_probabilities(state: &SectorState) -> BTreeMap<(usize, usize), f64> {
    state.sector_norms()
}

/// Born density `rho(x_1..x_m)` of sector `(m, n)` at lattice sites, photons marginalized.
///
/// `rho` is continuum-normalized: summing `a^m * rho` over all ordered site
/// tuples of a sector gives that sector's probability.
pub fn born_density(state: &SectorState, sector: (usize, usize), sites: &[usize]) -> Result<f64> {
    let (m, n) = sector;
    let space = state.space();
    let info = *space
        .sector(m, n)
        .ok_or_else(|| invalid(format!("sector ({m},{n}) is outside the truncation")))?;
    if sites.len() != m {
        return Err(invalid(format!(
            "sector ({m},{n}) needs {m} positions, got {}",
            sites.len()
        )));
    }
    let l = space.lattice().num_sites();
    if sites.iter().any(|&s| s >= l) {
        return Err(invalid("site index outside the lattice"));
    }
    let a = space.lattice().spacing();
    let block = &state.amplitudes()[info.offset..info.offset + info.dim()];
    let mut total = 0.0;
    for spins in 0..(1usize << m) {
        let mut modes: Vec<usize> = sites
            .iter()
            .enumerate()
            .map(|(j, &x)| 2 * x + ((spins >> j) & 1))
            .collect();
        modes.sort_unstable();
        if modes.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        let e_rank = space.rank_combination(&modes);
        let row = &block[e_rank * info.photon_dim..(e_rank + 1) * info.photon_dim];
        total += row.iter().map(|c| c.norm_sqr()).sum::<f64>();
    }
    Ok(total / factorial(m) / a.powi(m as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_sectors::{build_sector_space, Truncation};
    use crate::lattice_core::Lattice1D;

    fn space(l: usize, m: usize, n: usize, a: f64) -> Arc<SectorSpace> {
        Arc::new(build_sector_space(Lattice1D::small(l, a).unwrap(), Truncation::new(m, n)).unwrap())
    }

    fn pseudo_random(space: Arc<SectorSpace>, seed: u64) -> SectorState {
        let mut s = seed;
        let amps = (0..space.total_dim())
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let re = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let im = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                Complex64::new(re, im)
            })
            .collect();
        SectorState::from_amplitudes(space, amps).unwrap().normalized()
    }

    #[test]
    fn gaussian_peak_density_matches_spinor_density() {
        let lat = Lattice1D::new(16, 0.5).unwrap();
        let sp = Arc::new(build_sector_space(lat, Truncation::new(1, 0)).unwrap());
        let f = SpinorField::gaussian(lat, 4.0, 0.7, 0.0, [Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.0)]).normalized();
        let st = SectorState::from_spinor(sp, &f).unwrap();
        let dens = f.density();
        let (peak, max) = dens
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        assert!((born_density(&st, (1, 0), &[peak]).unwrap() - max).abs() < 1e-12);
        assert!((st.to_spinor().unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_sums_to_norm() {
        let sp = space(3, 2, 2, 0.7);
        let st = pseudo_random(sp.clone(), 11);
        let a: f64 = 0.7;
        let mut total = 0.0;
        for m in 0..=2 {
            for n in 0..=2 {
                let tuples: Vec<Vec<usize>> = match m {
                    0 => vec![vec![]],
                    1 => (0..3).map(|x| vec![x]).collect(),
                    _ => (0..3).flat_map(|x| (0..3).map(move |y| vec![x, y])).collect(),
                };
                for t in tuples {
                    total += a.powi(m as i32) * born_density(&st, (m, n), &t).unwrap();
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_is_antisymmetric_and_complete() {
        let sp = space(3, 2, 2, 1.0);
        let st = pseudo_random(sp.clone(), 5);
        let mut total = 0.0;
        for a in 0..6 {
            for b in 0..6 {
                for y1 in 0..3 {
                    for y2 in 0..3 {
                        let t = st.tensor_element(&[a, b], &[y1, y2]);
                        let swapped = st.tensor_element(&[b, a], &[y2, y1]);
                        assert!((t + swapped).norm() < 1e-15);
                        assert_eq!(t, st.tensor_element(&[a, b], &[y2, y1]));
                        total += t.norm_sqr();
                    }
                }
            }
        }
        assert!((total - st.sector(2, 2).unwrap().iter().map(|c| c.norm_sqr()).sum::<f64>()).abs() < 1e-13);
    }

    #[test]
    fn coincident_equal_spinors_vanish() {
        let sp = space(4, 2, 0, 1.0);
        let st = pseudo_random(sp, 8);
        for x in 0..4 {
            for s in 0..2 {
                assert_eq!(st.tensor_element(&[2 * x + s, 2 * x + s], &[]), Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn sector_probability_examples() {
        let lat = Lattice1D::new(8, 1.0).unwrap();
        let sp = Arc::new(build_sector_space(lat, Truncation::new(1, 1)).unwrap());
        let f = SpinorField::gaussian(lat, 4.0, 1.0, 0.0, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).normalized();
        let pure = SectorState::from_spinor(sp.clone(), &f).unwrap();
        let probs = sector_probabilities(&pure);
        assert!((probs[&(1, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(probs[&(1, 1)], 0.0);

        let mut mixed = pure.clone();
        let info = *sp.sector(1, 1).unwrap();
        let block = &mut mixed.amplitudes_mut()[info.offset..info.offset + info.dim()];
        block[17] = Complex64::new(0.0, 1.0);
        for c in &mut mixed.amplitudes_mut()[sp.sector(1, 0).unwrap().offset..info.offset] {
            *c *= std::f64::consts::FRAC_1_SQRT_2;
        }
        mixed.amplitudes_mut()[info.offset + 17] = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        let probs = sector_probabilities(&mixed);
        assert!((probs[&(1, 0)] - 0.5).abs() < 1e-12);
        assert!((probs[&(1, 1)] - 0.5).abs() < 1e-12);
        assert!((probs.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn born_density_rejects_bad_sector() {
        let sp = space(4, 1, 0, 1.0);
        let st = SectorState::vacuum(sp);
        assert!(born_density(&st, (2, 0), &[0, 1]).is_err());
        assert!((born_density(&st, (0, 0), &[]).unwrap() - 1.0).abs() < 1e-15);
    }
}
