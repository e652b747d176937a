use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock_sectors::{build_sector_space, evolve_sectors, SectorHamiltonian, SectorSpace, SectorState, Truncation};
use crate::lattice_core::{DiracOperator, Lattice1D, SpinorField};

/// Densities below this count as a node of the wave function.
pub const NODE_DENSITY: f64 = 1e-300;

/// Electron positions in `[0, L a)` together with the sampled sector.
///
/// Guidance marginalizes over photon number, so `sector.1` is a label only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub positions: Vec<f64>,
    pub sector: (usize, usize),
}

impl Configuration {
    pub fn new(positions: Vec<f64>, sector: (usize, usize)) -> Result<Self> {
        if positions.len() != sector.0 {
            return Err(invalid(format!(
                "sector ({}, {}) needs {} positions, got {}",
                sector.0,
                sector.1,
                sector.0,
                positions.len()
            )));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(invalid("positions must be finite"));
        }
        Ok(Self { positions, sector })
    }

    pub fn electrons(&self) -> usize {
        self.positions.len()
    }
}

/// Anything that assigns velocities to electron positions at a time.
pub trait VelocityField: Sync {
    fn lattice(&self) -> &Lattice1D;
    fn velocity(&self, t: f64, positions: &[f64]) -> Result<Vec<f64>>;
    /// Largest time at which the field is defined.
    fn end_time(&self) -> f64;
    /// Spacing of the stored frames, if any.
    fn frame_spacing(&self) -> Option<f64> {
        None
    }
}

/// Field with `v = 0` everywhere, a negative control for equivariance.
#[derive(Clone, Copy, Debug)]
pub struct ZeroVelocity {
    pub lattice: Lattice1D,
    pub end: f64,
}

impl VelocityField for ZeroVelocity {
    fn lattice(&self) -> &Lattice1D {
        &self.lattice
    }

    fn velocity(&self, _t: f64, positions: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; positions.len()])
    }

    fn end_time(&self) -> f64 {
        self.end
    }
}

/// Four-point Lagrange stencil of a periodic position: sites and weights.
pub fn cubic_stencil(lattice: &Lattice1D, x: f64) -> [(usize, f64); 4] {
    let l = lattice.num_sites() as i64;
    let s = lattice.wrap(x) / lattice.spacing();
    let i0 = s.floor();
    let u = s - i0;
    let i0 = i0 as i64;
    let w = [
        -u * (u - 1.0) * (u - 2.0) / 6.0,
        (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
        -(u + 1.0) * u * (u - 2.0) / 2.0,
        (u + 1.0) * u * (u - 1.0) / 6.0,
    ];
    let mut out = [(0usize, 0.0); 4];
    for (k, wk) in w.into_iter().enumerate() {
        out[k] = ((i0 - 1 + k as i64).rem_euclid(l) as usize, wk);
    }
    out
}

/// Charge density `j0` and per-slot currents `j1_j` at continuous positions.
///
/// Amplitudes are cubically interpolated in every slot, then contracted;
/// all photon sectors with `positions.len()` electrons are summed.
pub fn slot_currents(state: &SectorState, positions: &[f64]) -> Result<(f64, Vec<f64>)> {
    let space = state.space();
    let m = positions.len();
    if m == 0 {
        return Ok((0.0, Vec::new()));
    }
    if m > space.truncation().max_electrons {
        return Err(invalid(format!("{m} electrons exceed the truncation")));
    }
    let lattice = space.lattice();
    let stencils: Vec<[(usize, f64); 4]> = positions.iter().map(|&x| cubic_stencil(lattice, x)).collect();
    let mut j0 = 0.0;
    let mut j1 = vec![0.0; m];
    let amps = state.amplitudes();
    for n in 0..=space.truncation().max_photons {
        let info = *space.sector(m, n).expect("sector within truncation");
        let pd = info.photon_dim;
        if m == 1 {
            let st = &stencils[0];
            for p in 0..pd {
                let mut v = [Complex64::new(0.0, 0.0); 2];
                for &(site, w) in st {
                    for (s, vs) in v.iter_mut().enumerate() {
                        *vs += amps[info.offset + (2 * site + s) * pd + p] * w;
                    }
                }
                j0 += v[0].norm_sqr() + v[1].norm_sqr();
                j1[0] += 2.0 * (v[0].conj() * v[1]).re;
            }
            continue;
        }
        let spins = 1usize << m;
        let mut table = vec![Complex64::new(0.0, 0.0); spins * pd];
        let mut modes = vec![0usize; m];
        let mut sorted = vec![0usize; m];
        for stencil_idx in 0..4usize.pow(m as u32) {
            let mut weight = 1.0;
            let mut rest = stencil_idx;
            let mut sites = vec![0usize; m];
            for j in 0..m {
                let (site, w) = stencils[j][rest % 4];
                rest /= 4;
                sites[j] = site;
                weight *= w;
            }
            for spin in 0..spins {
                for j in 0..m {
                    modes[j] = 2 * sites[j] + (spin >> j & 1);
                }
                sorted.copy_from_slice(&modes);
                let mut sign = 1.0;
                for i in 1..m {
                    let mut k = i;
                    while k > 0 && sorted[k - 1] > sorted[k] {
                        sorted.swap(k - 1, k);
                        sign = -sign;
                        k -= 1;
                    }
                }
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    continue;
                }
                let er = space.rank_combination(&sorted);
                let base = info.offset + er * pd;
                for p in 0..pd {
                    table[spin * pd + p] += amps[base + p] * (weight * sign);
                }
            }
        }
        for spin in 0..spins {
            for p in 0..pd {
                j0 += table[spin * pd + p].norm_sqr();
            }
            for (j, cur) in j1.iter_mut().enumerate() {
                if spin >> j & 1 == 0 {
                    let partner = spin | 1 << j;
                    for p in 0..pd {
                        *cur += 2.0 * (table[spin * pd + p].conj() * table[partner * pd + p]).re;
                    }
                }
            }
        }
    }
    Ok((j0, j1))
}

/// Bohmian velocity `v_j = j1_j / j0` of every electron at a fixed time.
pub fn velocity(state: &SectorState, config: &Configuration) -> Result<Vec<f64>> {
    let (j0, j1) = slot_currents(state, &config.positions)?;
    if j0 < NODE_DENSITY {
        return Err(Error::Node { density: j0, time: f64::NAN });
    }
    Ok(j1.into_iter().map(|j| j / j0).collect())
}

/// Time-indexed sector states with currents interpolated linearly between frames.
#[derive(Clone, Debug)]
pub struct Guidance {
    times: Vec<f64>,
    frames: Vec<SectorState>,
}

impl Guidance {
    pub fn new(times: Vec<f64>, frames: Vec<SectorState>) -> Result<Self> {
        if times.is_empty() || times.len() != frames.len() {
            return Err(invalid("guidance needs one time per frame"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("frame times must increase strictly"));
        }
        let space = frames[0].space();
        if frames.iter().any(|f| !Arc::ptr_eq(f.space(), space)) {
            return Err(invalid("frames must share a sector space"));
        }
        Ok(Self { times, frames })
    }

    /// Frames of a single electron evolved with `op`, spaced `frame_dt` apart.
    pub fn from_dirac(op: &DiracOperator, field: &SpinorField, frame_dt: f64, steps: usize) -> Result<Self> {
        let space = Arc::new(build_sector_space(*op.lattice(), Truncation::new(1, 0))?);
        Self::from_dirac_in(space, op, field, frame_dt, steps)
    }

    pub fn from_dirac_in(space: Arc<SectorSpace>, op: &DiracOperator, field: &SpinorField, frame_dt: f64, steps: usize) -> Result<Self> {
        let mut times = Vec::with_capacity(steps + 1);
        let mut frames = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = k as f64 * frame_dt;
            let f = op.evolve(field, t)?;
            times.push(t);
            frames.push(SectorState::from_spinor(space.clone(), &f)?);
        }
        Self::new(times, frames)
    }

    /// Frames of a sector evolution under `ham`.
    pub fn from_sectors(state: &SectorState, ham: &SectorHamiltonian, frame_dt: f64, steps: usize) -> Result<Self> {
        let mut times = vec![0.0];
        let mut frames = vec![state.clone()];
        for k in 1..=steps {
            let next = evolve_sectors(frames.last().expect("nonempty"), ham, frame_dt)?;
            times.push(k as f64 * frame_dt);
            frames.push(next);
        }
        Self::new(times, frames)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[SectorState] {
        &self.frames
    }

    /// State at the frame nearest to `t`.
    pub fn frame_at(&self, t: f64) -> &SectorState {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        &self.frames[k]
    }

    /// `(j0, j1)` linearly interpolated in time.
    pub fn currents(&self, t: f64, positions: &[f64]) -> Result<(f64, Vec<f64>)> {
        let last = *self.times.last().expect("nonempty");
        if t < self.times[0] - 1e-12 || t > last + 1e-12 {
            return Err(invalid(format!("time {t} outside the stored frames")));
        }
        let k = self.times.partition_point(|&s| s <= t).saturating_sub(1).min(self.times.len() - 1);
        if k + 1 == self.times.len() {
            return slot_currents(&self.frames[k], positions);
        }
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let f = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let (a0, a1) = slot_currents(&self.frames[k], positions)?;
        if f == 0.0 {
            return Ok((a0, a1));
        }
        let (b0, b1) = slot_currents(&self.frames[k + 1], positions)?;
        Ok((
            (1.0 - f) * a0 + f * b0,
            a1.iter().zip(&b1).map(|(x, y)| (1.0 - f) * x + f * y).collect(),
        ))
    }
}

impl VelocityField for Guidance {
    fn lattice(&self) -> &Lattice1D {
        self.frames[0].space().lattice()
    }

    fn velocity(&self, t: f64, positions: &[f64]) -> Result<Vec<f64>> {
        let (j0, j1) = self.currents(t, positions)?;
        if j0 < NODE_DENSITY {
            return Err(Error::Node { density: j0, time: t });
        }
        Ok(j1.into_iter().map(|j| j / j0).collect())
    }

    fn end_time(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    fn frame_spacing(&self) -> Option<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).reduce(f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_core::{plane_wave, spectral_split};

    #[test]
    fn plane_wave_velocity_is_p_over_e() {
        let lat = Lattice1D::new(64, 0.25).unwrap();
        let sp = Arc::new(build_sector_space(lat, Truncation::new(1, 0)).unwrap());
        let k = 5;
        let f = plane_wave(lat, 1.0, k, true);
        let p = lat.momenta()[k];
        let st = SectorState::from_spinor(sp, &f).unwrap();
        for x in [0.0, 0.37, 5.1, 15.99] {
            let v = velocity(&st, &Configuration::new(vec![x], (1, 0)).unwrap()).unwrap();
            assert!((v[0] - p / 1f64.hypot(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_rest_gaussian_has_zero_central_velocity() {
        let lat = Lattice1D::new(64, 0.25).unwrap();
        let sp = Arc::new(build_sector_space(lat, Truncation::new(1, 0)).unwrap());
        let op = DiracOperator::free(lat, 1.0).unwrap();
        let g = SpinorField::gaussian(lat, 8.0, 1.0, 0.0, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let f = spectral_split(&op).unwrap().apply_plus(&g).normalized();
        let st = SectorState::from_spinor(sp, &f).unwrap();
        let v = velocity(&st, &Configuration::new(vec![8.0], (1, 0)).unwrap()).unwrap();
        assert!(v[0].abs() < 1e-12);
    }

    #[test]
    fn speed_bound_on_random_two_electron_state() {
        let lat = Lattice1D::small(6, 0.5).unwrap();
        let sp = Arc::new(build_sector_space(lat, Truncation::new(2, 1)).unwrap());
        let mut seed = 9u64;
        let amps = (0..sp.total_dim())
            .map(|_| {
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                Complex64::new((seed >> 33) as f64 / 2e9 - 1.0, (seed >> 13 & 0xffff) as f64 / 65536.0 - 0.5)
            })
            .collect();
        let st = SectorState::from_amplitudes(sp, amps).unwrap().normalized();
        for i in 0..50 {
            let cfg = Configuration::new(vec![0.061 * i as f64, 2.9 - 0.043 * i as f64], (2, 0)).unwrap();
            for v in velocity(&st, &cfg).unwrap() {
                assert!(v.abs() <= 1.0 + 1e-12);
            }
            let one = Configuration::new(vec![0.061 * i as f64], (1, 1)).unwrap();
            assert!(velocity(&st, &one).unwrap()[0].abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn two_electron_density_matches_lattice_density_at_sites() {
        let lat = Lattice1D::small(5, 1.0).unwrap();
        let sp = Arc::new(build_sector_space(lat, Truncation::new(2, 0)).unwrap());
        let amps = (0..sp.total_dim()).map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos())).collect();
        let st = SectorState::from_amplitudes(sp, amps).unwrap().normalized();
        for (x, y) in [(0usize, 3usize), (2, 2), (4, 1)] {
            let (j0, _) = slot_currents(&st, &[x as f64, y as f64]).unwrap();
            let rho = crate::fock_sectors::born_density(&st, (2, 0), &[x, y]).unwrap();
            // slot amplitudes omit the 1/sqrt(2!) of the tensor normalization
            assert!((j0 / 2.0 - rho).abs() < 1e-12);
        }
    }

    #[test]
    fn node_is_reported() {
        let lat = Lattice1D::new(8, 1.0).unwrap();
        let sp = Arc::new(build_sector_space(lat, Truncation::new(1, 0)).unwrap());
        let st = SectorState::vacuum(sp);
        let cfg = Configuration::new(vec![2.0], (1, 0)).unwrap();
        assert!(matches!(velocity(&st, &cfg), Err(Error::Node { .. })));
    }
}
