use rand::Rng;
use rayon::prelude::*;

use crate::bohm_dynamics::Configuration;
use crate::error::{invalid, Result};
use crate::fock_sectors::{born_density, sector_probabilities, SectorState};
use crate::lattice_core::Lattice1D;
use crate::rng::stream;
use crate::stats::ks_statistic;

const MAX_TUPLES: usize = 1 << 22;

/// Cumulative Born weights over ordered site tuples of one electron number.
struct TupleTable {
    electrons: usize,
    photons: Vec<(usize, f64)>,
    /// cumulative weights per photon sector, each over `L^m` tuples
    cdfs: Vec<Vec<f64>>,
}

fn tuple_sites(mut idx: usize, m: usize, l: usize) -> Vec<usize> {
    (0..m)
        .map(|_| {
            let s = idx % l;
            idx /= l;
            s
        })
        .collect()
}

/// Draws `count` configurations i.i.d. from the Born distribution of `state`.
///
/// The sector `(m, n)` is drawn first, then an ordered site tuple by inverse
/// CDF, then each position is jittered uniformly within its cell
/// `[x_i - a/2, x_i + a/2)`. Member `i` uses its own stream, so the result
/// does not depend on thread scheduling.
pub fn sample_initial(state: &SectorState, count: usize, seed: u64) -> Result<Vec<Configuration>> {
    let space = state.space();
    let lattice = *space.lattice();
    let l = lattice.num_sites();
    let probs = sector_probabilities(state);
    let total: f64 = probs.values().sum();
    if total <= 0.0 {
        return Err(invalid("cannot sample from the zero state"));
    }
    let sectors: Vec<((usize, usize), f64)> = probs.into_iter().collect();
    let mut tables: Vec<Option<TupleTable>> = Vec::new();
    for m in 0..=space.truncation().max_electrons {
        let tuples = l.checked_pow(m as u32).unwrap_or(usize::MAX);
        let needed = sectors.iter().any(|((mm, _), p)| *mm == m && *p > 0.0);
        if !needed {
            tables.push(None);
            continue;
        }
        if tuples > MAX_TUPLES {
            return Err(invalid(format!("{m}-electron sampling table would need {tuples} entries")));
        }
        let mut photons = Vec::new();
        let mut cdfs = Vec::new();
        for &((mm, n), p) in &sectors {
            if mm != m || p <= 0.0 {
                continue;
            }
            let mut acc = 0.0;
            let mut cdf = Vec::with_capacity(tuples);
            for idx in 0..tuples {
                acc += born_density(state, (m, n), &tuple_sites(idx, m, l))?;
                cdf.push(acc);
            }
            photons.push((n, p));
            cdfs.push(cdf);
        }
        tables.push(Some(TupleTable {
            electrons: m,
            photons,
            cdfs,
        }));
    }
    let a = lattice.spacing();
    let out = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "initial", i as u64);
            let mut u = rng.random::<f64>() * total;
            let mut chosen = sectors.last().expect("nonempty").0;
            for &(label, p) in &sectors {
                if u < p {
                    chosen = label;
                    break;
                }
                u -= p;
            }
            let (m, n) = chosen;
            let table = tables[m].as_ref().expect("table for a populated sector");
            debug_assert_eq!(table.electrons, m);
            let k = table.photons.iter().position(|&(nn, _)| nn == n).expect("populated sector");
            let cdf = &table.cdfs[k];
            let target = rng.random::<f64>() * cdf.last().copied().unwrap_or(0.0);
            let idx = cdf.partition_point(|&c| c <= target).min(cdf.len() - 1);
            let positions = tuple_sites(idx, m, l)
                .into_iter()
                .map(|s| lattice.wrap(lattice.position(s) + a * (rng.random::<f64>() - 0.5)))
                .collect();
            Configuration {
                positions,
                sector: (m, n),
            }
        })
        .collect();
    Ok(out)
}

/// Site probabilities of the first electron coordinate, conditioned on `m` electrons.
pub fn born_marginal(state: &SectorState, electrons: usize) -> Result<Vec<f64>> {
    let space = state.space();
    let l = space.lattice().num_sites();
    let a = space.lattice().spacing();
    if electrons == 0 || electrons > space.truncation().max_electrons {
        return Err(invalid(format!("no marginal for {electrons} electrons")));
    }
    let tuples = l.pow(electrons as u32 - 1);
    let mut out = vec![0.0; l];
    for n in 0..=space.truncation().max_photons {
        for (x, o) in out.iter_mut().enumerate() {
            for rest in 0..tuples {
                let mut sites = vec![x];
                sites.extend(tuple_sites(rest, electrons - 1, l));
                *o += born_density(state, (electrons, n), &sites)? * a.powi(electrons as i32);
            }
        }
    }
    let total: f64 = out.iter().sum();
    if total <= 0.0 {
        return Err(invalid(format!("state has no {electrons}-electron component")));
    }
    Ok(out.into_iter().map(|p| p / total).collect())
}

/// CDF of the piecewise-constant density whose cells are centered on the sites.
///
/// The domain is cut at `-a/2`, so cell 0 is `[-a/2, a/2)`.
pub fn cell_cdf(lattice: &Lattice1D, probs: &[f64]) -> impl Fn(f64) -> f64 + use<> {
    let lattice = *lattice;
    let probs = probs.to_vec();
    let mut cum = Vec::with_capacity(probs.len() + 1);
    cum.push(0.0);
    for p in &probs {
        cum.push(cum.last().copied().unwrap_or(0.0) + p);
    }
    let a = lattice.spacing();
    let len = lattice.length();
    move |x: f64| {
        let mut y = lattice.wrap(x);
        if y >= len - a / 2.0 {
            y -= len;
        }
        let s = (y + a / 2.0) / a;
        let k = (s.floor() as usize).min(probs.len() - 1);
        cum[k] + (s - k as f64).clamp(0.0, 1.0) * probs[k]
    }
}

/// KS distance between first-electron positions and the Born marginal of `state`.
pub fn equivariance_ks(positions: &[f64], state: &SectorState, electrons: usize) -> Result<f64> {
    if positions.is_empty() {
        return Err(invalid("no positions to test"));
    }
    let marginal = born_marginal(state, electrons)?;
    let lattice = *state.space().lattice();
    let cdf = cell_cdf(&lattice, &marginal);
    Ok(ks_statistic(positions, cdf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use num_complex::Complex64;

    use crate::fock_sectors::{build_sector_space, Truncation};
    use crate::lattice_core::SpinorField;
    use crate::stats::{binomial_se, chi_square, histogram, ks_critical};

    fn one_electron(lat: Lattice1D, f: &SpinorField, n: usize) -> SectorState {
        let sp = Arc::new(build_sector_space(lat, Truncation::new(1, n)).unwrap());
        SectorState::from_spinor(sp, f).unwrap()
    }

    #[test]
    fn delta_state_samples_one_cell() {
        let lat = Lattice1D::new(16, 0.5).unwrap();
        let mut f = SpinorField::zeros(lat);
        f.amplitudes_mut()[5][0] = Complex64::new(1.0, 0.0);
        let st = one_electron(lat, &f.normalized(), 0);
        for c in sample_initial(&st, 200, 1).unwrap() {
            assert!((c.positions[0] - 2.5).abs() <= 0.25);
        }
    }

    #[test]
    fn uniform_density_passes_chi_square() {
        let lat = Lattice1D::new(64, 0.25).unwrap();
        let f = SpinorField::from_fn(lat, |_| [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).normalized();
        let st = one_electron(lat, &f, 0);
        let xs: Vec<f64> = sample_initial(&st, 10_000, 42)
            .unwrap()
            .into_iter()
            .map(|c| c.positions[0])
            .collect();
        let counts = histogram(&xs, 0.0, lat.length(), 16);
        let r = chi_square(&counts, &[1.0 / 16.0; 16], 5.0).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
    }

    #[test]
    fn two_sector_frequencies() {
        let lat = Lattice1D::new(8, 1.0).unwrap();
        let f = SpinorField::gaussian(lat, 4.0, 1.0, 0.0, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).normalized();
        let mut st = one_electron(lat, &f, 1);
        let info = *st.space().sector(1, 1).unwrap();
        for c in &mut st.amplitudes_mut()[..info.offset] {
            *c *= std::f64::consts::FRAC_1_SQRT_2;
        }
        st.amplitudes_mut()[info.offset + 9] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let n = 10_000;
        let draws = sample_initial(&st, n, 3).unwrap();
        let frac = draws.iter().filter(|c| c.sector == (1, 1)).count() as f64 / n as f64;
        assert!((frac - 0.5).abs() < 3.0 * binomial_se(0.5, n));
    }

    #[test]
    fn initial_ks_below_critical_value() {
        let lat = Lattice1D::new(128, 0.2).unwrap();
        let f = SpinorField::gaussian(lat, 12.0, 1.5, 0.5, [Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.0)]).normalized();
        let st = one_electron(lat, &f, 0);
        let n = 10_000;
        let xs: Vec<f64> = sample_initial(&st, n, 11).unwrap().into_iter().map(|c| c.positions[0]).collect();
        assert!(equivariance_ks(&xs, &st, 1).unwrap() < ks_critical(n, 0.01));
    }

    #[test]
    fn sampling_is_deterministic() {
        let lat = Lattice1D::new(16, 0.5).unwrap();
        let f = SpinorField::gaussian(lat, 4.0, 1.0, 0.0, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).normalized();
        let st = one_electron(lat, &f, 0);
        assert_eq!(sample_initial(&st, 100, 5).unwrap(), sample_initial(&st, 100, 5).unwrap());
        assert_ne!(sample_initial(&st, 100, 5).unwrap(), sample_initial(&st, 100, 6).unwrap());
    }

    #[test]
    fn two_electron_marginal_sums_to_one() {
        let lat = Lattice1D::small(4, 1.0).unwrap();
        let sp = Arc::new(build_sector_space(lat, Truncation::new(2, 0)).unwrap());
        let amps = (0..sp.total_dim()).map(|i| Complex64::new((i as f64).cos(), 0.0)).collect();
        let st = SectorState::from_amplitudes(sp, amps).unwrap().normalized();
        let m = born_marginal(&st, 2).unwrap();
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let draws = sample_initial(&st, 50, 1).unwrap();
        assert!(draws.iter().all(|c| c.positions.len() == c.sector.0));
    }
}
