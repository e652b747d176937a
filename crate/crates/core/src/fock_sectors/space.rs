use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice_core::Lattice1D;

/// Default cap on the total number of complex amplitudes.
pub const DEFAULT_BUDGET: usize = 2_000_000;

/// Maximum electron and photon numbers kept in the sector expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub max_electrons: usize,
    pub max_photons: usize,
}

impl Truncation {
    pub fn new(max_electrons: usize, max_photons: usize) -> Self {
        Self {
            max_electrons,
            max_photons,
        }
    }
}

/// Dimensions and position of one `(m, n)` block in the flattened state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorInfo {
    pub electrons: usize,
    pub photons: usize,
    pub electron_dim: usize,
    pub photon_dim: usize,
    pub offset: usize,
}

impl SectorInfo {
    pub fn dim(&self) -> usize {
        self.electron_dim * self.photon_dim
    }

    pub fn label(&self) -> (usize, usize) {
        (self.electrons, self.photons)
    }
}

/// Basis bookkeeping for the truncated sector expansion.
///
/// Electron slots carry one of `2L` single-particle modes (`2 * site + spinor`);
/// an `m`-electron basis state is a strictly increasing mode tuple (a Slater
/// determinant). Photon slots carry a site; an `n`-photon basis state is a
/// nondecreasing site tuple (a permanent). Both are ranked in colexicographic
/// order, and the flattened index within a sector is
/// `electron_rank * photon_dim + photon_rank`.
#[derive(Debug)]
pub struct SectorSpace {
    lattice: Lattice1D,
    truncation: Truncation,
    sectors: Vec<SectorInfo>,
    total_dim: usize,
    binom: Vec<Vec<usize>>,
    electron_bases: Vec<Vec<usize>>,
    photon_bases: Vec<Vec<usize>>,
}

/// Enumerates the sectors and their index maps within the default budget.
pub fn build_sector_space(lattice: Lattice1D, truncation: Truncation) -> Result<SectorSpace> {
    SectorSpace::with_budget(lattice, truncation, DEFAULT_BUDGET)
}

fn binomial_table(max_n: usize, max_k: usize) -> Vec<Vec<usize>> {
    let mut t = vec![vec![0usize; max_k + 1]; max_n + 1];
    for n in 0..=max_n {
        t[n][0] = 1;
        for k in 1..=max_k.min(n) {
            t[n][k] = t[n - 1][k - 1].saturating_add(if k < n { t[n - 1][k] } else { 0 });
        }
    }
    t
}

impl SectorSpace {
    pub fn with_budget(lattice: Lattice1D, truncation: Truncation, budget: usize) -> Result<Self> {
        let modes = 2 * lattice.num_sites();
        let sites = lattice.num_sites();
        if truncation.max_electrons > modes {
            return Err(invalid(format!(
                "cannot place {} electrons in {modes} modes",
                truncation.max_electrons
            )));
        }
        let max_n = modes.max(sites + truncation.max_photons);
        let max_k = truncation.max_electrons.max(truncation.max_photons) + 1;
        let binom = binomial_table(max_n, max_k);
        let mut sectors = Vec::new();
        let mut total: usize = 0;
        for m in 0..=truncation.max_electrons {
            for n in 0..=truncation.max_photons {
                let electron_dim = binom[modes][m];
                let photon_dim = if n == 0 { 1 } else { binom[sites + n - 1][n] };
                let info = SectorInfo {
                    electrons: m,
                    photons: n,
                    electron_dim,
                    photon_dim,
                    offset: total,
                };
                total = total.saturating_add(electron_dim.saturating_mul(photon_dim));
                sectors.push(info);
            }
        }
        if total > budget {
            return Err(Error::DimensionBudget { dim: total, budget });
        }
        let mut space = Self {
            lattice,
            truncation,
            sectors,
            total_dim: total,
            binom,
            electron_bases: Vec::new(),
            photon_bases: Vec::new(),
        };
        space.electron_bases = (0..=truncation.max_electrons)
            .map(|m| {
                let dim = space.binom[modes][m];
                (0..dim).flat_map(|r| space.unrank_combination(r, m)).collect()
            })
            .collect();
        space.photon_bases = (0..=truncation.max_photons)
            .map(|n| {
                let dim = if n == 0 { 1 } else { space.binom[sites + n - 1][n] };
                (0..dim)
                    .flat_map(|r| {
                        space
                            .unrank_combination(r, n)
                            .into_iter()
                            .enumerate()
                            .map(|(i, c)| c - i)
                            .collect::<Vec<_>>()
                    })
                    .collect()
            })
            .collect();
        Ok(space)
    }

    pub fn lattice(&self) -> &Lattice1D {
        &self.lattice
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn num_modes(&self) -> usize {
        2 * self.lattice.num_sites()
    }

    pub fn sectors(&self) -> &[SectorInfo] {
        &self.sectors
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn sector(&self, electrons: usize, photons: usize) -> Option<&SectorInfo> {
        if electrons > self.truncation.max_electrons || photons > self.truncation.max_photons {
            return None;
        }
        self.sectors
            .get(electrons * (self.truncation.max_photons + 1) + photons)
    }

    pub fn binomial(&self, n: usize, k: usize) -> usize {
        if k > n {
            0
        } else {
            self.binom[n][k]
        }
    }

    /// Colex rank of a strictly increasing tuple.
    pub fn rank_combination(&self, combo: &[usize]) -> usize {
        combo
            .iter()
            .enumerate()
            .map(|(i, &c)| self.binomial(c, i + 1))
            .sum()
    }

    fn unrank_combination(&self, mut rank: usize, k: usize) -> Vec<usize> {
        let mut out = vec![0; k];
        for i in (0..k).rev() {
            let mut c = i;
            while self.binomial(c + 1, i + 1) <= rank {
                c += 1;
            }
            rank -= self.binomial(c, i + 1);
            out[i] = c;
        }
        out
    }

    /// Rank of a nondecreasing photon site tuple.
    pub fn rank_multiset(&self, sites: &[usize]) -> usize {
        sites
            .iter()
            .enumerate()
            .map(|(i, &y)| self.binomial(y + i, i + 1))
            .sum()
    }

    /// Sorted mode tuple of electron basis state `rank` with `m` electrons.
    pub fn electron_state(&self, m: usize, rank: usize) -> &[usize] {
        &self.electron_bases[m][rank * m..(rank + 1) * m]
    }

    /// Sorted site tuple of photon basis state `rank` with `n` photons.
    pub fn photon_state(&self, n: usize, rank: usize) -> &[usize] {
        &self.photon_bases[n][rank * n..(rank + 1) * n]
    }

    /// Flat index of `(electron_rank, photon_rank)` in sector `(m, n)`.
    pub fn flat_index(&self, m: usize, n: usize, electron_rank: usize, photon_rank: usize) -> usize {
        let info = &self.sectors[m * (self.truncation.max_photons + 1) + n];
        info.offset + electron_rank * info.photon_dim + photon_rank
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(l: usize, m: usize, n: usize) -> Vec<((usize, usize), usize)> {
        let lat = Lattice1D::small(l, 1.0).unwrap();
        build_sector_space(lat, Truncation::new(m, n))
            .unwrap()
            .sectors()
            .iter()
            .map(|s| (s.label(), s.dim()))
            .collect()
    }

    #[test]
    fn documented_dimensions() {
        assert_eq!(dims(16, 1, 0), vec![((0, 0), 1), ((1, 0), 32)]);
        assert_eq!(dims(16, 2, 0)[2], ((2, 0), 496));
        assert_eq!(dims(8, 1, 1)[3], ((1, 1), 128));
        // two photons on three sites: 6 symmetric states
        assert_eq!(dims(3, 0, 2)[2], ((0, 2), 6));
    }

    #[test]
    fn budget_is_enforced() {
        let lat = Lattice1D::new(64, 1.0).unwrap();
        match SectorSpace::with_budget(lat, Truncation::new(3, 1), 100_000) {
            Err(Error::DimensionBudget { dim, budget }) => {
                assert_eq!(budget, 100_000);
                assert!(dim > budget);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn ranks_round_trip() {
        let lat = Lattice1D::small(5, 1.0).unwrap();
        let space = build_sector_space(lat, Truncation::new(3, 3)).unwrap();
        for m in 0..=3 {
            let dim = space.binomial(10, m);
            for r in 0..dim {
                let c = space.electron_state(m, r).to_vec();
                assert!(c.windows(2).all(|w| w[0] < w[1]));
                assert_eq!(space.rank_combination(&c), r);
            }
        }
        for n in 1..=3 {
            let dim = space.sector(0, n).unwrap().photon_dim;
            for r in 0..dim {
                let y = space.photon_state(n, r).to_vec();
                assert!(y.windows(2).all(|w| w[0] <= w[1]));
                assert!(y.iter().all(|&s| s < 5));
                assert_eq!(space.rank_multiset(&y), r);
            }
        }
    }
}
