use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bohm_dynamics::{run_ensemble, sample_initial, Guidance};
use crate::error::{invalid, Result};
use crate::fock_sectors::{build_sector_space, SectorState, Truncation};
use crate::lattice_core::{spectral_split, DiracOperator, Lattice1D, SpinorField};
use crate::stats::{chi_square, ChiSquare};

/// Two Gaussian slits at rest, a free Dirac evolution and a screen at time `screen_time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleSlitParams {
    pub sites: usize,
    pub spacing: f64,
    pub mass: f64,
    /// Gaussian width of each slit.
    pub width: f64,
    pub separation: f64,
    /// 1 for the single-slit control, 2 otherwise.
    pub slits: usize,
    pub screen_time: f64,
    pub dt: f64,
    /// Integration steps per stored frame.
    pub frame_stride: usize,
    /// Cells per histogram bin.
    pub cells_per_bin: usize,
    /// Count at which the chi-square and fringe checks are made.
    pub test_count: usize,
    /// Largest allowed node-excluded fraction, in percent.
    pub max_excluded_percent: f64,
}

impl Default for DoubleSlitParams {
    fn default() -> Self {
        Self {
            sites: 1024,
            spacing: 0.05,
            mass: 4.0,
            width: 0.25,
            separation: 4.0,
            slits: 2,
            screen_time: 8.0,
            dt: 0.02,
            frame_stride: 5,
            cells_per_bin: 16,
            test_count: 20_000,
            max_excluded_percent: 1.0,
        }
    }
}

impl DoubleSlitParams {
    pub fn lattice(&self) -> Result<Lattice1D> {
        Lattice1D::new(self.sites, self.spacing)
    }

    /// Positive-energy part of the slit superposition, normalized.
    pub fn initial_field(&self, op: &DiracOperator) -> Result<SpinorField> {
        let lat = *op.lattice();
        let up = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let mid = lat.length() / 2.0;
        let centers: Vec<f64> = match self.slits {
            1 => vec![mid],
            2 => vec![mid - self.separation / 2.0, mid + self.separation / 2.0],
            s => return Err(invalid(format!("slit count must be 1 or 2, got {s}"))),
        };
        let mut f = SpinorField::zeros(lat);
        for c in centers {
            f = f.add(&SpinorField::gaussian(lat, c, self.width, 0.0, up));
        }
        Ok(spectral_split(op)?.apply_plus(&f).normalized())
    }
}

/// Arrival positions, cumulative histograms and the Born comparison at the screen.
#[derive(Clone, Debug)]
pub struct DoubleSlitOutcome {
    /// `None` for members excluded at a node, in member order.
    pub arrivals: Vec<Option<f64>>,
    pub excluded: usize,
    pub bin_left: Vec<f64>,
    pub born: Vec<f64>,
    /// `(count, histogram of the first count arrivals)`.
    pub histograms: Vec<(usize, Vec<u64>)>,
    pub chi_square: ChiSquare,
    pub fringes: FringeReport,
}

/// Born bin probabilities at `t`: cell masses summed `cells_per_bin` at a time.
///
/// Bins start at `-a/2`, so every bin covers whole cells.
pub fn born_bins(op: &DiracOperator, field: &SpinorField, t: f64, cells_per_bin: usize) -> Result<Vec<f64>> {
    let lat = *op.lattice();
    if cells_per_bin == 0 || lat.num_sites() % cells_per_bin != 0 {
        return Err(invalid("cells per bin must divide the site count"));
    }
    let f = op.evolve(field, t)?;
    let a = lat.spacing();
    let mass: Vec<f64> = f.amplitudes().iter().map(|s| (s[0].norm_sqr() + s[1].norm_sqr()) * a).collect();
    let total: f64 = mass.iter().sum();
    Ok(mass.chunks(cells_per_bin).map(|c| c.iter().sum::<f64>() / total).collect())
}

/// Histogram over bins of `cells_per_bin` cells starting at `-a/2`.
pub fn cell_histogram(lattice: &Lattice1D, xs: impl Iterator<Item = f64>, cells_per_bin: usize) -> Vec<u64> {
    let a = lattice.spacing();
    let bins = lattice.num_sites() / cells_per_bin;
    let w = a * cells_per_bin as f64;
    let mut out = vec![0u64; bins];
    for x in xs {
        let mut y = lattice.wrap(x);
        if y >= lattice.length() - a / 2.0 {
            y -= lattice.length();
        }
        let b = (((y + a / 2.0) / w) as usize).min(bins - 1);
        out[b] += 1;
    }
    out
}

/// Born maxima and the histogram maxima found near each of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeReport {
    pub born_peaks: Vec<usize>,
    pub histogram_peaks: Vec<usize>,
    pub max_offset: usize,
}

impl FringeReport {
    pub fn within(&self, bins: usize) -> bool {
        !self.born_peaks.is_empty() && self.max_offset <= bins
    }
}

/// Local maxima of `born` above `5%` of its largest value.
pub fn born_peaks(born: &[f64]) -> Vec<usize> {
    let top = born.iter().copied().fold(0.0, f64::max);
    let n = born.len();
    (0..n)
        .filter(|&i| {
            let l = if i > 0 { born[i - 1] } else { f64::NEG_INFINITY };
            let r = if i + 1 < n { born[i + 1] } else { f64::NEG_INFINITY };
            born[i] > 0.05 * top && born[i] >= l && born[i] > r
        })
        .collect()
}

/// For every Born peak, the histogram argmax between the neighbouring Born minima.
pub fn match_fringes(hist: &[u64], born: &[f64]) -> FringeReport {
    let peaks = born_peaks(born);
    let mut found = Vec::with_capacity(peaks.len());
    let mut max_offset = 0;
    for &p in &peaks {
        let mut lo = p;
        while lo > 0 && born[lo - 1] <= born[lo] {
            lo -= 1;
        }
        let mut hi = p;
        while hi + 1 < born.len() && born[hi + 1] <= born[hi] {
            hi += 1;
        }
        let arg = (lo..=hi).max_by_key(|&i| (hist[i], std::cmp::Reverse(i.abs_diff(p)))).unwrap_or(p);
        max_offset = max_offset.max(arg.abs_diff(p));
        found.push(arg);
    }
    FringeReport {
        born_peaks: peaks,
        histogram_peaks: found,
        max_offset,
    }
}

/// True if `hist` rises to its maximum and then falls, ignoring steps smaller
/// than `sigmas` Poisson standard deviations.
pub fn is_unimodal(hist: &[u64], sigmas: f64) -> bool {
    let Some(peak) = (0..hist.len()).max_by_key(|&i| hist[i]) else {
        return true;
    };
    let tol = |a: u64, b: u64| sigmas * ((a + b) as f64).sqrt().max(1.0);
    let rising = (1..=peak).all(|i| hist[i] as f64 + tol(hist[i], hist[i - 1]) >= hist[i - 1] as f64);
    let falling = (peak + 1..hist.len()).all(|i| hist[i] as f64 <= hist[i - 1] as f64 + tol(hist[i], hist[i - 1]));
    rising && falling
}

/// Samples `max(counts)` arrivals and builds the cumulative histograms.
///
/// Arrivals are positions at the screen time. Member `i` draws its start from
/// stream `(seed, "initial", i)`; excluded members are skipped, so a panel at
/// count `c` holds the first `c` completed members.
pub fn double_slit_experiment(params: &DoubleSlitParams, counts: &[usize], seed: u64) -> Result<DoubleSlitOutcome> {
    let total = counts.iter().copied().max().unwrap_or(0).max(params.test_count);
    if total == 0 {
        return Err(invalid("no arrivals requested"));
    }
    if params.frame_stride == 0 || params.frame_stride > 5 {
        return Err(invalid("frame stride must be between 1 and 5 steps"));
    }
    let lat = params.lattice()?;
    let op = DiracOperator::free(lat, params.mass)?;
    let field = params.initial_field(&op)?;
    let frame_dt = params.dt * params.frame_stride as f64;
    let frames = (params.screen_time / frame_dt).ceil() as usize;
    let space = Arc::new(build_sector_space(lat, Truncation::new(1, 0))?);
    let guidance = Guidance::from_dirac_in(space.clone(), &op, &field, frame_dt, frames)?;
    let start = SectorState::from_spinor(space, &field)?;
    let initial = sample_initial(&start, total, seed)?;
    let run = run_ensemble(&guidance, &initial, params.dt, params.screen_time)?;
    run.check_exclusions(params.max_excluded_percent)?;
    let arrivals: Vec<Option<f64>> = run.finals.iter().map(|f| f.as_ref().map(|c| c.positions[0])).collect();
    let completed: Vec<f64> = arrivals.iter().flatten().copied().collect();

    let born = born_bins(&op, &field, params.screen_time, params.cells_per_bin)?;
    let w = lat.spacing() * params.cells_per_bin as f64;
    let bin_left = (0..born.len()).map(|b| -lat.spacing() / 2.0 + b as f64 * w).collect();
    let histograms = counts
        .iter()
        .map(|&c| (c, cell_histogram(&lat, completed.iter().take(c).copied(), params.cells_per_bin)))
        .collect();
    let test = cell_histogram(&lat, completed.iter().take(params.test_count).copied(), params.cells_per_bin);
    let chi = chi_square(&test, &born, 5.0)?;
    let fringes = match_fringes(&test, &born);
    Ok(DoubleSlitOutcome {
        arrivals,
        excluded: run.excluded,
        bin_left,
        born,
        histograms,
        chi_square: chi,
        fringes,
    })
}
