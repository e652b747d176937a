//! Named experiments. Each one reads its config, writes artifacts through the
//! sink and returns the acceptance checks it embeds.

use anyhow::{bail, Result};
use bqed_core::lattice_core::SpinorField;

use crate::artifacts::ArtifactSink;
use crate::config::ExperimentConfig;
use crate::manifest::Check;

mod charges;
mod double_slit;
mod equivariance;
mod hs_scan;
mod locality;
mod pair_jumps;
mod sectors_demo;

/// Registry entry shown by `bqed list`.
pub struct ExperimentInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub parameters: &'static str,
}

pub const REGISTRY: [ExperimentInfo; 7] = [
    ExperimentInfo {
        name: "double_slit",
        summary: "Bohmian arrivals behind two slits, cumulative histograms against the Born bins",
        parameters: "lattice (power of two), physics.mass, numerics.dt/time/frame_stride; [double_slit] width, separation, slits, counts, cells_per_bin, test_count",
    },
    ExperimentInfo {
        name: "equivariance",
        summary: "Free Gaussian packet, ensemble transported to time T, KS distance to the Born marginal plus a v = 0 control",
        parameters: "lattice, physics.mass, numerics.dt/time/frame_stride/ensemble; [equivariance] width, momentum, recorded",
    },
    ExperimentInfo {
        name: "pair_jumps",
        summary: "Pair-creation jump process on a two- or three-site toy against the exact sector occupations",
        parameters: "lattice.sites in {2, 3}, physics.mass/lambda, numerics.time/ensemble; [pair_jumps] drive, checkpoints, recorded",
    },
    ExperimentInfo {
        name: "charges",
        summary: "Cell charge operators on a small Fock space: spectra, commutators, vacuum statistics and signed sampling",
        parameters: "lattice.sites <= 6, physics.mass/charge; [charges] cells, samples, motion_sites, motion_spacing, step_height, motion_time",
    },
    ExperimentInfo {
        name: "locality",
        summary: "Localization defect, light-cone leakage under refinement and the projected-packet tail",
        parameters: "lattice (tail setup), physics.mass; [locality] defect_sites, sizes, length, box_width, taper, time",
    },
    ExperimentInfo {
        name: "hs_scan",
        summary: "Hilbert-Schmidt norm of the off-diagonal potential block over cutoff and strength",
        parameters: "lattice, physics.mass/charge; [hs_scan] family, sizes, length, heights",
    },
    ExperimentInfo {
        name: "sectors_demo",
        summary: "Truncated sector evolution with emission and pair terms: sector norms, hermiticity and reductions",
        parameters: "lattice, physics (all), truncation, numerics.dt/time/frame_stride; [sectors_demo] width, momentum",
    },
];

pub fn execute(cfg: &ExperimentConfig, sink: &mut ArtifactSink, checks: &mut Vec<Check>) -> Result<()> {
    match cfg.experiment.as_str() {
        "double_slit" => double_slit::run(cfg, sink, checks),
        "equivariance" => equivariance::run(cfg, sink, checks),
        "pair_jumps" => pair_jumps::run(cfg, sink, checks),
        "charges" => charges::run(cfg, sink, checks),
        "locality" => locality::run(cfg, sink, checks),
        "hs_scan" => hs_scan::run(cfg, sink, checks),
        "sectors_demo" => sectors_demo::run(cfg, sink, checks),
        other => bail!("unknown experiment {other}"),
    }
}

/// `|<psi(t)|psi(t)> / <psi|psi> - 1|`.
pub(crate) fn norm_drift(before: f64, after: f64) -> f64 {
    (after / before - 1.0).abs()
}

pub(crate) fn spinor_drift(initial: &SpinorField, evolved: &SpinorField) -> f64 {
    norm_drift(initial.norm_sq(), evolved.norm_sq())
}

/// Binomial standard error of a frequency with probability `p` over `n` draws.
pub(crate) fn within_sigmas(freq: f64, p: f64, n: usize, sigmas: f64) -> bool {
    let se = (p * (1.0 - p) / n as f64).sqrt();
    if se == 0.0 {
        (freq - p).abs() < 1e-12
    } else {
        (freq - p).abs() <= sigmas * se
    }
}
