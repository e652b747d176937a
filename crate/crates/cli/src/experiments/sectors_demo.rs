use std::sync::Arc;

use anyhow::Result;
use bqed_core::fock_sectors::{
    build_sector_space, evolve_sectors, multitime_consistency, write_sector_state, CouplingKernel, PairKernel, SectorHamiltonian,
    SectorState, Truncation,
};
use bqed_core::lattice_core::{DiracOperator, Lattice1D};
use bqed_core::linalg::hermiticity_residual;
use bqed_core::rng::stream;
use num_complex::Complex64;
use rand::Rng;
use serde_json::json;

use super::equivariance::packet;
use super::norm_drift;
use crate::artifacts::ArtifactSink;
use crate::config::ExperimentConfig;
use crate::manifest::Check;

/// Dense hermiticity check only below this dimension.
const DENSE_CHECK_DIM: usize = 2048;
/// Dense spectrum comparison only up to this many sites.
const SPECTRUM_SITES: usize = 64;

pub fn run(cfg: &ExperimentConfig, sink: &mut ArtifactSink, checks: &mut Vec<Check>) -> Result<()> {
    let s = cfg.sectors_demo.clone().unwrap_or_default();
    let (dt, t_end) = (cfg.numerics.dt.unwrap_or_default(), cfg.numerics.time.unwrap_or_default());
    let lat = Lattice1D::new(cfg.lattice.sites, cfg.lattice.spacing)?;
    let tr = Truncation::new(cfg.truncation.electrons, cfg.truncation.photons);
    let space = Arc::new(build_sector_space(lat, tr)?);
    let op = DiracOperator::free(lat, cfg.physics.mass)?;
    let eps = cfg.epsilon();
    let coupling = CouplingKernel::new(&lat, cfg.physics.charge, eps)?;
    let pairs = PairKernel::new(cfg.physics.lambda, eps)?;
    let ham = SectorHamiltonian::new(space.clone(), &op, Some(coupling), Some(pairs))?;

    let field = packet(&op, s.width, s.momentum)?;
    let start = SectorState::from_spinor(space.clone(), &field)?;
    let e0 = ham.energy(&start);
    let frame_dt = dt * cfg.frame_stride() as f64;
    let mut times = vec![0.0];
    let mut k = 1;
    while times.last().copied().unwrap_or(0.0) < t_end {
        times.push((k as f64 * frame_dt).min(t_end));
        k += 1;
    }
    let mut frames = vec![start.clone()];
    for w in times.windows(2) {
        let next = evolve_sectors(frames.last().expect("nonempty"), &ham, w[1] - w[0])?;
        frames.push(next);
    }
    let mut norm_rows = Vec::new();
    let mut energy_rows = Vec::new();
    let mut drift = 0.0f64;
    let mut energy_drift = 0.0f64;
    for (t, f) in times.iter().zip(&frames) {
        for ((m, n), p) in f.sector_norms() {
            norm_rows.push(vec![t.to_string(), m.to_string(), n.to_string(), p.to_string()]);
        }
        let e = ham.energy(f);
        drift = drift.max(norm_drift(start.norm_sq(), f.norm_sq()));
        energy_drift = energy_drift.max((e - e0).abs());
        energy_rows.push([*t, f.norm_sq(), e]);
    }
    sink.csv("sector_norms.csv", &["time", "electrons", "photons", "probability"], norm_rows)?;
    sink.csv("energy.csv", &["time", "norm", "energy"], energy_rows)?;
    let last = frames.last().expect("nonempty");
    write_sector_state(last, sink.dir(), "state_final")?;
    sink.adopt("state_final.json")?;
    for info in space.sectors() {
        sink.adopt(&format!("state_final_m{}_n{}.csv", info.electrons, info.photons))?;
    }

    let hermiticity = (ham.dim() <= DENSE_CHECK_DIM).then(|| hermiticity_residual(&ham.dense()));

    // without photon slots the sector evolution is the one-particle evolution
    let one = Arc::new(build_sector_space(lat, Truncation::new(1, 0))?);
    let one_ham = SectorHamiltonian::new(one.clone(), &op, Some(CouplingKernel::new(&lat, cfg.physics.charge, eps)?), None)?;
    let reduced = evolve_sectors(&SectorState::from_spinor(one, &field)?, &one_ham, t_end)?.to_spinor()?;
    let reduction = reduced.sub(&op.evolve(&field, t_end)?).norm();

    // two slot evolutions commute for a free pair state
    let two = Arc::new(build_sector_space(lat, Truncation::new(2, 0))?);
    let mut pair = SectorState::zeros(two.clone());
    let info = *two.sector(2, 0).expect("two-electron sector");
    let mut rng = stream(cfg.seed, "two-time", 0);
    for c in &mut pair.amplitudes_mut()[info.offset..info.offset + info.dim()] {
        *c = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    }
    let two_time = multitime_consistency(&pair.normalized(), &op, dt)?;

    let spectrum = (lat.num_sites() <= SPECTRUM_SITES).then(|| {
        let mut dense = op.dense_spectrum();
        let mut exact = DiracOperator::free_spectrum(&lat, op.mass());
        dense.sort_by(f64::total_cmp);
        exact.sort_by(f64::total_cmp);
        let diff = dense.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let gap = dense.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
        (diff, gap)
    });

    checks.push(Check::below("norm_drift", drift, 1e-8));
    if let Some(h) = hermiticity {
        checks.push(Check::below("hermiticity_residual", h, 1e-12));
    }
    checks.push(Check::below("no_photon_reduction", reduction, 1e-10));
    checks.push(Check::below("two_time_residual", two_time, 1e-10));
    if let Some((diff, gap)) = spectrum {
        checks.push(Check::below("free_spectrum", diff, 1e-10));
        checks.push(Check::below("spectral_gap_vs_mass", (gap - op.mass()).abs(), 1e-10));
    }
    sink.json(
        "summary.json",
        &json!({
            "dimension": ham.dim(),
            "truncation": tr,
            "epsilon": eps,
            "lambda": cfg.physics.lambda,
            "frames": times.len(),
            "max_norm_drift": drift,
            "max_energy_drift": energy_drift,
            "hermiticity_residual": hermiticity,
            "no_photon_reduction": reduction,
            "two_time_residual": two_time,
            "spectrum": spectrum.map(|(d, g)| json!({ "max_difference": d, "min_abs_energy": g })),
        }),
    )?;
    Ok(())
}
