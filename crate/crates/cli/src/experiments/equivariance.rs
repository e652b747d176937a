use std::sync::Arc;

use anyhow::Result;
use bqed_core::bohm_dynamics::{born_marginal, equivariance_ks, integrate, run_ensemble, sample_initial, Guidance, ZeroVelocity};
use bqed_core::fock_sectors::{build_sector_space, SectorState, Truncation};
use bqed_core::lattice_core::{spectral_split, DiracOperator, Lattice1D, SpinorField};
use num_complex::Complex64;
use serde_json::json;

use super::spinor_drift;
use crate::artifacts::ArtifactSink;
use crate::config::ExperimentConfig;
use crate::manifest::Check;

pub const KS_LIMIT: f64 = 0.03;
pub const CONTROL_LIMIT: f64 = 0.1;

/// Positive-energy Gaussian packet centered in the domain.
pub fn packet(op: &DiracOperator, width: f64, momentum: f64) -> Result<SpinorField> {
    let lat = *op.lattice();
    let up = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let g = SpinorField::gaussian(lat, lat.length() / 2.0, width, momentum, up);
    Ok(spectral_split(op)?.apply_plus(&g).normalized())
}

fn position_rows(xs: &[f64], t: f64) -> impl Iterator<Item = Vec<String>> + '_ {
    xs.iter().enumerate().map(move |(i, x)| vec![i.to_string(), t.to_string(), x.to_string()])
}

pub fn run(cfg: &ExperimentConfig, sink: &mut ArtifactSink, checks: &mut Vec<Check>) -> Result<()> {
    let s = cfg.equivariance.clone().unwrap_or_default();
    let (dt, t) = (cfg.numerics.dt.unwrap_or_default(), cfg.numerics.time.unwrap_or_default());
    let n = cfg.numerics.ensemble.unwrap_or_default();
    let lat = Lattice1D::new(cfg.lattice.sites, cfg.lattice.spacing)?;
    let op = DiracOperator::free(lat, cfg.physics.mass)?;
    let field = packet(&op, s.width, s.momentum)?;
    let stride = cfg.frame_stride();
    let frame_dt = dt * stride as f64;
    let space = Arc::new(build_sector_space(lat, Truncation::new(1, 0))?);
    let guidance = Guidance::from_dirac_in(space.clone(), &op, &field, frame_dt, (t / frame_dt).ceil() as usize)?;
    let start = SectorState::from_spinor(space.clone(), &field)?;
    let evolved = op.evolve(&field, t)?;
    let end = SectorState::from_spinor(space, &evolved)?;

    let initial = sample_initial(&start, n, cfg.seed)?;
    let x0: Vec<f64> = initial.iter().map(|c| c.positions[0]).collect();
    let ks_initial = equivariance_ks(&x0, &start, 1)?;
    let run = run_ensemble(&guidance, &initial, dt, t)?;
    let xt: Vec<f64> = run.completed().map(|c| c.positions[0]).collect();
    let ks_final = equivariance_ks(&xt, &end, 1)?;
    let frozen = run_ensemble(&ZeroVelocity { lattice: lat, end: t }, &initial, dt, t)?;
    let xz: Vec<f64> = frozen.completed().map(|c| c.positions[0]).collect();
    let ks_control = equivariance_ks(&xz, &end, 1)?;

    sink.csv("initial.csv", &["member", "time", "position"], position_rows(&x0, 0.0))?;
    sink.csv(
        "final.csv",
        &["member", "time", "position"],
        run.finals
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.as_ref().map(|c| vec![i.to_string(), t.to_string(), c.positions[0].to_string()])),
    )?;
    let mut rows = Vec::new();
    for (i, q0) in initial.iter().take(s.recorded).enumerate() {
        if let Ok(tr) = integrate(&guidance, q0, dt, t, stride) {
            for (time, pos) in tr.times.iter().zip(&tr.positions) {
                rows.push(vec![i.to_string(), time.to_string(), pos[0].to_string()]);
            }
        }
    }
    sink.csv("trajectories.csv", &["member", "time", "position"], rows)?;
    let born = born_marginal(&end, 1)?;
    sink.csv(
        "born_final.csv",
        &["site", "position", "probability"],
        born.iter().enumerate().map(|(i, p)| vec![i.to_string(), lat.position(i).to_string(), p.to_string()]),
    )?;

    let drift = spinor_drift(&field, &evolved);
    checks.push(Check::below("norm_drift", drift, 1e-8));
    checks.push(Check::below("ks_final", ks_final, KS_LIMIT));
    checks.push(Check::above("ks_zero_velocity_control", ks_control, CONTROL_LIMIT));
    checks.push(Check::below("excluded_fraction", run.excluded as f64 / n as f64, 0.01));
    sink.json(
        "summary.json",
        &json!({
            "units": "hbar = c = 1; positions in the same length unit as the lattice spacing",
            "ensemble": n,
            "time": t,
            "excluded": run.excluded,
            "ks_initial": ks_initial,
            "ks_final": ks_final,
            "ks_zero_velocity_control": ks_control,
            "norm_drift": drift,
        }),
    )?;
    Ok(())
}
