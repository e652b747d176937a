use std::sync::Arc;

use anyhow::Result;
use bqed_core::bohm_dynamics::{double_slit_experiment, integrate, sample_initial, DoubleSlitParams, Guidance};
use bqed_core::fock_sectors::{build_sector_space, SectorState, Truncation};
use bqed_core::lattice_core::DiracOperator;
use serde_json::json;

use super::spinor_drift;
use crate::artifacts::ArtifactSink;
use crate::config::ExperimentConfig;
use crate::manifest::Check;

/// Members whose full paths go to `trajectories.csv`.
const TRAJECTORY_SAMPLE: usize = 40;

pub fn params(cfg: &ExperimentConfig) -> DoubleSlitParams {
    let s = cfg.double_slit.clone().unwrap_or_default();
    DoubleSlitParams {
        sites: cfg.lattice.sites,
        spacing: cfg.lattice.spacing,
        mass: cfg.physics.mass,
        width: s.width,
        separation: s.separation,
        slits: s.slits,
        screen_time: cfg.numerics.time.unwrap_or_default(),
        dt: cfg.numerics.dt.unwrap_or_default(),
        frame_stride: cfg.frame_stride(),
        cells_per_bin: s.cells_per_bin,
        test_count: s.test_count,
        max_excluded_percent: 1.0,
    }
}

pub fn run(cfg: &ExperimentConfig, sink: &mut ArtifactSink, checks: &mut Vec<Check>) -> Result<()> {
    let p = params(cfg);
    let counts = cfg.double_slit.clone().unwrap_or_default().counts;
    let out = double_slit_experiment(&p, &counts, cfg.seed)?;
    let t = p.screen_time;

    sink.csv(
        "arrivals.csv",
        &["member", "time", "position"],
        out.arrivals
            .iter()
            .enumerate()
            .filter_map(|(i, x)| x.map(|x| vec![i.to_string(), t.to_string(), x.to_string()])),
    )?;
    for (count, hist) in &out.histograms {
        sink.csv(
            &format!("histogram_{count}.csv"),
            &["bin_left", "count"],
            out.bin_left.iter().zip(hist).map(|(b, c)| vec![b.to_string(), c.to_string()]),
        )?;
    }
    sink.csv(
        "born.csv",
        &["bin_left", "probability"],
        out.bin_left.iter().zip(&out.born).map(|(b, q)| [*b, *q]),
    )?;

    // a few full paths for the spacetime picture, same streams as the arrivals
    let lat = p.lattice()?;
    let op = DiracOperator::free(lat, p.mass)?;
    let field = p.initial_field(&op)?;
    let frame_dt = p.dt * p.frame_stride as f64;
    let space = Arc::new(build_sector_space(lat, Truncation::new(1, 0))?);
    let guidance = Guidance::from_dirac_in(space.clone(), &op, &field, frame_dt, (t / frame_dt).ceil() as usize)?;
    let start = SectorState::from_spinor(space, &field)?;
    let sample = sample_initial(&start, TRAJECTORY_SAMPLE.min(out.arrivals.len()), cfg.seed)?;
    let mut rows = Vec::new();
    for (i, q0) in sample.iter().enumerate() {
        if let Ok(tr) = integrate(&guidance, q0, p.dt, t, p.frame_stride) {
            for (time, pos) in tr.times.iter().zip(&tr.positions) {
                rows.push(vec![i.to_string(), time.to_string(), pos[0].to_string()]);
            }
        }
    }
    sink.csv("trajectories.csv", &["member", "time", "position"], rows)?;

    let drift = spinor_drift(&field, &op.evolve(&field, t)?);
    checks.push(Check::below("norm_drift", drift, 1e-8));
    checks.push(Check::above("chi_square_p_value", out.chi_square.p_value, 0.01));
    checks.push(Check::flag("fringes_within_one_bin", out.fringes.within(1), "every Born maximum matched within 1 bin"));
    checks.push(Check::at_least("born_maxima", out.fringes.born_peaks.len() as f64, p.slits as f64));
    checks.push(Check::flag(
        "histogram_files",
        out.histograms.len() == counts.len(),
        "one histogram per configured count",
    ));
    sink.json(
        "summary.json",
        &json!({
            "units": "hbar = c = 1; positions in the same length unit as the lattice spacing, times in length units",
            "screen_time": t,
            "counts": counts,
            "members": out.arrivals.len(),
            "excluded": out.excluded,
            "test_count": p.test_count,
            "chi_square": {
                "statistic": out.chi_square.statistic,
                "dof": out.chi_square.dof,
                "p_value": out.chi_square.p_value,
            },
            "born_peaks": out.fringes.born_peaks,
            "histogram_peaks": out.fringes.histogram_peaks,
            "max_peak_offset": out.fringes.max_offset,
            "norm_drift": drift,
        }),
    )?;
    Ok(())
}
