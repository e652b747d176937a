use anyhow::Result;
use bqed_core::bohm_dynamics::{bell_jump_simulate, pair_coupling_count, pair_toy, JumpModel};
use serde_json::json;

use super::{norm_drift, within_sigmas};
use crate::artifacts::ArtifactSink;
use crate::config::ExperimentConfig;
use crate::manifest::Check;

/// Runs of the lambda = 0 control.
const CONTROL_RUNS: usize = 1000;

fn joined(sites: &[usize]) -> String {
    sites.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";")
}

pub fn run(cfg: &ExperimentConfig, sink: &mut ArtifactSink, checks: &mut Vec<Check>) -> Result<()> {
    let s = cfg.pair_jumps.clone().unwrap_or_default();
    let t_end = cfg.numerics.time.unwrap_or_default();
    let runs = cfg.numerics.ensemble.unwrap_or_default();
    let (sites, a, mass) = (cfg.lattice.sites, cfg.lattice.spacing, cfg.physics.mass);

    let (ham, psi) = pair_toy(sites, a, mass, cfg.physics.lambda, s.drive)?;
    let model = JumpModel::new(&ham, &psi)?;
    let stats = bell_jump_simulate(&model, 0, t_end, &s.checkpoints, runs, cfg.seed)?;

    let mut rows = Vec::new();
    let mut all_within = true;
    let mut worst = 0.0f64;
    for (k, &t) in s.checkpoints.iter().enumerate() {
        let exact = model.sector_probabilities(t);
        for (&(m, n), &p) in &exact {
            let count = stats.sector_counts[k].get(&(m, n)).copied().unwrap_or(0);
            let freq = count as f64 / runs as f64;
            let se = (p * (1.0 - p) / runs as f64).sqrt();
            all_within &= within_sigmas(freq, p, runs, 3.0);
            if se > 0.0 {
                worst = worst.max((freq - p).abs() / se);
            }
            rows.push(vec![
                k.to_string(),
                t.to_string(),
                m.to_string(),
                n.to_string(),
                count.to_string(),
                freq.to_string(),
                p.to_string(),
                se.to_string(),
            ]);
        }
        // sectors the exact evolution never reaches must stay empty
        for (&sector, &count) in &stats.sector_counts[k] {
            if !exact.contains_key(&sector) && count > 0 {
                all_within = false;
            }
        }
    }
    sink.csv(
        "sectors.csv",
        &["checkpoint", "time", "electrons", "photons", "count", "frequency", "exact", "standard_error"],
        rows,
    )?;
    let mut events = Vec::new();
    for (r, evs) in stats.events.iter().take(s.recorded).enumerate() {
        for e in evs {
            events.push(vec![
                r.to_string(),
                e.time.to_string(),
                e.pre_sector.0.to_string(),
                e.pre_sector.1.to_string(),
                e.post_sector.0.to_string(),
                e.post_sector.1.to_string(),
                joined(&e.created),
                joined(&e.removed),
            ]);
        }
    }
    sink.csv(
        "jumps.csv",
        &["run", "time", "pre_electrons", "pre_photons", "post_electrons", "post_photons", "created", "removed"],
        events,
    )?;

    let (ham0, psi0) = pair_toy(sites, a, mass, 0.0, s.drive)?;
    let control = bell_jump_simulate(&JumpModel::new(&ham0, &psi0)?, 0, t_end, &s.checkpoints, CONTROL_RUNS, cfg.seed)?;
    let expected_up = model.expected_up_jumps(t_end, 2000);
    let mean_up = stats.mean_up_jumps();
    let se_up = stats.up_jump_standard_error();
    let drift = norm_drift(1.0, model.state(t_end).iter().map(|c| c.norm_sqr()).sum());

    checks.push(Check::below("norm_drift", drift, 1e-8));
    checks.push(Check::flag("sectors_within_3_se", all_within, "every sector at every checkpoint within 3 standard errors"));
    checks.push(Check::at_least("pair_couplings", pair_coupling_count(&ham) as f64, if cfg.physics.lambda > 0.0 { 1.0 } else { 0.0 }));
    checks.push(Check::below("lambda_zero_jumps", control.total_jumps as f64, 0.5));
    if model.hamiltonian_is_real() {
        checks.push(Check::below("time_reversal_residual", model.time_reversal_residual(t_end), 1e-12));
    }
    sink.json(
        "summary.json",
        &json!({
            "runs": runs,
            "time": t_end,
            "checkpoints": s.checkpoints,
            "total_jumps": stats.total_jumps,
            "mean_up_jumps": mean_up,
            "up_jump_standard_error": se_up,
            "expected_up_jumps": expected_up,
            "worst_sector_deviation_in_se": worst,
            "lambda_zero_runs": CONTROL_RUNS,
            "lambda_zero_jumps": control.total_jumps,
            "norm_drift": drift,
        }),
    )?;
    Ok(())
}
