use std::collections::BTreeMap;

use anyhow::Result;
use bqed_core::lattice_core::{build_dirac, spectral_split, ChargeConjugation, Lattice1D, SpinorField};
use bqed_core::sea_models::{
    charge_operator, charge_operator_empty, contiguous_cells, hole_map, joint_spectral_weights, positron_motion_check,
    positron_motion_check_with, sample_signed_config, step_potential, total_charge, variance, FockBasis, FockOperator,
    SeaConvention,
};
use num_complex::Complex64;
use serde_json::json;

use super::within_sigmas;
use crate::artifacts::ArtifactSink;
use crate::config::ExperimentConfig;
use crate::manifest::Check;

fn tuple(z: &[i64]) -> String {
    z.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

fn max_commutator(ops: &[FockOperator]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            worst = worst.max(ops[i].commutator_norm(&ops[j]));
        }
    }
    worst
}

pub fn run(cfg: &ExperimentConfig, sink: &mut ArtifactSink, checks: &mut Vec<Check>) -> Result<()> {
    let s = cfg.charges.clone().unwrap_or_default();
    let sites = cfg.lattice.sites;
    let e = cfg.physics.charge;
    let lat = Lattice1D::small(sites, cfg.lattice.spacing)?;
    let basis = FockBasis::new(lat, cfg.physics.mass, e, SeaConvention::FilledSea)?;
    let cells = contiguous_cells(sites, s.cells)?;
    let ops: Vec<FockOperator> = cells.iter().map(|c| charge_operator(&basis, c)).collect::<Result<_, _>>()?;

    // spectra: every eigenvalue should be an integer multiple of e
    let mut rows = Vec::new();
    let mut worst_integer = 0.0f64;
    for (c, q) in ops.iter().enumerate() {
        for (i, v) in q.eigenvalues()?.into_iter().enumerate() {
            let z = v / e;
            let dev = (v - z.round() * e).abs();
            worst_integer = worst_integer.max(dev);
            rows.push(vec![c.to_string(), i.to_string(), v.to_string(), z.to_string(), (z.round() as i64).to_string(), dev.to_string()]);
        }
    }
    sink.csv("spectra.csv", &["cell", "index", "eigenvalue", "eigenvalue_over_e", "nearest_integer", "deviation"], rows)?;

    let singles: Vec<FockOperator> = (0..sites).map(|x| charge_operator(&basis, &[x])).collect::<Result<_, _>>()?;
    let commutator = max_commutator(&ops).max(max_commutator(&singles));

    let omega = basis.filled_vacuum();
    let expectation = ops.iter().map(|q| q.expectation(&omega).norm()).fold(0.0, f64::max);
    let min_variance = ops.iter().map(|q| variance(q, &omega)).fold(f64::INFINITY, f64::min);
    let total_variance = variance(&total_charge(&basis)?, &omega);

    // signed configurations against the dense spectral oracle
    let draws = sample_signed_config(&basis, &omega, &cells, s.samples, cfg.seed)?;
    sink.csv(
        "samples.csv",
        &["sample_id", "cell", "charge_integer"],
        draws
            .iter()
            .enumerate()
            .flat_map(|(i, d)| d.cell_charges.iter().enumerate().map(move |(c, z)| [i as i64, c as i64, *z])),
    )?;
    let oracle = joint_spectral_weights(&basis, &omega, &cells, cfg.seed)?;
    let mut counts: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for d in &draws {
        *counts.entry(d.cell_charges.clone()).or_default() += 1;
    }
    let mut sampling_ok = counts.keys().all(|k| oracle.contains_key(k));
    let mut weight_rows = Vec::new();
    for (k, &p) in &oracle {
        let f = counts.get(k).copied().unwrap_or(0) as f64 / s.samples as f64;
        sampling_ok &= within_sigmas(f, p, s.samples, 3.0);
        let sigma = (p * (1.0 - p) / s.samples as f64).sqrt();
        weight_rows.push(vec![tuple(k), p.to_string(), f.to_string(), sigma.to_string()]);
    }
    sink.csv("weights.csv", &["cell_charges", "weight", "frequency", "sigma"], weight_rows)?;

    // hole map carries the filled-sea charges onto the empty-reference ones
    let w = hole_map(&basis);
    let mut intertwining = 0.0f64;
    for cell in &cells {
        let filled = charge_operator(&basis, cell)?;
        let empty = charge_operator_empty(&basis, cell)?;
        intertwining = intertwining.max(w.conjugate(&filled).sub(&empty).norm());
    }

    // one-particle conjugated motion in a step potential, with a broken conjugation as control
    let mlat = Lattice1D::new(s.motion_sites, s.motion_spacing)?;
    let op = build_dirac(mlat, cfg.physics.mass, e, &step_potential(s.motion_sites, s.step_height))?;
    let g = SpinorField::gaussian(mlat, mlat.length() / 4.0, 1.0, 1.0, [Complex64::new(0.2, 0.0), Complex64::new(1.0, 0.0)]);
    let packet = spectral_split(&op.free_part())?.apply_minus(&g).normalized();
    let motion = positron_motion_check(&op, &packet, s.motion_time)?;
    let broken = ChargeConjugation::with_matrix(bqed_core::lattice_core::spinor::BETA);
    let control = positron_motion_check_with(&broken, &op, &packet, s.motion_time)?;

    checks.push(Check::below("eigenvalue_integrality", worst_integer, 1e-10));
    checks.push(Check::below("commutators", commutator, 1e-12));
    checks.push(Check::below("vacuum_expectation", expectation, 1e-12));
    checks.push(Check::above("vacuum_variance", min_variance, 0.0));
    checks.push(Check::flag("sampling_within_3_sigma", sampling_ok, "every outcome within 3 binomial sigma of the dense weight"));
    checks.push(Check::below("hole_map_intertwining", intertwining, 1e-12));
    checks.push(Check::below("positron_motion_deviation", motion.deviation, 1e-9));
    checks.push(Check::above("broken_conjugation_deviation", control.deviation, 1e-3));
    sink.json(
        "summary.json",
        &json!({
            "sites": sites,
            "fock_dimension": basis.dim(),
            "cells": cells,
            "charge": e,
            "max_integer_deviation": worst_integer,
            "max_commutator": commutator,
            "max_vacuum_expectation": expectation,
            "min_vacuum_variance": min_variance,
            "total_charge_variance": total_variance,
            "samples": s.samples,
            "outcomes": oracle.len(),
            "hole_map_intertwining": intertwining,
            "positron_motion": motion,
            "broken_conjugation": control,
        }),
    )?;
    Ok(())
}
