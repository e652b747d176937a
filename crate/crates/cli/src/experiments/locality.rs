use anyhow::Result;
use bqed_core::lattice_core::{spectral_split, DiracOperator, Lattice1D, SpinorField};
use bqed_core::locality_lab::{
    leakage_refinement, localization_defect, smooth_box, superluminal_tail_demo, LeakageSetup, LocalityReport, RegionMask,
};
use num_complex::Complex64;
use serde_json::json;

use crate::artifacts::ArtifactSink;
use crate::config::ExperimentConfig;
use crate::manifest::Check;

const UP: [Complex64; 2] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];

pub fn run(cfg: &ExperimentConfig, sink: &mut ArtifactSink, checks: &mut Vec<Check>) -> Result<()> {
    let s = cfg.locality.clone().unwrap_or_default();
    let mass = cfg.physics.mass;

    // box filling the left half of the domain, region the same half
    let dlat = Lattice1D::new(s.defect_sites, cfg.lattice.spacing)?;
    let dop = DiracOperator::free(dlat, mass)?;
    let half: Vec<usize> = (0..s.defect_sites / 2).collect();
    let region = RegionMask::from_sites(&dlat, &half)?;
    let edge = (dlat.length() - dlat.spacing()) / 2.0;
    let packet = SpinorField::from_fn(dlat, |x| if x < edge { UP } else { [Complex64::new(0.0, 0.0); 2] });
    let projectors = spectral_split(&dop)?;
    let defect = localization_defect(&projectors, &packet, &region)?;
    let projected = projectors.apply_plus(&packet);
    sink.csv(
        "defect_profile.csv",
        &["site", "position", "packet_density", "projected_density", "in_region"],
        packet.density().iter().zip(projected.density()).enumerate().map(|(i, (d, p))| {
            vec![
                i.to_string(),
                dlat.position(i).to_string(),
                d.to_string(),
                p.to_string(),
                u8::from(region.contains(i)).to_string(),
            ]
        }),
    )?;

    let setup = LeakageSetup {
        length: s.length,
        mass,
        box_width: s.box_width,
        taper: s.taper,
        time: s.time,
    };
    let refinement = leakage_refinement(&setup, &s.sizes)?;
    sink.csv(
        "refinement.csv",
        &["sites", "spacing", "leakage"],
        refinement.iter().map(|&(l, v)| vec![l.to_string(), (s.length / l as f64).to_string(), v.to_string()]),
    )?;

    // sharp box of width La/8, evolved for La/8
    let lat = Lattice1D::new(cfg.lattice.sites, cfg.lattice.spacing)?;
    let op = DiracOperator::free(lat, mass)?;
    let len = lat.length();
    let sharp = smooth_box(&lat, len / 2.0, len / 8.0, 0.0, UP);
    let tail_region = RegionMask::interval(&lat, len / 2.0, len / 16.0)?;
    let tail = superluminal_tail_demo(&op, &sharp, &tail_region, len / 8.0)?;

    let report = LocalityReport {
        outside_mass: defect,
        lightcone_leakage: refinement.last().map(|r| r.1).unwrap_or(0.0),
        refinement,
    };
    checks.push(Check::above("localization_defect", defect, 1e-6));
    checks.push(Check::flag("leakage_decreases", report.refinement_decreases(), "strictly decreasing over the refinement sizes"));
    checks.push(Check::at_least("tail_ratio", tail.ratio, 10.0));
    sink.json(
        "report.json",
        &json!({
            "defect_sites": s.defect_sites,
            "refinement_setup": setup,
            "locality": report,
            "tail": tail,
            "tail_setup": { "sites": lat.num_sites(), "spacing": lat.spacing(), "box_width": len / 8.0, "time": len / 8.0 },
        }),
    )?;
    Ok(())
}
