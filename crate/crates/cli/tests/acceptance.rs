//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs the reference configs in `configs/` through the runner and adds
//! direct core checks where no experiment covers a property. Exits nonzero
//! if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use bqed_cli::{load_config, replay, run_in, ExperimentConfig, RunOutcome, RunStatus};
use bqed_core::fock_sectors::{
    build_sector_space, evolve_sectors, CouplingKernel, PairKernel, SectorHamiltonian, SectorState, Truncation,
};
use bqed_core::lattice_core::{build_dirac, DiracOperator, Lattice1D, SpinorField};
use bqed_core::sea_models::step_potential;
use num_complex::Complex64;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn config(name: &str) -> ExperimentConfig {
    load_config(&config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

struct Timed {
    outcome: RunOutcome,
    elapsed: Duration,
    _dir: tempfile::TempDir,
}

fn execute(cfg: &ExperimentConfig) -> Timed {
    let dir = tempfile::tempdir().expect("tempdir");
    let start = Instant::now();
    let outcome = run_in(cfg, dir.path()).expect("manifest written");
    Timed {
        outcome,
        elapsed: start.elapsed(),
        _dir: dir,
    }
}

impl Timed {
    fn check(&self, name: &str) -> Option<&bqed_cli::Check> {
        self.outcome.manifest.checks.iter().find(|c| c.name == name)
    }

    /// All named checks passed; returns a detail string either way.
    fn require(&self, names: &[&str]) -> (bool, String) {
        let mut ok = self.outcome.manifest.status != RunStatus::Failed;
        let mut parts = Vec::new();
        if let Some(e) = &self.outcome.manifest.error {
            parts.push(format!("error: {e}"));
        }
        for n in names {
            match self.check(n) {
                Some(c) => {
                    ok &= c.passed;
                    parts.push(format!("{n}={:.3e} ({})", c.value, c.bound));
                }
                None => {
                    ok = false;
                    parts.push(format!("{n} missing"));
                }
            }
        }
        (ok, parts.join(", "))
    }
}

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: usize, title: &str, ok: bool, detail: &str) {
        if !ok {
            self.failed += 1;
        }
        println!("criterion {id:>2} [{}] {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn drift(a: f64, b: f64) -> f64 {
    (b / a - 1.0).abs()
}

fn unitarity() -> (bool, String) {
    let start = Instant::now();
    // one particle in a step potential
    let lat = Lattice1D::new(64, 0.25).unwrap();
    let op = build_dirac(lat, 1.0, 1.0, &step_potential(64, 0.8)).unwrap();
    let g = SpinorField::gaussian(lat, 6.0, 1.0, 1.5, [Complex64::new(1.0, 0.0), Complex64::new(0.3, -0.2)]).normalized();
    let one = drift(g.norm_sq(), op.evolve(&g, 5.0).unwrap().norm_sq());

    // sectors with emission, absorption and pair terms, dense and Krylov paths
    let mut sector = 0.0f64;
    for (sites, m, n) in [(8, 1, 1), (8, 2, 1)] {
        let lat = Lattice1D::new(sites, 1.0).unwrap();
        let sp = Arc::new(build_sector_space(lat, Truncation::new(m, n)).unwrap());
        let op = DiracOperator::free(lat, 1.0).unwrap();
        let ham = SectorHamiltonian::new(
            sp.clone(),
            &op,
            Some(CouplingKernel::with_default_width(&lat, 0.5).unwrap()),
            Some(PairKernel::new(0.3, 2.0).unwrap()),
        )
        .unwrap();
        let f = SpinorField::gaussian(lat, 4.0, 1.0, 0.8, [Complex64::new(1.0, 0.0), Complex64::new(0.2, 0.1)]).normalized();
        for st in [SectorState::from_spinor(sp.clone(), &f).unwrap(), SectorState::vacuum(sp.clone())] {
            let out = evolve_sectors(&st, &ham, 5.0).unwrap();
            sector = sector.max(drift(st.norm_sq(), out.norm_sq()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        one < 1e-8 && sector < 1e-8 && secs < 60.0,
        format!("one-particle drift {one:.2e}, sector drift {sector:.2e} (< 1e-8), {secs:.1} s (< 60 s)"),
    )
}

fn spectrum() -> (bool, String) {
    let mut worst = 0.0f64;
    let mut gap = 0.0f64;
    for l in [8, 16, 32, 64] {
        for mass in [0.5, 1.0, 2.0] {
            let lat = Lattice1D::new(l, 0.5).unwrap();
            let op = DiracOperator::free(lat, mass).unwrap();
            let mut dense = op.dense_spectrum();
            dense.sort_by(f64::total_cmp);
            let exact = DiracOperator::free_spectrum(&lat, mass);
            worst = worst.max(dense.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            let min = dense.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
            gap = gap.max((min - mass).abs());
        }
    }
    (
        worst < 1e-10 && gap < 1e-10,
        format!("max |E_dense - E_exact| {worst:.2e}, max |min|E| - m| {gap:.2e} (< 1e-10)"),
    )
}

fn main() -> ExitCode {
    let mut r = Report { failed: 0 };
    let total = Instant::now();

    let (ok, d) = unitarity();
    r.line(1, "unitarity", ok, &d);
    let (ok, d) = spectrum();
    r.line(2, "free spectrum", ok, &d);

    let charges = execute(&config("charges"));
    let (ok, d) = charges.require(&["positron_motion_deviation", "broken_conjugation_deviation"]);
    r.line(3, "conjugated motion", ok, &d);

    let mut three = config("charges");
    three.lattice.sites = 3;
    let charges3 = execute(&three);
    let names = [
        "eigenvalue_integrality",
        "commutators",
        "vacuum_expectation",
        "vacuum_variance",
        "sampling_within_3_sigma",
    ];
    let (ok4, d4) = charges.require(&names);
    let (ok3, d3) = charges3.require(&names);
    let secs = (charges.elapsed + charges3.elapsed).as_secs_f64();
    r.line(
        4,
        "charge operators",
        ok4 && ok3 && secs < 120.0,
        &format!("L_f=4: {d4}; L_f=3: {d3}; {secs:.1} s (< 120 s)"),
    );

    let eq = execute(&config("equivariance"));
    let (ok, d) = eq.require(&["ks_final", "ks_zero_velocity_control", "norm_drift"]);
    let secs = eq.elapsed.as_secs_f64();
    r.line(5, "equivariance", ok && secs < 300.0, &format!("{d}; {secs:.1} s (< 300 s)"));

    let ds_cfg = config("double_slit");
    let ds = execute(&ds_cfg);
    let (ok, d) = ds.require(&["chi_square_p_value", "fringes_within_one_bin", "histogram_files", "norm_drift"]);
    let histograms = ds.outcome.manifest.files.iter().filter(|f| f.name.starts_with("histogram_")).count();
    let secs = ds.elapsed.as_secs_f64();
    r.line(
        6,
        "double-slit build-up",
        ok && histograms == 5 && secs < 600.0,
        &format!("{d}; {histograms} histogram files; {secs:.1} s (< 600 s)"),
    );

    let pj = execute(&config("pair_jumps"));
    let (ok, d) = pj.require(&["sectors_within_3_se", "lambda_zero_jumps", "norm_drift"]);
    r.line(7, "jump process", ok, &d);

    let loc = execute(&config("locality"));
    let (ok, d) = loc.require(&["localization_defect", "leakage_decreases", "tail_ratio"]);
    r.line(8, "localization", ok, &d);

    let hs = execute(&config("hs_scan"));
    let (ok, d) = hs.require(&["dense_relative_difference", "zero_potential_exact", "constant_potential_exact"]);
    r.line(9, "off-diagonal Hilbert-Schmidt norm", ok, &d);

    let sd = execute(&config("sectors_demo"));
    let (ok, d) = sd.require(&["hermiticity_residual", "no_photon_reduction", "two_time_residual"]);
    r.line(10, "hermiticity and reductions", ok, &d);

    // same config and seed twice, plus replay of a finished run
    let mut same = true;
    let mut notes = Vec::new();
    for (name, first) in [("equivariance", &eq), ("pair_jumps", &pj), ("charges", &charges)] {
        let again = execute(&config(name));
        let a: BTreeMap<_, _> = first.outcome.manifest.files.iter().map(|f| (&f.name, &f.sha256)).collect();
        let b: BTreeMap<_, _> = again.outcome.manifest.files.iter().map(|f| (&f.name, &f.sha256)).collect();
        let equal = !a.is_empty() && a == b;
        same &= equal;
        notes.push(format!("{name} rerun {}", if equal { "identical" } else { "differs" }));
    }
    let manifest = pj.outcome.dir.join("manifest.json");
    let replayed = replay(&manifest, None).map(|rep| rep.all_match()).unwrap_or(false);
    let other_seed = replay(&manifest, Some(pj.outcome.manifest.seed + 1))
        .map(|rep| rep.mismatches().any(|f| f.name == "sectors.csv"))
        .unwrap_or(false);
    notes.push(format!("replay {}", if replayed { "all match" } else { "mismatch" }));
    notes.push(format!("other seed {}", if other_seed { "mismatch detected" } else { "not detected" }));
    r.line(11, "determinism", same && replayed && other_seed, &notes.join(", "));

    println!(
        "acceptance: {} of 11 criteria passed in {:.1} s",
        11 - r.failed,
        total.elapsed().as_secs_f64()
    );
    if r.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
