//! Experiment configuration: a strict TOML schema with documented defaults.

use std::fmt;
use std::path::Path;

use bqed_core::locality_lab::PotentialFamily;
use serde::{Deserialize, Serialize};

/// Names accepted in the `experiment` key.
pub const EXPERIMENTS: [&str; 7] = [
    "double_slit",
    "equivariance",
    "pair_jumps",
    "charges",
    "locality",
    "hs_scan",
    "sectors_demo",
];

pub const DEFAULT_FRAME_STRIDE: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub lattice: LatticeSection,
    pub physics: PhysicsSection,
    #[serde(default)]
    pub truncation: TruncationSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub double_slit: Option<DoubleSlitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivariance: Option<EquivarianceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_jumps: Option<PairJumpsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charges: Option<ChargesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locality: Option<LocalitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hs_scan: Option<HsScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sectors_demo: Option<SectorsDemoSection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub sites: usize,
    pub spacing: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub mass: f64,
    #[serde(default = "default_charge")]
    pub charge: f64,
    /// Smearing width; defaults to two lattice spacings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Pair-term strength.
    #[serde(default)]
    pub lambda: f64,
}

fn default_charge() -> f64 {
    0.3
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub electrons: usize,
    pub photons: usize,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self { electrons: 1, photons: 0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// End time `T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    /// Integration steps per stored frame; defaults to 5.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DoubleSlitSection {
    pub width: f64,
    pub separation: f64,
    pub slits: usize,
    pub counts: Vec<usize>,
    pub cells_per_bin: usize,
    pub test_count: usize,
}

impl Default for DoubleSlitSection {
    fn default() -> Self {
        Self {
            width: 0.25,
            separation: 4.0,
            slits: 2,
            counts: vec![10, 100, 3000, 20_000, 70_000],
            cells_per_bin: 16,
            test_count: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquivarianceSection {
    pub width: f64,
    pub momentum: f64,
    /// Members whose full paths are written.
    pub recorded: usize,
}

impl Default for EquivarianceSection {
    fn default() -> Self {
        Self {
            width: 1.0,
            momentum: 1.0,
            recorded: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairJumpsSection {
    pub drive: f64,
    pub checkpoints: Vec<f64>,
    /// Runs whose events are written.
    pub recorded: usize,
}

impl Default for PairJumpsSection {
    fn default() -> Self {
        Self {
            drive: 1.0,
            checkpoints: vec![0.6, 1.2, 1.8, 2.4, 3.0],
            recorded: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChargesSection {
    pub cells: usize,
    pub samples: usize,
    /// Lattice of the one-particle conjugated-motion check.
    pub motion_sites: usize,
    pub motion_spacing: f64,
    pub step_height: f64,
    pub motion_time: f64,
}

impl Default for ChargesSection {
    fn default() -> Self {
        Self {
            cells: 2,
            samples: 10_000,
            motion_sites: 64,
            motion_spacing: 0.25,
            step_height: 0.8,
            motion_time: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalitySection {
    /// Sites of the half-domain box used for the localization defect.
    pub defect_sites: usize,
    pub sizes: Vec<usize>,
    /// Physical length of the refinement sequence.
    pub length: f64,
    pub box_width: f64,
    pub taper: f64,
    pub time: f64,
}

impl Default for LocalitySection {
    fn default() -> Self {
        Self {
            defect_sites: 64,
            sizes: vec![128, 256, 512],
            length: 25.6,
            box_width: 3.2,
            taper: 1.2,
            time: 3.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HsScanSection {
    pub family: PotentialFamily,
    pub sizes: Vec<usize>,
    /// Physical length of the scan; defaults to the lattice length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    pub heights: Vec<f64>,
}

impl Default for HsScanSection {
    fn default() -> Self {
        Self {
            family: PotentialFamily::Step { height: 1.0 },
            sizes: vec![32, 64, 128, 256],
            length: None,
            heights: vec![0.25, 0.5, 1.0, 2.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SectorsDemoSection {
    pub width: f64,
    pub momentum: f64,
}

impl Default for SectorsDemoSection {
    fn default() -> Self {
        Self { width: 1.0, momentum: 1.0 }
    }
}

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub errors: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.errors.len())?;
        for e in &self.errors {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        errors: vec![format!("cannot read {}: {e}", path.display())],
    })?;
    parse_config(&text)
}

/// Parses, validates and fills defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError {
        errors: vec![e.to_string().trim().to_string()],
    })?;
    let errors = cfg.validate();
    if !errors.is_empty() {
        return Err(ConfigError { errors });
    }
    cfg.fill_defaults();
    Ok(cfg)
}

struct Checker(Vec<String>);

impl Checker {
    fn finite(&mut self, field: &str, v: f64) -> bool {
        if !v.is_finite() {
            self.0.push(format!("{field} must be finite (got {v})"));
            return false;
        }
        true
    }

    fn positive(&mut self, field: &str, v: f64) {
        if self.finite(field, v) && v <= 0.0 {
            self.0.push(format!("{field} must be > 0 (got {v})"));
        }
    }

    fn nonnegative(&mut self, field: &str, v: f64) {
        if self.finite(field, v) && v < 0.0 {
            self.0.push(format!("{field} must be >= 0 (got {v})"));
        }
    }

    fn require<T: Copy>(&mut self, field: &str, v: Option<T>) -> Option<T> {
        if v.is_none() {
            self.0.push(format!("{field} is required for this experiment"));
        }
        v
    }

    fn fail(&mut self, msg: String) {
        self.0.push(msg);
    }
}

fn power_of_two_lattice(c: &mut Checker, sites: usize, field: &str) {
    if sites < 8 || !sites.is_power_of_two() {
        c.fail(format!("{field} must be a power of two >= 8 (got {sites})"));
    }
}

impl ExperimentConfig {
    pub fn frame_stride(&self) -> usize {
        self.numerics.frame_stride.unwrap_or(DEFAULT_FRAME_STRIDE)
    }

    pub fn epsilon(&self) -> f64 {
        self.physics.epsilon.unwrap_or(2.0 * self.lattice.spacing)
    }

    /// All validation problems; empty if the config is usable.
    pub fn validate(&self) -> Vec<String> {
        let mut c = Checker(Vec::new());
        let name = self.experiment.as_str();
        if !EXPERIMENTS.contains(&name) {
            c.fail(format!("experiment: unknown name '{name}' (expected one of {})", EXPERIMENTS.join(", ")));
        }
        c.positive("lattice.spacing", self.lattice.spacing);
        c.nonnegative("physics.mass", self.physics.mass);
        c.finite("physics.charge", self.physics.charge);
        c.nonnegative("physics.lambda", self.physics.lambda);
        if let Some(eps) = self.physics.epsilon {
            c.positive("physics.epsilon", eps);
        }
        if let Some(dt) = self.numerics.dt {
            c.positive("numerics.dt", dt);
        }
        if let Some(t) = self.numerics.time {
            c.nonnegative("numerics.time", t);
        }
        if let Some(s) = self.numerics.frame_stride {
            if !(1..=5).contains(&s) {
                c.fail(format!("numerics.frame_stride must be between 1 and 5 (got {s})"));
            }
        }
        if self.numerics.ensemble == Some(0) {
            c.fail("numerics.ensemble must be > 0".into());
        }
        if matches!(name, "double_slit" | "equivariance" | "sectors_demo") {
            c.require("numerics.dt", self.numerics.dt);
        }
        if matches!(name, "double_slit" | "equivariance" | "pair_jumps" | "sectors_demo") {
            c.require("numerics.time", self.numerics.time);
        }
        if matches!(name, "double_slit" | "equivariance" | "locality" | "hs_scan" | "sectors_demo") {
            power_of_two_lattice(&mut c, self.lattice.sites, "lattice.sites");
        }
        let massive = matches!(name, "double_slit" | "equivariance" | "charges" | "locality" | "hs_scan");
        if massive && self.physics.mass.is_finite() && self.physics.mass <= 0.0 {
            c.fail("physics.mass must be > 0 for the energy split used by this experiment".into());
        }
        self.check_sections(&mut c, name);
        c.0
    }

    fn check_sections(&self, c: &mut Checker, name: &str) {
        let present = [
            ("double_slit", self.double_slit.is_some()),
            ("equivariance", self.equivariance.is_some()),
            ("pair_jumps", self.pair_jumps.is_some()),
            ("charges", self.charges.is_some()),
            ("locality", self.locality.is_some()),
            ("hs_scan", self.hs_scan.is_some()),
            ("sectors_demo", self.sectors_demo.is_some()),
        ];
        for (section, here) in present {
            if here && section != name {
                c.fail(format!("[{section}] does not apply to experiment '{name}'"));
            }
        }
        match name {
            "double_slit" => {
                let s = self.double_slit.clone().unwrap_or_default();
                c.positive("double_slit.width", s.width);
                c.nonnegative("double_slit.separation", s.separation);
                if !(1..=2).contains(&s.slits) {
                    c.fail(format!("double_slit.slits must be 1 or 2 (got {})", s.slits));
                }
                if s.counts.is_empty() || s.counts.contains(&0) {
                    c.fail("double_slit.counts must be a nonempty list of positive counts".into());
                }
                if s.cells_per_bin == 0 || self.lattice.sites % s.cells_per_bin.max(1) != 0 {
                    c.fail(format!("double_slit.cells_per_bin must divide lattice.sites (got {})", s.cells_per_bin));
                }
                if s.test_count == 0 {
                    c.fail("double_slit.test_count must be > 0".into());
                }
            }
            "equivariance" => {
                let s = self.equivariance.clone().unwrap_or_default();
                c.positive("equivariance.width", s.width);
                c.finite("equivariance.momentum", s.momentum);
                c.require("numerics.ensemble", self.numerics.ensemble);
            }
            "pair_jumps" => {
                let s = self.pair_jumps.clone().unwrap_or_default();
                c.finite("pair_jumps.drive", s.drive);
                c.require("numerics.ensemble", self.numerics.ensemble);
                if !(2..=3).contains(&self.lattice.sites) {
                    c.fail(format!("lattice.sites must be 2 or 3 for the pair toy (got {})", self.lattice.sites));
                }
                let end = self.numerics.time.unwrap_or(f64::INFINITY);
                if s.checkpoints.is_empty() || s.checkpoints.iter().any(|&t| !(t.is_finite() && t >= 0.0 && t <= end)) {
                    c.fail("pair_jumps.checkpoints must be times within [0, numerics.time]".into());
                }
            }
            "charges" => {
                let s = self.charges.clone().unwrap_or_default();
                if !(2..=bqed_core::sea_models::MAX_FOCK_SITES).contains(&self.lattice.sites) {
                    c.fail(format!(
                        "lattice.sites must be between 2 and {} for the Fock models (got {})",
                        bqed_core::sea_models::MAX_FOCK_SITES,
                        self.lattice.sites
                    ));
                }
                if s.cells == 0 || s.cells > self.lattice.sites {
                    c.fail(format!("charges.cells must be between 1 and lattice.sites (got {})", s.cells));
                }
                if s.samples == 0 {
                    c.fail("charges.samples must be > 0".into());
                }
                if self.physics.charge == 0.0 {
                    c.fail("physics.charge must be nonzero for charge operators".into());
                }
                power_of_two_lattice(c, s.motion_sites, "charges.motion_sites");
                c.positive("charges.motion_spacing", s.motion_spacing);
                c.finite("charges.step_height", s.step_height);
                c.nonnegative("charges.motion_time", s.motion_time);
            }
            "locality" => {
                let s = self.locality.clone().unwrap_or_default();
                power_of_two_lattice(c, s.defect_sites, "locality.defect_sites");
                for &l in &s.sizes {
                    power_of_two_lattice(c, l, "locality.sizes");
                }
                c.positive("locality.length", s.length);
                c.positive("locality.box_width", s.box_width);
                c.nonnegative("locality.taper", s.taper);
                c.nonnegative("locality.time", s.time);
                if s.time >= s.length / 2.0 {
                    c.fail("locality.time must be below half of locality.length".into());
                }
            }
            "hs_scan" => {
                let s = self.hs_scan.clone().unwrap_or_default();
                for &l in &s.sizes {
                    power_of_two_lattice(c, l, "hs_scan.sizes");
                }
                if let Some(len) = s.length {
                    c.positive("hs_scan.length", len);
                }
                for &h in &s.heights {
                    c.finite("hs_scan.heights", h);
                }
            }
            "sectors_demo" => {
                let s = self.sectors_demo.clone().unwrap_or_default();
                c.positive("sectors_demo.width", s.width);
                c.finite("sectors_demo.momentum", s.momentum);
                if self.truncation.electrons == 0 {
                    c.fail("truncation.electrons must be >= 1".into());
                }
            }
            _ => {}
        }
    }

    /// Writes every documented default into the config so the echo is complete.
    pub fn fill_defaults(&mut self) {
        self.physics.epsilon = Some(self.epsilon());
        self.numerics.frame_stride = Some(self.frame_stride());
        match self.experiment.as_str() {
            "double_slit" => {
                let s = self.double_slit.get_or_insert_with(Default::default);
                if self.numerics.ensemble.is_none() {
                    self.numerics.ensemble = Some(s.counts.iter().copied().max().unwrap_or(0).max(s.test_count));
                }
            }
            "equivariance" => {
                self.equivariance.get_or_insert_with(Default::default);
            }
            "pair_jumps" => {
                self.pair_jumps.get_or_insert_with(Default::default);
            }
            "charges" => {
                self.charges.get_or_insert_with(Default::default);
            }
            "locality" => {
                self.locality.get_or_insert_with(Default::default);
            }
            "hs_scan" => {
                let len = self.lattice.sites as f64 * self.lattice.spacing;
                let s = self.hs_scan.get_or_insert_with(Default::default);
                s.length.get_or_insert(len);
            }
            "sectors_demo" => {
                self.sectors_demo.get_or_insert_with(Default::default);
            }
            _ => {}
        }
    }

    /// Canonical TOML form, used for the echo and the replay.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
