//! Running an experiment into a fresh directory and replaying a finished run.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::artifacts::{sha256_file, ArtifactSink};
use crate::config::{parse_config, ExperimentConfig};
use crate::experiments;
use crate::manifest::{RunManifest, RunStatus, ECHO_NAME, MANIFEST_NAME, TOOL_VERSION};

pub const OUTPUT_ROOT_ENV: &str = "BQED_OUTPUT_ROOT";
pub const THREADS_ENV: &str = "BQED_THREADS";
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";

/// Where a run went and how it ended.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunOutcome {
    /// 0 when every check passed, 1 when some check failed, 2 on an error.
    pub fn exit_code(&self) -> i32 {
        match self.manifest.status {
            RunStatus::Ok => 0,
            RunStatus::ChecksFailed => 1,
            RunStatus::Running | RunStatus::Failed => 2,
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// `<experiment>-s<seed>-<first 8 hex of the config hash>`, suffixed if taken.
pub fn fresh_run_dir(root: &Path, cfg: &ExperimentConfig) -> Result<PathBuf> {
    let digest = hex::encode(Sha256::digest(cfg.to_toml().as_bytes()));
    let base = format!("{}-s{}-{}", cfg.experiment, cfg.seed, &digest[..8]);
    fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    for k in 1.. {
        let name = if k == 1 { base.clone() } else { format!("{base}-{k}") };
        let dir = root.join(name);
        // create_dir fails if another run already claimed the name
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
    unreachable!("unbounded suffix search")
}

/// Runs `cfg` into `dir`, which must exist. Module errors end up in the
/// manifest; only failures to write the manifest itself are returned as `Err`.
pub fn run_in(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutcome> {
    let echo = cfg.to_toml();
    let mut manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        experiment: cfg.experiment.clone(),
        seed: cfg.seed,
        config: echo.clone(),
        started: now(),
        finished: None,
        status: RunStatus::Running,
        error: None,
        checks: Vec::new(),
        files: Vec::new(),
    };
    let mut sink = ArtifactSink::new(dir)?;
    let result = sink
        .text(ECHO_NAME, &echo)
        .and_then(|()| experiments::execute(cfg, &mut sink, &mut manifest.checks));
    manifest.files = sink.files().to_vec();
    manifest.finished = Some(now());
    match result {
        Ok(()) => {
            manifest.status = if manifest.all_checks_pass() {
                RunStatus::Ok
            } else {
                RunStatus::ChecksFailed
            };
        }
        Err(e) => {
            log::error!("{} failed: {e:#}", cfg.experiment);
            manifest.status = RunStatus::Failed;
            manifest.error = Some(format!("{e:#}"));
        }
    }
    manifest.write_atomic(dir)?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        manifest,
    })
}

/// Runs `cfg` in a new directory under `root`.
pub fn run(cfg: &ExperimentConfig, root: &Path) -> Result<RunOutcome> {
    let dir = fresh_run_dir(root, cfg)?;
    log::info!("running {} into {}", cfg.experiment, dir.display());
    run_in(cfg, &dir)
}

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// Per-file outcome of a replay.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileComparison {
    pub name: String,
    pub recorded: Option<String>,
    pub on_disk: Option<String>,
    pub replayed: Option<String>,
}

impl FileComparison {
    pub fn matches(&self) -> bool {
        self.recorded.is_some() && self.recorded == self.on_disk && self.recorded == self.replayed
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayReport {
    pub recorded_version: String,
    pub current_version: String,
    pub recorded_seed: u64,
    pub replay_seed: u64,
    pub replay_status: RunStatus,
    pub files: Vec<FileComparison>,
}

impl ReplayReport {
    pub fn version_matches(&self) -> bool {
        self.recorded_version == self.current_version
    }

    pub fn all_match(&self) -> bool {
        !self.files.is_empty() && self.files.iter().all(FileComparison::matches)
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &FileComparison> {
        self.files.iter().filter(|f| !f.matches())
    }
}

/// Loads the config of a finished run: `config.echo` next to the manifest,
/// falling back to the copy inside the manifest.
fn recorded_config(dir: &Path, manifest: &RunManifest) -> Result<ExperimentConfig> {
    let echo = dir.join(ECHO_NAME);
    let text = if echo.exists() {
        fs::read_to_string(&echo)?
    } else {
        manifest.config.clone()
    };
    parse_config(&text).map_err(|e| anyhow::anyhow!("{e}"))
}

/// Re-runs the experiment of `manifest_path` in a scratch directory and compares hashes.
///
/// The config echo is compared like any other file, so a replay under a
/// different seed reports it as a mismatch too.
pub fn replay(manifest_path: &Path, seed: Option<u64>) -> Result<ReplayReport> {
    let manifest = RunManifest::read(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut cfg = recorded_config(dir, &manifest)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if manifest.tool_version != TOOL_VERSION {
        log::warn!(
            "run was produced by version {}, replaying with {}; comparing anyway",
            manifest.tool_version,
            TOOL_VERSION
        );
    }
    let scratch = tempfile::tempdir()?;
    let outcome = run_in(&cfg, scratch.path())?;

    let mut names: BTreeSet<String> = manifest.files.iter().map(|f| f.name.clone()).collect();
    names.extend(outcome.manifest.files.iter().map(|f| f.name.clone()));
    let files = names
        .into_iter()
        .filter(|n| n != MANIFEST_NAME)
        .map(|name| {
            let recorded = manifest.files.iter().find(|f| f.name == name).map(|f| f.sha256.clone());
            let on_disk = sha256_file(&dir.join(&name)).ok();
            let replayed = outcome.manifest.files.iter().find(|f| f.name == name).map(|f| f.sha256.clone());
            FileComparison {
                name,
                recorded,
                on_disk,
                replayed,
            }
        })
        .collect();
    Ok(ReplayReport {
        recorded_version: manifest.tool_version,
        current_version: TOOL_VERSION.to_string(),
        recorded_seed: manifest.seed,
        replay_seed: cfg.seed,
        replay_status: outcome.manifest.status,
        files,
    })
}
