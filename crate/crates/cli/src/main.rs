use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bqed_cli::experiments::REGISTRY;
use bqed_cli::runner::{DEFAULT_OUTPUT_ROOT, OUTPUT_ROOT_ENV, THREADS_ENV};
use bqed_cli::{load_config, replay, run};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bqed", version, about = "Run, list and replay lattice experiments")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Directory under which the run directory is created.
        #[arg(long, env = OUTPUT_ROOT_ENV, default_value = DEFAULT_OUTPUT_ROOT)]
        output_root: PathBuf,
    },
    /// Show the experiment registry.
    List,
    /// Re-run a finished run and compare artifact hashes.
    Replay {
        manifest: PathBuf,
        /// Replay under another seed (a mismatch is then expected).
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match cli.command {
        Command::List => {
            let mut out = std::io::stdout().lock();
            for e in &REGISTRY {
                // a closed pipe (e.g. `| head`) is not an error here
                if writeln!(out, "{}\n    {}\n    parameters: {}", e.name, e.summary, e.parameters).is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, output_root } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprint!("{e}");
                    return ExitCode::from(2);
                }
            };
            match run(&cfg, &output_root) {
                Ok(out) => {
                    for c in &out.manifest.checks {
                        println!("{} {} = {:e} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.bound);
                    }
                    if let Some(err) = &out.manifest.error {
                        eprintln!("error: {err}");
                    }
                    println!("{}", out.dir.display());
                    ExitCode::from(out.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Replay { manifest, seed } => match replay(&manifest, seed) {
            Ok(report) => {
                if !report.version_matches() {
                    println!(
                        "version mismatch: recorded {}, current {}",
                        report.recorded_version, report.current_version
                    );
                }
                for f in &report.files {
                    println!("{} {}", if f.matches() { "match   " } else { "MISMATCH" }, f.name);
                }
                if report.all_match() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
