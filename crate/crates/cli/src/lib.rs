//! Configuration-driven experiment runner for the `fockspace` library.
//!
//! [`run`] executes one subcommand and writes its CSV files and a
//! `manifest.txt` under `<out>/<subcommand>/<config-hash>/`.

pub mod commands;
pub mod config;
pub mod output;
pub mod reports;

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};

pub use commands::{execute, Outcome, SUBCOMMANDS};
pub use config::{ConfigError, ExperimentConfig};
pub use output::{FileEntry, RunManifest};

/// Worker-count override for the thread pool.
pub const WORKERS_ENV: &str = "FOCKSPACE_WORKERS";

/// Sizes the global thread pool from [`WORKERS_ENV`] if set; later calls are
/// no-ops.
pub fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))?;
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn run(subcommand: &str, cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let mut outcome = execute(subcommand, cfg, seed)?;
    let hash = cfg.hash(seed);
    let dir = out.join(subcommand).join(&hash);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    outcome.text("config.txt", format!("{}seed = {seed}\n", cfg.to_text()));
    let write_start = Instant::now();
    let mut files = Vec::with_capacity(outcome.files.len());
    for (name, body) in &outcome.files {
        output::write_atomic(&dir.join(name), body.as_bytes())?;
        files.push(FileEntry {
            name: name.clone(),
            bytes: body.len(),
            sha256: output::sha256_hex(body.as_bytes()),
        });
    }
    let mut wall_times = outcome.stages.clone();
    wall_times.push(("write".into(), write_start.elapsed()));
    wall_times.push(("total".into(), start.elapsed()));
    let manifest = RunManifest {
        subcommand: subcommand.to_string(),
        config_hash: hash,
        seed,
        versions: vec![
            ("fockspace".into(), fockspace::VERSION.into()),
            ("fockspace-cli".into(), env!("CARGO_PKG_VERSION").into()),
        ],
        c0: outcome.c0.map(|c| (c.re, c.im)),
        wall_times,
        files,
        dir: dir.clone(),
    };
    output::write_atomic(&dir.join("manifest.txt"), manifest.render().as_bytes())?;
    Ok(manifest)
}
