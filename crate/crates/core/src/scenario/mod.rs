//! Config-driven scenario runner behind the `bohmfield` binary.
//!
//! A run parses and validates a TOML config, computes every output in
//! memory, and only then writes the data files followed by
//! `manifest.toml`. Invalid input therefore leaves no files behind.
//! Each file is written to a temporary name and renamed into place.

mod config;
mod run;

pub use config::{parse, Config, Scenario};
pub use run::{execute, CheckResult, RunOutput};

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::Error;

/// Environment variable that overrides the default output directory.
pub const OUT_DIR_ENV: &str = "BOHMFIELD_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

/// Built-in scenarios: (name, description, TOML).
pub const PRESETS: &[(&str, &str, &str)] = &[
    ("fig1", "pair creation/annihilation trajectory with its crossing record", include_str!("../../presets/fig1.toml")),
    ("nonrel", "Klein-Gordon vs Schrodinger guidance across an eps family", include_str!("../../presets/nonrel.toml")),
    ("qft-free", "free lattice field: stationary moduli and exact phase advance", include_str!("../../presets/qft-free.toml")),
    ("qft-interacting", "quartic coupling: sector weights change, with a truncation check", include_str!("../../presets/qft-interacting.toml")),
    ("born", "momentum measurement ensemble against |c|^2 = (0.3, 0.7)", include_str!("../../presets/born.toml")),
    ("collapse", "particle-number pointer collapsing (vacuum + 2 particles)/sqrt 2", include_str!("../../presets/collapse.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.2)
}

/// Where the config comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    File(PathBuf),
    Preset(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRequest {
    pub source: Source,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub check: bool,
}

#[derive(Debug, Clone, Serialize)]
struct OutputEntry {
    path: String,
    sha256: String,
}

/// Provenance record written last in the output directory.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    name: String,
    config_sha256: String,
    code_version: String,
    seed: u64,
    start_unix: f64,
    end_unix: f64,
    outputs: Vec<OutputEntry>,
    checks: Vec<CheckResult>,
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

/// Resolve the output directory: flag, then environment, then `out/<name>`.
pub fn output_dir(flag: Option<&Path>, name: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("out").join(name),
    }
}

fn load(source: &Source) -> Result<(String, String), (i32, String)> {
    match source {
        Source::File(p) => std::fs::read_to_string(p)
            .map(|t| (t, p.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned())))
            .map_err(|e| (EXIT_INVALID, format!("cannot read {}: {e}", p.display()))),
        Source::Preset(n) => preset(n)
            .map(|t| (t.to_string(), n.clone()))
            .ok_or_else(|| (EXIT_INVALID, format!("unknown preset '{n}'"))),
    }
}

fn exit_for(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

/// Execute a run request, print a report, and return the exit code.
pub fn run(req: &RunRequest) -> i32 {
    let start = now();
    let (text, stem) = match load(&req.source) {
        Ok(v) => v,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return code;
        }
    };
    let cfg = match parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let name = cfg.name.clone().unwrap_or(stem);
    let seed = req.seed.or(cfg.seed).unwrap_or(0);
    let output = match execute(&cfg, seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_for(&e);
        }
    };
    let dir = output_dir(req.out.as_deref(), &name);
    match write_outputs(&dir, &name, &text, seed, start, &output) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: writing {}: {e}", dir.display());
            return EXIT_NUMERICAL;
        }
    }
    println!("{name}: wrote {} files to {}", output.files.len() + 1, dir.display());
    let mut failed = false;
    for c in &output.checks {
        println!("  [{}] {} = {:.4e} ({})", if c.passed { "pass" } else { "FAIL" }, c.name, c.value, c.condition);
        failed |= !c.passed;
    }
    if req.check && failed {
        EXIT_CHECK
    } else {
        EXIT_OK
    }
}

fn write_outputs(dir: &Path, name: &str, config: &str, seed: u64, start: f64, output: &RunOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for (file, body) in &output.files {
        write_atomic(&dir.join(file), body.as_bytes())?;
        entries.push(OutputEntry {
            path: file.clone(),
            sha256: sha256(body.as_bytes()),
        });
    }
    let manifest = RunManifest {
        name: name.to_string(),
        config_sha256: sha256(config.as_bytes()),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        start_unix: start,
        end_unix: now(),
        outputs: entries,
        checks: output.checks.clone(),
    };
    let text = toml::to_string(&manifest).map_err(std::io::Error::other)?;
    write_atomic(&dir.join("manifest.toml"), text.as_bytes())
}
