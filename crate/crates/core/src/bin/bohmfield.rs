use clap::{Parser, Subcommand};
use std::path::PathBuf;

use bohmfield::scenario::{self, RunRequest, Source};

#[derive(Parser)]
#[command(name = "bohmfield", version, about = "Bohmian trajectory and lattice-field scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario config (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario name (see list-presets).
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $BOHMFIELD_OUT, else out/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with code 4 if any acceptance check fails.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its data files and manifest.
    Run(RunArgs),
    /// Run a scenario and fail on any acceptance check.
    Check(RunArgs),
    /// List the built-in scenarios.
    ListPresets,
}

fn request(a: RunArgs, force_check: bool) -> Result<RunRequest, String> {
    let source = match (a.config, a.preset) {
        (Some(p), None) => Source::File(p),
        (None, Some(n)) => Source::Preset(n),
        _ => return Err("give exactly one of --config or --preset".into()),
    };
    Ok(RunRequest {
        source,
        seed: a.seed,
        out: a.out,
        check: a.check || force_check,
    })
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { scenario::EXIT_INVALID } else { 0 });
        }
    };
    let (args, check) = match cli.command {
        Command::ListPresets => {
            for (name, about, _) in scenario::PRESETS {
                println!("{name:16} {about}");
            }
            return;
        }
        Command::Run(a) => (a, false),
        Command::Check(a) => (a, true),
    };
    let code = match request(args, check) {
        Ok(r) => scenario::run(&r),
        Err(msg) => {
            eprintln!("error: {msg}");
            scenario::EXIT_INVALID
        }
    };
    std::process::exit(code);
}
