//! `momlab`: configure and run the momentum-method experiments, emitting
//! CSV artifacts and a summary gate report per subcommand.
//!
//! Usage:
//!   `momlab <subcommand> [--config <path>] [--out <dir>] [--seed <u64>] [section.key=value ...]`
//!
//! Subcommands: trajectories | rates | visco | manifold | constants | toynet.
//! Exit codes: 0 all gates pass, 1 gate failure, 2 configuration error.

mod commands;
mod config;

use config::Config;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "usage: momlab <trajectories|rates|visco|manifold|constants|toynet> \
[--config <path>] [--out <dir>] [--seed <u64>] [section.key=value ...]";

fn run() -> Result<bool, (u8, String)> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        return Err((2, USAGE.to_string()));
    }
    let subcommand = args[0].clone();
    let mut config_path: Option<PathBuf> = None;
    let mut out_dir: Option<PathBuf> = None;
    let mut seed: Option<u64> = None;
    let mut overrides: Vec<String> = Vec::new();
    let mut it = args[1..].iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => {
                let v = it.next().ok_or((2, "--config needs a path".to_string()))?;
                config_path = Some(PathBuf::from(v));
            }
            "--out" => {
                let v = it.next().ok_or((2, "--out needs a directory".to_string()))?;
                out_dir = Some(PathBuf::from(v));
            }
            "--seed" => {
                let v = it.next().ok_or((2, "--seed needs an integer".to_string()))?;
                seed = Some(v.parse().map_err(|_| (2, format!("bad seed '{v}'")))?);
            }
            "--help" | "-h" => return Err((2, USAGE.to_string())),
            other if other.contains('=') => overrides.push(other.to_string()),
            other => return Err((2, format!("unexpected argument '{other}'\n{USAGE}"))),
        }
    }

    let mut cfg = match &config_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| (2, format!("cannot read config {}: {e}", p.display())))?;
            Config::parse(&text).map_err(|e| (2, e.to_string()))?
        }
        None => Config::default(),
    };
    for ov in &overrides {
        cfg.apply_override(ov).map_err(|e| (2, e.to_string()))?;
    }
    if let Some(s) = seed {
        cfg.apply_override(&format!("experiment.seed={s}"))
            .map_err(|e| (2, e.to_string()))?;
    }
    let out = out_dir.unwrap_or_else(|| PathBuf::from(cfg.str_or("experiment", "out", "momlab-out")));
    std::fs::create_dir_all(&out).map_err(|e| (2, format!("cannot create {}: {e}", out.display())))?;
    // resolved configuration, in the canonical re-parseable form
    std::fs::write(out.join("config_canonical.txt"), cfg.canonical())
        .map_err(|e| (2, e.to_string()))?;

    let result = match subcommand.as_str() {
        "trajectories" => commands::cmd_trajectories(&cfg, &out),
        "rates" => commands::cmd_rates(&cfg, &out),
        "visco" => commands::cmd_visco(&cfg, &out),
        "manifold" => commands::cmd_manifold(&cfg, &out),
        "constants" => commands::cmd_constants(&cfg, &out),
        "toynet" => commands::cmd_toynet(&cfg, &out),
        other => return Err((2, format!("unknown subcommand '{other}'\n{USAGE}"))),
    };
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            Ok(outcome.gates_passed)
        }
        Err(e) => {
            // configuration-shaped errors exit 2; runtime failures exit 1
            let msg = e.to_string();
            if msg.starts_with("config error") || msg.starts_with("invalid argument") {
                Err((2, msg))
            } else {
                Err((1, msg))
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err((code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
