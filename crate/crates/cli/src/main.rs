//! `dbsr`: run lifetime experiments and write per-round CSV.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dbsr_core::config::{parse_config, read_config_file, RunSpec};
use dbsr_core::report::{compare, emit_csv, format_real, run_spec, write_csv};

const SEED_ENV: &str = "DBSR_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "dbsr",
    version,
    about = "Sensor network lifetime simulator with GA base-station repositioning"
)]
struct Args {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Clustering protocol: leach or heed.
    #[arg(long)]
    protocol: Option<String>,
    /// Reposition the base station every round: on or off.
    #[arg(long)]
    dbsr: Option<String>,
    #[arg(long)]
    nodes: Option<String>,
    /// Field size in meters, WIDTHxHEIGHT.
    #[arg(long)]
    area: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    /// Independent runs, seeded seed, seed+1, ...
    #[arg(long)]
    runs: Option<String>,
    /// Base seed; falls back to $DBSR_SEED.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "ga-pop")]
    ga_pop: Option<String>,
    #[arg(long = "ga-gens")]
    ga_gens: Option<String>,
    #[arg(long = "ga-cx")]
    ga_cx: Option<String>,
    #[arg(long = "ga-mut")]
    ga_mut: Option<String>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run LEACH, LEACH-DBSR, HEED and HEED-DBSR on the same seeds.
    #[arg(long)]
    compare: bool,
}

impl Args {
    fn overrides(&self, env_seed: Option<String>) -> Vec<(String, String)> {
        let mut kv = Vec::new();
        let mut push = |key: &str, value: &Option<String>| {
            if let Some(v) = value {
                kv.push((key.to_string(), v.clone()));
            }
        };
        push("seed", &self.seed.clone().or(env_seed));
        push("protocol", &self.protocol);
        push("dbsr", &self.dbsr);
        push("node_count", &self.nodes);
        push("area", &self.area);
        push("rounds", &self.rounds);
        push("runs", &self.runs);
        push("ga_population", &self.ga_pop);
        push("ga_generations", &self.ga_gens);
        push("ga_crossover_rate", &self.ga_cx);
        push("ga_mutation_rate", &self.ga_mut);
        push("out", &self.out.as_ref().map(|p| p.display().to_string()));
        if self.compare {
            kv.push(("compare".into(), "on".into()));
        }
        kv
    }
}

fn load(args: &Args) -> Result<RunSpec, String> {
    let text = match &args.config {
        Some(path) => Some(read_config_file(path).map_err(|e| e.to_string())?),
        None => None,
    };
    let env_seed = std::env::var(SEED_ENV)
        .ok()
        .filter(|s| !s.trim().is_empty());
    parse_config(text.as_deref(), &args.overrides(env_seed)).map_err(|e| e.to_string())
}

fn run(args: &Args) -> Result<(), String> {
    let spec = load(args)?;
    let results = run_spec(&spec).map_err(|e| e.to_string())?;
    match &spec.out {
        Some(path) => emit_csv(&results, path).map_err(|e| e.to_string())?,
        None => write_csv(&results, io::stdout().lock()).map_err(|e| format!("stdout: {e}"))?,
    }

    let mut err = io::stderr().lock();
    for c in compare(&results) {
        let pct = |v: Option<f64>| {
            v.map(|p| format!("{}%", format_real(p)))
                .unwrap_or("n/a".into())
        };
        let _ = writeln!(
            err,
            "{}: FND {} -> {} ({}), HNA {} -> {} ({})",
            c.protocol,
            median(c.baseline.0.median),
            median(c.dbsr.0.median),
            pct(c.fnd_improvement_pct),
            median(c.baseline.1.median),
            median(c.dbsr.1.median),
            pct(c.hna_improvement_pct),
        );
    }
    Ok(())
}

fn median(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_else(|| "none".into())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
