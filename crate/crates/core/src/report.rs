//! Scenario orchestration and CSV output.
//!
//! The CSV has one row per round per run:
//!
//! ```text
//! scenario,run,round,bs_x,bs_y,total_residual_j,alive_count,consumed_j,heads_count
//! ```
//!
//! then a blank line and a `scenario,metric,value` block with lifetime
//! statistics. Reals are printed with 9 significant digits.

use std::io::{self, Write};
use std::path::Path;

use crate::config::RunSpec;
use crate::error::{Error, Result};
use crate::protocols::ProtocolKind;
use crate::sim::{batch, BatchOutput, RoundStats};

pub const ROUND_HEADER: &str =
    "scenario,run,round,bs_x,bs_y,total_residual_j,alive_count,consumed_j,heads_count";
pub const SUMMARY_HEADER: &str = "scenario,metric,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario {
    pub protocol: ProtocolKind,
    pub dbsr: bool,
}

impl Scenario {
    pub fn label(&self) -> String {
        if self.dbsr {
            format!("{}-dbsr", self.protocol)
        } else {
            self.protocol.to_string()
        }
    }

    /// LEACH, LEACH-DBSR, HEED, HEED-DBSR.
    pub fn all() -> [Scenario; 4] {
        [
            Scenario {
                protocol: ProtocolKind::Leach,
                dbsr: false,
            },
            Scenario {
                protocol: ProtocolKind::Leach,
                dbsr: true,
            },
            Scenario {
                protocol: ProtocolKind::Heed,
                dbsr: false,
            },
            Scenario {
                protocol: ProtocolKind::Heed,
                dbsr: true,
            },
        ]
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub batch: BatchOutput,
}

/// Runs one scenario across `spec.runs` seeds.
pub fn run_scenario(spec: &RunSpec, scenario: Scenario) -> Result<ScenarioResult> {
    let mut protocol = spec.protocol;
    protocol.kind = scenario.protocol;
    let batch = batch(
        &spec.network,
        &protocol,
        &spec.policy(scenario.dbsr),
        spec.runs,
        spec.rounds,
    )?;
    Ok(ScenarioResult { scenario, batch })
}

/// The scenarios a spec asks for: all four in compare mode, else the one
/// named by `protocol` and `dbsr`. Every scenario sees the same seeds.
pub fn run_spec(spec: &RunSpec) -> Result<Vec<ScenarioResult>> {
    let scenarios: Vec<Scenario> = if spec.compare {
        Scenario::all().to_vec()
    } else {
        vec![Scenario {
            protocol: spec.protocol.kind,
            dbsr: spec.dbsr,
        }]
    };
    scenarios
        .into_iter()
        .map(|s| run_scenario(spec, s))
        .collect()
}

/// Relative change from `base` to `new`, in percent.
pub fn improvement_pct(base: Option<f64>, new: Option<f64>) -> Option<f64> {
    match (base, new) {
        (Some(b), Some(n)) if b > 0.0 => Some((n - b) / b * 100.0),
        _ => None,
    }
}

/// DBSR against its static baseline, on median lifetime rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub protocol: ProtocolKind,
    pub baseline: (RoundStats, RoundStats),
    pub dbsr: (RoundStats, RoundStats),
    pub fnd_improvement_pct: Option<f64>,
    pub hna_improvement_pct: Option<f64>,
}

/// Pairs every DBSR scenario with the static scenario of the same protocol.
pub fn compare(results: &[ScenarioResult]) -> Vec<Comparison> {
    let mut out = Vec::new();
    for d in results.iter().filter(|r| r.scenario.dbsr) {
        let Some(b) = results
            .iter()
            .find(|r| !r.scenario.dbsr && r.scenario.protocol == d.scenario.protocol)
        else {
            continue;
        };
        out.push(Comparison {
            protocol: d.scenario.protocol,
            baseline: (b.batch.fnd, b.batch.hna),
            dbsr: (d.batch.fnd, d.batch.hna),
            fnd_improvement_pct: improvement_pct(b.batch.fnd.median, d.batch.fnd.median),
            hna_improvement_pct: improvement_pct(b.batch.hna.median, d.batch.hna.median),
        });
    }
    out
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros dropped,
/// scientific notation outside `1e-4 ..< 1e9`.
pub fn format_real(x: f64) -> String {
    format_sig(x, 9)
}

pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_else(|| "NA".into())
}

/// Writes per-round rows for every scenario and run, then the summary block.
/// Improvement rows appear when a DBSR scenario has a baseline alongside it.
pub fn write_csv<W: Write>(results: &[ScenarioResult], mut w: W) -> io::Result<()> {
    writeln!(w, "{ROUND_HEADER}")?;
    for result in results {
        let label = result.scenario.label();
        for (run, out) in result.batch.runs.iter().enumerate() {
            for m in &out.metrics {
                writeln!(
                    w,
                    "{label},{run},{},{},{},{},{},{},{}",
                    m.round,
                    format_real(m.bs_pos.x),
                    format_real(m.bs_pos.y),
                    format_real(m.total_residual),
                    m.alive_count,
                    format_real(m.consumed_this_round),
                    m.heads_count,
                )?;
            }
        }
    }

    writeln!(w)?;
    writeln!(w, "{SUMMARY_HEADER}")?;
    let comparisons = compare(results);
    for result in results {
        let label = result.scenario.label();
        let b = &result.batch;
        writeln!(w, "{label},fnd_median,{}", opt(b.fnd.median))?;
        writeln!(w, "{label},hna_median,{}", opt(b.hna.median))?;
        writeln!(w, "{label},fnd_mean,{}", opt(b.fnd.mean))?;
        writeln!(w, "{label},hna_mean,{}", opt(b.hna.mean))?;
        if let Some(c) = comparisons
            .iter()
            .find(|c| result.scenario.dbsr && c.protocol == result.scenario.protocol)
        {
            writeln!(
                w,
                "{label},improvement_fnd_pct,{}",
                opt(c.fnd_improvement_pct)
            )?;
            writeln!(
                w,
                "{label},improvement_hna_pct,{}",
                opt(c.hna_improvement_pct)
            )?;
        }
    }
    w.flush()
}

pub fn emit_csv(results: &[ScenarioResult], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    write_csv(results, io::BufWriter::new(file)).map_err(io_err)
}
