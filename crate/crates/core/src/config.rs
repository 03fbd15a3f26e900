//! Run specification: flat `key = value` config files, flag overrides and
//! validation.
//!
//! Later sources win: defaults, then the config file, then overrides in the
//! order given. Every key accepted in a file is also accepted as an override.

use std::path::{Path, PathBuf};

use crate::error::ConfigError;
use crate::ga::GaParams;
use crate::protocols::{HeedParams, LeachParams, ProtocolKind};
use crate::sim::{ProtocolConfig, RepositionPolicy};
use crate::world::{NetworkConfig, Position};

/// Default round limit when none is given.
pub const DEFAULT_ROUNDS: u64 = 20;

/// Everything needed to reproduce one CLI invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub network: NetworkConfig,
    pub protocol: ProtocolConfig,
    pub dbsr: bool,
    pub ga: GaParams,
    /// Base-station position for the static policy.
    pub static_bs: Position,
    pub runs: usize,
    pub rounds: u64,
    pub out: Option<PathBuf>,
    /// Run all four protocol/policy combinations.
    pub compare: bool,
}

impl RunSpec {
    pub fn policy(&self, dbsr: bool) -> RepositionPolicy {
        if dbsr {
            RepositionPolicy::Dbsr(self.ga.clone())
        } else {
            RepositionPolicy::Static(self.static_bs)
        }
    }
}

impl Default for RunSpec {
    fn default() -> Self {
        parse_config(None, &[]).expect("defaults are valid")
    }
}

/// Keys accepted in config files and as overrides.
pub const KEYS: &[&str] = &[
    "field_width",
    "field_height",
    "area",
    "node_count",
    "initial_energy",
    "data_packet_bits",
    "control_packet_bits",
    "sensing_radius",
    "e_elec",
    "e_fs",
    "e_da",
    "seed",
    "protocol",
    "dbsr",
    "rounds",
    "runs",
    "ga_population",
    "ga_generations",
    "ga_crossover_rate",
    "ga_mutation_rate",
    "ga_big_m",
    "ga_elitism",
    "ga_roulette_probability",
    "leach_p",
    "heed_c_prob",
    "heed_p_min",
    "heed_max_iterations",
    "heed_cluster_radius",
    "static_bs_x",
    "static_bs_y",
    "out",
    "compare",
];

#[derive(Debug, Default)]
struct Builder {
    network: NetworkConfig,
    kind: Option<ProtocolKind>,
    leach: LeachParams,
    heed: HeedParams,
    dbsr: bool,
    ga: GaParams,
    ga_population: Option<usize>,
    ga_generations: Option<usize>,
    static_x: Option<f64>,
    static_y: Option<f64>,
    runs: Option<usize>,
    rounds: Option<u64>,
    out: Option<PathBuf>,
    compare: bool,
}

fn parse<T: std::str::FromStr>(
    key: &str,
    value: &str,
    range: &'static str,
) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Parse {
        key: key.to_string(),
        value: value.to_string(),
        range,
    })
}

fn parse_switch(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Parse {
            key: key.to_string(),
            value: value.to_string(),
            range: "on|off",
        }),
    }
}

impl Builder {
    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        const REAL: &str = "a real number";
        const COUNT: &str = "a non-negative integer";
        let net = &mut self.network;
        match key {
            "field_width" => net.field_width = parse(key, value, REAL)?,
            "field_height" => net.field_height = parse(key, value, REAL)?,
            "area" => {
                let (w, h) =
                    value
                        .trim()
                        .split_once(['x', 'X'])
                        .ok_or_else(|| ConfigError::Parse {
                            key: key.to_string(),
                            value: value.to_string(),
                            range: "WIDTHxHEIGHT in meters",
                        })?;
                net.field_width = parse(key, w, "WIDTHxHEIGHT in meters")?;
                net.field_height = parse(key, h, "WIDTHxHEIGHT in meters")?;
            }
            "node_count" => net.node_count = parse(key, value, ">= 1")?,
            "initial_energy" => net.initial_energy = parse(key, value, REAL)?,
            "data_packet_bits" => net.data_packet_bits = parse(key, value, ">= 1")?,
            "control_packet_bits" => net.control_packet_bits = parse(key, value, COUNT)?,
            "sensing_radius" => net.sensing_radius = parse(key, value, REAL)?,
            "e_elec" => net.e_elec = parse(key, value, REAL)?,
            "e_fs" => net.e_fs = parse(key, value, REAL)?,
            "e_da" => net.e_da = parse(key, value, REAL)?,
            "seed" => net.seed = parse(key, value, "0..=18446744073709551615")?,
            "protocol" => {
                self.kind = Some(value.parse().map_err(|_| ConfigError::Parse {
                    key: key.to_string(),
                    value: value.to_string(),
                    range: "leach|heed",
                })?)
            }
            "dbsr" => self.dbsr = parse_switch(key, value)?,
            "rounds" => self.rounds = Some(parse(key, value, COUNT)?),
            "runs" => self.runs = Some(parse(key, value, ">= 1")?),
            "ga_population" => self.ga_population = Some(parse(key, value, ">= 2")?),
            "ga_generations" => self.ga_generations = Some(parse(key, value, COUNT)?),
            "ga_crossover_rate" => self.ga.crossover_rate = parse(key, value, "[0, 1]")?,
            "ga_mutation_rate" => self.ga.mutation_rate = parse(key, value, "[0, 1]")?,
            "ga_big_m" => self.ga.big_m = Some(parse(key, value, "> 0")?),
            "ga_elitism" => self.ga.elitism = parse(key, value, COUNT)?,
            "ga_roulette_probability" => {
                self.ga.roulette_probability = parse(key, value, "[0, 1]")?
            }
            "leach_p" => self.leach.ch_fraction = parse(key, value, "(0, 1)")?,
            "heed_c_prob" => self.heed.c_prob = parse(key, value, "(0, 1)")?,
            "heed_p_min" => self.heed.p_min = parse(key, value, "(0, heed_c_prob]")?,
            "heed_max_iterations" => self.heed.max_iterations = parse(key, value, ">= 1")?,
            "heed_cluster_radius" => self.heed.cluster_radius = parse(key, value, "> 0")?,
            "static_bs_x" => self.static_x = Some(parse(key, value, REAL)?),
            "static_bs_y" => self.static_y = Some(parse(key, value, REAL)?),
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "compare" => self.compare = parse_switch(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    fn build(self) -> Result<RunSpec, ConfigError> {
        let network = self.network;
        network.validate()?;

        let mut ga = self.ga;
        ga.population_size = self.ga_population.unwrap_or(network.node_count);
        ga.generations = self.ga_generations.unwrap_or(network.node_count);
        ga.validate()?;

        let leach = self.leach;
        if !(leach.ch_fraction > 0.0 && leach.ch_fraction < 1.0) {
            return Err(ConfigError::out_of_range(
                "leach_p",
                leach.ch_fraction,
                "(0, 1)",
            ));
        }
        let heed = self.heed;
        if !(heed.c_prob > 0.0 && heed.c_prob < 1.0) {
            return Err(ConfigError::out_of_range(
                "heed_c_prob",
                heed.c_prob,
                "(0, 1)",
            ));
        }
        if !(heed.p_min > 0.0 && heed.p_min <= heed.c_prob) {
            return Err(ConfigError::out_of_range(
                "heed_p_min",
                heed.p_min,
                "(0, heed_c_prob]",
            ));
        }
        if heed.max_iterations < 1 {
            return Err(ConfigError::out_of_range(
                "heed_max_iterations",
                heed.max_iterations,
                ">= 1",
            ));
        }
        if !(heed.cluster_radius.is_finite() && heed.cluster_radius > 0.0) {
            return Err(ConfigError::out_of_range(
                "heed_cluster_radius",
                heed.cluster_radius,
                "> 0",
            ));
        }

        let center = network.center();
        let static_bs = Position::new(
            self.static_x.unwrap_or(center.x),
            self.static_y.unwrap_or(center.y),
        );
        if !(0.0..=network.field_width).contains(&static_bs.x) {
            return Err(ConfigError::out_of_range(
                "static_bs_x",
                static_bs.x,
                "[0, field_width]",
            ));
        }
        if !(0.0..=network.field_height).contains(&static_bs.y) {
            return Err(ConfigError::out_of_range(
                "static_bs_y",
                static_bs.y,
                "[0, field_height]",
            ));
        }

        let runs = self.runs.unwrap_or(1);
        if runs < 1 {
            return Err(ConfigError::out_of_range("runs", runs, ">= 1"));
        }

        Ok(RunSpec {
            network,
            protocol: ProtocolConfig {
                kind: self.kind.unwrap_or(ProtocolKind::Leach),
                leach,
                heed,
            },
            dbsr: self.dbsr,
            ga,
            static_bs,
            runs,
            rounds: self.rounds.unwrap_or(DEFAULT_ROUNDS),
            out: self.out,
            compare: self.compare,
        })
    }
}

/// Splits config text into `(line number, key, value)` triples. Blank lines
/// and `#` comments are skipped.
pub fn parse_lines(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.trim().to_string(),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.trim().to_string(),
            });
        }
        entries.push((i + 1, key.to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

/// Builds a validated [`RunSpec`] from optional config-file text and a list
/// of `(key, value)` overrides applied on top of it.
pub fn parse_config(
    file_text: Option<&str>,
    overrides: &[(String, String)],
) -> Result<RunSpec, ConfigError> {
    let mut builder = Builder::default();
    if let Some(text) = file_text {
        for (_, key, value) in parse_lines(text)? {
            builder.set(&key, &value)?;
        }
    }
    for (key, value) in overrides {
        builder.set(key, value)?;
    }
    builder.build()
}

pub fn read_config_file(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
