//! Network ground truth: field geometry, sensor nodes and the base station.

use rand::Rng;

use crate::energy::{EnergyLedger, RadioConstants};
use crate::error::ConfigError;

/// A point in the deployment field, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        distance(*self, *other)
    }
}

/// Euclidean distance between two positions.
pub fn distance(a: Position, b: Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Role {
    #[default]
    Member,
    ClusterHead,
}

/// One sensor. A node is alive exactly while it holds a positive residual
/// energy; once drained it stays dead and keeps its slot in the node list.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: usize,
    pub pos: Position,
    pub residual_energy: f64,
    pub alive: bool,
    pub role: Role,
}

/// Field, radio and traffic parameters of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub field_width: f64,
    pub field_height: f64,
    pub node_count: usize,
    /// Initial energy per node, joules.
    pub initial_energy: f64,
    pub data_packet_bits: u64,
    /// Size of the per-round residual-energy report. Zero means the report
    /// rides on the previous round's data packet and costs nothing.
    pub control_packet_bits: u64,
    /// Carried for completeness; no algorithm reads it.
    pub sensing_radius: f64,
    pub e_elec: f64,
    pub e_fs: f64,
    pub e_da: f64,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            field_width: 200.0,
            field_height: 200.0,
            node_count: 200,
            initial_energy: 1.0,
            data_packet_bits: 200 * 8,
            control_packet_bits: 0,
            sensing_radius: 15.0,
            e_elec: 50e-9,
            e_fs: 10e-9,
            e_da: 5e-9,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::out_of_range(key, v, "> 0"))
            }
        }
        positive("field_width", self.field_width)?;
        positive("field_height", self.field_height)?;
        if self.node_count < 1 {
            return Err(ConfigError::out_of_range(
                "node_count",
                self.node_count,
                ">= 1",
            ));
        }
        positive("initial_energy", self.initial_energy)?;
        if self.data_packet_bits < 1 {
            return Err(ConfigError::out_of_range(
                "data_packet_bits",
                self.data_packet_bits,
                ">= 1",
            ));
        }
        positive("sensing_radius", self.sensing_radius)?;
        positive("e_elec", self.e_elec)?;
        positive("e_fs", self.e_fs)?;
        // aggregation may be switched off entirely
        if !(self.e_da.is_finite() && self.e_da >= 0.0) {
            return Err(ConfigError::out_of_range("e_da", self.e_da, ">= 0"));
        }
        Ok(())
    }

    pub fn radio(&self) -> RadioConstants {
        RadioConstants {
            e_elec: self.e_elec,
            e_fs: self.e_fs,
            e_da: self.e_da,
        }
    }

    pub fn field(&self) -> Field {
        Field {
            width: self.field_width,
            height: self.field_height,
        }
    }

    pub fn center(&self) -> Position {
        self.field().center()
    }
}

/// Rectangular deployment area anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Field {
    pub width: f64,
    pub height: f64,
}

impl Field {
    pub fn center(&self) -> Position {
        Position::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn contains(&self, p: Position) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }
}

/// Places `node_count` nodes uniformly at random over the field, all alive
/// at full energy.
pub fn deploy<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Vec<NodeState> {
    (0..config.node_count)
        .map(|id| {
            let x = rng.gen_range(0.0..=config.field_width);
            let y = rng.gen_range(0.0..=config.field_height);
            NodeState {
                id,
                pos: Position::new(x, y),
                residual_energy: config.initial_energy,
                alive: true,
                role: Role::Member,
            }
        })
        .collect()
}

/// The state one simulation run owns exclusively.
#[derive(Debug, Clone)]
pub struct World {
    pub config: NetworkConfig,
    pub nodes: Vec<NodeState>,
    pub bs: Position,
    pub ledger: EnergyLedger,
}

impl World {
    /// Wraps an existing node list. The base station starts at the field center.
    pub fn new(config: NetworkConfig, nodes: Vec<NodeState>) -> Self {
        let bs = config.center();
        Self {
            config,
            nodes,
            bs,
            ledger: EnergyLedger::default(),
        }
    }

    pub fn deploy<R: Rng + ?Sized>(config: NetworkConfig, rng: &mut R) -> Self {
        let nodes = deploy(&config, rng);
        Self::new(config, nodes)
    }

    pub fn alive(&self) -> impl Iterator<Item = &NodeState> {
        self.nodes.iter().filter(|n| n.alive)
    }

    pub fn alive_count(&self) -> usize {
        self.alive().count()
    }

    pub fn total_residual(&self) -> f64 {
        self.nodes.iter().map(|n| n.residual_energy).sum()
    }

    /// Energy the network started with, assuming every node began at `initial_energy`.
    pub fn initial_total(&self) -> f64 {
        self.nodes.len() as f64 * self.config.initial_energy
    }

    /// Relative mismatch between debited energy plus remaining energy and
    /// the starting total.
    pub fn conservation_error(&self) -> f64 {
        let initial = self.initial_total();
        let accounted = self.ledger.total() + self.total_residual();
        (accounted - initial).abs() / initial
    }
}
