//! The round loop: reposition the base station, elect heads, move data,
//! record metrics. Runs stop at the round limit or when every node is dead.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{charge, tx_cost, Cause};
use crate::error::{GaError, Result};
use crate::ga::{run_ga, weight_of, GaParams, WeightedSite};
use crate::protocols::{
    elect_heed, elect_leach, run_round, HeedParams, LeachParams, LeachState, ProtocolKind,
};
use crate::world::{NetworkConfig, Position, World};

#[derive(Debug, Clone, PartialEq)]
pub enum RepositionPolicy {
    /// The base station never moves.
    Static(Position),
    /// The base station moves each round to the GA's placement.
    Dbsr(GaParams),
}

impl RepositionPolicy {
    pub fn is_dbsr(&self) -> bool {
        matches!(self, RepositionPolicy::Dbsr(_))
    }
}

/// Protocol choice plus the parameters of both protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    pub leach: LeachParams,
    pub heed: HeedParams,
}

impl ProtocolConfig {
    pub fn new(kind: ProtocolKind) -> Self {
        Self {
            kind,
            leach: LeachParams::default(),
            heed: HeedParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    /// One-based round number.
    pub round: u64,
    pub bs_pos: Position,
    pub total_residual: f64,
    pub alive_count: usize,
    pub consumed_this_round: f64,
    pub heads_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LifetimeSummary {
    /// First round after which at least one node is dead.
    pub fnd_round: Option<u64>,
    /// First round after which fewer than half the nodes are alive.
    pub hna_round: Option<u64>,
    pub last_round: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Vec<RoundMetrics>,
    pub summary: LifetimeSummary,
    /// Relative energy-accounting mismatch at the end of the run.
    pub conservation_error: f64,
    pub final_world: World,
}

/// Independent random streams of one run. DBSR draws from its own stream,
/// so switching it on leaves deployment and elections untouched.
pub struct RunStreams {
    pub deploy: ChaCha8Rng,
    pub protocol: ChaCha8Rng,
    pub ga: ChaCha8Rng,
}

impl RunStreams {
    pub fn new(seed: u64) -> Self {
        let fork = |stream| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            rng
        };
        Self {
            deploy: fork(0),
            protocol: fork(1),
            ga: fork(2),
        }
    }
}

/// Weighted sites for every live node, from its current residual energy.
pub fn live_sites(world: &World) -> Vec<WeightedSite> {
    let initial = world.config.initial_energy;
    world
        .alive()
        .map(|n| WeightedSite::new(n.pos, weight_of(n.residual_energy, initial)))
        .collect()
}

/// Picks this round's base-station position and moves the BS there.
///
/// Under DBSR every live node first reports its residual energy. The report
/// is free unless `control_packet_bits` is set, in which case each node pays
/// to send it to the base station's current position.
pub fn reposition(
    world: &mut World,
    policy: &RepositionPolicy,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Position, GaError> {
    let target = match policy {
        RepositionPolicy::Static(p) => *p,
        RepositionPolicy::Dbsr(params) => {
            charge_reports(world);
            let sites = live_sites(world);
            if sites.is_empty() {
                world.bs
            } else {
                run_ga(&sites, params, world.config.field(), rng)?.position
            }
        }
    };
    world.bs = target;
    Ok(target)
}

fn charge_reports(world: &mut World) {
    let bits = world.config.control_packet_bits;
    if bits == 0 {
        return;
    }
    let rc = world.config.radio();
    let bs = world.bs;
    let World { nodes, ledger, .. } = world;
    for node in nodes.iter_mut().filter(|n| n.alive) {
        let cost = tx_cost(bits, node.pos.distance_to(&bs), &rc);
        ledger.record(charge(node, cost, Cause::Report));
    }
}

enum Election {
    Leach(LeachState),
    Heed,
}

/// One full run on a fresh deployment seeded from `config.seed`.
pub fn simulate(
    config: &NetworkConfig,
    protocol: &ProtocolConfig,
    policy: &RepositionPolicy,
    max_rounds: u64,
) -> Result<RunOutput> {
    config.validate()?;
    if let RepositionPolicy::Dbsr(params) = policy {
        params.validate()?;
    }

    let mut streams = RunStreams::new(config.seed);
    let mut world = World::deploy(config.clone(), &mut streams.deploy);
    if let RepositionPolicy::Static(p) = policy {
        world.bs = *p;
    }
    let n = world.nodes.len();
    let half = n.div_ceil(2);
    let mut election = match protocol.kind {
        ProtocolKind::Leach => Election::Leach(LeachState::new(n)),
        ProtocolKind::Heed => Election::Heed,
    };

    let mut metrics = Vec::new();
    let mut summary = LifetimeSummary::default();
    for round in 1..=max_rounds {
        if world.alive_count() == 0 {
            break;
        }
        let debited_before = world.ledger.total();

        let bs_pos = reposition(&mut world, policy, &mut streams.ga)?;
        let heads_count = if world.alive_count() > 0 {
            let assignment = match &mut election {
                Election::Leach(state) => elect_leach(
                    &world,
                    &protocol.leach,
                    state,
                    round - 1,
                    &mut streams.protocol,
                ),
                Election::Heed => elect_heed(&world, &protocol.heed, &mut streams.protocol),
            };
            run_round(&mut world, &assignment).heads
        } else {
            0
        };

        let alive_count = world.alive_count();
        metrics.push(RoundMetrics {
            round,
            bs_pos,
            total_residual: world.total_residual(),
            alive_count,
            consumed_this_round: world.ledger.total() - debited_before,
            heads_count,
        });
        summary.last_round = round;
        if summary.fnd_round.is_none() && alive_count < n {
            summary.fnd_round = Some(round);
        }
        if summary.hna_round.is_none() && alive_count < half {
            summary.hna_round = Some(round);
        }
    }

    let conservation_error = world.conservation_error();
    debug_assert!(
        conservation_error <= 1e-12,
        "energy accounting drifted by {conservation_error:e}"
    );
    Ok(RunOutput {
        metrics,
        summary,
        conservation_error,
        final_world: world,
    })
}

/// Median and mean of a lifetime metric over the runs where it occurred.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoundStats {
    pub median: Option<f64>,
    pub mean: Option<f64>,
    /// Runs in which the event happened.
    pub observed: usize,
}

impl RoundStats {
    pub fn from_rounds(rounds: impl IntoIterator<Item = Option<u64>>) -> Self {
        let mut values: Vec<u64> = rounds.into_iter().flatten().collect();
        if values.is_empty() {
            return Self::default();
        }
        values.sort_unstable();
        let len = values.len();
        let median = if len % 2 == 1 {
            values[len / 2] as f64
        } else {
            (values[len / 2 - 1] + values[len / 2]) as f64 / 2.0
        };
        let mean = values.iter().sum::<u64>() as f64 / len as f64;
        Self {
            median: Some(median),
            mean: Some(mean),
            observed: len,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    /// Per-run results, ordered by seed.
    pub runs: Vec<RunOutput>,
    /// Mean total residual energy per round across runs. A run that ended
    /// early contributes its final state to later rounds.
    pub mean_residual: Vec<f64>,
    pub mean_alive: Vec<f64>,
    pub fnd: RoundStats,
    pub hna: RoundStats,
}

/// Runs `runs` simulations with seeds `config.seed`, `config.seed + 1`, ...
/// Runs execute in parallel; results are ordered by seed.
pub fn batch(
    config: &NetworkConfig,
    protocol: &ProtocolConfig,
    policy: &RepositionPolicy,
    runs: usize,
    max_rounds: u64,
) -> Result<BatchOutput> {
    let outputs = (0..runs)
        .into_par_iter()
        .map(|i| {
            let cfg = NetworkConfig {
                seed: config.seed.wrapping_add(i as u64),
                ..config.clone()
            };
            simulate(&cfg, protocol, policy, max_rounds)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchOutput::from_runs(outputs))
}

impl BatchOutput {
    pub fn from_runs(runs: Vec<RunOutput>) -> Self {
        let horizon = runs.iter().map(|r| r.metrics.len()).max().unwrap_or(0);
        let mut mean_residual = vec![0.0; horizon];
        let mut mean_alive = vec![0.0; horizon];
        for run in &runs {
            for r in 0..horizon {
                let (residual, alive) = match run.metrics.get(r).or(run.metrics.last()) {
                    Some(m) => (m.total_residual, m.alive_count as f64),
                    None => (0.0, 0.0),
                };
                mean_residual[r] += residual;
                mean_alive[r] += alive;
            }
        }
        let k = runs.len().max(1) as f64;
        mean_residual.iter_mut().for_each(|v| *v /= k);
        mean_alive.iter_mut().for_each(|v| *v /= k);
        let fnd = RoundStats::from_rounds(runs.iter().map(|r| r.summary.fnd_round));
        let hna = RoundStats::from_rounds(runs.iter().map(|r| r.summary.hna_round));
        Self {
            runs,
            mean_residual,
            mean_alive,
            fnd,
            hna,
        }
    }
}
