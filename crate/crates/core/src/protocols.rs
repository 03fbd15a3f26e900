//! Cluster-head election (LEACH-style and HEED-style) and the energy flow
//! of one data-gathering round.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::energy::{affords, aggregation_cost, charge, rx_cost, tx_cost, Cause};
use crate::world::{distance, Position, Role, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    Leach,
    Heed,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Leach => "leach",
            ProtocolKind::Heed => "heed",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "leach" => Ok(ProtocolKind::Leach),
            "heed" => Ok(ProtocolKind::Heed),
            other => Err(format!("unknown protocol `{other}`")),
        }
    }
}

/// Who leads and who follows in one round.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterAssignment {
    /// Head ids, ascending.
    pub heads: Vec<usize>,
    /// Member id to head id.
    pub membership: BTreeMap<usize, usize>,
}

impl ClusterAssignment {
    pub fn is_head(&self, id: usize) -> bool {
        self.heads.binary_search(&id).is_ok()
    }
}

/// Joins every alive non-head to its nearest head (lowest id on ties). With
/// no heads the membership stays empty and everyone sends straight to the BS.
pub fn assign_members(world: &World, mut heads: Vec<usize>) -> ClusterAssignment {
    heads.sort_unstable();
    heads.dedup();
    let mut membership = BTreeMap::new();
    if !heads.is_empty() {
        for node in world.alive() {
            if heads.binary_search(&node.id).is_ok() {
                continue;
            }
            let nearest = heads
                .iter()
                .map(|&h| (h, distance(node.pos, world.nodes[h].pos)))
                .fold(None, |acc: Option<(usize, f64)>, (h, d)| match acc {
                    Some((_, best)) if best <= d => acc,
                    _ => Some((h, d)),
                })
                .map(|(h, _)| h)
                .expect("heads nonempty");
            membership.insert(node.id, nearest);
        }
    }
    ClusterAssignment { heads, membership }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeachParams {
    /// Desired fraction of heads per round, `p`.
    pub ch_fraction: f64,
}

impl Default for LeachParams {
    fn default() -> Self {
        Self { ch_fraction: 0.05 }
    }
}

impl LeachParams {
    /// Rounds per rotation epoch, `ceil(1/p)`.
    pub fn round_modulus(&self) -> u64 {
        // 1/0.05 lands a hair under 20 in binary; don't let ceil round it away
        let inv = 1.0 / self.ch_fraction;
        let nearest = inv.round();
        if (inv - nearest).abs() < 1e-9 {
            nearest.max(1.0) as u64
        } else {
            inv.ceil().max(1.0) as u64
        }
    }

    /// Election threshold `p / (1 - p * (r mod 1/p))`.
    pub fn threshold(&self, round_index: u64) -> f64 {
        let p = self.ch_fraction;
        let r = (round_index % self.round_modulus()) as f64;
        let denom = 1.0 - p * r;
        if denom <= 0.0 {
            1.0
        } else {
            (p / denom).min(1.0)
        }
    }
}

/// Which nodes already served as head in the current LEACH epoch.
#[derive(Debug, Clone, Default)]
pub struct LeachState {
    served: Vec<bool>,
}

impl LeachState {
    pub fn new(node_count: usize) -> Self {
        Self {
            served: vec![false; node_count],
        }
    }

    pub fn has_served(&self, id: usize) -> bool {
        self.served.get(id).copied().unwrap_or(false)
    }
}

/// Threshold election with rotation. `round_index` is zero-based.
pub fn elect_leach<R: Rng + ?Sized>(
    world: &World,
    params: &LeachParams,
    state: &mut LeachState,
    round_index: u64,
    rng: &mut R,
) -> ClusterAssignment {
    if state.served.len() != world.nodes.len() {
        state.served = vec![false; world.nodes.len()];
    }
    if round_index.is_multiple_of(params.round_modulus()) {
        state.served.iter_mut().for_each(|s| *s = false);
    }
    let threshold = params.threshold(round_index);
    let mut heads = Vec::new();
    for node in world.alive() {
        if state.served[node.id] {
            continue;
        }
        if rng.gen::<f64>() < threshold {
            state.served[node.id] = true;
            heads.push(node.id);
        }
    }
    assign_members(world, heads)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeedParams {
    /// Initial head probability at full energy.
    pub c_prob: f64,
    /// Floor on the initial head probability.
    pub p_min: f64,
    pub max_iterations: usize,
    /// Range within which an announced head covers a node, meters.
    pub cluster_radius: f64,
}

impl Default for HeedParams {
    fn default() -> Self {
        Self {
            c_prob: 0.05,
            p_min: 1e-4,
            max_iterations: 20,
            cluster_radius: 40.0,
        }
    }
}

impl HeedParams {
    pub fn initial_probability(&self, residual: f64, initial: f64) -> f64 {
        (self.c_prob * residual / initial).max(self.p_min).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HeedStatus {
    Undecided,
    Tentative,
    Final,
    Covered,
}

/// Iterative energy-weighted election. Each round of announcements, nodes
/// not yet covered by a head within `cluster_radius` double their head
/// probability; a node reaching probability 1 commits as head. Whoever is
/// still uncovered at the end leads its own cluster.
pub fn elect_heed<R: Rng + ?Sized>(
    world: &World,
    params: &HeedParams,
    rng: &mut R,
) -> ClusterAssignment {
    let initial = world.config.initial_energy;
    let alive: Vec<usize> = world.alive().map(|n| n.id).collect();
    let mut prob: Vec<f64> = alive
        .iter()
        .map(|&id| params.initial_probability(world.nodes[id].residual_energy, initial))
        .collect();
    let mut status = vec![HeedStatus::Undecided; alive.len()];
    let r2 = params.cluster_radius * params.cluster_radius;
    let near = |a: usize, b: usize| {
        let (pa, pb) = (world.nodes[alive[a]].pos, world.nodes[alive[b]].pos);
        (pa.x - pb.x).powi(2) + (pa.y - pb.y).powi(2) <= r2
    };

    for _ in 0..params.max_iterations {
        for i in 0..alive.len() {
            match status[i] {
                HeedStatus::Undecided | HeedStatus::Tentative if prob[i] >= 1.0 => {
                    status[i] = HeedStatus::Final;
                }
                HeedStatus::Undecided if rng.gen::<f64>() < prob[i] => {
                    status[i] = HeedStatus::Tentative;
                }
                _ => {}
            }
        }
        let announcers: Vec<usize> = (0..alive.len())
            .filter(|&i| matches!(status[i], HeedStatus::Tentative | HeedStatus::Final))
            .collect();
        for (i, st) in status.iter_mut().enumerate() {
            if *st == HeedStatus::Undecided && announcers.iter().any(|&a| near(i, a)) {
                *st = HeedStatus::Covered;
            }
        }
        let mut pending = false;
        for i in 0..alive.len() {
            if matches!(status[i], HeedStatus::Undecided | HeedStatus::Tentative) {
                prob[i] = (prob[i] * 2.0).min(1.0);
                pending = true;
            }
        }
        if !pending {
            break;
        }
    }

    let heads = (0..alive.len())
        .filter(|&i| status[i] != HeedStatus::Covered)
        .map(|i| alive[i])
        .collect();
    assign_members(world, heads)
}

/// Energy drawn during one round.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RoundEnergy {
    pub consumed: f64,
    pub heads: usize,
}

/// Moves one data packet per alive node toward the base station at
/// `world.bs` and debits every hop.
///
/// Members send to their head, which pays reception for each packet that
/// arrives, fuses its members' packets with its own, and sends one packet
/// on. A node that cannot pay for an action drains to zero and the packet
/// is lost, so nothing downstream is charged for it.
pub fn run_round(world: &mut World, assignment: &ClusterAssignment) -> RoundEnergy {
    let rc = world.config.radio();
    let bits = world.config.data_packet_bits;
    let bs = world.bs;

    for node in world.nodes.iter_mut() {
        node.role = Role::Member;
    }
    for &h in &assignment.heads {
        debug_assert!(world.nodes[h].alive, "head {h} is dead at election");
        world.nodes[h].role = Role::ClusterHead;
    }

    let direct: Vec<usize> = world
        .alive()
        .filter(|n| !assignment.is_head(n.id) && !assignment.membership.contains_key(&n.id))
        .map(|n| n.id)
        .collect();

    let mut round = Debits {
        world,
        consumed: 0.0,
    };

    let mut received: BTreeMap<usize, usize> = BTreeMap::new();
    for (&member, &head) in &assignment.membership {
        let d = round.distance(member, head);
        if !round.pay(member, tx_cost(bits, d, &rc), Cause::Tx) {
            continue;
        }
        if round.alive(head) && round.pay(head, rx_cost(bits, &rc), Cause::Rx) {
            *received.entry(head).or_default() += 1;
        }
    }

    for &head in &assignment.heads {
        if !round.alive(head) {
            continue;
        }
        let signals = received.get(&head).copied().unwrap_or(0) + 1;
        let fuse = aggregation_cost(bits, signals, &rc);
        if fuse > 0.0 && !round.pay(head, fuse, Cause::Aggregate) {
            continue;
        }
        let d = round.distance_to(head, bs);
        round.pay(head, tx_cost(bits, d, &rc), Cause::Tx);
    }

    for id in direct {
        let d = round.distance_to(id, bs);
        round.pay(id, tx_cost(bits, d, &rc), Cause::Tx);
    }

    RoundEnergy {
        consumed: round.consumed,
        heads: assignment.heads.len(),
    }
}

struct Debits<'a> {
    world: &'a mut World,
    consumed: f64,
}

impl Debits<'_> {
    fn alive(&self, id: usize) -> bool {
        self.world.nodes[id].alive
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        distance(self.world.nodes[a].pos, self.world.nodes[b].pos)
    }

    fn distance_to(&self, id: usize, p: Position) -> f64 {
        distance(self.world.nodes[id].pos, p)
    }

    /// Charges the node; true when it could cover the full amount.
    fn pay(&mut self, id: usize, amount: f64, cause: Cause) -> bool {
        let node = &mut self.world.nodes[id];
        let settled = affords(node, amount);
        let entry = charge(node, amount, cause);
        self.consumed += entry.amount;
        self.world.ledger.record(entry);
        settled
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::RadioConstants;
    use crate::world::{NetworkConfig, NodeState, Position};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn world_at(points: &[(f64, f64)], energy: f64) -> World {
        let config = NetworkConfig {
            node_count: points.len(),
            initial_energy: energy,
            ..Default::default()
        };
        let nodes = points
            .iter()
            .enumerate()
            .map(|(id, &(x, y))| NodeState {
                id,
                pos: Position::new(x, y),
                residual_energy: energy,
                alive: true,
                role: Role::Member,
            })
            .collect();
        World::new(config, nodes)
    }

    fn random_world(seed: u64, n: usize) -> World {
        let config = NetworkConfig {
            node_count: n,
            seed,
            ..Default::default()
        };
        World::deploy(config, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn check_assignment(world: &World, a: &ClusterAssignment) {
        for &h in &a.heads {
            assert!(world.nodes[h].alive);
        }
        for node in world.alive() {
            if a.is_head(node.id) {
                assert!(!a.membership.contains_key(&node.id));
                continue;
            }
            if a.heads.is_empty() {
                assert!(a.membership.is_empty());
                continue;
            }
            let head = a.membership[&node.id];
            assert!(world.nodes[head].alive);
            let d = distance(node.pos, world.nodes[head].pos);
            for &h in &a.heads {
                assert!(d <= distance(node.pos, world.nodes[h].pos));
            }
        }
    }

    #[test]
    fn protocol_names_round_trip() {
        for kind in [ProtocolKind::Leach, ProtocolKind::Heed] {
            assert_eq!(kind.to_string().parse::<ProtocolKind>().unwrap(), kind);
        }
        assert_eq!("HEED".parse::<ProtocolKind>().unwrap(), ProtocolKind::Heed);
        assert!("pegasis".parse::<ProtocolKind>().is_err());
    }

    #[test]
    fn leach_threshold_rotation() {
        let p = LeachParams::default();
        assert_eq!(p.round_modulus(), 20);
        assert!((p.threshold(0) - 0.05).abs() < 1e-15);
        assert!((p.threshold(19) - 1.0).abs() < 1e-9);
        assert!((p.threshold(20) - 0.05).abs() < 1e-15);
        assert_eq!(LeachParams { ch_fraction: 0.3 }.round_modulus(), 4);
    }

    #[test]
    fn leach_expected_head_count() {
        // Binomial(200, 0.05): mean 10, sd ~3.1. Mean over 200 seeds has sd ~0.22.
        let mut total = 0usize;
        let seeds = 200;
        for seed in 0..seeds {
            let world = random_world(seed, 200);
            let mut state = LeachState::new(200);
            let a = elect_leach(
                &world,
                &LeachParams::default(),
                &mut state,
                0,
                &mut ChaCha8Rng::seed_from_u64(seed + 1000),
            );
            check_assignment(&world, &a);
            total += a.heads.len();
        }
        let mean = total as f64 / seeds as f64;
        assert!((9.0..=11.0).contains(&mean), "{mean}");
    }

    #[test]
    fn leach_served_heads_sit_out_the_epoch() {
        let world = random_world(5, 100);
        let params = LeachParams::default();
        let mut state = LeachState::new(100);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut seen = std::collections::BTreeSet::new();
        for r in 0..20 {
            let a = elect_leach(&world, &params, &mut state, r, &mut rng);
            for h in a.heads {
                assert!(seen.insert(h), "node {h} led twice in one epoch");
            }
        }
        // threshold 1 in the last round of the epoch: everyone has served
        assert_eq!(seen.len(), 100);
        let a = elect_leach(&world, &params, &mut state, 20, &mut rng);
        assert!(a
            .heads
            .iter()
            .all(|h| !state.has_served(*h) || seen.contains(h)));
    }

    #[test]
    fn leach_single_node_delivers() {
        let mut world = world_at(&[(10.0, 10.0)], 1.0);
        let mut state = LeachState::new(1);
        let a = elect_leach(
            &world,
            &LeachParams::default(),
            &mut state,
            0,
            &mut ChaCha8Rng::seed_from_u64(1),
        );
        assert!(a.membership.is_empty());
        let e = run_round(&mut world, &a);
        assert!(e.consumed > 0.0);
        assert_eq!(world.ledger.len(), if a.heads.is_empty() { 1 } else { 2 });
    }

    #[test]
    fn heed_covers_everyone_deterministically() {
        let world = random_world(3, 200);
        let params = HeedParams::default();
        let a = elect_heed(&world, &params, &mut ChaCha8Rng::seed_from_u64(4));
        check_assignment(&world, &a);
        assert!(!a.heads.is_empty());
        assert_eq!(a.heads.len() + a.membership.len(), 200);
        let b = elect_heed(&world, &params, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
    }

    #[test]
    fn heed_initial_probability_tracks_energy() {
        let params = HeedParams::default();
        let weak = params.initial_probability(0.01, 1.0);
        let full = params.initial_probability(1.0, 1.0);
        assert!(weak < full);
        assert_eq!(full, 0.05);
        assert!((weak - 5e-4).abs() < 1e-15);
        assert_eq!(params.initial_probability(1e-6, 1.0), params.p_min);
    }

    #[test]
    fn heed_skips_dead_nodes() {
        let mut world = random_world(8, 50);
        for id in (0..50).step_by(3) {
            world.nodes[id].alive = false;
            world.nodes[id].residual_energy = 0.0;
        }
        let a = elect_heed(
            &world,
            &HeedParams::default(),
            &mut ChaCha8Rng::seed_from_u64(2),
        );
        check_assignment(&world, &a);
        assert!(a.heads.iter().all(|&h| world.nodes[h].alive));
        assert!(a.membership.keys().all(|&m| world.nodes[m].alive));
    }

    #[test]
    fn direct_transmission_costs_one_packet() {
        let mut world = world_at(&[(30.0, 40.0)], 1.0);
        world.bs = Position::new(0.0, 0.0);
        let e = run_round(&mut world, &ClusterAssignment::default());
        let expected = tx_cost(1600, 50.0, &RadioConstants::default());
        assert!((e.consumed - expected).abs() < 1e-15 * expected);
        assert!((world.nodes[0].residual_energy - (1.0 - expected)).abs() < 1e-15);
    }

    #[test]
    fn lone_head_fuses_and_forwards() {
        let mut world = world_at(&[(30.0, 40.0)], 1.0);
        world.bs = Position::new(0.0, 0.0);
        let a = assign_members(&world, vec![0]);
        let e = run_round(&mut world, &a);
        let rc = RadioConstants::default();
        let expected = 5e-9 * 1600.0 + tx_cost(1600, 50.0, &rc);
        assert!((e.consumed - expected).abs() < 1e-15);
        assert_eq!(world.ledger.total_for(Cause::Rx), 0.0);
        assert_eq!(world.nodes[0].role, Role::ClusterHead);
    }

    #[test]
    fn member_to_head_flow() {
        let mut world = world_at(&[(0.0, 0.0), (10.0, 0.0)], 1.0);
        world.bs = Position::new(10.0, 0.0);
        let a = assign_members(&world, vec![1]);
        assert_eq!(a.membership[&0], 1);
        run_round(&mut world, &a);
        let rc = RadioConstants::default();
        let member = tx_cost(1600, 10.0, &rc);
        let head = rx_cost(1600, &rc) + 2.0 * 5e-9 * 1600.0 + tx_cost(1600, 0.0, &rc);
        assert!((1.0 - world.nodes[0].residual_energy - member).abs() < 1e-15);
        assert!((1.0 - world.nodes[1].residual_energy - head).abs() < 1e-15);
    }

    #[test]
    fn starving_member_loses_packet() {
        let mut world = world_at(&[(0.0, 0.0), (100.0, 0.0)], 1.0);
        world.nodes[0].residual_energy = 1e-6;
        let a = assign_members(&world, vec![1]);
        run_round(&mut world, &a);
        assert!(!world.nodes[0].alive);
        assert_eq!(world.ledger.total_for(Cause::Rx), 0.0);
        // head fused only its own signal
        assert!(
            (world.ledger.total_for(Cause::Aggregate) - 5e-9 * 1600.0).abs() < 1e-18 + 1e-12 * 8e-6
        );
    }

    #[test]
    fn round_debits_match_residual_drop() {
        for seed in 0..10 {
            let mut world = random_world(seed, 200);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut state = LeachState::new(200);
            for r in 0..30 {
                if world.alive_count() == 0 {
                    break;
                }
                let before = world.total_residual();
                let a = if r % 2 == 0 {
                    elect_leach(&world, &LeachParams::default(), &mut state, r, &mut rng)
                } else {
                    elect_heed(&world, &HeedParams::default(), &mut rng)
                };
                let e = run_round(&mut world, &a);
                let drop = before - world.total_residual();
                assert!((e.consumed - drop).abs() <= 1e-12 * before);
            }
            assert!(world.conservation_error() < 1e-12);
        }
    }

    #[test]
    fn central_bs_is_cheaper_than_corner() {
        let mut center_wins = 0;
        for seed in 0..15 {
            let base = random_world(seed, 200);
            let a = elect_leach(
                &base,
                &LeachParams::default(),
                &mut LeachState::new(200),
                0,
                &mut ChaCha8Rng::seed_from_u64(seed),
            );
            let cost = |bs: Position| {
                let mut w = base.clone();
                w.bs = bs;
                run_round(&mut w, &a).consumed
            };
            if cost(Position::new(100.0, 100.0)) < cost(Position::new(0.0, 0.0)) {
                center_wins += 1;
            }
        }
        assert!(center_wins > 7, "{center_wins}");
    }
}
