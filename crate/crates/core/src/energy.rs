//! First-order radio model (free-space amplifier only) and the debit ledger.

use crate::world::NodeState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConstants {
    /// Electronics energy per bit, J/bit.
    pub e_elec: f64,
    /// Free-space amplifier coefficient, J/bit/m².
    pub e_fs: f64,
    /// Data aggregation energy per bit per fused signal, J/bit.
    pub e_da: f64,
}

impl Default for RadioConstants {
    fn default() -> Self {
        Self {
            e_elec: 50e-9,
            e_fs: 10e-9,
            e_da: 5e-9,
        }
    }
}

/// Energy to transmit `bits` over `d` meters.
///
/// Panics on an empty packet.
pub fn tx_cost(bits: u64, d: f64, rc: &RadioConstants) -> f64 {
    assert!(bits > 0, "tx_cost: packet must carry at least one bit");
    debug_assert!(d >= 0.0);
    let k = bits as f64;
    rc.e_elec * k + rc.e_fs * k * d * d
}

/// Energy to receive `bits`. Panics on an empty packet.
pub fn rx_cost(bits: u64, rc: &RadioConstants) -> f64 {
    assert!(bits > 0, "rx_cost: packet must carry at least one bit");
    rc.e_elec * bits as f64
}

/// Energy a cluster head spends fusing `signals` packets of `bits` each.
pub fn aggregation_cost(bits: u64, signals: usize, rc: &RadioConstants) -> f64 {
    rc.e_da * bits as f64 * signals as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cause {
    Tx,
    Rx,
    Aggregate,
    Report,
}

impl Cause {
    const ALL: [Cause; 4] = [Cause::Tx, Cause::Rx, Cause::Aggregate, Cause::Report];

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub node_id: usize,
    /// Energy actually removed from the node.
    pub amount: f64,
    pub cause: Cause,
}

/// Whether `node` can pay `amount` in full. A node that cannot still pays
/// what it has when charged, but whatever it was doing does not complete.
pub fn affords(node: &NodeState, amount: f64) -> bool {
    node.alive && node.residual_energy >= amount
}

/// Debits `amount` joules from `node`, clamping at zero. A node drained to
/// zero is marked dead. The returned entry carries the energy actually
/// removed, which is smaller than `amount` when the node ran dry.
///
/// Panics if the node is already dead.
pub fn charge(node: &mut NodeState, amount: f64, cause: Cause) -> LedgerEntry {
    assert!(
        node.alive,
        "charge: node {} is dead and cannot be charged ({cause:?})",
        node.id
    );
    assert!(
        amount > 0.0,
        "charge: amount must be positive, got {amount}"
    );
    let before = node.residual_energy;
    let after = (before - amount).max(0.0);
    node.residual_energy = after;
    if after == 0.0 {
        node.alive = false;
    }
    LedgerEntry {
        node_id: node.id,
        // what left the node, so ledger + residual stays balanced
        amount: before - after,
        cause,
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Accumulates every debit of a run, totalled per cause.
#[derive(Debug, Clone, Default)]
pub struct EnergyLedger {
    totals: [CompensatedSum; 4],
    entries: usize,
}

impl EnergyLedger {
    pub fn record(&mut self, entry: LedgerEntry) {
        self.totals[entry.cause.slot()].add(entry.amount);
        self.entries += 1;
    }

    pub fn total(&self) -> f64 {
        let mut all = CompensatedSum::default();
        for c in Cause::ALL {
            all.add(self.totals[c.slot()].sum);
            all.add(self.totals[c.slot()].carry);
        }
        all.value()
    }

    pub fn total_for(&self, cause: Cause) -> f64 {
        self.totals[cause.slot()].value()
    }

    pub fn len(&self) -> usize {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Position, Role};
    use proptest::prelude::*;

    fn node(energy: f64) -> NodeState {
        NodeState {
            id: 7,
            pos: Position::new(0.0, 0.0),
            residual_energy: energy,
            alive: true,
            role: Role::Member,
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-15 + 1e-12 * b.abs()
    }

    #[test]
    fn tx_cost_table_constants() {
        let rc = RadioConstants::default();
        // 50e-9 * 1600 + 10e-9 * 1600 * 100 = 8e-5 + 1.6e-3
        assert!(close(tx_cost(1600, 10.0, &rc), 1.68e-3));
        assert!(close(tx_cost(1600, 0.0, &rc), 8.0e-5));
    }

    #[test]
    #[should_panic(expected = "at least one bit")]
    fn empty_packet_rejected() {
        tx_cost(0, 5.0, &RadioConstants::default());
    }

    #[test]
    fn rx_cost_examples() {
        let rc = RadioConstants::default();
        assert!(close(rx_cost(1600, &rc), 8.0e-5));
        assert!(close(rx_cost(1, &rc), 5.0e-8));
    }

    #[test]
    fn charge_partial_and_full() {
        let mut n = node(1.0);
        assert!(affords(&n, 0.3));
        charge(&mut n, 0.3, Cause::Tx);
        assert!(close(n.residual_energy, 0.7));
        assert!(n.alive);

        let mut n = node(0.2);
        assert!(!affords(&n, 0.5));
        let e = charge(&mut n, 0.5, Cause::Rx);
        assert_eq!(n.residual_energy, 0.0);
        assert!(!n.alive);
        assert_eq!(e.amount, 0.2);
        assert!(!affords(&n, 1e-9));
    }

    #[test]
    #[should_panic(expected = "is dead")]
    fn charging_dead_node_panics() {
        let mut n = node(0.1);
        charge(&mut n, 1.0, Cause::Tx);
        charge(&mut n, 1.0, Cause::Tx);
    }

    #[test]
    fn ledger_plus_residual_is_initial() {
        let mut ledger = EnergyLedger::default();
        let mut n = node(1.0);
        for i in 0..1000 {
            if !n.alive {
                break;
            }
            let cause = Cause::ALL[i % 4];
            ledger.record(charge(&mut n, 1.7e-3 + i as f64 * 1e-7, cause));
        }
        assert!(!n.alive);
        assert!(close(ledger.total() + n.residual_energy, 1.0));
        let by_cause: f64 = Cause::ALL.iter().map(|c| ledger.total_for(*c)).sum();
        assert!(close(by_cause, 1.0));
    }

    proptest! {
        #[test]
        fn tx_monotone_and_dominates_rx(k in 1u64..100_000, d in 0.0..300.0f64, dk in 0u64..1000, dd in 0.0..50.0f64) {
            let rc = RadioConstants::default();
            let base = tx_cost(k, d, &rc);
            prop_assert!(tx_cost(k + dk, d, &rc) >= base);
            prop_assert!(tx_cost(k, d + dd, &rc) >= base);
            prop_assert!(base >= rx_cost(k, &rc));
            prop_assert!(rx_cost(k + dk, &rc) >= rx_cost(k, &rc));
            prop_assert_eq!(rx_cost(k, &rc), tx_cost(k, 0.0, &rc));
        }

        #[test]
        fn charge_never_raises_energy(start in 1e-6..1.0f64, amount in 1e-9..2.0f64) {
            let mut n = node(start);
            let e = charge(&mut n, amount, Cause::Tx);
            prop_assert!(n.residual_energy <= start);
            prop_assert!(n.residual_energy >= 0.0);
            prop_assert_eq!(n.alive, n.residual_energy > 0.0);
            prop_assert!(close(e.amount + n.residual_energy, start));
        }
    }
}
