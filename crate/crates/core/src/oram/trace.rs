//! Append-only recorder for physical memory-slot accesses.
//!
//! Every hardened store reports each slot it touches, tagged read or write,
//! so tests and the harness can inspect the externally observable access
//! pattern of a whole query schedule. Events are grouped into operations by
//! [`AccessTrace::begin_op`]; the per-operation counts are the quantity the
//! stores promise to keep key-independent.

use std::collections::BTreeMap;

/// Flag bit marking an event as a write; the low 31 bits carry the slot id.
const WRITE_BIT: u32 = 1 << 31;

/// Ordered (step, slot, op) records with operation boundaries.
#[derive(Clone, Debug, Default)]
pub struct AccessTrace {
    events: Vec<u32>,
    op_starts: Vec<u32>,
    enabled: bool,
}

impl AccessTrace {
    /// A recorder that starts out recording.
    pub fn new() -> AccessTrace {
        AccessTrace { events: Vec::new(), op_starts: Vec::new(), enabled: true }
    }

    /// Turns recording on or off; boundaries and events are dropped while
    /// off.
    pub fn set_enabled(&mut self, on: bool) {
        self.enabled = on;
    }

    /// Whether events are currently being kept.
    pub fn enabled(&self) -> bool {
        self.enabled
    }

    /// Marks the start of one store operation.
    pub fn begin_op(&mut self) {
        if self.enabled {
            self.op_starts.push(self.events.len() as u32);
        }
    }

    /// Records a read of `slot`.
    pub fn read(&mut self, slot: u32) {
        if self.enabled {
            debug_assert_eq!(slot & WRITE_BIT, 0);
            self.events.push(slot);
        }
    }

    /// Records a write of `slot`.
    pub fn write(&mut self, slot: u32) {
        if self.enabled {
            debug_assert_eq!(slot & WRITE_BIT, 0);
            self.events.push(slot | WRITE_BIT);
        }
    }

    /// Total recorded events.
    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    /// Number of operations recorded so far.
    pub fn op_count(&self) -> usize {
        self.op_starts.len()
    }

    /// Events per operation, in operation order.
    pub fn per_op_counts(&self) -> Vec<usize> {
        let mut counts = Vec::with_capacity(self.op_starts.len());
        for (i, &start) in self.op_starts.iter().enumerate() {
            let end = self.op_starts.get(i + 1).map_or(self.events.len(), |&e| e as usize);
            counts.push(end - start as usize);
        }
        counts
    }

    /// `(slot, op-is-write)` pairs in recording order.
    pub fn events(&self) -> impl Iterator<Item = (u32, bool)> + '_ {
        self.events.iter().map(|&e| (e & !WRITE_BIT, e & WRITE_BIT != 0))
    }

    /// Touch count per slot over the whole trace — plot-ready histogram data.
    pub fn histogram(&self) -> BTreeMap<u32, u64> {
        let mut h = BTreeMap::new();
        for (slot, _) in self.events() {
            *h.entry(slot).or_insert(0u64) += 1;
        }
        h
    }

    /// CSV dump: header `step,slot,op`, one row per event, `r`/`w` ops.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(16 + self.events.len() * 12);
        out.push_str("step,slot,op\n");
        for (step, (slot, write)) in self.events().enumerate() {
            out.push_str(&format!("{step},{slot},{}\n", if write { 'w' } else { 'r' }));
        }
        out
    }

    /// Drops all recorded data, keeping the enabled flag.
    pub fn clear(&mut self) {
        self.events.clear();
        self.op_starts.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_and_groups_events() {
        let mut t = AccessTrace::new();
        t.begin_op();
        t.read(3);
        t.write(5);
        t.begin_op();
        t.read(3);
        assert_eq!(t.event_count(), 3);
        assert_eq!(t.op_count(), 2);
        assert_eq!(t.per_op_counts(), vec![2, 1]);
        assert_eq!(t.histogram().get(&3), Some(&2));
        assert_eq!(t.to_csv(), "step,slot,op\n0,3,r\n1,5,w\n2,3,r\n");
    }

    #[test]
    fn disabled_recorder_stays_empty() {
        let mut t = AccessTrace::new();
        t.set_enabled(false);
        t.begin_op();
        t.read(1);
        t.write(2);
        assert_eq!(t.event_count(), 0);
        assert_eq!(t.op_count(), 0);
        assert_eq!(t.to_csv(), "step,slot,op\n");
        t.set_enabled(true);
        t.begin_op();
        t.read(1);
        assert_eq!(t.per_op_counts(), vec![1]);
    }

    #[test]
    fn clear_resets_data_only() {
        let mut t = AccessTrace::new();
        t.begin_op();
        t.read(9);
        t.clear();
        assert_eq!(t.event_count(), 0);
        assert_eq!(t.op_count(), 0);
        assert!(t.enabled());
    }
}
