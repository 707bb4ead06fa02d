//! Access-pattern hardening: branch-free primitives, hardened key-value
//! stores, and slot-trace instrumentation.
//!
//! Three stores implement the same array-like [`KvStore`] interface with
//! very different observable behavior:
//!
//! * [`OramForest`] — the two-tree store: every operation touches a
//!   capacity-dependent (never key-dependent) number of slots and reshuffles
//!   the nodes it visited;
//! * [`LinearStore`] — touches every slot exactly once per operation using
//!   the branch-free scan primitives: simple, and surprisingly competitive;
//! * [`UnblindedStore`] — touches exactly the requested slot; the honest
//!   baseline whose trace simply is the query sequence.
//!
//! All three feed the same [`AccessTrace`] recorder so a harness can dump
//! and compare their access patterns over identical schedules.

pub mod ct;
mod forest;
mod trace;

pub use forest::{height_cap, trace_budget, OramError, OramForest};
pub use trace::AccessTrace;

/// Uniform interface over the three store variants.
pub trait KvStore {
    /// Number of keys (fixed at construction).
    fn len(&self) -> usize;
    /// True when the store has no keys.
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Reads the value under `key` (0 if never written).
    fn get(&mut self, key: u64) -> Result<u64, OramError>;
    /// Replaces the value under `key`.
    fn put(&mut self, key: u64, value: u64) -> Result<(), OramError>;
    /// The access trace recorded so far.
    fn trace(&self) -> &AccessTrace;
    /// Enables or disables trace recording.
    fn set_recording(&mut self, on: bool);
}

impl KvStore for OramForest {
    fn len(&self) -> usize {
        self.capacity()
    }
    fn get(&mut self, key: u64) -> Result<u64, OramError> {
        OramForest::get(self, key)
    }
    fn put(&mut self, key: u64, value: u64) -> Result<(), OramError> {
        OramForest::put(self, key, value)
    }
    fn trace(&self) -> &AccessTrace {
        OramForest::trace(self)
    }
    fn set_recording(&mut self, on: bool) {
        OramForest::set_recording(self, on)
    }
}

/// Whole-array scan store: every operation reads or rewrites all `n` slots
/// through the branch-free select primitives, so the trace is the constant
/// sequence `0, 1, …, n−1` per operation.
pub struct LinearStore {
    slots: Vec<u64>,
    trace: AccessTrace,
}

impl LinearStore {
    /// A store of `capacity` zero values.
    pub fn new(capacity: usize) -> LinearStore {
        LinearStore::with_values(&vec![0; capacity])
    }

    /// A store pre-loaded with `values`.
    pub fn with_values(values: &[u64]) -> LinearStore {
        assert!(!values.is_empty(), "store needs at least one key");
        LinearStore { slots: values.to_vec(), trace: AccessTrace::new() }
    }

    fn check(&self, key: u64) -> Result<(), OramError> {
        if key >= self.slots.len() as u64 {
            return Err(OramError::KeyRange { key, capacity: self.slots.len() });
        }
        Ok(())
    }
}

impl KvStore for LinearStore {
    fn len(&self) -> usize {
        self.slots.len()
    }

    fn get(&mut self, key: u64) -> Result<u64, OramError> {
        self.check(key)?;
        self.trace.begin_op();
        let mut acc = 0u64;
        for (i, v) in self.slots.iter().enumerate() {
            self.trace.read(i as u32);
            acc |= v & ct::make_mask(ct::bf_eq(i as u64, key));
        }
        Ok(acc)
    }

    fn put(&mut self, key: u64, value: u64) -> Result<(), OramError> {
        self.check(key)?;
        self.trace.begin_op();
        for (i, s) in self.slots.iter_mut().enumerate() {
            self.trace.write(i as u32);
            *s = ct::bf_select(ct::bf_eq(i as u64, key), value, *s);
        }
        Ok(())
    }

    fn trace(&self) -> &AccessTrace {
        &self.trace
    }

    fn set_recording(&mut self, on: bool) {
        self.trace.set_enabled(on);
    }
}

/// Plain array store: the trace of a query schedule is the schedule itself.
pub struct UnblindedStore {
    slots: Vec<u64>,
    trace: AccessTrace,
}

impl UnblindedStore {
    /// A store of `capacity` zero values.
    pub fn new(capacity: usize) -> UnblindedStore {
        UnblindedStore::with_values(&vec![0; capacity])
    }

    /// A store pre-loaded with `values`.
    pub fn with_values(values: &[u64]) -> UnblindedStore {
        assert!(!values.is_empty(), "store needs at least one key");
        UnblindedStore { slots: values.to_vec(), trace: AccessTrace::new() }
    }

    fn check(&self, key: u64) -> Result<(), OramError> {
        if key >= self.slots.len() as u64 {
            return Err(OramError::KeyRange { key, capacity: self.slots.len() });
        }
        Ok(())
    }
}

impl KvStore for UnblindedStore {
    fn len(&self) -> usize {
        self.slots.len()
    }

    fn get(&mut self, key: u64) -> Result<u64, OramError> {
        self.check(key)?;
        self.trace.begin_op();
        self.trace.read(key as u32);
        Ok(self.slots[key as usize])
    }

    fn put(&mut self, key: u64, value: u64) -> Result<(), OramError> {
        self.check(key)?;
        self.trace.begin_op();
        self.trace.write(key as u32);
        self.slots[key as usize] = value;
        Ok(())
    }

    fn trace(&self) -> &AccessTrace {
        &self.trace
    }

    fn set_recording(&mut self, on: bool) {
        self.trace.set_enabled(on);
    }
}

/// Which store variant to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoreKind {
    /// The two-tree oblivious store.
    Tree,
    /// The branch-free whole-array scan.
    Linear,
    /// Direct array access.
    Unblinded,
}

impl std::str::FromStr for StoreKind {
    type Err = String;

    fn from_str(s: &str) -> Result<StoreKind, String> {
        match s {
            "tree" => Ok(StoreKind::Tree),
            "linear" => Ok(StoreKind::Linear),
            "unblinded" => Ok(StoreKind::Unblinded),
            other => Err(format!("unknown store kind `{other}` (use tree|linear|unblinded)")),
        }
    }
}

impl std::fmt::Display for StoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StoreKind::Tree => "tree",
            StoreKind::Linear => "linear",
            StoreKind::Unblinded => "unblinded",
        })
    }
}

/// Builds a store of the requested kind pre-loaded with `values`. The seed
/// only matters for the tree store.
pub fn make_store(kind: StoreKind, values: &[u64], seed: u64) -> Box<dyn KvStore + Send> {
    match kind {
        StoreKind::Tree => Box::new(OramForest::with_values(values, seed)),
        StoreKind::Linear => Box::new(LinearStore::with_values(values)),
        StoreKind::Unblinded => Box::new(UnblindedStore::with_values(values)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_store_touches_every_slot_once_per_op() {
        let mut store = LinearStore::with_values(&[5, 6, 7, 8]);
        assert_eq!(store.get(2).unwrap(), 7);
        store.put(0, 99).unwrap();
        assert_eq!(store.get(0).unwrap(), 99);
        assert_eq!(store.trace().per_op_counts(), vec![4, 4, 4]);
        let slots: Vec<u32> = store.trace().events().map(|(s, _)| s).collect();
        assert_eq!(&slots[..4], &[0, 1, 2, 3]);
    }

    #[test]
    fn unblinded_store_trace_is_the_schedule() {
        let mut store = UnblindedStore::new(100);
        for k in 0..100 {
            store.get(k).unwrap();
        }
        let slots: Vec<u32> = store.trace().events().map(|(s, _)| s).collect();
        assert_eq!(slots, (0..100).collect::<Vec<u32>>());
        assert!(slots.windows(2).all(|w| w[0] < w[1]), "diagonal must be strictly increasing");
    }

    #[test]
    fn all_kinds_agree_with_array_semantics() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(10);
        let values: Vec<u64> = (0..16).map(|_| rng.gen()).collect();
        for kind in [StoreKind::Tree, StoreKind::Linear, StoreKind::Unblinded] {
            let mut store = make_store(kind, &values, 77);
            let mut model = values.clone();
            assert_eq!(store.len(), 16);
            for _ in 0..60 {
                let key = rng.gen_range(0..16u64);
                if rng.gen() {
                    let v = rng.gen();
                    store.put(key, v).unwrap();
                    model[key as usize] = v;
                } else {
                    assert_eq!(store.get(key).unwrap(), model[key as usize], "{kind}");
                }
            }
            assert!(store.get(16).is_err());
        }
    }

    #[test]
    fn store_kind_parses_and_prints() {
        for kind in [StoreKind::Tree, StoreKind::Linear, StoreKind::Unblinded] {
            assert_eq!(kind.to_string().parse::<StoreKind>().unwrap(), kind);
        }
        assert!("hash".parse::<StoreKind>().is_err());
    }
}
