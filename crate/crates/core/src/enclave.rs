//! Process-local stand-in for a hardware trusted-execution enclave.
//!
//! The enclave is the oracle behind the odd (stateful) rounds of a hybrid
//! evaluation: it holds the long-term symmetric key shared with the second
//! party, a persistent [`StateStore`], and a table of registered round
//! functions. A query carries the first party's plaintext input `a` and the
//! second party's sealed input `c`; the oracle opens `c`, runs the requested
//! round function on `(a, b, state)`, and returns the first party's output
//! in the clear — plus, in dual mode, the second party's output sealed back
//! under the shared key.
//!
//! Observable behavior is deliberately narrow: a caller sees return values,
//! message sizes, and (when recording is on) the access trace of any
//! hardened store living in the state. The key is never readable through
//! the handle, and a query whose ciphertext fails authentication returns an
//! error without running the round function, so it cannot disturb state.
//!
//! Memory held in the state store is metered against a configurable budget
//! (default 128 MiB, the working-set ceiling typical of such enclaves);
//! inserts that would exceed the budget are rejected and leave the previous
//! entry intact.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::oram::KvStore;
use crate::symenc::{self, round_ad, SymKey};

/// Default state-memory ceiling: 128 MiB.
pub const DEFAULT_MEMORY_BUDGET: usize = 128 * 1024 * 1024;

/// Errors surfaced by the oracle interface.
#[derive(Debug, Error)]
pub enum EnclaveError {
    /// A query arrived before a key was provisioned.
    #[error("oracle is not provisioned")]
    NotProvisioned,
    /// `provision` was called on an already-keyed oracle.
    #[error("oracle is already provisioned")]
    AlreadyProvisioned,
    /// A round function id was registered twice.
    #[error("round function `{0}` is already registered")]
    DuplicateFunction(String),
    /// A query named an unregistered round function.
    #[error("round function `{0}` is not registered")]
    UnknownFunction(String),
    /// The sealed input failed authentication; state was not touched.
    #[error("input ciphertext failed authentication")]
    Auth,
    /// Inserting into the state store would exceed the memory budget.
    #[error("memory budget exceeded: {used} + {requested} bytes > {budget}")]
    MemoryBudget {
        /// Bytes already accounted to the state store.
        used: usize,
        /// Bytes the rejected insert asked for.
        requested: usize,
        /// The configured ceiling.
        budget: usize,
    },
    /// A round function rejected its inputs.
    #[error("round function rejected its input: {0}")]
    BadInput(String),
    /// A round function needed a state entry that is absent or of the
    /// wrong shape.
    #[error("state entry `{0}` is missing or has the wrong shape")]
    MissingState(String),
    /// A hardened store inside a round function reported an error.
    #[error("state store access failed: {0}")]
    Store(#[from] crate::oram::OramError),
}

enum Entry {
    Blob(Vec<u8>),
    Store(Box<dyn KvStore + Send>, usize),
}

impl Entry {
    fn cost(&self) -> usize {
        match self {
            Entry::Blob(b) => b.len(),
            Entry::Store(_, approx) => *approx,
        }
    }
}

/// Persistent per-session state: named byte blobs and named hardened
/// key-value stores, with approximate byte accounting against a budget.
pub struct StateStore {
    entries: HashMap<String, Entry>,
    used: usize,
    budget: usize,
}

impl StateStore {
    /// An empty store with the given memory ceiling in bytes.
    pub fn new(budget: usize) -> StateStore {
        StateStore { entries: HashMap::new(), used: 0, budget }
    }

    /// The configured memory ceiling in bytes.
    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Bytes currently accounted to live entries.
    pub fn used_bytes(&self) -> usize {
        self.used
    }

    fn insert(&mut self, key: &str, entry: Entry) -> Result<(), EnclaveError> {
        let refund = self.entries.get(key).map_or(0, Entry::cost);
        let requested = entry.cost();
        let base = self.used - refund;
        if base + requested > self.budget {
            return Err(EnclaveError::MemoryBudget {
                used: base,
                requested,
                budget: self.budget,
            });
        }
        self.used = base + requested;
        self.entries.insert(key.to_string(), entry);
        Ok(())
    }

    /// Stores a byte blob under `key`, replacing any previous entry.
    pub fn put_blob(&mut self, key: &str, bytes: Vec<u8>) -> Result<(), EnclaveError> {
        self.insert(key, Entry::Blob(bytes))
    }

    /// Reads a byte blob previously stored under `key`.
    pub fn blob(&self, key: &str) -> Option<&[u8]> {
        match self.entries.get(key) {
            Some(Entry::Blob(b)) => Some(b),
            _ => None,
        }
    }

    /// Stores a hardened key-value store under `key`. `approx_bytes` is the
    /// caller's estimate of its resident size, charged against the budget.
    pub fn put_store(
        &mut self,
        key: &str,
        store: Box<dyn KvStore + Send>,
        approx_bytes: usize,
    ) -> Result<(), EnclaveError> {
        self.insert(key, Entry::Store(store, approx_bytes))
    }

    /// Immutable access to a hardened store.
    pub fn store(&self, key: &str) -> Option<&(dyn KvStore + Send)> {
        match self.entries.get(key) {
            Some(Entry::Store(s, _)) => Some(s.as_ref()),
            _ => None,
        }
    }

    /// Mutable access to a hardened store.
    pub fn store_mut(&mut self, key: &str) -> Option<&mut (dyn KvStore + Send)> {
        match self.entries.get_mut(key) {
            Some(Entry::Store(s, _)) => Some(s.as_mut()),
            _ => None,
        }
    }

    /// Drops the entry under `key`, refunding its accounted bytes.
    pub fn remove(&mut self, key: &str) {
        if let Some(e) = self.entries.remove(key) {
            self.used -= e.cost();
        }
    }
}

/// A registered round function: `(a, b, state) -> (y_alice, y_bob)`.
pub type RoundFn =
    Box<dyn Fn(&[u8], &[u8], &mut StateStore) -> Result<(Vec<u8>, Vec<u8>), EnclaveError> + Send>;

/// One oracle request.
pub struct OracleQuery {
    /// Which registered round function to run.
    pub f_id: String,
    /// Round index; doubles as the associated data for opening `c` and for
    /// sealing the dual-mode reply.
    pub round: u16,
    /// First party's input, in the clear (she owns the oracle host).
    pub alice_input: Vec<u8>,
    /// Second party's input, sealed under the shared key.
    pub bob_ciphertext: Vec<u8>,
}

/// Whether a query returns only the first party's output or also the
/// second party's output sealed under the shared key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryMode {
    /// Return `y_alice`; the round function's `y_bob` is discarded (the
    /// plain odd-round protocol gives the second party no output).
    Plain,
    /// Return `y_alice` and `E_K(y_bob)` for forwarding to the second party.
    Dual,
}

/// The oracle's answer to one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryReply {
    /// First party's round output, in the clear.
    pub y_alice: Vec<u8>,
    /// Second party's round output sealed under the shared key; present
    /// only in [`QueryMode::Dual`].
    pub y_bob_sealed: Option<Vec<u8>>,
}

/// Handle to one simulated enclave. Queries are strictly serialized: the
/// handle may move between threads but offers no shared-access entry points.
pub struct Enclave {
    key: Option<SymKey>,
    seal_rng: ChaCha20Rng,
    fns: HashMap<String, RoundFn>,
    state: StateStore,
}

impl Enclave {
    /// A fresh, unprovisioned enclave with the default memory budget.
    pub fn new() -> Enclave {
        Enclave::with_budget(DEFAULT_MEMORY_BUDGET)
    }

    /// A fresh enclave with an explicit state-memory budget in bytes.
    pub fn with_budget(budget: usize) -> Enclave {
        Enclave {
            key: None,
            seal_rng: ChaCha20Rng::seed_from_u64(0),
            fns: HashMap::new(),
            state: StateStore::new(budget),
        }
    }

    /// Installs the long-term key shared with the second party. `seed`
    /// drives the nonce randomness of dual-mode replies so that a run can
    /// be replayed deterministically. The key is not readable back through
    /// any method of this type.
    pub fn provision(&mut self, key: SymKey, seed: u64) -> Result<(), EnclaveError> {
        if self.key.is_some() {
            return Err(EnclaveError::AlreadyProvisioned);
        }
        self.key = Some(key);
        self.seal_rng = ChaCha20Rng::seed_from_u64(seed);
        Ok(())
    }

    /// True once a key has been provisioned.
    pub fn is_provisioned(&self) -> bool {
        self.key.is_some()
    }

    /// Registers a round function under `id`. Ids are single-use.
    pub fn register_round_fn(&mut self, id: &str, f: RoundFn) -> Result<(), EnclaveError> {
        if self.fns.contains_key(id) {
            return Err(EnclaveError::DuplicateFunction(id.to_string()));
        }
        self.fns.insert(id.to_string(), f);
        Ok(())
    }

    /// Runs one oracle query: opens the sealed input, evaluates the round
    /// function against the persistent state, and packages the reply per
    /// `mode`. Authentication failure returns [`EnclaveError::Auth`] before
    /// the round function runs, so failed queries leave state untouched.
    pub fn query(&mut self, q: &OracleQuery, mode: QueryMode) -> Result<QueryReply, EnclaveError> {
        let key = self.key.as_ref().ok_or(EnclaveError::NotProvisioned)?;
        let f = self
            .fns
            .get(&q.f_id)
            .ok_or_else(|| EnclaveError::UnknownFunction(q.f_id.clone()))?;
        let b = symenc::open(key, &round_ad(q.round), &q.bob_ciphertext)
            .map_err(|_| EnclaveError::Auth)?;
        let (y_alice, y_bob) = f(&q.alice_input, &b, &mut self.state)?;
        let y_bob_sealed = match mode {
            QueryMode::Plain => None,
            QueryMode::Dual => {
                Some(symenc::seal(key, &round_ad(q.round), &y_bob, &mut self.seal_rng))
            }
        };
        Ok(QueryReply { y_alice, y_bob_sealed })
    }

    /// Bytes currently accounted to the state store.
    pub fn state_used_bytes(&self) -> usize {
        self.state.used_bytes()
    }

    /// Dumps the access trace of the hardened store under `state_key` as
    /// CSV (`step,slot,op`), or `None` if no such store exists. The trace
    /// is the one artifact of execution a host observer is modeled to see,
    /// so exposing it does not widen the interface.
    pub fn trace_csv(&self, state_key: &str) -> Option<String> {
        self.state.store(state_key).map(|s| s.trace().to_csv())
    }

    /// Per-operation touched-slot counts of the store under `state_key`.
    pub fn trace_op_counts(&self, state_key: &str) -> Option<Vec<usize>> {
        self.state.store(state_key).map(|s| s.trace().per_op_counts())
    }

    /// Slot-frequency histogram of the store under `state_key`.
    pub fn trace_histogram(&self, state_key: &str) -> Option<std::collections::BTreeMap<u32, u64>> {
        self.state.store(state_key).map(|s| s.trace().histogram())
    }

    /// Turns trace recording on or off for the store under `state_key`.
    /// Returns false if no such store exists.
    pub fn set_trace_recording(&mut self, state_key: &str, on: bool) -> bool {
        match self.state.store_mut(state_key) {
            Some(s) => {
                s.set_recording(on);
                true
            }
            None => false,
        }
    }
}

impl Default for Enclave {
    fn default() -> Enclave {
        Enclave::new()
    }
}

#[cfg(test)]
impl Enclave {
    /// Test-only backdoor: read a state blob directly, bypassing the query
    /// interface. Compiled out of non-test builds; the interface-audit test
    /// below checks that nothing above this point mentions it.
    pub(crate) fn backdoor_blob(&self, key: &str) -> Option<&[u8]> {
        self.state.blob(key)
    }
}
