//! A shared key-value store: the first party contributes the initial
//! contents, the second party a stream of reads and writes. Some reads
//! carry an extra protection mark — those lookups must stay out of the
//! oracle entirely, so the hybrid split applies the ordinary traffic in
//! the oracle, snapshots the contents, and answers the marked lookups
//! inside a circuit over that snapshot.
//!
//! Because of that routing, the hybrid mode has two-phase semantics:
//! marked lookups read the store as it stands *after* all ordinary
//! queries. Streams that mix writes with marked reads therefore compare
//! against [`oracle::apply_routed`]; the single-oracle and monolithic
//! circuit modes apply the stream in order and compare against
//! [`oracle::apply_in_order`]. Read-only streams agree under both.
//!
//! Wire format for oracle rounds: each query is a fixed 13-byte record
//! `[kind u8][index u32 BE][value u64 BE]` with kind 0 = read, 1 = write
//! (value ignored for reads). Entries and results travel as 8-byte
//! big-endian words.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{cut_at, oracle, whole_input, AppError, AppJob, JobPlan, Mode};
use crate::bits::{bits_to_u64, bytes_to_bits, u64_to_bits};
use crate::circuit::build::{index_width, CircuitBuilder};
use crate::circuit::{Circuit, WireId};
use crate::enclave::{Enclave, EnclaveError};
use crate::oram::{make_store, StoreKind};
use crate::partition::{EvenRound, OddFn, OddRound, PartitionScheme, RoundSpec};
use crate::protocol::{derive_seed, LocalRun};

/// Fixed width of one query record on the oracle wire.
pub const RECORD_BYTES: usize = 13;

/// State key the oracle keeps the store under; traces are pulled from it.
pub const DB_STATE_KEY: &str = "db";

/// What a query does.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryKind {
    /// Read one entry.
    Select,
    /// Overwrite one entry with the given value.
    Set(u64),
}

/// One query in the second party's stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DbQuery {
    /// Entry index the query touches.
    pub index: u64,
    /// Read or write.
    pub kind: QueryKind,
    /// Marked queries are answered outside the oracle; only reads may
    /// carry the mark.
    pub sensitive: bool,
}

impl DbQuery {
    pub fn select(index: u64) -> DbQuery {
        DbQuery { index, kind: QueryKind::Select, sensitive: false }
    }

    pub fn sensitive_select(index: u64) -> DbQuery {
        DbQuery { index, kind: QueryKind::Select, sensitive: true }
    }

    pub fn set(index: u64, value: u64) -> DbQuery {
        DbQuery { index, kind: QueryKind::Set(value), sensitive: false }
    }

    /// The 13-byte oracle wire encoding.
    fn record(&self) -> [u8; RECORD_BYTES] {
        let mut rec = [0u8; RECORD_BYTES];
        let value = match self.kind {
            QueryKind::Select => 0,
            QueryKind::Set(v) => {
                rec[0] = 1;
                v
            }
        };
        rec[1..5].copy_from_slice(&(self.index as u32).to_be_bytes());
        rec[5..13].copy_from_slice(&value.to_be_bytes());
        rec
    }
}

/// Workload description: store size, the query stream, and which hardened
/// store backs the oracle modes.
#[derive(Clone, Debug)]
pub struct DatabaseConfig {
    /// Number of 64-bit entries.
    pub entry_count: usize,
    /// The second party's stream, in order.
    pub queries: Vec<DbQuery>,
    /// Store backing the hardened oracle mode (`Sgx`); the `Naive` mode
    /// always uses direct array access.
    pub store: StoreKind,
    /// Seed for deterministic instance material (entry values, stream
    /// generation, store layout).
    pub seed: u64,
}

impl DatabaseConfig {
    /// A read-only stream of `query_count` uniform lookups with
    /// `sensitive_count` of them marked, at deterministic positions.
    pub fn random_reads(
        entry_count: usize,
        query_count: usize,
        sensitive_count: usize,
        store: StoreKind,
        seed: u64,
    ) -> DatabaseConfig {
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, 50));
        let mut queries: Vec<DbQuery> =
            (0..query_count).map(|_| DbQuery::select(rng.gen_range(0..entry_count as u64))).collect();
        let mut positions: Vec<usize> = (0..query_count).collect();
        for i in 0..sensitive_count.min(query_count) {
            let j = rng.gen_range(i..query_count);
            positions.swap(i, j);
            queries[positions[i]].sensitive = true;
        }
        DatabaseConfig { entry_count, queries, store, seed }
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if self.entry_count == 0 || self.entry_count > u32::MAX as usize {
            return Err(AppError::InvalidConfig("entry count must fit a 32-bit index".into()));
        }
        if self.queries.is_empty() {
            return Err(AppError::InvalidConfig("the query stream is empty".into()));
        }
        for (i, q) in self.queries.iter().enumerate() {
            if q.index >= self.entry_count as u64 {
                return Err(AppError::InvalidConfig(format!(
                    "query {i} touches index {} of a {}-entry store",
                    q.index, self.entry_count
                )));
            }
            if q.sensitive && q.kind != QueryKind::Select {
                return Err(AppError::InvalidConfig(format!(
                    "query {i} is a marked write; only reads may carry the mark"
                )));
            }
        }
        Ok(())
    }

    /// Queries that produce an output, in stream order.
    pub fn lookup_count(&self) -> usize {
        self.queries.iter().filter(|q| q.kind == QueryKind::Select).count()
    }

    fn sensitive_queries(&self) -> impl Iterator<Item = &DbQuery> {
        self.queries.iter().filter(|q| q.sensitive)
    }

    fn ordinary_queries(&self) -> impl Iterator<Item = &DbQuery> {
        self.queries.iter().filter(|q| !q.sensitive)
    }

    /// How many queries carry the protection mark.
    pub fn sensitive_count(&self) -> usize {
        self.sensitive_queries().count()
    }

    fn ordinary_lookup_count(&self) -> usize {
        self.ordinary_queries().filter(|q| q.kind == QueryKind::Select).count()
    }
}

/// One materialized instance: the config plus the first party's entries.
pub struct Database {
    pub cfg: DatabaseConfig,
    pub entries: Vec<u64>,
}

/// Outcome of one protocol run of the workload.
pub struct DatabaseRun {
    /// One value per lookup, in original stream order. Delivered to the
    /// second party in every mode.
    pub results: Vec<u64>,
    /// The raw protocol run.
    pub run: LocalRun,
    /// The post-run oracle (oracle-backed modes only); access traces are
    /// read from it under [`DB_STATE_KEY`].
    pub oracle: Option<Enclave>,
    /// Encrypted garbled rows shipped by the run.
    pub rows: usize,
}

impl Database {
    /// Draws uniform entry values from the config seed.
    pub fn new(cfg: DatabaseConfig) -> Result<Database, AppError> {
        cfg.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(cfg.seed, 51));
        let entries = (0..cfg.entry_count).map(|_| rng.gen()).collect();
        Ok(Database { cfg, entries })
    }

    /// Uses explicit entry values.
    pub fn with_entries(cfg: DatabaseConfig, entries: Vec<u64>) -> Result<Database, AppError> {
        cfg.validate()?;
        if entries.len() != cfg.entry_count {
            return Err(AppError::InvalidConfig("entry values must match the entry count".into()));
        }
        Ok(Database { cfg, entries })
    }

    /// The plain reference results for `mode` (stream order for in-order
    /// modes, two-phase for the hybrid split).
    pub fn expected(&self, mode: Mode) -> Vec<u64> {
        let mut contents = self.entries.clone();
        match mode {
            Mode::Hybrid => oracle::apply_routed(&mut contents, &self.cfg.queries),
            _ => oracle::apply_in_order(&mut contents, &self.cfg.queries),
        }
    }

    fn entries_bits(&self) -> Vec<bool> {
        let bytes: Vec<u8> = self.entries.iter().flat_map(|e| e.to_be_bytes()).collect();
        bytes_to_bits(&bytes)
    }

    fn records_bits<'q>(queries: impl Iterator<Item = &'q DbQuery>) -> Vec<bool> {
        let bytes: Vec<u8> = queries.flat_map(|q| q.record()).collect();
        bytes_to_bits(&bytes)
    }

    /// The single-round oracle scheme: the whole stream runs inside the
    /// oracle against the chosen store, results sealed back to the second
    /// party.
    pub fn oracle_scheme(&self, hardened: bool) -> Arc<PartitionScheme> {
        let kind = if hardened { self.cfg.store } else { StoreKind::Unblinded };
        let name = format!("kv-stream-{kind}");
        let f = stream_round_fn(kind, self.cfg.entry_count, derive_seed(self.cfg.seed, 52), false);
        Arc::new(PartitionScheme::new(
            &name,
            vec![RoundSpec::Odd(OddRound { f_id: name.clone(), f, dual: true })],
            whole_input(),
            whole_input(),
        ))
    }

    /// The two-round split: ordinary traffic and a snapshot in the oracle,
    /// marked lookups answered by a circuit over the snapshot. The circuit
    /// also passes the sealed round-1 results through so the second party
    /// ends with every result.
    pub fn hybrid_scheme(&self) -> Arc<PartitionScheme> {
        let name = "kv-stream-snapshot".to_string();
        let f = stream_round_fn(
            self.cfg.store,
            self.cfg.entry_count,
            derive_seed(self.cfg.seed, 52),
            true,
        );
        let circuit = Arc::new(self.snapshot_circuit());
        let cut = self.ordinary_queries_bit_len();
        Arc::new(PartitionScheme::new(
            "kv/hybrid",
            vec![
                RoundSpec::Odd(OddRound { f_id: name, f, dual: true }),
                RoundSpec::Even(EvenRound { circuit, dual: true }),
            ],
            cut_at(self.cfg.entry_count * 64),
            cut_at(cut),
        ))
    }

    fn ordinary_queries_bit_len(&self) -> usize {
        self.cfg.ordinary_queries().count() * RECORD_BYTES * 8
    }

    /// Round-2 circuit: reads the marked indices out of the snapshot and
    /// echoes the round-1 results so the final output carries everything.
    pub fn snapshot_circuit(&self) -> Circuit {
        let n = self.cfg.entry_count;
        let iw = index_width(n);
        let s = self.cfg.sensitive_count();
        let echo = self.cfg.ordinary_lookup_count() * 64;
        let mut cb = CircuitBuilder::new(n * 64, s * iw + echo);
        let a = cb.alice_wires();
        let b = cb.bob_wires();
        let rows: Vec<Vec<WireId>> = a.chunks(64).map(<[WireId]>::to_vec).collect();
        let mut outputs = Vec::new();
        for q in 0..s {
            let sel = &b[q * iw..(q + 1) * iw];
            outputs.extend(cb.select_word(sel, &rows));
        }
        outputs.extend_from_slice(&b[s * iw..]);
        cb.finish(outputs)
    }

    /// First/second party inputs for the hybrid split: entries, then the
    /// ordinary records followed by the marked indices.
    pub fn hybrid_inputs(&self) -> (Vec<bool>, Vec<bool>) {
        let iw = index_width(self.cfg.entry_count);
        let mut b = Self::records_bits(self.cfg.ordinary_queries());
        for q in self.cfg.sensitive_queries() {
            b.extend(u64_to_bits(q.index, iw));
        }
        (self.entries_bits(), b)
    }

    /// The monolithic circuit: the whole stream, in order, as gates.
    /// Query kinds are structural; only indices and written values are
    /// inputs.
    pub fn workload_circuit(&self) -> Circuit {
        let n = self.cfg.entry_count;
        let iw = index_width(n);
        let b_bits: usize = self
            .cfg
            .queries
            .iter()
            .map(|q| iw + if matches!(q.kind, QueryKind::Set(_)) { 64 } else { 0 })
            .sum();
        let mut cb = CircuitBuilder::new(n * 64, b_bits);
        let a = cb.alice_wires();
        let b = cb.bob_wires();
        let mut rows: Vec<Vec<WireId>> = a.chunks(64).map(<[WireId]>::to_vec).collect();
        let mut outputs = Vec::new();
        let mut at = 0;
        for q in &self.cfg.queries {
            let sel = b[at..at + iw].to_vec();
            at += iw;
            match q.kind {
                QueryKind::Select => outputs.extend(cb.select_word(&sel, &rows)),
                QueryKind::Set(_) => {
                    let val = b[at..at + 64].to_vec();
                    at += 64;
                    let hot = cb.one_hot(&sel, n);
                    for (i, row) in rows.iter_mut().enumerate() {
                        *row = cb.mux_word(hot[i], &val, row);
                    }
                }
            }
        }
        cb.finish(outputs)
    }

    /// Second party input bits for the monolithic circuit.
    pub fn workload_input_b(&self) -> Vec<bool> {
        let iw = index_width(self.cfg.entry_count);
        let mut b = Vec::new();
        for q in &self.cfg.queries {
            b.extend(u64_to_bits(q.index, iw));
            if let QueryKind::Set(v) = q.kind {
                b.extend(u64_to_bits(v, 64));
            }
        }
        b
    }

    /// Prepares the runnable job for `mode`.
    pub fn job(&self, mode: Mode) -> Result<AppJob, AppError> {
        let (plan, input_b) = match mode {
            Mode::Naive | Mode::Sgx => (
                JobPlan::Scheme { scheme: self.oracle_scheme(mode == Mode::Sgx) },
                Self::records_bits(self.cfg.queries.iter()),
            ),
            Mode::Hybrid => {
                (JobPlan::Scheme { scheme: self.hybrid_scheme() }, self.hybrid_inputs().1)
            }
            Mode::Gc => (
                JobPlan::Circuit { circuit: Arc::new(self.workload_circuit()), dual: true },
                self.workload_input_b(),
            ),
        };
        let rows = plan.rows();
        Ok(AppJob { plan, input_a: self.entries_bits(), input_b, rows })
    }

    /// Decodes the per-lookup results of a finished run back into stream
    /// order. All modes deliver to the second party; the hybrid split
    /// answers marked lookups first, so they are re-interleaved here.
    pub fn results(&self, mode: Mode, run: &LocalRun) -> Result<Vec<u64>, AppError> {
        if mode != Mode::Hybrid {
            return words_from_bits(&run.y1, self.cfg.lookup_count(), "results");
        }
        let s = self.cfg.sensitive_count();
        let flat = words_from_bits(&run.y1, s + self.cfg.ordinary_lookup_count(), "results")?;
        let (marked, ordinary) = flat.split_at(s);
        let (mut mi, mut oi) = (0, 0);
        let mut results = Vec::new();
        for q in &self.cfg.queries {
            match (q.kind, q.sensitive) {
                (QueryKind::Select, true) => {
                    results.push(marked[mi]);
                    mi += 1;
                }
                (QueryKind::Select, false) => {
                    results.push(ordinary[oi]);
                    oi += 1;
                }
                (QueryKind::Set(_), _) => {}
            }
        }
        Ok(results)
    }

    /// Runs the workload under `mode` and decodes the per-lookup results
    /// back into stream order.
    pub fn run(&self, mode: Mode, k_bits: usize, seed: u64) -> Result<DatabaseRun, AppError> {
        let job = self.job(mode)?;
        let (run, oracle) = job.run_local(k_bits, seed)?;
        let results = self.results(mode, &run)?;
        Ok(DatabaseRun { results, run, oracle, rows: job.rows })
    }
}

fn words_from_bits(bits: &[bool], expect: usize, what: &str) -> Result<Vec<u64>, AppError> {
    if bits.len() != expect * 64 {
        return Err(AppError::BadOutput(format!(
            "{what}: got {} bits, expected {} words",
            bits.len(),
            expect
        )));
    }
    Ok(bits.chunks(64).map(bits_to_u64).collect())
}

/// The oracle round function: loads the first party's entries into a
/// fresh store of the given kind, applies the record stream, and returns
/// `(snapshot-or-empty, lookup results)`. The store stays in oracle state
/// under [`DB_STATE_KEY`] so its access trace outlives the round.
fn stream_round_fn(kind: StoreKind, n: usize, store_seed: u64, snapshot: bool) -> OddFn {
    Arc::new(move |u, v, state| {
        if u.len() != n * 8 {
            return Err(EnclaveError::BadInput(format!(
                "entry block is {} bytes for a {n}-entry store",
                u.len()
            )));
        }
        if v.len() % RECORD_BYTES != 0 {
            return Err(EnclaveError::BadInput("ragged query record block".into()));
        }
        let entries: Vec<u64> =
            u.chunks(8).map(|c| u64::from_be_bytes(c.try_into().unwrap())).collect();
        let mut store = make_store(kind, &entries, store_seed);
        let mut results = Vec::new();
        for rec in v.chunks(RECORD_BYTES) {
            let index = u32::from_be_bytes(rec[1..5].try_into().unwrap()) as u64;
            if index >= n as u64 {
                return Err(EnclaveError::BadInput(format!("index {index} out of range")));
            }
            match rec[0] {
                0 => results.extend_from_slice(&store.get(index)?.to_be_bytes()),
                1 => store.put(index, u64::from_be_bytes(rec[5..13].try_into().unwrap()))?,
                k => return Err(EnclaveError::BadInput(format!("unknown record kind {k}"))),
            }
        }
        let y_alice = if snapshot {
            let mut snap = Vec::with_capacity(n * 8);
            for i in 0..n {
                snap.extend_from_slice(&store.get(i as u64)?.to_be_bytes());
            }
            snap
        } else {
            Vec::new()
        };
        state.put_store(DB_STATE_KEY, store, n * 32 + 1024)?;
        Ok((y_alice, results))
    })
}
