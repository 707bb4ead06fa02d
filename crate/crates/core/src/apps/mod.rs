//! End-to-end two-party applications over the partition framework.
//!
//! Three computations, each runnable under four execution modes:
//!
//! * [`millionaires`](Millionaires) — big-integer comparison;
//! * [`database`](Database) — a shared key-value store where part of the
//!   second party's query stream needs extra protection;
//! * [`dijkstra`](RoadNetwork) — shortest paths on a road network with a
//!   highly sensitive district.
//!
//! [`Mode`] picks how the work is split between the local oracle and the
//! garbled-circuit machinery:
//!
//! * `Naive` — everything runs in the oracle with direct memory access;
//! * `Sgx` — everything runs in the oracle behind branch-free, fixed
//!   access-pattern primitives;
//! * `Hybrid` — an oracle round handles the bulk of the work and a circuit
//!   round handles the specially protected slice of the input;
//! * `Gc` — the whole function is evaluated as one garbled circuit.
//!
//! Every app exposes the same shape: a config describing the workload, a
//! deterministic instance generator, per-mode runners returning both the
//! decoded application output and the raw protocol run, and a plain
//! reference implementation (see [`oracle`]) the outputs are checked
//! against.

pub mod config;
mod database;
mod dijkstra;
mod millionaires;
pub mod oracle;

pub use database::{
    Database, DatabaseConfig, DatabaseRun, DbQuery, QueryKind, DB_STATE_KEY, RECORD_BYTES,
};
pub use dijkstra::{
    DijkstraConfig, DijkstraRun, Edge, RoadNetwork, COST_BITS, INF_COST, NS_WEIGHT_MAX,
    NS_WEIGHT_MIN,
};
pub use millionaires::{Millionaires, MillionairesRun};

use std::sync::Arc;

use crate::circuit::{Circuit, Gate};
use crate::enclave::Enclave;
use crate::partition::{PartitionError, PartitionScheme, RoundSpec, Splitter};
use crate::protocol::{run_gc_local, run_hyb_local, LocalRun, ProtocolError};

/// How an application is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Single oracle round, direct memory access inside the oracle.
    Naive,
    /// Single oracle round, branch-free hardened access inside the oracle.
    Sgx,
    /// Oracle round for the ordinary part, circuit round for the protected
    /// part.
    Hybrid,
    /// One monolithic garbled circuit.
    Gc,
}

impl Mode {
    /// All modes, in presentation order.
    pub fn all() -> [Mode; 4] {
        [Mode::Naive, Mode::Sgx, Mode::Hybrid, Mode::Gc]
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "naive" => Ok(Mode::Naive),
            "sgx" => Ok(Mode::Sgx),
            "hybrid" => Ok(Mode::Hybrid),
            "gc" => Ok(Mode::Gc),
            other => Err(format!("unknown mode `{other}` (use naive|sgx|hybrid|gc)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Naive => "naive",
            Mode::Sgx => "sgx",
            Mode::Hybrid => "hybrid",
            Mode::Gc => "gc",
        })
    }
}

/// Application-layer failures.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// A workload description is internally inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// The requested mode is not defined for this application.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A protocol output did not decode to a well-formed result.
    #[error("malformed output: {0}")]
    BadOutput(String),
    /// A decoded route violates the network's invariants.
    #[error("illegal route: {0}")]
    IllegalRoute(String),
    /// The underlying protocol run failed.
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    /// Building or splitting a scheme failed.
    #[error(transparent)]
    Partition(#[from] PartitionError),
    /// A config file could not be read.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How one protocol run executes.
pub enum JobPlan {
    /// A single garbled-circuit round; `dual` routes the output to the
    /// second party.
    Circuit { circuit: Arc<Circuit>, dual: bool },
    /// An oracle-backed partition scheme (one or more rounds).
    Scheme { scheme: Arc<PartitionScheme> },
}

impl JobPlan {
    /// Encrypted garbled rows this plan ships per run.
    pub fn rows(&self) -> usize {
        match self {
            JobPlan::Circuit { circuit, .. } => garbled_rows(circuit),
            JobPlan::Scheme { scheme } => scheme
                .rounds()
                .iter()
                .map(|r| match r {
                    RoundSpec::Even(e) => garbled_rows(&e.circuit),
                    RoundSpec::Odd(_) => 0,
                })
                .sum(),
        }
    }
}

/// A fully prepared run of one application under one mode: the execution
/// plan plus both parties' input bits. This is the handle a transport
/// harness needs to drive the run itself (for example over a socket) and
/// decode the result with the app's own decoder afterwards.
pub struct AppJob {
    pub plan: JobPlan,
    pub input_a: Vec<bool>,
    pub input_b: Vec<bool>,
    /// Encrypted garbled rows the plan ships (0 for pure oracle plans).
    pub rows: usize,
}

impl AppJob {
    /// Runs the job in process and returns the raw run plus the oracle,
    /// when the plan used one.
    pub fn run_local(
        &self,
        k_bits: usize,
        seed: u64,
    ) -> Result<(LocalRun, Option<Enclave>), AppError> {
        match &self.plan {
            JobPlan::Circuit { circuit, dual } => {
                let run =
                    run_gc_local(circuit, k_bits, *dual, &self.input_a, &self.input_b, seed)?;
                Ok((run, None))
            }
            JobPlan::Scheme { scheme } => {
                let (run, oracle) =
                    run_hyb_local(scheme, k_bits, &self.input_a, &self.input_b, seed)?;
                Ok((run, Some(oracle)))
            }
        }
    }
}

/// Number of encrypted rows a garbling of `c` ships: three per AND/OR
/// gate, none for the free gates.
pub fn garbled_rows(c: &Circuit) -> usize {
    c.gates
        .iter()
        .filter(|g| matches!(g, Gate::And { .. } | Gate::Or { .. }))
        .count()
        * 3
}

/// Splitter that sends the whole input to round 1.
fn whole_input() -> Splitter {
    Box::new(|x, _| vec![x.to_vec()])
}

/// Splitter that cuts the input at a fixed bit position: `[..cut]` goes to
/// round 1, the rest to round 2.
fn cut_at(cut: usize) -> Splitter {
    Box::new(move |x, _| vec![x[..cut].to_vec(), x[cut..].to_vec()])
}
