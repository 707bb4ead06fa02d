//! Two-party secure function evaluation that mixes hardware-enclave rounds
//! with garbled-circuit rounds.
//!
//! The crate is organized around a simple pipeline:
//!
//! * [`circuit`] — boolean circuits, their text format, plain evaluation, and
//!   the generators used by the applications;
//! * [`garble`] — a projective garbling scheme (free XOR, row reduction,
//!   point-and-permute) over those circuits;
//! * [`ot`] — batched 1-out-of-2 oblivious transfer for the evaluator's
//!   input tokens;
//! * [`symenc`] — the authenticated symmetric channel between the second
//!   party and the first party's enclave;
//! * [`oram`] — branch-free primitives and an oblivious two-tree store that
//!   harden enclave round functions against access-pattern leakage;
//! * [`enclave`] — a process-local stand-in for the hardware enclave: keyed
//!   oracle, persistent state, memory budget, trace recording;
//! * [`partition`] — multi-round function partitions and their reference
//!   executor;
//! * [`protocol`] — the message-level protocols (enclave-assisted rounds,
//!   garbled-circuit rounds, and their duals), the hybrid composer,
//!   transcripts, views, and the in-process/TCP transports;
//! * [`apps`] — the comparison, keyed-database, and routing applications
//!   built on top of all of the above.

pub mod apps;
pub mod bits;
pub mod circuit;
pub mod enclave;
pub mod garble;
pub mod oram;
pub mod ot;
pub mod partition;
pub mod protocol;
pub mod symenc;

pub use apps::{AppError, Mode};
pub use circuit::{parse_circuit, Circuit, CircuitError, Gate, WireId};
pub use garble::{
    decode_with_table, evaluate, garble, GarbleError, GarbledCircuit, GarblerState, OutputDecoder,
    WireToken,
};
pub use enclave::{Enclave, EnclaveError, OracleQuery, QueryMode, QueryReply};
pub use oram::{make_store, AccessTrace, KvStore, OramError, OramForest, StoreKind};
pub use partition::{
    check_correct, exec_reference, make_identity, ExecResult, PartitionError, PartitionScheme,
    RoundSpec,
};
pub use protocol::{
    run_gc_local, run_hyb_local, run_local, run_tcp, setup_oracle, view_of, CoinRng, Frame,
    FrameKind, LocalRun, PartyProc, ProtocolError, Role, Transcript, View,
};
