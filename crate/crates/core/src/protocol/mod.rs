//! Two-party evaluation protocols over partitioned functions.
//!
//! Each party is a deterministic state machine ([`PartyProc`]) driven by
//! frames: `step` consumes at most one incoming frame and returns the frames
//! to send. Stateful (odd) rounds run through the in-process oracle behind
//! an authenticated channel; stateless (even) rounds run as garbled circuits
//! with oblivious transfer for the evaluator's inputs. The composer
//! ([`HybAlice`]/[`HybBob`]) walks a [`PartitionScheme`](crate::partition::
//! PartitionScheme) round by round, threading one oracle handle across all
//! stateful rounds and chaining each round's outputs into the next round's
//! inputs.
//!
//! Every run yields a [`Transcript`]: inputs, the full message log, the
//! first party's oracle interactions, and both parties' logged coins. Runs
//! are deterministic given the seed, so replaying a transcript's coins
//! reproduces it byte for byte — that is the basis of the replay and
//! view-leakage tests. The in-process scheduler ([`run_local`]) and the TCP
//! transport ([`run_tcp`]) exchange identical frame bytes, so transcripts
//! agree across transports.
//!
//! Output routing is declared per round: a final stateless round sends the
//! result to the first party, or to the second when the round is dual; a
//! final stateful round does the same, and a dual final stateful round whose
//! oracle reply also carries a first-party value is rejected at run time
//! ([`ProtocolError::MixedOutputs`]), keeping each run single-sided per
//! declared recipient.

mod frame;
mod gc;
mod hyb;
mod run;
mod transcript;

pub use frame::{Frame, FrameKind, MAX_PAYLOAD};
pub use gc::{GcAlice, GcBob};
pub use hyb::{HybAlice, HybBob};
pub use run::{
    run_gc_local, run_hyb_local, run_local, run_tcp, setup_oracle, setup_oracle_with_key,
    LocalRun,
};
pub use transcript::{
    derive_seed, loggable, view_of, CoinRng, LoggedFrame, OracleRecord, Role, Transcript, View,
};

use thiserror::Error;

/// Errors raised while driving a protocol run.
#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("transport: {0}")]
    Io(#[from] std::io::Error),
    #[error("garbling: {0}")]
    Garble(#[from] crate::garble::GarbleError),
    #[error("transfer: {0}")]
    Ot(#[from] crate::ot::OtError),
    #[error("circuit: {0}")]
    Circuit(#[from] crate::circuit::CircuitError),
    #[error("partition: {0}")]
    Partition(#[from] crate::partition::PartitionError),
    #[error("oracle failure in round {round}: {source}")]
    Oracle { round: u16, source: crate::enclave::EnclaveError },
    #[error("authentication failed on a round-{round} ciphertext")]
    Auth { round: u16 },
    #[error("unexpected {kind:?} frame in round {round}")]
    UnexpectedFrame { round: u16, kind: FrameKind },
    #[error("malformed message: {0}")]
    Malformed(&'static str),
    #[error("final stateful round delivered outputs to both parties")]
    MixedOutputs,
    #[error("run stalled before both parties halted")]
    Stalled,
}

/// One party's protocol machine.
///
/// The driver calls [`step`](PartyProc::step) with `None` once to kick the
/// machine (a party that speaks first returns its opening frames; the other
/// returns nothing), then once per delivered frame. A machine has halted
/// when [`output`](PartyProc::output) returns `Some`; an empty slice is a
/// legitimate empty output.
pub trait PartyProc {
    /// Consumes at most one frame, returns the frames to send in order.
    fn step(&mut self, incoming: Option<Frame>) -> Result<Vec<Frame>, ProtocolError>;

    /// The party's final output bits once halted.
    fn output(&self) -> Option<&[bool]>;

    /// Drains the party's logged coin bytes (for the transcript).
    fn take_coins(&mut self) -> Vec<u8>;

    /// Drains the party's oracle-interaction log; empty for parties that
    /// never query the oracle.
    fn take_oracle_log(&mut self) -> Vec<OracleRecord> {
        Vec::new()
    }
}
