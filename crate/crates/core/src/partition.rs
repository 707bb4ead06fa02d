//! Multi-round function partitions and their reference executor.
//!
//! A partition splits a two-party function `f(a, b) = (y0, y1)` into an
//! alternating sequence of round functions: odd rounds are stateful and run
//! against the oracle's persistent state, even rounds are stateless and are
//! realized as boolean circuits. Input splitters cut each party's input
//! into one piece per round, and execution threads outputs forward: round
//! `j` sees `u = a⃗[j] ∥ y⃗0[j−1]` and `v = b⃗[j] ∥ y⃗1[j−1]`, so anything a
//! round needs from its predecessor travels through the declared outputs,
//! never through a side channel.
//!
//! [`exec_reference`] runs a scheme in the clear, exactly by that rule. It
//! is the semantic anchor for the message-level protocols: a protocol run
//! must reproduce its outputs bit for bit. [`check_correct`] compares a
//! scheme against a plain implementation of `f` over sampled inputs.
//!
//! Pieces and outputs are bit strings. Odd rounds talk to the oracle in
//! bytes, so their inputs must be byte-aligned; schemes arrange this by
//! using word-sized fields. A round declared `dual` delivers its output to
//! the second party; otherwise the first party receives it and the second
//! party's slot is empty.

use std::sync::Arc;

use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::bits::{bits_to_bytes, bytes_to_bits};
use crate::circuit::{Circuit, CircuitError};
use crate::enclave::{Enclave, EnclaveError, StateStore, DEFAULT_MEMORY_BUDGET};

/// Errors raised while executing a partition scheme.
#[derive(Debug, Error)]
pub enum PartitionError {
    /// An input splitter produced the wrong number of pieces.
    #[error("splitter for party {party} produced {got} pieces for {rounds} rounds")]
    SplitArity {
        /// `'a'` or `'b'`.
        party: char,
        /// The scheme's round count.
        rounds: usize,
        /// Pieces actually produced.
        got: usize,
    },
    /// An odd-round input was not byte-aligned and cannot cross the oracle
    /// boundary.
    #[error("round {round} oracle input for party {party} is {bits} bits, not byte-aligned")]
    Alignment {
        /// 1-indexed round.
        round: usize,
        /// `'a'` or `'b'`.
        party: char,
        /// Offending width.
        bits: usize,
    },
    /// A stateful round function failed.
    #[error("round {round} oracle call failed: {source}")]
    Oracle {
        /// 1-indexed round.
        round: usize,
        /// Underlying failure.
        #[source]
        source: EnclaveError,
    },
    /// An even-round circuit rejected its inputs or was malformed.
    #[error("round {round} circuit evaluation failed: {source}")]
    Eval {
        /// 1-indexed round.
        round: usize,
        /// Underlying failure.
        #[source]
        source: CircuitError,
    },
}

/// A stateful odd-round function `(u, v, state) -> (y0, y1)`, shared
/// between the reference executor and oracle registration.
pub type OddFn = Arc<
    dyn Fn(&[u8], &[u8], &mut StateStore) -> Result<(Vec<u8>, Vec<u8>), EnclaveError>
        + Send
        + Sync,
>;

/// An input splitter: cuts one party's input bits into one piece per round.
/// Deterministic given the rng state, so reference and live runs that share
/// coins split identically.
pub type Splitter = Box<dyn Fn(&[bool], &mut dyn RngCore) -> Vec<Vec<bool>> + Send + Sync>;

/// A stateful round, executed by the oracle.
pub struct OddRound {
    /// Registration id on the oracle.
    pub f_id: String,
    /// The round function.
    pub f: OddFn,
    /// When true the round's second output is delivered to the second
    /// party; when false it is discarded and the second party gets nothing.
    pub dual: bool,
}

/// A stateless round, realized as a boolean circuit over `u ∥ v`.
pub struct EvenRound {
    /// The circuit computing the round. Its first-party width must equal
    /// `|a⃗[j]| + |y⃗0[j−1]|` and its second-party width `|b⃗[j]| + |y⃗1[j−1]|`.
    pub circuit: Arc<Circuit>,
    /// When true the decoded output goes to the second party; when false
    /// to the first.
    pub dual: bool,
}

/// One round of a partition scheme.
pub enum RoundSpec {
    /// Stateful oracle round (rounds 1, 3, 5, …).
    Odd(OddRound),
    /// Stateless circuit round (rounds 2, 4, 6, …).
    Even(EvenRound),
}

/// An ℓ-way even-odd partition of a two-party function.
pub struct PartitionScheme {
    name: String,
    rounds: Vec<RoundSpec>,
    split_a: Splitter,
    split_b: Splitter,
}

impl PartitionScheme {
    /// Assembles a scheme, checking the odd/even alternation: round 1 must
    /// be stateful, round 2 stateless, and so on.
    pub fn new(
        name: &str,
        rounds: Vec<RoundSpec>,
        split_a: Splitter,
        split_b: Splitter,
    ) -> PartitionScheme {
        assert!(!rounds.is_empty(), "a scheme needs at least one round");
        for (i, r) in rounds.iter().enumerate() {
            let round = i + 1;
            match r {
                RoundSpec::Odd(_) => {
                    assert!(round % 2 == 1, "round {round} must be stateless (even position)")
                }
                RoundSpec::Even(_) => {
                    assert!(round % 2 == 0, "round {round} must be stateful (odd position)")
                }
            }
        }
        PartitionScheme { name: name.to_string(), rounds, split_a, split_b }
    }

    /// The scheme's display name.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of rounds ℓ.
    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    /// The rounds in execution order (index 0 is round 1).
    pub fn rounds(&self) -> &[RoundSpec] {
        &self.rounds
    }

    /// Splits the first party's input into per-round pieces.
    pub fn split_input_a(
        &self,
        a: &[bool],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Vec<bool>>, PartitionError> {
        let pieces = (self.split_a)(a, rng);
        if pieces.len() != self.rounds.len() {
            return Err(PartitionError::SplitArity {
                party: 'a',
                rounds: self.rounds.len(),
                got: pieces.len(),
            });
        }
        Ok(pieces)
    }

    /// Splits the second party's input into per-round pieces.
    pub fn split_input_b(
        &self,
        b: &[bool],
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Vec<bool>>, PartitionError> {
        let pieces = (self.split_b)(b, rng);
        if pieces.len() != self.rounds.len() {
            return Err(PartitionError::SplitArity {
                party: 'b',
                rounds: self.rounds.len(),
                got: pieces.len(),
            });
        }
        Ok(pieces)
    }

    /// Registers every stateful round function on an oracle under its
    /// declared id.
    pub fn register_into(&self, oracle: &mut Enclave) -> Result<(), EnclaveError> {
        for r in &self.rounds {
            if let RoundSpec::Odd(o) = r {
                let f = Arc::clone(&o.f);
                oracle.register_round_fn(&o.f_id, Box::new(move |a, b, st| f(a, b, st)))?;
            }
        }
        Ok(())
    }
}

/// Everything produced by one reference execution: the input pieces and
/// both parties' per-round outputs, all as bit strings indexed by round
/// (position 0 is round 1).
pub struct ExecResult {
    /// First party's input pieces a⃗.
    pub a_vec: Vec<Vec<bool>>,
    /// Second party's input pieces b⃗.
    pub b_vec: Vec<Vec<bool>>,
    /// First party's round outputs y⃗0.
    pub y0: Vec<Vec<bool>>,
    /// Second party's round outputs y⃗1.
    pub y1: Vec<Vec<bool>>,
}

impl ExecResult {
    /// The final pair `(y⃗0[ℓ], y⃗1[ℓ])` — the value of `f(a, b)` for a
    /// correct scheme.
    pub fn final_outputs(&self) -> (&[bool], &[bool]) {
        (self.y0.last().unwrap(), self.y1.last().unwrap())
    }
}

/// Runs a scheme in the clear: splits both inputs, then executes each
/// round on `u = a⃗[j] ∥ y⃗0[j−1]`, `v = b⃗[j] ∥ y⃗1[j−1]`, threading oracle
/// state through the odd rounds only. Deterministic given the rng state.
pub fn exec_reference(
    scheme: &PartitionScheme,
    a: &[bool],
    b: &[bool],
    rng: &mut dyn RngCore,
) -> Result<ExecResult, PartitionError> {
    let a_vec = scheme.split_input_a(a, rng)?;
    let b_vec = scheme.split_input_b(b, rng)?;
    let mut state = StateStore::new(DEFAULT_MEMORY_BUDGET);
    let mut y0: Vec<Vec<bool>> = Vec::with_capacity(scheme.rounds.len());
    let mut y1: Vec<Vec<bool>> = Vec::with_capacity(scheme.rounds.len());
    let (mut prev0, mut prev1): (Vec<bool>, Vec<bool>) = (Vec::new(), Vec::new());

    for (i, round) in scheme.rounds.iter().enumerate() {
        let j = i + 1;
        let mut u = a_vec[i].clone();
        u.extend_from_slice(&prev0);
        let mut v = b_vec[i].clone();
        v.extend_from_slice(&prev1);

        let (r0, r1) = match round {
            RoundSpec::Odd(o) => {
                if u.len() % 8 != 0 {
                    return Err(PartitionError::Alignment { round: j, party: 'a', bits: u.len() });
                }
                if v.len() % 8 != 0 {
                    return Err(PartitionError::Alignment { round: j, party: 'b', bits: v.len() });
                }
                let (ya, yb) = (o.f)(&bits_to_bytes(&u), &bits_to_bytes(&v), &mut state)
                    .map_err(|source| PartitionError::Oracle { round: j, source })?;
                let ya = bytes_to_bits(&ya);
                let yb = if o.dual { bytes_to_bits(&yb) } else { Vec::new() };
                (ya, yb)
            }
            RoundSpec::Even(e) => {
                let out = e
                    .circuit
                    .eval_plain(&u, &v)
                    .map_err(|source| PartitionError::Eval { round: j, source })?;
                if e.dual {
                    (Vec::new(), out)
                } else {
                    (out, Vec::new())
                }
            }
        };
        prev0 = r0.clone();
        prev1 = r1.clone();
        y0.push(r0);
        y1.push(r1);
    }
    Ok(ExecResult { a_vec, b_vec, y0, y1 })
}

/// Why a correctness trial failed.
#[derive(Debug)]
pub enum Mismatch {
    /// The scheme ran but produced the wrong final outputs.
    Outputs {
        /// What the scheme returned for the first party.
        got_y0: Vec<bool>,
        /// What the scheme returned for the second party.
        got_y1: Vec<bool>,
    },
    /// The scheme failed to run at all.
    Exec(String),
}

/// The first failing trial of a correctness check.
#[derive(Debug)]
pub struct Counterexample {
    /// 0-indexed trial number.
    pub trial: usize,
    /// Sampled first-party input.
    pub a: Vec<bool>,
    /// Sampled second-party input.
    pub b: Vec<bool>,
    /// Plain-function output for the first party.
    pub expected_y0: Vec<bool>,
    /// Plain-function output for the second party.
    pub expected_y1: Vec<bool>,
    /// How the scheme diverged.
    pub why: Mismatch,
}

/// Result of [`check_correct`]: how many trials ran and the first
/// counterexample, if any.
#[derive(Debug)]
pub struct CheckReport {
    /// Trials executed (stops early at the first failure).
    pub trials: usize,
    /// The first divergence found.
    pub counterexample: Option<Counterexample>,
}

impl CheckReport {
    /// True when every trial matched.
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Compares a scheme against a plain implementation of `f` over `trials`
/// sampled inputs, reporting the first divergence as data.
pub fn check_correct(
    scheme: &PartitionScheme,
    f_plain: &dyn Fn(&[bool], &[bool]) -> (Vec<bool>, Vec<bool>),
    sample: &dyn Fn(&mut ChaCha20Rng) -> (Vec<bool>, Vec<bool>),
    trials: usize,
    seed: u64,
) -> CheckReport {
    use rand::SeedableRng;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let (a, b) = sample(&mut rng);
        let (expected_y0, expected_y1) = f_plain(&a, &b);
        let why = match exec_reference(scheme, &a, &b, &mut rng) {
            Ok(result) => {
                let (got_y0, got_y1) = result.final_outputs();
                if got_y0 == expected_y0 && got_y1 == expected_y1 {
                    continue;
                }
                Mismatch::Outputs { got_y0: got_y0.to_vec(), got_y1: got_y1.to_vec() }
            }
            Err(e) => Mismatch::Exec(e.to_string()),
        };
        return CheckReport {
            trials: trial + 1,
            counterexample: Some(Counterexample { trial, a, b, expected_y0, expected_y1, why }),
        };
    }
    CheckReport { trials, counterexample: None }
}

/// A plain two-party function over byte strings, used to build one-round
/// schemes.
pub type PlainFn = Arc<dyn Fn(&[u8], &[u8]) -> (Vec<u8>, Vec<u8>) + Send + Sync>;

/// The one-round partition: both splitters pass the whole input through,
/// and the single stateful round computes `f` directly, ignoring state.
/// `dual` controls whether the second party receives its output.
pub fn make_identity(name: &str, f: PlainFn, dual: bool) -> PartitionScheme {
    let lifted: OddFn = Arc::new(move |a, b, _st| Ok(f(a, b)));
    PartitionScheme::new(
        name,
        vec![RoundSpec::Odd(OddRound { f_id: name.to_string(), f: lifted, dual })],
        Box::new(|a, _| vec![a.to_vec()]),
        Box::new(|b, _| vec![b.to_vec()]),
    )
}
