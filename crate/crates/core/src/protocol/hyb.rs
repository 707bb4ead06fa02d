//! The round composer: walks a partition scheme, running stateful rounds
//! through the oracle channel and stateless rounds through the circuit
//! machines, chaining each round's outputs into the next round's inputs.
//!
//! The second party opens every stateful round by sealing his round input
//! (fresh slice concatenated with his previous-round output) under the
//! long-term key, bound to the round number. The first party relays that
//! ciphertext to her oracle together with her own round input, logs the
//! interaction, and — when the round is dual — relays the sealed reply
//! back. Stateless rounds delegate to [`GcAlice`]/[`GcBob`], with the
//! composer's coin source loaned to the worker for the round's duration.
//! One oracle handle lives across all stateful rounds, so state written in
//! round 1 is visible in round 3 and onward; [`HybAlice::into_oracle`]
//! releases it after the run for state inspection.

use std::sync::Arc;

use crate::bits::{bits_to_bytes, bytes_to_bits};
use crate::enclave::{Enclave, EnclaveError, OracleQuery, QueryMode};
use crate::partition::{PartitionScheme, RoundSpec};
use crate::symenc::{open, round_ad, seal, SymKey};

use super::frame::{Frame, FrameKind};
use super::gc::{GcAlice, GcBob};
use super::transcript::{CoinRng, OracleRecord};
use super::{PartyProc, ProtocolError};

fn round_input(fresh: &[bool], prev: &[bool]) -> Vec<bool> {
    let mut v = Vec::with_capacity(fresh.len() + prev.len());
    v.extend_from_slice(fresh);
    v.extend_from_slice(prev);
    v
}

/// First-party composer: splits her input, answers stateful-round
/// ciphertexts via the oracle, garbles stateless rounds.
pub struct HybAlice {
    scheme: Arc<PartitionScheme>,
    oracle: Enclave,
    k_bits: usize,
    a_vec: Vec<Vec<bool>>,
    y0_prev: Vec<bool>,
    idx: usize,
    inner: Option<GcAlice>,
    coins: Option<CoinRng>,
    oracle_log: Vec<OracleRecord>,
    output: Option<Vec<bool>>,
}

impl HybAlice {
    /// Builds the first party over a provisioned, scheme-registered oracle.
    /// Splits `a` into per-round slices with the given coin source.
    pub fn new(
        scheme: Arc<PartitionScheme>,
        oracle: Enclave,
        k_bits: usize,
        a: &[bool],
        mut coins: CoinRng,
    ) -> Result<HybAlice, ProtocolError> {
        let a_vec = scheme.split_input_a(a, &mut coins)?;
        Ok(HybAlice {
            scheme,
            oracle,
            k_bits,
            a_vec,
            y0_prev: Vec::new(),
            idx: 0,
            inner: None,
            coins: Some(coins),
            oracle_log: Vec::new(),
            output: None,
        })
    }

    /// Releases the oracle after the run, carrying its final state.
    pub fn into_oracle(self) -> Enclave {
        self.oracle
    }

    /// Once a round completes, either halt or stand up the next stateless
    /// round (stateful rounds wait for the peer's ciphertext instead).
    fn advance(&mut self, out: &mut Vec<Frame>) -> Result<(), ProtocolError> {
        if self.idx == self.scheme.round_count() {
            self.output = Some(std::mem::take(&mut self.y0_prev));
            return Ok(());
        }
        if let RoundSpec::Even(ev) = &self.scheme.rounds()[self.idx] {
            let round_no = (self.idx + 1) as u16;
            let u = round_input(&self.a_vec[self.idx], &self.y0_prev);
            let coins = self.coins.take().expect("coin source free");
            let mut inner =
                GcAlice::new(ev.circuit.clone(), self.k_bits, u, ev.dual, round_no, coins);
            out.extend(inner.step(None)?);
            self.inner = Some(inner);
        }
        Ok(())
    }

    fn finish_inner(&mut self, out: &mut Vec<Frame>) -> Result<(), ProtocolError> {
        let inner = self.inner.take().expect("active round");
        let y = inner.output().expect("halted worker").to_vec();
        self.coins = Some(inner.into_coins());
        // A dual worker halts on the empty output, which is exactly the
        // first party's share of a dual round.
        self.y0_prev = y;
        self.idx += 1;
        self.advance(out)
    }

    fn oracle_round(&mut self, frame: Frame) -> Result<Vec<Frame>, ProtocolError> {
        let round_no = (self.idx + 1) as u16;
        if frame.kind != FrameKind::SgxCipher || frame.round != round_no {
            return Err(ProtocolError::UnexpectedFrame { round: frame.round, kind: frame.kind });
        }
        let od = match &self.scheme.rounds()[self.idx] {
            RoundSpec::Odd(od) => od,
            RoundSpec::Even(_) => {
                return Err(ProtocolError::UnexpectedFrame {
                    round: frame.round,
                    kind: frame.kind,
                });
            }
        };
        let u = round_input(&self.a_vec[self.idx], &self.y0_prev);
        if u.len() % 8 != 0 {
            return Err(ProtocolError::Malformed("stateful round input not byte aligned"));
        }
        let query = OracleQuery {
            f_id: od.f_id.clone(),
            round: round_no,
            alice_input: bits_to_bytes(&u),
            bob_ciphertext: frame.payload,
        };
        let mode = if od.dual { QueryMode::Dual } else { QueryMode::Plain };
        let reply = self.oracle.query(&query, mode).map_err(|e| match e {
            EnclaveError::Auth => ProtocolError::Auth { round: round_no },
            source => ProtocolError::Oracle { round: round_no, source },
        })?;
        self.oracle_log.push(OracleRecord {
            f_id: query.f_id,
            round: round_no,
            alice_input: query.alice_input,
            ciphertext: query.bob_ciphertext,
            y_alice: reply.y_alice.clone(),
            y_bob_sealed: reply.y_bob_sealed.clone(),
        });
        let mut out = Vec::new();
        if let Some(sealed) = reply.y_bob_sealed {
            if self.idx + 1 == self.scheme.round_count() && !reply.y_alice.is_empty() {
                return Err(ProtocolError::MixedOutputs);
            }
            out.push(Frame::new(FrameKind::SgxReply, round_no, sealed));
        }
        self.y0_prev = bytes_to_bits(&reply.y_alice);
        self.idx += 1;
        self.advance(&mut out)?;
        Ok(out)
    }
}

impl PartyProc for HybAlice {
    fn step(&mut self, incoming: Option<Frame>) -> Result<Vec<Frame>, ProtocolError> {
        let frame = match incoming {
            // The peer opens round 1 (stateful by construction), so the
            // kick sends nothing.
            None => return Ok(Vec::new()),
            Some(f) => f,
        };
        if self.inner.is_some() {
            let mut out = self.inner.as_mut().expect("active round").step(Some(frame))?;
            if self.inner.as_ref().expect("active round").output().is_some() {
                self.finish_inner(&mut out)?;
            }
            Ok(out)
        } else {
            self.oracle_round(frame)
        }
    }

    fn output(&self) -> Option<&[bool]> {
        self.output.as_deref()
    }

    fn take_coins(&mut self) -> Vec<u8> {
        self.coins.as_mut().map(CoinRng::take_log).unwrap_or_default()
    }

    fn take_oracle_log(&mut self) -> Vec<OracleRecord> {
        std::mem::take(&mut self.oracle_log)
    }
}

/// Second-party composer: seals stateful-round inputs under the long-term
/// key, evaluates stateless rounds, collects his chained outputs.
pub struct HybBob {
    scheme: Arc<PartitionScheme>,
    key: SymKey,
    k_bits: usize,
    b_vec: Vec<Vec<bool>>,
    y1_prev: Vec<bool>,
    idx: usize,
    started: bool,
    awaiting_reply: bool,
    inner: Option<GcBob>,
    coins: Option<CoinRng>,
    output: Option<Vec<bool>>,
}

impl HybBob {
    /// Builds the second party holding the long-term key from setup.
    /// Splits `b` into per-round slices with the given coin source.
    pub fn new(
        scheme: Arc<PartitionScheme>,
        key: SymKey,
        k_bits: usize,
        b: &[bool],
        mut coins: CoinRng,
    ) -> Result<HybBob, ProtocolError> {
        let b_vec = scheme.split_input_b(b, &mut coins)?;
        Ok(HybBob {
            scheme,
            key,
            k_bits,
            b_vec,
            y1_prev: Vec::new(),
            idx: 0,
            started: false,
            awaiting_reply: false,
            inner: None,
            coins: Some(coins),
            output: None,
        })
    }

    /// Walks rounds until something external is needed: emits the sealing
    /// ciphertext when entering a stateful round (stopping there when the
    /// round is dual), stands up the evaluator when entering a stateless
    /// round, halts past the last round.
    fn enter_rounds(&mut self, out: &mut Vec<Frame>) -> Result<(), ProtocolError> {
        loop {
            if self.idx == self.scheme.round_count() {
                self.output = Some(std::mem::take(&mut self.y1_prev));
                return Ok(());
            }
            let round_no = (self.idx + 1) as u16;
            let v = round_input(&self.b_vec[self.idx], &self.y1_prev);
            match &self.scheme.rounds()[self.idx] {
                RoundSpec::Odd(od) => {
                    if v.len() % 8 != 0 {
                        return Err(ProtocolError::Malformed(
                            "stateful round input not byte aligned",
                        ));
                    }
                    let coins = self.coins.as_mut().expect("coin source free");
                    let sealed =
                        seal(&self.key, &round_ad(round_no), &bits_to_bytes(&v), coins);
                    out.push(Frame::new(FrameKind::SgxCipher, round_no, sealed));
                    if od.dual {
                        self.awaiting_reply = true;
                        return Ok(());
                    }
                    // Plain stateful round: nothing comes back; the round's
                    // second-party output is empty.
                    self.y1_prev = Vec::new();
                    self.idx += 1;
                }
                RoundSpec::Even(ev) => {
                    let coins = self.coins.take().expect("coin source free");
                    self.inner = Some(GcBob::new(
                        ev.circuit.clone(),
                        self.k_bits,
                        v,
                        ev.dual,
                        round_no,
                        coins,
                    ));
                    return Ok(());
                }
            }
        }
    }
}

impl PartyProc for HybBob {
    fn step(&mut self, incoming: Option<Frame>) -> Result<Vec<Frame>, ProtocolError> {
        let frame = match incoming {
            None => {
                let mut out = Vec::new();
                if !self.started {
                    self.started = true;
                    self.enter_rounds(&mut out)?;
                }
                return Ok(out);
            }
            Some(f) => f,
        };
        if self.inner.is_some() {
            let mut out = self.inner.as_mut().expect("active round").step(Some(frame))?;
            if self.inner.as_ref().expect("active round").output().is_some() {
                let inner = self.inner.take().expect("active round");
                // A plain evaluator halts on the empty output, which is
                // exactly the second party's share of a plain round.
                self.y1_prev = inner.output().expect("halted worker").to_vec();
                self.coins = Some(inner.into_coins());
                self.idx += 1;
                self.enter_rounds(&mut out)?;
            }
            return Ok(out);
        }
        let round_no = (self.idx + 1) as u16;
        if !self.awaiting_reply || frame.kind != FrameKind::SgxReply || frame.round != round_no {
            return Err(ProtocolError::UnexpectedFrame { round: frame.round, kind: frame.kind });
        }
        let opened = open(&self.key, &round_ad(round_no), &frame.payload)
            .map_err(|_| ProtocolError::Auth { round: round_no })?;
        self.y1_prev = bytes_to_bits(&opened);
        self.awaiting_reply = false;
        self.idx += 1;
        let mut out = Vec::new();
        self.enter_rounds(&mut out)?;
        Ok(out)
    }

    fn output(&self) -> Option<&[bool]> {
        self.output.as_deref()
    }

    fn take_coins(&mut self) -> Vec<u8> {
        self.coins.as_mut().map(CoinRng::take_log).unwrap_or_default()
    }
}
