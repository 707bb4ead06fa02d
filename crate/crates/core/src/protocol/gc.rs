//! Stateless-round machines: the garbler (first party) and evaluator
//! (second party) of one circuit round.
//!
//! Flow: the garbler opens with the garbled tables, her own active input
//! tokens, the output decode table when the round is dual, and the transfer
//! setup point. The evaluator answers with his blinded transfer points, the
//! garbler returns the padded token pairs, and the evaluator recovers his
//! input tokens and evaluates. In a plain round the evaluator sends the
//! active output tokens back and the garbler decodes; in a dual round the
//! evaluator decodes locally with the published table and nothing flows
//! back, so the decoded value is his alone.
//!
//! Both machines also serve as the even-round workers inside the hybrid
//! composer: the composer hands its coin source to the machine for the
//! round's duration and reclaims it with [`GcAlice::into_coins`] /
//! [`GcBob::into_coins`] when the round ends.

use std::sync::Arc;

use crate::circuit::Circuit;
use crate::garble::{
    decode_with_table, evaluate, garble, token_bytes, GarbledCircuit, GarblerState, OutputDecoder,
    WireToken,
};
use crate::ot::{OtReceiver, OtSender};

use super::frame::{Frame, FrameKind};
use super::transcript::CoinRng;
use super::{PartyProc, ProtocolError};

fn pack_tokens(tokens: &[WireToken], k_bits: usize) -> Vec<u8> {
    let kb = token_bytes(k_bits);
    let mut out = Vec::with_capacity(tokens.len() * kb);
    for t in tokens {
        out.extend_from_slice(t.trunc_bytes(k_bits));
    }
    out
}

fn unpack_tokens(payload: &[u8], k_bits: usize) -> Result<Vec<WireToken>, ProtocolError> {
    let kb = token_bytes(k_bits);
    if payload.len() % kb != 0 {
        return Err(ProtocolError::Malformed("token payload length"));
    }
    Ok(payload.chunks_exact(kb).map(WireToken::from_trunc_bytes).collect())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum GarblerStage {
    Start,
    AwaitBlind,
    AwaitOutTokens,
    Done,
}

/// Garbler side of one circuit round.
pub struct GcAlice {
    circuit: Arc<Circuit>,
    k_bits: usize,
    a_bits: Vec<bool>,
    dual: bool,
    round: u16,
    coins: CoinRng,
    stage: GarblerStage,
    state: Option<GarblerState>,
    ot: Option<OtSender>,
    pairs: Vec<(Vec<u8>, Vec<u8>)>,
    output: Option<Vec<bool>>,
}

impl GcAlice {
    /// Builds the garbler for `circuit` with her input bits. `round` tags
    /// every frame; `dual` publishes the decode table and routes the output
    /// to the evaluator.
    pub fn new(
        circuit: Arc<Circuit>,
        k_bits: usize,
        a_bits: Vec<bool>,
        dual: bool,
        round: u16,
        coins: CoinRng,
    ) -> GcAlice {
        GcAlice {
            circuit,
            k_bits,
            a_bits,
            dual,
            round,
            coins,
            stage: GarblerStage::Start,
            state: None,
            ot: None,
            pairs: Vec::new(),
            output: None,
        }
    }

    /// Reclaims the coin source once the round is over.
    pub fn into_coins(self) -> CoinRng {
        self.coins
    }

    fn open_flight(&mut self) -> Result<Vec<Frame>, ProtocolError> {
        let (garbled, state, decoder) = garble(&self.circuit, self.k_bits, &mut self.coins)?;
        let tokens_a = state.encode_input_a(&self.a_bits)?;
        self.pairs = state
            .input_pairs_b()
            .iter()
            .map(|(t0, t1)| {
                (t0.trunc_bytes(self.k_bits).to_vec(), t1.trunc_bytes(self.k_bits).to_vec())
            })
            .collect();
        let (sender, setup) = OtSender::new(&mut self.coins);
        let mut out = vec![
            Frame::new(FrameKind::GcTable, self.round, garbled.to_bytes()),
            Frame::new(FrameKind::GcTokensA, self.round, pack_tokens(&tokens_a, self.k_bits)),
        ];
        if self.dual {
            out.push(Frame::new(FrameKind::GcDecode, self.round, decoder.to_bytes()));
        }
        out.push(Frame::new(FrameKind::OtSetup, self.round, setup));
        self.state = Some(state);
        self.ot = Some(sender);
        self.stage = GarblerStage::AwaitBlind;
        Ok(out)
    }
}

impl PartyProc for GcAlice {
    fn step(&mut self, incoming: Option<Frame>) -> Result<Vec<Frame>, ProtocolError> {
        let frame = match incoming {
            None => {
                return if self.stage == GarblerStage::Start {
                    self.open_flight()
                } else {
                    Ok(Vec::new())
                };
            }
            Some(f) => f,
        };
        if frame.round != self.round {
            return Err(ProtocolError::UnexpectedFrame { round: frame.round, kind: frame.kind });
        }
        match (self.stage, frame.kind) {
            (GarblerStage::AwaitBlind, FrameKind::OtBlind) => {
                let padded =
                    self.ot.as_ref().expect("transfer state").respond(&self.pairs, &frame.payload)?;
                let out = vec![Frame::new(FrameKind::OtPads, self.round, padded)];
                if self.dual {
                    // The evaluator decodes locally; nothing comes back.
                    self.output = Some(Vec::new());
                    self.stage = GarblerStage::Done;
                } else {
                    self.stage = GarblerStage::AwaitOutTokens;
                }
                Ok(out)
            }
            (GarblerStage::AwaitOutTokens, FrameKind::GcOutTokens) => {
                let tokens = unpack_tokens(&frame.payload, self.k_bits)?;
                let y = self.state.as_ref().expect("garbler state").decode_output(&tokens)?;
                self.output = Some(y);
                self.stage = GarblerStage::Done;
                Ok(Vec::new())
            }
            _ => Err(ProtocolError::UnexpectedFrame { round: frame.round, kind: frame.kind }),
        }
    }

    fn output(&self) -> Option<&[bool]> {
        self.output.as_deref()
    }

    fn take_coins(&mut self) -> Vec<u8> {
        self.coins.take_log()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum EvaluatorStage {
    AwaitTable,
    AwaitTokensA,
    AwaitDecode,
    AwaitSetup,
    AwaitPads,
    Done,
}

/// Evaluator side of one circuit round.
pub struct GcBob {
    circuit: Arc<Circuit>,
    k_bits: usize,
    b_bits: Vec<bool>,
    dual: bool,
    round: u16,
    coins: CoinRng,
    stage: EvaluatorStage,
    garbled: Option<GarbledCircuit>,
    tokens_a: Vec<WireToken>,
    decoder: Option<OutputDecoder>,
    receiver: Option<OtReceiver>,
    output: Option<Vec<bool>>,
}

impl GcBob {
    /// Builds the evaluator for `circuit` with his input bits.
    pub fn new(
        circuit: Arc<Circuit>,
        k_bits: usize,
        b_bits: Vec<bool>,
        dual: bool,
        round: u16,
        coins: CoinRng,
    ) -> GcBob {
        GcBob {
            circuit,
            k_bits,
            b_bits,
            dual,
            round,
            coins,
            stage: EvaluatorStage::AwaitTable,
            garbled: None,
            tokens_a: Vec::new(),
            decoder: None,
            receiver: None,
            output: None,
        }
    }

    /// Reclaims the coin source once the round is over.
    pub fn into_coins(self) -> CoinRng {
        self.coins
    }
}

impl PartyProc for GcBob {
    fn step(&mut self, incoming: Option<Frame>) -> Result<Vec<Frame>, ProtocolError> {
        let frame = match incoming {
            None => return Ok(Vec::new()),
            Some(f) => f,
        };
        if frame.round != self.round {
            return Err(ProtocolError::UnexpectedFrame { round: frame.round, kind: frame.kind });
        }
        match (self.stage, frame.kind) {
            (EvaluatorStage::AwaitTable, FrameKind::GcTable) => {
                let garbled = GarbledCircuit::from_bytes(&frame.payload)?;
                if garbled.k_bits != self.k_bits {
                    return Err(ProtocolError::Malformed("token length mismatch"));
                }
                self.garbled = Some(garbled);
                self.stage = EvaluatorStage::AwaitTokensA;
                Ok(Vec::new())
            }
            (EvaluatorStage::AwaitTokensA, FrameKind::GcTokensA) => {
                let tokens = unpack_tokens(&frame.payload, self.k_bits)?;
                if tokens.len() != self.circuit.input_a_bits {
                    return Err(ProtocolError::Malformed("garbler token count"));
                }
                self.tokens_a = tokens;
                self.stage = if self.dual {
                    EvaluatorStage::AwaitDecode
                } else {
                    EvaluatorStage::AwaitSetup
                };
                Ok(Vec::new())
            }
            (EvaluatorStage::AwaitDecode, FrameKind::GcDecode) => {
                self.decoder = Some(OutputDecoder::from_bytes(&frame.payload)?);
                self.stage = EvaluatorStage::AwaitSetup;
                Ok(Vec::new())
            }
            (EvaluatorStage::AwaitSetup, FrameKind::OtSetup) => {
                let (receiver, blinded) =
                    OtReceiver::new(&self.b_bits, &frame.payload, &mut self.coins)?;
                self.receiver = Some(receiver);
                self.stage = EvaluatorStage::AwaitPads;
                Ok(vec![Frame::new(FrameKind::OtBlind, self.round, blinded)])
            }
            (EvaluatorStage::AwaitPads, FrameKind::OtPads) => {
                let kb = token_bytes(self.k_bits);
                let msgs =
                    self.receiver.as_ref().expect("transfer state").finish(kb, &frame.payload)?;
                let mut inputs = std::mem::take(&mut self.tokens_a);
                inputs.extend(msgs.iter().map(|m| WireToken::from_trunc_bytes(m)));
                let garbled = self.garbled.take().expect("garbled tables");
                let outs = evaluate(&self.circuit, &garbled, &inputs)?;
                self.stage = EvaluatorStage::Done;
                if self.dual {
                    let decoder = self.decoder.as_ref().expect("decode table");
                    self.output = Some(decode_with_table(decoder, &outs)?);
                    Ok(Vec::new())
                } else {
                    self.output = Some(Vec::new());
                    Ok(vec![Frame::new(
                        FrameKind::GcOutTokens,
                        self.round,
                        pack_tokens(&outs, self.k_bits),
                    )])
                }
            }
            _ => Err(ProtocolError::UnexpectedFrame { round: frame.round, kind: frame.kind }),
        }
    }

    fn output(&self) -> Option<&[bool]> {
        self.output.as_deref()
    }

    fn take_coins(&mut self) -> Vec<u8> {
        self.coins.take_log()
    }
}
