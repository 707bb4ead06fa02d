//! Drivers: the in-process scheduler, the TCP transport, and run setup.
//!
//! Both transports move identical frame bytes, so a run produces the same
//! transcript either way. The in-process scheduler delivers frames through
//! a FIFO queue on one thread; the TCP driver runs one party per process
//! and finishes with a trailer exchange (coins + input bits, outside the
//! message log) so either endpoint can assemble the full transcript.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::circuit::Circuit;
use crate::enclave::{Enclave, EnclaveError};
use crate::partition::PartitionScheme;
use crate::symenc::SymKey;

use super::frame::{Frame, FrameKind};
use super::gc::{GcAlice, GcBob};
use super::hyb::{HybAlice, HybBob};
use super::transcript::{derive_seed, CoinRng, LoggedFrame, Role, Transcript};
use super::{PartyProc, ProtocolError};

/// Delivery cap for the in-process scheduler; a run that exceeds it has a
/// routing bug rather than work left to do.
const MAX_DELIVERIES: usize = 1 << 16;

/// Outcome of a finished run: both outputs and the full transcript.
pub struct LocalRun {
    /// First party's output bits.
    pub y0: Vec<bool>,
    /// Second party's output bits.
    pub y1: Vec<bool>,
    /// Full record of the run.
    pub transcript: Transcript,
}

/// Performs run setup for a partition scheme: draws the long-term key,
/// provisions a fresh oracle with it, and registers the scheme's stateful
/// rounds. Returns the oracle (first party's side) and the key (second
/// party's side); the first party never holds the key itself.
pub fn setup_oracle(
    scheme: &PartitionScheme,
    seed: u64,
) -> Result<(Enclave, SymKey), EnclaveError> {
    let mut key_rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, 0));
    let key = SymKey::random(&mut key_rng);
    let mut oracle = Enclave::new();
    oracle.provision(key.clone(), derive_seed(seed, 3))?;
    scheme.register_into(&mut oracle)?;
    Ok((oracle, key))
}

/// Like [`setup_oracle`], but provisions an explicitly supplied long-term
/// key instead of deriving one from the seed. Used when the key is agreed
/// out of band (for example from a key file shared between two party
/// processes).
pub fn setup_oracle_with_key(
    scheme: &PartitionScheme,
    key: SymKey,
    seed: u64,
) -> Result<Enclave, EnclaveError> {
    let mut oracle = Enclave::new();
    oracle.provision(key, derive_seed(seed, 3))?;
    scheme.register_into(&mut oracle)?;
    Ok(oracle)
}

/// Drives two party machines to completion over an in-process FIFO queue,
/// logging every frame in delivery order.
pub fn run_local(
    protocol: &str,
    k_bits: usize,
    seed: u64,
    input_a: &[bool],
    input_b: &[bool],
    alice: &mut dyn PartyProc,
    bob: &mut dyn PartyProc,
) -> Result<LocalRun, ProtocolError> {
    let mut queue: VecDeque<(Role, Frame)> = VecDeque::new();
    let mut messages: Vec<LoggedFrame> = Vec::new();
    let mut enqueue = |from: Role, frames: Vec<Frame>, queue: &mut VecDeque<(Role, Frame)>| {
        for f in frames {
            messages.push(LoggedFrame { sender: from, frame: f.clone() });
            queue.push_back((from.other(), f));
        }
    };
    let opening = alice.step(None)?;
    enqueue(Role::Alice, opening, &mut queue);
    let opening = bob.step(None)?;
    enqueue(Role::Bob, opening, &mut queue);

    let mut deliveries = 0;
    while let Some((to, frame)) = queue.pop_front() {
        deliveries += 1;
        if deliveries > MAX_DELIVERIES {
            return Err(ProtocolError::Stalled);
        }
        let out = match to {
            Role::Alice => alice.step(Some(frame))?,
            Role::Bob => bob.step(Some(frame))?,
        };
        enqueue(to, out, &mut queue);
    }
    let (y0, y1) = match (alice.output(), bob.output()) {
        (Some(y0), Some(y1)) => (y0.to_vec(), y1.to_vec()),
        _ => return Err(ProtocolError::Stalled),
    };
    let transcript = Transcript {
        protocol: protocol.to_string(),
        k_bits,
        seed,
        input_a: input_a.to_vec(),
        input_b: input_b.to_vec(),
        messages,
        oracle_log: alice.take_oracle_log(),
        alice_coins: alice.take_coins(),
        bob_coins: bob.take_coins(),
    };
    Ok(LocalRun { y0, y1, transcript })
}

/// Runs one circuit round as a standalone protocol in process.
pub fn run_gc_local(
    circuit: &Arc<Circuit>,
    k_bits: usize,
    dual: bool,
    a: &[bool],
    b: &[bool],
    seed: u64,
) -> Result<LocalRun, ProtocolError> {
    let mut alice = GcAlice::new(
        circuit.clone(),
        k_bits,
        a.to_vec(),
        dual,
        1,
        CoinRng::new(seed, Role::Alice),
    );
    let mut bob =
        GcBob::new(circuit.clone(), k_bits, b.to_vec(), dual, 1, CoinRng::new(seed, Role::Bob));
    let label = if dual { "gc-dual" } else { "gc" };
    run_local(label, k_bits, seed, a, b, &mut alice, &mut bob)
}

/// Runs a partition scheme end to end in process: setup, both composers,
/// the scheduler. Returns the run and the oracle's final state.
pub fn run_hyb_local(
    scheme: &Arc<PartitionScheme>,
    k_bits: usize,
    a: &[bool],
    b: &[bool],
    seed: u64,
) -> Result<(LocalRun, Enclave), ProtocolError> {
    let (oracle, key) = setup_oracle(scheme, seed)
        .map_err(|source| ProtocolError::Oracle { round: 0, source })?;
    let mut alice =
        HybAlice::new(scheme.clone(), oracle, k_bits, a, CoinRng::new(seed, Role::Alice))?;
    let mut bob = HybBob::new(scheme.clone(), key, k_bits, b, CoinRng::new(seed, Role::Bob))?;
    let label = format!("hyb/{}", scheme.name());
    let run = run_local(&label, k_bits, seed, a, b, &mut alice, &mut bob)?;
    Ok((run, alice.into_oracle()))
}

fn chunk(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u64).to_be_bytes());
    out.extend_from_slice(bytes);
}

fn unchunk<'a>(bytes: &mut &'a [u8]) -> Result<&'a [u8], ProtocolError> {
    if bytes.len() < 8 {
        return Err(ProtocolError::Malformed("trailer truncated"));
    }
    let (len, rest) = bytes.split_at(8);
    let len = u64::from_be_bytes(len.try_into().expect("eight bytes")) as usize;
    if rest.len() < len {
        return Err(ProtocolError::Malformed("trailer truncated"));
    }
    let (body, rest) = rest.split_at(len);
    *bytes = rest;
    Ok(body)
}

fn trailer_payload(coins: &[u8], input: &[bool]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + coins.len() + input.len());
    chunk(&mut out, coins);
    let packed: Vec<u8> = input.iter().map(|&b| b as u8).collect();
    chunk(&mut out, &packed);
    out
}

fn parse_trailer(payload: &[u8]) -> Result<(Vec<u8>, Vec<bool>), ProtocolError> {
    let mut rest = payload;
    let coins = unchunk(&mut rest)?.to_vec();
    let input = unchunk(&mut rest)?
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(ProtocolError::Malformed("trailer input bits")),
        })
        .collect::<Result<Vec<bool>, ProtocolError>>()?;
    Ok((coins, input))
}

/// Drives one party over a byte stream (one process per party), then swaps
/// trailers so this endpoint can assemble the full transcript. The message
/// log records sends and receipts in order, which for an alternating
/// protocol is the same order the in-process scheduler logs. Outputs are
/// party-private, so the returned run carries only this endpoint's output;
/// the peer's slot is left empty.
pub fn run_tcp<S: Read + Write>(
    stream: &mut S,
    role: Role,
    party: &mut dyn PartyProc,
    protocol: &str,
    k_bits: usize,
    seed: u64,
    input: &[bool],
) -> Result<LocalRun, ProtocolError> {
    let mut messages: Vec<LoggedFrame> = Vec::new();
    let send = |frames: Vec<Frame>,
                    stream: &mut S,
                    messages: &mut Vec<LoggedFrame>|
     -> Result<(), ProtocolError> {
        for f in frames {
            f.write_to(stream)?;
            messages.push(LoggedFrame { sender: role, frame: f });
        }
        stream.flush()?;
        Ok(())
    };
    let opening = party.step(None)?;
    send(opening, stream, &mut messages)?;
    while party.output().is_none() {
        let frame = Frame::read_from(stream)?;
        messages.push(LoggedFrame { sender: role.other(), frame: frame.clone() });
        let out = party.step(Some(frame))?;
        send(out, stream, &mut messages)?;
    }
    let output = party.output().expect("halted").to_vec();

    // Trailer exchange: both sides send before reading, so neither blocks.
    let coins = party.take_coins();
    Frame::new(FrameKind::Trailer, 0, trailer_payload(&coins, input)).write_to(stream)?;
    stream.flush()?;
    let peer = Frame::read_from(stream)?;
    if peer.kind != FrameKind::Trailer {
        return Err(ProtocolError::UnexpectedFrame { round: peer.round, kind: peer.kind });
    }
    let (peer_coins, peer_input) = parse_trailer(&peer.payload)?;

    let (input_a, input_b, alice_coins, bob_coins) = match role {
        Role::Alice => (input.to_vec(), peer_input, coins, peer_coins),
        Role::Bob => (peer_input, input.to_vec(), peer_coins, coins),
    };
    let (y0, y1) = match role {
        Role::Alice => (output, Vec::new()),
        Role::Bob => (Vec::new(), output),
    };
    let transcript = Transcript {
        protocol: protocol.to_string(),
        k_bits,
        seed,
        input_a,
        input_b,
        messages,
        oracle_log: party.take_oracle_log(),
        alice_coins,
        bob_coins,
    };
    Ok(LocalRun { y0, y1, transcript })
}
