//! Run transcripts and per-party views.
//!
//! A [`Transcript`] records everything a run produced: both parties' initial
//! inputs, every frame in delivery order, the first party's oracle
//! interactions, and each party's random coins. A [`View`] is the slice of
//! that record one party actually holds: its own input and coins, the frames
//! it *received*, and (for the first party) the oracle log. Assigning each
//! frame to its receiver means the two views partition the message log.
//!
//! Coins are captured by [`CoinRng`], a logging wrapper around a seeded
//! stream cipher generator. The same type replays a recorded byte log, which
//! is how transcript replay rebuilds a run without the original seed.

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::frame::{Frame, FrameKind};

/// Which side of the protocol a party plays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// The first party: holds input `a`, runs the oracle, garbles circuits.
    Alice,
    /// The second party: holds input `b`, evaluates circuits.
    Bob,
}

impl Role {
    /// The opposite side.
    pub fn other(self) -> Role {
        match self {
            Role::Alice => Role::Bob,
            Role::Bob => Role::Alice,
        }
    }

    fn code(self) -> u8 {
        match self {
            Role::Alice => 0,
            Role::Bob => 1,
        }
    }
}

/// A frame together with the party that sent it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoggedFrame {
    /// Sender of the frame.
    pub sender: Role,
    /// The frame itself.
    pub frame: Frame,
}

/// One oracle interaction as seen by the first party: the query she issued
/// and the reply she received.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleRecord {
    /// Registered function the query addressed.
    pub f_id: String,
    /// 1-indexed round number.
    pub round: u16,
    /// The first party's plaintext input bytes.
    pub alice_input: Vec<u8>,
    /// The second party's sealed input, as relayed.
    pub ciphertext: Vec<u8>,
    /// Plaintext output handed back to the first party.
    pub y_alice: Vec<u8>,
    /// Sealed output destined for the second party, when the round is dual.
    pub y_bob_sealed: Option<Vec<u8>>,
}

/// Full record of one protocol run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    /// Short protocol label, e.g. `"gc"` or `"hyb/db"`.
    pub protocol: String,
    /// Token length used by circuit rounds.
    pub k_bits: usize,
    /// Root seed the run's randomness derives from.
    pub seed: u64,
    /// First party's initial input bits.
    pub input_a: Vec<bool>,
    /// Second party's initial input bits.
    pub input_b: Vec<bool>,
    /// Every frame exchanged, in delivery order.
    pub messages: Vec<LoggedFrame>,
    /// The first party's oracle interactions, in query order.
    pub oracle_log: Vec<OracleRecord>,
    /// First party's coin bytes, in draw order.
    pub alice_coins: Vec<u8>,
    /// Second party's coin bytes, in draw order.
    pub bob_coins: Vec<u8>,
}

fn put_chunk(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u64).to_be_bytes());
    out.extend_from_slice(bytes);
}

fn bits_chunk(out: &mut Vec<u8>, bits: &[bool]) {
    let packed: Vec<u8> = bits.iter().map(|&b| b as u8).collect();
    put_chunk(out, &packed);
}

impl Transcript {
    /// Total wire bytes of the logged messages — the run's bandwidth.
    pub fn message_bytes(&self) -> usize {
        self.messages.iter().map(|m| m.frame.wire_len()).sum()
    }

    /// Concatenation of all logged frame bodies, for content scans.
    pub fn message_payloads(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for m in &self.messages {
            out.extend_from_slice(&m.frame.payload);
        }
        out
    }

    /// Canonical serialization of the whole transcript. Two runs are the
    /// same run exactly when these bytes agree.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_chunk(&mut out, self.protocol.as_bytes());
        out.extend_from_slice(&(self.k_bits as u64).to_be_bytes());
        out.extend_from_slice(&self.seed.to_be_bytes());
        bits_chunk(&mut out, &self.input_a);
        bits_chunk(&mut out, &self.input_b);
        out.extend_from_slice(&(self.messages.len() as u64).to_be_bytes());
        for m in &self.messages {
            out.push(m.sender.code());
            put_chunk(&mut out, &m.frame.to_bytes());
        }
        out.extend_from_slice(&(self.oracle_log.len() as u64).to_be_bytes());
        for rec in &self.oracle_log {
            put_chunk(&mut out, rec.f_id.as_bytes());
            out.extend_from_slice(&rec.round.to_be_bytes());
            put_chunk(&mut out, &rec.alice_input);
            put_chunk(&mut out, &rec.ciphertext);
            put_chunk(&mut out, &rec.y_alice);
            match &rec.y_bob_sealed {
                Some(sealed) => {
                    out.push(1);
                    put_chunk(&mut out, sealed);
                }
                None => out.push(0),
            }
        }
        put_chunk(&mut out, &self.alice_coins);
        put_chunk(&mut out, &self.bob_coins);
        out
    }
}

/// The portion of a run a single party holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct View {
    /// Whose view this is.
    pub role: Role,
    /// The party's own initial input bits.
    pub input: Vec<bool>,
    /// The party's own coin bytes.
    pub coins: Vec<u8>,
    /// Frames this party received.
    pub messages: Vec<Frame>,
    /// Oracle interactions; empty for the second party.
    pub oracle_log: Vec<OracleRecord>,
}

impl View {
    /// Serializes the view for content scans and size accounting.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![self.role.code()];
        bits_chunk(&mut out, &self.input);
        put_chunk(&mut out, &self.coins);
        out.extend_from_slice(&(self.messages.len() as u64).to_be_bytes());
        for f in &self.messages {
            put_chunk(&mut out, &f.to_bytes());
        }
        out.extend_from_slice(&(self.oracle_log.len() as u64).to_be_bytes());
        for rec in &self.oracle_log {
            put_chunk(&mut out, rec.f_id.as_bytes());
            out.extend_from_slice(&rec.round.to_be_bytes());
            put_chunk(&mut out, &rec.alice_input);
            put_chunk(&mut out, &rec.ciphertext);
            put_chunk(&mut out, &rec.y_alice);
            match &rec.y_bob_sealed {
                Some(sealed) => {
                    out.push(1);
                    put_chunk(&mut out, sealed);
                }
                None => out.push(0),
            }
        }
        out
    }
}

/// Extracts one party's view from a transcript: own input, own coins, the
/// frames addressed to that party, and (first party only) the oracle log.
pub fn view_of(t: &Transcript, role: Role) -> View {
    let messages = t
        .messages
        .iter()
        .filter(|m| m.sender == role.other())
        .map(|m| m.frame.clone())
        .collect();
    View {
        role,
        input: match role {
            Role::Alice => t.input_a.clone(),
            Role::Bob => t.input_b.clone(),
        },
        coins: match role {
            Role::Alice => t.alice_coins.clone(),
            Role::Bob => t.bob_coins.clone(),
        },
        messages,
        oracle_log: match role {
            Role::Alice => t.oracle_log.clone(),
            Role::Bob => Vec::new(),
        },
    }
}

/// Mixes a tag into a seed, so one run seed yields independent streams for
/// keys, coins, and oracle nonces. (splitmix64 finalizer.)
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A party's coin source. In record mode it draws from a seeded generator
/// and logs every byte handed out; in replay mode it re-serves a previously
/// recorded log, so a rebuilt run makes exactly the original choices.
pub enum CoinRng {
    /// Fresh randomness, logged as it is drawn.
    Record {
        /// Underlying generator.
        inner: ChaCha20Rng,
        /// Every byte emitted so far, in order.
        log: Vec<u8>,
    },
    /// Re-serving a recorded log.
    Replay {
        /// The recorded bytes.
        bytes: Vec<u8>,
        /// Read position.
        pos: usize,
    },
}

impl CoinRng {
    /// Fresh recording source for `role`, derived from the run seed.
    pub fn new(seed: u64, role: Role) -> CoinRng {
        let tagged = derive_seed(seed, 16 + role.code() as u64);
        CoinRng::Record { inner: ChaCha20Rng::seed_from_u64(tagged), log: Vec::new() }
    }

    /// Source that replays a recorded coin log.
    pub fn replay(bytes: Vec<u8>) -> CoinRng {
        CoinRng::Replay { bytes, pos: 0 }
    }

    /// The bytes drawn so far (recorded log, or the replayed prefix).
    pub fn take_log(&mut self) -> Vec<u8> {
        match self {
            CoinRng::Record { log, .. } => std::mem::take(log),
            CoinRng::Replay { bytes, pos } => bytes[..*pos].to_vec(),
        }
    }
}

impl RngCore for CoinRng {
    fn next_u32(&mut self) -> u32 {
        let mut buf = [0u8; 4];
        self.fill_bytes(&mut buf);
        u32::from_le_bytes(buf)
    }

    fn next_u64(&mut self) -> u64 {
        let mut buf = [0u8; 8];
        self.fill_bytes(&mut buf);
        u64::from_le_bytes(buf)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        match self {
            CoinRng::Record { inner, log } => {
                inner.fill_bytes(dest);
                log.extend_from_slice(dest);
            }
            CoinRng::Replay { bytes, pos } => {
                let end = *pos + dest.len();
                assert!(end <= bytes.len(), "coin replay log exhausted");
                dest.copy_from_slice(&bytes[*pos..end]);
                *pos = end;
            }
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

impl CryptoRng for CoinRng {}

/// True when the frame belongs in the message log (trailers are transport
/// bookkeeping, not protocol messages).
pub fn loggable(frame: &Frame) -> bool {
    frame.kind != FrameKind::Trailer
}
