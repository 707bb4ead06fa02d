//! Garbled-circuit generation, evaluation, and output decoding.
//!
//! The garbler walks a [`Circuit`] and assigns every wire a pair of secret
//! `k`-bit tokens standing for logical 0 and 1. The two tokens on a wire
//! always differ by one circuit-global offset whose low bit is forced to 1,
//! which buys two things at once: XOR gates garble to nothing at all (XOR of
//! tokens *is* gate evaluation), and the low bit of every token acts as a
//! blinded one-bit pointer — the color bit — telling the evaluator which
//! ciphertext row is addressed to it without revealing the logical value.
//!
//! AND and OR gates ship three ciphertext rows instead of four: the row for
//! color pair (0,0) is never stored, because the output token on that row is
//! *defined* as the truncated gate hash, which the evaluator recomputes
//! directly. NOT gates swap token roles (zero rows, zero hashing) and
//! constant gates simply publish their single active token.
//!
//! Each stored row carries `k + 8` bits: the payload token plus a zero marker
//! byte, so a mangled table surfaces as [`GarbleError::CorruptRow`] instead
//! of garbage tokens. Output decoding is guarded the same way: the decode
//! table holds one hash per token value, and an active token matching neither
//! hash is an error, never a guessed bit.

use crate::circuit::{Circuit, Gate};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Token lengths (in bits) the scheme accepts.
pub const SUPPORTED_TOKEN_BITS: [usize; 2] = [80, 128];

/// Distinguishes output-decode hashing from gate hashing in the tweak space;
/// gate indices stay below it.
const DECODE_TWEAK_BIT: u64 = 1 << 63;

/// Errors surfaced while garbling, evaluating, or decoding.
#[derive(Debug, Error)]
pub enum GarbleError {
    /// The requested token length is not one of [`SUPPORTED_TOKEN_BITS`].
    #[error("token length {0} bits is unsupported (use 80 or 128)")]
    BadTokenBits(usize),
    /// An input bit-string or token list has the wrong length.
    #[error("expected {expected} input entries, got {got}")]
    InputLength { expected: usize, got: usize },
    /// An output token list does not match the decoder width.
    #[error("expected {expected} output tokens, got {got}")]
    OutputLength { expected: usize, got: usize },
    /// A ciphertext row failed its marker check during evaluation.
    #[error("garbled row for gate {0} failed its integrity check")]
    CorruptRow(u64),
    /// An output token matched neither decode hash.
    #[error("output {0} decodes to neither bit value")]
    DecodeFailed(usize),
    /// The evaluator ran out of published constant-gate tokens.
    #[error("constant-gate token list exhausted")]
    MissingConstToken,
    /// Garbled tables were produced for a different circuit shape.
    #[error("garbled tables sized for a different circuit")]
    SizeMismatch,
    /// A byte encoding failed to parse.
    #[error("byte encoding is truncated or malformed")]
    Malformed,
}

/// Number of bytes a single wire token occupies on the wire for a given
/// token length.
pub fn token_bytes(k_bits: usize) -> usize {
    k_bits / 8
}

fn check_token_bits(k_bits: usize) -> Result<(), GarbleError> {
    if SUPPORTED_TOKEN_BITS.contains(&k_bits) {
        Ok(())
    } else {
        Err(GarbleError::BadTokenBits(k_bits))
    }
}

/// One wire token. Storage is a fixed 16-byte array; at `k = 80` only the
/// first 10 bytes are meaningful and the rest stay zero.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct WireToken(pub [u8; 16]);

impl WireToken {
    /// The all-zero token, used only as an initializer.
    pub const ZERO: WireToken = WireToken([0; 16]);

    /// Color bit: the low bit of the first byte. The two tokens of a wire
    /// always have opposite colors.
    pub fn color(&self) -> bool {
        self.0[0] & 1 == 1
    }

    /// Byte-wise XOR.
    pub fn xor(&self, other: &WireToken) -> WireToken {
        let mut out = [0u8; 16];
        for (o, (x, y)) in out.iter_mut().zip(self.0.iter().zip(other.0.iter())) {
            *o = x ^ y;
        }
        WireToken(out)
    }

    /// The meaningful prefix for serialization at a given token length.
    pub fn trunc_bytes(&self, k_bits: usize) -> &[u8] {
        &self.0[..token_bytes(k_bits)]
    }

    /// Rebuilds a token from its serialized prefix, zero-padding the rest.
    pub fn from_trunc_bytes(bytes: &[u8]) -> WireToken {
        let mut out = [0u8; 16];
        out[..bytes.len()].copy_from_slice(bytes);
        WireToken(out)
    }
}

impl std::fmt::Debug for WireToken {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "WireToken({})", hex::encode(self.0))
    }
}

/// The public garbled form of a circuit: ciphertext rows for every AND/OR
/// gate plus the published active tokens of constant gates. The circuit
/// structure itself is public and travels separately.
#[derive(Clone, Debug)]
pub struct GarbledCircuit {
    /// Token length in bits.
    pub k_bits: usize,
    /// Flat row buffer: three rows of `k/8 + 1` bytes per AND/OR gate, in
    /// gate order, rows keyed by color pair (0,1), (1,0), (1,1).
    pub rows: Vec<u8>,
    /// Active token of each constant gate, in gate order.
    pub const_tokens: Vec<WireToken>,
}

impl GarbledCircuit {
    /// Serializes to a self-describing byte string.
    pub fn to_bytes(&self) -> Vec<u8> {
        let kb = token_bytes(self.k_bits);
        let mut out = Vec::with_capacity(2 + 8 + self.rows.len() + 4 + self.const_tokens.len() * kb);
        out.extend_from_slice(&(self.k_bits as u16).to_be_bytes());
        out.extend_from_slice(&(self.rows.len() as u64).to_be_bytes());
        out.extend_from_slice(&self.rows);
        out.extend_from_slice(&(self.const_tokens.len() as u32).to_be_bytes());
        for t in &self.const_tokens {
            out.extend_from_slice(t.trunc_bytes(self.k_bits));
        }
        out
    }

    /// Parses the [`GarbledCircuit::to_bytes`] encoding.
    pub fn from_bytes(bytes: &[u8]) -> Result<GarbledCircuit, GarbleError> {
        let mut cur = Cursor { bytes, pos: 0 };
        let k_bits = u16::from_be_bytes(cur.take(2)?.try_into().unwrap()) as usize;
        check_token_bits(k_bits)?;
        let kb = token_bytes(k_bits);
        let rows_len = u64::from_be_bytes(cur.take(8)?.try_into().unwrap()) as usize;
        if rows_len % (3 * (kb + 1)) != 0 {
            return Err(GarbleError::Malformed);
        }
        let rows = cur.take(rows_len)?.to_vec();
        let const_count = u32::from_be_bytes(cur.take(4)?.try_into().unwrap()) as usize;
        let mut const_tokens = Vec::with_capacity(const_count);
        for _ in 0..const_count {
            const_tokens.push(WireToken::from_trunc_bytes(cur.take(kb)?));
        }
        cur.finish()?;
        Ok(GarbledCircuit { k_bits, rows, const_tokens })
    }
}

/// Everything the garbler must keep secret to hand out input tokens and
/// recognize output tokens: the global token offset, the zero-token of every
/// input wire, and the zero-token of every output wire.
#[derive(Clone, Debug)]
pub struct GarblerState {
    k_bits: usize,
    delta: WireToken,
    input_a_bits: usize,
    input_tokens0: Vec<WireToken>,
    output_tokens0: Vec<WireToken>,
}

impl GarblerState {
    /// The circuit-global offset between a wire's two tokens.
    pub fn delta(&self) -> WireToken {
        self.delta
    }

    /// Token length this garbling was produced with.
    pub fn k_bits(&self) -> usize {
        self.k_bits
    }

    /// Active tokens for the garbler's own input bits (the first input
    /// block).
    pub fn encode_input_a(&self, bits: &[bool]) -> Result<Vec<WireToken>, GarbleError> {
        if bits.len() != self.input_a_bits {
            return Err(GarbleError::InputLength { expected: self.input_a_bits, got: bits.len() });
        }
        Ok(self.encode_range(0, bits))
    }

    /// Active tokens for the evaluator's input bits (the second input
    /// block). Used by tests and by trust-based transports; interactive runs
    /// use [`GarblerState::input_pairs_b`] with an oblivious transfer.
    pub fn encode_input_b(&self, bits: &[bool]) -> Result<Vec<WireToken>, GarbleError> {
        let expected = self.input_tokens0.len() - self.input_a_bits;
        if bits.len() != expected {
            return Err(GarbleError::InputLength { expected, got: bits.len() });
        }
        Ok(self.encode_range(self.input_a_bits, bits))
    }

    /// Both tokens of every evaluator input wire, in wire order, ready to be
    /// fed to an oblivious transfer as (zero-token, one-token) pairs.
    pub fn input_pairs_b(&self) -> Vec<(WireToken, WireToken)> {
        self.input_tokens0[self.input_a_bits..]
            .iter()
            .map(|&w0| (w0, w0.xor(&self.delta)))
            .collect()
    }

    /// Decodes active output tokens by direct comparison against the stored
    /// output token pairs.
    pub fn decode_output(&self, outputs: &[WireToken]) -> Result<Vec<bool>, GarbleError> {
        if outputs.len() != self.output_tokens0.len() {
            return Err(GarbleError::OutputLength {
                expected: self.output_tokens0.len(),
                got: outputs.len(),
            });
        }
        outputs
            .iter()
            .zip(&self.output_tokens0)
            .enumerate()
            .map(|(j, (t, w0))| {
                if t == w0 {
                    Ok(false)
                } else if *t == w0.xor(&self.delta) {
                    Ok(true)
                } else {
                    Err(GarbleError::DecodeFailed(j))
                }
            })
            .collect()
    }

    fn encode_range(&self, base: usize, bits: &[bool]) -> Vec<WireToken> {
        bits.iter()
            .enumerate()
            .map(|(i, &bit)| {
                let w0 = self.input_tokens0[base + i];
                if bit {
                    w0.xor(&self.delta)
                } else {
                    w0
                }
            })
            .collect()
    }
}

/// Hash table that lets the evaluator decode output tokens itself: one
/// 16-byte hash per token value per output wire.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputDecoder {
    /// `(hash of zero-token, hash of one-token)` per output wire.
    pub entries: Vec<([u8; 16], [u8; 16])>,
}

impl OutputDecoder {
    /// Serializes to a self-describing byte string.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.entries.len() * 32);
        out.extend_from_slice(&(self.entries.len() as u32).to_be_bytes());
        for (h0, h1) in &self.entries {
            out.extend_from_slice(h0);
            out.extend_from_slice(h1);
        }
        out
    }

    /// Parses the [`OutputDecoder::to_bytes`] encoding.
    pub fn from_bytes(bytes: &[u8]) -> Result<OutputDecoder, GarbleError> {
        let mut cur = Cursor { bytes, pos: 0 };
        let count = u32::from_be_bytes(cur.take(4)?.try_into().unwrap()) as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let h0: [u8; 16] = cur.take(16)?.try_into().unwrap();
            let h1: [u8; 16] = cur.take(16)?.try_into().unwrap();
            entries.push((h0, h1));
        }
        cur.finish()?;
        Ok(OutputDecoder { entries })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GarbleError> {
        if self.bytes.len() - self.pos < n {
            return Err(GarbleError::Malformed);
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn finish(&self) -> Result<(), GarbleError> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(GarbleError::Malformed)
        }
    }
}

fn random_token<R: RngCore + CryptoRng>(kb: usize, rng: &mut R) -> WireToken {
    let mut out = [0u8; 16];
    rng.fill_bytes(&mut out[..kb]);
    WireToken(out)
}

/// Hash driving both row encryption and the implicit (0,0) output token.
/// The gate index tweaks the hash so identical token pairs at different
/// gates never share pads.
fn gate_hash(gate_index: u64, a: &WireToken, b: &WireToken) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(gate_index.to_be_bytes());
    h.update(a.0);
    h.update(b.0);
    h.finalize().into()
}

/// Hash binding an output position to a token value for the decode table.
fn decode_hash(position: u64, t: &WireToken) -> [u8; 16] {
    let mut h = Sha256::new();
    h.update((DECODE_TWEAK_BIT | position).to_be_bytes());
    h.update(t.0);
    let digest: [u8; 32] = h.finalize().into();
    digest[..16].try_into().unwrap()
}

/// Garbles a circuit with fresh randomness. Returns the public garbled
/// tables, the garbler's secret token state, and the output decode table.
pub fn garble<R: RngCore + CryptoRng>(
    circuit: &Circuit,
    k_bits: usize,
    rng: &mut R,
) -> Result<(GarbledCircuit, GarblerState, OutputDecoder), GarbleError> {
    check_token_bits(k_bits)?;
    let kb = token_bytes(k_bits);
    let mut delta = random_token(kb, rng);
    delta.0[0] |= 1;

    let mut tokens0 = vec![WireToken::ZERO; circuit.wire_count];
    for slot in tokens0.iter_mut().take(circuit.input_bits()) {
        *slot = random_token(kb, rng);
    }

    let mut rows = Vec::with_capacity(circuit.nonfree_gate_count() * 3 * (kb + 1));
    let mut const_tokens = Vec::new();
    for (gi, gate) in circuit.gates.iter().enumerate() {
        match *gate {
            Gate::Xor { a, b, out } => {
                tokens0[out as usize] = tokens0[a as usize].xor(&tokens0[b as usize]);
            }
            Gate::Not { a, out } => {
                tokens0[out as usize] = tokens0[a as usize].xor(&delta);
            }
            Gate::Const { value, out } => {
                let w0 = random_token(kb, rng);
                tokens0[out as usize] = w0;
                const_tokens.push(if value { w0.xor(&delta) } else { w0 });
            }
            Gate::And { a, b, out } | Gate::Or { a, b, out } => {
                let is_or = matches!(gate, Gate::Or { .. });
                let (a0, b0) = (tokens0[a as usize], tokens0[b as usize]);
                let (ca0, cb0) = (a0.color(), b0.color());
                let mut w0 = WireToken::ZERO;
                // Color pair (0,0) runs first: its hash pins the output
                // tokens, and the remaining three pairs emit rows in the
                // order the evaluator indexes them.
                for (ca, cb) in [(false, false), (false, true), (true, false), (true, true)] {
                    let va = ca ^ ca0;
                    let vb = cb ^ cb0;
                    let ta = if va { a0.xor(&delta) } else { a0 };
                    let tb = if vb { b0.xor(&delta) } else { b0 };
                    let v_out = if is_or { va | vb } else { va & vb };
                    let h = gate_hash(gi as u64, &ta, &tb);
                    if !ca && !cb {
                        let derived = WireToken::from_trunc_bytes(&h[..kb]);
                        w0 = if v_out { derived.xor(&delta) } else { derived };
                        continue;
                    }
                    let t_out = if v_out { w0.xor(&delta) } else { w0 };
                    for i in 0..kb {
                        rows.push(h[i] ^ t_out.0[i]);
                    }
                    rows.push(h[kb]); // marker byte, plaintext 0x00
                }
                tokens0[out as usize] = w0;
            }
        }
    }

    let mut output_tokens0 = Vec::with_capacity(circuit.output_wires.len());
    let mut entries = Vec::with_capacity(circuit.output_wires.len());
    for (j, &w) in circuit.output_wires.iter().enumerate() {
        let w0 = tokens0[w as usize];
        let w1 = w0.xor(&delta);
        entries.push((decode_hash(j as u64, &w0), decode_hash(j as u64, &w1)));
        output_tokens0.push(w0);
    }

    let input_bits = circuit.input_bits();
    tokens0.truncate(input_bits);
    let state = GarblerState {
        k_bits,
        delta,
        input_a_bits: circuit.input_a_bits,
        input_tokens0: tokens0,
        output_tokens0,
    };
    Ok((GarbledCircuit { k_bits, rows, const_tokens }, state, OutputDecoder { entries }))
}

/// Evaluates a garbled circuit on active input tokens (garbler inputs first,
/// evaluator inputs second) and returns the active output tokens.
pub fn evaluate(
    circuit: &Circuit,
    garbled: &GarbledCircuit,
    inputs: &[WireToken],
) -> Result<Vec<WireToken>, GarbleError> {
    check_token_bits(garbled.k_bits)?;
    let kb = token_bytes(garbled.k_bits);
    if inputs.len() != circuit.input_bits() {
        return Err(GarbleError::InputLength { expected: circuit.input_bits(), got: inputs.len() });
    }
    if garbled.rows.len() != circuit.nonfree_gate_count() * 3 * (kb + 1) {
        return Err(GarbleError::SizeMismatch);
    }

    let mut wires = vec![WireToken::ZERO; circuit.wire_count];
    wires[..inputs.len()].copy_from_slice(inputs);
    let mut row_base = 0;
    let mut consts = garbled.const_tokens.iter();
    for (gi, gate) in circuit.gates.iter().enumerate() {
        match *gate {
            Gate::Xor { a, b, out } => {
                wires[out as usize] = wires[a as usize].xor(&wires[b as usize]);
            }
            Gate::Not { a, out } => {
                // Token roles were swapped at garbling time; the active
                // token passes through untouched.
                wires[out as usize] = wires[a as usize];
            }
            Gate::Const { out, .. } => {
                wires[out as usize] = *consts.next().ok_or(GarbleError::MissingConstToken)?;
            }
            Gate::And { a, b, out } | Gate::Or { a, b, out } => {
                let (ta, tb) = (wires[a as usize], wires[b as usize]);
                let h = gate_hash(gi as u64, &ta, &tb);
                let (ca, cb) = (ta.color(), tb.color());
                let token = if !ca && !cb {
                    WireToken::from_trunc_bytes(&h[..kb])
                } else {
                    let idx = 2 * usize::from(ca) + usize::from(cb) - 1;
                    let row = &garbled.rows[row_base + idx * (kb + 1)..][..kb + 1];
                    if row[kb] ^ h[kb] != 0 {
                        return Err(GarbleError::CorruptRow(gi as u64));
                    }
                    let mut t = WireToken::ZERO;
                    for i in 0..kb {
                        t.0[i] = row[i] ^ h[i];
                    }
                    t
                };
                wires[out as usize] = token;
                row_base += 3 * (kb + 1);
            }
        }
    }
    Ok(circuit.output_wires.iter().map(|&w| wires[w as usize]).collect())
}

/// Decodes active output tokens with the published decode table. Any token
/// matching neither stored hash yields [`GarbleError::DecodeFailed`].
pub fn decode_with_table(
    decoder: &OutputDecoder,
    outputs: &[WireToken],
) -> Result<Vec<bool>, GarbleError> {
    if outputs.len() != decoder.entries.len() {
        return Err(GarbleError::OutputLength { expected: decoder.entries.len(), got: outputs.len() });
    }
    outputs
        .iter()
        .zip(&decoder.entries)
        .enumerate()
        .map(|(j, (t, (h0, h1)))| {
            let h = decode_hash(j as u64, t);
            if h == *h0 {
                Ok(false)
            } else if h == *h1 {
                Ok(true)
            } else {
                Err(GarbleError::DecodeFailed(j))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::u64_to_bits;
    use crate::circuit::build::{gen_millionaires, gen_random_circuit, gen_select};
    use crate::circuit::parse_circuit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// Garble once, then check every decoder path against plain evaluation
    /// for one input assignment.
    fn check_one(
        circuit: &Circuit,
        garbled: &GarbledCircuit,
        state: &GarblerState,
        decoder: &OutputDecoder,
        a: &[bool],
        b: &[bool],
    ) {
        let mut inputs = state.encode_input_a(a).unwrap();
        inputs.extend(state.encode_input_b(b).unwrap());
        let outputs = evaluate(circuit, garbled, &inputs).unwrap();
        let plain = circuit.eval_plain(a, b).unwrap();
        assert_eq!(decode_with_table(decoder, &outputs).unwrap(), plain);
        assert_eq!(state.decode_output(&outputs).unwrap(), plain);
    }

    fn check_exhaustive(circuit: &Circuit, k_bits: usize, seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (garbled, state, decoder) = garble(circuit, k_bits, &mut rng).unwrap();
        let (na, nb) = (circuit.input_a_bits, circuit.input_b_bits);
        assert!(na + nb <= 16, "exhaustive check limited to small circuits");
        for x in 0u64..1 << (na + nb) {
            let a = u64_to_bits(x >> nb, na);
            let b = u64_to_bits(x & ((1 << nb) - 1), nb);
            check_one(circuit, &garbled, &state, &decoder, &a, &b);
        }
    }

    // Small mixed circuit exercising every gate kind, including an output
    // fed straight from an input wire.
    const MIXED: &str = "\
wires 9 inA 2 inB 2 out 8,7,0
XOR 0 1 4
AND 4 2 5
NOT 3 6
OR 5 6 7
CONST 1 8
";

    #[test]
    fn all_gate_kinds_garble_correctly() {
        let circuit = parse_circuit(MIXED).unwrap();
        check_exhaustive(&circuit, 128, 11);
        check_exhaustive(&circuit, 80, 12);
    }

    #[test]
    fn comparison_circuits_garble_correctly() {
        for n in 1..=3 {
            check_exhaustive(&gen_millionaires(n), 128, 100 + n as u64);
        }
        check_exhaustive(&gen_millionaires(3), 80, 200);
    }

    #[test]
    fn selection_circuit_garbles_correctly() {
        // Four 2-bit entries from the garbler, a 2-bit index from the
        // evaluator.
        check_exhaustive(&gen_select(4, 2), 128, 300);
        check_exhaustive(&gen_select(3, 2), 80, 301);
    }

    #[test]
    fn random_circuits_garble_correctly() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        for trial in 0..12 {
            let gates = rng.gen_range(1..=300);
            let na = rng.gen_range(0..8);
            let nb = rng.gen_range(1..8);
            let circuit = gen_random_circuit(&mut rng, gates, na, nb);
            let k_bits = if trial % 2 == 0 { 128 } else { 80 };
            let (garbled, state, decoder) = garble(&circuit, k_bits, &mut rng).unwrap();
            for _ in 0..8 {
                let a: Vec<bool> = (0..na).map(|_| rng.gen()).collect();
                let b: Vec<bool> = (0..nb).map(|_| rng.gen()).collect();
                check_one(&circuit, &garbled, &state, &decoder, &a, &b);
            }
        }
    }

    #[test]
    fn row_counts_follow_gate_mix() {
        // 2 XOR + 1 NOT are free, 1 AND + 1 OR pay three rows each, 1 CONST
        // publishes one token.
        let circuit = parse_circuit(MIXED).unwrap();
        for (k_bits, row_len) in [(128, 17), (80, 11)] {
            let mut rng = ChaCha20Rng::seed_from_u64(5);
            let (garbled, _, _) = garble(&circuit, k_bits, &mut rng).unwrap();
            assert_eq!(garbled.rows.len(), 2 * 3 * row_len);
            assert_eq!(garbled.const_tokens.len(), 1);
        }
    }

    #[test]
    fn token_pairs_share_one_offset_with_odd_low_bit() {
        let circuit = gen_select(4, 4);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let (_, state, _) = garble(&circuit, 80, &mut rng).unwrap();
        let delta = state.delta();
        assert_eq!(delta.0[0] & 1, 1);
        assert_eq!(&delta.0[10..], &[0u8; 6], "offset must stay within 80 bits");
        let pairs = state.input_pairs_b();
        assert!(!pairs.is_empty());
        for (w0, w1) in pairs {
            assert_eq!(w0.xor(&w1), delta);
            assert_ne!(w0.color(), w1.color());
            assert_eq!(&w0.0[10..], &[0u8; 6]);
        }
    }

    #[test]
    fn color_bits_are_balanced() {
        // 1000 fresh input wires; color bits of the zero-tokens should be
        // near-uniform.
        let circuit = gen_random_circuit(&mut ChaCha20Rng::seed_from_u64(1), 4, 1000, 0);
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let (_, state, _) = garble(&circuit, 128, &mut rng).unwrap();
        let zeros = state.encode_input_a(&vec![false; 1000]).unwrap();
        let ones = zeros.iter().filter(|t| t.color()).count();
        assert!((450..=550).contains(&ones), "color bias: {ones}/1000");
    }

    #[test]
    fn tampered_rows_never_decode_silently() {
        // Single AND gate: for every input pair and every flipped row byte,
        // the run must either error out or (if the flipped row went unused)
        // still agree with plain evaluation.
        let circuit = parse_circuit("wires 3 inA 1 inB 1 out 2\nAND 0 1 2\n").unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let (garbled, state, decoder) = garble(&circuit, 80, &mut rng).unwrap();
        for x in 0u64..4 {
            let a = u64_to_bits(x >> 1, 1);
            let b = u64_to_bits(x & 1, 1);
            let plain = circuit.eval_plain(&a, &b).unwrap();
            let mut inputs = state.encode_input_a(&a).unwrap();
            inputs.extend(state.encode_input_b(&b).unwrap());
            for byte in 0..garbled.rows.len() {
                let mut mangled = garbled.clone();
                mangled.rows[byte] ^= 0x40;
                match evaluate(&circuit, &mangled, &inputs) {
                    Err(GarbleError::CorruptRow(0)) => {}
                    Ok(outputs) => match decode_with_table(&decoder, &outputs) {
                        Ok(bits) => assert_eq!(bits, plain, "byte {byte} input {x}"),
                        Err(GarbleError::DecodeFailed(0)) => {}
                        Err(e) => panic!("unexpected decode error: {e}"),
                    },
                    Err(e) => panic!("unexpected evaluate error: {e}"),
                }
            }
        }
    }

    #[test]
    fn tampered_output_tokens_fail_both_decoders() {
        let circuit = gen_millionaires(2);
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        let (garbled, state, decoder) = garble(&circuit, 128, &mut rng).unwrap();
        let mut inputs = state.encode_input_a(&u64_to_bits(2, 2)).unwrap();
        inputs.extend(state.encode_input_b(&u64_to_bits(1, 2)).unwrap());
        let mut outputs = evaluate(&circuit, &garbled, &inputs).unwrap();
        outputs[0].0[3] ^= 1;
        assert!(matches!(decode_with_table(&decoder, &outputs), Err(GarbleError::DecodeFailed(0))));
        assert!(matches!(state.decode_output(&outputs), Err(GarbleError::DecodeFailed(0))));
    }

    #[test]
    fn length_and_parameter_errors() {
        let circuit = gen_millionaires(2);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        assert!(matches!(garble(&circuit, 96, &mut rng), Err(GarbleError::BadTokenBits(96))));
        let (garbled, state, decoder) = garble(&circuit, 128, &mut rng).unwrap();
        assert!(matches!(
            state.encode_input_a(&[true]),
            Err(GarbleError::InputLength { expected: 2, got: 1 })
        ));
        assert!(matches!(
            evaluate(&circuit, &garbled, &[WireToken::ZERO]),
            Err(GarbleError::InputLength { expected: 4, got: 1 })
        ));
        let mut truncated = garbled.clone();
        truncated.rows.pop();
        let inputs = [WireToken::ZERO; 4];
        assert!(matches!(evaluate(&circuit, &truncated, &inputs), Err(GarbleError::SizeMismatch)));
        assert!(matches!(
            decode_with_table(&decoder, &[]),
            Err(GarbleError::OutputLength { expected: 1, got: 0 })
        ));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        /// Pipeline invariant: garble → encode → evaluate → decode agrees
        /// with plain evaluation on arbitrary circuits and inputs.
        #[test]
        fn garbled_evaluation_matches_plain(
            seed in proptest::prelude::any::<u64>(),
            gates in 1usize..160,
            na in 0usize..7,
            nb in 1usize..7,
            wide_tokens in proptest::prelude::any::<bool>(),
        ) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let circuit = gen_random_circuit(&mut rng, gates, na, nb);
            let k_bits = if wide_tokens { 128 } else { 80 };
            let (garbled, state, decoder) = garble(&circuit, k_bits, &mut rng).unwrap();
            for _ in 0..3 {
                let a: Vec<bool> = (0..na).map(|_| rng.gen()).collect();
                let b: Vec<bool> = (0..nb).map(|_| rng.gen()).collect();
                check_one(&circuit, &garbled, &state, &decoder, &a, &b);
            }
        }
    }

    #[test]
    fn byte_encodings_round_trip() {
        let circuit = parse_circuit(MIXED).unwrap();
        for k_bits in [80, 128] {
            let mut rng = ChaCha20Rng::seed_from_u64(8);
            let (garbled, _, decoder) = garble(&circuit, k_bits, &mut rng).unwrap();
            let gc2 = GarbledCircuit::from_bytes(&garbled.to_bytes()).unwrap();
            assert_eq!(gc2.k_bits, garbled.k_bits);
            assert_eq!(gc2.rows, garbled.rows);
            assert_eq!(gc2.const_tokens, garbled.const_tokens);
            assert_eq!(OutputDecoder::from_bytes(&decoder.to_bytes()).unwrap(), decoder);
        }
        assert!(matches!(GarbledCircuit::from_bytes(&[0, 96]), Err(GarbleError::BadTokenBits(96))));
        assert!(matches!(GarbledCircuit::from_bytes(&[0]), Err(GarbleError::Malformed)));
        let valid = {
            let mut rng = ChaCha20Rng::seed_from_u64(8);
            garble(&circuit, 80, &mut rng).unwrap().0.to_bytes()
        };
        assert!(matches!(
            GarbledCircuit::from_bytes(&valid[..valid.len() - 1]),
            Err(GarbleError::Malformed)
        ));
        let mut padded = valid;
        padded.push(0);
        assert!(matches!(GarbledCircuit::from_bytes(&padded), Err(GarbleError::Malformed)));
    }
}
