//! Batched 1-out-of-2 oblivious transfer for evaluator input tokens.
//!
//! Three moves over a prime-order group (Ristretto on Curve25519):
//!
//! 1. the sender publishes `S = y·B` for a fresh secret `y`;
//! 2. the receiver answers, per transfer `j`, with `R_j = b_j·S + x_j·B`
//!    for a fresh secret `x_j` — a uniformly random group element whatever
//!    the choice bit `b_j`, so the batch of `R_j` values carries no
//!    information about the choices;
//! 3. the sender pads each message pair with hashes of `y·R_j` and
//!    `y·R_j − y·S`. The receiver can recompute exactly one of those pads,
//!    `x_j·S`, matching its choice bit; the other pad would require solving
//!    a Diffie-Hellman instance.
//!
//! The sender ends with no output at all; the receiver ends with one message
//! per pair. Both machines draw randomness only from the caller-provided
//! generator so whole runs replay deterministically from logged coins.

use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Size of one compressed group element on the wire.
pub const POINT_LEN: usize = 32;

/// Errors from the transfer machines.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum OtError {
    /// A wire message failed to decode as a group element.
    #[error("transfer message carries an invalid group element")]
    BadPoint,
    /// A wire message has the wrong length for the batch.
    #[error("transfer message length {got} does not match expected {expected}")]
    Length { expected: usize, got: usize },
    /// The message pairs fed to the sender differ in length.
    #[error("all transferred messages in a batch must share one length")]
    RaggedMessages,
}

fn decompress(bytes: &[u8]) -> Result<RistrettoPoint, OtError> {
    let arr: [u8; POINT_LEN] = bytes.try_into().map_err(|_| OtError::BadPoint)?;
    CompressedRistretto(arr).decompress().ok_or(OtError::BadPoint)
}

/// Stretches a shared group element into a message pad. The transfer index
/// keeps pads of a batch independent; the counter extends past one digest.
fn pad(point: &RistrettoPoint, index: u64, len: usize) -> Vec<u8> {
    let encoded = point.compress();
    let mut out = Vec::with_capacity(len);
    let mut counter = 0u32;
    while out.len() < len {
        let mut h = Sha256::new();
        h.update(b"ot-pad");
        h.update(index.to_be_bytes());
        h.update(encoded.as_bytes());
        h.update(counter.to_be_bytes());
        let block: [u8; 32] = h.finalize().into();
        let take = (len - out.len()).min(32);
        out.extend_from_slice(&block[..take]);
        counter += 1;
    }
    out
}

/// Sender side: holds the batch secret between its two moves.
pub struct OtSender {
    y: Scalar,
    y_s: RistrettoPoint,
}

impl OtSender {
    /// First move: returns the machine and the setup message (one point).
    pub fn new<R: RngCore + CryptoRng>(rng: &mut R) -> (OtSender, Vec<u8>) {
        let y = Scalar::random(rng);
        let s = RistrettoPoint::mul_base(&y);
        let setup = s.compress().as_bytes().to_vec();
        (OtSender { y, y_s: s * y }, setup)
    }

    /// Final move: consumes the receiver's blinded points and returns the
    /// padded message pairs, `2 · len` bytes per transfer. All messages must
    /// share one length.
    pub fn respond(
        &self,
        pairs: &[(Vec<u8>, Vec<u8>)],
        blinded: &[u8],
    ) -> Result<Vec<u8>, OtError> {
        let expected = pairs.len() * POINT_LEN;
        if blinded.len() != expected {
            return Err(OtError::Length { expected, got: blinded.len() });
        }
        let msg_len = pairs.first().map_or(0, |(m0, _)| m0.len());
        if pairs.iter().any(|(m0, m1)| m0.len() != msg_len || m1.len() != msg_len) {
            return Err(OtError::RaggedMessages);
        }
        let mut out = Vec::with_capacity(pairs.len() * 2 * msg_len);
        for (j, ((m0, m1), chunk)) in pairs.iter().zip(blinded.chunks(POINT_LEN)).enumerate() {
            let r = decompress(chunk)?;
            let key0 = r * self.y;
            let key1 = key0 - self.y_s;
            for (m, key) in [(m0, key0), (m1, key1)] {
                let pad = pad(&key, j as u64, msg_len);
                out.extend(m.iter().zip(&pad).map(|(b, p)| b ^ p));
            }
        }
        Ok(out)
    }
}

/// Receiver side: holds its per-transfer pad keys between moves.
pub struct OtReceiver {
    keys: Vec<RistrettoPoint>,
    choices: Vec<bool>,
}

impl OtReceiver {
    /// Second move: consumes the sender setup and the choice bits, returns
    /// the machine and the blinded-point message (one point per transfer).
    pub fn new<R: RngCore + CryptoRng>(
        choices: &[bool],
        setup: &[u8],
        rng: &mut R,
    ) -> Result<(OtReceiver, Vec<u8>), OtError> {
        let s = decompress(setup)?;
        let mut keys = Vec::with_capacity(choices.len());
        let mut blinded = Vec::with_capacity(choices.len() * POINT_LEN);
        for &bit in choices {
            let x = Scalar::random(rng);
            let mut r = RistrettoPoint::mul_base(&x);
            if bit {
                r += s;
            }
            keys.push(s * x);
            blinded.extend_from_slice(r.compress().as_bytes());
        }
        Ok((OtReceiver { keys, choices: choices.to_vec() }, blinded))
    }

    /// Unpads the chosen message of each pair. `msg_len` is the shared
    /// message length agreed out of band (here: token bytes).
    pub fn finish(&self, msg_len: usize, padded: &[u8]) -> Result<Vec<Vec<u8>>, OtError> {
        let expected = self.keys.len() * 2 * msg_len;
        if padded.len() != expected {
            return Err(OtError::Length { expected, got: padded.len() });
        }
        Ok(self
            .keys
            .iter()
            .zip(&self.choices)
            .enumerate()
            .map(|(j, (key, &bit))| {
                let base = j * 2 * msg_len + usize::from(bit) * msg_len;
                let pad = pad(key, j as u64, msg_len);
                padded[base..base + msg_len].iter().zip(&pad).map(|(b, p)| b ^ p).collect()
            })
            .collect())
    }
}

/// Wire messages of one complete transfer batch, in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OtTranscript {
    /// Sender setup point.
    pub setup: Vec<u8>,
    /// Receiver blinded points.
    pub blinded: Vec<u8>,
    /// Sender padded message pairs.
    pub padded: Vec<u8>,
}

/// Runs a whole batch in process: the receiver obtains its chosen messages,
/// the sender obtains nothing. Returns the messages and the transcript.
pub fn ot_execute<R1, R2>(
    pairs: &[(Vec<u8>, Vec<u8>)],
    choices: &[bool],
    sender_rng: &mut R1,
    receiver_rng: &mut R2,
) -> Result<(Vec<Vec<u8>>, OtTranscript), OtError>
where
    R1: RngCore + CryptoRng,
    R2: RngCore + CryptoRng,
{
    assert_eq!(pairs.len(), choices.len(), "one choice bit per message pair");
    let (sender, setup) = OtSender::new(sender_rng);
    let (receiver, blinded) = OtReceiver::new(choices, &setup, receiver_rng)?;
    let padded = sender.respond(pairs, &blinded)?;
    let received = receiver.finish(pairs.first().map_or(0, |(m, _)| m.len()), &padded)?;
    Ok((received, OtTranscript { setup, blinded, padded }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_pairs(rng: &mut ChaCha20Rng, n: usize, len: usize) -> Vec<(Vec<u8>, Vec<u8>)> {
        (0..n)
            .map(|_| {
                let mut m0 = vec![0u8; len];
                let mut m1 = vec![0u8; len];
                rng.fill_bytes(&mut m0);
                rng.fill_bytes(&mut m1);
                (m0, m1)
            })
            .collect()
    }

    #[test]
    fn receiver_gets_exactly_the_chosen_messages_exhaustive() {
        // Every choice vector for batches of 1..=8 transfers.
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for n in 1usize..=8 {
            let pairs = random_pairs(&mut rng, n, 16);
            for mask in 0u32..1 << n {
                let choices: Vec<bool> = (0..n).map(|j| mask >> j & 1 == 1).collect();
                let (got, _) = ot_execute(&pairs, &choices, &mut rng.clone(), &mut rng).unwrap();
                for (j, m) in got.iter().enumerate() {
                    let want = if choices[j] { &pairs[j].1 } else { &pairs[j].0 };
                    assert_eq!(m, want, "n={n} mask={mask} j={j}");
                }
            }
        }
    }

    #[test]
    fn large_batch_delivers_all_chosen_messages() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for len in [10usize, 16] {
            let n = 2048;
            let pairs = random_pairs(&mut rng, n, len);
            let choices: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let mut srng = ChaCha20Rng::seed_from_u64(3);
            let mut rrng = ChaCha20Rng::seed_from_u64(4);
            let (got, _) = ot_execute(&pairs, &choices, &mut srng, &mut rrng).unwrap();
            for (j, m) in got.iter().enumerate() {
                let want = if choices[j] { &pairs[j].1 } else { &pairs[j].0 };
                assert_eq!(m, want);
            }
        }
    }

    #[test]
    fn unchosen_message_stays_hidden_behind_its_pad() {
        // Decoding the other ciphertext with the receiver's one pad key must
        // not yield the other message.
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let pairs = random_pairs(&mut rng, 32, 16);
        let choices = vec![false; 32];
        let (sender, setup) = OtSender::new(&mut rng);
        let (receiver, blinded) = OtReceiver::new(&choices, &setup, &mut rng).unwrap();
        let padded = sender.respond(&pairs, &blinded).unwrap();
        for (j, key) in receiver.keys.iter().enumerate() {
            let other = &padded[j * 32 + 16..j * 32 + 32];
            let pad = pad(key, j as u64, 16);
            let guess: Vec<u8> = other.iter().zip(&pad).map(|(b, p)| b ^ p).collect();
            assert_ne!(guess, pairs[j].1, "pad for the unchosen branch leaked at {j}");
        }
    }

    #[test]
    fn blinded_points_do_not_depend_on_choices() {
        // Two-sample chi-square over hashed point prefixes: the all-zeros
        // and all-ones batches should be statistically indistinguishable.
        let n = 2048;
        let setup = OtSender::new(&mut ChaCha20Rng::seed_from_u64(6)).1;
        let histogram = |choice: bool, seed: u64| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (_, blinded) =
                OtReceiver::new(&vec![choice; n], &setup, &mut rng).unwrap();
            let mut counts = [0f64; 16];
            for chunk in blinded.chunks(POINT_LEN) {
                let h: [u8; 32] = Sha256::digest(chunk).into();
                counts[(h[0] >> 4) as usize] += 1.0;
            }
            counts
        };
        let a = histogram(false, 7);
        let b = histogram(true, 8);
        let stat: f64 =
            a.iter().zip(&b).map(|(x, y)| (x - y).powi(2) / (x + y)).sum();
        // df = 15; the 0.99 quantile is 30.58 — a dependence on the choice
        // bit would blow far past it.
        assert!(stat < 30.58, "choice bits visible in blinded points: chi2 = {stat}");
    }

    #[test]
    fn transcripts_replay_deterministically() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let pairs = random_pairs(&mut rng, 10, 16);
        let choices: Vec<bool> = (0..10).map(|_| rng.gen()).collect();
        let run = |s: u64, r: u64| {
            ot_execute(
                &pairs,
                &choices,
                &mut ChaCha20Rng::seed_from_u64(s),
                &mut ChaCha20Rng::seed_from_u64(r),
            )
            .unwrap()
        };
        assert_eq!(run(1, 2).1, run(1, 2).1);
        assert_ne!(run(1, 2).1, run(1, 3).1);
    }

    #[test]
    fn malformed_messages_are_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let (sender, setup) = OtSender::new(&mut rng);
        assert_eq!(
            OtReceiver::new(&[true], &setup[..31], &mut rng).err().unwrap(),
            OtError::BadPoint
        );
        assert_eq!(
            OtReceiver::new(&[true], &[0xffu8; 32], &mut rng).err().unwrap(),
            OtError::BadPoint
        );
        let pairs = random_pairs(&mut rng, 2, 8);
        assert_eq!(
            sender.respond(&pairs, &[0u8; 32]).unwrap_err(),
            OtError::Length { expected: 64, got: 32 }
        );
        let ragged = vec![(vec![0u8; 8], vec![0u8; 9])];
        assert_eq!(sender.respond(&ragged, &[0u8; 32]).unwrap_err(), OtError::RaggedMessages);
        let (receiver, blinded) = OtReceiver::new(&[false, true], &setup, &mut rng).unwrap();
        let padded = sender.respond(&pairs, &blinded).unwrap();
        assert_eq!(
            receiver.finish(8, &padded[..31]).unwrap_err(),
            OtError::Length { expected: 32, got: 31 }
        );
    }
}
