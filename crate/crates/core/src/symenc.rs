//! Authenticated symmetric encryption for the enclave channel.
//!
//! The second party shares a 128-bit key with the first party's enclave and
//! uses it to seal round inputs and (in the dual protocols) unseal round
//! outputs. Ciphertexts are AES-128-GCM with a fresh random nonce prepended:
//! `nonce(12) ∥ body ∥ tag(16)`, a fixed 28-byte overhead. The round index
//! rides along as associated data so a ciphertext recorded in one round can
//! never be replayed into another.
//!
//! Decryption is all-or-nothing: any bit flip in the nonce, body, tag, or
//! associated data yields [`SymError::Failed`] with no partial plaintext.

use aes_gcm::aead::{Aead, Payload};
use aes_gcm::{Aes128Gcm, KeyInit, Nonce};
use rand::{CryptoRng, RngCore};
use thiserror::Error;

/// Bytes added to every plaintext: 12-byte nonce plus 16-byte tag.
pub const SEAL_OVERHEAD: usize = NONCE_LEN + TAG_LEN;

const NONCE_LEN: usize = 12;
const TAG_LEN: usize = 16;

/// Errors from the sealed channel.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum SymError {
    /// Decryption failed: wrong key, wrong associated data, truncation, or
    /// tampering. Deliberately opaque.
    #[error("sealed message failed authentication")]
    Failed,
    /// A key string was not 32 hex digits.
    #[error("key must be exactly 32 hex digits")]
    BadKey,
}

/// A 128-bit symmetric key shared between the second party and the enclave.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct SymKey(pub [u8; 16]);

impl SymKey {
    /// Draws a fresh key.
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> SymKey {
        let mut k = [0u8; 16];
        rng.fill_bytes(&mut k);
        SymKey(k)
    }

    /// Parses a 32-hex-digit key, e.g. from a key file.
    pub fn from_hex(s: &str) -> Result<SymKey, SymError> {
        let bytes = hex::decode(s.trim()).map_err(|_| SymError::BadKey)?;
        let k: [u8; 16] = bytes.try_into().map_err(|_| SymError::BadKey)?;
        Ok(SymKey(k))
    }

    /// Hex form for key files.
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl std::fmt::Debug for SymKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // Never print key material in logs or assertion output.
        write!(f, "SymKey(…)")
    }
}

/// Associated data binding a ciphertext to one round of a multi-round run.
pub fn round_ad(round: u16) -> [u8; 2] {
    round.to_be_bytes()
}

/// Seals `plaintext` under `key`, binding it to `aad`. Output is
/// `nonce ∥ body ∥ tag`, exactly `plaintext.len() + SEAL_OVERHEAD` bytes.
pub fn seal<R: RngCore + CryptoRng>(
    key: &SymKey,
    aad: &[u8],
    plaintext: &[u8],
    rng: &mut R,
) -> Vec<u8> {
    let cipher = Aes128Gcm::new_from_slice(&key.0).expect("128-bit key");
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let body = cipher
        .encrypt(Nonce::from_slice(&nonce), Payload { msg: plaintext, aad })
        .expect("AES-GCM encryption is infallible for in-memory buffers");
    let mut out = Vec::with_capacity(NONCE_LEN + body.len());
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&body);
    out
}

/// Opens a sealed message. Returns the plaintext only if the key, nonce,
/// body, tag, and associated data are all intact.
pub fn open(key: &SymKey, aad: &[u8], sealed: &[u8]) -> Result<Vec<u8>, SymError> {
    if sealed.len() < SEAL_OVERHEAD {
        return Err(SymError::Failed);
    }
    let cipher = Aes128Gcm::new_from_slice(&key.0).expect("128-bit key");
    let (nonce, body) = sealed.split_at(NONCE_LEN);
    cipher
        .decrypt(Nonce::from_slice(nonce), Payload { msg: body, aad })
        .map_err(|_| SymError::Failed)
}
