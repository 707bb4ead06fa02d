//! Bit-string helpers shared across circuits, garbling, and the apps.
//!
//! Bit strings are `Vec<bool>` / `&[bool]`, most-significant bit first, so the
//! string `0110` encodes the integer 6. Byte conversions follow the same
//! convention: bit 0 of a string maps to the MSB of byte 0.

/// Encodes the low `width` bits of `x`, most-significant bit first.
///
/// Panics if `width > 64` or if `x` does not fit in `width` bits.
pub fn u64_to_bits(x: u64, width: usize) -> Vec<bool> {
    assert!(width <= 64, "bit width {width} exceeds u64");
    assert!(
        width == 64 || x < (1u64 << width),
        "value {x} does not fit in {width} bits"
    );
    (0..width).map(|i| (x >> (width - 1 - i)) & 1 == 1).collect()
}

/// Decodes a most-significant-bit-first string into an integer.
///
/// Panics if the string is longer than 64 bits.
pub fn bits_to_u64(bits: &[bool]) -> u64 {
    assert!(bits.len() <= 64, "bit string too long for u64");
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
}

/// Expands bytes into bits, MSB of each byte first.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|&byte| (0..8).map(move |i| (byte >> (7 - i)) & 1 == 1))
        .collect()
}

/// Packs bits into bytes, MSB first; the last byte is zero-padded on the right.
pub fn bits_to_bytes(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
        })
        .collect()
}

/// Renders a bit string in the `0110` notation used by the circuit tests.
pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Parses the `0110` notation; rejects anything but `0` and `1`.
pub fn bits_from_string(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}
