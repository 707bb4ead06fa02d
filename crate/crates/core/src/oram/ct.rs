//! Branch-free building blocks for code that handles secret values.
//!
//! Everything above the test module is written in a deliberately restricted
//! style: no `if`, `else`, `match`, `while`, `loop`, `?`, or comparison
//! operators — only arithmetic and bitwise operations plus `for` loops over
//! public bounds. A source-audit test at the bottom of this file enforces
//! the restriction, so the compiler has no secret-dependent branch to emit
//! in the first place. (Instruction-level verification is out of scope; the
//! audit is a source-level lint.)
//!
//! Conditions are whole words: predicates return 0 or 1 in a `u64`, and
//! [`make_mask`] stretches that bit across the word so selection becomes
//! masking. Callers normalize untrusted condition words with
//! [`make_same_as_bit0`] first.

/// Number of `u64` fields in one [`oblivious_mix`] buffer entry
/// (priority, key, value, spare).
pub const MIX_FIELDS: usize = 4;

/// Stretches a 0/1 condition to an all-zeros/all-ones mask.
/// Input must already be 0 or 1 — normalize with [`make_same_as_bit0`].
#[inline]
pub fn make_mask(t: u64) -> u64 {
    t.wrapping_neg()
}

/// Reduces an arbitrary condition word to its low bit.
#[inline]
pub fn make_same_as_bit0(t: u64) -> u64 {
    t & 1
}

/// 1 when `x` is nonzero, else 0, without comparing.
#[inline]
pub fn bf_nonzero(x: u64) -> u64 {
    (x | x.wrapping_neg()) >> 63
}

/// 1 when `a == b`, else 0.
#[inline]
pub fn bf_eq(a: u64, b: u64) -> u64 {
    bf_nonzero(a ^ b) ^ 1
}

/// 1 when `a < b` (unsigned), else 0: the borrow bit of the wide
/// subtraction.
#[inline]
pub fn bf_lt(a: u64, b: u64) -> u64 {
    ((a as u128).wrapping_sub(b as u128) >> 64) as u64 & 1
}

/// `x` when `t == 1`, `y` when `t == 0`.
#[inline]
pub fn bf_select(t: u64, x: u64, y: u64) -> u64 {
    let m = make_mask(t);
    (x & m) | (y & !m)
}

/// The smaller of `cur` and `cand` — the relaxation step of shortest-path
/// and minimum searches, without a data-dependent branch.
#[inline]
pub fn bf_min_update(cur: u64, cand: u64) -> u64 {
    bf_select(bf_lt(cand, cur), cand, cur)
}

/// Reads `slots[key]` by touching every slot exactly once.
pub fn bf_scan_get(slots: &[u64], key: u64) -> u64 {
    let mut acc = 0u64;
    for (i, v) in slots.iter().enumerate() {
        acc |= v & make_mask(bf_eq(i as u64, key));
    }
    acc
}

/// Writes `value` into `slots[key]` by rewriting every slot exactly once.
pub fn bf_scan_put(slots: &mut [u64], key: u64, value: u64) {
    for (i, s) in slots.iter_mut().enumerate() {
        *s = bf_select(bf_eq(i as u64, key), value, *s);
    }
}

/// Sorts buffer entries by their first field (a random priority in the
/// stores) with a fixed O(m²) compare-exchange network. Every execution
/// performs the identical sequence of reads, writes, and swaps-as-masking
/// regardless of the data.
pub fn oblivious_mix(entries: &mut [[u64; MIX_FIELDS]]) {
    let m = entries.len();
    for _pass in 0..m {
        for j in 0..m.saturating_sub(1) {
            let a = entries[j];
            let b = entries[j + 1];
            let t = bf_lt(b[0], a[0]);
            for f in 0..MIX_FIELDS {
                entries[j][f] = bf_select(t, b[f], a[f]);
                entries[j + 1][f] = bf_select(t, a[f], b[f]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn predicates_match_native_operators_exhaustively() {
        // All 8-bit operand pairs.
        for a in 0u64..256 {
            for b in 0u64..256 {
                assert_eq!(bf_eq(a, b), u64::from(a == b), "eq {a} {b}");
                assert_eq!(bf_lt(a, b), u64::from(a < b), "lt {a} {b}");
                assert_eq!(bf_min_update(a, b), a.min(b), "min {a} {b}");
            }
        }
    }

    #[test]
    fn predicates_handle_word_extremes() {
        let cases = [
            0,
            1,
            2,
            u64::MAX,
            u64::MAX - 1,
            1 << 63,
            (1 << 63) - 1,
            0x8000_0000,
            0x7fff_ffff_ffff_ffff,
        ];
        for &a in &cases {
            for &b in &cases {
                assert_eq!(bf_eq(a, b), u64::from(a == b));
                assert_eq!(bf_lt(a, b), u64::from(a < b));
                assert_eq!(bf_min_update(a, b), a.min(b));
                assert_eq!(bf_nonzero(a), u64::from(a != 0));
            }
        }
    }

    #[test]
    fn masks_and_selection() {
        assert_eq!(make_mask(0), 0);
        assert_eq!(make_mask(1), u64::MAX);
        for (x, want) in [(0u64, 0u64), (1, 1), (2, 0), (3, 1), (u64::MAX, 1)] {
            assert_eq!(make_same_as_bit0(x), want);
        }
        // Dense small sample plus random full-width words.
        for x in 0u64..128 {
            for y in 0u64..128 {
                assert_eq!(bf_select(1, x, y), x);
                assert_eq!(bf_select(0, x, y), y);
            }
        }
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let (x, y) = (rng.gen::<u64>(), rng.gen::<u64>());
            assert_eq!(bf_select(1, x, y), x);
            assert_eq!(bf_select(0, x, y), y);
        }
    }

    #[test]
    fn equal_picks_one_else_two() {
        // The masked form of `if a == b { 1 } else { 2 }`.
        for a in 0u64..256 {
            for b in 0u64..256 {
                let t = make_same_as_bit0(bf_eq(a, b));
                let mask = make_mask(t);
                let c = (1 & mask) | (2 & !mask);
                assert_eq!(c, if a == b { 1 } else { 2 });
            }
        }
    }

    #[test]
    fn scans_behave_like_indexing() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut slots: Vec<u64> = (0..64).map(|_| rng.gen()).collect();
        let mut model = slots.clone();
        for _ in 0..200 {
            let key = rng.gen_range(0..64u64);
            if rng.gen() {
                let v = rng.gen();
                bf_scan_put(&mut slots, key, v);
                model[key as usize] = v;
            } else {
                assert_eq!(bf_scan_get(&slots, key), model[key as usize]);
            }
        }
        assert_eq!(slots, model);
    }

    #[test]
    fn mix_is_a_permutation_ordered_by_priority() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for m in [0usize, 1, 2, 7, 40] {
            let mut entries: Vec<[u64; MIX_FIELDS]> =
                (0..m).map(|i| [rng.gen(), i as u64, rng.gen(), 0]).collect();
            let mut expect = entries.clone();
            oblivious_mix(&mut entries);
            expect.sort_by_key(|e| e[0]);
            assert_eq!(entries, expect, "m={m}");
        }
    }

    #[test]
    fn random_priorities_shuffle_uniformly_enough() {
        // Three tagged entries, 600 mixes: each of the 6 orders should land
        // roughly 100 times.
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..600 {
            let mut entries: Vec<[u64; MIX_FIELDS]> =
                (0..3).map(|i| [rng.gen(), i as u64, 0, 0]).collect();
            oblivious_mix(&mut entries);
            let order: Vec<u64> = entries.iter().map(|e| e[1]).collect();
            *counts.entry(order).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (order, c) in counts {
            assert!((55..=145).contains(&c), "order {order:?} seen {c} times");
        }
    }

    #[test]
    fn source_contains_no_branching_constructs() {
        // Audit the non-test region of this file: after stripping comments,
        // none of the branching keywords or comparison operators may appear.
        let src = include_str!("ct.rs");
        let hardened = src.split("#[cfg(test)]").next().unwrap();
        let forbidden =
            ["if ", "else", "match ", "while ", "loop ", "loop{", "?", "==", "!=", "<=", ">="];
        for (lineno, line) in hardened.lines().enumerate() {
            let code = line.trim_start();
            if code.starts_with("//") || code.starts_with("//!") || code.starts_with("///") {
                continue;
            }
            // Drop trailing comments before scanning.
            let code = code.split("//").next().unwrap();
            for pat in forbidden {
                assert!(
                    !code.contains(pat),
                    "branching construct `{pat}` at ct.rs:{}: {line}",
                    lineno + 1
                );
            }
            // Shifts and return arrows are the only legitimate angle
            // brackets here; anything left over is a comparison.
            let scrubbed = code.replace("<<", "").replace(">>", "").replace("->", "");
            assert!(
                !scrubbed.contains('<') && !scrubbed.contains('>'),
                "comparison operator at ct.rs:{}: {line}",
                lineno + 1
            );
        }
    }
}
