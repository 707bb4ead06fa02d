//! The comparison game: each party holds a large unsigned integer and the
//! first party learns whose is larger — nothing else.
//!
//! The oracle modes run a one-round scheme whose round function compares
//! the two big-endian byte strings; the hardened flavor does so with a
//! fixed access pattern (no operand-dependent branches or early exit).
//! The circuit mode garbles a bitwise comparator. No oracle/circuit split
//! is defined for this game, so [`Mode::Hybrid`] is rejected.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{oracle, AppError, AppJob, JobPlan, Mode};
use crate::bits::bits_to_u64;
use crate::circuit::build::gen_millionaires;
use crate::circuit::Circuit;
use crate::oram::ct;
use crate::partition::{make_identity, PartitionScheme, PlainFn};
use crate::protocol::{derive_seed, LocalRun};

/// One comparison instance: both parties' numbers as equal-width
/// big-endian bit strings.
#[derive(Clone, Debug)]
pub struct Millionaires {
    a_bits: Vec<bool>,
    b_bits: Vec<bool>,
}

/// Outcome of one protocol run of the comparison.
pub struct MillionairesRun {
    /// True when the first party's number is strictly larger.
    pub alice_larger: bool,
    /// The raw protocol run (outputs plus full transcript).
    pub run: LocalRun,
    /// Encrypted garbled rows shipped by the run (0 for oracle modes).
    pub rows: usize,
}

impl Millionaires {
    /// Draws two uniform `n_bits`-wide numbers from the seed.
    pub fn random(n_bits: usize, seed: u64) -> Result<Millionaires, AppError> {
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, 40));
        let mut draw = |n| (0..n).map(|_| rng.gen()).collect::<Vec<bool>>();
        Millionaires::with_inputs(draw(n_bits), draw(n_bits))
    }

    /// Wraps explicit inputs; both must be non-empty and equally wide.
    pub fn with_inputs(a_bits: Vec<bool>, b_bits: Vec<bool>) -> Result<Millionaires, AppError> {
        if a_bits.is_empty() || a_bits.len() != b_bits.len() {
            return Err(AppError::InvalidConfig(
                "comparison needs two equal, non-empty widths".into(),
            ));
        }
        Ok(Millionaires { a_bits, b_bits })
    }

    pub fn n_bits(&self) -> usize {
        self.a_bits.len()
    }

    pub fn inputs(&self) -> (&[bool], &[bool]) {
        (&self.a_bits, &self.b_bits)
    }

    /// Plain reference verdict.
    pub fn expected(&self) -> bool {
        oracle::bigint_greater(&self.a_bits, &self.b_bits)
    }

    /// The one-round oracle scheme. `hardened` picks the fixed-access
    /// comparison; oracle rounds require byte-aligned inputs.
    pub fn scheme(&self, hardened: bool) -> Result<Arc<PartitionScheme>, AppError> {
        if self.n_bits() % 8 != 0 {
            return Err(AppError::InvalidConfig(
                "oracle modes need byte-aligned widths".into(),
            ));
        }
        let f: PlainFn = if hardened {
            Arc::new(|a, b| (vec![greater_fixed_access(a, b) as u8], Vec::new()))
        } else {
            Arc::new(|a, b| (vec![(a > b) as u8], Vec::new()))
        };
        let name = if hardened { "compare-balanced" } else { "compare-direct" };
        Ok(Arc::new(make_identity(name, f, false)))
    }

    /// The bitwise comparator circuit.
    pub fn circuit(&self) -> Circuit {
        gen_millionaires(self.n_bits())
    }

    /// Prepares the runnable job for `mode`.
    pub fn job(&self, mode: Mode) -> Result<AppJob, AppError> {
        let plan = match mode {
            Mode::Naive | Mode::Sgx => {
                JobPlan::Scheme { scheme: self.scheme(mode == Mode::Sgx)? }
            }
            Mode::Hybrid => {
                return Err(AppError::Unsupported(
                    "no oracle/circuit split is defined for the comparison game".into(),
                ));
            }
            Mode::Gc => JobPlan::Circuit { circuit: Arc::new(self.circuit()), dual: false },
        };
        let rows = plan.rows();
        Ok(AppJob { plan, input_a: self.a_bits.clone(), input_b: self.b_bits.clone(), rows })
    }

    /// Decodes the verdict out of a finished run: one byte from the oracle
    /// modes, one bit from the circuit mode.
    pub fn verdict(&self, run: &LocalRun) -> Result<bool, AppError> {
        match run.y0.len() {
            1 => Ok(run.y0[0]),
            8 => match bits_to_u64(&run.y0) {
                v @ (0 | 1) => Ok(v == 1),
                _ => Err(AppError::BadOutput("verdict byte must be 0 or 1".into())),
            },
            _ => Err(AppError::BadOutput("verdict must be one bit or one byte".into())),
        }
    }

    /// Runs the comparison under `mode` and decodes the verdict.
    pub fn run(&self, mode: Mode, k_bits: usize, seed: u64) -> Result<MillionairesRun, AppError> {
        let job = self.job(mode)?;
        let (run, _oracle) = job.run_local(k_bits, seed)?;
        let alice_larger = self.verdict(&run)?;
        Ok(MillionairesRun { alice_larger, run, rows: job.rows })
    }
}

/// Byte-string `a > b` with a fixed access pattern: every byte is visited
/// exactly once and no branch depends on the operands.
fn greater_fixed_access(a: &[u8], b: &[u8]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut gt = 0u64;
    let mut still_eq = 1u64;
    for (&x, &y) in a.iter().zip(b) {
        gt |= still_eq & ct::bf_lt(y as u64, x as u64);
        still_eq &= ct::bf_eq(x as u64, y as u64);
    }
    gt == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::u64_to_bits;

    #[test]
    fn fixed_access_compare_matches_operator_exhaustively() {
        for a in 0u64..256 {
            for b in 0u64..256 {
                let got = greater_fixed_access(&[a as u8], &[b as u8]);
                assert_eq!(got, a > b, "a={a} b={b}");
            }
        }
        // Multi-byte cases where the deciding byte is not the first.
        for (a, b) in [(0x0102u16, 0x0101u16), (0x0101, 0x0102), (0xFF00, 0xFF00)] {
            let got = greater_fixed_access(&a.to_be_bytes(), &b.to_be_bytes());
            assert_eq!(got, a > b, "a={a:#x} b={b:#x}");
        }
    }

    #[test]
    fn all_defined_modes_agree_with_the_reference() {
        for seed in 0..4 {
            let m = Millionaires::random(64, seed).unwrap();
            let want = m.expected();
            for mode in [Mode::Naive, Mode::Sgx, Mode::Gc] {
                let got = m.run(mode, 80, seed * 31 + 7).unwrap();
                assert_eq!(got.alice_larger, want, "seed {seed} mode {mode}");
            }
        }
    }

    #[test]
    fn top_bit_set_beats_zero_at_kilobit_width() {
        let mut a = vec![false; 1024];
        a[0] = true; // 2^1023
        let b = vec![false; 1024];
        let m = Millionaires::with_inputs(a, b).unwrap();
        assert!(m.expected());
        let run = m.run(Mode::Sgx, 80, 9).unwrap();
        assert!(run.alice_larger);
    }

    #[test]
    fn exact_tie_is_not_a_win() {
        let bits = u64_to_bits(0xDEAD_BEEF_0000_FFFF, 64);
        let m = Millionaires::with_inputs(bits.clone(), bits).unwrap();
        assert!(!m.expected());
        assert!(!m.run(Mode::Sgx, 80, 3).unwrap().alice_larger);
        assert!(!m.run(Mode::Gc, 80, 3).unwrap().alice_larger);
    }

    #[test]
    fn hybrid_mode_is_rejected() {
        let m = Millionaires::random(64, 1).unwrap();
        match m.run(Mode::Hybrid, 80, 1) {
            Err(AppError::Unsupported(_)) => {}
            other => panic!("expected an unsupported-mode error, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn oracle_modes_reject_ragged_widths() {
        let m = Millionaires::random(12, 5).unwrap();
        assert!(matches!(m.run(Mode::Sgx, 80, 1), Err(AppError::InvalidConfig(_))));
        // The circuit mode has no alignment requirement.
        assert!(m.run(Mode::Gc, 80, 1).is_ok());
    }
}
