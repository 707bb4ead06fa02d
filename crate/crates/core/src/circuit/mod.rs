//! Boolean circuits over XOR/AND/OR/NOT/CONST with two input bundles.
//!
//! A [`Circuit`] is a straight-line program over single-bit wires. Wires
//! `0..input_a_bits` carry the first party's input, the next `input_b_bits`
//! wires carry the second party's, and every remaining wire must be defined by
//! exactly one gate before it is read. Gates are stored in topological order;
//! [`Circuit::validate`] rejects anything else, so downstream consumers
//! (plain evaluation and garbling) can run a single forward pass.
//!
//! The text format is line-based, `#` starts a comment:
//!
//! ```text
//! wires 7 inA 2 inB 2 out 6
//! XOR 0 2 4
//! AND 1 3 5
//! OR 4 5 6
//! ```
//!
//! `CONST` lines carry the constant bit in place of an input wire
//! (`CONST 1 9` drives wire 9 high).

pub mod build;

use std::fmt;

use thiserror::Error;

/// Index of a single-bit wire within a [`Circuit`]. Kept at 32 bits so the
/// multi-million-gate circuits of the routing benchmarks stay compact in RAM.
pub type WireId = u32;

/// One gate of a circuit. `Not` and `Const` are kept as first-class gates:
/// the garbler lowers them to zero-row constructions instead of emitting
/// encrypted rows for them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Xor { a: WireId, b: WireId, out: WireId },
    And { a: WireId, b: WireId, out: WireId },
    Or { a: WireId, b: WireId, out: WireId },
    Not { a: WireId, out: WireId },
    Const { value: bool, out: WireId },
}

impl Gate {
    /// The wire this gate defines.
    pub fn out(&self) -> WireId {
        match *self {
            Gate::Xor { out, .. }
            | Gate::And { out, .. }
            | Gate::Or { out, .. }
            | Gate::Not { out, .. }
            | Gate::Const { out, .. } => out,
        }
    }

    /// Input wires read by this gate (empty for `Const`).
    pub fn inputs(&self) -> Vec<WireId> {
        match *self {
            Gate::Xor { a, b, .. } | Gate::And { a, b, .. } | Gate::Or { a, b, .. } => {
                vec![a, b]
            }
            Gate::Not { a, .. } => vec![a],
            Gate::Const { .. } => vec![],
        }
    }

    fn mnemonic(&self) -> &'static str {
        match self {
            Gate::Xor { .. } => "XOR",
            Gate::And { .. } => "AND",
            Gate::Or { .. } => "OR",
            Gate::Not { .. } => "NOT",
            Gate::Const { .. } => "CONST",
        }
    }
}

/// A validated straight-line boolean circuit with two input bundles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    /// Total number of wires, including unused ids (the header's `wires`).
    pub wire_count: usize,
    /// Number of leading wires carrying the first party's input.
    pub input_a_bits: usize,
    /// Number of wires carrying the second party's input, following the first.
    pub input_b_bits: usize,
    /// Wires whose final values form the circuit output, in output order.
    pub output_wires: Vec<WireId>,
    /// Gates in topological order.
    pub gates: Vec<Gate>,
}

/// Errors produced by parsing, validating, or evaluating a circuit.
#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid circuit: {0}")]
    Invalid(String),
    #[error("evaluation error: {0}")]
    Eval(String),
}

impl Circuit {
    /// Builds and validates a circuit in one step.
    pub fn new(
        wire_count: usize,
        input_a_bits: usize,
        input_b_bits: usize,
        output_wires: Vec<WireId>,
        gates: Vec<Gate>,
    ) -> Result<Self, CircuitError> {
        let c = Circuit { wire_count, input_a_bits, input_b_bits, output_wires, gates };
        c.validate()?;
        Ok(c)
    }

    /// Number of input wires (first party's followed by second party's).
    pub fn input_bits(&self) -> usize {
        self.input_a_bits + self.input_b_bits
    }

    /// Gates that the garbler must emit encrypted rows for.
    pub fn nonfree_gate_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::And { .. } | Gate::Or { .. }))
            .count()
    }

    /// Checks the structural invariants:
    ///
    /// * every referenced wire id is `< wire_count`;
    /// * gate inputs are defined before use (input wires or earlier gates);
    /// * every gate defines a fresh wire (no redefinition, no input wires);
    /// * every output wire is defined by the end of the circuit.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let inputs = self.input_bits();
        if inputs > self.wire_count {
            return Err(CircuitError::Invalid(format!(
                "{} input wires exceed wire count {}",
                inputs, self.wire_count
            )));
        }
        let mut defined = vec![false; self.wire_count];
        for slot in defined.iter_mut().take(inputs) {
            *slot = true;
        }
        for (i, gate) in self.gates.iter().enumerate() {
            for w in gate.inputs() {
                if w as usize >= self.wire_count {
                    return Err(CircuitError::Invalid(format!(
                        "gate {i} ({}) reads wire {w} >= wire count {}",
                        gate.mnemonic(),
                        self.wire_count
                    )));
                }
                if !defined[w as usize] {
                    return Err(CircuitError::Invalid(format!(
                        "gate {i} ({}) reads wire {w} before it is defined",
                        gate.mnemonic()
                    )));
                }
            }
            let out = gate.out();
            if out as usize >= self.wire_count {
                return Err(CircuitError::Invalid(format!(
                    "gate {i} ({}) writes wire {out} >= wire count {}",
                    gate.mnemonic(),
                    self.wire_count
                )));
            }
            if defined[out as usize] {
                return Err(CircuitError::Invalid(format!(
                    "gate {i} ({}) redefines wire {out}",
                    gate.mnemonic()
                )));
            }
            defined[out as usize] = true;
        }
        for &w in &self.output_wires {
            if w as usize >= self.wire_count {
                return Err(CircuitError::Invalid(format!(
                    "output wire {w} >= wire count {}",
                    self.wire_count
                )));
            }
            if !defined[w as usize] {
                return Err(CircuitError::Invalid(format!("output wire {w} is never defined")));
            }
        }
        Ok(())
    }

    /// Evaluates the circuit in the clear. `a` and `b` must match the declared
    /// input widths; the result follows `output_wires` order.
    pub fn eval_plain(&self, a: &[bool], b: &[bool]) -> Result<Vec<bool>, CircuitError> {
        if a.len() != self.input_a_bits || b.len() != self.input_b_bits {
            return Err(CircuitError::Eval(format!(
                "input widths ({}, {}) do not match declared ({}, {})",
                a.len(),
                b.len(),
                self.input_a_bits,
                self.input_b_bits
            )));
        }
        let mut values: Vec<Option<bool>> = vec![None; self.wire_count];
        for (i, &bit) in a.iter().enumerate() {
            values[i] = Some(bit);
        }
        for (i, &bit) in b.iter().enumerate() {
            values[self.input_a_bits + i] = Some(bit);
        }
        let read = |values: &[Option<bool>], w: WireId| -> Result<bool, CircuitError> {
            values[w as usize]
                .ok_or_else(|| CircuitError::Eval(format!("wire {w} read while undefined")))
        };
        for gate in &self.gates {
            let out = match *gate {
                Gate::Xor { a, b, .. } => read(&values, a)? ^ read(&values, b)?,
                Gate::And { a, b, .. } => read(&values, a)? & read(&values, b)?,
                Gate::Or { a, b, .. } => read(&values, a)? | read(&values, b)?,
                Gate::Not { a, .. } => !read(&values, a)?,
                Gate::Const { value, .. } => value,
            };
            debug_assert!(
                values[gate.out() as usize].is_none(),
                "validated circuit redefines a wire"
            );
            values[gate.out() as usize] = Some(out);
        }
        self.output_wires.iter().map(|&w| read(&values, w)).collect()
    }

    /// Renders the circuit in the line-based text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let outs: Vec<String> = self.output_wires.iter().map(|w| w.to_string()).collect();
        s.push_str(&format!(
            "wires {} inA {} inB {} out {}\n",
            self.wire_count,
            self.input_a_bits,
            self.input_b_bits,
            outs.join(",")
        ));
        for gate in &self.gates {
            let line = match *gate {
                Gate::Xor { a, b, out } => format!("XOR {a} {b} {out}"),
                Gate::And { a, b, out } => format!("AND {a} {b} {out}"),
                Gate::Or { a, b, out } => format!("OR {a} {b} {out}"),
                Gate::Not { a, out } => format!("NOT {a} {out}"),
                Gate::Const { value, out } => format!("CONST {} {out}", value as u8),
            };
            s.push_str(&line);
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "circuit({} wires, {}+{} inputs, {} outputs, {} gates, {} nonfree)",
            self.wire_count,
            self.input_a_bits,
            self.input_b_bits,
            self.output_wires.len(),
            self.gates.len(),
            self.nonfree_gate_count()
        )
    }
}

/// Parses the text format and validates the result. Errors carry the
/// 1-indexed source line of the first problem.
pub fn parse_circuit(src: &str) -> Result<Circuit, CircuitError> {
    let mut header: Option<(usize, usize, usize, Vec<WireId>)> = None;
    let mut gates = Vec::new();
    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| CircuitError::Parse { line: line_no, msg };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if header.is_none() {
            // Header: wires <N> inA <l> inB <r> out <w1,w2,...>
            if tokens.len() != 8
                || tokens[0] != "wires"
                || tokens[2] != "inA"
                || tokens[4] != "inB"
                || tokens[6] != "out"
            {
                return Err(err(format!(
                    "expected header `wires <N> inA <l> inB <r> out <w1,...>`, got `{line}`"
                )));
            }
            let num = |s: &str, what: &str| {
                s.parse::<usize>().map_err(|_| err(format!("bad {what} `{s}`")))
            };
            let wires = num(tokens[1], "wire count")?;
            let a = num(tokens[3], "inA count")?;
            let b = num(tokens[5], "inB count")?;
            let outs = tokens[7]
                .split(',')
                .map(|s| {
                    let s = s.trim();
                    s.parse::<WireId>().map_err(|_| err(format!("bad output wire `{s}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if outs.is_empty() {
                return Err(err("empty output list".into()));
            }
            header = Some((wires, a, b, outs));
            continue;
        }
        let wire = |s: &str| s.parse::<WireId>().map_err(|_| err(format!("bad wire id `{s}`")));
        let gate = match tokens[0] {
            "XOR" | "AND" | "OR" => {
                if tokens.len() != 4 {
                    return Err(err(format!("{} expects 3 wire ids", tokens[0])));
                }
                let (a, b, out) = (wire(tokens[1])?, wire(tokens[2])?, wire(tokens[3])?);
                match tokens[0] {
                    "XOR" => Gate::Xor { a, b, out },
                    "AND" => Gate::And { a, b, out },
                    _ => Gate::Or { a, b, out },
                }
            }
            "NOT" => {
                if tokens.len() != 3 {
                    return Err(err("NOT expects 2 wire ids".into()));
                }
                Gate::Not { a: wire(tokens[1])?, out: wire(tokens[2])? }
            }
            "CONST" => {
                if tokens.len() != 3 {
                    return Err(err("CONST expects a bit and a wire id".into()));
                }
                let value = match tokens[1] {
                    "0" => false,
                    "1" => true,
                    other => return Err(err(format!("CONST bit must be 0 or 1, got `{other}`"))),
                };
                Gate::Const { value, out: wire(tokens[2])? }
            }
            other => return Err(err(format!("unknown gate kind `{other}`"))),
        };
        gates.push(gate);
    }
    let (wire_count, input_a_bits, input_b_bits, output_wires) = header.ok_or(
        CircuitError::Parse { line: src.lines().count().max(1), msg: "missing header".into() },
    )?;
    Circuit::new(wire_count, input_a_bits, input_b_bits, output_wires, gates)
}
