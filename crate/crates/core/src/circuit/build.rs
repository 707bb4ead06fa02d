//! Circuit construction: a small gadget library plus the generators used by
//! the applications and the test suite.
//!
//! All multi-bit words are most-significant-bit-first wire vectors, matching
//! the [`crate::bits`] conventions. The gadgets lean on two algebraic
//! identities to keep the number of non-free (AND/OR) gates low:
//!
//! * a full adder's carry `(a AND b) OR (c AND (a XOR b))` is rewritten with
//!   XOR in place of OR, because the two operands are never both 1;
//! * the same applies to the borrow recurrence of the unsigned comparator.

use rand::Rng;

use super::{Circuit, Gate, WireId};

/// Incremental builder: allocates wires, emits gates in topological order.
pub struct CircuitBuilder {
    input_a_bits: usize,
    input_b_bits: usize,
    next_wire: usize,
    gates: Vec<Gate>,
    const_cache: [Option<WireId>; 2],
}

impl CircuitBuilder {
    pub fn new(input_a_bits: usize, input_b_bits: usize) -> Self {
        CircuitBuilder {
            input_a_bits,
            input_b_bits,
            next_wire: input_a_bits + input_b_bits,
            gates: Vec::new(),
            const_cache: [None, None],
        }
    }

    /// Wires carrying the first party's input bits, MSB first per word.
    pub fn alice_wires(&self) -> Vec<WireId> {
        (0..self.input_a_bits as WireId).collect()
    }

    /// Wires carrying the second party's input bits.
    pub fn bob_wires(&self) -> Vec<WireId> {
        (self.input_a_bits as WireId..(self.input_a_bits + self.input_b_bits) as WireId).collect()
    }

    fn fresh(&mut self) -> WireId {
        let w = self.next_wire as WireId;
        self.next_wire += 1;
        w
    }

    pub fn xor(&mut self, a: WireId, b: WireId) -> WireId {
        let out = self.fresh();
        self.gates.push(Gate::Xor { a, b, out });
        out
    }

    pub fn and(&mut self, a: WireId, b: WireId) -> WireId {
        let out = self.fresh();
        self.gates.push(Gate::And { a, b, out });
        out
    }

    pub fn or(&mut self, a: WireId, b: WireId) -> WireId {
        let out = self.fresh();
        self.gates.push(Gate::Or { a, b, out });
        out
    }

    pub fn not(&mut self, a: WireId) -> WireId {
        let out = self.fresh();
        self.gates.push(Gate::Not { a, out });
        out
    }

    /// Constant wire; one gate per distinct constant, cached.
    pub fn constant(&mut self, value: bool) -> WireId {
        if let Some(w) = self.const_cache[value as usize] {
            return w;
        }
        let out = self.fresh();
        self.gates.push(Gate::Const { value, out });
        self.const_cache[value as usize] = Some(out);
        out
    }

    pub fn xnor(&mut self, a: WireId, b: WireId) -> WireId {
        let x = self.xor(a, b);
        self.not(x)
    }

    /// A constant word of `width` bits encoding `value`, MSB first.
    pub fn word_const(&mut self, value: u64, width: usize) -> Vec<WireId> {
        (0..width)
            .map(|i| {
                let bit = (value >> (width - 1 - i)) & 1 == 1;
                self.constant(bit)
            })
            .collect()
    }

    /// `sel ? t : f` — one AND, two XOR.
    pub fn mux_bit(&mut self, sel: WireId, t: WireId, f: WireId) -> WireId {
        let d = self.xor(t, f);
        let g = self.and(sel, d);
        self.xor(g, f)
    }

    /// Bitwise word mux, `sel ? t : f`.
    pub fn mux_word(&mut self, sel: WireId, t: &[WireId], f: &[WireId]) -> Vec<WireId> {
        assert_eq!(t.len(), f.len(), "mux over mismatched word widths");
        t.iter().zip(f).map(|(&ti, &fi)| self.mux_bit(sel, ti, fi)).collect()
    }

    /// Ripple-carry addition modulo 2^width (the carry out is dropped);
    /// callers must pick widths that cannot overflow.
    pub fn add_word(&mut self, a: &[WireId], b: &[WireId]) -> Vec<WireId> {
        assert_eq!(a.len(), b.len(), "adder over mismatched word widths");
        let width = a.len();
        let mut carry: Option<WireId> = None;
        let mut out = vec![0; width];
        for i in (0..width).rev() {
            let axb = self.xor(a[i], b[i]);
            match carry {
                None => {
                    out[i] = axb;
                    carry = Some(self.and(a[i], b[i]));
                }
                Some(c) => {
                    out[i] = self.xor(axb, c);
                    let g = self.and(a[i], b[i]);
                    let p = self.and(axb, c);
                    // g and p are never both 1, so XOR realizes their OR.
                    carry = Some(self.xor(g, p));
                }
            }
        }
        out
    }

    /// Unsigned `a < b` via the subtraction borrow chain.
    pub fn lt_word(&mut self, a: &[WireId], b: &[WireId]) -> WireId {
        assert_eq!(a.len(), b.len(), "comparator over mismatched word widths");
        let mut borrow: Option<WireId> = None;
        for i in (0..a.len()).rev() {
            let na = self.not(a[i]);
            let t1 = self.and(na, b[i]);
            borrow = Some(match borrow {
                None => t1,
                Some(c) => {
                    let x = self.xor(a[i], b[i]);
                    let nx = self.not(x);
                    let t2 = self.and(nx, c);
                    // t1 implies a XOR b, so t1 and t2 are exclusive.
                    self.xor(t1, t2)
                }
            });
        }
        borrow.expect("comparator over empty words")
    }

    /// Unsigned `a > b`.
    pub fn gt_word(&mut self, a: &[WireId], b: &[WireId]) -> WireId {
        self.lt_word(b, a)
    }

    pub fn eq_word(&mut self, a: &[WireId], b: &[WireId]) -> WireId {
        assert_eq!(a.len(), b.len(), "equality over mismatched word widths");
        let bits: Vec<WireId> = a.iter().zip(b).map(|(&ai, &bi)| self.xnor(ai, bi)).collect();
        self.and_tree(&bits)
    }

    /// Balanced AND reduction; empty input yields constant 1.
    pub fn and_tree(&mut self, wires: &[WireId]) -> WireId {
        self.reduce_tree(wires, true)
    }

    /// Balanced OR reduction; empty input yields constant 0.
    pub fn or_tree(&mut self, wires: &[WireId]) -> WireId {
        self.reduce_tree(wires, false)
    }

    fn reduce_tree(&mut self, wires: &[WireId], is_and: bool) -> WireId {
        match wires.len() {
            0 => self.constant(is_and),
            1 => wires[0],
            _ => {
                let mut layer = wires.to_vec();
                while layer.len() > 1 {
                    let mut next = Vec::with_capacity(layer.len().div_ceil(2));
                    for pair in layer.chunks(2) {
                        next.push(match pair {
                            [x, y] => {
                                if is_and {
                                    self.and(*x, *y)
                                } else {
                                    self.or(*x, *y)
                                }
                            }
                            [x] => *x,
                            _ => unreachable!(),
                        });
                    }
                    layer = next;
                }
                layer[0]
            }
        }
    }

    /// One-hot decode of `sel` (MSB first) for indices `0..count`.
    /// Indices >= count simply produce an all-zero vector.
    pub fn one_hot(&mut self, sel: &[WireId], count: usize) -> Vec<WireId> {
        let negs: Vec<WireId> = sel.iter().map(|&w| self.not(w)).collect();
        (0..count)
            .map(|i| {
                let lits: Vec<WireId> = sel
                    .iter()
                    .enumerate()
                    .map(|(j, &w)| {
                        let bit = (i >> (sel.len() - 1 - j)) & 1 == 1;
                        if bit {
                            w
                        } else {
                            negs[j]
                        }
                    })
                    .collect();
                self.and_tree(&lits)
            })
            .collect()
    }

    /// Table lookup over wire-valued rows: `rows[sel]`, all-zero out of range.
    pub fn select_word(&mut self, sel: &[WireId], rows: &[Vec<WireId>]) -> Vec<WireId> {
        let width = rows.first().map_or(0, Vec::len);
        let hot = self.one_hot(sel, rows.len());
        (0..width)
            .map(|bit| {
                let terms: Vec<WireId> = rows
                    .iter()
                    .zip(&hot)
                    .map(|(row, &h)| {
                        assert_eq!(row.len(), width, "ragged select_word rows");
                        self.and(h, row[bit])
                    })
                    .collect();
                self.or_tree(&terms)
            })
            .collect()
    }

    /// Table lookup over constant rows; needs no ANDs at all.
    pub fn select_const(&mut self, sel: &[WireId], table: &[u64], width: usize) -> Vec<WireId> {
        let hot = self.one_hot(sel, table.len());
        (0..width)
            .map(|bit| {
                let terms: Vec<WireId> = table
                    .iter()
                    .zip(&hot)
                    .filter(|(value, _)| (*value >> (width - 1 - bit)) & 1 == 1)
                    .map(|(_, &h)| h)
                    .collect();
                self.or_tree(&terms)
            })
            .collect()
    }

    /// Finalizes the circuit with the given output wires.
    pub fn finish(self, output_wires: Vec<WireId>) -> Circuit {
        Circuit::new(
            self.next_wire,
            self.input_a_bits,
            self.input_b_bits,
            output_wires,
            self.gates,
        )
        .expect("builder produced an invalid circuit")
    }
}

/// Comparator circuit: one output bit, 1 iff the first party's `n_bits`-bit
/// unsigned integer is strictly greater than the second party's. Equal inputs
/// yield 0.
pub fn gen_millionaires(n_bits: usize) -> Circuit {
    assert!(n_bits > 0, "comparator needs at least one bit");
    let mut cb = CircuitBuilder::new(n_bits, n_bits);
    let a = cb.alice_wires();
    let b = cb.bob_wires();
    let gt = cb.gt_word(&a, &b);
    cb.finish(vec![gt])
}

/// Array-lookup circuit: the first party supplies `entry_count` words of
/// `entry_bits` each; the second supplies a `ceil(log2(entry_count))`-bit
/// index; the output is the selected word (all zero if the index is out of
/// range, which callers rule out).
pub fn gen_select(entry_count: usize, entry_bits: usize) -> Circuit {
    assert!(entry_count >= 1 && entry_bits >= 1, "degenerate lookup table");
    let index_bits = index_width(entry_count);
    let mut cb = CircuitBuilder::new(entry_count * entry_bits, index_bits);
    let a = cb.alice_wires();
    let idx = cb.bob_wires();
    let rows: Vec<Vec<WireId>> =
        a.chunks(entry_bits).map(<[WireId]>::to_vec).collect();
    let out = if index_bits == 0 { rows[0].clone() } else { cb.select_word(&idx, &rows) };
    cb.finish(out)
}

/// Bits needed to index `entry_count` items (0 for a single item).
pub fn index_width(entry_count: usize) -> usize {
    assert!(entry_count >= 1);
    usize::BITS as usize - (entry_count - 1).leading_zeros() as usize
}

/// Description of the "restricted region" shortest-path problem solved inside
/// a circuit. Local node ids: `0..boundary_count` are boundary nodes (the
/// region's entrances/exits), the next `interior_count` are interior nodes.
///
/// The first party supplies, per boundary node, the cost of reaching it from
/// the route's start and the cost of reaching the route's end from it, plus
/// the cost of the best route that avoids the region entirely. The second
/// party supplies one weight per region edge. The circuit runs
/// `node_count - 1` rounds of relaxation over the region graph augmented with
/// a virtual source/sink and emits:
///
/// * the best total cost (`cost_bits` wide), and
/// * the region segment of the best route as `boundary_count +
///   interior_count` id slots (`id_bits` each), listed from the region's exit
///   back to its entrance, padded with the all-ones sentinel. A route that
///   avoids the region entirely yields all-sentinel slots.
#[derive(Debug, Clone)]
pub struct RegionPathSpec {
    pub boundary_count: usize,
    pub interior_count: usize,
    /// Undirected region edges over local node ids.
    pub edges: Vec<(usize, usize)>,
    /// Public translation from local node id to the id emitted in the route.
    pub emitted_ids: Vec<u64>,
    /// Width of emitted ids; the all-ones pattern is reserved as sentinel.
    pub id_bits: usize,
    /// Width of all cost words.
    pub cost_bits: usize,
    /// "Unreachable" cost pattern; sums of real costs must stay below it and
    /// `2*inf + max weight` must fit in `cost_bits`.
    pub inf: u64,
    /// Extra first-party input wires appended after the cost words. No gate
    /// reads them; they let a caller keep side data (already known to the
    /// first party) inside the same input encoding.
    pub alice_pad_bits: usize,
}

impl RegionPathSpec {
    pub fn node_count(&self) -> usize {
        self.boundary_count + self.interior_count
    }

    pub fn alice_input_bits(&self) -> usize {
        (2 * self.boundary_count + 1) * self.cost_bits + self.alice_pad_bits
    }

    pub fn bob_input_bits(&self) -> usize {
        self.edges.len() * self.cost_bits
    }

    pub fn segment_slots(&self) -> usize {
        self.node_count()
    }

    fn validate(&self) {
        let n = self.node_count();
        assert!(self.boundary_count >= 1, "region needs at least one boundary node");
        assert_eq!(self.emitted_ids.len(), n, "one emitted id per region node");
        for &(u, v) in &self.edges {
            assert!(u < n && v < n && u != v, "region edge ({u},{v}) out of range");
        }
        let sentinel = (1u64 << self.id_bits) - 1;
        for &id in &self.emitted_ids {
            assert!(id < sentinel, "emitted id {id} collides with the sentinel");
        }
        assert!(self.cost_bits <= 64 && self.inf < (1u64 << (self.cost_bits - 1)));
    }
}

/// Builds the region shortest-path circuit described by `spec`.
///
/// Output layout: `cost_bits` wires of total cost, then `segment_slots()`
/// id slots. See [`RegionPathSpec`].
pub fn gen_dijkstra_sensitive(spec: &RegionPathSpec) -> Circuit {
    spec.validate();
    let n = spec.node_count();
    let cw = spec.cost_bits;
    let mut cb = CircuitBuilder::new(spec.alice_input_bits(), spec.bob_input_bits());
    let a = cb.alice_wires();
    let b = cb.bob_wires();
    let word = |wires: &[WireId], i: usize| wires[i * cw..(i + 1) * cw].to_vec();
    let d_in: Vec<Vec<WireId>> = (0..spec.boundary_count).map(|i| word(&a, i)).collect();
    let d_out: Vec<Vec<WireId>> =
        (0..spec.boundary_count).map(|i| word(&a, spec.boundary_count + i)).collect();
    let direct = word(&a, 2 * spec.boundary_count);
    let weights: Vec<Vec<WireId>> = (0..spec.edges.len()).map(|i| word(&b, i)).collect();

    // Augmented graph: local ids 0..n are region nodes, n is the source S,
    // n+1 the sink T. Directed edge list in a fixed public order.
    let s_id = n;
    let t_id = n + 1;
    let mut edges: Vec<(usize, usize, Vec<WireId>)> = Vec::new();
    for u in 0..spec.boundary_count {
        edges.push((s_id, u, d_in[u].clone()));
        edges.push((u, t_id, d_out[u].clone()));
    }
    edges.push((s_id, t_id, direct));
    for (i, &(u, v)) in spec.edges.iter().enumerate() {
        edges.push((u, v, weights[i].clone()));
        edges.push((v, u, weights[i].clone()));
    }

    let (dist, pred) = relax_rounds(&mut cb, n + 2, s_id, &edges);

    // Predecessor walk from T back to S, emitting region nodes exit-first.
    let pred_bits = index_width(n + 1); // walk values range over 0..n plus S
    let sentinel = (1u64 << spec.id_bits) - 1;
    let mut id_table = spec.emitted_ids.clone();
    id_table.push(sentinel); // row for S; never emitted but keeps lookups total
    let pred_table: Vec<Vec<WireId>> = (0..=n).map(|v| pred[v].clone()).collect();
    let s_const = cb.word_const(s_id as u64, pred_bits);
    let sentinel_word = cb.word_const(sentinel, spec.id_bits);

    let mut outputs = dist[t_id].clone();
    let mut cur = pred[t_id].clone();
    let mut done = cb.constant(false);
    for _ in 0..spec.segment_slots() {
        let at_s = cb.eq_word(&cur, &s_const);
        done = cb.or(done, at_s);
        let emitted = cb.select_const(&cur, &id_table, spec.id_bits);
        let slot = cb.mux_word(done, &sentinel_word, &emitted);
        outputs.extend_from_slice(&slot);
        let stepped = cb.select_word(&cur, &pred_table);
        cur = cb.mux_word(done, &cur, &stepped);
    }
    cb.finish(outputs)
}

/// Description of a whole-graph shortest-path circuit: the first party inputs
/// the start and end node ids, the second party all edge weights. Used by the
/// monolithic garbled-circuit mode.
#[derive(Debug, Clone)]
pub struct FullGraphSpec {
    pub node_count: usize,
    /// Undirected edges over node ids `0..node_count`.
    pub edges: Vec<(usize, usize)>,
    pub id_bits: usize,
    pub cost_bits: usize,
    pub inf: u64,
}

impl FullGraphSpec {
    pub fn alice_input_bits(&self) -> usize {
        2 * self.id_bits
    }

    pub fn bob_input_bits(&self) -> usize {
        self.edges.len() * self.cost_bits
    }

    pub fn route_slots(&self) -> usize {
        self.node_count
    }

    fn validate(&self) {
        assert!(self.node_count >= 2);
        assert!(self.node_count as u64 <= (1 << self.id_bits) - 1, "ids collide with sentinel");
        for &(u, v) in &self.edges {
            assert!(u < self.node_count && v < self.node_count && u != v);
        }
        assert!(self.cost_bits <= 64 && self.inf < (1u64 << (self.cost_bits - 1)));
    }
}

/// Builds the whole-graph shortest-path circuit: output is the total cost
/// followed by `node_count` route id slots listed from the end node back to
/// the start node, sentinel-padded. An unreachable end yields cost >= `inf`
/// and an all-sentinel route.
pub fn gen_dijkstra_full(spec: &FullGraphSpec) -> Circuit {
    spec.validate();
    let n = spec.node_count;
    let cw = spec.cost_bits;
    let mut cb = CircuitBuilder::new(spec.alice_input_bits(), spec.bob_input_bits());
    let a = cb.alice_wires();
    let b = cb.bob_wires();
    let start = a[..spec.id_bits].to_vec();
    let end = a[spec.id_bits..].to_vec();
    let weights: Vec<Vec<WireId>> =
        (0..spec.edges.len()).map(|i| b[i * cw..(i + 1) * cw].to_vec()).collect();

    // dist[v] starts at 0 where v == start, inf elsewhere; pred[v] = v.
    let pred_bits = index_width(n);
    let zero = cb.word_const(0, cw);
    let inf = cb.word_const(spec.inf, cw);
    let mut dist = Vec::with_capacity(n);
    let mut pred = Vec::with_capacity(n);
    for v in 0..n {
        let v_id = cb.word_const(v as u64, spec.id_bits);
        let is_start = cb.eq_word(&start, &v_id);
        dist.push(cb.mux_word(is_start, &zero, &inf));
        pred.push(cb.word_const(v as u64, pred_bits));
    }
    let mut edges: Vec<(usize, usize, Vec<WireId>)> = Vec::new();
    for (i, &(u, v)) in spec.edges.iter().enumerate() {
        edges.push((u, v, weights[i].clone()));
        edges.push((v, u, weights[i].clone()));
    }
    relax_rounds_inplace(&mut cb, n, &edges, &mut dist, &mut pred);

    // Total cost = dist[end]; route walk from end until the start node.
    let mut outputs = cb.select_word(&end, &dist);
    let sentinel = (1u64 << spec.id_bits) - 1;
    let sentinel_word = cb.word_const(sentinel, spec.id_bits);
    let id_table: Vec<u64> = (0..n as u64).collect();
    let mut cur = end.clone();
    let mut done = cb.constant(false);
    let zero_bit = cb.constant(false);
    for _ in 0..spec.route_slots() {
        let emitted = cb.select_const(&cur, &id_table, spec.id_bits);
        let slot = cb.mux_word(done, &sentinel_word, &emitted);
        outputs.extend_from_slice(&slot);
        let at_start = cb.eq_word(&cur, &start);
        done = cb.or(done, at_start);
        // Predecessor words are index_width(n) wide; the walk state keeps the
        // (possibly wider) id width, so zero-extend from the high end.
        let narrow = cb.select_word(&cur, &pred);
        let mut stepped = vec![zero_bit; spec.id_bits - pred_bits.min(spec.id_bits)];
        stepped.extend_from_slice(&narrow[narrow.len().saturating_sub(spec.id_bits)..]);
        cur = cb.mux_word(done, &cur, &stepped);
    }
    cb.finish(outputs)
}

/// Initializes dist/pred for a graph with a distinguished source and runs the
/// relaxation rounds. Local convention: `pred` words are `index_width(V - 1)`
/// wide where V includes the source (the sink never appears as predecessor).
fn relax_rounds(
    cb: &mut CircuitBuilder,
    node_count: usize,
    source: usize,
    edges: &[(usize, usize, Vec<WireId>)],
) -> (Vec<Vec<WireId>>, Vec<Vec<WireId>>) {
    let cw = edges.first().map_or(0, |e| e.2.len());
    let inf_value = (1u64 << (cw - 1)) - 1; // local bound, callers compare against their inf
    let pred_bits = index_width(node_count - 1);
    let mut dist = Vec::with_capacity(node_count);
    let mut pred = Vec::with_capacity(node_count);
    for v in 0..node_count {
        let d = if v == source { cb.word_const(0, cw) } else { cb.word_const(inf_value, cw) };
        dist.push(d);
        pred.push(cb.word_const(source as u64, pred_bits));
    }
    relax_rounds_inplace(cb, node_count, edges, &mut dist, &mut pred);
    (dist, pred)
}

/// `node_count - 1` rounds of in-place relaxation over a fixed edge order.
/// Updates use strict improvement only, so predecessor chains are acyclic for
/// positive-weight graphs once the rounds complete.
fn relax_rounds_inplace(
    cb: &mut CircuitBuilder,
    node_count: usize,
    edges: &[(usize, usize, Vec<WireId>)],
    dist: &mut [Vec<WireId>],
    pred: &mut [Vec<WireId>],
) {
    let pred_bits = pred.first().map_or(0, Vec::len);
    for _ in 0..node_count.saturating_sub(1) {
        for (u, v, w) in edges {
            let cand = cb.add_word(&dist[*u], w);
            let better = cb.lt_word(&cand, &dist[*v]);
            dist[*v] = cb.mux_word(better, &cand, &dist[*v]);
            let u_const = cb.word_const(*u as u64, pred_bits);
            pred[*v] = cb.mux_word(better, &u_const, &pred[*v]);
        }
    }
}

/// Generates a random, valid circuit for fuzzing: `gate_count` gates over the
/// given input widths, wired to previously defined wires, with roughly one
/// output per eight gates (at least one).
pub fn gen_random_circuit<R: Rng>(
    rng: &mut R,
    gate_count: usize,
    input_a_bits: usize,
    input_b_bits: usize,
) -> Circuit {
    assert!(input_a_bits + input_b_bits > 0 || gate_count > 0);
    let inputs = input_a_bits + input_b_bits;
    let mut gates = Vec::with_capacity(gate_count);
    let mut defined: Vec<WireId> = (0..inputs as WireId).collect();
    let mut next = inputs;
    for _ in 0..gate_count {
        let out = next as WireId;
        next += 1;
        let pick = |rng: &mut R, defined: &[WireId]| defined[rng.gen_range(0..defined.len())];
        let gate = if defined.is_empty() {
            Gate::Const { value: rng.gen(), out }
        } else {
            match rng.gen_range(0..10) {
                0..=2 => Gate::Xor { a: pick(rng, &defined), b: pick(rng, &defined), out },
                3..=5 => Gate::And { a: pick(rng, &defined), b: pick(rng, &defined), out },
                6..=7 => Gate::Or { a: pick(rng, &defined), b: pick(rng, &defined), out },
                8 => Gate::Not { a: pick(rng, &defined), out },
                _ => Gate::Const { value: rng.gen(), out },
            }
        };
        gates.push(gate);
        defined.push(out);
    }
    let output_count = (gate_count / 8).max(1);
    let output_wires: Vec<WireId> =
        (0..output_count).map(|_| defined[rng.gen_range(0..defined.len())]).collect();
    Circuit::new(next, input_a_bits, input_b_bits, output_wires, gates)
        .expect("random circuit generator broke topology")
}
