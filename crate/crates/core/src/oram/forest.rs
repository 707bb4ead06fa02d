//! Two-tree oblivious key-value store.
//!
//! `n` keys (array indices `0..n`) are split between two unbalanced binary
//! search trees living in one physical slot arena. Every operation performs
//! the same externally visible ritual regardless of its key:
//!
//! 1. descend *both* trees with the real key, all the way to a leaf (the key
//!    lives in exactly one tree; the other walk is an equally shaped miss);
//! 2. descend both trees ⌈log₂ n⌉ more times with fresh uniform dummy keys;
//! 3. remove every node on the two real root-to-leaf paths, move their
//!    payloads to a contiguous scratch buffer, and shuffle the buffer with a
//!    fixed O(m²) compare-exchange network built from the branch-free
//!    primitives (scratch is not slot memory, so the shuffle leaves no slot
//!    trace);
//! 4. re-insert each payload into a tree chosen by a fresh coin, at a slot
//!    drawn uniformly from the free pool — keys migrate between trees and
//!    change physical addresses on every touch;
//! 5. pad the operation's slot trace with reads of uniformly random slots up
//!    to a budget computed from `n` alone.
//!
//! The padding budget is the sum of the phase worst cases under the height
//! cap `H(n) = 6·⌈log₂(n+1)⌉ + 2`. Random insertion order keeps expected
//! depths logarithmic; a walk longer than the cap would mean the trees have
//! degenerated far beyond the tail of the random-shape distribution, and the
//! store treats that as a fatal internal error (panic) rather than silently
//! emitting a key-dependent trace length.

use super::ct;
use super::trace::AccessTrace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

const NIL: u32 = u32::MAX;

/// Errors from store operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum OramError {
    /// The key does not fit in the store's fixed key range.
    #[error("key {key} out of range for capacity {capacity}")]
    KeyRange { key: u64, capacity: usize },
}

#[derive(Clone, Copy, Debug)]
struct Node {
    key: u64,
    value: u64,
    /// This node's own physical slot id (mirror of its arena index).
    slot: u32,
    left: u32,
    right: u32,
}

struct Descent {
    /// `(slot, key)` of every node visited, root first.
    path: Vec<(u32, u64)>,
    found: Option<u64>,
}

fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Maximum tolerated root-to-leaf walk length for a store of `n` keys.
pub fn height_cap(n: usize) -> usize {
    6 * ceil_log2(n + 1) + 2
}

/// Exact number of slot touches every operation on a store of `n` keys
/// produces: descents, removals, re-insertions, and slack, each bounded by
/// the height cap.
pub fn trace_budget(n: usize) -> usize {
    let h = height_cap(n);
    let d = 1 + ceil_log2(n);
    2 * d * h + 2 * h * (2 * h + 6) + 2 * h * (h + 2) + 16
}

/// The two-tree store.
pub struct OramForest {
    slab: Vec<Node>,
    free: Vec<u32>,
    roots: [u32; 2],
    sizes: [usize; 2],
    capacity: usize,
    height_cap: usize,
    dummy_queries: usize,
    budget: usize,
    op_events: usize,
    rng: ChaCha20Rng,
    trace: AccessTrace,
}

impl OramForest {
    /// A store of `capacity` keys, all holding value 0.
    pub fn new(capacity: usize, seed: u64) -> OramForest {
        OramForest::with_values(&vec![0; capacity], seed)
    }

    /// A store pre-loaded with `values[k]` under key `k`.
    pub fn with_values(values: &[u64], seed: u64) -> OramForest {
        let capacity = values.len();
        assert!(capacity > 0, "store needs at least one key");
        assert!(capacity < NIL as usize, "capacity exceeds slot id space");
        let mut forest = OramForest {
            slab: (0..capacity as u32)
                .map(|slot| Node { key: 0, value: 0, slot, left: NIL, right: NIL })
                .collect(),
            free: (0..capacity as u32).collect(),
            roots: [NIL; 2],
            sizes: [0; 2],
            capacity,
            height_cap: height_cap(capacity),
            dummy_queries: ceil_log2(capacity),
            budget: trace_budget(capacity),
            op_events: 0,
            rng: ChaCha20Rng::seed_from_u64(seed),
            trace: AccessTrace::new(),
        };
        // Random insertion order and random tree choice give both trees
        // random shapes; construction is not part of any operation's trace.
        forest.trace.set_enabled(false);
        let mut order: Vec<u64> = (0..capacity as u64).collect();
        for i in (1..capacity).rev() {
            let j = forest.rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for &key in &order {
            let tree = (forest.rng.gen::<u32>() & 1) as usize;
            forest.insert(tree, key, values[key as usize]);
        }
        forest.trace.set_enabled(true);
        forest.op_events = 0;
        forest
    }

    /// Number of keys.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// The per-operation slot-touch count this store maintains.
    pub fn op_budget(&self) -> usize {
        self.budget
    }

    /// The recorded access trace.
    pub fn trace(&self) -> &AccessTrace {
        &self.trace
    }

    /// Enables or disables trace recording (the access ritual itself always
    /// runs; only bookkeeping is skipped).
    pub fn set_recording(&mut self, on: bool) {
        self.trace.set_enabled(on);
    }

    /// Reads the value under `key`.
    pub fn get(&mut self, key: u64) -> Result<u64, OramError> {
        self.op(key, None)
    }

    /// Replaces the value under `key`.
    pub fn put(&mut self, key: u64, value: u64) -> Result<(), OramError> {
        self.op(key, Some(value)).map(|_| ())
    }

    fn op(&mut self, key: u64, put: Option<u64>) -> Result<u64, OramError> {
        if key >= self.capacity as u64 {
            return Err(OramError::KeyRange { key, capacity: self.capacity });
        }
        self.trace.begin_op();
        self.op_events = 0;

        // Phase 1: real descents in both trees.
        let d0 = self.descend(0, key);
        let d1 = self.descend(1, key);
        debug_assert!(
            d0.found.is_some() != d1.found.is_some(),
            "key must live in exactly one tree"
        );
        let value = d0.found.or(d1.found).unwrap_or(0);

        // Phase 2: dummy descents toward uniform keys.
        for tree in 0..2 {
            for _ in 0..self.dummy_queries {
                let dummy = self.rng.gen_range(0..self.capacity as u64);
                self.descend(tree, dummy);
            }
        }

        // Phase 3: remove both real paths (deepest key first) into scratch.
        let mut buffer: Vec<[u64; ct::MIX_FIELDS]> =
            Vec::with_capacity(d0.path.len() + d1.path.len());
        for (tree, descent) in [(0, &d0), (1, &d1)] {
            for &(_, path_key) in descent.path.iter().rev() {
                let (k, v) = self.delete_key(tree, path_key);
                buffer.push([self.rng.gen(), k, v, 0]);
            }
        }

        // A put rewrites its payload while it sits in scratch, touching
        // every buffered entry identically.
        let wants_put = u64::from(put.is_some());
        let new_value = put.unwrap_or(0);
        for entry in buffer.iter_mut() {
            let hit = ct::bf_eq(entry[1], key) & wants_put;
            entry[2] = ct::bf_select(hit, new_value, entry[2]);
        }

        // Phase 4: shuffle scratch, then re-insert with fresh coins.
        ct::oblivious_mix(&mut buffer);
        for entry in &buffer {
            let tree = (self.rng.gen::<u32>() & 1) as usize;
            self.insert(tree, entry[1], entry[2]);
        }
        debug_assert!(self.free.is_empty(), "every removed payload must return to a tree");

        // Phase 5: pad the trace to the n-only budget.
        assert!(
            self.op_events <= self.budget,
            "operation exceeded its trace budget; see module docs"
        );
        while self.op_events < self.budget {
            let slot = self.rng.gen_range(0..self.slab.len() as u32);
            std::hint::black_box(self.read_node(slot));
        }
        Ok(value)
    }

    fn read_node(&mut self, slot: u32) -> Node {
        self.op_events += 1;
        self.trace.read(slot);
        self.slab[slot as usize]
    }

    fn write_node(&mut self, slot: u32, mut node: Node) {
        self.op_events += 1;
        self.trace.write(slot);
        node.slot = slot;
        self.slab[slot as usize] = node;
    }

    fn descend(&mut self, tree: usize, key: u64) -> Descent {
        let mut path = Vec::with_capacity(self.height_cap);
        let mut found = None;
        let mut cur = self.roots[tree];
        while cur != NIL {
            let node = self.read_node(cur);
            path.push((cur, node.key));
            assert!(path.len() <= self.height_cap, "descent exceeded the height cap");
            cur = if key < node.key {
                node.left
            } else if key > node.key {
                node.right
            } else {
                found = Some(node.value);
                // Keep walking to a leaf so hits and misses share a shape.
                node.left
            };
        }
        Descent { path, found }
    }

    fn delete_key(&mut self, tree: usize, key: u64) -> (u64, u64) {
        let mut parent = NIL;
        let mut cur = self.roots[tree];
        let mut steps = 0;
        let node = loop {
            assert!(cur != NIL, "delete target vanished; forest invariant broken");
            let node = self.read_node(cur);
            steps += 1;
            assert!(steps <= self.height_cap, "delete walk exceeded the height cap");
            if key == node.key {
                break node;
            }
            parent = cur;
            cur = if key < node.key { node.left } else { node.right };
        };
        let payload = (node.key, node.value);
        if node.left != NIL && node.right != NIL {
            // Two children: lift the successor's payload into this slot and
            // splice the successor out.
            let mut succ_parent = cur;
            let mut succ = node.right;
            let mut sn = self.read_node(succ);
            let mut steps = 1;
            while sn.left != NIL {
                succ_parent = succ;
                succ = sn.left;
                sn = self.read_node(succ);
                steps += 1;
                assert!(steps <= self.height_cap, "successor walk exceeded the height cap");
            }
            if succ_parent == cur {
                self.write_node(
                    cur,
                    Node { key: sn.key, value: sn.value, slot: cur, left: node.left, right: sn.right },
                );
            } else {
                self.write_node(
                    cur,
                    Node {
                        key: sn.key,
                        value: sn.value,
                        slot: cur,
                        left: node.left,
                        right: node.right,
                    },
                );
                let sp = self.read_node(succ_parent);
                self.write_node(succ_parent, Node { left: sn.right, ..sp });
            }
            self.free.push(succ);
        } else {
            let child = if node.left != NIL { node.left } else { node.right };
            if parent == NIL {
                self.roots[tree] = child;
            } else {
                let p = self.read_node(parent);
                let replaced = if p.left == cur {
                    Node { left: child, ..p }
                } else {
                    Node { right: child, ..p }
                };
                self.write_node(parent, replaced);
            }
            self.free.push(cur);
        }
        self.sizes[tree] -= 1;
        payload
    }

    fn insert(&mut self, tree: usize, key: u64, value: u64) {
        let slot = self.alloc_slot();
        self.write_node(slot, Node { key, value, slot, left: NIL, right: NIL });
        if self.roots[tree] == NIL {
            self.roots[tree] = slot;
        } else {
            let mut cur = self.roots[tree];
            let mut steps = 0;
            loop {
                let node = self.read_node(cur);
                steps += 1;
                assert!(steps <= self.height_cap, "insert walk exceeded the height cap");
                let next = if key < node.key { node.left } else { node.right };
                if next == NIL {
                    let linked = if key < node.key {
                        Node { left: slot, ..node }
                    } else {
                        Node { right: slot, ..node }
                    };
                    self.write_node(cur, linked);
                    break;
                }
                cur = next;
            }
        }
        self.sizes[tree] += 1;
    }

    fn alloc_slot(&mut self) -> u32 {
        assert!(!self.free.is_empty(), "slot pool exhausted; forest invariant broken");
        let idx = self.rng.gen_range(0..self.free.len());
        self.free.swap_remove(idx)
    }

    /// Verifies the structural invariants: the trees hold disjoint key sets
    /// whose union is the full range, sizes and slot mirrors agree, and the
    /// free pool is exactly the complement of the live slots.
    pub fn check_invariants(&self) {
        let mut seen_key = vec![false; self.capacity];
        let mut live_slot = vec![false; self.slab.len()];
        for (tree, &root) in self.roots.iter().enumerate() {
            let mut count = 0;
            let mut stack = vec![(root, u64::MIN, u64::MAX)];
            while let Some((slot, lo, hi)) = stack.pop() {
                if slot == NIL {
                    continue;
                }
                let node = self.slab[slot as usize];
                assert_eq!(node.slot, slot, "slot mirror out of sync");
                assert!(node.key >= lo && node.key < hi, "search order violated");
                assert!((node.key as usize) < self.capacity, "foreign key in tree");
                assert!(!seen_key[node.key as usize], "key present twice across trees");
                assert!(!live_slot[slot as usize], "slot linked twice");
                seen_key[node.key as usize] = true;
                live_slot[slot as usize] = true;
                count += 1;
                stack.push((node.left, lo, node.key));
                stack.push((node.right, node.key, hi));
            }
            assert_eq!(count, self.sizes[tree], "size counter out of sync");
        }
        assert!(seen_key.iter().all(|&s| s), "union of trees must cover every key");
        for &f in &self.free {
            assert!(!live_slot[f as usize], "free slot still linked");
        }
        assert_eq!(
            self.free.len() + self.sizes[0] + self.sizes[1],
            self.slab.len(),
            "slots leaked"
        );
    }
}
