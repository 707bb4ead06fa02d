//! Shortest paths on a road network with a highly sensitive district.
//!
//! The second party owns every edge weight; the first party owns the trip
//! endpoints, which must lie outside the district. The topology — which
//! roads exist and which belong to the district — is public; only weights
//! are secret.
//!
//! Node layout: ordinary nodes take ids `0..nonsensitive`, district nodes
//! the ids above them. Ordinary nodes that share an edge with the district
//! are its *boundaries*. District edges (boundary–district and internal
//! district roads) are the protected slice: in hybrid mode their weights
//! never reach the oracle. Instead the oracle surveys the ordinary
//! network — best costs from the start to every boundary, from every
//! boundary to the end, the best district-avoiding total, plus both
//! predecessor trees — and a circuit round combines that survey with the
//! district weights to pick the best overall route. The first party
//! stitches the full node route from the circuit's district segment and
//! the predecessor trees.
//!
//! Weight regime: ordinary weights are large (`2^16 ..= 2^20-1`) and
//! district weights small enough that any simple district path costs less
//! than one ordinary road. Any route then enters the district at most
//! once, which is exactly the shape the hybrid split can answer; the modes
//! stay equivalent to a textbook solver on the merged graph.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{cut_at, oracle, whole_input, AppError, AppJob, JobPlan, Mode};
use crate::bits::{bits_to_u64, u64_to_bits};
use crate::circuit::build::{
    gen_dijkstra_full, gen_dijkstra_sensitive, index_width, FullGraphSpec, RegionPathSpec,
};
use crate::enclave::{Enclave, EnclaveError};
use crate::oram::ct;
use crate::partition::{EvenRound, OddFn, OddRound, PartitionScheme, RoundSpec};
use crate::protocol::{derive_seed, LocalRun};

/// Width of every cost word on the wire and in circuits.
pub const COST_BITS: usize = 32;
/// "Unreachable" cost; any real route must cost less.
pub const INF_COST: u64 = 1 << 30;
/// Ordinary road weights are drawn from `NS_WEIGHT_MIN..=NS_WEIGHT_MAX`.
pub const NS_WEIGHT_MIN: u64 = 1 << 16;
pub const NS_WEIGHT_MAX: u64 = (1 << 20) - 1;
/// Route slots in oracle-mode replies are 16-bit ids; all-ones is padding.
const SLOT_SENTINEL: u64 = u16::MAX as u64;

/// One undirected road.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    /// True for district roads (internal or boundary crossings).
    pub sensitive: bool,
}

/// Size parameters of a generated network.
#[derive(Clone, Copy, Debug)]
pub struct DijkstraConfig {
    /// Ordinary node count.
    pub nonsensitive: usize,
    /// How many ordinary nodes touch the district.
    pub entrances: usize,
    /// District node count.
    pub sensitive: usize,
    /// Seed for topology, weights and endpoints.
    pub seed: u64,
}

/// A materialized road network instance.
pub struct RoadNetwork {
    pub cfg: DijkstraConfig,
    /// Canonical order: ordinary block, then boundary crossings, then
    /// internal district roads. The second party's weight input follows
    /// this order.
    pub edges: Vec<Edge>,
    /// The second party's secret, parallel to `edges`.
    pub weights: Vec<u64>,
    /// Ordinary nodes incident to a district road, ascending.
    pub boundaries: Vec<usize>,
    pub start: usize,
    pub end: usize,
    ns_edges: usize,
    node_count: usize,
    weight_map: BTreeMap<(usize, usize), (u64, bool)>,
}

/// Outcome of one protocol run.
pub struct DijkstraRun {
    /// Total route cost.
    pub cost: u64,
    /// Full node route, start to end.
    pub route: Vec<usize>,
    /// The raw protocol run.
    pub run: LocalRun,
    /// The post-run oracle (oracle-backed modes only).
    pub oracle: Option<Enclave>,
    /// Encrypted garbled rows shipped by the run.
    pub rows: usize,
}

impl RoadNetwork {
    /// Generates a connected network from the config seed: both blocks are
    /// random connected graphs of average degree four, every boundary gets
    /// a crossing, and weights follow the regime described on the module.
    pub fn generate(cfg: DijkstraConfig) -> Result<RoadNetwork, AppError> {
        if cfg.nonsensitive < 2 || cfg.sensitive < 1 {
            return Err(AppError::InvalidConfig(
                "a network needs two ordinary nodes and a district".into(),
            ));
        }
        if cfg.entrances < 1 || cfg.entrances > cfg.nonsensitive {
            return Err(AppError::InvalidConfig(
                "entrance count must be between 1 and the ordinary node count".into(),
            ));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(cfg.seed, 60));
        let mut edges = Vec::new();
        let mut weights = Vec::new();
        for (u, v) in connected_pairs(&mut rng, cfg.nonsensitive, 0) {
            edges.push(Edge { u, v, sensitive: false });
            weights.push(rng.gen_range(NS_WEIGHT_MIN..=NS_WEIGHT_MAX));
        }
        let district_nodes = (cfg.entrances + cfg.sensitive) as u64;
        let cap = ((NS_WEIGHT_MIN - 1) / district_nodes).clamp(1, 255);
        for b in 0..cfg.entrances {
            let target = cfg.nonsensitive + rng.gen_range(0..cfg.sensitive);
            edges.push(Edge { u: b, v: target, sensitive: true });
            weights.push(rng.gen_range(1..=cap));
        }
        for (u, v) in connected_pairs(&mut rng, cfg.sensitive, cfg.nonsensitive) {
            edges.push(Edge { u, v, sensitive: true });
            weights.push(rng.gen_range(1..=cap));
        }
        let start = rng.gen_range(0..cfg.nonsensitive);
        let end = loop {
            let e = rng.gen_range(0..cfg.nonsensitive);
            if e != start {
                break e;
            }
        };
        RoadNetwork::assemble(edges, weights, start, end, cfg.seed)
    }

    /// Builds a network from explicit roads, deriving the node classes:
    /// a node is a district node when it has no ordinary road at all.
    /// Validates the canonical layout and the weight regime.
    pub fn from_parts(
        edges: Vec<Edge>,
        weights: Vec<u64>,
        start: usize,
        end: usize,
    ) -> Result<RoadNetwork, AppError> {
        RoadNetwork::assemble(edges, weights, start, end, 0)
    }

    fn assemble(
        edges: Vec<Edge>,
        weights: Vec<u64>,
        start: usize,
        end: usize,
        seed: u64,
    ) -> Result<RoadNetwork, AppError> {
        let bad = |msg: String| Err(AppError::InvalidConfig(msg));
        if edges.is_empty() || edges.len() != weights.len() {
            return bad("need one weight per road".into());
        }
        let node_count = edges.iter().map(|e| e.u.max(e.v) + 1).max().unwrap();
        let mut has_ordinary = vec![false; node_count];
        let mut has_any = vec![false; node_count];
        for e in &edges {
            if e.u == e.v || e.u >= node_count || e.v >= node_count {
                return bad(format!("road ({}, {}) is malformed", e.u, e.v));
            }
            for x in [e.u, e.v] {
                has_any[x] = true;
                if !e.sensitive {
                    has_ordinary[x] = true;
                }
            }
        }
        if let Some(lonely) = has_any.iter().position(|&x| !x) {
            return bad(format!("node {lonely} has no roads"));
        }
        let district: Vec<usize> = (0..node_count).filter(|&v| !has_ordinary[v]).collect();
        let ns_count = node_count - district.len();
        if district.is_empty() {
            return bad("the network has no district".into());
        }
        if district.iter().enumerate().any(|(i, &g)| g != ns_count + i) {
            return bad("district nodes must use the highest ids".into());
        }

        // Classify roads and check endpoints against the derived classes.
        let is_district = |v: usize| v >= ns_count;
        let mut boundaries = BTreeSet::new();
        for e in &edges {
            match (e.sensitive, is_district(e.u), is_district(e.v)) {
                (false, false, false) => {}
                (true, true, true) => {}
                (true, a, b) if a != b => {
                    boundaries.insert(if a { e.v } else { e.u });
                }
                (false, _, _) => unreachable!("district nodes have no ordinary roads"),
                (true, false, false) => {
                    return bad(format!(
                        "road ({}, {}) is protected but joins two ordinary nodes",
                        e.u, e.v
                    ));
                }
                _ => unreachable!(),
            }
        }
        let boundaries: Vec<usize> = boundaries.into_iter().collect();
        if boundaries.is_empty() {
            return bad("the district is unreachable: no boundary crossings".into());
        }
        if start >= ns_count || end >= ns_count || start == end {
            return bad("trip endpoints must be distinct ordinary nodes".into());
        }

        // Connectivity: the ordinary block on its own, and the district
        // block (with its boundaries) via protected roads.
        let reach = |seed_nodes: &[usize], take: &dyn Fn(&Edge) -> bool| -> BTreeSet<usize> {
            let mut adj: Vec<Vec<usize>> = vec![Vec::new(); node_count];
            for e in edges.iter().filter(|e| take(e)) {
                adj[e.u].push(e.v);
                adj[e.v].push(e.u);
            }
            let mut seen: BTreeSet<usize> = seed_nodes.iter().copied().collect();
            let mut queue: Vec<usize> = seed_nodes.to_vec();
            while let Some(u) = queue.pop() {
                for &v in &adj[u] {
                    if seen.insert(v) {
                        queue.push(v);
                    }
                }
            }
            seen
        };
        let ns_reach = reach(&[start], &|e| !e.sensitive);
        if (0..ns_count).any(|v| !ns_reach.contains(&v)) {
            return bad("the ordinary network is disconnected".into());
        }
        let region_reach = reach(&boundaries[..1], &|e| e.sensitive);
        if district.iter().any(|v| !region_reach.contains(v))
            || boundaries.iter().any(|v| !region_reach.contains(v))
        {
            return bad("the district is not internally connected".into());
        }

        // Weight regime: ordinary roads expensive, any simple district
        // path cheaper than one ordinary road, totals within the cost
        // width.
        let region_node_count = boundaries.len() + district.len();
        let mut max_district_w = 0;
        for (e, &w) in edges.iter().zip(&weights) {
            if w == 0 {
                return bad(format!("road ({}, {}) has zero weight", e.u, e.v));
            }
            if e.sensitive {
                max_district_w = max_district_w.max(w);
            } else if !(NS_WEIGHT_MIN..=NS_WEIGHT_MAX).contains(&w) {
                return bad(format!("ordinary road ({}, {}) weight {w} out of range", e.u, e.v));
            }
        }
        if max_district_w.saturating_mul(region_node_count as u64 - 1) >= NS_WEIGHT_MIN {
            return bad(format!(
                "district weights up to {max_district_w} allow a district path \
                 costlier than an ordinary road"
            ));
        }
        if node_count as u64 * NS_WEIGHT_MAX >= INF_COST {
            return bad("network too large for the cost width".into());
        }

        // Canonical order: ordinary, crossings, internal district roads.
        let class = |e: &Edge| match (e.sensitive, is_district(e.u) && is_district(e.v)) {
            (false, _) => 0,
            (true, false) => 1,
            (true, true) => 2,
        };
        let mut paired: Vec<(Edge, u64)> = edges.into_iter().zip(weights).collect();
        paired.sort_by_key(|(e, _)| class(e));
        let (edges, weights): (Vec<Edge>, Vec<u64>) = paired.into_iter().unzip();
        let ns_edges = edges.iter().filter(|e| !e.sensitive).count();
        let mut weight_map = BTreeMap::new();
        for (e, &w) in edges.iter().zip(&weights) {
            let key = (e.u.min(e.v), e.u.max(e.v));
            weight_map.insert(key, (w, e.sensitive));
        }

        Ok(RoadNetwork {
            cfg: DijkstraConfig {
                nonsensitive: ns_count,
                entrances: boundaries.len(),
                sensitive: district.len(),
                seed,
            },
            edges,
            weights,
            boundaries,
            start,
            end,
            ns_edges,
            node_count,
            weight_map,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Plain reference answer: cost, route, and the number of minimum-cost
    /// routes (1 means the route is uniquely determined).
    pub fn expected(&self) -> (u64, Vec<usize>, u64) {
        let pairs: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.u, e.v)).collect();
        oracle::shortest_route(self.node_count, &pairs, &self.weights, self.start, self.end)
            .expect("assembled networks are connected")
    }

    fn endpoint_bits(&self) -> Vec<bool> {
        let mut bits = u64_to_bits(self.start as u64, 16);
        bits.extend(u64_to_bits(self.end as u64, 16));
        bits
    }

    fn weight_bits(&self) -> Vec<bool> {
        self.weights.iter().flat_map(|&w| u64_to_bits(w, COST_BITS)).collect()
    }

    /// The single-round oracle scheme: the whole merged graph is solved
    /// inside the oracle, route and cost back to the first party.
    pub fn oracle_scheme(&self, hardened: bool) -> Arc<PartitionScheme> {
        let name = if hardened { "route-balanced" } else { "route-direct" };
        let pairs: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.u, e.v)).collect();
        let f = whole_route_round_fn(pairs, self.node_count, hardened);
        Arc::new(PartitionScheme::new(
            name,
            vec![RoundSpec::Odd(OddRound { f_id: name.to_string(), f, dual: false })],
            whole_input(),
            whole_input(),
        ))
    }

    /// The two-round split: ordinary-network survey in the oracle, then
    /// the district circuit.
    pub fn hybrid_scheme(&self) -> Arc<PartitionScheme> {
        let pairs: Vec<(usize, usize)> =
            self.edges[..self.ns_edges].iter().map(|e| (e.u, e.v)).collect();
        let f =
            survey_round_fn(pairs, self.cfg.nonsensitive, self.boundaries.clone());
        let circuit = Arc::new(gen_dijkstra_sensitive(&self.region_spec()));
        Arc::new(PartitionScheme::new(
            "route/hybrid",
            vec![
                RoundSpec::Odd(OddRound { f_id: "ns-survey".into(), f, dual: false }),
                RoundSpec::Even(EvenRound { circuit, dual: false }),
            ],
            cut_at(32),
            cut_at(self.ns_edges * COST_BITS),
        ))
    }

    /// District circuit description for the hybrid round 2. Local ids:
    /// boundaries (ascending) first, then district nodes; the survey's
    /// predecessor trees ride along as inert pad wires.
    pub fn region_spec(&self) -> RegionPathSpec {
        let ns_count = self.cfg.nonsensitive;
        let local = |g: usize| -> usize {
            if g >= ns_count {
                self.boundaries.len() + (g - ns_count)
            } else {
                self.boundaries.binary_search(&g).expect("crossings end at boundaries")
            }
        };
        let edges: Vec<(usize, usize)> =
            self.edges[self.ns_edges..].iter().map(|e| (local(e.u), local(e.v))).collect();
        let mut emitted: Vec<u64> = self.boundaries.iter().map(|&b| b as u64).collect();
        emitted.extend((ns_count..self.node_count).map(|g| g as u64));
        RegionPathSpec {
            boundary_count: self.boundaries.len(),
            interior_count: self.cfg.sensitive,
            edges,
            emitted_ids: emitted,
            id_bits: index_width(self.node_count + 1),
            cost_bits: COST_BITS,
            inf: INF_COST,
            alice_pad_bits: 2 * ns_count * 16,
        }
    }

    /// Whole-graph circuit description for the monolithic mode.
    pub fn full_spec(&self) -> FullGraphSpec {
        FullGraphSpec {
            node_count: self.node_count,
            edges: self.edges.iter().map(|e| (e.u, e.v)).collect(),
            id_bits: index_width(self.node_count + 1),
            cost_bits: COST_BITS,
            inf: INF_COST,
        }
    }

    /// Prepares the runnable job for `mode`.
    pub fn job(&self, mode: Mode) -> Result<AppJob, AppError> {
        let (plan, input_a) = match mode {
            Mode::Naive | Mode::Sgx => (
                JobPlan::Scheme { scheme: self.oracle_scheme(mode == Mode::Sgx) },
                self.endpoint_bits(),
            ),
            Mode::Hybrid => {
                (JobPlan::Scheme { scheme: self.hybrid_scheme() }, self.endpoint_bits())
            }
            Mode::Gc => {
                let spec = self.full_spec();
                let mut a = u64_to_bits(self.start as u64, spec.id_bits);
                a.extend(u64_to_bits(self.end as u64, spec.id_bits));
                (
                    JobPlan::Circuit {
                        circuit: Arc::new(gen_dijkstra_full(&spec)),
                        dual: false,
                    },
                    a,
                )
            }
        };
        let rows = plan.rows();
        Ok(AppJob { plan, input_a, input_b: self.weight_bits(), rows })
    }

    /// Decodes and validates the route out of a finished run.
    pub fn route(&self, mode: Mode, run: &LocalRun) -> Result<(u64, Vec<usize>), AppError> {
        let (cost, route) = match mode {
            Mode::Naive | Mode::Sgx => self.decode_slot_reply(&run.y0)?,
            Mode::Hybrid => self.stitch(run)?,
            Mode::Gc => self.decode_full_reply(&run.y0, index_width(self.node_count + 1))?,
        };
        self.check_route(cost, &route)?;
        Ok((cost, route))
    }

    /// Runs the trip query under `mode`, decodes and validates the route.
    pub fn run(&self, mode: Mode, k_bits: usize, seed: u64) -> Result<DijkstraRun, AppError> {
        let job = self.job(mode)?;
        let (run, oracle) = job.run_local(k_bits, seed)?;
        let (cost, route) = self.route(mode, &run)?;
        Ok(DijkstraRun { cost, route, run, oracle, rows: job.rows })
    }

    /// Parses an oracle-mode reply: a cost word then 16-bit route slots,
    /// start first, sentinel-padded.
    fn decode_slot_reply(&self, y0: &[bool]) -> Result<(u64, Vec<usize>), AppError> {
        if y0.len() != COST_BITS + self.node_count * 16 {
            return Err(AppError::BadOutput("route reply has the wrong width".into()));
        }
        let cost = bits_to_u64(&y0[..COST_BITS]);
        let slots: Vec<u64> = y0[COST_BITS..].chunks(16).map(bits_to_u64).collect();
        let route = take_route(&slots, SLOT_SENTINEL)?;
        Ok((cost, route))
    }

    /// Parses the monolithic circuit's reply: cost, then id slots listed
    /// from the end back to the start, sentinel-padded.
    fn decode_full_reply(&self, y0: &[bool], id_bits: usize) -> Result<(u64, Vec<usize>), AppError> {
        if y0.len() != COST_BITS + self.node_count * id_bits {
            return Err(AppError::BadOutput("route reply has the wrong width".into()));
        }
        let cost = bits_to_u64(&y0[..COST_BITS]);
        let slots: Vec<u64> = y0[COST_BITS..].chunks(id_bits).map(bits_to_u64).collect();
        let mut route = take_route(&slots, (1 << id_bits) - 1)?;
        route.reverse();
        Ok((cost, route))
    }

    /// Rebuilds the full route from a hybrid run: the district segment
    /// comes from the final circuit output, the ordinary stretches from
    /// the survey's predecessor trees (logged in the first party's view).
    fn stitch(&self, run: &LocalRun) -> Result<(u64, Vec<usize>), AppError> {
        let spec_id_bits = index_width(self.node_count + 1);
        let slot_count = self.boundaries.len() + self.cfg.sensitive;
        if run.y0.len() != COST_BITS + slot_count * spec_id_bits {
            return Err(AppError::BadOutput("district reply has the wrong width".into()));
        }
        let cost = bits_to_u64(&run.y0[..COST_BITS]);
        let slots: Vec<u64> =
            run.y0[COST_BITS..].chunks(spec_id_bits).map(bits_to_u64).collect();
        let sentinel = (1u64 << spec_id_bits) - 1;

        let survey = run
            .transcript
            .oracle_log
            .first()
            .ok_or_else(|| AppError::BadOutput("missing survey record".into()))?;
        let ns = self.cfg.nonsensitive;
        let pred_base = (2 * self.boundaries.len() + 1) * 4;
        if survey.y_alice.len() != pred_base + 4 * ns {
            return Err(AppError::BadOutput("survey reply has the wrong width".into()));
        }
        let pred_at = |base: usize, v: usize| -> usize {
            u16::from_be_bytes([survey.y_alice[base + 2 * v], survey.y_alice[base + 2 * v + 1]])
                as usize
        };
        let pred_s = |v: usize| pred_at(pred_base, v);
        let pred_e = |v: usize| pred_at(pred_base + 2 * ns, v);

        // Walk toward the start (collecting back-to-front), or toward the
        // end (front order); both guard against broken trees.
        let back_walk = |from: usize| -> Result<Vec<usize>, AppError> {
            let mut path = vec![from];
            let mut cur = from;
            for _ in 0..ns {
                if cur == self.start {
                    path.reverse();
                    return Ok(path);
                }
                cur = pred_s(cur);
                path.push(cur);
            }
            Err(AppError::BadOutput("survey has no path to the start".into()))
        };
        let fwd_walk = |from: usize| -> Result<Vec<usize>, AppError> {
            let mut path = vec![from];
            let mut cur = from;
            for _ in 0..ns {
                if cur == self.end {
                    return Ok(path);
                }
                cur = pred_e(cur);
                path.push(cur);
            }
            Err(AppError::BadOutput("survey has no path to the end".into()))
        };

        let segment: Vec<usize> = slots
            .iter()
            .take_while(|&&s| s != sentinel)
            .map(|&s| s as usize)
            .collect();
        if slots[segment.len()..].iter().any(|&s| s != sentinel) {
            return Err(AppError::BadOutput("district segment has gaps".into()));
        }
        let route = if segment.is_empty() {
            back_walk(self.end)?
        } else {
            let exit = segment[0];
            let entrance = *segment.last().unwrap();
            for gate in [entrance, exit] {
                if self.boundaries.binary_search(&gate).is_err() {
                    return Err(AppError::BadOutput(format!(
                        "district segment ends at {gate}, not a boundary"
                    )));
                }
            }
            let mut route = back_walk(entrance)?;
            route.extend(segment.iter().rev().skip(1));
            route.extend(fwd_walk(exit)?.into_iter().skip(1));
            route
        };
        Ok((cost, route))
    }

    /// Route legality: endpoints match, every hop is a real road, the
    /// costs sum to the reported total, and the district is entered at
    /// most once.
    pub fn check_route(&self, cost: u64, route: &[usize]) -> Result<(), AppError> {
        let bad = |msg: String| Err(AppError::IllegalRoute(msg));
        if route.first() != Some(&self.start) || route.last() != Some(&self.end) {
            return bad("route endpoints do not match the trip".into());
        }
        if cost >= INF_COST {
            return bad("route reports an unreachable cost".into());
        }
        let mut total = 0u64;
        let mut stints = 0;
        let mut in_district = false;
        for hop in route.windows(2) {
            let key = (hop[0].min(hop[1]), hop[0].max(hop[1]));
            let Some(&(w, sensitive)) = self.weight_map.get(&key) else {
                return bad(format!("hop ({}, {}) is not a road", hop[0], hop[1]));
            };
            total += w;
            if sensitive && !in_district {
                stints += 1;
            }
            in_district = sensitive;
        }
        if stints > 1 {
            return bad(format!("route enters the district {stints} times"));
        }
        if total != cost {
            return bad(format!("route hops sum to {total}, reply claims {cost}"));
        }
        Ok(())
    }
}

/// Random connected undirected graph over `count` nodes (ids shifted by
/// `offset`): a random tree plus random extra roads up to average degree
/// four. Single-node blocks have no internal roads.
fn connected_pairs(
    rng: &mut ChaCha20Rng,
    count: usize,
    offset: usize,
) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut seen = BTreeSet::new();
    for i in 1..count {
        let j = rng.gen_range(0..i);
        pairs.push((offset + i, offset + j));
        seen.insert((i.min(j) + offset, i.max(j) + offset));
    }
    let target = (2 * count).min(count * count.saturating_sub(1) / 2);
    let mut attempts = 0;
    while pairs.len() < target && attempts < 64 * target {
        attempts += 1;
        let u = rng.gen_range(0..count);
        let v = rng.gen_range(0..count);
        if u == v {
            continue;
        }
        let key = (u.min(v) + offset, u.max(v) + offset);
        if seen.insert(key) {
            pairs.push(key);
        }
    }
    pairs
}

/// Reads a sentinel-terminated id route out of fixed slots.
fn take_route(slots: &[u64], sentinel: u64) -> Result<Vec<usize>, AppError> {
    let route: Vec<usize> =
        slots.iter().take_while(|&&s| s != sentinel).map(|&s| s as usize).collect();
    if route.is_empty() {
        return Err(AppError::BadOutput("empty route".into()));
    }
    if slots[route.len()..].iter().any(|&s| s != sentinel) {
        return Err(AppError::BadOutput("route has gaps".into()));
    }
    Ok(route)
}

fn parse_endpoints(u: &[u8], limit: usize) -> Result<(usize, usize), EnclaveError> {
    if u.len() != 4 {
        return Err(EnclaveError::BadInput("endpoint block must be four bytes".into()));
    }
    let s = u16::from_be_bytes([u[0], u[1]]) as usize;
    let e = u16::from_be_bytes([u[2], u[3]]) as usize;
    if s >= limit || e >= limit || s == e {
        return Err(EnclaveError::BadInput("endpoints must be distinct ordinary nodes".into()));
    }
    Ok((s, e))
}

fn parse_weights(v: &[u8], count: usize) -> Result<Vec<u64>, EnclaveError> {
    if v.len() != count * 4 {
        return Err(EnclaveError::BadInput(format!(
            "weight block is {} bytes for {count} roads",
            v.len()
        )));
    }
    let weights: Vec<u64> = v
        .chunks(4)
        .map(|c| u32::from_be_bytes(c.try_into().unwrap()) as u64)
        .collect();
    if weights.iter().any(|&w| w == 0) {
        return Err(EnclaveError::BadInput("zero-weight road".into()));
    }
    Ok(weights)
}

/// Single-source distances and predecessors with a fixed access pattern:
/// `n-1` full relaxation sweeps over the road list in a public order, all
/// updates through branch-free selects. Unreached nodes stay at
/// [`INF_COST`] with themselves as predecessor.
fn fixed_access_distances(
    n: usize,
    pairs: &[(usize, usize)],
    weights: &[u64],
    source: usize,
) -> (Vec<u64>, Vec<usize>) {
    let mut dist = vec![INF_COST; n];
    let mut pred: Vec<u64> = (0..n as u64).collect();
    dist[source] = 0;
    for _ in 0..n.saturating_sub(1) {
        for (&(a, b), &w) in pairs.iter().zip(weights) {
            for (u, v) in [(a, b), (b, a)] {
                let cand = dist[u] + w;
                let better = ct::bf_lt(cand, dist[v]);
                dist[v] = ct::bf_select(better, cand, dist[v]);
                pred[v] = ct::bf_select(better, u as u64, pred[v]);
            }
        }
    }
    (dist, pred.into_iter().map(|p| p as usize).collect())
}

/// Heap-based single-source distances and predecessors (operand-dependent
/// control flow; the unhardened oracle flavor). Ties settle toward lower
/// node ids.
fn heap_distances(
    n: usize,
    pairs: &[(usize, usize)],
    weights: &[u64],
    source: usize,
) -> (Vec<u64>, Vec<usize>) {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
    for (&(u, v), &w) in pairs.iter().zip(weights) {
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    let mut dist = vec![INF_COST; n];
    let mut pred: Vec<usize> = (0..n).collect();
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        for &(v, w) in &adj[u] {
            let cand = d + w;
            if cand < dist[v] {
                dist[v] = cand;
                pred[v] = u;
                heap.push(Reverse((cand, v)));
            }
        }
    }
    (dist, pred)
}

/// The whole-trip oracle round: solves the merged graph and replies with
/// the cost and the start-first route in 16-bit slots.
fn whole_route_round_fn(
    pairs: Vec<(usize, usize)>,
    node_count: usize,
    hardened: bool,
) -> OddFn {
    Arc::new(move |u, v, _state| {
        let (start, end) = parse_endpoints(u, node_count)?;
        let weights = parse_weights(v, pairs.len())?;
        let (dist, pred) = if hardened {
            fixed_access_distances(node_count, &pairs, &weights, start)
        } else {
            heap_distances(node_count, &pairs, &weights, start)
        };
        if dist[end] >= INF_COST {
            return Err(EnclaveError::BadInput("trip endpoints are disconnected".into()));
        }
        let mut route = vec![end];
        let mut cur = end;
        while cur != start {
            if route.len() > node_count {
                return Err(EnclaveError::BadInput("predecessor walk does not close".into()));
            }
            cur = pred[cur];
            route.push(cur);
        }
        route.reverse();
        let mut y0 = (dist[end] as u32).to_be_bytes().to_vec();
        for slot in 0..node_count {
            let id = route.get(slot).map_or(SLOT_SENTINEL, |&v| v as u64);
            y0.extend((id as u16).to_be_bytes());
        }
        Ok((y0, Vec::new()))
    })
}

/// The hybrid survey round: distances and predecessor trees over the
/// ordinary network only, from the start and (by symmetry) from the end,
/// all via the fixed-access solver. Reply layout: per-boundary start
/// costs, per-boundary end costs, the district-avoiding total, then both
/// predecessor trees as 16-bit words.
fn survey_round_fn(
    pairs: Vec<(usize, usize)>,
    ns_count: usize,
    boundaries: Vec<usize>,
) -> OddFn {
    Arc::new(move |u, v, _state| {
        let (start, end) = parse_endpoints(u, ns_count)?;
        let weights = parse_weights(v, pairs.len())?;
        let (dist_s, pred_s) = fixed_access_distances(ns_count, &pairs, &weights, start);
        let (dist_e, pred_e) = fixed_access_distances(ns_count, &pairs, &weights, end);
        let mut y0 = Vec::with_capacity((2 * boundaries.len() + 1) * 4 + 4 * ns_count);
        for &b in &boundaries {
            y0.extend((dist_s[b] as u32).to_be_bytes());
        }
        for &b in &boundaries {
            y0.extend((dist_e[b] as u32).to_be_bytes());
        }
        y0.extend((dist_s[end] as u32).to_be_bytes());
        for p in pred_s.iter().chain(pred_e.iter()) {
            y0.extend((*p as u16).to_be_bytes());
        }
        Ok((y0, Vec::new()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(seed: u64) -> DijkstraConfig {
        DijkstraConfig { nonsensitive: 8, entrances: 2, sensitive: 3, seed }
    }

    #[test]
    fn generation_is_deterministic_and_well_formed() {
        let net = RoadNetwork::generate(small_cfg(5)).unwrap();
        let again = RoadNetwork::generate(small_cfg(5)).unwrap();
        assert_eq!(net.edges, again.edges);
        assert_eq!(net.weights, again.weights);
        assert_eq!((net.start, net.end), (again.start, again.end));

        assert_eq!(net.boundaries, vec![0, 1], "crossings start at the first nodes");
        assert!(net.start < 8 && net.end < 8 && net.start != net.end);
        for (e, &w) in net.edges.iter().zip(&net.weights) {
            if e.sensitive {
                assert!(w >= 1 && w <= 255, "district weight {w}");
            } else {
                assert!((NS_WEIGHT_MIN..=NS_WEIGHT_MAX).contains(&w), "ordinary weight {w}");
            }
        }
        // Canonical order: all ordinary roads precede all district roads.
        let first_district = net.edges.iter().position(|e| e.sensitive).unwrap();
        assert!(net.edges[first_district..].iter().all(|e| e.sensitive));
    }

    #[test]
    fn all_modes_agree_with_the_textbook_solver() {
        for seed in [1u64, 2, 3] {
            let net = RoadNetwork::generate(small_cfg(seed)).unwrap();
            let (want_cost, want_route, optima) = net.expected();
            for mode in Mode::all() {
                let got = net.run(mode, 80, seed + 100).unwrap();
                assert_eq!(got.cost, want_cost, "seed {seed} mode {mode}");
                if optima == 1 {
                    assert_eq!(got.route, want_route, "seed {seed} mode {mode}");
                }
            }
        }
    }

    #[test]
    fn trivial_two_node_network_runs_everywhere() {
        let cfg = DijkstraConfig { nonsensitive: 2, entrances: 1, sensitive: 1, seed: 9 };
        let net = RoadNetwork::generate(cfg).unwrap();
        let (want_cost, _, _) = net.expected();
        for mode in Mode::all() {
            assert_eq!(net.run(mode, 80, 4).unwrap().cost, want_cost, "mode {mode}");
        }
    }

    #[test]
    fn district_avoiding_trips_emit_an_empty_segment() {
        // 0-1 is the direct road; the only boundary is 2, so any district
        // visit costs two expensive detour roads.
        let edges = vec![
            Edge { u: 0, v: 1, sensitive: false },
            Edge { u: 0, v: 2, sensitive: false },
            Edge { u: 1, v: 2, sensitive: false },
            Edge { u: 2, v: 3, sensitive: true },
        ];
        let net =
            RoadNetwork::from_parts(edges, vec![65536, 70000, 70000, 1], 0, 1).unwrap();
        let got = net.run(Mode::Hybrid, 80, 12).unwrap();
        assert_eq!((got.cost, got.route.clone()), (65536, vec![0, 1]));
        // The final circuit output is all sentinel slots after the cost.
        let slots = &got.run.y0[COST_BITS..];
        assert!(slots.iter().all(|&b| b), "expected an all-ones district segment");
    }

    #[test]
    fn crossing_the_district_beats_the_long_way_round() {
        // Line 0-1-2 of expensive roads vs. 0→district→2.
        let edges = vec![
            Edge { u: 0, v: 1, sensitive: false },
            Edge { u: 1, v: 2, sensitive: false },
            Edge { u: 0, v: 3, sensitive: true },
            Edge { u: 2, v: 3, sensitive: true },
        ];
        let net =
            RoadNetwork::from_parts(edges, vec![65536, 65536, 5, 7], 0, 2).unwrap();
        assert_eq!(net.boundaries, vec![0, 2]);
        let (want_cost, want_route, optima) = net.expected();
        assert_eq!((want_cost, optima), (12, 1));
        assert_eq!(want_route, vec![0, 3, 2]);
        for mode in Mode::all() {
            let got = net.run(mode, 80, 3).unwrap();
            assert_eq!((got.cost, got.route.clone()), (12, vec![0, 3, 2]), "mode {mode}");
        }
    }

    #[test]
    fn malformed_networks_are_rejected() {
        let protected_ordinary = RoadNetwork::from_parts(
            vec![
                Edge { u: 0, v: 1, sensitive: true },
                Edge { u: 0, v: 1, sensitive: false },
            ],
            vec![1, 65536],
            0,
            1,
        );
        assert!(matches!(protected_ordinary, Err(AppError::InvalidConfig(_))));

        let no_district = RoadNetwork::from_parts(
            vec![Edge { u: 0, v: 1, sensitive: false }],
            vec![65536],
            0,
            1,
        );
        assert!(matches!(no_district, Err(AppError::InvalidConfig(_))));

        let heavy_district = RoadNetwork::from_parts(
            vec![
                Edge { u: 0, v: 1, sensitive: false },
                Edge { u: 0, v: 2, sensitive: true },
                Edge { u: 1, v: 2, sensitive: true },
            ],
            vec![65536, 60000, 60000],
            0,
            1,
        );
        assert!(matches!(heavy_district, Err(AppError::InvalidConfig(_))));

        let district_endpoint = RoadNetwork::from_parts(
            vec![
                Edge { u: 0, v: 1, sensitive: false },
                Edge { u: 0, v: 2, sensitive: true },
            ],
            vec![65536, 1],
            0,
            2,
        );
        assert!(matches!(district_endpoint, Err(AppError::InvalidConfig(_))));
    }

    #[test]
    fn route_checks_catch_tampering() {
        let net = RoadNetwork::generate(small_cfg(7)).unwrap();
        let (cost, route, _) = net.expected();
        assert!(net.check_route(cost, &route).is_ok());
        assert!(matches!(net.check_route(cost + 1, &route), Err(AppError::IllegalRoute(_))));
        let mut teleport = route.clone();
        teleport.insert(1, usize::MAX / 2);
        assert!(matches!(net.check_route(cost, &teleport), Err(AppError::IllegalRoute(_))));
    }

    #[test]
    fn double_district_stints_are_illegal() {
        // Boundaries 0 and 1; district node 2 reachable from both; the
        // route dips into the district twice.
        let edges = vec![
            Edge { u: 0, v: 1, sensitive: false },
            Edge { u: 0, v: 2, sensitive: true },
            Edge { u: 1, v: 2, sensitive: true },
        ];
        let net = RoadNetwork::from_parts(edges, vec![65536, 3, 4], 0, 1).unwrap();
        let twice = vec![0, 2, 1, 0, 2, 1];
        // Hops: 0-2 (district), 2-1 (district), 1-0 (ordinary), 0-2, 2-1.
        let cost = 3 + 4 + 65536 + 3 + 4;
        assert!(matches!(net.check_route(cost, &twice), Err(AppError::IllegalRoute(_))));
    }

    #[test]
    fn fixed_access_and_heap_solvers_agree() {
        let net = RoadNetwork::generate(small_cfg(11)).unwrap();
        let pairs: Vec<(usize, usize)> = net.edges.iter().map(|e| (e.u, e.v)).collect();
        let (d1, _) = fixed_access_distances(net.node_count, &pairs, &net.weights, net.start);
        let (d2, _) = heap_distances(net.node_count, &pairs, &net.weights, net.start);
        assert_eq!(d1, d2);
    }
}
