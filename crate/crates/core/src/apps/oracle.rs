//! Plain reference implementations the protocol outputs are checked
//! against: straight-line array code and a textbook shortest-path solver,
//! written with no circuit or oracle machinery in the loop.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::database::{DbQuery, QueryKind};

/// Big-endian comparison of equal-width bit strings: true when `a > b` as
/// unsigned integers.
pub fn bigint_greater(a: &[bool], b: &[bool]) -> bool {
    debug_assert_eq!(a.len(), b.len(), "comparing mismatched widths");
    for (&x, &y) in a.iter().zip(b) {
        if x != y {
            return x;
        }
    }
    false
}

/// Applies the query stream to `entries` in stream order. Returns one
/// value per lookup, in query order; writes mutate `entries` in place.
pub fn apply_in_order(entries: &mut [u64], queries: &[DbQuery]) -> Vec<u64> {
    let mut results = Vec::new();
    for q in queries {
        match q.kind {
            QueryKind::Select => results.push(entries[q.index as usize]),
            QueryKind::Set(v) => entries[q.index as usize] = v,
        }
    }
    results
}

/// Two-phase application: the ordinary queries run first in stream order,
/// then every protected lookup reads the resulting contents. The returned
/// values are re-interleaved into original query order. Coincides with
/// [`apply_in_order`] whenever the stream is read-only.
pub fn apply_routed(entries: &mut [u64], queries: &[DbQuery]) -> Vec<u64> {
    let mut ordinary = Vec::new();
    for q in queries.iter().filter(|q| !q.sensitive) {
        match q.kind {
            QueryKind::Select => ordinary.push(entries[q.index as usize]),
            QueryKind::Set(v) => entries[q.index as usize] = v,
        }
    }
    let mut protected = Vec::new();
    for q in queries.iter().filter(|q| q.sensitive) {
        match q.kind {
            QueryKind::Select => protected.push(entries[q.index as usize]),
            QueryKind::Set(_) => unreachable!("validated configs never write via protected queries"),
        }
    }
    let (mut oi, mut pi) = (0, 0);
    let mut results = Vec::new();
    for q in queries {
        match (q.kind, q.sensitive) {
            (QueryKind::Select, false) => {
                results.push(ordinary[oi]);
                oi += 1;
            }
            (QueryKind::Select, true) => {
                results.push(protected[pi]);
                pi += 1;
            }
            (QueryKind::Set(_), _) => {}
        }
    }
    results
}

/// Textbook single-source shortest path over an undirected weighted graph
/// given as parallel edge and weight lists. The heap breaks distance ties
/// toward lower node ids; predecessors keep the first strict improvement.
/// Returns the total cost, the start-to-end node route, and the number of
/// distinct minimum-cost routes (saturating — only "exactly one" matters),
/// or `None` when `end` is unreachable.
pub fn shortest_route(
    node_count: usize,
    edges: &[(usize, usize)],
    weights: &[u64],
    start: usize,
    end: usize,
) -> Option<(u64, Vec<usize>, u64)> {
    assert_eq!(edges.len(), weights.len(), "one weight per edge");
    let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); node_count];
    for (&(u, v), &w) in edges.iter().zip(weights) {
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    let mut dist = vec![u64::MAX; node_count];
    let mut pred: Vec<usize> = (0..node_count).collect();
    let mut optima = vec![0u64; node_count];
    let mut settled = vec![false; node_count];
    let mut heap = BinaryHeap::new();
    dist[start] = 0;
    optima[start] = 1;
    heap.push(Reverse((0u64, start)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        debug_assert_eq!(d, dist[u]);
        for &(v, w) in &adj[u] {
            let cand = d + w;
            if cand < dist[v] {
                dist[v] = cand;
                pred[v] = u;
                optima[v] = optima[u];
                heap.push(Reverse((cand, v)));
            } else if cand == dist[v] {
                optima[v] = optima[v].saturating_add(optima[u]);
            }
        }
    }
    if !settled[end] {
        return None;
    }
    let mut route = vec![end];
    let mut cur = end;
    while cur != start {
        cur = pred[cur];
        route.push(cur);
    }
    route.reverse();
    Some((dist[end], route, optima[end]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bigint_greater_matches_integer_compare_on_bytes() {
        for a in 0u16..=255 {
            for b in [0u16, 1, 127, 128, 255] {
                let ab: Vec<bool> = (0..8).rev().map(|i| (a >> i) & 1 == 1).collect();
                let bb: Vec<bool> = (0..8).rev().map(|i| (b >> i) & 1 == 1).collect();
                assert_eq!(bigint_greater(&ab, &bb), a > b, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn routed_order_diverges_from_stream_order_only_across_writes() {
        let queries = vec![
            DbQuery::sensitive_select(1),
            DbQuery::set(1, 99),
            DbQuery::select(1),
        ];
        let mut e1 = vec![10, 20, 30];
        let mut e2 = e1.clone();
        assert_eq!(apply_in_order(&mut e1, &queries), vec![20, 99]);
        assert_eq!(apply_routed(&mut e2, &queries), vec![99, 99]);

        let reads = vec![DbQuery::select(2), DbQuery::sensitive_select(0)];
        let mut e3 = vec![10, 20, 30];
        let mut e4 = e3.clone();
        assert_eq!(apply_in_order(&mut e3, &reads), apply_routed(&mut e4, &reads));
    }

    #[test]
    fn shortest_route_finds_the_cheap_detour() {
        // 0-1 (10), 1-2 (10), 0-2 (50): best 0→2 goes through 1.
        let edges = vec![(0, 1), (1, 2), (0, 2)];
        let (cost, route, optima) =
            shortest_route(3, &edges, &[10, 10, 50], 0, 2).expect("reachable");
        assert_eq!((cost, route, optima), (20, vec![0, 1, 2], 1));
        assert_eq!(shortest_route(4, &edges, &[10, 10, 50], 0, 3), None);
    }

    #[test]
    fn shortest_route_counts_ties() {
        // Two equal-cost routes 0→3: via 1 and via 2.
        let edges = vec![(0, 1), (1, 3), (0, 2), (2, 3)];
        let (cost, _, optima) = shortest_route(4, &edges, &[5, 5, 5, 5], 0, 3).unwrap();
        assert_eq!((cost, optima), (10, 2));
    }
}
