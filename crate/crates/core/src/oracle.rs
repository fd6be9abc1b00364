//! Exhaustive ground truth for tiny instances: local chromatic number,
//! maximum acyclic induced subgraph and binary min-rank.

use serde::{Deserialize, Serialize};

use crate::coloring::{greedy_on, Coloring, InterferenceGraph};
use crate::error::{Error, Result};
use crate::icp::IcpInstance;

/// Size caps for the exponential searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCaps {
    /// Nodes, for [`exhaustive_chi_l`].
    pub chi_nodes: usize,
    /// Nodes, for [`mais`].
    pub mais_nodes: usize,
    /// Messages, for [`min_rank_gf2`].
    pub min_rank_messages: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        Self {
            chi_nodes: 20,
            mais_nodes: 24,
            min_rank_messages: 10,
        }
    }
}

fn check_cap(size: usize, cap: usize) -> Result<()> {
    if size > cap {
        return Err(Error::TooLarge { size, cap });
    }
    Ok(())
}

struct ChiSearch {
    order: Vec<usize>,
    conflicts: Vec<Vec<usize>>,
    /// Other nodes wanting the same message; they must share a color.
    peers: Vec<Vec<usize>>,
    /// `watchers[v]`: nodes whose closed anti-outneighborhood contains `v`.
    watchers: Vec<Vec<usize>>,
    max_colors: usize,
    target: usize,
    color: Vec<usize>,
    counts: Vec<Vec<u8>>,
    distinct: Vec<usize>,
}

impl ChiSearch {
    fn new(graph: &InterferenceGraph, max_colors: usize, target: usize) -> Self {
        let n = graph.n_nodes();
        let conflicts = graph.conflicts();
        let mut watchers = vec![Vec::new(); n];
        for u in 0..n {
            watchers[u].push(u);
            for &v in graph.interferers(u) {
                watchers[v].push(u);
            }
        }
        let mut peers = vec![Vec::new(); n];
        for group in graph.message_groups() {
            for &u in &group {
                peers[u] = group.iter().copied().filter(|&w| w != u).collect();
            }
        }
        // most constrained first, then by index
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&u| (std::cmp::Reverse(conflicts[u].len() + watchers[u].len()), u));
        Self {
            order,
            conflicts,
            peers,
            watchers,
            max_colors,
            target,
            color: vec![0; n],
            counts: vec![vec![0; max_colors + 1]; n],
            distinct: vec![0; n],
        }
    }

    fn assign(&mut self, v: usize, c: usize) -> bool {
        let mut ok = true;
        self.color[v] = c;
        for &u in &self.watchers[v] {
            if self.counts[u][c] == 0 {
                self.distinct[u] += 1;
                ok &= self.distinct[u] <= self.target;
            }
            self.counts[u][c] += 1;
        }
        ok
    }

    fn unassign(&mut self, v: usize) {
        let c = self.color[v];
        for &u in &self.watchers[v] {
            self.counts[u][c] -= 1;
            if self.counts[u][c] == 0 {
                self.distinct[u] -= 1;
            }
        }
        self.color[v] = 0;
    }

    fn run(&mut self, depth: usize, max_used: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        let v = self.order[depth];
        let forced = self.peers[v]
            .iter()
            .map(|&w| self.color[w])
            .find(|&c| c != 0);
        let range = match forced {
            Some(c) => c..=c,
            None => 1..=(max_used + 1).min(self.max_colors),
        };
        for c in range {
            if self.conflicts[v].iter().any(|&w| self.color[w] == c) {
                continue;
            }
            let ok = self.assign(v, c);
            if ok && self.run(depth + 1, max_used.max(c)) {
                return true;
            }
            self.unassign(v);
        }
        false
    }
}

/// Minimum local count over proper colorings using at most `max_colors`
/// colors, with a witness. Nodes wanting the same message share a color. Capped at 20 nodes by default.
pub fn exhaustive_chi_l(icp: &IcpInstance, max_colors: usize) -> Result<(usize, Coloring)> {
    exhaustive_chi_l_with(icp, max_colors, OracleCaps::default())
}

pub fn exhaustive_chi_l_with(
    icp: &IcpInstance,
    max_colors: usize,
    caps: OracleCaps,
) -> Result<(usize, Coloring)> {
    let n = icp.n_nodes();
    check_cap(n, caps.chi_nodes)?;
    if n == 0 {
        return Ok((0, Coloring::new(Vec::new())?));
    }
    let graph = InterferenceGraph::new(icp);
    let greedy = greedy_on(&graph);
    let (mut best, mut witness) = if greedy.n_colors_used() <= max_colors {
        (graph.local_count(&greedy), Some(greedy))
    } else {
        (usize::MAX, None)
    };
    for target in 1..best.min(max_colors + 1) {
        let mut search = ChiSearch::new(&graph, max_colors, target);
        if search.run(0, 0) {
            let found = Coloring::normalized(&search.color);
            best = graph.local_count(&found);
            witness = Some(found);
            break;
        }
    }
    match witness {
        Some(w) => Ok((best, w)),
        None => Err(Error::Precondition(format!(
            "no proper coloring with at most {max_colors} colors"
        ))),
    }
}

/// Plain enumeration of all colorings as restricted growth strings. Only for
/// cross-checking [`exhaustive_chi_l`]; capped at 10 nodes.
pub fn naive_chi_l(icp: &IcpInstance, max_colors: usize) -> Result<Option<usize>> {
    let n = icp.n_nodes();
    check_cap(n, 10)?;
    if n == 0 {
        return Ok(Some(0));
    }
    let graph = InterferenceGraph::new(icp);
    let mut best: Option<usize> = None;
    let mut rgs = vec![1usize; n];
    loop {
        let c = Coloring::new(rgs.clone())?;
        if c.n_colors_used() <= max_colors && graph.is_proper(&c) && graph.is_consistent(&c) {
            let lc = graph.local_count(&c);
            best = Some(best.map_or(lc, |b| b.min(lc)));
        }
        // next restricted growth string
        let mut pos = n;
        loop {
            if pos == 1 {
                return Ok(best);
            }
            pos -= 1;
            let prefix_max = *rgs[..pos].iter().max().expect("nonempty prefix");
            if rgs[pos] <= prefix_max {
                rgs[pos] += 1;
                for x in rgs.iter_mut().skip(pos + 1) {
                    *x = 1;
                }
                break;
            }
        }
    }
}

/// Arcs of the side-information digraph as bitmasks: `u -> v` when `u`
/// knows the message `v` wants. Nodes wanting the same message are joined
/// both ways, so a valid acyclic set never holds the same message twice.
fn side_info_arcs(icp: &IcpInstance) -> Vec<u32> {
    let nodes = icp.nodes();
    nodes
        .iter()
        .enumerate()
        .map(|(u, a)| {
            let known = &icp.users()[a.user].known;
            nodes
                .iter()
                .enumerate()
                .filter(|&(v, b)| v != u && (known.contains(&b.message) || b.message == a.message))
                .fold(0u32, |acc, (v, _)| acc | 1 << v)
        })
        .collect()
}

fn is_acyclic(arcs: &[u32], set: u32) -> bool {
    let mut rest = set;
    loop {
        let sinks = (0..arcs.len())
            .filter(|&v| rest >> v & 1 == 1 && arcs[v] & rest == 0)
            .fold(0u32, |acc, v| acc | 1 << v);
        if sinks == 0 {
            return rest == 0;
        }
        rest &= !sinks;
    }
}

/// Whether `v` lies on a cycle inside `set | {v}`.
fn closes_cycle(arcs: &[u32], set: u32, v: usize) -> bool {
    let within = set | 1 << v;
    let mut seen = 0u32;
    let mut frontier = arcs[v] & within;
    while frontier != 0 {
        if frontier >> v & 1 == 1 {
            return true;
        }
        seen |= frontier;
        let mut next = 0u32;
        let mut f = frontier;
        while f != 0 {
            let w = f.trailing_zeros() as usize;
            f &= f - 1;
            next |= arcs[w] & within;
        }
        frontier = next & !seen;
    }
    false
}

fn mais_search(arcs: &[u32], v: usize, set: u32, size: usize, best: &mut usize) {
    let n = arcs.len();
    if size + (n - v) <= *best {
        return;
    }
    if v == n {
        *best = size;
        return;
    }
    if !closes_cycle(arcs, set, v) {
        mais_search(arcs, v + 1, set | 1 << v, size + 1, best);
    }
    mais_search(arcs, v + 1, set, size, best);
}

/// Largest acyclic induced subgraph of the side-information digraph.
pub fn mais(icp: &IcpInstance) -> Result<usize> {
    mais_with(icp, OracleCaps::default())
}

pub fn mais_with(icp: &IcpInstance, caps: OracleCaps) -> Result<usize> {
    let n = icp.n_nodes();
    check_cap(n, caps.mais_nodes.min(32))?;
    let arcs = side_info_arcs(icp);
    let mut best = 0;
    mais_search(&arcs, 0, 0, 0, &mut best);
    Ok(best)
}

/// Every subset, checked directly. Capped at 16 nodes.
pub fn naive_mais(icp: &IcpInstance) -> Result<usize> {
    let n = icp.n_nodes();
    check_cap(n, 16)?;
    let arcs = side_info_arcs(icp);
    Ok((0u32..1 << n)
        .filter(|&s| is_acyclic(&arcs, s))
        .map(|s| s.count_ones() as usize)
        .max()
        .unwrap_or(0))
}

/// For each node: the bit of its wanted message and the mask of
/// coordinates its row may use.
fn fitting_rows(icp: &IcpInstance) -> Vec<(u16, u16)> {
    let mut rows: Vec<(u16, u16)> = icp
        .nodes()
        .iter()
        .map(|node| {
            let want = 1u16 << node.message;
            let known = icp.users()[node.user]
                .known
                .iter()
                .fold(0u16, |acc, &m| acc | 1 << m);
            (want, want | known)
        })
        .collect();
    rows.sort_by_key(|&(want, allowed)| (allowed.count_ones(), want, allowed));
    rows.dedup();
    rows
}

fn fits(v: u16, (want, allowed): (u16, u16)) -> bool {
    v & want != 0 && v & !allowed == 0
}

fn min_rank_search(
    rows: &[(u16, u16)],
    idx: usize,
    span: &mut Vec<u16>,
    rank: usize,
    best: &mut usize,
    floor: usize,
) {
    if *best <= floor {
        return;
    }
    let Some(&row) = rows.get(idx) else {
        *best = rank;
        return;
    };
    if span.iter().any(|&v| fits(v, row)) {
        min_rank_search(rows, idx + 1, span, rank, best, floor);
        return;
    }
    if rank + 1 >= *best {
        return;
    }
    let (want, allowed) = row;
    let free = allowed & !want;
    // candidates differing by a span element give the same new span
    let mut tried: Vec<u16> = Vec::new();
    let mut sub = free;
    loop {
        let v = want | sub;
        let canon = span.iter().map(|&s| s ^ v).min().unwrap_or(v);
        if !tried.contains(&canon) {
            tried.push(canon);
            let old = span.len();
            for i in 0..old {
                let s = span[i];
                span.push(s ^ v);
            }
            min_rank_search(rows, idx + 1, span, rank + 1, best, floor);
            span.truncate(old);
            if *best <= floor {
                return;
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & free;
    }
}

/// Minimum rank over binary matrices with one row per node that has a one
/// on the node's wanted message and nonzeros only on messages the node's
/// user knows.
pub fn min_rank_gf2(icp: &IcpInstance) -> Result<usize> {
    min_rank_gf2_with(icp, OracleCaps::default())
}

pub fn min_rank_gf2_with(icp: &IcpInstance, caps: OracleCaps) -> Result<usize> {
    check_cap(icp.n_messages(), caps.min_rank_messages.min(16))?;
    if icp.n_nodes() == 0 {
        return Ok(0);
    }
    let rows = fitting_rows(icp);
    let floor = if icp.n_nodes() <= caps.mais_nodes.min(32) {
        mais_with(icp, caps)?
    } else {
        1
    };
    let mut best = rows.len().min(icp.n_messages()) + 1;
    let mut span = vec![0u16];
    min_rank_search(&rows, 0, &mut span, 0, &mut best, floor);
    Ok(best)
}

fn gf2_rank(rows: &[u16]) -> usize {
    let mut basis: Vec<u16> = Vec::new();
    for &r in rows {
        let mut v = r;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Enumerates every fitting matrix. Only for cross-checking; capped at 16
/// free entries.
pub fn naive_min_rank_gf2(icp: &IcpInstance) -> Result<usize> {
    let rows: Vec<(u16, u16)> = icp
        .nodes()
        .iter()
        .map(|node| {
            let want = 1u16 << node.message;
            let known = icp.users()[node.user]
                .known
                .iter()
                .fold(0u16, |acc, &m| acc | 1 << m);
            (want, known & !want)
        })
        .collect();
    let free: usize = rows.iter().map(|r| r.1.count_ones() as usize).sum();
    check_cap(free, 16)?;
    let mut best = usize::MAX;
    for pattern in 0u32..1 << free {
        let mut bits = pattern;
        let matrix: Vec<u16> = rows
            .iter()
            .map(|&(want, free_mask)| {
                let mut v = want;
                let mut f = free_mask;
                while f != 0 {
                    let b = f & f.wrapping_neg();
                    f &= f - 1;
                    if bits & 1 == 1 {
                        v |= b;
                    }
                    bits >>= 1;
                }
                v
            })
            .collect();
        best = best.min(gf2_rank(&matrix));
    }
    Ok(if rows.is_empty() { 0 } else { best })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::coloring::colorize_thm1;
    use crate::icp::{realize_single, realize_union, IcpUser, StructuredIcpDesc, UnionIcpDesc};

    fn clique(n: usize) -> IcpInstance {
        let users = (0..n)
            .map(|u| IcpUser {
                want: BTreeSet::from([u]),
                known: (0..n).filter(|&m| m != u).collect(),
            })
            .collect();
        IcpInstance::new(n, users).unwrap()
    }

    fn no_side_info(n: usize) -> IcpInstance {
        let users = (0..n)
            .map(|u| IcpUser {
                want: BTreeSet::from([u]),
                known: BTreeSet::new(),
            })
            .collect();
        IcpInstance::new(n, users).unwrap()
    }

    fn tiny_instances() -> Vec<IcpInstance> {
        let mut out = vec![clique(4), no_side_info(4), IcpInstance::empty()];
        for k in 2..=7 {
            for a1 in 0..k {
                for a2 in 0..k {
                    if a1 + a2 + 1 < k {
                        let z = k - 1 - a1 - a2;
                        out.push(realize_single(StructuredIcpDesc::new(a1, a2, z).unwrap()));
                        if a2 <= a1 && 2 * k <= 10 {
                            out.push(realize_union(UnionIcpDesc::new(a1, a2, z).unwrap()));
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn chi_l_examples() {
        assert_eq!(exhaustive_chi_l(&clique(6), 6).unwrap().0, 1);
        let u = realize_union(UnionIcpDesc::new(0, 0, 1).unwrap());
        let (chi, w) = exhaustive_chi_l(&u, 4).unwrap();
        assert_eq!(chi, 2);
        assert!(InterferenceGraph::new(&u).is_proper(&w));
        assert_eq!(naive_chi_l(&u, 4).unwrap(), Some(2));
        assert_eq!(exhaustive_chi_l(&no_side_info(5), 5).unwrap().0, 5);
    }

    #[test]
    fn chi_l_matches_naive() {
        for icp in tiny_instances() {
            let n = icp.n_nodes();
            for max_colors in [n.max(1), 3] {
                let naive = naive_chi_l(&icp, max_colors).unwrap();
                let fast = exhaustive_chi_l(&icp, max_colors).ok().map(|(c, _)| c);
                assert_eq!(fast, naive, "{} nodes, {max_colors} colors", n);
            }
        }
    }

    #[test]
    fn chi_l_k8_union_is_three() {
        let icp = realize_union(UnionIcpDesc::new(1, 0, 6).unwrap());
        let (chi, w) = exhaustive_chi_l(&icp, 16).unwrap();
        assert_eq!(chi, 3);
        let g = InterferenceGraph::new(&icp);
        assert!(g.is_proper(&w));
        assert_eq!(g.local_count(&w), 3);
    }

    #[test]
    fn chi_l_caps() {
        let big = clique(21);
        assert_eq!(
            exhaustive_chi_l(&big, 3),
            Err(Error::TooLarge { size: 21, cap: 20 })
        );
        let caps = OracleCaps {
            chi_nodes: 25,
            ..OracleCaps::default()
        };
        assert_eq!(exhaustive_chi_l_with(&big, 3, caps).unwrap().0, 1);
    }

    #[test]
    fn mais_examples() {
        assert_eq!(mais(&no_side_info(7)).unwrap(), 7);
        assert_eq!(mais(&clique(7)).unwrap(), 1);
        let s = realize_single(StructuredIcpDesc::new(1, 0, 2).unwrap());
        assert_eq!(mais(&s).unwrap(), naive_mais(&s).unwrap());
    }

    #[test]
    fn mais_matches_naive() {
        for icp in tiny_instances() {
            assert_eq!(mais(&icp).unwrap(), naive_mais(&icp).unwrap());
        }
    }

    #[test]
    fn duplicate_wants_count_once() {
        let users = vec![
            IcpUser {
                want: BTreeSet::from([0]),
                known: BTreeSet::new(),
            },
            IcpUser {
                want: BTreeSet::from([0]),
                known: BTreeSet::new(),
            },
        ];
        let icp = IcpInstance::new(1, users).unwrap();
        assert_eq!(mais(&icp).unwrap(), 1);
        assert_eq!(min_rank_gf2(&icp).unwrap(), 1);
    }

    #[test]
    fn duplicate_wants_share_a_color() {
        // users 0 and 2 both want x0 but only user 2 holds x1
        let user = |w: usize, k: &[usize]| IcpUser {
            want: BTreeSet::from([w]),
            known: k.iter().copied().collect(),
        };
        let icp = IcpInstance::new(
            3,
            vec![user(0, &[]), user(1, &[0]), user(0, &[1]), user(2, &[0, 1])],
        )
        .unwrap();
        let graph = InterferenceGraph::new(&icp);
        let (chi, w) = exhaustive_chi_l(&icp, 4).unwrap();
        assert!(graph.is_proper(&w) && graph.is_consistent(&w));
        assert_eq!(Some(chi), naive_chi_l(&icp, 4).unwrap());
        assert!(graph.is_consistent(&greedy_on(&graph)));
    }

    #[test]
    fn min_rank_examples() {
        assert_eq!(min_rank_gf2(&clique(6)).unwrap(), 1);
        assert_eq!(min_rank_gf2(&no_side_info(6)).unwrap(), 6);
        let u = realize_union(UnionIcpDesc::new(0, 0, 1).unwrap());
        assert_eq!(min_rank_gf2(&u).unwrap(), naive_min_rank_gf2(&u).unwrap());
        assert!(min_rank_gf2(&no_side_info(11)).is_err());
    }

    #[test]
    fn min_rank_matches_naive_where_enumerable() {
        let mut checked = 0;
        for icp in tiny_instances() {
            if let Ok(naive) = naive_min_rank_gf2(&icp) {
                assert_eq!(min_rank_gf2(&icp).unwrap(), naive);
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn sandwich_on_tiny_instances() {
        for icp in tiny_instances() {
            if icp.n_messages() > 10 {
                continue;
            }
            let lo = mais(&icp).unwrap();
            let mr = min_rank_gf2(&icp).unwrap();
            assert!(lo <= mr && mr <= icp.n_messages());
            if icp.n_nodes() > 0 {
                let (chi, _) = exhaustive_chi_l(&icp, icp.n_nodes()).unwrap();
                assert!(mr <= chi, "binary min-rank exceeds local chromatic number");
            }
        }
    }

    #[test]
    fn thm1_tightness_probe() {
        for k in 2..=10usize {
            for a1 in 0..k {
                for a2 in 0..=a1 {
                    if a1 + a2 + 2 > k {
                        continue;
                    }
                    let d = UnionIcpDesc::new(a1, a2, k - 1 - a1 - a2).unwrap();
                    let x = crate::rates::smallest_divisor_at_least(k, a1 + a2 + 2).unwrap();
                    let icp = realize_union(d);
                    let (chi, _) = exhaustive_chi_l(&icp, 2 * k).unwrap();
                    assert!(chi <= x);
                    let c = colorize_thm1(d, x).unwrap();
                    assert!(chi <= InterferenceGraph::new(&icp).local_count(&c));
                }
            }
        }
    }
}
