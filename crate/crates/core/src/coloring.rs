//! Proper colorings of the interference structure of an index coding
//! instance, the closed-form colorings for union instances, and the checkers.
//!
//! Node `v` *interferes* with node `u` when `v`'s wanted message is neither
//! known to `u`'s user nor equal to `u`'s wanted message. The relation is
//! not symmetric in general. A coloring is proper when no node shares its
//! color with one of its own interferers; the local count of a coloring is
//! the largest number of distinct colors in any `{u} ∪ interferers(u)`.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Result};
use crate::icp::{union_message, IcpInstance, Node, UnionIcpDesc};
use crate::macc::mod1;

/// Colors `1..=t` assigned to the nodes of an instance, in node order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Coloring {
    assignment: Vec<usize>,
    n_colors: usize,
}

impl TryFrom<Vec<usize>> for Coloring {
    type Error = crate::error::Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Coloring::new(v)
    }
}

impl From<Coloring> for Vec<usize> {
    fn from(c: Coloring) -> Self {
        c.assignment
    }
}

impl Coloring {
    /// Rejects color 0 and gaps in the used colors.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let used: BTreeSet<usize> = assignment.iter().copied().collect();
        if used.contains(&0) {
            return Err(invalid("colors are numbered from 1"));
        }
        let n_colors = used.len();
        if used.last().is_some_and(|&max| max != n_colors) {
            return Err(invalid("colors must be contiguous from 1"));
        }
        Ok(Self {
            assignment,
            n_colors,
        })
    }

    /// Relabels arbitrary color ids by order of first appearance.
    pub fn normalized(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignment = raw
            .iter()
            .map(|c| {
                let next = map.len() + 1;
                *map.entry(*c).or_insert(next)
            })
            .collect();
        Self {
            assignment,
            n_colors: map.len(),
        }
    }

    pub fn color(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn n_colors_used(&self) -> usize {
        self.n_colors
    }
}

/// Interferer lists of every node of an instance.
#[derive(Debug, Clone)]
pub struct InterferenceGraph {
    nodes: Vec<Node>,
    interferers: Vec<Vec<usize>>,
}

impl InterferenceGraph {
    pub fn new(icp: &IcpInstance) -> Self {
        let nodes = icp.nodes();
        let n_msg = icp.n_messages();
        let known: Vec<Vec<bool>> = icp
            .users()
            .iter()
            .map(|u| {
                let mut bits = vec![false; n_msg];
                for &m in &u.known {
                    bits[m] = true;
                }
                bits
            })
            .collect();
        let interferers = (0..nodes.len())
            .into_par_iter()
            .map(|u| {
                let Node { user, message } = nodes[u];
                nodes
                    .iter()
                    .enumerate()
                    .filter(|&(v, other)| {
                        v != u && other.message != message && !known[user][other.message]
                    })
                    .map(|(v, _)| v)
                    .collect()
            })
            .collect();
        Self { nodes, interferers }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn interferers(&self, node: usize) -> &[usize] {
        &self.interferers[node]
    }

    /// Symmetric closure: `v` conflicts with `u` if either interferes with
    /// the other.
    pub fn conflicts(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.n_nodes()];
        for (u, list) in self.interferers.iter().enumerate() {
            for &v in list {
                sets[u].insert(v);
                sets[v].insert(u);
            }
        }
        sets.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Nodes grouped by wanted message, groups ordered by their first node.
    pub fn message_groups(&self) -> Vec<Vec<usize>> {
        let mut by_msg: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (u, node) in self.nodes.iter().enumerate() {
            by_msg.entry(node.message).or_default().push(u);
        }
        let mut groups: Vec<Vec<usize>> = by_msg.into_values().collect();
        groups.sort_by_key(|g| g[0]);
        groups
    }

    /// Every message is drawn in a single color.
    pub fn is_consistent(&self, coloring: &Coloring) -> bool {
        self.message_groups()
            .iter()
            .all(|g| g.iter().all(|&u| coloring.color(u) == coloring.color(g[0])))
    }

    pub fn is_proper(&self, coloring: &Coloring) -> bool {
        assert_eq!(
            coloring.len(),
            self.n_nodes(),
            "coloring must cover every node"
        );
        self.interferers.iter().enumerate().all(|(u, list)| {
            let c = coloring.color(u);
            list.iter().all(|&v| coloring.color(v) != c)
        })
    }

    /// Distinct colors in the closed anti-outneighborhood of `node`.
    pub fn closed_count(&self, coloring: &Coloring, node: usize) -> usize {
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        seen.insert(coloring.color(node));
        seen.extend(self.interferers[node].iter().map(|&v| coloring.color(v)));
        seen.len()
    }

    pub fn local_count(&self, coloring: &Coloring) -> usize {
        assert_eq!(
            coloring.len(),
            self.n_nodes(),
            "coloring must cover every node"
        );
        let mut stamp = vec![usize::MAX; coloring.n_colors_used() + 1];
        let mut best = 0;
        for (u, list) in self.interferers.iter().enumerate() {
            let mut count = 0;
            for c in
                std::iter::once(coloring.color(u)).chain(list.iter().map(|&v| coloring.color(v)))
            {
                if stamp[c] != u {
                    stamp[c] = u;
                    count += 1;
                }
            }
            best = best.max(count);
        }
        best
    }
}

/// Interferers of `node` (0-based node index).
pub fn interferers(icp: &IcpInstance, node: usize) -> BTreeSet<usize> {
    InterferenceGraph::new(icp)
        .interferers(node)
        .iter()
        .copied()
        .collect()
}

pub fn is_proper(icp: &IcpInstance, coloring: &Coloring) -> bool {
    InterferenceGraph::new(icp).is_proper(coloring)
}

pub fn local_count(icp: &IcpInstance, coloring: &Coloring) -> usize {
    InterferenceGraph::new(icp).local_count(coloring)
}

/// Proper coloring of the union instance with `r_bar2` colors: node `(k,1)`
/// gets `<k>_R`, node `(k,2)` gets `<k + a1 + 1>_R`.
///
/// Needs `r_bar2 >= a1 + a2 + 2` and `r_bar2 | K`.
pub fn colorize_thm1(desc: UnionIcpDesc, r_bar2: usize) -> Result<Coloring> {
    let k = desc.k();
    if r_bar2 < desc.span() {
        return Err(precondition(format!(
            "R2={r_bar2} is below a1+a2+2={}",
            desc.span()
        )));
    }
    if !k.is_multiple_of(r_bar2) {
        return Err(precondition(format!("R2={r_bar2} does not divide K={k}")));
    }
    let mut assignment = vec![0; 2 * k];
    for user in 1..=k {
        assignment[union_message(user, 1)] = mod1(user as i64, r_bar2);
        assignment[union_message(user, 2)] = mod1((user + desc.a1 + 1) as i64, r_bar2);
    }
    Coloring::new(assignment)
}

/// Split factor used by [`colorize_thm2`]: `floor(K / (a1 + a2 + 2))`.
pub fn thm2_split(desc: UnionIcpDesc) -> usize {
    desc.k() / desc.span()
}

/// Coloring of the union instance with every message split into
/// `m = floor(K/(a1+a2+2))` parts, using at most `K` colors.
///
/// With `s = a1 + a2 + 2`, part `u` (1-based) of `x_{k,1}` gets color
/// `<k + (u-1)s>_K` and part `u` of `x_{k,2}` gets `<k + (u-1)s + a1 + 1>_K`.
/// Every closed anti-outneighborhood then sees the contiguous color run
/// `k - a2 ..= k + ms - 1`, so the local count is `min(ms + a2, K)`.
///
/// The coloring is aligned to the nodes of `realize_union(desc).split(m)`.
pub fn colorize_thm2(desc: UnionIcpDesc) -> Result<(Coloring, usize)> {
    let k = desc.k();
    let s = desc.span();
    if s > k {
        return Err(precondition(format!("a1+a2+2={s} exceeds K={k}")));
    }
    let m = thm2_split(desc);
    let mut raw = vec![0; 2 * k * m];
    for user in 1..=k {
        for u in 0..m {
            let odd = mod1((user + u * s) as i64, k);
            let even = mod1((user + u * s + desc.a1 + 1) as i64, k);
            raw[union_message(user, 1) * m + u] = odd;
            raw[union_message(user, 2) * m + u] = even;
        }
    }
    // the first parts alone already use every residue of K
    Ok((Coloring::new(raw)?, m))
}

/// First-fit coloring against the symmetric conflict closure. Messages are
/// taken in order of their first node and all nodes wanting a message share
/// its color.
pub fn greedy_coloring(icp: &IcpInstance) -> Coloring {
    let graph = InterferenceGraph::new(icp);
    greedy_on(&graph)
}

pub(crate) fn greedy_on(graph: &InterferenceGraph) -> Coloring {
    let conflicts = graph.conflicts();
    let mut color = vec![0usize; graph.n_nodes()];
    for group in graph.message_groups() {
        let taken: BTreeSet<usize> = group
            .iter()
            .flat_map(|&u| conflicts[u].iter().map(|&v| color[v]))
            .collect();
        let c = (1..).find(|c| !taken.contains(c)).expect("unbounded range");
        for &u in &group {
            color[u] = c;
        }
    }
    Coloring::new(color).expect("first-fit colors are contiguous")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::icp::{realize_single, realize_union, IcpUser, StructuredIcpDesc};

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

    #[test]
    fn interferers_examples() {
        let c = clique(5);
        assert!((0..5).all(|u| interferers(&c, u).is_empty()));

        let single = realize_single(StructuredIcpDesc::new(1, 0, 6).unwrap());
        for k in 1..=8usize {
            let expect = BTreeSet::from([mod1(k as i64 + 1, 8) - 1]);
            assert_eq!(interferers(&single, k - 1), expect);
        }

        let d = UnionIcpDesc::new(2, 2, 9).unwrap();
        let union = realize_union(d);
        for k in 1..=14usize {
            let got = interferers(&union, union_message(k, 1));
            let mut expect = BTreeSet::new();
            for off in [-2i64, -1, 1, 2] {
                expect.insert(union_message(mod1(k as i64 + off, 14), 1));
            }
            for off in -2i64..=2 {
                expect.insert(union_message(mod1(k as i64 + off, 14), 2));
            }
            assert_eq!(got.len(), 9);
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn proper_and_local_count_basics() {
        let single = realize_single(StructuredIcpDesc::new(1, 0, 6).unwrap());
        let rainbow = Coloring::new((1..=8).collect()).unwrap();
        assert!(is_proper(&single, &rainbow));
        assert_eq!(local_count(&single, &rainbow), 2);
        let mono = Coloring::new(vec![1; 8]).unwrap();
        assert!(!is_proper(&single, &mono));

        let c = clique(4);
        let mono = Coloring::new(vec![1; 4]).unwrap();
        assert!(is_proper(&c, &mono));
        assert_eq!(local_count(&c, &mono), 1);
    }

    #[test]
    fn coloring_validation_and_json() {
        assert!(Coloring::new(vec![1, 3]).is_err());
        assert!(Coloring::new(vec![0, 1]).is_err());
        let c = Coloring::new(vec![2, 1, 2]).unwrap();
        assert_eq!(c.n_colors_used(), 2);
        assert_eq!(serde_json::to_string(&c).unwrap(), "[2,1,2]");
        let back: Coloring = serde_json::from_str("[2,1,2]").unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<Coloring>("[1,4]").is_err());
        assert_eq!(
            Coloring::normalized(&[7, 3, 7, 9]).as_slice(),
            &[1, 2, 1, 3]
        );
    }

    #[test]
    fn thm1_examples() {
        let d = UnionIcpDesc::new(2, 2, 9).unwrap();
        let c = colorize_thm1(d, 7).unwrap();
        for k in 1..=14usize {
            assert_eq!(c.color(union_message(k, 1)), mod1(k as i64, 7));
            assert_eq!(c.color(union_message(k, 2)), mod1(k as i64 + 3, 7));
        }
        let union = realize_union(d);
        assert!(is_proper(&union, &c));
        assert!(local_count(&union, &c) <= 7);

        let even = UnionIcpDesc::new(0, 0, 5).unwrap();
        let c = colorize_thm1(even, 2).unwrap();
        assert!(is_proper(&realize_union(even), &c));
        assert_eq!(c.color(union_message(1, 1)), 1);
        assert_eq!(c.color(union_message(1, 2)), 2);

        let d = UnionIcpDesc::new(1, 0, 6).unwrap();
        let c = colorize_thm1(d, 4).unwrap();
        assert_eq!(c.n_colors_used(), 4);
        assert!(is_proper(&realize_union(d), &c));

        assert!(colorize_thm1(UnionIcpDesc::new(2, 2, 9).unwrap(), 5).is_err());
        assert!(colorize_thm1(UnionIcpDesc::new(2, 2, 9).unwrap(), 8).is_err());
    }

    #[test]
    fn thm1_color_multiplicity() {
        let d = UnionIcpDesc::new(3, 1, 7).unwrap(); // K = 12
        let c = colorize_thm1(d, 6).unwrap();
        for col in 1..=2 {
            for color in 1..=6 {
                let n = (1..=12)
                    .filter(|&k| c.color(union_message(k, col)) == color)
                    .count();
                assert_eq!(n, 2);
            }
        }
    }

    #[test]
    fn thm2_k8_instance() {
        let d = UnionIcpDesc::new(1, 0, 6).unwrap();
        let (c, m) = colorize_thm2(d).unwrap();
        assert_eq!(m, 2);
        assert_eq!(c.len(), 32);
        let split = realize_union(d).split(m).unwrap();
        assert!(is_proper(&split, &c));
        assert_eq!(local_count(&split, &c), 6);
    }

    #[test]
    fn thm2_trivial_pair() {
        let d = UnionIcpDesc::new(0, 0, 1).unwrap();
        let (c, m) = colorize_thm2(d).unwrap();
        assert_eq!(m, 1);
        assert_eq!(c.n_colors_used(), 2);
        let split = realize_union(d).split(m).unwrap();
        assert!(is_proper(&split, &c));
        assert_eq!(local_count(&split, &c), 2);
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_coloring(&clique(6)).n_colors_used(), 1);
        assert_eq!(greedy_coloring(&no_side_info(5)).n_colors_used(), 5);
        let single = realize_single(StructuredIcpDesc::new(1, 0, 6).unwrap());
        let g = greedy_coloring(&single);
        assert!(is_proper(&single, &g));
        assert!(g.n_colors_used() <= 3);
    }
}
