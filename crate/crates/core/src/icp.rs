//! Index coding problems: the generic representation, the cyclic structured
//! families `(a1,a2)_z` and their unions, and the reduction of a MACC
//! delivery problem to a table of structured columns.
//!
//! ICP messages, users and nodes are 0-based. A *node* is one (user, wanted
//! message) pair; nodes are enumerated user by user, wanted messages in
//! ascending order, so for single-unicast instances node `n` is user `n`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Result};
use crate::macc::{mod1, DemandProfile, MaccInstance};

/// One ICP user: the messages it wants and the messages it already holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcpUser {
    pub want: BTreeSet<usize>,
    pub known: BTreeSet<usize>,
}

/// One virtual user of the single-unicast view of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    pub user: usize,
    pub message: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcpInstance {
    n_messages: usize,
    users: Vec<IcpUser>,
    #[serde(default)]
    labels: BTreeMap<usize, String>,
    /// When greater than one, message `j * split_factor + s` is part `s` of
    /// base message `j`.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    split_factor: usize,
}

fn one() -> usize {
    1
}

fn is_one(v: &usize) -> bool {
    *v == 1
}

impl IcpInstance {
    pub fn new(n_messages: usize, users: Vec<IcpUser>) -> Result<Self> {
        let inst = Self {
            n_messages,
            users,
            labels: BTreeMap::new(),
            split_factor: 1,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// An instance with no messages and no users.
    pub fn empty() -> Self {
        Self {
            n_messages: 0,
            users: Vec::new(),
            labels: BTreeMap::new(),
            split_factor: 1,
        }
    }

    pub fn with_labels(mut self, labels: BTreeMap<usize, String>) -> Self {
        self.labels = labels;
        self
    }

    /// Checks the structural invariants; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        for (u, user) in self.users.iter().enumerate() {
            if user.want.is_empty() {
                return Err(invalid(format!("user {u} wants nothing")));
            }
            if let Some(m) = user
                .want
                .iter()
                .chain(user.known.iter())
                .find(|&&m| m >= self.n_messages)
            {
                return Err(invalid(format!(
                    "user {u} references message {m} >= {}",
                    self.n_messages
                )));
            }
            if let Some(m) = user.want.intersection(&user.known).next() {
                return Err(invalid(format!(
                    "user {u} both wants and knows message {m}"
                )));
            }
        }
        if self.split_factor == 0 || !self.n_messages.is_multiple_of(self.split_factor) {
            return Err(invalid("split factor must divide the message count"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self =
            serde_json::from_str(text).map_err(|e| invalid(format!("bad ICP JSON: {e}")))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ICP serialization is infallible")
    }

    pub fn n_messages(&self) -> usize {
        self.n_messages
    }

    pub fn users(&self) -> &[IcpUser] {
        &self.users
    }

    pub fn labels(&self) -> &BTreeMap<usize, String> {
        &self.labels
    }

    pub fn split_factor(&self) -> usize {
        self.split_factor
    }

    pub fn nodes(&self) -> Vec<Node> {
        self.users
            .iter()
            .enumerate()
            .flat_map(|(user, u)| u.want.iter().map(move |&message| Node { user, message }))
            .collect()
    }

    pub fn n_nodes(&self) -> usize {
        self.users.iter().map(|u| u.want.len()).sum()
    }

    /// Splits every message into `m` equal parts. Each user wants (knows)
    /// every part of the messages it wanted (knew).
    pub fn split(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(invalid("split factor must be positive"));
        }
        let expand = |set: &BTreeSet<usize>| -> BTreeSet<usize> {
            set.iter()
                .flat_map(|&j| (0..m).map(move |s| j * m + s))
                .collect()
        };
        let users = self
            .users
            .iter()
            .map(|u| IcpUser {
                want: expand(&u.want),
                known: expand(&u.known),
            })
            .collect();
        let labels = self
            .labels
            .iter()
            .flat_map(|(&j, l)| (0..m).map(move |s| (j * m + s, format!("{l}^{}", s + 1))))
            .collect();
        Ok(Self {
            n_messages: self.n_messages * m,
            users,
            labels,
            split_factor: self.split_factor * m,
        })
    }

    /// Sub-instance induced by a set of messages: users are kept only if they
    /// want something in the set, side information is intersected with it.
    /// Messages are renumbered in ascending order of `keep`.
    pub fn induced(&self, keep: &BTreeSet<usize>) -> Self {
        let renumber: HashMap<usize, usize> = keep
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let map_set = |set: &BTreeSet<usize>| -> BTreeSet<usize> {
            set.iter()
                .filter_map(|m| renumber.get(m).copied())
                .collect()
        };
        let users = self
            .users
            .iter()
            .map(|u| IcpUser {
                want: map_set(&u.want),
                known: map_set(&u.known),
            })
            .filter(|u| !u.want.is_empty())
            .collect();
        let labels = self
            .labels
            .iter()
            .filter_map(|(m, l)| renumber.get(m).map(|&n| (n, l.clone())))
            .collect();
        Self {
            n_messages: keep.len(),
            users,
            labels,
            split_factor: 1,
        }
    }
}

/// Descriptor of the cyclic single-unicast `(a1,a2)_z` family on
/// `K = a1 + a2 + z + 1` users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructuredIcpDesc {
    pub a1: usize,
    pub a2: usize,
    pub z: usize,
}

impl StructuredIcpDesc {
    pub fn new(a1: usize, a2: usize, z: usize) -> Result<Self> {
        if z == 0 {
            return Err(invalid("side-information run length z must be >= 1"));
        }
        Ok(Self { a1, a2, z })
    }

    pub fn k(&self) -> usize {
        self.a1 + self.a2 + self.z + 1
    }
}

/// Descriptor of the union of `(a1,a2)_z` and `(a2,a1)_z` over disjoint
/// messages; each user wants two messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnionIcpDesc {
    pub a1: usize,
    pub a2: usize,
    pub z: usize,
}

impl UnionIcpDesc {
    pub fn new(a1: usize, a2: usize, z: usize) -> Result<Self> {
        if z == 0 {
            return Err(invalid("side-information run length z must be >= 1"));
        }
        if a2 > a1 {
            return Err(invalid(format!(
                "union descriptor needs a2 <= a1, got ({a1}, {a2})"
            )));
        }
        Ok(Self { a1, a2, z })
    }

    pub fn k(&self) -> usize {
        self.a1 + self.a2 + self.z + 1
    }

    /// `a1 + a2 + 2`, the stride shared by all bounds on this family.
    pub fn span(&self) -> usize {
        self.a1 + self.a2 + 2
    }
}

fn cyclic_run(k: usize, user: usize, offset: usize, z: usize) -> impl Iterator<Item = usize> {
    // 1-based user `user`; returns 0-based message positions
    (1..=z).map(move |r| mod1((user + offset + r) as i64, k) - 1)
}

/// User `k` wants `x_k` and knows `x_{<k+a1+r>_K}` for `r` in `1..=z`.
pub fn realize_single(desc: StructuredIcpDesc) -> IcpInstance {
    let k = desc.k();
    let users = (1..=k)
        .map(|user| IcpUser {
            want: BTreeSet::from([user - 1]),
            known: cyclic_run(k, user, desc.a1, desc.z).collect(),
        })
        .collect();
    let labels = (0..k).map(|m| (m, format!("x_{}", m + 1))).collect();
    IcpInstance {
        n_messages: k,
        users,
        labels,
        split_factor: 1,
    }
}

/// Message index of `x_{k,t}` (1-based `k`, `t` in {1, 2}) in
/// [`realize_union`].
pub fn union_message(user: usize, t: usize) -> usize {
    2 * (user - 1) + (t - 1)
}

/// User `k` wants `x_{k,1}, x_{k,2}` and knows `x_{b,t}` for
/// `b = <k + a_t + r>_K`, `r` in `1..=z`, with `a_1 = a1`, `a_2 = a2`.
pub fn realize_union(desc: UnionIcpDesc) -> IcpInstance {
    let k = desc.k();
    let users = (1..=k)
        .map(|user| {
            let mut known = BTreeSet::new();
            for (t, offset) in [(1, desc.a1), (2, desc.a2)] {
                for b in cyclic_run(k, user, offset, desc.z) {
                    known.insert(union_message(b + 1, t));
                }
            }
            IcpUser {
                want: BTreeSet::from([union_message(user, 1), union_message(user, 2)]),
                known,
            }
        })
        .collect();
    let labels = (1..=k)
        .flat_map(|b| (1..=2).map(move |t| (union_message(b, t), format!("x_{{{b},{t}}}"))))
        .collect();
    IcpInstance {
        n_messages: 2 * k,
        users,
        labels,
        split_factor: 1,
    }
}

/// A subfile delivered by the server: part `subfile` of file `file`, readable
/// by users `first_user ..= last_user` (circular).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubfileMessage {
    pub file: usize,
    pub subfile: usize,
    pub first_user: usize,
    pub last_user: usize,
}

/// The `K x (K - iL)` table of subfiles the users still need. Node `(p, q)`
/// is the subfile of file `d_p` readable by users `[<p+q>_K : <p+q+iL-1>_K]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcpTable {
    instance: MaccInstance,
    demands: DemandProfile,
    cols: usize,
    nodes: Vec<usize>,
    messages: Vec<SubfileMessage>,
    column_descs: Vec<StructuredIcpDesc>,
}

/// How the table columns pair up into union instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnPairing {
    /// `(descriptor, first column, partner column)`, 1-based columns.
    pub unions: Vec<(UnionIcpDesc, usize, usize)>,
    /// The unpaired middle column when `K - iL` is odd.
    pub middle: Option<(StructuredIcpDesc, usize)>,
}

impl IcpTable {
    pub fn instance(&self) -> &MaccInstance {
        &self.instance
    }

    pub fn demands(&self) -> &DemandProfile {
        &self.demands
    }

    pub fn rows(&self) -> usize {
        self.instance.k()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.cols == 0
    }

    /// Message index of node `(p, q)`, both 1-based.
    pub fn node(&self, p: usize, q: usize) -> usize {
        assert!((1..=self.rows()).contains(&p) && (1..=self.cols).contains(&q));
        self.nodes[(p - 1) * self.cols + (q - 1)]
    }

    pub fn messages(&self) -> &[SubfileMessage] {
        &self.messages
    }

    pub fn n_messages(&self) -> usize {
        self.messages.len()
    }

    pub fn column_descs(&self) -> &[StructuredIcpDesc] {
        &self.column_descs
    }

    /// True when MACC user `user` can read message `msg` from its caches.
    pub fn user_knows(&self, user: usize, msg: usize) -> bool {
        let m = &self.messages[msg];
        let k = self.instance.k();
        let offset = (user + k - m.first_user) % k;
        offset < self.instance.coverage()
    }

    pub fn label(&self, msg: usize) -> String {
        let m = &self.messages[msg];
        format!("F_{{{},[{}:{}]}}", m.file, m.first_user, m.last_user)
    }

    /// Columns `j` and `K-iL-j+1` pair into the union
    /// `(K-iL-j, j-1)_{iL}`; for odd `K-iL` the middle column is left over.
    pub fn column_pairing(&self) -> ColumnPairing {
        let n = self.cols;
        let z = self.instance.coverage();
        let unions = (1..=n / 2)
            .map(|j| {
                let desc = UnionIcpDesc::new(n - j, j - 1, z).expect("a2 <= a1 for j <= n/2");
                (desc, j, n - j + 1)
            })
            .collect();
        let middle = (n % 2 == 1).then(|| {
            let c = (n - 1) / 2;
            (StructuredIcpDesc::new(c, c, z).expect("z = iL >= 1"), c + 1)
        });
        ColumnPairing { unions, middle }
    }
}

/// Builds the table of needed subfiles. Repeated (file, subfile) pairs map to
/// one message; message indices follow first appearance in row-major order.
pub fn reduce_macc(instance: &MaccInstance, demands: &DemandProfile) -> Result<IcpTable> {
    if instance.i() == 0 {
        return Err(precondition("reduction needs memory index i >= 1"));
    }
    if demands.as_slice().len() != instance.k() {
        return Err(invalid("demand profile does not match the instance"));
    }
    let k = instance.k();
    let il = instance.coverage();
    let cols = instance.n_needed();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut messages = Vec::new();
    let mut nodes = Vec::with_capacity(k * cols);
    for p in 1..=k {
        for q in 1..=cols {
            let first = mod1((p + q) as i64, k);
            let last = mod1((p + q + il - 1) as i64, k);
            let file = demands.file(p);
            let subfile = instance.subfile_for_interval(first);
            let msg = *index.entry((file, subfile)).or_insert_with(|| {
                messages.push(SubfileMessage {
                    file,
                    subfile,
                    first_user: first,
                    last_user: last,
                });
                messages.len() - 1
            });
            nodes.push(msg);
        }
    }
    let column_descs = (1..=cols)
        .map(|j| StructuredIcpDesc::new(cols - j, j - 1, il))
        .collect::<Result<_>>()?;
    Ok(IcpTable {
        instance: *instance,
        demands: demands.clone(),
        cols,
        nodes,
        messages,
        column_descs,
    })
}

/// Single-unicast view of the table: one virtual user per node in row-major
/// order, holding everything its row's MACC user can read.
pub fn as_icp(table: &IcpTable) -> IcpInstance {
    if table.is_empty() {
        return IcpInstance::empty();
    }
    let n = table.n_messages();
    let mut users = Vec::with_capacity(table.rows() * table.cols());
    for p in 1..=table.rows() {
        let known: BTreeSet<usize> = (0..n).filter(|&m| table.user_knows(p, m)).collect();
        for q in 1..=table.cols() {
            users.push(IcpUser {
                want: BTreeSet::from([table.node(p, q)]),
                known: known.clone(),
            });
        }
    }
    let labels = (0..n).map(|m| (m, table.label(m))).collect();
    IcpInstance {
        n_messages: n,
        users,
        labels,
        split_factor: 1,
    }
}

/// Union descriptors of the column pairs, plus the middle column's
/// descriptor when `K - iL` is odd.
pub fn pair_columns(table: &IcpTable) -> (Vec<UnionIcpDesc>, Option<StructuredIcpDesc>) {
    let pairing = table.column_pairing();
    (
        pairing.unions.into_iter().map(|(d, _, _)| d).collect(),
        pairing.middle.map(|(d, _)| d),
    )
}
