//! Finite-field linear algebra behind coloring-based index codes: MDS
//! generators, the encoder that turns a proper coloring into broadcast
//! combinations, and the span test that decides whether a user decodes.

mod field;
mod matrix;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use field::{Field, FieldSpec, DEFAULT_W};
pub use matrix::{Matrix, RowEchelon};

use crate::coloring::{Coloring, InterferenceGraph};
use crate::error::{invalid, precondition, Error, Result};
use crate::icp::IcpInstance;

/// A column of a transmission matrix: part `split` of message `message`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MessageId {
    pub message: usize,
    pub split: usize,
}

/// The server broadcast: each row is one transmitted linear combination of
/// the (split) messages in `message_order`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SchemeWire", try_from = "SchemeWire")]
pub struct TransmissionScheme {
    pub field: FieldSpec,
    pub message_order: Vec<MessageId>,
    pub coefficients: Matrix,
    pub split_factor: usize,
}

impl TransmissionScheme {
    /// A scheme that sends nothing.
    pub fn empty(field: FieldSpec, message_order: Vec<MessageId>, split_factor: usize) -> Self {
        let cols = message_order.len();
        Self {
            field,
            message_order,
            coefficients: Matrix::zeros(0, cols),
            split_factor,
        }
    }

    /// Sends every split message uncoded, one per transmission.
    pub fn uncoded(field: FieldSpec, message_order: Vec<MessageId>, split_factor: usize) -> Self {
        let cols = message_order.len();
        Self {
            field,
            message_order,
            coefficients: Matrix::identity(cols),
            split_factor,
        }
    }

    pub fn n_transmissions(&self) -> usize {
        self.coefficients.rows()
    }

    /// Rate in file units when each unsplit message is `1/subpacketization`
    /// of a file.
    pub fn rate(&self, subpacketization: usize) -> num_rational::Ratio<i64> {
        num_rational::Ratio::new(
            self.n_transmissions() as i64,
            (subpacketization * self.split_factor) as i64,
        )
    }

    pub fn without_transmission(&self, row: usize) -> Self {
        Self {
            coefficients: self.coefficients.without_row(row),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scheme serialization is infallible")
    }
}

/// JSON form of a scheme: coefficient rows are hex strings, two digits per
/// element for `w <= 8`, four (big-endian) above.
#[derive(Serialize, Deserialize)]
struct SchemeWire {
    field: FieldSpec,
    message_order: Vec<(usize, usize)>,
    split_factor: usize,
    n_transmissions: usize,
    coefficients: Vec<String>,
}

impl From<TransmissionScheme> for SchemeWire {
    fn from(s: TransmissionScheme) -> Self {
        let wide = s.field.w > 8;
        let coefficients = s
            .coefficients
            .row_iter()
            .map(|row| {
                let bytes: Vec<u8> = if wide {
                    row.iter().flat_map(|v| v.to_be_bytes()).collect()
                } else {
                    row.iter().map(|&v| v as u8).collect()
                };
                hex::encode(bytes)
            })
            .collect();
        Self {
            field: s.field,
            message_order: s
                .message_order
                .iter()
                .map(|m| (m.message, m.split))
                .collect(),
            split_factor: s.split_factor,
            n_transmissions: s.coefficients.rows(),
            coefficients,
        }
    }
}

impl TryFrom<SchemeWire> for TransmissionScheme {
    type Error = Error;

    fn try_from(w: SchemeWire) -> Result<Self> {
        w.field.validate()?;
        let cols = w.message_order.len();
        let wide = w.field.w > 8;
        let mut coefficients = Matrix::zeros(0, cols);
        for text in &w.coefficients {
            let bytes = hex::decode(text).map_err(|e| invalid(format!("bad hex row: {e}")))?;
            let row: Vec<u16> = if wide {
                bytes
                    .chunks(2)
                    .map(|c| u16::from_be_bytes([c[0], *c.get(1).unwrap_or(&0)]))
                    .collect()
            } else {
                bytes.iter().map(|&b| b as u16).collect()
            };
            if row.len() != cols || (wide && bytes.len() % 2 != 0) {
                return Err(invalid(
                    "coefficient row length does not match message order",
                ));
            }
            if row.iter().any(|&v| v as usize >= w.field.size()) {
                return Err(invalid("coefficient outside the field"));
            }
            coefficients.push_row(&row);
        }
        if coefficients.rows() != w.n_transmissions {
            return Err(invalid(
                "transmission count does not match coefficient rows",
            ));
        }
        Ok(Self {
            field: w.field,
            message_order: w
                .message_order
                .into_iter()
                .map(|(message, split)| MessageId { message, split })
                .collect(),
            coefficients,
            split_factor: w.split_factor,
        })
    }
}

/// `rows x cols` Vandermonde matrix on the points `0, 1, ..., cols-1`
/// (as field elements): every `rows x rows` column minor is invertible.
pub fn mds_generator(rows: usize, cols: usize, field: FieldSpec) -> Result<Matrix> {
    if rows > cols {
        return Err(precondition(format!(
            "MDS generator needs rows <= cols, got {rows} x {cols}"
        )));
    }
    if cols > field.size() {
        return Err(Error::FieldTooSmall {
            w: field.w,
            size: field.size(),
            needed: cols,
        });
    }
    let f = field.field();
    let mut g = Matrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            g.set(r, c, f.pow(c as u16, r));
        }
    }
    Ok(g)
}

/// Row rank over the field.
pub fn rank(matrix: &Matrix, field: FieldSpec) -> usize {
    matrix.rank(field.field())
}

/// Color of each message, taken from the nodes that want it. Nodes wanting
/// the same message must agree.
fn message_colors(icp: &IcpInstance, coloring: &Coloring) -> Result<Vec<Option<usize>>> {
    let mut colors = vec![None; icp.n_messages()];
    for (idx, node) in icp.nodes().iter().enumerate() {
        let c = coloring.color(idx);
        match colors[node.message] {
            None => colors[node.message] = Some(c),
            Some(prev) if prev != c => {
                return Err(Error::InconsistentColoring {
                    message: node.message,
                })
            }
            _ => {}
        }
    }
    Ok(colors)
}

/// Local-coloring index code: with `t` colors and local count `chi`, send
/// `y = G s` where `s_c` is the sum of the messages colored `c` and `G` is a
/// `chi x t` MDS generator. A user subtracts the color classes it fully
/// knows and is left with at most `chi` unknown classes, each holding one
/// message it lacks.
pub fn encode(
    icp: &IcpInstance,
    coloring: &Coloring,
    field: FieldSpec,
) -> Result<TransmissionScheme> {
    encode_with_rows(icp, coloring, field, None)
}

/// [`encode`] with an explicit number of transmissions between the local
/// count and the number of colors; `rows = t` is the plain chromatic code.
pub fn encode_with_rows(
    icp: &IcpInstance,
    coloring: &Coloring,
    field: FieldSpec,
    rows: Option<usize>,
) -> Result<TransmissionScheme> {
    let split = icp.split_factor();
    let message_order: Vec<MessageId> = (0..icp.n_messages())
        .map(|m| MessageId {
            message: m / split,
            split: m % split,
        })
        .collect();
    if coloring.len() != icp.n_nodes() {
        return Err(invalid(format!(
            "coloring has {} entries for {} nodes",
            coloring.len(),
            icp.n_nodes()
        )));
    }
    if coloring.is_empty() {
        return Ok(TransmissionScheme::empty(field, message_order, split));
    }
    let graph = InterferenceGraph::new(icp);
    if !graph.is_proper(coloring) {
        return Err(Error::ImproperColoring);
    }
    let colors = message_colors(icp, coloring)?;
    let mut chi = graph.local_count(coloring);
    if let Some(rows) = rows {
        if rows < chi || rows > coloring.n_colors_used() {
            return Err(precondition(format!(
                "{rows} transmissions outside [local count {chi}, colors {}]",
                coloring.n_colors_used()
            )));
        }
        chi = rows;
    }
    let g = mds_generator(chi, coloring.n_colors_used(), field)?;
    let mut coefficients = Matrix::zeros(chi, icp.n_messages());
    for (m, color) in colors.iter().enumerate() {
        if let Some(c) = color {
            for r in 0..chi {
                coefficients.set(r, m, g.get(r, c - 1));
            }
        }
    }
    Ok(TransmissionScheme {
        field,
        message_order,
        coefficients,
        split_factor: split,
    })
}

fn echelon_for(scheme: &TransmissionScheme, unknown: &[usize]) -> RowEchelon {
    let f = scheme.field.field();
    let mut basis = RowEchelon::new(unknown.len());
    for row in scheme.coefficients.row_iter() {
        basis.insert(f, unknown.iter().map(|&c| row[c]).collect());
    }
    basis
}

fn decodes_with(
    scheme: &TransmissionScheme,
    basis: &RowEchelon,
    unknown: &[usize],
    want: impl Iterator<Item = usize>,
) -> bool {
    let f = scheme.field.field();
    let pos: HashMap<usize, usize> = unknown.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    for w in want {
        match pos.get(&w) {
            Some(&col) if basis.contains_unit(f, col) => {}
            _ => return false,
        }
    }
    true
}

/// Whether `user` recovers every wanted message: after removing the known
/// coordinates from each transmission, each wanted unit vector must lie in
/// the span of what remains.
pub fn can_decode(scheme: &TransmissionScheme, icp: &IcpInstance, user: usize) -> bool {
    if scheme.coefficients.cols() != icp.n_messages() {
        return false;
    }
    let u = &icp.users()[user];
    let unknown: Vec<usize> = (0..icp.n_messages())
        .filter(|m| !u.known.contains(m))
        .collect();
    let basis = echelon_for(scheme, &unknown);
    decodes_with(scheme, &basis, &unknown, u.want.iter().copied())
}

/// [`can_decode`] for every user.
///
/// Transmissions are first grouped into blocks with disjoint column
/// supports; a unit vector lies in the span of all rows iff it lies in the
/// span of its own block, so each block is eliminated separately. Within a
/// block, users with identical side information share one elimination.
pub fn decode_all(scheme: &TransmissionScheme, icp: &IcpInstance) -> Vec<bool> {
    let n = icp.n_messages();
    if scheme.coefficients.cols() != n {
        return vec![false; icp.users().len()];
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for row in scheme.coefficients.row_iter() {
        let mut support = row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(c, _)| c);
        if let Some(first) = support.next() {
            let a = find(&mut parent, first);
            for c in support {
                let b = find(&mut parent, c);
                parent[b] = a;
            }
        }
    }
    let root: Vec<usize> = (0..n).map(|c| find(&mut parent, c)).collect();
    let mut block_rows: HashMap<usize, Vec<usize>> = HashMap::new();
    for (r, row) in scheme.coefficients.row_iter().enumerate() {
        if let Some(c) = row.iter().position(|&v| v != 0) {
            block_rows.entry(root[c]).or_default().push(r);
        }
    }
    let mut block_cols: HashMap<usize, Vec<usize>> = HashMap::new();
    for (c, r) in root.iter().enumerate() {
        if block_rows.contains_key(r) {
            block_cols.entry(*r).or_default().push(c);
        }
    }

    let f = scheme.field.field();
    let mut ok: Vec<bool> = icp
        .users()
        .iter()
        .map(|u| u.want.iter().all(|w| block_rows.contains_key(&root[*w])))
        .collect();
    let mut blocks: Vec<usize> = block_rows.keys().copied().collect();
    blocks.sort_unstable();
    for b in blocks {
        let rows = &block_rows[&b];
        let cols = &block_cols[&b];
        let mut cache: HashMap<Vec<usize>, (Vec<usize>, RowEchelon)> = HashMap::new();
        for (u, user) in icp.users().iter().enumerate() {
            if !ok[u] {
                continue;
            }
            let wanted: Vec<usize> = user
                .want
                .iter()
                .copied()
                .filter(|w| root[*w] == b)
                .collect();
            if wanted.is_empty() {
                continue;
            }
            let unknown: Vec<usize> = cols
                .iter()
                .copied()
                .filter(|c| !user.known.contains(c))
                .collect();
            let (unknown, basis) = cache.entry(unknown.clone()).or_insert_with(|| {
                let mut basis = RowEchelon::new(unknown.len());
                for &r in rows {
                    let row = scheme.coefficients.row(r);
                    basis.insert(f, unknown.iter().map(|&c| row[c]).collect());
                }
                (unknown, basis)
            });
            ok[u] = decodes_with(scheme, basis, unknown, wanted.into_iter());
        }
    }
    ok
}
