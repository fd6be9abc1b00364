//! End-to-end delivery: reduce the MACC instance to its table, pair the
//! columns into union instances, color and encode each one, lift everything
//! into one broadcast over the table messages and verify every user.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coloring::{colorize_thm1, colorize_thm2, greedy_on, Coloring, InterferenceGraph};
use crate::error::{invalid, precondition, Error, Result};
use crate::icp::{
    as_icp, realize_single, realize_union, reduce_macc, IcpInstance, IcpTable, StructuredIcpDesc,
    UnionIcpDesc,
};
use crate::linalg_ff::{
    decode_all, encode_with_rows, FieldSpec, Matrix, MessageId, TransmissionScheme,
};
use crate::macc::{DemandProfile, MaccInstance};
use crate::oracle::{exhaustive_chi_l_with, OracleCaps};
use crate::rates::{r3, r4, r5_f5, smallest_divisor_at_least, RateReport};

pub type Rational = Ratio<i64>;

/// Which family of colorings to use for every column pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Best of the divisor coloring, first-fit and (on small pairs) exact
    /// search; split factor 1.
    Linear,
    /// Split coloring with `m = floor(K / (K - iL + 1))` parts per message.
    Quadratic,
    /// Divisor coloring with `X` colors; `None` picks the smallest valid `X`.
    Divisor(Option<usize>),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Linear => write!(f, "linear"),
            Mode::Quadratic => write!(f, "quadratic"),
            Mode::Divisor(None) => write!(f, "divisor"),
            Mode::Divisor(Some(x)) => write!(f, "divisor({x})"),
        }
    }
}

/// How a pair's coloring was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Construction {
    Thm1 { r_bar2: usize },
    Thm2 { m: usize },
    Greedy,
    Exhaustive,
    Clique,
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Construction::Thm1 { r_bar2 } => write!(f, "thm1({r_bar2})"),
            Construction::Thm2 { m } => write!(f, "thm2(m={m})"),
            Construction::Greedy => write!(f, "greedy"),
            Construction::Exhaustive => write!(f, "exhaustive"),
            Construction::Clique => write!(f, "clique"),
        }
    }
}

/// Where a pair's instance sits in the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairSlot {
    /// Columns `first` and `second` (1-based); `x_{k,1}` is node `(k,
    /// first)`, `x_{k,2}` is node `(k, second)`.
    Union { first: usize, second: usize },
    /// The middle column with every message halved; `x_{k,1}` and `x_{k,2}`
    /// are the two halves of node `(k, column)`.
    HalvedMiddle { column: usize },
    /// The middle column as a single instance (clique case `K - iL = 1`).
    Middle { column: usize },
}

/// One column pair (or the middle column) with its scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPlan {
    pub desc: UnionIcpDesc,
    pub slot: PairSlot,
    pub construction: Construction,
    pub local_count: usize,
    pub scheme: TransmissionScheme,
}

impl PairPlan {
    /// The instance `scheme` is written against.
    pub fn instance(&self) -> IcpInstance {
        let base = match self.slot {
            PairSlot::Middle { .. } => realize_single(StructuredIcpDesc {
                a1: self.desc.a1,
                a2: self.desc.a2,
                z: self.desc.z,
            }),
            _ => realize_union(self.desc),
        };
        if self.scheme.split_factor > 1 {
            base.split(self.scheme.split_factor)
                .expect("split factor >= 1")
        } else {
            base
        }
    }

    /// Parts each table message of this pair is cut into.
    pub fn effective_split(&self) -> usize {
        match self.slot {
            PairSlot::HalvedMiddle { .. } => 2 * self.scheme.split_factor,
            _ => self.scheme.split_factor,
        }
    }

    /// Rate in file units: each table message is `1/K` of a file.
    pub fn rate(&self, k: usize) -> Rational {
        Ratio::new(
            self.scheme.n_transmissions() as i64,
            (self.effective_split() * k) as i64,
        )
    }

    /// Table node `(row, column)` and part index (out of
    /// [`effective_split`](Self::effective_split)) of a scheme column.
    fn locate(&self, id: MessageId) -> (usize, usize, usize) {
        let m = self.scheme.split_factor;
        match self.slot {
            PairSlot::Union { first, second } => {
                let (row, t) = (id.message / 2 + 1, id.message % 2 + 1);
                (row, if t == 1 { first } else { second }, id.split)
            }
            PairSlot::HalvedMiddle { column } => {
                let (row, t) = (id.message / 2 + 1, id.message % 2);
                (row, column, t * m + id.split)
            }
            PairSlot::Middle { column } => (id.message + 1, column, id.split),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryPlan {
    pub mode: Mode,
    pub table: IcpTable,
    pub pairs: Vec<PairPlan>,
    pub total_rate: Rational,
    /// `K~ * lcm` of the coloring split factors, with `K~ = K + 1` when the
    /// middle column is halved and `K` otherwise.
    pub subpacketization: u64,
    /// Parts per file actually used by the broadcast: `K * lcm` of every
    /// pair's split, the middle halving included.
    pub effective_subpacketization: u64,
    pub field: FieldSpec,
}

impl DeliveryPlan {
    pub fn n_transmissions(&self) -> usize {
        self.pairs.iter().map(|p| p.scheme.n_transmissions()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("bad plan JSON: {e}")))
    }
}

/// Knobs for [`assemble_with`].
#[derive(Debug, Clone, Copy)]
pub struct AssembleOptions {
    /// Field for every scheme; chosen from the color count when `None`.
    pub field: Option<FieldSpec>,
    /// Linear mode tries exact search on pairs within `caps.chi_nodes`.
    pub caps: OracleCaps,
    pub verify: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self {
            field: None,
            caps: OracleCaps::default(),
            verify: true,
        }
    }
}

pub fn assemble(
    instance: &MaccInstance,
    demands: &DemandProfile,
    mode: Mode,
) -> Result<DeliveryPlan> {
    assemble_with(instance, demands, mode, AssembleOptions::default())
}

/// A coloring of a pair instance with its provenance.
struct Candidate {
    construction: Construction,
    coloring: Coloring,
    split: usize,
    local_count: usize,
    /// Transmissions to send; the local count unless pinned.
    rows: Option<usize>,
}

fn score(
    instance: &IcpInstance,
    construction: Construction,
    coloring: Coloring,
    split: usize,
) -> Candidate {
    let local_count = InterferenceGraph::new(instance).local_count(&coloring);
    Candidate {
        construction,
        coloring,
        split,
        local_count,
        rows: None,
    }
}

fn thm1(desc: UnionIcpDesc, x: usize) -> Result<Candidate> {
    let inst = realize_union(desc);
    let coloring = colorize_thm1(desc, x)?;
    Ok(score(&inst, Construction::Thm1 { r_bar2: x }, coloring, 1))
}

fn thm2(desc: UnionIcpDesc) -> Result<Candidate> {
    let (coloring, m) = colorize_thm2(desc)?;
    let inst = realize_union(desc).split(m)?;
    Ok(score(&inst, Construction::Thm2 { m }, coloring, m))
}

/// Lowest local count among the divisor coloring, first-fit and exact
/// search; earlier candidates win ties.
fn best_linear(desc: UnionIcpDesc, caps: OracleCaps) -> Result<Candidate> {
    let x = smallest_divisor_at_least(desc.k(), desc.span()).expect("K divides itself");
    let inst = realize_union(desc);
    let graph = InterferenceGraph::new(&inst);
    let mut best = thm1(desc, x)?;
    let greedy = score(&inst, Construction::Greedy, greedy_on(&graph), 1);
    if greedy.local_count < best.local_count {
        best = greedy;
    }
    if inst.n_nodes() <= caps.chi_nodes && best.local_count > desc.span() {
        let (chi, witness) = exhaustive_chi_l_with(&inst, inst.n_nodes(), caps)?;
        if chi < best.local_count {
            best = score(&inst, Construction::Exhaustive, witness, 1);
        }
    }
    Ok(best)
}

fn pick(desc: UnionIcpDesc, mode: Mode, caps: OracleCaps) -> Result<Candidate> {
    match mode {
        Mode::Divisor(Some(x)) => Ok(Candidate {
            rows: Some(x),
            ..thm1(desc, x)?
        }),
        Mode::Divisor(None) => unreachable!("resolved before pairing"),
        Mode::Quadratic if desc.k().is_multiple_of(desc.span()) => thm1(desc, desc.span()),
        Mode::Quadratic => thm2(desc),
        Mode::Linear => best_linear(desc, caps),
    }
}

fn clique_candidate(desc: UnionIcpDesc) -> Candidate {
    let inst = realize_single(StructuredIcpDesc {
        a1: desc.a1,
        a2: desc.a2,
        z: desc.z,
    });
    let coloring = Coloring::new(vec![1; inst.n_nodes()]).expect("one color");
    score(&inst, Construction::Clique, coloring, 1)
}

/// Resolves `Divisor(None)` and validates an explicit `X`.
fn resolve_mode(instance: &MaccInstance, mode: Mode) -> Result<Mode> {
    let k = instance.k();
    let need = instance.n_needed() + 1;
    match mode {
        Mode::Divisor(None) => Ok(Mode::Divisor(Some(
            smallest_divisor_at_least(k, need)
                .ok_or_else(|| invalid("no divisor X of K with X >= K-iL+1"))?,
        ))),
        Mode::Divisor(Some(x)) if x < need || x == 0 || !k.is_multiple_of(x) => Err(invalid(
            format!("X={x} must satisfy X >= K-iL+1 = {need} and X | K = {k}"),
        )),
        other => Ok(other),
    }
}

pub fn assemble_with(
    instance: &MaccInstance,
    demands: &DemandProfile,
    mode: Mode,
    opts: AssembleOptions,
) -> Result<DeliveryPlan> {
    if instance.i() == 0 {
        return Err(precondition("delivery needs memory index i >= 1"));
    }
    let mode = resolve_mode(instance, mode)?;
    let table = reduce_macc(instance, demands)?;
    let k = instance.k();
    let pairing = table.column_pairing();

    let mut jobs: Vec<(UnionIcpDesc, PairSlot)> = pairing
        .unions
        .iter()
        .map(|&(d, first, second)| (d, PairSlot::Union { first, second }))
        .collect();
    if let Some((d, column)) = pairing.middle {
        let desc = UnionIcpDesc::new(d.a1, d.a2, d.z)?;
        let slot = if table.cols() == 1 && !matches!(mode, Mode::Divisor(_)) {
            PairSlot::Middle { column }
        } else {
            PairSlot::HalvedMiddle { column }
        };
        jobs.push((desc, slot));
    }

    let candidates: Vec<Candidate> = jobs
        .par_iter()
        .map(|&(desc, slot)| match slot {
            PairSlot::Middle { .. } => Ok(clique_candidate(desc)),
            _ => pick(desc, mode, opts.caps),
        })
        .collect::<Result<_>>()?;

    let field = match opts.field {
        Some(f) => f,
        None => FieldSpec::for_colors(
            candidates
                .iter()
                .map(|c| c.coloring.n_colors_used())
                .max()
                .unwrap_or(1),
        )?,
    };
    let pairs: Vec<PairPlan> = jobs
        .par_iter()
        .zip(candidates.into_par_iter())
        .map(|(&(desc, slot), cand)| {
            let base = match slot {
                PairSlot::Middle { .. } => realize_single(StructuredIcpDesc {
                    a1: desc.a1,
                    a2: desc.a2,
                    z: desc.z,
                }),
                _ => realize_union(desc),
            };
            let inst = if cand.split > 1 {
                base.split(cand.split)?
            } else {
                base
            };
            let scheme = encode_with_rows(&inst, &cand.coloring, field, cand.rows)?;
            Ok(PairPlan {
                desc,
                slot,
                construction: cand.construction,
                local_count: cand.local_count,
                scheme,
            })
        })
        .collect::<Result<_>>()?;

    let total_rate = pairs.iter().map(|p| p.rate(k)).sum::<Rational>();
    let coloring_lcm = pairs
        .iter()
        .fold(1usize, |acc, p| acc.lcm(&p.scheme.split_factor));
    let halved = pairs
        .iter()
        .any(|p| matches!(p.slot, PairSlot::HalvedMiddle { .. }));
    let k_tilde = if halved { k + 1 } else { k };
    let plan = DeliveryPlan {
        mode,
        total_rate,
        subpacketization: (k_tilde * coloring_lcm) as u64,
        effective_subpacketization: (k * lcm_split(&pairs)) as u64,
        table,
        pairs,
        field,
    };
    if opts.verify {
        let report = verify_plan(&plan);
        if let Some(user) = report.user_ok.iter().position(|&ok| !ok) {
            return Err(Error::DecodeFailure {
                user: user + 1,
                detail: format!("{} plan for {:?}", plan.mode, instance),
            });
        }
    }
    Ok(plan)
}

fn lcm_split(pairs: &[PairPlan]) -> usize {
    pairs
        .iter()
        .fold(1usize, |acc, p| acc.lcm(&p.effective_split()))
}

/// The whole broadcast over the table messages, each cut into `parts`
/// pieces; piece `s` of table message `t` is column `t * parts + s`. A pair
/// row over pieces `parts / e` times larger becomes `parts / e` rows.
pub fn global_scheme(plan: &DeliveryPlan) -> TransmissionScheme {
    let parts = lcm_split(&plan.pairs);
    let n_msg = plan.table.n_messages();
    let order: Vec<MessageId> = (0..n_msg * parts)
        .map(|c| MessageId {
            message: c / parts,
            split: c % parts,
        })
        .collect();
    let f = plan.field.field();
    let mut coefficients = Matrix::zeros(0, n_msg * parts);
    for pair in &plan.pairs {
        let stride = parts / pair.effective_split();
        let targets: Vec<usize> = pair
            .scheme
            .message_order
            .iter()
            .map(|&id| {
                let (row, col, part) = pair.locate(id);
                plan.table.node(row, col) * parts + part * stride
            })
            .collect();
        for r in pair.scheme.coefficients.row_iter() {
            for offset in 0..stride {
                let mut row = vec![0u16; n_msg * parts];
                for (&target, &g) in targets.iter().zip(r) {
                    row[target + offset] = f.add(row[target + offset], g);
                }
                coefficients.push_row(&row);
            }
        }
    }
    TransmissionScheme {
        field: plan.field,
        message_order: order,
        coefficients,
        split_factor: parts,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// One entry per MACC user, 1-based user `k` at index `k - 1`.
    pub user_ok: Vec<bool>,
    pub all_ok: bool,
    pub n_transmissions: usize,
    pub rate: Rational,
    pub subpacketization: u64,
    /// Calculator for the same corner: r5 for quadratic, r3 for divisor,
    /// r4 for linear.
    pub calculator: Option<RateReport>,
    pub matches_calculator: bool,
    pub warnings: Vec<String>,
}

pub fn verify_plan(plan: &DeliveryPlan) -> VerifyReport {
    let table = &plan.table;
    let k = table.rows();
    let global = global_scheme(plan);
    let parts = global.split_factor;
    let icp = as_icp(table);
    let split_icp = if parts > 1 {
        icp.split(parts).expect("parts >= 1")
    } else {
        icp
    };
    let node_ok = decode_all(&global, &split_icp);
    let cols = table.cols();
    let user_ok: Vec<bool> = (0..k)
        .map(|p| node_ok[p * cols..(p + 1) * cols].iter().all(|&ok| ok))
        .collect();

    let inst = table.instance();
    let calc = match plan.mode {
        Mode::Quadratic => r5_f5(inst.k(), inst.l(), inst.i()),
        Mode::Divisor(x) => r3(inst.k(), inst.l(), inst.i(), x),
        Mode::Linear => r4(inst.k(), inst.l(), inst.i()),
    }
    .ok();
    let global_rate = if parts == 0 || k == 0 {
        Rational::zero()
    } else {
        Ratio::new(global.n_transmissions() as i64, (k * parts) as i64)
    };
    let mut warnings = Vec::new();
    if global_rate != plan.total_rate {
        warnings.push(format!(
            "broadcast carries {global_rate} but the plan claims {}",
            plan.total_rate
        ));
    }
    let bound = calc.as_ref().and_then(|c| c.rate);
    let matches_calculator = match (plan.mode, bound) {
        (Mode::Linear, Some(b)) => {
            if plan.total_rate > b {
                warnings.push(format!(
                    "constructed rate {} exceeds the linear bound {b}",
                    plan.total_rate
                ));
            }
            plan.total_rate <= b
        }
        (_, Some(b)) => plan.total_rate == b,
        (_, None) => false,
    };
    VerifyReport {
        all_ok: user_ok.iter().all(|&ok| ok),
        user_ok,
        n_transmissions: plan.n_transmissions(),
        rate: plan.total_rate,
        subpacketization: plan.subpacketization,
        calculator: calc,
        matches_calculator,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(k: usize, l: usize, i: usize, mode: Mode) -> DeliveryPlan {
        let inst = MaccInstance::new(k, k, l, i).unwrap();
        assemble(&inst, &DemandProfile::worst_case(&inst), mode).unwrap()
    }

    fn q(n: i64, d: i64) -> Rational {
        Ratio::new(n, d)
    }

    #[test]
    fn k8_quadratic() {
        let p = plan(8, 2, 3, Mode::Quadratic);
        assert_eq!(p.total_rate, q(3, 8));
        assert_eq!(p.n_transmissions(), 6);
        assert_eq!(p.subpacketization, 16);
        assert_eq!(p.pairs[0].construction, Construction::Thm2 { m: 2 });
        let r = verify_plan(&p);
        assert!(
            r.all_ok && r.matches_calculator && r.warnings.is_empty(),
            "{r:?}"
        );
    }

    #[test]
    fn k8_linear_three_transmissions() {
        let p = plan(8, 2, 3, Mode::Linear);
        assert_eq!(p.total_rate, q(3, 8));
        assert_eq!(p.n_transmissions(), 3);
        assert_eq!(p.subpacketization, 8);
        assert_eq!(p.pairs[0].local_count, 3);
    }

    #[test]
    fn clique_case() {
        let p = plan(4, 1, 3, Mode::Linear);
        assert_eq!(p.n_transmissions(), 1);
        assert_eq!(p.total_rate, q(1, 4));
        assert_eq!(p.subpacketization, 4);
        assert_eq!(p.pairs[0].construction, Construction::Clique);
        let p = plan(4, 1, 3, Mode::Quadratic);
        assert_eq!(p.total_rate, q(1, 4));
    }

    #[test]
    fn divisor_mode_k100() {
        let inst = MaccInstance::new(100, 100, 4, 20).unwrap();
        let opts = AssembleOptions {
            verify: false,
            ..AssembleOptions::default()
        };
        let p = assemble_with(
            &inst,
            &DemandProfile::worst_case(&inst),
            Mode::Divisor(Some(25)),
            opts,
        )
        .unwrap();
        assert_eq!(p.total_rate, q(5, 2));
        assert_eq!(p.subpacketization, 100);
    }

    #[test]
    fn divisor_mode_rejects_bad_x() {
        let inst = MaccInstance::new(8, 8, 2, 3).unwrap();
        let d = DemandProfile::worst_case(&inst);
        assert!(matches!(
            assemble(&inst, &d, Mode::Divisor(Some(2))),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            assemble(&inst, &d, Mode::Divisor(Some(3))),
            Err(Error::InvalidParameter(_))
        ));
        let p = assemble(&inst, &d, Mode::Divisor(None)).unwrap();
        assert_eq!(p.mode, Mode::Divisor(Some(4)));
        assert_eq!(p.total_rate, q(2 * 4, 16));
    }

    #[test]
    fn odd_middle_is_halved() {
        // K - iL = 3
        let p = plan(7, 2, 2, Mode::Divisor(None));
        assert_eq!(p.pairs.len(), 2);
        assert!(matches!(
            p.pairs[1].slot,
            PairSlot::HalvedMiddle { column: 2 }
        ));
        assert_eq!(p.total_rate, q(3 * 7, 14));
        assert_eq!(p.subpacketization, 8);
        assert_eq!(p.effective_subpacketization, 14);
        assert!(verify_plan(&p).all_ok);
    }

    #[test]
    fn full_memory_is_empty() {
        let p = plan(6, 2, 3, Mode::Linear);
        assert!(p.pairs.is_empty());
        assert_eq!(p.total_rate, Rational::zero());
        let r = verify_plan(&p);
        assert!(r.all_ok);
        assert_eq!(r.user_ok.len(), 6);
    }

    #[test]
    fn dropping_a_transmission_breaks_someone() {
        let mut p = plan(8, 2, 3, Mode::Quadratic);
        p.pairs[0].scheme = p.pairs[0].scheme.without_transmission(0);
        let r = verify_plan(&p);
        assert!(r.user_ok.iter().any(|&ok| !ok));
        assert!(!r.all_ok);
    }

    #[test]
    fn repeated_demands_still_decode() {
        let inst = MaccInstance::new(3, 7, 2, 2).unwrap();
        for demands in [
            vec![1, 1, 1, 1, 1, 1, 1],
            vec![1, 2, 1, 2, 3, 1, 2],
            vec![3, 3, 2, 2, 1, 1, 1],
        ] {
            let d = DemandProfile::new(&inst, demands).unwrap();
            for mode in [Mode::Quadratic, Mode::Linear, Mode::Divisor(None)] {
                let p = assemble(&inst, &d, mode).unwrap();
                let distinct = assemble(
                    &MaccInstance::new(7, 7, 2, 2).unwrap(),
                    &DemandProfile::worst_case(&MaccInstance::new(7, 7, 2, 2).unwrap()),
                    mode,
                )
                .unwrap();
                assert!(p.n_transmissions() <= distinct.n_transmissions());
            }
        }
    }

    #[test]
    fn plan_json_round_trip() {
        let p = plan(7, 2, 2, Mode::Quadratic);
        let back = DeliveryPlan::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        let v: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
        assert_eq!(v["mode"], "quadratic");
        assert_eq!(v["pairs"][0]["construction"]["kind"], "thm2");
    }
}
