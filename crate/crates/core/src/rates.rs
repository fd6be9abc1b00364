//! Closed-form rate and subpacketization calculators for cyclic MACC
//! placement at corner points `M = iN/K`, plus memory sharing between
//! corners.
//!
//! Everything is exact (`Ratio<i64>`). Where a formula is known to disagree
//! with a frequently quoted reference value, the formula wins and the report
//! carries a `note`.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::icp::UnionIcpDesc;
use crate::macc::{mod1, MaccInstance};

pub type Rational = Ratio<i64>;

fn q(n: i64, d: i64) -> Rational {
    Ratio::new(n, d)
}

/// Output of one calculator at one corner point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateReport {
    pub scheme: String,
    /// Absent when not applicable.
    pub rate: Option<Rational>,
    /// `None` means "n/a".
    pub subpacketization: Option<u64>,
    pub applicable: bool,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RateReport {
    fn ok(scheme: &str, rate: Rational, f: Option<u64>, reason: impl Into<String>) -> Self {
        debug_assert!(rate >= Rational::zero());
        Self {
            scheme: scheme.into(),
            rate: Some(rate),
            subpacketization: f,
            applicable: true,
            reason: reason.into(),
            note: None,
        }
    }

    fn na(scheme: &str, reason: impl Into<String>) -> Self {
        Self {
            scheme: scheme.into(),
            rate: None,
            subpacketization: None,
            applicable: false,
            reason: reason.into(),
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

impl fmt::Display for RateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.rate, self.subpacketization) {
            (Some(r), Some(sp)) => write!(f, "{}: {} (F={})", self.scheme, r, sp),
            (Some(r), None) => write!(f, "{}: {} (F=n/a)", self.scheme, r),
            _ => write!(f, "{}: n/a ({})", self.scheme, self.reason),
        }
    }
}

/// Corner-point parameters after validation.
#[derive(Debug, Clone, Copy)]
struct Corner {
    k: i64,
    l: i64,
    i: i64,
}

impl Corner {
    fn new(k: usize, l: usize, i: usize) -> Result<Self> {
        MaccInstance::new(1, k, l, i)?;
        Ok(Self {
            k: k as i64,
            l: l as i64,
            i: i as i64,
        })
    }

    fn il(&self) -> i64 {
        self.i * self.l
    }

    /// Subfiles still needed per user, `K - iL`.
    fn n(&self) -> i64 {
        self.k - self.il()
    }

    fn full(&self) -> bool {
        self.il() >= self.k
    }

    fn s_divides_k(&self) -> bool {
        self.k % (self.n() + 1) == 0
    }

    /// `K`, or `K + 1` when the odd-case middle column has to be split.
    fn k_tilde(&self) -> i64 {
        if self.n() % 2 == 0 || self.n() == 1 {
            self.k
        } else {
            self.k + 1
        }
    }

    /// `K` for even `K - iL`, `K + 1` for odd.
    fn k_tilde_linear(&self) -> i64 {
        if self.n() % 2 == 0 {
            self.k
        } else {
            self.k + 1
        }
    }

    fn m(&self) -> i64 {
        self.k / (self.n() + 1)
    }
}

fn full_memory(scheme: &str, c: Corner) -> RateReport {
    RateReport::ok(
        scheme,
        Rational::zero(),
        Some(c.k as u64),
        "full memory corner",
    )
}

fn zero_memory(scheme: &str, c: Corner) -> RateReport {
    RateReport::ok(
        scheme,
        Rational::from_integer(c.k),
        Some(1),
        "zero memory corner, uncoded",
    )
}

pub fn r1(k: usize, l: usize, i: usize) -> Result<RateReport> {
    const NAME: &str = "r1";
    let c = Corner::new(k, l, i)?;
    if c.full() {
        return Ok(full_memory(NAME, c));
    }
    if c.i == 0 {
        return Ok(RateReport::na(NAME, "i = 0"));
    }
    if c.k % c.i != 0 {
        return Ok(RateReport::na(
            NAME,
            format!("i={} does not divide K={}", c.i, c.k),
        ));
    }
    let t = c.n() + c.i;
    if c.k % t != 0 {
        return Ok(RateReport::na(
            NAME,
            format!("K-iL+i={t} does not divide K={}", c.k),
        ));
    }
    Ok(RateReport::ok(
        NAME,
        q(c.n() * t, 2 * c.k),
        None,
        "i | K and (K-iL+i) | K",
    ))
}

pub fn r2_f2(k: usize, l: usize, i: usize) -> Result<RateReport> {
    const NAME: &str = "r2";
    let c = Corner::new(k, l, i)?;
    if c.full() {
        return Ok(full_memory(NAME, c));
    }
    let n = c.n();
    let s = n + 1;
    let m = c.m();
    let report = if c.s_divides_k() || n == 1 {
        RateReport::ok(
            NAME,
            q(n * s, 2 * c.k),
            Some(c.k as u64),
            "(K-iL+1) | K or K-iL = 1",
        )
    } else if mod1(c.k, s as usize) as i64 == n {
        RateReport::ok(
            NAME,
            q(n, 2 * m + 1),
            Some(((2 * m + 1) * c.k) as u64),
            "<K>_(K-iL+1) = K-iL",
        )
    } else {
        RateReport::ok(NAME, q(n, 2 * m), Some((2 * m * c.k) as u64), "otherwise")
    };
    if (k, l, i) == (8, 2, 3) {
        return Ok(report.with_note("reference value 1/2 with F=32 disagrees with this formula"));
    }
    Ok(report)
}

/// Transmissions sufficient for the single `(a1,a2)_z` instance.
pub fn single_icp_bound(a1: usize, a2: usize, _z: usize) -> usize {
    a1 + a2 + 1
}

/// Lower and upper bounds for the union instance `(a1,a2)bar_z`, in units
/// of one message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionBounds {
    pub k: usize,
    pub lower: usize,
    pub r_bar1: usize,
    pub r_bar2: Option<usize>,
    pub r_bar3: Rational,
}

/// Smallest divisor of `k` that is at least `min`.
pub fn smallest_divisor_at_least(k: usize, min: usize) -> Option<usize> {
    (min.max(1)..=k).find(|d| k.is_multiple_of(*d))
}

pub fn union_bounds(a1: usize, a2: usize, z: usize) -> Result<UnionBounds> {
    let d = UnionIcpDesc::new(a1, a2, z)?;
    let k = d.k();
    let s = a1 + a2 + 2;
    let m = k / s;
    let r_bar1 = if k % s == 0 {
        s
    } else {
        (a1 + 2 * a2 + 2).min(k)
    };
    Ok(UnionBounds {
        k,
        lower: s,
        r_bar1,
        r_bar2: smallest_divisor_at_least(k, s),
        r_bar3: q((m * s + a2).min(k) as i64, m as i64),
    })
}

pub fn r3(k: usize, l: usize, i: usize, x: Option<usize>) -> Result<RateReport> {
    const NAME: &str = "r3";
    let c = Corner::new(k, l, i)?;
    if let Some(x) = x {
        if x < (c.n() + 1).max(1) as usize || x == 0 || !k.is_multiple_of(x) {
            return Err(invalid(format!(
                "X={x} must satisfy X >= K-iL+1 = {} and X | K = {k}",
                c.n() + 1
            )));
        }
    }
    if c.full() {
        return Ok(full_memory(NAME, c));
    }
    if c.i == 0 {
        return Ok(zero_memory(NAME, c));
    }
    let x = match x {
        Some(x) => x,
        None => smallest_divisor_at_least(k, (c.n() + 1) as usize).expect("K divides itself"),
    } as i64;
    Ok(RateReport::ok(
        NAME,
        q(c.n() * x, 2 * c.k),
        Some(c.k_tilde_linear() as u64),
        format!("X={x}"),
    ))
}

pub fn r_s(k: i64, il: i64) -> Rational {
    q((k - il) * (k - il + 1), 2 * k)
}

pub fn r_e(k: i64, il: i64) -> Rational {
    if k >= 3 * il {
        q(k * (k - il) - il * (il - 1), 2 * k)
    } else {
        q((k - il) * (5 * k - 5 * il + 2), 8 * k)
    }
}

/// Taken literally, including the integer `+ 1` in the second branch.
pub fn r_o(k: i64, il: i64) -> Rational {
    if k > 3 * il {
        q(k * (k - il + 1) - il * (il + 1), 2 * k)
    } else {
        q((k - il - 1) * (5 * k - 5 * il + 9), 8 * k) + 1
    }
}

pub fn r4(k: usize, l: usize, i: usize) -> Result<RateReport> {
    const NAME: &str = "r4";
    let c = Corner::new(k, l, i)?;
    if c.full() {
        return Ok(full_memory(NAME, c));
    }
    if c.i == 0 {
        return Ok(zero_memory(NAME, c));
    }
    let f = Some(c.k_tilde() as u64);
    let (n, il) = (c.n(), c.il());
    if c.s_divides_k() || n == 1 {
        Ok(RateReport::ok(
            NAME,
            r_s(c.k, il),
            f,
            "R_s: (K-iL+1) | K or K-iL = 1",
        ))
    } else if n % 2 == 0 {
        Ok(RateReport::ok(NAME, r_e(c.k, il), f, "R_e: K-iL even"))
    } else {
        let report = RateReport::ok(NAME, r_o(c.k, il), f, "R_o: K-iL odd");
        if c.k < 3 * il + 1 {
            let pairs = pair_bound_sum(c);
            return Ok(report.with_note(format!(
                "second branch adds an integer 1; summing the per-pair bounds gives {pairs}"
            )));
        }
        Ok(report)
    }
}

/// Sum of `min(a1 + 2 a2 + 2, K)` over the column pairs (middle column at
/// half weight), in file units.
fn pair_bound_sum(c: Corner) -> Rational {
    let n = c.n();
    let mut total = Rational::zero();
    for j in 1..=n / 2 {
        total += q((n + j).min(c.k), c.k);
    }
    if n % 2 == 1 {
        total += q(n.min(c.k), c.k);
    }
    total
}

pub fn r5_f5(k: usize, l: usize, i: usize) -> Result<RateReport> {
    const NAME: &str = "r5";
    let c = Corner::new(k, l, i)?;
    if c.full() {
        return Ok(full_memory(NAME, c));
    }
    if c.i == 0 {
        return Ok(zero_memory(NAME, c));
    }
    let n = c.n();
    let s = n + 1;
    let m = c.m();
    let term = |j: i64| q((m * s + j).min(c.k), m * c.k);
    let (rate, reason) = if n % 2 == 0 {
        ((0..n / 2).map(term).sum(), "even K-iL")
    } else {
        let middle = q((m * s + (n - 1) / 2).min(c.k), 2 * m * c.k);
        (
            middle + (0..(n - 1) / 2).map(term).sum::<Rational>(),
            "odd K-iL",
        )
    };
    let f = if c.s_divides_k() || n == 1 {
        c.k_tilde()
    } else {
        c.k_tilde() * m
    };
    let report = RateReport::ok(NAME, rate, Some(f as u64), reason);
    if (k, l, i) == (100, 4, 20) {
        return Ok(report.with_note("reference value 2.14 disagrees with this formula (177/80)"));
    }
    Ok(report)
}

/// Rate at `m_query` on the lower convex envelope of `(memory, rate)`
/// corner points.
pub fn memory_share(points: &[(Rational, Rational)], m_query: Rational) -> Result<Rational> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 = a.1.min(b.1);
            true
        } else {
            false
        }
    });
    let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
        return Err(invalid("no corner points"));
    };
    if m_query < first.0 || m_query > last.0 {
        return Err(invalid(format!(
            "memory {m_query} outside [{}, {}]",
            first.0, last.0
        )));
    }
    // lower hull, monotone chain
    let mut hull: Vec<(Rational, Rational)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= Rational::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    for w in hull.windows(2) {
        let ((m0, r0), (m1, r1)) = (w[0], w[1]);
        if m_query >= m0 && m_query <= m1 {
            return Ok(r0 + (r1 - r0) * (m_query - m0) / (m1 - m0));
        }
    }
    Ok(hull[0].1)
}

/// Memory `iN/K` of a corner.
pub fn corner_memory(n_files: usize, k: usize, i: usize) -> Rational {
    q((i * n_files) as i64, k as i64)
}

/// All calculators at one corner, in a fixed order.
pub fn compare(k: usize, l: usize, i: usize) -> Result<Vec<RateReport>> {
    Ok(vec![
        r1(k, l, i)?,
        r2_f2(k, l, i)?,
        r3(k, l, i, None)?,
        r4(k, l, i)?,
        r5_f5(k, l, i)?,
    ])
}

/// Memory-shared rate of every scheme at `m_query`, using the corners
/// `i = 0 ..= ceil(K/L)` where the scheme applies.
pub fn compare_at_memory(
    n_files: usize,
    k: usize,
    l: usize,
    m_query: Rational,
) -> Result<Vec<RateReport>> {
    MaccInstance::new(n_files, k, l, 0)?;
    let top = k.div_ceil(l);
    let per_corner: Vec<Vec<RateReport>> =
        (0..=top).map(|i| compare(k, l, i)).collect::<Result<_>>()?;
    let names: Vec<String> = per_corner[0].iter().map(|r| r.scheme.clone()).collect();
    let mut out = Vec::new();
    for (s, name) in names.iter().enumerate() {
        let mut pts = vec![(Rational::zero(), Rational::from_integer(k as i64))];
        for (i, reports) in per_corner.iter().enumerate() {
            if let Some(rate) = reports[s].rate {
                pts.push((corner_memory(n_files, k, i), rate));
            }
        }
        let scheme = format!("{name}@M");
        out.push(match memory_share(&pts, m_query) {
            Ok(rate) => RateReport::ok(
                &scheme,
                rate,
                None,
                format!("memory sharing at M={m_query}"),
            ),
            Err(e) => RateReport::na(&scheme, e.to_string()),
        });
    }
    Ok(out)
}

/// One CSV line of a rate table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateRow {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub i: usize,
    #[serde(rename = "M")]
    pub m: String,
    pub scheme: String,
    pub rate_num: String,
    pub rate_den: String,
    pub rate: String,
    #[serde(rename = "F")]
    pub f: String,
    pub applicable: bool,
}

pub const CSV_HEADER: [&str; 10] = [
    "K",
    "L",
    "i",
    "M",
    "scheme",
    "rate_num",
    "rate_den",
    "rate",
    "F",
    "applicable",
];

impl RateRow {
    pub fn new(k: usize, l: usize, i: usize, memory: Rational, r: &RateReport) -> Self {
        let (num, den, dec) = match r.rate {
            Some(x) => (x.numer().to_string(), x.denom().to_string(), decimal(x, 6)),
            None => (String::new(), String::new(), String::new()),
        };
        Self {
            k,
            l,
            i,
            m: memory.to_string(),
            scheme: r.scheme.clone(),
            rate_num: num,
            rate_den: den,
            rate: dec,
            f: r.subpacketization.map_or("n/a".into(), |f| f.to_string()),
            applicable: r.applicable,
        }
    }
}

/// Fixed-precision decimal rendering for display.
pub fn decimal(r: Rational, digits: usize) -> String {
    let scale = 10i128.pow(digits as u32);
    let num = *r.numer() as i128 * scale;
    let den = *r.denom() as i128;
    let (qt, rem) = num.div_rem(&den);
    let rounded = if 2 * rem.abs() >= den {
        qt + num.signum()
    } else {
        qt
    };
    let sign = if rounded < 0 { "-" } else { "" };
    let abs = rounded.abs();
    if digits == 0 {
        return format!("{sign}{abs}");
    }
    format!(
        "{sign}{}.{:0width$}",
        abs / scale,
        abs % scale,
        width = digits
    )
}

pub fn write_csv<W: std::io::Write>(out: W, rows: &[RateRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    let io = |e: csv::Error| invalid(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| invalid(format!("csv: {e}")))?;
    Ok(())
}
