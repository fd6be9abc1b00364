use macc_lab::delivery::{assemble_with, verify_plan, AssembleOptions, Mode};
use macc_lab::linalg_ff::FieldSpec;
use macc_lab::macc::{DemandProfile, MaccInstance};
use macc_lab::rates::{compare, decimal};
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{enum_value, ratio_text, to_mode, write_out, DIGITS};
use crate::config::{flag_text, Config};
use crate::fail::Fail;
use crate::{ModeArg, SweepArgs};

const DEFAULT_MAX_TUPLES: usize = 5000;
const MAX_K: usize = 512;

#[derive(Debug, Serialize)]
pub struct SweepRow {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub i: usize,
    pub mode: String,
    pub r1: String,
    pub r2: String,
    pub r3: String,
    pub r4: String,
    pub r5: String,
    pub bound: String,
    pub constructed: String,
    pub constructed_decimal: String,
    #[serde(rename = "F")]
    pub f: String,
    pub transmissions: String,
    pub verified: bool,
    pub within_bound: bool,
    pub error: String,
}

/// Inclusive range: `a..b`, `a..=b`, `a-b`, `a:b` or `a`. `lo > hi` is an
/// empty range.
pub fn parse_range(text: &str) -> Result<(usize, usize), Fail> {
    let t = text.trim();
    let bad = || Fail::Invalid(format!("bad range {text:?}; write a..b"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    for sep in ["..=", "..", "-", ":"] {
        if let Some((a, b)) = t.split_once(sep) {
            return Ok((num(a)?, num(b)?));
        }
    }
    let v = num(t)?;
    Ok((v, v))
}

fn tuples(ks: (usize, usize), ls: Option<(usize, usize)>) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for k in ks.0.max(1)..=ks.1 {
        let (lo, hi) = ls.unwrap_or((1, k));
        for l in lo.max(1)..=hi.min(k) {
            for i in 1..=k.div_ceil(l) {
                out.push((k, l, i));
            }
        }
    }
    out
}

/// Calculator the constructed rate is held against in each mode.
fn bound_index(mode: Mode) -> usize {
    match mode {
        Mode::Linear => 3,
        Mode::Quadratic => 4,
        Mode::Divisor(_) => 2,
    }
}

pub fn sweep_row(k: usize, l: usize, i: usize, mode: Mode, field: Option<FieldSpec>) -> SweepRow {
    let calcs = compare(k, l, i).ok();
    let calc = |s: usize| ratio_text(calcs.as_ref().and_then(|c| c[s].rate));
    let mut row = SweepRow {
        k,
        l,
        i,
        mode: mode.to_string(),
        r1: calc(0),
        r2: calc(1),
        r3: calc(2),
        r4: calc(3),
        r5: calc(4),
        bound: calc(bound_index(mode)),
        constructed: String::new(),
        constructed_decimal: String::new(),
        f: String::new(),
        transmissions: String::new(),
        verified: false,
        within_bound: false,
        error: String::new(),
    };
    let built = MaccInstance::new(k, k, l, i).and_then(|inst| {
        let opts = AssembleOptions {
            field,
            ..AssembleOptions::default()
        };
        assemble_with(&inst, &DemandProfile::worst_case(&inst), mode, opts)
    });
    match built {
        Ok(plan) => {
            let rep = verify_plan(&plan);
            row.constructed = ratio_text(Some(plan.total_rate));
            row.constructed_decimal = decimal(plan.total_rate, DIGITS);
            row.f = plan.subpacketization.to_string();
            row.transmissions = plan.n_transmissions().to_string();
            row.verified = rep.all_ok;
            row.within_bound = rep.matches_calculator;
            row.error = rep.warnings.join("; ");
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

pub fn run(a: SweepArgs, cfg: &Config, field_w: Option<u32>) -> Result<(), Fail> {
    let k_text = a
        .k_range
        .or_else(|| cfg.k_range.as_ref().map(flag_text))
        .ok_or_else(|| Fail::Invalid("missing --K-range".into()))?;
    let ks = parse_range(&k_text)?;
    let ls = a
        .l_range
        .or_else(|| cfg.l_range.as_ref().map(flag_text))
        .map(|t| parse_range(&t))
        .transpose()?;
    let mode_arg = enum_value(a.mode, &cfg.mode, "mode")?.unwrap_or(ModeArg::Quadratic);
    let mode = to_mode(mode_arg, None)?;
    let field = field_w.map(FieldSpec::new).transpose()?;

    if ks.0 <= ks.1 && ks.1 > MAX_K {
        return Err(Fail::TooLarge(format!(
            "K up to {} exceeds the sweep cap {MAX_K}",
            ks.1
        )));
    }
    let work = tuples(ks, ls);
    let cap = a
        .max_tuples
        .or(cfg.max_tuples)
        .unwrap_or(DEFAULT_MAX_TUPLES);
    if work.len() > cap {
        return Err(Fail::TooLarge(format!(
            "{} (K, L, i) tuples exceed the cap {cap}; raise --max-tuples",
            work.len()
        )));
    }

    // par_iter + collect keeps input order
    let rows: Vec<SweepRow> = work
        .par_iter()
        .map(|&(k, l, i)| sweep_row(k, l, i, mode, field))
        .collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "K",
            "L",
            "i",
            "mode",
            "r1",
            "r2",
            "r3",
            "r4",
            "r5",
            "bound",
            "constructed",
            "constructed_decimal",
            "F",
            "transmissions",
            "verified",
            "within_bound",
            "error",
        ])
        .map_err(|e| Fail::Invalid(format!("csv: {e}")))?;
    }
    for r in &rows {
        w.serialize(r)
            .map_err(|e| Fail::Invalid(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Fail::Invalid(format!("csv: {e}")))?;
    let out = a.out.or_else(|| cfg.out.clone());
    write_out(out.as_deref(), &bytes)?;

    let unverified = rows.iter().filter(|r| !r.verified).count();
    let outside = rows.iter().filter(|r| !r.within_bound).count();
    eprintln!(
        "swept {} tuples: {} decode-verified, {} within the {mode} bound",
        rows.len(),
        rows.len() - unverified,
        rows.len() - outside
    );
    if unverified + outside > 0 {
        return Err(Fail::Verification(format!(
            "{unverified} rows failed decoding and {outside} rows missed the bound"
        )));
    }
    Ok(())
}
