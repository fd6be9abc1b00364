use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use macc_lab::delivery::{assemble_with, verify_plan, AssembleOptions, Mode};
use macc_lab::icp::{as_icp, pair_columns, realize_union, reduce_macc, IcpInstance, UnionIcpDesc};
use macc_lab::linalg_ff::FieldSpec;
use macc_lab::macc::{DemandProfile, MaccInstance};
use macc_lab::oracle::{exhaustive_chi_l_with, mais_with, min_rank_gf2_with, OracleCaps};
use macc_lab::rates::{
    compare, compare_at_memory, corner_memory, decimal, write_csv, RateReport, RateRow, Rational,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{flag_text, Config};
use crate::fail::Fail;
use crate::{CornerArgs, Format, ModeArg, OracleArgs, PlanArgs, RatesArgs, Which};

pub const FIELD_ENV: &str = "MACC_LAB_FIELD_W";
pub const DIGITS: usize = 6;

/// Flag, then environment, then config file.
pub fn field_degree(flag: Option<u32>, cfg: &Config) -> Result<Option<u32>, Fail> {
    if flag.is_some() {
        return Ok(flag);
    }
    if let Ok(v) = std::env::var(FIELD_ENV) {
        let w = v
            .trim()
            .parse()
            .map_err(|_| Fail::Invalid(format!("{FIELD_ENV}={v:?} is not an integer")))?;
        return Ok(Some(w));
    }
    Ok(cfg.field_w)
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, Fail> {
    v.ok_or_else(|| Fail::Invalid(format!("missing {flag}")))
}

pub struct Corner {
    pub k: usize,
    pub l: usize,
    pub i: usize,
    pub n: usize,
}

fn corner(a: &CornerArgs, cfg: &Config) -> Result<Corner, Fail> {
    let k = need(a.k.or(cfg.k), "--K")?;
    let l = need(a.l.or(cfg.l), "--L")?;
    let i = need(a.i.or(cfg.i), "--i")?;
    let n = a.n.or(cfg.n).unwrap_or(k);
    Ok(Corner { k, l, i, n })
}

pub fn enum_value<T: ValueEnum>(
    flag: Option<T>,
    cfg: &Option<String>,
    key: &str,
) -> Result<Option<T>, Fail> {
    match (flag, cfg) {
        (Some(v), _) => Ok(Some(v)),
        (None, Some(s)) => T::from_str(s, true)
            .map(Some)
            .map_err(|_| Fail::Invalid(format!("config: bad {key} {s:?}"))),
        (None, None) => Ok(None),
    }
}

pub fn to_mode(m: ModeArg, x: Option<usize>) -> Result<Mode, Fail> {
    match (m, x) {
        (ModeArg::Divisor, x) => Ok(Mode::Divisor(x)),
        (_, Some(_)) => Err(Fail::Invalid("--x only applies to --mode divisor".into())),
        (ModeArg::Linear, None) => Ok(Mode::Linear),
        (ModeArg::Quadratic, None) => Ok(Mode::Quadratic),
    }
}

pub fn parse_demands(text: &str) -> Result<Vec<usize>, Fail> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Fail::Invalid(format!("bad demand {t:?}")))
        })
        .collect()
}

fn parse_rational(text: &str) -> Result<Rational, Fail> {
    Rational::from_str(text.trim())
        .map_err(|_| Fail::Invalid(format!("bad memory {text:?}; write an integer or a/b")))
}

pub fn ratio_text(r: Option<Rational>) -> String {
    r.map_or_else(|| "n/a".into(), |r| format!("{}/{}", r.numer(), r.denom()))
}

pub fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), Fail> {
    match path {
        Some(p) => fs::write(p, bytes)
            .map_err(|e| Fail::Invalid(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct JsonRate<'a> {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "L")]
    l: usize,
    i: usize,
    #[serde(rename = "M")]
    m: String,
    scheme: &'a str,
    rate: Option<String>,
    rate_decimal: Option<String>,
    #[serde(rename = "F")]
    f: Option<u64>,
    applicable: bool,
    reason: &'a str,
    note: Option<&'a str>,
}

pub fn rates(a: RatesArgs, cfg: &Config) -> Result<(), Fail> {
    let c = corner(&a.corner, cfg)?;
    MaccInstance::new(c.n, c.k, c.l, c.i)?;
    let format = enum_value(a.format, &cfg.format, "format")?.unwrap_or(Format::Csv);
    let m_text = a.m.or_else(|| cfg.m.as_ref().map(flag_text));

    let here = corner_memory(c.n, c.k, c.i);
    let mut reports: Vec<(Rational, RateReport)> = compare(c.k, c.l, c.i)?
        .into_iter()
        .map(|r| (here, r))
        .collect();
    if let Some(t) = m_text {
        let m = parse_rational(&t)?;
        let shared = compare_at_memory(c.n, c.k, c.l, m)?;
        reports.extend(shared.into_iter().map(|r| (m, r)));
    }

    let bytes = match format {
        Format::Csv => {
            let rows: Vec<RateRow> = reports
                .iter()
                .map(|(m, r)| RateRow::new(c.k, c.l, c.i, *m, r))
                .collect();
            let mut buf = Vec::new();
            write_csv(&mut buf, &rows)?;
            buf
        }
        Format::Json => {
            let rows: Vec<JsonRate> = reports
                .iter()
                .map(|(m, r)| JsonRate {
                    k: c.k,
                    l: c.l,
                    i: c.i,
                    m: m.to_string(),
                    scheme: &r.scheme,
                    rate: r.rate.map(|x| ratio_text(Some(x))),
                    rate_decimal: r.rate.map(|x| decimal(x, DIGITS)),
                    f: r.subpacketization,
                    applicable: r.applicable,
                    reason: &r.reason,
                    note: r.note.as_deref(),
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&rows).expect("plain data");
            s.push('\n');
            s.into_bytes()
        }
    };
    write_out(None, &bytes)
}

pub fn plan(a: PlanArgs, cfg: &Config, field_w: Option<u32>) -> Result<(), Fail> {
    let c = corner(&a.corner, cfg)?;
    let inst = MaccInstance::new(c.n, c.k, c.l, c.i)?;
    let mode_arg = need(enum_value(a.mode, &cfg.mode, "mode")?, "--mode")?;
    let mode = to_mode(mode_arg, a.x.or(cfg.x))?;
    let demands = match a.demands.or_else(|| cfg.demands.as_ref().map(flag_text)) {
        Some(t) => DemandProfile::new(&inst, parse_demands(&t)?)?,
        None => DemandProfile::worst_case(&inst),
    };
    let opts = AssembleOptions {
        field: field_w.map(FieldSpec::new).transpose()?,
        ..AssembleOptions::default()
    };
    let plan = assemble_with(&inst, &demands, mode, opts)?;
    let report = verify_plan(&plan);
    if !report.all_ok {
        let bad: Vec<String> = report
            .user_ok
            .iter()
            .enumerate()
            .filter(|(_, ok)| !**ok)
            .map(|(u, _)| (u + 1).to_string())
            .collect();
        return Err(Fail::Verification(format!(
            "users {} cannot decode",
            bad.join(",")
        )));
    }

    let summary = format!(
        "mode {}: rate {} ({}), F={}, {} transmissions, all {} users decode",
        plan.mode,
        ratio_text(Some(plan.total_rate)),
        decimal(plan.total_rate, DIGITS),
        plan.subpacketization,
        plan.n_transmissions(),
        c.k
    );
    let out = a.out.or_else(|| cfg.out.clone());
    let mut body = plan.to_json();
    body.push('\n');
    write_out(out.as_deref(), body.as_bytes())?;
    if out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn parse_union(text: &str) -> Result<UnionIcpDesc, Fail> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| Fail::Invalid(format!("bad union {text:?}; write a1,a2,z")))?;
    match parts[..] {
        [a1, a2, z] => Ok(UnionIcpDesc::new(a1, a2, z)?),
        _ => Err(Fail::Invalid(format!("bad union {text:?}; write a1,a2,z"))),
    }
}

fn oracle_target(a: &OracleArgs, cfg: &Config) -> Result<(String, IcpInstance), Fail> {
    if let Some(path) = &a.icp {
        let text = fs::read_to_string(path)
            .map_err(|e| Fail::Invalid(format!("cannot read {}: {e}", path.display())))?;
        return Ok((path.display().to_string(), IcpInstance::from_json(&text)?));
    }
    if let Some(u) = &a.union {
        let d = parse_union(u)?;
        return Ok((
            format!("union ({},{})_{}", d.a1, d.a2, d.z),
            realize_union(d),
        ));
    }
    let c = corner(&a.corner, cfg)?;
    let inst = MaccInstance::new(c.n, c.k, c.l, c.i)?;
    let demands = match a
        .demands
        .clone()
        .or_else(|| cfg.demands.as_ref().map(flag_text))
    {
        Some(t) => DemandProfile::new(&inst, parse_demands(&t)?)?,
        None => DemandProfile::worst_case(&inst),
    };
    let table = reduce_macc(&inst, &demands)?;
    match a.pair {
        None => Ok((
            format!("table K={} L={} i={}", c.k, c.l, c.i),
            as_icp(&table),
        )),
        Some(j) => {
            let (unions, _) = pair_columns(&table);
            let d = j
                .checked_sub(1)
                .and_then(|j| unions.get(j))
                .ok_or_else(|| Fail::Invalid(format!("pair {j} outside [1, {}]", unions.len())))?;
            Ok((
                format!("pair {j}: union ({},{})_{}", d.a1, d.a2, d.z),
                realize_union(*d),
            ))
        }
    }
}

pub fn oracle(a: OracleArgs, cfg: &Config) -> Result<(), Fail> {
    let (label, icp) = oracle_target(&a, cfg)?;
    let which = enum_value(a.which, &cfg.which, "which")?.unwrap_or(Which::All);
    let defaults = OracleCaps::default();
    let caps = OracleCaps {
        chi_nodes: a.chi_cap.or(cfg.chi_cap).unwrap_or(defaults.chi_nodes),
        mais_nodes: a.mais_cap.or(cfg.mais_cap).unwrap_or(defaults.mais_nodes),
        min_rank_messages: a
            .min_rank_cap
            .or(cfg.min_rank_cap)
            .unwrap_or(defaults.min_rank_messages),
    };
    let max_colors = a
        .max_colors
        .or(cfg.max_colors)
        .unwrap_or(icp.n_nodes().max(1));

    let mut out = json!({
        "target": label,
        "messages": icp.n_messages(),
        "nodes": icp.n_nodes(),
    });
    if matches!(which, Which::All | Which::Mais) {
        out["mais"] = json!(mais_with(&icp, caps)?);
    }
    if matches!(which, Which::All | Which::MinRank) {
        out["min_rank_gf2"] = json!(min_rank_gf2_with(&icp, caps)?);
    }
    if matches!(which, Which::All | Which::Chi) {
        let (chi, coloring) = exhaustive_chi_l_with(&icp, max_colors, caps)?;
        let colors: Vec<usize> = (0..coloring.len()).map(|n| coloring.color(n)).collect();
        out["chi_l"] = json!(chi);
        out["coloring"] = json!(colors);
    }
    let mut s = serde_json::to_string_pretty(&out).expect("plain data");
    s.push('\n');
    write_out(None, s.as_bytes())
}
