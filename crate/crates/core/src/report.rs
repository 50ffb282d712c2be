//! Tabular and JSON outputs: sweep rows, traces, grouped summaries and
//! heatmap grids.
//!
//! Numbers are written with at most 9 significant digits, `.` as decimal
//! separator and `NaN` for missing values, so files are locale-independent
//! and byte-stable across runs.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::FrequencyTrace;
use crate::error::{Error, Result};
use crate::metrics::{ComplianceReport, FrequencyMetrics, RocofLimits};
use crate::sweep::{
    fit_regression, summarize, GroupBy, GroupSummary, Heatmap, RegressionFit, SweepRow,
    VerifiedColumns,
};

/// Shortest decimal that round-trips the value rounded to 9 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    // avoid "-0"
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded}")
}

/// Value as it reads back after a round trip through the tabular outputs.
pub fn quantize(x: f64) -> f64 {
    fmt_num(x).parse().unwrap_or(x)
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("io: {e}"))
}

fn window_label(w: f64) -> String {
    format!("rocof_{}s_hz_per_s", fmt_num(w))
}

/// Header of the sizing columns, common to `size`, `sweep` and `verify` outputs.
pub fn sizing_header(limits: &RocofLimits) -> Vec<String> {
    let mut h: Vec<String> = [
        "id",
        "res_share",
        "imbalance_pu",
        "h_thermal_s",
        "h_hydro_s",
        "h_eq_sync_s",
        "nadir_hz",
        "t_nadir_s",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(limits.windows().map(window_label));
    h.extend(
        [
            "steady_state_dev_hz",
            "nadir_ok",
            "blackout_risk",
            "rocof_ok",
            "worst_window_s",
            "worst_exceedance_pct",
            "h_eq_min_s",
            "h_res_required_s",
            "h_res_capped_s",
            "h_res_feasible",
            "dp_add_required_pu",
            "status",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

/// Header of the post-sizing compliance columns.
pub fn verified_header(limits: &RocofLimits) -> Vec<String> {
    let mut h = vec!["verified_nadir_hz".to_string()];
    h.extend(
        limits
            .windows()
            .map(|w| format!("verified_{}", window_label(w))),
    );
    h.extend(
        ["verified_nadir_ok", "verified_rocof_ok", "verified_pass"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

fn sizing_fields(r: &SweepRow) -> Vec<String> {
    let mut f = vec![
        r.id.clone(),
        fmt_num(r.res_share),
        fmt_num(r.imbalance),
        fmt_num(r.h_thermal),
        fmt_num(r.h_hydro),
        fmt_num(r.h_eq_sync),
        fmt_num(r.nadir),
        fmt_num(r.t_nadir),
    ];
    f.extend(r.rocof.iter().map(|v| fmt_num(*v)));
    f.extend([
        fmt_num(r.steady_state_dev),
        r.nadir_ok.to_string(),
        r.blackout_risk.to_string(),
        r.rocof_ok.to_string(),
        r.worst_window.map(fmt_num).unwrap_or_default(),
        fmt_num(r.worst_exceedance_pct),
        fmt_num(r.h_eq_min),
        fmt_num(r.h_res_required),
        fmt_num(r.h_res_capped),
        r.h_res_feasible.to_string(),
        fmt_num(r.dp_add_required),
        r.status.clone(),
    ]);
    f
}

fn verified_fields(v: Option<&VerifiedColumns>, windows: usize) -> Vec<String> {
    match v {
        Some(v) => {
            let mut f = vec![fmt_num(v.nadir)];
            f.extend(v.rocof.iter().map(|x| fmt_num(*x)));
            f.extend([
                v.nadir_ok.to_string(),
                v.rocof_ok.to_string(),
                v.passes().to_string(),
            ]);
            f
        }
        None => vec![String::new(); windows + 4],
    }
}

/// Writes rows as CSV; the verification columns are included when
/// `with_verified` is set.
pub fn write_rows<W: Write>(
    out: W,
    rows: &[SweepRow],
    limits: &RocofLimits,
    with_verified: bool,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = sizing_header(limits);
    if with_verified {
        header.extend(verified_header(limits));
    }
    w.write_record(&header).map_err(io_err)?;
    for r in rows {
        let mut fields = sizing_fields(r);
        if with_verified {
            fields.extend(verified_fields(r.verified.as_ref(), limits.len()));
        }
        w.write_record(&fields).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

struct Columns {
    names: Vec<String>,
}

impl Columns {
    fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::InvalidParameter(format!("rows file lacks column {name}")))
    }
}

fn parse_f64(s: &str, col: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("line {line}: bad number {s:?} in {col}")))
}

fn parse_bool(s: &str, col: &str, line: usize) -> Result<bool> {
    match s.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::InvalidParameter(format!(
            "line {line}: bad flag {s:?} in {col}"
        ))),
    }
}

/// Reads rows written by [`write_rows`]. Verification columns are read when
/// present and non-empty.
pub fn read_rows<R: Read>(input: R, limits: &RocofLimits) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let cols = Columns {
        names: rdr
            .headers()
            .map_err(io_err)?
            .iter()
            .map(str::to_string)
            .collect(),
    };
    let sizing = sizing_header(limits);
    let idx: Vec<usize> = sizing
        .iter()
        .map(|n| cols.index(n))
        .collect::<Result<_>>()?;
    let vh = verified_header(limits);
    let vidx: Option<Vec<usize>> = vh.iter().map(|n| cols.index(n).ok()).collect();
    let nw = limits.len();

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(io_err)?;
        let get = |k: usize| rec.get(idx[k]).unwrap_or("");
        let num = |k: usize| parse_f64(get(k), &sizing[k], line);
        let flag = |k: usize| parse_bool(get(k), &sizing[k], line);
        let after = 8 + nw;
        let worst = get(after + 4);
        let verified = match &vidx {
            Some(v) if !rec.get(v[0]).unwrap_or("").is_empty() => {
                let vget = |k: usize| rec.get(v[k]).unwrap_or("");
                Some(VerifiedColumns {
                    nadir: parse_f64(vget(0), &vh[0], line)?,
                    rocof: (0..nw)
                        .map(|j| parse_f64(vget(1 + j), &vh[1 + j], line))
                        .collect::<Result<_>>()?,
                    nadir_ok: parse_bool(vget(1 + nw), &vh[1 + nw], line)?,
                    rocof_ok: parse_bool(vget(2 + nw), &vh[2 + nw], line)?,
                })
            }
            _ => None,
        };
        rows.push(SweepRow {
            id: get(0).to_string(),
            res_share: num(1)?,
            imbalance: num(2)?,
            h_thermal: num(3)?,
            h_hydro: num(4)?,
            h_eq_sync: num(5)?,
            nadir: num(6)?,
            t_nadir: num(7)?,
            rocof: (0..nw).map(|j| num(8 + j)).collect::<Result<_>>()?,
            steady_state_dev: num(after)?,
            nadir_ok: flag(after + 1)?,
            blackout_risk: flag(after + 2)?,
            rocof_ok: flag(after + 3)?,
            worst_window: if worst.is_empty() {
                None
            } else {
                Some(num(after + 4)?)
            },
            worst_exceedance_pct: num(after + 5)?,
            h_eq_min: num(after + 6)?,
            h_res_required: num(after + 7)?,
            h_res_capped: num(after + 8)?,
            h_res_feasible: flag(after + 9)?,
            dp_add_required: num(after + 10)?,
            status: get(after + 11).to_string(),
            verified,
        });
    }
    Ok(rows)
}

/// `t_s, delta_f_hz, p_thermal_pu, p_hydro_pu` per sample.
pub fn write_trace<W: Write>(out: W, trace: &FrequencyTrace) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["t_s", "delta_f_hz", "p_thermal_pu", "p_hydro_pu"])
        .map_err(io_err)?;
    for k in 0..trace.len() {
        w.write_record([
            fmt_num(trace.time(k)),
            fmt_num(trace.delta_f[k]),
            fmt_num(trace.p_thermal[k]),
            fmt_num(trace.p_hydro[k]),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Metrics block emitted next to a single-scenario trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsBlock {
    pub scenario_id: String,
    pub h_eq: f64,
    pub metrics: FrequencyMetrics,
    pub compliance: ComplianceReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCounts {
    pub rows: usize,
    pub ok: usize,
    pub failed: usize,
    pub rocof_compliant: usize,
    pub nadir_compliant: usize,
    pub blackout_risk: usize,
    pub h_res_feasible: usize,
    pub verified_pass: usize,
    pub verified_nadir_ok: usize,
    pub max_h_res_required: f64,
    pub max_dp_add_required: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub counts: SweepCounts,
    pub by_res_level: Vec<GroupSummary>,
    pub by_imbalance: Vec<GroupSummary>,
    pub by_imbalance_band: Vec<GroupSummary>,
    pub regression: Option<RegressionFit>,
    pub regression_error: Option<String>,
}

fn max_of<'a>(rows: impl Iterator<Item = &'a SweepRow>, f: impl Fn(&SweepRow) -> f64) -> f64 {
    rows.map(f).filter(|v| !v.is_nan()).fold(f64::NAN, f64::max)
}

/// Aggregates computed from the rows alone.
pub fn build_summary(rows: &[SweepRow]) -> Summary {
    let ok = || rows.iter().filter(|r| r.is_ok());
    let counts = SweepCounts {
        rows: rows.len(),
        ok: ok().count(),
        failed: rows.len() - ok().count(),
        rocof_compliant: ok().filter(|r| r.rocof_ok).count(),
        nadir_compliant: ok().filter(|r| r.nadir_ok).count(),
        blackout_risk: ok().filter(|r| r.blackout_risk).count(),
        h_res_feasible: ok().filter(|r| r.h_res_feasible).count(),
        verified_pass: ok()
            .filter(|r| r.verified.as_ref().is_some_and(|v| v.passes()))
            .count(),
        verified_nadir_ok: ok()
            .filter(|r| r.verified.as_ref().is_some_and(|v| v.nadir_ok))
            .count(),
        max_h_res_required: max_of(ok(), |r| r.h_res_required),
        max_dp_add_required: max_of(ok(), |r| r.dp_add_required),
    };
    let (regression, regression_error) = match fit_regression(rows) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Summary {
        counts,
        by_res_level: summarize(rows, GroupBy::ResLevel),
        by_imbalance: summarize(rows, GroupBy::Imbalance),
        by_imbalance_band: summarize(rows, GroupBy::ImbalanceBand),
        regression,
        regression_error,
    }
}

pub fn write_json<W: Write, T: Serialize>(out: W, value: &T) -> Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, value).map_err(io_err)?;
    out.write_all(b"\n").map_err(io_err)
}

/// Heatmap as CSV: imbalance rows, RES-level columns.
pub fn write_heatmap<W: Write>(out: W, map: &Heatmap) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec!["imbalance_pu\\res_share".to_string()];
    header.extend(map.res_levels.iter().map(|r| fmt_num(*r)));
    w.write_record(&header).map_err(io_err)?;
    for (dp, row) in map.imbalances.iter().zip(&map.values) {
        let mut rec = vec![fmt_num(*dp)];
        rec.extend(row.iter().map(|v| fmt_num(*v)));
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub complete: bool,
    pub rows_expected: usize,
    pub rows_written: usize,
    pub files: Vec<String>,
}
