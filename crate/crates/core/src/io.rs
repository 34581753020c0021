//! CSV and JSON readers/writers. Floats are written with 17 significant
//! digits so every file reads back bit for bit.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::bench::{CellSummary, CurvePoint, MetricsRow, SelectionCounts, Summary};
use crate::compositional::{Centering, Coefficients};
use crate::error::{Error, Result};
use crate::penalty::PenaltyKind;
use crate::solver::RoundRecord;
use crate::tuning::{parse_support_hex, support_hex, PathPoint};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse {what} '{s}' as a number")))
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse {what} '{s}' as a count")))
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(";")
}

fn split(s: &str, what: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|v| parse_f64(v, what)).collect()
}

fn field<'r>(record: &'r csv::StringRecord, i: usize) -> Result<&'r str> {
    record
        .get(i)
        .ok_or_else(|| Error::Format(format!("missing column {i} in row {:?}", record.position().map(|p| p.line()))))
}

/// Raw dataset columns as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub y: Array1<f64>,
    pub x: Array2<f64>,
    pub v: Array2<f64>,
}

/// Sidecar describing a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub p: usize,
    pub q: usize,
    pub n: usize,
    #[serde(default)]
    pub centering: Option<Centering>,
    #[serde(default)]
    pub truth: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub case: Option<u8>,
}

/// Header `y, x1..xp, v1..vq`, one row per observation.
pub fn write_dataset<W: Write>(out: W, data: &RawDataset) -> Result<()> {
    let (n, p, q) = (data.y.len(), data.x.ncols(), data.v.ncols());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["y".to_string()];
    header.extend((1..=p).map(|j| format!("x{j}")));
    header.extend((1..=q).map(|j| format!("v{j}")));
    w.write_record(&header)?;
    for i in 0..n {
        let mut row = Vec::with_capacity(1 + p + q);
        row.push(fmt_f64(data.y[i]));
        row.extend(data.x.row(i).iter().map(|v| fmt_f64(*v)));
        row.extend(data.v.row(i).iter().map(|v| fmt_f64(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_dataset`]. Columns are recognised by their header names.
pub fn read_dataset<R: Read>(input: R) -> Result<RawDataset> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    let mut y_col = None;
    let mut x_cols = Vec::new();
    let mut v_cols = Vec::new();
    for (i, h) in header.iter().enumerate() {
        let index = |prefix: char| -> Option<usize> {
            h.strip_prefix(prefix).and_then(|rest| rest.parse::<usize>().ok())
        };
        if h == "y" {
            y_col = Some(i);
        } else if let Some(j) = index('x') {
            x_cols.push((j, i));
        } else if let Some(j) = index('v') {
            v_cols.push((j, i));
        } else {
            return Err(Error::Format(format!("unexpected column '{h}'")));
        }
    }
    let y_col = y_col.ok_or_else(|| Error::Format("missing 'y' column".into()))?;
    if x_cols.is_empty() {
        return Err(Error::Format("no compositional 'x' columns".into()));
    }
    x_cols.sort_unstable();
    v_cols.sort_unstable();
    let (mut y, mut x, mut v) = (Vec::new(), Vec::new(), Vec::new());
    for record in r.records() {
        let record = record?;
        y.push(parse_f64(field(&record, y_col)?, "y")?);
        for (_, i) in &x_cols {
            x.push(parse_f64(field(&record, *i)?, "x")?);
        }
        for (_, i) in &v_cols {
            v.push(parse_f64(field(&record, *i)?, "v")?);
        }
    }
    let n = y.len();
    Ok(RawDataset {
        y: Array1::from(y),
        x: Array2::from_shape_vec((n, x_cols.len()), x).map_err(|e| Error::Format(e.to_string()))?,
        v: Array2::from_shape_vec((n, v_cols.len()), v).map_err(|e| Error::Format(e.to_string()))?,
    })
}

pub fn write_json<W: Write, T: Serialize>(out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(out, value)?;
    Ok(())
}

pub fn read_json<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<T> {
    Ok(serde_json::from_reader(input)?)
}

/// Columns `index, block, value` with block `C` or `NC`.
pub fn write_estimate<W: Write>(out: W, estimate: &Coefficients) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "block", "value"])?;
    for (j, v) in estimate.zeta().iter().enumerate() {
        let block = if j < estimate.p() { "C" } else { "NC" };
        w.write_record([j.to_string(), block.to_string(), fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_estimate<R: Read>(input: R) -> Result<Coefficients> {
    let mut r = csv::Reader::from_reader(input);
    let mut values = Vec::new();
    let mut p = 0;
    for record in r.records() {
        let record = record?;
        let j = parse_usize(field(&record, 0)?, "index")?;
        if j != values.len() {
            return Err(Error::Format(format!("estimate index {j} out of order")));
        }
        if field(&record, 1)? == "C" {
            p += 1;
        }
        values.push(parse_f64(field(&record, 2)?, "value")?);
    }
    Ok(Coefficients::new(Array1::from(values), p))
}

const TRACE_HEADER: [&str; 11] = [
    "round",
    "objective",
    "max_consensus",
    "max_zero_sum",
    "max_dual",
    "sweeps",
    "messages",
    "scalars",
    "consensus",
    "zero_sum",
    "dual",
];

/// One row per round; per-machine vectors are `;`-separated.
pub fn write_trace<W: Write>(out: W, trace: &[RoundRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.round.to_string(),
            fmt_f64(r.objective),
            fmt_f64(r.max_consensus),
            fmt_f64(r.max_zero_sum),
            fmt_f64(r.max_dual),
            r.sweeps.to_string(),
            r.messages.to_string(),
            r.scalars.to_string(),
            join(&r.consensus),
            join(&r.zero_sum),
            join(&r.dual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<RoundRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let f = |i| field(&record, i);
        out.push(RoundRecord {
            round: parse_usize(f(0)?, "round")?,
            objective: parse_f64(f(1)?, "objective")?,
            max_consensus: parse_f64(f(2)?, "max_consensus")?,
            max_zero_sum: parse_f64(f(3)?, "max_zero_sum")?,
            max_dual: parse_f64(f(4)?, "max_dual")?,
            sweeps: parse_usize(f(5)?, "sweeps")?,
            messages: parse_usize(f(6)?, "messages")? as u64,
            scalars: parse_usize(f(7)?, "scalars")? as u64,
            consensus: split(f(8)?, "consensus")?,
            zero_sum: split(f(9)?, "zero_sum")?,
            dual: split(f(10)?, "dual")?,
        });
    }
    Ok(out)
}

/// A GIC path row as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRow {
    pub lambda: f64,
    pub gic: f64,
    pub df: usize,
    pub rss: f64,
    pub support: Vec<usize>,
}

impl From<&PathPoint> for PathRow {
    fn from(p: &PathPoint) -> Self {
        Self {
            lambda: p.lambda,
            gic: p.gic,
            df: p.df,
            rss: p.rss,
            support: p.support.clone(),
        }
    }
}

/// Columns `lambda, gic, df, rss, support` with the support as a hex mask.
pub fn write_path<W: Write>(out: W, path: &[PathRow], d: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "gic", "df", "rss", "support"])?;
    for p in path {
        w.write_record([
            fmt_f64(p.lambda),
            fmt_f64(p.gic),
            p.df.to_string(),
            fmt_f64(p.rss),
            support_hex(&p.support, d),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path<R: Read>(input: R) -> Result<Vec<PathRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        out.push(PathRow {
            lambda: parse_f64(field(&record, 0)?, "lambda")?,
            gic: parse_f64(field(&record, 1)?, "gic")?,
            df: parse_usize(field(&record, 2)?, "df")?,
            rss: parse_f64(field(&record, 3)?, "rss")?,
            support: parse_support_hex(field(&record, 4)?)?,
        });
    }
    Ok(out)
}

const SUMMARY_COLUMNS: [&str; 9] = [
    "aee", "fp", "fn", "fp_c", "fp_nc", "fn_c", "fn_nc", "runtime_secs", "rounds",
];

fn summaries(c: &CellSummary) -> [Summary; 9] {
    [
        c.aee,
        c.fp,
        c.fn_,
        c.fp_c,
        c.fp_nc,
        c.fn_c,
        c.fn_nc,
        c.runtime_secs,
        c.rounds,
    ]
}

/// One row per cell with `_mean` and `_se` columns for each metric.
pub fn write_metrics<W: Write>(out: W, cells: &[CellSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["method", "label", "penalty", "K", "sigma", "reps", "failures", "imperfect_reps"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for c in SUMMARY_COLUMNS {
        header.push(format!("{c}_mean"));
        header.push(format!("{c}_se"));
    }
    w.write_record(&header)?;
    for c in cells {
        let mut row = vec![
            c.method.clone(),
            c.label.clone(),
            c.penalty.name().to_string(),
            c.machines.to_string(),
            fmt_f64(c.sigma),
            c.reps.to_string(),
            c.failures.len().to_string(),
            c.imperfect_reps.to_string(),
        ];
        for s in summaries(c) {
            row.push(fmt_f64(s.mean));
            row.push(fmt_f64(s.stderr));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a metrics table back. Failure messages are not stored, so each
/// failure comes back as an empty string.
pub fn read_metrics<R: Read>(input: R) -> Result<Vec<CellSummary>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let f = |i| field(&record, i);
        let mut s = [Summary::default(); 9];
        for (k, slot) in s.iter_mut().enumerate() {
            slot.mean = parse_f64(f(8 + 2 * k)?, "mean")?;
            slot.stderr = parse_f64(f(9 + 2 * k)?, "stderr")?;
        }
        out.push(CellSummary {
            method: f(0)?.to_string(),
            label: f(1)?.to_string(),
            penalty: f(2)?.parse::<PenaltyKind>()?,
            machines: parse_usize(f(3)?, "K")?,
            sigma: parse_f64(f(4)?, "sigma")?,
            reps: parse_usize(f(5)?, "reps")?,
            failures: vec![String::new(); parse_usize(f(6)?, "failures")?],
            imperfect_reps: parse_usize(f(7)?, "imperfect_reps")?,
            aee: s[0],
            fp: s[1],
            fn_: s[2],
            fp_c: s[3],
            fp_nc: s[4],
            fn_c: s[5],
            fn_nc: s[6],
            runtime_secs: s[7],
            rounds: s[8],
        });
    }
    Ok(out)
}

/// Per-replication rows.
pub fn write_rows<W: Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method", "penalty", "K", "sigma", "rep", "lambda", "aee", "fp_c", "fp_nc", "fn_c", "fn_nc",
        "runtime_secs", "rounds", "converged",
    ])?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.penalty.clone(),
            r.machines.to_string(),
            fmt_f64(r.sigma),
            r.rep.to_string(),
            fmt_f64(r.lambda),
            fmt_f64(r.aee),
            r.counts.fp_c.to_string(),
            r.counts.fp_nc.to_string(),
            r.counts.fn_c.to_string(),
            r.counts.fn_nc.to_string(),
            fmt_f64(r.runtime_secs),
            r.rounds.to_string(),
            r.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let f = |i| field(&record, i);
        out.push(MetricsRow {
            method: f(0)?.to_string(),
            penalty: f(1)?.to_string(),
            machines: parse_usize(f(2)?, "K")?,
            sigma: parse_f64(f(3)?, "sigma")?,
            rep: parse_usize(f(4)?, "rep")?,
            lambda: parse_f64(f(5)?, "lambda")?,
            aee: parse_f64(f(6)?, "aee")?,
            counts: SelectionCounts {
                fp_c: parse_usize(f(7)?, "fp_c")?,
                fp_nc: parse_usize(f(8)?, "fp_nc")?,
                fn_c: parse_usize(f(9)?, "fn_c")?,
                fn_nc: parse_usize(f(10)?, "fn_nc")?,
            },
            runtime_secs: parse_f64(f(11)?, "runtime_secs")?,
            rounds: parse_usize(f(12)?, "rounds")?,
            converged: f(13)? == "true",
        });
    }
    Ok(out)
}

/// Columns `L, B, aee, distance` (distance empty when no reference was used).
pub fn write_curve<W: Write>(out: W, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["L", "B", "aee", "distance"])?;
    for p in points {
        w.write_record([
            p.rounds.to_string(),
            p.sweeps.to_string(),
            fmt_f64(p.aee),
            p.distance.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve<R: Read>(input: R) -> Result<Vec<CurvePoint>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let distance = match field(&record, 3)? {
            "" => None,
            s => Some(parse_f64(s, "distance")?),
        };
        out.push(CurvePoint {
            rounds: parse_usize(field(&record, 0)?, "L")?,
            sweeps: parse_usize(field(&record, 1)?, "B")?,
            aee: parse_f64(field(&record, 2)?, "aee")?,
            distance,
        });
    }
    Ok(out)
}
