//! Per-iteration run records and their CSV form.
//!
//! The file starts with `# key=value` metadata lines followed by a header row
//! with exactly the columns in [`TRACE_COLUMNS`]. Floats are written in the
//! shortest form that parses back to the same value, and optional cells are
//! left empty.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};

pub const TRACE_COLUMNS: [&str; 8] = [
    "t",
    "i_t",
    "L_next",
    "f_gt_xt",
    "f_gt_xnext",
    "f_gt_yt",
    "f_full",
    "elapsed_s",
];

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    /// Number of modulus doublings the line search needed.
    pub doublings: u32,
    pub l_next: f64,
    pub f_gt_xt: Option<f64>,
    pub f_gt_xnext: Option<f64>,
    pub f_gt_yt: Option<f64>,
    pub f_full: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TraceMeta {
    pub algorithm: String,
    pub eps: f64,
    pub seed: Option<u64>,
    pub l0: f64,
    pub problem: String,
    pub order: String,
    pub x0: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RunTrace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl RunTrace {
    pub fn new(meta: TraceMeta) -> Self {
        RunTrace { meta, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `S_T = Σ 1/L_{t+1}` over all rows.
    pub fn weight_sum(&self) -> f64 {
        self.rows.iter().map(|r| 1.0 / r.l_next).sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let m = &self.meta;
        let mut head = String::new();
        let _ = writeln!(head, "# algorithm={}", m.algorithm);
        let _ = writeln!(head, "# eps={}", fmt_f64(m.eps));
        let _ = writeln!(head, "# seed={}", m.seed.map(|s| s.to_string()).unwrap_or_default());
        let _ = writeln!(head, "# L0={}", fmt_f64(m.l0));
        let _ = writeln!(head, "# problem={}", m.problem);
        let _ = writeln!(head, "# order={}", m.order);
        let x0: Vec<String> = m.x0.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(head, "# x0={}", x0.join(" "));
        out.write_all(head.as_bytes())?;

        let mut w = csv::WriterBuilder::new().from_writer(out);
        w.write_record(TRACE_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.t.to_string(),
                r.doublings.to_string(),
                fmt_f64(r.l_next),
                fmt_opt(r.f_gt_xt),
                fmt_opt(r.f_gt_xnext),
                fmt_opt(r.f_gt_yt),
                fmt_opt(r.f_full),
                fmt_f64(r.elapsed_s),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("trace CSV is UTF-8"))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut meta = TraceMeta::default();
        let mut body = String::new();
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            let Some(rest) = line.trim_end().strip_prefix('#') else {
                body.push_str(&line);
                break;
            };
            let Some((key, value)) = rest.trim_start().split_once('=') else {
                continue;
            };
            parse_meta(&mut meta, key.trim(), value)?;
        }
        reader.read_to_string(&mut body)?;

        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.iter().ne(TRACE_COLUMNS.iter().copied()) {
            return Err(Error::MalformedTrace(format!(
                "unexpected header `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let num = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|_| Error::NonNumeric {
                    line,
                    field: i + 1,
                    value: rec[i].to_string(),
                })
            };
            let opt = |i: usize| -> Result<Option<f64>> {
                if rec[i].is_empty() {
                    Ok(None)
                } else {
                    num(i).map(Some)
                }
            };
            let int = |i: usize| -> Result<u64> {
                rec[i].parse::<u64>().map_err(|_| Error::NonNumeric {
                    line,
                    field: i + 1,
                    value: rec[i].to_string(),
                })
            };
            rows.push(TraceRow {
                t: int(0)? as usize,
                doublings: int(1)? as u32,
                l_next: num(2)?,
                f_gt_xt: opt(3)?,
                f_gt_xnext: opt(4)?,
                f_gt_yt: opt(5)?,
                f_full: opt(6)?,
                elapsed_s: num(7)?,
            });
        }
        Ok(RunTrace { meta, rows })
    }
}

fn parse_meta(meta: &mut TraceMeta, key: &str, value: &str) -> Result<()> {
    let float = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| Error::MalformedTrace(format!("metadata `{key}` is not a number: `{v}`")))
    };
    match key {
        "algorithm" => meta.algorithm = value.to_string(),
        "eps" => meta.eps = float(value)?,
        "seed" => {
            meta.seed = if value.is_empty() {
                None
            } else {
                Some(value.parse().map_err(|_| {
                    Error::MalformedTrace(format!("metadata `seed` is not an integer: `{value}`"))
                })?)
            }
        }
        "L0" => meta.l0 = float(value)?,
        "problem" => meta.problem = value.to_string(),
        "order" => meta.order = value.to_string(),
        "x0" => {
            meta.x0 = value
                .split_whitespace()
                .map(float)
                .collect::<Result<Vec<_>>>()?
        }
        _ => {}
    }
    Ok(())
}
