//! Run telemetry on disk and summary statistics.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptation::IterationRecord;
use crate::error::{arg_err, Error, Result};
use crate::exec::Exec;
use crate::qoi::QoiSpec;
use crate::rng::Rng;
use crate::sampling::draw_orthogonality;

pub const CSV_HEADER: [&str; 7] = ["iter", "n_samples", "n_basis", "cv_rrmse", "ref_rrmse", "delta_star", "wall_time"];
pub const ABORTED: &str = "aborted";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSummary {
    pub n_basis: usize,
    pub cv_rrmse: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config: serde_json::Value,
    pub records: Vec<IterationRecord>,
    pub summary: Option<SurrogateSummary>,
}

/// Shortest decimal that parses back to the same value.
pub fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn record_fields(r: &IterationRecord) -> [String; 7] {
    [
        r.iter.to_string(),
        r.n_samples.to_string(),
        r.n_basis.to_string(),
        fmt_float(r.cv_rrmse),
        r.ref_rrmse.map(fmt_float).unwrap_or_default(),
        fmt_float(r.delta_star),
        fmt_float(r.wall_time),
    ]
}

/// Incremental CSV writer: one row per record, flushed as it arrives.
pub struct CsvSink<W: Write> {
    out: csv::Writer<W>,
}

impl CsvSink<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> CsvSink<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn push(&mut self, r: &IterationRecord) -> Result<()> {
        self.out.write_record(record_fields(r))?;
        self.out.flush()?;
        Ok(())
    }

    /// Mark the file as the output of a failed run.
    pub fn abort(mut self) -> Result<()> {
        let mut row = vec![ABORTED.to_string()];
        row.resize(CSV_HEADER.len(), String::new());
        self.out.write_record(&row)?;
        self.out.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        self.out.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

pub fn write_csv_to<W: Write>(records: &[IterationRecord], w: W) -> Result<W> {
    let mut sink = CsvSink::new(w)?;
    for r in records {
        sink.push(r)?;
    }
    sink.finish()
}

pub fn write_csv(log: &RunLog, path: &Path) -> Result<()> {
    write_csv_to(&log.records, BufWriter::new(File::create(path)?))?;
    Ok(())
}

/// Parsed CSV contents; `aborted` is set when the trailing marker row is present.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvContents {
    pub records: Vec<IterationRecord>,
    pub aborted: bool,
}

pub fn read_csv_from<R: Read>(r: R) -> Result<CsvContents> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return arg_err(format!("unexpected CSV header {header:?}"));
    }
    let mut out = CsvContents { records: Vec::new(), aborted: false };
    for rec in rdr.records() {
        let rec = rec?;
        if out.aborted {
            return arg_err("rows after the aborted marker");
        }
        if rec.get(0) == Some(ABORTED) {
            out.aborted = true;
            continue;
        }
        let f = |i: usize| rec.get(i).unwrap_or("");
        let int = |i: usize| -> Result<usize> {
            f(i).parse().map_err(|e| Error::Argument(format!("column {}: {e}", CSV_HEADER[i])))
        };
        let real = |i: usize| -> Result<f64> {
            f(i).parse().map_err(|e| Error::Argument(format!("column {}: {e}", CSV_HEADER[i])))
        };
        out.records.push(IterationRecord {
            iter: int(0)?,
            n_samples: int(1)?,
            n_basis: int(2)?,
            cv_rrmse: real(3)?,
            ref_rrmse: if f(4).is_empty() { None } else { Some(real(4)?) },
            delta_star: real(5)?,
            wall_time: real(6)?,
        });
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<CsvContents> {
    read_csv_from(File::open(path)?)
}

/// Sample mean and unbiased sample variance over `n` i.i.d. input draws.
pub fn mc_moments(qoi: &QoiSpec, n: usize, rng: &mut Rng, exec: Exec) -> Result<(f64, f64)> {
    if n < 2 {
        return arg_err("Monte Carlo moments need at least 2 samples");
    }
    let pts = draw_orthogonality(&qoi.families, n, rng);
    let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
    let v = qoi.eval_batch(&refs, exec)?;
    Ok(mean_var(&v))
}

pub(crate) fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Pearson correlation of `log10` values over the pairs where both entries
/// are positive.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return arg_err(format!("correlation of {} and {} values", xs.len(), ys.len()));
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.log10(), y.log10()))
        .unzip();
    if lx.len() < 2 {
        return Err(Error::Undefined(format!("correlation needs 2 positive pairs, got {}", lx.len())));
    }
    let (mx, _) = mean_var(&lx);
    let (my, _) = mean_var(&ly);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a constant sequence".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
