//! `run` and `compare`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use basepc::adaptation::{base_pc_loop_with, moments, IterationRecord, RunConfig};
use basepc::metrics::{fmt_float, CsvSink, RunLog, SurrogateSummary};
use basepc::qoi::QoiSpec;
use basepc::rng::Streams;
use serde_json::json;

use crate::config::{ExperimentConfig, Method};
use crate::CliError;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn run(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let method = cfg
        .method
        .ok_or_else(|| CliError::Config("method: required for run".into()))?;
    let qoi = cfg.qoi()?;
    let out = cfg.out_dir();
    fs::create_dir_all(&out).map_err(runtime)?;
    run_method(cfg, &qoi, method, &method.apply(&cfg.run), &out)?;
    Ok(out)
}

pub fn compare(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    if cfg.methods.len() < 2 {
        return Err(CliError::Config(format!(
            "methods: compare needs at least 2 methods, got {}",
            cfg.methods.len()
        )));
    }
    let qoi = cfg.qoi()?;
    let out = cfg.out_dir();
    fs::create_dir_all(&out).map_err(runtime)?;
    let base = Streams::new(cfg.seed);
    let mut runs = Vec::new();
    for (i, &m) in cfg.methods.iter().enumerate() {
        let mut rc = m.apply(&cfg.run);
        rc.seed = base.child(i as u64).seed;
        runs.push((m, run_method(cfg, &qoi, m, &rc, &out)?));
    }
    write_summary(&out.join("summary.csv"), &runs)?;
    Ok(out)
}

fn snapshot(cfg: &ExperimentConfig, method: Method, rc: &RunConfig) -> serde_json::Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "qoi": cfg.qoi,
        "d": cfg.d,
        "method": method,
        "run": rc,
    })
}

fn run_method(
    cfg: &ExperimentConfig,
    qoi: &QoiSpec,
    method: Method,
    rc: &RunConfig,
    out: &Path,
) -> Result<Vec<IterationRecord>, CliError> {
    let label = method.label();
    let mut sink = CsvSink::create(&out.join(format!("{label}.csv"))).map_err(runtime)?;
    let mut log = RunLog { config: snapshot(cfg, method, rc), records: Vec::new(), summary: None };
    let result = base_pc_loop_with(rc, qoi, |r| sink.push(r));
    let json_path = out.join(format!("{label}.json"));
    match result {
        Ok(run) => {
            sink.finish().map_err(runtime)?;
            let (mean, variance) = moments(&run.surrogate).map_err(runtime)?;
            log.summary = Some(SurrogateSummary {
                n_basis: run.surrogate.basis.len(),
                cv_rrmse: run.surrogate.cv_rrmse,
                mean,
                variance,
            });
            log.records = run.records;
            write_json(&json_path, &log)?;
            Ok(log.records)
        }
        Err(aborted) => {
            sink.abort().map_err(runtime)?;
            log.records = aborted.records;
            write_json(&json_path, &log)?;
            Err(CliError::Runtime(format!("{label}: {}", aborted.error)))
        }
    }
}

fn write_json(path: &Path, log: &RunLog) -> Result<(), CliError> {
    let f = BufWriter::new(File::create(path).map_err(runtime)?);
    serde_json::to_writer_pretty(f, log).map_err(runtime)
}

// One row per record of the first method; other methods contribute the
// record whose sample count is nearest.
fn write_summary(path: &Path, runs: &[(Method, Vec<IterationRecord>)]) -> Result<(), CliError> {
    let mut header = vec!["n_samples".to_string()];
    for (m, _) in runs {
        let l = m.label();
        for col in ["n_samples", "n_basis", "cv_rrmse", "ref_rrmse"] {
            header.push(format!("{l}.{col}"));
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(runtime)?;
    w.write_record(&header).map_err(runtime)?;
    for key in runs[0].1.iter().map(|r| r.n_samples) {
        let mut row = vec![key.to_string()];
        for (_, recs) in runs {
            match recs.iter().min_by_key(|r| r.n_samples.abs_diff(key)) {
                Some(r) => row.extend([
                    r.n_samples.to_string(),
                    r.n_basis.to_string(),
                    fmt_float(r.cv_rrmse),
                    r.ref_rrmse.map(fmt_float).unwrap_or_default(),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        w.write_record(&row).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}
