use basepc::adaptation::{base_pc_loop, base_pc_loop_with, RunConfig, SampleMode};
use basepc::metrics::{read_csv, write_csv, CsvSink, RunLog};
use basepc::qoi::lookup;
use basepc::sampling::SamplePool;
use basepc::validation::CvConfig;
use basepc::Exec;

fn quick(exec: Exec) -> RunConfig {
    RunConfig {
        max_iterations: 3,
        record_wall_time: false,
        n_ref: Some(2000),
        seed: 11,
        cv: CvConfig { folds: 6, exec, ..CvConfig::default() },
        exec,
        ..RunConfig::default()
    }
}

#[test]
fn runs_do_not_depend_on_execution_policy() {
    let q = lookup("franke", None).unwrap();
    let seq = base_pc_loop(&quick(Exec::Sequential), &q).unwrap();
    let par = base_pc_loop(&quick(Exec::Parallel), &q).unwrap();
    assert_eq!(seq.records, par.records);
    assert_eq!(seq.surrogate, par.surrogate);
    assert_eq!(seq.pool, par.pool);
}

#[test]
fn no_sa_and_total_order_runs_are_reproducible() {
    let q = lookup("sine_decay", Some(4)).unwrap();
    for cfg in [
        RunConfig { sample_mode: SampleMode::Orthogonality, ..quick(Exec::Parallel) },
        RunConfig { sample_mode: SampleMode::Orthogonality, fixed_order: Some(3), ..quick(Exec::Parallel) },
    ] {
        let a = base_pc_loop(&cfg, &q).unwrap();
        let b = base_pc_loop(&cfg, &q).unwrap();
        assert_eq!(a.records, b.records);
        assert!(a.pool.points.iter().all(|p| p.weight == 1.0));
        if cfg.fixed_order.is_some() {
            assert!(a.records.iter().all(|r| r.n_basis == 35));
        }
    }
}

#[test]
fn streamed_and_batch_csv_agree() {
    let q = lookup("franke", None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let streamed = dir.path().join("streamed.csv");
    let mut sink = CsvSink::create(&streamed).unwrap();
    let out = base_pc_loop_with(&quick(Exec::Parallel), &q, |r| sink.push(r)).unwrap();
    sink.finish().unwrap();
    let batch = dir.path().join("batch.csv");
    let log = RunLog { config: serde_json::json!({}), records: out.records.clone(), summary: None };
    write_csv(&log, &batch).unwrap();
    assert_eq!(std::fs::read(&streamed).unwrap(), std::fs::read(&batch).unwrap());
    let back = read_csv(&batch).unwrap();
    assert!(!back.aborted);
    assert_eq!(back.records, out.records);
}

#[test]
fn pool_text_round_trip() {
    let q = lookup("franke", None).unwrap();
    let out = base_pc_loop(&quick(Exec::Parallel), &q).unwrap();
    let mut buf = Vec::new();
    out.pool.write_text(&mut buf).unwrap();
    let back = SamplePool::read_text(buf.as_slice(), out.pool.source).unwrap();
    assert_eq!(back.points, out.pool.points);
}

#[test]
fn aborted_run_keeps_completed_records() {
    let q = lookup("franke", None).unwrap();
    let cfg = RunConfig { n0: Some(40), max_evaluations: Some(20), ..quick(Exec::Parallel) };
    let err = base_pc_loop(&cfg, &q).unwrap_err();
    assert!(err.records.is_empty());
    assert!(err.to_string().contains("evaluation budget"), "{err}");
}
