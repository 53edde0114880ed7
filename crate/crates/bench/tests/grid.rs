use std::fs;

use scare_bench::grid::{run_grid, slug, ExperimentConfig, ProblemSource};
use scare_bench::report::{trace_csv, without_timings, CSV_HEADER};
use scare_bench::validate::{stochastic_heat, stochastic_heat_spec};
use scare_bench::HeatSpec;
use scare_core::engine::{radi_solve, SolveOptions, StopReason};
use tempfile::tempdir;

fn small(spec: HeatSpec) -> ProblemSource {
    ProblemSource::Generate(spec.to_string())
}

#[test]
fn config_defaults_and_cases() {
    let cfg = ExperimentConfig::from_json(r#"{"problem": {"generate": "heat:n=50,m=2,l=2"}}"#).unwrap();
    assert_eq!(cfg.r, [1, 2, 5]);
    assert_eq!(cfg.shift_variants().unwrap().len(), 12);
    let labels: Vec<String> = cfg.cases().unwrap().into_iter().map(|c| c.label).collect();
    assert_eq!(labels, ["r1", "r2_ns1e-5", "r2_ns1e-4", "r2_ns1e-3", "r2_ns1e-2", "r5"]);
    let cases = cfg.cases().unwrap();
    // The combined case reuses the blocks of the single-term cases.
    assert_eq!(cases[5].terms[2], cases[3].terms[0]);

    assert!(ExperimentConfig::from_json(r#"{"problem": {"generate": "heat"}, "r": [4], "noise_scales": [1e-3]}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"problem": {"generate": "heat"}, "variants": ["hami x"]}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"problem": {"generate": "heat"}, "bogus": 1}"#).is_err());
}

#[test]
fn unit_tolerance_converges_without_iterating() {
    let mut cfg = ExperimentConfig::new(small(HeatSpec::new(120, 3, 2)));
    cfg.r = vec![1];
    cfg.tol = 1.0;
    let g = run_grid(&cfg).unwrap();
    assert_eq!(g.cells.len(), 12);
    for c in &g.cells {
        assert!(c.report.summary.converged);
        assert_eq!(c.report.summary.iterations, 0);
    }
}

#[test]
fn outputs_mirror_the_engine() {
    let dir = tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(small(HeatSpec::new(120, 3, 2)));
    cfg.r = vec![1, 2];
    cfg.noise_scales = vec![1e-3];
    cfg.variants = vec!["hami 1".into(), "proj c 2".into()];
    cfg.output_dir = Some(dir.path().to_path_buf());
    let g = run_grid(&cfg).unwrap();
    assert_eq!(g.cells.len(), 4);

    let p = cfg.problem.load(cfg.seed).unwrap().into_standard().unwrap();
    let (_, direct) = radi_solve(&p, &cfg.solve_options("hami 1".parse().unwrap())).unwrap();
    let cell = &g.cells[0];
    assert_eq!((cell.case.as_str(), cell.report.shift.as_str()), ("r1", "hami 1"));
    assert_eq!(cell.report.nres_history(), direct.nres_history());

    let csv = fs::read_to_string(dir.path().join("r1").join(format!("{}.csv", slug("hami 1")))).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), direct.records.len() + 1);
    assert_eq!(rows[0][2], "1");
    for (row, rec) in rows[1..].iter().zip(&direct.records) {
        assert_eq!(row.len(), 11);
        assert_eq!(row[2].parse::<f64>().unwrap(), rec.nres);
        assert_eq!(row[4].parse::<usize>().unwrap(), rec.cols_xi);
    }
    assert_eq!(csv, trace_csv(&cell.report, 2));
    assert!(dir.path().join("r2_ns1e-3").join("proj_c_2.csv").is_file());

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(json["provenance"].as_str().unwrap().starts_with("scare-radi "));
    assert_eq!(json["config"]["noise_scales"][0], 1e-3);
    assert_eq!(json["cells"].as_array().unwrap().len(), 4);
    let table = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(table.lines().next().unwrap().contains("ite"));
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn timings_partition_each_iteration() {
    let p = stochastic_heat(150, 0).unwrap();
    let (_, report) = radi_solve(&p, &SolveOptions::default()).unwrap();
    for r in &report.records {
        let t = &r.timings;
        for v in [t.shift, t.solve, t.ltimes, t.svd, t.other] {
            assert!(v >= 0.0);
        }
    }
    let total: f64 = report.records.iter().map(|r| r.timings.total()).sum();
    assert!(total <= report.summary.wall_time * 1.05);
}

#[test]
fn repeated_grids_agree() {
    let mut cfg = ExperimentConfig::new(small(stochastic_heat_spec(120, 3, 2)));
    cfg.variants = vec!["hami 2".into(), "proj 1".into(), "hami c 1".into()];
    let a = run_grid(&cfg).unwrap();
    let b = run_grid(&cfg).unwrap();
    for (x, y) in a.cells.iter().zip(&b.cells) {
        let (x, y) = (without_timings(&x.report), without_timings(&y.report));
        assert_eq!(serde_json::to_string(&x).unwrap(), serde_json::to_string(&y).unwrap());
    }
    assert!(a.cells.iter().all(|c| c.report.summary.reason != StopReason::Failed));
}
