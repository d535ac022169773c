use std::fs;
use std::path::Path;
use std::process::Command;

use ppcm_bench::commands::{MANIFEST_FILE, MATRIX_FILE, REPORT_FILE, RHS_FILE};
use ppcm_bench::report::average_errors;
use ppcm_bench::{
    cmd_compare, cmd_generate, cmd_run, BenchError, ComparisonReport, ConstraintSpec, ExperimentConfig, Manifest,
    MethodSpec, ProblemSpec,
};
use tempfile::tempdir;

fn lsq(m: usize, n: usize, p: usize, seed: u64, out: &Path) -> ExperimentConfig {
    ExperimentConfig { problem: ProblemSpec::Lsq { m, n, seed }, p, output_dir: out.to_path_buf(), ..Default::default() }
}

fn toy(methods: Vec<MethodSpec>, out: &Path) -> ExperimentConfig {
    ExperimentConfig { problem: ProblemSpec::Toy, methods, output_dir: out.to_path_buf(), ..Default::default() }
}

#[test]
fn generate_writes_matrix_files_and_manifest() {
    let dir = tempdir().unwrap();
    let cfg = lsq(200, 10, 2, 7, dir.path());
    let manifest = cmd_generate(&cfg).unwrap();
    assert_eq!(manifest.partition, vec![(0, 100), (100, 200)]);

    let b = fs::read_to_string(dir.path().join(MATRIX_FILE)).unwrap();
    let mut lines = b.lines();
    assert_eq!(lines.next(), Some("200 10"));
    assert_eq!(lines.clone().count(), 200);
    assert!(lines.all(|l| l.split(' ').count() == 10));
    assert!(fs::read_to_string(dir.path().join(RHS_FILE)).unwrap().starts_with("200 1\n"));
    let on_disk: Manifest = serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(on_disk, manifest);
    assert_eq!(on_disk.seed, Some(7));

    let again = tempdir().unwrap();
    cmd_generate(&lsq(200, 10, 2, 7, again.path())).unwrap();
    for f in [MATRIX_FILE, RHS_FILE, MANIFEST_FILE] {
        assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(again.path().join(f)).unwrap());
    }
}

#[test]
fn generate_rejects_wide_instances() {
    let dir = tempdir().unwrap();
    let err = cmd_generate(&lsq(5, 10, 2, 0, dir.path())).unwrap_err();
    assert!(matches!(err, BenchError::Core(ppcm_core::Error::InvalidDimensions(_))));
}

#[test]
fn generated_files_reload_as_the_same_instance() {
    let dir = tempdir().unwrap();
    let gen = lsq(120, 6, 3, 4, &dir.path().join("inst"));
    cmd_generate(&gen).unwrap();
    let direct = cmd_run(&lsq(120, 6, 3, 4, &dir.path().join("a"))).unwrap();
    let from_file = ExperimentConfig {
        problem: ProblemSpec::File { path: dir.path().join("inst") },
        ..lsq(120, 6, 3, 4, &dir.path().join("b"))
    };
    let loaded = cmd_run(&from_file).unwrap();
    assert_eq!(direct.oracle.x_star, loaded.oracle.x_star);
    assert_eq!(direct.methods[0].final_x, loaded.methods[0].final_x);
}

#[test]
fn toy_run_reports_accurate_ppcm() {
    let dir = tempdir().unwrap();
    let report = cmd_run(&toy(vec![MethodSpec::Ppcm], dir.path())).unwrap();
    assert_eq!(report.oracle.x_star, vec![2.0]);
    let ppcm = &report.methods[0];
    assert!(ppcm.converged);
    assert!(ppcm.l2_error.unwrap() <= 1e-3);
    assert_eq!(ComparisonReport::read(&dir.path().join(REPORT_FILE)).unwrap(), report);
}

#[test]
fn diverging_method_is_isolated() {
    let dir = tempdir().unwrap();
    let methods = vec![MethodSpec::Ppcm, MethodSpec::Extragradient(1e6), MethodSpec::PpcmCentralAdaptive(None)];
    let report = cmd_run(&toy(methods, dir.path())).unwrap();
    let by_name = |n: &str| report.methods.iter().find(|m| m.method == n).unwrap();
    assert!(!by_name("extragradient:1000000").converged);
    assert!(by_name("ppcm").converged);
    assert!(by_name("ppcm_central_adaptive").converged);
    assert_eq!(by_name("ppcm_central_adaptive").params["gamma"], 1.9);
}

#[test]
fn solver_errors_are_recorded_per_method() {
    let dir = tempdir().unwrap();
    let cfg = ExperimentConfig {
        topology: ppcm_core::TopologyKind::Ring,
        methods: vec![MethodSpec::Wagm, MethodSpec::Ppcm],
        ..lsq(60, 4, 4, 2, dir.path())
    };
    let report = cmd_run(&cfg).unwrap();
    assert_eq!(report.methods[0].status, "error");
    assert!(report.methods[0].error.as_ref().unwrap().contains("complete"));
    assert!(report.methods[1].converged);
}

#[test]
fn report_accuracy_matches_stored_iterates() {
    let dir = tempdir().unwrap();
    let cfg = ExperimentConfig {
        methods: vec![MethodSpec::Ppcm, MethodSpec::PpcmCentralUnit, MethodSpec::Wagm],
        ..lsq(200, 8, 4, 3, dir.path())
    };
    let report = cmd_run(&cfg).unwrap();
    for m in &report.methods {
        let (l2, linf) = average_errors(&m.final_x, &report.oracle.x_star);
        assert!((m.l2_error.unwrap() - l2).abs() <= 1e-12);
        assert!((m.linf_error.unwrap() - linf).abs() <= 1e-12);
        assert!(m.l2_error.unwrap() >= 0.0);
    }
}

#[test]
fn traces_have_one_row_per_iteration() {
    let dir = tempdir().unwrap();
    let cfg = ExperimentConfig {
        methods: vec![MethodSpec::Ppcm, MethodSpec::PpcmCentralAdaptive(Some(1.5))],
        ..lsq(200, 8, 4, 3, dir.path())
    };
    let report = cmd_run(&cfg).unwrap();
    for (m, file, header) in [
        (&report.methods[0], "trace_ppcm.csv", "round,globalE,consensusGap,maxMu,maxR,objective"),
        (&report.methods[1], "trace_ppcm_central_adaptive_1_5.csv", "iter,E,maxMu,alphaStar,predDistance,objective,consensusGap"),
    ] {
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(header));
        let idx: Vec<usize> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert_eq!(idx.len(), m.iterations);
        assert!(idx.windows(2).all(|w| w[1] == w[0] + 1));
    }
}

#[test]
fn constrained_toy_uses_projected_oracle() {
    let dir = tempdir().unwrap();
    let cfg = ExperimentConfig { constraint: ConstraintSpec::Box { lo: 0.0, hi: 1.5 }, tol: 1e-6, ..toy(vec![MethodSpec::Ppcm], dir.path()) };
    let report = cmd_run(&cfg).unwrap();
    assert_eq!(report.oracle.method, "projected_gradient");
    assert!((report.oracle.x_star[0] - 1.5).abs() < 1e-12);
    assert!(report.methods[0].l2_error.unwrap() < 1e-3);
}

#[test]
fn compare_sorts_rows_and_flags_bad_files() {
    let dir = tempdir().unwrap();
    let p4 = cmd_run(&lsq(200, 8, 4, 3, &dir.path().join("p4"))).unwrap();
    let p2 = cmd_run(&lsq(200, 8, 2, 3, &dir.path().join("p2"))).unwrap();

    let single = cmd_compare(&[dir.path().join("p4").join(REPORT_FILE)]).unwrap();
    assert_eq!(single.csv.lines().count(), 2);
    assert_eq!(single.text.lines().count(), 2);

    let both = cmd_compare(&[dir.path().join("p4").join(REPORT_FILE), dir.path().join("p2").join(REPORT_FILE)]).unwrap();
    let rows: Vec<&str> = both.csv.lines().skip(1).collect();
    assert!(rows[0].starts_with("ppcm,2,") && rows[1].starts_with("ppcm,4,"));
    assert!(rows[0].contains(&format!(",{},", p2.methods[0].iterations)));
    assert!(rows[1].contains(&format!(",{},", p4.methods[0].iterations)));

    let bad = dir.path().join("broken.json");
    fs::write(&bad, "{\"metadata\": 3").unwrap();
    match cmd_compare(&[bad.clone()]) {
        Err(e @ BenchError::SchemaMismatch { .. }) => assert!(e.to_string().contains("broken.json")),
        other => panic!("expected schema mismatch, got {other:?}", other = other.map(|c| c.text)),
    }
}

#[test]
fn cli_flags_override_config_and_set_exit_code() {
    let dir = tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, r#"{"problem":{"kind":"toy"},"methods":["wagm"],"maxIters":5}"#).unwrap();
    let bin = env!("CARGO_BIN_EXE_ppcm");

    let ok = Command::new(bin)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--method", "ppcm", "--max-iters", "500", "--out"])
        .arg(dir.path().join("ok"))
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let report = ComparisonReport::read(&dir.path().join("ok").join(REPORT_FILE)).unwrap();
    assert_eq!(report.metadata.config.methods, vec![MethodSpec::Ppcm]);
    assert_eq!(report.metadata.config.max_iters, 500);

    let capped = Command::new(bin).args(["run", "--config"]).arg(&cfg_path).arg("--out").arg(dir.path().join("bad")).output().unwrap();
    assert!(!capped.status.success());

    let usage = Command::new(bin).args(["run", "--constraint", "box:1"]).output().unwrap();
    assert!(!usage.status.success());
    assert!(String::from_utf8_lossy(&usage.stderr).contains("constraint"));
}
