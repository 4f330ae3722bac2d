//! Command-line runs end to end: argument handling, output files and exit codes.

use sgeuler::cli::{
    config_from_metadata, main_with_args, parse_config, run_experiment, CoriolisSpec, Horizon, Invocation, RunConfig,
};
use std::fs;
use std::path::Path;
use tempfile::TempDir;

fn argv(args: &[&str]) -> Vec<String> {
    std::iter::once("sgeuler").chain(args.iter().copied()).map(String::from).collect()
}

fn single(args: &[&str]) -> RunConfig {
    match parse_config(&argv(args)).unwrap() {
        Invocation::Single(c) => c,
        other => panic!("expected a single run, got {other:?}"),
    }
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn repeated_runs_write_identical_series() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = out_arg(dir);
        let code = main_with_args(&argv(&[
            "--grid", "6", "--preset", "bump", "--dt", "0.01", "--steps", "4", "--out", &out,
        ]));
        assert_eq!(code, 0);
    }
    let sa = fs::read(a.join("series.csv")).unwrap();
    assert!(!sa.is_empty());
    assert_eq!(sa, fs::read(b.join("series.csv")).unwrap());
}

#[test]
fn series_has_header_and_one_row_per_logged_state() {
    let tmp = TempDir::new().unwrap();
    let out = out_arg(tmp.path());
    let cfg = single(&[
        "--grid", "6", "--preset", "tilt", "--tilt", "0.1,-0.2,0.05", "--dt", "0.01", "--steps", "4",
        "--log-every", "3", "--out", &out,
    ]);
    let report = run_experiment(&cfg).unwrap();
    assert!(report.halt.is_completed());
    let text = fs::read_to_string(tmp.path().join("series.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("step,time,energy,l2_gradP"));
    assert!(header.ends_with("est_ratio_u,est_ratio_Au"));
    let rows = data_rows(&tmp.path().join("series.csv"));
    let steps: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(steps, ["0", "3", "4"]);
    assert!(rows.iter().all(|r| r.len() == 23));
    assert_eq!(report.records_written, 3);
}

#[test]
fn metadata_round_trips_the_configuration() {
    let tmp = TempDir::new().unwrap();
    let out = out_arg(tmp.path());
    let cfg = single(&[
        "--grid", "5,6,7", "--extent", "1,1.5,2", "--origin", "-0.5,0,0.25", "--preset", "quadratic",
        "--quad", "2,1,0.5", "--steps", "2", "--tmax", "0.02", "--coriolis", "profile:0.05", "--out", &out,
    ]);
    run_experiment(&cfg).unwrap();
    let text = fs::read_to_string(tmp.path().join("run.json")).unwrap();
    assert_eq!(config_from_metadata(&text).unwrap(), cfg);
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["steps_taken"], 2);
    assert_eq!(json["halt"]["kind"], "completed");
    assert!(json["constants"]["tau_star"].as_f64().unwrap() > 0.0);
}

#[test]
fn snapshots_follow_the_requested_cadence() {
    let tmp = TempDir::new().unwrap();
    let out = out_arg(tmp.path());
    let cfg = single(&[
        "--grid", "5", "--preset", "bump", "--dt", "0.01", "--steps", "7", "--emit", "csv,fields",
        "--snap-every", "3", "--out", &out,
    ]);
    let report = run_experiment(&cfg).unwrap();
    let names: Vec<String> = report
        .snapshots
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["fields_0003.vtk", "fields_0006.vtk"]);
    let vtk = fs::read_to_string(tmp.path().join("fields_0003.vtk")).unwrap();
    assert!(vtk.contains("DIMENSIONS 5 5 5"));
    assert!(vtk.contains("VECTORS u double"));
}

#[test]
fn over_determined_schedule_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = out_arg(tmp.path());
    let code = main_with_args(&argv(&["--dt", "0.1", "--steps", "3", "--tmax", "1", "--out", &out]));
    assert_eq!(code, 2);
    assert_eq!(main_with_args(&argv(&["--preset", "sphere"])), 2);
    assert_eq!(main_with_args(&argv(&["--grid", "3"])), 2);
    assert!(!tmp.path().join("series.csv").exists());
}

#[test]
fn auto_horizon_uses_the_existence_time() {
    let tmp = TempDir::new().unwrap();
    let out = out_arg(tmp.path());
    let cfg = single(&["--grid", "5", "--preset", "bump", "--auto-tau", "--dt", "0.002", "--out", &out]);
    assert_eq!(cfg.horizon, Horizon::AutoTau);
    let report = run_experiment(&cfg).unwrap();
    let tau = report.constants.tau_star;
    assert!((report.schedule.horizon - tau).abs() < 1e-12 * tau);
    assert!(report.schedule.epsilon <= 0.002);
    assert_eq!(report.steps_taken, report.schedule.steps);
}

#[test]
fn flags_override_config_file() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("run.cfg");
    fs::write(&file, "# base\npreset = bump\nsteps = 7\ngrid = 6\n").unwrap();
    let cfg = single(&["--config", file.to_str().unwrap(), "--steps", "3"]);
    assert_eq!(cfg.steps, Some(3));
    assert_eq!(cfg.dims, [6; 3]);
    assert_eq!(cfg.preset(), sgeuler::stepper::Preset::Bump { delta: 0.01, k: 1.0 });
}

#[test]
fn sweep_runs_every_line_into_its_own_directory() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("sweep.txt");
    fs::write(&file, "--preset identity\n# comment\n--preset tilt --tilt 0.1,0,0\n").unwrap();
    let out = out_arg(tmp.path());
    let code = main_with_args(&argv(&[
        "--grid", "5", "--dt", "0.01", "--steps", "2", "--sweep", file.to_str().unwrap(), "--out", &out,
    ]));
    assert_eq!(code, 0);
    for idx in 0..2 {
        let dir = tmp.path().join(format!("sweep_{idx}"));
        assert_eq!(data_rows(&dir.join("series.csv")).len(), 3);
        assert!(dir.join("run.json").exists());
    }
}

#[test]
fn unit_rotation_file_reproduces_the_constant_rotation_run() {
    let tmp = TempDir::new().unwrap();
    let samples = tmp.path().join("f.txt");
    fs::write(&samples, vec!["1"; 125].join(" ")).unwrap();
    let file_arg = format!("file:{}", samples.display());
    let base = ["--grid", "5", "--preset", "bump", "--dt", "0.01", "--steps", "3"];
    let series = |extra: &[&str], dir: &str| {
        let out = out_arg(&tmp.path().join(dir));
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--out", &out]);
        let cfg = single(&args);
        run_experiment(&cfg).unwrap();
        (cfg, fs::read(tmp.path().join(dir).join("series.csv")).unwrap())
    };
    let (cfg, with_file) = series(&["--coriolis", &file_arg], "file");
    assert!(matches!(cfg.coriolis, CoriolisSpec::File(_)));
    let (_, plain) = series(&[], "plain");
    assert_eq!(with_file, plain);
}

#[test]
fn short_rotation_file_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let samples = tmp.path().join("f.txt");
    fs::write(&samples, "1 1 1").unwrap();
    let file_arg = format!("file:{}", samples.display());
    let out = out_arg(&tmp.path().join("run"));
    let code = main_with_args(&argv(&["--grid", "5", "--steps", "1", "--coriolis", &file_arg, "--out", &out]));
    assert_eq!(code, 1);
}

#[test]
fn strict_mode_flags_an_early_halt() {
    let tmp = TempDir::new().unwrap();
    let args = |dir: &str, strict: bool| {
        let out = out_arg(&tmp.path().join(dir));
        let mut a = vec![
            "--grid".to_string(), "6".into(), "--preset".into(), "bump".into(), "--steps".into(), "2".into(),
            "--maxiter".into(), "1".into(), "--tol".into(), "1e-14".into(), "--out".into(), out,
        ];
        if strict {
            a.push("--strict".into());
        }
        std::iter::once("sgeuler".to_string()).chain(a).collect::<Vec<_>>()
    };
    assert_eq!(main_with_args(&args("lenient", false)), 0);
    assert_eq!(main_with_args(&args("strict", true)), 3);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("strict/run.json")).unwrap()).unwrap();
    assert_eq!(json["halt"]["kind"], "solver_failure");
    assert_eq!(json["steps_taken"], 0);
}

#[test]
fn identity_run_logs_constant_energy_and_unit_convexity() {
    let tmp = TempDir::new().unwrap();
    let out = out_arg(tmp.path());
    assert_eq!(main_with_args(&argv(&["--grid", "6", "--steps", "3", "--out", &out])), 0);
    let rows = data_rows(&tmp.path().join("series.csv"));
    assert_eq!(rows.len(), 4);
    // E = -∫x₃² = -1/3; the midpoint rule adds h²/12.
    let h: f64 = 1.0 / 6.0;
    for r in &rows {
        let energy: f64 = r[2].parse().unwrap();
        let lambda: f64 = r[7].parse().unwrap();
        assert!((energy - (-1.0 / 3.0 + h * h / 12.0)).abs() < 1e-12, "energy {energy}");
        assert!((lambda - 1.0).abs() < 1e-12, "lambda_min {lambda}");
    }
}

#[test]
fn help_is_not_an_error() {
    assert_eq!(main_with_args(&argv(&["--help"])), 0);
    assert_eq!(main_with_args(&argv(&["--version"])), 0);
}
