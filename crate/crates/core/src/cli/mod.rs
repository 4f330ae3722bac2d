//! Command-line orchestration: configuration, runs, sweeps and output files.

mod config;
mod output;

pub use config::{
    parse_config_text, CoriolisSpec, Horizon, PresetName, RunConfig, Schedule, DEFAULT_STEPS, DEFAULT_TMAX, KEYS,
    MIN_RUN_CELLS,
};
pub use output::{csv_row, parse_samples, write_vtk, CSV_HEADER};

use crate::coriolis::{run_coriolis_with_observer, CoriolisError, CoriolisField};
use crate::diagnostics::emit_record;
use crate::divcurl::{DarcySolution, SolverOptions};
use crate::grid::{GridError, GridSpec, ScalarField, VectorField};
use crate::stepper::{
    compute_constants, init_preset, run_with_observer, GeopotentialState, HaltReason, SchemeConfig, SchemeConstants,
    StepOptions, StepSummary, StepperError,
};
use clap::Parser;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Usage(Vec<String>),
    /// Help or version text requested on the command line.
    #[error("{0}")]
    Info(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("Coriolis samples in {path}: {reason}")]
    CoriolisFile { path: PathBuf, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Stepper(#[from] StepperError),
    #[error(transparent)]
    Coriolis(#[from] CoriolisError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Forward Euler semi-geostrophic simulator.
#[derive(Debug, Parser)]
#[command(name = "sgeuler", version, about)]
struct Args {
    /// Cells per axis: N or NX,NY,NZ.
    #[arg(long)]
    grid: Option<String>,
    /// Box lengths LX,LY,LZ.
    #[arg(long)]
    extent: Option<String>,
    /// Lower box corner X,Y,Z.
    #[arg(long, allow_hyphen_values = true)]
    origin: Option<String>,
    /// identity | tilt | quadratic | bump.
    #[arg(long)]
    preset: Option<String>,
    /// Tilt vector a1,a2,a3.
    #[arg(long, allow_hyphen_values = true)]
    tilt: Option<String>,
    /// Diagonal of Q for the quadratic preset.
    #[arg(long)]
    quad: Option<String>,
    /// Bump amplitude.
    #[arg(long, allow_hyphen_values = true)]
    bump_delta: Option<String>,
    /// Bump wavenumber.
    #[arg(long)]
    bump_k: Option<String>,
    /// Largest time step.
    #[arg(long)]
    dt: Option<String>,
    /// Number of steps.
    #[arg(long)]
    steps: Option<String>,
    /// Explicit horizon.
    #[arg(long)]
    tmax: Option<String>,
    /// Use the computed guaranteed existence time as the horizon.
    #[arg(long)]
    auto_tau: bool,
    /// Lebesgue exponent (> 3).
    #[arg(long)]
    p: Option<String>,
    /// Elliptic estimate constant used in the existence time.
    #[arg(long)]
    cstar: Option<String>,
    /// Embedding constant used in the existence time.
    #[arg(long)]
    cm: Option<String>,
    /// off | const:F0 | profile:DELTA | file:PATH.
    #[arg(long)]
    coriolis: Option<String>,
    /// Relative residual target of each solve.
    #[arg(long)]
    tol: Option<String>,
    /// Iteration cap of each solve (default 10 per cell).
    #[arg(long)]
    maxiter: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// csv, fields, or csv,fields.
    #[arg(long)]
    emit: Option<String>,
    /// Steps between field snapshots.
    #[arg(long)]
    snap_every: Option<String>,
    /// Steps between CSV rows; the final state is always logged.
    #[arg(long)]
    log_every: Option<String>,
    /// Exit non-zero when the run halts before the horizon.
    #[arg(long)]
    strict: bool,
    /// File with one argument list per line, run concurrently.
    #[arg(long)]
    sweep: Option<PathBuf>,
    /// Flat key=value file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Args {
    fn into_map(self) -> (BTreeMap<String, String>, Option<PathBuf>, Option<PathBuf>) {
        let mut m = BTreeMap::new();
        let pairs = [
            ("grid", self.grid),
            ("extent", self.extent),
            ("origin", self.origin),
            ("preset", self.preset),
            ("tilt", self.tilt),
            ("quad", self.quad),
            ("bump-delta", self.bump_delta),
            ("bump-k", self.bump_k),
            ("dt", self.dt),
            ("steps", self.steps),
            ("tmax", self.tmax),
            ("p", self.p),
            ("cstar", self.cstar),
            ("cm", self.cm),
            ("coriolis", self.coriolis),
            ("tol", self.tol),
            ("maxiter", self.maxiter),
            ("out", self.out),
            ("emit", self.emit),
            ("snap-every", self.snap_every),
            ("log-every", self.log_every),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        }
        if self.auto_tau {
            m.insert("auto-tau".into(), "true".into());
        }
        if self.strict {
            m.insert("strict".into(), "true".into());
        }
        (m, self.config, self.sweep)
    }
}

/// A single run or a set of independent runs.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Invocation {
    Single(RunConfig),
    Sweep(Vec<RunConfig>),
}

fn flag_map(argv: &[String]) -> Result<(BTreeMap<String, String>, Option<PathBuf>), CliError> {
    let args = Args::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Info(e.to_string()),
        _ => CliError::Usage(vec![e.to_string().trim_end().to_string()]),
    })?;
    let (flags, config, sweep) = args.into_map();
    let mut map = match config {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            parse_config_text(&text).map_err(CliError::Usage)?
        }
        None => BTreeMap::new(),
    };
    map.extend(flags);
    Ok((map, sweep))
}

/// Parses `argv` (program name first), merging `--config` values under the flags.
pub fn parse_config(argv: &[String]) -> Result<Invocation, CliError> {
    let (base, sweep) = flag_map(argv)?;
    let Some(sweep) = sweep else {
        return RunConfig::from_map(&base).map(Invocation::Single).map_err(CliError::Usage);
    };
    let text = fs::read_to_string(&sweep).map_err(io_err(&sweep))?;
    let base_out = base.get("out").cloned().unwrap_or_else(|| "out".into());
    let mut configs = Vec::new();
    let mut errs = Vec::new();
    let lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    for (idx, line) in lines.enumerate() {
        let mut argv = vec!["sgeuler".to_string()];
        argv.extend(line.split_whitespace().map(String::from));
        let (line_map, nested) = match flag_map(&argv) {
            Ok(v) => v,
            Err(e) => {
                errs.push(format!("sweep line {}: {e}", idx + 1));
                continue;
            }
        };
        if nested.is_some() {
            errs.push(format!("sweep line {}: nested --sweep is not allowed", idx + 1));
            continue;
        }
        let mut map = base.clone();
        map.insert("out".into(), format!("{base_out}/sweep_{idx}"));
        map.extend(line_map);
        match RunConfig::from_map(&map) {
            Ok(c) => configs.push(c),
            Err(e) => errs.extend(e.into_iter().map(|m| format!("sweep line {}: {m}", idx + 1))),
        }
    }
    if configs.is_empty() && errs.is_empty() {
        errs.push(format!("sweep file {} has no runs", sweep.display()));
    }
    if errs.is_empty() {
        Ok(Invocation::Sweep(configs))
    } else {
        Err(CliError::Usage(errs))
    }
}

/// What a run produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub schedule: Schedule,
    pub constants: SchemeConstants,
    pub halt: HaltReason,
    pub steps_taken: usize,
    pub final_time: f64,
    pub records_written: usize,
    pub snapshots: Vec<PathBuf>,
}

impl RunReport {
    /// Exit status: 0, or 3 for an early halt under `--strict`.
    pub fn exit_code(&self, strict: bool) -> i32 {
        if strict && !self.halt.is_completed() {
            3
        } else {
            0
        }
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    config: BTreeMap<String, String>,
    schedule: &'a Schedule,
    constants: &'a SchemeConstants,
    halt: &'a HaltReason,
    steps_taken: usize,
    final_time: f64,
    files: Vec<String>,
}

/// Streams records and snapshots as the run visits states.
struct Sink<'a> {
    cfg: &'a RunConfig,
    constants: SchemeConstants,
    csv: Option<csv::Writer<BufWriter<File>>>,
    records: usize,
    last_logged: Option<usize>,
    pending: Option<(GeopotentialState, Option<StepSummary>)>,
    snapshots: Vec<PathBuf>,
    error: Option<CliError>,
}

impl Sink<'_> {
    fn log(&mut self, s: &GeopotentialState, summary: Option<StepSummary>) -> Result<(), CliError> {
        if let Some(w) = self.csv.as_mut() {
            let record = emit_record(s, summary, &self.constants)?;
            w.write_record(csv_row(&record))?;
        }
        self.records += 1;
        self.last_logged = Some(s.step_index());
        Ok(())
    }

    fn snapshot(&mut self, s: &GeopotentialState, sol: Option<&DarcySolution>) -> Result<(), CliError> {
        let path = self.cfg.out.join(format!("fields_{:04}.vtk", s.step_index()));
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        let zeros;
        let u = match sol {
            Some(sol) => &sol.u,
            None => {
                zeros = VectorField::zeros(*s.spec());
                &zeros
            }
        };
        let title = format!("sgeuler step {} time {}", s.step_index(), s.time());
        write_vtk(&mut w, &title, s.potential(), s.gradient(), u)
            .and_then(|_| w.flush())
            .map_err(io_err(&path))?;
        self.snapshots.push(path);
        Ok(())
    }

    fn observe(&mut self, s: &GeopotentialState, sol: Option<&DarcySolution>) -> Result<(), CliError> {
        let j = s.step_index();
        let summary = sol.map(StepSummary::from);
        if j.is_multiple_of(self.cfg.log_every) {
            self.log(s, summary)?;
            self.pending = None;
        } else {
            self.pending = Some((s.clone(), summary));
        }
        if self.cfg.emit_fields && j > 0 && j.is_multiple_of(self.cfg.snap_every) {
            self.snapshot(s, sol)?;
        }
        Ok(())
    }
}

fn coriolis_field(cfg: &RunConfig, spec: GridSpec) -> Result<Option<CoriolisField>, CliError> {
    Ok(match &cfg.coriolis {
        CoriolisSpec::Off => None,
        CoriolisSpec::Constant(f) => Some(CoriolisField::constant(spec, *f)?),
        CoriolisSpec::Profile(d) => Some(CoriolisField::linear_x3(spec, *d)?),
        CoriolisSpec::File(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            let values = parse_samples(&text, spec.len()).map_err(|reason| CliError::CoriolisFile {
                path: path.clone(),
                reason,
            })?;
            Some(CoriolisField::from_field(ScalarField::new(spec, values)?)?)
        }
    })
}

/// Runs one configuration and writes `series.csv`, snapshots and `run.json` into `cfg.out`.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let spec = GridSpec::new(cfg.dims, cfg.origin, cfg.extent)?;
    let s0 = init_preset(&cfg.preset(), &spec)?;
    let constants = compute_constants(&s0, cfg.p, cfg.c_star, cfg.c_m)?;
    let schedule = cfg.schedule(constants.tau_star);
    let coriolis = coriolis_field(cfg, spec)?;
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;

    let csv_path = cfg.out.join("series.csv");
    let csv = if cfg.emit_csv {
        let file = File::create(&csv_path).map_err(io_err(&csv_path))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(CSV_HEADER)?;
        Some(w)
    } else {
        None
    };
    let mut sink = Sink {
        cfg,
        constants,
        csv,
        records: 0,
        last_logged: None,
        pending: None,
        snapshots: Vec::new(),
        error: None,
    };
    let scheme = SchemeConfig {
        epsilon: schedule.epsilon,
        steps: schedule.steps,
        options: StepOptions {
            solver: SolverOptions {
                tol: cfg.tol,
                maxiter: cfg.maxiter,
                method: None,
            },
            p: cfg.p,
        },
        halt_below_half_lambda0: true,
    };
    let observer = |s: &GeopotentialState, sol: Option<&DarcySolution>| {
        if sink.error.is_none() {
            if let Err(e) = sink.observe(s, sol) {
                sink.error = Some(e);
            }
        }
    };
    let outcome = match &coriolis {
        None => run_with_observer(s0, &scheme, observer)?,
        Some(c) => run_coriolis_with_observer(s0, c, &scheme, observer)?,
    };
    if let Some(e) = sink.error.take() {
        return Err(e);
    }
    let final_step = outcome.final_state.step_index();
    if sink.last_logged != Some(final_step) {
        if let Some((s, summary)) = sink.pending.take() {
            sink.log(&s, summary)?;
        }
    }
    if let Some(mut w) = sink.csv.take() {
        w.flush().map_err(io_err(&csv_path))?;
    }

    let mut files: Vec<String> = Vec::new();
    if cfg.emit_csv {
        files.push("series.csv".into());
    }
    files.extend(
        sink.snapshots
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())),
    );
    let meta = Metadata {
        config: cfg.to_map(),
        schedule: &schedule,
        constants: &constants,
        halt: &outcome.halt,
        steps_taken: final_step,
        final_time: outcome.final_state.time(),
        files,
    };
    let json_path = cfg.out.join("run.json");
    let text = serde_json::to_string_pretty(&meta)?;
    fs::write(&json_path, text + "\n").map_err(io_err(&json_path))?;

    Ok(RunReport {
        out_dir: cfg.out.clone(),
        schedule,
        constants,
        halt: outcome.halt,
        steps_taken: final_step,
        final_time: outcome.final_state.time(),
        records_written: sink.records,
        snapshots: sink.snapshots,
    })
}

/// Reads the echoed configuration back from a `run.json`.
pub fn config_from_metadata(text: &str) -> Result<RunConfig, CliError> {
    #[derive(serde::Deserialize)]
    struct Echo {
        config: BTreeMap<String, String>,
    }
    let echo: Echo = serde_json::from_str(text)?;
    RunConfig::from_map(&echo.config).map_err(CliError::Usage)
}

/// Runs independent configurations concurrently; results keep the input order.
pub fn run_sweep(configs: &[RunConfig]) -> Vec<Result<RunReport, CliError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs.iter().map(|c| scope.spawn(move || run_experiment(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

fn describe(cfg: &RunConfig, r: &RunReport) -> String {
    format!(
        "{}: {} steps of {} to t = {} ({:?}), {} records, {} snapshots",
        cfg.out.display(),
        r.steps_taken,
        r.schedule.epsilon,
        r.final_time,
        r.halt,
        r.records_written,
        r.snapshots.len()
    )
}

/// Entry point shared by the binary and tests; returns the process exit code.
pub fn main_with_args(argv: &[String]) -> i32 {
    let invocation = match parse_config(argv) {
        Ok(i) => i,
        Err(CliError::Info(text)) => {
            print!("{text}");
            return 0;
        }
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let configs = match invocation {
        Invocation::Single(c) => vec![c],
        Invocation::Sweep(cs) => cs,
    };
    let mut code = 0;
    for (cfg, result) in configs.iter().zip(run_sweep(&configs)) {
        match result {
            Ok(report) => {
                println!("{}", describe(cfg, &report));
                code = code.max(report.exit_code(cfg.strict));
            }
            Err(e) => {
                eprintln!("{}: {e}", cfg.out.display());
                code = code.max(1);
            }
        }
    }
    code
}
