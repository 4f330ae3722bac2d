//! Run configuration: flat `key=value` maps merged from a file and flags,
//! validated into a [`RunConfig`].

use crate::grid::tensor::diag;
use crate::stepper::Preset;
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Every recognised key, in echo order. Keys match the long flag names.
pub const KEYS: &[&str] = &[
    "grid",
    "extent",
    "origin",
    "preset",
    "tilt",
    "quad",
    "bump-delta",
    "bump-k",
    "dt",
    "steps",
    "tmax",
    "auto-tau",
    "p",
    "cstar",
    "cm",
    "coriolis",
    "tol",
    "maxiter",
    "out",
    "emit",
    "snap-every",
    "log-every",
    "strict",
];

/// Smallest grid for which every logged diagnostic (third derivatives) exists.
pub const MIN_RUN_CELLS: usize = 5;
pub const DEFAULT_STEPS: usize = 100;
pub const DEFAULT_TMAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Identity,
    Tilt,
    Quadratic,
    Bump,
}

impl PresetName {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "identity" => Some(Self::Identity),
            "tilt" => Some(Self::Tilt),
            "quadratic" => Some(Self::Quadratic),
            "bump" => Some(Self::Bump),
            _ => None,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Tilt => "tilt",
            Self::Quadratic => "quadratic",
            Self::Bump => "bump",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoriolisSpec {
    Off,
    Constant(f64),
    /// `f = 1 + δ x₃`.
    Profile(f64),
    /// Whitespace-separated samples, first index fastest.
    File(PathBuf),
}

impl CoriolisSpec {
    fn parse(s: &str) -> Result<Self, String> {
        let num = |v: &str| v.parse::<f64>().map_err(|_| format!("coriolis: bad number '{v}'"));
        match s.split_once(':') {
            None if s == "off" => Ok(Self::Off),
            Some(("const", v)) => Ok(Self::Constant(num(v)?)),
            Some(("profile", v)) => Ok(Self::Profile(num(v)?)),
            Some(("file", v)) if !v.is_empty() => Ok(Self::File(PathBuf::from(v))),
            _ => Err(format!(
                "coriolis: expected off|const:F0|profile:DELTA|file:PATH, got '{s}'"
            )),
        }
    }

    fn render(&self) -> String {
        match self {
            Self::Off => "off".into(),
            Self::Constant(f) => format!("const:{f}"),
            Self::Profile(d) => format!("profile:{d}"),
            Self::File(p) => format!("file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Neither `tmax` nor `auto-tau` given.
    Unspecified,
    Explicit(f64),
    /// The computed guaranteed existence time.
    AutoTau,
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dims: [usize; 3],
    pub extent: [f64; 3],
    pub origin: [f64; 3],
    pub preset: PresetName,
    pub tilt: [f64; 3],
    /// Diagonal of `Q` for the quadratic preset.
    pub quad: [f64; 3],
    pub bump_delta: f64,
    pub bump_k: f64,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub horizon: Horizon,
    pub p: f64,
    pub c_star: f64,
    pub c_m: f64,
    pub coriolis: CoriolisSpec,
    pub tol: f64,
    pub maxiter: Option<usize>,
    pub out: PathBuf,
    pub emit_csv: bool,
    pub emit_fields: bool,
    pub snap_every: usize,
    pub log_every: usize,
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dims: [16; 3],
            extent: [1.0; 3],
            origin: [0.0; 3],
            preset: PresetName::Identity,
            tilt: [0.0; 3],
            quad: [1.0; 3],
            bump_delta: 0.01,
            bump_k: 1.0,
            dt: None,
            steps: None,
            horizon: Horizon::Unspecified,
            p: 4.0,
            c_star: 1.0,
            c_m: 1.0,
            coriolis: CoriolisSpec::Off,
            tol: 1e-10,
            maxiter: None,
            out: PathBuf::from("out"),
            emit_csv: true,
            emit_fields: false,
            snap_every: 10,
            log_every: 1,
            strict: false,
        }
    }
}

/// Time step and step count of a run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Schedule {
    pub epsilon: f64,
    pub steps: usize,
    pub horizon: f64,
}

impl RunConfig {
    pub fn preset(&self) -> Preset {
        match self.preset {
            PresetName::Identity => Preset::Identity,
            PresetName::Tilt => Preset::Tilt(self.tilt),
            PresetName::Quadratic => Preset::Quadratic(diag(self.quad)),
            PresetName::Bump => Preset::Bump {
                delta: self.bump_delta,
                k: self.bump_k,
            },
        }
    }

    /// Resolves `ε` and `N`; `tau_star` is used only in auto-horizon mode.
    ///
    /// * `dt` and `steps`: taken as given.
    /// * a horizon with `steps`: `ε = τ/N`.
    /// * a horizon with `dt`: `N = ⌈τ/dt⌉`, `ε = τ/N`.
    /// * a missing horizon defaults to `tmax = 1`, a missing `dt`/`steps` pair to 100 steps.
    pub fn schedule(&self, tau_star: f64) -> Schedule {
        let tau = match self.horizon {
            Horizon::Explicit(t) => Some(t),
            Horizon::AutoTau => Some(tau_star),
            Horizon::Unspecified => None,
        };
        let (epsilon, steps) = match (self.dt, self.steps, tau) {
            (Some(dt), Some(n), _) => (dt, n),
            (None, Some(n), t) => (t.unwrap_or(DEFAULT_TMAX) / n as f64, n),
            (Some(dt), None, t) => {
                let t = t.unwrap_or(DEFAULT_TMAX);
                let n = crate::stepper::steps_for(t, dt);
                (t / n as f64, n)
            }
            (None, None, t) => (t.unwrap_or(DEFAULT_TMAX) / DEFAULT_STEPS as f64, DEFAULT_STEPS),
        };
        Schedule {
            epsilon,
            steps,
            horizon: epsilon * steps as f64,
        }
    }

    /// Canonical flat map; [`RunConfig::from_map`] on it reproduces `self`.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let v3 = |v: [f64; 3]| format!("{},{},{}", v[0], v[1], v[2]);
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("grid", format!("{},{},{}", self.dims[0], self.dims[1], self.dims[2]));
        put("extent", v3(self.extent));
        put("origin", v3(self.origin));
        put("preset", self.preset.as_str().into());
        put("tilt", v3(self.tilt));
        put("quad", v3(self.quad));
        put("bump-delta", self.bump_delta.to_string());
        put("bump-k", self.bump_k.to_string());
        if let Some(dt) = self.dt {
            put("dt", dt.to_string());
        }
        if let Some(n) = self.steps {
            put("steps", n.to_string());
        }
        match self.horizon {
            Horizon::Explicit(t) => put("tmax", t.to_string()),
            Horizon::AutoTau => put("auto-tau", "true".into()),
            Horizon::Unspecified => {}
        }
        put("p", self.p.to_string());
        put("cstar", self.c_star.to_string());
        put("cm", self.c_m.to_string());
        put("coriolis", self.coriolis.render());
        put("tol", self.tol.to_string());
        if let Some(n) = self.maxiter {
            put("maxiter", n.to_string());
        }
        put("out", self.out.display().to_string());
        let mut emit = Vec::new();
        if self.emit_csv {
            emit.push("csv");
        }
        if self.emit_fields {
            emit.push("fields");
        }
        put("emit", if emit.is_empty() { "none".into() } else { emit.join(",") });
        put("snap-every", self.snap_every.to_string());
        put("log-every", self.log_every.to_string());
        put("strict", self.strict.to_string());
        m
    }

    /// Builds and validates a config, collecting every violation.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, Vec<String>> {
        let mut errs = Vec::new();
        for k in map.keys() {
            if !KEYS.contains(&k.as_str()) {
                errs.push(format!("unknown key '{k}'"));
            }
        }
        let mut c = RunConfig::default();
        let mut p = Parser { map, errs: &mut errs };
        if let Some(g) = p.get("grid") {
            match parse_list::<usize>(g).as_deref() {
                Some([n]) => c.dims = [*n; 3],
                Some([a, b, d]) => c.dims = [*a, *b, *d],
                _ => p.errs.push(format!("grid: expected N or NX,NY,NZ, got '{g}'")),
            }
        }
        p.vec3("extent", &mut c.extent);
        p.vec3("origin", &mut c.origin);
        if let Some(s) = p.get("preset") {
            match PresetName::parse(s) {
                Some(n) => c.preset = n,
                None => p.errs.push(format!("preset: unknown preset '{s}'")),
            }
        }
        p.vec3("tilt", &mut c.tilt);
        p.vec3("quad", &mut c.quad);
        p.num("bump-delta", &mut c.bump_delta);
        p.num("bump-k", &mut c.bump_k);
        c.dt = p.opt("dt");
        c.steps = p.opt("steps");
        let tmax: Option<f64> = p.opt("tmax");
        let mut auto = false;
        p.num("auto-tau", &mut auto);
        c.horizon = match (tmax, auto) {
            (Some(_), true) => {
                p.errs.push("tmax and auto-tau are mutually exclusive".into());
                Horizon::Unspecified
            }
            (Some(t), false) => Horizon::Explicit(t),
            (None, true) => Horizon::AutoTau,
            (None, false) => Horizon::Unspecified,
        };
        p.num("p", &mut c.p);
        p.num("cstar", &mut c.c_star);
        p.num("cm", &mut c.c_m);
        if let Some(s) = p.get("coriolis") {
            match CoriolisSpec::parse(s) {
                Ok(spec) => c.coriolis = spec,
                Err(e) => p.errs.push(e),
            }
        }
        p.num("tol", &mut c.tol);
        c.maxiter = p.opt("maxiter");
        if let Some(o) = p.get("out") {
            c.out = PathBuf::from(o);
        }
        if let Some(e) = p.get("emit") {
            c.emit_csv = false;
            c.emit_fields = false;
            for tok in e.split(',').map(str::trim) {
                match tok {
                    "csv" => c.emit_csv = true,
                    "fields" => c.emit_fields = true,
                    "none" => {}
                    other => p.errs.push(format!("emit: unknown output '{other}'")),
                }
            }
        }
        p.num("snap-every", &mut c.snap_every);
        p.num("log-every", &mut c.log_every);
        p.num("strict", &mut c.strict);
        c.validate(&mut errs);
        if errs.is_empty() {
            Ok(c)
        } else {
            Err(errs)
        }
    }

    fn validate(&self, errs: &mut Vec<String>) {
        if self.dims.iter().any(|&n| n < MIN_RUN_CELLS) {
            errs.push(format!("grid: need at least {MIN_RUN_CELLS} cells per axis, got {:?}", self.dims));
        }
        if self.extent.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            errs.push("extent: lengths must be positive".into());
        }
        if self.origin.iter().any(|v| !v.is_finite()) {
            errs.push("origin: must be finite".into());
        }
        if let Ok(spec) = crate::grid::GridSpec::new(
            self.dims.map(|n| n.max(crate::grid::MIN_CELLS_PER_AXIS)),
            self.origin,
            self.extent.map(|l| if l > 0.0 && l.is_finite() { l } else { 1.0 }),
        ) {
            if let Err(e) = self.preset().validate(&spec) {
                errs.push(format!("preset {}: {e}", self.preset.as_str()));
            }
        }
        let given = [self.dt.is_some(), self.steps.is_some(), self.horizon != Horizon::Unspecified];
        if given.iter().all(|&g| g) {
            errs.push("dt, steps and the horizon (tmax or auto-tau) over-determine the run; give at most two".into());
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                errs.push("dt: must be positive".into());
            }
        }
        if self.steps == Some(0) {
            errs.push("steps: must be at least 1".into());
        }
        if let Horizon::Explicit(t) = self.horizon {
            if !(t > 0.0 && t.is_finite()) {
                errs.push("tmax: must be positive".into());
            }
        }
        if !(self.p > 3.0 && self.p.is_finite()) {
            errs.push("p: must exceed 3".into());
        }
        if !(self.c_star > 0.0 && self.c_star.is_finite()) {
            errs.push("cstar: must be positive".into());
        }
        if !(self.c_m > 0.0 && self.c_m.is_finite()) {
            errs.push("cm: must be positive".into());
        }
        match self.coriolis {
            CoriolisSpec::Constant(f) if !(f > 0.0 && f.is_finite()) => {
                errs.push("coriolis: constant parameter must be positive".into())
            }
            CoriolisSpec::Profile(d) if !d.is_finite() => errs.push("coriolis: profile slope must be finite".into()),
            _ => {}
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            errs.push("tol: must lie in (0, 1)".into());
        }
        if self.maxiter == Some(0) {
            errs.push("maxiter: must be at least 1".into());
        }
        if self.snap_every == 0 {
            errs.push("snap-every: must be at least 1".into());
        }
        if self.log_every == 0 {
            errs.push("log-every: must be at least 1".into());
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(',').map(|t| t.trim().parse().ok()).collect()
}

struct Parser<'a> {
    map: &'a BTreeMap<String, String>,
    errs: &'a mut Vec<String>,
}

impl<'a> Parser<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        self.map.get(key).map(|s| s.trim())
    }

    fn opt<T: std::str::FromStr>(&mut self, key: &str) -> Option<T> {
        let raw = self.get(key)?;
        match raw.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errs.push(format!("{key}: cannot parse '{raw}'"));
                None
            }
        }
    }

    fn num<T: std::str::FromStr>(&mut self, key: &str, slot: &mut T) {
        if let Some(v) = self.opt(key) {
            *slot = v;
        }
    }

    fn vec3(&mut self, key: &str, slot: &mut [f64; 3]) {
        if let Some(raw) = self.get(key) {
            match parse_list::<f64>(raw).as_deref() {
                Some([a, b, c]) => *slot = [*a, *b, *c],
                _ => self.errs.push(format!("{key}: expected three comma-separated numbers, got '{raw}'")),
            }
        }
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, Vec<String>> {
    let mut map = BTreeMap::new();
    let mut errs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
            None => errs.push(format!("config line {}: expected key=value, got '{line}'", n + 1)),
        }
    }
    if errs.is_empty() {
        Ok(map)
    } else {
        Err(errs)
    }
}
