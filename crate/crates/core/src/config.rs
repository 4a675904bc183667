//! Scenario configuration files.
//!
//! The format is TOML; `docs/config-schema.md` lists every key with its unit
//! and default. Parsing collects all schema violations before failing.

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;
use toml::{Table, Value};

use crate::geometry::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaViolation {
    /// Dotted key path, e.g. `fluid.rho_inf` or `boundary[2].kind`.
    pub field: String,
    pub message: String,
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("{} schema error(s):\n  {}", .0.len(), .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n  "))]
    Schema(Vec<SchemaViolation>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Box { cells: [usize; 3], lengths: [f64; 3], grading: [f64; 3], periodic: [bool; 3] },
    Annulus { nr: usize, ntheta: usize, nz: usize, r_inner: f64, r_outer: f64, length: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallKind {
    NoSlip,
    FreeSlip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryAssignment {
    pub patch: String,
    pub kind: WallKind,
    /// Wall temperature in K; `None` means adiabatic.
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidConfig {
    pub alpha: f64,
    pub mu: f64,
    pub rho_inf: f64,
    pub beta_exp: f64,
    pub t_inf: f64,
    pub gravity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub temperature: f64,
    pub velocity: [f64; 3],
    pub pressure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegionSelector {
    All,
    AdjacentTo(String),
    Box { min: [f64; 3], max: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceRegion {
    pub selector: RegionSelector,
    /// K/s.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceConfig {
    pub regions: Vec<SourceRegion>,
    /// Piecewise-linear `(time s, factor)` multiplier; empty means constant.
    pub schedule: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauSpec {
    Fixed(f64),
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub t_end: f64,
    pub tau: TauSpec,
    pub safety: f64,
    pub recompute_every: u64,
    pub steady_tol: Option<f64>,
    pub max_steps: Option<u64>,
    pub frozen_velocity: bool,
    pub abort_on_pressure_failure: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureConfig {
    pub omega: f64,
    pub u_ref: f64,
    pub eps_global: Option<f64>,
    pub eps_cell: Option<f64>,
    pub max_inner: usize,
    pub max_outer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Vtk,
    Csv,
}

impl OutputFormat {
    fn name(self) -> &'static str {
        match self {
            OutputFormat::Vtk => "vtk",
            OutputFormat::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub every: u64,
    pub formats: Vec<OutputFormat>,
    pub probes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mesh: MeshSpec,
    pub boundary: Vec<BoundaryAssignment>,
    pub fluid: FluidConfig,
    pub initial: InitialConfig,
    pub source: SourceConfig,
    pub run: RunSection,
    pub pressure: PressureConfig,
    pub output: OutputConfig,
}

impl FluidConfig {
    pub fn gravity(&self) -> Vec3 {
        Vec3::from(self.gravity)
    }
}

/// Walks a table, recording violations and keys that were never read.
struct Reader<'a> {
    table: &'a Table,
    path: String,
    used: Vec<&'static str>,
}

struct Errors(Vec<SchemaViolation>);

impl Errors {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(SchemaViolation { field: field.into(), message: message.into() });
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl<'a> Reader<'a> {
    fn new(table: &'a Table, path: impl Into<String>) -> Self {
        Reader { table, path: path.into(), used: Vec::new() }
    }

    fn field(&self, key: &str) -> String {
        join(&self.path, key)
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.push(key);
        self.table.get(key)
    }

    fn finish(self, errors: &mut Errors) {
        for key in self.table.keys() {
            if !self.used.contains(&key.as_str()) {
                errors.push(join(&self.path, key), "unknown key");
            }
        }
    }

    fn opt_f64(&mut self, key: &'static str, errors: &mut Errors) -> Option<f64> {
        let v = self.raw(key)?;
        match as_f64(v) {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                errors.push(self.field(key), "expected a finite number");
                None
            }
        }
    }

    fn f64_or(&mut self, key: &'static str, default: f64, errors: &mut Errors) -> f64 {
        self.opt_f64(key, errors).unwrap_or(default)
    }

    fn req_f64(&mut self, key: &'static str, errors: &mut Errors) -> f64 {
        if self.table.contains_key(key) {
            self.opt_f64(key, errors).unwrap_or(f64::NAN)
        } else {
            self.used.push(key);
            errors.push(self.field(key), "missing required field");
            f64::NAN
        }
    }

    fn opt_uint(&mut self, key: &'static str, errors: &mut Errors) -> Option<u64> {
        let v = self.raw(key)?;
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            _ => {
                errors.push(self.field(key), "expected a non-negative integer");
                None
            }
        }
    }

    fn req_uint(&mut self, key: &'static str, errors: &mut Errors) -> u64 {
        if !self.table.contains_key(key) {
            self.used.push(key);
            errors.push(self.field(key), "missing required field");
            return 0;
        }
        self.opt_uint(key, errors).unwrap_or(0)
    }

    fn opt_bool(&mut self, key: &'static str, errors: &mut Errors) -> Option<bool> {
        let v = self.raw(key)?;
        v.as_bool().or_else(|| {
            errors.push(self.field(key), "expected true or false");
            None
        })
    }

    fn opt_str(&mut self, key: &'static str, errors: &mut Errors) -> Option<&'a str> {
        let v = self.raw(key)?;
        v.as_str().or_else(|| {
            errors.push(self.field(key), "expected a string");
            None
        })
    }

    fn req_str(&mut self, key: &'static str, errors: &mut Errors) -> Option<&'a str> {
        if !self.table.contains_key(key) {
            self.used.push(key);
            errors.push(self.field(key), "missing required field");
            return None;
        }
        self.opt_str(key, errors)
    }

    fn opt_array(&mut self, key: &'static str, errors: &mut Errors) -> Option<&'a [Value]> {
        let v = self.raw(key)?;
        match v.as_array() {
            Some(a) => Some(a.as_slice()),
            None => {
                errors.push(self.field(key), "expected an array");
                None
            }
        }
    }

    fn opt_vec3(&mut self, key: &'static str, errors: &mut Errors) -> Option<[f64; 3]> {
        let a = self.opt_array(key, errors)?;
        let xs: Vec<f64> = a.iter().filter_map(as_f64).filter(|x| x.is_finite()).collect();
        if a.len() == 3 && xs.len() == 3 {
            Some([xs[0], xs[1], xs[2]])
        } else {
            errors.push(self.field(key), "expected three finite numbers");
            None
        }
    }

    fn req_vec3(&mut self, key: &'static str, errors: &mut Errors) -> [f64; 3] {
        if !self.table.contains_key(key) {
            self.used.push(key);
            errors.push(self.field(key), "missing required field");
            return [f64::NAN; 3];
        }
        self.opt_vec3(key, errors).unwrap_or([f64::NAN; 3])
    }

    fn opt_table(&mut self, key: &'static str, errors: &mut Errors) -> Option<&'a Table> {
        let v = self.raw(key)?;
        v.as_table().or_else(|| {
            errors.push(self.field(key), "expected a table");
            None
        })
    }
}

fn check(errors: &mut Errors, ok: bool, field: String, message: &str) {
    if !ok {
        errors.push(field, message);
    }
}

fn parse_mesh(table: Option<&Table>, errors: &mut Errors) -> MeshSpec {
    let Some(table) = table else {
        errors.push("mesh", "missing required section");
        return MeshSpec::File { path: PathBuf::new() };
    };
    let mut r = Reader::new(table, "mesh");
    let generator = r.req_str("generator", errors).unwrap_or("");
    let spec = match generator {
        "box" => {
            let mut cells = [1usize; 3];
            match r.opt_array("cells", errors) {
                Some(a) if a.len() == 3 && a.iter().all(|v| v.as_integer().is_some_and(|i| i >= 1)) => {
                    for (c, v) in cells.iter_mut().zip(a) {
                        *c = v.as_integer().unwrap_or(1) as usize;
                    }
                }
                Some(_) => errors.push("mesh.cells", "expected three integers >= 1"),
                None => errors.push("mesh.cells", "missing required field"),
            }
            let lengths = r.req_vec3("lengths", errors);
            check(errors, lengths.iter().all(|&l| l > 0.0), "mesh.lengths".into(), "lengths must be positive");
            let grading = r.opt_vec3("grading", errors).unwrap_or([1.0; 3]);
            check(errors, grading.iter().all(|&g| g > 0.0), "mesh.grading".into(), "grading ratios must be positive");
            let mut periodic = [false; 3];
            if let Some(a) = r.opt_array("periodic", errors) {
                if a.len() == 3 && a.iter().all(|v| v.as_bool().is_some()) {
                    for (p, v) in periodic.iter_mut().zip(a) {
                        *p = v.as_bool().unwrap_or(false);
                    }
                } else {
                    errors.push("mesh.periodic", "expected three booleans");
                }
            }
            MeshSpec::Box { cells, lengths, grading, periodic }
        }
        "annulus" => {
            let nr = r.req_uint("nr", errors) as usize;
            let ntheta = r.req_uint("ntheta", errors) as usize;
            let nz = r.opt_uint("nz", errors).unwrap_or(1) as usize;
            let r_inner = r.req_f64("r_inner", errors);
            let r_outer = r.req_f64("r_outer", errors);
            let length = r.req_f64("length", errors);
            check(errors, nr >= 1, "mesh.nr".into(), "must be at least 1");
            check(errors, ntheta >= 8, "mesh.ntheta".into(), "must be at least 8");
            check(errors, nz >= 1, "mesh.nz".into(), "must be at least 1");
            check(errors, r_inner > 0.0 || r_inner.is_nan(), "mesh.r_inner".into(), "must be positive");
            check(errors, !(r_outer <= r_inner), "mesh.r_outer".into(), "must exceed r_inner");
            check(errors, length > 0.0 || length.is_nan(), "mesh.length".into(), "must be positive");
            MeshSpec::Annulus { nr, ntheta, nz, r_inner, r_outer, length }
        }
        "file" => {
            let path = r.req_str("path", errors).unwrap_or("");
            MeshSpec::File { path: PathBuf::from(path) }
        }
        "" => MeshSpec::File { path: PathBuf::new() },
        other => {
            errors.push("mesh.generator", format!("unknown generator '{other}' (box, annulus, file)"));
            return MeshSpec::File { path: PathBuf::new() };
        }
    };
    r.finish(errors);
    spec
}

fn parse_boundary(value: Option<&Value>, errors: &mut Errors) -> Vec<BoundaryAssignment> {
    let Some(value) = value else { return Vec::new() };
    let Some(items) = value.as_array() else {
        errors.push("boundary", "expected an array of tables ([[boundary]])");
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let path = format!("boundary[{i}]");
        let Some(t) = item.as_table() else {
            errors.push(path, "expected a table");
            continue;
        };
        let mut r = Reader::new(t, path.clone());
        let patch = r.req_str("patch", errors).unwrap_or("").to_string();
        let kind = match r.req_str("kind", errors) {
            Some("noslip") => WallKind::NoSlip,
            Some("freeslip") => WallKind::FreeSlip,
            Some(other) => {
                errors.push(format!("{path}.kind"), format!("unknown wall kind '{other}' (noslip, freeslip)"));
                WallKind::NoSlip
            }
            None => WallKind::NoSlip,
        };
        let temperature = r.opt_f64("temperature", errors);
        r.finish(errors);
        if out.iter().any(|b: &BoundaryAssignment| b.patch == patch) {
            errors.push(format!("{path}.patch"), format!("patch '{patch}' assigned twice"));
        }
        out.push(BoundaryAssignment { patch, kind, temperature });
    }
    out
}

fn parse_fluid(table: Option<&Table>, errors: &mut Errors) -> FluidConfig {
    let empty = Table::new();
    if table.is_none() {
        errors.push("fluid", "missing required section");
    }
    let mut r = Reader::new(table.unwrap_or(&empty), "fluid");
    let fluid = FluidConfig {
        alpha: r.req_f64("alpha", errors),
        mu: r.req_f64("mu", errors),
        rho_inf: r.req_f64("rho_inf", errors),
        beta_exp: r.req_f64("beta_exp", errors),
        t_inf: r.req_f64("t_inf", errors),
        gravity: r.opt_vec3("gravity", errors).unwrap_or([0.0, -9.81, 0.0]),
    };
    if table.is_some() {
        check(errors, !(fluid.alpha < 0.0), "fluid.alpha".into(), "must be non-negative");
        check(errors, !(fluid.mu < 0.0), "fluid.mu".into(), "must be non-negative");
        check(errors, !(fluid.rho_inf <= 0.0), "fluid.rho_inf".into(), "must be positive");
    }
    r.finish(errors);
    fluid
}

fn parse_initial(table: Option<&Table>, t_inf: f64, errors: &mut Errors) -> InitialConfig {
    let empty = Table::new();
    let mut r = Reader::new(table.unwrap_or(&empty), "initial");
    let init = InitialConfig {
        temperature: r.f64_or("temperature", t_inf, errors),
        velocity: r.opt_vec3("velocity", errors).unwrap_or([0.0; 3]),
        pressure: r.f64_or("pressure", 0.0, errors),
    };
    r.finish(errors);
    init
}

fn parse_source(table: Option<&Table>, errors: &mut Errors) -> SourceConfig {
    let Some(table) = table else { return SourceConfig::default() };
    let mut r = Reader::new(table, "source");
    let mut source = SourceConfig::default();
    if let Some(items) = r.opt_array("schedule", errors) {
        for (i, item) in items.iter().enumerate() {
            let pair = item.as_array().map(|a| a.iter().filter_map(as_f64).collect::<Vec<_>>());
            match pair {
                Some(p) if p.len() == 2 && p.iter().all(|x| x.is_finite()) => source.schedule.push((p[0], p[1])),
                _ => errors.push(format!("source.schedule[{i}]"), "expected [time, factor]"),
            }
        }
        check(
            errors,
            source.schedule.windows(2).all(|w| w[1].0 > w[0].0),
            "source.schedule".into(),
            "times must be strictly increasing",
        );
    }
    if let Some(items) = r.opt_array("region", errors) {
        for (i, item) in items.iter().enumerate() {
            let path = format!("source.region[{i}]");
            let Some(t) = item.as_table() else {
                errors.push(path, "expected a table");
                continue;
            };
            let mut rr = Reader::new(t, path.clone());
            let value = rr.req_f64("value", errors);
            let adjacent = rr.opt_str("adjacent_to", errors);
            let min = rr.opt_vec3("box_min", errors);
            let max = rr.opt_vec3("box_max", errors);
            let selector = match (adjacent, min, max) {
                (None, None, None) => RegionSelector::All,
                (Some(p), None, None) => RegionSelector::AdjacentTo(p.to_string()),
                (None, Some(min), Some(max)) => RegionSelector::Box { min, max },
                _ => {
                    errors.push(path.clone(), "use either adjacent_to or both box_min and box_max");
                    RegionSelector::All
                }
            };
            rr.finish(errors);
            source.regions.push(SourceRegion { selector, value });
        }
    }
    r.finish(errors);
    source
}

fn parse_run(table: Option<&Table>, errors: &mut Errors) -> RunSection {
    let empty = Table::new();
    if table.is_none() {
        errors.push("run", "missing required section");
    }
    let mut r = Reader::new(table.unwrap_or(&empty), "run");
    let t_end = r.req_f64("t_end", errors);
    let tau = match r.raw("tau") {
        None => TauSpec::Auto,
        Some(Value::String(s)) if s == "auto" => TauSpec::Auto,
        Some(v) => match as_f64(v) {
            Some(t) if t > 0.0 && t.is_finite() => TauSpec::Fixed(t),
            _ => {
                errors.push("run.tau", "expected a positive number of seconds or \"auto\"");
                TauSpec::Auto
            }
        },
    };
    let run = RunSection {
        t_end,
        tau,
        safety: r.f64_or("safety", 0.5, errors),
        recompute_every: r.opt_uint("recompute_every", errors).unwrap_or(10),
        steady_tol: r.opt_f64("steady_tol", errors),
        max_steps: r.opt_uint("max_steps", errors),
        frozen_velocity: r.opt_bool("frozen_velocity", errors).unwrap_or(false),
        abort_on_pressure_failure: r.opt_bool("abort_on_pressure_failure", errors).unwrap_or(false),
    };
    if table.is_some() {
        check(errors, !(run.t_end <= 0.0), "run.t_end".into(), "must be positive");
    }
    check(errors, run.safety > 0.0 && run.safety <= 1.0, "run.safety".into(), "must lie in (0, 1]");
    check(errors, run.steady_tol.is_none_or(|t| t > 0.0), "run.steady_tol".into(), "must be positive");
    r.finish(errors);
    run
}

fn parse_pressure(table: Option<&Table>, errors: &mut Errors) -> PressureConfig {
    let empty = Table::new();
    let mut r = Reader::new(table.unwrap_or(&empty), "pressure");
    let p = PressureConfig {
        omega: r.f64_or("omega", crate::pressure::SorParams::DEFAULT_OMEGA, errors),
        u_ref: r.f64_or("u_ref", 1.0, errors),
        eps_global: r.opt_f64("eps_global", errors),
        eps_cell: r.opt_f64("eps_cell", errors),
        max_inner: r.opt_uint("max_inner", errors).unwrap_or(crate::pressure::SorParams::DEFAULT_MAX_INNER as u64)
            as usize,
        max_outer: r.opt_uint("max_outer", errors).unwrap_or(crate::pressure::SorParams::DEFAULT_MAX_OUTER as u64)
            as usize,
    };
    check(errors, p.omega > 0.0 && p.omega < 2.0, "pressure.omega".into(), "must lie in (0, 2)");
    check(errors, p.u_ref > 0.0, "pressure.u_ref".into(), "must be positive");
    check(errors, p.eps_global.is_none_or(|e| e > 0.0), "pressure.eps_global".into(), "must be positive");
    check(errors, p.eps_cell.is_none_or(|e| e > 0.0), "pressure.eps_cell".into(), "must be positive");
    check(errors, p.max_inner >= 1, "pressure.max_inner".into(), "must be at least 1");
    check(errors, p.max_outer >= 1, "pressure.max_outer".into(), "must be at least 1");
    r.finish(errors);
    p
}

fn parse_output(table: Option<&Table>, errors: &mut Errors) -> OutputConfig {
    let empty = Table::new();
    let mut r = Reader::new(table.unwrap_or(&empty), "output");
    let directory = PathBuf::from(r.opt_str("directory", errors).unwrap_or("output"));
    let every = r.opt_uint("every", errors).unwrap_or(100);
    check(errors, every >= 1, "output.every".into(), "must be at least 1");
    let mut formats = vec![OutputFormat::Vtk, OutputFormat::Csv];
    if let Some(items) = r.opt_array("formats", errors) {
        formats.clear();
        for (i, item) in items.iter().enumerate() {
            match item.as_str() {
                Some("vtk") => formats.push(OutputFormat::Vtk),
                Some("csv") => formats.push(OutputFormat::Csv),
                _ => errors.push(format!("output.formats[{i}]"), "expected \"vtk\" or \"csv\""),
            }
        }
    }
    let mut probes = Vec::new();
    if let Some(items) = r.opt_array("probes", errors) {
        for (i, item) in items.iter().enumerate() {
            match item.as_integer() {
                Some(c) if c >= 0 => probes.push(c as usize),
                _ => errors.push(format!("output.probes[{i}]"), "expected a cell index"),
            }
        }
    }
    r.finish(errors);
    OutputConfig { directory, every, formats, probes }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: Table =
            text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string().trim_end().to_string()))?;
        let mut errors = Errors(Vec::new());
        let mut r = Reader::new(&table, "");
        let mesh_t = r.opt_table("mesh", &mut errors);
        let mesh = parse_mesh(mesh_t, &mut errors);
        let boundary = parse_boundary(r.raw("boundary"), &mut errors);
        let fluid_t = r.opt_table("fluid", &mut errors);
        let fluid = parse_fluid(fluid_t, &mut errors);
        let initial_t = r.opt_table("initial", &mut errors);
        let initial = parse_initial(initial_t, fluid.t_inf, &mut errors);
        let source_t = r.opt_table("source", &mut errors);
        let source = parse_source(source_t, &mut errors);
        let run_t = r.opt_table("run", &mut errors);
        let run = parse_run(run_t, &mut errors);
        let pressure_t = r.opt_table("pressure", &mut errors);
        let pressure = parse_pressure(pressure_t, &mut errors);
        let output_t = r.opt_table("output", &mut errors);
        let output = parse_output(output_t, &mut errors);
        r.finish(&mut errors);
        if errors.0.is_empty() {
            Ok(ScenarioConfig { mesh, boundary, fluid, initial, source, run, pressure, output })
        } else {
            Err(ConfigError::Schema(errors.0))
        }
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Effective configuration with every default written out.
    pub fn to_toml(&self) -> String {
        let mut root = Table::new();
        let mut mesh = Table::new();
        match &self.mesh {
            MeshSpec::Box { cells, lengths, grading, periodic } => {
                mesh.insert("generator".into(), "box".into());
                mesh.insert("cells".into(), Value::Array(cells.iter().map(|&c| Value::Integer(c as i64)).collect()));
                mesh.insert("lengths".into(), vec3(lengths));
                mesh.insert("grading".into(), vec3(grading));
                mesh.insert("periodic".into(), Value::Array(periodic.iter().map(|&p| Value::Boolean(p)).collect()));
            }
            MeshSpec::Annulus { nr, ntheta, nz, r_inner, r_outer, length } => {
                mesh.insert("generator".into(), "annulus".into());
                mesh.insert("nr".into(), Value::Integer(*nr as i64));
                mesh.insert("ntheta".into(), Value::Integer(*ntheta as i64));
                mesh.insert("nz".into(), Value::Integer(*nz as i64));
                mesh.insert("r_inner".into(), Value::Float(*r_inner));
                mesh.insert("r_outer".into(), Value::Float(*r_outer));
                mesh.insert("length".into(), Value::Float(*length));
            }
            MeshSpec::File { path } => {
                mesh.insert("generator".into(), "file".into());
                mesh.insert("path".into(), path.display().to_string().into());
            }
        }
        root.insert("mesh".into(), Value::Table(mesh));

        if !self.boundary.is_empty() {
            let items = self
                .boundary
                .iter()
                .map(|b| {
                    let mut t = Table::new();
                    t.insert("patch".into(), b.patch.clone().into());
                    t.insert("kind".into(), if b.kind == WallKind::NoSlip { "noslip" } else { "freeslip" }.into());
                    if let Some(v) = b.temperature {
                        t.insert("temperature".into(), Value::Float(v));
                    }
                    Value::Table(t)
                })
                .collect();
            root.insert("boundary".into(), Value::Array(items));
        }

        let f = &self.fluid;
        let mut fluid = Table::new();
        for (k, v) in
            [("alpha", f.alpha), ("mu", f.mu), ("rho_inf", f.rho_inf), ("beta_exp", f.beta_exp), ("t_inf", f.t_inf)]
        {
            fluid.insert(k.into(), Value::Float(v));
        }
        fluid.insert("gravity".into(), vec3(&f.gravity));
        root.insert("fluid".into(), Value::Table(fluid));

        let mut initial = Table::new();
        initial.insert("temperature".into(), Value::Float(self.initial.temperature));
        initial.insert("velocity".into(), vec3(&self.initial.velocity));
        initial.insert("pressure".into(), Value::Float(self.initial.pressure));
        root.insert("initial".into(), Value::Table(initial));

        if !self.source.regions.is_empty() || !self.source.schedule.is_empty() {
            let mut source = Table::new();
            if !self.source.schedule.is_empty() {
                let pairs = self
                    .source
                    .schedule
                    .iter()
                    .map(|&(t, v)| Value::Array(vec![Value::Float(t), Value::Float(v)]))
                    .collect();
                source.insert("schedule".into(), Value::Array(pairs));
            }
            if !self.source.regions.is_empty() {
                let items = self
                    .source
                    .regions
                    .iter()
                    .map(|reg| {
                        let mut t = Table::new();
                        t.insert("value".into(), Value::Float(reg.value));
                        match &reg.selector {
                            RegionSelector::All => {}
                            RegionSelector::AdjacentTo(p) => {
                                t.insert("adjacent_to".into(), p.clone().into());
                            }
                            RegionSelector::Box { min, max } => {
                                t.insert("box_min".into(), vec3(min));
                                t.insert("box_max".into(), vec3(max));
                            }
                        }
                        Value::Table(t)
                    })
                    .collect();
                source.insert("region".into(), Value::Array(items));
            }
            root.insert("source".into(), Value::Table(source));
        }

        let run = &self.run;
        let mut rt = Table::new();
        rt.insert("t_end".into(), Value::Float(run.t_end));
        rt.insert(
            "tau".into(),
            match run.tau {
                TauSpec::Fixed(t) => Value::Float(t),
                TauSpec::Auto => "auto".into(),
            },
        );
        rt.insert("safety".into(), Value::Float(run.safety));
        rt.insert("recompute_every".into(), Value::Integer(run.recompute_every as i64));
        if let Some(t) = run.steady_tol {
            rt.insert("steady_tol".into(), Value::Float(t));
        }
        if let Some(m) = run.max_steps {
            rt.insert("max_steps".into(), Value::Integer(m as i64));
        }
        rt.insert("frozen_velocity".into(), Value::Boolean(run.frozen_velocity));
        rt.insert("abort_on_pressure_failure".into(), Value::Boolean(run.abort_on_pressure_failure));
        root.insert("run".into(), Value::Table(rt));

        let p = &self.pressure;
        let mut pt = Table::new();
        pt.insert("omega".into(), Value::Float(p.omega));
        pt.insert("u_ref".into(), Value::Float(p.u_ref));
        if let Some(e) = p.eps_global {
            pt.insert("eps_global".into(), Value::Float(e));
        }
        if let Some(e) = p.eps_cell {
            pt.insert("eps_cell".into(), Value::Float(e));
        }
        pt.insert("max_inner".into(), Value::Integer(p.max_inner as i64));
        pt.insert("max_outer".into(), Value::Integer(p.max_outer as i64));
        root.insert("pressure".into(), Value::Table(pt));

        let o = &self.output;
        let mut ot = Table::new();
        ot.insert("directory".into(), o.directory.display().to_string().into());
        ot.insert("every".into(), Value::Integer(o.every as i64));
        ot.insert("formats".into(), Value::Array(o.formats.iter().map(|f| f.name().into()).collect()));
        ot.insert("probes".into(), Value::Array(o.probes.iter().map(|&c| Value::Integer(c as i64)).collect()));
        root.insert("output".into(), Value::Table(ot));

        root.to_string()
    }
}

fn vec3(v: &[f64; 3]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[mesh]
generator = "box"
cells = [4, 4, 1]
lengths = [1.0, 1.0, 0.25]

[fluid]
alpha = 1.0
mu = 0.71
rho_inf = 1
beta_exp = -0.01
t_inf = 300

[run]
t_end = 0.5
"#;

    fn violations(text: &str) -> Vec<SchemaViolation> {
        match ScenarioConfig::parse(text) {
            Err(ConfigError::Schema(v)) => v,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(
            c.mesh,
            MeshSpec::Box { cells: [4, 4, 1], lengths: [1.0, 1.0, 0.25], grading: [1.0; 3], periodic: [false; 3] }
        );
        assert_eq!(c.fluid.gravity, [0.0, -9.81, 0.0]);
        assert_eq!(c.initial.temperature, 300.0);
        assert_eq!(c.run.tau, TauSpec::Auto);
        assert_eq!(c.run.safety, 0.5);
        assert_eq!(c.pressure.omega, 1.5);
        assert_eq!(c.output.directory, PathBuf::from("output"));
        assert_eq!(c.output.formats, vec![OutputFormat::Vtk, OutputFormat::Csv]);
        assert!(c.boundary.is_empty() && c.source.regions.is_empty());
    }

    #[test]
    fn missing_density_is_named() {
        let v = violations(&MINIMAL.replace("rho_inf = 1\n", ""));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "fluid.rho_inf");
        assert!(v[0].message.contains("missing"));
    }

    #[test]
    fn all_violations_are_collected() {
        let text = MINIMAL.replace("alpha = 1.0", "alpha = \"fast\"").replace("t_end = 0.5", "t_end = 0.5\ncolour = 3")
            + "\n[output]\nformats = [\"png\"]\n";
        let fields: Vec<String> = violations(&text).into_iter().map(|v| v.field).collect();
        assert_eq!(fields, vec!["fluid.alpha", "run.colour", "output.formats[0]"]);
    }

    #[test]
    fn unknown_section_rejected() {
        let v = violations(&format!("{MINIMAL}\n[solver]\nx = 1\n"));
        assert_eq!(v[0].field, "solver");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = ScenarioConfig::parse("[mesh\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Syntax(m) if m.contains("line 1")), "{err}");
    }

    #[test]
    fn echo_round_trips() {
        let text = format!(
            "{MINIMAL}\n[[boundary]]\npatch = \"xmin\"\nkind = \"noslip\"\ntemperature = 301.5\n\
             [[boundary]]\npatch = \"zmin\"\nkind = \"freeslip\"\n\
             [source]\nschedule = [[0, 0], [1, 1]]\n[[source.region]]\nvalue = 0.2\nadjacent_to = \"xmin\"\n\
             [[source.region]]\nvalue = 0.1\nbox_min = [0, 0, 0]\nbox_max = [0.5, 0.5, 1]\n\
             [output]\nprobes = [0, 5]\n"
        );
        let c = ScenarioConfig::parse(&text).unwrap();
        let echoed = c.to_toml();
        assert_eq!(ScenarioConfig::parse(&echoed).unwrap(), c);
        assert_eq!(ScenarioConfig::parse(&echoed).unwrap().to_toml(), echoed);
    }

    #[test]
    fn annulus_requires_valid_radii() {
        let text = MINIMAL.replace(
            "generator = \"box\"\ncells = [4, 4, 1]\nlengths = [1.0, 1.0, 0.25]",
            "generator = \"annulus\"\nnr = 2\nntheta = 4\nr_inner = 0.2\nr_outer = 0.1\nlength = 0.1",
        );
        let fields: Vec<String> = violations(&text).into_iter().map(|v| v.field).collect();
        assert_eq!(fields, vec!["mesh.ntheta", "mesh.r_outer"]);
    }
}
