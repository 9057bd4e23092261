//! Batch jobs: JSON in, CSV and JSON artifacts out.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::herglotz::{sqrt_minus_z, HerglotzError, Representation, Setting, SettingKind, Side};
use crate::jacobi::{self, JacobiError, JacobiWindow};
use crate::measure::{Atom, Measure, MeasureError, Piece};
use crate::scalar::C;
use crate::schrodinger::{self, PotentialTrace, SchrodingerError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("unknown command {0:?}")]
    UnknownCommand(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Herglotz(#[from] HerglotzError),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Schrodinger(#[from] SchrodingerError),
}

impl CliError {
    pub fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Schema {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema { .. } => "SchemaError",
            CliError::UnknownCommand(_) => "UnknownCommand",
            CliError::UnknownPreset(_) => "UnknownPreset",
            CliError::Io { .. } => "IoError",
            CliError::Json(_) => "JsonError",
            CliError::Measure(_) => "MeasureError",
            CliError::Herglotz(_) => "HerglotzError",
            CliError::Jacobi(_) => "JacobiError",
            CliError::Schrodinger(_) => "SchrodingerError",
        }
    }

    /// 2 for admissibility failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Jacobi(JacobiError::AdmissibilityRequired { .. })
            | CliError::Schrodinger(SchrodingerError::AdmissibilityRequired { .. })
            | CliError::Measure(MeasureError::SupportViolation { .. })
            | CliError::Jacobi(JacobiError::Measure(MeasureError::SupportViolation { .. }))
            | CliError::Herglotz(HerglotzError::Measure(MeasureError::SupportViolation { .. }))
            | CliError::Schrodinger(SchrodingerError::Measure(MeasureError::SupportViolation { .. })) => 2,
            _ => 1,
        }
    }

    /// Machine-readable form for standard error.
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Schema { pointer, .. } = self {
            v["pointer"] = json!(pointer);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    Jacobi,
    Schrodinger,
    Verify,
    Example,
}

impl Command {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        Ok(match name {
            "check" => Command::Check,
            "jacobi" => Command::Jacobi,
            "schrodinger" => Command::Schrodinger,
            "verify" => Command::Verify,
            "example" => Command::Example,
            other => return Err(CliError::UnknownCommand(other.to_string())),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Jacobi => "jacobi",
            Command::Schrodinger => "schrodinger",
            Command::Verify => "verify",
            Command::Example => "example",
        }
    }
}

/// Built-in measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `σ = 0`, Jacobi, `R = 2`.
    Free,
    /// `σ = δ₁`, Jacobi, `R = 3`; reflectionless but outside the class.
    Delta1,
    /// `σ = (1 − ε) δ₁`, Jacobi, `R = 2 + 1/ε`.
    Soliton { epsilon: f64 },
    /// `σ = mass · δ₀`, Schrödinger, `R = 2`.
    Delta0 { mass: f64 },
}

impl Preset {
    pub fn parse(name: &str, epsilon: Option<f64>, mass: Option<f64>) -> Result<Self, CliError> {
        let preset = match name {
            "free" => Preset::Free,
            "delta1" => Preset::Delta1,
            "soliton" => Preset::Soliton {
                epsilon: epsilon.unwrap_or(0.25),
            },
            "delta0" => Preset::Delta0 {
                mass: mass.unwrap_or(1.0),
            },
            other => return Err(CliError::UnknownPreset(other.to_string())),
        };
        match preset {
            Preset::Soliton { epsilon } if !(epsilon > 0.0 && epsilon < 1.0) => {
                Err(CliError::schema("/epsilon", "epsilon must lie in (0, 1)"))
            }
            Preset::Delta0 { mass } if !(mass > 0.0 && mass.is_finite()) => {
                Err(CliError::schema("/mass", "mass must be positive"))
            }
            p => Ok(p),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Free => "free",
            Preset::Delta1 => "delta1",
            Preset::Soliton { .. } => "soliton",
            Preset::Delta0 { .. } => "delta0",
        }
    }

    pub fn kind(self) -> SettingKind {
        match self {
            Preset::Delta0 { .. } => SettingKind::Schrodinger,
            _ => SettingKind::Jacobi,
        }
    }

    pub fn big_r(self) -> f64 {
        match self {
            Preset::Free | Preset::Delta0 { .. } => 2.0,
            Preset::Delta1 => 3.0,
            Preset::Soliton { epsilon } => 2.0 + 1.0 / epsilon,
        }
    }

    pub fn measure(self) -> Measure<f64> {
        match self {
            Preset::Free => Measure::zero(),
            Preset::Delta1 => Measure::dirac(1.0, 1.0),
            Preset::Soliton { epsilon } => Measure::dirac(1.0, 1.0 - epsilon),
            Preset::Delta0 { mass } => Measure::dirac(0.0, mass),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub order: usize,
    pub eta: f64,
    pub grid: usize,
    pub x_max: f64,
    pub step: f64,
    pub out: Option<String>,
}

impl Params {
    pub fn defaults(big_r: f64) -> Self {
        Params {
            order: 40,
            eta: 1e-4,
            grid: 512,
            x_max: 0.8 / big_r,
            step: 1.0 / (20.0 * big_r),
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub command: Command,
    pub kind: SettingKind,
    pub big_r: f64,
    pub measure: Measure<f64>,
    pub preset: Option<Preset>,
    pub params: Params,
}

impl Job {
    pub fn from_preset(command: Command, preset: Preset) -> Self {
        Job {
            command,
            kind: preset.kind(),
            big_r: preset.big_r(),
            measure: preset.measure(),
            preset: Some(preset),
            params: Params::defaults(preset.big_r()),
        }
    }

    pub fn setting(&self) -> Result<Setting<f64>, CliError> {
        Ok(Setting::new(self.kind, self.big_r)?)
    }

    pub fn representation(&self) -> Result<Representation<f64>, CliError> {
        Ok(Representation::validated(self.measure.clone(), self.setting()?)?)
    }

    /// Representation without the support gate, for reports on inadmissible measures.
    pub fn raw_representation(&self) -> Result<Representation<f64>, CliError> {
        Ok(Representation::new(self.measure.clone(), self.setting()?)?)
    }

    /// The job in the input schema, with every default written out.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command.name()));
        match (self.command, self.preset) {
            (Command::Example, Some(p)) => {
                m.insert("name".into(), json!(p.name()));
                match p {
                    Preset::Soliton { epsilon } => {
                        m.insert("epsilon".into(), json!(epsilon));
                    }
                    Preset::Delta0 { mass } => {
                        m.insert("mass".into(), json!(mass));
                    }
                    _ => {}
                }
            }
            _ => {
                m.insert("setting".into(), json!(self.kind.name()));
                m.insert("R".into(), json!(self.big_r));
                m.insert("atoms".into(), serde_json::to_value(&self.measure.atoms).unwrap());
                m.insert("pieces".into(), serde_json::to_value(&self.measure.pieces).unwrap());
            }
        }
        let p = &self.params;
        m.insert("N".into(), json!(p.order));
        m.insert("eta".into(), json!(p.eta));
        m.insert("grid".into(), json!(p.grid));
        m.insert("x_max".into(), json!(p.x_max));
        m.insert("step".into(), json!(p.step));
        if let Some(out) = &p.out {
            m.insert("out".into(), json!(out));
        }
        Value::Object(m)
    }
}

const PARAM_KEYS: [&str; 6] = ["N", "eta", "grid", "x_max", "step", "out"];
const MEASURE_KEYS: [&str; 4] = ["setting", "R", "atoms", "pieces"];
const EXAMPLE_KEYS: [&str; 3] = ["name", "epsilon", "mass"];

fn number(v: &Value, pointer: &str) -> Result<f64, CliError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::schema(pointer, "expected a finite number"))
}

fn positive(v: &Value, pointer: &str) -> Result<f64, CliError> {
    let x = number(v, pointer)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(CliError::schema(pointer, "expected a positive number"))
    }
}

fn count(v: &Value, pointer: &str, min: u64) -> Result<usize, CliError> {
    match v.as_u64() {
        Some(n) if n >= min => Ok(n as usize),
        _ => Err(CliError::schema(pointer, format!("expected an integer ≥ {min}"))),
    }
}

fn array<'a>(v: &'a Value, pointer: &str) -> Result<&'a Vec<Value>, CliError> {
    v.as_array()
        .ok_or_else(|| CliError::schema(pointer, "expected an array"))
}

fn object<'a>(v: &'a Value, pointer: &str) -> Result<&'a Map<String, Value>, CliError> {
    v.as_object()
        .ok_or_else(|| CliError::schema(pointer, "expected an object"))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, base: &str) -> Result<&'a Value, CliError> {
    obj.get(key)
        .ok_or_else(|| CliError::schema(format!("{base}/{key}"), "missing required field"))
}

fn parse_measure(obj: &Map<String, Value>) -> Result<Measure<f64>, CliError> {
    let mut measure = Measure::zero();
    if let Some(atoms) = obj.get("atoms") {
        for (i, a) in array(atoms, "/atoms")?.iter().enumerate() {
            let base = format!("/atoms/{i}");
            let o = object(a, &base)?;
            let t = number(field(o, "t", &base)?, &format!("{base}/t"))?;
            let w = number(field(o, "w", &base)?, &format!("{base}/w"))?;
            measure.atoms.push(Atom { t, w });
        }
    }
    if let Some(pieces) = obj.get("pieces") {
        for (i, p) in array(pieces, "/pieces")?.iter().enumerate() {
            let base = format!("/pieces/{i}");
            let o = object(p, &base)?;
            let a = number(field(o, "a", &base)?, &format!("{base}/a"))?;
            let b = number(field(o, "b", &base)?, &format!("{base}/b"))?;
            let cheb = array(field(o, "cheb", &base)?, &format!("{base}/cheb"))?
                .iter()
                .enumerate()
                .map(|(k, c)| number(c, &format!("{base}/cheb/{k}")))
                .collect::<Result<Vec<_>, _>>()?;
            measure.pieces.push(Piece { a, b, cheb });
        }
    }
    Ok(measure)
}

/// Parses and validates a job, filling defaults.
pub fn parse_input(json_text: &str) -> Result<Job, CliError> {
    let value: Value = serde_json::from_str(json_text)?;
    parse_value(&value)
}

pub fn parse_value(value: &Value) -> Result<Job, CliError> {
    let obj = object(value, "")?;
    let command_name = field(obj, "command", "")?
        .as_str()
        .ok_or_else(|| CliError::schema("/command", "expected a string"))?;
    let command = Command::parse(command_name)?;
    let allowed: &[&str] = if command == Command::Example {
        &EXAMPLE_KEYS
    } else {
        &MEASURE_KEYS
    };
    for key in obj.keys() {
        if key != "command" && !allowed.contains(&key.as_str()) && !PARAM_KEYS.contains(&key.as_str()) {
            return Err(CliError::schema(format!("/{key}"), "unknown field"));
        }
    }

    let mut job = if command == Command::Example {
        let name = field(obj, "name", "")?
            .as_str()
            .ok_or_else(|| CliError::schema("/name", "expected a string"))?;
        let epsilon = obj.get("epsilon").map(|v| number(v, "/epsilon")).transpose()?;
        let mass = obj.get("mass").map(|v| number(v, "/mass")).transpose()?;
        Job::from_preset(command, Preset::parse(name, epsilon, mass)?)
    } else {
        let kind = match field(obj, "setting", "")?.as_str() {
            Some("jacobi") => SettingKind::Jacobi,
            Some("schrodinger") => SettingKind::Schrodinger,
            _ => return Err(CliError::schema("/setting", "expected \"jacobi\" or \"schrodinger\"")),
        };
        let big_r = number(field(obj, "R", "")?, "/R")?;
        Setting::new(kind, big_r).map_err(|e| CliError::schema("/R", e.to_string()))?;
        // support is an admissibility question, left to the pipelines
        let measure = parse_measure(obj)?;
        measure.validate_structure()?;
        Job {
            command,
            kind,
            big_r,
            measure,
            preset: None,
            params: Params::defaults(big_r),
        }
    };

    let p = &mut job.params;
    if let Some(v) = obj.get("N") {
        p.order = count(v, "/N", 1)?;
    }
    if let Some(v) = obj.get("eta") {
        p.eta = positive(v, "/eta")?;
    }
    if let Some(v) = obj.get("grid") {
        p.grid = count(v, "/grid", 2)?;
    }
    if let Some(v) = obj.get("x_max") {
        p.x_max = positive(v, "/x_max")?;
    }
    if let Some(v) = obj.get("step") {
        p.step = positive(v, "/step")?;
    }
    if let Some(v) = obj.get("out") {
        p.out = Some(
            v.as_str()
                .ok_or_else(|| CliError::schema("/out", "expected a string"))?
                .to_string(),
        );
    }
    if job.kind == SettingKind::Schrodinger && p.order < 4 {
        return Err(CliError::schema("/N", "the flow needs N ≥ 4"));
    }
    Ok(job)
}

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn json(name: &str, value: &Value) -> Self {
        let mut contents = serde_json::to_string_pretty(&sorted(value)).expect("values serialize");
        contents.push('\n');
        Artifact {
            name: name.to_string(),
            contents,
        }
    }
}

/// Rebuilds objects with keys in lexicographic order.
fn sorted(value: &Value) -> Value {
    match value {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            let mut out = Map::new();
            for k in keys {
                out.insert(k.clone(), sorted(&m[k]));
            }
            Value::Object(out)
        }
        Value::Array(a) => Value::Array(a.iter().map(sorted).collect()),
        v => v.clone(),
    }
}

/// Non-finite values become JSON null.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn window_csv(j: &JacobiWindow<f64>) -> String {
    let mut s = String::from("n,a_n,b_n\n");
    for n in j.indices() {
        let _ = writeln!(s, "{n},{},{}", fmt(j.a(n)), fmt(j.b(n)));
    }
    s
}

pub fn trace_csv(t: &PotentialTrace<f64>) -> String {
    let cols = t.n_used.min(8);
    let mut s = String::from("x,V");
    for k in 0..=cols {
        let _ = write!(s, ",sigma_{k}");
    }
    s.push('\n');
    for (i, x) in t.xs.iter().enumerate() {
        let _ = write!(s, "{},{}", fmt(*x), fmt(t.v[i]));
        for k in 0..=cols {
            let _ = write!(s, ",{}", fmt(t.moments[i][k]));
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    AdmissibilityFail,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::AdmissibilityFail => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: Status,
    pub artifacts: Vec<Artifact>,
}

/// Riccati test points.
pub const RICCATI_WS: [(f64, f64); 3] = [(0.1, 0.0), (0.0, 0.1), (-0.15, 0.0)];
/// Largest flow step used for the Riccati comparison.
pub const RICCATI_STEP: f64 = 2.5e-4;
/// Points in the reflectionless residual grid.
pub const RESIDUAL_POINTS: usize = 64;

/// Interval of `S` sampled by the reflectionless check: the Jacobi grid stays
/// clear of the band edges, where `m±` of measures with atoms at `±1` blow up.
pub fn residual_interval(kind: SettingKind) -> (f64, f64) {
    match kind {
        SettingKind::Jacobi => (-1.6, 1.6),
        SettingKind::Schrodinger => (0.5, 10.0),
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

pub fn run(job: &Job) -> Result<Outcome, CliError> {
    let mut artifacts = vec![Artifact::json("job.json", &job.to_json())];
    let status = match job.command {
        Command::Check => run_check(job, &mut artifacts)?,
        Command::Jacobi => {
            run_jacobi(job, &mut artifacts)?;
            Status::Pass
        }
        Command::Schrodinger => {
            run_schrodinger(job, &mut artifacts)?;
            Status::Pass
        }
        Command::Verify => {
            run_verify(job, &mut artifacts)?;
            Status::Pass
        }
        Command::Example => {
            let status = run_check(job, &mut artifacts)?;
            if status == Status::Pass {
                match job.kind {
                    SettingKind::Jacobi => run_jacobi(job, &mut artifacts)?,
                    SettingKind::Schrodinger => run_schrodinger(job, &mut artifacts)?,
                }
            }
            run_verify(job, &mut artifacts)?;
            status
        }
    };
    Ok(Outcome { status, artifacts })
}

fn run_check(job: &Job, out: &mut Vec<Artifact>) -> Result<Status, CliError> {
    let support = job.measure.clone().validate(&job.setting()?);
    let rep = job.raw_representation()?;
    let mut report = rep.admissibility();
    report.passed &= support.is_ok();
    let mut v = json!({
        "passed": report.passed,
        "support_violation": support.err().map(|e| e.to_string()),
        "min_value": num(report.min_value),
        "argmin": num(report.argmin),
        "method": report.method,
        "setting": job.kind.name(),
        "R": job.big_r,
    });
    if job.kind == SettingKind::Jacobi {
        v["boundary_roots"] = json!(rep.boundary_roots().into_iter().map(num).collect::<Vec<_>>());
    }
    out.push(Artifact::json("check.json", &v));
    let mut csv = String::from("arg,value\n");
    for (a, b) in &report.samples {
        let _ = writeln!(csv, "{},{}", fmt(*a), fmt(*b));
    }
    out.push(Artifact {
        name: "admissibility.csv".into(),
        contents: csv,
    });
    Ok(if report.passed {
        Status::Pass
    } else {
        Status::AdmissibilityFail
    })
}

fn run_jacobi(job: &Job, out: &mut Vec<Artifact>) -> Result<(), CliError> {
    if job.kind != SettingKind::Jacobi {
        return Err(JacobiError::WrongSetting(job.kind.name()).into());
    }
    let setting = job.setting()?;
    let rep = job.representation()?;
    let n = job.params.order;
    let window = jacobi::reconstruct(&job.measure, &setting, n)?;
    let zs = jacobi::standard_z_grid::<f64>();
    let residual = jacobi::oracle_residual(&window, &rep, &zs, jacobi::DEFAULT_PAD)?;
    let prop = match jacobi::prop311_check(&window, setting.r, jacobi::PROP311_FLOOR) {
        Ok(r) => json!({
            "passed": r.passed,
            "pairs_checked": r.pairs_checked,
            "pairs_skipped": r.pairs_skipped,
            "worst_margin": num(r.worst_margin),
            "worst_n": r.worst_n,
        }),
        Err(JacobiError::FreeOperator) => Value::Null,
        Err(e) => return Err(e.into()),
    };
    let v = json!({
        "N": n,
        "R": job.big_r,
        "a0": window.a(0),
        "b0": window.b(0),
        "oracle_residual": num(residual),
        "z_grid_points": zs.len(),
        "pad": jacobi::DEFAULT_PAD,
        "prop311": prop,
        "free_operator": prop_is_free(&window),
    });
    out.push(Artifact {
        name: "window.csv".into(),
        contents: window_csv(&window),
    });
    out.push(Artifact::json("oracle.json", &v));
    Ok(())
}

fn prop_is_free(w: &JacobiWindow<f64>) -> bool {
    matches!(jacobi::prop311_check(w, 1.0, 0.0), Err(JacobiError::FreeOperator))
}

fn run_schrodinger(job: &Job, out: &mut Vec<Artifact>) -> Result<(), CliError> {
    if job.kind != SettingKind::Schrodinger {
        return Err(CliError::schema("/setting", "the flow needs the schrodinger setting"));
    }
    let p = &job.params;
    let trace = schrodinger::integrate_flow(&job.measure, p.order, job.big_r, p.x_max, p.step)?;
    // the Riccati sweep amplifies local errors by up to e^{2|x|/w}, so the
    // comparison runs on its own finer trace
    let fine = if p.step > RICCATI_STEP {
        schrodinger::integrate_flow(&job.measure, p.order, job.big_r, p.x_max, RICCATI_STEP)?
    } else {
        trace.clone()
    };
    let mut residuals = Vec::new();
    for (re, im) in RICCATI_WS {
        let r = schrodinger::riccati_residual(&fine, C::new(re, im), p.x_max)?;
        residuals.push(json!({"w_re": re, "w_im": im, "max_residual": num(r)}));
    }
    let mut worst_ratio: f64 = 0.0;
    let mut worst_derivative_ratio: f64 = 0.0;
    let mut bounds_ok = true;
    let mut hankel_min = f64::INFINITY;
    let mut hankel_ok = true;
    for i in 0..trace.xs.len() {
        let state = trace.state(i);
        let b = schrodinger::moment_bounds_ok(&state, 3);
        bounds_ok &= b.passed;
        worst_ratio = worst_ratio.max(b.worst_ratio);
        worst_derivative_ratio = worst_derivative_ratio.max(b.worst_derivative_ratio);
        hankel_min = hankel_min.min(schrodinger::hankel_min_eigenvalue(
            &state,
            schrodinger::hankel_size(state.n),
        ));
        hankel_ok &= schrodinger::hankel_psd(&state);
    }
    let v_max = trace.v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let v = json!({
        "N": p.order,
        "R": job.big_r,
        "x_max": p.x_max,
        "step": trace.step,
        "riccati": residuals,
        "riccati_step": fine.step,
        "est_truncation_error": num(trace.est_truncation_error),
        "certified_radius": trace.certified_radius,
        "moment_bounds": {
            "passed": bounds_ok,
            "worst_ratio": worst_ratio,
            "worst_derivative_ratio": worst_derivative_ratio,
        },
        "hankel": {"psd": hankel_ok, "min_eigenvalue": num(hankel_min)},
        "sign": {"max_potential": v_max, "passed": v_max <= 1e-9},
    });
    out.push(Artifact {
        name: "trace.csv".into(),
        contents: trace_csv(&trace),
    });
    out.push(Artifact::json("riccati.json", &v));
    Ok(())
}

fn run_verify(job: &Job, out: &mut Vec<Artifact>) -> Result<(), CliError> {
    let rep = job.raw_representation()?;
    let eta = job.params.eta;
    let (lo, hi) = residual_interval(job.kind);
    let grid = linspace(lo, hi, RESIDUAL_POINTS);
    let residual = rep.reflectionless_residual(&grid, eta)?;

    // leading behaviour at z = iy
    let y = 1e4;
    let z = C::new(0.0, y);
    let mp = rep.m(z, Side::Plus)?;
    let mm = rep.m(z, Side::Minus)?;
    let asymptotics = match job.kind {
        SettingKind::Jacobi => json!({
            "y": y,
            "plus_deviation": num((mp * y - C::new(0.0, 1.0)).norm()),
            "minus_deviation": num((mm / z - C::new(1.0 - rep.sigma_m2(), 0.0)).norm()),
        }),
        SettingKind::Schrodinger => json!({
            "y": y,
            "plus_deviation": num((mp - sqrt_minus_z(z)).norm()),
            "minus_deviation": num((mm - sqrt_minus_z(z)).norm()),
        }),
    };
    let v = json!({
        "reflectionless_residual": num(residual),
        "eta": eta,
        "bound": 10.0 * eta,
        "passed": residual <= 10.0 * eta,
        "grid": {"lo": lo, "hi": hi, "points": RESIDUAL_POINTS},
        "asymptotics": asymptotics,
    });
    out.push(Artifact::json("verify.json", &v));

    let mut csv = String::from("x,density_plus,density_minus\n");
    for x in linspace(lo, hi, job.params.grid) {
        let z = C::new(x, eta);
        let dp = rep.m(z, Side::Plus)?.im / std::f64::consts::PI;
        let dm = rep.m(z, Side::Minus)?.im / std::f64::consts::PI;
        let _ = writeln!(csv, "{},{},{}", fmt(x), fmt(dp), fmt(dm));
    }
    out.push(Artifact {
        name: "boundary.csv".into(),
        contents: csv,
    });
    Ok(())
}

/// Writes artifacts into `dir`, creating it if needed.
pub fn emit(artifacts: &[Artifact], dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, a.contents.as_bytes()).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_examples() {
        let job = parse_input(r#"{"command":"check","setting":"jacobi","R":2,"atoms":[{"t":1,"w":1}]}"#).unwrap();
        assert_eq!(job.command, Command::Check);
        assert_eq!(job.measure, Measure::dirac(1.0, 1.0));
        assert_eq!(job.params, Params::defaults(2.0));

        let err = parse_input(r#"{"command":"check","setting":"jacobi","atoms":[]}"#).unwrap_err();
        assert!(
            matches!(&err, CliError::Schema { pointer, .. } if pointer == "/R"),
            "{err}"
        );

        let job = parse_input(r#"{"command":"example","name":"soliton","epsilon":0.25}"#).unwrap();
        assert_eq!(job.preset, Some(Preset::Soliton { epsilon: 0.25 }));
        assert_eq!(job.big_r, 6.0);

        assert!(matches!(
            parse_input(r#"{"command":"plot"}"#),
            Err(CliError::UnknownCommand(_))
        ));
        let err = parse_input(r#"{"command":"check","setting":"jacobi","R":2,"atoms":[{"t":1}]}"#).unwrap_err();
        assert!(matches!(&err, CliError::Schema { pointer, .. } if pointer == "/atoms/0/w"));
        let err = parse_input(r#"{"command":"check","setting":"jacobi","R":2,"Nn":3}"#).unwrap_err();
        assert!(matches!(&err, CliError::Schema { pointer, .. } if pointer == "/Nn"));
    }

    #[test]
    fn check_delta1_fails_with_exit_two() {
        let job = parse_input(r#"{"command":"check","setting":"jacobi","R":2,"atoms":[{"t":1,"w":1}]}"#).unwrap();
        let out = run(&job).unwrap();
        assert_eq!(out.status.exit_code(), 2);
        let check = out.artifacts.iter().find(|a| a.name == "check.json").unwrap();
        let v: Value = serde_json::from_str(&check.contents).unwrap();
        assert_eq!(v["passed"], json!(false));
    }

    #[test]
    fn free_window_csv() {
        let job = parse_input(r#"{"command":"jacobi","setting":"jacobi","R":2,"N":5}"#).unwrap();
        let out = run(&job).unwrap();
        let csv = &out.artifacts.iter().find(|a| a.name == "window.csv").unwrap().contents;
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,a_n,b_n"));
        let rows: Vec<_> = lines.collect();
        assert_eq!(rows.len(), 11);
        for row in rows {
            let cols: Vec<f64> = row.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
            assert!((cols[0] - 1.0).abs() < 1e-9 && cols[1].abs() < 1e-9);
        }
    }

    #[test]
    fn delta0_trace_starts_at_minus_two() {
        let job = Job::from_preset(Command::Schrodinger, Preset::Delta0 { mass: 1.0 });
        let out = run(&job).unwrap();
        let csv = &out.artifacts.iter().find(|a| a.name == "trace.csv").unwrap().contents;
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "x,V,sigma_0,sigma_1,sigma_2,sigma_3,sigma_4,sigma_5,sigma_6,sigma_7,sigma_8"
        );
        let row = csv.lines().find(|l| l.starts_with("0.0000000000000000e0,")).unwrap();
        assert_eq!(row.split(',').nth(1), Some("-2.0000000000000000e0"));
    }

    #[test]
    fn json_keys_are_sorted() {
        let a = Artifact::json("x.json", &json!({"b": 1, "a": {"d": 2, "c": 3}}));
        assert_eq!(
            a.contents,
            "{\n  \"a\": {\n    \"c\": 3,\n    \"d\": 2\n  },\n  \"b\": 1\n}\n"
        );
    }

    fn any_job() -> impl Strategy<Value = Job> {
        let command = prop_oneof![
            Just(Command::Check),
            Just(Command::Jacobi),
            Just(Command::Schrodinger),
            Just(Command::Verify)
        ];
        let atoms = prop::collection::btree_map(-40i32..40, 0.001f64..2.0, 0..5);
        (
            command,
            any::<bool>(),
            2.0f64..9.0,
            atoms,
            4usize..80,
            1e-6f64..1e-2,
            2usize..2000,
            any::<Option<u8>>(),
        )
            .prop_map(|(command, jac, big_r, atoms, order, eta, grid, out)| {
                let kind = if jac {
                    SettingKind::Jacobi
                } else {
                    SettingKind::Schrodinger
                };
                let mut params = Params::defaults(big_r);
                params.order = order;
                params.eta = eta;
                params.grid = grid;
                params.out = out.map(|k| format!("out/run{k}"));
                Job {
                    command,
                    kind,
                    big_r,
                    measure: Measure::from_atoms(atoms.into_iter().map(|(t, w)| (t as f64 / 7.0, w))),
                    preset: None,
                    params,
                }
            })
    }

    fn any_example() -> impl Strategy<Value = Job> {
        prop_oneof![
            Just(Preset::Free),
            Just(Preset::Delta1),
            (0.01f64..0.99).prop_map(|epsilon| Preset::Soliton { epsilon }),
            (0.01f64..4.0).prop_map(|mass| Preset::Delta0 { mass }),
        ]
        .prop_map(|p| Job::from_preset(Command::Example, p))
    }

    proptest! {
        #[test]
        fn round_trip(job in any_job()) {
            let text = serde_json::to_string(&job.to_json()).unwrap();
            prop_assert_eq!(parse_input(&text).unwrap(), job);
        }

        #[test]
        fn round_trip_examples(job in any_example()) {
            prop_assert_eq!(parse_value(&job.to_json()).unwrap(), job);
        }
    }

    #[test]
    fn output_is_deterministic() {
        for preset in [Preset::Soliton { epsilon: 0.5 }, Preset::Delta0 { mass: 1.0 }] {
            let mut job = Job::from_preset(Command::Example, preset);
            job.params.grid = 64;
            let a = run(&job).unwrap();
            let b = run(&job).unwrap();
            assert_eq!(a, b);
            let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
            let pa = emit(&a.artifacts, da.path()).unwrap();
            let pb = emit(&b.artifacts, db.path()).unwrap();
            for (x, y) in pa.iter().zip(&pb) {
                let (bx, by) = (fs::read(x).unwrap(), fs::read(y).unwrap());
                assert_eq!(bx, by, "{}", x.display());
                assert!(!bx.contains(&b'\r'));
            }
        }
    }

    #[test]
    fn csv_uses_seventeen_digits() {
        assert_eq!(fmt(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt(-2.0), "-2.0000000000000000e0");
        let x: f64 = fmt(std::f64::consts::PI).parse().unwrap();
        assert_eq!(x, std::f64::consts::PI);
    }

    #[test]
    fn emit_reports_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = emit(&[Artifact::json("a.json", &json!({}))], &blocker.join("sub")).unwrap_err();
        assert_eq!(err.kind(), "IoError");
    }

    #[test]
    fn errors_carry_exit_codes() {
        let job = Job::from_preset(Command::Jacobi, Preset::Delta1);
        let err = run(&job).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert_eq!(err.to_json()["error"], json!("JacobiError"));
    }
}
