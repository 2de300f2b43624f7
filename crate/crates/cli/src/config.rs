//! Run configuration: a TOML file with flat keys under `[model]`, `[data]`,
//! `[grid]`, `[time]`, `[solver]`, `[output]` and `[tolerances]`.
//!
//! ```toml
//! [model]
//! preset = "ch-dissipative(0.3)"
//!
//! [data]
//! profile = "gaussian(1, 1, 0)"
//!
//! [grid]
//! n = 2048
//!
//! [time]
//! t_end = 1.0
//! dt = "auto"
//! snapshot_every = 0.1
//!
//! [solver]
//! kind = "all"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use gch_core::eulerian::eulerian_half_width;
use gch_core::io::SolverKind;
use gch_core::lagrangian::{auto_half_width, GridSpec, SUPPORT_THRESHOLD};
use gch_core::model::{make_preset, DerivativeConvention, GchParams, InitialData, InitialProfile, NonlinearitySpec, Preset};
use gch_core::semilinear::{auto_dt, horizon_energy};
use gch_core::verify::Tolerances;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable overriding `[output] dir`.
pub const OUT_ENV: &str = "GCH_OUT";

const DEFAULT_SPACING: f64 = 1e-3;

/// Coarsest default spacing of the Eulerian grid.
const MAX_DEFAULT_DX: f64 = 2.5e-3;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub data: DataSection,
    pub grid: GridSection,
    pub time: TimeSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
}

/// Either a preset or explicit constants; explicit constants default to CH.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, deserialize_with = "de_preset")]
    pub preset: Option<Preset>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub k: Option<f64>,
    pub lambda: Option<f64>,
    /// Coefficients of `h`, lowest degree first; the constant must be 0.
    pub h: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default, deserialize_with = "de_profile")]
    pub profile: Option<InitialProfile>,
    /// CSV with header `x,u0` or `x,u0,u0x`, relative to the config file.
    pub file: Option<PathBuf>,
    /// Sample spacing of named profiles.
    #[serde(default, deserialize_with = "de_opt_positive")]
    pub spacing: Option<f64>,
    /// Half width of the sampled interval of named profiles.
    #[serde(default, deserialize_with = "de_opt_positive")]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(deserialize_with = "de_node_count")]
    pub n: usize,
    /// Label half width `L_Y`; chosen from the data when absent.
    #[serde(default, deserialize_with = "de_opt_positive")]
    pub half_width: Option<f64>,
    /// Physical spacing of the Eulerian solver; the label spacing, capped at
    /// 2.5e-3, when absent.
    #[serde(default, deserialize_with = "de_opt_positive")]
    pub dx: Option<f64>,
    /// Physical half width `L_x` of the Eulerian solver.
    #[serde(default, deserialize_with = "de_opt_positive")]
    pub half_width_x: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(deserialize_with = "de_positive")]
    pub t_end: f64,
    #[serde(default = "auto", deserialize_with = "de_step")]
    pub dt: Step,
    pub snapshots: Option<Vec<f64>>,
    #[serde(default, deserialize_with = "de_opt_positive")]
    pub snapshot_every: Option<f64>,
}

fn auto() -> Step {
    Step::Auto
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// `lagrangian`, `eta`, `eulerian`, `all`, or a list of names.
    #[serde(deserialize_with = "de_solvers")]
    pub kind: Vec<SolverKind>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { kind: vec![SolverKind::Lagrangian] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        self != Format::Json
    }
    pub fn json(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_dir() -> PathBuf {
    PathBuf::from("gch-out")
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_dir(), format: Format::default() }
    }
}

/// Overrides of the verification tolerances.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    #[serde(default, deserialize_with = "de_opt_positive")]
    pub weak_form: Option<f64>,
    #[serde(default, deserialize_with = "de_opt_positive")]
    pub balance_law: Option<f64>,
    #[serde(default, deserialize_with = "de_opt_positive")]
    pub energy_bound: Option<f64>,
    #[serde(default, deserialize_with = "de_opt_positive")]
    pub energy_drift: Option<f64>,
    #[serde(default, deserialize_with = "de_opt_positive")]
    pub bounds: Option<f64>,
}

impl ToleranceSection {
    pub fn apply(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            weak_form: self.weak_form.unwrap_or(d.weak_form),
            balance_law: self.balance_law.unwrap_or(d.balance_law),
            energy_bound: self.energy_bound.unwrap_or(d.energy_bound),
            energy_drift: self.energy_drift.unwrap_or(d.energy_drift),
            bounds: self.bounds.unwrap_or(d.bounds),
        }
    }
}

fn de_preset<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Preset>, D::Error> {
    let s = String::deserialize(d)?;
    Preset::parse(&s).map(Some).map_err(de::Error::custom)
}

fn de_profile<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<InitialProfile>, D::Error> {
    let s = String::deserialize(d)?;
    InitialProfile::parse(&s).map(Some).map_err(de::Error::custom)
}

fn de_positive<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    let v = f64::deserialize(d)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(de::Error::custom(format!("must be positive and finite, got {v}")))
    }
}

fn de_opt_positive<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    de_positive(d).map(Some)
}

fn de_node_count<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<usize, D::Error> {
    let n = usize::deserialize(d)?;
    if n >= 3 {
        Ok(n)
    } else {
        Err(de::Error::custom(format!("needs at least 3 nodes, got {n}")))
    }
}

fn de_step<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Step, D::Error> {
    struct V;
    impl<'de> Visitor<'de> for V {
        type Value = Step;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("\"auto\" or a positive step")
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Step, E> {
            if v > 0.0 && v.is_finite() {
                Ok(Step::Fixed(v))
            } else {
                Err(E::custom(format!("must be positive and finite, got {v}")))
            }
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Step, E> {
            self.visit_f64(v as f64)
        }
        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Step, E> {
            if v == "auto" {
                Ok(Step::Auto)
            } else {
                Err(E::custom(format!("expected \"auto\" or a number, got \"{v}\"")))
            }
        }
    }
    d.deserialize_any(V)
}

fn solver_named<E: de::Error>(name: &str) -> std::result::Result<Vec<SolverKind>, E> {
    match name {
        "lagrangian" => Ok(vec![SolverKind::Lagrangian]),
        "eta" => Ok(vec![SolverKind::Eta]),
        "eulerian" => Ok(vec![SolverKind::Eulerian]),
        "all" => Ok(vec![SolverKind::Lagrangian, SolverKind::Eta, SolverKind::Eulerian]),
        other => Err(E::custom(format!("unknown solver `{other}`"))),
    }
}

fn de_solvers<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<SolverKind>, D::Error> {
    struct V;
    impl<'de> Visitor<'de> for V {
        type Value = Vec<SolverKind>;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a solver name or a list of names")
        }
        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
            solver_named(v)
        }
        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Self::Value, A::Error> {
            let mut out: Vec<SolverKind> = Vec::new();
            while let Some(name) = seq.next_element::<String>()? {
                for k in solver_named(&name)? {
                    if !out.contains(&k) {
                        out.push(k);
                    }
                }
            }
            if out.is_empty() {
                return Err(de::Error::custom("no solver selected"));
            }
            Ok(out)
        }
    }
    d.deserialize_any(V)
}

/// Line of `key` inside `[section]`, 1-based.
fn key_line(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
        } else if current == section {
            if let Some(rest) = t.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// Qualified `section.key` of the assignment on a 1-based line.
fn field_at(src: &str, line: usize) -> String {
    let mut section = String::new();
    for (i, l) in src.lines().enumerate() {
        let t = l.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            section = name.trim().to_string();
        }
        if i + 1 == line {
            return match t.split_once('=') {
                Some((key, _)) if !section.is_empty() => format!("{section}.{}", key.trim()),
                Some((key, _)) => key.trim().to_string(),
                None if !section.is_empty() => section,
                None => t.to_string(),
            };
        }
    }
    String::from("<document>")
}

impl RunConfig {
    pub fn parse(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1);
            let field = line.map_or_else(|| String::from("<document>"), |l| field_at(src, l));
            CliError::config(line, field, e.message().trim_end())
        })
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let src = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok((RunConfig::parse(&src)?, src))
    }
}

/// Everything a run needs, with every default filled in.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub model: String,
    pub params: GchParams,
    pub data: String,
    #[serde(skip)]
    pub samples: InitialData,
    #[serde(skip)]
    pub profile: Option<InitialProfile>,
    pub sample_count: usize,
    pub sample_span: (f64, f64),
    pub n: usize,
    pub half_width: f64,
    pub dx: f64,
    pub half_width_x: f64,
    pub t_end: f64,
    pub dt_requested: Step,
    /// Step of the characteristic solvers before rounding to `t_end / steps`.
    pub dt: f64,
    pub dt_eulerian: f64,
    pub snapshots: Vec<f64>,
    pub solvers: Vec<SolverKind>,
    pub out_dir: PathBuf,
    pub format: Format,
    pub tolerances: Tolerances,
}

impl Resolved {
    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.n, self.half_width).expect("checked while resolving")
    }
}

fn load_samples(path: &Path) -> Result<InitialData> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| CliError::io(path, e))?;
    let header: Vec<String> = reader.headers().map_err(|e| CliError::io(path, e))?.iter().map(str::to_string).collect();
    let with_slope = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "u0"] => false,
        ["x", "u0", "u0x"] => true,
        _ => return Err(CliError::io(path, format!("expected header `x,u0` or `x,u0,u0x`, got `{}`", header.join(",")))),
    };
    let (mut x, mut u0, mut u0x) = (Vec::new(), Vec::new(), Vec::new());
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::io(path, e))?;
        let vals = row
            .iter()
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| CliError::io(path, format!("row {}: {e}", i + 2)))?;
        x.push(vals[0]);
        u0.push(vals[1]);
        if with_slope {
            u0x.push(vals[2]);
        }
    }
    if with_slope {
        return Ok(InitialData::new(x, u0, u0x, DerivativeConvention::Nodal)?);
    }
    // exact slopes of the piecewise-linear interpolant
    let mut slopes: Vec<f64> = x.windows(2).zip(u0.windows(2)).map(|(a, b)| (b[1] - b[0]) / (a[1] - a[0])).collect();
    slopes.push(0.0);
    Ok(InitialData::new(x, u0, slopes, DerivativeConvention::CellSlope)?)
}

fn resolve_params(m: &ModelSection, src: &str) -> Result<(String, GchParams)> {
    if let Some(preset) = &m.preset {
        let explicit = [("alpha", m.alpha.is_some()), ("beta", m.beta.is_some()), ("k", m.k.is_some()), ("lambda", m.lambda.is_some()), ("h", m.h.is_some())];
        if let Some((key, _)) = explicit.iter().find(|(_, set)| *set) {
            return Err(CliError::config(key_line(src, "model", key), format!("model.{key}"), "cannot be combined with a preset"));
        }
        let p = make_preset(preset).map_err(|e| CliError::config(key_line(src, "model", "preset"), "model.preset", e.to_string()))?;
        return Ok((preset.to_string(), p));
    }
    let h = match &m.h {
        Some(c) => NonlinearitySpec::polynomial(c.clone()).map_err(|e| CliError::config(key_line(src, "model", "h"), "model.h", e.to_string()))?,
        None => NonlinearitySpec::square(),
    };
    let p = GchParams::new(m.alpha.unwrap_or(1.0), m.beta.unwrap_or(0.0), m.k.unwrap_or(0.0), m.lambda.unwrap_or(0.0), h)
        .map_err(|e| CliError::config(key_line(src, "model", "alpha"), "model", e.to_string()))?;
    Ok((String::from("explicit"), p))
}

fn snapshot_times(t: &TimeSection, src: &str) -> Result<Vec<f64>> {
    match (&t.snapshots, t.snapshot_every) {
        (Some(_), Some(_)) => Err(CliError::config(
            key_line(src, "time", "snapshot_every"),
            "time.snapshot_every",
            "give either snapshots or snapshot_every",
        )),
        (Some(list), None) => {
            let line = key_line(src, "time", "snapshots");
            if list.is_empty() {
                return Err(CliError::config(line, "time.snapshots", "empty list"));
            }
            if list.iter().any(|&s| !(s >= 0.0 && s <= t.t_end)) {
                return Err(CliError::config(line, "time.snapshots", format!("times must lie in [0, {}]", t.t_end)));
            }
            if list.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(CliError::config(line, "time.snapshots", "times must increase"));
            }
            Ok(list.clone())
        }
        (None, Some(every)) => {
            let count = (t.t_end / every * (1.0 + 1e-12)).floor() as usize;
            let mut times: Vec<f64> = (0..=count).map(|i| i as f64 * every).collect();
            if t.t_end - times[count] > 1e-9 * t.t_end {
                times.push(t.t_end);
            }
            Ok(times)
        }
        (None, None) => Ok(vec![0.0, t.t_end]),
    }
}

/// Fills in the defaults of a parsed configuration. `base` is the directory
/// of the configuration file; `out_override` replaces `[output] dir`.
pub fn resolve(cfg: &RunConfig, src: &str, base: &Path, out_override: Option<PathBuf>) -> Result<Resolved> {
    let (model, params) = resolve_params(&cfg.model, src)?;
    let t_end = cfg.time.t_end;
    let (data, samples, profile) = match (&cfg.data.profile, &cfg.data.file) {
        (Some(_), Some(_)) | (None, None) => {
            return Err(CliError::config(
                key_line(src, "data", "file").or_else(|| key_line(src, "data", "profile")),
                "data",
                "give exactly one of profile or file",
            ))
        }
        (Some(profile), None) => {
            let spacing = cfg.data.spacing.unwrap_or(DEFAULT_SPACING);
            let radius = cfg.data.radius.unwrap_or_else(|| (profile.support_radius(SUPPORT_THRESHOLD) + 2.0).ceil());
            let m = (2.0 * radius / spacing).round() as usize + 1;
            let samples = profile
                .sample(-radius, radius, m)
                .map_err(|e| CliError::config(key_line(src, "data", "profile"), "data.profile", e.to_string()))?;
            (profile.to_string(), samples, Some(*profile))
        }
        (None, Some(file)) => {
            let path = if file.is_absolute() { file.clone() } else { base.join(file) };
            (path.display().to_string(), load_samples(&path)?, None)
        }
    };
    let grid_err = |key: &str, e: gch_core::GchError| CliError::config(key_line(src, "grid", key), format!("grid.{key}"), e.to_string());
    let half_width = match cfg.grid.half_width {
        Some(w) => w,
        None => auto_half_width(&samples, &params, t_end).map_err(|e| grid_err("n", e))?,
    };
    let grid = GridSpec::new(cfg.grid.n, half_width).map_err(|e| grid_err("half_width", e))?;
    let dx = cfg.grid.dx.unwrap_or_else(|| grid.spacing().min(MAX_DEFAULT_DX));
    let half_width_x = match cfg.grid.half_width_x {
        Some(w) => w,
        None => eulerian_half_width(&samples, &params, t_end).map_err(|e| grid_err("half_width_x", e))?,
    };
    if !(dx < half_width_x) {
        return Err(CliError::config(key_line(src, "grid", "dx"), "grid.dx", format!("spacing {dx} exceeds the physical half width {half_width_x}")));
    }
    let e0 = samples.h1_norm_sq();
    let (dt, dt_eulerian) = match cfg.time.dt {
        Step::Fixed(dt) => (dt, dt),
        Step::Auto => {
            let dt = auto_dt(&params, e0, t_end);
            // transport number at most 1/2 on the physical grid
            let speed = params.alpha.abs() * horizon_energy(&params, e0, t_end).sqrt() + params.beta.abs();
            let cfl = if speed > 0.0 { 0.5 * dx / speed } else { dt };
            (dt, t_end / (t_end / dt.min(cfl)).ceil())
        }
    };
    let out_dir = out_override.unwrap_or_else(|| cfg.output.dir.clone());
    Ok(Resolved {
        model,
        params,
        data,
        sample_count: samples.len(),
        sample_span: (samples.x[0], samples.x[samples.len() - 1]),
        samples,
        profile,
        n: cfg.grid.n,
        half_width,
        dx,
        half_width_x,
        t_end,
        dt_requested: cfg.time.dt,
        dt,
        dt_eulerian,
        snapshots: snapshot_times(&cfg.time, src)?,
        solvers: cfg.solver.kind.clone(),
        out_dir,
        format: cfg.output.format,
        tolerances: cfg.tolerances.apply(),
    })
}
