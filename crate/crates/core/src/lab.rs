//! Experiment driver: flat `key=value` configs, experiment recipes, and CSV output.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::function::{Grid, Profile, RadialFunction, SampledFunction, TailPolicy};
use crate::hankel::{hankel_transform, plancherel_check, spectral_grid};
use crate::kernel::{verify_kernel_bounds, BoundItem, KernelPoint, PoissonKernel, QuadratureSpec};
use crate::lacunary::LacunarySetup;
use crate::measure::{bmo_norm, dyadic_family, lp_norm, LambdaSpace, PowerWeight};
use crate::quadrature::Integrator;
use crate::transform::{
    kernel_difference_l1, verify_kn_bounds, IndexWindow, SemigroupTable, TruncationLevel,
};

/// Config problem, with the 1-based line it came from when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Process exit code: 1 for rejected input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Io(_) => 1,
            LabError::Numerical(e) => match e {
                Error::NotConverged { .. } | Error::TailEstimate { .. } | Error::NonFinite(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;

fn config_err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    KernelEval,
    BoundsSuite,
    Transform,
    LogGrowth,
    UniformL2,
    Weighted,
    Bmo,
    L1Diff,
    HankelCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::KernelEval,
        Experiment::BoundsSuite,
        Experiment::Transform,
        Experiment::LogGrowth,
        Experiment::UniformL2,
        Experiment::Weighted,
        Experiment::Bmo,
        Experiment::L1Diff,
        Experiment::HankelCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::KernelEval => "kernel-eval",
            Experiment::BoundsSuite => "bounds-suite",
            Experiment::Transform => "transform",
            Experiment::LogGrowth => "loggrowth",
            Experiment::UniformL2 => "uniform-l2",
            Experiment::Weighted => "weighted",
            Experiment::Bmo => "bmo",
            Experiment::L1Diff => "l1diff",
            Experiment::HankelCheck => "hankel-check",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

/// Times `a_j`: an explicit list or `first * ratio^i` for `count` terms.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSpec {
    Explicit(Vec<f64>),
    Geometric { first: f64, ratio: f64, count: usize },
}

impl SequenceSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            SequenceSpec::Explicit(v) => v.clone(),
            SequenceSpec::Geometric { first, ratio, count } => {
                (0..*count).map(|i| first * ratio.powi(i as i32)).collect()
            }
        }
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceSpec::Explicit(v) => f.write_str(&join(v)),
            SequenceSpec::Geometric { first, ratio, count } => write!(f, "geometric:{first},{ratio},{count}"),
        }
    }
}

/// Coefficients `v_j`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSpec {
    Constant(f64),
    /// `(-1)^j`
    Alternating,
    /// `(-1)^j (1 + |j|)^{-s}`
    Decay(f64),
    /// Independent fair signs drawn from the seed.
    RandomSign,
    /// Values for `j = j_min, j_min + 1, ...`.
    Explicit(Vec<f64>),
}

impl CoefficientSpec {
    pub fn values(&self, j_min: i64, count: usize, seed: u64) -> Result<Vec<f64>, ConfigError> {
        let js = (0..count).map(|i| j_min + i as i64);
        let alt = |j: i64| if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        Ok(match self {
            CoefficientSpec::Constant(c) => vec![*c; count],
            CoefficientSpec::Alternating => js.map(alt).collect(),
            CoefficientSpec::Decay(s) => js.map(|j| alt(j) * (1.0 + j.abs() as f64).powf(-s)).collect(),
            CoefficientSpec::RandomSign => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0ef);
                (0..count).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect()
            }
            CoefficientSpec::Explicit(v) => {
                if v.len() != count {
                    return Err(config_err(
                        None,
                        format!("v lists {} coefficients; the sequence needs {count}", v.len()),
                    ));
                }
                v.clone()
            }
        })
    }
}

impl fmt::Display for CoefficientSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientSpec::Constant(c) => write!(f, "constant:{c}"),
            CoefficientSpec::Alternating => f.write_str("alternating"),
            CoefficientSpec::Decay(s) => write!(f, "decay:{s}"),
            CoefficientSpec::RandomSign => f.write_str("random_sign"),
            CoefficientSpec::Explicit(v) => write!(f, "explicit:{}", join(v)),
        }
    }
}

/// Log-spaced evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { lo: 1e-3, hi: 1e3, n: 512 }
    }
}

impl GridSpec {
    pub fn build(&self) -> crate::Result<Grid> {
        Grid::log_spaced(self.lo, self.hi, self.n)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.lo, self.hi, self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub lambda: f64,
    pub sequence: SequenceSpec,
    pub j_min: i64,
    /// Lacunarity constant; the smallest consecutive ratio when unset.
    pub rho: Option<f64>,
    pub v: CoefficientSpec,
    pub grid: GridSpec,
    pub quad: QuadratureSpec,
    pub p: f64,
    pub q: f64,
    pub delta: f64,
    pub m_cap: i64,
    /// Test function text; each experiment has its own default when unset.
    pub function: Option<String>,
    pub window: Option<(i64, i64)>,
    pub samples: usize,
    pub windows: usize,
    pub r_list: Vec<f64>,
    pub items: Vec<String>,
    /// Point lists; each experiment has its own default when unset.
    pub t_list: Option<Vec<f64>>,
    pub x_list: Option<Vec<f64>>,
    pub y_list: Option<Vec<f64>>,
    pub dilation: f64,
    pub kernel_route: bool,
    pub y_max: f64,
    pub family: (i32, i32, i32, i32),
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn function_text(&self, experiment: Experiment) -> &str {
        self.function.as_deref().unwrap_or(match experiment {
            Experiment::Bmo => "smoothed_step:1,1,0.25",
            Experiment::HankelCheck => "gaussian:1,0,0.5",
            _ => "indicator:0,1,1",
        })
    }

    /// The test function used by `experiment`.
    pub fn profile(&self, experiment: Experiment) -> Result<Profile, ConfigError> {
        parse_function(self.function_text(experiment)).map_err(|m| config_err(None, format!("function: {m}")))
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            lambda: 1.0,
            sequence: SequenceSpec::Geometric { first: 2f64.powi(-12), ratio: 2.0, count: 26 },
            j_min: -12,
            rho: None,
            v: CoefficientSpec::Alternating,
            grid: GridSpec::default(),
            quad: QuadratureSpec::default(),
            p: 2.0,
            q: 2.0,
            delta: 0.0,
            m_cap: 8,
            function: None,
            window: None,
            samples: 50,
            windows: 10,
            r_list: (2..=10).map(|k| 2f64.powi(-k)).collect(),
            items: ["i", "ii", "iii", "iv", "kn_size", "kn_smooth"].map(String::from).to_vec(),
            t_list: None,
            x_list: None,
            y_list: None,
            dilation: 1.0,
            kernel_route: false,
            y_max: 40.0,
            family: (-8, 8, -8, 8),
            out: None,
            seed: 0,
        }
    }
}

const KEYS: &[&str] = &[
    "experiment",
    "lambda",
    "sequence",
    "j_min",
    "rho",
    "v",
    "grid",
    "theta_nodes",
    "y_nodes",
    "panel_count",
    "rel_tol",
    "abs_tol",
    "p",
    "q",
    "delta",
    "m_cap",
    "function",
    "window",
    "samples",
    "windows",
    "r_list",
    "items",
    "t",
    "x",
    "y",
    "dilation",
    "kernel_route",
    "y_max",
    "family",
    "out",
    "seed",
];

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_real(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")),
    }
}

fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_real).collect()
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.trim().parse::<T>().map_err(|_| format!("`{}` is not an integer", s.trim()))
}

fn parse_ints<T: std::str::FromStr>(s: &str, n: usize) -> Result<Vec<T>, String> {
    let v: Vec<T> = s.split(',').map(parse_int).collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated integers"));
    }
    Ok(v)
}

fn parse_geometric(body: &str) -> Result<SequenceSpec, String> {
    let parts: Vec<&str> = body.split(',').collect();
    if parts.len() != 3 {
        return Err("geometric needs first,ratio,count".into());
    }
    let first = parse_real(parts[0])?;
    let ratio = parse_real(parts[1])?;
    let count = parse_int::<usize>(parts[2])?;
    if !(first > 0.0 && first.is_finite() && ratio > 0.0 && ratio.is_finite()) {
        return Err("geometric first and ratio must be positive".into());
    }
    Ok(SequenceSpec::Geometric { first, ratio, count })
}

/// A comma list of reals or `geometric:first,ratio,count`.
pub fn parse_sequence(s: &str) -> Result<SequenceSpec, String> {
    match s.strip_prefix("geometric:") {
        Some(body) => parse_geometric(body),
        None => Ok(SequenceSpec::Explicit(parse_reals(s)?)),
    }
}

pub fn parse_coefficients(s: &str) -> Result<CoefficientSpec, String> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let one = |arg: &str| -> Result<f64, String> {
        let v = parse_real(arg)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err("coefficient parameter must be finite".into())
        }
    };
    match kind.trim() {
        "constant" => Ok(CoefficientSpec::Constant(one(arg)?)),
        "alternating" if arg.is_empty() => Ok(CoefficientSpec::Alternating),
        "random_sign" if arg.is_empty() => Ok(CoefficientSpec::RandomSign),
        "decay" => {
            let s = one(arg)?;
            if s <= 0.0 {
                return Err("decay exponent must be positive".into());
            }
            Ok(CoefficientSpec::Decay(s))
        }
        "explicit" => {
            let v = parse_reals(arg)?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err("explicit coefficients must be finite".into());
            }
            Ok(CoefficientSpec::Explicit(v))
        }
        other => Err(format!(
            "unknown coefficient spec `{other}` (constant:c, alternating, decay:s, random_sign, explicit:list)"
        )),
    }
}

/// `indicator:lo,hi,h | gaussian:a,c,w | bump:a,c,r | smoothed_step:h,e,w | zero | constant:c`.
pub fn parse_function(s: &str) -> Result<Profile, String> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let args = if arg.is_empty() { Vec::new() } else { parse_reals(arg)? };
    let need = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("function `{kind}` takes {n} parameters"))
        }
    };
    let p = match kind.trim() {
        "zero" => {
            need(0)?;
            Profile::Zero
        }
        "constant" => {
            need(1)?;
            Profile::Constant(args[0])
        }
        "indicator" => {
            need(3)?;
            Profile::Indicator { lo: args[0], hi: args[1], height: args[2] }
        }
        "gaussian" => {
            need(3)?;
            Profile::Gaussian { amplitude: args[0], center: args[1], width: args[2] }
        }
        "bump" => {
            need(3)?;
            Profile::Bump { amplitude: args[0], center: args[1], radius: args[2] }
        }
        "smoothed_step" => {
            need(3)?;
            Profile::SmoothedStep { height: args[0], edge: args[1], width: args[2] }
        }
        other => return Err(format!("unknown function `{other}`")),
    };
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

fn positive(v: f64, what: &str) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what} must be positive and finite, got {v}"))
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

/// Parses a flat `key=value` config; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(Some(line_no), format!("expected key=value, got `{line}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(config_err(Some(line_no), format!("unknown key `{key}`")));
        }
        if let Some(first) = seen.insert(key.to_string(), line_no) {
            return Err(config_err(Some(line_no), format!("duplicate key `{key}` (first set on line {first})")));
        }
        apply_key(&mut cfg, key, value).map_err(|m| config_err(Some(line_no), format!("{key}: {m}")))?;
    }
    validate_config(&cfg)?;
    Ok(cfg)
}

fn apply_key(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), String> {
    match key {
        "experiment" => {
            cfg.experiment = Some(Experiment::parse(value).ok_or_else(|| format!("unknown experiment `{value}`"))?)
        }
        "lambda" => cfg.lambda = positive(parse_real(value)?, "lambda")?,
        "sequence" => cfg.sequence = parse_sequence(value)?,
        "j_min" => cfg.j_min = parse_int(value)?,
        "rho" => {
            let r = parse_real(value)?;
            if !(r > 1.0 && r.is_finite()) {
                return Err(format!("rho must exceed 1, got {r}"));
            }
            cfg.rho = Some(r)
        }
        "v" => cfg.v = parse_coefficients(value)?,
        "grid" => {
            let parts: Vec<&str> = value.split(',').collect();
            if parts.len() != 3 {
                return Err("grid needs lo,hi,n".into());
            }
            cfg.grid = GridSpec { lo: parse_real(parts[0])?, hi: parse_real(parts[1])?, n: parse_int(parts[2])? };
        }
        "theta_nodes" => cfg.quad.theta_nodes = parse_int(value)?,
        "y_nodes" => cfg.quad.y_nodes_per_panel = parse_int(value)?,
        "panel_count" => cfg.quad.panel_count = parse_int(value)?,
        "rel_tol" => cfg.quad.rel_tol = parse_real(value)?,
        "abs_tol" => cfg.quad.abs_tol = parse_real(value)?,
        "p" => {
            let p = parse_real(value)?;
            if !(p >= 1.0) {
                return Err(format!("p must be at least 1, got {p}"));
            }
            cfg.p = p
        }
        "q" => {
            let q = parse_real(value)?;
            if !(q >= 1.0 && q.is_finite()) {
                return Err(format!("q must be finite and at least 1, got {q}"));
            }
            cfg.q = q
        }
        "delta" => {
            let d = parse_real(value)?;
            if !d.is_finite() {
                return Err("delta must be finite".into());
            }
            cfg.delta = d
        }
        "m_cap" => {
            let m: i64 = parse_int(value)?;
            if m < 1 {
                return Err(format!("m_cap must be at least 1, got {m}"));
            }
            cfg.m_cap = m
        }
        "function" => {
            parse_function(value)?;
            cfg.function = Some(value.to_string());
        }
        "window" => {
            let w: Vec<i64> = parse_ints(value, 2)?;
            if w[0] >= w[1] {
                return Err("window needs n1 < n2".into());
            }
            cfg.window = Some((w[0], w[1]))
        }
        "samples" => cfg.samples = parse_int(value)?,
        "windows" => cfg.windows = parse_int(value)?,
        "r_list" => cfg.r_list = parse_sequence(value)?.values(),
        "items" => {
            cfg.items = if value.is_empty() {
                Vec::new()
            } else {
                value.split(',').map(|s| s.trim().to_string()).collect()
            };
            for it in &cfg.items {
                if BoundItem::parse(it).is_none() && it != "kn_size" && it != "kn_smooth" {
                    return Err(format!("unknown bound item `{it}` (i, ii, iii, iv, kn_size, kn_smooth)"));
                }
            }
        }
        "t" => cfg.t_list = Some(parse_sequence(value)?.values()),
        "x" => cfg.x_list = Some(parse_sequence(value)?.values()),
        "y" => cfg.y_list = Some(parse_sequence(value)?.values()),
        "dilation" => cfg.dilation = positive(parse_real(value)?, "dilation")?,
        "kernel_route" => cfg.kernel_route = parse_bool(value)?,
        "y_max" => cfg.y_max = positive(parse_real(value)?, "y_max")?,
        "family" => {
            let f: Vec<i32> = parse_ints(value, 4)?;
            if f[0] > f[1] || f[2] > f[3] {
                return Err("family needs center_lo <= center_hi and radius_lo <= radius_hi".into());
            }
            cfg.family = (f[0], f[1], f[2], f[3])
        }
        "out" => cfg.out = Some(PathBuf::from(value)),
        "seed" => cfg.seed = parse_int(value)?,
        _ => unreachable!("key list checked"),
    }
    Ok(())
}

fn validate_config(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let err = |m: String| config_err(None, m);
    LambdaSpace::new(cfg.lambda).map_err(|e| err(e.to_string()))?;
    cfg.quad.validate().map_err(|e| err(e.to_string()))?;
    cfg.grid.build().map_err(|e| err(format!("grid: {e}")))?;
    let a = cfg.sequence.values();
    if a.len() < 2 {
        return Err(err("sequence needs at least two terms".into()));
    }
    let lists = [&cfg.t_list, &cfg.x_list, &cfg.y_list].into_iter().flatten();
    for list in lists.chain(std::iter::once(&cfg.r_list)) {
        if let Some(v) = list.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(err(format!("point lists must be positive and finite, got {v}")));
        }
    }
    cfg.v.values(cfg.j_min, a.len() - 1, cfg.seed)?;
    build_setup(cfg).map_err(|e| err(e.to_string()))?;
    Ok(())
}

/// The lacunary setup described by the sequence, coefficient and `rho` keys.
pub fn build_setup(cfg: &ExperimentConfig) -> LabResult<LacunarySetup> {
    let a = cfg.sequence.values();
    let v = cfg.v.values(cfg.j_min, a.len() - 1, cfg.seed)?;
    let rho = match cfg.rho {
        Some(r) => r,
        None => {
            let min_ratio = a.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
            if min_ratio > 1.0 {
                min_ratio
            } else {
                // non-increasing input is rejected by the setup itself
                2.0
            }
        }
    };
    Ok(LacunarySetup::new(cfg.j_min, a, v, rho)?)
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => write!(f, "{v:.16e}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Outcome of one experiment contract.
#[derive(Debug, Clone, PartialEq)]
pub struct Contract {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: Experiment,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, f64)>,
    pub contracts: Vec<Contract>,
}

impl Report {
    fn new(experiment: Experiment, cfg: &ExperimentConfig, columns: &[&'static str]) -> Self {
        Self {
            experiment,
            meta: describe(experiment, cfg),
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: Vec::new(),
            contracts: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn note(&mut self, key: &str, value: f64) {
        self.summary.push((key.to_string(), value));
    }

    fn contract(&mut self, name: &str, passed: bool, detail: String) {
        self.contracts.push(Contract { name: name.to_string(), passed, detail });
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn passed(&self) -> bool {
        self.contracts.iter().all(|c| c.passed)
    }
}

fn describe(experiment: Experiment, cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let q = &cfg.quad;
    let rho = build_setup(cfg).map(|s| s.rho().to_string()).unwrap_or_default();
    [
        ("experiment", experiment.name().to_string()),
        ("lambda", cfg.lambda.to_string()),
        ("sequence", cfg.sequence.to_string()),
        ("j_min", cfg.j_min.to_string()),
        ("rho", rho),
        ("v", cfg.v.to_string()),
        ("grid", cfg.grid.to_string()),
        (
            "quadrature",
            format!(
                "theta_nodes={} y_nodes={} panel_count={} rel_tol={} abs_tol={}",
                q.theta_nodes, q.y_nodes_per_panel, q.panel_count, q.rel_tol, q.abs_tol
            ),
        ),
        ("function", cfg.function_text(experiment).to_string()),
        ("m_cap", cfg.m_cap.to_string()),
        ("p", cfg.p.to_string()),
        ("q", cfg.q.to_string()),
        ("delta", cfg.delta.to_string()),
        ("seed", cfg.seed.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Writes the `#` header block, the column header, and one line per row.
pub fn write_csv(report: &Report, mut w: impl Write) -> std::io::Result<()> {
    for (k, v) in &report.meta {
        writeln!(w, "# {k}: {v}")?;
    }
    writeln!(w, "{}", report.columns.join(","))?;
    for row in &report.rows {
        let line: Vec<String> = row.iter().map(Cell::to_string).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn emit_csv(report: &Report, path: &Path) -> std::io::Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv(report, &mut file)?;
    file.flush()
}

/// Spearman rank correlation; NaN when either input is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spearman inputs differ in length");
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return f64::NAN;
    }
    cov / (va * vb).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Sum of one to five Gaussian bumps with log-uniform centers in `[lo, hi]`, widths
/// between a tenth and a half of the center, and random signs.
pub fn random_bumps(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Profile {
    let n = rng.gen_range(1..=5);
    let parts = (0..n)
        .map(|_| {
            let center = rng.gen_range(lo.ln()..hi.ln()).exp();
            let width = center * rng.gen_range(0.1..0.5);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            Profile::Gaussian { amplitude: sign * rng.gen_range(0.5..1.5), center, width }
        })
        .collect();
    Profile::Sum(parts)
}

/// `count` windows inside `[-cap, cap]` with lengths spread from 2 to `2 cap + 1`
/// and random positions.
pub fn random_windows(rng: &mut ChaCha8Rng, count: usize, cap: i64) -> Vec<IndexWindow> {
    let max_len = 2 * cap + 1;
    (0..count)
        .map(|i| {
            let len = if count == 1 {
                max_len
            } else {
                2 + ((max_len - 2) as f64 * i as f64 / (count - 1) as f64).round() as i64
            };
            let n1 = rng.gen_range(-cap..=cap + 1 - len);
            IndexWindow::new(n1, n1 + len - 1).expect("length at least two")
        })
        .collect()
}

fn kernel_for(cfg: &ExperimentConfig) -> LabResult<PoissonKernel> {
    Ok(PoissonKernel::new(LambdaSpace::new(cfg.lambda)?, cfg.quad)?)
}

fn times_for(setup: &LacunarySetup, lo: i64, hi: i64) -> Vec<f64> {
    (lo..=hi).map(|j| setup.a(j).expect("cap checked")).collect()
}

fn check_cap(setup: &LacunarySetup, m_cap: i64) -> LabResult<TruncationLevel> {
    let cap = TruncationLevel::new(m_cap)?;
    setup.check_window(&cap.full_window())?;
    Ok(cap)
}

/// Runs the experiment named in the config.
pub fn run(cfg: &ExperimentConfig) -> LabResult<Report> {
    let Some(e) = cfg.experiment else {
        return Err(config_err(None, "no experiment selected").into());
    };
    run_experiment(e, cfg)
}

pub fn run_experiment(e: Experiment, cfg: &ExperimentConfig) -> LabResult<Report> {
    match e {
        Experiment::KernelEval => run_kernel_eval(cfg),
        Experiment::BoundsSuite => run_kernel_bound_suite(cfg),
        Experiment::Transform => run_transform(cfg),
        Experiment::LogGrowth => run_log_growth(cfg),
        Experiment::UniformL2 => run_uniform_l2(cfg),
        Experiment::Weighted => run_weighted_sweep(cfg),
        Experiment::Bmo => run_bmo_experiment(cfg),
        Experiment::L1Diff => run_l1_difference_norm(cfg),
        Experiment::HankelCheck => run_hankel_check(cfg),
    }
}

/// Kernel value and derivatives on the `t × x × y` product.
pub fn run_kernel_eval(cfg: &ExperimentConfig) -> LabResult<Report> {
    let kernel = kernel_for(cfg)?;
    let mut rep = Report::new(
        Experiment::KernelEval,
        cfg,
        &["t", "x", "y", "value", "dt", "dx", "dy", "dxdt", "dydt"],
    );
    let one = vec![1.0];
    for &t in cfg.t_list.as_ref().unwrap_or(&one) {
        for &x in cfg.x_list.as_ref().unwrap_or(&one) {
            for &y in cfg.y_list.as_ref().unwrap_or(&one) {
                let j = kernel.jet(&KernelPoint::new(t, x, y)?)?;
                rep.push(vec![
                    t.into(),
                    x.into(),
                    y.into(),
                    j.value.into(),
                    j.dt.into(),
                    j.dx.into(),
                    j.dy.into(),
                    j.dxdt.into(),
                    j.dydt.into(),
                ]);
            }
        }
    }
    Ok(rep)
}

fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    Grid::log_spaced(lo, hi, n).expect("valid").points().to_vec()
}

/// Sweep lists, by default `t` and `x` over four decades and `y` over six, all scaled
/// by `dilation`.
fn bound_sweep(cfg: &ExperimentConfig) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let c = cfg.dilation;
    let pick = |v: &Option<Vec<f64>>, lo: f64, hi: f64, n: usize| {
        let base = v.clone().unwrap_or_else(|| log_points(lo, hi, n));
        base.into_iter().map(|x| x * c).collect::<Vec<_>>()
    };
    (pick(&cfg.t_list, 1e-2, 1e2, 9), pick(&cfg.x_list, 1e-2, 1e2, 9), pick(&cfg.y_list, 1e-3, 1e3, 25))
}

/// Fitted constants of the kernel estimates and of the `K_N` estimates.
pub fn run_kernel_bound_suite(cfg: &ExperimentConfig) -> LabResult<Report> {
    let kernel = kernel_for(cfg)?;
    let mut rep = Report::new(
        Experiment::BoundsSuite,
        cfg,
        &["item", "n1", "n2", "fitted_constant", "near_origin", "off_origin", "points"],
    );
    let (ts, xs, ys) = bound_sweep(cfg);
    let mut all_finite = true;
    let kernel_points: Vec<KernelPoint> = ts
        .iter()
        .flat_map(|&t| xs.iter().flat_map(|&x| ys.iter().map(move |&y| (t, x, y))).collect::<Vec<_>>())
        .map(|(t, x, y)| KernelPoint::new(t, x, y))
        .collect::<crate::Result<_>>()?;
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
        .filter(|(x, y)| x != y)
        .collect();
    let mut windows = None;
    for item in &cfg.items {
        if let Some(b) = BoundItem::parse(item) {
            let r = verify_kernel_bounds(&kernel, &kernel_points, b)?;
            all_finite &= r.fitted_constant.is_finite();
            rep.push(vec![
                item.as_str().into(),
                "".into(),
                "".into(),
                r.fitted_constant.into(),
                r.near_origin_constant.into(),
                r.off_origin_constant.into(),
                r.points.into(),
            ]);
            continue;
        }
        let setup = build_setup(cfg)?;
        check_cap(&setup, cfg.m_cap)?;
        let ws = windows.get_or_insert_with(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            random_windows(&mut rng, cfg.windows.max(1), cfg.m_cap)
        });
        let mut fits = Vec::new();
        for w in ws.iter() {
            let r = verify_kn_bounds(&kernel, &setup, w, &pairs)?;
            let (fit, near, off) = if item == "kn_size" {
                (r.size_constant, r.size_near_origin, r.size_off_origin)
            } else {
                (r.smoothness_constant, r.smoothness_near_origin, r.smoothness_off_origin)
            };
            all_finite &= fit.is_finite();
            fits.push(fit);
            rep.push(vec![
                item.as_str().into(),
                w.n1().into(),
                w.n2().into(),
                fit.into(),
                near.into(),
                off.into(),
                r.points.into(),
            ]);
        }
        let (lo, hi) = fits.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &f| (a.min(f), b.max(f)));
        let spread = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
        rep.note(&format!("{item}_spread"), spread);
        rep.contract(
            &format!("{item} uniform in window"),
            spread <= 0.25,
            format!("(max - min)/max = {spread:.4} over {} windows", fits.len()),
        );
    }
    rep.contract("fitted constants finite", all_finite, String::new());
    Ok(rep)
}

fn window_or_full(cfg: &ExperimentConfig) -> LabResult<IndexWindow> {
    Ok(match cfg.window {
        Some((a, b)) => IndexWindow::new(a, b)?,
        None => TruncationLevel::new(cfg.m_cap)?.full_window(),
    })
}

fn half_cap(m_cap: i64) -> i64 {
    (m_cap / 2).max(1)
}

/// `T_N f`, `T*_M f` and `T*_{M/2} f` on the grid, optionally with the kernel route.
pub fn run_transform(cfg: &ExperimentConfig) -> LabResult<Report> {
    let kernel = kernel_for(cfg)?;
    let setup = build_setup(cfg)?;
    let cap = check_cap(&setup, cfg.m_cap)?;
    let window = window_or_full(cfg)?;
    setup.check_window(&window)?;
    let grid = cfg.grid.build()?;
    let f = &cfg.profile(Experiment::Transform)?;
    let lo = window.n1().min(-cap.m_cap());
    let hi = window.n2().max(cap.m_cap()) + 1;
    let table = SemigroupTable::build(&kernel, f, &times_for(&setup, lo, hi), grid.points())?;
    let t_n: Vec<f64> = table.terms(&setup, &window).iter().map(|r| r.iter().sum()).collect();
    let t_star = sup_rows(&table, &setup, cap.m_cap());
    let t_half = sup_rows(&table, &setup, half_cap(cap.m_cap()));
    let route = if cfg.kernel_route {
        Some(crate::transform::apply_t_n_kernel_route(&kernel, &setup, &window, f, &grid)?)
    } else {
        None
    };
    let mut columns = vec!["x", "f", "t_n", "t_star", "t_star_half"];
    if route.is_some() {
        columns.push("t_n_kernel_route");
    }
    let mut rep = Report::new(Experiment::Transform, cfg, &columns);
    let mut worst = 0.0f64;
    for (i, &x) in grid.points().iter().enumerate() {
        let mut row: Vec<Cell> = vec![x.into(), f.value(x).into(), t_n[i].into(), t_star[i].into(), t_half[i].into()];
        if let Some(r) = &route {
            worst = worst.max((r.values()[i] - t_n[i]).abs());
            row.push(r.values()[i].into());
        }
        rep.push(row);
    }
    rep.note("n1", window.n1() as f64);
    rep.note("n2", window.n2() as f64);
    if route.is_some() {
        rep.note("route_difference", worst);
        rep.contract("summation and kernel routes agree", worst <= 1e-8, format!("max difference {worst:.3e}"));
    }
    Ok(rep)
}

/// `T*_M` from a table covering `[-m_cap, m_cap + 1]`.
fn sup_rows(table: &SemigroupTable, setup: &LacunarySetup, m_cap: i64) -> Vec<f64> {
    let w = IndexWindow::new(-m_cap, m_cap).expect("m_cap >= 1");
    table.terms(setup, &w).iter().map(|r| crate::transform::window_sup(r)).collect()
}

/// Panels grading geometrically towards the origin on `(0, r)`.
fn origin_panels(r: f64) -> Vec<(f64, f64)> {
    const LEVELS: i32 = 24;
    let mut panels = vec![(0.0, r * 2f64.powi(-LEVELS))];
    for k in (0..LEVELS).rev() {
        panels.push((r * 2f64.powi(-k - 1), r * 2f64.powi(-k)));
    }
    panels
}

fn dual_exponent_inverse(p: f64) -> f64 {
    // 1/p' = 1 - 1/p
    if p.is_infinite() {
        1.0
    } else {
        1.0 - 1.0 / p
    }
}

/// Averages of `T*_M f` over `(0, r)` against `log(2/r)`.
pub fn run_log_growth(cfg: &ExperimentConfig) -> LabResult<Report> {
    if let Some(r) = cfg.r_list.iter().find(|&&r| 2.0 * r >= 1.0) {
        return Err(config_err(None, format!("loggrowth needs 2r < 1, got r = {r}")).into());
    }
    let kernel = kernel_for(cfg)?;
    let space = *kernel.space();
    let setup = build_setup(cfg)?;
    let cap = check_cap(&setup, cfg.m_cap)?;
    let integ = Integrator::new(cfg.quad.y_nodes_per_panel, 2.0 * space.lambda())?;
    let f = &cfg.profile(Experiment::LogGrowth)?;
    let mut points = Vec::new();
    for &r in &cfg.r_list {
        integ.integrate(&origin_panels(r), |y| {
            points.push(y);
            0.0
        });
    }
    let table = SemigroupTable::build(&kernel, f, &times_for(&setup, -cap.m_cap(), cap.m_cap() + 1), &points)?;
    let full = sup_rows(&table, &setup, cap.m_cap());
    let half = sup_rows(&table, &setup, half_cap(cap.m_cap()));
    let mut rep = Report::new(
        Experiment::LogGrowth,
        cfg,
        &["r", "log_2_over_r", "average", "average_half_cap", "relative_change", "stabilized"],
    );
    let mut idx = 0;
    let mut fit_x = Vec::new();
    let mut fit_y = Vec::new();
    for &r in &cfg.r_list {
        let start = idx;
        let mass = space.measure_between(0.0, r);
        let avg = integ.integrate(&origin_panels(r), |_| {
            idx += 1;
            full[idx - 1]
        }) / mass;
        idx = start;
        let avg_half = integ.integrate(&origin_panels(r), |_| {
            idx += 1;
            half[idx - 1]
        }) / mass;
        let change = if avg > 0.0 { (avg - avg_half).abs() / avg } else { 0.0 };
        let stable = change <= 0.05;
        let l = (2.0 / r).ln();
        if stable && avg > 0.0 {
            fit_x.push(l.ln());
            fit_y.push(avg.ln());
        }
        rep.push(vec![r.into(), l.into(), avg.into(), avg_half.into(), change.into(), (stable as i64).into()]);
    }
    let bound = dual_exponent_inverse(cfg.p) + 0.15;
    rep.note("m_cap", cap.m_cap() as f64);
    rep.note("slope_bound", bound);
    match ols_slope(&fit_x, &fit_y) {
        Some(s) => {
            rep.note("slope", s);
            rep.contract("log-growth exponent", s <= bound, format!("slope {s:.4} against bound {bound:.4}"));
        }
        None => rep.contract("log-growth exponent", true, "no fit: fewer than two usable radii".into()),
    }
    Ok(rep)
}

struct Family {
    functions: Vec<Profile>,
    windows: Vec<IndexWindow>,
}

fn random_family(cfg: &ExperimentConfig) -> Family {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = (cfg.grid.lo * 10.0, cfg.grid.hi / 10.0);
    let functions = (0..cfg.samples).map(|_| random_bumps(&mut rng, lo.min(hi), hi.max(lo))).collect();
    let windows = random_windows(&mut rng, cfg.windows.max(1), cfg.m_cap);
    Family { functions, windows }
}

fn transform_tail(space: &LambdaSpace) -> TailPolicy {
    TailPolicy::PowerLaw(2.0 * space.lambda() + 2.0)
}

/// `‖T_N f‖₂ / ‖f‖₂` over random bump mixtures and windows.
pub fn run_uniform_l2(cfg: &ExperimentConfig) -> LabResult<Report> {
    let kernel = kernel_for(cfg)?;
    let space = *kernel.space();
    let setup = build_setup(cfg)?;
    let cap = check_cap(&setup, cfg.m_cap)?;
    let grid = cfg.grid.build()?;
    let fam = random_family(cfg);
    let times = times_for(&setup, -cap.m_cap(), cap.m_cap() + 1);
    let mut rep = Report::new(
        Experiment::UniformL2,
        cfg,
        &["sample", "n1", "n2", "length", "norm_f", "norm_t_n_f", "ratio"],
    );
    let mut ratios = Vec::new();
    let mut lengths = Vec::new();
    for (s, f) in fam.functions.iter().enumerate() {
        let norm_f = lp_norm(&space, f, 2.0, None, &cfg.quad)?;
        let table = SemigroupTable::build(&kernel, f, &times, grid.points())?;
        for w in &fam.windows {
            let vals = table.terms(&setup, w).iter().map(|r| r.iter().sum()).collect();
            let tnf = SampledFunction::new(grid.clone(), vals, transform_tail(&space))?;
            let norm = lp_norm(&space, &tnf, 2.0, None, &cfg.quad)?;
            let ratio = if norm_f > 0.0 { norm / norm_f } else { 0.0 };
            ratios.push(ratio);
            lengths.push(w.len() as f64);
            rep.push(vec![
                s.into(),
                w.n1().into(),
                w.n2().into(),
                w.len().into(),
                norm_f.into(),
                norm.into(),
                ratio.into(),
            ]);
        }
    }
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let rho_s = spearman(&ratios, &lengths);
    rep.note("max_ratio", max);
    rep.note("spearman_ratio_length", rho_s);
    rep.contract("ratio finite", max.is_finite(), format!("max ratio {max:.6}"));
    // a constant ratio column carries no trend
    let trend_ok = rho_s.is_nan() || rho_s < 0.3;
    rep.contract("no growth in window length", trend_ok, format!("spearman {rho_s:.4}"));
    Ok(rep)
}

/// `‖T*_M f‖ / ‖f‖` in `L^p(x^δ dm)` over random bump mixtures, at `M` and `M/2`.
pub fn run_weighted_sweep(cfg: &ExperimentConfig) -> LabResult<Report> {
    let kernel = kernel_for(cfg)?;
    let space = *kernel.space();
    let weight = PowerWeight::new(cfg.delta)?;
    weight.check_ap(&space, cfg.p)?;
    let setup = build_setup(cfg)?;
    let cap = check_cap(&setup, cfg.m_cap)?;
    let grid = cfg.grid.build()?;
    let fam = random_family(cfg);
    let times = times_for(&setup, -cap.m_cap(), cap.m_cap() + 1);
    let mut rep = Report::new(Experiment::Weighted, cfg, &["sample", "norm_f", "ratio", "ratio_half_cap"]);
    let (mut max_full, mut max_half) = (0.0f64, 0.0f64);
    for (s, f) in fam.functions.iter().enumerate() {
        let norm_f = lp_norm(&space, f, cfg.p, Some(weight), &cfg.quad)?;
        let table = SemigroupTable::build(&kernel, f, &times, grid.points())?;
        let norm_of = |vals: Vec<f64>| -> LabResult<f64> {
            let g = SampledFunction::new(grid.clone(), vals, transform_tail(&space))?;
            Ok(lp_norm(&space, &g, cfg.p, Some(weight), &cfg.quad)?)
        };
        let full = norm_of(sup_rows(&table, &setup, cap.m_cap()))?;
        let half = norm_of(sup_rows(&table, &setup, half_cap(cap.m_cap())))?;
        let (r_full, r_half) = if norm_f > 0.0 { (full / norm_f, half / norm_f) } else { (0.0, 0.0) };
        max_full = max_full.max(r_full);
        max_half = max_half.max(r_half);
        rep.push(vec![s.into(), norm_f.into(), r_full.into(), r_half.into()]);
    }
    let change = if max_full > 0.0 { (max_full - max_half).abs() / max_full } else { 0.0 };
    rep.note("max_ratio", max_full);
    rep.note("max_ratio_half_cap", max_half);
    rep.note("relative_change", change);
    rep.contract("ratio finite", max_full.is_finite(), format!("max ratio {max_full:.6}"));
    rep.contract("stable in truncation level", change <= 0.25, format!("relative change {change:.4}"));
    Ok(rep)
}

/// BMO of `T_N f` against `‖f‖∞` and the BMO of `f`, over random windows.
pub fn run_bmo_experiment(cfg: &ExperimentConfig) -> LabResult<Report> {
    let kernel = kernel_for(cfg)?;
    let space = *kernel.space();
    let setup = build_setup(cfg)?;
    let cap = check_cap(&setup, cfg.m_cap)?;
    let grid = cfg.grid.build()?;
    let f = &cfg.profile(Experiment::Bmo)?;
    let (c0, c1, r0, r1) = cfg.family;
    let family = dyadic_family(c0..=c1, r0..=r1)?;
    let sup_f = lp_norm(&space, f, f64::INFINITY, None, &cfg.quad)?;
    let bmo_f = bmo_norm(&space, f, &family, &cfg.quad)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let windows = random_windows(&mut rng, cfg.windows.max(1), cfg.m_cap);
    let table = SemigroupTable::build(&kernel, f, &times_for(&setup, -cap.m_cap(), cap.m_cap() + 1), grid.points())?;
    let mut rep = Report::new(
        Experiment::Bmo,
        cfg,
        &["n1", "n2", "length", "bmo_t_n_f", "sup_f", "bmo_f", "ratio_sup", "ratio_bmo", "flag"],
    );
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else if a == 0.0 { 0.0 } else { f64::INFINITY };
    let mut by_len = Vec::new();
    for w in &windows {
        let vals = table.terms(&setup, w).iter().map(|r| r.iter().sum()).collect();
        let tnf = SampledFunction::new(grid.clone(), vals, transform_tail(&space))?;
        let b = bmo_norm(&space, &tnf, &family, &cfg.quad)?;
        let flag = match (sup_f == 0.0, bmo_f == 0.0) {
            (true, _) => "zero_sup",
            (false, true) => "zero_bmo",
            _ => "",
        };
        let rs = ratio(b, sup_f);
        by_len.push((w.len(), rs));
        rep.push(vec![
            w.n1().into(),
            w.n2().into(),
            w.len().into(),
            b.into(),
            sup_f.into(),
            bmo_f.into(),
            rs.into(),
            ratio(b, bmo_f).into(),
            flag.into(),
        ]);
    }
    by_len.sort_by_key(|p| p.0);
    let overall = by_len.iter().map(|p| p.1).fold(0.0, f64::max);
    let short = by_len[..by_len.len().div_ceil(2)].iter().map(|p| p.1).fold(0.0, f64::max);
    let growth = if short > 0.0 { overall / short } else if overall == 0.0 { 1.0 } else { f64::INFINITY };
    rep.note("max_ratio_sup", overall);
    rep.note("growth_over_short_windows", growth);
    rep.contract(
        "stable across windows",
        growth <= 1.25,
        format!("max over all windows / max over the shorter half = {growth:.4}"),
    );
    Ok(rep)
}

/// `∫ |P_{a_{j+1}}(x,·) - P_{a_j}(x,·)| dm` for every `j` in the window and `x` on the grid.
pub fn run_l1_difference_norm(cfg: &ExperimentConfig) -> LabResult<Report> {
    let kernel = kernel_for(cfg)?;
    let setup = build_setup(cfg)?;
    setup.require_regular()?;
    let window = window_or_full(cfg)?;
    setup.check_window(&window)?;
    let grid = cfg.grid.build()?;
    let mut rep = Report::new(Experiment::L1Diff, cfg, &["j", "a_j", "a_j_next", "x", "value"]);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for j in window.indices() {
        let (a0, a1) = (setup.a(j).expect("checked"), setup.a(j + 1).expect("checked"));
        for &x in grid.points() {
            let v = kernel_difference_l1(&kernel, a0, a1, x)?;
            lo = lo.min(v);
            hi = hi.max(v);
            rep.push(vec![j.into(), a0.into(), a1.into(), x.into(), v.into()]);
        }
    }
    let spread = hi / lo;
    rep.note("max", hi);
    rep.note("min", lo);
    rep.note("max_over_min", spread);
    rep.contract("uniformly bounded", spread <= 10.0, format!("max/min = {spread:.4}"));
    Ok(rep)
}

/// Gaussian fixed point, double-transform involution, and Plancherel ratio.
pub fn run_hankel_check(cfg: &ExperimentConfig) -> LabResult<Report> {
    let space = LambdaSpace::new(cfg.lambda)?;
    let quad = cfg.quad;
    let mut rep = Report::new(Experiment::HankelCheck, cfg, &["check", "error", "tolerance", "passed"]);
    let ys = Grid::new(cfg.y_list.clone().unwrap_or_else(|| log_points(0.05, 8.0, 40)))?;
    let gauss = Profile::gaussian(0.0, 1.0);
    let hg = hankel_transform(&space, &gauss, &ys, &quad)?;
    let fixed = ys
        .points()
        .iter()
        .zip(hg.values())
        .map(|(&y, &v)| (v - (-0.5 * y * y).exp()).abs())
        .fold(0.0, f64::max);
    let f = &cfg.profile(Experiment::HankelCheck)?;
    let (_, hi) = f.support();
    let spectral = spectral_grid(hi.min(1e6), cfg.y_max)?;
    let hf = hankel_transform(&space, f, &spectral, &quad)?;
    let back = hankel_transform(&space, &hf, &ys, &quad)?;
    let involution = ys
        .points()
        .iter()
        .zip(back.values())
        .map(|(&x, &v)| (v - f.value(x)).abs())
        .fold(0.0, f64::max);
    let pl = plancherel_check(&space, f, &quad)?;
    let pl_err = pl.ratio.map_or(0.0, |r| (r - 1.0).abs());
    for (name, err, tol) in [
        ("gaussian_fixed_point", fixed, 1e-8),
        ("involution", involution, 1e-6),
        ("plancherel", pl_err, 1e-4),
    ] {
        let ok = err <= tol;
        rep.push(vec![name.into(), err.into(), tol.into(), (ok as i64).into()]);
        rep.note(name, err);
        rep.contract(name, ok, format!("error {err:.3e} against {tol:.0e}"));
    }
    Ok(rep)
}
