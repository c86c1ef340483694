//! Configuration file loading: JSON file, then `--override KEY=VALUE` edits
//! applied to the raw tree before deserialization, so flags can touch any
//! field by dotted path (`model.m1=1.5`, `solver.t_end=0.1`).

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use critmass_core::initdata::DataSpec;
use critmass_core::model::Parameters;
use critmass_core::solver::SolverConfig;
use critmass_core::RadialGrid;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

pub type Result<T> = std::result::Result<T, ConfigError>;

fn cfg_err<E: std::fmt::Display>(e: E) -> ConfigError {
    ConfigError(e.to_string())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Config schema version; only 1 is known.
    #[serde(default = "default_schema")]
    pub schema: u32,
    #[serde(default)]
    pub model: ModelCfg,
    #[serde(default)]
    pub grid: GridCfg,
    #[serde(default)]
    pub solver: SolverTuning,
    pub data1: Option<DataSpec>,
    pub data2: Option<DataSpec>,
    pub constant: Option<ConstantCfg>,
    pub classify: Option<ClassifyCfg>,
    pub sweep: Option<SweepCfg>,
}

fn default_schema() -> u32 {
    1
}

/// Exponent pair and dimension; the balanced pair in d = 3 by default.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCfg {
    #[serde(default = "default_d")]
    pub d: u32,
    #[serde(default = "default_m")]
    pub m1: f64,
    #[serde(default = "default_m")]
    pub m2: f64,
    /// Override of the Newtonian coupling constant; testing hook only.
    pub c_d: Option<f64>,
}

fn default_d() -> u32 {
    3
}

fn default_m() -> f64 {
    4.0 / 3.0
}

impl Default for ModelCfg {
    fn default() -> Self {
        ModelCfg { d: 3, m1: default_m(), m2: default_m(), c_d: None }
    }
}

impl ModelCfg {
    pub fn params(&self) -> Result<Parameters> {
        let p = Parameters::new(self.d, self.m1, self.m2).map_err(cfg_err)?;
        match self.c_d {
            Some(c) if c > 0.0 => Ok(p.with_c_d(c)),
            Some(c) => Err(ConfigError(format!("model.c_d = {c} must be positive"))),
            None => Ok(p),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
}

fn default_n() -> usize {
    256
}

fn default_r_max() -> f64 {
    4.0
}

impl Default for GridCfg {
    fn default() -> Self {
        GridCfg { n: default_n(), r_max: default_r_max() }
    }
}

impl GridCfg {
    pub fn build(&self, params: &Parameters) -> Result<Arc<RadialGrid>> {
        RadialGrid::new(params, self.n, self.r_max).map_err(cfg_err)
    }
}

/// Time-stepping knobs; defaults mirror `SolverConfig::new`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverTuning {
    pub epsilon: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub blowup_linf_factor: f64,
    pub diag_every: usize,
}

impl Default for SolverTuning {
    fn default() -> Self {
        SolverTuning {
            epsilon: 0.0,
            dt_init: 1e-3,
            dt_min: 1e-12,
            t_end: 1.0,
            cfl: 0.45,
            blowup_linf_factor: 1e4,
            diag_every: 100,
        }
    }
}

impl SolverTuning {
    pub fn build(&self, params: Parameters, grid: Arc<RadialGrid>) -> SolverConfig {
        let mut cfg = SolverConfig::new(params, grid);
        cfg.epsilon = self.epsilon;
        cfg.dt_init = self.dt_init;
        cfg.dt_min = self.dt_min;
        cfg.t_end = self.t_end;
        cfg.cfl = self.cfl;
        cfg.blowup_linf_factor = self.blowup_linf_factor;
        cfg.diag_every = self.diag_every;
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    CStar,
    Pi,
    Lambda,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantCfg {
    pub kind: ConstantKind,
    #[serde(default = "default_theta0")]
    pub theta0: f64,
    /// L^1 weight exponents for `lambda`; midpoints of the admissible
    /// intervals when absent.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Number of randomized Gaussian starts; the best objective wins.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Re-run at 2n cells and attach the difference as an error bar.
    #[serde(default = "default_true")]
    pub refine: bool,
}

fn default_theta0() -> f64 {
    0.5
}

fn default_seeds() -> usize {
    3
}

fn default_max_iter() -> usize {
    10_000
}

fn default_tol() -> f64 {
    1e-8
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyCfg {
    pub mass1: f64,
    pub mass2: f64,
    /// Constant for the balanced-pair dichotomy.
    pub pi_star: Option<f64>,
    /// Constant for the two-exponent criterion.
    pub lambda_star: Option<f64>,
    /// ||u_i^0||_{m_i}^{m_i}; computed from data1/data2 when absent.
    pub norm_m1: Option<f64>,
    pub norm_m2: Option<f64>,
    /// Initial free energy; computed from data1/data2 when absent.
    pub f0: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    #[serde(default = "default_theta_scan")]
    pub theta_scan: usize,
    #[serde(default = "default_classify_tol")]
    pub tol: f64,
    /// Estimate a missing constant by running the maximizer instead of
    /// exiting with the missing-constants code.
    #[serde(default)]
    pub estimate_constants: bool,
}

fn default_theta_scan() -> usize {
    101
}

fn default_classify_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    /// Mass axes; the sweep covers the cartesian product.
    pub masses1: Vec<f64>,
    pub masses2: Vec<f64>,
    pub pi_star: Option<f64>,
    #[serde(default)]
    pub estimate_constants: bool,
    /// Gaussian width for the observed runs, as a fraction of r_max.
    #[serde(default = "default_sweep_sigma")]
    pub sigma_frac: f64,
}

fn default_sweep_sigma() -> f64 {
    0.05
}

/// Parse `KEY=VALUE` into a dotted path and a JSON value; bare words that do
/// not parse as JSON become strings.
fn parse_override(raw: &str) -> Result<(Vec<String>, Value)> {
    let (key, val) = raw
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override '{raw}' is not KEY=VALUE")))?;
    if key.is_empty() {
        return Err(ConfigError(format!("override '{raw}' has an empty key")));
    }
    let value = serde_json::from_str(val).unwrap_or_else(|_| Value::String(val.to_string()));
    Ok((key.split('.').map(str::to_string).collect(), value))
}

fn apply_override(tree: &mut Value, path: &[String], value: Value) -> Result<()> {
    let mut node = tree;
    for (i, part) in path.iter().enumerate() {
        let map = node
            .as_object_mut()
            .ok_or_else(|| ConfigError(format!("override path '{}' hits a non-object", part)))?;
        if i + 1 == path.len() {
            map.insert(part.clone(), value);
            return Ok(());
        }
        node = map.entry(part.clone()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("override paths are non-empty")
}

/// Load the configuration: file if given, empty tree otherwise, with
/// overrides applied before deserialization.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<FileConfig> {
    let mut tree: Value = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if !tree.is_object() {
        return Err(ConfigError("top level must be a JSON object".into()));
    }
    for raw in overrides {
        let (path, value) = parse_override(raw)?;
        apply_override(&mut tree, &path, value)?;
    }
    let cfg: FileConfig = serde_json::from_value(tree).map_err(cfg_err)?;
    if cfg.schema != 1 {
        return Err(ConfigError(format!("unknown schema version {}", cfg.schema)));
    }
    Ok(cfg)
}
