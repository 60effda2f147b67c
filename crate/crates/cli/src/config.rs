//! Plain-text `key=value` run configuration.
//!
//! One pair per line; `#` starts a comment; unknown and duplicate keys are
//! errors. Every key can be overridden from the environment with the prefix
//! `BSQ_` and `__` standing in for the dots, e.g. `BSQ_DT`, `BSQ_LYAP__M`,
//! `BSQ_FORCING__K__0`.

use bsq_core::ForcingMode;
use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use thiserror::Error;

pub const ENV_PREFIX: &str = "BSQ_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("unknown key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("missing required key `{0}`")]
    MissingRequired(String),
    #[error("{0}")]
    Constraint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Decay,
    Forced,
    Smoothing,
    Inequalities,
    Taylor,
    Lyapunov,
    Sweep,
}

impl Scenario {
    pub fn parse(name: &str) -> Option<Scenario> {
        match name {
            "decay" => Some(Scenario::Decay),
            "forced" => Some(Scenario::Forced),
            "smoothing" => Some(Scenario::Smoothing),
            "inequalities" => Some(Scenario::Inequalities),
            "taylor" => Some(Scenario::Taylor),
            "lyapunov" => Some(Scenario::Lyapunov),
            "sweep" => Some(Scenario::Sweep),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Decay => "decay",
            Scenario::Forced => "forced",
            Scenario::Smoothing => "smoothing",
            Scenario::Inequalities => "inequalities",
            Scenario::Taylor => "taylor",
            Scenario::Lyapunov => "lyapunov",
            Scenario::Sweep => "sweep",
        }
    }
}

/// Initial-condition family: equilibrium plus Fourier modes, or a smoothed
/// step profile with prescribed entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcKind {
    Perturb,
    Rough,
}

#[derive(Debug, Clone)]
pub struct InitialCondition {
    pub kind: IcKind,
    pub u_modes: Vec<ForcingMode>,
    pub w_modes: Vec<ForcingMode>,
    pub rough_delta: f64,
    pub rough_entropy: f64,
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition {
            kind: IcKind::Perturb,
            u_modes: vec![ForcingMode { k: 1, cos_amp: 0.3, sin_amp: 0.0 }],
            w_modes: vec![ForcingMode { k: 2, cos_amp: 0.2, sin_amp: 0.1 }],
            rough_delta: 0.08,
            rough_entropy: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LyapunovParams {
    pub m: usize,
    pub renorm_every: usize,
    pub t_spin: f64,
}

impl Default for LyapunovParams {
    fn default() -> Self {
        LyapunovParams { m: 8, renorm_every: 10, t_spin: 50.0 }
    }
}

/// Fully resolved run configuration. `was_set` remembers which keys the file
/// or environment supplied, so scenarios can apply their own defaults to the
/// rest.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub output_every: usize,
    pub scenario: Option<Scenario>,
    pub seed: u64,
    pub forcing: Vec<ForcingMode>,
    pub ic: InitialCondition,
    pub lyap: LyapunovParams,
    was_set: HashSet<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 128,
            dt: 1e-3,
            t_end: 10.0,
            output_every: 100,
            scenario: None,
            seed: 1,
            forcing: Vec::new(),
            ic: InitialCondition::default(),
            lyap: LyapunovParams::default(),
            was_set: HashSet::new(),
        }
    }
}

impl RunConfig {
    pub fn was_set(&self, key: &str) -> bool {
        self.was_set.contains(key)
    }

    /// The scenario, or a `MissingRequired` error when none was configured.
    pub fn required_scenario(&self) -> Result<Scenario, ConfigError> {
        self.scenario
            .ok_or_else(|| ConfigError::MissingRequired("scenario".into()))
    }
}

/// Parses a configuration file and applies environment overrides.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let mut pairs = parse_pairs(&text)?;
    apply_env_overrides(&mut pairs);
    build_config(pairs)
}

/// Parses configuration text without touching the environment.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    build_config(parse_pairs(text)?)
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, (String, usize)>, ConfigError> {
    let mut pairs = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::ParseError {
            line: line_no,
            message: format!("expected key=value, got `{line}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::ParseError { line: line_no, message: "empty key".into() });
        }
        if pairs.insert(key.clone(), (value, line_no)).is_some() {
            return Err(ConfigError::ParseError {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(pairs)
}

fn apply_env_overrides(pairs: &mut BTreeMap<String, (String, usize)>) {
    let mut overrides: Vec<(String, String)> = std::env::vars()
        .filter_map(|(name, value)| {
            let rest = name.strip_prefix(ENV_PREFIX)?;
            Some((rest.to_ascii_lowercase().replace("__", "."), value))
        })
        .collect();
    overrides.sort();
    for (key, value) in overrides {
        pairs.insert(key, (value, 0));
    }
}

fn build_config(pairs: BTreeMap<String, (String, usize)>) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    let mut forcing: BTreeMap<usize, ForcingMode> = BTreeMap::new();
    let mut u_modes: BTreeMap<usize, ForcingMode> = BTreeMap::new();
    let mut w_modes: BTreeMap<usize, ForcingMode> = BTreeMap::new();
    let mut ic_modes_set = false;

    for (key, (value, line)) in &pairs {
        let parse_err = |message: String| ConfigError::ParseError { line: *line, message };
        let num = |value: &str| -> Result<f64, ConfigError> {
            value
                .parse::<f64>()
                .map_err(|_| parse_err(format!("`{value}` is not a number")))
        };
        let int = |value: &str| -> Result<u64, ConfigError> {
            value
                .parse::<u64>()
                .map_err(|_| parse_err(format!("`{value}` is not a nonnegative integer")))
        };
        match key.as_str() {
            "n" => config.n = int(value)? as usize,
            "dt" => config.dt = num(value)?,
            "t_end" => config.t_end = num(value)?,
            "output_every" => config.output_every = int(value)? as usize,
            "seed" => config.seed = int(value)?,
            "scenario" => {
                config.scenario = Some(
                    Scenario::parse(value)
                        .ok_or_else(|| parse_err(format!("unknown scenario `{value}`")))?,
                )
            }
            "ic.kind" => {
                config.ic.kind = match value.as_str() {
                    "perturb" => IcKind::Perturb,
                    "rough" => IcKind::Rough,
                    other => return Err(parse_err(format!("unknown ic.kind `{other}`"))),
                }
            }
            "ic.rough_delta" => config.ic.rough_delta = num(value)?,
            "ic.rough_entropy" => config.ic.rough_entropy = num(value)?,
            "lyap.m" => config.lyap.m = int(value)? as usize,
            "lyap.renorm_every" => config.lyap.renorm_every = int(value)? as usize,
            "lyap.t_spin" => config.lyap.t_spin = num(value)?,
            _ => {
                if let Some(rest) = key.strip_prefix("forcing.") {
                    parse_indexed_mode(rest, value, &mut forcing).map_err(parse_err)?;
                } else if let Some(rest) = key.strip_prefix("ic.u_") {
                    parse_indexed_mode(rest, value, &mut u_modes).map_err(parse_err)?;
                    ic_modes_set = true;
                } else if let Some(rest) = key.strip_prefix("ic.w_") {
                    parse_indexed_mode(rest, value, &mut w_modes).map_err(parse_err)?;
                    ic_modes_set = true;
                } else {
                    return Err(ConfigError::UnknownKey { key: key.clone(), line: *line });
                }
            }
        }
        config.was_set.insert(key.clone());
    }

    if !forcing.is_empty() {
        let modes: Vec<ForcingMode> = forcing.into_values().collect();
        for mode in &modes {
            if mode.k == 0 {
                return Err(ConfigError::Constraint(
                    "forcing must be mean-free: a k = 0 entry is not allowed".into(),
                ));
            }
        }
        config.forcing = modes;
    }
    if ic_modes_set {
        config.ic.u_modes = u_modes.into_values().collect();
        config.ic.w_modes = w_modes.into_values().collect();
    }
    Ok(config)
}

/// Handles `k.<i>`, `cos.<i>`, `sin.<i>` fragments of mode lists.
fn parse_indexed_mode(
    rest: &str,
    value: &str,
    modes: &mut BTreeMap<usize, ForcingMode>,
) -> Result<(), String> {
    let (component, index) = rest
        .split_once('.')
        .ok_or_else(|| format!("expected `<field>.<index>`, got `{rest}`"))?;
    let index: usize = index
        .parse()
        .map_err(|_| format!("`{index}` is not a valid mode index"))?;
    let entry = modes
        .entry(index)
        .or_insert(ForcingMode { k: 0, cos_amp: 0.0, sin_amp: 0.0 });
    match component {
        "k" => {
            entry.k = value
                .parse()
                .map_err(|_| format!("`{value}` is not a valid wavenumber"))?
        }
        "cos" => entry.cos_amp = value.parse().map_err(|_| format!("`{value}` is not a number"))?,
        "sin" => entry.sin_amp = value.parse().map_err(|_| format!("`{value}` is not a number"))?,
        other => return Err(format!("unknown mode field `{other}`")),
    }
    Ok(())
}
