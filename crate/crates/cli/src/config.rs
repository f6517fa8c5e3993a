//! Run configuration: defaults, then a flat key-value file, then flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Verify,
    Einstein,
    Volume,
    AlphaScan,
    Divergence,
    Pullback,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Verify, Command::Einstein, Command::Volume, Command::AlphaScan, Command::Divergence, Command::Pullback];

    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Einstein => "einstein",
            Command::Volume => "volume",
            Command::AlphaScan => "alpha-scan",
            Command::Divergence => "divergence",
            Command::Pullback => "pullback",
        }
    }

    /// Monte-Carlo sample count when none is configured.
    pub fn default_samples(self) -> u64 {
        match self {
            Command::Volume => 1_000_000,
            Command::AlphaScan => 100_000,
            Command::Divergence => 8_000_000,
            Command::Pullback => 10_000,
            Command::Verify | Command::Einstein => 100,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Everything a command needs. Serialized into the report as the config echo;
/// output locations are not part of the echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub p: usize,
    pub q: usize,
    pub seed: u64,
    pub samples: u64,
    pub shards: u64,
    /// Number of random points for pointwise identity checks.
    pub points: usize,
    pub alphas: Vec<f64>,
    pub ns: Vec<u32>,
    pub ts: Vec<f64>,
    /// Matrix sizes for the singular-integral experiment.
    pub n_dims: Vec<usize>,
    pub radius: f64,
    /// Flips the sign of the metric used by the curvature checks.
    pub inject_fault: bool,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub compare: Option<PathBuf>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            p: 1,
            q: 1,
            seed: 20240601,
            samples: command.default_samples(),
            shards: 16,
            points: match command {
                Command::Einstein => 100,
                Command::Pullback => 50,
                _ => 50,
            },
            alphas: vec![0.8, 1.2],
            ns: vec![4, 8, 16, 32],
            ts: vec![1e2, 1e3, 1e4, 1e5],
            n_dims: vec![1, 2],
            radius: 1.0,
            inject_fault: false,
            tolerances: BTreeMap::new(),
            out: None,
            compare: None,
        }
    }

    /// Tolerance for check `name`, honouring `tol_<name>` overrides.
    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError(msg));
        if self.p == 0 || self.q == 0 {
            return bad(format!("p and q must be at least 1, got p={} q={}", self.p, self.q));
        }
        if self.p + self.q > 8 {
            return bad(format!("p+q={} is beyond the supported range (at most 8)", self.p + self.q));
        }
        if self.samples == 0 || self.shards == 0 || self.points == 0 {
            return bad("samples, shards and points must be at least 1".into());
        }
        if self.alphas.iter().any(|a| !(*a > 0.0 && *a < 2.0)) {
            return bad(format!("alphas must lie in (0, 2), got {:?}", self.alphas));
        }
        if self.ns.is_empty() || self.ns[0] < 2 || self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("ns must be strictly increasing and start at 2 or more, got {:?}", self.ns));
        }
        if self.ts.is_empty() || self.ts.iter().any(|t| !(*t >= 1.0)) {
            return bad(format!("ts must be at least 1, got {:?}", self.ts));
        }
        if self.n_dims.is_empty() || self.n_dims.iter().any(|n| *n == 0 || *n > 3) {
            return bad(format!("n_dims entries must lie in 1..=3, got {:?}", self.n_dims));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(**v >= 0.0)) {
            return bad(format!("tolerance tol_{k} must be nonnegative, got {v}"));
        }
        Ok(())
    }

    /// Applies a flat `key = value` file (TOML syntax, no tables).
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_str(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        let table: toml::Table = text.parse().map_err(|e| ConfigError(format!("invalid config: {e}")))?;
        for (key, value) in &table {
            self.apply_entry(key, value)?;
        }
        Ok(())
    }

    fn apply_entry(&mut self, key: &str, value: &toml::Value) -> Result<(), ConfigError> {
        let wrong = |what: &str| ConfigError(format!("config key `{key}` expects {what}, got {value}"));
        let uint = || value.as_integer().filter(|v| *v >= 0).map(|v| v as u64).ok_or_else(|| wrong("a nonnegative integer"));
        let float = || value.as_float().or_else(|| value.as_integer().map(|v| v as f64)).ok_or_else(|| wrong("a number"));
        let floats = || -> Result<Vec<f64>, ConfigError> {
            let arr = value.as_array().ok_or_else(|| wrong("an array of numbers"))?;
            arr.iter()
                .map(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).ok_or_else(|| wrong("an array of numbers")))
                .collect()
        };
        let uints = || -> Result<Vec<u64>, ConfigError> {
            let arr = value.as_array().ok_or_else(|| wrong("an array of integers"))?;
            arr.iter().map(|v| v.as_integer().filter(|i| *i >= 0).map(|i| i as u64).ok_or_else(|| wrong("an array of integers"))).collect()
        };
        match key {
            "p" => self.p = uint()? as usize,
            "q" => self.q = uint()? as usize,
            "seed" => self.seed = uint()?,
            "samples" => self.samples = uint()?,
            "shards" => self.shards = uint()?,
            "points" => self.points = uint()? as usize,
            "alphas" => self.alphas = floats()?,
            "ns" => self.ns = uints()?.into_iter().map(|v| v as u32).collect(),
            "ts" => self.ts = floats()?,
            "n_dims" => self.n_dims = uints()?.into_iter().map(|v| v as usize).collect(),
            "radius" => self.radius = float()?,
            "inject_fault" => self.inject_fault = value.as_bool().ok_or_else(|| wrong("a boolean"))?,
            "out" => self.out = Some(PathBuf::from(value.as_str().ok_or_else(|| wrong("a string"))?)),
            _ => match key.strip_prefix("tol_") {
                Some(name) if !name.is_empty() => {
                    self.tolerances.insert(name.to_string(), float()?);
                }
                _ => return Err(ConfigError(format!("unknown config key `{key}`"))),
            },
        }
        Ok(())
    }
}

/// Worker-count override read from `GRASSMANN_ALPHA_THREADS`.
pub const THREADS_ENV: &str = "GRASSMANN_ALPHA_THREADS";

pub fn threads_from_env() -> Result<Option<usize>, ConfigError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}
