//! Experiment configuration: a flat TOML file of `key = value` lines,
//! overridable from the command line.
//!
//! ```toml
//! sigma2 = 1.0
//! power = 1.0
//! noise = 1.0
//! rho = [0.1, 0.25]
//! n = [16, 32, 48]
//! trials = 10000
//! mode = "genie"
//! seed = 7
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quantizer::default_epsilon;
use crate::simulator::{CodebookPolicy, Mode};
use crate::theory::SystemParams;

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_UNCODED_TRIALS: usize = 100_000;
pub const DEFAULT_N: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::Usage(format!("unknown format {s:?} (expected json or csv)"))),
        }
    }
}

/// Everything an experiment needs. Absent fields take defaults at use
/// time, except `sigma2`, `power` and `noise`, which are required.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "ser_seed",
        deserialize_with = "de_seed"
    )]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codebook_policy: Option<CodebookPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<bool>,
}

// TOML integers are signed 64-bit; larger seeds travel as strings.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SeedRepr {
    Int(i64),
    Text(String),
}

fn ser_seed<S: Serializer>(seed: &Option<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match seed {
        Some(v) => match i64::try_from(*v) {
            Ok(i) => SeedRepr::Int(i).serialize(s),
            Err(_) => SeedRepr::Text(v.to_string()).serialize(s),
        },
        None => s.serialize_none(),
    }
}

fn de_seed<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<u64>, D::Error> {
    use serde::de::Error as _;
    match SeedRepr::deserialize(d)? {
        SeedRepr::Int(i) => u64::try_from(i)
            .map(Some)
            .map_err(|_| D::Error::custom(format!("seed must be >= 0, got {i}"))),
        SeedRepr::Text(t) => t
            .parse()
            .map(Some)
            .map_err(|_| D::Error::custom(format!("seed {t:?} is not an unsigned 64-bit integer"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Usage(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn emit(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Usage(format!("config: {e}")))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: RunConfig) -> RunConfig {
        RunConfig {
            sigma2: other.sigma2.or(self.sigma2),
            power: other.power.or(self.power),
            noise: other.noise.or(self.noise),
            rho: other.rho.or(self.rho),
            n: other.n.or(self.n),
            trials: other.trials.or(self.trials),
            mode: other.mode.or(self.mode),
            epsilon: other.epsilon.or(self.epsilon),
            delta: other.delta.or(self.delta),
            seed: other.seed.or(self.seed),
            codebook_policy: other.codebook_policy.or(self.codebook_policy),
            out: other.out.or(self.out),
            format: other.format.or(self.format),
            deterministic: other.deterministic.or(self.deterministic),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or(Mode::Full)
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(match self.mode() {
            Mode::Uncoded => DEFAULT_UNCODED_TRIALS,
            _ => DEFAULT_TRIALS,
        })
    }

    pub fn rho_grid(&self) -> Vec<f64> {
        self.rho.clone().unwrap_or_else(|| vec![0.0])
    }

    pub fn n_grid(&self) -> Vec<usize> {
        self.n.clone().unwrap_or_else(|| vec![DEFAULT_N])
    }

    pub fn policy(&self) -> CodebookPolicy {
        self.codebook_policy.unwrap_or_default()
    }

    pub fn format(&self) -> OutputFormat {
        self.format.unwrap_or_default()
    }

    pub fn deterministic(&self) -> bool {
        self.deterministic.unwrap_or(false)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.0)
    }

    /// `(sigma2, power, noise)`, naming the first missing field.
    pub fn channel(&self) -> Result<(f64, f64, f64)> {
        let need = |v: Option<f64>, name: &'static str| {
            v.ok_or_else(|| Error::Parameter {
                name,
                reason: "missing required field".into(),
            })
        };
        Ok((
            need(self.sigma2, "sigma2")?,
            need(self.power, "power")?,
            need(self.noise, "noise")?,
        ))
    }

    /// Fully validated parameters for one grid point.
    pub fn params(&self, rho: f64, n: usize) -> Result<SystemParams> {
        let (sigma2, power, noise) = self.channel()?;
        let params = SystemParams {
            sigma2,
            power,
            noise,
            rho,
            n,
            epsilon: self.epsilon.unwrap_or_else(|| default_epsilon(n)),
            delta: self.delta(),
            seed: self.seed(),
        };
        let check = match self.mode() {
            Mode::Uncoded => SystemParams { rho: 0.0, ..params },
            _ => params,
        };
        check.validate()?;
        Ok(params)
    }

    /// The single `(rho, n)` pair of a `run`.
    pub fn single_point(&self) -> Result<(f64, usize)> {
        let rho = self.rho_grid();
        let n = self.n_grid();
        match (rho.as_slice(), n.as_slice()) {
            ([r], [k]) => Ok((*r, *k)),
            _ => Err(Error::Usage(format!(
                "run needs exactly one rho and one n (got {} and {}); use sweep for grids",
                rho.len(),
                n.len()
            ))),
        }
    }
}
