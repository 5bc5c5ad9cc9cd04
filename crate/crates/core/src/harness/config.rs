//! Flat experiment configuration: one TOML file per run plus `KEY=VALUE`
//! overrides, validated before any computation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::AnalyticNormConfig;
use crate::lattice::{KVec, MAX_DIM};
use crate::moments::MomentQuery;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    Trees,
    Pairings,
    Moments,
    Slope,
    EulerWp,
    Tails,
    TypicalSize,
    Theorem2,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::Trees,
        ExperimentId::Pairings,
        ExperimentId::Moments,
        ExperimentId::Slope,
        ExperimentId::EulerWp,
        ExperimentId::Tails,
        ExperimentId::TypicalSize,
        ExperimentId::Theorem2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::Trees => "trees",
            ExperimentId::Pairings => "pairings",
            ExperimentId::Moments => "moments",
            ExperimentId::Slope => "slope",
            ExperimentId::EulerWp => "euler-wp",
            ExperimentId::Tails => "tails",
            ExperimentId::TypicalSize => "typical-size",
            ExperimentId::Theorem2 => "theorem2",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Validation {
                key: "experiment".into(),
                message: format!("unknown experiment {s:?}"),
            })
    }
}

/// One moment query as written in a config file; components are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub orders: Vec<usize>,
    /// One lattice vector `L ξ_l` per factor.
    pub k: Vec<Vec<i64>>,
    #[serde(default)]
    pub components: Option<Vec<usize>>,
}

impl QuerySpec {
    pub fn to_query(&self, t: f64) -> MomentQuery {
        MomentQuery {
            orders: self.orders.clone(),
            components: self
                .components
                .clone()
                .unwrap_or_else(|| vec![0; self.orders.len()]),
            kvecs: self.k.iter().map(|v| KVec::new(v)).collect(),
            t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentId>,
    pub model: String,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,

    // trees
    #[serde(alias = "N")]
    pub arity: usize,
    #[serde(alias = "n")]
    pub order: usize,
    pub tree_cap: u64,

    // pairings
    pub block_sizes: Vec<usize>,
    pub orders: Vec<usize>,
    pub frequencies: Vec<Vec<i64>>,
    pub pairing_cap: usize,

    // ensembles
    pub scale: usize,
    pub scales: Vec<usize>,
    pub radius: f64,
    pub amplitude: f64,

    // moments and slope
    pub t: f64,
    pub queries: Vec<QuerySpec>,
    pub max_factors: usize,
    pub max_order: usize,
    pub frequency_range: i64,
    pub samples: usize,
    pub antithetic: bool,
    pub psi_probes: usize,
    pub c_psi: Option<f64>,
    pub slope_window: [f64; 2],

    // euler
    pub dim: usize,
    pub eps: f64,
    pub eps0: Option<f64>,
    pub rho0: f64,
    pub beta: f64,
    pub theta: f64,
    pub oversample: usize,
    pub rho_points: usize,
    pub t_points: usize,
    pub picard_order: usize,
    pub picard_probes: usize,
    pub c_picard: Option<f64>,
    pub inequality_probes: usize,
    pub inequality_band: i64,
    pub rho_prime: f64,
    pub ratio_cap: f64,
    pub r_values: Vec<f64>,
    pub delta: f64,
    pub xi: Vec<i64>,
    pub eta: Vec<i64>,
    pub moment_components: [usize; 2],
    pub tune_probes: usize,
    pub tune_quantile: f64,
    pub tune_margin: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let norm = AnalyticNormConfig::default();
        ExperimentConfig {
            experiment: None,
            model: "toy-1d".into(),
            seed: 0,
            out: PathBuf::from("out"),
            workers: 1,
            arity: 2,
            order: 6,
            tree_cap: 1_000_000,
            block_sizes: Vec::new(),
            orders: Vec::new(),
            frequencies: Vec::new(),
            pairing_cap: 14,
            scale: 4,
            scales: vec![4, 8, 16, 32],
            radius: 0.5,
            amplitude: 1.0,
            t: 0.5,
            queries: Vec::new(),
            max_factors: 4,
            max_order: 1,
            frequency_range: 3,
            samples: 100_000,
            antithetic: false,
            psi_probes: 2000,
            c_psi: None,
            slope_window: [-0.65, -0.35],
            dim: 2,
            eps: 0.3,
            eps0: None,
            rho0: norm.rho0,
            beta: norm.beta,
            theta: norm.theta,
            oversample: norm.oversample,
            rho_points: norm.rho_points,
            t_points: norm.t_points,
            picard_order: 6,
            picard_probes: 50,
            c_picard: None,
            inequality_probes: 200,
            inequality_band: 6,
            rho_prime: 0.25,
            ratio_cap: 0.5,
            r_values: (0..15).map(|i| 0.30 + 0.02 * i as f64).collect(),
            delta: 0.3,
            xi: vec![1, 0],
            eta: vec![0, 1],
            moment_components: [1, 0],
            tune_probes: 200,
            tune_quantile: 0.99,
            tune_margin: 0.5,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> Error {
    Error::Validation {
        key: key.into(),
        message: message.into(),
    }
}

/// Pulls the offending key out of a serde message such as
/// "unknown field `foo`, expected ...".
fn key_of(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "config".into())
}

/// Parses an override value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl ExperimentConfig {
    /// Builds a config from TOML text and `KEY=VALUE` overrides.
    pub fn from_sources(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut table = match text {
            Some(t) => t
                .parse::<toml::Table>()
                .map_err(|e| invalid("config", e.to_string()))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| invalid(o, "override must have the form KEY=VALUE"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(invalid(o, "empty key"));
            }
            table.insert(k.to_string(), parse_value(v.trim()));
        }
        toml::Value::Table(table)
            .try_into::<ExperimentConfig>()
            .map_err(|e| {
                let msg = e.message().to_string();
                invalid(&key_of(&msg), msg)
            })
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_sources(Some(&text), overrides)
    }

    pub fn experiment(&self) -> Result<ExperimentId> {
        self.experiment
            .ok_or_else(|| invalid("experiment", "no experiment selected"))
    }

    pub fn norm_config(&self) -> AnalyticNormConfig {
        AnalyticNormConfig {
            rho0: self.rho0,
            beta: self.beta,
            theta: self.theta,
            oversample: self.oversample,
            rho_points: self.rho_points,
            t_points: self.t_points,
        }
    }

    pub fn queries(&self) -> Vec<MomentQuery> {
        self.queries.iter().map(|q| q.to_query(self.t)).collect()
    }

    /// Checks every field the selected experiment reads.
    pub fn validate(&self) -> Result<()> {
        let exp = self.experiment()?;
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, format!("must be positive, got {v}")))
            }
        };
        let lattice = |key: &str, v: &[i64]| {
            if v.is_empty() || v.len() > MAX_DIM {
                Err(invalid(key, "lattice vectors need 1 to 3 coordinates"))
            } else {
                Ok(())
            }
        };
        match exp {
            ExperimentId::Trees => {
                if self.arity < 2 {
                    return Err(invalid("arity", "arity N must be at least 2"));
                }
            }
            ExperimentId::Pairings => {
                if self.block_sizes.is_empty() && self.orders.is_empty() {
                    return Err(invalid("block_sizes", "give block_sizes or orders"));
                }
                if self.arity < 2 {
                    return Err(invalid("arity", "arity N must be at least 2"));
                }
                let blocks = if self.block_sizes.is_empty() {
                    self.orders.len()
                } else {
                    self.block_sizes.len()
                };
                if !self.frequencies.is_empty() && self.frequencies.len() != blocks {
                    return Err(invalid(
                        "frequencies",
                        format!("need one frequency per block ({blocks})"),
                    ));
                }
                for f in &self.frequencies {
                    lattice("frequencies", f)?;
                }
            }
            ExperimentId::Moments | ExperimentId::Slope => {
                crate::model::catalog(&self.model)
                    .map_err(|_| invalid("model", format!("unknown model {:?}", self.model)))?;
                positive("radius", self.radius)?;
                positive("amplitude", self.amplitude)?;
                if !self.t.is_finite() {
                    return Err(invalid("t", "must be finite"));
                }
                for (i, q) in self.queries.iter().enumerate() {
                    if q.orders.len() != q.k.len()
                        || q.components
                            .as_ref()
                            .is_some_and(|c| c.len() != q.orders.len())
                    {
                        return Err(invalid(
                            &format!("queries[{i}]"),
                            "orders, k and components must have equal lengths",
                        ));
                    }
                    for v in &q.k {
                        lattice(&format!("queries[{i}].k"), v)?;
                    }
                }
                if exp == ExperimentId::Moments {
                    if self.scale == 0 {
                        return Err(invalid("scale", "must be positive"));
                    }
                    if self.samples != 0 && self.samples < 100 {
                        return Err(invalid(
                            "samples",
                            "use 0 to skip Monte Carlo or at least 100",
                        ));
                    }
                } else {
                    if self.scales.len() < 2
                        || self
                            .scales
                            .iter()
                            .any(|&l| l == 0 || l % self.scales[0] != 0)
                    {
                        return Err(invalid(
                            "scales",
                            "need at least two scales, each a multiple of the first",
                        ));
                    }
                    if self.slope_window[0] >= self.slope_window[1] {
                        return Err(invalid("slope_window", "lower end must be below upper end"));
                    }
                }
            }
            ExperimentId::EulerWp
            | ExperimentId::Tails
            | ExperimentId::TypicalSize
            | ExperimentId::Theorem2 => {
                self.norm_config()
                    .validate()
                    .map_err(|e| invalid("rho0", e.to_string()))?;
                positive("radius", self.radius)?;
                if !(1..=2).contains(&self.dim) {
                    return Err(invalid("dim", "Euler experiments run in d = 1 or 2"));
                }
                match exp {
                    ExperimentId::EulerWp => {
                        positive("eps", self.eps)?;
                        if self.dim != 2 {
                            return Err(invalid("dim", "the Picard experiment runs in d = 2"));
                        }
                        if !(0.0..self.rho0).contains(&self.rho_prime) {
                            return Err(invalid("rho_prime", "need 0 ≤ rho_prime < rho0"));
                        }
                    }
                    ExperimentId::Tails => {
                        positive("eps", self.eps)?;
                        if self.samples < 1000 {
                            return Err(invalid("samples", "tails need at least 1000 samples"));
                        }
                        if self.r_values.len() < 4 || self.r_values.windows(2).any(|w| w[1] <= w[0])
                        {
                            return Err(invalid(
                                "r_values",
                                "need at least four strictly increasing values",
                            ));
                        }
                    }
                    ExperimentId::TypicalSize => {
                        positive("delta", self.delta)?;
                        if self.scales.iter().any(|&l| l < 2) || self.scales.is_empty() {
                            return Err(invalid("scales", "need scales L ≥ 2"));
                        }
                    }
                    _ => {
                        if self.scales.is_empty()
                            || self.scales.iter().any(|&l| l % 4 != 0 || l == 0)
                        {
                            return Err(invalid(
                                "scales",
                                "theorem2 scales must be positive multiples of 4",
                            ));
                        }
                        if self.xi.len() != 2 || self.eta.len() != 2 {
                            return Err(invalid(
                                "xi",
                                "xi and eta are 2-D lattice vectors at L = 4",
                            ));
                        }
                        if self.moment_components.iter().any(|&c| c >= 2) {
                            return Err(invalid(
                                "moment_components",
                                "components are 0 or 1 in d = 2",
                            ));
                        }
                        if !(0.0..1.0).contains(&self.tune_quantile) {
                            return Err(invalid("tune_quantile", "must lie in [0, 1)"));
                        }
                        if self.samples < 100 {
                            return Err(invalid("samples", "need at least 100 samples"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
