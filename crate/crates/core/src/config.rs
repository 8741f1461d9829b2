//! Declarative sweep configuration, read from TOML.
//!
//! ```toml
//! [physics]
//! sizes = [6, 9, 12]
//! ratio = "1/3"
//! environments = ["neel"]
//! disorder = [1.5, 2.0, 2.5]
//!
//! [sampling]
//! seed = 7
//! realizations = 100
//! ```
//!
//! Everything else has defaults: `T₁ = L²`, `T₀ = T₁/8`, `t_Néel = L`,
//! equiprobable messages, 16 transient and 64 steady-window grid points.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::environment::EnvironmentKind;
use crate::error::{Error, Result};

/// Fixed message-to-ring length ratio `l/L`, written `"p/q"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Ratio {
    numerator: usize,
    denominator: usize,
}

impl Ratio {
    pub fn new(numerator: usize, denominator: usize) -> Result<Self> {
        if numerator == 0 || denominator == 0 || numerator >= denominator {
            return Err(Error::Config(format!(
                "ratio {numerator}/{denominator} must satisfy 0 < l/L < 1"
            )));
        }
        let g = gcd(numerator, denominator);
        Ok(Self {
            numerator: numerator / g,
            denominator: denominator / g,
        })
    }

    /// Reduced ratio of a concrete `(l, L)` pair.
    pub fn of(message_sites: usize, size: usize) -> Result<Self> {
        Self::new(message_sites, size)
    }

    /// `l` for ring length `size`, if `size · ratio` is an integer.
    pub fn message_sites(&self, size: usize) -> Option<usize> {
        let scaled = size * self.numerator;
        scaled
            .is_multiple_of(self.denominator)
            .then(|| scaled / self.denominator)
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| Error::Config(format!("ratio `{s}` must be written as p/q")))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("ratio `{s}` must be written as p/q")))
        };
        Self::new(parse(p)?, parse(q)?)
    }
}

impl TryFrom<String> for Ratio {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Ratio> for String {
    fn from(r: Ratio) -> String {
        r.to_string()
    }
}

/// Which implementation runs the dynamics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Blocked,
    /// Dense `2^L` reference path; limited to small rings.
    FullSpace,
}

/// Whether the collapse fit varies β or holds it at zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaMode {
    #[default]
    Free,
    Pinned,
}

impl FromStr for BetaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(Self::Free),
            "pinned" => Ok(Self::Pinned),
            other => Err(Error::Config(format!(
                "unknown beta mode `{other}` (expected free or pinned)"
            ))),
        }
    }
}

impl fmt::Display for BetaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BetaMode::Free => "free",
            BetaMode::Pinned => "pinned",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    /// Ring lengths `L`.
    pub sizes: Vec<usize>,
    /// Message length ratio `l/L`, the same for every size.
    pub ratio: Ratio,
    #[serde(default = "default_environments")]
    pub environments: Vec<EnvironmentKind>,
    /// Disorder strengths `h`.
    pub disorder: Vec<f64>,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    /// Evolution time of the evolved-Néel environment; defaults to `L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_neel: Option<f64>,
    #[serde(default)]
    pub backend: Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Realizations per disorder strength; defaults depend on `L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    /// A sweep with a larger fraction of failed realizations is an error.
    #[serde(default = "default_failure_fraction")]
    pub max_failure_fraction: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            realizations: None,
            max_failure_fraction: default_failure_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Log-spaced points inside `(0, T₀)`.
    #[serde(default = "default_transient_points")]
    pub transient_points: usize,
    /// Decades spanned by the transient points below `T₀`.
    #[serde(default = "default_transient_decades")]
    pub transient_decades: f64,
    /// Uniform points on `[T₀, T₁]`, endpoints included.
    #[serde(default = "default_window_points")]
    pub window_points: usize,
    /// Final time; defaults to `L²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    /// `T₀ / T₁`.
    #[serde(default = "default_t0_fraction")]
    pub t0_fraction: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            transient_points: default_transient_points(),
            transient_decades: default_transient_decades(),
            window_points: default_window_points(),
            t1: None,
            t0_fraction: default_t0_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Collapse uses `|h − h_cross| ≤ window_half_width`.
    #[serde(default = "default_window_half_width")]
    pub window_half_width: f64,
    /// Cross-size neighbours in each local master-curve fit.
    #[serde(default = "default_neighbors")]
    pub neighbors: usize,
    #[serde(default)]
    pub beta_mode: BetaMode,
    /// Parametric bootstrap resamples for the error bars.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default = "default_multistarts")]
    pub multistarts: usize,
    #[serde(default = "default_hc_bounds")]
    pub hc_bounds: [f64; 2],
    #[serde(default = "default_nu_bounds")]
    pub nu_bounds: [f64; 2],
    #[serde(default = "default_beta_bounds")]
    pub beta_bounds: [f64; 2],
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window_half_width: default_window_half_width(),
            neighbors: default_neighbors(),
            beta_mode: BetaMode::default(),
            bootstrap: default_bootstrap(),
            multistarts: default_multistarts(),
            hc_bounds: default_hc_bounds(),
            nu_bounds: default_nu_bounds(),
            beta_bounds: default_beta_bounds(),
            seed: default_seed(),
        }
    }
}

fn default_environments() -> Vec<EnvironmentKind> {
    vec![EnvironmentKind::Neel]
}
fn default_coupling() -> f64 {
    1.0
}
fn default_seed() -> u64 {
    2021
}
fn default_failure_fraction() -> f64 {
    0.1
}
fn default_transient_points() -> usize {
    16
}
fn default_transient_decades() -> f64 {
    2.0
}
fn default_window_points() -> usize {
    64
}
fn default_t0_fraction() -> f64 {
    0.125
}
fn default_window_half_width() -> f64 {
    1.5
}
fn default_neighbors() -> usize {
    4
}
fn default_bootstrap() -> usize {
    100
}
fn default_multistarts() -> usize {
    5
}
fn default_hc_bounds() -> [f64; 2] {
    [1.0, 6.0]
}
fn default_nu_bounds() -> [f64; 2] {
    [0.3, 4.0]
}
fn default_beta_bounds() -> [f64; 2] {
    [-0.5, 0.5]
}

/// Desk-scale realization counts: 200 up to `L = 9`, 100 up to `L = 12`,
/// 50 beyond.
pub fn default_realizations(size: usize) -> usize {
    match size {
        0..=9 => 200,
        10..=12 => 100,
        _ => 50,
    }
}

fn invalid(field: &str, msg: impl fmt::Display) -> Error {
    Error::Config(format!("`{field}`: {msg}"))
}

impl SweepConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("cannot read config `{}`: {e}", path.display()),
            ))
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.physics;
        if p.sizes.is_empty() {
            return Err(invalid("physics.sizes", "at least one ring length is required"));
        }
        for &size in &p.sizes {
            if size < 3 {
                return Err(invalid("physics.sizes", format!("ring length {size} is below 3")));
            }
            if size > crate::basis::MAX_SITES {
                return Err(invalid("physics.sizes", format!("ring length {size} is too large")));
            }
            match p.ratio.message_sites(size) {
                Some(l) if l >= 1 && l < size => {}
                _ => {
                    return Err(invalid(
                        "physics.ratio",
                        format!("{} does not give an integer message length for L = {size}", p.ratio),
                    ))
                }
            }
            if p.backend == Backend::FullSpace && size > crate::full_space::MAX_FULL_SPACE_SITES {
                return Err(invalid(
                    "physics.backend",
                    format!("full-space backend cannot run L = {size}"),
                ));
            }
        }
        let mut sorted = p.sizes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != p.sizes.len() {
            return Err(invalid("physics.sizes", "ring lengths must be distinct"));
        }
        if p.disorder.is_empty() {
            return Err(invalid(
                "physics.disorder",
                "at least one disorder strength is required",
            ));
        }
        if p.disorder.iter().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(invalid(
                "physics.disorder",
                "disorder strengths must be finite and >= 0",
            ));
        }
        if p.environments.is_empty() {
            return Err(invalid("physics.environments", "at least one environment is required"));
        }
        if !p.coupling.is_finite() || p.coupling == 0.0 {
            return Err(invalid("physics.coupling", "must be finite and non-zero"));
        }
        if let Some(t) = p.t_neel {
            if !t.is_finite() || t < 0.0 {
                return Err(invalid("physics.t_neel", "must be finite and >= 0"));
            }
        }
        let s = &self.sampling;
        if s.realizations == Some(0) {
            return Err(invalid("sampling.realizations", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&s.max_failure_fraction) {
            return Err(invalid("sampling.max_failure_fraction", "must lie in [0, 1]"));
        }
        let g = &self.grid;
        if g.window_points < 8 {
            return Err(invalid(
                "grid.window_points",
                "the steady-state window needs >= 8 points",
            ));
        }
        if !(g.t0_fraction > 0.0 && g.t0_fraction < 1.0) {
            return Err(invalid("grid.t0_fraction", "must lie strictly between 0 and 1"));
        }
        if !(g.transient_decades > 0.0) {
            return Err(invalid("grid.transient_decades", "must be positive"));
        }
        if let Some(t1) = g.t1 {
            if !(t1.is_finite() && t1 > 0.0) {
                return Err(invalid("grid.t1", "must be positive"));
            }
        }
        let a = &self.analysis;
        if !(a.window_half_width > 0.0) {
            return Err(invalid("analysis.window_half_width", "must be positive"));
        }
        if a.neighbors < 2 {
            return Err(invalid(
                "analysis.neighbors",
                "a local linear fit needs >= 2 neighbours",
            ));
        }
        if a.multistarts == 0 {
            return Err(invalid("analysis.multistarts", "must be at least 1"));
        }
        for (name, b) in [
            ("analysis.hc_bounds", a.hc_bounds),
            ("analysis.nu_bounds", a.nu_bounds),
            ("analysis.beta_bounds", a.beta_bounds),
        ] {
            if !(b[0] < b[1]) {
                return Err(invalid(name, "lower bound must be below upper bound"));
            }
        }
        if !(a.nu_bounds[0] > 0.0) {
            return Err(invalid("analysis.nu_bounds", "ν must stay positive"));
        }
        Ok(())
    }

    /// Hex SHA-256 prefix of the canonical JSON form. Independent of key
    /// order and formatting in the source file.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes to JSON");
        let digest = Sha256::digest(&canonical);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn message_sites(&self, size: usize) -> usize {
        self.physics
            .ratio
            .message_sites(size)
            .expect("validated config gives integer message lengths")
    }

    pub fn realizations(&self, size: usize) -> usize {
        self.sampling.realizations.unwrap_or_else(|| default_realizations(size))
    }

    pub fn t_neel(&self, size: usize) -> f64 {
        self.physics.t_neel.unwrap_or(size as f64)
    }

    /// `(T₀, T₁)` for ring length `size`.
    pub fn window(&self, size: usize) -> (f64, f64) {
        let t1 = self.grid.t1.unwrap_or((size * size) as f64);
        (t1 * self.grid.t0_fraction, t1)
    }
}
