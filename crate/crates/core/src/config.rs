//! Flat `key=value` experiment configuration with dotted keys.
//!
//! ```text
//! # exp(1) state seen through a case (a) clock
//! hbar=1
//! energy.eps_max=40
//! energy.n=16384
//! time.tau_min=-80
//! time.tau_max=80
//! time.m=16384
//! state.kind=exp
//! state.beta=1
//! clock.kind=a
//! clock.lambda=1
//! seed=7
//! tolerance=default
//! ```
//!
//! Blank lines and `#` comments are ignored. Every key is optional and falls
//! back to [`ExperimentConfig::default`]; unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clock::ClockSpec;
use crate::error::{Error, Result};
use crate::grid::{EnergyGrid, PhysicsParams, TimeGrid};
use crate::representation::StateSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClockConfig {
    A { lambda: f64 },
    B { lambda: f64, e: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceProfile {
    Default,
    Strict,
}

impl ToleranceProfile {
    /// Multiplier applied to every scalable tolerance.
    pub fn factor(self) -> f64 {
        match self {
            Self::Default => 1.0,
            Self::Strict => 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: PhysicsParams,
    pub energy: EnergyGrid,
    pub time: TimeGrid,
    pub state: StateSpec,
    pub clock: ClockConfig,
    pub seed: u64,
    pub tolerance: ToleranceProfile,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: PhysicsParams::default(),
            energy: EnergyGrid { eps_max: 40.0, n: 1 << 14 },
            time: TimeGrid { tau_min: -80.0, tau_max: 80.0, m: 1 << 14 },
            state: StateSpec::Exp { beta: 1.0 },
            clock: ClockConfig::A { lambda: 1.0 },
            seed: 7,
            tolerance: ToleranceProfile::Default,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn take<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.0.remove(key) {
            Some(v) => parse_num(key, &v),
            None => Ok(default),
        }
    }

    fn take_f64(&mut self, key: &str, default: f64) -> Result<f64> {
        let v: f64 = self.take(key, default)?;
        if !v.is_finite() {
            return Err(Error::Config(format!("{key}: must be finite")));
        }
        Ok(v)
    }

    fn take_str(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn require_str(&mut self, key: &str) -> Result<String> {
        self.take_str(key).ok_or_else(|| Error::Config(format!("{key} is required")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", no + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if map.insert(k.clone(), v).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {k}", no + 1)));
            }
        }
        let mut e = Entries(map);
        let d = Self::default();

        let params = PhysicsParams::new(e.take_f64("hbar", d.params.hbar)?).map_err(cfg)?;
        let energy = EnergyGrid::new(e.take_f64("energy.eps_max", d.energy.eps_max)?, e.take("energy.n", d.energy.n)?)
            .map_err(cfg)?;
        let time = TimeGrid::new(
            e.take_f64("time.tau_min", d.time.tau_min)?,
            e.take_f64("time.tau_max", d.time.tau_max)?,
            e.take("time.m", d.time.m)?,
        )
        .map_err(cfg)?;

        let state = match e.take_str("state.kind").as_deref().unwrap_or("exp") {
            "exp" => StateSpec::Exp { beta: e.take_f64("state.beta", 1.0)? },
            "indicator" => StateSpec::Indicator { a: e.take_f64("state.a", 0.0)?, b: e.take_f64("state.b", 1.0)? },
            "gauss" => StateSpec::Gauss { mu: e.take_f64("state.mu", 5.0)?, sigma: e.take_f64("state.sigma", 1.0)? },
            "file" => StateSpec::File(PathBuf::from(e.require_str("state.path")?)),
            other => return Err(Error::Config(format!("state.kind: unknown kind {other:?}"))),
        };
        let clock = match e.take_str("clock.kind").as_deref().unwrap_or("a") {
            "a" => ClockConfig::A { lambda: e.take_f64("clock.lambda", 1.0)? },
            "b" => ClockConfig::B { lambda: e.take_f64("clock.lambda", 0.0)?, e: e.take_f64("clock.e", 1.0)? },
            "file" => ClockConfig::File(PathBuf::from(e.require_str("clock.path")?)),
            other => return Err(Error::Config(format!("clock.kind: unknown kind {other:?}"))),
        };
        let seed = e.take("seed", d.seed)?;
        let tolerance = match e.take_str("tolerance").as_deref().unwrap_or("default") {
            "default" => ToleranceProfile::Default,
            "strict" => ToleranceProfile::Strict,
            other => return Err(Error::Config(format!("tolerance: expected default|strict, got {other:?}"))),
        };
        if let Some(k) = e.0.keys().next() {
            return Err(Error::Config(format!("unknown key {k}")));
        }
        let out = Self { params, energy, time, state, clock, seed, tolerance };
        out.clock_spec().map_err(cfg)?;
        Ok(out)
    }

    /// Canonical text form; `parse(to_text())` reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k}={v}").unwrap();
        kv("hbar", self.params.hbar.to_string());
        kv("energy.eps_max", self.energy.eps_max.to_string());
        kv("energy.n", self.energy.n.to_string());
        kv("time.tau_min", self.time.tau_min.to_string());
        kv("time.tau_max", self.time.tau_max.to_string());
        kv("time.m", self.time.m.to_string());
        match &self.state {
            StateSpec::Exp { beta } => {
                kv("state.kind", "exp".into());
                kv("state.beta", beta.to_string());
            }
            StateSpec::Indicator { a, b } => {
                kv("state.kind", "indicator".into());
                kv("state.a", a.to_string());
                kv("state.b", b.to_string());
            }
            StateSpec::Gauss { mu, sigma } => {
                kv("state.kind", "gauss".into());
                kv("state.mu", mu.to_string());
                kv("state.sigma", sigma.to_string());
            }
            StateSpec::File(p) => {
                kv("state.kind", "file".into());
                kv("state.path", p.display().to_string());
            }
        }
        match &self.clock {
            ClockConfig::A { lambda } => {
                kv("clock.kind", "a".into());
                kv("clock.lambda", lambda.to_string());
            }
            ClockConfig::B { lambda, e } => {
                kv("clock.kind", "b".into());
                kv("clock.lambda", lambda.to_string());
                kv("clock.e", e.to_string());
            }
            ClockConfig::File(p) => {
                kv("clock.kind", "file".into());
                kv("clock.path", p.display().to_string());
            }
        }
        kv("seed", self.seed.to_string());
        kv(
            "tolerance",
            match self.tolerance {
                ToleranceProfile::Default => "default",
                ToleranceProfile::Strict => "strict",
            }
            .into(),
        );
        s
    }

    pub fn clock_spec(&self) -> Result<ClockSpec> {
        match &self.clock {
            ClockConfig::A { lambda } => ClockSpec::exponential(*lambda, self.params),
            ClockConfig::B { lambda, e } => ClockSpec::truncated(*lambda, *e, self.params),
            ClockConfig::File(p) => ClockSpec::from_file(p, self.params),
        }
    }
}

fn cfg(e: Error) -> Error {
    Error::Config(e.to_string())
}
