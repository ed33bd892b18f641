//! Run configuration.
//!
//! Config files are flat `key = value` text. Keys are exactly the field
//! names of [`SimConfig`]; `#` starts a comment. Lists (`snapshot_steps`)
//! are comma separated.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expectations::{ExpectationParams, TickGrid};
use crate::population::{Horizons, SwitchParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchingMode {
    /// Every agent attempts a switch every step.
    AllAgents,
    /// Only the agent chosen to trade attempts a switch.
    TraderOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_agents: usize,
    pub steps: u64,
    pub dt: f64,
    pub steps_per_period: u64,
    pub sigma_eps: f64,
    /// Mean of the exponential order margin.
    pub sigma: f64,
    pub tick: f64,
    pub p0: f64,
    pub pf0: f64,
    pub gamma_f: f64,
    pub gamma_c: f64,
    pub tau_f: usize,
    pub tau_c: usize,
    pub v1: f64,
    pub v2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub big_r: f64,
    pub s: f64,
    pub floor_fraction: f64,
    pub circuit_breaker_band: f64,
    pub frac_fundamentalist: f64,
    pub frac_optimist: f64,
    pub initial_cash: f64,
    pub initial_shares: i64,
    pub switching: bool,
    pub switching_mode: SwitchingMode,
    pub allow_self_trade: bool,
    pub aligned_sigma: bool,
    pub snapshot_steps: Vec<u64>,
    pub trace_fundamental: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let sw = SwitchParams::default();
        Self {
            n_agents: 500,
            steps: 1_000_000,
            dt: 0.01,
            steps_per_period: 100,
            sigma_eps: 0.005,
            sigma: 0.1,
            tick: 0.0005,
            p0: 300.0,
            pf0: 300.0,
            gamma_f: 1.0,
            gamma_c: 0.1,
            tau_f: 300,
            tau_c: 100,
            v1: sw.v1,
            v2: sw.v2,
            alpha1: sw.alpha1,
            alpha2: sw.alpha2,
            alpha3: sw.alpha3,
            big_r: sw.big_r,
            s: sw.s,
            floor_fraction: sw.floor_fraction,
            circuit_breaker_band: 0.15,
            frac_fundamentalist: 0.5,
            frac_optimist: 0.25,
            initial_cash: 10_000.0,
            initial_shares: 10,
            switching: true,
            switching_mode: SwitchingMode::AllAgents,
            allow_self_trade: false,
            aligned_sigma: false,
            snapshot_steps: Vec::new(),
            trace_fundamental: false,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Population of fundamentalists only, with switching disabled.
    pub fn homogeneous() -> Self {
        Self {
            switching: false,
            frac_fundamentalist: 1.0,
            frac_optimist: 0.0,
            ..Self::default()
        }
    }

    pub fn switch_params(&self) -> SwitchParams {
        SwitchParams {
            v1: self.v1,
            v2: self.v2,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            alpha3: self.alpha3,
            big_r: self.big_r,
            s: self.s,
            floor_fraction: self.floor_fraction,
        }
    }

    pub fn expectation_params(&self) -> ExpectationParams {
        ExpectationParams {
            gamma_f: self.gamma_f,
            gamma_c: self.gamma_c,
            k_scale: self.sigma,
            sigma_eps: self.sigma_eps,
            grid: self.grid(),
            aligned_sigma: self.aligned_sigma,
        }
    }

    pub fn horizons(&self) -> Horizons {
        Horizons {
            fundamentalist: self.tau_f,
            chartist: self.tau_c,
        }
    }

    pub fn grid(&self) -> TickGrid {
        TickGrid::new(self.tick)
    }

    /// Initial `(fundamentalists, optimists, pessimists)`.
    pub fn initial_composition(&self) -> (usize, usize, usize) {
        let n = self.n_agents;
        let n_f = ((self.frac_fundamentalist * n as f64).round() as usize).min(n);
        let n_plus = ((self.frac_optimist * n as f64).round() as usize).min(n - n_f);
        (n_f, n_plus, n - n_f - n_plus)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n_agents == 0 {
            return bad("n_agents must be positive");
        }
        let positive = [
            ("dt", self.dt),
            ("sigma", self.sigma),
            ("tick", self.tick),
            ("p0", self.p0),
            ("pf0", self.pf0),
            ("gamma_f", self.gamma_f),
            ("gamma_c", self.gamma_c),
            ("circuit_breaker_band", self.circuit_breaker_band),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::BadValue {
                    key: name.into(),
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        let non_negative = [
            ("sigma_eps", self.sigma_eps),
            ("v1", self.v1),
            ("v2", self.v2),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
            ("big_r", self.big_r),
            ("s", self.s),
            ("floor_fraction", self.floor_fraction),
            ("initial_cash", self.initial_cash),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::BadValue {
                    key: name.into(),
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        if self.steps_per_period == 0 || self.tau_f == 0 || self.tau_c == 0 {
            return bad("steps_per_period, tau_f and tau_c must be positive");
        }
        if ((self.steps_per_period as f64) * self.dt - 1.0).abs() > 1e-9 {
            return bad("steps_per_period * dt must equal one time unit");
        }
        if self.initial_shares < 0 {
            return bad("initial_shares must be non-negative");
        }
        let (ff, fo) = (self.frac_fundamentalist, self.frac_optimist);
        if !(0.0..=1.0).contains(&ff) || !(0.0..=1.0).contains(&fo) || ff + fo > 1.0 + 1e-12 {
            return bad("initial composition fractions must lie in [0, 1] and sum to at most 1");
        }
        Ok(())
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value.parse::<T>().map_err(|e| Error::BadValue {
                key: key.to_string(),
                reason: format!("`{value}`: {e}"),
            })
        }
        macro_rules! fields {
            ($($name:ident),* $(,)?) => {
                match key {
                    $(stringify!($name) => self.$name = parse(key, value)?,)*
                    "switching_mode" => {
                        self.switching_mode = match value {
                            "all_agents" => SwitchingMode::AllAgents,
                            "trader_only" => SwitchingMode::TraderOnly,
                            _ => {
                                return Err(Error::BadValue {
                                    key: key.into(),
                                    reason: format!("`{value}`: expected all_agents or trader_only"),
                                })
                            }
                        }
                    }
                    "snapshot_steps" => {
                        self.snapshot_steps = value
                            .split(',')
                            .map(str::trim)
                            .filter(|s| !s.is_empty())
                            .map(|s| parse(key, s))
                            .collect::<Result<_>>()?;
                    }
                    _ => return Err(Error::UnknownKey { key: key.to_string(), line: 0 }),
                }
            };
        }
        fields!(
            n_agents, steps, dt, steps_per_period, sigma_eps, sigma, tick, p0, pf0,
            gamma_f, gamma_c, tau_f, tau_c, v1, v2, alpha1, alpha2, alpha3, big_r, s,
            floor_fraction, circuit_breaker_band, frac_fundamentalist, frac_optimist,
            initial_cash, initial_shares, switching, allow_self_trade, aligned_sigma,
            trace_fundamental, seed,
        );
        Ok(())
    }

    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`", i + 1)));
            };
            cfg.set(k.trim(), v.trim()).map_err(|e| match e {
                Error::UnknownKey { key, .. } => Error::UnknownKey { key, line: i + 1 },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies `key=value` overrides, then re-validates.
    pub fn with_overrides<'a>(mut self, overrides: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        self.validate()?;
        Ok(self)
    }

    /// Renders the config in the same format [`SimConfig::parse`] reads.
    pub fn to_text(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for (k, v) in value.as_object().expect("struct serializes to object") {
            let v = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Array(xs) => xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
                other => other.to_string(),
            };
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }
}
