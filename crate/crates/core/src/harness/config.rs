use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::closure::ClosureKind;
use crate::kcl2d::Scheme;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    ExpandingCircle,
    Wedge,
    SinusoidalShock,
    PeriodicPulse3d,
    BurgersRiemann,
}

impl ScenarioKind {
    pub const ALL: [Self; 5] = [Self::ExpandingCircle, Self::Wedge, Self::SinusoidalShock, Self::PeriodicPulse3d, Self::BurgersRiemann];

    pub fn name(self) -> &'static str {
        match self {
            Self::ExpandingCircle => "expanding_circle",
            Self::Wedge => "wedge",
            Self::SinusoidalShock => "sinusoidal_shock",
            Self::PeriodicPulse3d => "periodic_pulse3d",
            Self::BurgersRiemann => "burgers_riemann",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            format!("unknown scenario `{s}` (expected one of {})", names.join(", "))
        })
    }
}

fn default_cfl() -> f64 {
    0.45
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn default_wedge_angle() -> f64 {
    0.4
}
fn default_amplitude() -> f64 {
    0.2
}
fn default_kappa() -> f64 {
    0.1
}
fn default_kink_threshold() -> f64 {
    crate::kcl2d::DEFAULT_KINK_THRESHOLD
}

/// A run description. Fields left out of the JSON document take
/// scenario-dependent defaults in [`ScenarioConfig::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureKind>,
    /// Initial front speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    /// Cells per direction (per period for periodic scenarios).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snap_every: Option<f64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Reserved; every scenario is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Initial radius of the expanding circle.
    #[serde(default = "one")]
    pub r0: f64,
    /// Half-angle of the wedge corner, radians.
    #[serde(default = "default_wedge_angle")]
    pub wedge_angle: f64,
    /// Arc length of each wedge arm.
    #[serde(default = "two")]
    pub wedge_half_length: f64,
    /// Amplitude `A` of `x = A − A cos(πy/2)`.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "two")]
    pub a: f64,
    #[serde(default = "two")]
    pub b: f64,
    #[serde(default = "one")]
    pub u_l: f64,
    #[serde(default)]
    pub u_r: f64,
    #[serde(default = "default_kink_threshold")]
    pub kink_threshold: f64,
    /// Also trace the initial front with the ray tracer (2-D scenarios).
    #[serde(default)]
    pub trace_rays: bool,
    /// `ε` of the ray-tracer speed field `m = 1 + ε r`; zero traces with
    /// the constant speed `m0`.
    #[serde(default)]
    pub ray_epsilon: f64,
}

/// Command-line overrides; `None` leaves the field alone.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub scenario: Option<ScenarioKind>,
    pub cells: Option<usize>,
    pub t_end: Option<f64>,
    pub cfl: Option<f64>,
    pub closure: Option<ClosureKind>,
    pub out: Option<PathBuf>,
    pub snap_every: Option<f64>,
}

impl ScenarioConfig {
    /// Config with every optional field unset.
    pub fn new(scenario: ScenarioKind) -> Self {
        serde_json::from_value(serde_json::json!({ "scenario": scenario })).expect("minimal config parses")
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.scenario {
            self.scenario = s;
        }
        if o.cells.is_some() {
            self.cells = o.cells;
        }
        if o.t_end.is_some() {
            self.t_end = o.t_end;
        }
        if let Some(c) = o.cfl {
            self.cfl = c;
        }
        if o.closure.is_some() {
            self.closure = o.closure;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if o.snap_every.is_some() {
            self.snap_every = o.snap_every;
        }
    }

    /// Fills scenario defaults and validates.
    pub fn resolve(&self) -> Result<Self, HarnessError> {
        use ScenarioKind::*;
        let mut c = self.clone();
        let (closure, m0, cells, t_end, snap) = match c.scenario {
            ExpandingCircle => (Some(ClosureKind::ConstantM), Some(1.0), 512, 1.0, 0.1),
            Wedge => (Some(ClosureKind::Wnlrt), Some(1.2), 400, 2.0, 0.1),
            SinusoidalShock => (Some(ClosureKind::Wnlrt), Some(1.2), 512, 40.0, 0.5),
            PeriodicPulse3d => (Some(ClosureKind::Wnlrt), Some(1.2), 64, 1.0, 0.1),
            BurgersRiemann => (None, None, 400, 2.0, 0.1),
        };
        if c.scenario == BurgersRiemann {
            if c.closure.is_some() || c.m0.is_some() {
                return Err(HarnessError::config("closure", "burgers_riemann takes no front closure or m0"));
            }
        } else {
            c.closure = c.closure.or(closure);
            c.m0 = c.m0.or(m0);
        }
        c.cells = c.cells.or(Some(cells));
        c.t_end = c.t_end.or(Some(t_end));
        c.snap_every = c.snap_every.or(Some(snap));
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = HarnessError::config;
        let positive = |field: &str, v: f64| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(err(field, format!("must be positive, got {v}"))) };
        if let Some(n) = self.cells {
            if n < 16 {
                return Err(err("cells", format!("need at least 16 cells, got {n}")));
            }
            if n > 1 << 20 {
                return Err(err("cells", format!("{n} cells is beyond the supported size")));
            }
        }
        if let Some(t) = self.t_end {
            positive("t_end", t)?;
        }
        if let Some(s) = self.snap_every {
            positive("snap_every", s)?;
        }
        if let Some(m) = self.m0 {
            positive("m0", m)?;
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(err("cfl", format!("must lie in (0, 1), got {}", self.cfl)));
        }
        positive("r0", self.r0)?;
        positive("wedge_half_length", self.wedge_half_length)?;
        positive("a", self.a)?;
        positive("b", self.b)?;
        positive("kink_threshold", self.kink_threshold)?;
        if !(self.wedge_angle > 0.0 && self.wedge_angle < std::f64::consts::FRAC_PI_2) {
            return Err(err("wedge_angle", format!("must lie in (0, π/2), got {}", self.wedge_angle)));
        }
        for (field, v) in [("amplitude", self.amplitude), ("kappa", self.kappa), ("u_l", self.u_l), ("u_r", self.u_r), ("ray_epsilon", self.ray_epsilon)] {
            if !v.is_finite() {
                return Err(err(field, "must be finite".to_string()));
            }
        }
        if self.amplitude < 0.0 || self.kappa < 0.0 {
            return Err(err(if self.amplitude < 0.0 { "amplitude" } else { "kappa" }, "must be non-negative".to_string()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves() {
        let c = ScenarioConfig::from_json(r#"{"scenario": "wedge"}"#).unwrap().resolve().unwrap();
        assert_eq!(c.closure, Some(ClosureKind::Wnlrt));
        assert_eq!(c.m0, Some(1.2));
        assert_eq!(c.cells, Some(400));
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"scenario": "wedge", "bogus": 1}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"scenario": "triangle"}"#).is_err());
    }

    #[test]
    fn errors_name_the_field() {
        let e = ScenarioConfig::from_json(r#"{"scenario": "wedge", "cells": 8}"#).unwrap_err();
        assert!(e.to_string().contains("`cells`"));
        let e = ScenarioConfig::from_json(r#"{"scenario": "wedge", "t_end": -1}"#).unwrap_err();
        assert!(e.to_string().contains("`t_end`"));
        let e = ScenarioConfig::from_json(r#"{"scenario": "burgers_riemann", "closure": "wnlrt"}"#).unwrap().resolve().unwrap_err();
        assert!(e.to_string().contains("`closure`"));
    }

    #[test]
    fn resolved_echo_round_trips() {
        for kind in ScenarioKind::ALL {
            let c = ScenarioConfig::new(kind).resolve().unwrap();
            let back = ScenarioConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.resolve().unwrap(), c);
        }
    }

    #[test]
    fn overrides_apply() {
        let mut c = ScenarioConfig::new(ScenarioKind::Wedge);
        c.apply(&Overrides { cells: Some(128), cfl: Some(0.3), closure: Some(ClosureKind::ConstantM), ..Default::default() });
        let r = c.resolve().unwrap();
        assert_eq!((r.cells, r.cfl, r.closure), (Some(128), 0.3, Some(ClosureKind::ConstantM)));
    }
}
