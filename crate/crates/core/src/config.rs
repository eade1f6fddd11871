//! Flat `key = value` run configuration.
//!
//! Lines hold one `key = value` pair; `#` starts a comment and blank lines
//! are ignored. Every key has a default, so an empty file is a valid
//! configuration. [`RunConfig::to_text`] writes the effective values back in
//! the same format.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::dynamics::WavePacketSpec;
use crate::error::{Error, Result};
use crate::fmt::num;
use crate::resonance::ResonanceParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericControls {
    /// Mathieu convergence tolerance.
    pub tol: f64,
    /// Half-bandwidth of the propagation basis.
    pub basis: usize,
    pub dt: f64,
    pub steps: usize,
    /// Peak threshold for recurrence analysis.
    pub threshold: f64,
    /// Label increment for numeric derivatives.
    pub step: f64,
    /// Half-width of the exported spectrum.
    pub m_range: u32,
    pub level_count: usize,
}

impl Default for NumericControls {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            basis: 64,
            dt: 0.01,
            steps: 3000,
            threshold: 0.4,
            step: 1e-3,
            m_range: 10,
            level_count: 3,
        }
    }
}

/// Which time scales `evolve` compares the trace against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prediction {
    #[default]
    Numeric,
    ClosedForm,
    /// Harmonic limit at the resonance centre.
    Center,
}

impl FromStr for Prediction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "numeric" => Ok(Self::Numeric),
            "closed_form" => Ok(Self::ClosedForm),
            "center" => Ok(Self::Center),
            _ => Err(format!("expected numeric, closed_form or center, got '{s}'")),
        }
    }
}

impl Prediction {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Numeric => "numeric",
            Self::ClosedForm => "closed_form",
            Self::Center => "center",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(Self::Linear),
            "log" => Ok(Self::Log),
            _ => Err(format!("expected linear or log, got '{s}'")),
        }
    }
}

impl Scale {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Log => "log",
        }
    }
}

/// One validated sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: Scale,
}

impl SweepAxis {
    /// Grid values, endpoints included.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i + 1 == self.count {
                    return self.max;
                }
                let f = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + f * (self.max - self.min),
                    Scale::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
struct AxisFields {
    param: Option<String>,
    min: Option<f64>,
    max: Option<f64>,
    count: Option<usize>,
    scale: Option<Scale>,
}

impl AxisFields {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ResonanceParams,
    pub packet: WavePacketSpec,
    pub numeric: NumericControls,
    pub predict: Prediction,
    /// Output directory.
    pub out: String,
    sweep: [AxisFields; 2],
}

const SWEEP_COUNT_DEFAULT: usize = 10;

fn parse_num<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("{key}: '{value}' is not a valid number"))
}

fn optional(value: &str) -> Option<&str> {
    (value != "none").then_some(value)
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ResonanceParams::default(),
            packet: WavePacketSpec::default(),
            numeric: NumericControls::default(),
            predict: Prediction::default(),
            out: "out".into(),
            sweep: Default::default(),
        }
    }
}

impl RunConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a configuration file and validates it.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::new();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: idx + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(parse_err(format!("duplicate key '{key}'")));
            }
            cfg.assign(key, value).map_err(parse_err)?;
            seen.push(key.to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Overrides one key, e.g. from the command line. The result is not
    /// re-validated until [`RunConfig::validate`] runs.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.assign(key.trim(), value.trim()).map_err(Error::Config)
    }

    fn assign(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        if value.is_empty() {
            return Err(format!("{key}: missing value"));
        }
        if let Some((axis, field)) = key.split_once('.') {
            let slot = match axis {
                "sweep1" => &mut self.sweep[0],
                "sweep2" => &mut self.sweep[1],
                _ => return Err(format!("unknown key '{key}'")),
            };
            match field {
                "param" => slot.param = Some(value.to_string()),
                "min" => slot.min = Some(parse_num(key, value)?),
                "max" => slot.max = Some(parse_num(key, value)?),
                "count" => slot.count = Some(parse_num(key, value)?),
                "scale" => slot.scale = Some(value.parse()?),
                _ => return Err(format!("unknown key '{key}'")),
            }
            return Ok(());
        }
        match key {
            "M" => {
                self.params.m = optional(value).map(|v| parse_num(key, v)).transpose()?;
            }
            "N" => self.params.n = parse_num(key, value)?,
            k if ResonanceParams::FIELD_NAMES.contains(&k) => {
                self.params = self.params.with(k, parse_num(key, value)?).map_err(|e| e.to_string())?;
            }
            "mean_m" => self.packet.mean_m = parse_num(key, value)?,
            "sigma_m" => self.packet.sigma_m = parse_num(key, value)?,
            "theta0" => {
                self.packet.phase_gradient = optional(value).map(|v| parse_num(key, v)).transpose()?;
            }
            "tol" => self.numeric.tol = parse_num(key, value)?,
            "basis" => self.numeric.basis = parse_num(key, value)?,
            "dt" => self.numeric.dt = parse_num(key, value)?,
            "steps" => self.numeric.steps = parse_num(key, value)?,
            "threshold" => self.numeric.threshold = parse_num(key, value)?,
            "step" => self.numeric.step = parse_num(key, value)?,
            "m_range" => self.numeric.m_range = parse_num(key, value)?,
            "level_count" => self.numeric.level_count = parse_num(key, value)?,
            "predict" => self.predict = value.parse()?,
            "out" => self.out = value.to_string(),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.params.validate().map_err(cfg_err)?;
        self.packet.validate().map_err(cfg_err)?;
        let n = &self.numeric;
        let checks = [
            (n.tol > 0.0 && n.tol.is_finite(), "tol must be positive"),
            (n.basis >= 4, "basis must be at least 4"),
            (n.dt > 0.0 && n.dt.is_finite(), "dt must be positive"),
            (n.steps >= 1, "steps must be positive"),
            (n.threshold > 0.0 && n.threshold < 1.0, "threshold must lie in (0, 1)"),
            (n.step > 0.0 && n.step.is_finite(), "step must be positive"),
            (n.m_range >= 1, "m_range must be positive"),
            (n.level_count >= 2, "level_count must be at least 2"),
        ];
        if let Some((_, msg)) = checks.iter().find(|c| !c.0) {
            return Err(Error::Config((*msg).into()));
        }
        if self.out.is_empty() {
            return Err(Error::Config("out must not be empty".into()));
        }
        self.sweep_axes().map(|_| ())
    }

    /// Configured sweep axes in order (zero, one or two).
    pub fn sweep_axes(&self) -> Result<Vec<SweepAxis>> {
        let mut axes = Vec::new();
        for (i, f) in self.sweep.iter().enumerate() {
            if f.is_empty() {
                continue;
            }
            let name = format!("sweep{}", i + 1);
            let param = f
                .param
                .clone()
                .ok_or_else(|| Error::Config(format!("{name}.param is required")))?;
            if param == "M" || !ResonanceParams::FIELD_NAMES.contains(&param.as_str()) {
                return Err(Error::Config(format!("{name}.param: '{param}' is not a sweepable parameter")));
            }
            let (Some(min), Some(max)) = (f.min, f.max) else {
                return Err(Error::Config(format!("{name} needs both min and max")));
            };
            let count = f.count.unwrap_or(SWEEP_COUNT_DEFAULT);
            let scale = f.scale.unwrap_or_default();
            if !min.is_finite() || !max.is_finite() || count == 0 {
                return Err(Error::Config(format!("{name}: finite bounds and a positive count are required")));
            }
            if scale == Scale::Log && !(min > 0.0 && max > 0.0) {
                return Err(Error::Config(format!("{name}: log scale needs positive bounds")));
            }
            axes.push(SweepAxis { param, min, max, count, scale });
        }
        Ok(axes)
    }

    /// The effective configuration in the input format; parsing it yields
    /// an equal configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("omega", num(p.omega));
        kv("zeta", num(p.zeta));
        kv("lambda", num(p.lambda));
        kv("V", num(p.v));
        kv("N", p.n.to_string());
        kv("M", p.m.map_or_else(|| "none".into(), |m| m.to_string()));
        kv("hbar", num(p.hbar));
        kv("H0", num(p.h0));
        kv("I0", num(p.i0));
        kv("mean_m", num(self.packet.mean_m));
        kv("sigma_m", num(self.packet.sigma_m));
        kv("theta0", self.packet.phase_gradient.map_or_else(|| "none".into(), num));
        let n = &self.numeric;
        kv("tol", num(n.tol));
        kv("basis", n.basis.to_string());
        kv("dt", num(n.dt));
        kv("steps", n.steps.to_string());
        kv("threshold", num(n.threshold));
        kv("step", num(n.step));
        kv("m_range", n.m_range.to_string());
        kv("level_count", n.level_count.to_string());
        kv("predict", self.predict.as_str().into());
        kv("out", self.out.clone());
        for (i, f) in self.sweep.iter().enumerate() {
            let name = format!("sweep{}", i + 1);
            if let Some(v) = &f.param {
                kv(&format!("{name}.param"), v.clone());
            }
            if let Some(v) = f.min {
                kv(&format!("{name}.min"), num(v));
            }
            if let Some(v) = f.max {
                kv(&format!("{name}.max"), num(v));
            }
            if let Some(v) = f.count {
                kv(&format!("{name}.count"), v.to_string());
            }
            if let Some(v) = f.scale {
                kv(&format!("{name}.scale"), v.as_str().into());
            }
        }
        s
    }
}
