//! The reduced one-resonance record and the classical helpers that produce
//! it from a two-degree-of-freedom description.

mod curve;
mod fourier;
mod reduce;

pub use curve::{CurveKind, FrequencyCurve};
pub use fourier::{coupling_fourier_amplitude, AngleGrid};
pub use reduce::{find_resonances, reduce_to_resonance, Coupling, ResonanceSearch};

use serde::Serialize;

use crate::error::{Error, Result};

/// Parameters of the averaged Hamiltonian expanded to second order around
/// the mean action `I0` of the excitation:
///
/// ```text
/// H = H0 + omega (I - I0) + zeta/2 (I - I0)^2 + lambda V cos(N phi)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceParams {
    /// Classical frequency `dH0/dI` at `I0`.
    pub omega: f64,
    /// Nonlinearity `d^2 H0 / dI^2` at `I0`.
    pub zeta: f64,
    /// Coupling strength.
    pub lambda: f64,
    /// Fourier amplitude of the resonant coupling term.
    #[serde(rename = "V")]
    pub v: f64,
    /// Resonance order.
    #[serde(rename = "N")]
    pub n: u32,
    /// Co-prime partner of `n`; informational only.
    #[serde(rename = "M")]
    pub m: Option<i64>,
    pub hbar: f64,
    /// Energy of the uncoupled system at `I0`.
    #[serde(rename = "H0")]
    pub h0: f64,
    /// Mean action of the excitation.
    #[serde(rename = "I0")]
    pub i0: f64,
}

impl Default for ResonanceParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            zeta: 0.5,
            lambda: 0.0,
            v: 1.0,
            n: 1,
            m: None,
            hbar: 1.0,
            h0: 0.0,
            i0: 0.0,
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl ResonanceParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega, self.zeta, self.lambda, self.v, self.hbar, self.h0, self.i0];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("resonance parameters must be finite".into()));
        }
        if self.hbar <= 0.0 {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {}", self.hbar)));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("resonance order N must be >= 1".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coupling strength must be non-negative, got {}",
                self.lambda
            )));
        }
        if let Some(m) = self.m {
            if gcd(m.unsigned_abs(), u64::from(self.n)) != 1 {
                return Err(Error::InvalidParameter(format!(
                    "M = {m} and N = {} are not co-prime",
                    self.n
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn order(&self) -> f64 {
        f64::from(self.n)
    }

    /// `N^2 zeta hbar^2 / 8`, the factor converting Mathieu values to energy.
    pub fn energy_scale(&self) -> f64 {
        let n = self.order();
        n * n * self.zeta * self.hbar * self.hbar / 8.0
    }

    /// Mathieu parameter `q = 4 lambda V / (N^2 zeta hbar^2)`.
    pub fn mathieu_q(&self) -> f64 {
        let n = self.order();
        4.0 * self.lambda * self.v / (n * n * self.zeta * self.hbar * self.hbar)
    }

    /// Floquet order for label `k`: `nu = 2k/N + 2 omega / (N zeta hbar)`.
    pub fn floquet_order(&self, k: f64) -> f64 {
        let n = self.order();
        2.0 * k / n + 2.0 * self.omega / (n * self.zeta * self.hbar)
    }

    /// `mu = N hbar zeta / (2 omega)`.
    pub fn mu(&self) -> f64 {
        self.order() * self.hbar * self.zeta / (2.0 * self.omega)
    }

    /// Returns a copy with one named field replaced. Names follow the
    /// config keys.
    pub fn with(&self, name: &str, value: f64) -> Result<Self> {
        let mut p = *self;
        match name {
            "omega" => p.omega = value,
            "zeta" => p.zeta = value,
            "lambda" => p.lambda = value,
            "V" => p.v = value,
            "hbar" => p.hbar = value,
            "H0" => p.h0 = value,
            "I0" => p.i0 = value,
            "N" => {
                if value < 1.0 || value.fract() != 0.0 || value > f64::from(u32::MAX) {
                    return Err(Error::InvalidParameter(format!("N must be a positive integer, got {value}")));
                }
                p.n = value as u32;
            }
            "M" => {
                if value.fract() != 0.0 || !value.is_finite() {
                    return Err(Error::InvalidParameter(format!("M must be an integer, got {value}")));
                }
                p.m = Some(value as i64);
            }
            other => return Err(Error::InvalidParameter(format!("unknown resonance parameter '{other}'"))),
        }
        Ok(p)
    }

    pub const FIELD_NAMES: [&'static str; 9] = ["omega", "zeta", "lambda", "V", "N", "M", "hbar", "H0", "I0"];
}
