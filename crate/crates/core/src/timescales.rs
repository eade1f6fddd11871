//! Classical periods, quantum revival times and their coupling-induced
//! modification factors.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::{json_f64, json_opt_f64};
use crate::resonance::ResonanceParams;
use crate::spectrum::{quasienergy_with, DEFAULT_TOL};

/// `|1 - mu^2|` below this is reported as near-singular.
pub const SINGULAR_WIDTH: f64 = 1e-6;

/// Default label increment for [`numeric_times`].
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `zeta = 0`: linear ladder, no quantum revivals.
    CaseA,
    /// `mu < 1`.
    CaseB,
    /// `mu > 1`.
    CaseC,
    NearSingular,
    /// `omega = 0`: the classical period is infinite.
    OpenSystem,
    /// Harmonic limit at the centre of the resonance well.
    ResonanceCenter,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CaseA => "case_a",
            Self::CaseB => "case_b",
            Self::CaseC => "case_c",
            Self::NearSingular => "near_singular",
            Self::OpenSystem => "open_system",
            Self::ResonanceCenter => "resonance_center",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    NumericDerivative,
    HarmonicCenter,
    Synthetic,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ClosedForm => "closed_form",
            Self::NumericDerivative => "numeric_derivative",
            Self::HarmonicCenter => "harmonic_center",
            Self::Synthetic => "synthetic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    NearSingular,
    /// `omega^(1) <= 0`; the period keeps its sign.
    NegativeFrequency,
    /// `zeta < 0`; the closed forms were derived for `zeta > 0`.
    NegativeNonlinearity,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NearSingular => "near_singular",
            Self::NegativeFrequency => "negative_frequency",
            Self::NegativeNonlinearity => "negative_nonlinearity",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeScales {
    #[serde(rename = "T0_cl", serialize_with = "json_f64")]
    pub t0_cl: f64,
    #[serde(rename = "T0_Q", serialize_with = "json_f64")]
    pub t0_q: f64,
    #[serde(rename = "M_cl", serialize_with = "json_f64")]
    pub m_cl: f64,
    #[serde(rename = "M_Q", serialize_with = "json_f64")]
    pub m_q: f64,
    #[serde(rename = "Tl_cl", serialize_with = "json_f64")]
    pub tl_cl: f64,
    #[serde(rename = "Tl_Q", serialize_with = "json_f64")]
    pub tl_q: f64,
    #[serde(serialize_with = "json_f64")]
    pub mu: f64,
    #[serde(serialize_with = "json_f64")]
    pub alpha: f64,
    #[serde(serialize_with = "json_f64")]
    pub beta: f64,
    /// `(1/hbar) dE/dk` at `k = 0`, numeric results only.
    #[serde(serialize_with = "json_opt_f64")]
    pub omega1: Option<f64>,
    /// `(1/(2 hbar)) d^2E/dk^2` at `k = 0`, numeric results only.
    #[serde(serialize_with = "json_opt_f64")]
    pub omega2: Option<f64>,
    pub regime: Regime,
    pub source: Source,
    pub warnings: Vec<Warning>,
}

impl TimeScales {
    /// Builds a record from base times and modification factors, with
    /// `Tl = (1 - M) T0`.
    pub fn from_factors(t0_cl: f64, t0_q: f64, m_cl: f64, m_q: f64) -> Self {
        Self {
            t0_cl,
            t0_q,
            m_cl,
            m_q,
            tl_cl: (1.0 - m_cl) * t0_cl,
            tl_q: if t0_q.is_finite() { (1.0 - m_q) * t0_q } else { t0_q },
            mu: f64::NAN,
            alpha: f64::NAN,
            beta: f64::NAN,
            omega1: None,
            omega2: None,
            regime: Regime::CaseB,
            source: Source::Synthetic,
            warnings: Vec::new(),
        }
    }

    /// Predictions for the harmonic limit at the resonance centre: every
    /// period is a full recurrence and no revival time exists.
    pub fn harmonic_center(period: f64) -> Self {
        Self {
            tl_q: f64::INFINITY,
            t0_q: f64::INFINITY,
            regime: Regime::ResonanceCenter,
            source: Source::HarmonicCenter,
            ..Self::from_factors(period, f64::INFINITY, 0.0, 0.0)
        }
    }

    /// CSV header matching [`TimeScales::csv_fields`].
    pub const CSV_HEADER: &'static str =
        "T0_cl,T0_Q,Tl_cl,Tl_Q,M_cl,M_Q,mu,alpha,beta,omega1,omega2,regime,source,warnings";

    pub fn csv_fields(&self) -> String {
        use crate::fmt::num;
        let opt = |x: Option<f64>| x.map_or_else(String::new, num);
        let warnings: Vec<String> = self.warnings.iter().map(Warning::to_string).collect();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            num(self.t0_cl),
            num(self.t0_q),
            num(self.tl_cl),
            num(self.tl_q),
            num(self.m_cl),
            num(self.m_q),
            num(self.mu),
            num(self.alpha),
            num(self.beta),
            opt(self.omega1),
            opt(self.omega2),
            self.regime,
            self.source,
            warnings.join("|")
        )
    }
}

fn regime_for(mu: f64) -> Regime {
    if (1.0 - mu * mu).abs() < SINGULAR_WIDTH {
        Regime::NearSingular
    } else if mu.abs() < 1.0 {
        Regime::CaseB
    } else {
        Regime::CaseC
    }
}

fn case_a(p: &ResonanceParams, source: Source) -> TimeScales {
    let t0_cl = TAU / p.omega;
    TimeScales {
        t0_cl,
        t0_q: f64::INFINITY,
        m_cl: 0.0,
        m_q: 0.0,
        tl_cl: t0_cl,
        tl_q: f64::INFINITY,
        mu: 0.0,
        alpha: 0.0,
        beta: f64::NAN,
        omega1: (source == Source::NumericDerivative).then_some(p.omega),
        omega2: (source == Source::NumericDerivative).then_some(0.0),
        regime: if p.omega == 0.0 { Regime::OpenSystem } else { Regime::CaseA },
        source,
        warnings: Vec::new(),
    }
}

/// `(alpha, beta)` regime constants.
fn regime_constants(p: &ResonanceParams) -> (f64, f64) {
    let lv = p.lambda * p.v;
    let alpha = 0.5 * (lv * p.zeta / (p.omega * p.omega)).powi(2);
    let beta = 0.5 * p.mathieu_q().powi(2);
    // Both vanish with the coupling, whatever the other factors.
    if lv == 0.0 {
        (0.0, 0.0)
    } else {
        (alpha, beta)
    }
}

/// Perturbative time scales.
///
/// `M_cl = -(1/2)(lambda V zeta / omega^2)^2 / (1 - mu^2)^2` and
/// `M_Q = (1/2)(lambda V zeta / omega^2)^2 (3 + mu^2) / (1 - mu^2)^3`.
/// At `omega = 0` the classical period is infinite and the factors take
/// their `mu -> infinity` limit `-beta`.
pub fn closed_form_times(params: &ResonanceParams) -> Result<TimeScales> {
    params.validate()?;
    let p = params;
    if p.zeta == 0.0 {
        return Ok(case_a(p, Source::ClosedForm));
    }
    let t0_cl = TAU / p.omega;
    let t0_q = 4.0 * PI / (p.hbar * p.zeta);
    let (alpha, beta) = regime_constants(p);
    let mut warnings = Vec::new();
    if p.zeta < 0.0 {
        warnings.push(Warning::NegativeNonlinearity);
    }

    if p.omega == 0.0 {
        let mut ts = TimeScales::from_factors(f64::INFINITY, t0_q, -beta, -beta);
        ts.tl_cl = f64::INFINITY;
        ts.mu = f64::INFINITY;
        ts.alpha = alpha;
        ts.beta = beta;
        ts.regime = Regime::OpenSystem;
        ts.source = Source::ClosedForm;
        ts.warnings = warnings;
        return Ok(ts);
    }

    let mu = p.mu();
    let s = 1.0 - mu * mu;
    let m_cl = -alpha / (s * s);
    let m_q = alpha * (3.0 + mu * mu) / (s * s * s);
    let regime = regime_for(mu);
    if regime == Regime::NearSingular {
        warnings.push(Warning::NearSingular);
    }
    Ok(TimeScales {
        mu,
        alpha,
        beta,
        regime,
        source: Source::ClosedForm,
        warnings,
        ..TimeScales::from_factors(t0_cl, t0_q, m_cl, m_q)
    })
}

/// Time scales from central differences of the quasi-energy in the label
/// `k` around `k = 0`. `zeta = 0` is answered exactly by the linear ladder.
pub fn numeric_times(params: &ResonanceParams, step: f64) -> Result<TimeScales> {
    numeric_times_with(params, step, DEFAULT_TOL)
}

pub fn numeric_times_with(params: &ResonanceParams, step: f64, tol: f64) -> Result<TimeScales> {
    params.validate()?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    let p = params;
    if p.zeta == 0.0 {
        return Ok(case_a(p, Source::NumericDerivative));
    }

    // E_k - H0 = hbar omega k + zeta (hbar k)^2 / 2 + s delta(k). The
    // quadratic part is differentiated exactly; the stencil acts on the
    // coupling term s delta alone, so its small contribution to the
    // frequencies is not lost to rounding. Differences at h and h/2 are
    // combined by one Richardson step.
    let ks = [-step, -0.5 * step, 0.0, 0.5 * step, step];
    let mut delta = [0.0; 5];
    let mut index = [0i64; 5];
    for (i, &k) in ks.iter().enumerate() {
        match quasienergy_with(p, k, tol) {
            Ok((_, mv)) => (delta[i], index[i]) = (mv.detuning, mv.dominant_index),
            Err(Error::BranchDegeneracy { .. }) => {
                return Err(Error::Stencil { k, nu: p.floquet_order(k), step });
            }
            Err(e) => return Err(e),
        }
    }
    if index.iter().any(|&m| m != index[2]) {
        return Err(Error::Stencil { k: 0.0, nu: p.floquet_order(0.0), step });
    }
    let first = |h: f64, lo: usize, hi: usize| (delta[hi] - delta[lo]) / (2.0 * h);
    let second = |h: f64, lo: usize, hi: usize| ((delta[hi] - delta[2]) + (delta[lo] - delta[2])) / (h * h);
    let richardson = |coarse: f64, fine: f64| fine + (fine - coarse) / 3.0;
    let d1 = richardson(first(step, 0, 4), first(0.5 * step, 1, 3));
    let d2 = richardson(second(step, 0, 4), second(0.5 * step, 1, 3));
    let s = p.energy_scale();
    let shift1 = s * d1 / p.hbar;
    let shift2 = s * d2 / (2.0 * p.hbar);
    let omega1 = p.omega + shift1;
    let half_hz = 0.5 * p.hbar * p.zeta;
    let omega2 = half_hz + shift2;

    let t0_cl = TAU / p.omega;
    let t0_q = 4.0 * PI / (p.hbar * p.zeta);
    let tl_cl = TAU / omega1;
    let tl_q = TAU / omega2;
    // M = 1 - Tl/T0 = (omega_i - omega_i^0) / omega_i.
    let m_cl = if p.omega == 0.0 { f64::NAN } else { shift1 / omega1 };
    let m_q = shift2 / omega2;

    let (alpha, beta) = regime_constants(p);
    let mut warnings = Vec::new();
    if p.zeta < 0.0 {
        warnings.push(Warning::NegativeNonlinearity);
    }
    if omega1 <= 0.0 {
        warnings.push(Warning::NegativeFrequency);
    }
    let (mu, regime) = if p.omega == 0.0 {
        (f64::INFINITY, Regime::OpenSystem)
    } else {
        let mu = p.mu();
        (mu, regime_for(mu))
    };
    if regime == Regime::NearSingular {
        warnings.push(Warning::NearSingular);
    }
    Ok(TimeScales {
        t0_cl,
        t0_q,
        m_cl,
        m_q,
        tl_cl,
        tl_q,
        mu,
        alpha,
        beta,
        omega1: Some(omega1),
        omega2: Some(omega2),
        regime,
        source: Source::NumericDerivative,
        warnings,
    })
}

/// `(r_b, r_c)` residuals of the two case identities; `None` without a
/// finite `T0_Q`.
pub fn case_relations(ts: &TimeScales) -> Option<(f64, f64)> {
    if !ts.t0_q.is_finite() {
        return None;
    }
    let cl = ts.tl_cl / ts.t0_cl;
    let qu = ts.tl_q / ts.t0_q;
    Some((0.75 * cl + 0.25 * qu - 1.0, cl - qu))
}
