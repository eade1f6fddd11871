//! Wave-packet propagation under the quantized resonance Hamiltonian.
//!
//! The basis is `e^{2 i m theta}`, `m in [-M, M]`, where `m` counts ladder
//! steps of `N hbar` in the action away from `I0`. The Hamiltonian is
//! tridiagonal with
//!
//! ```text
//! H_mm       = (N^2 zeta hbar^2 / 2) m^2 + hbar N omega m + H0
//! H_{m,m+1}  = lambda V / 2
//! ```
//!
//! It is diagonalized once and states are propagated by exact eigenphases,
//! so `dt` is only a sampling interval.

use std::f64::consts::TAU;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::num;
use crate::resonance::ResonanceParams;
use crate::timescales::TimeScales;
use crate::tridiag::SymTridiagonal;

/// Edge weight, relative to the peak, above which a packet is considered
/// truncated.
pub const EDGE_WEIGHT: f64 = 1e-8;

/// Number of evenly spaced instants at which the norm is re-measured.
const NORM_CHECKPOINTS: usize = 32;

pub fn build_hamiltonian_matrix(params: &ResonanceParams, half_bandwidth: usize) -> Result<SymTridiagonal> {
    params.validate()?;
    if half_bandwidth < 4 {
        return Err(Error::InvalidParameter(format!(
            "half-bandwidth must be at least 4, got {half_bandwidth}"
        )));
    }
    let p = params;
    let n = f64::from(p.n);
    let kinetic = 0.5 * n * n * p.zeta * p.hbar * p.hbar;
    let drift = p.hbar * n * p.omega;
    let r = half_bandwidth as i64;
    let diag = (-r..=r)
        .map(|m| {
            let m = m as f64;
            kinetic * m * m + drift * m + p.h0
        })
        .collect();
    SymTridiagonal::new(diag, vec![0.5 * p.lambda * p.v; 2 * half_bandwidth])
}

/// Gaussian packet on the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavePacketSpec {
    pub mean_m: f64,
    pub sigma_m: f64,
    /// `theta0`, applied as the phase `e^{2 i m theta0}`; the packet then
    /// sits at `theta = -theta0` (mod pi).
    pub phase_gradient: Option<f64>,
}

impl Default for WavePacketSpec {
    fn default() -> Self {
        Self {
            mean_m: 0.0,
            sigma_m: 2.0,
            phase_gradient: None,
        }
    }
}

impl WavePacketSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.mean_m.is_finite() || !(self.sigma_m > 0.0 && self.sigma_m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "packet needs finite mean_m and positive sigma_m (got {}, {})",
                self.mean_m, self.sigma_m
            )));
        }
        if self.phase_gradient.is_some_and(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("phase_gradient must be finite".into()));
        }
        Ok(())
    }

    /// Smallest half-bandwidth keeping the edge weight below
    /// [`EDGE_WEIGHT`].
    pub fn required_half_bandwidth(&self) -> usize {
        let reach = self.sigma_m * (2.0 * (1.0 / EDGE_WEIGHT).ln()).sqrt();
        ((self.mean_m.abs() + reach).floor() as usize + 1).max(4)
    }

    /// Normalized coefficients `c_m`, `m in [-M, M]`, with
    /// `|c_m|^2 ~ exp(-(m - mean)^2 / (2 sigma^2))`.
    pub fn coefficients(&self, half_bandwidth: usize) -> Result<Vec<Complex64>> {
        self.validate()?;
        let r = half_bandwidth as i64;
        let edge = |m: i64| (-((m as f64 - self.mean_m).powi(2)) / (2.0 * self.sigma_m.powi(2))).exp();
        if edge(-r) >= EDGE_WEIGHT || edge(r) >= EDGE_WEIGHT {
            return Err(Error::BasisSize {
                suggested: self.required_half_bandwidth(),
            });
        }
        let theta0 = self.phase_gradient.unwrap_or(0.0);
        let mut c: Vec<Complex64> = (-r..=r)
            .map(|m| {
                let amp = (-((m as f64 - self.mean_m).powi(2)) / (4.0 * self.sigma_m.powi(2))).exp();
                // Reduce 2 m theta0 modulo 2 pi before taking the phase.
                Complex64::from_polar(amp, (2.0 * m as f64 * theta0).rem_euclid(TAU))
            })
            .collect();
        let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut c {
            *z /= norm;
        }
        Ok(c)
    }
}

/// Eigen-decomposition of the resonance Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator {
    half_bandwidth: usize,
    hbar: f64,
    energies: Vec<f64>,
    /// `vectors[j][i]`: component `i` (ladder index `i - M`) of state `j`.
    vectors: Vec<Vec<f64>>,
}

impl Propagator {
    pub fn new(params: &ResonanceParams, half_bandwidth: usize) -> Result<Self> {
        let h = build_hamiltonian_matrix(params, half_bandwidth)?;
        let eig = h.eigen_full()?;
        Ok(Self {
            half_bandwidth,
            hbar: params.hbar,
            energies: eig.values,
            vectors: eig.vectors,
        })
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    /// Eigenvalues, ascending.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Ladder index carrying the largest component of eigenvector `j`.
    pub fn dominant_index(&self, j: usize) -> i64 {
        let v = &self.vectors[j];
        let i = (0..v.len()).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        i as i64 - self.half_bandwidth as i64
    }

    /// Eigenvalue whose eigenvector has the largest weight on ladder index
    /// `m`.
    pub fn level_for_index(&self, m: i64) -> Option<f64> {
        let i = usize::try_from(m + self.half_bandwidth as i64).ok()?;
        if i >= self.energies.len() {
            return None;
        }
        let j = (0..self.energies.len()).fold(0, |best, j| {
            if self.vectors[j][i].abs() > self.vectors[best][i].abs() { j } else { best }
        });
        Some(self.energies[j])
    }

    /// Eigenbasis amplitudes `b_j = <v_j | psi>`.
    pub fn expand(&self, psi: &[Complex64]) -> Vec<Complex64> {
        self.vectors
            .iter()
            .map(|v| v.iter().zip(psi).map(|(a, z)| z * *a).sum())
            .collect()
    }

    /// Ladder amplitudes at time `t` from eigenbasis amplitudes at 0.
    pub fn state_at(&self, b: &[Complex64], t: f64) -> Vec<Complex64> {
        let mut psi = vec![Complex64::new(0.0, 0.0); self.energies.len()];
        for ((v, e), bj) in self.vectors.iter().zip(&self.energies).zip(b) {
            let c = bj * Complex64::from_polar(1.0, -e * t / self.hbar);
            for (p, a) in psi.iter_mut().zip(v) {
                *p += c * *a;
            }
        }
        psi
    }

    /// `|C(j dt)|^2` for `j = 0..=steps`.
    pub fn autocorrelation(&self, psi: &[Complex64], dt: f64, steps: usize) -> Vec<f64> {
        let weights: Vec<f64> = self.expand(psi).iter().map(|b| b.norm_sqr()).collect();
        // Phases relative to the mean energy keep the arguments small.
        let total: f64 = weights.iter().sum();
        let mean = weights.iter().zip(&self.energies).map(|(w, e)| w * e).sum::<f64>() / total;
        let rates: Vec<f64> = self.energies.iter().map(|e| (e - mean) / self.hbar).collect();
        (0..=steps)
            .map(|j| {
                let t = j as f64 * dt;
                let c: Complex64 = weights
                    .iter()
                    .zip(&rates)
                    .map(|(w, r)| Complex64::from_polar(*w, -r * t))
                    .sum();
                c.norm_sqr()
            })
            .collect()
    }

    /// Largest `| ||psi(t)||^2 - ||psi(0)||^2 |` over evenly spaced
    /// instants in `[0, t_max]`, measured on the reconstructed ladder state.
    pub fn norm_drift(&self, psi: &[Complex64], t_max: f64) -> f64 {
        let n0: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let b = self.expand(psi);
        (0..=NORM_CHECKPOINTS)
            .map(|i| {
                let t = t_max * i as f64 / NORM_CHECKPOINTS as f64;
                let n: f64 = self.state_at(&b, t).iter().map(|z| z.norm_sqr()).sum();
                (n - n0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `|1 - |<psi | U(-t) U(t) psi>|^2|`, with the intermediate state
    /// taken back to the ladder basis.
    pub fn reversal_error(&self, psi: &[Complex64], t: f64) -> f64 {
        let forward = self.state_at(&self.expand(psi), t);
        let back = self.state_at(&self.expand(&forward), -t);
        let overlap: Complex64 = psi.iter().zip(&back).map(|(a, b)| a.conj() * b).sum();
        (1.0 - overlap.norm_sqr()).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceMetadata {
    pub params: ResonanceParams,
    pub packet: WavePacketSpec,
    pub half_bandwidth: usize,
    pub norm_drift: f64,
    pub reversal_error: f64,
}

/// `|C(t)|^2` sampled at `t = j dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrTrace {
    pub dt: f64,
    pub values: Vec<f64>,
    pub t_max: f64,
    pub metadata: Option<TraceMetadata>,
}

impl AutocorrTrace {
    /// A trace without propagation metadata, e.g. from a model function.
    pub fn from_values(dt: f64, values: Vec<f64>) -> Self {
        let t_max = dt * values.len().saturating_sub(1) as f64;
        Self { dt, values, t_max, metadata: None }
    }

    pub fn sample(dt: f64, steps: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values(dt, (0..=steps).map(|j| f(j as f64 * dt)).collect())
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    /// `t,C2` rows after `#` metadata lines.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "# dt={} steps={} t_max={}", num(self.dt), self.values.len().saturating_sub(1), num(self.t_max))?;
        if let Some(m) = &self.metadata {
            let p = &m.params;
            writeln!(
                w,
                "# omega={} zeta={} lambda={} V={} N={} hbar={} H0={}",
                num(p.omega),
                num(p.zeta),
                num(p.lambda),
                num(p.v),
                p.n,
                num(p.hbar),
                num(p.h0)
            )?;
            writeln!(
                w,
                "# mean_m={} sigma_m={} theta0={}",
                num(m.packet.mean_m),
                num(m.packet.sigma_m),
                m.packet.phase_gradient.map_or_else(|| "none".into(), num)
            )?;
            writeln!(
                w,
                "# half_bandwidth={} norm_drift={} reversal_error={}",
                m.half_bandwidth,
                num(m.norm_drift),
                num(m.reversal_error)
            )?;
        }
        writeln!(w, "t,C2")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", num(self.time(j)), num(*v))?;
        }
        Ok(())
    }
}

/// Propagates `packet` for `steps` samples of width `dt` and records the
/// autocorrelation, the norm drift and the time-reversal error.
pub fn evolve(
    params: &ResonanceParams,
    packet: &WavePacketSpec,
    dt: f64,
    steps: usize,
    half_bandwidth: usize,
) -> Result<AutocorrTrace> {
    if !(dt > 0.0 && dt.is_finite()) || steps == 0 {
        return Err(Error::InvalidParameter(format!("need dt > 0 and steps > 0 (dt = {dt}, steps = {steps})")));
    }
    let psi = packet.coefficients(half_bandwidth)?;
    let prop = Propagator::new(params, half_bandwidth)?;
    let values = prop.autocorrelation(&psi, dt, steps);
    let t_max = dt * steps as f64;
    Ok(AutocorrTrace {
        dt,
        values,
        t_max,
        metadata: Some(TraceMetadata {
            params: *params,
            packet: *packet,
            half_bandwidth,
            norm_drift: prop.norm_drift(&psi, t_max),
            reversal_error: prop.reversal_error(&psi, t_max),
        }),
    })
}

/// Small oscillations about the bottom of the resonance well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CenterMode {
    /// Frequency `N sqrt(zeta lambda V)`; no finite revival time.
    Harmonic { frequency: f64, period: f64 },
    /// `zeta lambda V <= 0`: no harmonic well.
    Unstable,
}

impl CenterMode {
    pub fn time_scales(&self) -> Option<TimeScales> {
        match self {
            Self::Harmonic { period, .. } => Some(TimeScales::harmonic_center(*period)),
            Self::Unstable => None,
        }
    }
}

pub fn resonance_center_mode(params: &ResonanceParams) -> CenterMode {
    let s = params.zeta * params.lambda * params.v;
    if s > 0.0 && s.is_finite() {
        let frequency = f64::from(params.n) * s.sqrt();
        CenterMode::Harmonic {
            frequency,
            period: TAU / frequency,
        }
    } else {
        CenterMode::Unstable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSpacingReport {
    /// Lowest levels below the barrier, ascending (at most `requested + 1`).
    pub levels: Vec<f64>,
    pub gaps: Vec<f64>,
    pub requested: usize,
    /// Fewer than `requested + 1` bound levels were found.
    pub shortfall: bool,
    pub barrier_top: f64,
    pub half_bandwidth: usize,
}

impl LevelSpacingReport {
    /// `(max gap - min gap) / mean gap`.
    pub fn relative_spread(&self) -> f64 {
        if self.gaps.is_empty() {
            return f64::NAN;
        }
        let max = self.gaps.iter().copied().fold(f64::MIN, f64::max);
        let min = self.gaps.iter().copied().fold(f64::MAX, f64::min);
        let mean = self.gaps.iter().sum::<f64>() / self.gaps.len() as f64;
        (max - min) / mean
    }
}

/// Gaps between the lowest `count + 1` levels bound in the cosine well.
///
/// A level counts as bound when it lies below the barrier top
/// `H0 - omega^2 / (2 zeta) + |lambda V|`, which reduces to `H0 + lambda V`
/// at `omega = 0`. The basis is sized to cover the well.
pub fn level_spacing_report(params: &ResonanceParams, count: usize) -> Result<LevelSpacingReport> {
    params.validate()?;
    if count < 2 {
        return Err(Error::InvalidParameter(format!("count must be at least 2, got {count}")));
    }
    let p = params;
    if p.zeta <= 0.0 {
        return Err(Error::UnsupportedRegime("the resonance well needs zeta > 0".into()));
    }
    let n = f64::from(p.n);
    let centre = (p.omega / (n * p.zeta * p.hbar)).abs();
    let half_bandwidth = centre.ceil() as usize + 2 * p.mathieu_q().abs().sqrt().ceil() as usize + 32;
    let barrier_top = p.h0 - p.omega * p.omega / (2.0 * p.zeta) + (p.lambda * p.v).abs();

    let energies = build_hamiltonian_matrix(p, half_bandwidth)?.eigenvalues()?;
    let levels: Vec<f64> = energies.into_iter().take_while(|e| *e < barrier_top).take(count + 1).collect();
    let gaps = levels.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(LevelSpacingReport {
        shortfall: levels.len() < count + 1,
        levels,
        gaps,
        requested: count,
        barrier_top,
        half_bandwidth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn uncoupled() -> ResonanceParams {
        ResonanceParams { omega: 1.0, zeta: 0.5, ..Default::default() }
    }

    fn deep_well() -> ResonanceParams {
        ResonanceParams { omega: 0.0, zeta: 1.0, lambda: 1.0, v: 100.0, ..Default::default() }
    }

    #[test]
    fn uncoupled_matrix_is_diagonal_quadratic() {
        let h = build_hamiltonian_matrix(&uncoupled(), 5).unwrap();
        assert!(h.off.iter().all(|x| *x == 0.0));
        for (i, d) in h.diag.iter().enumerate() {
            let m = i as f64 - 5.0;
            assert_eq!(*d, m + 0.25 * m * m);
        }
        let free = ResonanceParams { omega: 0.0, zeta: 2.0, ..Default::default() };
        let e = build_hamiltonian_matrix(&free, 4).unwrap().eigenvalues().unwrap();
        assert_eq!(e, [0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0, 16.0, 16.0]);
        assert!(build_hamiltonian_matrix(&free, 3).is_err());
    }

    #[test]
    fn packet_normalized_and_truncation_checked() {
        let spec = WavePacketSpec { mean_m: 1.5, sigma_m: 2.0, phase_gradient: Some(0.7) };
        let c = spec.coefficients(20).unwrap();
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-14);
        let err = spec.coefficients(10).unwrap_err();
        let Error::BasisSize { suggested } = err else { panic!("{err:?}") };
        assert!(spec.coefficients(suggested).is_ok());
        assert!(spec.coefficients(suggested - 1).is_err());
        assert!(WavePacketSpec { sigma_m: 0.0, ..spec }.coefficients(20).is_err());
    }

    #[test]
    fn trace_starts_at_one_and_stays_bounded() {
        let p = ResonanceParams { lambda: 0.2, ..uncoupled() };
        let tr = evolve(&p, &WavePacketSpec::default(), 0.05, 2000, 32).unwrap();
        assert!((tr.values[0] - 1.0).abs() < 1e-12);
        assert!(tr.values.iter().all(|v| *v >= 0.0 && *v <= 1.0 + 1e-12));
        let meta = tr.metadata.as_ref().unwrap();
        assert!(meta.norm_drift <= 1e-12, "{}", meta.norm_drift);
        assert!(meta.reversal_error <= 1e-10, "{}", meta.reversal_error);
        assert_eq!(tr.t_max, 100.0);
    }

    #[test]
    fn uncoupled_trace_matches_phase_sum() {
        // Independent evaluation of sum_m |c_m|^2 exp(-i E_m t) with
        // E_m = m + m^2 / 4.
        let spec = WavePacketSpec::default();
        let tr = evolve(&uncoupled(), &spec, 0.1, 300, 24).unwrap();
        let w: Vec<f64> = (-24..=24)
            .map(|m: i32| (-(f64::from(m).powi(2)) / 8.0).exp())
            .collect();
        let z: f64 = w.iter().sum();
        for (j, v) in tr.values.iter().enumerate() {
            let t = j as f64 * 0.1;
            let (mut re, mut im) = (0.0, 0.0);
            for (i, wi) in w.iter().enumerate() {
                let m = i as f64 - 24.0;
                let ph = (m + m * m / 4.0) * t;
                re += wi * ph.cos() / z;
                im -= wi * ph.sin() / z;
            }
            assert!((v - (re * re + im * im)).abs() < 1e-12);
        }
    }

    #[test]
    fn uncoupled_recurrences() {
        let spec = WavePacketSpec::default();
        let dt = 0.01;
        let tr = evolve(&uncoupled(), &spec, dt, 3000, 24).unwrap();
        // First local maximum beyond the initial decay.
        let first = (1..tr.values.len() - 1)
            .find(|&j| tr.values[j] > tr.values[j - 1] && tr.values[j] > tr.values[j + 1] && tr.values[j] > 0.3)
            .unwrap();
        assert!((tr.time(first) - TAU).abs() <= dt);
        let (lo, hi) = ((0.9 * 8.0 * PI / dt) as usize, (1.1 * 8.0 * PI / dt) as usize);
        let peak = tr.values[lo..=hi].iter().copied().fold(0.0, f64::max);
        assert!(peak > 0.95, "{peak}");
    }

    #[test]
    fn deterministic_traces() {
        let p = ResonanceParams { lambda: 0.3, ..uncoupled() };
        let a = evolve(&p, &WavePacketSpec::default(), 0.1, 500, 32).unwrap();
        let b = evolve(&p, &WavePacketSpec::default(), 0.1, 500, 32).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn center_mode() {
        let unit = ResonanceParams { omega: 0.0, zeta: 1.0, lambda: 1.0, ..Default::default() };
        assert_eq!(resonance_center_mode(&unit), CenterMode::Harmonic { frequency: 1.0, period: TAU });
        let p = ResonanceParams { n: 2, zeta: 0.25, lambda: 0.3, v: 1.2, ..Default::default() };
        let CenterMode::Harmonic { frequency, .. } = resonance_center_mode(&p) else { panic!() };
        assert!((frequency - 0.6).abs() < 1e-15);
        assert_eq!(resonance_center_mode(&ResonanceParams { lambda: 0.0, ..p }), CenterMode::Unstable);
        assert_eq!(resonance_center_mode(&ResonanceParams { v: -1.0, ..p }), CenterMode::Unstable);
        let ts = resonance_center_mode(&unit).time_scales().unwrap();
        assert_eq!(ts.tl_cl, TAU);
        assert!(ts.tl_q.is_infinite());
    }

    #[test]
    fn deep_well_recurs_every_period() {
        let p = deep_well();
        let CenterMode::Harmonic { period, .. } = resonance_center_mode(&p) else { panic!() };
        let spec = WavePacketSpec { mean_m: 2.0, sigma_m: 2.0, phase_gradient: Some(PI / 2.0) };
        let dt = period / 200.0;
        let tr = evolve(&p, &spec, dt, 1200, 64).unwrap();
        for n in 1..=5 {
            let j = n * 200;
            assert!(tr.values[j] >= 0.9, "period {n}: {}", tr.values[j]);
        }
    }

    #[test]
    fn deep_well_gaps_follow_the_cosine_well() {
        let r = level_spacing_report(&deep_well(), 3).unwrap();
        assert!(!r.shortfall);
        assert_eq!(r.gaps.len(), 3);
        assert!(r.gaps.windows(2).all(|w| w[1] < w[0]));
        // Mathieu asymptotics: gap_r = (zeta hbar^2 / 8)(4 sqrt(q) - (r + 1)).
        for (i, g) in r.gaps.iter().enumerate() {
            let want = (80.0 - (i as f64 + 1.0)) / 8.0;
            assert!((g - want).abs() / want < 2e-3, "gap {i}: {g} vs {want}");
        }
    }

    #[test]
    fn shallow_well_reports_shortfall() {
        let p = ResonanceParams { omega: 0.0, zeta: 1.0, lambda: 0.25, ..Default::default() };
        let r = level_spacing_report(&p, 2).unwrap();
        assert!(r.shortfall);
        assert!(r.levels.len() < 3);
        let r = level_spacing_report(&deep_well(), 2).unwrap();
        assert_eq!(r.gaps.len(), 2);
        assert!(level_spacing_report(&deep_well(), 1).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let tr = AutocorrTrace::from_values(0.5, vec![1.0, 0.5, 0.25]);
        let mut out = Vec::new();
        tr.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "# dt=0.5 steps=2 t_max=1\nt,C2\n0,1\n0.5,0.5\n1,0.25\n");
    }
}
