//! Recurrence times measured on autocorrelation traces.

use serde::Serialize;

use crate::dynamics::AutocorrTrace;
use crate::error::{Error, Result};
use crate::fmt::json_opt_f64;
use crate::timescales::TimeScales;

/// Peaks up to this many predicted classical periods enter the period
/// estimate. The half period of slack keeps the fifth recurrence when
/// the measured period is slightly longer than predicted.
pub const EARLY_PERIODS: f64 = 5.5;

/// Revival search window, in units of the predicted revival time.
pub const REVIVAL_WINDOW: (f64, f64) = (0.8, 1.2);

/// A revival must exceed the collapse plateau by this factor.
pub const REVIVAL_CONTRAST: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub time: f64,
    pub height: f64,
}

/// Three-point parabola through `(-1, a), (0, b), (1, c)`: offset and
/// height of its vertex.
fn parabola_vertex(a: f64, b: f64, c: f64) -> (f64, f64) {
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        return (0.0, b);
    }
    let offset = 0.5 * (a - c) / denom;
    (offset, b - 0.25 * (a - c) * offset)
}

/// Strict local maxima above `threshold`, refined by parabolic
/// interpolation. The sample at `t = 0` never counts.
pub fn detect_peaks(trace: &AutocorrTrace, threshold: f64) -> Result<Vec<Peak>> {
    if trace.values.is_empty() {
        return Err(Error::InputShape("empty trace".into()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let v = &trace.values;
    let mut peaks = Vec::new();
    for j in 1..v.len().saturating_sub(1) {
        if v[j] > threshold && v[j] > v[j - 1] && v[j] > v[j + 1] {
            let (offset, height) = parabola_vertex(v[j - 1], v[j], v[j + 1]);
            peaks.push(Peak {
                time: (j as f64 + offset) * trace.dt,
                height: height.min(1.0).max(v[j]),
            });
        }
    }
    Ok(peaks)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviations {
    /// `(measured - predicted) / predicted` for the classical period.
    #[serde(rename = "Tcl")]
    pub t_cl: f64,
    #[serde(rename = "TQ", serialize_with = "json_opt_f64")]
    pub t_q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceReport {
    #[serde(rename = "measured_Tcl")]
    pub measured_t_cl: f64,
    #[serde(rename = "measured_TQ", serialize_with = "json_opt_f64")]
    pub measured_t_q: Option<f64>,
    /// Median of the trace between the first period and the revival
    /// window, when a revival search was possible.
    #[serde(serialize_with = "json_opt_f64")]
    pub plateau: Option<f64>,
    pub threshold: f64,
    pub predicted: TimeScales,
    pub deviations: Deviations,
    pub peak_list: Vec<Peak>,
}

impl RecurrenceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Measures the classical period and, when the trace is long enough, the
/// revival time, and compares both with `predicted`.
pub fn extract_times(trace: &AutocorrTrace, predicted: &TimeScales, threshold: f64) -> Result<RecurrenceReport> {
    let t_cl = predicted.tl_cl;
    if !(t_cl.is_finite() && t_cl > 0.0) {
        return Err(Error::Unresolved(format!("predicted classical period {t_cl} is not a positive time")));
    }
    if trace.t_max < 3.0 * t_cl {
        return Err(Error::Unresolved(format!(
            "trace ends at t = {} before three predicted periods ({})",
            trace.t_max,
            3.0 * t_cl
        )));
    }
    let peaks = detect_peaks(trace, threshold)?;
    let early: Vec<f64> = peaks.iter().map(|p| p.time).filter(|t| *t <= EARLY_PERIODS * t_cl).collect();
    if early.len() < 2 {
        return Err(Error::Unresolved(format!(
            "{} peak(s) above {threshold} within the first {EARLY_PERIODS} periods",
            early.len()
        )));
    }
    // The initial state is the zeroth recurrence. Counting from it keeps
    // the median on the classical period when a half revival leaves a
    // double-length gap among the early peaks.
    let times: Vec<f64> = std::iter::once(0.0).chain(early).collect();
    let mut spacings: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let measured_t_cl = median(&mut spacings);

    let (measured_t_q, plateau) = match revival(trace, t_cl, predicted.tl_q) {
        Some((t, height, plateau)) if height >= REVIVAL_CONTRAST * plateau => (Some(t), Some(plateau)),
        Some((_, _, plateau)) => (None, Some(plateau)),
        None => (None, None),
    };
    let rel = |m: f64, p: f64| (m - p) / p;
    Ok(RecurrenceReport {
        measured_t_cl,
        measured_t_q,
        plateau,
        threshold,
        predicted: predicted.clone(),
        deviations: Deviations {
            t_cl: rel(measured_t_cl, t_cl),
            t_q: measured_t_q.map(|m| rel(m, predicted.tl_q)),
        },
        peak_list: peaks,
    })
}

/// `(time, height, plateau)` of the largest sample in the revival window,
/// or `None` when the trace does not cover it.
fn revival(trace: &AutocorrTrace, t_cl: f64, t_q: f64) -> Option<(f64, f64, f64)> {
    if !(t_q.is_finite() && t_q > 0.0) || trace.t_max < REVIVAL_WINDOW.1 * t_q {
        return None;
    }
    let idx = |t: f64| ((t / trace.dt).round() as usize).min(trace.values.len() - 1);
    let (lo, hi) = (idx(REVIVAL_WINDOW.0 * t_q), idx(REVIVAL_WINDOW.1 * t_q));
    let v = &trace.values;
    let j = (lo..=hi).fold(lo, |best, j| if v[j] > v[best] { j } else { best });
    let (time, height) = if j > 0 && j + 1 < v.len() {
        let (offset, h) = parabola_vertex(v[j - 1], v[j], v[j + 1]);
        ((j as f64 + offset) * trace.dt, h.min(1.0).max(v[j]))
    } else {
        (trace.time(j), v[j])
    };

    // Middle third of [T_cl, 0.8 T_Q].
    let (a, b) = (t_cl, REVIVAL_WINDOW.0 * t_q);
    let third = (b - a) / 3.0;
    let (pa, pb) = (idx(a + third), idx(b - third));
    if pb <= pa {
        return None;
    }
    let mut middle = v[pa..=pb].to_vec();
    Some((time, height, median(&mut middle)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn quadratic_model(omega1: f64, omega2: f64, sigma: f64, dt: f64, steps: usize) -> AutocorrTrace {
        // |sum_m w_m exp(-i (omega1 m + omega2 m^2) t)|^2, normalized weights.
        let w: Vec<(f64, f64)> = (-30..=30)
            .map(|m| (f64::from(m), (-(f64::from(m).powi(2)) / (2.0 * sigma * sigma)).exp()))
            .collect();
        let z: f64 = w.iter().map(|p| p.1).sum();
        AutocorrTrace::sample(dt, steps, |t| {
            let (re, im) = w.iter().fold((0.0, 0.0), |(re, im), (m, wm)| {
                let ph = (omega1 * m + omega2 * m * m) * t;
                (re + wm * ph.cos() / z, im - wm * ph.sin() / z)
            });
            re * re + im * im
        })
    }

    #[test]
    fn cosine_trace_peaks() {
        let tr = AutocorrTrace::sample(0.01, 2000, |t| (t / 2.0).cos().powi(2));
        let peaks = detect_peaks(&tr, 0.5).unwrap();
        assert_eq!(peaks.len(), 3);
        for (i, p) in peaks.iter().enumerate() {
            assert!((p.time - TAU * (i + 1) as f64).abs() < 1e-3, "{p:?}");
        }
    }

    #[test]
    fn flat_trace_has_no_peaks() {
        let tr = AutocorrTrace::from_values(0.1, vec![1.0; 50]);
        assert!(detect_peaks(&tr, 0.5).unwrap().is_empty());
        assert!(detect_peaks(&tr, 1.0).is_err());
        assert!(detect_peaks(&AutocorrTrace::from_values(0.1, vec![]), 0.5).is_err());
    }

    #[test]
    fn parabolic_refinement_exact_on_parabolas() {
        for (centre, top) in [(3.37, 0.8), (5.0, 0.6), (2.6, 0.95)] {
            let tr = AutocorrTrace::sample(0.1, 100, |t| top - 0.02 * (t - centre).powi(2));
            let p = detect_peaks(&tr, 0.5).unwrap();
            assert_eq!(p.len(), 1);
            assert!((p[0].time - centre).abs() < 1e-12);
            assert!((p[0].height - top).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_model_times() {
        // omega1 = 1, omega2 = 1/4: T_cl = 2 pi, T_Q = 8 pi.
        let tr = quadratic_model(1.0, 0.25, 2.0, 0.01, 3200);
        let predicted = TimeScales::from_factors(TAU, 8.0 * PI, 0.0, 0.0);
        let r = extract_times(&tr, &predicted, 0.4).unwrap();
        assert!((r.measured_t_cl - TAU).abs() / TAU < 0.02, "{}", r.measured_t_cl);
        let tq = r.measured_t_q.unwrap();
        assert!((tq - 8.0 * PI).abs() / (8.0 * PI) < 0.05, "{tq}");
        assert!(r.plateau.unwrap() < 0.3);
        assert!(r.peak_list.windows(2).all(|w| w[1].time > w[0].time));
        assert!(r.peak_list.iter().all(|p| p.height > 0.4 && p.height <= 1.0 + 1e-12));
    }

    #[test]
    fn half_revival_gap_does_not_bias_period() {
        // Above 0.4 only 2 pi, 6 pi and 8 pi survive before t = 31.
        let tr = quadratic_model(1.0, 0.25, 2.0, 0.01, 3100);
        let predicted = TimeScales::from_factors(TAU, 8.0 * PI, 0.0, 0.0);
        let r = extract_times(&tr, &predicted, 0.4).unwrap();
        assert_eq!(r.peak_list.len(), 3);
        assert!(r.deviations.t_cl.abs() < 0.02, "{}", r.measured_t_cl);
    }

    #[test]
    fn round_trip_other_frequencies() {
        let (w1, w2) = (1.7, 0.02);
        let (tcl, tq) = (TAU / w1, TAU / w2);
        let tr = quadratic_model(w1, w2, 1.5, 0.01, (1.3 * tq / 0.01) as usize);
        let predicted = TimeScales::from_factors(tcl, tq, 0.0, 0.0);
        let r = extract_times(&tr, &predicted, 0.4).unwrap();
        assert!(r.deviations.t_cl.abs() < 0.02);
        assert!(r.deviations.t_q.unwrap().abs() < 0.05);
    }

    #[test]
    fn short_trace_is_unresolved() {
        let tr = quadratic_model(1.0, 0.25, 2.0, 0.01, 1500);
        let predicted = TimeScales::from_factors(TAU, 8.0 * PI, 0.0, 0.0);
        assert!(matches!(extract_times(&tr, &predicted, 0.4), Err(Error::Unresolved(_))));
    }

    #[test]
    fn revival_absent_without_contrast() {
        let tr = AutocorrTrace::sample(0.01, 4000, |t| 0.5 + 0.5 * (t / 2.0).cos().powi(2) * 0.9);
        let predicted = TimeScales::from_factors(TAU, 5.0 * TAU, 0.0, 0.0);
        let r = extract_times(&tr, &predicted, 0.6).unwrap();
        assert!(r.measured_t_q.is_none());
        assert!((r.measured_t_cl - TAU).abs() < 1e-3);
    }

    #[test]
    fn report_json_names() {
        let tr = quadratic_model(1.0, 0.25, 2.0, 0.01, 3200);
        let predicted = TimeScales::from_factors(TAU, 8.0 * PI, 0.0, 0.0);
        let v: serde_json::Value = serde_json::from_str(&extract_times(&tr, &predicted, 0.4).unwrap().to_json()).unwrap();
        for key in ["measured_Tcl", "measured_TQ", "predicted", "deviations", "peak_list", "plateau", "threshold"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["predicted"]["Tl_Q"].is_number());
    }

    proptest::proptest! {
        #[test]
        fn raising_threshold_never_adds_peaks(
            values in proptest::collection::vec(0.0f64..1.0, 3..200),
            lo in 0.01f64..0.98,
            bump in 0.0f64..0.5,
        ) {
            let tr = AutocorrTrace::from_values(0.1, values);
            let hi = (lo + bump).min(0.99);
            let a = detect_peaks(&tr, lo).unwrap();
            let b = detect_peaks(&tr, hi).unwrap();
            proptest::prop_assert!(b.len() <= a.len());
            proptest::prop_assert!(b.iter().all(|p| a.contains(p)));
        }
    }
}
