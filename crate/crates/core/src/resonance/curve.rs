use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// What a sampled curve represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// Frequency of the first degree of freedom, `Omega_1(I)`.
    Omega1,
    /// Frequency of the second degree of freedom at fixed `I_2`.
    Omega2,
    /// Averaged unperturbed energy `H0(I)`.
    H0,
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "omega1" => Ok(Self::Omega1),
            "omega2" => Ok(Self::Omega2),
            "h0" => Ok(Self::H0),
            other => Err(Error::InvalidParameter(format!("unknown curve kind '{other}'"))),
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Omega1 => "omega1",
            Self::Omega2 => "omega2",
            Self::H0 => "h0",
        })
    }
}

/// Samples `(action, value)` with strictly increasing actions.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyCurve {
    samples: Vec<(f64, f64)>,
    kind: CurveKind,
    slopes: Vec<f64>,
}

impl FrequencyCurve {
    pub const MIN_SAMPLES: usize = 4;

    pub fn new(samples: Vec<(f64, f64)>, kind: CurveKind) -> Result<Self> {
        if samples.len() < Self::MIN_SAMPLES {
            return Err(Error::InputShape(format!(
                "curve needs at least {} samples, got {}",
                Self::MIN_SAMPLES,
                samples.len()
            )));
        }
        if samples.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InputShape("curve samples must be finite".into()));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::InputShape(format!(
                "actions must be strictly increasing ({} followed by {})",
                w[0].0, w[1].0
            )));
        }
        let slopes = pchip_slopes(&samples);
        Ok(Self { samples, kind, slopes })
    }

    /// Samples `f` at `count` uniformly spaced actions on `[start, end]`.
    pub fn from_fn(start: f64, end: f64, count: usize, kind: CurveKind, f: impl Fn(f64) -> f64) -> Result<Self> {
        let step = (end - start) / (count.max(2) - 1) as f64;
        let samples = (0..count)
            .map(|i| {
                let x = if i + 1 == count { end } else { start + step * i as f64 };
                (x, f(x))
            })
            .collect();
        Self::new(samples, kind)
    }

    /// Parses the two-column text format: whitespace-separated `action value`
    /// per line, `#` starts a comment, blank lines ignored.
    pub fn parse(text: &str, kind: CurveKind) -> Result<Self> {
        let mut samples = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let mut next = |what: &str| -> Result<f64> {
                let tok = fields.next().ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    msg: format!("missing {what} column"),
                })?;
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("{what} '{tok}' is not a number"),
                })
            };
            let x = next("action")?;
            let y = next("value")?;
            if fields.next().is_some() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "expected exactly two columns".into(),
                });
            }
            samples.push((x, y));
        }
        Self::new(samples, kind)
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn actions(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    /// Monotone piecewise-cubic (Fritsch-Carlson) interpolant. Returns
    /// `None` outside the sampled range.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = match self.samples.binary_search_by(|s| s.0.total_cmp(&x)) {
            Ok(i) => return Some(self.samples[i].1),
            Err(i) => i - 1,
        };
        let (x0, y0) = self.samples[i];
        let (x1, y1) = self.samples[i + 1];
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Some(h00 * y0 + h10 * h * self.slopes[i] + h01 * y1 + h11 * h * self.slopes[i + 1])
    }
}

fn pchip_slopes(s: &[(f64, f64)]) -> Vec<f64> {
    let n = s.len();
    let h: Vec<f64> = s.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let delta: Vec<f64> = s.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let text = "# action value\n0 1\n\n1.0   2.0 # inline\n2 3\n3e0\t4\n";
        let c = FrequencyCurve::parse(text, CurveKind::Omega1).unwrap();
        assert_eq!(c.samples(), &[(0.0, 1.0), (1.0, 2.0), (2.0, 3.0), (3.0, 4.0)]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = FrequencyCurve::parse("0 1\n1 x\n", CurveKind::H0).unwrap_err();
        assert_eq!(err, Error::Parse { line: 2, msg: "value 'x' is not a number".into() });
        assert!(matches!(
            FrequencyCurve::parse("0 1 2\n", CurveKind::H0),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(FrequencyCurve::parse("0\n", CurveKind::H0), Err(Error::Parse { .. })));
    }

    #[test]
    fn rejects_short_or_unsorted_curves() {
        assert!(matches!(
            FrequencyCurve::parse("0 0\n1 1\n2 2\n", CurveKind::H0),
            Err(Error::InputShape(_))
        ));
        assert!(matches!(
            FrequencyCurve::parse("0 0\n1 1\n1 2\n3 3\n", CurveKind::H0),
            Err(Error::InputShape(_))
        ));
    }

    #[test]
    fn interpolant_is_exact_on_lines() {
        let c = FrequencyCurve::from_fn(0.0, 4.0, 9, CurveKind::Omega1, |x| 3.0 * x - 1.0).unwrap();
        for x in [0.0, 0.1, 1.77, 3.999, 4.0] {
            assert!((c.value_at(x).unwrap() - (3.0 * x - 1.0)).abs() < 1e-13);
        }
        assert!(c.value_at(-0.1).is_none());
        assert!(c.value_at(4.1).is_none());
    }

    #[test]
    fn kind_round_trips_through_text() {
        for k in [CurveKind::Omega1, CurveKind::Omega2, CurveKind::H0] {
            assert_eq!(k.to_string().parse::<CurveKind>().unwrap(), k);
        }
    }

    proptest! {
        #[test]
        fn interpolant_stays_within_sample_bounds_for_monotone_data(
            steps in prop::collection::vec(0.01f64..2.0, 4..20),
            rises in prop::collection::vec(0.0f64..3.0, 20),
            x in 0.0f64..1.0,
        ) {
            let mut samples = Vec::new();
            let (mut a, mut v) = (0.0, 0.0);
            for (s, r) in steps.iter().zip(&rises) {
                samples.push((a, v));
                a += s;
                v += r;
            }
            let c = FrequencyCurve::new(samples.clone(), CurveKind::Omega1).unwrap();
            let (lo, hi) = c.range();
            let xv = lo + x * (hi - lo);
            let y = c.value_at(xv).unwrap();
            prop_assert!(y >= samples[0].1 - 1e-12 && y <= samples[samples.len() - 1].1 + 1e-12);
        }
    }
}
