use nalgebra::{DMatrix, DVector};

use super::{CurveKind, FrequencyCurve, ResonanceParams};
use crate::error::{Error, Result};

/// Outcome of a resonance search.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceSearch {
    /// Actions where `n1 Omega_1 + n2 Omega_2` changes sign, ascending.
    pub roots: Vec<f64>,
    /// The residual vanishes identically on the sampled interval.
    pub degenerate: bool,
}

const ROOT_RTOL: f64 = 1e-10;
const DEGENERATE_RESIDUAL: f64 = 1e-12;

/// Solves the resonance condition `n1 Omega_1(I) + n2 Omega_2 = 0` on the
/// action interval both curves cover.
pub fn find_resonances(omega1: &FrequencyCurve, omega2: &FrequencyCurve, n: (i64, i64)) -> Result<ResonanceSearch> {
    if n == (0, 0) {
        return Err(Error::InvalidParameter("resonance vector (0, 0) is trivial".into()));
    }
    let (a1, b1) = omega1.range();
    let (a2, b2) = omega2.range();
    let (lo, hi) = (a1.max(a2), b1.min(b2));
    if lo >= hi {
        return Err(Error::Range(format!(
            "frequency curves share no action interval ([{a1}, {b1}] vs [{a2}, {b2}])"
        )));
    }

    let (n1, n2) = (n.0 as f64, n.1 as f64);
    let residual = |x: f64| -> f64 {
        let w1 = omega1.value_at(x).expect("inside common range");
        let w2 = omega2.value_at(x).expect("inside common range");
        n1 * w1 + n2 * w2
    };

    let mut grid: Vec<f64> = omega1
        .actions()
        .chain(omega2.actions())
        .filter(|&x| x >= lo && x <= hi)
        .chain([lo, hi])
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values: Vec<f64> = grid.iter().map(|&x| residual(x)).collect();

    if values.iter().all(|v| v.abs() < DEGENERATE_RESIDUAL) {
        return Ok(ResonanceSearch {
            roots: Vec::new(),
            degenerate: true,
        });
    }

    let mut roots = Vec::new();
    for i in 0..grid.len() {
        if values[i] == 0.0 {
            roots.push(grid[i]);
            continue;
        }
        if i + 1 < grid.len() && values[i] * values[i + 1] < 0.0 {
            roots.push(bisect(residual, grid[i], grid[i + 1], values[i]));
        }
    }
    Ok(ResonanceSearch {
        roots,
        degenerate: false,
    })
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= ROOT_RTOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Coupling data carried through the reduction unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub lambda: f64,
    pub v: f64,
    pub n: u32,
    pub m: Option<i64>,
}

/// Samples used on each side of the fit centre.
const FIT_HALF_WINDOW: usize = 4;
const FIT_DEGREE: usize = 4;
const RICHARDSON_LEVELS: usize = 4;
const RICHARDSON_RTOL: f64 = 1e-6;

/// Expands `H0(I)` to second order around `I0`: `omega = H0'(I0)`,
/// `zeta = H0''(I0)`, `H0 = H0(I0)`.
///
/// A least-squares polynomial of degree four is fitted over the samples
/// nearest to `I0`; its derivatives are then estimated by central
/// differences at shrinking steps and Richardson-extrapolated.
pub fn reduce_to_resonance(h0: &FrequencyCurve, i0: f64, coupling: Coupling, hbar: f64) -> Result<ResonanceParams> {
    if h0.kind() != CurveKind::H0 {
        return Err(Error::InvalidParameter(format!(
            "reduction needs an H0 curve, got a {} curve",
            h0.kind()
        )));
    }
    let samples = h0.samples();
    let below = samples.iter().filter(|s| s.0 < i0).count();
    let above = samples.iter().filter(|s| s.0 > i0).count();
    if below < 2 || above < 2 {
        return Err(Error::Range(format!(
            "I0 = {i0} needs two samples on each side ({below} below, {above} above)"
        )));
    }

    // Window centred on the sample nearest to I0.
    let nearest = if i0 - samples[below - 1].0 <= samples[below].0 - i0 { below - 1 } else { below };
    let start = nearest.saturating_sub(FIT_HALF_WINDOW);
    let end = (nearest + FIT_HALF_WINDOW + 1).min(samples.len());
    let window = &samples[start..end];
    let scale = (window[window.len() - 1].0 - window[0].0) / (window.len() - 1) as f64;

    let poly = fit_polynomial(window, i0, scale, FIT_DEGREE.min(window.len() - 1))?;
    let value = |x: f64| poly.eval((x - i0) / scale);

    let first = richardson(scale, |h| (value(i0 + h) - value(i0 - h)) / (2.0 * h));
    let second = richardson(scale, |h| (value(i0 + h) - 2.0 * value(i0) + value(i0 - h)) / (h * h));

    let omega = checked(first, "first derivative")?;
    let zeta = checked(second, "second derivative")?;

    let params = ResonanceParams {
        omega,
        zeta,
        lambda: coupling.lambda,
        v: coupling.v,
        n: coupling.n,
        m: coupling.m,
        hbar,
        h0: poly.eval(0.0),
        i0,
    };
    params.validate()?;
    Ok(params)
}

struct Polynomial(Vec<f64>);

impl Polynomial {
    fn eval(&self, u: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }
}

fn fit_polynomial(window: &[(f64, f64)], center: f64, scale: f64, degree: usize) -> Result<Polynomial> {
    let rows = window.len();
    let design = DMatrix::from_fn(rows, degree + 1, |i, j| ((window[i].0 - center) / scale).powi(j as i32));
    let rhs = DVector::from_iterator(rows, window.iter().map(|s| s.1));
    let coeffs = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::NumericalQuality {
            what: format!("local polynomial fit failed: {e}"),
            best_estimate: f64::NAN,
        })?;
    Ok(Polynomial(coeffs.iter().copied().collect()))
}

/// Richardson tableau for a central-difference estimate with `O(h^2)`
/// leading error, halving the step each level. Returns the last two
/// diagonal entries.
fn richardson(h0: f64, estimate: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(RICHARDSON_LEVELS);
    let mut h = h0;
    for level in 0..RICHARDSON_LEVELS {
        let mut row = vec![estimate(h)];
        let mut factor = 4.0;
        for k in 1..=level {
            let better = row[k - 1] + (row[k - 1] - table[level - 1][k - 1]) / (factor - 1.0);
            row.push(better);
            factor *= 4.0;
        }
        table.push(row);
        h *= 0.5;
    }
    let last = RICHARDSON_LEVELS - 1;
    (table[last][last], table[last - 1][last - 1])
}

fn checked((best, previous): (f64, f64), what: &str) -> Result<f64> {
    if (best - previous).abs() > RICHARDSON_RTOL * best.abs().max(1.0) || !best.is_finite() {
        return Err(Error::NumericalQuality {
            what: format!("{what} did not converge under Richardson extrapolation"),
            best_estimate: best,
        });
    }
    Ok(best)
}
