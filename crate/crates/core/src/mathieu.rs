//! Mathieu characteristic values `a_nu(q)` for real, generally fractional,
//! Floquet order `nu`.
//!
//! The Floquet solution `e^{i nu theta} P(theta)` with `P` pi-periodic is
//! expanded as `sum_m c_m e^{i (nu + 2m) theta}`. Substituting into
//! `y'' + (a - 2q cos 2 theta) y = 0` gives the symmetric tridiagonal
//! system with diagonal `(nu + 2m)^2` and off-diagonal `q`. The branch
//! reported is the eigenvalue whose eigenvector carries the largest weight
//! on `m = 0`, i.e. the one continuously connected to `nu^2` at `q = 0`.
//!
//! Internally the diagonal is shifted by `nu^2` (entries `4m(nu + m)`), so
//! the solver works with the detuning `delta = a - nu^2` directly. After
//! branch selection `delta` is polished by Newton iteration on the
//! three-term continued fraction of the same truncated system.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tridiag::SymTridiagonal;

/// Two eigenvectors whose `|c_0|` differ by less than this are considered
/// tied for the `m = 0` branch.
pub const BRANCH_TIE_WEIGHT: f64 = 1e-6;

/// Largest half-bandwidth the doubling loop may reach.
pub const MAX_HALF_BANDWIDTH: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MathieuValue {
    pub nu: f64,
    pub q: f64,
    /// Characteristic value `a_nu(q)`.
    pub a: f64,
    /// `a - nu^2`, computed without cancellation.
    pub detuning: f64,
    /// Fourier index with the largest coefficient in the branch eigenvector.
    pub dominant_index: i64,
    /// Half-bandwidth of the truncation that met the tolerance.
    pub truncation: usize,
    /// `|a(M) - a(M/2)|`, plus half the splitting when a weight tie was
    /// resolved by averaging.
    pub residual: f64,
}

/// Branch selected at one fixed truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub detuning: f64,
    pub dominant_index: i64,
    /// Half the eigenvalue splitting if the branch came from a weight tie.
    pub tie_spread: f64,
}

/// Tridiagonal Mathieu matrix on `m in [-M, M]` with diagonal `(nu + 2m)^2`.
pub fn mathieu_matrix(nu: f64, q: f64, half_bandwidth: usize) -> SymTridiagonal {
    let m = half_bandwidth as i64;
    let diag = (-m..=m).map(|k| (nu + 2.0 * k as f64).powi(2)).collect();
    SymTridiagonal {
        diag,
        off: vec![q; 2 * half_bandwidth],
    }
}

/// Same matrix with `nu^2` removed from the diagonal.
fn detuning_matrix(nu: f64, q: f64, half_bandwidth: usize) -> SymTridiagonal {
    let m = half_bandwidth as i64;
    let diag = (-m..=m)
        .map(|k| {
            let k = k as f64;
            4.0 * k * (nu + k)
        })
        .collect();
    SymTridiagonal {
        diag,
        off: vec![q; 2 * half_bandwidth],
    }
}

fn initial_half_bandwidth(nu: f64, q: f64) -> usize {
    let guess = (nu.abs() / 2.0).ceil() + (2.0 * q.abs().sqrt()).ceil();
    (guess as usize).max(8)
}

/// Characteristic value on the branch connected to `nu^2`, doubling the
/// truncation until successive values agree to `tol * max(1, |a|)`.
pub fn characteristic_value(nu: f64, q: f64, tol: f64) -> Result<MathieuValue> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if !nu.is_finite() || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("nu and q must be finite (nu = {nu}, q = {q})")));
    }

    let mut half = initial_half_bandwidth(nu, q);
    let mut previous = branch_at(nu, q, half, tol)?;
    loop {
        let next_half = half * 2;
        if next_half > MAX_HALF_BANDWIDTH {
            return Err(Error::Resource(format!(
                "a_nu(q) for nu = {nu}, q = {q} did not converge before half-bandwidth {MAX_HALF_BANDWIDTH}"
            )));
        }
        let current = branch_at(nu, q, next_half, tol)?;
        let a = nu * nu + current.detuning;
        let change = (current.detuning - previous.detuning).abs();
        let residual = change + current.tie_spread;
        if residual <= tol * a.abs().max(1.0) {
            return Ok(MathieuValue {
                nu,
                q,
                a,
                detuning: current.detuning,
                dominant_index: current.dominant_index,
                truncation: next_half,
                residual,
            });
        }
        previous = current;
        half = next_half;
    }
}

/// Branch selection and refinement at a fixed half-bandwidth.
pub fn branch_at(nu: f64, q: f64, half_bandwidth: usize, tol: f64) -> Result<Branch> {
    if q == 0.0 {
        return Ok(Branch {
            detuning: 0.0,
            dominant_index: 0,
            tie_spread: 0.0,
        });
    }
    let matrix = detuning_matrix(nu, q, half_bandwidth);
    let (values, c0) = matrix.eigen_with_component(half_bandwidth)?;

    let mut ranked: Vec<usize> = (0..values.len()).collect();
    ranked.sort_by(|&i, &j| c0[j].abs().total_cmp(&c0[i].abs()));
    let best = ranked[0];
    let runner_up = ranked[1];

    let x = values[best];
    let scale = (nu * nu + x).abs().max(1.0);
    // Eigenvalues closer than the tolerance have arbitrary eigenvectors,
    // so their m = 0 weights say nothing; treat them as tied as well.
    let nearest = [best.checked_sub(1), Some(best + 1)]
        .into_iter()
        .flatten()
        .filter(|&j| j < values.len())
        .min_by(|&i, &j| (values[i] - x).abs().total_cmp(&(values[j] - x).abs()));
    let start = if c0[best].abs() - c0[runner_up].abs() < BRANCH_TIE_WEIGHT {
        let y = values[runner_up];
        if (x - y).abs() > tol * scale {
            return Err(Error::BranchDegeneracy {
                nu,
                q,
                first: nu * nu + x.min(y),
                second: nu * nu + x.max(y),
            });
        }
        Some((x, y))
    } else {
        nearest.map(|j| (x, values[j])).filter(|(x, y)| (x - y).abs() <= tol * scale)
    };
    let tie_spread = start.map_or(0.0, |(x, y)| 0.5 * (x - y).abs());

    let cf = ContinuedFraction { nu, q, half_bandwidth };
    let (detuning, dominant_index) = match start {
        // Both candidates carry the m = 0 weight equally; report their
        // refined midpoint as the m = 0 branch.
        Some((x, y)) => (0.5 * (cf.polish(x) + cf.polish(y)), 0),
        None => {
            let d = cf.polish(values[best]);
            (d, cf.dominant_index(d))
        }
    };
    Ok(Branch {
        detuning,
        dominant_index,
        tie_spread,
    })
}

/// Characteristic equation of the truncated system written as
/// `f(delta) = q (r_1 + s_1) - delta`, where `r_m = c_m / c_{m-1}` and
/// `s_m = c_{-m} / c_{-m+1}` follow from the rows `m != 0` by downward
/// recursion from the truncation edge.
struct ContinuedFraction {
    nu: f64,
    q: f64,
    half_bandwidth: usize,
}

impl ContinuedFraction {
    /// `(f, f')` at `delta`.
    fn eval(&self, delta: f64) -> (f64, f64) {
        let (r, dr) = self.tail(delta, 1.0);
        let (s, ds) = self.tail(delta, -1.0);
        (self.q * (r + s) - delta, self.q * (dr + ds) - 1.0)
    }

    /// Ratio at `m = 1` on one side (`sign = +1` for `m > 0`) and its
    /// derivative in `delta`.
    fn tail(&self, delta: f64, sign: f64) -> (f64, f64) {
        let q = self.q;
        let mut r = 0.0;
        let mut dr = 0.0;
        for m in (1..=self.half_bandwidth).rev() {
            let m = m as f64;
            let denom = delta - 4.0 * m * (m + sign * self.nu) - q * r;
            let ddenom = 1.0 - q * dr;
            r = q / denom;
            dr = -q * ddenom / (denom * denom);
        }
        (r, dr)
    }

    /// Newton polish of an eigenvalue estimate. Falls back to the input if
    /// the iteration wanders (a nearby pole of the continued fraction).
    fn polish(&self, start: f64) -> f64 {
        let mut delta = start;
        for _ in 0..8 {
            let (f, df) = self.eval(delta);
            if !(f.is_finite() && df.is_finite()) || df == 0.0 {
                return start;
            }
            let step = f / df;
            delta -= step;
            if step.abs() <= 4.0 * f64::EPSILON * delta.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        let scale = (self.nu * self.nu + start).abs().max(1.0);
        if delta.is_finite() && (delta - start).abs() <= 1e-8 * scale {
            delta
        } else {
            start
        }
    }

    /// Index of the largest coefficient of the eigenvector at `delta`,
    /// rebuilt from the continued-fraction ratios with `c_0 = 1`.
    fn dominant_index(&self, delta: f64) -> i64 {
        let mut best = (0_i64, 1.0_f64);
        for sign in [1.0, -1.0] {
            let ratios = self.ratios(delta, sign);
            let mut c = 1.0_f64;
            for (i, ratio) in ratios.iter().enumerate() {
                c *= ratio;
                if !c.is_finite() {
                    break;
                }
                if c.abs() > best.1 {
                    best = ((i as i64 + 1) * sign as i64, c.abs());
                }
            }
        }
        best.0
    }

    fn ratios(&self, delta: f64, sign: f64) -> Vec<f64> {
        let q = self.q;
        let mut out = vec![0.0; self.half_bandwidth];
        let mut r = 0.0;
        for m in (1..=self.half_bandwidth).rev() {
            let mf = m as f64;
            r = q / (delta - 4.0 * mf * (mf + sign * self.nu) - q * r);
            out[m - 1] = r;
        }
        out
    }
}

/// Full spectrum of the truncated Mathieu matrix by dense diagonalisation.
#[derive(Debug, Clone)]
pub struct OracleSpectrum {
    pub half_bandwidth: usize,
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Unit eigenvectors indexed by `m + M`.
    pub vectors: Vec<Vec<f64>>,
}

impl OracleSpectrum {
    /// Eigenvalue with the largest weight on Fourier index `m`.
    pub fn branch_value(&self, m: i64) -> f64 {
        let row = (m + self.half_bandwidth as i64) as usize;
        let (j, _) = self
            .vectors
            .iter()
            .enumerate()
            .max_by(|a, b| a.1[row].abs().total_cmp(&b.1[row].abs()))
            .expect("nonempty spectrum");
        self.values[j]
    }
}

/// Brute-force verifier: dense symmetric eigendecomposition of the same
/// truncated system.
pub fn characteristic_value_oracle(nu: f64, q: f64, half_bandwidth: usize) -> Result<OracleSpectrum> {
    if half_bandwidth < 4 {
        return Err(Error::InvalidParameter(format!(
            "oracle half-bandwidth must be >= 4, got {half_bandwidth}"
        )));
    }
    let dense = mathieu_matrix(nu, q, half_bandwidth).to_dense();
    let n = dense.len();
    let eig = DMatrix::from_fn(n, n, |i, j| dense[i][j]).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            let col = eig.eigenvectors.column(j);
            let norm = col.norm();
            col.iter().map(|v| v / norm).collect()
        })
        .collect();
    Ok(OracleSpectrum {
        half_bandwidth,
        values,
        vectors,
    })
}
