//! Real symmetric tridiagonal eigenproblems.
//!
//! The solver is the implicit QL iteration with Wilkinson-style shifts
//! (EISPACK `tql2`). Instead of always accumulating the full eigenvector
//! matrix `Z`, callers choose which *rows* of `Z` to carry along. Every
//! Givens rotation acts on a pair of columns of `Z`, so any fixed linear
//! combination of its rows transforms the same way. Tracking one row costs
//! O(n) per rotation, which keeps branch selection for large truncations
//! at O(n^2) overall; tracking all `n` identity rows yields the full
//! eigenvector matrix.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix stored as its diagonal and first
/// off-diagonal (`off.len() == diag.len() - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Eigenvalues in ascending order together with the tracked rows of the
/// eigenvector matrix, permuted consistently.
#[derive(Debug, Clone)]
pub struct TrackedEigen {
    pub values: Vec<f64>,
    /// `rows[r][j]` is the tracked row `r` evaluated on eigenvector `j`.
    pub rows: Vec<Vec<f64>>,
}

/// Full eigendecomposition; `vectors[j]` is the unit eigenvector for
/// `values[j]`.
#[derive(Debug, Clone)]
pub struct FullEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::InputShape(format!(
                "tridiagonal needs off.len() == diag.len() - 1 (got {} and {})",
                off.len(),
                diag.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Dense row-major copy, mostly for tests and oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i + 1 < n {
                a[i][i + 1] = self.off[i];
                a[i + 1][i] = self.off[i];
            }
        }
        a
    }

    /// `A x` for a real vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Eigenvalues plus the requested rows of the eigenvector matrix. Each
    /// entry of `rows` is a length-`n` vector `w`; the result holds
    /// `w . z_j` for every eigenvector `z_j`.
    pub fn eigen_tracked(&self, rows: Vec<Vec<f64>>) -> Result<TrackedEigen> {
        let n = self.dim();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InputShape("tracked row length differs from matrix size".into()));
        }
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        let mut rows = rows;
        ql_implicit(&mut d, &mut e, &mut rows)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let values = order.iter().map(|&j| d[j]).collect();
        let rows = rows
            .into_iter()
            .map(|r| order.iter().map(|&j| r[j]).collect())
            .collect();
        Ok(TrackedEigen { values, rows })
    }

    /// Tracks the unit row `index`, i.e. the `index`-th component of every
    /// eigenvector.
    pub fn eigen_with_component(&self, index: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut unit = vec![0.0; self.dim()];
        unit[index] = 1.0;
        let mut te = self.eigen_tracked(vec![unit])?;
        Ok((te.values, te.rows.pop().unwrap_or_default()))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigen_tracked(Vec::new())?.values)
    }

    pub fn eigen_full(&self) -> Result<FullEigen> {
        let n = self.dim();
        let identity = (0..n)
            .map(|r| {
                let mut row = vec![0.0; n];
                row[r] = 1.0;
                row
            })
            .collect();
        let te = self.eigen_tracked(identity)?;
        // rows[r][j] = Z[r][j]; transpose into per-eigenvector columns.
        let vectors = (0..n)
            .map(|j| te.rows.iter().map(|row| row[j]).collect())
            .collect();
        Ok(FullEigen { values: te.values, vectors })
    }
}

/// Implicit QL on `d` (diagonal) and `e` (off-diagonal, `e[i]` couples
/// `i` and `i + 1`, `e[n-1] == 0`). Rotations are applied to every tracked
/// row.
fn ql_implicit(d: &mut [f64], e: &mut [f64], rows: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    let eps = f64::EPSILON;
    let max_iter = 60 * n.max(1);
    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let mut iterations = 0usize;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            loop {
                iterations += 1;
                if iterations > max_iter {
                    return Err(Error::Resource(format!(
                        "QL iteration did not converge within {max_iter} sweeps"
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in rows.iter_mut() {
                        let h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
