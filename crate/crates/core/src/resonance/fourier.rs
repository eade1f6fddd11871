use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Samples of the coupling `H_c(theta_1, theta_2)` on the uniform grid
/// `theta_a = 2 pi i / n_a`, stored row-major with `theta_1` as the row.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    n1: usize,
    n2: usize,
    values: Vec<f64>,
}

impl AngleGrid {
    pub const MIN_POINTS: usize = 4;

    pub fn from_values(n1: usize, n2: usize, values: Vec<f64>) -> Result<Self> {
        if n1 < Self::MIN_POINTS || n2 < Self::MIN_POINTS {
            return Err(Error::InputShape(format!(
                "angle grid needs at least {m}x{m} points, got {n1}x{n2}",
                m = Self::MIN_POINTS
            )));
        }
        if values.len() != n1 * n2 {
            return Err(Error::InputShape(format!(
                "grid of {n1}x{n2} needs {} samples, got {}",
                n1 * n2,
                values.len()
            )));
        }
        Ok(Self { n1, n2, values })
    }

    pub fn sample(n1: usize, n2: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..n1 * n2)
            .map(|idx| {
                let (i, j) = (idx / n2, idx % n2);
                f(TAU * i as f64 / n1 as f64, TAU * j as f64 / n2 as f64)
            })
            .collect();
        Self::from_values(n1, n2, values)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// Largest `|n_a|` the grid resolves without aliasing.
    pub fn band_limit(&self) -> (i64, i64) {
        (((self.n1 - 1) / 2) as i64, ((self.n2 - 1) / 2) as i64)
    }

    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }
}

/// Discrete approximation of `(2 pi)^-2 \iint H_c e^{-i n . theta}`.
pub fn coupling_fourier_amplitude(grid: &AngleGrid, n: (i64, i64)) -> Result<Complex64> {
    let (b1, b2) = grid.band_limit();
    if n.0.abs() > b1 || n.1.abs() > b2 {
        return Err(Error::Range(format!(
            "harmonic ({}, {}) beyond the grid band limit ({b1}, {b2})",
            n.0, n.1
        )));
    }
    let phases = |count: usize, k: i64| -> Vec<Complex64> {
        (0..count)
            .map(|i| {
                // Reduce the index product first so large grids keep exact
                // phases.
                let r = (k * i as i64).rem_euclid(count as i64) as f64;
                Complex64::from_polar(1.0, -TAU * r / count as f64)
            })
            .collect()
    };
    let p1 = phases(grid.n1, n.0);
    let p2 = phases(grid.n2, n.1);
    let mut total = Complex64::new(0.0, 0.0);
    for (i, row) in grid.values.chunks_exact(grid.n2).enumerate() {
        let inner: Complex64 = row.iter().zip(&p2).map(|(v, p)| p * *v).sum();
        total += p1[i] * inner;
    }
    Ok(total / (grid.n1 * grid.n2) as f64)
}
