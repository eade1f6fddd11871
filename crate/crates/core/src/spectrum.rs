//! Quasi-energies of the quantized resonance Hamiltonian.
//!
//! With `k = N m` on the Fourier ladder, the quasi-energy is
//! `E_k = (N^2 zeta hbar^2 / 8) a_{nu(k)}(q) - omega^2 / (2 zeta) + H0`.
//! Writing `a = nu^2 + delta` and expanding `nu^2` gives the equivalent
//! form used here, which avoids subtracting two large numbers:
//! `E_k = H0 + hbar omega k + zeta (hbar k)^2 / 2 + (N^2 zeta hbar^2 / 8) delta`.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::num;
use crate::mathieu::{characteristic_value, MathieuValue};
use crate::resonance::ResonanceParams;

/// Convergence tolerance handed to the Mathieu solver by default.
pub const DEFAULT_TOL: f64 = 1e-13;

/// Quasi-energy for real label `k`.
pub fn quasienergy(params: &ResonanceParams, k: f64) -> Result<f64> {
    quasienergy_with(params, k, DEFAULT_TOL).map(|(e, _)| e)
}

/// Quasi-energy together with the Mathieu value it came from.
pub fn quasienergy_with(params: &ResonanceParams, k: f64, tol: f64) -> Result<(f64, MathieuValue)> {
    params.validate()?;
    if params.zeta == 0.0 {
        return Err(Error::UnsupportedRegime(
            "zeta = 0 has no Mathieu form; use the linear-ladder (case a) time scales".into(),
        ));
    }
    let nu = params.floquet_order(k);
    let mv = characteristic_value(nu, params.mathieu_q(), tol)?;
    Ok((energy_from_detuning(params, k, mv.detuning), mv))
}

fn energy_from_detuning(p: &ResonanceParams, k: f64, detuning: f64) -> f64 {
    let hk = p.hbar * k;
    p.h0 + p.omega * hk + 0.5 * p.zeta * hk * hk + p.energy_scale() * detuning
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub m: i64,
    pub k: i64,
    pub nu: f64,
    /// `None` when the Mathieu branch could not be resolved.
    #[serde(rename = "E")]
    pub energy: Option<f64>,
    #[serde(skip)]
    pub error: Option<Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub params: ResonanceParams,
    pub q: f64,
    pub nu0: f64,
    /// Entries for `m = -m_range ..= m_range`, in that order.
    pub entries: Vec<SpectrumEntry>,
}

/// Quasi-energies for `m in [-m_range, m_range]`, `k = N m`. Branch
/// degeneracies are recorded per entry instead of aborting the batch.
pub fn build_spectrum(params: &ResonanceParams, m_range: u32) -> Result<Spectrum> {
    build_spectrum_with(params, m_range, DEFAULT_TOL)
}

pub fn build_spectrum_with(params: &ResonanceParams, m_range: u32, tol: f64) -> Result<Spectrum> {
    params.validate()?;
    if m_range == 0 {
        return Err(Error::InvalidParameter("m_range must be at least 1".into()));
    }
    if params.zeta == 0.0 {
        return Err(Error::UnsupportedRegime(
            "zeta = 0 has no Mathieu form; use the linear-ladder (case a) time scales".into(),
        ));
    }
    let n = i64::from(params.n);
    let r = i64::from(m_range);
    let mut entries = Vec::with_capacity(2 * m_range as usize + 1);
    for m in -r..=r {
        let k = n * m;
        let nu = params.floquet_order(k as f64);
        let entry = match quasienergy_with(params, k as f64, tol) {
            Ok((e, _)) => SpectrumEntry { m, k, nu, energy: Some(e), error: None },
            Err(e @ Error::BranchDegeneracy { .. }) => SpectrumEntry { m, k, nu, energy: None, error: Some(e) },
            Err(e) => return Err(e),
        };
        entries.push(entry);
    }
    Ok(Spectrum {
        params: *params,
        q: params.mathieu_q(),
        nu0: params.floquet_order(0.0),
        entries,
    })
}

impl Spectrum {
    pub fn failures(&self) -> impl Iterator<Item = &SpectrumEntry> {
        self.entries.iter().filter(|e| e.energy.is_none())
    }

    pub fn energy(&self, m: i64) -> Option<f64> {
        self.entries.iter().find(|e| e.m == m).and_then(|e| e.energy)
    }

    /// Writes `m,k,nu,E,status` rows after `#` metadata lines.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        let p = &self.params;
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
        writeln!(w, "# q={} nu0={}", num(self.q), num(self.nu0))?;
        writeln!(w, "m,k,nu,E,status")?;
        for e in &self.entries {
            let (energy, status) = match (&e.energy, &e.error) {
                (Some(v), _) => (num(*v), "ok".to_string()),
                (None, Some(Error::BranchDegeneracy { first, second, .. })) => {
                    (num(f64::NAN), format!("degenerate {}|{}", num(*first), num(*second)))
                }
                (None, _) => (num(f64::NAN), "failed".to_string()),
            };
            writeln!(w, "{},{},{},{},{}", e.m, e.k, num(e.nu), energy, status)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ResonanceParams {
        ResonanceParams {
            omega: 1.0,
            zeta: 0.5,
            ..Default::default()
        }
    }

    #[test]
    fn uncoupled_quadratic_form() {
        assert_eq!(quasienergy(&base(), 2.0).unwrap(), 3.0);
        let p = ResonanceParams { h0: -1.5, omega: 0.7, zeta: 0.3, hbar: 0.4, n: 3, ..base() };
        for k in [-7.0, -0.25, 0.0, 1.0, 9.0] {
            let hk = p.hbar * k;
            let want = p.h0 + p.omega * hk + p.zeta * hk * hk / 2.0;
            assert!((quasienergy(&p, k).unwrap() - want).abs() <= 1e-14 * want.abs().max(1.0));
        }
    }

    #[test]
    fn batch_matches_single_entries() {
        let p = ResonanceParams { lambda: 0.05, n: 2, omega: 0.9, ..base() };
        let s = build_spectrum(&p, 3).unwrap();
        assert_eq!(s.entries.len(), 7);
        assert_eq!(s.entries[0].k, -6);
        for e in &s.entries {
            assert_eq!(e.energy.unwrap(), quasienergy(&p, e.k as f64).unwrap());
        }
        assert_eq!(s.q, p.mathieu_q());
        assert_eq!(s.nu0, p.floquet_order(0.0));
    }

    #[test]
    fn uncoupled_gaps_grow_linearly() {
        let p = ResonanceParams { n: 2, zeta: 0.3, hbar: 0.7, ..base() };
        let s = build_spectrum(&p, 5).unwrap();
        let e: Vec<f64> = s.entries.iter().map(|e| e.energy.unwrap()).collect();
        let slope = f64::from(p.n * p.n) * p.zeta * p.hbar * p.hbar;
        for w in e.windows(3) {
            assert!(((w[2] - w[1]) - (w[1] - w[0]) - slope).abs() < 1e-12);
        }
    }

    #[test]
    fn uncoupled_symmetric_about_stationary_label() {
        let p = ResonanceParams { omega: 0.8, zeta: 0.4, hbar: 0.5, ..base() };
        let kstar = -p.omega / (p.zeta * p.hbar);
        for x in [0.3, 1.0, 2.5] {
            let a = quasienergy(&p, kstar + x).unwrap();
            let b = quasienergy(&p, kstar - x).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_nonlinearity_is_unsupported() {
        let p = ResonanceParams { zeta: 0.0, ..base() };
        assert!(matches!(quasienergy(&p, 0.0), Err(Error::UnsupportedRegime(_))));
        assert!(matches!(build_spectrum(&p, 2), Err(Error::UnsupportedRegime(_))));
        assert!(matches!(build_spectrum(&base(), 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn degenerate_entries_are_collected() {
        // nu(k) = 2k + 12 is an integer on every entry. At q = 2 the pair
        // (0, -nu) of the low even orders is split far beyond the tolerance
        // while its m = 0 weights tie.
        let p = ResonanceParams { omega: 3.0, zeta: 0.5, lambda: 0.25, ..base() };
        let s = build_spectrum_with(&p, 6, 1e-12).unwrap();
        assert_eq!(s.entries.len(), 13);
        let failed: Vec<i64> = s.failures().map(|e| e.m).collect();
        assert!(!failed.is_empty(), "expected at least one unresolved branch");
        assert!(failed.len() < 13);
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains(",nan,degenerate "));
        assert!(text.lines().any(|l| l.ends_with(",ok")));
    }

    #[test]
    fn csv_layout() {
        let s = build_spectrum(&base(), 1).unwrap();
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows, ["m,k,nu,E,status", "-1,-1,2,-0.75,ok", "0,0,4,0,ok", "1,1,6,1.25,ok"]);
    }
}
