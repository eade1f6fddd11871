//! Named invariant checks behind `qrecur verify`.

use std::f64::consts::{PI, TAU};

use qrecur::config::RunConfig;
use qrecur::dynamics::Propagator;
use qrecur::fmt::num;
use qrecur::mathieu::characteristic_value;
use qrecur::spectrum::{build_spectrum_with, quasienergy_with};
use qrecur::timescales::numeric_times_with;
use qrecur::{
    case_relations, characteristic_value_oracle, closed_form_times, evolve, extract_times, AutocorrTrace,
    ResonanceParams, TimeScales,
};

use crate::Failure;

type Outcome = Result<(), String>;

struct Ctx {
    tol: f64,
    step: f64,
    /// Parameters from the user's config, when one was given.
    params: Option<ResonanceParams>,
    config: RunConfig,
}

struct Check {
    module: &'static str,
    name: &'static str,
    run: fn(&Ctx) -> Outcome,
}

const CHECKS: &[Check] = &[
    Check { module: "mathieu", name: "zero_coupling_limit", run: mathieu_zero_coupling },
    Check { module: "mathieu", name: "dense_oracle", run: mathieu_dense_oracle },
    Check { module: "mathieu", name: "basis_doubling", run: mathieu_basis_doubling },
    Check { module: "spectrum", name: "uncoupled_ladder", run: spectrum_uncoupled },
    Check { module: "spectrum", name: "matrix_agreement", run: spectrum_matrix_default },
    Check { module: "timescales", name: "case_b_identity", run: timescales_case_b },
    Check { module: "timescales", name: "case_c_identity", run: timescales_case_c },
    Check { module: "timescales", name: "linear_ladder", run: timescales_case_a },
    Check { module: "timescales", name: "hbar_fourth_power", run: timescales_hbar },
    Check { module: "timescales", name: "numeric_vs_closed_form", run: timescales_agreement },
    Check { module: "dynamics", name: "unitarity", run: dynamics_unitarity_default },
    Check { module: "dynamics", name: "free_recurrences", run: dynamics_free },
    Check { module: "analysis", name: "quadratic_model", run: analysis_model },
    Check { module: "config", name: "round_trip", run: config_round_trip },
    Check { module: "config", name: "spectrum_matrix_agreement", run: config_spectrum },
    Check { module: "config", name: "unitarity", run: config_unitarity },
];

pub fn run(cfg: &RunConfig, have_config: bool, only: Option<&str>) -> Result<(), Failure> {
    if let Some(m) = only {
        if !CHECKS.iter().any(|c| c.module == m) {
            let mut known: Vec<&str> = CHECKS.iter().map(|c| c.module).collect();
            known.dedup();
            return Err(qrecur::Error::Config(format!("unknown module '{m}'; known: {}", known.join(", "))).into());
        }
    }
    let ctx = Ctx {
        tol: cfg.numeric.tol,
        step: cfg.numeric.step,
        params: have_config.then_some(cfg.params),
        config: cfg.clone(),
    };
    let mut failed = 0;
    let mut ran = 0;
    for c in CHECKS.iter().filter(|c| only.is_none_or(|m| m == c.module)) {
        if c.module == "config" && c.name != "round_trip" && ctx.params.is_none() {
            continue;
        }
        ran += 1;
        match (c.run)(&ctx) {
            Ok(()) => println!("PASS {}/{}", c.module, c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL {}/{}: {why}", c.module, c.name);
            }
        }
    }
    println!("{} of {ran} checks passed", ran - failed);
    if failed > 0 {
        Err(Failure::Checks(failed))
    } else {
        Ok(())
    }
}

fn within(what: &str, got: f64, want: f64, bound: f64) -> Outcome {
    let err = (got - want).abs();
    if err <= bound {
        Ok(())
    } else {
        Err(format!("{what}: {} vs {} (error {} > {})", num(got), num(want), num(err), num(bound)))
    }
}

fn mathieu_zero_coupling(ctx: &Ctx) -> Outcome {
    for nu in [0.0, 0.5, 1.0, 2.7, 10.25] {
        let v = characteristic_value(nu, 0.0, ctx.tol).map_err(|e| e.to_string())?;
        within(&format!("a_{nu}(0)"), v.a, nu * nu, 1e-12)?;
    }
    Ok(())
}

fn mathieu_dense_oracle(ctx: &Ctx) -> Outcome {
    let v = characteristic_value(0.0, 1.0, ctx.tol).map_err(|e| e.to_string())?;
    let dense = characteristic_value_oracle(0.0, 1.0, 200).map_err(|e| e.to_string())?;
    within("a_0(1)", v.a, dense.branch_value(0), 1e-10)
}

fn mathieu_basis_doubling(ctx: &Ctx) -> Outcome {
    for (nu, q) in [(0.0, 1.0), (2.7, 1.0), (10.25, 5.0)] {
        let v = characteristic_value(nu, q, ctx.tol).map_err(|e| e.to_string())?;
        let coarse = characteristic_value_oracle(nu, q, v.truncation.max(16)).map_err(|e| e.to_string())?;
        let fine = characteristic_value_oracle(nu, q, 2 * v.truncation.max(16)).map_err(|e| e.to_string())?;
        within(&format!("a_{nu}({q}) under doubling"), coarse.branch_value(0), fine.branch_value(0), 1e-12)?;
    }
    Ok(())
}

fn spectrum_uncoupled(ctx: &Ctx) -> Outcome {
    let p = ResonanceParams { omega: 1.0, zeta: 0.5, lambda: 0.0, h0: 0.25, ..Default::default() };
    let s = build_spectrum_with(&p, 20, ctx.tol).map_err(|e| e.to_string())?;
    for e in &s.entries {
        let hk = p.hbar * e.k as f64;
        let want = p.h0 + p.omega * hk + 0.5 * p.zeta * hk * hk;
        let got = e.energy.ok_or_else(|| format!("m = {} unresolved", e.m))?;
        within(&format!("E at m = {}", e.m), got, want, 1e-12 * want.abs().max(1e-300))?;
    }
    Ok(())
}

/// Quasi-energies against eigenvalues of the ladder matrix, paired by the
/// dominant ladder index.
fn spectrum_matrix(p: &ResonanceParams, tol: f64, range: i64, half_bandwidth: usize, rel: f64) -> Outcome {
    let prop = Propagator::new(p, half_bandwidth).map_err(|e| e.to_string())?;
    for m in -range..=range {
        let k = f64::from(p.n) * m as f64;
        let (e, _) = quasienergy_with(p, k, tol).map_err(|e| format!("m = {m}: {e}"))?;
        let level = prop.level_for_index(m).ok_or_else(|| format!("m = {m} outside the basis"))?;
        within(&format!("m = {m}"), e, level, rel * e.abs().max(p.hbar * p.omega.abs()).max(1e-300))?;
    }
    Ok(())
}

fn spectrum_matrix_default(ctx: &Ctx) -> Outcome {
    let p = ResonanceParams { omega: 1.0, zeta: 0.5, lambda: 0.05, ..Default::default() };
    spectrum_matrix(&p, ctx.tol, 10, 64, 1e-7)
}

fn timescales_case_b(_: &Ctx) -> Outcome {
    let a = 3.2e-4;
    let ts = TimeScales::from_factors(TAU, 4.0 * PI / 0.1, -a, 3.0 * a);
    let (rb, _) = case_relations(&ts).ok_or("no revival time")?;
    within("r_b", rb, 0.0, 1e-12)
}

fn timescales_case_c(_: &Ctx) -> Outcome {
    let beta = 0.02;
    let ts = TimeScales::from_factors(TAU, 4.0 * PI / 10.0, -beta, -beta);
    let (_, rc) = case_relations(&ts).ok_or("no revival time")?;
    within("r_c", rc, 0.0, 1e-12)
}

fn timescales_case_a(ctx: &Ctx) -> Outcome {
    let p = ResonanceParams { omega: 2.0, zeta: 0.0, lambda: 0.3, ..Default::default() };
    for ts in [
        closed_form_times(&p).map_err(|e| e.to_string())?,
        numeric_times_with(&p, ctx.step, ctx.tol).map_err(|e| e.to_string())?,
    ] {
        if ts.m_cl != 0.0 || ts.m_q != 0.0 || ts.tl_q != f64::INFINITY {
            return Err(format!("M = ({}, {}), T_Q = {}", num(ts.m_cl), num(ts.m_q), num(ts.tl_q)));
        }
    }
    Ok(())
}

fn timescales_hbar(_: &Ctx) -> Outcome {
    let p = ResonanceParams { omega: 1.0, zeta: 10.0, lambda: 0.01, ..Default::default() };
    let a = closed_form_times(&p).map_err(|e| e.to_string())?;
    let b = closed_form_times(&ResonanceParams { hbar: 2.0, ..p }).map_err(|e| e.to_string())?;
    within("beta ratio", a.beta / b.beta, 16.0, 1e-9)
}

fn timescales_agreement(ctx: &Ctx) -> Outcome {
    for zeta in [0.1, 10.0] {
        let p = ResonanceParams { omega: 1.0, zeta, lambda: 1e-3, ..Default::default() };
        let c = closed_form_times(&p).map_err(|e| e.to_string())?;
        let n = numeric_times_with(&p, ctx.step, ctx.tol).map_err(|e| e.to_string())?;
        within(&format!("M_cl at mu = {}", num(c.mu)), n.m_cl, c.m_cl, 1e-3 * c.m_cl.abs())?;
        within(&format!("M_Q at mu = {}", num(c.mu)), n.m_q, c.m_q, 1e-3 * c.m_q.abs())?;
    }
    Ok(())
}

fn unitarity(p: &ResonanceParams, cfg: &RunConfig, t_max: f64) -> Outcome {
    let dt = cfg.numeric.dt;
    let steps = ((t_max / dt).ceil() as usize).max(1);
    let trace = evolve(p, &cfg.packet, dt, steps, cfg.numeric.basis).map_err(|e| e.to_string())?;
    let m = trace.metadata.ok_or("trace carries no metadata")?;
    within("norm drift", m.norm_drift, 0.0, 1e-12)?;
    within("reversal error", m.reversal_error, 0.0, 1e-10)
}

fn dynamics_unitarity_default(_: &Ctx) -> Outcome {
    let p = ResonanceParams { omega: 1.0, zeta: 0.5, lambda: 0.05, ..Default::default() };
    unitarity(&p, &RunConfig::new(), 30.0)
}

fn dynamics_free(_: &Ctx) -> Outcome {
    let p = ResonanceParams { omega: 1.0, zeta: 0.5, ..Default::default() };
    let cfg = RunConfig::new();
    let trace = evolve(&p, &cfg.packet, 0.01, 3100, 64).map_err(|e| e.to_string())?;
    let ts = closed_form_times(&p).map_err(|e| e.to_string())?;
    let r = extract_times(&trace, &ts, 0.4).map_err(|e| e.to_string())?;
    within("classical period", r.measured_t_cl, TAU, 0.02 * TAU)?;
    let tq = r.measured_t_q.ok_or("no revival found")?;
    within("revival time", tq, 8.0 * PI, 0.05 * 8.0 * PI)
}

fn analysis_model(_: &Ctx) -> Outcome {
    // |sum_m w_m exp(-i (w1 m + w2 m^2) t)|^2 with Gaussian weights.
    let (w1, w2, sigma) = (1.0, 0.25, 2.0);
    let w: Vec<(f64, f64)> = (-20..=20)
        .map(|m| (f64::from(m), (-(f64::from(m).powi(2)) / (2.0 * sigma * sigma)).exp()))
        .collect();
    let z: f64 = w.iter().map(|p| p.1).sum();
    let trace = AutocorrTrace::sample(0.01, 3100, |t| {
        let (re, im) = w.iter().fold((0.0, 0.0), |(re, im), (m, wm)| {
            let ph = (w1 * m + w2 * m * m) * t;
            (re + wm * ph.cos() / z, im - wm * ph.sin() / z)
        });
        re * re + im * im
    });
    let ts = TimeScales::from_factors(TAU / w1, TAU / w2, 0.0, 0.0);
    let r = extract_times(&trace, &ts, 0.4).map_err(|e| e.to_string())?;
    within("classical period", r.measured_t_cl, TAU, 0.02 * TAU)?;
    within("revival time", r.measured_t_q.ok_or("no revival found")?, TAU / w2, 0.05 * TAU / w2)
}

fn config_round_trip(ctx: &Ctx) -> Outcome {
    let text = ctx.config.to_text();
    let back = RunConfig::parse(&text).map_err(|e| e.to_string())?;
    if back == ctx.config {
        Ok(())
    } else {
        Err("re-parsed effective config differs".into())
    }
}

fn config_spectrum(ctx: &Ctx) -> Outcome {
    let p = ctx.params.ok_or("no config")?;
    if p.zeta == 0.0 {
        return Ok(());
    }
    let range = i64::from(ctx.config.numeric.m_range).min(10);
    spectrum_matrix(&p, ctx.tol, range, ctx.config.numeric.basis, 1e-7)
}

fn config_unitarity(ctx: &Ctx) -> Outcome {
    let p = ctx.params.ok_or("no config")?;
    let n = &ctx.config.numeric;
    unitarity(&p, &ctx.config, n.dt * n.steps as f64)
}
