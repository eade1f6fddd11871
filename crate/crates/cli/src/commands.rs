use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use qrecur::config::Prediction;
use qrecur::fmt::num;
use qrecur::timescales::numeric_times_with;
use qrecur::{
    case_relations, closed_form_times, extract_times, resonance_center_mode, Error, ResonanceParams, RunConfig,
    TimeScales,
};
use rayon::prelude::*;

use crate::Failure;

/// First line of every CSV; the only line that differs between identical
/// runs.
fn timestamp_line() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    format!("# timestamp={secs}\n")
}

fn params_line(p: &ResonanceParams) -> String {
    format!(
        "# omega={} zeta={} lambda={} V={} N={} M={} hbar={} H0={} I0={}\n",
        num(p.omega),
        num(p.zeta),
        num(p.lambda),
        num(p.v),
        p.n,
        p.m.map_or_else(|| "none".into(), |m| m.to_string()),
        num(p.hbar),
        num(p.h0),
        num(p.i0)
    )
}

/// Creates the output directory and writes the effective configuration.
fn prepare(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = PathBuf::from(&cfg.out);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("effective.conf"), cfg.to_text())?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    Ok(path)
}

/// Time-scale fields followed by the two case residuals.
fn fields(ts: &TimeScales) -> Vec<String> {
    let mut f: Vec<String> = ts.csv_fields().split(',').map(String::from).collect();
    match case_relations(ts) {
        Some((rb, rc)) => f.extend([num(rb), num(rc)]),
        None => f.extend([String::new(), String::new()]),
    }
    f
}

fn predicted(cfg: &RunConfig, p: &ResonanceParams) -> qrecur::Result<TimeScales> {
    match cfg.predict {
        Prediction::Numeric => numeric_times_with(p, cfg.numeric.step, cfg.numeric.tol),
        Prediction::ClosedForm => closed_form_times(p),
        Prediction::Center => resonance_center_mode(p)
            .time_scales()
            .ok_or_else(|| Error::UnsupportedRegime("no harmonic well: zeta lambda V must be positive".into())),
    }
}

pub fn times(cfg: &RunConfig) -> Result<(), Failure> {
    let p = &cfg.params;
    let closed = closed_form_times(p)?;
    let numeric = numeric_times_with(p, cfg.numeric.step, cfg.numeric.tol)?;
    let dir = prepare(cfg)?;

    let names: Vec<&str> = TimeScales::CSV_HEADER.split(',').chain(["r_b", "r_c"]).collect();
    let (a, b) = (fields(&closed), fields(&numeric));
    println!("{:<9} {:>24} {:>24}", "", "closed_form", "numeric");
    let dash = |s: &str| if s.is_empty() { "-".to_string() } else { s.to_string() };
    for (i, name) in names.iter().enumerate() {
        println!("{:<9} {:>24} {:>24}", name, dash(&a[i]), dash(&b[i]));
    }

    let mut csv = timestamp_line();
    csv.push_str(&params_line(p));
    let _ = writeln!(csv, "variant,{}", names.join(","));
    let _ = writeln!(csv, "closed_form,{}", a.join(","));
    let _ = writeln!(csv, "numeric,{}", b.join(","));
    let path = write(&dir, "times.csv", csv)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn spectrum(cfg: &RunConfig) -> Result<(), Failure> {
    let s = qrecur::spectrum::build_spectrum_with(&cfg.params, cfg.numeric.m_range, cfg.numeric.tol)?;
    let dir = prepare(cfg)?;
    let mut bytes = timestamp_line().into_bytes();
    s.write_csv(&mut bytes)?;
    let path = write(&dir, "spectrum.csv", bytes)?;
    let unresolved = s.failures().count();
    println!(
        "{} levels, q = {}, nu0 = {}, {} unresolved",
        s.entries.len(),
        num(s.q),
        num(s.nu0),
        unresolved
    );
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn evolve(cfg: &RunConfig) -> Result<(), Failure> {
    let n = &cfg.numeric;
    let trace = qrecur::evolve(&cfg.params, &cfg.packet, n.dt, n.steps, n.basis)?;
    let dir = prepare(cfg)?;
    let mut bytes = timestamp_line().into_bytes();
    trace.write_csv(&mut bytes)?;
    let path = write(&dir, "trace.csv", bytes)?;
    eprintln!("wrote {}", path.display());
    if let Some(m) = &trace.metadata {
        println!("norm drift {}, reversal error {}", num(m.norm_drift), num(m.reversal_error));
    }

    let prediction = predicted(cfg, &cfg.params)?;
    let report = extract_times(&trace, &prediction, n.threshold)?;
    let path = write(&dir, "report.json", report.to_json() + "\n")?;
    println!(
        "T_cl measured {} predicted {} (deviation {})",
        num(report.measured_t_cl),
        num(prediction.tl_cl),
        num(report.deviations.t_cl)
    );
    match report.measured_t_q {
        Some(t) => println!("T_Q measured {} predicted {}", num(t), num(prediction.tl_q)),
        None => println!("T_Q not resolved (predicted {})", num(prediction.tl_q)),
    }
    if let Some(pl) = report.plateau {
        println!("collapse plateau {}", num(pl));
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn error_tag(e: &Error) -> &'static str {
    match e {
        Error::InputShape(_) => "input_shape",
        Error::Range(_) => "range",
        Error::Parse { .. } => "parse",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::NumericalQuality { .. } => "numerical_quality",
        Error::BranchDegeneracy { .. } => "branch_degeneracy",
        Error::Resource(_) => "resource",
        Error::UnsupportedRegime(_) => "unsupported_regime",
        Error::BasisSize { .. } => "basis_size",
        Error::Stencil { .. } => "stencil",
        Error::Unresolved(_) => "unresolved",
        Error::Config(_) => "config",
    }
}

const SWEEP_INPUTS: &str = "point,omega,zeta,lambda,V,N,hbar,H0,I0";

pub fn sweep(cfg: &RunConfig, workers: usize) -> Result<(), Failure> {
    let axes = cfg.sweep_axes()?;
    let mut grid = vec![cfg.params];
    for axis in &axes {
        let values = axis.values();
        let mut next = Vec::with_capacity(grid.len() * values.len());
        for p in &grid {
            for &v in &values {
                let q = p
                    .with(&axis.param, v)
                    .and_then(|q| q.validate().map(|()| q))
                    .map_err(|e| Error::Config(format!("sweep point {}={}: {e}", axis.param, num(v))))?;
                next.push(q);
            }
        }
        grid = next;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Resource(format!("worker pool: {e}")))?;
    let rows: Vec<qrecur::Result<TimeScales>> = pool.install(|| grid.par_iter().map(|p| predicted(cfg, p)).collect());

    let dir = prepare(cfg)?;
    let mut csv = timestamp_line();
    let _ = writeln!(
        csv,
        "# predict={} step={} tol={}",
        cfg.predict.as_str(),
        num(cfg.numeric.step),
        num(cfg.numeric.tol)
    );
    for (i, a) in axes.iter().enumerate() {
        let _ = writeln!(
            csv,
            "# sweep{}: {} from {} to {}, {} points, {}",
            i + 1,
            a.param,
            num(a.min),
            num(a.max),
            a.count,
            a.scale.as_str()
        );
    }
    let _ = writeln!(csv, "{SWEEP_INPUTS},{},r_b,r_c,status", TimeScales::CSV_HEADER);
    let width = TimeScales::CSV_HEADER.split(',').count() + 2;
    let mut first_error = None;
    let mut failed = 0;
    for (i, (p, row)) in grid.iter().zip(&rows).enumerate() {
        let _ = write!(
            csv,
            "{i},{},{},{},{},{},{},{},{},",
            num(p.omega),
            num(p.zeta),
            num(p.lambda),
            num(p.v),
            p.n,
            num(p.hbar),
            num(p.h0),
            num(p.i0)
        );
        match row {
            Ok(ts) => {
                let _ = writeln!(csv, "{},ok", fields(ts).join(","));
            }
            Err(e) => {
                failed += 1;
                first_error.get_or_insert_with(|| e.clone());
                let blanks = vec!["nan"; width - 5];
                let _ = writeln!(csv, "{},,,,,,{}", blanks.join(","), error_tag(e));
            }
        }
    }
    let path = write(&dir, "sweep.csv", csv)?;
    println!("{} grid points, {} failed", grid.len(), failed);
    eprintln!("wrote {}", path.display());
    match first_error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
