use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use holowave::energies::{drift_scan as run_drift_scan, DriftReport};
use holowave::evolution::{diagnostics, DiagnosticsRecord};
use holowave::experiments::{
    conservation_report, dispersion_fit, lifespan_scan as run_lifespan_scan, run_with, Breach, ConservationReport,
    DispersionFit, DispersionFlow, LifespanOutcome,
};
use holowave::fit::loglog_slope;
use holowave::io::{diagnostics_row, load_snapshot, save_snapshot, Snapshot, DIAGNOSTICS_HEADER};
use holowave::normal_form::{cubic_residual, verify_symbol_systems, SymbolSystemReport};
use holowave::{Domain, Error, Params, WaveState};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Breach(String),
    Io(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Breach(_) => 4,
            CliError::Io(_) | CliError::Other(_) => 1,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Breach(m) => write!(f, "constraint breach: {m}"),
            CliError::Io(m) => write!(f, "i/o: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite(_) => CliError::Numeric(e.to_string()),
            Error::Cusp { .. } | Error::TaylorSign { .. } => CliError::Breach(e.to_string()),
            Error::Io(_) | Error::Snapshot(_) => CliError::Io(e.to_string()),
            Error::InvalidDomain(_) | Error::InvalidParam(_) | Error::Holomorphy { .. } => CliError::Config(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes `value` as `out/name.json` and echoes it to stdout.
fn emit<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    let path = out.join(format!("{name}.json"));
    std::fs::write(&path, format!("{text}\n")).map_err(io_err(&path))?;
    // a closed stdout (e.g. piped into head) must not abort the run
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn verdict(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    dt: f64,
    steps: usize,
    t_final: f64,
    records: usize,
    breach: Option<Breach>,
    conservation: ConservationReport,
}

pub fn simulate(cfg: &RunConfig, base: &Path, out: &Path) -> Result<ExitCode, CliError> {
    let p = cfg.params().map_err(CliError::Config)?;
    let s0 = cfg.initial_state(base).map_err(CliError::Config)?;
    let defect = s0.holomorphy_defect();
    if defect > p.tol.holo_tol {
        return Err(CliError::Config(format!("initial data not holomorphic: defect {defect:e}")));
    }
    let csv_path = out.join("diagnostics.csv");
    let mut csv = BufWriter::new(File::create(&csv_path).map_err(io_err(&csv_path))?);
    writeln!(csv, "{DIAGNOSTICS_HEADER}").map_err(io_err(&csv_path))?;
    let snap = |s: &WaveState| Snapshot { state: s.clone(), g: p.g, c: p.c };
    let mut index = 0usize;
    let every = cfg.run.snapshot_every;
    let result = run_with(&s0, &p, &cfg.run.settings(), |s, rec| {
        writeln!(csv, "{}", diagnostics_row(rec))?;
        if every > 0 && index % every == 0 {
            save_snapshot(&out.join(format!("snapshot_{index:06}.vwav")), &snap(s))?;
        }
        index += 1;
        Ok(())
    });
    csv.flush().map_err(io_err(&csv_path))?;
    let outcome = result?;
    save_snapshot(&out.join("final.vwav"), &snap(&outcome.state))?;
    let summary = SimulateSummary {
        dt: outcome.dt,
        steps: outcome.steps,
        t_final: outcome.state.t,
        records: outcome.records.len(),
        breach: outcome.breach,
        conservation: conservation_report(&outcome.records, 1e-300),
    };
    emit(out, "simulate", &summary)?;
    if let Some(b) = outcome.breach {
        emit(out, "breach", &b)?;
        return Err(CliError::Breach(format!("{:?} margin {:e} at t = {}", b.kind, b.margin, b.t)));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct DispersionReport {
    flow: DispersionFlow,
    tolerance: f64,
    fits: Vec<DispersionFit>,
    max_rel_error: f64,
    pass: bool,
}

pub fn dispersion(cfg: &RunConfig, out: &Path) -> Result<ExitCode, CliError> {
    let d = &cfg.dispersion;
    let dom = cfg.domain().map_err(CliError::Config)?;
    let cases = if d.cases.is_empty() { vec![[cfg.params.g, cfg.params.c]] } else { d.cases.clone() };
    let mut fits = Vec::new();
    for [g, c] in cases {
        let p = Params::with_tolerances(g, c, cfg.tolerances)?;
        for &k in &d.ks {
            if k < dom.kmin() + 1 {
                return Err(CliError::Config(format!("k = {k} is not resolved on N = {}", dom.n())));
            }
            fits.push(dispersion_fit(&dom, k, &p, d.flow, d.eps, d.dt, d.steps)?);
        }
    }
    let max_rel_error = fits.iter().map(|f| f.rel_error).fold(0.0, f64::max);
    let tolerance = d.tolerance();
    let pass = max_rel_error <= tolerance;
    emit(out, "dispersion", &DispersionReport { flow: d.flow, tolerance, fits, max_rel_error, pass })?;
    Ok(verdict(pass))
}

#[derive(Serialize)]
struct Lane {
    g: f64,
    c: f64,
    systems: Vec<SymbolSystemReport>,
    residual_eps: Vec<f64>,
    residual_w: Vec<f64>,
    residual_q: Vec<f64>,
    slope_w: f64,
    slope_q: f64,
    pass: bool,
}

#[derive(Serialize)]
struct NormalFormReport {
    seed: u64,
    residual_tol: f64,
    slope_target: f64,
    slope_tol: f64,
    lanes: Vec<Lane>,
    pass: bool,
}

/// Fixed two-mode profile for the cubic residual.
fn residual_state(dom: &Domain, eps: f64) -> holowave::Result<WaveState> {
    WaveState::from_modes(
        dom,
        &[(-1, C64::new(eps, 0.0)), (-2, C64::new(0.0, 0.5 * eps))],
        &[(-1, C64::new(0.7 * eps, 0.0)), (-3, C64::new(-0.3 * eps, 0.0))],
    )
}

pub fn normalform_verify(cfg: &RunConfig, out: &Path) -> Result<ExitCode, CliError> {
    let nf = &cfg.normalform;
    let dom = cfg.domain().map_err(CliError::Config)?;
    let mut params = vec![(cfg.params.g, cfg.params.c)];
    if nf.gravity_lane && cfg.params.c != 0.0 {
        params.push((cfg.params.g, 0.0));
    }
    let mut lanes = Vec::new();
    for (g, c) in params {
        let p = Params::with_tolerances(g, c, cfg.tolerances)?;
        let systems = verify_symbol_systems(&p, nf.samples, cfg.seed)?;
        let mut rw = Vec::new();
        let mut rq = Vec::new();
        for &e in &nf.eps {
            let (a, b) = cubic_residual(&residual_state(&dom, e)?, &p)?;
            rw.push(a);
            rq.push(b);
        }
        let slope_w = loglog_slope(&nf.eps, &rw)?;
        let slope_q = loglog_slope(&nf.eps, &rq)?;
        let systems_ok = systems.iter().all(|r| r.max_residual <= nf.residual_tol * (1.0 + r.max_coefficient));
        let slopes_ok = [slope_w, slope_q].iter().all(|s| (s - nf.slope_target).abs() <= nf.slope_tol);
        lanes.push(Lane {
            g,
            c,
            systems,
            residual_eps: nf.eps.clone(),
            residual_w: rw,
            residual_q: rq,
            slope_w,
            slope_q,
            pass: systems_ok && slopes_ok,
        });
    }
    let pass = lanes.iter().all(|l| l.pass);
    let report = NormalFormReport {
        seed: cfg.seed,
        residual_tol: nf.residual_tol,
        slope_target: nf.slope_target,
        slope_tol: nf.slope_tol,
        lanes,
        pass,
    };
    emit(out, "normalform_verify", &report)?;
    Ok(verdict(pass))
}

#[derive(Serialize)]
struct LifespanReport {
    g: f64,
    c: f64,
    small_data_limit: f64,
    outcomes: Vec<LifespanOutcome>,
    pass: bool,
}

pub fn lifespan_scan(cfg: &RunConfig, out: &Path) -> Result<ExitCode, CliError> {
    let l = &cfg.lifespan;
    let p = cfg.params().map_err(CliError::Config)?;
    let outcomes = run_lifespan_scan(&l.eps, &p, &l.settings)?;
    // large data may breach; only the small-data runs decide
    let pass = outcomes.iter().filter(|o| o.eps <= l.small_data_limit).all(|o| o.pass);
    emit(out, "lifespan_scan", &LifespanReport { g: p.g, c: p.c, small_data_limit: l.small_data_limit, outcomes, pass })?;
    Ok(verdict(pass))
}

#[derive(Serialize)]
struct DriftScanReport {
    report: DriftReport,
    slope_mod: [f64; 2],
    slope_raw: [f64; 2],
    pass: bool,
}

pub fn drift_scan(cfg: &RunConfig, out: &Path) -> Result<ExitCode, CliError> {
    let d = &cfg.drift;
    let p = cfg.params().map_err(CliError::Config)?;
    let report = run_drift_scan(&d.profile, &d.eps, d.n, d.t_end, d.dt, &p)?;
    let pass = report.aborted.is_empty()
        && (report.slope_mod - d.slope_mod[0]).abs() <= d.slope_mod[1]
        && (report.slope_raw - d.slope_raw[0]).abs() <= d.slope_raw[1];
    emit(out, "drift_scan", &DriftScanReport { report, slope_mod: d.slope_mod, slope_raw: d.slope_raw, pass })?;
    Ok(verdict(pass))
}

#[derive(Serialize)]
struct DiagnoseReport {
    n: usize,
    length: f64,
    g: f64,
    c: f64,
    record: DiagnosticsRecord,
    csv_header: &'static str,
    csv_row: String,
}

pub fn diagnose(cfg: &RunConfig, snapshot: &Path, out: &Path) -> Result<ExitCode, CliError> {
    let snap = load_snapshot(snapshot).map_err(|e| CliError::Io(format!("{}: {e}", snapshot.display())))?;
    let p = Params::with_tolerances(snap.g, snap.c, cfg.tolerances)?;
    let record = diagnostics(&snap.state, &p)?;
    let dom = snap.state.domain();
    let report = DiagnoseReport {
        n: dom.n(),
        length: dom.length(),
        g: snap.g,
        c: snap.c,
        record,
        csv_header: DIAGNOSTICS_HEADER,
        csv_row: diagnostics_row(&record),
    };
    emit(out, "diagnose", &report)?;
    Ok(ExitCode::SUCCESS)
}
