//! Drivers shared by the command line and the acceptance suite: a
//! diagnosed time loop, conservation and lifespan runs, the dispersion fit
//! and the tangent-flow test.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{
    cfl_limit, diagnostics, dispersion_roots, rhs_full, rhs_linear, rk4_pair, step, DiagnosticsRecord, ExpFilter, Formulation,
    StepOptions,
};
use crate::fit::loglog_slope;
use crate::linearized::{lockstep_step, Background, LinearizedState};
use crate::spectral::{Domain, SpectralField};
use crate::wavestate::{linear_wave, Params, WaveState};

/// Random holomorphic field with modes `-kmax..=-1` (and the mean when
/// `mean`), amplitude `eps/k²` on mode `-k`.
pub fn random_holomorphic(dom: &Domain, rng: &mut ChaCha8Rng, eps: f64, kmax: i64, mean: bool) -> SpectralField {
    let mut f = dom.zeros();
    for j in (if mean { 0 } else { 1 })..=kmax {
        let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        f.set(-j, a * eps / (j.max(1) * j.max(1)) as f64);
    }
    f
}

/// Time-loop settings for [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub t_end: f64,
    /// Fixed step; `None` uses `c_cfl` times the CFL bound at `t = 0`.
    pub dt: Option<f64>,
    pub c_cfl: f64,
    /// Diagnostics every this many steps (the first and last are always taken).
    pub every: usize,
    /// A cusp margin `min|1+𝐖|` at or below this is a breach.
    pub cusp_delta: f64,
    /// A Taylor margin `min(g + a̲)` at or below this is a breach.
    pub taylor_delta: f64,
    pub step: StepOptions,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            t_end: 1.0,
            dt: None,
            c_cfl: 0.5,
            every: 10,
            cusp_delta: 1e-6,
            taylor_delta: 0.0,
            step: StepOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreachKind {
    Cusp,
    Taylor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breach {
    pub kind: BreachKind,
    pub t: f64,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: WaveState,
    pub records: Vec<DiagnosticsRecord>,
    pub breach: Option<Breach>,
    pub dt: f64,
    pub steps: usize,
}

fn check(s: &WaveState, p: &Params, set: &RunSettings) -> Result<std::result::Result<DiagnosticsRecord, Breach>> {
    let rec = match diagnostics(s, p) {
        Ok(r) => r,
        Err(Error::Cusp { min, .. }) => return Ok(Err(Breach { kind: BreachKind::Cusp, t: s.t, margin: min })),
        Err(e) => return Err(e),
    };
    if rec.cusp_margin <= set.cusp_delta {
        return Ok(Err(Breach { kind: BreachKind::Cusp, t: s.t, margin: rec.cusp_margin }));
    }
    if rec.taylor_margin <= set.taylor_delta {
        return Ok(Err(Breach { kind: BreachKind::Taylor, t: s.t, margin: rec.taylor_margin }));
    }
    Ok(Ok(rec))
}

/// Step size and count covering `[0, t_end]` exactly.
pub fn plan_steps(s0: &WaveState, p: &Params, set: &RunSettings) -> Result<(f64, usize)> {
    if !(set.t_end >= 0.0 && set.t_end.is_finite()) {
        return Err(Error::InvalidParam(format!("t_end = {} must be nonnegative", set.t_end)));
    }
    let target = match set.dt {
        Some(dt) if dt > 0.0 && dt.is_finite() => dt,
        Some(dt) => return Err(Error::InvalidParam(format!("dt = {dt} must be positive"))),
        None => cfl_limit(s0, p, set.c_cfl)?,
    };
    let steps = (set.t_end / target).ceil().max(0.0) as usize;
    Ok(if steps == 0 { (target, 0) } else { (set.t_end / steps as f64, steps) })
}

/// Advances `s0` to `t_end`, recording diagnostics and stopping at the
/// first cusp or Taylor breach.
pub fn run(s0: &WaveState, p: &Params, set: &RunSettings) -> Result<RunOutcome> {
    run_with(s0, p, set, |_, _| Ok(()))
}

/// [`run`] calling `hook` at every recorded diagnostics step.
pub fn run_with(
    s0: &WaveState,
    p: &Params,
    set: &RunSettings,
    mut hook: impl FnMut(&WaveState, &DiagnosticsRecord) -> Result<()>,
) -> Result<RunOutcome> {
    let mut records = Vec::new();
    let first = check(s0, p, set)?;
    let rec0 = match first {
        Ok(r) => r,
        Err(b) => return Ok(RunOutcome { state: s0.clone(), records, breach: Some(b), dt: 0.0, steps: 0 }),
    };
    hook(s0, &rec0)?;
    records.push(rec0);
    let (dt, steps) = plan_steps(s0, p, set)?;
    let every = set.every.max(1);
    let mut s = s0.clone();
    for i in 1..=steps {
        s = step(&s, dt, p, &set.step)?;
        if i == steps {
            s.t = s0.t + set.t_end;
        }
        if i % every == 0 || i == steps {
            match check(&s, p, set)? {
                Ok(r) => {
                    hook(&s, &r)?;
                    records.push(r);
                }
                Err(b) => return Ok(RunOutcome { state: s, records, breach: Some(b), dt, steps: i }),
            }
        }
    }
    Ok(RunOutcome { state: s, records, breach: None, dt, steps })
}

/// Sup-in-time relative drifts along a diagnosed run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub energy: f64,
    pub momentum: f64,
    pub energy_printed: f64,
    pub momentum_printed: f64,
    pub holo_defect: f64,
}

pub fn conservation_report(records: &[DiagnosticsRecord], floor: f64) -> ConservationReport {
    let rel = |f: &dyn Fn(&DiagnosticsRecord) -> f64| -> f64 {
        let Some(r0) = records.first() else { return 0.0 };
        let e0 = f(r0);
        records.iter().map(|r| (f(r) - e0).abs()).fold(0.0, f64::max) / e0.abs().max(floor)
    };
    ConservationReport {
        energy: rel(&|r| r.energy),
        momentum: rel(&|r| r.momentum),
        energy_printed: rel(&|r| r.energy_printed),
        momentum_printed: rel(&|r| r.momentum_printed),
        holo_defect: records.iter().map(|r| r.holo_defect).fold(0.0, f64::max),
    }
}

/// Where the mode history for the dispersion fit comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionFlow {
    /// RK4 on the linear system.
    #[default]
    Linear,
    /// RK4 on the full equations.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionFit {
    pub k: i64,
    pub g: f64,
    pub c: f64,
    /// Fitted frequencies, descending.
    pub fitted: [f64; 2],
    /// `(τ₊, τ₋)` from the dispersion relation.
    pub exact: [f64; 2],
    pub rel_error: f64,
}

/// Frequencies `τ` of `x_j = A e^{iτ₁ jh} + B e^{iτ₂ jh}` by least-squares
/// linear prediction `x_{j+2} = a₁x_{j+1} + a₀x_j`; descending.
pub fn two_frequency_fit(x: &[C64], h: f64) -> Result<[f64; 2]> {
    if x.len() < 5 {
        return Err(Error::Fit(format!("need at least 5 samples, got {}", x.len())));
    }
    let m = x.len() - 2;
    let a = DMatrix::from_fn(m, 2, |i, j| if j == 0 { x[i + 1] } else { x[i] });
    let b = DVector::from_fn(m, |i, _| x[i + 2]);
    let sol = a.svd(true, true).solve(&b, 1e-300).map_err(|e| Error::Fit(e.to_string()))?;
    let (a1, a0) = (sol[0], sol[1]);
    let disc = (a1 * a1 + a0 * 4.0).sqrt();
    let z = [(a1 + disc) * 0.5, (a1 - disc) * 0.5];
    let mut tau = [z[0].arg() / h, z[1].arg() / h];
    if !(tau[0].is_finite() && tau[1].is_finite()) {
        return Err(Error::Fit("non-finite frequencies".into()));
    }
    tau.sort_by(|a, b| b.total_cmp(a));
    Ok(tau)
}

/// Evolves `W = ε e^{ikα}, Q = 0`, which excites both branches, and fits
/// the two frequencies of `Ŵ(k, t)`.
pub fn dispersion_fit(
    dom: &Domain,
    k: i64,
    p: &Params,
    flow: DispersionFlow,
    eps: f64,
    dt: f64,
    steps: usize,
) -> Result<DispersionFit> {
    let (tp, tm) = dispersion_roots(dom, k, p)?;
    let s0 = WaveState::from_modes(dom, &[(k, C64::new(eps, 0.0))], &[])?;
    let mut u = (s0.w, s0.q);
    let mut xs = vec![u.0.coeff(k)];
    for _ in 0..steps {
        u = rk4_pair(&u, dt, |v| {
            let st = WaveState { w: v.0.clone(), q: v.1.clone(), t: 0.0 };
            let r = match flow {
                DispersionFlow::Linear => rhs_linear(&st, p),
                DispersionFlow::Full => rhs_full(&st, p)?,
            };
            Ok((r.dw, r.dq))
        })?;
        xs.push(u.0.coeff(k));
    }
    let fitted = two_frequency_fit(&xs, dt)?;
    let exact = [tp.max(tm), tp.min(tm)];
    let rel_error = fitted.iter().zip(&exact).map(|(f, e)| (f - e).abs() / e.abs()).fold(0.0, f64::max);
    Ok(DispersionFit { k, g: p.g, c: p.c, fitted, exact, rel_error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentReport {
    pub hs: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

/// Central finite difference of the nonlinear flow with perturbation `h`
/// against the lockstep linearized flow, in `L²` after `steps` steps.
pub fn tangent_error(s0: &WaveState, dw: &SpectralField, dq: &SpectralField, h: f64, p: &Params, dt: f64, steps: usize) -> Result<f64> {
    let opts = StepOptions::default();
    let mut sp = WaveState { w: &s0.w + &(dw * h), q: &s0.q + &(dq * h), t: s0.t };
    let mut sm = WaveState { w: &s0.w - &(dw * h), q: &s0.q - &(dq * h), t: s0.t };
    let mut s = s0.clone();
    let mut l = LinearizedState::from_tangent(&Background::new(s0.clone(), p)?, dw, dq);
    for _ in 0..steps {
        sp = step(&sp, dt, p, &opts)?;
        sm = step(&sm, dt, p, &opts)?;
        (s, l) = lockstep_step(&s, &l, dt, p)?;
    }
    let fw = (&sp.w - &sm.w) * (0.5 / h);
    let fq = (&sp.q - &sm.q) * (0.5 / h);
    let fl = LinearizedState::from_tangent(&Background::new(s, p)?, &fw, &fq);
    Ok((&fl.w - &l.w).l2_norm() + (&fl.r - &l.r).l2_norm())
}

/// [`tangent_error`] on a seeded random background of size 0.05 and
/// unit-size direction, `N = 64`, `dt = 0.01`, 50 steps.
pub fn tangent_test(p: &Params, seed: u64, hs: &[f64]) -> Result<TangentReport> {
    let dom = Domain::periodic(64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s0 = WaveState {
        w: random_holomorphic(&dom, &mut rng, 0.05, 4, false),
        q: random_holomorphic(&dom, &mut rng, 0.05, 4, true),
        t: 0.0,
    };
    let dw = random_holomorphic(&dom, &mut rng, 1.0, 4, false);
    let dq = random_holomorphic(&dom, &mut rng, 1.0, 4, true);
    let errors = hs.iter().map(|&h| tangent_error(&s0, &dw, &dq, h, p, 0.01, 50)).collect::<Result<Vec<_>>>()?;
    let slope = loglog_slope(hs, &errors)?;
    Ok(TangentReport { hs: hs.to_vec(), errors, slope })
}

/// Lifespan run settings: a single linear wave on mode `-1`, horizon
/// `κ ε⁻²`, checked every `every` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LifespanSettings {
    pub n_grid: usize,
    pub kappa: f64,
    pub c_cfl: f64,
    pub every: usize,
    /// Allowed growth of `‖(𝐖,R)‖_{𝓗̇₁}` relative to `t = 0`.
    pub growth_limit: f64,
    /// Required Taylor margin as a fraction of `g`.
    pub taylor_fraction: f64,
    pub formulation: Formulation,
    pub filter: Option<ExpFilter>,
}

impl Default for LifespanSettings {
    fn default() -> Self {
        LifespanSettings {
            n_grid: 128,
            kappa: 1.0,
            c_cfl: 0.5,
            every: 20,
            growth_limit: 2.0,
            taylor_fraction: 0.5,
            formulation: Formulation::RealForm,
            filter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanOutcome {
    pub eps: f64,
    pub t_target: f64,
    pub t_reached: f64,
    pub max_growth: f64,
    pub min_taylor: f64,
    pub min_cusp: f64,
    /// Why the run stopped early, if it did.
    pub breach: Option<String>,
    pub pass: bool,
}

pub fn lifespan_run(eps: f64, p: &Params, set: &LifespanSettings) -> Result<LifespanOutcome> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParam(format!("eps = {eps} must be positive")));
    }
    let dom = Domain::periodic(set.n_grid)?;
    let s0 = linear_wave(&dom, p, &[(-1, C64::new(eps, 0.0))])?;
    let t_target = set.kappa / (eps * eps);
    let rs = RunSettings { t_end: t_target, dt: None, c_cfl: set.c_cfl, ..RunSettings::default() };
    let (dt, steps) = plan_steps(&s0, p, &rs)?;
    let opts = StepOptions { formulation: set.formulation, filter: set.filter, ..StepOptions::default() };
    let rec0 = diagnostics(&s0, p)?;
    let mut out = LifespanOutcome {
        eps,
        t_target,
        t_reached: 0.0,
        max_growth: 1.0,
        min_taylor: rec0.taylor_margin,
        min_cusp: rec0.cusp_margin,
        breach: None,
        pass: false,
    };
    let every = set.every.max(1);
    let mut s = s0;
    for i in 1..=steps {
        s = match step(&s, dt, p, &opts) {
            Ok(s) => s,
            Err(e) => {
                out.breach = Some(format!("step failed at t = {:.3}: {e}", i as f64 * dt));
                return Ok(out);
            }
        };
        if i % every != 0 && i != steps {
            continue;
        }
        out.t_reached = i as f64 * dt;
        let rec = match diagnostics(&s, p) {
            Ok(r) => r,
            Err(e) => {
                out.breach = Some(format!("diagnostics failed at t = {:.3}: {e}", out.t_reached));
                return Ok(out);
            }
        };
        out.max_growth = out.max_growth.max(rec.h1 / rec0.h1);
        out.min_taylor = out.min_taylor.min(rec.taylor_margin);
        out.min_cusp = out.min_cusp.min(rec.cusp_margin);
        if out.max_growth > set.growth_limit {
            out.breach = Some(format!("norm growth {:.3} at t = {:.3}", out.max_growth, out.t_reached));
            return Ok(out);
        }
        if out.min_taylor < set.taylor_fraction * p.g {
            out.breach = Some(format!("Taylor margin {:.4} at t = {:.3}", out.min_taylor, out.t_reached));
            return Ok(out);
        }
    }
    out.pass = true;
    Ok(out)
}

/// Runs every amplitude in parallel; results keep the input order.
pub fn lifespan_scan(eps_list: &[f64], p: &Params, set: &LifespanSettings) -> Result<Vec<LifespanOutcome>> {
    eps_list.par_iter().map(|&e| lifespan_run(e, p, set)).collect()
}
