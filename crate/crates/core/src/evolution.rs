//! Right-hand sides (complex, differentiated and real form), time stepping,
//! conserved quantities and diagnostics.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Domain, Grid, SpectralField, I};
use crate::wavestate::{
    control_norms, frequency_shift, m_fields, sobolev_norms, to_diagonal, transport_coefficients, ControlNorms,
    DiagonalState, Params, WaveState,
};

/// Time derivatives of `(W, Q)`.
#[derive(Debug, Clone)]
pub struct RhsFull {
    pub dw: SpectralField,
    pub dq: SpectralField,
}

/// Final projection applied to right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Drop positive modes, keep the zero mode whole.
    #[default]
    Holomorphic,
    /// No projection; positive modes are left for defect monitoring.
    None,
}

fn finish(f: SpectralField, proj: Projection) -> SpectralField {
    match proj {
        Projection::Holomorphic => f.holomorphic_part(),
        Projection::None => f,
    }
}

pub fn rhs_full(s: &WaveState, p: &Params) -> Result<RhsFull> {
    rhs_full_with(s, p, Projection::Holomorphic)
}

pub fn rhs_full_with(s: &WaveState, p: &Params, proj: Projection) -> Result<RhsFull> {
    let c = p.c;
    let wg = s.w.to_grid();
    let wa = s.w.derivative().to_grid();
    wa.check_cusp(p.tol.cusp_floor)?;
    let qg = s.q.to_grid();
    let qa = s.q.derivative().to_grid();
    let one_plus = &wa + 1.0;
    let jac = one_plus.abs2();
    let inv = one_plus.recip();
    let inv_bar = inv.conj();

    let f = ((&qa - qa.conj()) / &jac).p();
    let f1 = (&wg * &inv_bar + wg.conj() * &inv).p();
    let t1 = (&wg * qa.conj() * &inv_bar - wg.conj() * &qa * &inv).p();
    let fu = &f - &f1 * (I * (0.5 * c));
    let kinetic = (qa.abs2() / &jac).p();

    let dw = -(&one_plus * &fu + &wg * (I * (0.5 * c)));
    let dq = -(&wg * (-I * p.g) + &fu * &qa + &qg * (I * c) + kinetic - &t1 * (I * (0.5 * c)));
    let out = RhsFull { dw: finish(dw.to_spectral(), proj), dq: finish(dq.to_spectral(), proj) };
    if !out.dw.is_finite() || !out.dq.is_finite() {
        return Err(Error::NonFinite("rhs_full"));
    }
    Ok(out)
}

/// The linear flow `W_t = -Q_α`, `Q_t = igW - icQ`.
pub fn rhs_linear(s: &WaveState, p: &Params) -> RhsFull {
    RhsFull { dw: -s.q.derivative(), dq: s.w.scale(I * p.g) - s.q.scale(I * p.c) }
}

/// Time derivatives of `(𝐖, R)` from the differentiated system.
pub fn rhs_diff(d: &DiagonalState, p: &Params) -> Result<(SpectralField, SpectralField)> {
    let c = p.c;
    let (_, _, bu) = transport_coefficients(d, p)?;
    let (a, _, _, n) = frequency_shift(d, p);
    let (_, _, mu) = m_fields(d, p);
    let wd = d.wd.to_grid();
    let wdd = d.wd.derivative().to_grid();
    let rg = d.r.to_grid();
    let ra = d.r.derivative().to_grid();
    let bug = bu.to_grid().re();
    let one_plus = &wd + 1.0;
    let inv = one_plus.recip();
    let dwd = -(&bug * &wdd) - &one_plus * &ra * inv.conj() + &one_plus * mu.to_grid()
        + &wd * (&wd - wd.conj()) * (I * (0.5 * c));
    let dr = -(&bug * &ra) - &rg * (I * c) + (&wd * p.g - a.to_grid().re()) * &inv * I
        + (&rg * &wd + rg.conj() * &wd + n.to_grid()) * &inv * (I * (0.5 * c));
    Ok((dwd.to_spectral().holomorphic_part(), dr.to_spectral().holomorphic_part()))
}

/// Real unknowns: surface height `Y = Im W` and `Ψ = Re Q`.
#[derive(Debug, Clone)]
pub struct RealFormState {
    pub yh: SpectralField,
    pub psi: SpectralField,
    /// Mean of `Θ = Im Q`, which `Ψ` does not determine. It enters only
    /// through the `cΘ` term and is held fixed under real-form stepping.
    pub theta_mean: f64,
}

impl RealFormState {
    pub fn from_wave(s: &WaveState) -> Self {
        RealFormState { yh: s.w.im(), psi: s.q.re(), theta_mean: s.q.mean().im }
    }

    /// Holomorphic extension `W = (H + i)Y`, `Q = (1 - iH)Ψ + iΘ₀`. The
    /// horizontal mean of `W` is not carried and is supplied by the caller.
    pub fn to_wave(&self, w_re_mean: f64, t: f64) -> WaveState {
        let w = self.yh.hilbert() + self.yh.scale(I);
        let q = &self.psi - &self.psi.hilbert().scale(I);
        let w = w.with_mean(w.mean() + w_re_mean);
        let q = q.with_mean(q.mean() + C64::new(0.0, self.theta_mean));
        WaveState { w, q, t }
    }
}

fn real(f: &SpectralField) -> Grid {
    f.to_grid().re()
}

fn real_out(g: Grid) -> SpectralField {
    let f = g.re().to_spectral();
    let kmin = f.domain().kmin();
    let mut f = f;
    f.set(kmin, C64::new(0.0, 0.0));
    f
}

/// Real-variable evaluation of the same system, with `X = α + HY` and
/// `Θ = -HΨ`. Shares only the spectral layer with [`rhs_full`].
pub fn rhs_realform(r: &RealFormState, p: &Params) -> Result<(SpectralField, SpectralField)> {
    let c = p.c;
    let y = real(&r.yh);
    let ya = real(&r.yh.derivative());
    let xa = real(&r.yh.derivative().hilbert()) + 1.0;
    let theta_f = (-r.psi.hilbert()).with_mean(C64::new(r.theta_mean, 0.0));
    let th = real(&theta_f);
    let tha = real(&theta_f.derivative());
    let pa = real(&r.psi.derivative());
    let jac = &xa * &xa + &ya * &ya;
    if jac.values().iter().any(|z| !(z.re > 0.0)) {
        return Err(Error::Cusp { min: jac.values().iter().map(|z| z.re).fold(f64::INFINITY, f64::min).max(0.0).sqrt(), at: 0.0 });
    }
    let h_theta = real(&(&tha / &jac).to_spectral().hilbert());
    let yya_j = &y * &ya / &jac;
    let h_yya = real(&yya_j.to_spectral().hilbert());

    let dy = -(&h_theta * &ya) - &h_yya * &ya * c - &tha / &jac * &xa - &yya_j * &xa * c;
    let dpsi = -(&h_theta * &pa) + &tha * &tha / &jac - (&pa * &pa + &tha * &tha) / (&jac * 2.0) - &y * p.g
        - &h_yya * &pa * c
        + &th * c
        - &y / &jac * &xa * &pa * c;
    let (dy, dpsi) = (real_out(dy), real_out(dpsi));
    if !dy.is_finite() || !dpsi.is_finite() {
        return Err(Error::NonFinite("rhs_realform"));
    }
    Ok((dy, dpsi))
}

/// Roots `(τ₊, τ₋)` of `τ² + cτ + gξ = 0`, `ξ = 2πk/L ≤ 0`. Modes evolve as
/// `e^{iτt}`.
pub fn dispersion_roots(dom: &Domain, k: i64, p: &Params) -> Result<(f64, f64)> {
    if k > 0 {
        return Err(Error::InvalidParam(format!("dispersion needs k <= 0, got {k}")));
    }
    Ok(dispersion_roots_xi(dom.xi(k), p))
}

pub fn dispersion_roots_xi(xi: f64, p: &Params) -> (f64, f64) {
    let disc = (p.c * p.c - 4.0 * p.g * xi).sqrt();
    (0.5 * (-p.c + disc), 0.5 * (-p.c - disc))
}

/// Exact linear propagator on mode `k` over time `t`, acting on `(Ŵ, Q̂)`.
pub fn linear_propagator(dom: &Domain, k: i64, t: f64, p: &Params) -> [[C64; 2]; 2] {
    // the derivative annihilates the unpaired mode -N/2, so it sees ξ = 0
    let xi = if k == dom.kmin() { 0.0 } else { dom.xi(k) };
    // generator [[0, -iξ], [ig, -ic]], eigenvalues iτ with τ² + cτ + gξ = 0
    let a = [[C64::new(0.0, 0.0), -I * xi], [I * p.g, -I * p.c]];
    let disc = C64::new(p.c * p.c - 4.0 * p.g * xi, 0.0).sqrt();
    let l1 = I * 0.5 * (-p.c + disc);
    let l2 = I * 0.5 * (-p.c - disc);
    let one = C64::new(1.0, 0.0);
    let id = [[one, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), one]];
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    if (l1 - l2).norm() < 1e-12 {
        // repeated eigenvalue λ: e^{tA} = e^{λt}(I + t(A - λI))
        let e = (l1 * t).exp();
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = e * (id[i][j] + t * (a[i][j] - l1 * id[i][j]));
            }
        }
    } else {
        let (e1, e2) = ((l1 * t).exp(), (l2 * t).exp());
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = (e1 * (a[i][j] - l2 * id[i][j]) - e2 * (a[i][j] - l1 * id[i][j])) / (l1 - l2);
            }
        }
    }
    out
}

fn apply_linear_flow(w: &SpectralField, q: &SpectralField, t: f64, p: &Params) -> (SpectralField, SpectralField) {
    let dom = w.domain();
    let mut wo = dom.zeros();
    let mut qo = dom.zeros();
    for k in dom.kmin()..=dom.kmax_index() {
        let m = linear_propagator(dom, k, t, p);
        let (a, b) = (w.coeff(k), q.coeff(k));
        wo.set(k, m[0][0] * a + m[0][1] * b);
        qo.set(k, m[1][0] * a + m[1][1] * b);
    }
    (wo, qo)
}

/// Exact step of the linear flow, mode by mode.
pub fn linear_step(s: &WaveState, dt: f64, p: &Params) -> WaveState {
    let (w, q) = apply_linear_flow(&s.w, &s.q, dt, p);
    WaveState { w, q, t: s.t + dt }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Classical four-stage Runge–Kutta.
    #[default]
    Rk4,
    /// Runge–Kutta on the interaction picture of the exact linear flow.
    IntegratingFactorRk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Evolve `(W, Q)` with [`rhs_full`].
    #[default]
    Complex,
    /// Evolve `(Y, Ψ)` with [`rhs_realform`] and extend holomorphically.
    RealForm,
}

/// Multiplies mode `k` by `exp(-strength (|k|/(N/2))^order)` after each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFilter {
    pub strength: f64,
    pub order: u32,
}

impl ExpFilter {
    pub fn apply(&self, f: &SpectralField) -> SpectralField {
        let half = (f.domain().n() / 2) as f64;
        let mut out = f.clone();
        for (k, v) in f.modes() {
            let s = (-self.strength * (k.abs() as f64 / half).powi(self.order as i32)).exp();
            out.set(k, v * s);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepOptions {
    pub scheme: Scheme,
    pub formulation: Formulation,
    pub projection: Projection,
    pub filter: Option<ExpFilter>,
}

type Pair = (SpectralField, SpectralField);

fn axpy(base: &Pair, h: f64, k: &Pair) -> Pair {
    (&base.0 + &(&k.0 * h), &base.1 + &(&k.1 * h))
}

/// One classical RK4 step of `u' = f(u)` on a pair of fields.
pub fn rk4_pair(u: &Pair, dt: f64, mut f: impl FnMut(&Pair) -> Result<Pair>) -> Result<Pair> {
    let k1 = f(u)?;
    let k2 = f(&axpy(u, 0.5 * dt, &k1))?;
    let k3 = f(&axpy(u, 0.5 * dt, &k2))?;
    let k4 = f(&axpy(u, dt, &k3))?;
    let w = &u.0 + &((&k1.0 + &(&k2.0 * 2.0) + &(&k3.0 * 2.0) + &k4.0) * (dt / 6.0));
    let q = &u.1 + &((&k1.1 + &(&k2.1 * 2.0) + &(&k3.1 * 2.0) + &k4.1) * (dt / 6.0));
    Ok((w, q))
}

fn wave_of(u: &Pair, t: f64) -> WaveState {
    WaveState { w: u.0.clone(), q: u.1.clone(), t }
}

/// Advances `s` by `dt`.
pub fn step(s: &WaveState, dt: f64, p: &Params, opts: &StepOptions) -> Result<WaveState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParam(format!("dt = {dt} must be positive")));
    }
    let t = s.t;
    let u = (s.w.clone(), s.q.clone());
    let mut out = match (opts.formulation, opts.scheme) {
        (Formulation::Complex, Scheme::Rk4) => {
            let next = rk4_pair(&u, dt, |v| {
                let r = rhs_full_with(&wave_of(v, t), p, opts.projection)?;
                Ok((r.dw, r.dq))
            })?;
            wave_of(&next, t + dt)
        }
        (Formulation::Complex, Scheme::IntegratingFactorRk4) => lawson_rk4(s, dt, p, opts.projection)?,
        (Formulation::RealForm, Scheme::Rk4) => {
            let r0 = RealFormState::from_wave(s);
            let th = r0.theta_mean;
            let next = rk4_pair(&(r0.yh, r0.psi), dt, |v| {
                rhs_realform(&RealFormState { yh: v.0.clone(), psi: v.1.clone(), theta_mean: th }, p)
            })?;
            RealFormState { yh: next.0, psi: next.1, theta_mean: th }.to_wave(s.w.mean().re, t + dt)
        }
        (Formulation::RealForm, Scheme::IntegratingFactorRk4) => {
            return Err(Error::InvalidParam("the integrating-factor scheme needs the complex formulation".into()))
        }
    };
    if let Some(f) = opts.filter {
        out.w = f.apply(&out.w);
        out.q = f.apply(&out.q);
    }
    if !out.w.is_finite() || !out.q.is_finite() {
        return Err(Error::NonFinite("step"));
    }
    Ok(out)
}

/// Lawson RK4: classical RK4 for `v = e^{-tL}u`, with `L` the linear flow
/// and the nonlinear remainder `N(u) = rhs(u) - Lu`.
fn lawson_rk4(s: &WaveState, dt: f64, p: &Params, proj: Projection) -> Result<WaveState> {
    let t = s.t;
    let nonlinear = |u: &Pair| -> Result<Pair> {
        let st = wave_of(u, t);
        let full = rhs_full_with(&st, p, proj)?;
        let lin = rhs_linear(&st, p);
        Ok((full.dw - lin.dw, full.dq - lin.dq))
    };
    let flow = |u: &Pair, tau: f64| -> Pair { apply_linear_flow(&u.0, &u.1, tau, p) };
    let u0 = (s.w.clone(), s.q.clone());
    let k1 = nonlinear(&u0)?;
    let ua = flow(&axpy(&u0, 0.5 * dt, &k1), 0.5 * dt);
    let k2 = nonlinear(&ua)?;
    let half = flow(&u0, 0.5 * dt);
    let k3 = nonlinear(&axpy(&half, 0.5 * dt, &k2))?;
    let k3h = flow(&k3, 0.5 * dt);
    let full = flow(&u0, dt);
    let k4 = nonlinear(&axpy(&full, dt, &k3h))?;
    let k1f = flow(&k1, dt);
    let k23 = flow(&(&k2.0 + &k3.0, &k2.1 + &k3.1), 0.5 * dt);
    let w = &full.0 + &((&k1f.0 + &(&k23.0 * 2.0) + &k4.0) * (dt / 6.0));
    let q = &full.1 + &((&k1f.1 + &(&k23.1 * 2.0) + &k4.1) * (dt / 6.0));
    Ok(WaveState { w, q, t: t + dt })
}

/// Largest stable step `C / max(√(g k_max), c, ‖b̲‖_∞ k_max)`, `k_max = πN/L`.
pub fn cfl_limit(s: &WaveState, p: &Params, c_cfl: f64) -> Result<f64> {
    let d = to_diagonal(s, p)?;
    let (_, _, bu) = transport_coefficients(&d, p)?;
    let kmax = s.domain().k_max();
    let speed = (p.g * kmax).sqrt().max(p.c).max(bu.to_grid().max_abs() * kmax);
    Ok(c_cfl / speed)
}

/// Energy as printed in complex form, with the cubic vorticity term
/// `-(c³/2i)|W|²W(1+W_α)`. Kept for comparison; it is not conserved.
pub fn energy_printed(s: &WaveState, p: &Params) -> f64 {
    let c = p.c;
    let w = s.w.to_grid();
    let wa = s.w.derivative().to_grid();
    let q = s.q.to_grid();
    let qa = s.q.derivative().to_grid();
    let y = w.im();
    let e = w.abs2() * (&wa + 1.0) * p.g - &q * qa.conj() * I + &qa * &y * &y * c
        - w.abs2() * &w * (&wa + 1.0) * (c * c * c / (2.0 * I));
    e.integrate().re
}

/// Conserved energy, the real-variable Hamiltonian written in `(W, Q)`
/// and normalised so its quadratic part is `∫ g|W|² - iQQ̄_α`.
pub fn energy(s: &WaveState, p: &Params) -> f64 {
    let c = p.c;
    let wa = s.w.derivative().to_grid();
    let q = s.q.to_grid();
    let qa = s.q.derivative().to_grid();
    let y = s.w.to_grid().im();
    let xa = (&wa + 1.0).re();
    let e = -(&q * qa.conj() * I) + &y * &y * &xa * (2.0 * p.g) + &qa * &y * &y * (2.0 * c)
        + &y * &y * &y * &xa * (2.0 * c * c / 3.0);
    e.integrate().re
}

/// Momentum as printed in complex form. Not conserved.
pub fn momentum_printed(s: &WaveState, p: &Params) -> f64 {
    let c = p.c;
    let w = s.w.to_grid();
    let wa = s.w.derivative().to_grid();
    let q = s.q.to_grid();
    let e = (q.conj() * &wa - &q * wa.conj()) * (-I) - w.abs2() * c
        + (&w * &w * wa.conj() + w.conj() * w.conj() * &wa) * (0.5 * c);
    e.integrate().re
}

/// Conserved horizontal momentum `4∫ ΨY_α - (c/2)Y²X_α`.
pub fn momentum(s: &WaveState, p: &Params) -> f64 {
    let y = s.w.to_grid().im();
    let ya = s.w.derivative().to_grid().im();
    let xa = (s.w.derivative().to_grid() + 1.0).re();
    let psi = s.q.to_grid().re();
    let e = &psi * &ya - &y * &y * &xa * (0.5 * p.c);
    4.0 * e.integrate().re
}

/// The conserved energy evaluated from `(Y, Ψ)` only.
pub fn energy_realform(r: &RealFormState, p: &Params) -> f64 {
    let c = p.c;
    let y = real(&r.yh);
    let xa = real(&r.yh.derivative().hilbert()) + 1.0;
    let psi = real(&r.psi);
    let dpsi = real(&r.psi.abs_derivative());
    let pa = real(&r.psi.derivative());
    let e = &psi * &dpsi + &y * &y * &xa * p.g + &pa * &y * &y * c + &y * &y * &y * &xa * (c * c / 3.0);
    2.0 * e.integrate().re
}

pub fn momentum_realform(r: &RealFormState, p: &Params) -> f64 {
    let y = real(&r.yh);
    let ya = real(&r.yh.derivative());
    let xa = real(&r.yh.derivative().hilbert()) + 1.0;
    let psi = real(&r.psi);
    4.0 * (&psi * &ya - &y * &y * &xa * (0.5 * p.c)).integrate().re
}

/// One row of the diagnostics stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub momentum: f64,
    pub energy_printed: f64,
    pub momentum_printed: f64,
    pub taylor_margin: f64,
    pub cusp_margin: f64,
    pub holo_defect: f64,
    pub norms: ControlNorms,
    pub h0: f64,
    pub h1: f64,
}

pub fn diagnostics(s: &WaveState, p: &Params) -> Result<DiagnosticsRecord> {
    let d = to_diagonal(s, p)?;
    let (_, _, au, _) = frequency_shift(&d, p);
    let taylor_margin = (au.to_grid().re() + p.g).min_re();
    let (h0, h1) = sobolev_norms(&d);
    let rec = DiagnosticsRecord {
        t: s.t,
        energy: energy(s, p),
        momentum: momentum(s, p),
        energy_printed: energy_printed(s, p),
        momentum_printed: momentum_printed(s, p),
        taylor_margin,
        cusp_margin: d.cusp_margin(),
        holo_defect: s.holomorphy_defect(),
        norms: control_norms(&d, s, p),
        h0,
        h1,
    };
    let vals = [rec.energy, rec.momentum, rec.taylor_margin, rec.cusp_margin, rec.holo_defect, rec.h0, rec.h1];
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("diagnostics"));
    }
    Ok(rec)
}
