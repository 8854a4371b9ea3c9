//! Modified energies: the cubic energy at the base level `n = 0`, good
//! variables and quasilinear energies at higher order, and energy-drift
//! scans along the nonlinear flow.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{linear_step, step, StepOptions};
use crate::fit::loglog_slope;
use crate::normal_form::correction_raw;
use crate::spectral::{Domain, Grid, SpectralField};
use crate::wavestate::{frequency_shift, linear_wave, to_diagonal, DiagonalState, Params, WaveState};

/// Weighted, conjugated variables at differentiation order `n ≥ 1`.
#[derive(Debug, Clone)]
pub struct GoodVariables {
    pub n: usize,
    pub w: SpectralField,
    pub r: SpectralField,
    /// `φ = -2 Re log(1+𝐖) = -log J`.
    pub phi: SpectralField,
}

/// Conjugation weight exponent: `e^{(n+1)φ}`.
fn weight_power(n: usize) -> f64 {
    (n + 1) as f64
}

/// `n = 1`: `w = P[e^{2φ}𝐖_α]`, `r = P[e^{2φ}(1+𝐖)R_α]`.
/// `n ≥ 2`: `w = P[e^{(n+1)φ}∂ⁿ𝐖]`, `r = P[e^{(n+1)φ}R̃]` with
/// `R̃ = (1+𝐖)∂ⁿR - R_α∂ⁿ⁻¹𝐖 + (2n+1)𝐖_α∂ⁿ⁻¹R`.
pub fn good_variables(d: &DiagonalState, n: usize, p: &Params) -> Result<GoodVariables> {
    if n == 0 {
        return Err(Error::InvalidParam("good variables need n >= 1".into()));
    }
    let wdg = d.wd.to_grid();
    wdg.check_cusp(p.tol.cusp_floor)?;
    let one = &wdg + 1.0;
    // Re log(1+𝐖) = log|1+𝐖| has no branch ambiguity
    let phi = one.abs2().map(|z| C64::new(-z.re.ln(), 0.0));
    let k = weight_power(n);
    let weight = phi.map(|z| C64::new((k * z.re).exp(), 0.0));
    let wn = d.wd.derivative_n(n).to_grid();
    let rn = d.r.derivative_n(n).to_grid();
    let rt = if n == 1 {
        &one * &rn
    } else {
        let ra = d.r.derivative().to_grid();
        let wda = d.wd.derivative().to_grid();
        &one * &rn - &ra * d.wd.derivative_n(n - 1).to_grid()
            + &wda * d.r.derivative_n(n - 1).to_grid() * (2 * n + 1) as f64
    };
    Ok(GoodVariables {
        n,
        w: (&weight * &wn).to_spectral().proj_p(),
        r: (&weight * &rt).to_spectral().proj_p(),
        phi: phi.to_spectral(),
    })
}

/// `‖(w, r)‖` relative to `𝐍ₙ = ‖(∂ⁿ𝐖, ∂ⁿR)‖` in `L² × Ḣ^{1/2}`: returns
/// `(|‖(w,r)‖/𝐍ₙ - 1|, ‖(w,r) - (∂ⁿ𝐖, ∂ⁿR)‖/𝐍ₙ)`.
pub fn good_variable_deviation(gv: &GoodVariables, d: &DiagonalState) -> (f64, f64) {
    let wn = d.wd.derivative_n(gv.n);
    let rn = d.r.derivative_n(gv.n);
    let base = crate::wavestate::energy_norm(&wn, &rn);
    let norm = crate::wavestate::energy_norm(&gv.w, &gv.r);
    let diff = crate::wavestate::energy_norm(&(&gv.w - &wn), &(&gv.r - &rn));
    ((norm / base - 1.0).abs(), diff / base)
}

/// Components of a modified energy; absent parts are zero and
/// `total = high + high_c + nf_low`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub n: usize,
    pub total: f64,
    pub high: f64,
    pub high_c: f64,
    pub nf_low: f64,
    /// `ℰ₀(∂ⁿ𝐖, ∂ⁿR)`.
    pub h_n: f64,
}

/// `ℰ₀(w, r) = ∫ g|w|² + Im(r r̄_α)`.
pub fn quadratic_energy(w: &SpectralField, r: &SpectralField, g: f64) -> f64 {
    let rg = r.to_grid();
    let e = w.to_grid().abs2() * g + (&rg * r.derivative().to_grid().conj()).im();
    e.integrate().re
}

fn taylor_weight(d: &DiagonalState, p: &Params) -> Grid {
    let (_, _, au, _) = frequency_shift(d, p);
    au.to_grid().re() + p.g
}

/// `∫ (g+a̲)|w|² + Im(r r̄_α) + 2Im(R̄ w r_α) - 2g Re(𝐖̄ w²)`, the cubic
/// linearized energy with `d` as background.
fn high_part(w: &SpectralField, r: &SpectralField, d: &DiagonalState, ga: &Grid, g: f64) -> f64 {
    let wg = w.to_grid();
    let rg = r.to_grid();
    let ra = r.derivative().to_grid();
    let e = ga * wg.abs2() + (&rg * ra.conj()).im() + (d.r.to_grid().conj() * &wg * &ra).im() * 2.0
        - (d.wd.to_grid().conj() * &wg * &wg).re() * (2.0 * g);
    e.integrate().re
}

/// Cubic part of `ℰ₀(W̃_α, Q̃_α)` for the normal-form variables, written
/// in terms of `(W, Q)`: `2 B((W_α,Q_α), (∂W^{[2]}, ∂Q^{[2]}))`.
fn cubic_nf_energy(s: &WaveState, p: &Params) -> f64 {
    let nf = correction_raw(&s.w, &s.q, p);
    let aw = s.w.derivative().to_grid();
    let aq = s.q.derivative();
    let bw = nf.w2.derivative().to_grid();
    let bq = nf.q2.derivative();
    let aqg = aq.to_grid();
    let bqg = bq.to_grid();
    let e = (&aw * bw.conj()).re() * p.g
        + ((&aqg * bq.derivative().to_grid().conj()).im() + (&bqg * aq.derivative().to_grid().conj()).im()) * 0.5;
    2.0 * e.integrate().re
}

/// Cubic part of `∫(g + cReR)|𝐖|² + Im(RR̄_α) + 2Im(R̄𝐖R_α) - 2gRe(𝐖̄𝐖²)`
/// after expanding `R = Q_α - Q_α𝐖 + …`.
fn cubic_nf_high(s: &WaveState, p: &Params) -> f64 {
    let wd = s.w.derivative();
    let wdg = wd.to_grid();
    let r1 = s.q.derivative();
    let r1g = r1.to_grid();
    let r2 = -(&r1g * &wdg).to_spectral();
    let r2g = r2.to_grid();
    let r1a = r1.derivative().to_grid();
    let e = r1g.re() * wdg.abs2() * p.c
        + (&r1g * r2.derivative().to_grid().conj() + &r2g * r1a.conj()).im()
        + (r1g.conj() * &wdg * &r1a).im() * 2.0
        - (wdg.conj() * &wdg * &wdg).re() * (2.0 * p.g);
    e.integrate().re
}

/// The low-frequency cubic correction: the cubic part of the normal-form
/// energy minus the cubic part of its leading (high) piece. A trilinear
/// form in `(W, Q)` that vanishes identically when `c = 0`.
pub fn nf_low(s: &WaveState, p: &Params) -> f64 {
    cubic_nf_energy(s, p) - cubic_nf_high(s, p)
}

/// `E^{0,(3)} = E_high + E_{NF,low}` with `E_high` the cubic linearized
/// energy evaluated at `(w, r) = (𝐖, R)`.
pub fn energy_n0_cubic(d: &DiagonalState, s: &WaveState, p: &Params) -> Result<EnergyBreakdown> {
    let ga = taylor_weight(d, p);
    let high = high_part(&d.wd, &d.r, d, &ga, p.g);
    let low = nf_low(s, p);
    let h_n = quadratic_energy(&d.wd, &d.r, p.g);
    if !(high.is_finite() && low.is_finite()) {
        return Err(Error::NonFinite("energy_n0_cubic"));
    }
    Ok(EnergyBreakdown { n: 0, total: high + low, high, high_c: 0.0, nf_low: low, h_n })
}

/// Weights `(c(2n+3), c²(2n+5/2))` on `Re R` and `Im W` in the `c`-correction.
pub fn high_c_weights(n: usize, c: f64) -> (f64, f64) {
    let n = n as f64;
    (c * (2.0 * n + 3.0), c * c * (2.0 * n + 2.5))
}

/// `E^{n,(3)}_high + E^{n,(3)}_{high,c}` for good variables over the
/// background `d`. The high part is the cubic linearized energy of
/// `(w, r)`, plus `2n Im(R_α w̄ r̄)` when `n ≥ 2`; the `c` part is
/// `-Re∫[c(2n+3)ReR + c²(2n+5/2)ImW]((g+a̲)|w|² - i r̄_α r)`.
pub fn energy_n_high(gv: &GoodVariables, d: &DiagonalState, p: &Params) -> Result<EnergyBreakdown> {
    let n = gv.n;
    let ga = taylor_weight(d, p);
    let mut high = high_part(&gv.w, &gv.r, d, &ga, p.g);
    let wg = gv.w.to_grid();
    let rg = gv.r.to_grid();
    if n >= 2 {
        let extra = d.r.derivative().to_grid() * wg.conj() * rg.conj();
        high += 2.0 * n as f64 * extra.im().integrate().re;
    }
    let (kr, kw) = high_c_weights(n, p.c);
    let coef = d.r.to_grid().re() * kr + d.w.to_grid().im() * kw;
    let inner = &ga * wg.abs2() - gv.r.derivative().to_grid().conj() * &rg * crate::spectral::I;
    let high_c = -(coef * inner).integrate().re;
    let h_n = quadratic_energy(&d.wd.derivative_n(n), &d.r.derivative_n(n), p.g);
    if !(high.is_finite() && high_c.is_finite()) {
        return Err(Error::NonFinite("energy_n_high"));
    }
    Ok(EnergyBreakdown { n, total: high + high_c, high, high_c, nf_low: 0.0, h_n })
}

/// The normal-form high energy `E^n_{NF,high}` in the diagonal variables.
/// The `(n+1)Im[R_α 𝐖̄⁽ⁿ⁾ R̄⁽ⁿ⁾]` term is omitted for `n = 1`.
pub fn energy_nf_high(d: &DiagonalState, n: usize, p: &Params) -> f64 {
    let g = p.g;
    let wdg = d.wd.to_grid();
    let rg = d.r.to_grid();
    let wn = d.wd.derivative_n(n).to_grid();
    let rn_f = d.r.derivative_n(n);
    let rn = rn_f.to_grid();
    let rn1 = rn_f.derivative().to_grid();
    let quad = wn.abs2() * g + (rn1.conj() * &rn).im();
    let mut e = (wdg.re() * (-4.0 * (n + 1) as f64) + 1.0) * &quad
        + ((rg.conj() * &wn * &rn1).im() - (wdg.conj() * &wn * &wn).re() * g) * 2.0;
    if n != 1 {
        e = e + (d.r.derivative().to_grid() * wn.conj() * rn.conj()).im() * (2.0 * (n + 1) as f64);
    }
    e = e + rg.re() * wn.abs2() * p.c + (&wdg * rn1.conj() * &rn).im() * 2.0;
    e.integrate().re
}

/// Modified energy used by the drift scans: `E^{0,(3)}` for `n = 0`, the
/// high parts for `n ≥ 1`.
pub fn energy_n(s: &WaveState, n: usize, p: &Params) -> Result<EnergyBreakdown> {
    let d = to_diagonal(s, p)?;
    if n == 0 {
        energy_n0_cubic(&d, s, p)
    } else {
        energy_n_high(&good_variables(&d, n, p)?, &d, p)
    }
}

/// Fixed-shape initial data: linear waves on the given modes, multiplied by `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftProfile {
    pub n_grid: usize,
    pub length: f64,
    /// `(k, amplitude)` pairs for `W`; `Q` follows from the linear dispersion.
    pub modes: Vec<(i64, [f64; 2])>,
}

impl Default for DriftProfile {
    fn default() -> Self {
        DriftProfile {
            n_grid: 64,
            length: std::f64::consts::TAU,
            modes: vec![(-1, [0.1, 0.0]), (-2, [0.0, -0.05]), (-3, [0.025, 0.0])],
        }
    }
}

impl DriftProfile {
    pub fn state(&self, eps: f64, p: &Params) -> Result<WaveState> {
        let dom = Domain::new(self.n_grid, self.length)?;
        let modes: Vec<(i64, C64)> = self.modes.iter().map(|&(k, [re, im])| (k, C64::new(re, im) * eps)).collect();
        linear_wave(&dom, p, &modes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub n: usize,
    pub c: f64,
    pub g: f64,
    pub eps: Vec<f64>,
    /// `sup_{t≤T} |ℰ₀(t) - ℰ₀(0)|` for the unmodified energy.
    pub drift_raw: Vec<f64>,
    pub drift_mod: Vec<f64>,
    pub slope_raw: f64,
    pub slope_mod: f64,
    /// Amplitudes whose run failed (non-finite, cusp, ...), left out of the fit.
    pub aborted: Vec<f64>,
}

/// Which flow a drift run follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftFlow {
    /// Full equations, RK4.
    #[default]
    Full,
    /// Exact linear flow. With the nonlinearity off both energies reduce to
    /// `ℰ₀(∂ⁿW_α, ∂ⁿQ_α)`, which this flow conserves exactly.
    Linear,
}

/// Sup-in-time drift of the raw and modified energies along one run.
pub fn drift_run(s0: &WaveState, n: usize, t_end: f64, dt: f64, p: &Params) -> Result<(f64, f64)> {
    drift_run_with(s0, n, t_end, dt, p, DriftFlow::Full)
}

pub fn drift_run_with(s0: &WaveState, n: usize, t_end: f64, dt: f64, p: &Params, flow: DriftFlow) -> Result<(f64, f64)> {
    let opts = StepOptions::default();
    let measure = |s: &WaveState| -> Result<(f64, f64)> {
        match flow {
            DriftFlow::Full => energy_n(s, n, p).map(|e| (e.h_n, e.total)),
            DriftFlow::Linear => {
                let e = quadratic_energy(&s.w.derivative_n(n + 1), &s.q.derivative_n(n + 1), p.g);
                Ok((e, e))
            }
        }
    };
    let e0 = measure(s0)?;
    let steps = (t_end / dt).round() as usize;
    let mut s = s0.clone();
    let (mut raw, mut modified) = (0.0f64, 0.0f64);
    for _ in 0..steps {
        s = match flow {
            DriftFlow::Full => step(&s, dt, p, &opts)?,
            DriftFlow::Linear => linear_step(&s, dt, p),
        };
        let e = measure(&s)?;
        raw = raw.max((e.0 - e0.0).abs());
        modified = modified.max((e.1 - e0.1).abs());
    }
    if !(raw.is_finite() && modified.is_finite()) {
        return Err(Error::NonFinite("drift_run"));
    }
    Ok((raw, modified))
}

/// Runs every amplitude in parallel and fits log-log slopes of both drifts.
pub fn drift_scan(
    profile: &DriftProfile,
    eps_list: &[f64],
    n: usize,
    t_end: f64,
    dt: f64,
    p: &Params,
) -> Result<DriftReport> {
    let runs: Vec<Result<(f64, f64)>> =
        eps_list.par_iter().map(|&e| profile.state(e, p).and_then(|s| drift_run(&s, n, t_end, dt, p))).collect();
    let mut rep = DriftReport {
        n,
        c: p.c,
        g: p.g,
        eps: Vec::new(),
        drift_raw: Vec::new(),
        drift_mod: Vec::new(),
        slope_raw: f64::NAN,
        slope_mod: f64::NAN,
        aborted: Vec::new(),
    };
    for (&e, r) in eps_list.iter().zip(runs) {
        match r {
            Ok((raw, m)) => {
                rep.eps.push(e);
                rep.drift_raw.push(raw);
                rep.drift_mod.push(m);
            }
            Err(_) => rep.aborted.push(e),
        }
    }
    if rep.eps.len() >= 2 {
        rep.slope_raw = loglog_slope(&rep.eps, &rep.drift_raw)?;
        rep.slope_mod = loglog_slope(&rep.eps, &rep.drift_mod)?;
    }
    Ok(rep)
}
