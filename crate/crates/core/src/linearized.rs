//! Linearized flow around a background solution in the diagonal variables
//! `(w, r)`, its source terms and the quadratic and cubic linear energies.

use crate::error::{Error, Result};
use crate::evolution::rhs_full;
use crate::spectral::{Grid, SpectralField, I};
use crate::wavestate::{auxiliary_fields, to_diagonal, AuxiliaryFields, DiagonalState, Params, WaveState};

/// Perturbation in diagonal variables, `r = q - Rw`.
#[derive(Debug, Clone)]
pub struct LinearizedState {
    pub w: SpectralField,
    pub r: SpectralField,
}

impl LinearizedState {
    pub fn new(w: SpectralField, r: SpectralField, p: &Params) -> Result<Self> {
        if w.domain() != r.domain() {
            return Err(Error::DomainMismatch);
        }
        for f in [&w, &r] {
            let defect = f.holomorphy_report(1e-300).relative_defect;
            if defect > p.tol.holo_tol {
                return Err(Error::Holomorphy { defect, tol: p.tol.holo_tol });
            }
        }
        Ok(LinearizedState { w, r })
    }

    /// Diagonal variables of a tangent vector `(δW, δQ)` at `bg`.
    pub fn from_tangent(bg: &Background, dw: &SpectralField, dq: &SpectralField) -> Self {
        let r = (dq.to_grid() - bg.diag.r.to_grid() * dw.to_grid()).to_spectral().holomorphic_part();
        LinearizedState { w: dw.holomorphic_part(), r }
    }

    pub fn zeros_like(f: &SpectralField) -> Self {
        LinearizedState { w: f.domain().zeros(), r: f.domain().zeros() }
    }
}

/// A background state with its diagonal variables and coefficient fields.
#[derive(Debug, Clone)]
pub struct Background {
    pub state: WaveState,
    pub diag: DiagonalState,
    pub aux: AuxiliaryFields,
}

impl Background {
    pub fn new(state: WaveState, p: &Params) -> Result<Self> {
        let diag = to_diagonal(&state, p)?;
        let aux = auxiliary_fields(&state, &diag, p)?;
        let min = (aux.au.to_grid().re() + p.g).min_re();
        if !(min > 0.0) {
            return Err(Error::TaylorSign { min });
        }
        Ok(Background { state, diag, aux })
    }
}

/// Projected source terms `P𝒢̲`, `P𝒦̲` and the holomorphic quadratic parts.
#[derive(Debug, Clone)]
pub struct LinSources {
    pub gu: SpectralField,
    pub ku: SpectralField,
    pub pg2: SpectralField,
    pub pk2: SpectralField,
    pub pg2_1: SpectralField,
    pub pk2_1: SpectralField,
}

struct Grids {
    wd: Grid,
    w_bg: Grid,
    r_bg: Grid,
    ra_bg: Grid,
    inv: Grid,
    inv_bar: Grid,
    jac: Grid,
    w: Grid,
    wa: Grid,
    r: Grid,
    ra: Grid,
}

fn grids(l: &LinearizedState, bg: &Background) -> Grids {
    let wd = bg.diag.wd.to_grid();
    let inv = (&wd + 1.0).recip();
    Grids {
        w_bg: bg.diag.w.to_grid(),
        r_bg: bg.diag.r.to_grid(),
        ra_bg: bg.diag.r.derivative().to_grid(),
        inv_bar: inv.conj(),
        jac: (&wd + 1.0).abs2(),
        inv,
        wd,
        w: l.w.to_grid(),
        wa: l.w.derivative().to_grid(),
        r: l.r.to_grid(),
        ra: l.r.derivative().to_grid(),
    }
}

/// `(𝒢̲, 𝒦̲)` on the grid, before the final projection.
fn sources_grid(g: &Grids, p: &Params) -> (Grid, Grid) {
    let c = p.c;
    let inv2 = &g.inv * &g.inv;
    let m = (&g.ra + &g.ra_bg * &g.w) / &g.jac + g.r_bg.conj() * &g.wa * &inv2;
    let m1 = &g.w * &g.inv_bar - g.w_bg.conj() * &g.wa * &inv2;
    let m2 = g.r_bg.conj() * &g.w - (g.w_bg.conj() * &g.ra + g.w_bg.conj() * &g.ra_bg * &g.w) * &g.inv;
    let n = g.r_bg.conj() * (&g.ra + &g.ra_bg * &g.w) * &g.inv;
    let one_plus = &g.wd + 1.0;
    let big_g = &one_plus * (m.conj().p() + m.pbar());
    let big_g1 = -(&one_plus * (m1.conj().p() - m1.pbar())) + (g.wd.conj() - &g.wd) * &g.w * &g.inv_bar;
    let big_k = n.pbar() - n.conj().p();
    let big_k1 = m2.conj().p() + m2.pbar();
    (&big_g - &big_g1 * (I * (0.5 * c)), &big_k - &big_k1 * (I * (0.5 * c)))
}

pub fn lin_sources(l: &LinearizedState, bg: &Background, p: &Params) -> LinSources {
    let g = grids(l, bg);
    let (gu, ku) = sources_grid(&g, p);
    let wdd = &g.wd;
    let pr = |f: Grid| f.to_spectral().proj_p();
    let pg2 = pr(-(wdd * g.ra.conj()) + &g.r_bg * g.wa.conj());
    let pk2 = pr(-(&g.r_bg * g.ra.conj()));
    let pg2_1 = pr(wdd * g.w.conj() + &g.w_bg * g.wa.conj() + wdd.conj() * &g.w - wdd * &g.w);
    // leading part of P m̄₂ with m₂ = R̄w - W̄r_α + (cubic)
    let pk2_1 = pr(&g.r_bg * g.w.conj() - &g.w_bg * g.ra.conj());
    LinSources { gu: gu.to_spectral().proj_p(), ku: ku.to_spectral().proj_p(), pg2, pk2, pg2_1, pk2_1 }
}

/// Right-hand side of the projected linearized system. The final
/// projection drops positive modes and keeps the zero mode whole, as for
/// the nonlinear flow, so that it is the exact tangent of [`rhs_full`].
pub fn rhs_linearized(l: &LinearizedState, bg: &Background, p: &Params) -> Result<(SpectralField, SpectralField)> {
    let g = grids(l, bg);
    let (gu, ku) = sources_grid(&g, p);
    let bu = bg.aux.bu.to_grid().re();
    let au = bg.aux.au.to_grid().re();
    let dw = -(&bu * &g.wa + &g.ra * &g.inv_bar + &g.ra_bg * &g.w * &g.inv_bar) + gu;
    let dr = -(&bu * &g.ra + &g.r * (I * p.c)) + (au + p.g) * &g.w * &g.inv * I + ku;
    let (dw, dr) = (dw.to_spectral().holomorphic_part(), dr.to_spectral().holomorphic_part());
    if !dw.is_finite() || !dr.is_finite() {
        return Err(Error::NonFinite("rhs_linearized"));
    }
    Ok((dw, dr))
}

/// `∫ (g + a̲)|w|² + Im(r r̄_α)`.
pub fn energy_lin2(l: &LinearizedState, bg: &Background, p: &Params) -> f64 {
    let w = l.w.to_grid();
    let r = l.r.to_grid();
    let ra = l.r.derivative().to_grid();
    let e = (bg.aux.au.to_grid().re() + p.g) * w.abs2() + (&r * ra.conj()).im();
    e.integrate().re
}

/// [`energy_lin2`] plus the cubic correction `2Im(R̄ w r_α) - 2g Re(𝐖̄ w²)`.
/// The factor `g` restores the scaling of the first term; it is invisible
/// at `g = 1`.
pub fn energy_lin3(l: &LinearizedState, bg: &Background, p: &Params) -> f64 {
    energy_lin2(l, bg, p) + lin3_correction(l, bg, p.g)
}

fn lin3_correction(l: &LinearizedState, bg: &Background, g: f64) -> f64 {
    let w = l.w.to_grid();
    let ra = l.r.derivative().to_grid();
    let corr = (bg.diag.r.to_grid().conj() * &w * &ra).im() * 2.0 - (bg.diag.wd.to_grid().conj() * &w * &w).re() * (2.0 * g);
    corr.integrate().re
}

/// One RK4 step of the background and the linearized flow together, with
/// every stage of the linearized flow evaluated on the matching background
/// stage.
pub fn lockstep_step(
    s: &WaveState,
    l: &LinearizedState,
    dt: f64,
    p: &Params,
) -> Result<(WaveState, LinearizedState)> {
    let t = s.t;
    let k = |v: &(SpectralField, SpectralField)| -> Result<(SpectralField, SpectralField)> {
        let r = rhs_full(&WaveState { w: v.0.clone(), q: v.1.clone(), t }, p)?;
        Ok((r.dw, r.dq))
    };
    let u0 = (s.w.clone(), s.q.clone());
    let k1 = k(&u0)?;
    let u1 = (&u0.0 + &(&k1.0 * (0.5 * dt)), &u0.1 + &(&k1.1 * (0.5 * dt)));
    let k2 = k(&u1)?;
    let u2 = (&u0.0 + &(&k2.0 * (0.5 * dt)), &u0.1 + &(&k2.1 * (0.5 * dt)));
    let k3 = k(&u2)?;
    let u3 = (&u0.0 + &(&k3.0 * dt), &u0.1 + &(&k3.1 * dt));
    let k4 = k(&u3)?;
    let bg_next = (
        &u0.0 + &((&k1.0 + &(&k2.0 * 2.0) + &(&k3.0 * 2.0) + &k4.0) * (dt / 6.0)),
        &u0.1 + &((&k1.1 + &(&k2.1 * 2.0) + &(&k3.1 * 2.0) + &k4.1) * (dt / 6.0)),
    );
    let stages = [u0, u1, u2, u3];

    let f = |i: usize, v: &LinearizedState| -> Result<(SpectralField, SpectralField)> {
        let bg = Background::new(WaveState { w: stages[i].0.clone(), q: stages[i].1.clone(), t }, p)?;
        rhs_linearized(v, &bg, p)
    };
    let add = |a: &LinearizedState, h: f64, k: &(SpectralField, SpectralField)| LinearizedState {
        w: &a.w + &(&k.0 * h),
        r: &a.r + &(&k.1 * h),
    };
    let l1 = f(0, l)?;
    let l2 = f(1, &add(l, 0.5 * dt, &l1))?;
    let l3 = f(2, &add(l, 0.5 * dt, &l2))?;
    let l4 = f(3, &add(l, dt, &l3))?;
    let w = &l.w + &((&l1.0 + &(&l2.0 * 2.0) + &(&l3.0 * 2.0) + &l4.0) * (dt / 6.0));
    let r = &l.r + &((&l1.1 + &(&l2.1 * 2.0) + &(&l3.1 * 2.0) + &l4.1) * (dt / 6.0));
    Ok((WaveState { w: bg_next.0, q: bg_next.1, t: t + dt }, LinearizedState { w, r }))
}
