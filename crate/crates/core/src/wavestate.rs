//! Wave states, diagonal variables, auxiliary coefficient fields and the
//! computable control norms.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Domain, SpectralField, I};

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative holomorphy defect accepted on input states.
    pub holo_tol: f64,
    /// Smallest admissible `min |1 + W_α|`.
    pub cusp_floor: f64,
    /// Slack for identities that only hold up to spectral truncation.
    pub trunc_tol: f64,
    /// Relative mean accepted by the antiderivative.
    pub mean_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { holo_tol: 1e-8, cusp_floor: 1e-8, trunc_tol: 1e-10, mean_tol: 1e-12 }
    }
}

/// Gravity `g > 0`, vorticity `c ≥ 0` and tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub g: f64,
    pub c: f64,
    pub tol: Tolerances,
}

impl Params {
    pub fn new(g: f64, c: f64) -> Result<Self> {
        Self::with_tolerances(g, c, Tolerances::default())
    }

    pub fn with_tolerances(g: f64, c: f64, tol: Tolerances) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParam(format!("g = {g} must be positive")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidParam(format!("c = {c} must be nonnegative")));
        }
        Ok(Params { g, c, tol })
    }
}

/// The evolution unknowns: the surface `α ↦ α + W(α)` and the holomorphic
/// velocity potential trace `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub w: SpectralField,
    pub q: SpectralField,
    pub t: f64,
}

impl WaveState {
    pub fn new(w: SpectralField, q: SpectralField, t: f64) -> Result<Self> {
        if w.domain() != q.domain() {
            return Err(Error::DomainMismatch);
        }
        if !w.is_finite() || !q.is_finite() {
            return Err(Error::NonFinite("wave state"));
        }
        Ok(WaveState { w, q, t })
    }

    pub fn flat(dom: &Domain) -> Self {
        WaveState { w: dom.zeros(), q: dom.zeros(), t: 0.0 }
    }

    /// Sum of modes `Σ a_k e^{ikα}` for each component.
    pub fn from_modes(dom: &Domain, w_modes: &[(i64, C64)], q_modes: &[(i64, C64)]) -> Result<Self> {
        let build = |modes: &[(i64, C64)]| -> Result<SpectralField> {
            let mut f = dom.zeros();
            for &(k, a) in modes {
                if k < dom.kmin() || k > dom.kmax_index() {
                    return Err(Error::InvalidParam(format!("mode {k} outside the resolved band")));
                }
                f.set(k, f.coeff(k) + a);
            }
            Ok(f)
        };
        WaveState::new(build(w_modes)?, build(q_modes)?, 0.0)
    }

    pub fn domain(&self) -> &Domain {
        self.w.domain()
    }

    pub fn scaled(&self, lambda: f64) -> WaveState {
        WaveState { w: &self.w * lambda, q: &self.q * lambda, t: self.t }
    }

    /// Largest relative holomorphy defect of the two components.
    pub fn holomorphy_defect(&self) -> f64 {
        let a = self.w.holomorphy_report(1e-300).relative_defect;
        let b = self.q.holomorphy_report(1e-300).relative_defect;
        if self.w.coeff_norm() == 0.0 && self.q.coeff_norm() == 0.0 {
            0.0
        } else {
            a.max(b)
        }
    }

    /// Checks the holomorphy and no-cusp invariants.
    pub fn validate(&self, p: &Params) -> Result<()> {
        let defect = self.holomorphy_defect();
        if defect > p.tol.holo_tol {
            return Err(Error::Holomorphy { defect, tol: p.tol.holo_tol });
        }
        self.w.derivative().to_grid().check_cusp(p.tol.cusp_floor)
    }
}

/// Linear-wave initial data: for each `(k, a)`, `W` gets `a e^{ikα}` and
/// `Q` the amplitude on the forward branch of the linear dispersion.
pub fn linear_wave(dom: &Domain, p: &Params, modes: &[(i64, C64)]) -> Result<WaveState> {
    let mut wm = Vec::new();
    let mut qm = Vec::new();
    for &(k, a) in modes {
        if k >= 0 {
            return Err(Error::InvalidParam(format!("linear waves need k < 0, got {k}")));
        }
        let xi = dom.xi(k);
        let tau = 0.5 * (p.c + (p.c * p.c - 4.0 * p.g * xi).sqrt());
        wm.push((k, a));
        qm.push((k, a * p.g / (p.c - tau)));
    }
    WaveState::from_modes(dom, &wm, &qm)
}

/// `(𝐖, R)` with the rational companion `Y = 𝐖/(1+𝐖)` and `J = |1+𝐖|²`.
/// Also carries `W`, which several auxiliary fields need undifferentiated.
#[derive(Debug, Clone)]
pub struct DiagonalState {
    pub w: SpectralField,
    pub wd: SpectralField,
    pub r: SpectralField,
    pub y: SpectralField,
    pub j: SpectralField,
}

pub fn to_diagonal(s: &WaveState, p: &Params) -> Result<DiagonalState> {
    let wd = s.w.derivative();
    diagonal_from_parts(s.w.clone(), wd, s.q.derivative(), p)
}

fn diagonal_from_parts(w: SpectralField, wd: SpectralField, qa: SpectralField, p: &Params) -> Result<DiagonalState> {
    let wdg = wd.to_grid();
    wdg.check_cusp(p.tol.cusp_floor)?;
    let one_plus = &wdg + 1.0;
    let r = (qa.to_grid() / &one_plus).to_spectral();
    let y = (&wdg / &one_plus).to_spectral();
    let j = one_plus.abs2().to_spectral();
    Ok(DiagonalState { w, wd, r, y, j })
}

impl DiagonalState {
    /// From `(𝐖, R)` alone; `W` is rebuilt as the mean-free antiderivative.
    pub fn from_diagonal(wd: SpectralField, r: SpectralField, p: &Params) -> Result<Self> {
        let w = wd.antiderivative_mean_free();
        let wdg = wd.to_grid();
        wdg.check_cusp(p.tol.cusp_floor)?;
        let one_plus = &wdg + 1.0;
        let y = (&wdg / &one_plus).to_spectral();
        let j = one_plus.abs2().to_spectral();
        Ok(DiagonalState { w, wd, r, y, j })
    }

    pub fn domain(&self) -> &Domain {
        self.wd.domain()
    }

    /// `min_α |1 + 𝐖|` on the padded grid.
    pub fn cusp_margin(&self) -> f64 {
        self.wd.to_grid().min_one_plus().0
    }
}

/// Coefficient fields of the quasilinear system.
#[derive(Debug, Clone)]
pub struct AuxiliaryFields {
    pub f: SpectralField,
    pub f1: SpectralField,
    pub fu: SpectralField,
    pub t1: SpectralField,
    pub b: SpectralField,
    pub b1: SpectralField,
    pub bu: SpectralField,
    pub a: SpectralField,
    pub a1: SpectralField,
    pub au: SpectralField,
    pub n: SpectralField,
    pub m: SpectralField,
    pub m1: SpectralField,
    pub mu: SpectralField,
}

/// `(F, F₁, F̲, T₁)` from the undifferentiated state.
pub fn auxiliary_transport(
    s: &WaveState,
    p: &Params,
) -> Result<(SpectralField, SpectralField, SpectralField, SpectralField)> {
    let wg = s.w.to_grid();
    let wa = s.w.derivative().to_grid();
    wa.check_cusp(p.tol.cusp_floor)?;
    let qa = s.q.derivative().to_grid();
    let jac = (&wa + 1.0).abs2();
    let inv = (&wa + 1.0).recip();
    let inv_bar = inv.conj();
    let f = ((&qa - qa.conj()) / &jac).to_spectral().proj_p();
    let f1 = (&wg * &inv_bar + wg.conj() * &inv).to_spectral().proj_p();
    let t1 = (&wg * qa.conj() * &inv_bar - wg.conj() * &qa * &inv).to_spectral().proj_p();
    let fu = &f - &f1.scale(I * (0.5 * p.c));
    Ok((f, f1, fu, t1))
}

/// `(b, b₁, b̲)`.
pub fn transport_coefficients(d: &DiagonalState, p: &Params) -> Result<(SpectralField, SpectralField, SpectralField)> {
    let wdg = d.wd.to_grid();
    wdg.check_cusp(p.tol.cusp_floor)?;
    let inv = (&wdg + 1.0).recip();
    let inv_bar = inv.conj();
    let rg = d.r.to_grid();
    let wg = d.w.to_grid();
    let b = (&rg * &inv_bar).to_spectral().proj_p() + (rg.conj() * &inv).to_spectral().proj_pbar();
    let b1 = (&wg * &inv_bar).to_spectral().proj_p() - (wg.conj() * &inv).to_spectral().proj_pbar();
    let bu = &b - &b1.scale(I * (0.5 * p.c));
    Ok((b, b1, bu))
}

/// `(a, a₁, a̲, N)`.
pub fn frequency_shift(d: &DiagonalState, p: &Params) -> (SpectralField, SpectralField, SpectralField, SpectralField) {
    let rg = d.r.to_grid();
    let rag = d.r.derivative().to_grid();
    let wg = d.w.to_grid();
    let wdg = d.wd.to_grid();
    let a = ((rg.conj() * &rag).to_spectral().proj_pbar() - (&rg * rag.conj()).to_spectral().proj_p()).scale(I);
    let n = (&wg * rag.conj() - wdg.conj() * &rg).to_spectral().proj_p()
        + (wg.conj() * &rag - &wdg * rg.conj()).to_spectral().proj_pbar();
    let a1 = &d.r + &d.r.conj() - &n;
    let au = &a + &(&a1 * (0.5 * p.c));
    (a, a1, au, n)
}

/// `(M, M₁, M̲)`.
pub fn m_fields(d: &DiagonalState, p: &Params) -> (SpectralField, SpectralField, SpectralField) {
    let rg = d.r.to_grid();
    let rag = d.r.derivative().to_grid();
    let yg = d.y.to_grid();
    let yag = d.y.derivative().to_grid();
    let wg = d.w.to_grid();
    let m = (rg.conj() * &yag - &rag * yg.conj()).to_spectral().proj_pbar()
        + (&rg * yag.conj() - rag.conj() * &yg).to_spectral().proj_p();
    let m1 = (&wg * yg.conj()).to_spectral().proj_p().derivative()
        - (wg.conj() * &yg).to_spectral().proj_pbar().derivative();
    let mu = &m - &m1.scale(I * (0.5 * p.c));
    (m, m1, mu)
}

pub fn auxiliary_fields(s: &WaveState, d: &DiagonalState, p: &Params) -> Result<AuxiliaryFields> {
    let (f, f1, fu, t1) = auxiliary_transport(s, p)?;
    let (b, b1, bu) = transport_coefficients(d, p)?;
    let (a, a1, au, n) = frequency_shift(d, p);
    let (m, m1, mu) = m_fields(d, p);
    Ok(AuxiliaryFields { f, f1, fu, t1, b, b1, bu, a, a1, au, n, m, m1, mu })
}

/// Surrogates for the scale-invariant control norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlNorms {
    pub a: f64,
    pub b: f64,
    pub a_half: f64,
    pub a_one: f64,
    pub au: f64,
    pub bu: f64,
}

/// Largest dyadic-block `ℓ²` coefficient mass, blocks `2^j ≤ |k| < 2^{j+1}`
/// with the zero mode folded into the first block.
pub fn dyadic_block_sup(f: &SpectralField) -> f64 {
    let mut blocks: Vec<f64> = Vec::new();
    for (k, v) in f.modes() {
        let ak = k.unsigned_abs();
        let j = if ak <= 1 { 0 } else { (63 - ak.leading_zeros()) as usize };
        if blocks.len() <= j {
            blocks.resize(j + 1, 0.0);
        }
        blocks[j] += v.norm_sqr();
    }
    blocks.into_iter().map(f64::sqrt).fold(0.0, f64::max)
}

fn sup(f: &SpectralField) -> f64 {
    f.to_grid().max_abs()
}

pub fn control_norms(d: &DiagonalState, s: &WaveState, p: &Params) -> ControlNorms {
    let hr = d.r.half_derivative();
    let a = sup(&d.wd) + sup(&d.y) + sup(&hr).max(dyadic_block_sup(&hr));
    let b = sup(&d.wd.half_derivative()) + sup(&d.r.derivative());
    let a_half = sup(&s.w.half_derivative()) + sup(&d.r);
    let a_one = sup(&s.w);
    let c = p.c;
    ControlNorms { a, b, a_half, a_one, au: a + c * a_half + c * c * a_one, bu: b + c * a + c * c * a_half }
}

/// `‖(w, r)‖_{L² × Ḣ^{1/2}}`.
pub fn energy_norm(w: &SpectralField, r: &SpectralField) -> f64 {
    (w.l2_norm().powi(2) + r.hdot_half_norm().powi(2)).sqrt()
}

/// `(‖(𝐖,R)‖_{𝓗̇₀}, ‖(𝐖,R)‖_{𝓗̇₁})`.
pub fn sobolev_norms(d: &DiagonalState) -> (f64, f64) {
    let h0 = energy_norm(&d.wd, &d.r);
    (h0, h0 + energy_norm(&d.wd.derivative(), &d.r.derivative()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 0.01;

    fn dom() -> Domain {
        Domain::periodic(32).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(0.0, 1.0).is_err());
        assert!(Params::new(1.0, -1.0).is_err());
        assert!(Params::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn flat_diagonal() {
        let p = Params::new(1.0, 1.0).unwrap();
        let d = to_diagonal(&WaveState::flat(&dom()), &p).unwrap();
        assert_eq!(d.wd.max_abs_coeff(), 0.0);
        assert_eq!(d.r.max_abs_coeff(), 0.0);
        assert!(d.j.max_diff(&dom().constant(c(1.0, 0.0))) < 1e-15);
    }

    #[test]
    fn diagonal_single_modes() {
        let dm = dom();
        let p = Params::new(1.0, 1.0).unwrap();
        let s = WaveState::from_modes(&dm, &[(-1, c(EPS, 0.0))], &[]).unwrap();
        let d = to_diagonal(&s, &p).unwrap();
        assert!(d.wd.max_diff(&dm.mode(-1, c(0.0, -EPS))) < 1e-15);
        // J = 1 - iε e^{-iα} + iε e^{iα} + ε²
        let mut j = dm.constant(c(1.0 + EPS * EPS, 0.0));
        j.set(-1, c(0.0, -EPS));
        j.set(1, c(0.0, EPS));
        assert!(d.j.max_diff(&j) < 1e-15);
        let s = WaveState::from_modes(&dm, &[], &[(-1, c(EPS, 0.0))]).unwrap();
        let d = to_diagonal(&s, &p).unwrap();
        assert!(d.r.max_diff(&dm.mode(-1, c(0.0, -EPS))) < 1e-15);
    }

    #[test]
    fn auxiliary_single_modes() {
        let dm = dom();
        let p = Params::new(1.0, 1.0).unwrap();
        let s = WaveState::from_modes(&dm, &[], &[(-1, c(EPS, 0.0))]).unwrap();
        let (f, f1, _, t1) = auxiliary_transport(&s, &p).unwrap();
        assert!(f.max_diff(&dm.mode(-1, c(0.0, -EPS))) < 1e-15);
        assert_eq!(f1.max_abs_coeff(), 0.0);
        assert_eq!(t1.max_abs_coeff(), 0.0);
        let d = to_diagonal(&s, &p).unwrap();
        let (b, _, _) = transport_coefficients(&d, &p).unwrap();
        // -2ε sin α
        let sin = dm.from_fn(|a| c(-2.0 * EPS * a.sin(), 0.0));
        assert!(b.max_diff(&sin) < 1e-15);
        let (a, a1, _, n) = frequency_shift(&d, &p);
        assert!(a.max_diff(&dm.constant(c(EPS * EPS, 0.0))) < 1e-16);
        assert!(n.max_abs_coeff() < 1e-16);
        assert!(a1.max_diff(&sin) < 1e-15);
        let (m, m1, _) = m_fields(&d, &p);
        assert_eq!(m.max_abs_coeff() + m1.max_abs_coeff(), 0.0);
    }

    #[test]
    fn f1_leading_order() {
        let dm = dom();
        let p = Params::new(1.0, 1.0).unwrap();
        for eps in [1e-2, 1e-3] {
            let s = WaveState::from_modes(&dm, &[(-1, c(eps, 0.0))], &[]).unwrap();
            let (f, f1, _, _) = auxiliary_transport(&s, &p).unwrap();
            assert!(f.max_abs_coeff() < 1e-15);
            assert!(f1.max_diff(&dm.mode(-1, c(eps, 0.0))) < 5.0 * eps * eps);
        }
    }

    #[test]
    fn control_norm_examples() {
        let dm = Domain::periodic(64).unwrap();
        let p = Params::new(1.0, 1.0).unwrap();
        let d = DiagonalState::from_diagonal(dm.mode(-1, c(0.1, 0.0)), dm.zeros(), &p).unwrap();
        let s = WaveState::new(d.w.clone(), dm.zeros(), 0.0).unwrap();
        let cn = control_norms(&d, &s, &p);
        assert!((cn.a - (0.1 + 0.1 / 0.9)).abs() < 1e-12);
        let d = DiagonalState::from_diagonal(dm.zeros(), dm.mode(-1, c(0.0, -EPS)), &p).unwrap();
        let s = WaveState::flat(&dm);
        let cn = control_norms(&d, &s, &p);
        assert!((cn.a - EPS).abs() < 1e-15);
        assert!((cn.a_half - EPS).abs() < 1e-15);
        assert!((cn.au - (cn.a + cn.a_half + cn.a_one)).abs() < 1e-15);
    }

    #[test]
    fn linear_wave_branch() {
        let dm = dom();
        let p = Params::new(1.0, 1.0).unwrap();
        let s = linear_wave(&dm, &p, &[(-1, c(1.0, 0.0))]).unwrap();
        let tau = 0.5 * (1.0 + 5f64.sqrt());
        assert!((s.q.coeff(-1) - c(1.0 / (1.0 - tau), 0.0)).norm() < 1e-15);
        assert!(linear_wave(&dm, &p, &[(1, c(1.0, 0.0))]).is_err());
    }
}
