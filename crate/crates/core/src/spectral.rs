//! Periodic Fourier fields on `[0, L)`.
//!
//! Coefficients are stored by ascending wavenumber `k = -N/2 .. N/2-1`, with
//! `f(α) = Σ f̂(k) e^{2πikα/L}`. Nonlinear algebra happens on a grid padded
//! by a factor two and is truncated back to `N` modes, so quadratic products
//! of band-limited fields are alias-free.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

struct Plans {
    n: usize,
    m: usize,
    length: f64,
    fwd_n: Arc<dyn Fft<f64>>,
    inv_n: Arc<dyn Fft<f64>>,
    fwd_m: Arc<dyn Fft<f64>>,
    inv_m: Arc<dyn Fft<f64>>,
}

/// Periodic interval of length `L` resolved by `N` modes. Cheap to clone.
#[derive(Clone)]
pub struct Domain(Arc<Plans>);

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain")
            .field("n", &self.0.n)
            .field("length", &self.0.length)
            .finish()
    }
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.n == other.0.n && self.0.length.to_bits() == other.0.length.to_bits())
    }
}

impl Domain {
    /// `n` must be even and at least 8; the padded grid has `2n` points.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidDomain(format!("N = {n} must be even and >= 8")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidDomain(format!("L = {length} must be positive")));
        }
        let m = 2 * n;
        let mut planner = FftPlanner::new();
        Ok(Domain(Arc::new(Plans {
            n,
            m,
            length,
            fwd_n: planner.plan_fft_forward(n),
            inv_n: planner.plan_fft_inverse(n),
            fwd_m: planner.plan_fft_forward(m),
            inv_m: planner.plan_fft_inverse(m),
        })))
    }

    /// `N` modes on `[0, 2π)`.
    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * std::f64::consts::PI)
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn padded_len(&self) -> usize {
        self.0.m
    }

    pub fn length(&self) -> f64 {
        self.0.length
    }

    /// Physical frequency `2πk/L`.
    pub fn xi(&self, k: i64) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.0.length
    }

    /// Largest resolved frequency `πN/L`.
    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI * self.0.n as f64 / self.0.length
    }

    pub fn kmin(&self) -> i64 {
        -(self.0.n as i64) / 2
    }

    pub fn kmax_index(&self) -> i64 {
        self.0.n as i64 / 2 - 1
    }

    pub fn zeros(&self) -> SpectralField {
        SpectralField { dom: self.clone(), c: vec![C64::new(0.0, 0.0); self.0.n] }
    }

    pub fn constant(&self, value: C64) -> SpectralField {
        let mut f = self.zeros();
        f.set(0, value);
        f
    }

    /// `amp · e^{2πikα/L}`.
    pub fn mode(&self, k: i64, amp: C64) -> SpectralField {
        let mut f = self.zeros();
        f.set(k, amp);
        f
    }

    /// Collocation points `α_j = jL/N`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.0.n).map(|j| j as f64 * self.0.length / self.0.n as f64).collect()
    }

    /// Padded collocation points `α_j = jL/(2N)`.
    pub fn padded_nodes(&self) -> Vec<f64> {
        (0..self.0.m).map(|j| j as f64 * self.0.length / self.0.m as f64).collect()
    }

    /// Samples on the `N`-point grid to coefficients.
    pub fn forward_transform(&self, samples: &[C64]) -> Result<SpectralField> {
        let n = self.0.n;
        if samples.len() != n {
            return Err(Error::Length { expected: n, got: samples.len() });
        }
        let mut buf = samples.to_vec();
        self.0.fwd_n.process(&mut buf);
        let scale = 1.0 / n as f64;
        let mut f = self.zeros();
        for k in self.kmin()..=self.kmax_index() {
            f.set(k, buf[wrap(k, n)] * scale);
        }
        Ok(f)
    }

    /// Coefficients from a function evaluated at the `N` nodes.
    pub fn from_fn(&self, mut func: impl FnMut(f64) -> C64) -> SpectralField {
        let samples: Vec<C64> = self.nodes().into_iter().map(&mut func).collect();
        self.forward_transform(&samples).expect("length matches by construction")
    }

    fn grid_from_padded(&self, mut buf: Vec<C64>) -> Grid {
        self.0.inv_m.process(&mut buf);
        Grid { dom: self.clone(), v: buf }
    }
}

fn wrap(k: i64, len: usize) -> usize {
    if k >= 0 {
        k as usize
    } else {
        (len as i64 + k) as usize
    }
}

/// Holomorphy defect of a field: the ℓ² mass on strictly positive modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolomorphyReport {
    pub defect: f64,
    pub relative_defect: f64,
}

/// Fourier coefficients of a periodic complex function.
#[derive(Clone, PartialEq)]
pub struct SpectralField {
    dom: Domain,
    c: Vec<C64>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField").field("n", &self.dom.n()).finish()
    }
}

impl SpectralField {
    pub fn domain(&self) -> &Domain {
        &self.dom
    }

    fn idx(&self, k: i64) -> usize {
        (k + self.dom.n() as i64 / 2) as usize
    }

    /// Coefficient at wavenumber `k`; zero outside the resolved band.
    pub fn coeff(&self, k: i64) -> C64 {
        if k < self.dom.kmin() || k > self.dom.kmax_index() {
            C64::new(0.0, 0.0)
        } else {
            self.c[self.idx(k)]
        }
    }

    pub fn set(&mut self, k: i64, v: C64) {
        assert!(k >= self.dom.kmin() && k <= self.dom.kmax_index(), "wavenumber {k} out of band");
        let j = self.idx(k);
        self.c[j] = v;
    }

    /// Coefficients by ascending wavenumber.
    pub fn coeffs(&self) -> &[C64] {
        &self.c
    }

    pub fn from_coeffs(dom: &Domain, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != dom.n() {
            return Err(Error::Length { expected: dom.n(), got: coeffs.len() });
        }
        Ok(SpectralField { dom: dom.clone(), c: coeffs })
    }

    /// `(k, f̂(k))` by ascending `k`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let kmin = self.dom.kmin();
        self.c.iter().enumerate().map(move |(j, &v)| (kmin + j as i64, v))
    }

    fn map_modes(&self, mut f: impl FnMut(i64, C64) -> C64) -> SpectralField {
        let kmin = self.dom.kmin();
        let c = self.c.iter().enumerate().map(|(j, &v)| f(kmin + j as i64, v)).collect();
        SpectralField { dom: self.dom.clone(), c }
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Values at the `N` nodes.
    pub fn inverse_transform(&self) -> Vec<C64> {
        let n = self.dom.n();
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for (k, v) in self.modes() {
            buf[wrap(k, n)] = v;
        }
        self.dom.0.inv_n.process(&mut buf);
        buf
    }

    /// Values on the padded grid.
    pub fn to_grid(&self) -> Grid {
        let m = self.dom.padded_len();
        let mut buf = vec![C64::new(0.0, 0.0); m];
        for (k, v) in self.modes() {
            buf[wrap(k, m)] = v;
        }
        self.dom.grid_from_padded(buf)
    }

    /// Multiplier `(Hf)^(k) = -i sgn(k) f̂(k)`.
    pub fn hilbert(&self) -> SpectralField {
        self.map_modes(|k, v| -I * (k.signum() as f64) * v)
    }

    /// Projection onto nonpositive modes with the zero mode halved, `P = (I - iH)/2`.
    pub fn proj_p(&self) -> SpectralField {
        self.map_modes(|k, v| match k.cmp(&0) {
            std::cmp::Ordering::Less => v,
            std::cmp::Ordering::Equal => 0.5 * v,
            std::cmp::Ordering::Greater => C64::new(0.0, 0.0),
        })
    }

    /// `P̄ = I - P`.
    pub fn proj_pbar(&self) -> SpectralField {
        self.map_modes(|k, v| match k.cmp(&0) {
            std::cmp::Ordering::Less => C64::new(0.0, 0.0),
            std::cmp::Ordering::Equal => 0.5 * v,
            std::cmp::Ordering::Greater => v,
        })
    }

    /// Drops positive modes and the unpaired `-N/2` mode and keeps the zero
    /// mode whole. Used as the final projection of evolution right-hand
    /// sides; `-N/2` is already invisible to derivatives and conjugation.
    pub fn holomorphic_part(&self) -> SpectralField {
        let kmin = self.dom.kmin();
        self.map_modes(|k, v| if k > 0 || k == kmin { C64::new(0.0, 0.0) } else { v })
    }

    /// `∂_α`; the `-N/2` mode is zeroed.
    pub fn derivative(&self) -> SpectralField {
        let dom = self.dom.clone();
        let kmin = dom.kmin();
        self.map_modes(|k, v| if k == kmin { C64::new(0.0, 0.0) } else { I * dom.xi(k) * v })
    }

    pub fn derivative_n(&self, order: usize) -> SpectralField {
        (0..order).fold(self.clone(), |f, _| f.derivative())
    }

    /// `|D|^{1/2}`.
    pub fn half_derivative(&self) -> SpectralField {
        let dom = self.dom.clone();
        self.map_modes(|k, v| dom.xi(k).abs().sqrt() * v)
    }

    /// `|D| = H∂`.
    pub fn abs_derivative(&self) -> SpectralField {
        let dom = self.dom.clone();
        let kmin = dom.kmin();
        self.map_modes(|k, v| if k == kmin { C64::new(0.0, 0.0) } else { dom.xi(k).abs() * v })
    }

    /// `∂⁻¹` on mean-zero fields. The mean must not exceed `tol · (1 + ‖f̂‖)`.
    pub fn antiderivative(&self, tol: f64) -> Result<SpectralField> {
        let mean = self.coeff(0).norm();
        if mean > tol * (1.0 + self.coeff_norm()) {
            return Err(Error::NonZeroMean { mean });
        }
        Ok(self.antiderivative_mean_free())
    }

    /// `∂⁻¹` after discarding the mean.
    pub fn antiderivative_mean_free(&self) -> SpectralField {
        let dom = self.dom.clone();
        self.map_modes(|k, v| if k == 0 { C64::new(0.0, 0.0) } else { v / (I * dom.xi(k)) })
    }

    /// Pointwise complex conjugate, `ĝ(k) = conj f̂(-k)`. The `-N/2` mode has
    /// no partner and is dropped.
    pub fn conj(&self) -> SpectralField {
        let kmin = self.dom.kmin();
        self.map_modes(|k, _| if k == kmin { C64::new(0.0, 0.0) } else { self.coeff(-k).conj() })
    }

    /// Real part as a field (Hermitian symmetrization).
    pub fn re(&self) -> SpectralField {
        (self + &self.conj()) * 0.5
    }

    pub fn im(&self) -> SpectralField {
        (self - &self.conj()) * C64::new(0.0, -0.5)
    }

    pub fn mean(&self) -> C64 {
        self.coeff(0)
    }

    pub fn with_mean(&self, mean: C64) -> SpectralField {
        let mut f = self.clone();
        f.set(0, mean);
        f
    }

    /// `∫_0^L f dα`.
    pub fn integral(&self) -> C64 {
        self.coeff(0) * self.dom.length()
    }

    /// `(Σ|f̂|²)^{1/2}`.
    pub fn coeff_norm(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖f‖_{L²}`, Parseval: `(L Σ|f̂|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.dom.length() * self.c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Homogeneous `Ḣ^{1/2}` seminorm.
    pub fn hdot_half_norm(&self) -> f64 {
        let l = self.dom.length();
        (l * self.modes().map(|(k, v)| self.dom.xi(k).abs() * v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn holomorphy_report(&self, floor: f64) -> HolomorphyReport {
        let defect = self.modes().filter(|&(k, _)| k > 0).map(|(_, v)| v.norm_sqr()).sum::<f64>().sqrt();
        HolomorphyReport { defect, relative_defect: defect / self.coeff_norm().max(floor) }
    }

    /// Dealiased product on the padded grid.
    pub fn product(&self, other: &SpectralField) -> Result<SpectralField> {
        if self.dom != other.dom {
            return Err(Error::DomainMismatch);
        }
        Ok((&self.to_grid() * &other.to_grid()).to_spectral())
    }

    /// `1/(1+f) - 1` computed on the padded grid, so that
    /// `f·r + r = -f` with `r` the result plus one. Fails when
    /// `min|1+f| ≤ cusp_floor`.
    pub fn reciprocal_one_plus(&self, cusp_floor: f64) -> Result<SpectralField> {
        let g = self.to_grid();
        g.check_cusp(cusp_floor)?;
        Ok(g.map(|z| 1.0 / (1.0 + z)).to_spectral())
    }

    pub fn scale(&self, s: C64) -> SpectralField {
        self.map_modes(|_, v| s * v)
    }

    fn zip(&self, other: &SpectralField, f: impl Fn(C64, C64) -> C64) -> SpectralField {
        assert!(self.dom == other.dom, "fields live on different domains");
        let c = self.c.iter().zip(&other.c).map(|(&a, &b)| f(a, b)).collect();
        SpectralField { dom: self.dom.clone(), c }
    }

    /// Sets every coefficient with `|k| > kcut` to zero.
    pub fn lowpass(&self, kcut: i64) -> SpectralField {
        self.map_modes(|k, v| if k.abs() > kcut { C64::new(0.0, 0.0) } else { v })
    }

    /// Largest coefficient difference, for tests.
    pub fn max_diff(&self, other: &SpectralField) -> f64 {
        self.zip(other, |a, b| a - b).max_abs_coeff()
    }
}

macro_rules! field_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&SpectralField> for &SpectralField {
            type Output = SpectralField;
            fn $m(self, rhs: &SpectralField) -> SpectralField {
                self.zip(rhs, |a, b| a $op b)
            }
        }
        impl $tr<SpectralField> for SpectralField {
            type Output = SpectralField;
            fn $m(self, rhs: SpectralField) -> SpectralField {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&SpectralField> for SpectralField {
            type Output = SpectralField;
            fn $m(self, rhs: &SpectralField) -> SpectralField {
                (&self).$m(rhs)
            }
        }
        impl $tr<SpectralField> for &SpectralField {
            type Output = SpectralField;
            fn $m(self, rhs: SpectralField) -> SpectralField {
                self.$m(&rhs)
            }
        }
    };
}
field_binop!(Add, add, +);
field_binop!(Sub, sub, -);

impl Mul<C64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, s: C64) -> SpectralField {
        self.scale(s)
    }
}
impl Mul<C64> for SpectralField {
    type Output = SpectralField;
    fn mul(self, s: C64) -> SpectralField {
        self.scale(s)
    }
}
impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, s: f64) -> SpectralField {
        self.scale(C64::new(s, 0.0))
    }
}
impl Mul<f64> for SpectralField {
    type Output = SpectralField;
    fn mul(self, s: f64) -> SpectralField {
        self.scale(C64::new(s, 0.0))
    }
}
impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(C64::new(-1.0, 0.0))
    }
}
impl Neg for SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// Values of a field on the padded grid, where pointwise algebra happens.
#[derive(Clone)]
pub struct Grid {
    dom: Domain,
    v: Vec<C64>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("len", &self.v.len()).finish()
    }
}

impl Grid {
    pub fn domain(&self) -> &Domain {
        &self.dom
    }

    pub fn values(&self) -> &[C64] {
        &self.v
    }

    pub fn constant(dom: &Domain, value: C64) -> Grid {
        Grid { dom: dom.clone(), v: vec![value; dom.padded_len()] }
    }

    pub fn from_values(dom: &Domain, v: Vec<C64>) -> Result<Grid> {
        if v.len() != dom.padded_len() {
            return Err(Error::Length { expected: dom.padded_len(), got: v.len() });
        }
        Ok(Grid { dom: dom.clone(), v })
    }

    /// Back to `N` coefficients (truncation).
    pub fn to_spectral(&self) -> SpectralField {
        let m = self.dom.padded_len();
        let mut buf = self.v.clone();
        self.dom.0.fwd_m.process(&mut buf);
        let scale = 1.0 / m as f64;
        let mut f = self.dom.zeros();
        for k in self.dom.kmin()..=self.dom.kmax_index() {
            f.set(k, buf[wrap(k, m)] * scale);
        }
        f
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Grid {
        Grid { dom: self.dom.clone(), v: self.v.iter().map(|&z| f(z)).collect() }
    }

    fn zip(&self, other: &Grid, f: impl Fn(C64, C64) -> C64) -> Grid {
        assert!(self.dom == other.dom, "grids live on different domains");
        Grid { dom: self.dom.clone(), v: self.v.iter().zip(&other.v).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn conj(&self) -> Grid {
        self.map(|z| z.conj())
    }

    pub fn re(&self) -> Grid {
        self.map(|z| C64::new(z.re, 0.0))
    }

    pub fn im(&self) -> Grid {
        self.map(|z| C64::new(z.im, 0.0))
    }

    pub fn abs2(&self) -> Grid {
        self.map(|z| C64::new(z.norm_sqr(), 0.0))
    }

    pub fn exp(&self) -> Grid {
        self.map(|z| z.exp())
    }

    pub fn recip(&self) -> Grid {
        self.map(|z| 1.0 / z)
    }

    /// Truncate, apply `P`, return to the grid.
    pub fn p(&self) -> Grid {
        self.to_spectral().proj_p().to_grid()
    }

    pub fn pbar(&self) -> Grid {
        self.to_spectral().proj_pbar().to_grid()
    }

    /// Truncate to the resolved band and return to the grid.
    pub fn truncate(&self) -> Grid {
        self.to_spectral().to_grid()
    }

    /// `∫_0^L` by the padded trapezoid rule.
    pub fn integrate(&self) -> C64 {
        let s: C64 = self.v.iter().sum();
        s * (self.dom.length() / self.v.len() as f64)
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_im(&self) -> f64 {
        self.v.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn min_re(&self) -> f64 {
        self.v.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }

    /// `(min_α |1+f|, argmin α)`.
    pub fn min_one_plus(&self) -> (f64, f64) {
        let h = self.dom.length() / self.v.len() as f64;
        self.v
            .iter()
            .enumerate()
            .map(|(j, z)| ((1.0 + z).norm(), j as f64 * h))
            .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc })
    }

    pub fn check_cusp(&self, floor: f64) -> Result<()> {
        let (min, at) = self.min_one_plus();
        if !min.is_finite() || min <= floor {
            return Err(Error::Cusp { min, at });
        }
        Ok(())
    }
}

macro_rules! grid_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&Grid> for &Grid {
            type Output = Grid;
            fn $m(self, rhs: &Grid) -> Grid {
                self.zip(rhs, |a, b| a $op b)
            }
        }
        impl $tr<Grid> for Grid {
            type Output = Grid;
            fn $m(self, rhs: Grid) -> Grid {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Grid> for Grid {
            type Output = Grid;
            fn $m(self, rhs: &Grid) -> Grid {
                (&self).$m(rhs)
            }
        }
        impl $tr<Grid> for &Grid {
            type Output = Grid;
            fn $m(self, rhs: Grid) -> Grid {
                self.$m(&rhs)
            }
        }
        impl $tr<C64> for &Grid {
            type Output = Grid;
            fn $m(self, s: C64) -> Grid {
                self.map(|a| a $op s)
            }
        }
        impl $tr<C64> for Grid {
            type Output = Grid;
            fn $m(self, s: C64) -> Grid {
                self.map(|a| a $op s)
            }
        }
        impl $tr<f64> for &Grid {
            type Output = Grid;
            fn $m(self, s: f64) -> Grid {
                self.map(|a| a $op s)
            }
        }
        impl $tr<f64> for Grid {
            type Output = Grid;
            fn $m(self, s: f64) -> Grid {
                self.map(|a| a $op s)
            }
        }
        impl $tr<&Grid> for C64 {
            type Output = Grid;
            fn $m(self, g: &Grid) -> Grid {
                g.map(|a| self $op a)
            }
        }
        impl $tr<Grid> for C64 {
            type Output = Grid;
            fn $m(self, g: Grid) -> Grid {
                g.map(|a| self $op a)
            }
        }
        impl $tr<&Grid> for f64 {
            type Output = Grid;
            fn $m(self, g: &Grid) -> Grid {
                g.map(|a| self $op a)
            }
        }
        impl $tr<Grid> for f64 {
            type Output = Grid;
            fn $m(self, g: Grid) -> Grid {
                g.map(|a| self $op a)
            }
        }
    };
}
grid_binop!(Add, add, +);
grid_binop!(Sub, sub, -);
grid_binop!(Mul, mul, *);
grid_binop!(Div, div, /);

impl Neg for &Grid {
    type Output = Grid;
    fn neg(self) -> Grid {
        self.map(|a| -a)
    }
}
impl Neg for Grid {
    type Output = Grid;
    fn neg(self) -> Grid {
        self.map(|a| -a)
    }
}
