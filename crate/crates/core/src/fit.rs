//! Small fitting helpers shared by the experiments: log-log slopes and
//! amplitude-scaling (homogeneity) extraction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Fit(format!("need at least two points, got {} and {}", x.len(), y.len())));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Fit("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Scaling factors used for homogeneity extraction.
pub const LAMBDAS: [f64; 8] = [1.0, -1.0, 0.5, -0.5, 0.25, -0.25, 0.125, -0.125];

/// Taylor coefficients `c_0..c_7` of `λ ↦ f(λ)` from its values at
/// [`LAMBDAS`]. `c_k` is the degree-`k` homogeneous part of `f` at `λ = 1`,
/// up to the `λ⁸` remainder.
pub fn taylor_coefficients(mut f: impl FnMut(f64) -> Result<f64>) -> Result<[f64; 8]> {
    let m = LAMBDAS.len();
    let a = DMatrix::from_fn(m, m, |i, j| LAMBDAS[i].powi(j as i32));
    let mut b = DVector::zeros(m);
    for (i, &l) in LAMBDAS.iter().enumerate() {
        b[i] = f(l)?;
    }
    let x = a.lu().solve(&b).ok_or_else(|| Error::Fit("singular Vandermonde system".into()))?;
    let mut out = [0.0; 8];
    out.copy_from_slice(x.as_slice());
    Ok(out)
}
