//! Quadratic normal form: bilinear symbols, the spatial correction
//! `(W^{[2]}, Q^{[2]})` and the cubic residual of the corrected variables.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::rhs_full;
use crate::spectral::{SpectralField, I};
use crate::wavestate::{Params, WaveState};

/// The fourteen bilinear symbols. Holomorphic forms act as
/// `Σ S(ξ,η) f̂(ξ) ĝ(η) e^{i(ξ+η)α}`, mixed forms as
/// `Σ S(ξ,η) f̂(ξ) conj ĝ(η) e^{i(ξ-η)α}`; both frequencies are negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Bh,
    Ch,
    Dh,
    Fh,
    Hh,
    Ah,
    Ba,
    Ca,
    Da,
    Ea,
    Fa,
    Ha,
    Aa,
    Ga,
}

impl Symbol {
    pub const ALL: [Symbol; 14] = [
        Symbol::Bh,
        Symbol::Ch,
        Symbol::Dh,
        Symbol::Fh,
        Symbol::Hh,
        Symbol::Ah,
        Symbol::Ba,
        Symbol::Ca,
        Symbol::Da,
        Symbol::Ea,
        Symbol::Fa,
        Symbol::Ha,
        Symbol::Aa,
        Symbol::Ga,
    ];

    /// Scaling degree when `c` counts as half a derivative:
    /// `S(λξ, λη; λ^{1/2}c) = λ^d S(ξ, η; c)`.
    pub fn degree(self) -> f64 {
        use Symbol::*;
        match self {
            Fh | Fa => 0.5,
            Bh | Ah | Ba | Aa | Ga => 1.0,
            Dh | Hh | Da | Ea | Ha => 1.5,
            Ch | Ca => 2.0,
        }
    }

    pub fn is_holomorphic(self) -> bool {
        use Symbol::*;
        matches!(self, Bh | Ch | Dh | Fh | Hh | Ah)
    }
}

/// Closed-form symbols at fixed `(g, c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolTable {
    pub g: f64,
    pub c: f64,
}

pub fn symbols(p: &Params) -> SymbolTable {
    SymbolTable { g: p.g, c: p.c }
}

impl SymbolTable {
    pub fn eval(&self, s: Symbol, x: f64, y: f64) -> C64 {
        let (g, c) = (self.g, self.c);
        let c2 = c * c;
        let c3 = c2 * c;
        let c4 = c2 * c2;
        let g2 = g * g;
        let v = match s {
            Symbol::Bh => {
                -0.5 * (x + y) + c2 / (4.0 * g) * (x + y) * (x + y) / (x * y) - c4 / (8.0 * g2) * (x + y) / (x * y)
            }
            Symbol::Ch => -c2 / (8.0 * g2) * (x + y),
            Symbol::Dh => c3 / (4.0 * g2) * (x + y) / x - c / (2.0 * g) * (x + y),
            Symbol::Fh => c / 4.0 - c3 / (8.0 * g) * (x + y) / (x * y),
            Symbol::Hh => -c / (4.0 * g) * (x + y),
            Symbol::Ah => -y + c2 / (2.0 * g) * y / x + c2 / (4.0 * g),
            Symbol::Ba => -c4 / (4.0 * g2) / y + c2 / (2.0 * g) * x / y + c2 / (4.0 * g) - x,
            Symbol::Ca => -c2 / (4.0 * g2) * x,
            Symbol::Da => c3 / (4.0 * g2) - c / (2.0 * g) * x,
            Symbol::Ea => c3 / (4.0 * g2) * x / y - c / (2.0 * g) * x,
            Symbol::Fa => -c3 / (4.0 * g) / y + c / 2.0,
            Symbol::Ha => -c / (2.0 * g) * x,
            Symbol::Aa => c2 / (4.0 * g),
            Symbol::Ga => c2 / (2.0 * g) * x / y - x,
        };
        // every symbol is purely imaginary
        I * v
    }
}

/// Outcome of substituting the closed forms into one linear system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSystemReport {
    pub system: String,
    pub samples: usize,
    pub max_residual: f64,
    /// Largest magnitude of any single term seen, the scale of the test.
    pub max_coefficient: f64,
    pub pass: bool,
}

/// Each equation as its list of terms; the residual is their sum.
fn holomorphic_terms(t: &SymbolTable, x: f64, y: f64) -> Vec<Vec<C64>> {
    use Symbol::*;
    let (g, c) = (t.g, t.c);
    let s = |k, a, b| t.eval(k, a, b);
    let d_sym = 0.5 * (s(Dh, x, y) + s(Dh, y, x));
    let xd_sym = 0.5 * (x * s(Dh, x, y) + y * s(Dh, y, x));
    let a_sym = 0.5 * (s(Ah, x, y) + s(Ah, y, x));
    let xa_sym = 0.5 * (x * s(Ah, x, y) + y * s(Ah, y, x));
    vec![
        vec![2.0 * y * s(Bh, x, y), -2.0 * g * s(Ch, x, y), c * s(Dh, x, y), -(x + y) * s(Ah, x, y)],
        vec![2.0 * c * s(Ch, x, y), xd_sym, -(x + y) * s(Hh, x, y)],
        vec![g * d_sym, (x + y) * s(Fh, x, y), I * (c / 4.0) * (x + y)],
        vec![2.0 * y * s(Fh, x, y), -2.0 * g * s(Hh, x, y), g * s(Dh, x, y), -I * (c / 2.0) * y],
        vec![c * s(Hh, x, y), xa_sym, g * s(Ch, x, y), I * x * y],
        vec![g * a_sym, -g * s(Bh, x, y), c * s(Fh, x, y)],
    ]
}

fn mixed_terms(t: &SymbolTable, x: f64, y: f64) -> Vec<Vec<C64>> {
    use Symbol::*;
    let (g, c) = (t.g, t.c);
    let s = |k| t.eval(k, x, y);
    vec![
        vec![x * s(Ba), g * s(Ca), c * s(Ea), -(x - y) * s(Ga), I * x * y],
        vec![y * s(Ba), g * s(Ca), (x - y) * s(Aa), c * s(Da), I * x * y],
        vec![x * s(Da), -y * s(Ea), -(x - y) * s(Ha)],
        vec![g * s(Da), -g * s(Ea), -(x - y) * s(Fa), -I * (c / 2.0) * (y - x)],
        vec![x * s(Fa), g * s(Ha), g * s(Ea), I * (c / 2.0) * x],
        vec![y * s(Fa), g * s(Ha), 2.0 * c * s(Aa), -g * s(Da), -I * (c / 2.0) * y],
        vec![x * s(Aa), g * s(Ca), -c * s(Ha), -y * s(Ga), -I * x * y],
        vec![g * s(Aa), g * s(Ba), -c * s(Fa), -g * s(Ga)],
    ]
}

/// Residuals of the holomorphic (6 equations) and mixed (8 equations)
/// systems at one frequency pair.
pub fn symbol_residuals(t: &SymbolTable, x: f64, y: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(x < 0.0 && y < 0.0) || x + y == 0.0 || x * y == 0.0 || !(x * y).is_finite() {
        return Err(Error::DegenerateSample { xi: x, eta: y });
    }
    let sum = |eqs: Vec<Vec<C64>>| eqs.into_iter().map(|e| e.iter().sum::<C64>().norm()).collect();
    Ok((sum(holomorphic_terms(t, x, y)), sum(mixed_terms(t, x, y))))
}

/// Substitutes the closed forms into both systems at `samples` seeded
/// uniform pairs in `[-10, -0.1]²`. A system passes when its largest
/// residual is at most `1e-10 · (1 + largest term)`.
pub fn verify_symbol_systems(p: &Params, samples: usize, seed: u64) -> Result<Vec<SymbolSystemReport>> {
    let t = symbols(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = [(0.0f64, 0.0f64); 2];
    for _ in 0..samples {
        let x = rng.random_range(-10.0..-0.1);
        let y = rng.random_range(-10.0..-0.1);
        for (i, eqs) in [holomorphic_terms(&t, x, y), mixed_terms(&t, x, y)].into_iter().enumerate() {
            for e in eqs {
                stats[i].0 = stats[i].0.max(e.iter().sum::<C64>().norm());
                stats[i].1 = e.iter().map(|z| z.norm()).fold(stats[i].1, f64::max);
            }
        }
    }
    Ok(["holomorphic", "mixed"]
        .iter()
        .zip(stats)
        .map(|(name, (r, m))| SymbolSystemReport {
            system: name.to_string(),
            samples,
            max_residual: r,
            max_coefficient: m,
            pass: r <= 1e-10 * (1.0 + m),
        })
        .collect())
}

/// Quadratic part of the normal-form change of variables.
#[derive(Debug, Clone)]
pub struct QuadraticCorrection {
    pub w2: SpectralField,
    pub q2: SpectralField,
}

/// Physical-space evaluation; `∂⁻¹` discards the mean.
pub(crate) fn correction_raw(w: &SpectralField, q: &SpectralField, p: &Params) -> QuadraticCorrection {
    let (g, c) = (p.g, p.c);
    let wg = w.to_grid();
    let qg = q.to_grid();
    let wa = w.derivative().to_grid();
    let qa = q.derivative().to_grid();
    let ws = &wg + wg.conj();
    let qs = &qg + qg.conj();
    let inv = w.antiderivative_mean_free().to_grid();
    let dd = &inv - inv.conj();
    let w_abs2 = wg.abs2();
    let w_sq = &wg * &wg;

    let w2 = -(&ws * &wa) - (&qs * &wa + &ws * &qa) * (c / (2.0 * g))
        + (&dd * &wa + &w_sq + &w_abs2 * 0.5) * (I * (c * c / (2.0 * g)))
        - &qs * &qa * (c * c / (4.0 * g * g))
        + (&qs * &wg + &dd * &qa) * (I * (c.powi(3) / (4.0 * g * g)))
        + &dd * &wg * (c.powi(4) / (4.0 * g * g));
    let q2 = -(&ws * &qa) - &qs * &qa * (c / (2.0 * g))
        + (&w_sq + &w_abs2 * 2.0) * (I * (c / 4.0))
        + (&dd * &qa + &qs * &wg * 0.5) * (I * (c * c / (2.0 * g)))
        + &dd * &wg * (c.powi(3) / (4.0 * g));
    QuadraticCorrection { w2: w2.to_spectral().proj_p(), q2: q2.to_spectral().proj_p() }
}

fn check_mean(s: &WaveState, p: &Params) -> Result<()> {
    s.w.antiderivative(p.tol.mean_tol).map(|_| ())
}

/// `(W^{[2]}, Q^{[2]})` from the spatial formulas, products dealiased on
/// the padded grid and projected by `P`. Requires mean-zero `W`.
pub fn quadratic_correction(s: &WaveState, p: &Params) -> Result<QuadraticCorrection> {
    check_mean(s, p)?;
    Ok(correction_raw(&s.w, &s.q, p))
}

/// The same correction assembled mode by mode from the symbol table.
/// Quadratic in the number of active modes; meant for cross-checks on
/// band-limited data (output frequencies outside the grid are dropped).
pub fn quadratic_correction_symbols(s: &WaveState, p: &Params) -> Result<QuadraticCorrection> {
    check_mean(s, p)?;
    let t = symbols(p);
    let dom = s.domain();
    let active = |f: &SpectralField| -> Vec<(i64, f64, C64)> {
        f.modes().filter(|&(k, v)| k <= 0 && k > dom.kmin() && v != C64::new(0.0, 0.0)).map(|(k, v)| (k, dom.xi(k), v)).collect()
    };
    let w = active(&s.w);
    let q = active(&s.q);
    let mut w2 = dom.zeros();
    let mut q2 = dom.zeros();
    let (lo, hi) = (dom.kmin(), dom.kmax_index());
    let add = |f: &mut SpectralField, k: i64, v: C64| {
        if k >= lo && k <= hi {
            f.set(k, f.coeff(k) + v);
        }
    };
    // holomorphic pairs: (first input, second input, symbol, target)
    let hol: [(&[(i64, f64, C64)], &[(i64, f64, C64)], Symbol, bool); 6] = [
        (&w, &w, Symbol::Bh, true),
        (&q, &q, Symbol::Ch, true),
        (&w, &q, Symbol::Dh, true),
        (&w, &w, Symbol::Fh, false),
        (&q, &q, Symbol::Hh, false),
        (&w, &q, Symbol::Ah, false),
    ];
    for (f, gg, sym, into_w) in hol {
        for &(k1, x, a) in f {
            for &(k2, y, b) in gg {
                let v = t.eval(sym, x, y) * a * b;
                add(if into_w { &mut w2 } else { &mut q2 }, k1 + k2, v);
            }
        }
    }
    let mixed: [(&[(i64, f64, C64)], &[(i64, f64, C64)], Symbol, bool); 8] = [
        (&w, &w, Symbol::Ba, true),
        (&q, &q, Symbol::Ca, true),
        (&w, &q, Symbol::Da, true),
        (&q, &w, Symbol::Ea, true),
        (&w, &w, Symbol::Fa, false),
        (&q, &q, Symbol::Ha, false),
        (&w, &q, Symbol::Aa, false),
        (&q, &w, Symbol::Ga, false),
    ];
    for (f, gg, sym, into_w) in mixed {
        for &(k1, x, a) in f {
            for &(k2, y, b) in gg {
                let v = t.eval(sym, x, y) * a * b.conj();
                add(if into_w { &mut w2 } else { &mut q2 }, k1 - k2, v);
            }
        }
    }
    Ok(QuadraticCorrection { w2: w2.proj_p(), q2: q2.proj_p() })
}

/// Which flow supplies the time derivatives in [`cubic_residual_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualFlow {
    #[default]
    Full,
    /// Linear flow only; the residual is then the quadratic defect itself.
    LinearOnly,
}

/// L² norms of `W̃_t + Q̃_α` and `Q̃_t - igW̃ + icQ̃` for `W̃ = W + W^{[2]}`,
/// `Q̃ = Q + Q^{[2]}`.
pub fn cubic_residual(s: &WaveState, p: &Params) -> Result<(f64, f64)> {
    cubic_residual_with(s, p, ResidualFlow::Full)
}

pub fn cubic_residual_with(s: &WaveState, p: &Params, flow: ResidualFlow) -> Result<(f64, f64)> {
    check_mean(s, p)?;
    let (wt, qt) = match flow {
        ResidualFlow::Full => {
            let r = rhs_full(s, p)?;
            (r.dw, r.dq)
        }
        ResidualFlow::LinearOnly => (-s.q.derivative(), s.w.scale(I * p.g) - s.q.scale(I * p.c)),
    };
    // the correction is quadratic, so polarization gives its derivative exactly
    let plus = correction_raw(&(&s.w + &wt), &(&s.q + &qt), p);
    let minus = correction_raw(&(&s.w - &wt), &(&s.q - &qt), p);
    let w2t = (&plus.w2 - &minus.w2) * 0.5;
    let q2t = (&plus.q2 - &minus.q2) * 0.5;
    let nf = correction_raw(&s.w, &s.q, p);
    let wn = &s.w + &nf.w2;
    let qn = &s.q + &nf.q2;
    let rw = &wt + &w2t + qn.derivative();
    let rq = &qt + &q2t - wn.scale(I * p.g) + qn.scale(I * p.c);
    Ok((rw.l2_norm(), rq.l2_norm()))
}
