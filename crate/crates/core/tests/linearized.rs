use holowave::evolution::{rhs_full, step, StepOptions};
use holowave::linearized::*;
use holowave::wavestate::{control_norms, energy_norm};
use holowave::{Domain, Params, SpectralField, WaveState};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_holo(dom: &Domain, rng: &mut ChaCha8Rng, eps: f64, kmax: i64, mean: bool) -> SpectralField {
    let mut f = dom.zeros();
    let start = if mean { 0 } else { 1 };
    for j in start..=kmax {
        let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        f.set(-j, a * eps / ((j.max(1) * j.max(1)) as f64));
    }
    f
}

fn wave(w: SpectralField, q: SpectralField) -> WaveState {
    WaveState { w, q, t: 0.0 }
}

#[test]
fn instantaneous_tangent_matches_linearized_rhs() {
    let dom = Domain::periodic(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for cc in [0.0, 1.0] {
        let p = Params::new(1.0, cc).unwrap();
        let s = wave(random_holo(&dom, &mut rng, 0.05, 6, false), random_holo(&dom, &mut rng, 0.05, 6, true));
        let dw = random_holo(&dom, &mut rng, 1.0, 6, true);
        let dq = random_holo(&dom, &mut rng, 1.0, 6, true);
        let h = 1e-6;
        let plus = rhs_full(&wave(&s.w + &(&dw * h), &s.q + &(&dq * h)), &p).unwrap();
        let minus = rhs_full(&wave(&s.w - &(&dw * h), &s.q - &(&dq * h)), &p).unwrap();
        let wt = (&plus.dw - &minus.dw) * (0.5 / h);
        let qt = (&plus.dq - &minus.dq) * (0.5 / h);
        let bg = Background::new(s.clone(), &p).unwrap();
        let full = rhs_full(&s, &p).unwrap();
        // r_t = q_t - R_t w - R w_t with R_t from the differentiated chain rule
        let wd = bg.diag.wd.to_grid();
        let r_t = ((full.dq.derivative().to_grid() - bg.diag.r.to_grid() * full.dw.derivative().to_grid()) / (&wd + 1.0))
            .to_spectral();
        let rt = (qt.to_grid() - r_t.to_grid() * dw.to_grid() - bg.diag.r.to_grid() * wt.to_grid()).to_spectral();
        let l = LinearizedState::from_tangent(&bg, &dw, &dq);
        let (lw, lr) = rhs_linearized(&l, &bg, &p).unwrap();
        assert!(lw.max_diff(&wt) < 1e-8, "c={cc} {}", lw.max_diff(&wt));
        assert!(lr.max_diff(&rt.holomorphic_part()) < 1e-8, "c={cc} {}", lr.max_diff(&rt.holomorphic_part()));
    }
}

/// Finite-difference tangent of the nonlinear flow against the lockstep
/// linearized flow; returns the error for perturbation size `h`.
pub fn tangent_error(h: f64, p: &Params) -> f64 {
    tangent_error_dt(h, p, 0.01, 50)
}

pub fn tangent_error_dt(h: f64, p: &Params, dt: f64, steps: usize) -> f64 {
    let dom = Domain::periodic(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s0 = wave(random_holo(&dom, &mut rng, 0.05, 4, false), random_holo(&dom, &mut rng, 0.05, 4, true));
    let dw = random_holo(&dom, &mut rng, 1.0, 4, false);
    let dq = random_holo(&dom, &mut rng, 1.0, 4, true);
    let opts = StepOptions::default();
    let mut sp = wave(&s0.w + &(&dw * h), &s0.q + &(&dq * h));
    let mut sm = wave(&s0.w - &(&dw * h), &s0.q - &(&dq * h));
    let mut s = s0.clone();
    let mut l = LinearizedState::from_tangent(&Background::new(s0.clone(), p).unwrap(), &dw, &dq);
    for _ in 0..steps {
        sp = step(&sp, dt, p, &opts).unwrap();
        sm = step(&sm, dt, p, &opts).unwrap();
        (s, l) = lockstep_step(&s, &l, dt, p).unwrap();
    }
    let fw = (&sp.w - &sm.w) * (0.5 / h);
    let fq = (&sp.q - &sm.q) * (0.5 / h);
    let fl = LinearizedState::from_tangent(&Background::new(s, p).unwrap(), &fw, &fq);
    (&fl.w - &l.w).l2_norm() + (&fl.r - &l.r).l2_norm()
}

#[test]
fn tangent_flow_second_order_in_perturbation() {
    let p = Params::new(1.0, 1.0).unwrap();
    let hs = [1e-2, 1e-3];
    let e: Vec<f64> = hs.iter().map(|&h| tangent_error(h, &p)).collect();
    let slope = (e[0] / e[1]).ln() / (hs[0] / hs[1]).ln();
    assert!((slope - 2.0).abs() < 0.2, "slope {slope}, {e:?}");
}

#[test]
fn quadratic_parts_scale_linearly_in_background() {
    let dom = Domain::periodic(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = Params::new(1.0, 1.0).unwrap();
    let w0 = random_holo(&dom, &mut rng, 1.0, 5, false);
    let q0 = random_holo(&dom, &mut rng, 1.0, 5, true);
    let l = LinearizedState { w: random_holo(&dom, &mut rng, 1.0, 5, false), r: random_holo(&dom, &mut rng, 1.0, 5, false) };
    let lams = [1e-2, 1e-3];
    let mut lin = Vec::new();
    let mut rem = Vec::new();
    for &lam in &lams {
        let bg = Background::new(wave(&w0 * lam, &q0 * lam), &p).unwrap();
        let s = lin_sources(&l, &bg, &p);
        let quad_g = &s.pg2 - &s.pg2_1.scale(C64::new(0.0, 0.5 * p.c));
        let quad_k = &s.pk2 - &s.pk2_1.scale(C64::new(0.0, 0.5 * p.c));
        lin.push(quad_g.l2_norm() + quad_k.l2_norm());
        // the listed quadratic parts omit zero-mode constants from P[P̄ f]
        let nz = |f: SpectralField| f.with_mean(C64::new(0.0, 0.0)).l2_norm();
        rem.push(nz(&s.gu - &quad_g) + nz(&s.ku - &quad_k));
    }
    let ratio = lams[0] / lams[1];
    let s_lin = (lin[0] / lin[1]).ln() / ratio.ln();
    let s_rem = (rem[0] / rem[1]).ln() / ratio.ln();
    assert!((s_lin - 1.0).abs() < 0.05, "{s_lin}");
    assert!((s_rem - 2.0).abs() < 0.05, "{s_rem}");
}

#[test]
fn sources_without_vorticity_have_no_c_blocks() {
    let dom = Domain::periodic(32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = wave(random_holo(&dom, &mut rng, 0.05, 4, false), random_holo(&dom, &mut rng, 0.05, 4, true));
    let l = LinearizedState { w: random_holo(&dom, &mut rng, 1.0, 4, false), r: random_holo(&dom, &mut rng, 1.0, 4, false) };
    let p0 = Params::new(1.0, 0.0).unwrap();
    let p1 = Params::new(1.0, 1.0).unwrap();
    let s0 = lin_sources(&l, &Background::new(s.clone(), &p0).unwrap(), &p0);
    let s1 = lin_sources(&l, &Background::new(s, &p1).unwrap(), &p1);
    // at c = 0 the sources reduce to 𝒢, 𝒦; the c-blocks are exactly -(c/2)i𝒢₁
    let g1 = (&s1.gu - &s0.gu).scale(C64::new(0.0, 2.0));
    assert!(g1.max_abs_coeff() > 1e-4);
    let zero = lin_sources(&LinearizedState::zeros_like(&dom.zeros()), &Background::new(WaveState::flat(&dom), &p1).unwrap(), &p1);
    assert_eq!(zero.gu.max_abs_coeff() + zero.ku.max_abs_coeff() + zero.pg2.max_abs_coeff(), 0.0);
}

#[test]
fn zero_background_linear_energy_conserved() {
    let dom = Domain::periodic(32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = Params::new(1.0, 1.0).unwrap();
    let mut s = WaveState::flat(&dom);
    let mut l = LinearizedState { w: random_holo(&dom, &mut rng, 1.0, 4, false), r: random_holo(&dom, &mut rng, 1.0, 4, false) };
    let bg = Background::new(s.clone(), &p).unwrap();
    let e0 = energy_lin2(&l, &bg, &p);
    for _ in 0..1000 {
        (s, l) = lockstep_step(&s, &l, 0.01, &p).unwrap();
    }
    let e1 = energy_lin2(&l, &bg, &p);
    assert!(((e1 - e0) / e0).abs() < 1e-9, "{e0} {e1}");
}

#[test]
fn cubic_linear_energy_close_to_quadratic() {
    let dom = Domain::periodic(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = Params::new(1.0, 1.0).unwrap();
    for eps in [0.005, 0.01, 0.02] {
        let s = wave(random_holo(&dom, &mut rng, eps, 4, false), random_holo(&dom, &mut rng, eps, 4, true));
        let bg = Background::new(s.clone(), &p).unwrap();
        let a_bar = control_norms(&bg.diag, &s, &p).au;
        assert!(a_bar <= 0.2, "{a_bar}");
        let l = LinearizedState { w: random_holo(&dom, &mut rng, 1.0, 6, false), r: random_holo(&dom, &mut rng, 1.0, 6, false) };
        let e2 = energy_lin2(&l, &bg, &p);
        let e3 = energy_lin3(&l, &bg, &p);
        assert!((e3 - e2).abs() <= 10.0 * a_bar * e2, "eps {eps}: {e2} {e3} {a_bar}");
        // E⁽²⁾ is comparable with the flat energy norm
        let n2 = energy_norm(&l.w, &l.r).powi(2);
        assert!((e2 - n2).abs() <= 10.0 * a_bar * n2);
    }
}

#[test]
fn linear_energy_growth_within_envelope() {
    let dom = Domain::periodic(32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = Params::new(1.0, 1.0).unwrap();
    let mut s = wave(random_holo(&dom, &mut rng, 0.05, 3, false), random_holo(&dom, &mut rng, 0.05, 3, true));
    let mut l = LinearizedState { w: random_holo(&dom, &mut rng, 1.0, 3, false), r: random_holo(&dom, &mut rng, 1.0, 3, false) };
    let dt = 0.01;
    let e0 = energy_lin2(&l, &Background::new(s.clone(), &p).unwrap(), &p);
    let mut integral = 0.0;
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let bg = Background::new(s.clone(), &p).unwrap();
        let n = control_norms(&bg.diag, &s, &p);
        integral += (n.b + p.c * n.a) * dt;
        (s, l) = lockstep_step(&s, &l, dt, &p).unwrap();
        let e = energy_lin2(&l, &Background::new(s.clone(), &p).unwrap(), &p);
        worst = worst.max((e / e0).ln().abs() / integral);
    }
    assert!(worst <= 50.0, "fitted constant {worst}");
}

