use holowave::evolution::*;
use holowave::wavestate::{linear_wave, to_diagonal};
use holowave::{Domain, Params, SpectralField, WaveState};
use num_complex::Complex64 as C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn rich_state(dom: &Domain, eps: f64) -> WaveState {
    WaveState::from_modes(
        dom,
        &[(-1, c(eps, 0.0)), (-2, c(0.0, 0.4 * eps)), (-3, c(-0.2 * eps, 0.1 * eps))],
        &[(-1, c(0.0, eps)), (-2, c(0.5 * eps, 0.0)), (0, c(0.0, 0.3 * eps))],
    )
    .unwrap()
}

#[test]
fn differentiated_system_matches_derivative_of_full_rhs() {
    let dom = Domain::periodic(64).unwrap();
    let p = Params::new(1.0, 1.0).unwrap();
    let s = WaveState::from_modes(&dom, &[(-1, c(0.05, 0.0))], &[(-1, c(0.05, 0.0))]).unwrap();
    let full = rhs_full(&s, &p).unwrap();
    let d = to_diagonal(&s, &p).unwrap();
    let (dwd, dr) = rhs_diff(&d, &p).unwrap();
    assert!(full.dw.derivative().max_diff(&dwd) < 1e-10);
    // R = Q_α/(1+𝐖): R_t = (Q_tα - R 𝐖_t)/(1+𝐖)
    let one_plus = &d.wd.to_grid() + 1.0;
    let rt = ((full.dq.derivative().to_grid() - d.r.to_grid() * full.dw.derivative().to_grid()) / &one_plus)
        .to_spectral()
        .holomorphic_part();
    assert!(rt.max_diff(&dr) < 1e-10, "{}", rt.max_diff(&dr));
}

#[test]
fn differentiated_system_on_richer_state() {
    let dom = Domain::periodic(64).unwrap();
    let p = Params::new(1.3, 0.7).unwrap();
    let s = rich_state(&dom, 0.08);
    let full = rhs_full(&s, &p).unwrap();
    let d = to_diagonal(&s, &p).unwrap();
    let (dwd, dr) = rhs_diff(&d, &p).unwrap();
    assert!(full.dw.derivative().max_diff(&dwd) < 1e-10);
    let one_plus = &d.wd.to_grid() + 1.0;
    let rt = ((full.dq.derivative().to_grid() - d.r.to_grid() * full.dw.derivative().to_grid()) / &one_plus)
        .to_spectral()
        .holomorphic_part();
    assert!(rt.max_diff(&dr) < 1e-10);
}

#[test]
fn real_form_agrees_with_complex_form() {
    let dom = Domain::periodic(64).unwrap();
    for (g, cc, eps) in [(1.0, 1.0, 0.01), (1.0, 0.0, 0.05), (2.0, 0.6, 0.08)] {
        let p = Params::new(g, cc).unwrap();
        let s = rich_state(&dom, eps);
        let full = rhs_full(&s, &p).unwrap();
        let (dy, dpsi) = rhs_realform(&RealFormState::from_wave(&s), &p).unwrap();
        let scale = full.dw.max_abs_coeff().max(full.dq.max_abs_coeff());
        assert!(full.dw.im().max_diff(&dy) <= 1e-8 * scale, "g={g} c={cc}");
        assert!(full.dq.re().max_diff(&dpsi) <= 1e-8 * scale, "g={g} c={cc}");
    }
}

#[test]
fn real_form_output_is_real() {
    let dom = Domain::periodic(32).unwrap();
    let p = Params::new(1.0, 1.0).unwrap();
    let (dy, dpsi) = rhs_realform(&RealFormState::from_wave(&rich_state(&dom, 0.05)), &p).unwrap();
    for f in [dy, dpsi] {
        assert!(f.to_grid().max_abs_im() < 1e-15);
    }
}

#[test]
fn real_form_conserved_quantities_match() {
    let dom = Domain::periodic(64).unwrap();
    let p = Params::new(1.0, 0.8).unwrap();
    let s = rich_state(&dom, 0.1);
    let r = RealFormState::from_wave(&s);
    assert!((energy(&s, &p) - energy_realform(&r, &p)).abs() < 1e-14);
    assert!((momentum(&s, &p) - momentum_realform(&r, &p)).abs() < 1e-14);
}

#[test]
fn full_rhs_linear_limit() {
    let dom = Domain::periodic(32).unwrap();
    let p = Params::new(1.0, 1.0).unwrap();
    let s0 = rich_state(&dom, 1.0);
    let lin = rhs_linear(&s0, &p);
    let eps = [1e-2, 1e-3, 1e-4];
    let errs: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let r = rhs_full(&s0.scaled(e), &p).unwrap();
            (&r.dw * (1.0 / e) - &lin.dw).l2_norm() + (&r.dq * (1.0 / e) - &lin.dq).l2_norm()
        })
        .collect();
    assert!((slope(&eps, &errs) - 1.0).abs() < 0.05, "{errs:?}");
}

#[test]
fn differentiated_rhs_linear_limit() {
    let dom = Domain::periodic(32).unwrap();
    let p = Params::new(1.0, 1.0).unwrap();
    let s0 = rich_state(&dom, 1.0);
    let eps = [1e-2, 1e-3, 1e-4];
    let errs: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let d = to_diagonal(&s0.scaled(e), &p).unwrap();
            let (dwd, dr) = rhs_diff(&d, &p).unwrap();
            let lw = -d.r.derivative();
            let lr = d.r.scale(C64::new(0.0, -p.c)) + d.wd.scale(C64::new(0.0, p.g));
            ((&dwd - &lw).l2_norm() + (&dr - &lr).l2_norm()) / e
        })
        .collect();
    assert!((slope(&eps, &errs) - 1.0).abs() < 0.05, "{errs:?}");
}

#[test]
fn linear_flow_returns_after_one_period() {
    let dom = Domain::periodic(16).unwrap();
    let p = Params::new(1.0, 0.0).unwrap();
    let s0 = linear_wave(&dom, &p, &[(-1, c(0.1, 0.0))]).unwrap();
    let period = 2.0 * std::f64::consts::PI;
    let dt = period / 1000.0;
    let mut u = (s0.w.clone(), s0.q.clone());
    for _ in 0..1000 {
        u = rk4_pair(&u, dt, |v| {
            let r = rhs_linear(&WaveState { w: v.0.clone(), q: v.1.clone(), t: 0.0 }, &p);
            Ok((r.dw, r.dq))
        })
        .unwrap();
    }
    assert!(u.0.max_diff(&s0.w) < 1e-8 && u.1.max_diff(&s0.q) < 1e-8);
}

#[test]
fn zero_rhs_leaves_state_unchanged() {
    let dom = Domain::periodic(16).unwrap();
    let s0 = rich_state(&dom, 0.1);
    let u = rk4_pair(&(s0.w.clone(), s0.q.clone()), 0.1, |_| Ok((dom.zeros(), dom.zeros()))).unwrap();
    assert_eq!(u.0.max_diff(&s0.w), 0.0);
    assert_eq!(u.1.max_diff(&s0.q), 0.0);
}

fn run(s0: &WaveState, p: &Params, opts: &StepOptions, dt: f64, t_end: f64) -> WaveState {
    let n = (t_end / dt).round() as usize;
    let mut s = s0.clone();
    for _ in 0..n {
        s = step(&s, dt, p, opts).unwrap();
    }
    s
}

fn dist(a: &WaveState, b: &WaveState) -> f64 {
    (&a.w - &b.w).l2_norm() + (&a.q - &b.q).l2_norm()
}

#[test]
fn rk4_is_fourth_order() {
    let dom = Domain::periodic(32).unwrap();
    let p = Params::new(1.0, 1.0).unwrap();
    let s0 = rich_state(&dom, 0.1);
    let opts = StepOptions::default();
    let t_end = 0.2;
    let reference = run(&s0, &p, &opts, 1e-4, t_end);
    let dts = [1e-2, 5e-3, 2.5e-3];
    let errs: Vec<f64> = dts.iter().map(|&dt| dist(&run(&s0, &p, &opts, dt, t_end), &reference)).collect();
    let k = slope(&dts, &errs);
    assert!((k - 4.0).abs() < 0.2, "slope {k}, {errs:?}");
}

#[test]
fn integrating_factor_scheme_is_fourth_order() {
    let dom = Domain::periodic(32).unwrap();
    let p = Params::new(1.0, 1.0).unwrap();
    let s0 = rich_state(&dom, 0.1);
    let opts = StepOptions { scheme: Scheme::IntegratingFactorRk4, ..Default::default() };
    let reference = run(&s0, &p, &StepOptions::default(), 1e-4, 0.2);
    let dts = [1e-2, 5e-3, 2.5e-3];
    let errs: Vec<f64> = dts.iter().map(|&dt| dist(&run(&s0, &p, &opts, dt, 0.2), &reference)).collect();
    let k = slope(&dts, &errs);
    assert!((k - 4.0).abs() < 0.3, "slope {k}, {errs:?}");
}

#[test]
fn integrating_factor_is_exact_on_linear_data() {
    // with vanishing amplitude the nonlinear remainder is negligible and
    // the exact propagator carries the solution for any dt
    let dom = Domain::periodic(16).unwrap();
    let p = Params::new(1.0, 1.0).unwrap();
    let s0 = linear_wave(&dom, &p, &[(-2, c(1e-9, 0.0))]).unwrap();
    let opts = StepOptions { scheme: Scheme::IntegratingFactorRk4, ..Default::default() };
    let s = step(&s0, 0.5, &p, &opts).unwrap();
    // the linear wave sits on the branch τ₋
    let (_, tau) = dispersion_roots(&dom, -2, &p).unwrap();
    let rot = (C64::new(0.0, tau * 0.5)).exp();
    assert!((s.w.coeff(-2) - s0.w.coeff(-2) * rot).norm() < 1e-20);
}

fn slope_gap(p: &Params, eps: f64) -> f64 {
    let dom = Domain::periodic(32).unwrap();
    let s0 = rich_state(&dom, eps);
    let a = run(&s0, p, &StepOptions::default(), 0.01, 0.5);
    let opts = StepOptions { formulation: Formulation::RealForm, ..Default::default() };
    let b = run(&s0, p, &opts, 0.01, 0.5);
    // compare derivatives: the means of W and Q are gauges here
    (&a.w.derivative() - &b.w.derivative()).l2_norm() + (&a.q.derivative() - &b.q.derivative()).l2_norm()
}

#[test]
fn real_form_step_tracks_complex_step() {
    // without vorticity the two trajectories coincide
    let p0 = Params::new(1.0, 0.0).unwrap();
    assert!(slope_gap(&p0, 0.02) < 1e-9);
    // with vorticity the mean elevation Im W₀, generated at O(ε²), couples
    // differently in the two forms, so the gap is O(ε³)
    let p = Params::new(1.0, 1.0).unwrap();
    let eps = [0.02, 0.01];
    let gaps: Vec<f64> = eps.iter().map(|&e| slope_gap(&p, e)).collect();
    let k = slope(&eps, &gaps);
    assert!((k - 3.0).abs() < 0.3, "slope {k}, {gaps:?}");
}

#[test]
fn invalid_steps_rejected() {
    let dom = Domain::periodic(16).unwrap();
    let p = Params::new(1.0, 1.0).unwrap();
    let s0 = WaveState::flat(&dom);
    assert!(step(&s0, 0.0, &p, &StepOptions::default()).is_err());
    assert!(step(&s0, f64::NAN, &p, &StepOptions::default()).is_err());
    let bad = StepOptions { formulation: Formulation::RealForm, scheme: Scheme::IntegratingFactorRk4, ..Default::default() };
    assert!(step(&s0, 0.1, &p, &bad).is_err());
}

#[test]
fn cfl_limit_reduces_to_gravity_bound_when_flat() {
    let dom = Domain::periodic(64).unwrap();
    let p = Params::new(1.0, 0.5).unwrap();
    let dt = cfl_limit(&WaveState::flat(&dom), &p, 0.5).unwrap();
    assert!((dt - 0.5 / (32.0f64).sqrt()).abs() < 1e-15);
}

#[test]
fn diagnostics_on_small_wave() {
    let dom = Domain::periodic(32).unwrap();
    let p = Params::new(1.0, 1.0).unwrap();
    let s = linear_wave(&dom, &p, &[(-1, c(0.05, 0.0))]).unwrap();
    let rec = diagnostics(&s, &p).unwrap();
    assert!(rec.cusp_margin > 0.9 && rec.taylor_margin > 0.9);
    assert!(rec.holo_defect < 1e-15);
    assert!(rec.h1 >= rec.h0);
    let flat = diagnostics(&WaveState::flat(&dom), &p).unwrap();
    assert_eq!(flat.energy, 0.0);
    let _: SpectralField = s.w;
}
