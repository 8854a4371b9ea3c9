use holowave::energies::*;
use holowave::evolution::rhs_full;
use holowave::fit::taylor_coefficients;
use holowave::wavestate::{control_norms, to_diagonal};
use holowave::{Domain, Params, SpectralField, WaveState};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_holo(dom: &Domain, rng: &mut ChaCha8Rng, eps: f64, kmax: i64, mean: bool) -> SpectralField {
    let mut f = dom.zeros();
    for j in (if mean { 0 } else { 1 })..=kmax {
        let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        f.set(-j, a * eps / (j.max(1) * j.max(1)) as f64);
    }
    f
}

fn random_state(seed: u64, eps: f64) -> WaveState {
    let dom = Domain::periodic(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_holo(&dom, &mut rng, eps, 4, false);
    let q = random_holo(&dom, &mut rng, eps, 4, true);
    WaveState { w, q, t: 0.0 }
}

/// dE/dt along the flow, sixth-order centred difference in the flow direction.
fn rate(s: &WaveState, p: &Params, e: impl Fn(&WaveState) -> f64) -> f64 {
    let r = rhs_full(s, p).unwrap();
    let at = |h: f64| e(&WaveState { w: &s.w + &(&r.dw * h), q: &s.q + &(&r.dq * h), t: 0.0 });
    let h = 1e-2;
    (45.0 * (at(h) - at(-h)) - 9.0 * (at(2.0 * h) - at(-2.0 * h)) + (at(3.0 * h) - at(-3.0 * h))) / (60.0 * h)
}

#[test]
fn cubic_part_of_modified_energy_flux_vanishes() {
    for c in [0.0, 1.0, 2.0] {
        let p = Params::new(1.0, c).unwrap();
        let s = random_state(1, 0.01);
        let m = taylor_coefficients(|l| Ok(rate(&s.scaled(l), &p, |x| energy_n(x, 0, &p).unwrap().total))).unwrap();
        let raw = taylor_coefficients(|l| Ok(rate(&s.scaled(l), &p, |x| energy_n(x, 0, &p).unwrap().h_n))).unwrap();
        assert!(m[3].abs() <= 1e-8 * m[4].abs(), "c={c}: {m:?}");
        // the unmodified energy has a genuine cubic flux
        assert!(raw[3].abs() >= 1e-2 * raw[4].abs(), "c={c}: {raw:?}");
    }
}

#[test]
fn n1_high_energy_matches_normal_form_to_cubic_order() {
    for c in [0.0, 1.0] {
        let p = Params::new(1.0, c).unwrap();
        let s = random_state(2, 0.01);
        let hi = taylor_coefficients(|l| {
            let d = to_diagonal(&s.scaled(l), &p)?;
            Ok(energy_n_high(&good_variables(&d, 1, &p)?, &d, &p)?.high)
        })
        .unwrap();
        let nf = taylor_coefficients(|l| Ok(energy_nf_high(&to_diagonal(&s.scaled(l), &p)?, 1, &p))).unwrap();
        assert!((hi[2] - nf[2]).abs() <= 1e-8 * nf[2].abs(), "c={c}: {hi:?} {nf:?}");
        assert!((hi[3] - nf[3]).abs() <= 1e-8 * nf[2].abs().max(nf[3].abs()), "c={c}: {hi:?} {nf:?}");
    }
}

#[test]
fn normal_form_high_energy_quadratic_part() {
    let p = Params::new(1.3, 1.0).unwrap();
    let s = random_state(4, 0.01);
    for n in 0..=3 {
        let nf = taylor_coefficients(|l| Ok(energy_nf_high(&to_diagonal(&s.scaled(l), &p)?, n, &p))).unwrap();
        let d = to_diagonal(&s, &p).unwrap();
        let h2 = taylor_coefficients(|l| {
            let d = to_diagonal(&s.scaled(l), &p)?;
            Ok(quadratic_energy(&d.wd.derivative_n(n), &d.r.derivative_n(n), p.g))
        })
        .unwrap();
        assert!((nf[2] - h2[2]).abs() <= 1e-8 * h2[2].abs(), "n={n}: {} {}", nf[2], h2[2]);
        let _ = d;
    }
}

#[test]
fn good_variables_equivalent_to_differentiated_norm() {
    for seed in 0..4 {
        for eps in [0.002, 0.01, 0.02] {
            let p = Params::new(1.0, 1.0).unwrap();
            let s = random_state(10 + seed, eps);
            let d = to_diagonal(&s, &p).unwrap();
            let a = control_norms(&d, &s, &p).au;
            assert!(a <= 0.2);
            for n in 1..=3 {
                let gv = good_variables(&d, n, &p).unwrap();
                let (dev, diff) = good_variable_deviation(&gv, &d);
                assert!(dev <= 5.0 * a && diff <= 5.0 * a, "n={n} eps={eps}: {dev} {diff} {a}");
            }
        }
    }
}

#[test]
fn n0_energy_close_to_quadratic() {
    let dom = Domain::periodic(64).unwrap();
    let p = Params::new(1.0, 1.0).unwrap();
    let s = WaveState::from_modes(&dom, &[(-1, C64::new(0.05, 0.0))], &[]).unwrap();
    let d = to_diagonal(&s, &p).unwrap();
    let a = control_norms(&d, &s, &p).au;
    let e = energy_n0_cubic(&d, &s, &p).unwrap();
    let delta = e.total / e.h_n - 1.0;
    assert!(delta.abs() <= 0.5 * a, "{delta} {a}");
    assert_eq!(e.total, e.high + e.high_c + e.nf_low);
}

#[test]
fn drift_scan_slopes() {
    for c in [0.0, 1.0] {
        let p = Params::new(1.0, c).unwrap();
        let r = drift_scan(&DriftProfile::default(), &[0.1, 0.05, 0.025], 0, 5.0, 0.01, &p).unwrap();
        assert!(r.aborted.is_empty());
        assert!((r.slope_mod - 4.0).abs() <= 0.3 && (r.slope_raw - 3.0).abs() <= 0.3, "{r:?}");
    }
}

#[test]
fn linear_flow_drift_at_roundoff() {
    let p = Params::new(1.0, 1.0).unwrap();
    let s = DriftProfile::default().state(0.05, &p).unwrap();
    for n in 0..=2 {
        let (raw, modified) = drift_run_with(&s, n, 5.0, 0.01, &p, DriftFlow::Linear).unwrap();
        let e0 = energy_n(&s, n, &p).unwrap().h_n;
        assert!(raw <= 1e-12 * e0 && modified <= 1e-12 * e0, "n={n}: {raw} {modified} {e0}");
    }
}

#[test]
fn drift_report_json_fields() {
    let p = Params::new(1.0, 1.0).unwrap();
    let r = drift_scan(&DriftProfile::default(), &[0.05, 0.025], 1, 0.1, 0.01, &p).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for key in ["n", "c", "g", "eps", "drift_raw", "drift_mod", "slope_raw", "slope_mod"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn energies_real_and_finite(seed in 0u64..1000, eps in 1e-3f64..0.02, c in 0.0f64..2.0, n in 0usize..4) {
        let p = Params::new(1.0, c).unwrap();
        let s = random_state(seed, eps);
        let e = energy_n(&s, n, &p).unwrap();
        prop_assert!(e.total.is_finite() && e.h_n >= 0.0);
        prop_assert_eq!(e.total, e.high + e.high_c + e.nf_low);
    }

    #[test]
    fn phi_real(seed in 0u64..1000, eps in 1e-3f64..0.05) {
        let p = Params::new(1.0, 1.0).unwrap();
        let s = random_state(seed, eps);
        let d = to_diagonal(&s, &p).unwrap();
        let gv = good_variables(&d, 1, &p).unwrap();
        prop_assert!(gv.phi.to_grid().max_abs_im() <= 1e-10 * (1.0 + gv.phi.max_abs_coeff()));
    }
}
