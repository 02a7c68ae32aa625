mod common;

use common::rng;
use nalgebra::DVector;
use rand::Rng;
use spectra_core::valuation::{
    dpi_probe, equity, present_value, simulate, ClosedFormVariant, DpiConfig, Verdict,
};
use spectra_core::{
    build_h, charpoly_coeffs, eigenvalues, CanonicalSystem, Coordinate, Error, InitialState, Mode,
};

fn random_init<R: Rng>(r: &mut R, n: usize) -> InitialState {
    InitialState::new(
        (0..n).map(|_| r.random_range(-1.0..1.0)).collect(),
        r.random_range(-1.0..1.0),
    )
    .unwrap()
}

/// delta_1 = -1, others +1, small positive omegas, beta below lambda_n:
/// every root stays inside |z| < lambda_1.
fn dominated<R: Rng>(r: &mut R, n: usize) -> CanonicalSystem {
    loop {
        let l = common::random_lambdas(r, n, 0.5, 3.0);
        let mut d = vec![1.0; n];
        d[0] = -1.0;
        let o: Vec<f64> = (0..n).map(|_| r.random_range(0.01..0.2)).collect();
        let beta = r.random_range(0.0..l[n - 1]);
        let sys = CanonicalSystem::from_parts(&l, &d, &o, beta).unwrap();
        if eigenvalues(&sys).unwrap().max_modulus() < l[0] * (1.0 - 1e-3) {
            return sys;
        }
    }
}

#[test]
fn simulation_matches_matrix_powers() {
    let sys = CanonicalSystem::from_parts(&[1.0], &[-1.0], &[0.25], 0.0).unwrap();
    let init = InitialState::new(vec![0.7], 0.3).unwrap();
    let traj = simulate(&sys, &init, 40).unwrap();
    let h = build_h(&sys);
    let z0 = DVector::from_vec(vec![0.7, 0.3]);
    for (t, d) in traj.dividends().enumerate() {
        let oracle = (h.pow(t as u32) * &z0)[1];
        assert!((d - oracle).abs() < 1e-14, "t={t}");
    }
    // Double root 1/2: d_t 2^t is affine in t.
    let scaled: Vec<f64> = traj
        .dividends()
        .enumerate()
        .map(|(t, d)| d * 2f64.powi(t as i32))
        .collect();
    let step = scaled[1] - scaled[0];
    for (t, v) in scaled.iter().enumerate() {
        assert!((v - (scaled[0] + step * t as f64)).abs() < 1e-9);
    }
}

#[test]
fn dividend_growth_rate_is_dominant_modulus() {
    let sys = CanonicalSystem::from_parts(&[2.0, 1.5], &[-1.0, 1.0], &[0.1, 0.1], 0.5).unwrap();
    let init = InitialState::new(vec![0.3, -0.2], 1.0).unwrap();
    let d: Vec<f64> = simulate(&sys, &init, 100).unwrap().dividends().collect();
    let ts: Vec<f64> = (50..=100).map(|t| t as f64).collect();
    let ys: Vec<f64> = (50..=100).map(|t| d[t].abs().ln()).collect();
    let mt = ts.iter().sum::<f64>() / ts.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = ts
        .iter()
        .zip(&ys)
        .map(|(t, y)| (t - mt) * (y - my))
        .sum::<f64>()
        / ts.iter().map(|t| (t - mt).powi(2)).sum::<f64>();
    let kmax = eigenvalues(&sys).unwrap().max_modulus();
    assert!((slope.exp() / kmax - 1.0).abs() < 0.01);
}

#[test]
fn three_methods_agree() {
    let mut r = rng(71);
    for _ in 0..100 {
        let n = r.random_range(1..=6usize);
        let sys = common::random_system(&mut r, n, 1.0, 2.0);
        let rate = eigenvalues(&sys).unwrap().max_modulus() * r.random_range(1.1..2.0) + 0.1;
        let rep = equity(&sys, &random_init(&mut r, n), rate, Mode::Discrete).unwrap();
        assert!(rep.converged);
        assert!(rep.spread() < 1e-6 * (1.0 + rep.p0_modal.abs()), "{rep:?}");
    }
}

#[test]
fn continuous_methods_agree() {
    let mut r = rng(72);
    for _ in 0..20 {
        let n = r.random_range(1..=4usize);
        let sys = common::random_system(&mut r, n, 1.0, 2.0);
        let top = eigenvalues(&sys)
            .unwrap()
            .roots
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let rate = top + r.random_range(0.5..2.0);
        let rep = equity(&sys, &random_init(&mut r, n), rate, Mode::Continuous).unwrap();
        assert!(rep.spread() < 1e-6 * (1.0 + rep.p0_modal.abs()), "{rep:?}");
    }
}

#[test]
fn closed_form_at_reduced_eigenvalue() {
    let mut r = rng(73);
    for _ in 0..30 {
        let n = r.random_range(1..=5usize);
        let sys = dominated(&mut r, n);
        let init = random_init(&mut r, n);
        let l1 = sys.lambdas()[0];
        let rep = equity(&sys, &init, l1, Mode::Discrete).unwrap();
        let check = rep.closed_form.expect("rate is lambda_1");
        assert_eq!(check.index, 1);
        let neg = check
            .values
            .iter()
            .find(|v| v.variant == ClosedFormVariant::NegatedDividend)
            .unwrap();
        assert!(neg.matches_series);
        let expect = -l1 * init.z0[0] / sys.deltas()[0] - init.d0;
        assert!((rep.p0_series - expect).abs() < 1e-6 * (1.0 + expect.abs()));
    }
}

#[test]
fn continuous_closed_form() {
    let sys = CanonicalSystem::from_parts(&[2.0, 1.0], &[-1.0, 1.0], &[0.1, 0.1], 0.3).unwrap();
    let init = InitialState::new(vec![0.4, 0.2], 0.5).unwrap();
    let p = present_value(&sys, &init, 2.0, Mode::Continuous).unwrap();
    assert!((p - 0.4).abs() < 1e-12);
}

#[test]
fn dpi_at_dominant_eigenvalue() {
    let mut r = rng(74);
    let sys = dominated(&mut r, 3);
    let init = random_init(&mut r, 3);
    let cfg = DpiConfig {
        rate: sys.lambdas()[0],
        radius: 0.01,
        samples: 64,
        seed: 9,
        mode: Mode::Discrete,
    };
    let rep = dpi_probe(&sys, &init, &cfg).unwrap();
    assert_eq!(rep.verdict, Verdict::Irrelevant, "{rep:?}");
    assert!((rep.base_p0 - rep.formula_value.unwrap()).abs() < 1e-9 * (1.0 + rep.base_p0.abs()));
    let again = dpi_probe(&sys, &init, &cfg).unwrap();
    assert_eq!(
        serde_json::to_string(&rep).unwrap(),
        serde_json::to_string(&again).unwrap()
    );

    let off = dpi_probe(
        &sys,
        &init,
        &DpiConfig {
            rate: 1.05 * sys.lambdas()[0],
            ..cfg.clone()
        },
    )
    .unwrap();
    assert_eq!(off.verdict, Verdict::Relevant);
    assert!(off.max_spread > 100.0 * off.tolerance);
}

#[test]
fn constancy_extends_to_second_ball() {
    let sys = CanonicalSystem::from_parts(&[2.0, 1.0], &[-1.0, 1.0], &[0.1, 0.1], 0.3).unwrap();
    let init = InitialState::new(vec![0.4, 0.2], 0.5).unwrap();
    let cfg = DpiConfig {
        rate: 2.0,
        radius: 0.02,
        samples: 32,
        seed: 1,
        mode: Mode::Discrete,
    };
    let a = dpi_probe(&sys, &init, &cfg).unwrap();
    let moved = sys.with_coordinate(Coordinate::Omega(1), 0.2).unwrap();
    let b = dpi_probe(&moved, &init, &cfg).unwrap();
    assert_eq!(a.verdict, Verdict::Irrelevant);
    assert_eq!(b.verdict, Verdict::Irrelevant);
    assert!((a.base_p0 - b.base_p0).abs() < 1e-9);
}

#[test]
fn zero_weight_pins_pole_as_eigenvalue() {
    let sys =
        CanonicalSystem::from_parts(&[2.0, 1.5, 1.0], &[-1.0, 1.0, 1.0], &[0.3, 0.0, 0.1], 0.5)
            .unwrap();
    let chi = charpoly_coeffs(&sys).eval(1.5.into());
    assert!(chi.norm() < 1e-12);
    let init = InitialState::new(vec![0.1, 0.2, 0.3], 1.0).unwrap();
    let cfg = DpiConfig {
        rate: 1.5,
        radius: 0.01,
        samples: 16,
        seed: 2,
        mode: Mode::Discrete,
    };
    assert!(matches!(
        dpi_probe(&sys, &init, &cfg),
        Err(Error::NearResonance { .. } | Error::DivergentSeries { .. })
    ));
}

#[test]
fn probe_validation() {
    let sys = CanonicalSystem::from_parts(&[2.0], &[1.0], &[0.0], 0.5).unwrap();
    let init = InitialState::new(vec![1.0], 1.0).unwrap();
    let cfg = DpiConfig {
        rate: 3.0,
        radius: 0.0,
        samples: 16,
        seed: 0,
        mode: Mode::Discrete,
    };
    assert!(matches!(
        dpi_probe(&sys, &init, &cfg),
        Err(Error::InvalidInput(_))
    ));
    let cfg = DpiConfig {
        radius: 0.1,
        samples: 4,
        ..cfg
    };
    assert!(matches!(
        dpi_probe(&sys, &init, &cfg),
        Err(Error::InvalidInput(_))
    ));
    let short = InitialState::new(vec![], 1.0).unwrap();
    assert!(matches!(
        equity(&sys, &short, 3.0, Mode::Discrete),
        Err(Error::InvalidInput(_))
    ));
}
