mod common;

use common::rng;
use rand::Rng;
use spectra_core::sensitivity::{dkappa, finite_difference, sign_check, SignRule};
use spectra_core::{label_roots, CanonicalSystem, Error};

#[test]
fn starter_derivatives_at_decoupled_policy() {
    let mut r = rng(61);
    for n in 1..=6 {
        let l = common::random_lambdas(&mut r, n, 1.0, 4.0);
        let d = common::random_signs(&mut r, n);
        let beta = r.random_range(0.0..0.9);
        let sys = CanonicalSystem::from_parts(&l, &d, &vec![0.0; n], beta).unwrap();
        let m = dkappa(&sys, &label_roots(&sys, None).unwrap()).unwrap();
        assert!((m.d[(0, 0)] - d[0] / (l[0] - beta)).abs() < 1e-10);
        for j in 1..n {
            assert_eq!(m.get(0, j), Some(0.0));
        }
    }
}

fn regular_point<R: Rng>(r: &mut R) -> CanonicalSystem {
    loop {
        let n = r.random_range(1..=5usize);
        let sys = common::random_system(r, n, 1.0, 3.0);
        let Ok(lab) = label_roots(&sys, None) else {
            continue;
        };
        if dkappa(&sys, &lab).is_ok() {
            let gap = (0..=n)
                .flat_map(|i| (i + 1..=n).map(move |k| (i, k)))
                .map(|(i, k)| (lab.roots[i] - lab.roots[k]).norm())
                .fold(f64::INFINITY, f64::min);
            if gap > 1e-2 {
                return sys;
            }
        }
    }
}

#[test]
fn formula_matches_central_differences() {
    let mut r = rng(62);
    for _ in 0..50 {
        let sys = regular_point(&mut r);
        let lab = label_roots(&sys, None).unwrap();
        let m = dkappa(&sys, &lab).unwrap();
        let fd = finite_difference(&sys, &lab, 1e-6).unwrap();
        for h in 0..=sys.n() {
            for k in 0..=sys.n() {
                if let Some(v) = m.get(h, k) {
                    let err = (fd[(h, k)].re - v).abs();
                    assert!(
                        err < 1e-5 * (1.0 + v.abs()),
                        "({h},{k}): {v} vs {}",
                        fd[(h, k)]
                    );
                }
            }
        }
    }
}

#[test]
fn trace_identities() {
    let mut r = rng(63);
    let mut checked = 0;
    while checked < 50 {
        let sys = regular_point(&mut r);
        let lab = label_roots(&sys, None).unwrap();
        if !lab.is_real.iter().all(|&x| x) {
            continue;
        }
        checked += 1;
        let m = dkappa(&sys, &lab).unwrap();
        let n = sys.n();
        for k in 0..n {
            assert!(m.d.column(k).sum().abs() < 1e-6);
        }
        assert!((m.d.column(n).sum() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn complex_roots_are_masked() {
    let s = CanonicalSystem::from_parts(&[2.0, 1.5], &[-1.0, 1.0], &[0.5, 0.1], 0.5).unwrap();
    let m = dkappa(&s, &label_roots(&s, None).unwrap()).unwrap();
    assert!(m.get(0, 0).is_none() && m.get(1, 2).is_none());
    assert!(m.get(2, 0).is_some());
}

#[test]
fn dominant_root_signs() {
    let s = CanonicalSystem::from_parts(
        &[3.0, 2.0, 1.0],
        &[-1.0, 1.0, -1.0],
        &[0.05, 0.05, -0.05],
        0.5,
    )
    .unwrap();
    let lab = label_roots(&s, None).unwrap();
    let rep = sign_check(&s, &lab).unwrap();
    assert!(rep.rules.contains(&SignRule::DominantRoot));
    let p = rep
        .predictions
        .iter()
        .find(|p| p.weight == 2 && p.rule == SignRule::DominantRoot)
        .unwrap();
    assert_eq!(p.predicted, -1.0);
    assert!(rep.mismatches.is_empty(), "{rep:?}");
}

#[test]
fn interlaced_signs() {
    let mut r = rng(64);
    let mut hits = 0;
    for _ in 0..200 {
        let n = r.random_range(2..=5usize);
        let l = common::random_lambdas(&mut r, n, 1.0, 4.0);
        let d = common::random_signs(&mut r, n);
        let o: Vec<f64> = d.iter().map(|s| s * r.random_range(0.01..0.3)).collect();
        let sys = CanonicalSystem::from_parts(&l, &d, &o, 0.5).unwrap();
        let lab = label_roots(&sys, None).unwrap();
        match sign_check(&sys, &lab) {
            Ok(rep) => {
                hits += rep.rules.contains(&SignRule::Interlaced) as usize;
                assert!(rep.mismatches.is_empty(), "{rep:?}");
            }
            Err(Error::HypothesesNotMet(_)) => {}
            Err(e) => panic!("{e:?}"),
        }
    }
    assert!(hits > 100);
}

#[test]
fn dominant_root_below_third_pole_is_not_claimed() {
    // Large negative weight drags kappa_1 off the real axis.
    let s =
        CanonicalSystem::from_parts(&[3.0, 2.0, 1.0], &[-1.0, 1.0, 1.0], &[2.0, 0.01, 0.01], 0.5)
            .unwrap();
    let lab = label_roots(&s, None).unwrap();
    match sign_check(&s, &lab) {
        Err(Error::HypothesesNotMet(_)) => {}
        Ok(rep) => assert!(!rep.rules.contains(&SignRule::DominantRoot)),
        Err(e) => panic!("{e:?}"),
    }
}
