mod common;

use common::{jacobi, triplet};
use nalgebra::DMatrix;
use pjd_core::moments::{expm, moment, moment_curve, MomentEngine, MomentError, MomentQuery};
use pjd_core::polyalg::Polynomial;
use pjd_core::specmodel::construct;
use proptest::prelude::*;

// Classical RK4 for ṁ = f(m) on [0, t].
fn rk4(f: impl Fn(&[f64]) -> Vec<f64>, m0: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let h = t / steps as f64;
    let mut m = m0.to_vec();
    let axpy = |m: &[f64], k: &[f64], s: f64| m.iter().zip(k).map(|(a, b)| a + s * b).collect::<Vec<_>>();
    for _ in 0..steps {
        let k1 = f(&m);
        let k2 = f(&axpy(&m, &k1, h / 2.0));
        let k3 = f(&axpy(&m, &k2, h / 2.0));
        let k4 = f(&axpy(&m, &k3, h));
        for i in 0..m.len() {
            m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    m
}

fn x() -> Polynomial {
    Polynomial::var(1, 0)
}

#[test]
fn jacobi_first_moment_matches_scalar_ode() {
    let t = construct(&jacobi()).unwrap();
    let q = MomentQuery { p: x(), x0: vec![0.2], horizon: 1.0 };
    let m = moment(&t, &q).unwrap();
    assert!((m - (0.5 - 0.3 * (-1.0f64).exp())).abs() < 1e-10, "{m}");
}

#[test]
fn jacobi_second_moment_matches_rk4() {
    // (m0, m1, m2)' with 𝒢x = κθ − κx and 𝒢x² = (2κθ + A)x − (2κ + A)x², A = 0.2, κ = 1, θ = 0.5
    let ode = |m: &[f64]| vec![0.0, 0.5 * m[0] - m[1], 1.2 * m[1] - 2.2 * m[2]];
    let want = rk4(ode, &[1.0, 0.2, 0.04], 1.0, 20_000);
    let t = construct(&jacobi()).unwrap();
    let got = moment(&t, &MomentQuery { p: x().pow(2), x0: vec![0.2], horizon: 1.0 }).unwrap();
    assert!((got - want[2]).abs() < 1e-8, "{got} vs {}", want[2]);
}

#[test]
fn reflection_moments_match_rk4() {
    // b = 11/10 − 12x/5, a = 3x(1−x)/10, jumps x → 1 − x at rate 7/10:
    // 𝒢x² = 7/10 − 3x/10 − 23x²/10
    let ode = |m: &[f64]| vec![0.0, 1.1 * m[0] - 2.4 * m[1], 0.7 * m[0] - 0.3 * m[1] - 2.3 * m[2]];
    let t = triplet("reflection");
    for &x0 in &[0.0, 0.3, 1.0] {
        for &h in &[0.25, 1.0, 3.0] {
            let want = rk4(ode, &[1.0, x0, x0 * x0], h, 20_000);
            let e = MomentEngine::new(&t, 2).unwrap();
            assert!((e.moment(&x(), &[x0], h).unwrap() - want[1]).abs() < 1e-10);
            assert!((e.moment(&x().pow(2), &[x0], h).unwrap() - want[2]).abs() < 1e-10);
        }
    }
}

#[test]
fn simplex_first_moments_relax_to_the_barycentre() {
    // b_k = (1+β)/2 (1 − 3x_k) for the market weights, whatever the jumps
    let t = triplet("spt");
    let x0 = [0.6, 0.3, 0.1];
    let e = MomentEngine::new(&t, 1).unwrap();
    for k in 0..3 {
        let p = t.space.coordinate(k);
        for &h in &[0.1f64, 0.7, 2.0] {
            let want = 1.0 / 3.0 + (x0[k] - 1.0 / 3.0) * (-2.25 * h).exp();
            assert!((e.moment(&p, &x0, h).unwrap() - want).abs() < 1e-12);
        }
    }
}

#[test]
fn constants_are_preserved() {
    for name in common::example_names() {
        let t = triplet(&name);
        let n = t.space.n_free();
        let x0: Vec<f64> = vec![1.0 / t.space.dim() as f64; t.space.dim()];
        let v = moment(&t, &MomentQuery { p: Polynomial::constant(n, 1.0), x0, horizon: 2.5 }).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{name}: {v}");
    }
}

#[test]
fn curve_and_zero_horizon() {
    let t = construct(&jacobi()).unwrap();
    let hs = [0.0f64, 0.5, 1.0, 2.0];
    let c = moment_curve(&t, &x(), &[0.2], &hs).unwrap();
    assert_eq!(c[0], 0.2);
    for (v, h) in c.iter().zip(hs) {
        assert!((v - (0.5 - 0.3 * (-h).exp())).abs() < 1e-12);
    }
}

#[test]
fn query_errors() {
    let t = construct(&jacobi()).unwrap();
    let e = MomentEngine::new(&t, 1).unwrap();
    assert!(matches!(e.moment(&x().pow(2), &[0.2], 1.0), Err(MomentError::DegreeTooHigh(2, 1))));
    assert!(matches!(e.moment(&x(), &[1.2], 1.0), Err(MomentError::OutOfSpace(_))));
    assert!(matches!(e.moment(&x(), &[0.2], -1.0), Err(MomentError::BadHorizon(_))));
    assert!(expm(&DMatrix::from_element(2, 2, f64::NAN)).is_err());
}

#[test]
fn expm_closed_forms() {
    let w = 40.0f64;
    let rot = expm(&DMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0])).unwrap();
    let want = DMatrix::from_row_slice(2, 2, &[w.cos(), w.sin(), -w.sin(), w.cos()]);
    assert!((rot - want).amax() < 1e-11);
    let nil = expm(&DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])).unwrap();
    let want = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.5, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
    assert!((nil - want).amax() < 1e-15);
}

proptest! {
    #[test]
    fn expm_matches_eigendecomposition(
        p in prop::collection::vec(-1.0f64..1.0, 9),
        d in prop::collection::vec(-30.0f64..3.0, 3),
    ) {
        // M = P D P⁻¹ with P well conditioned
        let pm = DMatrix::from_row_slice(3, 3, &p) + DMatrix::identity(3, 3) * 3.0;
        let pinv = pm.clone().try_inverse().unwrap();
        let m = &pm * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.clone())) * &pinv;
        let want = &pm * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(3, d.iter().map(|v| v.exp()))) * &pinv;
        let got = expm(&m).unwrap();
        let scale = want.amax().max(1.0);
        prop_assert!((got - &want).amax() <= 1e-11 * scale * 10.0);
    }

    #[test]
    fn semigroup_property(s in 0.0f64..2.0, h in 0.0f64..2.0, x0 in 0.0f64..1.0) {
        let t = triplet("recovery");
        let e = MomentEngine::new(&t, 3).unwrap();
        let p = x().pow(3);
        let two = e.propagate(&Polynomial::from_coords(1, &e.matrix.basis, e.propagate(&p, h).unwrap().as_slice()), s).unwrap();
        let direct = e.propagate(&p, s + h).unwrap();
        prop_assert!((two - direct).amax() < 1e-11);
        let v = e.moment(&p, &[x0], s).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
    }
}
