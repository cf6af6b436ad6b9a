mod common;

use common::{load, sticky_draw};
use pjd_core::apps::{
    defaultable_bond_price, forward_from_state, price_table, recovery_forward, spt_build, spt_check_interior,
    square_forward_as_printed, write_price_csv, DiscountCurve, Payoff, RecoveryModel, SptJump, SptModel,
};
use pjd_core::generator::apply_generator;
use pjd_core::moments::MomentEngine;
use pjd_core::polyalg::{MultiIndex, Polynomial};
use pjd_core::specmodel::MeasureRep;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// E[X_τ], E[X_τ²] by RK4 on the moment ODE read off the generator.
fn rk4_moments(model: &RecoveryModel, x0: f64, tau: f64) -> (f64, f64) {
    let x = Polynomial::var(1, 0);
    let c = |p: &Polynomial, k: u32| p.coeff(&MultiIndex::new(vec![k]));
    let g1 = apply_generator(model.triplet(), &x).unwrap();
    let g2 = apply_generator(model.triplet(), &x.pow(2)).unwrap();
    let f = |m: [f64; 2]| {
        [c(&g1, 0) + c(&g1, 1) * m[0], c(&g2, 0) + c(&g2, 1) * m[0] + c(&g2, 2) * m[1]]
    };
    let steps = 4000;
    let h = tau / steps as f64;
    let mut m = [x0, x0 * x0];
    let add = |m: [f64; 2], k: [f64; 2], s: f64| [m[0] + s * k[0], m[1] + s * k[1]];
    for _ in 0..steps {
        let k1 = f(m);
        let k2 = f(add(m, k1, h / 2.0));
        let k3 = f(add(m, k2, h / 2.0));
        let k4 = f(add(m, k3, h));
        for i in 0..2 {
            m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    (m[0], m[1])
}

#[test]
fn recovery_formulas_match_the_moment_engine() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for draw in 0..50 {
        for payoff in [Payoff::Identity, Payoff::Square] {
            let model = sticky_draw(&mut rng, payoff.clone());
            assert!(model.sticky);
            let x0: f64 = rng.random_range(0.0..1.0);
            let s = if payoff == Payoff::Square { x0 * x0 } else { x0 };
            for tau in [0.1, 1.0, 5.0] {
                let f = recovery_forward(&model, s, tau).unwrap();
                let engine = forward_from_state(&model, x0, tau).unwrap();
                assert!((f - engine).abs() <= 1e-9, "draw {draw} {payoff:?} τ = {tau}: {f} vs {engine}");
            }
            assert_eq!(recovery_forward(&model, s, 0.0).unwrap(), s);
        }
    }
}

#[test]
fn recovery_formulas_match_rk4() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let id = sticky_draw(&mut rng, Payoff::Identity);
        let sq = RecoveryModel::new(id.spec.clone(), Payoff::Square).unwrap();
        let x0: f64 = rng.random_range(0.0..1.0);
        let (m1, m2) = rk4_moments(&id, x0, 2.0);
        assert!((recovery_forward(&id, x0, 2.0).unwrap() - m1).abs() < 1e-10);
        assert!((recovery_forward(&sq, x0 * x0, 2.0).unwrap() - m2).abs() < 1e-10);
    }
}

#[test]
fn printed_square_formula_only_agrees_at_zero_horizon() {
    // Its τ-derivative at 0 is G₁√S − κS against G₁√S + G₂S from the generator, and
    // G₂ = −κ would need ∫y² μ > ∫y μ.
    let m = RecoveryModel::sticky(0.3, 2.0, 0.5, MeasureRep::dirac(vec![0.4], 1.2), Payoff::Square).unwrap();
    let (s, x0) = (0.36, 0.6);
    assert!((square_forward_as_printed(&m, s, 0.0).unwrap() - s).abs() < 1e-15);
    let (g1, g2) = m.g_coefficients().unwrap();
    let h = 1e-6;
    let slope = (square_forward_as_printed(&m, s, h).unwrap() - s) / h;
    assert!((slope - (g1 * x0 - 2.0 * s)).abs() < 1e-4, "{slope}");
    let slope = (forward_from_state(&m, x0, h).unwrap() - s) / h;
    assert!((slope - (g1 * x0 + g2 * s)).abs() < 1e-4, "{slope}");
    let printed = square_forward_as_printed(&m, s, 1.0).unwrap();
    assert!((printed - forward_from_state(&m, x0, 1.0).unwrap()).abs() > 1e-4);
}

#[test]
fn general_payoff_inverts_the_level() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = Polynomial::var(1, 0).pow(3).scale(0.5) + Polynomial::var(1, 0).scale(0.5);
    let model = sticky_draw(&mut rng, Payoff::General(p.clone()));
    let x0 = 0.37;
    let f = recovery_forward(&model, p.eval(&[x0]), 1.5).unwrap();
    assert!((f - forward_from_state(&model, x0, 1.5).unwrap()).abs() < 1e-12);
    let bumpy = Polynomial::var(1, 0).scale(2.0) - Polynomial::var(1, 0).pow(2).scale(2.0);
    let m = sticky_draw(&mut rng, Payoff::General(bumpy));
    assert!(recovery_forward(&m, 0.3, 1.0).is_err());
}

#[test]
fn shipped_recovery_fixture_prices() {
    let model = load("recovery").recovery_model().unwrap().unwrap();
    assert!(model.sticky);
    let curve = DiscountCurve::new(&[(1.0, 0.97), (5.0, 0.85)]).unwrap();
    let rows = price_table(&curve, &model, 0.5, &[0.0, 1.0, 3.0, 5.0]).unwrap();
    assert_eq!(rows[0].f, 0.5);
    assert_eq!(rows[0].ptilde, 0.5);
    for r in &rows {
        assert!((r.ptilde - r.p * r.f).abs() < 1e-15);
        assert!((r.ptilde - defaultable_bond_price(&curve, &model, 0.5, r.tenor).unwrap()).abs() < 1e-15);
        assert!((0.0..=1.0).contains(&r.f));
    }
    assert!(defaultable_bond_price(&curve, &model, 0.5, 6.0).is_err());
    let mut buf = Vec::new();
    write_price_csv(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("tenor,P,F,Ptilde\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn identity_forward_from_level_one() {
    // At S = 1 the identity forward relaxes toward θ at rate κ.
    let spec = load("recovery").typed_spec().unwrap().clone();
    let model = RecoveryModel::new(spec, Payoff::Identity).unwrap();
    let f = recovery_forward(&model, 1.0, 1.0).unwrap();
    assert!((f - (0.64 + 0.36 * (-2.0f64).exp())).abs() < 1e-12);
}

#[test]
fn two_asset_market_reduces_to_the_interval() {
    let m = SptModel {
        d: 2,
        beta: 0.6,
        jumps: vec![
            Some(SptJump { q: vec![0.4, 0.9], mu: MeasureRep::dirac(vec![0.6, 0.4], 1.0) }),
            Some(SptJump { q: vec![0.3, 0.3], mu: MeasureRep::dirac(vec![0.2, 0.8], 0.5) }),
        ],
    };
    let t = spt_build(&m).unwrap();
    let iv = t.simplex2_to_interval().unwrap();
    let es = MomentEngine::new(&t, 3).unwrap();
    let ei = MomentEngine::new(&iv, 3).unwrap();
    for x1 in [0.1, 0.5, 0.85] {
        for k in 1..=3u32 {
            let ps = t.space.coordinate(0).pow(k);
            let pi = Polynomial::var(1, 0).pow(k);
            let a = es.moment(&ps, &[x1, 1.0 - x1], 1.3).unwrap();
            let b = ei.moment(&pi, &[x1], 1.3).unwrap();
            assert!((a - b).abs() < 1e-12, "k = {k}: {a} vs {b}");
        }
    }
}

#[test]
fn interior_condition_tracks_jump_strength() {
    let d = 3;
    let make = |q: f64| SptModel {
        d,
        beta: 0.5,
        jumps: (0..d)
            .map(|i| {
                let y: Vec<f64> = (0..d).map(|k| if k == i { 0.7 } else { 0.15 }).collect();
                Some(SptJump { q: vec![q; d], mu: MeasureRep::dirac(y, 1.0) })
            })
            .collect(),
    };
    // margin = β/2 − 2q·0.15 + q(0.3 + ln 0.7), linear and decreasing in q
    let slope = -0.3 + 0.3 + 0.7f64.ln();
    for q in [0.0, 0.5, 1.0, 2.0] {
        let r = spt_check_interior(&make(q)).unwrap();
        assert!((r.min_margin() - (0.25 + q * slope)).abs() < 1e-14);
        assert_eq!(r.ok, 0.25 + q * slope > 0.0);
    }
}

#[test]
fn curve_from_csv_and_interpolation() {
    let c = DiscountCurve::from_csv("tenor,P\n0.5,0.99\n2,0.94\n".as_bytes()).unwrap();
    assert_eq!(c.points()[0], (0.0, 1.0));
    let w: f64 = (1.0 - 0.5) / 1.5;
    let want = (0.99f64.ln() * (1.0 - w) + 0.94f64.ln() * w).exp();
    assert!((c.discount(1.0).unwrap() - want).abs() < 1e-15);
    assert!(DiscountCurve::new(&[(1.0, 0.9), (1.0, 0.8)]).is_err());
    assert!(DiscountCurve::new(&[(0.0, 0.9)]).is_err());
}
