use std::io::Write;

use crate::moments::MomentEngine;
use crate::polyalg::{MultiIndex, Polynomial};
use crate::specmodel::{construct, LevyTriplet, MeasureRep, TypedSpec};

use super::{AppError, DiscountCurve};

const STICKY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Payoff {
    Identity,
    Square,
    General(Polynomial),
}

impl Payoff {
    pub fn polynomial(&self) -> Polynomial {
        match self {
            Payoff::Identity => Polynomial::var(1, 0),
            Payoff::Square => Polynomial::var(1, 0).pow(2),
            Payoff::General(p) => p.clone(),
        }
    }
}

/// Recovery level `S = p(X)` with `X` of interval Type 2 jumping down toward 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryModel {
    pub spec: TypedSpec,
    pub payoff: Payoff,
    /// `κ(1−θ) = (1+q)∫y μ(dy)`: level 1 is left only by a jump.
    pub sticky: bool,
    triplet: LevyTriplet,
}

struct Params {
    a: f64,
    kappa: f64,
    theta: f64,
    q: f64,
    m1: f64,
    m2: f64,
}

impl RecoveryModel {
    pub fn new(spec: TypedSpec, payoff: Payoff) -> Result<Self, AppError> {
        let TypedSpec::IntervalType2 { side: 0, .. } = &spec else {
            return Err(AppError::NotType2);
        };
        if let Payoff::General(p) = &payoff {
            if p.nvars() != 1 {
                return Err(AppError::InvalidModel("payoff must be a polynomial in x".into()));
            }
        }
        let triplet = construct(&spec)?;
        let mut m = RecoveryModel { spec, payoff, sticky: false, triplet };
        let p = m.params()?;
        m.sticky = (p.kappa * (1.0 - p.theta) - (1.0 + p.q) * p.m1).abs() <= STICKY_TOL;
        Ok(m)
    }

    /// Chooses `θ` so that the sticky equality holds.
    pub fn sticky(a: f64, kappa: f64, q: f64, mu: MeasureRep, payoff: Payoff) -> Result<Self, AppError> {
        if !(kappa > 0.0) {
            return Err(AppError::InvalidModel("sticky level needs kappa > 0".into()));
        }
        let m1 = mu.means()?.first().copied().unwrap_or(0.0);
        let theta = 1.0 - (1.0 + q) * m1 / kappa;
        RecoveryModel::new(TypedSpec::IntervalType2 { a, kappa, theta, q, side: 0, mu }, payoff)
    }

    pub fn triplet(&self) -> &LevyTriplet {
        &self.triplet
    }

    fn params(&self) -> Result<Params, AppError> {
        let TypedSpec::IntervalType2 { a, kappa, theta, q, mu, .. } = &self.spec else {
            return Err(AppError::NotType2);
        };
        Ok(Params {
            a: *a,
            kappa: *kappa,
            theta: *theta,
            q: *q,
            m1: mu.moment(&MultiIndex::new(vec![1]))?,
            m2: mu.moment(&MultiIndex::new(vec![2]))?,
        })
    }

    /// `G₁` and `G₂` with `𝒢x² = G₁x + G₂x²`.
    pub fn g_coefficients(&self) -> Result<(f64, f64), AppError> {
        let p = self.params()?;
        Ok((p.a + 2.0 * p.kappa * p.theta + p.m2, -p.a - 2.0 * p.kappa + p.q * p.m2))
    }

    /// Rate of leaving level 1, `(1+q)μ([0,1])`.
    pub fn exit_rate(&self) -> Result<f64, AppError> {
        let p = self.params()?;
        let TypedSpec::IntervalType2 { mu, .. } = &self.spec else { unreachable!() };
        Ok((1.0 + p.q) * mu.total_mass()?)
    }
}

// (e^{aτ} − 1)/a, continuous at a = 0.
fn phi(a: f64, tau: f64) -> f64 {
    let z = a * tau;
    if z.abs() < 1e-300 {
        tau
    } else {
        (z.exp_m1() / z) * tau
    }
}

fn check(s: f64, tau: f64) -> Result<(), AppError> {
    if !(0.0..=1.0).contains(&s) {
        return Err(AppError::OutOfRange(format!("recovery level {s}")));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(AppError::OutOfRange(format!("horizon {tau}")));
    }
    Ok(())
}

/// `F(t,T) = E[S_T | S_t]` with `τ = T − t`.
pub fn recovery_forward(model: &RecoveryModel, s: f64, tau: f64) -> Result<f64, AppError> {
    check(s, tau)?;
    if tau == 0.0 {
        return Ok(s);
    }
    let p = model.params()?;
    let decay = (-p.kappa * tau).exp();
    match &model.payoff {
        Payoff::Identity => Ok((1.0 - decay) * p.theta + decay * s),
        Payoff::Square => {
            let (g1, g2) = model.g_coefficients()?;
            let x0 = s.sqrt();
            let m1_part = g1 * p.theta * phi(g2, tau) + g1 * (x0 - p.theta) * (g2 * tau).exp() * phi(-(p.kappa + g2), tau);
            Ok((g2 * tau).exp() * s + m1_part)
        }
        Payoff::General(poly) => {
            let x0 = invert_increasing(poly, s)?;
            forward_from_state(model, x0, tau)
        }
    }
}

/// The square-payoff expression in the form usually quoted for this model. Its
/// derivative at `τ = 0` has `−κS` where `𝒢x²` gives `G₂S`, so it agrees with the
/// moment formula only when `G₂ = −κ`.
pub fn square_forward_as_printed(model: &RecoveryModel, s: f64, tau: f64) -> Result<f64, AppError> {
    check(s, tau)?;
    let p = model.params()?;
    let (g1, g2) = model.g_coefficients()?;
    let k = p.kappa;
    let e2 = (tau * g2).exp();
    let ek = (-tau * k).exp();
    Ok((k * (1.0 - e2) + g2 * (1.0 - ek)) * p.theta / (k + g2) + g1 * (e2 - ek) / (k + g2) * s.sqrt() + ek * s)
}

/// `E[p(X_τ) | X_0 = x0]` through the moment engine.
pub fn forward_from_state(model: &RecoveryModel, x0: f64, tau: f64) -> Result<f64, AppError> {
    let p = model.payoff.polynomial();
    let engine = MomentEngine::new(&model.triplet, p.degree() as usize)?;
    Ok(engine.moment(&p, &[x0], tau)?)
}

// x in [0,1] with p(x) = s for p increasing on [0,1].
fn invert_increasing(p: &Polynomial, s: f64) -> Result<f64, AppError> {
    let dp = p.partial_derivative(0);
    let scale = p.max_abs_coeff().max(1.0);
    if (0..=1000).any(|k| dp.eval(&[k as f64 / 1000.0]) < -1e-12 * scale) {
        return Err(AppError::NonInjective);
    }
    let (lo_v, hi_v) = (p.eval(&[0.0]), p.eval(&[1.0]));
    if s < lo_v - 1e-12 || s > hi_v + 1e-12 {
        return Err(AppError::OutOfRange(format!("level {s} outside payoff range [{lo_v}, {hi_v}]")));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p.eval(&[mid]) < s {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `P̃(t,T) = P(t,T)·F(t,T)` with `T` measured from `t`.
pub fn defaultable_bond_price(curve: &DiscountCurve, model: &RecoveryModel, s: f64, tau: f64) -> Result<f64, AppError> {
    let p = curve.discount(tau)?;
    Ok(p * recovery_forward(model, s, tau)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceRow {
    pub tenor: f64,
    pub p: f64,
    pub f: f64,
    pub ptilde: f64,
}

pub fn price_table(curve: &DiscountCurve, model: &RecoveryModel, s: f64, tenors: &[f64]) -> Result<Vec<PriceRow>, AppError> {
    tenors
        .iter()
        .map(|&tau| {
            let p = curve.discount(tau)?;
            let f = recovery_forward(model, s, tau)?;
            Ok(PriceRow { tenor: tau, p, f, ptilde: p * f })
        })
        .collect()
}

/// Writes `tenor,P,F,Ptilde`.
pub fn write_price_csv<W: Write>(w: W, rows: &[PriceRow]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["tenor", "P", "F", "Ptilde"])?;
    for r in rows {
        out.write_record([r.tenor.to_string(), r.p.to_string(), r.f.to_string(), r.ptilde.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
