use crate::polyalg::{MultiIndex, StateSpace};

use super::{MeasureRep, Violation};

/// Canonical parameterizations of the interval Types 0–4 and simplex Types 0–3.
///
/// Interval measures: Type 1 lives on `(y1, y2) ∈ [0,1]²`, with jump
/// `γ = y1·(−x) + y2·(1−x)`; Types 2 and 3 use a scalar `y`.
/// Simplex measures: Type 1 points are `(y^1, …, y^d)` flattened row by row,
/// Type 2 points are `y ∈ Δ^d`, Type 3 uses a scalar `y`.
/// Simplex indices `i`, `j` are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum TypedSpec {
    IntervalType0 { a: f64, kappa: f64, theta: f64 },
    IntervalType1 { a: f64, kappa: f64, theta: f64, mu: MeasureRep },
    IntervalType2 { a: f64, kappa: f64, theta: f64, q: f64, side: u8, mu: MeasureRep },
    IntervalType3 { x_star: f64, kappa: f64, theta: f64, a: f64, q0: f64, q1: f64, q2: f64, mu: MeasureRep },
    IntervalType4 { alpha_re: f64, alpha_im: f64, kappa: f64, theta: f64, a: f64, l: f64, mu: MeasureRep },
    SimplexType0 { alpha: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
    SimplexType1 { alpha: Vec<Vec<f64>>, b: Vec<Vec<f64>>, mu: MeasureRep },
    SimplexType2 { i: usize, alpha: Vec<Vec<f64>>, b: Vec<Vec<f64>>, q1: Vec<f64>, mu: MeasureRep },
    SimplexType3 {
        i: usize,
        j: usize,
        c: f64,
        b: Vec<Vec<f64>>,
        alpha: Vec<Vec<f64>>,
        qi: Vec<f64>,
        qj: Vec<f64>,
        mu: MeasureRep,
    },
}

const SUPPORT_TOL: f64 = 1e-12;

impl TypedSpec {
    pub fn space(&self) -> StateSpace {
        match self {
            TypedSpec::IntervalType0 { .. }
            | TypedSpec::IntervalType1 { .. }
            | TypedSpec::IntervalType2 { .. }
            | TypedSpec::IntervalType3 { .. }
            | TypedSpec::IntervalType4 { .. } => StateSpace::Interval,
            TypedSpec::SimplexType0 { alpha, .. }
            | TypedSpec::SimplexType1 { alpha, .. }
            | TypedSpec::SimplexType2 { alpha, .. }
            | TypedSpec::SimplexType3 { alpha, .. } => StateSpace::Simplex(alpha.len().max(2)),
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            TypedSpec::IntervalType0 { .. } => "interval-type-0",
            TypedSpec::IntervalType1 { .. } => "interval-type-1",
            TypedSpec::IntervalType2 { .. } => "interval-type-2",
            TypedSpec::IntervalType3 { .. } => "interval-type-3",
            TypedSpec::IntervalType4 { .. } => "interval-type-4",
            TypedSpec::SimplexType0 { .. } => "simplex-type-0",
            TypedSpec::SimplexType1 { .. } => "simplex-type-1",
            TypedSpec::SimplexType2 { .. } => "simplex-type-2",
            TypedSpec::SimplexType3 { .. } => "simplex-type-3",
        }
    }

    /// Parameter-domain violations (empty when the parameters are admissible).
    pub fn check_domain(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        match self {
            TypedSpec::IntervalType0 { a, kappa, theta } => interval_common(&mut v, *a, *kappa, *theta),
            TypedSpec::IntervalType1 { a, kappa, theta, mu } => {
                interval_common(&mut v, *a, *kappa, *theta);
                check_mu(&mut v, mu, 2, |y| {
                    y.iter().all(|&c| (-SUPPORT_TOL..=1.0 + SUPPORT_TOL).contains(&c)) && y.iter().any(|&c| c != 0.0)
                });
            }
            TypedSpec::IntervalType2 { a, kappa, theta, q, side, mu } => {
                interval_common(&mut v, *a, *kappa, *theta);
                if !(*q >= -1.0 && q.is_finite()) {
                    v.push(Violation::new("q-domain", "q", *q));
                }
                if *side > 1 {
                    v.push(Violation::new("side-domain", "side", f64::from(*side)));
                }
                check_mu(&mut v, mu, 1, |y| y[0] > 0.0 && y[0] <= 1.0 + SUPPORT_TOL);
            }
            TypedSpec::IntervalType3 { x_star, kappa, theta, a, q0, q1, q2, mu } => {
                interval_common(&mut v, *a, *kappa, *theta);
                if !(*x_star > 0.0 && *x_star < 1.0) {
                    v.push(Violation::new("xstar-domain", "x_star", *x_star));
                }
                let num = |x: f64| q0 + q1 * x + q2 * x * x;
                if let Some(x) = grid_min(num, 400) {
                    v.push(Violation::new("numerator-nonneg", &format!("x={x}"), num(x)));
                }
                if num(*x_star) <= 0.0 {
                    v.push(Violation::new("numerator-pole", &format!("x={x_star}"), num(*x_star)));
                }
                let ymax = 1.0 / x_star.max(1.0 - x_star);
                check_mu(&mut v, mu, 1, |y| y[0] > 0.0 && y[0] <= ymax + SUPPORT_TOL);
            }
            TypedSpec::IntervalType4 { alpha_re, alpha_im, a, kappa, theta, l, .. } => {
                interval_common(&mut v, *a, *kappa, *theta);
                let r = ((2.0 * alpha_re - 1.0).powi(2) + 4.0 * alpha_im * alpha_im).sqrt();
                if r >= 1.0 || *alpha_im == 0.0 {
                    v.push(Violation::new("alpha-domain", "alpha", r));
                }
                if *l < 0.0 {
                    v.push(Violation::new("L-domain", "L", *l));
                }
            }
            TypedSpec::SimplexType0 { alpha, b } => simplex_common(&mut v, alpha, b),
            TypedSpec::SimplexType1 { alpha, b, mu } => {
                let d = alpha.len();
                simplex_common(&mut v, alpha, b);
                check_mu(&mut v, mu, d * d, |y| {
                    let in_simplex = y.chunks(d).all(in_simplex);
                    let trivial = y.chunks(d).enumerate().all(|(i, yi)| (yi[i] - 1.0).abs() <= SUPPORT_TOL);
                    in_simplex && !trivial
                });
            }
            TypedSpec::SimplexType2 { i, alpha, b, q1, mu } => {
                let d = alpha.len();
                simplex_common(&mut v, alpha, b);
                if *i >= d {
                    v.push(Violation::new("index-domain", "i", *i as f64));
                    return v;
                }
                if q1.len() != d {
                    v.push(Violation::new("shape", "q1", q1.len() as f64));
                    return v;
                }
                for (j, &qj) in q1.iter().enumerate() {
                    if qj < 0.0 {
                        v.push(Violation::new("q-domain", &format!("q1(e{})", j + 1), qj));
                    }
                }
                if q1.iter().enumerate().all(|(j, &qj)| j == *i || qj == 0.0) {
                    v.push(Violation::new("q-nonconstant", "q1", 0.0));
                }
                check_mu(&mut v, mu, d, |y| in_simplex(y) && (y[*i] - 1.0).abs() > SUPPORT_TOL);
            }
            TypedSpec::SimplexType3 { i, j, c, b, alpha, qi, qj, mu } => {
                let d = alpha.len();
                simplex_common(&mut v, alpha, b);
                if *i >= d || *j >= d || i == j {
                    v.push(Violation::new("index-domain", "i,j", *i as f64));
                    return v;
                }
                if qi.len() != d || qj.len() != d {
                    v.push(Violation::new("shape", "q", qi.len() as f64));
                    return v;
                }
                if !(*c > 0.0 && c.is_finite()) {
                    v.push(Violation::new("c-domain", "c", *c));
                }
                let q2 = |x: &[f64]| (0..d).map(|k| qi[k] * x[*i] * x[k] + qj[k] * x[*j] * x[k]).sum::<f64>();
                for x in simplex_grid(d, 40) {
                    let val = q2(&x);
                    if val < -1e-12 {
                        v.push(Violation::new("q-domain", &fmt_point(&x), val));
                        break;
                    }
                }
                let ymax = (1.0 / c).min(1.0);
                check_mu(&mut v, mu, 1, |y| y[0] > 0.0 && y[0] <= ymax + SUPPORT_TOL);
            }
        }
        v
    }
}

fn interval_common(v: &mut Vec<Violation>, a: f64, kappa: f64, theta: f64) {
    if !(a >= 0.0 && a.is_finite()) {
        v.push(Violation::new("A-domain", "A", a));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        v.push(Violation::new("kappa-domain", "kappa", kappa));
    }
    if !(0.0..=1.0).contains(&theta) {
        v.push(Violation::new("theta-domain", "theta", theta));
    }
}

fn simplex_common(v: &mut Vec<Violation>, alpha: &[Vec<f64>], b: &[Vec<f64>]) {
    let d = alpha.len();
    if d < 2 || alpha.iter().any(|r| r.len() != d) || b.len() != d || b.iter().any(|r| r.len() != d) {
        v.push(Violation::new("shape", "alpha/B", d as f64));
        return;
    }
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            if alpha[i][j] < 0.0 || (alpha[i][j] - alpha[j][i]).abs() > 1e-12 {
                v.push(Violation::new("alpha-domain", &format!("alpha[{}][{}]", i + 1, j + 1), alpha[i][j]));
            }
            if b[i][j] < 0.0 {
                v.push(Violation::new("B-domain", &format!("B[{}][{}]", i + 1, j + 1), b[i][j]));
            }
        }
        let col: f64 = (0..d).map(|k| b[k][i]).sum();
        if col.abs() > 1e-12 * (1.0 + b[i][i].abs()) {
            v.push(Violation::new("B-domain", &format!("column {}", i + 1), col));
        }
    }
}

fn check_mu(v: &mut Vec<Violation>, mu: &MeasureRep, dim: usize, support: impl Fn(&[f64]) -> bool) {
    if mu.dim() != dim {
        v.push(Violation::new("mu-shape", "mu", mu.dim() as f64));
        return;
    }
    match mu {
        MeasureRep::Atoms { atoms, .. } => {
            for a in atoms {
                if !(a.weight > 0.0 && a.weight.is_finite()) {
                    v.push(Violation::new("mu-weight", &fmt_point(&a.point), a.weight));
                }
                if a.point.len() != dim || !support(&a.point) {
                    v.push(Violation::new("mu-support", &fmt_point(&a.point), a.weight));
                }
            }
        }
        MeasureRep::Moments(t) => {
            if t.max_order() < 2 {
                v.push(Violation::new("mu-moments", "order 2", 0.0));
            }
            let m0 = t.get(&MultiIndex::zero(dim));
            if m0.is_some_and(|m| m < 0.0) {
                v.push(Violation::new("mu-weight", "mass", m0.unwrap_or(0.0)));
            }
        }
    }
}

fn in_simplex(y: &[f64]) -> bool {
    y.iter().all(|&c| c >= -SUPPORT_TOL) && (y.iter().sum::<f64>() - 1.0).abs() <= 1e-9
}

fn grid_min(f: impl Fn(f64) -> f64, n: usize) -> Option<f64> {
    (0..=n).map(|i| i as f64 / n as f64).find(|&x| f(x) < -1e-12)
}

pub(crate) fn fmt_point(x: &[f64]) -> String {
    let s: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    format!("({})", s.join(","))
}

/// Lattice points of `Δ^d` with spacing `1/n` (full coordinates).
pub fn simplex_grid(d: usize, n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; d];
    fn rec(pos: usize, rest: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if pos + 1 == cur.len() {
            cur[pos] = rest;
            out.push(cur.iter().map(|&c| c as f64 / n as f64).collect());
            return;
        }
        for c in 0..=rest {
            cur[pos] = c;
            rec(pos + 1, rest - c, n, cur, out);
        }
    }
    rec(0, n, n, &mut cur, &mut out);
    out
}
