use crate::polyalg::{MultiIndex, Polynomial, StateSpace};

use super::typed::simplex_grid;
use super::{
    AffineJumpMap, JumpSpec, LevyTriplet, MeasureRep, ModelError, PoleCorrection, RationalFn, TypedSpec,
};

/// Absolute slack on the boundary inequalities.
pub const BOUNDARY_SLACK: f64 = 1e-10;

/// Builds the characteristic triplet of a typed specification.
pub fn construct(typed: &TypedSpec) -> Result<LevyTriplet, ModelError> {
    if let Some(v) = typed.check_domain().into_iter().next() {
        return Err(ModelError::DomainViolation { param: v.id, detail: format!("{} = {}", v.location, v.magnitude) });
    }
    match typed {
        TypedSpec::IntervalType0 { a, kappa, theta } => Ok(jacobi(*a, *kappa, *theta)),
        TypedSpec::IntervalType1 { a, kappa, theta, mu } => {
            let m = mu.means()?;
            boundary("kappa*theta >= int y2 mu", kappa * theta - m[1])?;
            boundary("kappa*(1-theta) >= int y1 mu", kappa * (1.0 - theta) - m[0])?;
            let mut t = jacobi(*a, *kappa, *theta);
            let x = Polynomial::var(1, 0);
            let one = Polynomial::constant(1, 1.0);
            t.jumps.push(JumpSpec {
                lambda: RationalFn::constant(1, 1.0),
                gamma: AffineJumpMap::new(vec![vec![-&x], vec![&one - &x]]),
                mu: mu.clone(),
            });
            Ok(t)
        }
        TypedSpec::IntervalType2 { a, kappa, theta, q, side, mu } => {
            if *q > -1.0 {
                let m1 = mu.means()?[0];
                if *side == 0 {
                    boundary("kappa*(1-theta) >= (1+q) int y mu", kappa * (1.0 - theta) - (1.0 + q) * m1)?;
                } else {
                    boundary("kappa*theta >= (1+q) int y mu", kappa * theta - (1.0 + q) * m1)?;
                }
            }
            let mut t = jacobi(*a, *kappa, *theta);
            let x = Polynomial::var(1, 0);
            let one = Polynomial::constant(1, 1.0);
            // Distance to the no-jump point.
            let dist = if *side == 0 { x.clone() } else { &one - &x };
            let num = &one + &dist.scale(*q);
            let dir = if *side == 0 { -&x } else { &one - &x };
            t.jumps.push(JumpSpec {
                lambda: RationalFn::new(num, dist.clone(), Some(dist))?,
                gamma: AffineJumpMap::new(vec![vec![dir]]),
                mu: mu.clone(),
            });
            Ok(t)
        }
        TypedSpec::IntervalType3 { x_star, kappa, theta, a, q0, q1, q2, mu } => {
            let xs = *x_star;
            let low = *q0;
            let high = q0 + q1 + q2;
            if low != 0.0 || high != 0.0 {
                let m1 = mu.means()?[0];
                boundary("kappa*theta >= q0/x* int y mu", kappa * theta - low / xs * m1)?;
                boundary("kappa*(1-theta) >= q(1)/(1-x*) int y mu", kappa * (1.0 - theta) - high / (1.0 - xs) * m1)?;
            }
            let mut t = jacobi(*a, *kappa, *theta);
            let x = Polynomial::var(1, 0);
            let shift = &x - &Polynomial::constant(1, xs);
            let num = Polynomial::from_terms(1, [(vec![0], *q0), (vec![1], *q1), (vec![2], *q2)]);
            let m2 = mu.moment(&MultiIndex::new(vec![2]))?;
            let corr = (q0 + q1 * xs + q2 * xs * xs) * m2;
            t.jumps.push(JumpSpec {
                lambda: RationalFn::new(num, shift.pow(2), Some(shift.clone()))?,
                gamma: AffineJumpMap::new(vec![vec![-&shift]]),
                mu: mu.clone(),
            });
            t.pole_corrections.push(PoleCorrection {
                locus: shift,
                matrix: vec![vec![Polynomial::constant(1, corr)]],
            });
            Ok(t)
        }
        TypedSpec::IntervalType4 { .. } => Err(ModelError::Type4Unsupported),
        TypedSpec::SimplexType0 { alpha, b } => Ok(wright_fisher(alpha, b)),
        TypedSpec::SimplexType1 { alpha, b, mu } => {
            let d = alpha.len();
            let m = mu.means()?;
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        // ∫ y^j_i μ(dy)
                        boundary(&format!("B[{}][{}] >= int y^{}_{} mu", i + 1, j + 1, j + 1, i + 1), b[i][j] - m[j * d + i])?;
                    }
                }
            }
            let space = StateSpace::Simplex(d);
            let mut t = wright_fisher(alpha, b);
            let n = d - 1;
            let mut dirs = Vec::with_capacity(d * d);
            for i in 0..d {
                let xi = space.coordinate(i);
                for k in 0..d {
                    let mut g = vec![Polynomial::zero(n); d];
                    g[k] = xi.clone();
                    dirs.push(g);
                }
            }
            let shift: Vec<f64> = (0..d * d).map(|m| if m / d == m % d { -1.0 } else { 0.0 }).collect();
            t.jumps.push(JumpSpec {
                lambda: RationalFn::constant(n, 1.0),
                gamma: AffineJumpMap::new(dirs),
                mu: mu.pushforward_affine(&identity(d * d), &shift)?,
            });
            Ok(t)
        }
        TypedSpec::SimplexType2 { i, alpha, b, q1, mu } => {
            let d = alpha.len();
            let m = mu.means()?;
            for k in (0..d).filter(|k| k != i) {
                for j in (0..d).filter(|&j| j != k) {
                    if q1[j] != 0.0 {
                        boundary(&format!("B[{}][{}] >= q1(e{}) int y_{} mu", k + 1, j + 1, j + 1, k + 1), b[k][j] - q1[j] * m[k])?;
                    }
                }
            }
            let mut t = wright_fisher(alpha, b);
            t.jumps.push(simplex_type2_jump(d, *i, q1, mu)?);
            Ok(t)
        }
        TypedSpec::SimplexType3 { i, j, c, b, alpha, qi, qj, mu } => {
            let d = alpha.len();
            let (i, j) = (*i, *j);
            let q2 = |x: &[f64]| (0..d).map(|k| qi[k] * x[i] * x[k] + qj[k] * x[j] * x[k]).sum::<f64>();
            if q2_needs_mean(qi, qj) {
                let m1 = mu.means()?[0];
                // Faces x_i = 0 and x_j = 0; other faces only see the drift.
                for face in [i, j] {
                    for x in face_grid(d, face, 200) {
                        let p1 = -c * x[i] + x[j];
                        let jump = if p1.abs() <= 1e-14 { 0.0 } else { q2(&x) / p1 * m1 };
                        let sign = if face == i { 1.0 } else { -1.0 };
                        let drift: f64 = (0..d).filter(|&l| l != face).map(|l| b[face][l] * x[l]).sum();
                        boundary(&format!("face x{} = 0 at {}", face + 1, super::typed::fmt_point(&x)), drift - sign * jump)?;
                    }
                }
            }
            let space = StateSpace::Simplex(d);
            let n = d - 1;
            let mut t = wright_fisher(alpha, b);
            let xi = space.coordinate(i);
            let xj = space.coordinate(j);
            let p1 = &xj - &xi.scale(*c);
            let mut q2p = Polynomial::zero(n);
            for k in 0..d {
                let xk = space.coordinate(k);
                q2p = &q2p + &(&(&xi * &xk).scale(qi[k]) + &(&xj * &xk).scale(qj[k]));
            }
            let mut g = vec![Polynomial::zero(n); d];
            g[i] = p1.clone();
            g[j] = -&p1;
            let m2 = mu.moment(&MultiIndex::new(vec![2]))?;
            let corr = q2p.scale(m2);
            let mut matrix = vec![vec![Polynomial::zero(n); d]; d];
            matrix[i][i] = corr.clone();
            matrix[j][j] = corr.clone();
            matrix[i][j] = -&corr;
            matrix[j][i] = -&corr;
            t.jumps.push(JumpSpec {
                lambda: RationalFn::new(q2p, p1.pow(2), Some(p1.clone()))?,
                gamma: AffineJumpMap::new(vec![g]),
                mu: mu.clone(),
            });
            t.pole_corrections.push(PoleCorrection { locus: p1, matrix });
            Ok(t)
        }
    }
}

fn q2_needs_mean(qi: &[f64], qj: &[f64]) -> bool {
    qi.iter().chain(qj).any(|&q| q != 0.0)
}

fn boundary(condition: &str, margin: f64) -> Result<(), ModelError> {
    if margin < -BOUNDARY_SLACK || margin.is_nan() {
        return Err(ModelError::BoundaryViolation { condition: condition.to_string(), margin });
    }
    Ok(())
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// Jacobi part `a = A x(1−x)`, `b = κ(θ − x)`.
pub(crate) fn jacobi(a: f64, kappa: f64, theta: f64) -> LevyTriplet {
    let x = Polynomial::var(1, 0);
    let one = Polynomial::constant(1, 1.0);
    let mut t = LevyTriplet::zero(StateSpace::Interval);
    t.diffusion[0][0] = (&x * &(&one - &x)).scale(a);
    t.drift[0] = (&Polynomial::constant(1, theta) - &x).scale(kappa);
    t
}

/// Wright–Fisher part `a_ii = Σ_{j≠i} α_ij x_i x_j`, `a_ij = −α_ij x_i x_j`, `b = Bx`.
pub(crate) fn wright_fisher(alpha: &[Vec<f64>], b: &[Vec<f64>]) -> LevyTriplet {
    let d = alpha.len();
    let space = StateSpace::Simplex(d);
    let xs: Vec<Polynomial> = (0..d).map(|i| space.coordinate(i)).collect();
    let mut t = LevyTriplet::zero(space);
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let term = (&xs[i] * &xs[j]).scale(alpha[i][j]);
            t.diffusion[i][i] = &t.diffusion[i][i] + &term;
            t.diffusion[i][j] = -&term;
        }
        let mut bi = Polynomial::zero(d - 1);
        for j in 0..d {
            bi = &bi + &xs[j].scale(b[i][j]);
        }
        t.drift[i] = bi;
    }
    t
}

/// The jump kernel `λ = q1(x)/x_i`, `γ = (y − e_i) x_i` of simplex Type 2.
pub(crate) fn simplex_type2_jump(d: usize, i: usize, q1: &[f64], mu: &MeasureRep) -> Result<JumpSpec, ModelError> {
    let space = StateSpace::Simplex(d);
    let n = d - 1;
    let xi = space.coordinate(i);
    let mut num = Polynomial::zero(n);
    for (j, &qj) in q1.iter().enumerate() {
        num = &num + &space.coordinate(j).scale(qj);
    }
    let dirs = (0..d)
        .map(|k| {
            let mut g = vec![Polynomial::zero(n); d];
            g[k] = xi.clone();
            g
        })
        .collect();
    let shift: Vec<f64> = (0..d).map(|k| if k == i { -1.0 } else { 0.0 }).collect();
    Ok(JumpSpec {
        lambda: RationalFn::new(num, xi.clone(), Some(xi))?,
        gamma: AffineJumpMap::new(dirs),
        mu: mu.pushforward_affine(&identity(d), &shift)?,
    })
}

/// Grid on the face `{x_face = 0}` of `Δ^d` (full coordinates).
pub(crate) fn face_grid(d: usize, face: usize, n: usize) -> Vec<Vec<f64>> {
    simplex_grid(d - 1, n)
        .into_iter()
        .map(|p| {
            let mut x = p;
            x.insert(face, 0.0);
            x
        })
        .collect()
}
