//! Matrix exponential and exact conditional moments `E[p(X_T) | X_0 = x0]`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::generator::{build_matrix, GeneratorMatrix};
use crate::polyalg::{PolyError, Polynomial};
use crate::specmodel::{LevyTriplet, ModelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("singular Padé denominator")]
    Singular,
    #[error("initial state {0:?} is not in the state space")]
    OutOfSpace(Vec<f64>),
    #[error("negative or non-finite horizon {0}")]
    BadHorizon(f64),
    #[error("polynomial degree {0} exceeds matrix degree {1}")]
    DegreeTooHigh(usize, usize),
}

impl From<PolyError> for MomentError {
    fn from(e: PolyError) -> Self {
        MomentError::Model(ModelError::Poly(e))
    }
}

const THETA_13: f64 = 5.371920351148152;
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `e^M` by scaling and squaring with the diagonal Padé approximant of degree 13.
pub fn expm(m: &DMatrix<f64>) -> Result<DMatrix<f64>, MomentError> {
    assert!(m.is_square(), "expm of a non-square matrix");
    if m.iter().any(|v| !v.is_finite()) {
        return Err(MomentError::NonFinite);
    }
    let n = m.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let norm = norm1(m);
    if norm == 0.0 {
        return Ok(id);
    }
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = m * 2f64.powi(-s);
    let b = &PADE_13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or(MomentError::Singular)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(MomentError::NonFinite);
    }
    Ok(r)
}

/// `p`, an initial state (full coordinates) and a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentQuery {
    pub p: Polynomial,
    pub x0: Vec<f64>,
    pub horizon: f64,
}

/// Generator matrix of a fixed degree, reused across queries.
#[derive(Debug, Clone)]
pub struct MomentEngine {
    pub matrix: GeneratorMatrix,
}

impl MomentEngine {
    pub fn new(t: &LevyTriplet, degree: usize) -> Result<Self, MomentError> {
        Ok(MomentEngine { matrix: build_matrix(t, degree)? })
    }

    fn check(&self, p: &Polynomial, x0: &[f64], horizon: f64) -> Result<Vec<f64>, MomentError> {
        let space = self.matrix.space;
        if p.nvars() != space.n_free() {
            return Err(PolyError::SpaceMismatch(p.nvars(), space.n_free()).into());
        }
        if p.degree() as usize > self.matrix.degree {
            return Err(MomentError::DegreeTooHigh(p.degree() as usize, self.matrix.degree));
        }
        if x0.len() != space.dim() || !space.contains(x0, 1e-12) {
            return Err(MomentError::OutOfSpace(x0.to_vec()));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(MomentError::BadHorizon(horizon));
        }
        Ok(space.free_coords(x0))
    }

    /// `e^{T G} p⃗`: coordinates of `x ↦ E_x[p(X_T)]`.
    pub fn propagate(&self, p: &Polynomial, horizon: f64) -> Result<DVector<f64>, MomentError> {
        let v = DVector::from_vec(self.matrix.coords(p));
        if horizon == 0.0 {
            return Ok(v);
        }
        Ok(expm(&(&self.matrix.g * horizon))? * v)
    }

    pub fn moment(&self, p: &Polynomial, x0: &[f64], horizon: f64) -> Result<f64, MomentError> {
        let z = self.check(p, x0, horizon)?;
        let w = self.propagate(p, horizon)?;
        Ok(DVector::from_vec(self.matrix.basis_at(&z)).dot(&w))
    }

    pub fn curve(&self, p: &Polynomial, x0: &[f64], horizons: &[f64]) -> Result<Vec<f64>, MomentError> {
        horizons.iter().map(|&h| self.moment(p, x0, h)).collect()
    }
}

/// `E[p(X_T) | X_0 = x0]` with the generator matrix of degree `deg p`.
pub fn moment(t: &LevyTriplet, q: &MomentQuery) -> Result<f64, MomentError> {
    MomentEngine::new(t, q.p.degree() as usize)?.moment(&q.p, &q.x0, q.horizon)
}

/// Moments at several horizons, one exponential per horizon.
pub fn moment_curve(t: &LevyTriplet, p: &Polynomial, x0: &[f64], horizons: &[f64]) -> Result<Vec<f64>, MomentError> {
    MomentEngine::new(t, p.degree() as usize)?.curve(p, x0, horizons)
}

/// Writes `T,value` rows.
pub fn write_curve_csv<W: Write>(w: W, horizons: &[f64], values: &[f64]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["T", "value"])?;
    for (h, v) in horizons.iter().zip(values) {
        out.write_record([h.to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::{parse_expr, StateSpace};
    use crate::specmodel::{construct, TypedSpec};

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).iter().all(|v| v.abs() <= tol)
    }

    #[test]
    fn expm_examples() {
        assert_eq!(expm(&DMatrix::zeros(3, 3)).unwrap(), DMatrix::identity(3, 3));
        let d = expm(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0]))).unwrap();
        let e = DMatrix::from_diagonal(&DVector::from_vec(vec![1f64.exp(), (-2f64).exp()]));
        assert!(close(&d, &e, 1e-14));
        let nil = expm(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!(close(&nil, &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]), 1e-15));
        let big = expm(&DMatrix::from_diagonal(&DVector::from_vec(vec![-30.0, 20.0]))).unwrap();
        assert!(((big[(1, 1)] - 20f64.exp()) / 20f64.exp()).abs() < 1e-12);
        assert!(matches!(expm(&DMatrix::from_element(1, 1, f64::NAN)), Err(MomentError::NonFinite)));
    }

    #[test]
    fn rotation_generator() {
        // exp of a skew matrix is a rotation
        let t = 2.5;
        let r = expm(&DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0])).unwrap();
        let e = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        assert!(close(&r, &e, 1e-13));
    }

    #[test]
    fn jacobi_first_moment() {
        let t = construct(&TypedSpec::IntervalType0 { a: 0.2, kappa: 1.0, theta: 0.5 }).unwrap();
        let p = parse_expr("x", StateSpace::Interval).unwrap();
        let q = MomentQuery { p: p.clone(), x0: vec![0.2], horizon: 1.0 };
        let m = moment(&t, &q).unwrap();
        assert!((m - (0.5 - 0.3 * (-1f64).exp())).abs() < 1e-12);
        assert_eq!(moment_curve(&t, &p, &[0.2], &[0.0]).unwrap(), vec![0.2]);
        assert!(matches!(moment(&t, &MomentQuery { x0: vec![1.5], ..q }), Err(MomentError::OutOfSpace(_))));
    }
}
