//! Typed and raw specifications of polynomial jump-diffusions.

mod construct;
mod measure;
mod triplet;
mod typed;
mod validate;

use thiserror::Error;

use crate::polyalg::PolyError;

pub use construct::{construct, BOUNDARY_SLACK};
pub(crate) use construct::{simplex_type2_jump, wright_fisher};
pub use measure::{measure_moments, Atom, MeasureRep, MomentTable};
pub use triplet::{AffineJumpMap, JumpSpec, LevyTriplet, PoleCorrection, RationalFn, EXCLUDE_TOL};
pub use typed::{simplex_grid, TypedSpec};
pub use validate::{validate, ValidationReport, Violation, DEFAULT_GRID};
pub(crate) use validate::min_eigenvalue;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("moment unavailable: {0}")]
    MomentUnavailable(String),
    #[error("parameter {param} out of domain: {detail}")]
    DomainViolation { param: String, detail: String },
    #[error("boundary condition violated: {condition} (margin {margin:e})")]
    BoundaryViolation { condition: String, margin: f64 },
    #[error("type 4 has no known construction")]
    Type4Unsupported,
    #[error("jump moment {k:?} is not a polynomial (residual {residual:e})")]
    NotPolynomial { k: Vec<u32>, residual: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Checks the typed parameters, builds the triplet and validates it.
pub fn validate_typed(typed: &TypedSpec, grid_n: usize) -> ValidationReport {
    let domain = typed.check_domain();
    if !domain.is_empty() {
        return ValidationReport { ok: false, violations: domain, warnings: vec![] };
    }
    match construct(typed) {
        Ok(t) => validate(&t, grid_n),
        Err(ModelError::BoundaryViolation { condition, margin }) => ValidationReport {
            ok: false,
            violations: vec![Violation::new("boundary-condition", &condition, margin)],
            warnings: vec![],
        },
        Err(ModelError::Type4Unsupported) => ValidationReport {
            ok: false,
            violations: vec![],
            warnings: vec!["type 4 has no known construction; parameters only".into()],
        },
        Err(e) => ValidationReport {
            ok: false,
            violations: vec![Violation::new("construction", &e.to_string(), f64::NAN)],
            warnings: vec![],
        },
    }
}
