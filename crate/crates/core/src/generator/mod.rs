//! The Lévy-type operator on polynomials and its matrix representation.

mod classify;
mod combine;

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::polyalg::{enumerate_basis, MultiIndex, PolyError, Polynomial, StateSpace, DEFAULT_DIVISION_TOL};
use crate::specmodel::{LevyTriplet, ModelError, Violation};

pub use classify::{classify, classify_unchecked, TypeTag};
pub use combine::{conic_combine, finite_atom_intensities};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("triplet failed validation: {}", fmt_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("jump kernels do not combine into one affine kernel: {0}")]
    NotAffineJumpSizes(String),
    #[error("assumption on λγ_i³ violated: {0}")]
    AssumptionAViolated(String),
    #[error("unclassifiable: {0}")]
    Unclassifiable(String),
    #[error("jump sizes {0} and {1} coincide")]
    DegenerateGammas(usize, usize),
    #[error("negative combination weight {0}")]
    NegativeWeight(f64),
    #[error("state spaces differ")]
    SpaceMismatch,
}

impl From<PolyError> for GenError {
    fn from(e: PolyError) -> Self {
        GenError::Model(ModelError::Poly(e))
    }
}

fn fmt_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Memoized jump moment polynomials `r_k` of one triplet.
pub struct Generator<'a> {
    triplet: &'a LevyTriplet,
    cache: HashMap<MultiIndex, Polynomial>,
}

impl<'a> Generator<'a> {
    pub fn new(triplet: &'a LevyTriplet) -> Self {
        Generator { triplet, cache: HashMap::new() }
    }

    pub fn triplet(&self) -> &LevyTriplet {
        self.triplet
    }

    /// `r_k = ∫ ξ^k ν(·, dξ)` for a multi-index over the free coordinates.
    pub fn jump_moment(&mut self, k: &MultiIndex) -> Result<&Polynomial, ModelError> {
        if !self.cache.contains_key(k) {
            let mut kf = k.exponents().to_vec();
            kf.resize(self.triplet.space.dim(), 0);
            let r = self.triplet.jump_moment_polynomial(&kf, DEFAULT_DIVISION_TOL)?;
            self.cache.insert(k.clone(), r);
        }
        Ok(&self.cache[k])
    }

    /// `𝒢f`, the continuous polynomial extension across excluded loci.
    pub fn apply(&mut self, f: &Polynomial) -> Result<Polynomial, ModelError> {
        let t = self.triplet;
        let space = t.space;
        let n = space.n_free();
        if f.nvars() != n {
            return Err(PolyError::SpaceMismatch(f.nvars(), n).into());
        }
        let mut out = Polynomial::zero(n);
        let grads: Vec<Polynomial> = (0..n).map(|i| f.partial_derivative(i)).collect();
        for i in 0..n {
            if grads[i].is_zero() {
                continue;
            }
            out = &out + &(&t.drift[i] * &grads[i]);
            for j in 0..n {
                let a = &t.diffusion[i][j];
                if a.is_zero() {
                    continue;
                }
                let h = grads[i].partial_derivative(j);
                out = &out + &(a * &h).scale(0.5);
            }
        }
        let deg = f.degree() as usize;
        if deg >= 2 && !t.jumps.is_empty() {
            for k in enumerate_basis(space, deg) {
                if k.degree() < 2 {
                    continue;
                }
                let tc = f.taylor_coefficient(&k);
                if tc.is_zero() {
                    continue;
                }
                let r = self.jump_moment(&k)?;
                if !r.is_zero() {
                    out = &out + &(&tc * r);
                }
            }
        }
        truncate_degree(out, deg)
    }
}

// Drops round-off above the degree of `f`; larger terms mean the operator is not polynomial.
fn truncate_degree(p: Polynomial, deg: usize) -> Result<Polynomial, ModelError> {
    if p.degree() as usize <= deg {
        return Ok(p);
    }
    let scale = p.max_abs_coeff().max(1.0);
    let mut worst: f64 = 0.0;
    let mut kept = Polynomial::zero(p.nvars());
    for (k, c) in p.terms() {
        if k.degree() as usize > deg {
            worst = worst.max(c.abs());
        } else {
            kept.add_term(k.clone(), c);
        }
    }
    if worst > 1e-9 * scale {
        return Err(ModelError::NotPolynomial { k: vec![], residual: worst });
    }
    Ok(kept)
}

/// `𝒢f` for a single polynomial.
pub fn apply_generator(t: &LevyTriplet, f: &Polynomial) -> Result<Polynomial, ModelError> {
    Generator::new(t).apply(f)
}

/// Matrix of `𝒢` on the monomial basis of degree at most `degree`; column `j`
/// holds the coordinates of the image of the `j`-th basis element.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub space: StateSpace,
    pub degree: usize,
    pub basis: Vec<MultiIndex>,
    pub g: DMatrix<f64>,
}

impl GeneratorMatrix {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of `p` in the basis.
    pub fn coords(&self, p: &Polynomial) -> Vec<f64> {
        p.coords(&self.basis)
    }

    /// `H(x)`: basis monomials evaluated at a point (free coordinates).
    pub fn basis_at(&self, z: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|k| k.eval(z)).collect()
    }

    /// Writes the matrix row by row with the basis labels as header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.basis.iter().map(MultiIndex::label))?;
        for r in 0..self.size() {
            out.write_record((0..self.size()).map(|c| format!("{}", self.g[(r, c)])))?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn build_matrix(t: &LevyTriplet, degree: usize) -> Result<GeneratorMatrix, ModelError> {
    let basis = enumerate_basis(t.space, degree);
    let n = t.space.n_free();
    let size = basis.len();
    let mut g = DMatrix::zeros(size, size);
    let mut gen = Generator::new(t);
    for (j, k) in basis.iter().enumerate() {
        let img = gen.apply(&Polynomial::monomial(k.clone(), 1.0))?;
        debug_assert_eq!(img.nvars(), n);
        for (i, c) in img.coords(&basis).into_iter().enumerate() {
            g[(i, j)] = c;
        }
    }
    Ok(GeneratorMatrix { space: t.space, degree, basis, g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::parse_expr;
    use crate::specmodel::{construct, MeasureRep, TypedSpec};

    fn jacobi() -> LevyTriplet {
        construct(&TypedSpec::IntervalType0 { a: 0.2, kappa: 1.0, theta: 0.5 }).unwrap()
    }

    #[test]
    fn jacobi_images() {
        let t = jacobi();
        let s = StateSpace::Interval;
        let one = Polynomial::constant(1, 1.0);
        assert!(apply_generator(&t, &one).unwrap().is_zero());
        let gx = apply_generator(&t, &parse_expr("x", s).unwrap()).unwrap();
        assert!(gx.approx_eq(&parse_expr("0.5 - x", s).unwrap(), 1e-15));
        let gx2 = apply_generator(&t, &parse_expr("x^2", s).unwrap()).unwrap();
        assert!(gx2.approx_eq(&parse_expr("1.2*x - 2.2*x^2", s).unwrap(), 1e-14));
    }

    #[test]
    fn jacobi_matrix() {
        let m = build_matrix(&jacobi(), 1).unwrap();
        assert_eq!(m.g, DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.0, -1.0]));
        let m0 = build_matrix(&jacobi(), 0).unwrap();
        assert_eq!(m0.g, DMatrix::zeros(1, 1));
    }

    #[test]
    fn reflection_square() {
        // σ² = 0.3, κ0 = 1, θ0 = 0.4, λ = 0.7
        let (s2, k0, th0, l) = (0.3, 1.0, 0.4, 0.7);
        let typed = TypedSpec::IntervalType1 {
            a: s2,
            kappa: k0 + 2.0 * l,
            theta: (k0 * th0 + l) / (k0 + 2.0 * l),
            mu: MeasureRep::dirac(vec![1.0, 1.0], l),
        };
        let t = construct(&typed).unwrap();
        let f = parse_expr("x^2", StateSpace::Interval).unwrap();
        let g = apply_generator(&t, &f).unwrap();
        for &x in &[0.0, 0.13, 0.5, 0.77, 1.0] {
            // f(1−x) − f(x) with the uncompensated drift κ0(θ0 − x)
            let expect = s2 * x * (1.0 - x) + 2.0 * x * k0 * (th0 - x) + l * ((1.0 - x) * (1.0 - x) - x * x);
            assert!((g.eval(&[x]) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn csv_header() {
        let m = build_matrix(&jacobi(), 2).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), "0,1,2");
        assert_eq!(s.lines().count(), 4);
    }
}
