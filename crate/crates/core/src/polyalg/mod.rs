//! Sparse multivariate polynomials over the free coordinates of a state space.
//!
//! On the interval the single variable is `x`. On the simplex `Δ^d` the last
//! coordinate is eliminated through `x_d = 1 - Σ_{i<d} x_i`, so polynomials
//! live in the `d - 1` free variables and have a genuine monomial basis.

mod divide;
mod expr;
mod poly;

pub use divide::{divide_exact, DEFAULT_DIVISION_TOL};
pub use expr::parse_expr;
pub use poly::{MultiIndex, Polynomial};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("space mismatch: {0} vs {1} variables")]
    SpaceMismatch(usize, usize),
    #[error("division by the zero polynomial")]
    ZeroDivisor,
    #[error("not divisible: remainder {residual:e} exceeds tolerance {bound:e}")]
    NotDivisible { residual: f64, bound: f64 },
    #[error("simplex dimension must be at least 2, got {0}")]
    BadDimension(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

/// State space `E`: the unit interval or the unit simplex `Δ^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateSpace {
    Interval,
    Simplex(usize),
}

impl StateSpace {
    pub fn simplex(d: usize) -> Result<Self, PolyError> {
        if d < 2 {
            return Err(PolyError::BadDimension(d));
        }
        Ok(StateSpace::Simplex(d))
    }

    /// Number of free variables.
    pub fn n_free(&self) -> usize {
        match self {
            StateSpace::Interval => 1,
            StateSpace::Simplex(d) => d - 1,
        }
    }

    /// Number of full coordinates (`1` on the interval, `d` on the simplex).
    pub fn dim(&self) -> usize {
        match self {
            StateSpace::Interval => 1,
            StateSpace::Simplex(d) => *d,
        }
    }

    /// Free coordinates of a full state vector.
    pub fn free_coords(&self, x: &[f64]) -> Vec<f64> {
        x[..self.n_free()].to_vec()
    }

    /// Full state vector from free coordinates.
    pub fn full_coords(&self, z: &[f64]) -> Vec<f64> {
        match self {
            StateSpace::Interval => z.to_vec(),
            StateSpace::Simplex(_) => {
                let mut x = z.to_vec();
                x.push(1.0 - z.iter().sum::<f64>());
                x
            }
        }
    }

    /// Membership test for a full state vector.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            StateSpace::Interval => x[0] >= -tol && x[0] <= 1.0 + tol,
            StateSpace::Simplex(_) => {
                x.iter().all(|&v| v >= -tol) && (x.iter().sum::<f64>() - 1.0).abs() <= tol
            }
        }
    }

    /// Polynomial of the full coordinate `i`, expressed in free coordinates.
    pub fn coordinate(&self, i: usize) -> Polynomial {
        let n = self.n_free();
        match self {
            StateSpace::Interval => Polynomial::var(1, 0),
            StateSpace::Simplex(d) if i + 1 == *d => {
                let mut p = Polynomial::constant(n, 1.0);
                for j in 0..n {
                    p = &p - &Polynomial::var(n, j);
                }
                p
            }
            StateSpace::Simplex(_) => Polynomial::var(n, i),
        }
    }

    /// Display names of the full coordinates.
    pub fn variable_names(&self) -> Vec<String> {
        match self {
            StateSpace::Interval => vec!["x".to_string()],
            StateSpace::Simplex(d) => (1..=*d).map(|i| format!("x{i}")).collect(),
        }
    }
}

impl std::fmt::Display for StateSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateSpace::Interval => write!(f, "interval"),
            StateSpace::Simplex(d) => write!(f, "simplex:{d}"),
        }
    }
}

impl std::str::FromStr for StateSpace {
    type Err = PolyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "interval" {
            return Ok(StateSpace::Interval);
        }
        if let Some(d) = s.strip_prefix("simplex:") {
            let d: usize = d
                .trim()
                .parse()
                .map_err(|_| PolyError::Parse(format!("bad simplex dimension in {s:?}")))?;
            return StateSpace::simplex(d);
        }
        Err(PolyError::Parse(format!("unknown state space {s:?}")))
    }
}

/// All multi-indices over the free variables with `|k| <= n`, graded-lex ordered.
pub fn enumerate_basis(space: StateSpace, n: usize) -> Vec<MultiIndex> {
    let nv = space.n_free();
    let mut out = Vec::new();
    for deg in 0..=n {
        let mut cur = vec![0u32; nv];
        compositions(deg as u32, 0, &mut cur, &mut out);
    }
    out
}

// Exponent vectors of total degree `rest` in lexicographically decreasing order.
fn compositions(rest: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = rest;
        out.push(MultiIndex::new(cur.clone()));
        return;
    }
    for e in (0..=rest).rev() {
        cur[pos] = e;
        compositions(rest - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Rewrites a polynomial in all `d` coordinates into free coordinates.
pub fn reduce_to_free(space: StateSpace, p: &Polynomial) -> Result<Polynomial, PolyError> {
    if p.nvars() != space.dim() {
        return Err(PolyError::SpaceMismatch(p.nvars(), space.dim()));
    }
    match space {
        StateSpace::Interval => Ok(p.clone()),
        StateSpace::Simplex(d) => {
            let subs: Vec<Polynomial> = (0..d).map(|i| space.coordinate(i)).collect();
            Ok(p.substitute(&subs))
        }
    }
}

/// Embeds a free-coordinate polynomial as a polynomial in all `d` coordinates
/// that does not involve `x_d`.
pub fn lift_to_full(space: StateSpace, p: &Polynomial) -> Polynomial {
    match space {
        StateSpace::Interval => p.clone(),
        StateSpace::Simplex(d) => {
            let terms = p.terms().map(|(k, c)| {
                let mut e = k.exponents().to_vec();
                e.push(0);
                (e, c)
            });
            Polynomial::from_terms(d, terms)
        }
    }
}

/// Homogeneous form of degree `deg` in all `d` coordinates agreeing with `p` on the simplex.
pub fn homogenize(space: StateSpace, p: &Polynomial, deg: usize) -> Polynomial {
    let d = space.dim();
    let ones = {
        let mut s = Polynomial::zero(d);
        for i in 0..d {
            s = &s + &Polynomial::var(d, i);
        }
        s
    };
    let full = lift_to_full(space, p);
    let mut out = Polynomial::zero(d);
    for (k, c) in full.terms() {
        let m = k.degree() as usize;
        assert!(m <= deg, "homogenize: degree {m} exceeds {deg}");
        let mono = Polynomial::from_terms(d, [(k.exponents().to_vec(), c)]);
        out = &out + &(&mono * &ones.pow((deg - m) as u32));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn basis_interval() {
        let b = enumerate_basis(StateSpace::Interval, 2);
        let e: Vec<Vec<u32>> = b.iter().map(|k| k.exponents().to_vec()).collect();
        assert_eq!(e, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn basis_simplex() {
        let b = enumerate_basis(StateSpace::Simplex(3), 1);
        let e: Vec<Vec<u32>> = b.iter().map(|k| k.exponents().to_vec()).collect();
        assert_eq!(e, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
        for n in 0..6 {
            for d in 2..5 {
                let b = enumerate_basis(StateSpace::Simplex(d), n);
                assert_eq!(b.len(), binom(n + d - 1, d - 1));
                assert!(b.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn reduce_examples() {
        let s = StateSpace::Simplex(3);
        let sum = Polynomial::from_terms(3, [(vec![1, 0, 0], 1.0), (vec![0, 1, 0], 1.0), (vec![0, 0, 1], 1.0)]);
        let r = reduce_to_free(s, &sum).unwrap();
        assert!(r.approx_eq(&Polynomial::constant(2, 1.0), 0.0));
        let x3sq = Polynomial::from_terms(3, [(vec![0, 0, 2], 1.0)]);
        let r = reduce_to_free(s, &x3sq).unwrap();
        let want = Polynomial::from_terms(
            2,
            [
                (vec![0, 0], 1.0),
                (vec![1, 0], -2.0),
                (vec![0, 1], -2.0),
                (vec![2, 0], 1.0),
                (vec![1, 1], 2.0),
                (vec![0, 2], 1.0),
            ],
        );
        assert!(r.approx_eq(&want, 0.0));
    }

    #[test]
    fn homogenize_agrees_on_simplex() {
        let s = StateSpace::Simplex(3);
        let p = parse_expr("1 + 2*x1 - x2^2", s).unwrap();
        let h = homogenize(s, &p, 2);
        for t in h.terms() {
            assert_eq!(t.0.degree(), 2);
        }
        let x = [0.2, 0.3, 0.5];
        assert!((h.eval(&x) - p.eval(&x[..2])).abs() < 1e-14);
    }

    #[test]
    fn space_parse() {
        assert_eq!("simplex:3".parse::<StateSpace>().unwrap(), StateSpace::Simplex(3));
        assert!("simplex:1".parse::<StateSpace>().is_err());
        assert_eq!(StateSpace::Simplex(4).to_string(), "simplex:4");
    }
}
