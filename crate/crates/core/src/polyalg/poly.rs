use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::PolyError;

/// Exponent vector over the free variables.
///
/// Ordered by total degree first; within a degree, larger leading exponents
/// come first, so the basis `1, x1, x2, x1², x1x2, x2², …` is increasing.
/// The order is multiplicative, which the division routine relies on.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when `other` divides `self`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(out))
    }

    /// `k!` as a product of factorials.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&e| (1..=e).map(f64::from).product::<f64>())
            .product()
    }

    /// `x^k` at a point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }

    /// Label such as `2_0_1` used in CSV headers.
    pub fn label(&self) -> String {
        self.0
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join("_")
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            for (a, b) in self.0.iter().zip(&other.0) {
                match b.cmp(a) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            self.0.len().cmp(&other.0.len())
        })
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial with real coefficients in `nvars` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(MultiIndex::zero(nvars), c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable {i} out of range for {nvars} variables");
        let mut p = Self::zero(nvars);
        p.add_term(MultiIndex::unit(nvars, i), 1.0);
        p
    }

    pub fn monomial(k: MultiIndex, c: f64) -> Self {
        let mut p = Self::zero(k.len());
        p.add_term(k, c);
        p
    }

    /// Builds a polynomial from `(exponents, coeff)` pairs; repeated exponents add up.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length mismatch");
            p.add_term(MultiIndex::new(e), c);
        }
        p
    }

    /// Affine polynomial `c0 + Σ c_i x_i`.
    pub fn affine(c0: f64, c: &[f64]) -> Self {
        let n = c.len();
        let mut p = Self::constant(n, c0);
        for (i, &ci) in c.iter().enumerate() {
            p.add_term(MultiIndex::unit(n, i), ci);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&MultiIndex, f64)> + '_ {
        self.terms.iter().map(|(k, &c)| (k, c))
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, k: &MultiIndex) -> f64 {
        self.terms.get(k).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&MultiIndex::zero(self.nvars))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial reports 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, |k| k.degree())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Largest term in the monomial order.
    pub fn leading_term(&self) -> Option<(&MultiIndex, f64)> {
        self.terms.iter().next_back().map(|(k, &c)| (k, c))
    }

    pub fn add_term(&mut self, k: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        debug_assert_eq!(k.len(), self.nvars);
        match self.terms.entry(k) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub(crate) fn remove_term(&mut self, k: &MultiIndex) -> Option<f64> {
        self.terms.remove(k)
    }

    fn check(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::SpaceMismatch(self.nvars, other.nvars));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check(other)?;
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            out.add_term(k.clone(), c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check(other)?;
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            out.add_term(k.clone(), -c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check(other)?;
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (ka, &ca) in &self.terms {
            for (kb, &cb) in &other.terms {
                *acc.entry(ka.add(kb)).or_insert(0.0) += ca * cb;
            }
        }
        acc.retain(|_, c| *c != 0.0);
        Ok(Polynomial { nvars: self.nvars, terms: acc })
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        if s == 0.0 {
            return Polynomial::zero(self.nvars);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.nvars, 1.0);
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                out = &out * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert!(x.len() >= self.nvars, "point has {} coordinates, need {}", x.len(), self.nvars);
        self.terms.iter().map(|(k, &c)| c * k.eval(x)).sum()
    }

    pub fn partial_derivative(&self, i: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (k, &c) in &self.terms {
            let e = k.exponents()[i];
            if e > 0 {
                let mut kk = k.exponents().to_vec();
                kk[i] -= 1;
                out.add_term(MultiIndex::new(kk), c * f64::from(e));
            }
        }
        out
    }

    /// `∂^k p / k!`, the Taylor coefficient polynomial of order `k`.
    pub fn taylor_coefficient(&self, k: &MultiIndex) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (m, &c) in &self.terms {
            if let Some(rest) = m.checked_sub(k) {
                let b: f64 = m
                    .exponents()
                    .iter()
                    .zip(k.exponents())
                    .map(|(&n, &j)| binomial(n, j))
                    .product();
                out.add_term(rest, c * b);
            }
        }
        out
    }

    /// Replaces variable `i` by `subs[i]`; all substitutes share one variable count.
    pub fn substitute(&self, subs: &[Polynomial]) -> Polynomial {
        assert_eq!(subs.len(), self.nvars);
        let n = subs.first().map_or(0, |p| p.nvars);
        let mut out = Polynomial::zero(n);
        let mut cache: Vec<Vec<Polynomial>> = subs.iter().map(|s| vec![Polynomial::constant(n, 1.0), s.clone()]).collect();
        for (k, &c) in &self.terms {
            let mut t = Polynomial::constant(n, c);
            for (i, &e) in k.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while cache[i].len() <= e as usize {
                    let next = &cache[i][cache[i].len() - 1] * &subs[i];
                    cache[i].push(next);
                }
                t = &t * &cache[i][e as usize];
            }
            out = &out + &t;
        }
        out
    }

    /// Drops coefficients with magnitude at most `rel · max|coeff|`.
    pub fn prune(&self, rel: f64) -> Polynomial {
        let bound = rel * self.max_abs_coeff();
        let mut out = self.clone();
        out.terms.retain(|_, c| c.abs() > bound);
        out
    }

    /// Coefficient-wise comparison with absolute tolerance.
    pub fn approx_eq(&self, other: &Polynomial, tol: f64) -> bool {
        if self.nvars != other.nvars {
            return false;
        }
        let d = self - other;
        d.max_abs_coeff() <= tol
    }

    /// Coefficient vector in the given basis; terms outside the basis are ignored.
    pub fn coords(&self, basis: &[MultiIndex]) -> Vec<f64> {
        basis.iter().map(|k| self.coeff(k)).collect()
    }

    /// Polynomial with the given coordinates in a monomial basis.
    pub fn from_coords(nvars: usize, basis: &[MultiIndex], v: &[f64]) -> Polynomial {
        let mut p = Polynomial::zero(nvars);
        for (k, &c) in basis.iter().zip(v) {
            p.add_term(k.clone(), c);
        }
        p
    }

    /// Affine parts `(c0, [c_i])` of a polynomial of degree at most one.
    pub fn affine_parts(&self) -> Option<(f64, Vec<f64>)> {
        if self.degree() > 1 {
            return None;
        }
        let c = (0..self.nvars).map(|i| self.coeff(&MultiIndex::unit(self.nvars, i))).collect();
        Some((self.constant_term(), c))
    }

    /// Formats with the given variable names.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (i, (k, &c)) in self.terms.iter().enumerate() {
            let mono: Vec<String> = k
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, &e)| if e == 1 { names[j].clone() } else { format!("{}^{}", names[j], e) })
                .collect();
            let mag = c.abs();
            let sign = if c < 0.0 { "-" } else { "+" };
            if i == 0 {
                if c < 0.0 {
                    s.push('-');
                }
            } else {
                s.push_str(&format!(" {sign} "));
            }
            if mono.is_empty() {
                s.push_str(&format!("{mag}"));
            } else if mag == 1.0 {
                s.push_str(&mono.join("*"));
            } else {
                s.push_str(&format!("{mag}*{}", mono.join("*")));
            }
        }
        s
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = if self.nvars == 1 {
            vec!["x".into()]
        } else {
            (1..=self.nvars).map(|i| format!("x{i}")).collect()
        };
        f.write_str(&self.display_with(&names))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl $tr<&Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: &Polynomial) -> Polynomial {
                self.$checked(rhs).expect("polynomial operands over different spaces")
            }
        }
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}
