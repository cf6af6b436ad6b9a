use crate::polyalg::{divide_exact, MultiIndex, PolyError, Polynomial, StateSpace};

use super::{MeasureRep, ModelError};

/// Points within this distance of an excluded locus get intensity 0.
pub const EXCLUDE_TOL: f64 = 1e-12;

/// Intensity `λ = num / den`, defined as 0 on the zero set of `excluded`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn {
    pub num: Polynomial,
    pub den: Polynomial,
    pub excluded: Option<Polynomial>,
}

impl RationalFn {
    pub fn new(num: Polynomial, den: Polynomial, excluded: Option<Polynomial>) -> Result<Self, ModelError> {
        if den.is_zero() {
            return Err(ModelError::Poly(PolyError::ZeroDivisor));
        }
        if num.nvars() != den.nvars() {
            return Err(ModelError::Poly(PolyError::SpaceMismatch(num.nvars(), den.nvars())));
        }
        Ok(RationalFn { num, den, excluded })
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        RationalFn {
            num: Polynomial::constant(nvars, c),
            den: Polynomial::constant(nvars, 1.0),
            excluded: None,
        }
    }

    pub fn is_excluded(&self, x: &[f64]) -> bool {
        self.excluded.as_ref().is_some_and(|e| e.eval(x).abs() <= EXCLUDE_TOL)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.is_excluded(x) {
            return 0.0;
        }
        self.num.eval(x) / self.den.eval(x)
    }

    pub fn scaled(&self, s: f64) -> RationalFn {
        RationalFn { num: self.num.scale(s), den: self.den.clone(), excluded: self.excluded.clone() }
    }

    /// `λ · p` as a polynomial, when the division is exact.
    pub fn times(&self, p: &Polynomial, tol: f64) -> Result<Polynomial, PolyError> {
        divide_exact(&(&self.num * p), &self.den, tol)
    }

    /// `(num, den)` rescaled so that `den` has leading coefficient one.
    pub fn monic(&self) -> (Polynomial, Polynomial) {
        let lc = self.den.leading_term().map_or(1.0, |(_, c)| c);
        (self.num.scale(1.0 / lc), self.den.scale(1.0 / lc))
    }
}

/// Affine jump sizes `γ(x, y) = Σ_m y_m g_m(x)`; each direction `g_m` lists one
/// affine polynomial (in free coordinates) per full coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineJumpMap {
    pub directions: Vec<Vec<Polynomial>>,
}

impl AffineJumpMap {
    pub fn new(directions: Vec<Vec<Polynomial>>) -> Self {
        AffineJumpMap { directions }
    }

    pub fn n_dirs(&self) -> usize {
        self.directions.len()
    }

    pub fn dim(&self) -> usize {
        self.directions.first().map_or(0, Vec::len)
    }

    /// Components of `γ(·, y)` as affine polynomials.
    pub fn at(&self, y: &[f64]) -> Vec<Polynomial> {
        let n = self.directions[0][0].nvars();
        (0..self.dim())
            .map(|i| {
                self.directions
                    .iter()
                    .zip(y)
                    .fold(Polynomial::zero(n), |acc, (g, &ym)| &acc + &g[i].scale(ym))
            })
            .collect()
    }

    /// `γ(x, y)` at a point, `x` in free coordinates.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (g, &ym) in self.directions.iter().zip(y) {
            if ym == 0.0 {
                continue;
            }
            for (o, gi) in out.iter_mut().zip(g) {
                *o += ym * gi.eval(x);
            }
        }
        out
    }
}

/// One affine jump kernel `ν(x, A) = λ(x) ∫ 1_A(γ(x, y)) μ(dy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSpec {
    pub lambda: RationalFn,
    pub gamma: AffineJumpMap,
    pub mu: MeasureRep,
}

impl JumpSpec {
    /// `p_k(x) = ∫ γ(x, y)^k μ(dy)` for a multi-index over the full coordinates.
    pub fn moment_poly(&self, k: &[u32]) -> Result<Polynomial, ModelError> {
        let dirs = &self.gamma.directions;
        let n = dirs[0][0].nvars();
        match &self.mu {
            MeasureRep::Atoms { atoms, .. } => {
                let mut acc = Polynomial::zero(n);
                for a in atoms {
                    let g = self.gamma.at(&a.point);
                    let mut t = Polynomial::constant(n, a.weight);
                    for (gi, &e) in g.iter().zip(k) {
                        if e > 0 {
                            t = &t * &gi.pow(e);
                        }
                    }
                    acc = &acc + &t;
                }
                Ok(acc)
            }
            MeasureRep::Moments(_) => {
                // Expand in the joint variables (x, y), then integrate y out.
                let m = dirs.len();
                let nj = n + m;
                let embed = |p: &Polynomial, ym: usize| {
                    Polynomial::from_terms(
                        nj,
                        p.terms().map(|(kk, c)| {
                            let mut e = kk.exponents().to_vec();
                            e.extend((0..m).map(|j| u32::from(j == ym)));
                            (e, c)
                        }),
                    )
                };
                let mut prod = Polynomial::constant(nj, 1.0);
                for (i, &e) in k.iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    let gi = dirs.iter().enumerate().fold(Polynomial::zero(nj), |acc, (mi, g)| &acc + &embed(&g[i], mi));
                    prod = &prod * &gi.pow(e);
                }
                let mut out = Polynomial::zero(n);
                for (kk, c) in prod.terms() {
                    let (xe, ye) = kk.exponents().split_at(n);
                    let mom = self.mu.moment(&MultiIndex::new(ye.to_vec()))?;
                    out.add_term(MultiIndex::new(xe.to_vec()), c * mom);
                }
                Ok(out)
            }
        }
    }

    /// `∫ γ(x, y) μ(dy)` at a point (full components).
    pub fn mean_jump(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        let means = self.mu.means()?;
        Ok(self.gamma.eval(x, &means))
    }

    pub fn is_null(&self) -> bool {
        self.mu.is_null() || self.lambda.num.is_zero()
    }
}

/// Diffusion correction `matrix(x)` added where `locus(x) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleCorrection {
    pub locus: Polynomial,
    pub matrix: Vec<Vec<Polynomial>>,
}

impl PoleCorrection {
    pub fn is_active(&self, x: &[f64], tol: f64) -> bool {
        self.locus.eval(x).abs() <= tol
    }
}

/// Characteristic triplet `(a, b, ν)`; all polynomials are in free coordinates
/// while the matrix and vector components run over the full coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriplet {
    pub space: StateSpace,
    pub diffusion: Vec<Vec<Polynomial>>,
    pub drift: Vec<Polynomial>,
    pub jumps: Vec<JumpSpec>,
    pub pole_corrections: Vec<PoleCorrection>,
}

impl LevyTriplet {
    /// Triplet with `a = 0`, `b = 0` and no jumps.
    pub fn zero(space: StateSpace) -> Self {
        let d = space.dim();
        let n = space.n_free();
        LevyTriplet {
            space,
            diffusion: vec![vec![Polynomial::zero(n); d]; d],
            drift: vec![Polynomial::zero(n); d],
            jumps: Vec::new(),
            pole_corrections: Vec::new(),
        }
    }

    /// `∫ ξ^k ν(x, dξ)` summed over all jump kernels, as a polynomial.
    ///
    /// Kernels are brought to a common denominator first, since only the sum
    /// needs to be polynomial.
    pub fn jump_moment_polynomial(&self, k: &[u32], tol: f64) -> Result<Polynomial, ModelError> {
        let n = self.space.n_free();
        let mut groups: Vec<(Polynomial, Polynomial)> = Vec::new();
        for j in self.jumps.iter().filter(|j| !j.is_null()) {
            let p = j.moment_poly(k)?;
            if p.is_zero() {
                continue;
            }
            let (num, den) = j.lambda.monic();
            let term = &num * &p;
            let scale = den.max_abs_coeff();
            match groups.iter_mut().find(|(d, _)| d.approx_eq(&den, 1e-12 * scale)) {
                Some((_, acc)) => *acc = &*acc + &term,
                None => groups.push((den, term)),
            }
        }
        if groups.is_empty() {
            return Ok(Polynomial::zero(n));
        }
        let mut total = Polynomial::zero(n);
        let mut den = Polynomial::constant(n, 1.0);
        for (g, (_, num)) in groups.iter().enumerate() {
            let mut t = num.clone();
            for (h, (dh, _)) in groups.iter().enumerate() {
                if h != g {
                    t = &t * dh;
                }
            }
            total = &total + &t;
        }
        for (dg, _) in &groups {
            den = &den * dg;
        }
        divide_exact(&total, &den, tol).map_err(|e| match e {
            PolyError::NotDivisible { residual, .. } => ModelError::NotPolynomial { k: k.to_vec(), residual },
            other => ModelError::Poly(other),
        })
    }

    /// `∫ ξ ν(x, dξ)` at a point, zero where every kernel is inactive.
    pub fn jump_mean_at(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        let d = self.space.dim();
        let mut out = vec![0.0; d];
        for j in &self.jumps {
            let l = j.lambda.eval(x);
            if l == 0.0 || j.is_null() {
                continue;
            }
            let m = j.mean_jump(x)?;
            for (o, mi) in out.iter_mut().zip(m) {
                *o += l * mi;
            }
        }
        Ok(out)
    }

    /// `∫ ξ ξᵀ ν(x, dξ)` at a point (full coordinates).
    pub fn jump_second_moment_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, ModelError> {
        let d = self.space.dim();
        let mut out = vec![vec![0.0; d]; d];
        for j in &self.jumps {
            let l = j.lambda.eval(x);
            if l == 0.0 || j.is_null() {
                continue;
            }
            for (r, row) in out.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    let mut k = vec![0u32; d];
                    k[r] += 1;
                    k[c] += 1;
                    *v += l * j.moment_poly(&k)?.eval(x);
                }
            }
        }
        Ok(out)
    }

    /// Polynomial part of `a` at a point.
    pub fn diffusion_poly_at(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.diffusion.iter().map(|row| row.iter().map(|p| p.eval(x)).collect()).collect()
    }

    /// Full diffusion `a(x)`, including the corrections active at `x`.
    pub fn diffusion_at(&self, x: &[f64], tol: f64) -> Vec<Vec<f64>> {
        let mut a = self.diffusion_poly_at(x);
        for c in self.pole_corrections.iter().filter(|c| c.is_active(x, tol)) {
            for (row, crow) in a.iter_mut().zip(&c.matrix) {
                for (v, p) in row.iter_mut().zip(crow) {
                    *v += p.eval(x);
                }
            }
        }
        a
    }

    pub fn drift_at(&self, x: &[f64]) -> Vec<f64> {
        self.drift.iter().map(|p| p.eval(x)).collect()
    }

    /// The interval triplet seen by the first coordinate of a two-dimensional simplex triplet.
    pub fn simplex2_to_interval(&self) -> Option<LevyTriplet> {
        if self.space != StateSpace::Simplex(2) {
            return None;
        }
        let jumps = self
            .jumps
            .iter()
            .map(|j| JumpSpec {
                lambda: j.lambda.clone(),
                gamma: AffineJumpMap::new(j.gamma.directions.iter().map(|g| vec![g[0].clone()]).collect()),
                mu: j.mu.clone(),
            })
            .collect();
        let pole_corrections = self
            .pole_corrections
            .iter()
            .map(|c| PoleCorrection { locus: c.locus.clone(), matrix: vec![vec![c.matrix[0][0].clone()]] })
            .collect();
        Some(LevyTriplet {
            space: StateSpace::Interval,
            diffusion: vec![vec![self.diffusion[0][0].clone()]],
            drift: vec![self.drift[0].clone()],
            jumps,
            pole_corrections,
        })
    }
}
