use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::polyalg::{enumerate_basis, MultiIndex, Polynomial, StateSpace, DEFAULT_DIVISION_TOL};

use super::construct::{face_grid, BOUNDARY_SLACK};
use super::typed::{fmt_point, simplex_grid};
use super::{JumpSpec, LevyTriplet, ModelError};

/// Default number of grid points per dimension.
pub const DEFAULT_GRID: usize = 200;

// Cap on the number of simplex lattice points visited per check.
const MAX_GRID_POINTS: usize = 30_000;

/// A failed condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub id: String,
    pub location: String,
    pub magnitude: f64,
}

impl Violation {
    pub fn new(id: &str, location: &str, magnitude: f64) -> Self {
        Violation { id: id.to_string(), location: location.to_string(), magnitude }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} {:e}", self.id, self.location, self.magnitude)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn has(&self, id: &str) -> bool {
        self.violations.iter().any(|v| v.id == id)
    }
}

// Keeps the worst grid violation per condition id.
#[derive(Default)]
struct Collector {
    worst: BTreeMap<String, (String, f64)>,
    order: Vec<String>,
}

impl Collector {
    fn push(&mut self, id: &str, location: String, magnitude: f64) {
        match self.worst.get_mut(id) {
            Some(w) => {
                if magnitude.abs() > w.1.abs() || magnitude.is_nan() {
                    *w = (location, magnitude);
                }
            }
            None => {
                self.order.push(id.to_string());
                self.worst.insert(id.to_string(), (location, magnitude));
            }
        }
    }

    fn into_violations(self) -> Vec<Violation> {
        let mut w = self.worst;
        self.order
            .into_iter()
            .map(|id| {
                let (loc, mag) = w.remove(&id).unwrap();
                Violation { id, location: loc, magnitude: mag }
            })
            .collect()
    }
}

/// Checks the conditions under which `(a, b, ν)` is a polynomial operator on `E`
/// satisfying the boundary conditions of the positive maximum principle.
pub fn validate(t: &LevyTriplet, grid_n: usize) -> ValidationReport {
    let mut c = Collector::default();
    let mut warnings = Vec::new();
    let grid_n = grid_n.max(2);
    if !check_shapes(t, &mut c) {
        return finish(c, warnings);
    }
    let space = t.space;
    let d = space.dim();
    let n = space.n_free();

    for (i, b) in t.drift.iter().enumerate() {
        if b.degree() > 1 {
            c.push("drift-degree", format!("b{}", i + 1), f64::from(b.degree()));
        }
    }
    let a_scale = t.diffusion.iter().flatten().fold(1.0f64, |m, p| m.max(p.max_abs_coeff()));
    let b_scale = t.drift.iter().fold(1.0f64, |m, p| m.max(p.max_abs_coeff()));
    for i in 0..d {
        for j in 0..d {
            let p = &t.diffusion[i][j];
            if p.degree() > 2 {
                c.push("diffusion-degree", format!("a{}{}", i + 1, j + 1), f64::from(p.degree()));
            }
            let asym = (p - &t.diffusion[j][i]).max_abs_coeff();
            if asym > 1e-12 * a_scale {
                c.push("diffusion-symmetry", format!("a{}{}", i + 1, j + 1), asym);
            }
        }
    }

    if let StateSpace::Simplex(_) = space {
        for i in 0..d {
            let row = t.diffusion[i].iter().fold(Polynomial::zero(n), |acc, p| &acc + p);
            if row.max_abs_coeff() > 1e-10 * a_scale {
                c.push("diffusion-conservation", format!("row {}", i + 1), row.max_abs_coeff());
            }
        }
        let bsum = t.drift.iter().fold(Polynomial::zero(n), |acc, p| &acc + p);
        if bsum.max_abs_coeff() > 1e-10 * b_scale {
            c.push("drift-conservation", format!("sum b = {bsum}"), bsum.max_abs_coeff());
        }
        for (ji, j) in t.jumps.iter().enumerate() {
            let err = jump_sum_residual(j, n);
            if err > 1e-10 {
                c.push("jump-conservation", format!("jump {}", ji + 1), err);
            }
        }
        for (ci, corr) in t.pole_corrections.iter().enumerate() {
            for (i, row) in corr.matrix.iter().enumerate() {
                let s = row.iter().fold(Polynomial::zero(n), |acc, p| &acc + p);
                if s.max_abs_coeff() > 1e-10 * a_scale.max(1.0) {
                    c.push("diffusion-conservation", format!("correction {} row {}", ci + 1, i + 1), s.max_abs_coeff());
                }
            }
        }
    }

    // Pointwise conditions on the grid.
    let pts = match space {
        StateSpace::Interval => (0..=grid_n).map(|i| vec![i as f64 / grid_n as f64]).collect(),
        StateSpace::Simplex(d) => simplex_grid(d, capped_grid(d, grid_n)),
    };
    for x in &pts {
        let z = &x[..n];
        let a = free_block(&t.diffusion_poly_at(z), n);
        let m = min_eigenvalue(&a);
        if m < -1e-10 * a_scale {
            let id = if n == 1 && space == StateSpace::Interval { "diffusion-nonneg" } else { "diffusion-psd" };
            c.push(id, fmt_point(x), m);
        }
        for (ji, j) in t.jumps.iter().enumerate() {
            if j.lambda.is_excluded(z) {
                continue;
            }
            let l = j.lambda.eval(z);
            if !l.is_finite() {
                c.push("intensity-finite", format!("jump {} at {}", ji + 1, fmt_point(x)), l);
                continue;
            }
            if l < -1e-12 {
                c.push("intensity-nonneg", format!("jump {} at {}", ji + 1, fmt_point(x)), l);
            }
            if l <= 0.0 {
                continue;
            }
            if let Some(atoms) = j.mu.atom_list() {
                for at in atoms {
                    let g = j.gamma.eval(z, &at.point);
                    let target: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + b).collect();
                    let excess = outside(space, &target);
                    if excess > 1e-10 {
                        c.push("jump-support", format!("jump {} at {}", ji + 1, fmt_point(x)), excess);
                    }
                }
            }
        }
    }
    if t.jumps.iter().any(|j| j.mu.atom_list().is_none()) {
        warnings.push("jump support not checked for moment-table measures".to_string());
    }

    // Boundary behavior.
    match space {
        StateSpace::Interval => {
            for (x, sign) in [(0.0, 1.0), (1.0, -1.0)] {
                let a = t.diffusion_at(&[x], 1e-12)[0][0];
                if a.abs() > 1e-10 * a_scale {
                    c.push("diffusion-boundary", format!("x={x}"), a);
                }
                match t.jump_mean_at(&[x]) {
                    Ok(m) => {
                        let inflow = sign * (t.drift[0].eval(&[x]) - m[0]);
                        if inflow < -BOUNDARY_SLACK {
                            c.push("drift-inflow", format!("x={x}"), inflow);
                        }
                    }
                    Err(_) => c.push("drift-inflow", format!("x={x}"), f64::NEG_INFINITY),
                }
            }
        }
        StateSpace::Simplex(d) => {
            let nf = capped_grid(d - 1, grid_n);
            for face in 0..d {
                for x in face_grid(d, face, nf) {
                    let z = &x[..n];
                    let a = t.diffusion_at(z, 1e-12)[face][face];
                    if a.abs() > 1e-10 * a_scale {
                        c.push("face-diffusion", format!("x{}=0 at {}", face + 1, fmt_point(&x)), a);
                    }
                    match t.jump_mean_at(z) {
                        Ok(m) => {
                            let inflow = t.drift[face].eval(z) - m[face];
                            if inflow < -BOUNDARY_SLACK {
                                c.push("face-drift", format!("x{}=0 at {}", face + 1, fmt_point(&x)), inflow);
                            }
                        }
                        Err(_) => c.push("face-drift", format!("x{}=0", face + 1), f64::NEG_INFINITY),
                    }
                }
            }
        }
    }

    // Polynomial images of the jump moments.
    let order = t.jumps.iter().filter(|j| !j.is_null()).map(|j| j.mu.max_order()).min().unwrap_or(usize::MAX);
    let mut second: BTreeMap<(usize, usize), Polynomial> = BTreeMap::new();
    'orders: for deg in 2..=6usize {
        if deg > order {
            warnings.push(format!("jump moments of order {deg} unavailable; higher-order checks skipped"));
            break;
        }
        for k in enumerate_basis(space, deg).into_iter().filter(|k| k.degree() as usize == deg) {
            let mut kf = k.exponents().to_vec();
            kf.resize(d, 0);
            let (poly_id, deg_id) = if deg == 2 {
                ("diffusion-jump-polynomial", "diffusion-jump-degree")
            } else {
                ("jump-moment-polynomial", "jump-moment-degree")
            };
            match t.jump_moment_polynomial(&kf, DEFAULT_DIVISION_TOL) {
                Ok(r) => {
                    if r.degree() as usize > deg {
                        c.push(deg_id, format!("k={:?}", k.exponents()), f64::from(r.degree()));
                    }
                    if deg == 2 {
                        let idx: Vec<usize> = kf.iter().enumerate().flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize)).collect();
                        second.insert((idx[0], idx[1]), r);
                    }
                }
                Err(ModelError::NotPolynomial { residual, .. }) => {
                    c.push(poly_id, format!("k={:?}", k.exponents()), residual);
                }
                Err(e) => {
                    warnings.push(format!("jump moment {:?}: {e}", k.exponents()));
                    break 'orders;
                }
            }
        }
    }

    // Continuity of a + ∫ξξᵀν across the loci where kernels switch off.
    if second.len() == n * (n + 1) / 2 {
        let mut loci: Vec<&Polynomial> = t.jumps.iter().filter_map(|j| j.lambda.excluded.as_ref()).collect();
        loci.extend(t.pole_corrections.iter().map(|p| &p.locus));
        for locus in loci {
            for z in locus_points(space, locus) {
                let x = space.full_coords(&z);
                let actual = match t.jump_second_moment_at(&z) {
                    Ok(m) => m,
                    Err(_) => continue,
                };
                let a = t.diffusion_at(&z, 1e-9);
                let ap = t.diffusion_poly_at(&z);
                let mut worst: f64 = 0.0;
                for r in 0..n {
                    for s in 0..n {
                        let key = (r.min(s), r.max(s));
                        let lhs = a[r][s] + actual[r][s];
                        let rhs = ap[r][s] + second[&key].eval(&z);
                        worst = worst.max((lhs - rhs).abs());
                    }
                }
                if worst > 1e-8 * a_scale {
                    c.push("diffusion-continuity", fmt_point(&x), worst);
                }
                let m = min_eigenvalue(&free_block(&a, n));
                if m < -1e-10 * a_scale {
                    c.push("diffusion-psd", fmt_point(&x), m);
                }
            }
        }
    }
    finish(c, warnings)
}

fn finish(c: Collector, warnings: Vec<String>) -> ValidationReport {
    let violations = c.into_violations();
    ValidationReport { ok: violations.is_empty(), violations, warnings }
}

fn check_shapes(t: &LevyTriplet, c: &mut Collector) -> bool {
    let d = t.space.dim();
    let n = t.space.n_free();
    let mut affine = Vec::new();
    let mut shape = Vec::new();
    let mut bad = |what: String| shape.push(what);
    if t.diffusion.len() != d || t.diffusion.iter().any(|r| r.len() != d) {
        bad("diffusion".into());
    }
    if t.drift.len() != d {
        bad("drift".into());
    }
    if t.diffusion.iter().flatten().chain(&t.drift).any(|p| p.nvars() != n) {
        bad("polynomial variables".into());
    }
    for (i, j) in t.jumps.iter().enumerate() {
        let dirs = &j.gamma.directions;
        if dirs.is_empty() || dirs.iter().any(|g| g.len() != d || g.iter().any(|p| p.nvars() != n)) {
            bad(format!("jump {} directions", i + 1));
            continue;
        }
        if dirs.iter().flatten().any(|p| p.degree() > 1) {
            affine.push(format!("jump {}", i + 1));
        }
        if dirs.len() != j.mu.dim() {
            bad(format!("jump {} measure dimension", i + 1));
        }
        if j.lambda.num.nvars() != n || j.lambda.den.nvars() != n || j.lambda.den.is_zero() {
            bad(format!("jump {} intensity", i + 1));
        }
        if j.lambda.excluded.as_ref().is_some_and(|e| e.nvars() != n || e.degree() > 1) {
            bad(format!("jump {} excluded set", i + 1));
        }
    }
    for (i, p) in t.pole_corrections.iter().enumerate() {
        if p.locus.nvars() != n || p.matrix.len() != d || p.matrix.iter().any(|r| r.len() != d) {
            bad(format!("correction {}", i + 1));
        }
    }
    for a in affine {
        c.push("jump-affine", a, 0.0);
    }
    let ok = shape.is_empty();
    for s in shape {
        c.push("shape", s, 0.0);
    }
    ok
}

// Size of `Σ_i γ_i(x, y)` on the support of μ: per atom, or through the second
// moments of μ for tables.
fn jump_sum_residual(j: &JumpSpec, n: usize) -> f64 {
    let sums: Vec<Polynomial> =
        j.gamma.directions.iter().map(|g| g.iter().fold(Polynomial::zero(n), |acc, p| &acc + p)).collect();
    match j.mu.atom_list() {
        Some(atoms) => atoms
            .iter()
            .filter(|a| a.weight != 0.0)
            .map(|a| {
                let s = sums.iter().zip(&a.point).fold(Polynomial::zero(n), |acc, (p, y)| &acc + &p.scale(*y));
                s.max_abs_coeff()
            })
            .fold(0.0, f64::max),
        None => {
            let dim = sums.len();
            let mut q = Polynomial::zero(n);
            for m in 0..dim {
                for l in 0..dim {
                    let mut k = vec![0u32; dim];
                    k[m] += 1;
                    k[l] += 1;
                    let Ok(v) = j.mu.moment(&MultiIndex::new(k)) else { return 0.0 };
                    q = &q + &(&sums[m] * &sums[l]).scale(v);
                }
            }
            q.max_abs_coeff().sqrt()
        }
    }
}

fn capped_grid(d: usize, n: usize) -> usize {
    let count = |m: usize| -> f64 { (1..d).map(|i| (m + i) as f64 / i as f64).product() };
    let mut m = n;
    while m > 2 && count(m) > MAX_GRID_POINTS as f64 {
        m -= 1;
    }
    m
}

fn free_block(a: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    a[..n].iter().map(|r| r[..n].to_vec()).collect()
}

/// Smallest eigenvalue of a small symmetric matrix.
pub(crate) fn min_eigenvalue(a: &[Vec<f64>]) -> f64 {
    match a.len() {
        0 => 0.0,
        1 => a[0][0],
        2 => {
            let (p, q, r) = (a[0][0], 0.5 * (a[0][1] + a[1][0]), a[1][1]);
            0.5 * (p + r - ((p - r).powi(2) + 4.0 * q * q).sqrt())
        }
        n => {
            let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[i][j] + a[j][i]));
            m.symmetric_eigenvalues().min()
        }
    }
}

// Distance by which a full state vector leaves E.
fn outside(space: StateSpace, x: &[f64]) -> f64 {
    match space {
        StateSpace::Interval => (-x[0]).max(x[0] - 1.0).max(0.0),
        StateSpace::Simplex(_) => x.iter().fold(0.0f64, |m, &v| m.max(-v)),
    }
}

/// Sample points (free coordinates) of `E ∩ {locus = 0}`.
pub(crate) fn locus_points(space: StateSpace, locus: &Polynomial) -> Vec<Vec<f64>> {
    let d = space.dim();
    let verts: Vec<Vec<f64>> = match space {
        StateSpace::Interval => vec![vec![0.0], vec![1.0]],
        StateSpace::Simplex(_) => (0..d)
            .map(|i| (0..d - 1).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(),
    };
    let vals: Vec<f64> = verts.iter().map(|v| locus.eval(v)).collect();
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for a in 0..verts.len() {
        if vals[a].abs() <= 1e-14 {
            pts.push(verts[a].clone());
        }
        for b in a + 1..verts.len() {
            if vals[a] * vals[b] < 0.0 {
                let w = vals[b] / (vals[b] - vals[a]);
                pts.push(verts[a].iter().zip(&verts[b]).map(|(p, q)| w * p + (1.0 - w) * q).collect());
            }
        }
    }
    let base = pts.clone();
    for a in 0..base.len() {
        for b in a + 1..base.len() {
            pts.push(base[a].iter().zip(&base[b]).map(|(p, q)| 0.5 * (p + q)).collect());
        }
    }
    pts
}
