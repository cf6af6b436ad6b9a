use crate::polyalg::{divide_exact, homogenize, MultiIndex, Polynomial, StateSpace, DEFAULT_DIVISION_TOL};
use crate::specmodel::{
    validate, wright_fisher, AffineJumpMap, Atom, JumpSpec, LevyTriplet, MeasureRep, TypedSpec,
};

use super::GenError;

// Grid used by the validation run preceding classification.
const CLASSIFY_GRID: usize = 64;
// Snapping distance for the no-jump point.
const SNAP: f64 = 1e-8;

/// Result of classification: the canonical parameters of the recovered type.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeTag {
    pub spec: TypedSpec,
    /// Set for interval Type 4, which is only ever reported as a candidate.
    pub candidate: bool,
}

impl TypeTag {
    fn of(spec: TypedSpec) -> Self {
        TypeTag { spec, candidate: false }
    }

    pub fn name(&self) -> String {
        if self.candidate {
            format!("{}-candidate", self.spec.type_name())
        } else {
            self.spec.type_name().to_string()
        }
    }

    /// Recovered parameters as `key, value` pairs.
    pub fn params(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut num = |k: &str, v: f64| out.push((k.to_string(), fmt_num(v)));
        match &self.spec {
            TypedSpec::IntervalType0 { a, kappa, theta } => {
                num("A", *a);
                num("kappa", *kappa);
                num("theta", *theta);
            }
            TypedSpec::IntervalType1 { a, kappa, theta, .. } => {
                num("A", *a);
                num("kappa", *kappa);
                num("theta", *theta);
            }
            TypedSpec::IntervalType2 { a, kappa, theta, q, side, .. } => {
                num("q", *q);
                num("side", f64::from(*side));
                num("A", *a);
                num("kappa", *kappa);
                num("theta", *theta);
            }
            TypedSpec::IntervalType3 { x_star, kappa, theta, a, q0, q1, q2, .. } => {
                num("x_star", *x_star);
                num("q0", *q0);
                num("q1", *q1);
                num("q2", *q2);
                num("A", *a);
                num("kappa", *kappa);
                num("theta", *theta);
            }
            TypedSpec::IntervalType4 { alpha_re, alpha_im, kappa, theta, a, l, .. } => {
                num("alpha_re", *alpha_re);
                num("alpha_im", *alpha_im);
                num("L", *l);
                num("A", *a);
                num("kappa", *kappa);
                num("theta", *theta);
            }
            TypedSpec::SimplexType0 { .. } | TypedSpec::SimplexType1 { .. } => {}
            TypedSpec::SimplexType2 { i, q1, .. } => {
                num("i", (*i + 1) as f64);
                for (j, v) in q1.iter().enumerate() {
                    num(&format!("q1_{}", j + 1), *v);
                }
            }
            TypedSpec::SimplexType3 { i, j, c, qi, qj, .. } => {
                num("i", (*i + 1) as f64);
                num("j", (*j + 1) as f64);
                num("c", *c);
                for (k, v) in qi.iter().enumerate() {
                    num(&format!("qi_{}", k + 1), *v);
                }
                for (k, v) in qj.iter().enumerate() {
                    num(&format!("qj_{}", k + 1), *v);
                }
            }
        }
        match &self.spec {
            TypedSpec::SimplexType0 { alpha, b }
            | TypedSpec::SimplexType1 { alpha, b, .. }
            | TypedSpec::SimplexType2 { alpha, b, .. }
            | TypedSpec::SimplexType3 { alpha, b, .. } => {
                out.push(("alpha".into(), fmt_matrix(alpha)));
                out.push(("B".into(), fmt_matrix(b)));
            }
            _ => {}
        }
        out
    }
}

// Rounds to ten significant digits so that round-off does not show.
fn fmt_num(v: f64) -> String {
    let r: f64 = format!("{v:.9e}").parse().unwrap_or(v);
    if r == 0.0 {
        "0".into()
    } else {
        r.to_string()
    }
}

fn fmt_matrix(m: &[Vec<f64>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(",")))
        .collect();
    format!("[{}]", rows.join(","))
}

/// Validates the triplet and assigns it to one of the canonical types.
pub fn classify(t: &LevyTriplet) -> Result<TypeTag, GenError> {
    let rep = validate(t, CLASSIFY_GRID);
    if !rep.ok {
        return Err(GenError::Invalid(rep.violations));
    }
    classify_unchecked(t)
}

/// Classification without the preceding validation run.
pub fn classify_unchecked(t: &LevyTriplet) -> Result<TypeTag, GenError> {
    match t.space {
        StateSpace::Interval => interval(t),
        StateSpace::Simplex(d) => simplex(t, d),
    }
}

// Merges kernels with proportional intensities into a single kernel.
fn merged_jump(t: &LevyTriplet) -> Result<Option<JumpSpec>, GenError> {
    let active: Vec<&JumpSpec> = t.jumps.iter().filter(|j| !j.is_null()).collect();
    match active.len() {
        0 => return Ok(None),
        1 => return Ok(Some(active[0].clone())),
        _ => {}
    }
    let base = &active[0].lambda;
    let total: usize = active.iter().map(|j| j.mu.dim()).sum();
    let mut dirs = Vec::new();
    let mut atoms = Vec::new();
    let mut offset = 0;
    for j in &active {
        let lhs = &j.lambda.num * &base.den;
        let rhs = &base.num * &j.lambda.den;
        let c = match (lhs.leading_term(), rhs.leading_term()) {
            (Some((kl, cl)), Some((kr, cr))) if kl == kr => cl / cr,
            _ => return Err(GenError::NotAffineJumpSizes("intensities are not proportional".into())),
        };
        if !lhs.approx_eq(&rhs.scale(c), 1e-10 * lhs.max_abs_coeff().max(1.0)) {
            return Err(GenError::NotAffineJumpSizes("intensities are not proportional".into()));
        }
        let Some(list) = j.mu.atom_list() else {
            return Err(GenError::NotAffineJumpSizes("moment-table kernels cannot be merged".into()));
        };
        for a in list {
            let mut p = vec![0.0; total];
            p[offset..offset + a.point.len()].copy_from_slice(&a.point);
            atoms.push(Atom::new(p, a.weight * c));
        }
        dirs.extend(j.gamma.directions.iter().cloned());
        offset += j.mu.dim();
    }
    Ok(Some(JumpSpec { lambda: base.clone(), gamma: AffineJumpMap::new(dirs), mu: MeasureRep::atoms(total, atoms) }))
}

fn unclassifiable(why: &str) -> GenError {
    GenError::Unclassifiable(why.to_string())
}

fn interval(t: &LevyTriplet) -> Result<TypeTag, GenError> {
    let a_poly = &t.diffusion[0][0];
    let a = a_poly.coeff(&MultiIndex::new(vec![1]));
    let x = Polynomial::var(1, 0);
    let one = Polynomial::constant(1, 1.0);
    let jac = (&x * &(&one - &x)).scale(a);
    if !a_poly.approx_eq(&jac, 1e-10 * a_poly.max_abs_coeff().max(1.0)) {
        return Err(unclassifiable("diffusion is not of the form Ax(1-x)"));
    }
    let (b0, b1) = match t.drift[0].affine_parts() {
        Some((c0, c)) => (c0, c[0]),
        None => return Err(unclassifiable("drift is not affine")),
    };
    let kappa = -b1;
    let theta = if kappa.abs() > 1e-14 {
        b0 / kappa
    } else if b0.abs() <= 1e-14 {
        0.5
    } else {
        return Err(unclassifiable("constant nonzero drift"));
    };

    let Some(j) = merged_jump(t)? else {
        return Ok(TypeTag::of(TypedSpec::IntervalType0 { a, kappa, theta }));
    };
    let tol = DEFAULT_DIVISION_TOL;
    let p4 = j.moment_poly(&[4])?;
    if p4.is_zero() {
        return Ok(TypeTag::of(TypedSpec::IntervalType0 { a, kappa, theta }));
    }
    let r4 = t.jump_moment_polynomial(&[4], tol)?;
    let parts: Vec<(f64, f64)> = j
        .gamma
        .directions
        .iter()
        .map(|g| g[0].affine_parts().map(|(u, v)| (u, v[0])).ok_or_else(|| unclassifiable("jump size not affine")))
        .collect::<Result<_, _>>()?;

    // Constant-choosable intensity.
    if let Ok(q) = divide_exact(&r4, &p4, tol) {
        if q.degree() == 0 {
            let c = q.constant_term();
            let l = vec![
                parts.iter().map(|(u, v)| -(u + v)).collect::<Vec<_>>(),
                parts.iter().map(|(u, _)| *u).collect(),
            ];
            let mu = j.mu.pushforward_affine(&l, &[0.0, 0.0])?.scaled(c);
            return Ok(TypeTag::of(TypedSpec::IntervalType1 { a, kappa, theta, mu }));
        }
    }

    let p2 = j.moment_poly(&[2])?;
    let c = |k: u32| p2.coeff(&MultiIndex::new(vec![k]));
    let (a0, a1, a2) = (c(0), c(1), c(2));
    if a2 <= 0.0 {
        return Err(unclassifiable("jump sizes do not depend on the state"));
    }
    let disc = a1 * a1 - 4.0 * a0 * a2;
    let scale = (a1 * a1).max((4.0 * a0 * a2).abs()).max(f64::MIN_POSITIVE);
    if disc.abs() <= 1e-9 * scale {
        let mut xs = -a1 / (2.0 * a2);
        if xs.abs() <= SNAP {
            xs = 0.0;
        } else if (xs - 1.0).abs() <= SNAP {
            xs = 1.0;
        }
        if !(0.0..=1.0).contains(&xs) {
            return Err(unclassifiable("no-jump point outside [0,1]"));
        }
        // ȳ = γ(0, y) − γ(1, y)
        let ybar = j.mu.pushforward_affine(&[parts.iter().map(|(_, v)| -v).collect()], &[0.0])?;
        let m4 = ybar.moment(&MultiIndex::new(vec![4]))?;
        let shift = &x - &Polynomial::constant(1, xs);
        if xs == 0.0 || xs == 1.0 {
            let side = if xs == 0.0 { 0u8 } else { 1 };
            let base = if side == 0 { x.clone() } else { &one - &x };
            let tq = divide_exact(&r4, &base.pow(3).scale(m4), tol)
                .ok()
                .filter(|q| q.degree() <= 1)
                .ok_or_else(|| unclassifiable("intensity is not of the form (1+q·d)/d"))?;
            let (t0, t1) = (tq.constant_term(), tq.coeff(&MultiIndex::new(vec![1])));
            let (s, q) = if side == 0 { (t0, t1 / t0) } else { (t0 + t1, -t1 / (t0 + t1)) };
            if !(s > 0.0) {
                return Err(unclassifiable("nonpositive jump intensity scale"));
            }
            return Ok(TypeTag::of(TypedSpec::IntervalType2 { a, kappa, theta, q, side, mu: ybar.scaled(s) }));
        }
        let qp = divide_exact(&r4, &shift.pow(2).scale(m4), tol)
            .ok()
            .filter(|q| q.degree() <= 2)
            .ok_or_else(|| unclassifiable("intensity is not of the form q(x)/(x-x*)^2"))?;
        let q = |k: u32| qp.coeff(&MultiIndex::new(vec![k]));
        return Ok(TypeTag::of(TypedSpec::IntervalType3 {
            x_star: xs,
            kappa,
            theta,
            a,
            q0: q(0),
            q1: q(1),
            q2: q(2),
            mu: ybar,
        }));
    }
    if disc < 0.0 {
        let re = -a1 / (2.0 * a2);
        let im = (-disc).sqrt() / (2.0 * a2);
        let lam_half = j.lambda.eval(&[0.5]);
        let dist2 = (0.5 - re).powi(2) + im * im;
        return Ok(TypeTag {
            spec: TypedSpec::IntervalType4 {
                alpha_re: re,
                alpha_im: im,
                kappa,
                theta,
                a,
                l: lam_half * dist2 / 0.25,
                mu: j.mu.clone(),
            },
            candidate: true,
        });
    }
    Err(unclassifiable("jump sizes vanish at two distinct points"))
}

fn simplex(t: &LevyTriplet, d: usize) -> Result<TypeTag, GenError> {
    let space = StateSpace::Simplex(d);
    let n = d - 1;
    let verts: Vec<Vec<f64>> = (0..d).map(|l| (0..n).map(|k| if k == l { 1.0 } else { 0.0 }).collect()).collect();
    let mut alpha = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            let mid: Vec<f64> = (0..n).map(|k| 0.5 * (verts[i][k] + verts[j][k])).collect();
            alpha[i][j] = -4.0 * t.diffusion[i][j].eval(&mid);
        }
    }
    let b: Vec<Vec<f64>> = (0..d).map(|k| verts.iter().map(|v| t.drift[k].eval(v)).collect()).collect();
    let wf = wright_fisher(&alpha, &b);
    let scale = t.diffusion.iter().flatten().chain(&t.drift).fold(1.0f64, |m, p| m.max(p.max_abs_coeff()));
    let same = |p: &[Polynomial], q: &[Polynomial]| p.iter().zip(q).all(|(x, y)| x.approx_eq(y, 1e-10 * scale));
    if !(0..d).all(|i| same(&t.diffusion[i], &wf.diffusion[i])) || !same(&t.drift, &wf.drift) {
        return Err(unclassifiable("coefficients are not of Wright-Fisher form"));
    }

    let Some(j) = merged_jump(t)? else {
        return Ok(TypeTag::of(TypedSpec::SimplexType0 { alpha, b }));
    };
    let tol = DEFAULT_DIVISION_TOL;
    // z[m][k][l] = g_{m,k}(e_l)
    let z: Vec<Vec<Vec<f64>>> = j
        .gamma
        .directions
        .iter()
        .map(|g| (0..d).map(|k| verts.iter().map(|v| g[k].eval(v)).collect()).collect())
        .collect();
    let mdim = z.len();

    // Assumption A, per atom (or per direction for moment tables).
    let profiles: Vec<Vec<Polynomial>> = match j.mu.atom_list() {
        Some(atoms) => atoms.iter().filter(|a| a.weight != 0.0).map(|a| j.gamma.at(&a.point)).collect(),
        None => j.gamma.directions.clone(),
    };
    let what = if j.mu.atom_list().is_some() { "support point" } else { "direction" };
    for (pi, g) in profiles.iter().enumerate() {
        for (i, gi) in g.iter().enumerate() {
            if j.lambda.times(&gi.pow(3), tol).is_err() {
                return Err(GenError::AssumptionAViolated(format!("{what} {} coordinate {}", pi + 1, i + 1)));
            }
        }
    }

    // Constant-choosable intensity.
    let mut p4 = Polynomial::zero(n);
    for i in 0..d {
        for l in 0..d {
            let mut k = vec![0u32; d];
            k[i] += 2;
            k[l] += 2;
            p4 = &p4 + &j.moment_poly(&k)?;
        }
    }
    if p4.is_zero() {
        return Ok(TypeTag::of(TypedSpec::SimplexType0 { alpha, b }));
    }
    if let Ok(r4) = j.lambda.times(&p4, tol) {
        if let Ok(q) = divide_exact(&r4, &p4, tol) {
            if q.degree() == 0 {
                // y^l_k = δ_lk + Σ_m y_m z[m][k][l]
                let mut rows = Vec::with_capacity(d * d);
                let mut shift = Vec::with_capacity(d * d);
                for l in 0..d {
                    for k in 0..d {
                        rows.push((0..mdim).map(|m| z[m][k][l]).collect());
                        shift.push(if k == l { 1.0 } else { 0.0 });
                    }
                }
                let mu = j.mu.pushforward_affine(&rows, &shift)?.scaled(q.constant_term());
                return Ok(TypeTag::of(TypedSpec::SimplexType1 { alpha, b, mu }));
            }
        }
    }

    // γ(·, y) = H(y) P1 with a common linear P1 = Σ C_l x_l.
    let mats: Vec<Vec<Vec<f64>>> = profiles
        .iter()
        .map(|g| (0..d).map(|k| verts.iter().map(|v| g[k].eval(v)).collect()).collect())
        .collect();
    let zscale = mats.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let Some(cvec) = mats
        .iter()
        .flatten()
        .max_by(|r, s| norm(r).total_cmp(&norm(s)))
        .filter(|r| norm(r) > 0.0)
        .map(|r| {
            let m = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            r.iter().map(|v| v / m).collect::<Vec<f64>>()
        })
    else {
        return Err(unclassifiable("jump sizes vanish identically"));
    };
    let cc: f64 = cvec.iter().map(|v| v * v).sum();
    for row in mats.iter().flatten() {
        let proj: f64 = row.iter().zip(&cvec).map(|(a, b)| a * b).sum::<f64>() / cc;
        let res = row.iter().zip(&cvec).fold(0.0f64, |m, (a, b)| m.max((a - proj * b).abs()));
        if res > 1e-9 * zscale {
            return Err(unclassifiable("jump sizes are not proportional to a common linear form"));
        }
    }
    let nz: Vec<usize> = (0..d).filter(|&l| cvec[l].abs() > 1e-9).collect();
    match nz.as_slice() {
        &[i] => {
            let q1p = j
                .lambda
                .times(&space.coordinate(i), tol)
                .ok()
                .filter(|q| q.degree() <= 1)
                .ok_or_else(|| unclassifiable("intensity is not of the form q1(x)/x_i"))?;
            let q1 = verts.iter().map(|v| q1p.eval(v)).collect();
            let rows: Vec<Vec<f64>> = (0..d).map(|k| (0..mdim).map(|m| z[m][k][i]).collect()).collect();
            let shift: Vec<f64> = (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect();
            let mu = j.mu.pushforward_affine(&rows, &shift)?;
            Ok(TypeTag::of(TypedSpec::SimplexType2 { i, alpha, b, q1, mu }))
        }
        &[i, jj] if cvec[i] * cvec[jj] < 0.0 => {
            let c = -cvec[i] / cvec[jj];
            let p1 = &space.coordinate(jj) - &space.coordinate(i).scale(c);
            let q2p = j
                .lambda
                .times(&p1.pow(2), tol)
                .ok()
                .filter(|q| q.degree() <= 2)
                .ok_or_else(|| unclassifiable("intensity is not of the form q2(x)/P1(x)^2"))?;
            let h = homogenize(space, &q2p, 2);
            let qm = |k: usize, l: usize| {
                let mut e = vec![0u32; d];
                e[k] += 1;
                e[l] += 1;
                let v = h.coeff(&MultiIndex::new(e));
                if k == l {
                    v
                } else {
                    0.5 * v
                }
            };
            let qs = h.max_abs_coeff().max(1.0);
            for k in (0..d).filter(|&k| k != i && k != jj) {
                for l in (k..d).filter(|&l| l != i && l != jj) {
                    if qm(k, l).abs() > 1e-9 * qs {
                        return Err(unclassifiable("intensity numerator has terms outside x_i·x_k, x_j·x_k"));
                    }
                }
            }
            let qi = (0..d).map(|k| if k == i { qm(i, i) } else { 2.0 * qm(i, k) }).collect();
            let qj = (0..d)
                .map(|k| {
                    if k == i {
                        0.0
                    } else if k == jj {
                        qm(jj, jj)
                    } else {
                        2.0 * qm(jj, k)
                    }
                })
                .collect();
            let row: Vec<f64> = (0..mdim).map(|m| z[m][i][jj]).collect();
            let mu = j.mu.pushforward_affine(&[row], &[0.0])?;
            Ok(TypeTag::of(TypedSpec::SimplexType3 { i, j: jj, c, b, alpha, qi, qj, mu }))
        }
        _ => Err(unclassifiable("no-jump hyperplane does not match a known type")),
    }
}

fn norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specmodel::{construct, MomentTable};

    #[test]
    fn interval_round_trips() {
        let specs = [
            TypedSpec::IntervalType0 { a: 0.2, kappa: 1.0, theta: 0.5 },
            TypedSpec::IntervalType1 { a: 0.3, kappa: 3.0, theta: 0.5, mu: MeasureRep::dirac(vec![1.0, 1.0], 1.0) },
            TypedSpec::IntervalType2 { a: 0.3, kappa: 2.0, theta: 0.4, q: 0.5, side: 0, mu: MeasureRep::dirac(vec![0.6], 1.0) },
            TypedSpec::IntervalType2 { a: 0.3, kappa: 2.0, theta: 0.6, q: 0.5, side: 1, mu: MeasureRep::dirac(vec![0.6], 1.0) },
            TypedSpec::IntervalType3 {
                x_star: 0.3,
                kappa: 1.0,
                theta: 0.5,
                a: 0.1,
                q0: 0.2,
                q1: 0.1,
                q2: 0.0,
                mu: MeasureRep::dirac(vec![0.5], 0.5),
            },
        ];
        for s in specs {
            let tag = classify(&construct(&s).unwrap()).unwrap();
            assert_eq!(tag.spec.type_name(), s.type_name());
            assert!(!tag.candidate);
        }
    }

    #[test]
    fn sin2_kernel_is_type2() {
        let binom = |k: u64| (1..=k).fold(1.0, |acc, i| acc * (k + i) as f64 / i as f64);
        let m: Vec<Option<f64>> = (0..=8u64).map(|k| Some(binom(k) / 4f64.powi(k as i32))).collect();
        let t = construct(&TypedSpec::IntervalType2 {
            a: 0.0,
            kappa: 1.0,
            theta: 0.0,
            q: -1.0,
            side: 0,
            mu: MeasureRep::Moments(MomentTable::scalar(&m)),
        })
        .unwrap();
        let tag = classify(&t).unwrap();
        assert_eq!(tag.name(), "interval-type-2");
        assert!(tag.params().contains(&("q".to_string(), "-1".to_string())));
    }
}
