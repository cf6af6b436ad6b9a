#![allow(dead_code)]

use std::path::PathBuf;

use pjd_core::apps::{Payoff, RecoveryModel};
use pjd_core::polyalg::{parse_expr, MultiIndex, Polynomial, StateSpace};
use pjd_core::specfile::SpecDocument;
use pjd_core::specmodel::{Atom, LevyTriplet, MeasureRep, TypedSpec};
use rand::Rng;

pub fn specs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join("specs")
}

pub fn example_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(specs_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "toml").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

pub fn load(name: &str) -> SpecDocument {
    SpecDocument::read(&specs_dir().join(format!("{name}.toml"))).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn triplet(name: &str) -> LevyTriplet {
    load(name).triplet().unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn jacobi() -> TypedSpec {
    TypedSpec::IntervalType0 { a: 0.2, kappa: 1.0, theta: 0.5 }
}

/// Random polynomial of total degree at most `deg` with coefficients in [-1, 1].
pub fn random_poly<R: Rng>(rng: &mut R, nvars: usize, deg: u32) -> Polynomial {
    let mut p = Polynomial::zero(nvars);
    let mut k = vec![0u32; nvars];
    loop {
        if k.iter().sum::<u32>() <= deg {
            p.add_term(MultiIndex::new(k.clone()), rng.random_range(-1.0..1.0));
        }
        // odometer over [0, deg]^nvars
        let mut i = 0;
        while i < nvars {
            k[i] += 1;
            if k[i] <= deg {
                break;
            }
            k[i] = 0;
            i += 1;
        }
        if i == nvars {
            break;
        }
    }
    p
}

/// Uniform-ish point of the simplex `Δ^d`.
pub fn simplex_point<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..d).map(|_| -rng.random_range(1e-9f64..1.0).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn atoms_1d<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> MeasureRep {
    let n = rng.random_range(1..=3);
    let atoms = (0..n).map(|_| Atom::new(vec![rng.random_range(lo..hi)], rng.random_range(0.1..1.5))).collect();
    MeasureRep::atoms(1, atoms)
}

fn mean(mu: &MeasureRep, k: usize) -> f64 {
    mu.means().unwrap()[k]
}

fn wf_params<R: Rng>(rng: &mut R, d: usize, floor: &dyn Fn(usize, usize) -> f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut alpha = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let v = rng.random_range(0.0..2.0);
            alpha[i][j] = v;
            alpha[j][i] = v;
        }
    }
    let mut b = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            b[i][j] = floor(i, j) + rng.random_range(0.05..1.5);
        }
    }
    for i in 0..d {
        b[i][i] = -(0..d).filter(|&k| k != i).map(|k| b[k][i]).sum::<f64>();
    }
    (alpha, b)
}

/// A random typed specification of the given type that satisfies its domain and
/// boundary conditions by construction.
pub fn random_typed<R: Rng>(rng: &mut R, ty: &str) -> TypedSpec {
    let a = rng.random_range(0.0..2.0);
    let theta = rng.random_range(0.05..0.95);
    let slack = rng.random_range(0.0..2.0);
    match ty {
        "interval-type-0" => TypedSpec::IntervalType0 { a, kappa: rng.random_range(0.0..5.0), theta },
        "interval-type-1" => {
            let n = rng.random_range(1..=3);
            let atoms = (0..n)
                .map(|_| Atom::new(vec![rng.random_range(0.0..1.0), rng.random_range(0.05..1.0)], rng.random_range(0.1..1.5)))
                .collect();
            let mu = MeasureRep::atoms(2, atoms);
            let kappa = (mean(&mu, 1) / theta).max(mean(&mu, 0) / (1.0 - theta)) + slack;
            TypedSpec::IntervalType1 { a, kappa, theta, mu }
        }
        "interval-type-2" => {
            let side = rng.random_range(0..2u8);
            let q = rng.random_range(-1.0..2.0);
            let mu = atoms_1d(rng, 0.05, 1.0);
            let room = if side == 0 { 1.0 - theta } else { theta };
            let kappa = (1.0 + q) * mean(&mu, 0) / room + slack;
            TypedSpec::IntervalType2 { a, kappa, theta, q, side, mu }
        }
        "interval-type-3" => {
            let x_star: f64 = rng.random_range(0.1..0.9);
            let (c0, c1, u) = (rng.random_range(0.05..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let (q0, q1, q2) = (c0 + c1 * u * u, -2.0 * c1 * u, c1);
            let mu = atoms_1d(rng, 0.05, 1.0 / x_star.max(1.0 - x_star));
            let m1 = mean(&mu, 0);
            let kappa = (q0 / x_star * m1 / theta).max((q0 + q1 + q2) / (1.0 - x_star) * m1 / (1.0 - theta)) + slack;
            TypedSpec::IntervalType3 { x_star, kappa, theta, a, q0, q1, q2, mu }
        }
        "simplex-type-0" => {
            let d = rng.random_range(2..=4);
            let (alpha, b) = wf_params(rng, d, &|_, _| 0.0);
            TypedSpec::SimplexType0 { alpha, b }
        }
        "simplex-type-1" => {
            let d = rng.random_range(2..=3);
            let n = rng.random_range(1..=2);
            let atoms: Vec<Atom> = (0..n)
                .map(|_| Atom::new((0..d).flat_map(|_| simplex_point(rng, d)).collect(), rng.random_range(0.1..1.0)))
                .collect();
            let mu = MeasureRep::atoms(d * d, atoms);
            let m = mu.means().unwrap();
            let (alpha, b) = wf_params(rng, d, &|i, j| m[j * d + i]);
            TypedSpec::SimplexType1 { alpha, b, mu }
        }
        "simplex-type-2" => {
            let d = rng.random_range(2..=4);
            let i = rng.random_range(0..d);
            let mut q1: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.5)).collect();
            q1[(i + 1) % d] += 0.1;
            let n = rng.random_range(1..=3);
            let atoms = (0..n)
                .map(|_| {
                    let mut y = simplex_point(rng, d);
                    if y[i] > 0.95 {
                        y = vec![1.0 / d as f64; d];
                    }
                    Atom::new(y, rng.random_range(0.1..1.0))
                })
                .collect();
            let mu = MeasureRep::atoms(d, atoms);
            let m = mu.means().unwrap();
            let q = q1.clone();
            let (alpha, b) = wf_params(rng, d, &|k, j| if k == i { 0.0 } else { q[j] * m[k] });
            TypedSpec::SimplexType2 { i, alpha, b, q1, mu }
        }
        "simplex-type-3" => {
            let d = rng.random_range(2..=4);
            let i = rng.random_range(0..d - 1);
            let j = rng.random_range(i + 1..d);
            let c: f64 = rng.random_range(0.3..3.0);
            let qi: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
            let mut qj: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
            qj[i] = 0.0;
            let mu = atoms_1d(rng, 0.05, (1.0 / c).min(1.0));
            let m1 = mean(&mu, 0);
            let top = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
            let need = top(&qj) * m1 + top(&qi) * m1 / c;
            let (alpha, b) = wf_params(rng, d, &|_, _| need);
            TypedSpec::SimplexType3 { i, j, c, b, alpha, qi, qj, mu }
        }
        _ => panic!("unknown type {ty}"),
    }
}

/// Parameters of a typed spec flattened to numbers, measures included.
pub fn flatten(t: &TypedSpec) -> Vec<f64> {
    let mut v = Vec::new();
    let mat = |v: &mut Vec<f64>, m: &[Vec<f64>]| v.extend(m.iter().flatten());
    let mu_of = |t: &TypedSpec| -> Option<MeasureRep> {
        match t {
            TypedSpec::IntervalType1 { mu, .. }
            | TypedSpec::IntervalType2 { mu, .. }
            | TypedSpec::IntervalType3 { mu, .. }
            | TypedSpec::SimplexType1 { mu, .. }
            | TypedSpec::SimplexType2 { mu, .. }
            | TypedSpec::SimplexType3 { mu, .. } => Some(mu.clone()),
            _ => None,
        }
    };
    match t {
        TypedSpec::IntervalType0 { a, kappa, theta } | TypedSpec::IntervalType1 { a, kappa, theta, .. } => {
            v.extend([*a, *kappa, *theta])
        }
        TypedSpec::IntervalType2 { a, kappa, theta, q, side, .. } => v.extend([*a, *kappa, *theta, *q, f64::from(*side)]),
        TypedSpec::IntervalType3 { x_star, kappa, theta, a, q0, q1, q2, .. } => {
            v.extend([*x_star, *kappa, *theta, *a, *q0, *q1, *q2])
        }
        TypedSpec::IntervalType4 { .. } => unreachable!(),
        TypedSpec::SimplexType0 { alpha, b } | TypedSpec::SimplexType1 { alpha, b, .. } => {
            mat(&mut v, alpha);
            mat(&mut v, b);
        }
        TypedSpec::SimplexType2 { i, alpha, b, q1, .. } => {
            v.push(*i as f64);
            mat(&mut v, alpha);
            mat(&mut v, b);
            v.extend(q1);
        }
        TypedSpec::SimplexType3 { i, j, c, b, alpha, qi, qj, .. } => {
            v.extend([*i as f64, *j as f64, *c]);
            mat(&mut v, alpha);
            mat(&mut v, b);
            v.extend(qi);
            v.extend(qj);
        }
    }
    if let Some(mu) = mu_of(t) {
        for a in mu.atom_list().expect("atomic test measures") {
            v.push(a.weight);
            v.extend(&a.point);
        }
    }
    v
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "parameter vectors differ in length");
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(1.0)).fold(0.0, f64::max)
}

/// Interior test points (free coordinates) away from pole loci of the shipped fixtures.
pub fn sample_points(space: StateSpace) -> Vec<Vec<f64>> {
    match space {
        StateSpace::Interval => [0.07, 0.23, 0.41, 0.62, 0.88].iter().map(|&x| vec![x]).collect(),
        StateSpace::Simplex(d) => {
            let pts: [&[f64]; 3] = [&[0.13, 0.29, 0.58, 0.0], &[0.47, 0.21, 0.32, 0.0], &[0.61, 0.07, 0.32, 0.0]];
            pts.iter()
                .map(|p| {
                    let mut x: Vec<f64> = p[..d.min(3)].to_vec();
                    x.resize(d, 0.05);
                    let s: f64 = x.iter().sum();
                    x[..d - 1].iter().map(|v| v / s).collect()
                })
                .collect()
        }
    }
}

// Bound on the sum of absolute Hessian entries of `p` over the unit cube.
fn hessian_bound(p: &Polynomial) -> f64 {
    p.terms()
        .map(|(k, c)| {
            let e = k.exponents();
            let mut s = 0.0;
            for i in 0..e.len() {
                for j in 0..e.len() {
                    let v = if i == j { e[i] * e[i].saturating_sub(1) } else { e[i] * e[j] };
                    s += f64::from(v);
                }
            }
            c.abs() * s
        })
        .sum()
}

// A degree-4 polynomial whose maximum over E is 0, attained at `x0` (full coordinates).
pub fn peaked_at<R: Rng>(rng: &mut R, space: StateSpace, x0: &[f64]) -> Polynomial {
    let n = space.n_free();
    let z0 = space.free_coords(x0);
    let h = random_poly(rng, n, 4);
    let mut f = &h - &Polynomial::constant(n, h.eval(&z0));
    for i in 0..n {
        let g = h.partial_derivative(i).eval(&z0);
        f = &f - &Polynomial::affine(-z0[i], &(0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect::<Vec<_>>()).scale(g);
    }
    let k = 0.5 * hessian_bound(&h) + rng.random_range(0.0..1.0);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let dz = Polynomial::affine(-z0[i], &e);
        f = &f - &(&dz * &dz).scale(k);
    }
    // Push the maximum against the faces x0 lies on.
    let coords: Vec<Polynomial> = match space {
        StateSpace::Interval => vec![parse_expr("x", space).unwrap(), parse_expr("1 - x", space).unwrap()],
        StateSpace::Simplex(d) => (0..d).map(|i| space.coordinate(i)).collect(),
    };
    let at: Vec<f64> = match space {
        StateSpace::Interval => vec![x0[0], 1.0 - x0[0]],
        StateSpace::Simplex(_) => x0.to_vec(),
    };
    for (c, v) in coords.iter().zip(at) {
        if v == 0.0 {
            f = &f - &c.scale(rng.random_range(0.0..2.0));
        }
    }
    f
}

pub fn maximizers<R: Rng>(rng: &mut R, space: StateSpace, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| match space {
            StateSpace::Interval => match i % 4 {
                0 => vec![0.0],
                1 => vec![1.0],
                _ => vec![rng.random_range(0.0..1.0)],
            },
            StateSpace::Simplex(d) => {
                let mut x = simplex_point(rng, d);
                // Zero a random set of coordinates (never all of them).
                let keep = rng.random_range(0..d);
                for (k, v) in x.iter_mut().enumerate() {
                    if k != keep && rng.random_bool(0.4) {
                        *v = 0.0;
                    }
                }
                let s: f64 = x.iter().sum();
                x.iter().map(|v| v / s).collect()
            }
        })
        .collect()
}

/// A recovery model with the sticky equality enforced and θ in (0.05, 0.95).
pub fn sticky_draw<R: Rng>(rng: &mut R, payoff: Payoff) -> RecoveryModel {
    let n = rng.random_range(1..=3);
    let atoms = (0..n).map(|_| Atom::new(vec![rng.random_range(0.05..1.0)], rng.random_range(0.1..1.5))).collect();
    let mu = MeasureRep::atoms(1, atoms);
    let q = rng.random_range(-0.9..2.0);
    let theta: f64 = rng.random_range(0.05..0.95);
    let kappa = (1.0 + q) * mu.means().unwrap()[0] / (1.0 - theta);
    RecoveryModel::sticky(rng.random_range(0.0..2.0), kappa, q, mu, payoff).unwrap()
}
