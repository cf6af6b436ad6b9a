use crate::polyalg::{divide_exact, Polynomial};
use crate::specmodel::{LevyTriplet, PoleCorrection, RationalFn};

use super::GenError;

/// `Σ w_k T_k` for nonnegative weights.
pub fn conic_combine(parts: &[(f64, LevyTriplet)]) -> Result<LevyTriplet, GenError> {
    let Some((_, first)) = parts.first() else {
        return Err(GenError::SpaceMismatch);
    };
    let space = first.space;
    let d = space.dim();
    let mut out = LevyTriplet::zero(space);
    for (w, t) in parts {
        if t.space != space {
            return Err(GenError::SpaceMismatch);
        }
        if *w < 0.0 || w.is_nan() {
            return Err(GenError::NegativeWeight(*w));
        }
        if *w == 0.0 {
            continue;
        }
        for i in 0..d {
            for j in 0..d {
                out.diffusion[i][j] = &out.diffusion[i][j] + &t.diffusion[i][j].scale(*w);
            }
            out.drift[i] = &out.drift[i] + &t.drift[i].scale(*w);
        }
        for j in &t.jumps {
            let mut j = j.clone();
            j.lambda = j.lambda.scaled(*w);
            out.jumps.push(j);
        }
        for c in &t.pole_corrections {
            let scaled: Vec<Vec<Polynomial>> = c.matrix.iter().map(|r| r.iter().map(|p| p.scale(*w)).collect()).collect();
            let locus = normalized(&c.locus);
            match out.pole_corrections.iter_mut().find(|p| normalized(&p.locus).approx_eq(&locus, 1e-12)) {
                Some(p) => {
                    for (row, srow) in p.matrix.iter_mut().zip(&scaled) {
                        for (v, s) in row.iter_mut().zip(srow) {
                            *v = &*v + s;
                        }
                    }
                }
                None => out.pole_corrections.push(PoleCorrection { locus: c.locus.clone(), matrix: scaled }),
            }
        }
    }
    Ok(out)
}

// Scales an affine locus so its leading coefficient is one.
fn normalized(p: &Polynomial) -> Polynomial {
    match p.leading_term() {
        Some((_, c)) if c != 0.0 => p.scale(1.0 / c),
        _ => p.clone(),
    }
}

/// Intensities `λ_ℓ = q_ℓ / (γ_ℓ² Π_{j≠ℓ}(γ_ℓ − γ_j))` of a kernel supported on the
/// affine jump sizes `γ_1, …, γ_L`, given `r_2, …, r_{L+1}` (in this order).
///
/// Factors `γ_ℓ` common to numerator and denominator are cancelled; a zero of
/// `γ_ℓ` is excluded only if the reduced denominator still vanishes there.
pub fn finite_atom_intensities(gammas: &[Polynomial], r: &[Polynomial]) -> Result<Vec<RationalFn>, GenError> {
    let l = gammas.len();
    assert_eq!(r.len(), l, "need r_2 .. r_(L+1)");
    let n = gammas.first().map_or(1, Polynomial::nvars);
    for a in 0..l {
        for b in a + 1..l {
            let diff = &gammas[a] - &gammas[b];
            if diff.max_abs_coeff() <= 1e-14 * gammas[a].max_abs_coeff().max(1.0) {
                return Err(GenError::DegenerateGammas(a, b));
            }
        }
    }
    let mut out = Vec::with_capacity(l);
    for ell in 0..l {
        let others: Vec<&Polynomial> = (0..l).filter(|&j| j != ell).map(|j| &gammas[j]).collect();
        // e[k]: elementary symmetric polynomial of degree k in the other γ's.
        let mut e = vec![Polynomial::constant(n, 1.0)];
        for g in &others {
            e.push(Polynomial::zero(n));
            for k in (1..e.len()).rev() {
                e[k] = &e[k] + &(&e[k - 1] * g);
            }
        }
        let mut q = Polynomial::zero(n);
        for k in 0..l {
            let term = &r[l - k - 1] * &e[k];
            q = if k % 2 == 0 { &q + &term } else { &q - &term };
        }
        let g = &gammas[ell];
        let mut den = g * g;
        for o in &others {
            den = &den * &(g - *o);
        }
        // Cancel common factors γ_ℓ. Only zeros inside the state space matter, and
        // dividing by a γ_ℓ without such a zero is badly conditioned.
        let mut num = q;
        if !vanishes_in_unit_interval(g) {
            out.push(RationalFn::new(num, den, None)?);
            continue;
        }
        while !num.is_zero() && g.degree() > 0 {
            match (divide_exact(&num, g, 1e-10), divide_exact(&den, g, 1e-10)) {
                (Ok(a), Ok(b)) => {
                    num = a;
                    den = b;
                }
                _ => break,
            }
        }
        let excluded = match g.degree() {
            0 => None,
            _ => {
                // Zero of an affine γ_ℓ on the line through it; the reduced denominator
                // vanishes there iff γ_ℓ still divides it.
                divide_exact(&den, g, 1e-10).ok().map(|_| g.clone())
            }
        };
        out.push(RationalFn::new(num, den, excluded)?);
    }
    Ok(out)
}

// True unless `g` is a univariate affine polynomial without a zero in [0, 1].
fn vanishes_in_unit_interval(g: &Polynomial) -> bool {
    if g.nvars() != 1 {
        return true;
    }
    match g.affine_parts() {
        Some((c0, c)) if c[0] != 0.0 => (-1e-12..=1.0 + 1e-12).contains(&(-c0 / c[0])),
        Some(_) => false,
        None => true,
    }
}
