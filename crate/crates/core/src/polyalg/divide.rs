use super::{PolyError, Polynomial};

/// Default relative tolerance for [`divide_exact`].
pub const DEFAULT_DIVISION_TOL: f64 = 1e-9;

/// Exact polynomial division `num / den`.
///
/// Runs the single-divisor division algorithm in the graded order. Terms of the
/// running remainder that cannot be cancelled, or that are already below the
/// noise floor `tol · max|num|`, accumulate in the remainder; the division
/// fails if that remainder exceeds the floor.
pub fn divide_exact(num: &Polynomial, den: &Polynomial, tol: f64) -> Result<Polynomial, PolyError> {
    if num.nvars() != den.nvars() {
        return Err(PolyError::SpaceMismatch(num.nvars(), den.nvars()));
    }
    let den = den.prune(1e-14);
    let (lk, lc) = match den.leading_term() {
        Some((k, c)) => (k.clone(), c),
        None => return Err(PolyError::ZeroDivisor),
    };
    let bound = tol * num.max_abs_coeff();
    let mut rem = num.clone();
    let mut quot = Polynomial::zero(num.nvars());
    let mut residual: f64 = 0.0;
    while let Some((k, c)) = rem.leading_term().map(|(k, c)| (k.clone(), c)) {
        rem.remove_term(&k);
        if c.abs() <= bound {
            residual = residual.max(c.abs());
            continue;
        }
        match k.checked_sub(&lk) {
            Some(shift) => {
                let t = c / lc;
                for (dk, dc) in den.terms().rev().skip(1) {
                    rem.add_term(dk.add(&shift), -dc * t);
                }
                quot.add_term(shift, t);
            }
            None => residual = residual.max(c.abs()),
        }
    }
    if residual > bound {
        return Err(PolyError::NotDivisible { residual, bound });
    }
    Ok(quot)
}
