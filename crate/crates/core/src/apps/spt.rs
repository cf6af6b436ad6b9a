use crate::generator::conic_combine;
use crate::polyalg::{MultiIndex, StateSpace};
use crate::specmodel::{simplex_type2_jump, wright_fisher, LevyTriplet, MeasureRep};

use super::AppError;

/// Downward jumps of coordinate `i`: intensity `q_i(x)/x_i`, where `q` holds
/// `q_i(e_j)`, and post-jump state `x + x_i(y − e_i)` with `y ~ μ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SptJump {
    pub q: Vec<f64>,
    pub mu: MeasureRep,
}

/// Volatility-stabilized market weights with `d` Type 2 jump families.
#[derive(Debug, Clone, PartialEq)]
pub struct SptModel {
    pub d: usize,
    pub beta: f64,
    /// One entry per coordinate; `None` means no jumps of that coordinate.
    pub jumps: Vec<Option<SptJump>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteriorReport {
    pub ok: bool,
    /// `(j, k, margin)` for all `j ≠ k`, zero-based.
    pub margins: Vec<(usize, usize, f64)>,
}

impl InteriorReport {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.2).fold(f64::INFINITY, f64::min)
    }
}

impl SptModel {
    pub fn check(&self) -> Result<(), AppError> {
        let bad = |s: String| Err(AppError::InvalidModel(s));
        if self.d < 2 {
            return bad(format!("d = {} < 2", self.d));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta = {} must be nonnegative", self.beta));
        }
        if self.jumps.len() != self.d {
            return bad(format!("{} jump entries for d = {}", self.jumps.len(), self.d));
        }
        let space = StateSpace::Simplex(self.d);
        for (i, j) in self.jumps.iter().enumerate() {
            let Some(j) = j else { continue };
            if j.q.len() != self.d || j.q.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return bad(format!("q_{} must have {} nonnegative vertex values", i + 1, self.d));
            }
            if j.mu.dim() != self.d {
                return bad(format!("mu_{} must live on the simplex of dimension {}", i + 1, self.d));
            }
            j.mu.means()?;
            if let Some(atoms) = j.mu.atom_list() {
                for a in atoms {
                    if a.weight < 0.0 || !space.contains(&a.point, 1e-12) {
                        return bad(format!("mu_{} has an atom outside the simplex", i + 1));
                    }
                    if a.weight > 0.0 && (a.point[i] - 1.0).abs() <= 1e-12 {
                        return bad(format!("mu_{} charges the vertex e_{}", i + 1, i + 1));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Wright–Fisher part with `α_ij = 1` and `B = (1+β)/2·𝟏𝟏ᵀ − d(1+β)/2·I`, plus the jumps.
pub fn spt_build(model: &SptModel) -> Result<LevyTriplet, AppError> {
    model.check()?;
    let d = model.d;
    let alpha: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
    let h = (1.0 + model.beta) / 2.0;
    let b: Vec<Vec<f64>> = (0..d).map(|k| (0..d).map(|l| h - if k == l { d as f64 * h } else { 0.0 }).collect()).collect();
    let mut parts = vec![(1.0, wright_fisher(&alpha, &b))];
    for (i, j) in model.jumps.iter().enumerate() {
        let Some(j) = j else { continue };
        if j.mu.is_null() || j.q.iter().all(|&v| v == 0.0) {
            continue;
        }
        let mut t = LevyTriplet::zero(StateSpace::Simplex(d));
        t.jumps.push(simplex_type2_jump(d, i, &j.q, &j.mu)?);
        parts.push((1.0, t));
    }
    Ok(conic_combine(&parts)?)
}

// ∫(1 + ln y_k − y_k) μ(dy); −∞ when some atom has y_k = 0 or only moments are known.
fn log_term(mu: &MeasureRep, k: usize) -> f64 {
    match mu.atom_list() {
        Some(atoms) => atoms
            .iter()
            .filter(|a| a.weight > 0.0)
            .map(|a| {
                let y = a.point[k];
                if y <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    a.weight * (1.0 + y.ln() - y)
                }
            })
            .sum(),
        None if mu.is_null() => 0.0,
        None => f64::NEG_INFINITY,
    }
}

/// Margins `β/2 − Σ_{i≠k} q_i(e_j)∫y_k μ_i + q_k(e_j)∫(1 + ln y_k − y_k) μ_k` for `j ≠ k`.
pub fn spt_check_interior(model: &SptModel) -> Result<InteriorReport, AppError> {
    model.check()?;
    let d = model.d;
    let mut margins = Vec::new();
    for k in 0..d {
        for j in (0..d).filter(|&j| j != k) {
            let mut m = model.beta / 2.0;
            for (i, jump) in model.jumps.iter().enumerate() {
                let Some(jump) = jump else { continue };
                let q = jump.q[j];
                if q == 0.0 {
                    continue;
                }
                if i == k {
                    m += q * log_term(&jump.mu, k);
                } else {
                    m -= q * jump.mu.moment(&MultiIndex::unit(d, k))?;
                }
            }
            margins.push((j, k, m));
        }
    }
    Ok(InteriorReport { ok: margins.iter().all(|m| m.2 > 0.0), margins })
}
