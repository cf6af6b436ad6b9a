use std::collections::BTreeMap;

use crate::polyalg::{enumerate_basis, MultiIndex, Polynomial, StateSpace};

use super::ModelError;

/// Point mass `weight · δ_point`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: Vec<f64>,
    pub weight: f64,
}

impl Atom {
    pub fn new(point: Vec<f64>, weight: f64) -> Self {
        Atom { point, weight }
    }
}

/// Mixed moments `∫ y^k μ(dy)`. Entries of order 0 or 1 may be `None` (infinite or unknown).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    dim: usize,
    entries: BTreeMap<MultiIndex, Option<f64>>,
}

impl MomentTable {
    pub fn new(dim: usize) -> Self {
        MomentTable { dim, entries: BTreeMap::new() }
    }

    /// Scalar table from `m_0, m_1, …`.
    pub fn scalar(moments: &[Option<f64>]) -> Self {
        let mut t = MomentTable::new(1);
        for (k, &m) in moments.iter().enumerate() {
            t.insert(MultiIndex::new(vec![k as u32]), m);
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn insert(&mut self, k: MultiIndex, value: Option<f64>) {
        assert_eq!(k.len(), self.dim, "moment index length mismatch");
        self.entries.insert(k, value);
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, Option<f64>)> + '_ {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn get(&self, k: &MultiIndex) -> Option<f64> {
        self.entries.get(k).copied().flatten()
    }

    /// Largest `n` such that every entry with `2 <= |k| <= n` is present and finite.
    pub fn max_order(&self) -> usize {
        let mut n = 1;
        loop {
            let next = n + 1;
            let ok = enumerate_basis(space_for(self.dim), next)
                .into_iter()
                .filter(|k| k.degree() as usize == next)
                .all(|k| self.get(&k).is_some_and(f64::is_finite));
            if !ok || next > 64 {
                return n;
            }
            n = next;
        }
    }
}

// Multi-indices over `dim` variables reuse the free-variable enumeration of a simplex.
fn space_for(dim: usize) -> StateSpace {
    if dim == 1 {
        StateSpace::Interval
    } else {
        StateSpace::Simplex(dim + 1)
    }
}

/// The measure `μ` of an affine jump kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureRep {
    Atoms { dim: usize, atoms: Vec<Atom> },
    Moments(MomentTable),
}

impl MeasureRep {
    pub fn atoms(dim: usize, atoms: Vec<Atom>) -> Self {
        MeasureRep::Atoms { dim, atoms }
    }

    pub fn dirac(point: Vec<f64>, weight: f64) -> Self {
        MeasureRep::Atoms { dim: point.len(), atoms: vec![Atom::new(point, weight)] }
    }

    pub fn dim(&self) -> usize {
        match self {
            MeasureRep::Atoms { dim, .. } => *dim,
            MeasureRep::Moments(t) => t.dim(),
        }
    }

    pub fn atom_list(&self) -> Option<&[Atom]> {
        match self {
            MeasureRep::Atoms { atoms, .. } => Some(atoms),
            MeasureRep::Moments(_) => None,
        }
    }

    /// Single mixed moment.
    pub fn moment(&self, k: &MultiIndex) -> Result<f64, ModelError> {
        match self {
            MeasureRep::Atoms { atoms, .. } => Ok(atoms.iter().map(|a| a.weight * k.eval(&a.point)).sum()),
            MeasureRep::Moments(t) => t
                .get(k)
                .filter(|v| v.is_finite())
                .ok_or_else(|| ModelError::MomentUnavailable(format!("moment {:?}", k.exponents()))),
        }
    }

    pub fn total_mass(&self) -> Result<f64, ModelError> {
        self.moment(&MultiIndex::zero(self.dim()))
    }

    /// First moments `∫ y_m μ(dy)`.
    pub fn means(&self) -> Result<Vec<f64>, ModelError> {
        (0..self.dim()).map(|m| self.moment(&MultiIndex::unit(self.dim(), m))).collect()
    }

    /// Highest order for which all moments of order at least two are finite.
    pub fn max_order(&self) -> usize {
        match self {
            MeasureRep::Atoms { .. } => usize::MAX,
            MeasureRep::Moments(t) => t.max_order(),
        }
    }

    pub fn is_null(&self) -> bool {
        match self {
            MeasureRep::Atoms { atoms, .. } => atoms.iter().all(|a| a.weight == 0.0),
            MeasureRep::Moments(t) => t.entries().all(|(_, v)| v == Some(0.0)),
        }
    }

    pub fn scaled(&self, s: f64) -> MeasureRep {
        match self {
            MeasureRep::Atoms { dim, atoms } => MeasureRep::Atoms {
                dim: *dim,
                atoms: atoms.iter().map(|a| Atom::new(a.point.clone(), a.weight * s)).collect(),
            },
            MeasureRep::Moments(t) => {
                let mut out = MomentTable::new(t.dim());
                for (k, v) in t.entries() {
                    out.insert(k.clone(), v.map(|m| m * s));
                }
                MeasureRep::Moments(out)
            }
        }
    }

    /// Integral of a polynomial in the `y` variables.
    pub fn integrate(&self, p: &Polynomial) -> Result<f64, ModelError> {
        assert_eq!(p.nvars(), self.dim());
        match self {
            MeasureRep::Atoms { atoms, .. } => Ok(atoms.iter().map(|a| a.weight * p.eval(&a.point)).sum()),
            MeasureRep::Moments(_) => {
                let mut s = 0.0;
                for (k, c) in p.terms() {
                    s += c * self.moment(k)?;
                }
                Ok(s)
            }
        }
    }

    /// Image measure under `y ↦ L y + c` (rows of `l` are the new coordinates).
    ///
    /// Moment tables are transformed exactly up to their maximal order; entries
    /// of order at most one become unavailable if their inputs are.
    pub fn pushforward_affine(&self, l: &[Vec<f64>], c: &[f64]) -> Result<MeasureRep, ModelError> {
        let new_dim = l.len();
        match self {
            MeasureRep::Atoms { atoms, .. } => {
                let mapped = atoms
                    .iter()
                    .map(|a| {
                        let z = l
                            .iter()
                            .zip(c)
                            .map(|(row, ci)| ci + row.iter().zip(&a.point).map(|(r, y)| r * y).sum::<f64>())
                            .collect();
                        Atom::new(z, a.weight)
                    })
                    .collect();
                Ok(MeasureRep::Atoms { dim: new_dim, atoms: mapped })
            }
            MeasureRep::Moments(t) => {
                let order = t.max_order();
                let n = t.dim();
                let coords: Vec<Polynomial> = l
                    .iter()
                    .zip(c)
                    .map(|(row, &ci)| Polynomial::affine(ci, row))
                    .collect();
                let mut out = MomentTable::new(new_dim);
                for k in enumerate_basis(space_for(new_dim), order) {
                    let mut p = Polynomial::constant(n, 1.0);
                    for (r, &e) in k.exponents().iter().enumerate() {
                        p = &p * &coords[r].pow(e);
                    }
                    match self.integrate(&p) {
                        Ok(v) => out.insert(k, Some(v)),
                        Err(e) if k.degree() >= 2 => return Err(e),
                        Err(_) => out.insert(k, None),
                    }
                }
                Ok(MeasureRep::Moments(out))
            }
        }
    }
}

/// Moment table of `μ` for all `|k| <= upto`.
pub fn measure_moments(mu: &MeasureRep, upto: usize) -> Result<MomentTable, ModelError> {
    let mut out = MomentTable::new(mu.dim());
    for k in enumerate_basis(space_for(mu.dim()), upto) {
        match mu.moment(&k) {
            Ok(v) => out.insert(k, Some(v)),
            Err(e) if k.degree() >= 2 => return Err(e),
            Err(_) => out.insert(k, None),
        }
    }
    Ok(out)
}
