use std::io::Read;

use super::AppError;

/// Zero-coupon prices `P(t, t+τ)` by tenor `τ`, log-linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    points: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl DiscountCurve {
    /// Points `(τ, P)`; the anchor `(0, 1)` is implied.
    pub fn new(points: &[(f64, f64)]) -> Result<Self, AppError> {
        let mut pts: Vec<(f64, f64)> = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut warnings = Vec::new();
        for &(t, p) in &pts {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(AppError::BadCurve(format!("tenor {t}")));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(AppError::BadCurve(format!("price {p} at tenor {t} outside (0,1]")));
            }
        }
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(AppError::BadCurve("duplicate tenor".into()));
        }
        match pts.first() {
            Some(&(t, p)) if t == 0.0 => {
                if (p - 1.0).abs() > 1e-12 {
                    return Err(AppError::BadCurve(format!("P(t,t) = {p}")));
                }
            }
            _ => pts.insert(0, (0.0, 1.0)),
        }
        for w in pts.windows(2) {
            if w[1].1 > w[0].1 {
                warnings.push(format!("discount factor increases between tenors {} and {}", w[0].0, w[1].0));
            }
        }
        Ok(DiscountCurve { points: pts, warnings })
    }

    pub fn flat(p: f64, tenors: &[f64]) -> Result<Self, AppError> {
        DiscountCurve::new(&tenors.iter().map(|&t| (t, if t == 0.0 { 1.0 } else { p })).collect::<Vec<_>>())
    }

    /// Reads a CSV table with header `tenor,P`.
    pub fn from_csv<R: Read>(r: R) -> Result<Self, AppError> {
        let mut rd = csv::Reader::from_reader(r);
        let bad = |e: csv::Error| AppError::BadCurve(e.to_string());
        let header = rd.headers().map_err(bad)?.clone();
        if header.len() != 2 || header[0].trim() != "tenor" || header[1].trim() != "P" {
            return Err(AppError::BadCurve(format!("expected header tenor,P, got {:?}", header)));
        }
        let mut pts = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(bad)?;
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| AppError::BadCurve(format!("{s}: {e}")));
            pts.push((num(&rec[0])?, num(&rec[1])?));
        }
        DiscountCurve::new(&pts)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// `P(t, t+τ)`.
    pub fn discount(&self, tau: f64) -> Result<f64, AppError> {
        if !(tau >= 0.0) {
            return Err(AppError::OutOfRange(format!("tenor {tau}")));
        }
        let last = self.points.last().map_or(0.0, |p| p.0);
        if tau > last * (1.0 + 1e-12) + 1e-15 {
            return Err(AppError::CurveMissingTenor(tau));
        }
        let k = self.points.partition_point(|p| p.0 < tau);
        if k < self.points.len() && self.points[k].0 == tau {
            return Ok(self.points[k].1);
        }
        let k = k.clamp(1, self.points.len() - 1);
        let (t0, p0) = self.points[k - 1];
        let (t1, p1) = self.points[k];
        let w = (tau - t0) / (t1 - t0);
        Ok((p0.ln() * (1.0 - w) + p1.ln() * w).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_log_linearly() {
        let c = DiscountCurve::new(&[(1.0, 0.9), (2.0, 0.8)]).unwrap();
        assert_eq!(c.discount(0.0).unwrap(), 1.0);
        assert_eq!(c.discount(2.0).unwrap(), 0.8);
        assert!((c.discount(0.5).unwrap() - 0.9f64.sqrt()).abs() < 1e-15);
        assert!((c.discount(1.5).unwrap() - (0.9f64 * 0.8).sqrt()).abs() < 1e-15);
        assert_eq!(c.discount(2.5), Err(AppError::CurveMissingTenor(2.5)));
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn csv_and_warnings() {
        let c = DiscountCurve::from_csv("tenor,P\n1,0.9\n2,0.95\n".as_bytes()).unwrap();
        assert_eq!(c.warnings.len(), 1);
        assert!(DiscountCurve::from_csv("t,P\n1,0.9\n".as_bytes()).is_err());
        assert!(DiscountCurve::new(&[(1.0, 1.2)]).is_err());
    }
}
