//! Euler–Maruyama simulation of the jump SDE with per-path random streams.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::polyalg::{Polynomial, StateSpace};
use crate::specmodel::{min_eigenvalue, wright_fisher, LevyTriplet, EXCLUDE_TOL};

/// Distance to the pole locus below which the diffusion correction is applied.
pub const POLE_EPS: f64 = 1e-8;
/// Cap on substeps within one base step.
pub const MAX_SUBSTEPS: usize = 1_000_000;
// Floor for boundary-controlled substeps, as a fraction of `dt`.
const MIN_SUBSTEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("unsupported for simulation: {0}")]
    UnsupportedForSimulation(String),
    #[error("jump intensity exploded on path {path} near t = {time}")]
    ExplodedIntensity { path: usize, time: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("matrix too indefinite for a square root (min eigenvalue {0:e})")]
    TooIndefinite(f64),
    #[error("time {0} is not on the stored grid")]
    TimeNotOnGrid(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Initial state, full coordinates.
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Cap on the expected number of jumps per substep.
    pub max_jump_budget: f64,
    /// Pre-projection excursions beyond this distance are counted.
    pub boundary_tol: f64,
    /// Near the boundary, substeps are cut so that the diffusion standard deviation
    /// stays below this fraction of the distance to the boundary. `None` disables it.
    pub boundary_step: Option<f64>,
    /// Store every `record_every`-th base step (the final time is always stored).
    pub record_every: usize,
    pub record_jumps: bool,
    pub threads: Option<usize>,
}

impl SimConfig {
    pub fn new(x0: Vec<f64>, horizon: f64, dt: f64, n_paths: usize, seed: u64) -> Self {
        SimConfig {
            x0,
            horizon,
            dt,
            n_paths,
            seed,
            max_jump_budget: 0.1,
            boundary_tol: 1e-6,
            boundary_step: Some(0.2),
            record_every: 1,
            record_jumps: false,
            threads: None,
        }
    }
}

/// A realized jump: state just before it and the displacement `γ(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub path: usize,
    pub time: f64,
    pub before: Vec<f64>,
    pub jump: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub space: StateSpace,
    pub times: Vec<f64>,
    n_paths: usize,
    states: Vec<f64>,
    pub jump_counts: Vec<u64>,
    /// Largest pre-projection distance outside the state space.
    pub max_violation: f64,
    /// Substeps whose pre-projection distance exceeded `boundary_tol`.
    pub violation_steps: u64,
    pub total_substeps: u64,
    /// Smallest coordinate of each path over all substeps, after projection.
    pub path_min: Vec<f64>,
    /// Largest `|Σx_i − 1|` over all substeps (simplex only).
    pub max_sum_error: f64,
    pub jumps: Vec<JumpEvent>,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// State of `path` at the `ti`-th stored time.
    pub fn state(&self, path: usize, ti: usize) -> &[f64] {
        let d = self.dim();
        let off = (path * self.times.len() + ti) * d;
        &self.states[off..off + d]
    }

    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// Writes `time,path_id,x_1..x_d`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["time".to_string(), "path_id".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("x_{i}")));
        out.write_record(&header)?;
        for p in 0..self.n_paths {
            for (ti, t) in self.times.iter().enumerate() {
                let mut row = vec![t.to_string(), p.to_string()];
                row.extend(self.state(p, ti).iter().map(|v| v.to_string()));
                out.write_record(&row)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Sample mean and standard error of `p(X_t)` across paths.
pub fn empirical_moment(paths: &PathSet, p: &Polynomial, t: f64) -> Result<(f64, f64), SimError> {
    let ti = paths.time_index(t).ok_or(SimError::TimeNotOnGrid(t))?;
    let n = paths.space.n_free();
    let vals: Vec<f64> = (0..paths.n_paths).map(|k| p.eval(&paths.state(k, ti)[..n])).collect();
    let m = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / m;
    if vals.len() < 2 {
        return Ok((mean, 0.0));
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok((mean, (var / m).sqrt()))
}

/// Symmetric PSD square root; eigenvalues below zero are clamped.
pub fn sqrt_psd(a: &DMatrix<f64>, reg: f64) -> Result<DMatrix<f64>, SimError> {
    let n = a.nrows();
    let sym = (a + a.transpose()) * 0.5;
    let scale = sym.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eig = sym.symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -(reg.max(1e-8 * scale)) {
        return Err(SimError::TooIndefinite(min));
    }
    let mut out = DMatrix::zeros(n, n);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l <= 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        out += v * v.transpose() * l.sqrt();
    }
    Ok(out)
}

// Dense term list for fast evaluation in the inner loop.
#[derive(Clone)]
struct FastPoly {
    terms: Vec<(Vec<(usize, i32)>, f64)>,
}

impl FastPoly {
    fn new(p: &Polynomial) -> Self {
        let terms = p
            .terms()
            .map(|(k, c)| {
                let f = k.exponents().iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| (i, e as i32)).collect();
                (f, c)
            })
            .collect();
        FastPoly { terms }
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn eval(&self, z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(f, c)| c * f.iter().map(|&(i, e)| if e == 1 { z[i] } else { z[i].powi(e) }).product::<f64>())
            .sum()
    }
}

struct FastJump {
    num: FastPoly,
    den: FastPoly,
    excluded: Option<FastPoly>,
    // dirs[m][i]
    dirs: Vec<Vec<FastPoly>>,
    points: Vec<Vec<f64>>,
    cum: Vec<f64>,
    mass: f64,
    mean_y: Vec<f64>,
}

impl FastJump {
    fn lambda(&self, z: &[f64]) -> f64 {
        if let Some(e) = &self.excluded {
            if e.eval(z).abs() <= EXCLUDE_TOL {
                return 0.0;
            }
        }
        (self.num.eval(z) / self.den.eval(z)).max(0.0)
    }

    fn gamma(&self, z: &[f64], y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (g, &ym) in self.dirs.iter().zip(y) {
            if ym == 0.0 {
                continue;
            }
            for (o, gi) in out.iter_mut().zip(g) {
                *o += ym * gi.eval(z);
            }
        }
    }

    fn pick(&self, u: f64) -> &[f64] {
        let target = u * self.mass;
        let k = self.cum.partition_point(|&c| c <= target).min(self.points.len() - 1);
        &self.points[k]
    }
}

enum Factor {
    Scalar,
    // pairs (i, j, α_ij)
    WrightFisher(Vec<(usize, usize, f64)>),
    General,
}

struct Model {
    space: StateSpace,
    d: usize,
    n: usize,
    a: Vec<Vec<FastPoly>>,
    b: Vec<FastPoly>,
    jumps: Vec<FastJump>,
    corrections: Vec<(FastPoly, Vec<Vec<FastPoly>>)>,
    factor: Factor,
}

impl Model {
    fn new(t: &LevyTriplet) -> Result<Self, SimError> {
        let space = t.space;
        let d = space.dim();
        let mut jumps = Vec::new();
        for (k, j) in t.jumps.iter().enumerate() {
            if j.is_null() {
                continue;
            }
            let Some(atoms) = j.mu.atom_list() else {
                return Err(SimError::UnsupportedForSimulation(format!("jump {} has a moment-table measure", k + 1)));
            };
            let atoms: Vec<_> = atoms.iter().filter(|a| a.weight > 0.0).collect();
            if atoms.iter().any(|a| !a.weight.is_finite() || a.point.iter().any(|v| !v.is_finite())) {
                return Err(SimError::UnsupportedForSimulation(format!("jump {} has a non-finite atom", k + 1)));
            }
            if atoms.is_empty() {
                continue;
            }
            let mut cum = Vec::with_capacity(atoms.len());
            let mut s = 0.0;
            for a in &atoms {
                s += a.weight;
                cum.push(s);
            }
            let dim = j.mu.dim();
            let mean_y = (0..dim).map(|m| atoms.iter().map(|a| a.weight * a.point[m]).sum()).collect();
            jumps.push(FastJump {
                num: FastPoly::new(&j.lambda.num),
                den: FastPoly::new(&j.lambda.den),
                excluded: j.lambda.excluded.as_ref().map(FastPoly::new),
                dirs: j.gamma.directions.iter().map(|g| g.iter().map(FastPoly::new).collect()).collect(),
                points: atoms.iter().map(|a| a.point.clone()).collect(),
                cum,
                mass: s,
                mean_y,
            });
        }
        let factor = match space {
            StateSpace::Interval => Factor::Scalar,
            StateSpace::Simplex(_) => wf_pairs(t).map_or(Factor::General, Factor::WrightFisher),
        };
        Ok(Model {
            space,
            d,
            n: space.n_free(),
            a: t.diffusion.iter().map(|r| r.iter().map(FastPoly::new).collect()).collect(),
            b: t.drift.iter().map(FastPoly::new).collect(),
            jumps,
            corrections: t
                .pole_corrections
                .iter()
                .map(|c| (FastPoly::new(&c.locus), c.matrix.iter().map(|r| r.iter().map(FastPoly::new).collect()).collect()))
                .collect(),
            factor,
        })
    }

    fn diffusion(&self, z: &[f64]) -> (Vec<Vec<f64>>, bool) {
        let mut a: Vec<Vec<f64>> =
            self.a.iter().map(|r| r.iter().map(|p| if p.is_zero() { 0.0 } else { p.eval(z) }).collect()).collect();
        let mut corrected = false;
        for (locus, m) in &self.corrections {
            if locus.eval(z).abs() < POLE_EPS {
                corrected = true;
                for (row, mrow) in a.iter_mut().zip(m) {
                    for (v, p) in row.iter_mut().zip(mrow) {
                        *v += p.eval(z);
                    }
                }
            }
        }
        (a, corrected)
    }

    // Adds σ(x)·ξ·√h to `x`.
    fn diffuse<R: Rng>(&self, x: &mut [f64], z: &[f64], h: f64, rng: &mut R) -> Result<(), SimError> {
        let sh = h.sqrt();
        match &self.factor {
            Factor::Scalar => {
                let (a, _) = self.diffusion(z);
                if a[0][0] > 0.0 {
                    let w: f64 = rng.sample(StandardNormal);
                    x[0] += a[0][0].sqrt() * sh * w;
                }
                Ok(())
            }
            Factor::WrightFisher(pairs) if self.corrections.iter().all(|(l, _)| l.eval(z).abs() >= POLE_EPS) => {
                for &(i, j, al) in pairs {
                    let v = al * x[i].max(0.0) * x[j].max(0.0);
                    let w: f64 = rng.sample(StandardNormal);
                    if v > 0.0 {
                        let s = v.sqrt() * sh * w;
                        x[i] += s;
                        x[j] -= s;
                    }
                }
                Ok(())
            }
            _ => {
                let (a, _) = self.diffusion(z);
                let m = DMatrix::from_fn(self.d, self.d, |i, j| a[i][j]);
                let s = sqrt_psd(&m, 1e-12)?;
                let w: Vec<f64> = (0..self.d).map(|_| rng.sample(StandardNormal)).collect();
                for i in 0..self.d {
                    x[i] += sh * (0..self.d).map(|j| s[(i, j)] * w[j]).sum::<f64>();
                }
                Ok(())
            }
        }
    }

    // Largest h with √(a_kk h) ≤ frac·dist_k for every coordinate.
    fn boundary_step(&self, x: &[f64], z: &[f64], frac: f64) -> f64 {
        let mut h = f64::INFINITY;
        for k in 0..self.d {
            let p = &self.a[k][k];
            if p.is_zero() {
                continue;
            }
            let v = p.eval(z);
            if v <= 0.0 {
                continue;
            }
            let dist = match self.space {
                StateSpace::Interval => x[0].min(1.0 - x[0]),
                StateSpace::Simplex(_) => x[k],
            }
            .max(0.0);
            h = h.min(frac * frac * dist * dist / v);
        }
        h
    }

    fn project(&self, x: &mut [f64]) -> f64 {
        match self.space {
            StateSpace::Interval => {
                let v = (-x[0]).max(x[0] - 1.0).max(0.0);
                x[0] = x[0].clamp(0.0, 1.0);
                v
            }
            StateSpace::Simplex(_) => {
                let mut v: f64 = 0.0;
                for c in x.iter_mut() {
                    v = v.max(-*c);
                    *c = c.max(0.0);
                }
                let s: f64 = x.iter().sum();
                if s > 0.0 {
                    x.iter_mut().for_each(|c| *c /= s);
                }
                v
            }
        }
    }
}

// α_ij when `a` is exactly of Wright–Fisher form.
fn wf_pairs(t: &LevyTriplet) -> Option<Vec<(usize, usize, f64)>> {
    let d = t.space.dim();
    let n = d - 1;
    let mut alpha = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            let mid: Vec<f64> = (0..n).map(|k| if k == i || k == j { 0.5 } else { 0.0 }).collect();
            alpha[i][j] = -4.0 * t.diffusion[i][j].eval(&mid);
        }
    }
    if alpha.iter().flatten().any(|&a| a < 0.0) {
        return None;
    }
    let wf = wright_fisher(&alpha, &vec![vec![0.0; d]; d]);
    let scale = t.diffusion.iter().flatten().fold(1.0f64, |m, p| m.max(p.max_abs_coeff()));
    let same = (0..d).all(|i| (0..d).all(|j| t.diffusion[i][j].approx_eq(&wf.diffusion[i][j], 1e-12 * scale)));
    same.then(|| {
        let mut pairs = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                if alpha[i][j] > 0.0 {
                    pairs.push((i, j, alpha[i][j]));
                }
            }
        }
        pairs
    })
}

struct PathOut {
    states: Vec<f64>,
    jumps: u64,
    max_violation: f64,
    violation_steps: u64,
    substeps: u64,
    min: f64,
    sum_error: f64,
    events: Vec<JumpEvent>,
}

fn run_path(model: &Model, cfg: &SimConfig, steps: usize, record: &[usize], path: usize) -> Result<PathOut, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(path as u64);
    let d = model.d;
    let n = model.n;
    let mut x = cfg.x0.clone();
    let mut out = PathOut {
        states: Vec::with_capacity(record.len() * d),
        jumps: 0,
        max_violation: 0.0,
        violation_steps: 0,
        substeps: 0,
        min: x.iter().copied().fold(f64::INFINITY, f64::min),
        sum_error: 0.0,
        events: Vec::new(),
    };
    out.states.extend_from_slice(&x);
    let mut rec = record.iter().peekable();
    rec.next_if_eq(&&0);
    let mut rates = vec![0.0; model.jumps.len()];
    let mut buf = vec![0.0; d];
    let mut t = 0.0;
    for step in 1..=steps {
        let target = if step == steps { cfg.horizon } else { step as f64 * cfg.dt };
        let mut sub = 0usize;
        while target - t > 1e-12 * cfg.dt {
            sub += 1;
            if sub > MAX_SUBSTEPS {
                return Err(SimError::ExplodedIntensity { path, time: t });
            }
            let z = x[..n].to_vec();
            let mut total = 0.0;
            for (r, j) in rates.iter_mut().zip(&model.jumps) {
                *r = j.lambda(&z) * j.mass;
                total += *r;
            }
            if !total.is_finite() {
                return Err(SimError::ExplodedIntensity { path, time: t });
            }
            let mut h = target - t;
            if total > 0.0 {
                h = h.min(cfg.max_jump_budget / total);
            }
            if let Some(frac) = cfg.boundary_step {
                h = h.min(model.boundary_step(&x, &z, frac).max(MIN_SUBSTEP * cfg.dt));
            }
            // compensated drift
            let mut drift: Vec<f64> = model.b.iter().map(|p| p.eval(&z)).collect();
            for (j, &r) in model.jumps.iter().zip(&rates) {
                if r > 0.0 {
                    j.gamma(&z, &j.mean_y, &mut buf);
                    let l = r / j.mass;
                    for (dv, g) in drift.iter_mut().zip(&buf) {
                        *dv -= l * g;
                    }
                }
            }
            for (xi, bi) in x.iter_mut().zip(&drift) {
                *xi += bi * h;
            }
            model.diffuse(&mut x, &z, h, &mut rng)?;
            let v = model.project(&mut x);
            out.substeps += 1;
            out.max_violation = out.max_violation.max(v);
            if v > cfg.boundary_tol {
                out.violation_steps += 1;
            }
            if total > 0.0 {
                let count: f64 = Poisson::new(total * h).map_or(0.0, |p| p.sample(&mut rng));
                let mut stamps = Vec::new();
                if cfg.record_jumps && count > 0.0 {
                    stamps = (0..count as u64).map(|_| t + rng.random::<f64>() * h).collect();
                    stamps.sort_by(f64::total_cmp);
                }
                for c in 0..count as usize {
                    let zc = x[..n].to_vec();
                    let mut u = rng.random::<f64>() * total;
                    let mut k = 0;
                    while k + 1 < rates.len() && u >= rates[k] {
                        u -= rates[k];
                        k += 1;
                    }
                    let j = &model.jumps[k];
                    let y = j.pick(rng.random::<f64>());
                    j.gamma(&zc, y, &mut buf);
                    if cfg.record_jumps {
                        out.events.push(JumpEvent {
                            path,
                            time: stamps[c],
                            before: x.clone(),
                            jump: buf.clone(),
                        });
                    }
                    for (xi, g) in x.iter_mut().zip(&buf) {
                        *xi += g;
                    }
                    model.project(&mut x);
                    out.jumps += 1;
                }
            }
            out.min = x.iter().copied().fold(out.min, f64::min);
            if d > 1 {
                out.sum_error = out.sum_error.max((x.iter().sum::<f64>() - 1.0).abs());
            }
            t += h;
        }
        t = target;
        if rec.next_if_eq(&&step).is_some() {
            out.states.extend_from_slice(&x);
        }
    }
    Ok(out)
}

/// Simulates `cfg.n_paths` independent paths. Results do not depend on the number of workers.
pub fn simulate(t: &LevyTriplet, cfg: &SimConfig) -> Result<PathSet, SimError> {
    if cfg.n_paths == 0 {
        return Err(SimError::Config("number of paths must be positive".into()));
    }
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(SimError::Config("dt must be positive".into()));
    }
    if !(cfg.horizon >= 0.0 && cfg.horizon.is_finite()) {
        return Err(SimError::Config("horizon must be nonnegative".into()));
    }
    if !(cfg.max_jump_budget > 0.0) {
        return Err(SimError::Config("jump budget must be positive".into()));
    }
    if cfg.x0.len() != t.space.dim() || !t.space.contains(&cfg.x0, 1e-12) {
        return Err(SimError::Config(format!("initial state {:?} is not in {}", cfg.x0, t.space)));
    }
    let model = Model::new(t)?;
    let steps = (cfg.horizon / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    let every = cfg.record_every.max(1);
    let record: Vec<usize> = (0..=steps).filter(|s| s % every == 0 || *s == steps).collect();
    let times: Vec<f64> =
        record.iter().map(|&s| if s == steps { cfg.horizon } else { s as f64 * cfg.dt }).collect();
    let mut x0 = cfg.x0.clone();
    model.project(&mut x0);
    let cfg = SimConfig { x0, ..cfg.clone() };
    let work = || -> Result<Vec<PathOut>, SimError> {
        (0..cfg.n_paths).into_par_iter().map(|p| run_path(&model, &cfg, steps, &record, p)).collect()
    };
    let outs = match cfg.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| SimError::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let mut ps = PathSet {
        space: t.space,
        times,
        n_paths: cfg.n_paths,
        states: Vec::with_capacity(cfg.n_paths * record.len() * t.space.dim()),
        jump_counts: Vec::with_capacity(cfg.n_paths),
        max_violation: 0.0,
        violation_steps: 0,
        total_substeps: 0,
        path_min: Vec::with_capacity(cfg.n_paths),
        max_sum_error: 0.0,
        jumps: Vec::new(),
    };
    for o in outs {
        ps.states.extend(o.states);
        ps.jump_counts.push(o.jumps);
        ps.max_violation = ps.max_violation.max(o.max_violation);
        ps.violation_steps += o.violation_steps;
        ps.total_substeps += o.substeps;
        ps.path_min.push(o.min);
        ps.max_sum_error = ps.max_sum_error.max(o.sum_error);
        ps.jumps.extend(o.events);
    }
    Ok(ps)
}

/// Smallest eigenvalue of the diffusion matrix at a point (free coordinates).
pub fn diffusion_min_eigenvalue(t: &LevyTriplet, z: &[f64]) -> f64 {
    min_eigenvalue(&t.diffusion_at(z, POLE_EPS))
}
