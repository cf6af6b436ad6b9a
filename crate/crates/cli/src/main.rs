//! `pjd`: validate, classify, compute moments, simulate and price from spec files.
//!
//! Exit codes: 0 success, 1 domain error or failed check, 2 parse error, 3 unsupported.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pjd_core::apps::{price_table, spt_check_interior, write_price_csv, AppError, DiscountCurve};
use pjd_core::generator::{build_matrix, classify, GenError};
use pjd_core::moments::{write_curve_csv, MomentEngine, MomentError};
use pjd_core::polyalg::{parse_expr, PolyError};
use pjd_core::simulate::{simulate, SimConfig, SimError};
use pjd_core::specfile::{parse_number, SpecDocument, SpecError};
use pjd_core::specmodel::{validate, validate_typed, ModelError, TypedSpec, DEFAULT_GRID};

#[derive(Parser)]
#[command(name = "pjd", version, about = "Polynomial jump-diffusions on [0,1] and the simplex")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the admissibility conditions; prints "condition location magnitude" per violation.
    Validate {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
    /// Print the type tag and recovered parameters.
    Classify { file: PathBuf },
    /// Exact moment E[p(X_T) | X_0 = x0].
    Moment {
        file: PathBuf,
        #[arg(long)]
        poly: String,
        /// Initial state, comma separated full coordinates.
        #[arg(long)]
        x0: String,
        #[arg(long = "T", conflicts_with = "t_grid")]
        t: Option<String>,
        /// Comma separated horizons.
        #[arg(long = "T-grid")]
        t_grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Euler paths as CSV (time,path_id,x_1..x_d).
    Simulate {
        file: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Defaultable bond prices as CSV (tenor,P,F,Ptilde).
    Price {
        file: PathBuf,
        #[arg(long = "S")]
        s: String,
        /// Comma separated tenors T − t.
        #[arg(long)]
        tenors: String,
        /// CSV with header tenor,P; without it P = 1.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interior check of an SPT model, optionally followed by a simulation.
    Spt {
        file: PathBuf,
        #[arg(long)]
        simulate: bool,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generator matrix on the monomial basis of the given degree, as CSV.
    Matrix {
        file: PathBuf,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    x0: Option<String>,
    #[arg(long = "T", default_value = "1")]
    t: String,
    #[arg(long, default_value = "0.001")]
    dt: String,
    #[arg(long, default_value_t = 100)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on the expected number of jumps per substep.
    #[arg(long, default_value = "0.1")]
    budget: String,
    #[arg(long, default_value = "1e-6")]
    boundary_tol: String,
    /// Near-boundary step control: diffusion sd per substep as a fraction of the distance; 0 disables.
    #[arg(long, default_value = "0.2")]
    boundary_step: String,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    /// Worker cap; defaults to PJD_THREADS when set.
    #[arg(long)]
    threads: Option<usize>,
}

struct Failure {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> Failure {
    Failure { code, msg: msg.to_string() }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        let code = if matches!(e, SpecError::Io(_)) { 1 } else { 2 };
        fail(code, e)
    }
}

impl From<PolyError> for Failure {
    fn from(e: PolyError) -> Self {
        fail(if matches!(e, PolyError::Parse(_)) { 2 } else { 1 }, e)
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Type4Unsupported => fail(3, e),
            ModelError::Poly(p) => p.into(),
            _ => fail(1, e),
        }
    }
}

impl From<GenError> for Failure {
    fn from(e: GenError) -> Self {
        match e {
            GenError::Model(m) => m.into(),
            GenError::Unclassifiable(_) | GenError::AssumptionAViolated(_) | GenError::NotAffineJumpSizes(_) => {
                fail(3, format!("unclassifiable: {e}"))
            }
            _ => fail(1, e),
        }
    }
}

impl From<MomentError> for Failure {
    fn from(e: MomentError) -> Self {
        match e {
            MomentError::Model(m) => m.into(),
            _ => fail(1, e),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        fail(if matches!(e, SimError::UnsupportedForSimulation(_)) { 3 } else { 1 }, e)
    }
}

impl From<AppError> for Failure {
    fn from(e: AppError) -> Self {
        match e {
            AppError::Model(m) => m.into(),
            AppError::Moment(m) => m.into(),
            AppError::Gen(g) => g.into(),
            AppError::BadCurve(_) => fail(2, e),
            _ => fail(1, e),
        }
    }
}

// A closed pipe on stdout ends the command quietly.
impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return fail(0, "");
        }
        fail(1, e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        if let csv::ErrorKind::Io(io) = e.kind() {
            if io.kind() == io::ErrorKind::BrokenPipe {
                return fail(0, "");
            }
        }
        fail(1, e)
    }
}

fn number(s: &str, what: &str) -> Result<f64, Failure> {
    parse_number(s).map_err(|m| fail(2, format!("--{what}: {m}")))
}

fn numbers(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',').map(|x| number(x, what)).collect()
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| fail(1, format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sim_config(doc: &SpecDocument, a: &SimArgs) -> Result<SimConfig, Failure> {
    let x0 = match &a.x0 {
        Some(s) => numbers(s, "x0")?,
        None => {
            // barycentre or midpoint
            let d = doc.space.dim();
            if d == 1 {
                vec![0.5]
            } else {
                vec![1.0 / d as f64; d]
            }
        }
    };
    let threads = match a.threads {
        Some(k) => Some(k),
        None => match std::env::var("PJD_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| fail(2, format!("PJD_THREADS={v:?} is not a count")))?),
            Err(_) => None,
        },
    };
    let mut cfg = SimConfig::new(x0, number(&a.t, "T")?, number(&a.dt, "dt")?, a.paths, a.seed);
    cfg.max_jump_budget = number(&a.budget, "budget")?;
    cfg.boundary_tol = number(&a.boundary_tol, "boundary-tol")?;
    let frac = number(&a.boundary_step, "boundary-step")?;
    cfg.boundary_step = (frac > 0.0).then_some(frac);
    cfg.record_every = a.record_every;
    cfg.threads = threads;
    Ok(cfg)
}

fn load(file: &Path) -> Result<SpecDocument, Failure> {
    Ok(SpecDocument::read(file)?)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.cmd {
        Cmd::Validate { file, grid } => {
            let doc = load(&file)?;
            let rep = match doc.typed_spec() {
                Some(TypedSpec::IntervalType4 { .. }) => return Err(ModelError::Type4Unsupported.into()),
                Some(ts) => validate_typed(ts, grid),
                None => validate(&doc.triplet()?, grid),
            };
            for v in &rep.violations {
                writeln!(io::stdout(), "{v}")?;
            }
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(m) = doc.spt_model() {
                let r = spt_check_interior(m)?;
                if !r.ok {
                    writeln!(io::stdout(), "spt-interior margin {}", r.min_margin())?;
                    return Ok(1);
                }
            }
            if rep.ok {
                writeln!(io::stdout(), "ok")?;
                Ok(0)
            } else {
                Ok(1)
            }
        }
        Cmd::Classify { file } => {
            let doc = load(&file)?;
            let tag = classify(&doc.triplet()?)?;
            let params = tag.params();
            let summary: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(io::stdout(), "{} {}", tag.name(), summary.join(" "))?;
            for s in summary {
                writeln!(io::stdout(), "{s}")?;
            }
            Ok(0)
        }
        Cmd::Moment { file, poly, x0, t, t_grid, out } => {
            let doc = load(&file)?;
            let tr = doc.triplet()?;
            let p = parse_expr(&poly, tr.space)?;
            let x0 = numbers(&x0, "x0")?;
            let engine = MomentEngine::new(&tr, p.degree() as usize)?;
            match (t, t_grid) {
                (Some(t), None) => {
                    let h = number(&t, "T")?;
                    let v = engine.moment(&p, &x0, h)?;
                    if out.is_some() {
                        write_curve_csv(output(&out)?, &[h], &[v])?;
                    } else {
                        writeln!(io::stdout(), "{v}")?;
                    }
                }
                (None, Some(g)) => {
                    let hs = numbers(&g, "T-grid")?;
                    let vs = engine.curve(&p, &x0, &hs)?;
                    write_curve_csv(output(&out)?, &hs, &vs)?;
                }
                _ => return Err(fail(2, "give exactly one of --T and --T-grid")),
            }
            Ok(0)
        }
        Cmd::Simulate { file, sim, out } => {
            let doc = load(&file)?;
            let tr = doc.triplet()?;
            let cfg = sim_config(&doc, &sim)?;
            let ps = simulate(&tr, &cfg)?;
            ps.write_csv(output(&out)?)?;
            if ps.violation_steps > 0 {
                eprintln!(
                    "note: {} of {} substeps left the state space by more than {} before projection",
                    ps.violation_steps, ps.total_substeps, cfg.boundary_tol
                );
            }
            Ok(0)
        }
        Cmd::Price { file, s, tenors, curve, out } => {
            let doc = load(&file)?;
            let model = doc.recovery_model().ok_or_else(|| fail(2, "document has no recovery application"))??;
            let tenors = numbers(&tenors, "tenors")?;
            let curve = match curve {
                Some(p) => DiscountCurve::from_csv(File::open(&p).map_err(|e| fail(1, format!("{}: {e}", p.display())))?)?,
                None => DiscountCurve::flat(1.0, &tenors)?,
            };
            for w in &curve.warnings {
                eprintln!("warning: {w}");
            }
            let rows = price_table(&curve, &model, number(&s, "S")?, &tenors)?;
            write_price_csv(output(&out)?, &rows)?;
            Ok(0)
        }
        Cmd::Spt { file, simulate: run_sim, sim, out } => {
            let doc = load(&file)?;
            let m = doc.spt_model().ok_or_else(|| fail(2, "document has no spt application"))?;
            let rep = spt_check_interior(m)?;
            for (j, k, margin) in &rep.margins {
                writeln!(io::stdout(), "margin j={} k={} {margin}", j + 1, k + 1)?;
            }
            writeln!(io::stdout(), "interior {}", if rep.ok { "ok" } else { "fail" })?;
            if run_sim {
                let tr = doc.triplet()?;
                let cfg = sim_config(&doc, &sim)?;
                let ps = simulate(&tr, &cfg)?;
                let min_coord = ps.path_min.iter().copied().fold(f64::INFINITY, f64::min);
                let sum_err = ps.max_sum_error;
                writeln!(io::stdout(), "min_coordinate {min_coord}")?;
                writeln!(io::stdout(), "max_sum_error {sum_err}")?;
                if out.is_some() {
                    ps.write_csv(output(&out)?)?;
                }
            }
            Ok(if rep.ok { 0 } else { 1 })
        }
        Cmd::Matrix { file, degree, out } => {
            let doc = load(&file)?;
            let m = build_matrix(&doc.triplet()?, degree)?;
            m.write_csv(output(&out)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if !f.msg.is_empty() {
                eprintln!("error: {}", f.msg);
            }
            ExitCode::from(f.code)
        }
    }
}
