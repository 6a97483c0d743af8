//! The `nlpencil` command line.
//!
//! Numeric settings come from the library defaults, then `NLPENCIL_*`
//! environment variables, then flags. Every table is CSV with a header row;
//! reports are pretty-printed JSON. Outputs go to `--out` (default `.`).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::asymptotics::{deviation_scan, write_scan_csv as write_asym_csv, AsymptoticKind, SectorSpec};
use crate::charfns::{scan, write_scan_csv, CharName, EvalPath};
use crate::config::Settings;
use crate::error::{Error, Result};
use crate::experiments::{
    example1_default, example2_default, identity_grid, identity_suite, random_problems, run_example1, run_example2,
    run_three_spectra, ThreeSpectraSetup,
};
use crate::inverse::{solve, InverseConfig};
use crate::model::{linspace, ProblemSpec};
use crate::spectra::{find_spectrum, Rect, SpectrumName};

#[derive(Debug, Parser)]
#[command(name = "nlpencil", version, about = "Quadratic pencil with nonlocal boundary forms: spectra, Weyl data, inverse problems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".", env = "NLPENCIL_OUT")]
    out: PathBuf,
    /// Worker threads; 0 uses the available parallelism.
    #[arg(long, global = true, default_value_t = 0, env = "NLPENCIL_THREADS")]
    threads: usize,
    /// Seed for every random choice (validate problems, Wronskian points).
    #[arg(long, global = true, default_value_t = 2024, env = "NLPENCIL_SEED")]
    seed: u64,
    /// ODE output grid intervals [default 1024].
    #[arg(long, global = true, env = "NLPENCIL_GRID_N")]
    grid_n: Option<usize>,
    /// ODE relative tolerance [default 1e-10].
    #[arg(long, global = true, env = "NLPENCIL_RTOL")]
    rtol: Option<f64>,
    /// ODE absolute tolerance [default 1e-10].
    #[arg(long, global = true, env = "NLPENCIL_ATOL")]
    atol: Option<f64>,
    /// Newton step tolerance for roots [default 1e-12].
    #[arg(long, global = true, env = "NLPENCIL_ROOT_TOL")]
    root_tol: Option<f64>,
    /// Root acceptance residual [default 1e-8].
    #[arg(long, global = true, env = "NLPENCIL_RESIDUAL_TOL")]
    residual_tol: Option<f64>,
    /// Inverse solver stopping tolerance [default 1e-8].
    #[arg(long, global = true, env = "NLPENCIL_SOLVER_TOL")]
    solver_tol: Option<f64>,
    /// Inverse solver iteration cap [default 50].
    #[arg(long, global = true, env = "NLPENCIL_MAX_ITER")]
    max_iter: Option<usize>,
}

impl Global {
    fn settings(&self) -> Result<Settings> {
        let mut s = Settings::default();
        if let Some(n) = self.grid_n {
            if n < crate::config::OdeOptions::MIN_GRID {
                return Err(Error::Config(format!(
                    "grid-n must be at least {}",
                    crate::config::OdeOptions::MIN_GRID
                )));
            }
            s.ode.grid_n = n;
        }
        let positive = |name: &str, v: f64| -> Result<f64> {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        if let Some(v) = self.rtol {
            s.ode.rtol = positive("rtol", v)?;
        }
        if let Some(v) = self.atol {
            s.ode.atol = positive("atol", v)?;
        }
        if let Some(v) = self.root_tol {
            s.spectra.root_tol = positive("root-tol", v)?;
        }
        if let Some(v) = self.residual_tol {
            s.spectra.residual_tol = positive("residual-tol", v)?;
        }
        if let Some(v) = self.solver_tol {
            s.solver.tol = positive("solver-tol", v)?;
        }
        if let Some(v) = self.max_iter {
            s.solver.max_iter = v;
        }
        Ok(s)
    }
}

/// A lambda lattice: `start stop count` on each axis.
#[derive(Debug, Args)]
struct GridArgs {
    /// Real axis: start stop count.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "COUNT"], allow_negative_numbers = true, default_values = ["-10", "10", "21"])]
    re: Vec<f64>,
    /// Imaginary axis: start stop count.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "COUNT"], allow_negative_numbers = true, default_values = ["-2", "2", "5"])]
    im: Vec<f64>,
}

impl GridArgs {
    fn lambdas(&self) -> Result<Vec<Complex64>> {
        let axis = |v: &[f64], name: &str| -> Result<Vec<f64>> {
            let n = v[2];
            if !(n >= 1.0 && n.fract() == 0.0) {
                return Err(Error::Config(format!("--{name} count must be a positive integer")));
            }
            Ok(linspace(v[0], v[1], n as usize))
        };
        let re = axis(&self.re, "re")?;
        let im = axis(&self.im, "im")?;
        Ok(im
            .iter()
            .flat_map(|&y| re.iter().map(move |&x| Complex64::new(x, y)))
            .collect())
    }
}

#[derive(Debug, Args)]
struct ProblemArg {
    /// Problem JSON; the free problem (p = q = 0, T = pi, U1 = y(0), U2 = y(pi/2)) when omitted.
    #[arg(long)]
    problem: Option<PathBuf>,
}

impl ProblemArg {
    fn load(&self) -> Result<ProblemSpec> {
        match &self.problem {
            Some(p) => ProblemSpec::load(p),
            None => Ok(ProblemSpec::free()),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Characteristic functions over a lambda grid -> scan.csv
    Scan {
        #[command(flatten)]
        problem: ProblemArg,
        /// Comma-separated names: omega, delta1, delta2, delta11, weylM, bigN.
        #[arg(long = "fn", value_delimiter = ',', default_value = "omega,delta1,delta2,delta11")]
        names: Vec<CharName>,
        /// Evaluation path for the entire functions: det_of_X or via_Z.
        #[arg(long)]
        path: Option<EvalPath>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Zeros of one characteristic function in a box -> spectrum_<name>.csv
    Spectrum {
        #[command(flatten)]
        problem: ProblemArg,
        /// omega, delta1, delta2, delta11 (or xi, lambda1, ...).
        #[arg(long = "fn")]
        name: SpectrumName,
        /// re_lo re_hi im_lo im_hi
        #[arg(long = "box", num_args = 4, value_names = ["RE_LO", "RE_HI", "IM_LO", "IM_HI"], allow_negative_numbers = true, required = true)]
        rect: Vec<f64>,
    },
    /// M and N over a lambda grid -> weyl.csv
    Weyl {
        #[command(flatten)]
        problem: ProblemArg,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Deviation from the leading asymptotics along rays -> asym.csv
    Asym {
        #[command(flatten)]
        problem: ProblemArg,
        /// Y1, Y2, Phi, v1, phi, v2, delta1, delta11.
        #[arg(long)]
        kind: AsymptoticKind,
        /// Ray arguments.
        #[arg(long, value_delimiter = ',', default_value = "0.3,1.5707963267948966,2.8415926535897931")]
        args: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
        radii: Vec<f64>,
        /// Sector half-opening: rays must satisfy delta <= arg <= pi - delta.
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        /// Evaluation point (ignored by delta1, delta11).
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        /// Derivative order: 0 for the value, 1 for the first derivative.
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        nu: u8,
    },
    /// Recover (p, q) from a run spec -> inverse_result.json, inverse_log.csv
    Inverse {
        /// Inverse run spec (JSON).
        #[arg(long)]
        config: PathBuf,
    },
    /// Scripted scenarios -> report.json plus tables
    Scenario {
        #[command(subcommand)]
        which: ScenarioCmd,
    },
    /// Identity suite on a problem (or on random problems) -> validate.json
    Validate {
        #[command(flatten)]
        problem: ProblemArg,
        /// Use this many random problems from --seed instead of --problem.
        #[arg(long)]
        random: Option<usize>,
        #[command(flatten)]
        grid: OptGrid,
    },
}

#[derive(Debug, Args)]
struct OptGrid {
    /// Real axis: start stop count [default: 20 points in [-10, 10] x 10 in [-5, 5]].
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "COUNT"], allow_negative_numbers = true, requires = "im")]
    re: Option<Vec<f64>>,
    /// Imaginary axis: start stop count.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "COUNT"], allow_negative_numbers = true, requires = "re")]
    im: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
enum ScenarioCmd {
    /// pi/2-periodic coefficients and their reflection.
    Example1,
    /// Coefficients vanishing near the ends, U2 = y(pi - alpha).
    Example2 {
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        alpha: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        alpha0: f64,
    },
    /// Recovery from three Dirichlet spectra.
    ThreeSpectra {
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        a: f64,
        /// Setup JSON replacing the standard truth.
        #[arg(long)]
        setup: Option<PathBuf>,
    },
}

fn rect_from(v: &[f64]) -> Result<Rect> {
    Rect::new(v[0], v[1], v[2], v[3])
}

fn create(dir: &Path, name: &str) -> Result<std::fs::File> {
    Ok(std::fs::File::create(dir.join(name))?)
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    std::fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// `Ok(true)` when every check passed.
fn run(cli: Cli) -> Result<bool> {
    let settings = cli.global.settings()?;
    let out = &cli.global.out;
    std::fs::create_dir_all(out)?;
    match cli.command {
        Command::Scan {
            problem,
            names,
            path,
            grid,
        } => {
            let problem = problem.load()?;
            let rows = scan(&problem, &names, path, &grid.lambdas()?, &settings.ode)?;
            write_scan_csv(&rows, create(out, "scan.csv")?)?;
            println!("scan: {} rows", rows.len());
            Ok(true)
        }
        Command::Spectrum { problem, name, rect } => {
            let problem = problem.load()?;
            let s = find_spectrum(&problem, name, rect_from(&rect)?, &settings.spectra, &settings.ode)?;
            s.write_csv(create(out, &format!("spectrum_{}.csv", name.as_str()))?)?;
            for r in &s.roots {
                println!("{} {:.10} {:+.10}i (multiplicity {})", name.as_str(), r.lambda.re, r.lambda.im, r.multiplicity);
            }
            for c in &s.unresolved {
                println!("unresolved cluster in {} ({} zeros)", c.rect, c.count);
            }
            Ok(s.unresolved.is_empty())
        }
        Command::Weyl { problem, grid } => {
            let problem = problem.load()?;
            let rows = scan(&problem, &[CharName::WeylM, CharName::BigN], None, &grid.lambdas()?, &settings.ode)?;
            write_scan_csv(&rows, create(out, "weyl.csv")?)?;
            println!("weyl: {} rows, {} poles", rows.len(), rows.iter().filter(|r| r.value.is_none()).count());
            Ok(true)
        }
        Command::Asym {
            problem,
            kind,
            args,
            radii,
            delta,
            x,
            nu,
        } => {
            let problem = problem.load()?;
            let mut w = csv::Writer::from_writer(create(out, "asym.csv")?);
            w.write_record(["kind", "arg", "radius", "deviation"])?;
            for arg in args {
                let sector = SectorSpec::new(delta, radii.clone(), arg)?;
                let rows = deviation_scan(&problem, kind, &sector, x, nu, &settings.ode)?;
                write_asym_csv(kind, arg, &rows, &mut w)?;
            }
            w.flush()?;
            println!("asym: written");
            Ok(true)
        }
        Command::Inverse { config } => {
            let mut config = InverseConfig::load(&config)?;
            if cli.global.solver_tol.is_some() || cli.global.max_iter.is_some() {
                config.solver.tol = settings.solver.tol;
                config.solver.max_iter = settings.solver.max_iter;
            }
            let result = solve(&config, &settings.ode, &settings.spectra)?;
            write_json(out, "inverse_result.json", &result)?;
            result.write_log_csv(create(out, "inverse_log.csv")?)?;
            println!(
                "inverse: residual {:e} after {} iterations, params {:?}",
                result.final_residual, result.iterations, result.params
            );
            Ok(result.converged)
        }
        Command::Scenario { which } => {
            let mut report = match which {
                ScenarioCmd::Example1 => run_example1(&example1_default(), &settings, Some(out))?,
                ScenarioCmd::Example2 { alpha, alpha0 } => {
                    run_example2(alpha, alpha0, &example2_default(), &settings, Some(out))?
                }
                ScenarioCmd::ThreeSpectra { a, setup } => {
                    let setup = match setup {
                        Some(p) => {
                            let s: ThreeSpectraSetup = serde_json::from_str(&std::fs::read_to_string(p)?)?;
                            s
                        }
                        None => ThreeSpectraSetup::standard(a),
                    };
                    run_three_spectra(&setup, &settings, Some(out))?
                }
            };
            report.artifacts.sort();
            for c in &report.checks {
                println!("{} {}: {:e}", if c.pass { "pass" } else { "FAIL" }, c.name, c.value);
            }
            Ok(report.passed())
        }
        Command::Validate { problem, random, grid } => {
            let problems = match random {
                Some(n) if n > 0 => random_problems(cli.global.seed, n, std::f64::consts::PI)?,
                Some(_) => return Err(Error::Config("--random needs at least one problem".into())),
                None => vec![problem.load()?],
            };
            let lambdas = match (&grid.re, &grid.im) {
                (Some(re), Some(im)) => GridArgs {
                    re: re.clone(),
                    im: im.clone(),
                }
                .lambdas()?,
                _ => identity_grid(),
            };
            let report = identity_suite(&problems, &lambdas, cli.global.seed, &settings)?;
            write_json(out, "validate.json", &report)?;
            for s in &report.stats {
                let ok = s.max_rel_error_conditioned <= report.tol;
                println!(
                    "{} {}: max relative error {:e} ({:e} over well-conditioned samples, {} ill-conditioned)",
                    if ok { "pass" } else { "FAIL" },
                    s.identity,
                    s.max_rel_error,
                    s.max_rel_error_conditioned,
                    s.ill_conditioned
                );
            }
            Ok(report.passed_conditioned())
        }
    }
}

/// Parses `argv` and runs the subcommand. Returns the process exit code:
/// 0 on success, 1 when a check fails, 2 for usage or configuration errors.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let threads = cli.global.threads;
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return 2;
        }
    };
    match pool.install(|| run(cli)) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}
