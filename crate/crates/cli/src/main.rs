//! `chronospline` command-line front end.

use chronospline::conditioning::{condition_sweep, linspace, rho_sweep, Family};
use chronospline::experiments::{num, parse_override, run_experiment, ExperimentError, ExperimentSpec};
use chronospline::ode::{solve_ode, OdeProblem, OdeRoute};
use chronospline::selfcheck::{selfcheck, Injection, SelfcheckOptions, MODULES};
use chronospline::spacetime::{error_norms, solve_space_time, WaveError};
use chronospline::symbol::{cfl_constants, theta_grid, SymbolTable};
use chronospline::temporal::{assemble_any, MatrixKind};
use chronospline::wave_config::parse_wave_config;
use clap::{Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "chronospline", version, about = "Space-time spline discretization of the wave equation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum InjectArg {
    StencilSignFlip,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dense temporal matrix B, C or M.
    Assemble {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n_intervals: usize,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        matrix: MatrixKind,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Symbols B_p, C_p, M_p on a uniform grid of [-π, π].
    Symbols {
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CFL constants of the unstable variant.
    CflTable {
        #[arg(long, default_value_t = 6)]
        p_max: usize,
    },
    /// κ₁ of a matrix family over sizes and ρ values.
    Conditioning {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        p: usize,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, conflicts_with = "rho_sweep")]
        rho: Option<f64>,
        /// lo:hi:steps
        #[arg(long)]
        rho_sweep: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scalar ODE u' = v, v' = -μu + f.
    SolveOde {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value = "b")]
        route: OdeRoute,
        /// one, poly:K or file:PATH (load vector, one value per trial function)
        #[arg(long, default_value = "one")]
        rhs: String,
        /// Sampling points per interval.
        #[arg(long, default_value_t = 4)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wave problem from a key = value config file.
    SolveWave {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduction experiment with target comparison.
    Run {
        #[arg(long)]
        experiment: String,
        #[arg(long = "set")]
        overrides: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Invariant suites of every module.
    Selfcheck {
        #[arg(long)]
        only: Option<String>,
        #[arg(long, value_enum)]
        inject: Option<InjectArg>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Failure with the exit code to report.
struct Fail(u8, String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(1, e.to_string())
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Fail> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Fail(1, format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().cmd) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8, Fail> {
    match cmd {
        Cmd::Assemble { p, n_intervals, horizon, matrix, format } => {
            let set = assemble_any(p, n_intervals, horizon)?;
            let a = set.matrix(matrix);
            let text = match format {
                Format::Csv => {
                    let mut s = String::from("row,col,value\n");
                    for i in 0..a.nrows() {
                        for j in 0..a.ncols() {
                            writeln!(s, "{i},{j},{}", num(a[(i, j)])).unwrap();
                        }
                    }
                    s
                }
                Format::Json => {
                    let rows: Vec<Vec<f64>> = a.row_iter().map(|r| r.iter().copied().collect()).collect();
                    let v = serde_json::json!({
                        "matrix": matrix.to_string(), "p": p, "intervals": n_intervals,
                        "horizon": horizon, "n": a.nrows(), "rows": rows,
                    });
                    format!("{}\n", serde_json::to_string_pretty(&v)?)
                }
            };
            emit(&None, &text)?;
        }
        Cmd::Symbols { p, grid, out } => {
            if p == 0 || grid < 2 {
                return Err(Fail(3, "need p >= 1 and grid >= 2".into()));
            }
            let t = SymbolTable::new(p);
            let mut s = String::from("theta,B,C,M\n");
            for th in theta_grid(grid) {
                writeln!(s, "{},{},{},{}", num(th), num(t.b(th)), num(t.c(th)), num(t.m(th))).unwrap();
            }
            emit(&out, &s)?;
        }
        Cmd::CflTable { p_max } => {
            let mut s = String::from("p,theta_max,rho_tilde,theta_p,rho_p,E_p\n");
            for p in 1..=p_max {
                let k = cfl_constants(p)?;
                let row = [k.theta_max, k.rho_tilde, k.theta_p, k.rho_p, k.e_p].map(num).join(",");
                writeln!(s, "{p},{row}").unwrap();
            }
            emit(&None, &s)?;
        }
        Cmd::Conditioning { family, p, sizes, rho, rho_sweep: sweep, out } => {
            let mut s = String::new();
            writeln!(s, "# family {family}, p = {p}").unwrap();
            match sweep {
                Some(spec) => {
                    let parts: Vec<&str> = spec.split(':').collect();
                    let bad = || Fail(3, format!("expected lo:hi:steps, got '{spec}'"));
                    let [lo, hi, steps] = parts[..] else { return Err(bad()) };
                    let (lo, hi, steps) = (
                        lo.parse::<f64>().map_err(|_| bad())?,
                        hi.parse::<f64>().map_err(|_| bad())?,
                        steps.parse::<usize>().map_err(|_| bad())?,
                    );
                    let rhos = linspace(lo, hi, steps);
                    s.push_str("n,rho,kappa1\n");
                    for &n in &sizes {
                        for (r, k) in rho_sweep(family, p, n, &rhos)? {
                            writeln!(s, "{n},{},{}", num(r), k.map_or("inf".into(), num)).unwrap();
                        }
                    }
                }
                None => {
                    let r = match (family.uses_rho(), rho) {
                        (true, None) => return Err(Fail(3, format!("family {family} needs --rho or --rho-sweep"))),
                        (_, r) => r.unwrap_or(0.0),
                    };
                    let fit = condition_sweep(family, p, &sizes, r)?;
                    writeln!(s, "# loglog slope {}", num(fit.slope)).unwrap();
                    s.push_str("n,rho,kappa1\n");
                    for pt in &fit.points {
                        writeln!(s, "{},{},{}", pt.n, num(r), pt.kappa.map_or("inf".into(), num)).unwrap();
                    }
                }
            }
            emit(&out, &s)?;
        }
        Cmd::SolveOde { p, n, horizon, mu, route, rhs, samples, out } => {
            let problem = if let Some(path) = rhs.strip_prefix("file:") {
                let text = std::fs::read_to_string(path).map_err(|e| Fail(3, format!("{path}: {e}")))?;
                let f = text
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|w| !w.is_empty())
                    .map(|w| w.parse::<f64>().map_err(|_| Fail(3, format!("{path}: not a number '{w}'"))))
                    .collect::<Result<Vec<_>, _>>()?;
                OdeProblem::new(p, n, horizon, mu, f)
            } else if let Some(k) = rhs.strip_prefix("poly:") {
                let k: i32 = k.parse().map_err(|_| Fail(3, format!("bad degree in '{rhs}'")))?;
                OdeProblem::with_source(p, n, horizon, mu, |t| t.powi(k))
            } else if rhs == "one" {
                OdeProblem::with_source(p, n, horizon, mu, |_| 1.0)
            } else {
                return Err(Fail(3, format!("unknown rhs '{rhs}' (expected one, poly:K or file:PATH)")));
            }
            .map_err(|e| Fail(3, e.to_string()))?;
            let sol = solve_ode(&problem, route).map_err(|e| Fail(2, e.to_string()))?;
            let mut s = String::from("t,u,v\n");
            let total = n * samples.max(1);
            for i in 0..=total {
                let t = horizon * i as f64 / total as f64;
                let (u, v) = sol.eval(&problem.set, t, 0);
                writeln!(s, "{},{},{}", num(t), num(u), num(v)).unwrap();
            }
            emit(&out, &s)?;
        }
        Cmd::SolveWave { config, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| Fail(3, format!("{}: {e}", config.display())))?;
            let cfg = parse_wave_config(&text).map_err(|e| Fail(3, e.to_string()))?;
            let (sys, sol) = solve_space_time(&cfg.problem).map_err(|e| match e {
                WaveError::SingularBlock { .. }
                | WaveError::SingularTemporal(_)
                | WaveError::SingularMonolithic
                | WaveError::Linalg(_) => Fail(2, e.to_string()),
                _ => Fail(3, e.to_string()),
            })?;
            let mut s = String::new();
            if let Some(exact) = &cfg.exact {
                let e = error_norms(&sys, &sol, exact.as_ref());
                let line = format!(
                    "relative errors: u_l2 {} u_h1 {} u_ch1 {} v_l2 {}",
                    num(e.u_l2),
                    num(e.u_h1),
                    num(e.u_ch1),
                    num(e.v_l2)
                );
                eprintln!("{line}");
                writeln!(s, "# {line}").unwrap();
            }
            let axes = &cfg.problem.axes;
            let grid = |k: usize| -> Vec<f64> {
                let a = &axes[k];
                (0..=cfg.samples).map(|i| a.lo + (a.hi - a.lo) * i as f64 / cfg.samples as f64).collect()
            };
            let xs = grid(0);
            let ys = if axes.len() == 2 { grid(1) } else { vec![f64::NAN] };
            s.push_str(if axes.len() == 2 { "x,y,t,U,V\n" } else { "x,t,U,V\n" });
            for i in 0..=cfg.time_samples {
                let t = cfg.problem.horizon * i as f64 / cfg.time_samples as f64;
                for &y in &ys {
                    for &x in &xs {
                        let pt: Vec<f64> = if y.is_nan() { vec![x] } else { vec![x, y] };
                        let v = sol.eval(&sys.spatial, &pt, t);
                        let coords: Vec<String> = pt.iter().map(|&c| num(c)).collect();
                        writeln!(s, "{},{},{},{}", coords.join(","), num(t), num(v.u), num(v.v)).unwrap();
                    }
                }
            }
            emit(&out, &s)?;
        }
        Cmd::Run { experiment, overrides, out, jobs, seed } => {
            let mut spec = ExperimentSpec::new(&experiment);
            spec.seed = seed;
            spec.jobs = jobs;
            if let Some(dir) = out {
                spec = spec.out(dir);
            }
            for o in &overrides {
                let (k, v) = parse_override(o).map_err(|e| Fail(3, e.to_string()))?;
                spec = spec.set(&k, &v);
            }
            let bundle = run_experiment(&spec).map_err(|e| match e {
                ExperimentError::UnknownExperiment(_)
                | ExperimentError::UnknownParameter { .. }
                | ExperimentError::BadValue { .. }
                | ExperimentError::Malformed(_) => Fail(3, e.to_string()),
                other => Fail(1, other.to_string()),
            })?;
            println!("{}", bundle.summary_json());
            if !bundle.failures().is_empty() {
                return Ok(1);
            }
        }
        Cmd::Selfcheck { only, inject, seed } => {
            let opts = SelfcheckOptions {
                only,
                inject: inject.map(|InjectArg::StencilSignFlip| Injection::StencilSignFlip),
                seed,
            };
            let report = selfcheck(&opts).map_err(|e| Fail(3, format!("{e}; modules: {}", MODULES.join(", "))))?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !report.passed() {
                return Ok(1);
            }
        }
    }
    Ok(0)
}
