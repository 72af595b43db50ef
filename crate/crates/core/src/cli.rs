//! The `degensolve` command line: dispatch, artifacts and the run report.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{load_config, Geometry, RunConfig, Subcommand};
use crate::error::{Error, Result};
use crate::mesh::{DiscreteField, Grid1D, Grid2D};
use crate::nonlinear::{ball_check, lipschitz_probe, picard_with_shrink, IterationTrace};
use crate::solve1d::solve_1d;
use crate::solve2d::{moving_direct_problem, solve_2d, solve_2d_direct, solve_moving, SolvePath};
use crate::suite;
use crate::sysinf::{decay_condition_check, truncate_and_solve, truncation_study, DecayReport};
use crate::verify::{
    coercivity_report_1d, coercivity_report_2d, fmt, sweep_points, sweep_t, write_sweep_csv, Instance, SweepResult,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;
pub const EXIT_PARTIAL: i32 = 5;

const EXIT_HELP: &str = "\
Exit status:
  0  success, every checked assertion passed
  2  validation error (bad config, unknown key, exponent outside the coercivity window)
  3  solver failure (singular system, residual check, Picard divergence)
  4  assertion failure
  5  partial sweep (some sweep points failed; see report.json)

Every run writes report.json (config echo, results, assertions, error) and
timing.json (wall time) into the output directory.";

#[derive(Debug, Parser)]
#[command(name = "degensolve", version, about = "Solvers and verification harness for singular degenerate elliptic problems", after_help = EXIT_HELP)]
pub struct Cli {
    #[arg(value_enum)]
    pub subcommand: Subcommand,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for the report and CSV artifacts.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for sweeps; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Singular(_) | Error::Residual { .. } | Error::Divergence { .. } | Error::Io(_) | Error::Csv(_) => EXIT_SOLVER,
        _ => EXIT_VALIDATION,
    }
}

/// One checked threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Assertion {
    pub fn within(name: &str, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let passed = value.is_finite() && lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
        Assertion { name: name.to_string(), value, lower, upper, passed }
    }

    pub fn at_most(name: &str, value: f64, upper: f64) -> Self {
        Self::within(name, value, None, Some(upper))
    }

    pub fn at_least(name: &str, value: f64, lower: f64) -> Self {
        Self::within(name, value, Some(lower), None)
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Self::within(name, if ok { 1.0 } else { 0.0 }, Some(1.0), None)
    }
}

/// What a successful dispatch produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub results: Value,
    pub assertions: Vec<Assertion>,
    /// Some sweep points failed.
    pub partial: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub subcommand: String,
    pub version: String,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
    /// The resolved config; feeding it back reproduces the run.
    pub config: Option<RunConfig>,
    pub results: Value,
    pub assertions: Vec<Assertion>,
}

/// Parses `args`, runs, writes the report and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_VALIDATION;
        }
        // A pool set up earlier in the process stays in place.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    match execute(cli.subcommand, &cli.config, &cli.out) {
        Ok(report) => {
            if let Some(e) = &report.error {
                eprintln!("error: {e}");
            }
            eprintln!("{}: {} (exit {})", report.subcommand, report.status, report.exit_code);
            report.exit_code
        }
        Err(e) => {
            eprintln!("error: cannot write report: {e}");
            EXIT_SOLVER
        }
    }
}

/// Loads the config, runs and writes `report.json` and `timing.json`
/// whatever the outcome. Only failure to write the report is an `Err`.
pub fn execute(cmd: Subcommand, config: &Path, out: &Path) -> Result<RunReport> {
    let start = Instant::now();
    fs::create_dir_all(out)?;
    let mut report = RunReport {
        subcommand: cmd.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        status: String::new(),
        exit_code: EXIT_OK,
        error: None,
        config: None,
        results: Value::Null,
        assertions: Vec::new(),
    };
    let outcome = load_config(config, cmd).and_then(|cfg| {
        report.config = Some(cfg.clone());
        run(&cfg, out)
    });
    match outcome {
        Ok(o) => {
            let failed = o.assertions.iter().any(|a| !a.passed);
            report.exit_code = if o.partial {
                EXIT_PARTIAL
            } else if failed {
                EXIT_ASSERTION
            } else {
                EXIT_OK
            };
            report.results = o.results;
            report.assertions = o.assertions;
        }
        Err(e) => {
            report.exit_code = exit_code(&e);
            if let Error::Divergence { trace, .. } = &e {
                trace.write_csv(BufWriter::new(File::create(out.join("trace.csv"))?))?;
                report.results = json!({ "trace": trace.records });
            }
            report.error = Some(e.to_string());
        }
    }
    report.status = match report.exit_code {
        EXIT_OK => "ok",
        EXIT_VALIDATION => "validation_error",
        EXIT_SOLVER => "solver_error",
        EXIT_ASSERTION => "assertion_failed",
        _ => "partial",
    }
    .to_string();
    write_json(&out.join("report.json"), &report)?;
    write_json(&out.join("timing.json"), &json!({ "wall_seconds": start.elapsed().as_secs_f64() }))?;
    Ok(report)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Dispatches a resolved config, writing CSV artifacts into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    fs::create_dir_all(out)?;
    let cmd = cfg.subcommand.ok_or_else(|| Error::invalid("config has no resolved subcommand"))?;
    match cmd {
        Subcommand::Solve1d => run_solve1d(cfg, out),
        Subcommand::Solve2d => run_solve2d(cfg, out),
        Subcommand::SweepLambda | Subcommand::SweepT => run_sweep(cfg, cmd, out),
        Subcommand::Moving => run_moving(cfg, out),
        Subcommand::Nonlinear => run_nonlinear(cfg, out),
        Subcommand::System => run_system(cfg, out),
        Subcommand::VerifyAll => suite::verify_all(cfg.seed, out),
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

pub const SOLUTION_1D_COLUMNS: [&str; 10] =
    ["node", "x", "y", "component", "u_re", "u_im", "u1_re", "u1_im", "u2_re", "u2_im"];

pub fn write_solution_1d<W: Write>(w: W, g: &Grid1D, u: &DiscreteField, u1: &DiscreteField, u2: &DiscreteField) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SOLUTION_1D_COLUMNS)?;
    for i in 0..u.nodes() {
        for c in 0..u.dim_e() {
            let (a, b, d) = (u.at(i)[c], u1.at(i)[c], u2.at(i)[c]);
            wr.write_record([
                i.to_string(),
                fmt(g.x_nodes()[i]),
                fmt(g.y_nodes()[i]),
                (c + 1).to_string(),
                fmt(a.re),
                fmt(a.im),
                fmt(b.re),
                fmt(b.im),
                fmt(d.re),
                fmt(d.im),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub const SOLUTION_2D_COLUMNS: [&str; 7] = ["ix", "iy", "x", "y", "component", "u_re", "u_im"];

pub fn write_solution_2d<W: Write>(w: W, g: &Grid2D, u: &DiscreteField) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SOLUTION_2D_COLUMNS)?;
    for ix in 0..g.gx.n() {
        for iy in 0..g.gy.n() {
            let v = u.at(g.node(ix, iy));
            for (c, z) in v.iter().enumerate() {
                wr.write_record([
                    ix.to_string(),
                    iy.to_string(),
                    fmt(g.gx.x_nodes()[ix]),
                    fmt(g.gy.x_nodes()[iy]),
                    (c + 1).to_string(),
                    fmt(z.re),
                    fmt(z.im),
                ])?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

fn relative_difference(a: &DiscreteField, b: &DiscreteField) -> Result<f64> {
    let scale = b.max_abs();
    let d = a.sub(b)?.max_abs();
    Ok(if scale > 0.0 { d / scale } else { d })
}

fn ratio_checks(cfg: &RunConfig, ratio: f64, out: &mut Vec<Assertion>) {
    if let Some([lo, hi]) = cfg.assertions.ratio_bracket {
        out.push(Assertion::within("ratio_bracket", ratio, Some(lo), Some(hi)));
    }
}

fn residual_check(cfg: &RunConfig, residual: f64, out: &mut Vec<Assertion>) {
    if let Some(tol) = cfg.assertions.max_residual {
        out.push(Assertion::at_most("max_residual", residual, tol));
    }
}

fn run_solve1d(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let p = cfg.problem_1d()?;
    let s = solve_1d(&p)?;
    let report = coercivity_report_1d(&p, &s, &cfg.norms())?;
    write_solution_1d(create(out, "solution.csv")?, &p.grid, &s.u, &s.u1, &s.u2)?;
    let mut assertions = Vec::new();
    ratio_checks(cfg, report.ratio, &mut assertions);
    residual_check(cfg, s.residual_norm, &mut assertions);
    Ok(Outcome {
        results: json!({
            "nodes": p.grid.n(),
            "depth": p.grid.depth(),
            "residual_norm": s.residual_norm,
            "max_abs_u": s.u.max_abs(),
            "report": report,
        }),
        assertions,
        partial: false,
    })
}

fn path_name(p: SolvePath) -> &'static str {
    match p {
        SolvePath::Direct => "direct",
        SolvePath::Reduced => "reduced",
    }
}

fn run_solve2d(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let p = cfg.problem_2d()?;
    let norms = cfg.norms();
    let mut results = serde_json::Map::new();
    let mut solutions = Vec::new();
    for path in cfg.problem.path.paths() {
        let s = solve_2d(&p, path)?;
        let report = coercivity_report_2d(&p, &s, &norms)?;
        results.insert(
            path_name(path).into(),
            json!({
                "residual_norm": s.residual_norm,
                "max_abs_u": s.u.max_abs(),
                "coefficient_bounds": s.coefficient_bounds,
                "warnings": s.warnings,
                "report": report,
            }),
        );
        solutions.push((s, report));
    }
    let mut assertions = Vec::new();
    let (first, report) = &solutions[0];
    write_solution_2d(create(out, "solution.csv")?, &p.grid, &first.u)?;
    ratio_checks(cfg, report.ratio, &mut assertions);
    for (s, _) in &solutions {
        residual_check(cfg, s.residual_norm, &mut assertions);
    }
    if let [(a, _), (b, _)] = solutions.as_slice() {
        let diff = relative_difference(&b.u, &a.u)?;
        results.insert("path_difference".into(), json!(diff));
        if let Some(tol) = cfg.assertions.path_tolerance {
            assertions.push(Assertion::at_most("path_tolerance", diff, tol));
        }
    }
    results.insert("nodes".into(), json!([p.grid.gx.n(), p.grid.gy.n()]));
    Ok(Outcome { results: Value::Object(results), assertions, partial: false })
}

fn failures(s: &SweepResult) -> Vec<Value> {
    s.points
        .iter()
        .filter_map(|p| p.error.as_ref().map(|e| json!({ "index": p.index, "lambda": [p.lambda.re, p.lambda.im], "t1": p.t1, "t2": p.t2, "error": e })))
        .collect()
}

fn run_sweep(cfg: &RunConfig, cmd: Subcommand, out: &Path) -> Result<Outcome> {
    let inst = match cfg.geometry() {
        Geometry::OneD => Instance::OneD(cfg.problem_1d()?),
        Geometry::TwoD => Instance::TwoD(cfg.problem_2d()?),
    };
    let norms = cfg.norms();
    let sweep = if cmd == Subcommand::SweepLambda {
        let points = cfg.lambda_points().ok_or_else(|| Error::invalid("sweep has no λ points"))?;
        sweep_points(&inst, &points, &norms)?
    } else {
        let grid: Vec<(f64, f64)> = cfg.sweep.t_grid.iter().flatten().map(|&[a, b]| (a, b)).collect();
        sweep_t(&inst, &grid, &norms)?
    };
    write_sweep_csv(create(out, "sweep.csv")?, &sweep)?;
    let s = &sweep.summary;
    let mut assertions = Vec::new();
    if let Some([lo, hi]) = cfg.assertions.ratio_bracket {
        assertions.push(Assertion::within("ratio_bracket", s.max_ratio, Some(lo), Some(hi)));
    }
    if let Some(m) = cfg.assertions.max_slope {
        assertions.push(Assertion::at_most("max_slope", s.trend_slope.unwrap_or(f64::NAN), m));
    }
    let spread = s.max_ratio / s.min_ratio;
    if let Some(m) = cfg.assertions.max_spread {
        assertions.push(Assertion::at_most("max_spread", spread, m));
    }
    Ok(Outcome {
        results: json!({
            "points": sweep.points.len(),
            "summary": s,
            "spread": spread,
            "failures": failures(&sweep),
        }),
        assertions,
        partial: s.failures > 0,
    })
}

fn run_moving(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let p = cfg.problem_2d()?;
    if p.moving.is_none() {
        return Err(Error::Config { path: "problem.moving".into(), message: "the moving subcommand needs a moving-domain law".into() });
    }
    let ms = solve_moving(&p)?;
    let direct = solve_2d_direct(&moving_direct_problem(&p)?)?;
    let diff = relative_difference(&ms.solution.u, &direct.u)?;
    write_solution_2d(create(out, "solution.csv")?, &ms.grid, &ms.solution.u)?;
    let mut assertions = Vec::new();
    if let Some(tol) = cfg.assertions.moving_tolerance {
        assertions.push(Assertion::at_most("moving_tolerance", diff, tol));
    }
    residual_check(cfg, ms.solution.residual_norm, &mut assertions);
    Ok(Outcome {
        results: json!({
            "extent": [ms.extent.0, ms.extent.1],
            "principal": [ms.principal.0, ms.principal.1],
            "residual_norm": ms.solution.residual_norm,
            "direct_difference": diff,
            "max_abs_u": ms.solution.u.max_abs(),
        }),
        assertions,
        partial: false,
    })
}

fn run_nonlinear(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let spec = cfg.nonlinear_spec()?;
    let c = cfg.nonlinear.as_ref().expect("validated by nonlinear_spec");
    let run = picard_with_shrink(&spec, c.tol, c.max_iter, c.retries)?;
    let attempts = &run.attempts;
    let Some(outcome) = run.outcome else {
        return Err(run.last_error.unwrap_or_else(|| Error::invalid("no Picard attempt was made")));
    };
    let trace: &IterationTrace = &outcome.trace;
    trace.write_csv(create(out, "trace.csv")?)?;
    write_solution_2d(create(out, "solution.csv")?, &spec.base.grid, &outcome.solution.u)?;
    let lip = lipschitz_probe(&spec, &outcome.w, c.lipschitz_samples)?;
    let c0 = trace.observed_c0().unwrap_or(0.0);
    let ball = ball_check(trace, c0, lip.mu_hat);
    let residual = trace.records.last().map(|r| r.residual).unwrap_or(f64::NAN);
    let r2 = trace.log_linear_r2(1);
    let mut assertions = Vec::new();
    assertions.push(Assertion::holds("converged", outcome.converged));
    residual_check(cfg, residual, &mut assertions);
    if let Some(m) = cfg.assertions.min_r2 {
        assertions.push(Assertion::at_least("min_r2", r2.unwrap_or(f64::NAN), m));
    }
    if let Some(m) = cfg.assertions.max_iterations {
        assertions.push(Assertion::at_most("max_iterations", trace.iterations() as f64, m as f64));
    }
    Ok(Outcome {
        results: json!({
            "converged": outcome.converged,
            "iterations": trace.iterations(),
            "final_residual": residual,
            "log_linear_r2": r2,
            "attempts": attempts,
            "lipschitz": lip,
            "ball": ball,
        }),
        assertions,
        partial: false,
    })
}

pub const DECAY_COLUMNS: [&str; 3] = ["n", "sup_a", "sup_b"];

fn write_decay<W: Write>(w: W, d: &DecayReport) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(DECAY_COLUMNS)?;
    for r in &d.growth_vs_n {
        wr.write_record([r.n.to_string(), fmt(r.sup_a), fmt(r.sup_b)])?;
    }
    wr.flush()?;
    Ok(())
}

fn run_system(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let spec = cfg.system_spec()?;
    let c = cfg.system.as_ref().expect("validated by system_spec");
    let sizes = c.decay_sizes.clone().unwrap_or_else(|| vec![c.n]);
    let decay = decay_condition_check(&spec, &sizes)?;
    write_decay(create(out, "decay.csv")?, &decay)?;
    let sol = truncate_and_solve(&spec)?;
    let mut assertions = Vec::new();
    ratio_checks(cfg, sol.report.ratio, &mut assertions);
    residual_check(cfg, sol.solution.residual_norm, &mut assertions);
    if let Some(m) = cfg.assertions.max_decay_sup {
        assertions.push(Assertion::at_most("max_decay_sup", decay.sup_a.max(decay.sup_b), m));
    }
    let study = if c.truncation.is_empty() {
        None
    } else {
        let st = truncation_study(&spec, &c.truncation)?;
        st.write_csv(create(out, "convergence.csv")?)?;
        if let Some(m) = cfg.assertions.max_truncation_ratio {
            assertions.push(Assertion::at_most("max_truncation_ratio", st.last_first_ratio(), m));
        }
        Some(json!({
            "reference_n": st.reference_n,
            "rows": st.rows,
            "last_first_ratio": st.last_first_ratio(),
            "monotone": st.monotone(),
        }))
    };
    Ok(Outcome {
        results: json!({
            "components": spec.n,
            "residual_norm": sol.solution.residual_norm,
            "report": sol.report,
            "decay": decay,
            "truncation": study,
        }),
        assertions,
        partial: false,
    })
}
