//! The frozen reference suite behind `verify-all`.
//!
//! Each section runs one of the [`reference`] problems and checks it against
//! the thresholds below. A section that errors fails its assertion and the
//! remaining sections still run.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::cli::{Assertion, Outcome};
use crate::error::Result;
use crate::funcdsl::Expression;
use crate::mesh::DiscreteField;
use crate::nonlinear::{lipschitz_probe, picard_solve, NonlinearSpec};
use crate::opspace::{boundary_theta, interp_norm, InterpMethod, InterpParams, OperatorSpec};
use crate::reference as r;
use crate::solve1d::{solve_1d, Rhs};
use crate::solve2d::{moving_direct_problem, solve_2d_direct, solve_2d_reduced, solve_moving};
use crate::sysinf::{decay_condition_check, truncate_and_solve, truncation_study};
use crate::verify::{semigroup_probe, sweep_lambda, sweep_t, write_sweep_csv, Instance, SweepResult, SLOPE_TOL};

pub const CONVERGENCE_SIZES: [usize; 4] = [65, 129, 257, 513];
pub const MIN_ORDER: f64 = 1.9;
pub const FORM_N: usize = 129;
pub const FORM_TOL: f64 = 5e-3;
pub const PATH_N: usize = 65;
pub const PATH_TOL: f64 = 1e-10;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const MIN_R2: f64 = 0.999;
pub const LIPSCHITZ_TOL: f64 = 1e-10;
pub const DECAY_SUP_MAX: f64 = 3.0;
pub const TRUNCATION_RATIO_MAX: f64 = 1e-3;
pub const DECOUPLING_TOL: f64 = 1e-12;

type Section = Result<(Value, Vec<Assertion>)>;

/// Runs every section, writing sweep and trace CSVs into `out`.
pub fn verify_all(seed: u64, out: &Path) -> Result<Outcome> {
    let sections: [(&str, &dyn Fn() -> Section); 9] = [
        ("convergence_1d", &convergence_1d),
        ("form_equivalence", &form_equivalence),
        ("two_path_2d", &two_path_2d),
        ("lambda_sweeps", &|| lambda_sweeps(out)),
        ("semigroup_probe", &|| semigroup(seed)),
        ("t_sweep", &|| t_sweep(out)),
        ("moving_domain", &moving_domain),
        ("nonlinear", &|| nonlinear(seed, out)),
        ("infinite_system", &|| infinite_system(out)),
    ];
    let mut results = serde_json::Map::new();
    let mut assertions = Vec::new();
    for (name, f) in sections {
        match f() {
            Ok((v, a)) => {
                results.insert(name.into(), v);
                assertions.extend(a);
            }
            Err(e) => {
                results.insert(name.into(), json!({ "error": e.to_string() }));
                assertions.push(Assertion::holds(name, false));
            }
        }
    }
    Ok(Outcome { results: Value::Object(results), assertions, partial: false })
}

/// `log2(e_k / e_{k+1})` for successive errors.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Max nodal error of `mms_1d(n)` against `e^y`.
pub fn mms_error(n: usize) -> Result<f64> {
    let p = r::mms_1d(n)?;
    let s = solve_1d(&p)?;
    Ok(s.u.values().iter().zip(p.grid.y_nodes()).map(|(u, y)| (u.re - r::exact_1d(*y)).abs()).fold(0.0, f64::max))
}

/// Relative max difference of the plain and regularized solves.
pub fn form_difference(n: usize) -> Result<f64> {
    let a = solve_1d(&r::mms_1d(n)?)?.u;
    let b = solve_1d(&r::plain_1d(n)?)?.u;
    Ok(b.sub(&a)?.max_abs() / a.max_abs())
}

fn convergence_1d() -> Section {
    let errors = CONVERGENCE_SIZES.iter().map(|&n| mms_error(n)).collect::<Result<Vec<_>>>()?;
    let orders = observed_orders(&errors);
    Ok((
        json!({ "sizes": CONVERGENCE_SIZES, "errors": errors, "orders": orders }),
        vec![Assertion::at_least("convergence_order_1d", min(&orders), MIN_ORDER)],
    ))
}

fn form_equivalence() -> Section {
    let sizes = [FORM_N, 2 * FORM_N - 1];
    let d = sizes.iter().map(|&n| form_difference(n)).collect::<Result<Vec<_>>>()?;
    let order = observed_orders(&d)[0];
    Ok((
        json!({ "sizes": sizes, "differences": d, "order": order }),
        vec![
            Assertion::at_most("form_difference", d[0], FORM_TOL),
            Assertion::at_least("form_difference_order", order, MIN_ORDER),
        ],
    ))
}

fn two_path_2d() -> Section {
    let p = r::manufactured_2d(PATH_N)?;
    let a = solve_2d_direct(&p)?.u;
    let b = solve_2d_reduced(&p)?.u;
    let d = b.sub(&a)?.max_abs() / a.max_abs();
    Ok((json!({ "n": PATH_N, "difference": d }), vec![Assertion::at_most("path_difference_2d", d, PATH_TOL)]))
}

fn sweep_checks(name: &str, s: &SweepResult, bracket: (f64, f64), out: &mut Vec<Assertion>) {
    let m = &s.summary;
    out.push(Assertion::at_most(&format!("{name}_trend_slope"), m.trend_slope.unwrap_or(f64::NAN), SLOPE_TOL));
    out.push(Assertion::within(&format!("{name}_max_ratio"), m.max_ratio, Some(bracket.0), Some(bracket.1)));
    out.push(Assertion::at_most(&format!("{name}_failures"), m.failures as f64, 0.0));
}

fn write_sweep(out: &Path, name: &str, s: &SweepResult) -> Result<()> {
    write_sweep_csv(std::io::BufWriter::new(std::fs::File::create(out.join(name))?), s)
}

fn lambda_sweeps(out: &Path) -> Section {
    let s1 = sweep_lambda(&Instance::OneD(r::mms_1d(r::SWEEP_N_1D)?), &r::sector(), &r::norms())?;
    let s2 = sweep_lambda(&Instance::TwoD(r::manufactured_2d(r::SWEEP_N_2D)?), &r::sector(), &r::norms())?;
    write_sweep(out, "sweep_lambda_1d.csv", &s1)?;
    write_sweep(out, "sweep_lambda_2d.csv", &s2)?;
    let mut a = Vec::new();
    sweep_checks("sweep_1d", &s1, r::RATIO_BRACKET_1D, &mut a);
    sweep_checks("sweep_2d", &s2, r::RATIO_BRACKET_2D, &mut a);
    Ok((json!({ "one_d": s1.summary, "two_d": s2.summary }), a))
}

fn semigroup(seed: u64) -> Section {
    let t = semigroup_probe(&r::semigroup_1d()?, &r::sector(), &r::SEMIGROUP_LEVELS, seed)?;
    let spread = t.level_ratio.max(1.0 / t.level_ratio);
    let maxima: Vec<(usize, f64)> = t.levels.iter().map(|l| (l.n, l.max)).collect();
    Ok((
        json!({ "maxima": maxima, "level_ratio": t.level_ratio }),
        vec![Assertion::at_most("semigroup_level_spread", spread, r::SEMIGROUP_SPREAD)],
    ))
}

/// Larger over smaller of the closed-form and K-functional norms of `f_1`.
pub fn interp_equivalence(f1: f64) -> Result<f64> {
    let ip = InterpParams::new(boundary_theta(r::EXPONENT, r::P), r::Q)?;
    let d = [C64::new(f1, 0.0)];
    let a = interp_norm(&d, &OperatorSpec::scalar(1.0), ip, InterpMethod::Closed)?;
    let b = interp_norm(&d, &OperatorSpec::scalar(1.0), ip, InterpMethod::Kfunctional)?;
    Ok(a.max(b) / a.min(b))
}

fn t_sweep(out: &Path) -> Section {
    let s = sweep_t(&Instance::OneD(r::parametric_1d(r::T_SWEEP_N)?), &r::t_grid(), &r::norms())?;
    write_sweep(out, "sweep_t.csv", &s)?;
    let spread = s.summary.max_ratio / s.summary.min_ratio;
    let boundary_used = s.points.iter().all(|p| p.report.as_ref().is_some_and(|r| r.norm_f1_interp > 0.0 && r.norm_f1_scaled > 0.0));
    let equiv = interp_equivalence(r::T_BOUNDARY_DATA)?;
    Ok((
        json!({ "summary": s.summary, "spread": spread, "interp_equivalence": equiv }),
        vec![
            Assertion::at_most("t_sweep_spread", spread, r::T_SPREAD_MAX),
            Assertion::holds("t_sweep_boundary_terms", boundary_used && s.summary.failures == 0),
            Assertion::at_most("interp_equivalence", equiv, r::INTERP_EQUIVALENCE),
        ],
    ))
}

fn moving_domain() -> Section {
    let p = r::moving_2d("1 + s", r::MOVING_N)?;
    let mut q = p.clone();
    q.moving = None;
    let a = solve_moving(&p)?.solution.u;
    let b = solve_2d_direct(&q)?.u;
    let identity = a.sub(&b)?.max_abs();

    let p = r::moving_2d("2", r::MOVING_N)?;
    let a = solve_moving(&p)?.solution.u;
    let b = solve_2d_direct(&moving_direct_problem(&p)?)?.u;
    let scaled = a.sub(&b)?.max_abs() / b.max_abs();
    Ok((
        json!({ "identity_difference": identity, "scaled_difference": scaled }),
        vec![
            Assertion::at_most("moving_identity", identity, IDENTITY_TOL),
            Assertion::at_most("moving_scaled", scaled, r::MOVING_TOL),
        ],
    ))
}

fn nonlinear(seed: u64, out: &Path) -> Section {
    let mut spec = r::toy_nonlinear(r::TOY_N, r::TOY_EPS)?;
    spec.seed = seed;
    let o = picard_solve(&spec, r::TOY_TOL, r::TOY_MAX_ITER)?;
    o.trace.write_csv(std::io::BufWriter::new(std::fs::File::create(out.join("trace.csv"))?))?;
    let residual = o.trace.records.last().map(|r| r.residual).unwrap_or(f64::NAN);
    let r2 = o.trace.log_linear_r2(1).unwrap_or(f64::NAN);

    let divergent = r::toy_nonlinear(r::TOY_N, r::TOY_DIVERGENT_EPS)?;
    let diverged = matches!(picard_solve(&divergent, r::TOY_TOL, r::TOY_MAX_ITER), Err(crate::Error::Divergence { .. }));

    let linear = NonlinearSpec { f_law: Expression::parse("2*u")?, a_law: Expression::parse("0")?, seed, ..spec.clone() };
    let mu = lipschitz_probe(&linear, &o.w, 50)?.mu_hat;
    Ok((
        json!({
            "iterations": o.trace.iterations(),
            "final_residual": residual,
            "log_linear_r2": r2,
            "divergent_case_diverged": diverged,
            "lipschitz_2u": mu,
        }),
        vec![
            Assertion::holds("picard_converged", o.converged),
            Assertion::at_most("picard_iterations", o.trace.iterations() as f64, r::TOY_MAX_ITER as f64),
            Assertion::at_most("picard_residual", residual, r::TOY_TOL),
            Assertion::at_least("picard_r2", r2, MIN_R2),
            Assertion::holds("divergence_detected", diverged),
            Assertion::at_most("lipschitz_2u_error", (mu - 2.0).abs(), LIPSCHITZ_TOL),
        ],
    ))
}

/// Max over components of the gap between an uncoupled system solve and
/// the scalar solves it should split into, relative to each component.
pub fn decoupling_gap(n: usize) -> Result<f64> {
    let mut s = r::coupled_system(n)?;
    s.a_law = Expression::parse("0")?;
    s.b_law = s.a_law.clone();
    let sys = truncate_and_solve(&s)?;
    let d = s.diagonal(n)?;
    let mut worst: f64 = 0.0;
    for (m, dm) in d.into_iter().enumerate() {
        let mut p = s.base.clone();
        p.op = OperatorSpec::scalar(dm);
        p.rhs = Rhs::Field(DiscreteField::new(sys.solution.f.component(m), 1)?);
        let u = solve_2d_direct(&p)?.u;
        let err = (0..u.nodes()).map(|k| (u.at(k)[0] - sys.solution.u.at(k)[m]).norm()).fold(0.0, f64::max);
        worst = worst.max(err / u.max_abs().max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

fn infinite_system(out: &Path) -> Section {
    let decay = decay_condition_check(&r::decay_fixture()?, &r::TRUNCATION_SIZES)?;
    let sup = decay.sup_a.max(decay.sup_b);
    let study = truncation_study(&r::coupled_system(r::SYSTEM_N)?, &r::TRUNCATION_SIZES)?;
    study.write_csv(std::io::BufWriter::new(std::fs::File::create(out.join("truncation.csv"))?))?;
    let ratio = study.last_first_ratio();
    let gap = decoupling_gap(4)?;
    Ok((
        json!({ "decay": decay, "truncation": study.rows, "last_first_ratio": ratio, "decoupling_gap": gap }),
        vec![
            Assertion::at_most("decay_sup", sup, DECAY_SUP_MAX),
            Assertion::holds("decay_stable", decay.finite),
            Assertion::at_most("truncation_ratio", ratio, TRUNCATION_RATIO_MAX),
            Assertion::at_most("decoupling_gap", gap, DECOUPLING_TOL),
        ],
    ))
}
