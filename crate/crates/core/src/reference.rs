//! Frozen reference problems and calibrated brackets.
//!
//! The brackets were measured once on these exact configurations and are
//! regression fixtures: changing a problem here invalidates them.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::funcdsl::Expression;
use crate::mesh::Exponents;
use crate::nonlinear::{toy_forcing, NonlinearSpec};
use crate::opspace::{OperatorSpec, SectorSpec};
use crate::solve1d::{BoundarySpec, Form1D, MeshSpec, Problem1D, Rhs};
use crate::solve2d::{MovingLaw, Problem2D};
use crate::sysinf::SystemSpec;
use crate::verify::NormSpec;

pub const EXPONENT: f64 = 1.3;
pub const P: f64 = 4.0;
pub const Q: f64 = 2.0;

fn c(v: f64) -> C64 {
    C64::new(v, 0.0)
}

pub fn exponents() -> Exponents {
    Exponents { alpha: EXPONENT, beta: EXPONENT, p: P, q: Q }
}

pub fn norms() -> NormSpec {
    NormSpec::new(P, Q)
}

/// `y = (x^{-0.3} - 1)/(-0.3)` as an expression in `x`.
const Y_OF_X: &str = "((x^-0.3 - 1)/(-0.3))";

/// `-u^[2] + (1 + λ) u = e^y`, `u(1) = 1`, on `(0, 1]`; at λ = 1 the exact
/// solution is `u = e^y`.
pub fn mms_1d(n: usize) -> Result<Problem1D> {
    Ok(Problem1D::new(Form1D::Regularized, EXPONENT, P, 1.0, OperatorSpec::scalar(1.0), c(1.0), MeshSpec::new(n))?
        .with_rhs(Rhs::expr(&format!("exp({Y_OF_X})"))?)
        .with_bc(BoundarySpec::dirichlet().with_data(vec![c(1.0)])))
}

pub fn exact_1d(y: f64) -> f64 {
    y.exp()
}

/// The same solution in the plain form `-x^{2α}u'' + (1 + λ) u = f`.
pub fn plain_1d(n: usize) -> Result<Problem1D> {
    let p = mms_1d(n)?;
    Ok(Problem1D { kind: Form1D::Plain, ..p }.with_rhs(Rhs::expr(&format!("exp({Y_OF_X}) * (1 + 1.3 * x^0.3)"))?))
}

/// `u = φ(ξ) φ(η)`, `φ(s) = e^s - e^{2s}`, with `A = 1`, λ = 1 and
/// homogeneous Dirichlet data on the unit square.
pub fn manufactured_2d(n: usize) -> Result<Problem2D> {
    let eta = Y_OF_X.replace('x', "y");
    let phi = |s: &str| format!("(exp({s}) - exp(2*{s}))");
    let lphi = |s: &str, v: &str| format!("(-(exp({s}) - 4*exp(2*{s})) + 1.3*{v}^0.3*(exp({s}) - 2*exp(2*{s})))");
    let src = format!(
        "{lx}*{py} + {px}*{ly} + 2*{px}*{py}",
        lx = lphi(Y_OF_X, "x"),
        ly = lphi(&eta, "y"),
        px = phi(Y_OF_X),
        py = phi(&eta)
    );
    Ok(Problem2D::new(exponents(), 1.0, 1.0, OperatorSpec::scalar(1.0), c(1.0), MeshSpec::new(n), MeshSpec::new(n))?
        .with_rhs(Rhs::expr(&src)?))
}

pub fn exact_2d(xi: f64, eta: f64) -> f64 {
    let phi = |s: f64| s.exp() - (2.0 * s).exp();
    phi(xi) * phi(eta)
}

/// `|λ| ∈ {10^0..10^6}`, `arg λ ∈ {0, ±π/6, ±π/3}`.
pub fn sector() -> SectorSpec {
    let phi = PI / 3.0;
    SectorSpec::new(
        phi,
        (0..=6).map(|k| 10f64.powi(k)).collect(),
        vec![-phi, -phi / 2.0, 0.0, phi / 2.0, phi],
    )
    .expect("reference sector is valid")
}

pub const SWEEP_N_1D: usize = 257;
pub const SWEEP_N_2D: usize = 33;

/// Common bracket for every ratio of the `mms_1d(SWEEP_N_1D)` sweep over
/// [`sector`]; measured range 0.994..1.793.
pub const RATIO_BRACKET_1D: (f64, f64) = (0.9, 2.1);
/// The same for `manufactured_2d(SWEEP_N_2D)`; measured range 1.700..2.578.
pub const RATIO_BRACKET_2D: (f64, f64) = (1.5, 2.9);

pub fn t_grid() -> Vec<(f64, f64)> {
    [1.0, 1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&t| (t, 1.0)).collect()
}

pub const T_LAMBDA: f64 = 1e3;
pub const T_SPREAD_MAX: f64 = 10.0;
/// Robin data `u(1) + u^[1](1) = f_1` entering the estimate with `t^σ` weights.
pub const T_BOUNDARY_DATA: f64 = 0.1;

/// Parametric `-t u^[2] + (1 + λ) u = e^y` with inhomogeneous Robin data.
pub fn parametric_1d(n: usize) -> Result<Problem1D> {
    let p = Problem1D::new(Form1D::Parametric, EXPONENT, P, 1.0, OperatorSpec::scalar(1.0), c(T_LAMBDA), MeshSpec::with_depth(n, 16.0))?;
    Ok(p.with_rhs(Rhs::expr(&format!("exp({Y_OF_X})"))?).with_bc(
        BoundarySpec::robin(c(1.0), c(1.0)).with_data(vec![c(T_BOUNDARY_DATA)]).with_t_scaling(true),
    ))
}

pub const T_SWEEP_N: usize = 1025;

/// Equivalence constant allowed between the closed-form and K-functional
/// interpolation norms.
pub const INTERP_EQUIVALENCE: f64 = 3.0;

/// Levels and bound for the discrete semigroup probe.
pub const SEMIGROUP_LEVELS: [usize; 2] = [65, 513];
pub const SEMIGROUP_SPREAD: f64 = 2.0;

/// Homogeneous Dirichlet, `A = 1`, on the default depth for `λ = 0`.
pub fn semigroup_1d() -> Result<Problem1D> {
    Problem1D::new(Form1D::Regularized, EXPONENT, P, 1.0, OperatorSpec::scalar(1.0), c(0.0), MeshSpec::new(SEMIGROUP_LEVELS[0]))
}

/// `G_s = (0, extent(s)) × (0, extent(s))` at `s = 0`.
pub fn moving_2d(extent: &str, n: usize) -> Result<Problem2D> {
    let mut p = Problem2D::new(exponents(), 1.0, 1.0, OperatorSpec::scalar(1.0), c(4.0), MeshSpec::new(n), MeshSpec::new(n))?
        .with_rhs(Rhs::expr("x * y + 1")?)
        .with_bcs(BoundarySpec::robin(c(1.0), c(0.5)), BoundarySpec::dirichlet());
    p.moving = Some(MovingLaw { a_of_s: Expression::parse(extent)?, b_of_s: Expression::parse(extent)?, s: 0.0 });
    Ok(p)
}

pub const MOVING_N: usize = 129;
pub const MOVING_TOL: f64 = 5e-3;

pub const TOY_N: usize = 33;
pub const TOY_AMPLITUDE: f64 = 8.0;
pub const TOY_EPS: f64 = 0.1;
pub const TOY_DIVERGENT_EPS: f64 = 20.0;
pub const TOY_TOL: f64 = 1e-10;
pub const TOY_MAX_ITER: usize = 30;

/// `-x^{2α}u_xx - y^{2β}u_yy + (1 + ε u²) u = F` with exact solution
/// `8 φ(ξ) φ(η)`, frozen at `A_Φ = 1`.
pub fn toy_nonlinear(n: usize, eps: f64) -> Result<NonlinearSpec> {
    let base = Problem2D::new(exponents(), 1.0, 1.0, OperatorSpec::scalar(1.0), c(0.0), MeshSpec::new(n), MeshSpec::new(n))?;
    Ok(NonlinearSpec {
        a_law: Expression::parse(&format!("{eps}*u^2"))?,
        f_law: Expression::parse(&toy_forcing(EXPONENT, EXPONENT, TOY_AMPLITUDE, eps))?,
        a_phi: OperatorSpec::scalar(1.0),
        base,
        mu_r: 1.0,
        radius: 0.25,
        seed: 1,
    })
}

pub const SYSTEM_GRID: usize = 9;
pub const SYSTEM_N: usize = 16;
pub const TRUNCATION_SIZES: [usize; 4] = [8, 16, 32, 64];
/// Bracket for the coercivity ratio of `coupled_system(SYSTEM_N)`; measured 2.501.
pub const SYSTEM_RATIO_BRACKET: (f64, f64) = (2.25, 2.75);

/// `d_m = m²`, `a_mj = b_mj = 0.1·2^{-|m-j|}`, λ = 10³, forcing on the
/// first two components.
pub fn coupled_system(n: usize) -> Result<SystemSpec> {
    let base = Problem2D::new(exponents(), 1.0, 1.0, OperatorSpec::scalar(1.0), c(1e3), MeshSpec::new(SYSTEM_GRID), MeshSpec::new(SYSTEM_GRID))?;
    Ok(SystemSpec {
        d_law: Expression::parse("m^2")?,
        a_law: Expression::parse("0.1*2^-abs(m-j)")?,
        b_law: Expression::parse("0.1*2^-abs(m-j)")?,
        mu: 0.25,
        n,
        q: Q,
        base,
        rhs: Expression::parse("x*y*(1-x)*(1-y)/m")?,
        leading: 2,
    })
}

/// The decay fixture `a_mj = b_mj = 2^{-|m-j|}`.
pub fn decay_fixture() -> Result<SystemSpec> {
    let mut s = coupled_system(TRUNCATION_SIZES[3])?;
    s.a_law = Expression::parse("2^-abs(m-j)")?;
    s.b_law = s.a_law.clone();
    Ok(s)
}
