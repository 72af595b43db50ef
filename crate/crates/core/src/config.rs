//! JSON run configuration: schema, defaults and construction of the solver inputs.
//!
//! Every section has defaults, unknown keys are rejected, and
//! [`RunConfig::resolve`] fills the defaults that depend on the problem
//! (truncation depths, sweep grids) so the echoed config reproduces the run.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcdsl::Expression;
use crate::mesh::{check_window, Exponents};
use crate::nonlinear::NonlinearSpec;
use crate::opspace::{InterpMethod, OperatorSpec, SectorSpec};
use crate::reference;
use crate::solve1d::{BoundarySpec, Closure, Form1D, MeshSpec, Problem1D, Rhs};
use crate::solve2d::{CoefficientLaw, MovingLaw, Problem2D, SolvePath};
use crate::sysinf::SystemSpec;
use crate::verify::NormSpec;

pub const DEFAULT_N: usize = 257;
pub const DEFAULT_LAMBDA: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Solve1d,
    Solve2d,
    SweepLambda,
    SweepT,
    Moving,
    Nonlinear,
    System,
    VerifyAll,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Solve1d => "solve1d",
            Subcommand::Solve2d => "solve2d",
            Subcommand::SweepLambda => "sweep-lambda",
            Subcommand::SweepT => "sweep-t",
            Subcommand::Moving => "moving",
            Subcommand::Nonlinear => "nonlinear",
            Subcommand::System => "system",
            Subcommand::VerifyAll => "verify-all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "2d")]
    TwoD,
}

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    pub fn value(self) -> C64 {
        match self {
            Scalar::Real(r) => C64::new(r, 0.0),
            Scalar::Complex([re, im]) => C64::new(re, im),
        }
    }
}

impl From<C64> for Scalar {
    fn from(z: C64) -> Self {
        if z.im == 0.0 {
            Scalar::Real(z.re)
        } else {
            Scalar::Complex([z.re, z.im])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub subcommand: Option<Subcommand>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub geometry: Option<Geometry>,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub nonlinear: Option<NonlinearConfig>,
    #[serde(default)]
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub assertions: Assertions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub depth: Option<f64>,
    /// Nodes in `y`; defaults to `n`.
    #[serde(default)]
    pub n_y: Option<usize>,
    #[serde(default)]
    pub depth_y: Option<f64>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { n: DEFAULT_N, depth: None, n_y: None, depth_y: None }
    }
}

fn default_n() -> usize {
    DEFAULT_N
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    #[default]
    Dirichlet,
    Neumann,
    Robin,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    #[serde(default)]
    pub kind: BcKind,
    /// `[δ_0]` or `[δ_0, δ_1]`; implied by `kind` except for Robin.
    #[serde(default)]
    pub delta: Option<Vec<Scalar>>,
    #[serde(default)]
    pub data: Vec<Scalar>,
    #[serde(default)]
    pub t_scaling: bool,
    #[serde(default)]
    pub closure: Closure,
}

impl BcConfig {
    pub fn to_spec(&self) -> Result<BoundarySpec> {
        let given: Option<Vec<C64>> = self.delta.as_ref().map(|d| d.iter().map(|s| s.value()).collect());
        let mut spec = match (self.kind, given) {
            (BcKind::Dirichlet, None) => BoundarySpec::dirichlet(),
            (BcKind::Dirichlet, Some(d)) if d.len() == 1 => {
                let mut s = BoundarySpec::dirichlet();
                s.delta = d;
                s
            }
            (BcKind::Neumann, None) => BoundarySpec::neumann(),
            (BcKind::Neumann | BcKind::Robin, Some(d)) if d.len() == 2 => BoundarySpec::robin(d[0], d[1]),
            (BcKind::Robin, None) => return Err(Error::invalid("robin boundary needs delta = [δ_0, δ_1]")),
            (kind, Some(d)) => {
                return Err(Error::invalid(format!("{kind:?} boundary takes {} delta values, got {}", if kind == BcKind::Dirichlet { 1 } else { 2 }, d.len())))
            }
        };
        spec = spec
            .with_data(self.data.iter().map(|s| s.value()).collect())
            .with_t_scaling(self.t_scaling)
            .with_closure(self.closure);
        Ok(spec)
    }

    fn resolve(&mut self) -> Result<()> {
        let spec = self.to_spec()?;
        self.delta = Some(spec.delta.into_iter().map(Scalar::from).collect());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientConfig {
    Scaled { operator: OperatorSpec, factor: Expression },
    Entrywise(Expression),
}

impl CoefficientConfig {
    fn law(c: &Option<CoefficientConfig>) -> CoefficientLaw {
        match c {
            None => CoefficientLaw::Zero,
            Some(CoefficientConfig::Scaled { operator, factor }) => {
                CoefficientLaw::Scaled { op: operator.clone(), factor: factor.clone() }
            }
            Some(CoefficientConfig::Entrywise(e)) => CoefficientLaw::Entrywise(e.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovingConfig {
    /// `a(s)`, in `s`.
    pub a: Expression,
    /// `b(s)`, in `s`.
    pub b: Expression,
    #[serde(default)]
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathChoice {
    Direct,
    Reduced,
    /// Both paths, compared.
    #[default]
    Both,
}

impl PathChoice {
    pub fn paths(self) -> Vec<SolvePath> {
        match self {
            PathChoice::Direct => vec![SolvePath::Direct],
            PathChoice::Reduced => vec![SolvePath::Reduced],
            PathChoice::Both => vec![SolvePath::Direct, SolvePath::Reduced],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// 1D form; 2D problems ignore it.
    #[serde(default = "default_form")]
    pub form: Form1D,
    #[serde(default = "default_exponent")]
    pub alpha: f64,
    #[serde(default = "default_exponent")]
    pub beta: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
    #[serde(default = "default_operator")]
    pub operator: OperatorSpec,
    #[serde(default = "default_lambda")]
    pub lambda: Scalar,
    /// Parametric 1D form only.
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "one")]
    pub t1: f64,
    #[serde(default = "one")]
    pub t2: f64,
    #[serde(default)]
    pub bc: BcConfig,
    #[serde(default)]
    pub bc_x: BcConfig,
    #[serde(default)]
    pub bc_y: BcConfig,
    /// In `x` (and `y`), plus the 1-based component index `m`.
    #[serde(default = "default_rhs")]
    pub rhs: Expression,
    #[serde(default)]
    pub a1: Option<CoefficientConfig>,
    #[serde(default)]
    pub a2: Option<CoefficientConfig>,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub path: PathChoice,
    #[serde(default)]
    pub moving: Option<MovingConfig>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("problem defaults")
    }
}

fn default_form() -> Form1D {
    Form1D::Regularized
}
fn default_exponent() -> f64 {
    reference::EXPONENT
}
fn default_p() -> f64 {
    reference::P
}
fn default_q() -> f64 {
    reference::Q
}
fn one() -> f64 {
    1.0
}
fn default_operator() -> OperatorSpec {
    OperatorSpec::scalar(1.0)
}
fn default_lambda() -> Scalar {
    Scalar::Real(DEFAULT_LAMBDA)
}
fn default_rhs() -> Expression {
    Expression::constant(1.0)
}
fn default_mu() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub sector: Option<SectorSpec>,
    /// Explicit `λ` points; replaces the sector grid.
    #[serde(default)]
    pub lambdas: Option<Vec<Scalar>>,
    /// `(t1, t2)` pairs; in 1D only `t1` is used.
    #[serde(default)]
    pub t_grid: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub interp: Option<InterpMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearConfig {
    /// `g` in `a(u) = A_Φ + g`, over `x, y, u, ux, uy, m`.
    pub a_law: Expression,
    /// `F`, over the same variables.
    pub f_law: Expression,
    #[serde(default = "default_operator")]
    pub a_phi: OperatorSpec,
    #[serde(default = "one")]
    pub mu_r: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Domain halvings allowed after a divergence.
    #[serde(default)]
    pub retries: usize,
    #[serde(default = "default_samples")]
    pub lipschitz_samples: usize,
}

fn default_radius() -> f64 {
    0.25
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    30
}
fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// `d_m`, in `m`.
    pub d_law: Expression,
    /// `a_mj`, in `m, j, x, y`.
    pub a_law: Expression,
    /// `b_mj`, in `m, j, x, y`.
    pub b_law: Expression,
    pub n: usize,
    /// `f_m`, in `x, y, m`.
    pub rhs: Expression,
    /// Components with nonzero forcing; defaults to all.
    #[serde(default)]
    pub leading: Option<usize>,
    /// Truncation sizes for the self-convergence study; empty skips it.
    #[serde(default)]
    pub truncation: Vec<usize>,
    /// Sizes for the decay check; defaults to `[n]`.
    #[serde(default)]
    pub decay_sizes: Option<Vec<usize>>,
}

/// Thresholds checked by `run`; absent entries are not checked.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertions {
    /// Bracket for the coercivity ratio, or for the max ratio of a sweep.
    #[serde(default)]
    pub ratio_bracket: Option<[f64; 2]>,
    #[serde(default)]
    pub max_slope: Option<f64>,
    /// Upper bound on max/min ratio of a sweep.
    #[serde(default)]
    pub max_spread: Option<f64>,
    #[serde(default)]
    pub max_residual: Option<f64>,
    /// Relative agreement of the direct and reduced 2D paths.
    #[serde(default)]
    pub path_tolerance: Option<f64>,
    /// Relative agreement of the moving-domain pullback and the direct solve.
    #[serde(default)]
    pub moving_tolerance: Option<f64>,
    #[serde(default)]
    pub min_r2: Option<f64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub max_truncation_ratio: Option<f64>,
    #[serde(default)]
    pub max_decay_sup: Option<f64>,
}

/// Reads and validates `path`; defaults are resolved, `cmd` is checked
/// against the config's own `subcommand` field.
pub fn load_config(path: &Path, cmd: Subcommand) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config { path: path.display().to_string(), message: e.to_string() })?;
    let mut cfg = parse_config(&text)?;
    cfg.resolve(cmd)?;
    Ok(cfg)
}

/// Parses a config document, reporting schema errors with their key path.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config { path, message: e.into_inner().to_string() }
    })?;
    Ok(cfg)
}

impl RunConfig {
    pub fn geometry(&self) -> Geometry {
        self.geometry.unwrap_or(Geometry::OneD)
    }

    pub fn exponents(&self) -> Exponents {
        let p = &self.problem;
        Exponents { alpha: p.alpha, beta: p.beta, p: p.p, q: p.q }
    }

    pub fn lambda(&self) -> C64 {
        self.problem.lambda.value()
    }

    pub fn norms(&self) -> NormSpec {
        let mut n = NormSpec::new(self.problem.p, self.problem.q);
        n.interp = self.sweep.interp.unwrap_or(InterpMethod::Closed);
        n
    }

    /// Fills every problem-dependent default and validates the inputs of
    /// `cmd` by building them.
    pub fn resolve(&mut self, cmd: Subcommand) -> Result<()> {
        match self.subcommand {
            Some(s) if s != cmd => {
                return Err(Error::Config {
                    path: "subcommand".into(),
                    message: format!("config is for `{}`, invoked as `{}`", s.name(), cmd.name()),
                })
            }
            _ => self.subcommand = Some(cmd),
        }
        if cmd == Subcommand::VerifyAll {
            return Ok(());
        }
        let geometry = match cmd {
            Subcommand::Solve1d => Geometry::OneD,
            Subcommand::Solve2d | Subcommand::Moving | Subcommand::Nonlinear | Subcommand::System => Geometry::TwoD,
            _ => self.geometry(),
        };
        if let Some(g) = self.geometry {
            if g != geometry {
                return Err(Error::Config { path: "geometry".into(), message: format!("`{}` runs in 2D", cmd.name()) });
            }
        }
        self.geometry = Some(geometry);
        for bc in [&mut self.problem.bc, &mut self.problem.bc_x, &mut self.problem.bc_y] {
            bc.resolve()?;
        }
        if self.sweep.interp.is_none() {
            self.sweep.interp = Some(InterpMethod::Closed);
        }
        match cmd {
            Subcommand::SweepLambda if self.sweep.lambdas.is_none() && self.sweep.sector.is_none() => {
                self.sweep.sector = Some(reference::sector());
            }
            Subcommand::SweepT if self.sweep.t_grid.is_none() => {
                self.sweep.t_grid = Some(reference::t_grid().into_iter().map(|(a, b)| [a, b]).collect());
            }
            _ => {}
        }
        if let Some(s) = &self.sweep.sector {
            s.validate()?;
        }
        if cmd == Subcommand::SweepT && geometry == Geometry::OneD && self.problem.form != Form1D::Parametric {
            return Err(Error::Config { path: "problem.form".into(), message: "a 1D t-sweep needs the parametric form".into() });
        }
        if let Some(sys) = &mut self.system {
            if sys.leading.is_none() {
                sys.leading = Some(sys.n);
            }
            if sys.decay_sizes.is_none() {
                sys.decay_sizes = Some(vec![sys.n]);
            }
        }
        match geometry {
            Geometry::OneD => {
                let p = self.problem_1d()?;
                self.mesh.depth = Some(p.grid.depth());
            }
            Geometry::TwoD => {
                let p = match cmd {
                    Subcommand::Nonlinear => self.nonlinear_spec()?.base,
                    Subcommand::System => self.system_spec()?.base,
                    _ => self.problem_2d()?,
                };
                self.mesh.n_y = Some(p.grid.gy.n());
                self.mesh.depth = Some(p.grid.gx.depth());
                self.mesh.depth_y = Some(p.grid.gy.depth());
            }
        }
        Ok(())
    }

    pub fn problem_1d(&self) -> Result<Problem1D> {
        let c = &self.problem;
        let mesh = MeshSpec { n: self.mesh.n, depth: self.mesh.depth };
        let p = Problem1D::new(c.form, c.alpha, c.p, c.a, c.operator.clone(), self.lambda(), mesh)?
            .with_bc(c.bc.to_spec()?)
            .with_rhs(Rhs::Expr(c.rhs.clone()))
            .with_t(c.t);
        p.validate()?;
        Ok(p)
    }

    fn problem_2d_with(&self, op: OperatorSpec) -> Result<Problem2D> {
        let c = &self.problem;
        let ex = self.exponents();
        check_window("alpha", ex.alpha, ex.p)?;
        check_window("beta", ex.beta, ex.p)?;
        let mx = MeshSpec { n: self.mesh.n, depth: self.mesh.depth };
        let my = MeshSpec { n: self.mesh.n_y.unwrap_or(self.mesh.n), depth: self.mesh.depth_y };
        let mut p = Problem2D::new(ex, c.a, c.b, op, self.lambda(), mx, my)?
            .with_bcs(c.bc_x.to_spec()?, c.bc_y.to_spec()?)
            .with_t(c.t1, c.t2)
            .with_rhs(Rhs::Expr(c.rhs.clone()))
            .with_coefficients(CoefficientConfig::law(&c.a1), CoefficientConfig::law(&c.a2));
        p.mu = c.mu;
        p.moving = c.moving.as_ref().map(|m| MovingLaw { a_of_s: m.a.clone(), b_of_s: m.b.clone(), s: m.s });
        p.validate()?;
        Ok(p)
    }

    pub fn problem_2d(&self) -> Result<Problem2D> {
        self.problem_2d_with(self.problem.operator.clone())
    }

    pub fn nonlinear_spec(&self) -> Result<NonlinearSpec> {
        let c = self.nonlinear.as_ref().ok_or_else(|| Error::Config {
            path: "nonlinear".into(),
            message: "the nonlinear subcommand needs a `nonlinear` section".into(),
        })?;
        let spec = NonlinearSpec {
            a_law: c.a_law.clone(),
            f_law: c.f_law.clone(),
            a_phi: c.a_phi.clone(),
            base: self.problem_2d_with(c.a_phi.clone())?,
            mu_r: c.mu_r,
            radius: c.radius,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn system_spec(&self) -> Result<SystemSpec> {
        let c = self.system.as_ref().ok_or_else(|| Error::Config {
            path: "system".into(),
            message: "the system subcommand needs a `system` section".into(),
        })?;
        let mut spec = SystemSpec {
            d_law: c.d_law.clone(),
            a_law: c.a_law.clone(),
            b_law: c.b_law.clone(),
            mu: self.problem.mu,
            n: c.n,
            q: self.problem.q,
            base: self.problem_2d()?,
            rhs: c.rhs.clone(),
            leading: c.leading.unwrap_or(c.n),
        };
        spec.validate()?;
        // The shared grid is truncated for the smallest eigenvalue d_1.
        let d = spec.diagonal(1)?;
        let floor = OperatorSpec::Diagonal(d);
        spec.base = self.problem_2d_with(floor)?;
        Ok(spec)
    }

    /// `λ` points of a sweep, in sweep order.
    pub fn lambda_points(&self) -> Option<Vec<C64>> {
        if let Some(l) = &self.sweep.lambdas {
            return Some(l.iter().map(|s| s.value()).collect());
        }
        self.sweep.sector.as_ref().map(|s| s.points())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig> {
        parse_config(s)
    }

    #[test]
    fn minimal_solve1d_resolves_defaults() {
        let mut c = parse("{}").unwrap();
        c.resolve(Subcommand::Solve1d).unwrap();
        assert_eq!(c.mesh.n, 257);
        assert_eq!(c.lambda(), C64::new(1e3, 0.0));
        let want = crate::mesh::default_depth(1.0 + 1e3);
        assert_eq!(c.mesh.depth, Some(want));
        assert_eq!(c.geometry, Some(Geometry::OneD));
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse(r#"{"problem": {"alfa": 1.3}}"#).unwrap_err();
        match e {
            Error::Config { path, message } => {
                assert!(message.contains("alfa"), "{message}");
                assert!(path.starts_with("problem"), "{path}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn exponent_outside_window_is_named() {
        let mut c = parse(r#"{"problem": {"alpha": 0.5, "p": 4}}"#).unwrap();
        assert!(matches!(c.resolve(Subcommand::Solve1d), Err(Error::Window(_))));
        let mut c = parse(r#"{"problem": {"alpha": 0.5, "p": 4}}"#).unwrap();
        assert!(matches!(c.resolve(Subcommand::Solve2d), Err(Error::Window(_))));
    }

    #[test]
    fn subcommand_mismatch_is_rejected() {
        let mut c = parse(r#"{"subcommand": "solve2d"}"#).unwrap();
        assert!(matches!(c.resolve(Subcommand::Solve1d), Err(Error::Config { .. })));
    }

    #[test]
    fn lambda_accepts_real_or_pair() {
        let c = parse(r#"{"problem": {"lambda": [2, -3]}}"#).unwrap();
        assert_eq!(c.lambda(), C64::new(2.0, -3.0));
        let c = parse(r#"{"problem": {"lambda": 5}}"#).unwrap();
        assert_eq!(c.lambda(), C64::new(5.0, 0.0));
    }

    #[test]
    fn echo_round_trips() {
        let mut c = parse(r#"{"problem": {"rhs": "exp(x) + m", "bc_x": {"kind": "robin", "delta": [1, 0.5]}}, "mesh": {"n": 17}}"#).unwrap();
        c.resolve(Subcommand::Solve2d).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let mut back = parse(&text).unwrap();
        assert_eq!(back, c);
        back.resolve(Subcommand::Solve2d).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn robin_needs_two_coefficients() {
        let mut c = parse(r#"{"problem": {"bc": {"kind": "robin"}}}"#).unwrap();
        assert!(c.resolve(Subcommand::Solve1d).is_err());
    }

    #[test]
    fn negative_spectrum_lambda_is_rejected() {
        let mut c = parse(r#"{"problem": {"lambda": -2}}"#).unwrap();
        assert!(matches!(c.resolve(Subcommand::Solve1d), Err(Error::InvalidInput(_))));
    }
}
