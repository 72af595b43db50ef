//! One-dimensional degenerate boundary value problems.
//!
//! Everything is discretized in the transformed coordinate `y`, where the
//! regularized derivative `x^α d/dx` is `d/dy`. The boundary functional sits
//! at `y = 0` (`x = a`) and the degenerate end is closed at `y = -depth`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcdsl::Expression;
use crate::linalg::{self, Triplets};
use crate::mesh::{self, build_grid, default_depth, DiscreteField, Grid1D, TransformMap};
use crate::opspace::{sigma, OperatorSpec};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Closure imposed at the truncation point `y = -depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// `u = 0`.
    #[default]
    Dirichlet,
    /// `u_y = 0` with a second-order one-sided stencil.
    Neumann,
}

/// `Σ_{i ≤ m} s_i δ_i u^[i](a) = f_1`, with `s_i = t^{σ_i}` when scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub m: u8,
    pub delta: Vec<C64>,
    /// One value per component; empty means homogeneous.
    pub data: Vec<C64>,
    pub t_scaling: bool,
    pub closure: Closure,
}

impl BoundarySpec {
    pub fn dirichlet() -> Self {
        BoundarySpec {
            m: 0,
            delta: vec![C64::new(1.0, 0.0)],
            data: Vec::new(),
            t_scaling: false,
            closure: Closure::Dirichlet,
        }
    }

    /// `u^[1](a) = 0`.
    pub fn neumann() -> Self {
        Self::robin(ZERO, C64::new(1.0, 0.0))
    }

    pub fn robin(d0: C64, d1: C64) -> Self {
        BoundarySpec {
            m: 1,
            delta: vec![d0, d1],
            data: Vec::new(),
            t_scaling: false,
            closure: Closure::Dirichlet,
        }
    }

    pub fn with_data(mut self, data: Vec<C64>) -> Self {
        self.data = data;
        self
    }

    pub fn with_t_scaling(mut self, on: bool) -> Self {
        self.t_scaling = on;
        self
    }

    pub fn with_closure(mut self, closure: Closure) -> Self {
        self.closure = closure;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.m > 1 {
            return Err(Error::invalid(format!("boundary order m = {} must be 0 or 1", self.m)));
        }
        if self.delta.len() != self.m as usize + 1 {
            return Err(Error::invalid(format!(
                "boundary functional of order {} needs {} coefficients, got {}",
                self.m,
                self.m + 1,
                self.delta.len()
            )));
        }
        if self.delta[self.m as usize] == ZERO {
            return Err(Error::invalid("leading boundary coefficient δ_m must be nonzero"));
        }
        if !self.data.is_empty() && self.data.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: self.data.len() });
        }
        Ok(())
    }

    pub fn is_homogeneous(&self) -> bool {
        self.data.iter().all(|v| *v == ZERO)
    }

    pub fn data_or_zero(&self, dim: usize) -> Vec<C64> {
        if self.data.is_empty() {
            vec![ZERO; dim]
        } else {
            self.data.clone()
        }
    }

    /// `[s_0 δ_0, s_1 δ_1]`, zero-padded when `m = 0`.
    pub fn scaled_coefficients(&self, t: f64, gamma: f64, p: f64) -> [C64; 2] {
        let mut out = [ZERO; 2];
        for (i, d) in self.delta.iter().enumerate() {
            let s = if self.t_scaling { t.powf(sigma(i as u32, gamma, p)) } else { 1.0 };
            out[i] = d * s;
        }
        out
    }
}

/// A 1D stencil with the two end nodes eliminated.
///
/// Unknowns are the interior nodes `1..n-1`; the end values follow from the
/// truncation closure and the homogeneous boundary functional.
#[derive(Debug, Clone)]
pub struct LineOperator {
    n: usize,
    /// `-D2 + drift · D1` on interior nodes.
    pub second: Triplets,
    /// Central `D1` on interior nodes.
    pub first: Triplets,
    ext: Vec<Vec<(usize, C64)>>,
}

impl LineOperator {
    /// `drift` is `Some(α)` for the plain form, which adds `α x^(α-1) d/dy`.
    pub fn build(
        grid: &Grid1D,
        drift: Option<f64>,
        m: u8,
        coeffs: [C64; 2],
        closure: Closure,
    ) -> Result<Self> {
        let n = grid.n();
        if n < 5 {
            return Err(Error::invalid(format!("grid needs at least 5 nodes, got {n}")));
        }
        let h = grid.h();
        let ni = n - 2;
        let mut ext: Vec<Vec<(usize, C64)>> = (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    Vec::new()
                } else {
                    vec![(i - 1, C64::new(1.0, 0.0))]
                }
            })
            .collect();
        if closure == Closure::Neumann {
            ext[0] = vec![(0, C64::new(4.0 / 3.0, 0.0)), (1, C64::new(-1.0 / 3.0, 0.0))];
        }
        if m == 1 {
            let c0 = coeffs[0];
            let c1 = coeffs[1] / (2.0 * h);
            let denom = c0 + 3.0 * c1;
            if denom.norm() <= 1e-300 || !(denom.re.is_finite() && denom.im.is_finite()) {
                return Err(Error::Singular("boundary functional degenerates on this mesh".into()));
            }
            ext[n - 1] = vec![(ni - 1, 4.0 * c1 / denom), (ni - 2, -c1 / denom)];
        } else if coeffs[0] == ZERO {
            return Err(Error::invalid("leading boundary coefficient δ_0 must be nonzero"));
        }

        let x = grid.x_nodes();
        let mut second = Triplets::new(ni);
        let mut first = Triplets::new(ni);
        for i in 1..n - 1 {
            let row = i - 1;
            let dr = drift.map_or(0.0, |a| a * x[i].powf(a - 1.0));
            let stencil2 = [
                (i - 1, -1.0 / (h * h) - dr / (2.0 * h)),
                (i, 2.0 / (h * h)),
                (i + 1, -1.0 / (h * h) + dr / (2.0 * h)),
            ];
            for (j, v) in stencil2 {
                for &(k, e) in &ext[j] {
                    second.push(row, k, e * v);
                }
            }
            for (j, v) in [(i - 1, -1.0 / (2.0 * h)), (i + 1, 1.0 / (2.0 * h))] {
                for &(k, e) in &ext[j] {
                    first.push(row, k, e * v);
                }
            }
        }
        Ok(LineOperator { n, second, first, ext })
    }

    pub fn interior(&self) -> usize {
        self.n - 2
    }

    pub fn full(&self) -> usize {
        self.n
    }

    /// Extension weights of full node `i` in terms of interior unknowns.
    pub fn extension(&self, i: usize) -> &[(usize, C64)] {
        &self.ext[i]
    }

    pub fn extend(&self, interior: &[C64]) -> Vec<C64> {
        self.ext
            .iter()
            .map(|w| w.iter().map(|&(k, c)| c * interior[k]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form1D {
    /// `-u^[2] + (A+λ)u = f`.
    Regularized,
    /// `-x^(2α) u'' + (A+λ)u = f`.
    Plain,
    /// `-t u^[2] + (A+λ)u = f` with optionally `t^σ`-scaled boundary terms.
    Parametric,
}

/// Right-hand side over a 1D or 2D grid.
#[derive(Debug, Clone)]
pub enum Rhs {
    Zero,
    /// In physical coordinates: `x` (and `y` in 2D), plus the 1-based component index `m`.
    Expr(Expression),
    Field(DiscreteField),
}

impl Rhs {
    pub fn expr(src: &str) -> Result<Self> {
        Ok(Rhs::Expr(Expression::parse(src)?))
    }

    /// Samples at `points` (each a coordinate tuple matching `vars`).
    pub(crate) fn sample(&self, vars: &[&str], points: &[Vec<f64>], dim: usize) -> Result<DiscreteField> {
        match self {
            Rhs::Zero => Ok(DiscreteField::zeros(points.len(), dim)),
            Rhs::Field(f) => {
                if f.nodes() != points.len() || f.dim_e() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: points.len() * dim,
                        got: f.values().len(),
                    });
                }
                Ok(f.clone())
            }
            Rhs::Expr(e) => {
                let mut slots: Vec<&str> = vars.to_vec();
                slots.push("m");
                let c = e.compile(&slots)?;
                let mut out = Vec::with_capacity(points.len() * dim);
                let mut buf = vec![0.0; slots.len()];
                for pt in points {
                    buf[..pt.len()].copy_from_slice(pt);
                    for m in 0..dim {
                        buf[vars.len()] = (m + 1) as f64;
                        out.push(C64::new(c.eval(&buf)?, 0.0));
                    }
                }
                DiscreteField::new(out, dim)
            }
        }
    }
}

/// Grid resolution; `depth = None` applies the default depth rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub n: usize,
    pub depth: Option<f64>,
}

impl MeshSpec {
    pub fn new(n: usize) -> Self {
        MeshSpec { n, depth: None }
    }

    pub fn with_depth(n: usize, depth: f64) -> Self {
        MeshSpec { n, depth: Some(depth) }
    }

    /// Resolved depth for decay rate `d_min + max(Re λ, 0)`.
    pub fn resolve_depth(&self, op: &OperatorSpec, lambda: C64) -> Result<f64> {
        match self.depth {
            Some(d) => Ok(d),
            None => Ok(default_depth(op.spectral_floor()? + lambda.re.max(0.0))),
        }
    }

    pub fn grid(&self, gamma: f64, a: f64, op: &OperatorSpec, lambda: C64) -> Result<Grid1D> {
        build_grid(TransformMap::new(gamma, a)?, self.n, self.resolve_depth(op, lambda)?)
    }
}

fn check_exponent(exponent: f64, p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p = {p} must lie in (1, ∞)")));
    }
    if !(exponent > 1.0 + 1.0 / p) {
        return Err(Error::Window(format!("exponent {exponent} must exceed 1 + 1/p = {}", 1.0 + 1.0 / p)));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Problem1D {
    pub kind: Form1D,
    pub exponent: f64,
    pub p: f64,
    pub a: f64,
    pub op: OperatorSpec,
    pub lambda: C64,
    /// Used by the parametric form only.
    pub t: f64,
    pub bc: BoundarySpec,
    pub rhs: Rhs,
    pub grid: Grid1D,
}

impl Problem1D {
    /// Dirichlet data zero, zero rhs, `t = 1`; the grid is built from `mesh`.
    pub fn new(
        kind: Form1D,
        exponent: f64,
        p: f64,
        a: f64,
        op: OperatorSpec,
        lambda: C64,
        mesh: MeshSpec,
    ) -> Result<Self> {
        check_exponent(exponent, p)?;
        op.validate()?;
        let grid = mesh.grid(exponent, a, &op, lambda)?;
        Ok(Problem1D {
            kind,
            exponent,
            p,
            a,
            op,
            lambda,
            t: 1.0,
            bc: BoundarySpec::dirichlet(),
            rhs: Rhs::Zero,
            grid,
        })
    }

    pub fn with_bc(mut self, bc: BoundarySpec) -> Self {
        self.bc = bc;
        self
    }

    pub fn with_rhs(mut self, rhs: Rhs) -> Self {
        self.rhs = rhs;
        self
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn with_lambda(mut self, lambda: C64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// The `t` actually multiplying the principal term.
    pub fn effective_t(&self) -> f64 {
        match self.kind {
            Form1D::Parametric => self.t,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.exponent, self.p)?;
        if self.kind == Form1D::Parametric && !(self.t > 0.0 && self.t <= 1.0) {
            return Err(Error::invalid(format!("t = {} must lie in (0, 1]", self.t)));
        }
        if !(self.lambda.re.is_finite() && self.lambda.im.is_finite()) {
            return Err(Error::invalid("λ must be finite"));
        }
        self.op.validate()?;
        self.op.check_lambda(self.lambda)?;
        self.bc.validate(self.dim())?;
        let tm = self.grid.transform();
        if tm.gamma() != self.exponent || tm.a() != self.a {
            return Err(Error::invalid("grid transform does not match the problem exponent and endpoint"));
        }
        Ok(())
    }

    /// Samples of the right-hand side at the grid nodes.
    pub fn rhs_field(&self) -> Result<DiscreteField> {
        let pts: Vec<Vec<f64>> = self.grid.x_nodes().iter().map(|&x| vec![x]).collect();
        self.rhs.sample(&["x"], &pts, self.dim())
    }

    fn boundary_coefficients(&self) -> [C64; 2] {
        let t = if self.kind == Form1D::Parametric { self.t } else { 1.0 };
        let mut bc = self.bc.clone();
        bc.t_scaling &= self.kind == Form1D::Parametric;
        bc.scaled_coefficients(t, self.exponent, self.p)
    }

    fn drift(&self) -> Option<f64> {
        (self.kind == Form1D::Plain).then_some(self.exponent)
    }

    /// The interior operator with homogeneous boundary conditions at `λ = 0`,
    /// one component: `t·(-D2 + drift)`.
    pub fn line_operator(&self) -> Result<LineOperator> {
        self.validate()?;
        let mut lo = LineOperator::build(&self.grid, self.drift(), self.bc.m, self.boundary_coefficients(), self.bc.closure)?;
        let t = self.effective_t();
        if t != 1.0 {
            let mut s = Triplets::new(lo.interior());
            s.add_scaled(&lo.second, C64::new(t, 0.0));
            lo.second = s;
        }
        Ok(lo)
    }
}

/// Assembled linear system with unknowns ordered `(node, component)`.
#[derive(Debug, Clone)]
pub struct System {
    pub matrix: Triplets,
    pub rhs: Vec<C64>,
}

pub fn assemble_1d(p: &Problem1D) -> Result<System> {
    p.validate()?;
    let g = &p.grid;
    let n = g.n();
    if n < 4 {
        return Err(Error::invalid(format!("grid needs at least 4 nodes, got {n}")));
    }
    let dim = p.dim();
    let h = g.h();
    let x = g.x_nodes();
    let t = p.effective_t();
    let f = p.rhs_field()?;
    let mut m = Triplets::new(n * dim);
    let mut b = vec![ZERO; n * dim];
    let idx = |node: usize, c: usize| node * dim + c;

    for c in 0..dim {
        let r = idx(0, c);
        match p.bc.closure {
            Closure::Dirichlet => m.push_real(r, r, 1.0),
            Closure::Neumann => {
                m.push_real(r, idx(0, c), -3.0);
                m.push_real(r, idx(1, c), 4.0);
                m.push_real(r, idx(2, c), -1.0);
            }
        }
    }

    let drift = p.drift();
    for i in 1..n - 1 {
        let dr = drift.map_or(0.0, |a| a * x[i].powf(a - 1.0));
        for c in 0..dim {
            let r = idx(i, c);
            m.push_real(r, idx(i - 1, c), -t / (h * h) - dr / (2.0 * h));
            m.push_real(r, idx(i, c), 2.0 * t / (h * h));
            m.push_real(r, idx(i + 1, c), -t / (h * h) + dr / (2.0 * h));
            for d in 0..dim {
                let a = p.op.entry(c, d);
                if a != 0.0 {
                    m.push_real(r, idx(i, d), a);
                }
            }
            m.push(r, r, p.lambda);
            b[r] = f.at(i)[c];
        }
    }

    let coeffs = p.boundary_coefficients();
    let data = p.bc.data_or_zero(dim);
    for c in 0..dim {
        let r = idx(n - 1, c);
        m.push(r, r, coeffs[0]);
        if p.bc.m == 1 {
            let c1 = coeffs[1] / (2.0 * h);
            m.push(r, idx(n - 1, c), 3.0 * c1);
            m.push(r, idx(n - 2, c), -4.0 * c1);
            m.push(r, idx(n - 3, c), c1);
        }
        b[r] = data[c];
    }
    Ok(System { matrix: m, rhs: b })
}

#[derive(Debug, Clone)]
pub struct Solution1D {
    pub u: DiscreteField,
    pub u1: DiscreteField,
    pub u2: DiscreteField,
    pub au: DiscreteField,
    /// Discrete right-hand side the solve used.
    pub f: DiscreteField,
    pub residual_norm: f64,
}

pub fn solve_1d(p: &Problem1D) -> Result<Solution1D> {
    let sys = assemble_1d(p)?;
    let (x, residual_norm) = linalg::solve_checked(&sys.matrix, &sys.rhs)?;
    let dim = p.dim();
    let u = DiscreteField::new(x, dim)?;
    let u1 = mesh::reg_derivative(&u, &p.grid, p.exponent, 1)?;
    let u2 = mesh::reg_derivative(&u, &p.grid, p.exponent, 2)?;
    let au = apply_pointwise(&p.op, &u)?;
    let f = p.rhs_field()?;
    Ok(Solution1D { u, u1, u2, au, f, residual_norm })
}

/// `A` applied at every node.
pub fn apply_pointwise(op: &OperatorSpec, u: &DiscreteField) -> Result<DiscreteField> {
    let mut out = Vec::with_capacity(u.values().len());
    for i in 0..u.nodes() {
        out.extend(op.apply(u.at(i))?);
    }
    DiscreteField::new(out, u.dim_e())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{weighted_lp_norm, ComponentNorm};

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn reference(n: usize) -> Problem1D {
        Problem1D::new(Form1D::Regularized, 1.3, 4.0, 1.0, OperatorSpec::scalar(1.0), c(1.0), MeshSpec::new(n))
            .unwrap()
            .with_rhs(Rhs::expr("exp((x^-0.3 - 1)/(-0.3))").unwrap())
            .with_bc(BoundarySpec::dirichlet().with_data(vec![c(1.0)]))
    }

    fn err_vs(p: &Problem1D, s: &Solution1D, exact: impl Fn(f64) -> f64) -> f64 {
        let e: Vec<C64> = p.grid.y_nodes().iter().map(|&y| c(exact(y))).collect();
        let ex = DiscreteField::new(e, 1).unwrap();
        let diff = s.u.sub(&ex).unwrap();
        let norm = ComponentNorm::Lq(2.0);
        weighted_lp_norm(&diff, &p.grid, 4.0, &norm).unwrap() / weighted_lp_norm(&ex, &p.grid, 4.0, &norm).unwrap()
    }

    #[test]
    fn manufactured_second_order() {
        let errs: Vec<f64> = [65, 129, 257, 513]
            .iter()
            .map(|&n| {
                let p = reference(n);
                let s = solve_1d(&p).unwrap();
                assert!(s.residual_norm <= 1e-10);
                err_vs(&p, &s, f64::exp)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "order {order}, errors {errs:?}");
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let p = Problem1D::new(Form1D::Regularized, 1.3, 4.0, 1.0, OperatorSpec::scalar(2.0), C64::new(3.0, 4.0), MeshSpec::new(65))
            .unwrap()
            .with_bc(BoundarySpec::neumann());
        let s = solve_1d(&p).unwrap();
        assert!(s.u.max_abs() <= 1e-12);
    }

    #[test]
    fn dirichlet_half_line_decay() {
        let cc = 2.0;
        let p = Problem1D::new(Form1D::Regularized, 1.3, 4.0, 1.0, OperatorSpec::scalar(cc), c(0.0), MeshSpec::new(513))
            .unwrap()
            .with_bc(BoundarySpec::dirichlet().with_data(vec![c(0.7)]));
        let s = solve_1d(&p).unwrap();
        let y = p.grid.y_nodes();
        let h = p.grid.h();
        let worst = (0..y.len())
            .map(|i| (s.u.values()[i].re - 0.7 * (cc.sqrt() * y[i]).exp()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.7 * h * h, "{worst}");
    }

    #[test]
    fn diagonal_decouples() {
        let mesh = MeshSpec::with_depth(129, 12.0);
        let data = vec![c(1.0), c(-0.5)];
        let p = Problem1D::new(Form1D::Regularized, 1.3, 4.0, 1.0, OperatorSpec::Diagonal(vec![1.0, 4.0]), c(2.0), mesh)
            .unwrap()
            .with_rhs(Rhs::expr("x * m + sin(m * x)").unwrap())
            .with_bc(BoundarySpec::robin(c(1.0), c(0.5)).with_data(data.clone()));
        let s = solve_1d(&p).unwrap();
        for (m, d) in [1.0, 4.0].iter().enumerate() {
            let src = format!("x * {k} + sin({k} * x)", k = m + 1);
            let q = Problem1D::new(Form1D::Regularized, 1.3, 4.0, 1.0, OperatorSpec::scalar(*d), c(2.0), mesh)
                .unwrap()
                .with_rhs(Rhs::expr(&src).unwrap())
                .with_bc(BoundarySpec::robin(c(1.0), c(0.5)).with_data(vec![data[m]]));
            let sq = solve_1d(&q).unwrap();
            let comp = s.u.component(m);
            let worst = comp.iter().zip(sq.u.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(worst <= 1e-12, "component {m}: {worst}");
        }
    }

    #[test]
    fn unit_t_scaling_is_identity() {
        let base = reference(65).with_bc(BoundarySpec::robin(c(1.0), c(2.0)));
        let on = Problem1D { kind: Form1D::Parametric, ..base.clone() }.with_bc(BoundarySpec::robin(c(1.0), c(2.0)).with_t_scaling(true));
        let off = Problem1D { kind: Form1D::Parametric, ..base };
        let a = assemble_1d(&on).unwrap();
        let b = assemble_1d(&off).unwrap();
        assert_eq!(a.matrix.entries(), b.matrix.entries());
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn linearity() {
        let p1 = reference(65).with_rhs(Rhs::expr("x^2").unwrap());
        let p2 = reference(65).with_rhs(Rhs::expr("cos(x)").unwrap()).with_bc(BoundarySpec::dirichlet().with_data(vec![c(-2.0)]));
        let p12 = reference(65).with_rhs(Rhs::expr("x^2 + cos(x)").unwrap()).with_bc(BoundarySpec::dirichlet().with_data(vec![c(-1.0)]));
        let (s1, s2, s12) = (solve_1d(&p1).unwrap(), solve_1d(&p2).unwrap(), solve_1d(&p12).unwrap());
        for i in 0..65 {
            let d = s12.u.values()[i] - s1.u.values()[i] - s2.u.values()[i];
            assert!(d.norm() <= 1e-12);
        }
    }

    #[test]
    fn plain_and_regularized_agree_under_refinement() {
        // u = e^y: the plain form adds α x^(α-1) u_y to the regularized operator.
        let diffs: Vec<f64> = [129, 257]
            .iter()
            .map(|&n| {
                let plain = Problem1D { kind: Form1D::Plain, ..reference(n) }
                    .with_rhs(Rhs::expr("exp((x^-0.3 - 1)/(-0.3)) * (1 + 1.3 * x^0.3)").unwrap());
                let reg = reference(n);
                let a = solve_1d(&plain).unwrap();
                let b = solve_1d(&reg).unwrap();
                let d = a.u.sub(&b.u).unwrap();
                let norm = ComponentNorm::Lq(2.0);
                weighted_lp_norm(&d, &reg.grid, 4.0, &norm).unwrap() / weighted_lp_norm(&b.u, &reg.grid, 4.0, &norm).unwrap()
            })
            .collect();
        assert!(diffs[0] < 5e-3, "{diffs:?}");
        assert!(diffs[0] / diffs[1] > 3.5, "{diffs:?}");
    }

    #[test]
    fn truncation_depth_insensitive() {
        let norm = ComponentNorm::Lq(2.0);
        let mk = |depth: f64, n: usize| {
            Problem1D::new(Form1D::Regularized, 1.3, 4.0, 1.0, OperatorSpec::scalar(1.0), c(1.0), MeshSpec::with_depth(n, depth))
                .unwrap()
                .with_bc(BoundarySpec::dirichlet().with_data(vec![c(1.0)]))
        };
        // Same spacing, twice the depth: compare on the shared nodes.
        let a = mk(16.0, 257);
        let b = mk(32.0, 513);
        let sa = solve_1d(&a).unwrap();
        let sb = solve_1d(&b).unwrap();
        let tail: Vec<C64> = sb.u.values()[256..].to_vec();
        let d = sa.u.sub(&DiscreteField::new(tail, 1).unwrap()).unwrap();
        let rel = weighted_lp_norm(&d, &a.grid, 4.0, &norm).unwrap() / weighted_lp_norm(&sa.u, &a.grid, 4.0, &norm).unwrap();
        assert!(rel <= 1e-8, "{rel}");
    }

    #[test]
    fn line_operator_matches_full_system() {
        let p = reference(33).with_bc(BoundarySpec::robin(c(1.0), c(0.5)).with_closure(Closure::Neumann)).with_rhs(Rhs::expr("x").unwrap());
        let s = solve_1d(&p).unwrap();
        let lo = p.line_operator().unwrap();
        let mut m = lo.second.clone();
        m.add_scaled(&linalg::identity(lo.interior()), c(2.0));
        let f = p.rhs_field().unwrap();
        let (ui, _) = linalg::solve_checked(&m, &f.values()[1..32]).unwrap();
        let full = lo.extend(&ui);
        for (a, b) in full.iter().zip(s.u.values()) {
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let p = reference(33).with_bc(BoundarySpec::robin(c(1.0), c(0.0)));
        assert!(solve_1d(&p).is_err());
        let mut q = reference(33);
        q.exponent = 1.1;
        assert!(matches!(solve_1d(&q), Err(Error::Window(_))));
    }
}
