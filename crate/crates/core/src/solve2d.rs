//! Two-dimensional problems on `(0,a) × (0,b)`.
//!
//! Unknowns are the interior nodes of both transformed grids, ordered
//! `(x, y, component)`. End nodes are eliminated through the 1D line
//! operators, so the principal part is the Kronecker sum
//! `t1·Tx ⊗ I ⊗ I + t2·I ⊗ Ty ⊗ I + I ⊗ I ⊗ (A+λ)`.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcdsl::{Compiled, Expression};
use crate::linalg::{self, Triplets};
use crate::mesh::{self, Axis, DiscreteField, Exponents, Grid2D};
use crate::opspace::{induced_norm, invert, OperatorSpec};
use crate::solve1d::{apply_pointwise, BoundarySpec, LineOperator, MeshSpec, Rhs};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Operator-valued lower-order coefficient `A_i(x, y)`.
#[derive(Debug, Clone, Default)]
pub enum CoefficientLaw {
    #[default]
    Zero,
    /// `factor(x, y) · op`.
    Scaled { op: OperatorSpec, factor: Expression },
    /// Entry `(m, j)` given by an expression in `m, j, x, y` (1-based indices).
    Entrywise(Expression),
}

enum CompiledLaw {
    Zero,
    Scaled(OperatorSpec, Compiled),
    Entrywise(Compiled),
}

impl CoefficientLaw {
    pub fn is_zero(&self) -> bool {
        matches!(self, CoefficientLaw::Zero)
    }

    fn compile(&self) -> Result<CompiledLaw> {
        Ok(match self {
            CoefficientLaw::Zero => CompiledLaw::Zero,
            CoefficientLaw::Scaled { op, factor } => CompiledLaw::Scaled(op.clone(), factor.compile(&["x", "y"])?),
            CoefficientLaw::Entrywise(e) => CompiledLaw::Entrywise(e.compile(&["m", "j", "x", "y"])?),
        })
    }
}

impl CompiledLaw {
    /// Row-major `dim × dim` matrix at `(x, y)`, or `None` when identically zero.
    fn at(&self, x: f64, y: f64, dim: usize) -> Result<Option<Vec<f64>>> {
        match self {
            CompiledLaw::Zero => Ok(None),
            CompiledLaw::Scaled(op, f) => {
                let s = f.eval(&[x, y])?;
                Ok(Some((0..dim * dim).map(|k| s * op.entry(k / dim, k % dim)).collect()))
            }
            CompiledLaw::Entrywise(e) => {
                let mut out = Vec::with_capacity(dim * dim);
                for m in 0..dim {
                    for j in 0..dim {
                        out.push(e.eval(&[(m + 1) as f64, (j + 1) as f64, x, y])?);
                    }
                }
                Ok(Some(out))
            }
        }
    }
}

/// `G_s = (0, a(s)) × (0, b(s))`.
#[derive(Debug, Clone)]
pub struct MovingLaw {
    pub a_of_s: Expression,
    pub b_of_s: Expression,
    pub s: f64,
}

impl MovingLaw {
    pub fn extents(&self) -> Result<(f64, f64)> {
        let a = self.a_of_s.compile(&["s"])?.eval(&[self.s])?;
        let b = self.b_of_s.compile(&["s"])?.eval(&[self.s])?;
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::invalid(format!("moving domain needs a(s) > 0 and b(s) > 0, got a = {a}, b = {b}")));
        }
        Ok((a, b))
    }
}

/// Principal coefficient after `ξ = κ x`: `x^(2e) ∂²_x = κ^(2(1-e)) ξ^(2e) ∂²_ξ`.
pub fn rescale_coefficient(kappa: f64, exponent: f64) -> f64 {
    kappa.powf(2.0 * (1.0 - exponent))
}

#[derive(Debug, Clone)]
pub struct Problem2D {
    pub exponents: Exponents,
    pub a: f64,
    pub b: f64,
    pub op: OperatorSpec,
    pub a1: CoefficientLaw,
    pub a2: CoefficientLaw,
    pub lambda: C64,
    pub t1: f64,
    pub t2: f64,
    pub bc_x: BoundarySpec,
    pub bc_y: BoundarySpec,
    pub rhs: Rhs,
    pub grid: Grid2D,
    pub moving: Option<MovingLaw>,
    /// Exponent in the boundedness check `sup ‖A_i A^{-(1/2-μ)}‖`.
    pub mu: f64,
}

impl Problem2D {
    pub fn new(
        exponents: Exponents,
        a: f64,
        b: f64,
        op: OperatorSpec,
        lambda: C64,
        mesh_x: MeshSpec,
        mesh_y: MeshSpec,
    ) -> Result<Self> {
        op.validate()?;
        let gx = mesh_x.grid(exponents.alpha, a, &op, lambda)?;
        let gy = mesh_y.grid(exponents.beta, b, &op, lambda)?;
        Ok(Problem2D {
            exponents,
            a,
            b,
            op,
            a1: CoefficientLaw::Zero,
            a2: CoefficientLaw::Zero,
            lambda,
            t1: 1.0,
            t2: 1.0,
            bc_x: BoundarySpec::dirichlet(),
            bc_y: BoundarySpec::dirichlet(),
            rhs: Rhs::Zero,
            grid: Grid2D::new(gx, gy),
            moving: None,
            mu: 0.25,
        })
    }

    pub fn with_rhs(mut self, rhs: Rhs) -> Self {
        self.rhs = rhs;
        self
    }

    pub fn with_bcs(mut self, bc_x: BoundarySpec, bc_y: BoundarySpec) -> Self {
        self.bc_x = bc_x;
        self.bc_y = bc_y;
        self
    }

    pub fn with_t(mut self, t1: f64, t2: f64) -> Self {
        self.t1 = t1;
        self.t2 = t2;
        self
    }

    pub fn with_lambda(mut self, lambda: C64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_coefficients(mut self, a1: CoefficientLaw, a2: CoefficientLaw) -> Self {
        self.a1 = a1;
        self.a2 = a2;
        self
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.exponents.validate_window()?;
        self.op.validate()?;
        if !(self.lambda.re.is_finite() && self.lambda.im.is_finite()) {
            return Err(Error::invalid("λ must be finite"));
        }
        self.op.check_lambda(self.lambda)?;
        for (name, t) in [("t1", self.t1), ("t2", self.t2)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::invalid(format!("{name} = {t} must lie in (0, 1]")));
            }
        }
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return Err(Error::invalid(format!("μ = {} must lie in (0, 1/2)", self.mu)));
        }
        for (name, bc) in [("x", &self.bc_x), ("y", &self.bc_y)] {
            bc.validate(self.dim())?;
            if !bc.is_homogeneous() {
                return Err(Error::invalid(format!("{name}-boundary data must be homogeneous in two dimensions")));
            }
        }
        let (tx, ty) = (self.grid.gx.transform(), self.grid.gy.transform());
        if tx.gamma() != self.exponents.alpha || ty.gamma() != self.exponents.beta || tx.a() != self.a || ty.a() != self.b {
            return Err(Error::invalid("grid transforms do not match the problem exponents and extents"));
        }
        Ok(())
    }

    pub fn rhs_field(&self) -> Result<DiscreteField> {
        let (xs, ys) = (self.grid.gx.x_nodes(), self.grid.gy.x_nodes());
        let pts: Vec<Vec<f64>> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| vec![x, y])).collect();
        self.rhs.sample(&["x", "y"], &pts, self.dim())
    }

    /// Homogeneous line operators for both directions, unscaled by `t`.
    pub fn line_operators(&self) -> Result<(LineOperator, LineOperator)> {
        let e = &self.exponents;
        let lx = LineOperator::build(
            &self.grid.gx,
            Some(e.alpha),
            self.bc_x.m,
            self.bc_x.scaled_coefficients(self.t1, e.alpha, e.p),
            self.bc_x.closure,
        )?;
        let ly = LineOperator::build(
            &self.grid.gy,
            Some(e.beta),
            self.bc_y.m,
            self.bc_y.scaled_coefficients(self.t2, e.beta, e.p),
            self.bc_y.closure,
        )?;
        Ok((lx, ly))
    }

    /// `sup_G ‖A_i(x,y) A^{-(1/2-μ)}‖` for both coefficients (`None` when zero).
    ///
    /// The induced `l_q` norm is bounded by `‖B‖_1^{1/q} ‖B‖_∞^{1-1/q}`.
    pub fn coefficient_bounds(&self) -> Result<[Option<f64>; 2]> {
        let dim = self.dim();
        let frac = self.op.fractional_power(-(0.5 - self.mu))?;
        let q = self.exponents.q;
        let mut out = [None, None];
        for (k, law) in [&self.a1, &self.a2].into_iter().enumerate() {
            if law.is_zero() {
                continue;
            }
            let cl = law.compile()?;
            let mut sup: f64 = 0.0;
            for &x in self.grid.gx.x_nodes() {
                for &y in self.grid.gy.x_nodes() {
                    let m = cl.at(x, y, dim)?.unwrap_or_else(|| vec![0.0; dim * dim]);
                    let prod: Vec<f64> = (0..dim * dim)
                        .map(|r| (0..dim).map(|l| m[(r / dim) * dim + l] * frac.entry(l, r % dim)).sum())
                        .collect();
                    let n1 = (0..dim).map(|j| (0..dim).map(|i| prod[i * dim + j].abs()).sum::<f64>()).fold(0.0, f64::max);
                    let ninf = (0..dim).map(|i| (0..dim).map(|j| prod[i * dim + j].abs()).sum::<f64>()).fold(0.0, f64::max);
                    let bound = n1.powf(1.0 / q) * ninf.powf(1.0 - 1.0 / q);
                    sup = if bound.is_nan() { f64::NAN } else { sup.max(bound) };
                }
            }
            out[k] = Some(sup);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct Solution2D {
    pub u: DiscreteField,
    /// `x^α u_x`.
    pub ux1: DiscreteField,
    /// `y^β u_y`.
    pub uy1: DiscreteField,
    /// `x^(2α) u_xx`.
    pub ux2: DiscreteField,
    /// `y^(2β) u_yy`.
    pub uy2: DiscreteField,
    /// `[x^α ∂_x]^2 u`.
    pub ux_reg2: DiscreteField,
    /// `[y^β ∂_y]^2 u`.
    pub uy_reg2: DiscreteField,
    pub au: DiscreteField,
    pub f: DiscreteField,
    pub residual_norm: f64,
    pub coefficient_bounds: [Option<f64>; 2],
    pub warnings: Vec<String>,
}

/// The interior system `M ũ = f̃`.
pub fn assemble_2d(p: &Problem2D) -> Result<(Triplets, Vec<C64>, LineOperator, LineOperator)> {
    p.validate()?;
    let (lx, ly) = p.line_operators()?;
    let (nxi, nyi, dim) = (lx.interior(), ly.interior(), p.dim());
    let ny = p.grid.gy.n();
    let (tx, ty) = (lx.second.rows(), ly.second.rows());
    let (dx, dy) = (lx.first.rows(), ly.first.rows());
    let (c1, c2) = (p.a1.compile()?, p.a2.compile()?);
    let xs = p.grid.gx.x_nodes();
    let ys = p.grid.gy.x_nodes();
    let f = p.rhs_field()?;
    let idx = |kx: usize, ky: usize, c: usize| (kx * nyi + ky) * dim + c;

    let mut m = Triplets::new(nxi * nyi * dim);
    let mut rhs = vec![ZERO; nxi * nyi * dim];
    for kx in 0..nxi {
        for ky in 0..nyi {
            let (x, y) = (xs[kx + 1], ys[ky + 1]);
            let m1 = c1.at(x, y, dim)?;
            let m2 = c2.at(x, y, dim)?;
            for c in 0..dim {
                let r = idx(kx, ky, c);
                for &(k, v) in &tx[kx] {
                    m.push(r, idx(k, ky, c), v * p.t1);
                }
                for &(k, v) in &ty[ky] {
                    m.push(r, idx(kx, k, c), v * p.t2);
                }
                for d in 0..dim {
                    let a = p.op.entry(c, d);
                    if a != 0.0 {
                        m.push_real(r, idx(kx, ky, d), a);
                    }
                }
                m.push(r, r, p.lambda);
                if let Some(m1) = &m1 {
                    for d in 0..dim {
                        let a = m1[c * dim + d];
                        if a != 0.0 {
                            for &(k, v) in &dx[kx] {
                                m.push(r, idx(k, ky, d), v * a);
                            }
                        }
                    }
                }
                if let Some(m2) = &m2 {
                    for d in 0..dim {
                        let a = m2[c * dim + d];
                        if a != 0.0 {
                            for &(k, v) in &dy[ky] {
                                m.push(r, idx(kx, k, d), v * a);
                            }
                        }
                    }
                }
                rhs[r] = f.values()[((kx + 1) * ny + ky + 1) * dim + c];
            }
        }
    }
    Ok((m, rhs, lx, ly))
}

/// Interior unknowns to all grid nodes through both extensions.
pub(crate) fn extend_2d(ui: &[C64], lx: &LineOperator, ly: &LineOperator, dim: usize) -> Vec<C64> {
    let (nx, ny, nyi) = (lx.full(), ly.full(), ly.interior());
    let mut out = vec![ZERO; nx * ny * dim];
    for ix in 0..nx {
        for iy in 0..ny {
            for &(kx, wx) in lx.extension(ix) {
                for &(ky, wy) in ly.extension(iy) {
                    let w = wx * wy;
                    for c in 0..dim {
                        out[(ix * ny + iy) * dim + c] += w * ui[(kx * nyi + ky) * dim + c];
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn finish(p: &Problem2D, u: Vec<C64>, residual_norm: f64) -> Result<Solution2D> {
    let dim = p.dim();
    let g = &p.grid;
    let e = &p.exponents;
    let u = DiscreteField::new(u, dim)?;
    let ux1 = mesh::reg_derivative_2d(&u, g, e.alpha, Axis::X, 1)?;
    let uy1 = mesh::reg_derivative_2d(&u, g, e.beta, Axis::Y, 1)?;
    let ux_reg2 = mesh::reg_derivative_2d(&u, g, e.alpha, Axis::X, 2)?;
    let uy_reg2 = mesh::reg_derivative_2d(&u, g, e.beta, Axis::Y, 2)?;
    let ny = g.gy.n();
    let plain = |reg2: &DiscreteField, reg1: &DiscreteField, axis: Axis, ex: f64| -> Result<DiscreteField> {
        let mut v = reg2.values().to_vec();
        for (node, chunk) in v.chunks_mut(dim).enumerate() {
            let s = match axis {
                Axis::X => g.gx.x_nodes()[node / ny],
                Axis::Y => g.gy.x_nodes()[node % ny],
            };
            let w = ex * s.powf(ex - 1.0);
            for (c, z) in chunk.iter_mut().enumerate() {
                *z -= reg1.values()[node * dim + c] * w;
            }
        }
        DiscreteField::new(v, dim)
    };
    let ux2 = plain(&ux_reg2, &ux1, Axis::X, e.alpha)?;
    let uy2 = plain(&uy_reg2, &uy1, Axis::Y, e.beta)?;
    let au = apply_pointwise(&p.op, &u)?;
    let f = p.rhs_field()?;
    let coefficient_bounds = p.coefficient_bounds()?;
    let mut warnings = Vec::new();
    for (k, b) in coefficient_bounds.iter().enumerate() {
        if let Some(b) = b {
            if !b.is_finite() {
                warnings.push(format!(
                    "coefficient A{} fails the boundedness check sup‖A_i A^-(1/2-μ)‖ = {b}; coercivity not claimed",
                    k + 1
                ));
            }
        }
    }
    Ok(Solution2D {
        u,
        ux1,
        uy1,
        ux2,
        uy2,
        ux_reg2,
        uy_reg2,
        au,
        f,
        residual_norm,
        coefficient_bounds,
        warnings,
    })
}

pub fn solve_2d_direct(p: &Problem2D) -> Result<Solution2D> {
    if p.moving.is_some() {
        return Err(Error::invalid("moving-domain problems go through solve_moving"));
    }
    let (m, rhs, lx, ly) = assemble_2d(p)?;
    let (ui, res) = linalg::solve_checked(&m, &rhs)?;
    let u = extend_2d(&ui, &lx, &ly, p.dim());
    finish(p, u, res)
}

/// Solve along `y` with the discrete `x`-operator as an operator coefficient.
///
/// For each eigendirection of `A` with eigenvalue `d`, the interior system is
/// block tridiagonal in `y` with blocks `t1·Tx + (t2·Ty[j,j] + d + λ) I`
/// and is eliminated by block Thomas.
pub fn solve_2d_reduced(p: &Problem2D) -> Result<Solution2D> {
    if p.moving.is_some() {
        return Err(Error::invalid("moving-domain problems go through solve_moving"));
    }
    if !(p.a1.is_zero() && p.a2.is_zero()) {
        return Err(Error::invalid("the reduced path requires A1 = A2 = 0"));
    }
    let (m, rhs, lx, ly) = assemble_2d(p)?;
    let dim = p.dim();
    let (nxi, nyi) = (lx.interior(), ly.interior());

    // Eigenbasis of A: identity for diagonal operators.
    let (vecs, vals): (Option<Mat<c64>>, Vec<f64>) = match p.op.diagonal() {
        Some(d) => (None, d),
        None => {
            let (v, d) = p.op.eigen_positive()?;
            (Some(v), d)
        }
    };
    let vinv = vecs.as_ref().map(invert).transpose()?;

    let to_eigen = |z: &[C64]| -> Vec<C64> {
        match &vinv {
            None => z.to_vec(),
            Some(vi) => (0..dim).map(|i| (0..dim).map(|j| vi[(i, j)] * z[j]).sum()).collect(),
        }
    };
    let from_eigen = |z: &[C64]| -> Vec<C64> {
        match &vecs {
            None => z.to_vec(),
            Some(v) => (0..dim).map(|i| (0..dim).map(|j| v[(i, j)] * z[j]).sum()).collect(),
        }
    };

    let g: Vec<C64> = rhs.chunks(dim).flat_map(to_eigen).collect();
    let txd = {
        let mut t = lx.second.to_dense();
        for i in 0..nxi {
            for j in 0..nxi {
                t[(i, j)] *= c64::new(p.t1, 0.0);
            }
        }
        t
    };
    let ty = ly.second.rows();
    let coef = |j: usize, k: usize| -> C64 {
        ty[j].iter().find(|e| e.0 == k).map_or(ZERO, |e| e.1 * p.t2)
    };
    for j in 0..nyi {
        if ty[j].iter().any(|e| e.0 + 1 < j || e.0 > j + 1) {
            return Err(Error::invalid("y-operator is not tridiagonal"));
        }
    }

    let mut w = vec![ZERO; g.len()];
    for (c, &d) in vals.iter().enumerate() {
        let shift = C64::new(d, 0.0) + p.lambda;
        let col = |ky: usize| -> Mat<c64> { Mat::from_fn(nxi, 1, |kx, _| g[(kx * nyi + ky) * dim + c]) };
        let block = |j: usize| -> Mat<c64> {
            let mut b = txd.clone();
            let s = coef(j, j) + shift;
            for i in 0..nxi {
                b[(i, i)] += s;
            }
            b
        };
        // Forward elimination: S_j = D_j - l_j C_{j-1}, C_j = S_j^{-1} u_j.
        let mut cs: Vec<Mat<c64>> = Vec::with_capacity(nyi);
        let mut gs: Vec<Mat<c64>> = Vec::with_capacity(nyi);
        for j in 0..nyi {
            let mut s = block(j);
            let mut rhs_j = col(j);
            if j > 0 {
                let l = coef(j, j - 1);
                s -= faer::Scale(c64::new(l.re, l.im)) * &cs[j - 1];
                rhs_j -= faer::Scale(c64::new(l.re, l.im)) * &gs[j - 1];
            }
            let lu = s.partial_piv_lu();
            let up = if j + 1 < nyi { coef(j, j + 1) } else { ZERO };
            let mut ident = Mat::<c64>::zeros(nxi, nxi);
            for i in 0..nxi {
                ident[(i, i)] = c64::new(up.re, up.im);
            }
            cs.push(lu.solve(&ident));
            gs.push(lu.solve(&rhs_j));
        }
        let mut x_next: Option<Mat<c64>> = None;
        for j in (0..nyi).rev() {
            let xj = match &x_next {
                None => gs[j].clone(),
                Some(xn) => &gs[j] - &cs[j] * xn,
            };
            for kx in 0..nxi {
                w[(kx * nyi + j) * dim + c] = xj[(kx, 0)];
            }
            x_next = Some(xj);
        }
    }
    let ui: Vec<C64> = w.chunks(dim).flat_map(from_eigen).collect();
    if ui.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Singular("reduced solve produced nonfinite values".into()));
    }
    let res = linalg::relative_residual(&m, &ui, &rhs);
    if !(res <= linalg::SOLVE_TOL) {
        return Err(Error::Residual { residual: res, tol: linalg::SOLVE_TOL });
    }
    let u = extend_2d(&ui, &lx, &ly, dim);
    finish(p, u, res)
}

/// Moving-domain solve with its pullback onto `G_s`.
#[derive(Debug, Clone)]
pub struct MovingSolution {
    /// Fields on the `G_s` grid, derivatives in `G_s` coordinates.
    pub solution: Solution2D,
    pub grid: Grid2D,
    /// The rescaled problem on the unit square.
    pub fixed: Problem2D,
    pub extent: (f64, f64),
    /// Principal coefficients multiplying the `x` and `y` terms after rescaling.
    pub principal: (f64, f64),
}

/// Rescale `G_s` onto the unit square by `ξ = x / a(s)`, `η = y / b(s)`,
/// solve there and pull the result back.
///
/// With `κ = 1/a(s)` the principal `x`-term picks up `κ^(2(1-α))` and the
/// boundary coefficient `δ_i` picks up `κ^(i(1-α))`; likewise in `y`.
pub fn solve_moving(p: &Problem2D) -> Result<MovingSolution> {
    let law = p.moving.as_ref().ok_or_else(|| Error::invalid("problem has no moving-domain law"))?;
    if !(p.a1.is_zero() && p.a2.is_zero()) {
        return Err(Error::invalid("moving-domain problems take no lower-order coefficients"));
    }
    if p.a != 1.0 || p.b != 1.0 {
        return Err(Error::invalid("a moving-domain problem is posed on the unit square"));
    }
    let (sa, sb) = law.extents()?;
    let e = p.exponents;
    let (kx, ky) = (1.0 / sa, 1.0 / sb);
    let (cx, cy) = (rescale_coefficient(kx, e.alpha), rescale_coefficient(ky, e.beta));

    let rescale_bc = |bc: &BoundarySpec, t: f64, ex: f64, kappa: f64| -> BoundarySpec {
        let coeffs = bc.scaled_coefficients(t, ex, e.p);
        let delta = (0..=bc.m as usize).map(|i| coeffs[i] * kappa.powf(i as f64 * (1.0 - ex))).collect();
        BoundarySpec { delta, t_scaling: false, ..bc.clone() }
    };

    // The problem's own grid is the unit-square mesh; G_s nodes are its
    // nodes times the extents.
    let (gx, gy) = (&p.grid.gx, &p.grid.gy);
    let mx = MeshSpec::with_depth(gx.n(), gx.depth());
    let my = MeshSpec::with_depth(gy.n(), gy.depth());
    let mut fixed = Problem2D::new(e, 1.0, 1.0, p.op.clone(), p.lambda, mx, my)?;
    fixed.t1 = 1.0;
    fixed.t2 = 1.0;
    fixed.mu = p.mu;
    fixed.bc_x = rescale_bc(&p.bc_x, p.t1, e.alpha, kx);
    fixed.bc_y = rescale_bc(&p.bc_y, p.t2, e.beta, ky);
    // Values of f on G_s at the pulled-back nodes.
    let fpts: Vec<Vec<f64>> = fixed
        .grid
        .gx
        .x_nodes()
        .iter()
        .flat_map(|&xi| fixed.grid.gy.x_nodes().iter().map(move |&eta| vec![xi * sa, eta * sb]))
        .collect();
    fixed.rhs = Rhs::Field(p.rhs.sample(&["x", "y"], &fpts, p.dim())?);

    let (lx, ly) = fixed.line_operators()?;
    let (m0, rhs, _, _) = assemble_2d(&fixed)?;
    // Principal terms carry t_k times the rescaling factor.
    let (nxi, nyi, dim) = (lx.interior(), ly.interior(), p.dim());
    let tx = linalg::kron(&linalg::kron(&lx.second, &linalg::identity(nyi)), &linalg::identity(dim));
    let ty = linalg::kron(&linalg::kron(&linalg::identity(nxi), &ly.second), &linalg::identity(dim));
    let mut m = m0;
    m.add_scaled(&tx, C64::new(p.t1 * cx - 1.0, 0.0));
    m.add_scaled(&ty, C64::new(p.t2 * cy - 1.0, 0.0));
    let (ui, res) = linalg::solve_checked(&m, &rhs)?;
    let u = extend_2d(&ui, &lx, &ly, dim);
    let on_fixed = finish(&fixed, u, res)?;

    // Pull back: x^α ∂_x = κ^(1-α) ξ^α ∂_ξ.
    let grid = Grid2D::new(
        mesh::build_grid(mesh::TransformMap::new(e.alpha, sa)?, gx.n(), fixed.grid.gx.depth() * sa.powf(1.0 - e.alpha))?,
        mesh::build_grid(mesh::TransformMap::new(e.beta, sb)?, gy.n(), fixed.grid.gy.depth() * sb.powf(1.0 - e.beta))?,
    );
    let s1x = C64::new(kx.powf(1.0 - e.alpha), 0.0);
    let s1y = C64::new(ky.powf(1.0 - e.beta), 0.0);
    let s2x = C64::new(cx, 0.0);
    let s2y = C64::new(cy, 0.0);
    let solution = Solution2D {
        ux1: on_fixed.ux1.scale(s1x),
        uy1: on_fixed.uy1.scale(s1y),
        ux2: on_fixed.ux2.scale(s2x),
        uy2: on_fixed.uy2.scale(s2y),
        ux_reg2: on_fixed.ux_reg2.scale(s2x),
        uy_reg2: on_fixed.uy_reg2.scale(s2y),
        ..on_fixed
    };
    Ok(MovingSolution {
        solution,
        grid,
        fixed,
        extent: (sa, sb),
        principal: (cx, cy),
    })
}

/// The same moving problem posed directly on `G_s` with matching nodes.
pub fn moving_direct_problem(p: &Problem2D) -> Result<Problem2D> {
    let law = p.moving.as_ref().ok_or_else(|| Error::invalid("problem has no moving-domain law"))?;
    let (sa, sb) = law.extents()?;
    let e = p.exponents;
    let (gx, gy) = (&p.grid.gx, &p.grid.gy);
    let mx = MeshSpec::with_depth(gx.n(), gx.depth() * sa.powf(1.0 - e.alpha));
    let my = MeshSpec::with_depth(gy.n(), gy.depth() * sb.powf(1.0 - e.beta));
    let mut q = Problem2D::new(e, sa, sb, p.op.clone(), p.lambda, mx, my)?;
    q.bc_x = p.bc_x.clone();
    q.bc_y = p.bc_y.clone();
    q.t1 = p.t1;
    q.t2 = p.t2;
    q.mu = p.mu;
    q.rhs = p.rhs.clone();
    Ok(q)
}

/// `A_i(x, y) v(x, y)` at every node of `grid`.
pub fn apply_coefficient(law: &CoefficientLaw, grid: &Grid2D, v: &DiscreteField) -> Result<DiscreteField> {
    let dim = v.dim_e();
    if v.nodes() != grid.nodes() {
        return Err(Error::DimensionMismatch { expected: grid.nodes(), got: v.nodes() });
    }
    let cl = law.compile()?;
    let ny = grid.gy.n();
    let mut out = vec![ZERO; v.values().len()];
    for (node, chunk) in out.chunks_mut(dim).enumerate() {
        let (x, y) = (grid.gx.x_nodes()[node / ny], grid.gy.x_nodes()[node % ny]);
        if let Some(m) = cl.at(x, y, dim)? {
            let src = v.at(node);
            for (c, z) in chunk.iter_mut().enumerate() {
                *z = (0..dim).map(|d| src[d] * m[c * dim + d]).sum();
            }
        }
    }
    DiscreteField::new(out, dim)
}

/// `sup‖A_i A^{-(1/2-μ)}‖` through the exact induced norm at one point; used
/// by tests to cross-check the cheap bound.
pub fn coefficient_norm_at(law: &CoefficientLaw, op: &OperatorSpec, mu: f64, x: f64, y: f64, q: f64) -> Result<f64> {
    let dim = op.dim();
    let frac = op.fractional_power(-(0.5 - mu))?;
    let Some(m) = law.compile()?.at(x, y, dim)? else {
        return Ok(0.0);
    };
    let b = Mat::from_fn(dim, dim, |i, j| {
        c64::new((0..dim).map(|l| m[i * dim + l] * frac.entry(l, j)).sum(), 0.0)
    });
    Ok(induced_norm(&b, q, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    Direct,
    Reduced,
}

pub fn solve_2d(p: &Problem2D, path: SolvePath) -> Result<Solution2D> {
    match path {
        SolvePath::Direct => solve_2d_direct(p),
        SolvePath::Reduced => solve_2d_reduced(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{weighted_lp_norm, ComponentNorm};
    use crate::solve1d::{solve_1d, Closure, Form1D, Problem1D};

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn ex() -> Exponents {
        Exponents { alpha: 1.3, beta: 1.3, p: 4.0, q: 2.0 }
    }

    /// `u = φ(ξ)φ(η)` with `φ(s) = e^s - e^{2s}`, vanishing at `x = 1`, `y = 1`.
    fn manufactured(n: usize) -> Problem2D {
        let xi = "((x^-0.3 - 1)/(-0.3))";
        let eta = "((y^-0.3 - 1)/(-0.3))";
        let phi = |s: &str| format!("(exp({s}) - exp(2*{s}))");
        let lphi = |s: &str, v: &str| format!("(-(exp({s}) - 4*exp(2*{s})) + 1.3*{v}^0.3*(exp({s}) - 2*exp(2*{s})))");
        let src = format!(
            "{lx}*{py} + {px}*{ly} + 2*{px}*{py}",
            lx = lphi(xi, "x"),
            ly = lphi(eta, "y"),
            px = phi(xi),
            py = phi(eta)
        );
        Problem2D::new(ex(), 1.0, 1.0, OperatorSpec::scalar(1.0), c(1.0), MeshSpec::new(n), MeshSpec::new(n))
            .unwrap()
            .with_rhs(Rhs::expr(&src).unwrap())
    }

    fn exact(p: &Problem2D) -> DiscreteField {
        let phi = |s: f64| s.exp() - (2.0 * s).exp();
        let v: Vec<C64> = p
            .grid
            .gx
            .y_nodes()
            .iter()
            .flat_map(|&a| p.grid.gy.y_nodes().iter().map(move |&b| c(phi(a) * phi(b))))
            .collect();
        DiscreteField::new(v, 1).unwrap()
    }

    fn rel(a: &DiscreteField, b: &DiscreteField, g: &Grid2D) -> f64 {
        let n = ComponentNorm::Lq(2.0);
        weighted_lp_norm(&a.sub(b).unwrap(), g, 4.0, &n).unwrap() / weighted_lp_norm(b, g, 4.0, &n).unwrap()
    }

    #[test]
    fn manufactured_converges_at_second_order() {
        let errs: Vec<f64> = [65, 129, 257]
            .iter()
            .map(|&n| {
                let p = manufactured(n);
                let s = solve_2d_direct(&p).unwrap();
                rel(&s.u, &exact(&p), &p.grid)
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn direct_and_reduced_agree() {
        let p = manufactured(65).with_bcs(BoundarySpec::robin(c(1.0), c(0.5)), BoundarySpec::dirichlet());
        let a = solve_2d_direct(&p).unwrap();
        let b = solve_2d_reduced(&p).unwrap();
        let worst = a.u.values().iter().zip(b.u.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(worst <= 1e-10 * a.u.max_abs(), "{worst}");
    }

    #[test]
    fn reduced_handles_dense_operator() {
        let op = OperatorSpec::Dense(vec![vec![2.0, 1.0], vec![0.5, 3.0]]);
        let p = Problem2D::new(ex(), 1.0, 1.0, op, C64::new(5.0, 2.0), MeshSpec::new(17), MeshSpec::new(21))
            .unwrap()
            .with_rhs(Rhs::expr("x * y * m").unwrap())
            .with_t(0.5, 0.1);
        let a = solve_2d_direct(&p).unwrap();
        let b = solve_2d_reduced(&p).unwrap();
        let worst = a.u.values().iter().zip(b.u.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(worst <= 1e-10 * a.u.max_abs(), "{worst}");
    }

    #[test]
    fn zero_rhs_zero_solution() {
        let p = manufactured(33).with_rhs(Rhs::Zero);
        assert!(solve_2d_direct(&p).unwrap().u.max_abs() <= 1e-12);
        assert!(solve_2d_reduced(&p).unwrap().u.max_abs() <= 1e-12);
    }

    #[test]
    fn diagonal_decouples() {
        let mesh = MeshSpec::with_depth(33, 12.0);
        let p = Problem2D::new(ex(), 1.0, 1.0, OperatorSpec::Diagonal(vec![1.0, 4.0]), c(2.0), mesh, mesh)
            .unwrap()
            .with_rhs(Rhs::expr("x * y^2 * m").unwrap());
        let s = solve_2d_direct(&p).unwrap();
        for (m, d) in [1.0, 4.0].iter().enumerate() {
            let q = Problem2D::new(ex(), 1.0, 1.0, OperatorSpec::scalar(*d), c(2.0), mesh, mesh)
                .unwrap()
                .with_rhs(Rhs::expr(&format!("x * y^2 * {}", m + 1)).unwrap());
            let sq = solve_2d_direct(&q).unwrap();
            let worst = s.u.component(m).iter().zip(sq.u.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(worst <= 1e-12, "{worst}");
        }
    }

    #[test]
    fn y_constant_data_reduces_to_1d() {
        let mesh = MeshSpec::with_depth(41, 14.0);
        let bcx = BoundarySpec::robin(c(1.0), c(0.3));
        let bcy = BoundarySpec::neumann().with_closure(Closure::Neumann);
        let p = Problem2D::new(ex(), 1.0, 1.0, OperatorSpec::scalar(2.0), c(3.0), mesh, mesh)
            .unwrap()
            .with_rhs(Rhs::expr("x^2 + 1").unwrap())
            .with_bcs(bcx.clone(), bcy);
        let s = solve_2d_reduced(&p).unwrap();
        let q = Problem1D::new(Form1D::Plain, 1.3, 4.0, 1.0, OperatorSpec::scalar(2.0), c(3.0), mesh)
            .unwrap()
            .with_rhs(Rhs::expr("x^2 + 1").unwrap())
            .with_bc(bcx);
        let s1 = solve_1d(&q).unwrap();
        for ix in 0..41 {
            for iy in 0..41 {
                let d = s.u.values()[ix * 41 + iy] - s1.u.values()[ix];
                assert!(d.norm() <= 1e-10, "({ix},{iy}) {d}");
            }
        }
    }

    #[test]
    fn symmetric_data_gives_symmetric_solution() {
        let p = Problem2D::new(ex(), 1.0, 1.0, OperatorSpec::scalar(1.0), c(10.0), MeshSpec::new(33), MeshSpec::new(33))
            .unwrap()
            .with_rhs(Rhs::expr("x * y + x^2 * y^2").unwrap())
            .with_bcs(BoundarySpec::neumann(), BoundarySpec::neumann());
        let s = solve_2d_direct(&p).unwrap();
        for i in 0..33 {
            for j in 0..33 {
                assert!((s.u.values()[i * 33 + j] - s.u.values()[j * 33 + i]).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn coefficient_law_enters_and_bound_is_checked() {
        let law = CoefficientLaw::Scaled { op: OperatorSpec::scalar(1.0), factor: Expression::parse("0.5 * x").unwrap() };
        let p = manufactured(33).with_coefficients(law.clone(), CoefficientLaw::Zero);
        let s = solve_2d_direct(&p).unwrap();
        let b = s.coefficient_bounds[0].unwrap();
        // A^{-1/4} = 1 and sup 0.5 x = 0.5 at x = 1.
        assert!((b - 0.5).abs() < 1e-12, "{b}");
        assert!(s.warnings.is_empty());
        let exact = coefficient_norm_at(&law, &p.op, 0.25, 1.0, 0.3, 2.0).unwrap();
        assert!((exact - 0.5).abs() < 1e-12);
        assert!(solve_2d_reduced(&p).is_err());
        let plain = solve_2d_direct(&manufactured(33)).unwrap();
        assert!(rel(&s.u, &plain.u, &p.grid) > 1e-6);
    }

    #[test]
    fn rescale_coefficient_example() {
        assert!((rescale_coefficient(2.0, 1.3) - 2f64.powf(-0.6)).abs() < 1e-15);
        assert!((rescale_coefficient(2.0, 1.3) - 0.6598).abs() < 1e-4);
    }

    fn moving(extent: &str, n: usize) -> Problem2D {
        let mut p = Problem2D::new(ex(), 1.0, 1.0, OperatorSpec::scalar(1.0), c(4.0), MeshSpec::new(n), MeshSpec::new(n))
            .unwrap()
            .with_rhs(Rhs::expr("x * y + 1").unwrap())
            .with_bcs(BoundarySpec::robin(c(1.0), c(0.5)), BoundarySpec::dirichlet());
        p.moving = Some(MovingLaw {
            a_of_s: Expression::parse(extent).unwrap(),
            b_of_s: Expression::parse(extent).unwrap(),
            s: 0.0,
        });
        p
    }

    #[test]
    fn identity_rescale_matches_direct() {
        let p = moving("1 + s", 33);
        let ms = solve_moving(&p).unwrap();
        let mut q = p.clone();
        q.moving = None;
        let d = solve_2d_direct(&q).unwrap();
        let worst = ms.solution.u.values().iter().zip(d.u.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn moving_pullback_matches_direct_on_gs() {
        let p = moving("2", 65);
        let ms = solve_moving(&p).unwrap();
        let q = moving_direct_problem(&p).unwrap();
        let d = solve_2d_direct(&q).unwrap();
        assert!((ms.grid.gx.x_nodes()[10] - q.grid.gx.x_nodes()[10]).abs() < 1e-12);
        assert!(rel(&ms.solution.u, &d.u, &q.grid) <= 5e-3);
        assert!(rel(&ms.solution.ux2, &d.ux2, &q.grid) <= 5e-3);
    }
}
