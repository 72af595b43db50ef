//! Degeneracy-removing change of variables and the grids it induces.
//!
//! The map `y(x) = (x^(1-γ) - a^(1-γ)) / (1-γ)` sends `(0, a]` onto
//! `(-∞, 0]` with `dy/dx = x^(-γ)`, so `x^γ d/dx = d/dy`. A uniform mesh in
//! `y` is therefore a graded mesh in `x` that clusters towards the
//! degenerate end, and regularized derivatives `[x^γ d/dx]^i u` become plain
//! `y`-derivatives.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail level used by the default truncation depth rule.
pub const TRUNCATION_TAIL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
}

impl Exponents {
    pub fn validate_indices(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::invalid(format!("p = {} must lie in (1, ∞)", self.p)));
        }
        if !(self.q > 1.0 && self.q.is_finite()) {
            return Err(Error::invalid(format!("q = {} must lie in (1, ∞)", self.q)));
        }
        Ok(())
    }

    /// Both exponents inside `(1 + 1/p, (p-1)/2)`.
    pub fn validate_window(&self) -> Result<()> {
        self.validate_indices()?;
        check_window("alpha", self.alpha, self.p)?;
        check_window("beta", self.beta, self.p)
    }
}

/// `1 + 1/p < e < (p-1)/2`; the window is empty unless `p > (3+√17)/2`.
pub fn check_window(name: &str, e: f64, p: f64) -> Result<()> {
    let (lo, hi) = window(p);
    if lo < e && e < hi {
        Ok(())
    } else {
        Err(Error::Window(format!(
            "{name} = {e} not in ({lo}, {hi}) for p = {p}"
        )))
    }
}

pub fn window(p: f64) -> (f64, f64) {
    (1.0 + 1.0 / p, (p - 1.0) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformMap {
    gamma: f64,
    a: f64,
}

impl TransformMap {
    pub fn new(gamma: f64, a: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!(
                "transform exponent gamma = {gamma} must exceed 1"
            )));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!("basepoint a = {a} must be positive")));
        }
        Ok(TransformMap { gamma, a })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn forward(&self, x: f64) -> f64 {
        let e = 1.0 - self.gamma;
        (x.powf(e) - self.a.powf(e)) / e
    }

    pub fn inverse(&self, y: f64) -> f64 {
        let e = 1.0 - self.gamma;
        (self.a.powf(e) + e * y).powf(1.0 / e)
    }
}

/// Uniform mesh in the transformed coordinate on `[-depth, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    transform: TransformMap,
    y: Vec<f64>,
    x: Vec<f64>,
    weights: Vec<f64>,
    h: f64,
}

/// Truncation depth so that `exp(-sqrt(delta) * depth)` falls below [`TRUNCATION_TAIL`].
pub fn default_depth(delta: f64) -> f64 {
    -TRUNCATION_TAIL.ln() / delta.max(1e-12).sqrt()
}

pub fn build_grid(t: TransformMap, n: usize, depth: f64) -> Result<Grid1D> {
    if n < 2 {
        return Err(Error::invalid(format!("grid needs at least 2 nodes, got {n}")));
    }
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(Error::invalid(format!("depth = {depth} must be positive")));
    }
    let h = depth / (n - 1) as f64;
    let y: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { 0.0 } else { -depth + i as f64 * h })
        .collect();
    let x: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, &yy)| if i == n - 1 { t.a } else { t.inverse(yy) })
        .collect();
    if x[0] <= 0.0 || x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "graded nodes underflowed; reduce depth or increase n".to_string(),
        ));
    }
    // Half of each neighbouring cell's exact x-measure; dx = x^γ dy.
    let mut weights = vec![0.0; n];
    for i in 0..n - 1 {
        let cell = x[i + 1] - x[i];
        weights[i] += 0.5 * cell;
        weights[i + 1] += 0.5 * cell;
    }
    Ok(Grid1D {
        transform: t,
        y,
        x,
        weights,
        h,
    })
}

impl Grid1D {
    pub fn n(&self) -> usize {
        self.y.len()
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn depth(&self) -> f64 {
        -self.y[0]
    }
    pub fn y_nodes(&self) -> &[f64] {
        &self.y
    }
    pub fn x_nodes(&self) -> &[f64] {
        &self.x
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn transform(&self) -> &TransformMap {
        &self.transform
    }
    pub fn gamma(&self) -> f64 {
        self.transform.gamma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub gx: Grid1D,
    pub gy: Grid1D,
    weights: Vec<f64>,
}

impl Grid2D {
    pub fn new(gx: Grid1D, gy: Grid1D) -> Self {
        let mut weights = Vec::with_capacity(gx.n() * gy.n());
        for wx in gx.weights() {
            for wy in gy.weights() {
                weights.push(wx * wy);
            }
        }
        Grid2D { gx, gy, weights }
    }

    /// Node index in lexicographic (x, y) order.
    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> usize {
        ix * self.gy.n() + iy
    }

    pub fn nodes(&self) -> usize {
        self.gx.n() * self.gy.n()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Anything that supplies per-node quadrature weights.
pub trait Measure {
    fn node_weights(&self) -> &[f64];
}

impl Measure for Grid1D {
    fn node_weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Measure for Grid2D {
    fn node_weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Samples of an `E`-valued function, node-major: `values[node * dim_e + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    values: Vec<C64>,
    dim_e: usize,
}

impl DiscreteField {
    pub fn new(values: Vec<C64>, dim_e: usize) -> Result<Self> {
        if dim_e == 0 || !values.len().is_multiple_of(dim_e) {
            return Err(Error::invalid(format!(
                "field of length {} is not a multiple of dimE = {dim_e}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain(format!("nonfinite field value at index {i}")));
        }
        Ok(DiscreteField { values, dim_e })
    }

    pub fn zeros(nodes: usize, dim_e: usize) -> Self {
        DiscreteField {
            values: vec![C64::new(0.0, 0.0); nodes * dim_e],
            dim_e,
        }
    }

    pub fn from_real(values: Vec<f64>, dim_e: usize) -> Result<Self> {
        Self::new(values.into_iter().map(|v| C64::new(v, 0.0)).collect(), dim_e)
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }
    pub fn nodes(&self) -> usize {
        self.values.len() / self.dim_e
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<C64> {
        self.values
    }
    pub fn at(&self, node: usize) -> &[C64] {
        &self.values[node * self.dim_e..(node + 1) * self.dim_e]
    }

    /// Component `c` across all nodes.
    pub fn component(&self, c: usize) -> Vec<C64> {
        self.values.iter().skip(c).step_by(self.dim_e).copied().collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        DiscreteField {
            values: self.values.iter().map(|v| v * s).collect(),
            dim_e: self.dim_e,
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        Ok(DiscreteField {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            dim_e: self.dim_e,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Norm applied to the component vector at each node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ComponentNorm {
    /// Plain `l_q`.
    Lq(f64),
    /// `l_q(D)`: `(Σ |d_m u_m|^q)^(1/q)`.
    WeightedLq { q: f64, d: Vec<f64> },
}

impl ComponentNorm {
    pub fn eval(&self, v: &[C64]) -> f64 {
        match self {
            ComponentNorm::Lq(q) => lq(v.iter().map(|z| z.norm()), *q),
            ComponentNorm::WeightedLq { q, d } => {
                lq(v.iter().zip(d).map(|(z, dm)| dm * z.norm()), *q)
            }
        }
    }
}

fn lq(it: impl Iterator<Item = f64>, q: f64) -> f64 {
    let mut n = 0usize;
    let mut first = 0.0;
    let mut acc = 0.0;
    for (k, v) in it.enumerate() {
        if k == 0 {
            first = v;
        }
        acc += v.powf(q);
        n += 1;
    }
    if n == 1 {
        first
    } else {
        acc.powf(1.0 / q)
    }
}

/// `(Σ_nodes w · ‖u(node)‖^p)^(1/p)`.
pub fn weighted_lp_norm(
    u: &DiscreteField,
    g: &impl Measure,
    p: f64,
    enorm: &ComponentNorm,
) -> Result<f64> {
    let w = g.node_weights();
    if u.nodes() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: u.nodes(),
        });
    }
    if let ComponentNorm::WeightedLq { d, .. } = enorm {
        if d.len() != u.dim_e() {
            return Err(Error::DimensionMismatch {
                expected: u.dim_e(),
                got: d.len(),
            });
        }
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p = {p} must lie in [1, ∞)")));
    }
    if u.values().iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Domain("nonfinite values in field".into()));
    }
    let total: f64 = (0..u.nodes())
        .map(|i| w[i] * enorm.eval(u.at(i)).powf(p))
        .sum();
    Ok(total.powf(1.0 / p))
}

/// Second-order first difference on a uniform mesh, one-sided at the ends.
pub(crate) fn diff1(u: &[C64], h: f64) -> Vec<C64> {
    let n = u.len();
    let mut d = vec![C64::new(0.0, 0.0); n];
    if n < 3 {
        return d;
    }
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
    d
}

/// Second-order second difference on a uniform mesh, one-sided at the ends.
pub(crate) fn diff2(u: &[C64], h: f64) -> Vec<C64> {
    let n = u.len();
    let mut d = vec![C64::new(0.0, 0.0); n];
    if n < 4 {
        return d;
    }
    let h2 = h * h;
    d[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2;
    for i in 1..n - 1 {
        d[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2;
    }
    d[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / h2;
    d
}

/// Regularized derivative of one line of samples.
pub(crate) fn reg_line(line: &[C64], g: &Grid1D, alpha: f64, order: u8) -> Vec<C64> {
    let h = g.h();
    let shift = alpha - g.gamma();
    if shift == 0.0 {
        return if order == 1 { diff1(line, h) } else { diff2(line, h) };
    }
    // x^α d/dx = s d/dy with s = x^(α-γ); ds/dy = (α-γ) x^(α-1).
    let x = g.x_nodes();
    let d1 = diff1(line, h);
    if order == 1 {
        return d1.iter().zip(x).map(|(d, x)| d * x.powf(shift)).collect();
    }
    let d2 = diff2(line, h);
    (0..line.len())
        .map(|i| {
            let s = x[i].powf(shift);
            d2[i] * (s * s) + d1[i] * (s * shift * x[i].powf(alpha - 1.0))
        })
        .collect()
}

/// `u^[i] = [x^α d/dx]^i u` for `i ∈ {1, 2}` on a 1D grid.
pub fn reg_derivative(u: &DiscreteField, g: &Grid1D, alpha: f64, order: u8) -> Result<DiscreteField> {
    if u.nodes() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: u.nodes(),
        });
    }
    if order != 1 && order != 2 {
        return Err(Error::invalid(format!("derivative order must be 1 or 2, got {order}")));
    }
    let dim = u.dim_e();
    let mut out = vec![C64::new(0.0, 0.0); u.values().len()];
    for c in 0..dim {
        let d = reg_line(&u.component(c), g, alpha, order);
        for (i, v) in d.into_iter().enumerate() {
            out[i * dim + c] = v;
        }
    }
    DiscreteField::new(out, dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Regularized derivative along one axis of a 2D field.
pub fn reg_derivative_2d(
    u: &DiscreteField,
    g: &Grid2D,
    exponent: f64,
    axis: Axis,
    order: u8,
) -> Result<DiscreteField> {
    if u.nodes() != g.nodes() {
        return Err(Error::DimensionMismatch {
            expected: g.nodes(),
            got: u.nodes(),
        });
    }
    let (nx, ny, dim) = (g.gx.n(), g.gy.n(), u.dim_e());
    let vals = u.values();
    let mut out = vec![C64::new(0.0, 0.0); vals.len()];
    match axis {
        Axis::X => {
            for iy in 0..ny {
                for c in 0..dim {
                    let line: Vec<C64> = (0..nx).map(|ix| vals[g.node(ix, iy) * dim + c]).collect();
                    for (ix, v) in reg_line(&line, &g.gx, exponent, order).into_iter().enumerate() {
                        out[g.node(ix, iy) * dim + c] = v;
                    }
                }
            }
        }
        Axis::Y => {
            for ix in 0..nx {
                for c in 0..dim {
                    let line: Vec<C64> = (0..ny).map(|iy| vals[g.node(ix, iy) * dim + c]).collect();
                    for (iy, v) in reg_line(&line, &g.gy, exponent, order).into_iter().enumerate() {
                        out[g.node(ix, iy) * dim + c] = v;
                    }
                }
            }
        }
    }
    DiscreteField::new(out, dim)
}
