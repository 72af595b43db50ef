//! Picard iteration for `-x^{2α}u_xx - y^{2β}u_yy + a(u, ∇u) u = F(x, y, u, ∇u)`.
//!
//! The operator is frozen at `A_Φ`; each step solves the linear problem
//! with right-hand side `G(u) = F(u) + (A_Φ - a(u)) u`. The perturbation
//! `a(u) - A_Φ` is diagonal, `g_m(x, y, u_m, u^[1]_{x,m}, u^[1]_{y,m})` on
//! component `m`, and `F` acts componentwise in the same way.

use std::io::Write;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcdsl::{Compiled, Expression};
use crate::linalg::{self, Factored};
use crate::mesh::{self, Axis, ComponentNorm, DiscreteField, Grid2D};
use crate::opspace::{positivity_probe, OperatorSpec, SectorSpec};
use crate::solve1d::{apply_pointwise, LineOperator, MeshSpec, Rhs};
use crate::solve2d::{self, Problem2D, Solution2D};

/// Variables bound in `a_law` and `f_law`.
pub const STATE_VARS: [&str; 6] = ["x", "y", "u", "ux", "uy", "m"];

/// Ratios above one in a row that count as divergence.
pub const DIVERGENCE_RUN: usize = 3;

#[derive(Debug, Clone)]
pub struct NonlinearSpec {
    /// `g` in `a(u) = A_Φ + g·I`, over [`STATE_VARS`].
    pub a_law: Expression,
    /// `F` over [`STATE_VARS`].
    pub f_law: Expression,
    pub a_phi: OperatorSpec,
    /// Geometry, bcs and λ; its operator and right-hand side are ignored.
    pub base: Problem2D,
    pub mu_r: f64,
    pub radius: f64,
    pub seed: u64,
}

impl NonlinearSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_r > 0.0 && self.mu_r.is_finite()) {
            return Err(Error::invalid(format!("μ_R = {} must be positive", self.mu_r)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid(format!("ball radius {} must be positive", self.radius)));
        }
        if self.base.lambda.im != 0.0 {
            return Err(Error::invalid("nonlinear problems need a real λ"));
        }
        self.a_phi.validate()?;
        let sector = SectorSpec::new(std::f64::consts::FRAC_PI_3, vec![1.0, 1e3], vec![0.0, std::f64::consts::FRAC_PI_3])?;
        let probe = positivity_probe(&self.a_phi, &sector, self.base.exponents.q, self.seed)?;
        if !probe.m_hat.is_finite() {
            return Err(Error::invalid("A_Φ fails the positivity probe"));
        }
        let mut p = self.base.clone();
        p.op = self.a_phi.clone();
        p.validate()
    }

    fn problem(&self) -> Problem2D {
        let mut p = self.base.clone();
        p.op = self.a_phi.clone();
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `‖u_n - u_{n-1}‖_Y`; for iteration 0 this is `‖w‖_Y`.
    pub delta_norm: f64,
    /// Discrete `L_p` norm of the nonlinear residual at `u_n`.
    pub residual: f64,
    /// `delta_n / delta_{n-1}` when both are positive.
    pub ratio: Option<f64>,
    pub in_ball: bool,
    /// `‖G(u_{n-1}) - G(u_{n-2})‖_p`, the data change behind `delta_n`.
    pub rhs_delta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

pub const TRACE_COLUMNS: [&str; 5] = ["iteration", "delta_norm", "residual", "ratio", "in_ball"];

impl IterationTrace {
    /// Successive contraction estimates.
    pub fn ratios(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.ratio).collect()
    }

    /// Solves performed after `w`.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn stayed_in_ball(&self) -> bool {
        self.records.iter().all(|r| r.in_ball)
    }

    /// Largest observed `‖Δu‖_Y / ‖ΔG‖_p`.
    pub fn observed_c0(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| match r.rhs_delta {
                Some(d) if d > 0.0 => Some(r.delta_norm / d),
                _ => None,
            })
            .reduce(f64::max)
    }

    /// R² of the least-squares line through `(n, ln delta_n)` over
    /// iterations `from..`, ignoring zero deltas.
    pub fn log_linear_r2(&self, from: usize) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .records
            .iter()
            .filter(|r| r.iteration >= from && r.delta_norm > 0.0)
            .map(|r| (r.iteration as f64, r.delta_norm.ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
        if syy == 0.0 {
            return Some(1.0);
        }
        Some(sxy * sxy / (sxx * syy))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(TRACE_COLUMNS)?;
        for r in &self.records {
            out.write_record([
                r.iteration.to_string(),
                crate::verify::fmt(r.delta_norm),
                crate::verify::fmt(r.residual),
                r.ratio.map(crate::verify::fmt).unwrap_or_default(),
                r.in_ball.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Pointwise evaluation of `G = F - g·u` on a discrete state.
struct StateMap {
    f: Compiled,
    g: Compiled,
    dim: usize,
}

impl StateMap {
    fn new(spec: &NonlinearSpec) -> Result<Self> {
        Ok(StateMap {
            f: spec.f_law.compile(&STATE_VARS)?,
            g: spec.a_law.compile(&STATE_VARS)?,
            dim: spec.a_phi.dim(),
        })
    }

    /// `G` at one point; `state = [x, y, u, ux, uy, m]`.
    fn eval(&self, state: &[f64; 6]) -> Result<f64> {
        Ok(self.f.eval(state)? - self.g.eval(state)? * state[2])
    }

    /// `G(u)` over the grid.
    fn field(&self, u: &DiscreteField, grid: &Grid2D, alpha: f64, beta: f64) -> Result<DiscreteField> {
        let ux = mesh::reg_derivative_2d(u, grid, alpha, Axis::X, 1)?;
        let uy = mesh::reg_derivative_2d(u, grid, beta, Axis::Y, 1)?;
        let ny = grid.gy.n();
        let mut gv = Vec::with_capacity(u.values().len());
        for node in 0..grid.nodes() {
            let (x, y) = (grid.gx.x_nodes()[node / ny], grid.gy.x_nodes()[node % ny]);
            for m in 0..self.dim {
                let k = node * self.dim + m;
                let s = [x, y, u.values()[k].re, ux.values()[k].re, uy.values()[k].re, (m + 1) as f64];
                gv.push(C64::new(self.eval(&s)?, 0.0));
            }
        }
        DiscreteField::new(gv, self.dim)
    }
}

/// The frozen operator factored once for the whole iteration.
struct Frozen {
    p: Problem2D,
    lu: Factored,
    m: linalg::Triplets,
    lx: LineOperator,
    ly: LineOperator,
}

impl Frozen {
    fn new(p: Problem2D) -> Result<Self> {
        let (m, _, lx, ly) = solve2d::assemble_2d(&p)?;
        let lu = linalg::factor(&m)?;
        Ok(Frozen { p, lu, m, lx, ly })
    }

    fn interior(&self, v: &DiscreteField) -> Vec<C64> {
        let (nxi, nyi, dim) = (self.lx.interior(), self.ly.interior(), v.dim_e());
        let ny = self.p.grid.gy.n();
        let mut out = Vec::with_capacity(nxi * nyi * dim);
        for kx in 0..nxi {
            for ky in 0..nyi {
                out.extend_from_slice(v.at((kx + 1) * ny + ky + 1));
            }
        }
        out
    }

    fn solve(&self, rhs: &DiscreteField) -> Result<(DiscreteField, f64)> {
        let b = self.interior(rhs);
        let x = self.lu.solve(&b)?;
        let res = linalg::relative_residual(&self.m, &x, &b);
        if !(res <= linalg::SOLVE_TOL) {
            return Err(Error::Residual { residual: res, tol: linalg::SOLVE_TOL });
        }
        let full = solve2d::extend_2d(&x, &self.lx, &self.ly, rhs.dim_e());
        Ok((DiscreteField::new(full, rhs.dim_e())?, res))
    }

    /// `‖M ũ - G̃(u)‖_p` on interior nodes, where `M` carries `A_Φ`.
    fn residual(&self, u: &DiscreteField, g: &DiscreteField) -> Result<f64> {
        let r: Vec<C64> = self
            .m
            .matvec(&self.interior(u))
            .iter()
            .zip(self.interior(g))
            .map(|(a, b)| a - b)
            .collect();
        self.interior_norm(&r)
    }

    fn interior_norm(&self, r: &[C64]) -> Result<f64> {
        let dim = self.p.dim();
        let (nxi, nyi) = (self.lx.interior(), self.ly.interior());
        let ny = self.p.grid.gy.n();
        let mut full = vec![C64::new(0.0, 0.0); self.p.grid.nodes() * dim];
        for kx in 0..nxi {
            for ky in 0..nyi {
                let src = (kx * nyi + ky) * dim;
                let dst = ((kx + 1) * ny + ky + 1) * dim;
                full[dst..dst + dim].copy_from_slice(&r[src..src + dim]);
            }
        }
        self.lp(&DiscreteField::new(full, dim)?)
    }

    fn lp(&self, v: &DiscreteField) -> Result<f64> {
        mesh::weighted_lp_norm(v, &self.p.grid, self.p.exponents.p, &ComponentNorm::Lq(self.p.exponents.q))
    }

    /// `‖u^[2]_x‖ + ‖u^[2]_y‖ + ‖A u‖ + ‖u‖`.
    fn y_norm(&self, u: &DiscreteField) -> Result<f64> {
        let (g, e) = (&self.p.grid, &self.p.exponents);
        let ux2 = mesh::reg_derivative_2d(u, g, e.alpha, Axis::X, 2)?;
        let uy2 = mesh::reg_derivative_2d(u, g, e.beta, Axis::Y, 2)?;
        let au = apply_pointwise(&self.p.op, u)?;
        Ok(self.lp(&ux2)? + self.lp(&uy2)? + self.lp(&au)? + self.lp(u)?)
    }
}

/// Result of a converged Picard run.
#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub solution: Solution2D,
    pub trace: IterationTrace,
    /// Solution of the frozen problem with `F(x, y, 0, 0, 0)`.
    pub w: DiscreteField,
    pub converged: bool,
}

pub fn picard_solve(spec: &NonlinearSpec, tol: f64, max_iter: usize) -> Result<PicardOutcome> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance {tol} must be positive")));
    }
    spec.validate()?;
    let frozen = Frozen::new(spec.problem())?;
    let map = StateMap::new(spec)?;
    let (grid, e) = (&frozen.p.grid, frozen.p.exponents);
    let zero = DiscreteField::zeros(grid.nodes(), map.dim);

    // w solves the frozen problem with F at the zero state.
    let mut f0 = Vec::with_capacity(zero.values().len());
    let ny = grid.gy.n();
    for node in 0..grid.nodes() {
        let (x, y) = (grid.gx.x_nodes()[node / ny], grid.gy.x_nodes()[node % ny]);
        for m in 0..map.dim {
            f0.push(C64::new(map.f.eval(&[x, y, 0.0, 0.0, 0.0, (m + 1) as f64])?, 0.0));
        }
    }
    let (w, _) = frozen.solve(&DiscreteField::new(f0, map.dim)?)?;

    let mut g_prev = map.field(&w, grid, e.alpha, e.beta)?;
    let mut trace = IterationTrace {
        records: vec![IterationRecord {
            iteration: 0,
            delta_norm: frozen.y_norm(&w)?,
            residual: frozen.residual(&w, &g_prev)?,
            ratio: None,
            in_ball: true,
            rhs_delta: None,
        }],
    };
    let mut u = w.clone();
    let mut g_older: Option<DiscreteField> = None;
    let mut last_res = 0.0;
    let mut converged = false;
    let mut prev_delta: Option<f64> = None;
    let mut run = 0usize;
    for it in 1..=max_iter {
        let (next, res) = frozen.solve(&g_prev)?;
        last_res = res;
        let delta = frozen.y_norm(&next.sub(&u)?)?;
        let rhs_delta = match &g_older {
            Some(old) => Some(frozen.lp(&g_prev.sub(old)?)?),
            None => None,
        };
        let ratio = match prev_delta {
            Some(d) if d > 0.0 && delta > 0.0 => Some(delta / d),
            _ => None,
        };
        let g_next = match map.field(&next, grid, e.alpha, e.beta) {
            Ok(v) => v,
            Err(_) if !delta.is_finite() => g_prev.clone(),
            Err(err) => return Err(err),
        };
        let in_ball = frozen.y_norm(&next.sub(&w)?)? <= spec.radius;
        let residual = frozen.residual(&next, &g_next).unwrap_or(f64::INFINITY);
        trace.records.push(IterationRecord { iteration: it, delta_norm: delta, residual, ratio, in_ball, rhs_delta });

        run = match ratio {
            Some(r) if r > 1.0 => run + 1,
            _ if !delta.is_finite() => run + 1,
            _ => 0,
        };
        if run >= DIVERGENCE_RUN || !delta.is_finite() {
            let ratios = trace.ratios();
            let last = ratios[ratios.len().saturating_sub(DIVERGENCE_RUN)..].to_vec();
            return Err(Error::Divergence { iterations: it, last_ratios: last, trace: Box::new(trace) });
        }
        g_older = Some(std::mem::replace(&mut g_prev, g_next));
        u = next;
        prev_delta = Some(delta);
        if delta <= tol {
            converged = true;
            break;
        }
    }
    let mut p = frozen.p.clone();
    p.rhs = Rhs::Field(g_prev);
    let solution = solve2d::finish(&p, u.into_values(), last_res)?;
    Ok(PicardOutcome { solution, trace, w, converged })
}

/// One attempt of [`picard_with_shrink`].
#[derive(Debug, Clone, Serialize)]
pub struct ShrinkAttempt {
    pub a: f64,
    pub b: f64,
    pub iterations: usize,
    pub diverged: bool,
}

#[derive(Debug)]
pub struct ShrinkRun {
    pub attempts: Vec<ShrinkAttempt>,
    pub outcome: Option<PicardOutcome>,
    pub last_error: Option<Error>,
}

/// On divergence halve `a` and `b` and retry, up to `retries` times. Each
/// attempt is reported.
pub fn picard_with_shrink(spec: &NonlinearSpec, tol: f64, max_iter: usize, retries: usize) -> Result<ShrinkRun> {
    let mut spec = spec.clone();
    let mut attempts = Vec::new();
    let mut last_error = None;
    for k in 0..=retries {
        if k > 0 {
            spec.base = shrink(&spec.base)?;
        }
        match picard_solve(&spec, tol, max_iter) {
            Ok(out) => {
                attempts.push(ShrinkAttempt { a: spec.base.a, b: spec.base.b, iterations: out.trace.iterations(), diverged: false });
                return Ok(ShrinkRun { attempts, outcome: Some(out), last_error: None });
            }
            Err(Error::Divergence { iterations, last_ratios, trace }) => {
                attempts.push(ShrinkAttempt { a: spec.base.a, b: spec.base.b, iterations, diverged: true });
                last_error = Some(Error::Divergence { iterations, last_ratios, trace });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ShrinkRun { attempts, outcome: None, last_error })
}

fn shrink(p: &Problem2D) -> Result<Problem2D> {
    let mx = MeshSpec::with_depth(p.grid.gx.n(), p.grid.gx.depth());
    let my = MeshSpec::with_depth(p.grid.gy.n(), p.grid.gy.depth());
    let mut q = Problem2D::new(p.exponents, p.a / 2.0, p.b / 2.0, p.op.clone(), p.lambda, mx, my)?;
    q.bc_x = p.bc_x.clone();
    q.bc_y = p.bc_y.clone();
    q.t1 = p.t1;
    q.t2 = p.t2;
    q.mu = p.mu;
    q.rhs = p.rhs.clone();
    q.a1 = p.a1.clone();
    q.a2 = p.a2.clone();
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub mu_hat: f64,
    pub mu_r: f64,
    pub samples: usize,
    pub skipped: usize,
}

/// Empirical Lipschitz constant of `G = F - g·u` in the state `(u, u^[1]_x, u^[1]_y)`.
///
/// Base states are drawn within `radius` of the values of `w` at random
/// nodes; at each, coordinate difference quotients with steps in
/// `[radius/10, radius]` are summed (the constant for the max-norm on states).
pub fn lipschitz_probe(spec: &NonlinearSpec, w: &DiscreteField, sample_count: usize) -> Result<LipschitzReport> {
    if sample_count < 2 {
        return Err(Error::invalid("lipschitz_probe needs at least two samples"));
    }
    let map = StateMap::new(spec)?;
    let (grid, e) = (&spec.base.grid, spec.base.exponents);
    if w.nodes() != grid.nodes() || w.dim_e() != map.dim {
        return Err(Error::DimensionMismatch { expected: grid.nodes() * map.dim, got: w.values().len() });
    }
    let wx = mesh::reg_derivative_2d(w, grid, e.alpha, Axis::X, 1)?;
    let wy = mesh::reg_derivative_2d(w, grid, e.beta, Axis::Y, 1)?;
    let r = spec.radius;
    let ny = grid.gy.n();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut mu_hat: f64 = 0.0;
    let mut skipped = 0;
    for _ in 0..sample_count {
        let node = rng.random_range(0..grid.nodes());
        let m = rng.random_range(0..map.dim);
        let k = node * map.dim + m;
        let mut base = [
            grid.gx.x_nodes()[node / ny],
            grid.gy.x_nodes()[node % ny],
            w.values()[k].re,
            wx.values()[k].re,
            wy.values()[k].re,
            (m + 1) as f64,
        ];
        for s in base.iter_mut().skip(2).take(3) {
            *s += r * rng.random_range(-1.0..=1.0);
        }
        let Ok(g0) = map.eval(&base) else {
            skipped += 1;
            continue;
        };
        let mut total = 0.0;
        let mut ok = true;
        for coord in 2..5 {
            let h = r * rng.random_range(0.1..=1.0);
            let mut s = base;
            s[coord] += h;
            match map.eval(&s) {
                Ok(g1) if g1.is_finite() && g0.is_finite() => total += (g1 - g0).abs() / h,
                _ => ok = false,
            }
        }
        if ok {
            mu_hat = mu_hat.max(total);
        } else {
            skipped += 1;
        }
    }
    Ok(LipschitzReport { mu_hat, mu_r: spec.mu_r, samples: sample_count, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallReport {
    pub stayed_in_ball: bool,
    /// Largest `‖u_n - w‖_Y` implied by the trace (sum of the step sizes).
    pub implied_r: f64,
    pub c0: f64,
    pub mu_hat: f64,
    pub contraction_bound: f64,
    pub contraction_holds: bool,
}

/// The two sufficient conditions of the fixed-point argument, evaluated
/// with the observed `C0` and `μ̂`.
pub fn ball_check(trace: &IterationTrace, c0: f64, mu_hat: f64) -> BallReport {
    let implied_r = trace.records.iter().skip(1).map(|r| r.delta_norm).sum::<f64>();
    let contraction_bound = c0 * mu_hat;
    BallReport {
        stayed_in_ball: trace.stayed_in_ball(),
        implied_r,
        c0,
        mu_hat,
        contraction_bound,
        contraction_holds: contraction_bound < 1.0,
    }
}

/// `F` for `-x^{2α}u_xx - y^{2β}u_yy + (1 + ε u²) u = F` with exact
/// solution `u = amp · φ(ξ) φ(η)`, `φ(s) = e^s - e^{2s}`, on the unit square.
pub fn toy_forcing(alpha: f64, beta: f64, amp: f64, eps: f64) -> String {
    let s = |v: &str, e: f64| format!("(({v}^{} - 1)/{})", 1.0 - e, 1.0 - e);
    let (xi, eta) = (s("x", alpha), s("y", beta));
    let phi = |s: &str| format!("(exp({s}) - exp(2*{s}))");
    let lphi = |s: &str, v: &str, e: f64| {
        format!("(-(exp({s}) - 4*exp(2*{s})) + {e}*{v}^{}*(exp({s}) - 2*exp(2*{s})))", e - 1.0)
    };
    let u = format!("({amp}*{}*{})", phi(&xi), phi(&eta));
    format!(
        "{amp}*({lx}*{py} + {px}*{ly}) + (1 + {eps}*{u}^2)*{u}",
        lx = lphi(&xi, "x", alpha),
        ly = lphi(&eta, "y", beta),
        px = phi(&xi),
        py = phi(&eta),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Exponents;

    fn base(n: usize) -> Problem2D {
        let e = Exponents { alpha: 1.3, beta: 1.3, p: 4.0, q: 2.0 };
        Problem2D::new(e, 1.0, 1.0, OperatorSpec::scalar(1.0), C64::new(0.0, 0.0), MeshSpec::new(n), MeshSpec::new(n)).unwrap()
    }

    fn spec(a: &str, f: &str, n: usize) -> NonlinearSpec {
        NonlinearSpec {
            a_law: Expression::parse(a).unwrap(),
            f_law: Expression::parse(f).unwrap(),
            a_phi: OperatorSpec::scalar(1.0),
            base: base(n),
            mu_r: 1.0,
            radius: 1.0,
            seed: 7,
        }
    }

    #[test]
    fn constant_map_converges_in_one_step() {
        let s = spec("0", "x*y*(1-x)*(1-y)", 17);
        let out = picard_solve(&s, 1e-12, 10).unwrap();
        assert_eq!(out.trace.iterations(), 1);
        assert_eq!(out.trace.records[1].delta_norm, 0.0);
        assert!(out.converged);
    }

    #[test]
    fn toy_converges_to_manufactured_solution() {
        let s = spec("0.1*u^2", &toy_forcing(1.3, 1.3, 8.0, 0.1), 33);
        let out = picard_solve(&s, 1e-10, 30).unwrap();
        assert!(out.converged);
        let last = out.trace.records.last().unwrap();
        assert!(last.residual <= 1e-10, "{}", last.residual);
        let r2 = out.trace.log_linear_r2(1).unwrap();
        assert!(r2 >= 0.999, "R² {r2}");
    }

    #[test]
    fn affine_map_has_constant_ratio() {
        // F = 3u + f0 with A_Φ = 10: ratios settle on one value and the
        // log-differences are affine in n.
        let mut s = spec("0", "3*u + x*y*(1-x)*(1-y)", 17);
        s.a_phi = OperatorSpec::scalar(10.0);
        let out = picard_solve(&s, 1e-13, 40).unwrap();
        let r = out.trace.ratios();
        let tail = &r[1..];
        let r0 = tail[0];
        assert!(tail.iter().all(|v| (v - r0).abs() <= 0.05 * r0), "{r:?}");
        assert!(r0 < 1.0);
        assert!(out.trace.log_linear_r2(2).unwrap() >= 0.999);
    }

    #[test]
    fn large_epsilon_diverges() {
        let s = spec("40*u^2", &toy_forcing(1.3, 1.3, 8.0, 40.0), 17);
        match picard_solve(&s, 1e-10, 30) {
            Err(Error::Divergence { trace, last_ratios, .. }) => {
                assert!(last_ratios.iter().all(|&r| r > 1.0));
                assert!(!trace.records.is_empty());
            }
            other => panic!("expected divergence, got {:?}", other.map(|o| o.trace)),
        }
    }

    #[test]
    fn lipschitz_of_linear_and_bounded_maps() {
        let mut s = spec("0", "2*u", 9);
        let w = DiscreteField::zeros(s.base.grid.nodes(), 1);
        let r = lipschitz_probe(&s, &w, 50).unwrap();
        assert!((r.mu_hat - 2.0).abs() < 1e-10, "{}", r.mu_hat);
        s.f_law = Expression::parse("sin(u)").unwrap();
        assert!(lipschitz_probe(&s, &w, 200).unwrap().mu_hat <= 1.0 + 1e-10);
        s.f_law = Expression::parse("3").unwrap();
        assert_eq!(lipschitz_probe(&s, &w, 20).unwrap().mu_hat, 0.0);
        assert!(lipschitz_probe(&s, &w, 1).is_err());
    }

    #[test]
    fn trace_is_deterministic() {
        let s = spec("0.1*u^2", &toy_forcing(1.3, 1.3, 8.0, 0.1), 17);
        let a = picard_solve(&s, 1e-10, 30).unwrap().trace;
        let b = picard_solve(&s, 1e-10, 30).unwrap().trace;
        assert_eq!(a, b);
    }

    #[test]
    fn zero_iterations_gives_trivial_trace() {
        let s = spec("0", "1", 9);
        let out = picard_solve(&s, 1e-10, 0).unwrap();
        assert_eq!(out.trace.iterations(), 0);
        let rep = ball_check(&out.trace, 1.0, 0.0);
        assert!(rep.stayed_in_ball && rep.contraction_holds);
    }
}
