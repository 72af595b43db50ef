//! Discrete coercive-estimate terms, parameter sweeps and resolvent probes.

use std::io::Write;

use faer::{c64, Mat};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::{weighted_lp_norm, ComponentNorm, DiscreteField, Measure};
use crate::opspace::{induced_norm, power_norm, boundary_theta, interp_norm, InterpMethod, InterpParams, SectorSpec};
use crate::solve1d::{solve_1d, Form1D, Problem1D, Solution1D};
use crate::solve2d::{apply_coefficient, solve_2d_direct, Problem2D, Solution2D};

/// Moduli at or above this enter the trend statistics.
pub const LARGE_LAMBDA: f64 = 1e3;
/// Largest accepted trend slope of the ratio against `log10 |λ|`.
pub const SLOPE_TOL: f64 = 0.02;
/// Growth across arguments above this factor is flagged.
pub const ARG_GROWTH_TOL: f64 = 10.0;

/// Power of `t` multiplying the `i`-th derivative term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TWeight {
    /// `t^{i/2}`.
    Half,
    /// `t^i`.
    Full,
}

impl TWeight {
    fn apply(self, t: f64, i: u32) -> f64 {
        match self {
            TWeight::Half => t.powf(i as f64 / 2.0),
            TWeight::Full => t.powi(i as i32),
        }
    }

    fn other(self) -> Self {
        match self {
            TWeight::Half => TWeight::Full,
            TWeight::Full => TWeight::Half,
        }
    }
}

/// How norms are taken: `L_p` outer exponent and the component norm on `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSpec {
    pub p: f64,
    pub component: ComponentNorm,
    pub interp: InterpMethod,
}

impl NormSpec {
    pub fn new(p: f64, q: f64) -> Self {
        NormSpec { p, component: ComponentNorm::Lq(q), interp: InterpMethod::Closed }
    }

    fn norm(&self, u: &DiscreteField, g: &impl Measure) -> Result<f64> {
        weighted_lp_norm(u, g, self.p, &self.component)
    }

    fn q(&self) -> f64 {
        match self.component {
            ComponentNorm::Lq(q) | ComponentNorm::WeightedLq { q, .. } => q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub lambda: C64,
    pub t1: f64,
    pub t2: f64,
    /// Weighting used for `ratio`; `ratio_alt` uses the other one.
    pub weighting: TWeight,
    /// `|λ| ‖u‖` (both directions in 2D).
    pub term_u: f64,
    /// `|λ|^{1/2}` times the weighted first-derivative norms.
    pub term_d1: f64,
    /// Weighted second-derivative norms.
    pub term_d2: f64,
    pub term_au: f64,
    pub norm_f: f64,
    /// `‖f_1‖` in the interpolation space.
    pub norm_f1_interp: f64,
    /// `|λ|^{1-θ} ‖f_1‖_E`.
    pub norm_f1_scaled: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub ratio_alt: f64,
    /// Unweighted norms by name.
    pub raw: Vec<(String, f64)>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Terms of the 1D estimates. Regularized and parametric forms use
/// `u^[i]`; the plain form uses `x^{iα} u^{(i)}`.
pub fn coercivity_report_1d(p: &Problem1D, s: &Solution1D, norms: &NormSpec) -> Result<CoercivityReport> {
    let g = &p.grid;
    if s.u.nodes() != g.n() || s.u.dim_e() != p.dim() {
        return Err(Error::invalid("solution does not belong to this problem"));
    }
    let nu = norms.norm(&s.u, g)?;
    let n1 = norms.norm(&s.u1, g)?;
    let n2 = match p.kind {
        Form1D::Plain => {
            // x^{2α} u'' = u^[2] - α x^{α-1} u^[1]
            let a = p.exponent;
            let dim = p.dim();
            let v: Vec<C64> = s
                .u2
                .values()
                .iter()
                .zip(s.u1.values())
                .enumerate()
                .map(|(k, (u2, u1))| u2 - u1 * (a * g.x_nodes()[k / dim].powf(a - 1.0)))
                .collect();
            norms.norm(&DiscreteField::new(v, dim)?, g)?
        }
        _ => norms.norm(&s.u2, g)?,
    };
    let nau = norms.norm(&s.au, g)?;
    let nf = norms.norm(&s.f, g)?;
    let (f1_interp, f1_scaled) = boundary_terms(p, norms)?;
    let t = p.effective_t();
    let lam = p.lambda.norm();
    let build = |w: TWeight| {
        let tu = lam * nu;
        let t1 = lam.sqrt() * w.apply(t, 1) * n1;
        let t2 = w.apply(t, 2) * n2;
        (tu, t1, t2, tu + t1 + t2 + nau)
    };
    let (tu, td1, td2, num) = build(TWeight::Half);
    let (.., num_alt) = build(TWeight::Full);
    let den = nf + f1_interp + f1_scaled;
    Ok(CoercivityReport {
        lambda: p.lambda,
        t1: t,
        t2: 1.0,
        weighting: TWeight::Half,
        term_u: tu,
        term_d1: td1,
        term_d2: td2,
        term_au: nau,
        norm_f: nf,
        norm_f1_interp: f1_interp,
        norm_f1_scaled: f1_scaled,
        numerator: num,
        denominator: den,
        ratio: ratio(num, den),
        ratio_alt: ratio(num_alt, den),
        raw: vec![
            ("u".into(), nu),
            ("u1".into(), n1),
            ("u2".into(), n2),
            ("au".into(), nau),
            ("f".into(), nf),
        ],
    })
}

/// `(‖f_1‖_{E_1}, |λ|^{1-θ} ‖f_1‖_E)`; zero for homogeneous data.
fn boundary_terms(p: &Problem1D, norms: &NormSpec) -> Result<(f64, f64)> {
    if p.bc.is_homogeneous() {
        return Ok((0.0, 0.0));
    }
    let theta = boundary_theta(p.exponent, p.p);
    let ip = InterpParams::new(theta, norms.q())?;
    let data = p.bc.data_or_zero(p.dim());
    let interp = interp_norm(&data, &p.op, ip, norms.interp)?;
    let plain = norms.component.eval(&data);
    Ok((interp, p.lambda.norm().powf(1.0 - theta) * plain))
}

/// Terms of the 2D estimate with `t_k^i` weights as printed; `ratio_alt`
/// uses `t_k^{i/2}`.
pub fn coercivity_report_2d(p: &Problem2D, s: &Solution2D, norms: &NormSpec) -> Result<CoercivityReport> {
    let g = &p.grid;
    if s.u.nodes() != g.nodes() || s.u.dim_e() != p.dim() {
        return Err(Error::invalid("solution does not belong to this problem"));
    }
    let nu = norms.norm(&s.u, g)?;
    let nx1 = norms.norm(&s.ux1, g)?;
    let ny1 = norms.norm(&s.uy1, g)?;
    let nx2 = norms.norm(&s.ux2, g)?;
    let ny2 = norms.norm(&s.uy2, g)?;
    let nau = norms.norm(&s.au, g)?;
    let nf = norms.norm(&s.f, g)?;
    let lam = p.lambda.norm();
    let build = |w: TWeight| {
        let tu = lam * 2.0 * nu;
        let t1 = lam.sqrt() * (w.apply(p.t1, 1) * nx1 + w.apply(p.t2, 1) * ny1);
        let t2 = w.apply(p.t1, 2) * nx2 + w.apply(p.t2, 2) * ny2;
        (tu, t1, t2, tu + t1 + t2 + nau)
    };
    let primary = TWeight::Full;
    let (tu, td1, td2, num) = build(primary);
    let (.., num_alt) = build(primary.other());
    Ok(CoercivityReport {
        lambda: p.lambda,
        t1: p.t1,
        t2: p.t2,
        weighting: primary,
        term_u: tu,
        term_d1: td1,
        term_d2: td2,
        term_au: nau,
        norm_f: nf,
        norm_f1_interp: 0.0,
        norm_f1_scaled: 0.0,
        numerator: num,
        denominator: nf,
        ratio: ratio(num, nf),
        ratio_alt: ratio(num_alt, nf),
        raw: vec![
            ("u".into(), nu),
            ("ux1".into(), nx1),
            ("uy1".into(), ny1),
            ("ux2".into(), nx2),
            ("uy2".into(), ny2),
            ("au".into(), nau),
            ("f".into(), nf),
        ],
    })
}

/// `(‖x^α A_1 u_x‖ + ‖y^β A_2 u_y‖) / numerator`.
pub fn lower_order_ratio(p: &Problem2D, s: &Solution2D, norms: &NormSpec) -> Result<f64> {
    let r = coercivity_report_2d(p, s, norms)?;
    let a1 = apply_coefficient(&p.a1, &p.grid, &s.ux1)?;
    let a2 = apply_coefficient(&p.a2, &p.grid, &s.uy1)?;
    let lower = norms.norm(&a1, &p.grid)? + norms.norm(&a2, &p.grid)?;
    Ok(ratio(lower, r.numerator))
}

/// A problem instance for sweeps.
#[derive(Debug, Clone)]
pub enum Instance {
    OneD(Problem1D),
    TwoD(Problem2D),
}

impl Instance {
    pub fn lambda(&self) -> C64 {
        match self {
            Instance::OneD(p) => p.lambda,
            Instance::TwoD(p) => p.lambda,
        }
    }

    pub fn with_lambda(&self, lambda: C64) -> Instance {
        match self {
            Instance::OneD(p) => Instance::OneD(p.clone().with_lambda(lambda)),
            Instance::TwoD(p) => Instance::TwoD(p.clone().with_lambda(lambda)),
        }
    }

    /// `t` for the 1D parametric form; `(t1, t2)` in 2D.
    pub fn with_t(&self, t1: f64, t2: f64) -> Instance {
        match self {
            Instance::OneD(p) => Instance::OneD(p.clone().with_t(t1)),
            Instance::TwoD(p) => Instance::TwoD(p.clone().with_t(t1, t2)),
        }
    }

    pub fn report(&self, norms: &NormSpec) -> Result<CoercivityReport> {
        match self {
            Instance::OneD(p) => coercivity_report_1d(p, &solve_1d(p)?, norms),
            Instance::TwoD(p) => coercivity_report_2d(p, &solve_2d_direct(p)?, norms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub lambda: C64,
    pub t1: f64,
    pub t2: f64,
    pub report: Option<CoercivityReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub max_ratio: f64,
    pub argmax: Option<usize>,
    pub min_ratio: f64,
    /// Least-squares slope of ratio against `log10 |λ|` over `|λ| ≥ 10³`.
    pub trend_slope: Option<f64>,
    /// Largest ratio at the widest argument over that at the narrowest.
    pub arg_growth: Option<f64>,
    pub growth_flagged: bool,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub summary: SweepSummary,
}

fn run_points(inst: &Instance, params: Vec<(C64, f64, f64)>, norms: &NormSpec) -> Vec<SweepPoint> {
    params
        .into_par_iter()
        .enumerate()
        .map(|(index, (lambda, t1, t2))| {
            let job = inst.with_lambda(lambda).with_t(t1, t2);
            match job.report(norms) {
                Ok(r) => SweepPoint { index, lambda, t1, t2, report: Some(r), error: None },
                Err(e) => SweepPoint { index, lambda, t1, t2, report: None, error: Some(e.to_string()) },
            }
        })
        .collect()
}

fn current_t(inst: &Instance) -> (f64, f64) {
    match inst {
        Instance::OneD(p) => (p.t, 1.0),
        Instance::TwoD(p) => (p.t1, p.t2),
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn summarize(points: &[SweepPoint]) -> SweepSummary {
    let ok: Vec<(&SweepPoint, f64)> = points.iter().filter_map(|p| p.report.as_ref().map(|r| (p, r.ratio))).collect();
    let mut max_ratio = f64::NEG_INFINITY;
    let mut min_ratio = f64::INFINITY;
    let mut argmax = None;
    for (p, r) in &ok {
        if *r > max_ratio {
            max_ratio = *r;
            argmax = Some(p.index);
        }
        min_ratio = min_ratio.min(*r);
    }
    if ok.is_empty() {
        max_ratio = f64::NAN;
        min_ratio = f64::NAN;
    }
    let large: Vec<(f64, f64)> = ok
        .iter()
        .filter(|(p, _)| p.lambda.norm() >= LARGE_LAMBDA)
        .map(|(p, r)| (p.lambda.norm().log10(), *r))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = large.into_iter().unzip();
    let trend_slope = ls_slope(&xs, &ys);

    let arg_of = |p: &SweepPoint| p.lambda.arg().abs();
    let args: Vec<f64> = ok.iter().map(|(p, _)| arg_of(p)).collect();
    let arg_growth = if args.is_empty() {
        None
    } else {
        let lo = args.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = args.iter().copied().fold(0.0, f64::max);
        let max_at = |a: f64| {
            ok.iter()
                .filter(|(p, _)| (arg_of(p) - a).abs() < 1e-9)
                .map(|(_, r)| *r)
                .fold(0.0, f64::max)
        };
        let (rlo, rhi) = (max_at(lo), max_at(hi));
        (hi > lo && rlo > 0.0).then(|| rhi / rlo)
    };
    let growth_flagged = trend_slope.is_some_and(|s| s > SLOPE_TOL)
        || arg_growth.is_some_and(|g| g > ARG_GROWTH_TOL)
        || !max_ratio.is_finite();
    SweepSummary {
        max_ratio,
        argmax,
        min_ratio,
        trend_slope,
        arg_growth,
        growth_flagged,
        failures: points.len() - ok.len(),
    }
}

/// Solve at every sector sample; failures are recorded per point.
pub fn sweep_lambda(inst: &Instance, sector: &SectorSpec, norms: &NormSpec) -> Result<SweepResult> {
    sector.validate()?;
    let (t1, t2) = current_t(inst);
    let params = sector.points().into_iter().map(|l| (l, t1, t2)).collect();
    let points = run_points(inst, params, norms);
    let summary = summarize(&points);
    Ok(SweepResult { points, summary })
}

/// Solve at each of `lambdas` in order.
pub fn sweep_points(inst: &Instance, lambdas: &[C64], norms: &NormSpec) -> Result<SweepResult> {
    if lambdas.is_empty() {
        return Err(Error::invalid("no λ points given"));
    }
    let (t1, t2) = current_t(inst);
    let points = run_points(inst, lambdas.iter().map(|&l| (l, t1, t2)).collect(), norms);
    let summary = summarize(&points);
    Ok(SweepResult { points, summary })
}

/// Solve at every `(t1, t2)` at the instance's `λ`.
pub fn sweep_t(inst: &Instance, ts: &[(f64, f64)], norms: &NormSpec) -> Result<SweepResult> {
    if ts.is_empty() {
        return Err(Error::invalid("t grid is empty"));
    }
    if let Some(t) = ts.iter().flat_map(|(a, b)| [a, b]).find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::invalid(format!("t = {t} must lie in (0, 1]")));
    }
    let lambda = inst.lambda();
    let params = ts.iter().map(|&(a, b)| (lambda, a, b)).collect();
    let points = run_points(inst, params, norms);
    let summary = summarize(&points);
    Ok(SweepResult { points, summary })
}

pub const SWEEP_COLUMNS: [&str; 20] = [
    "index",
    "lambda_re",
    "lambda_im",
    "modulus",
    "arg",
    "t1",
    "t2",
    "term_u",
    "term_d1",
    "term_d2",
    "term_au",
    "norm_f",
    "norm_f1_interp",
    "norm_f1_scaled",
    "numerator",
    "denominator",
    "ratio",
    "ratio_alt",
    "status",
    "error",
];

/// One row per sweep point in the fixed column order of [`SWEEP_COLUMNS`].
pub fn write_sweep_csv<W: Write>(w: W, s: &SweepResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_COLUMNS)?;
    for p in &s.points {
        let mut row = vec![
            p.index.to_string(),
            fmt(p.lambda.re),
            fmt(p.lambda.im),
            fmt(p.lambda.norm()),
            fmt(p.lambda.arg()),
            fmt(p.t1),
            fmt(p.t2),
        ];
        match &p.report {
            Some(r) => {
                for v in [
                    r.term_u,
                    r.term_d1,
                    r.term_d2,
                    r.term_au,
                    r.norm_f,
                    r.norm_f1_interp,
                    r.norm_f1_scaled,
                    r.numerator,
                    r.denominator,
                    r.ratio,
                    r.ratio_alt,
                ] {
                    row.push(fmt(v));
                }
                row.push("ok".into());
                row.push(String::new());
            }
            None => {
                row.extend(std::iter::repeat_n(String::new(), 11));
                row.push("error".into());
                row.push(p.error.clone().unwrap_or_default());
            }
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Shortest round-trip representation, so outputs are byte-stable.
pub fn fmt(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSample {
    pub lambda: C64,
    /// `(1 + |λ|) ‖(B_h + λ)^{-1}‖`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLevel {
    pub n: usize,
    pub samples: Vec<ResolventSample>,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupTable {
    pub levels: Vec<ProbeLevel>,
    /// Finest-level maximum over coarsest-level maximum.
    pub level_ratio: f64,
}

/// Discrete operator `B_h = -t D2 (+ drift) ⊗ I + I ⊗ A` on interior nodes,
/// with homogeneous boundary conditions.
pub fn discrete_operator_sparse(p: &Problem1D) -> Result<linalg::Triplets> {
    let lo = p.line_operator()?;
    let dim = p.dim();
    let mut m = linalg::kron(&lo.second, &linalg::identity(dim));
    for k in 0..lo.interior() {
        for c in 0..dim {
            for d in 0..dim {
                m.push_real(k * dim + c, k * dim + d, p.op.entry(c, d));
            }
        }
    }
    Ok(m)
}

/// Dense copy of [`discrete_operator_sparse`].
pub fn discrete_operator(p: &Problem1D) -> Result<Mat<c64>> {
    Ok(discrete_operator_sparse(p)?.to_dense())
}

/// `(1+|λ|)·‖(B_h+λ)^{-1}‖` over the sector at each mesh level, in the
/// weighted `L_p` norm of the problem (depth held fixed across levels).
///
/// With `W = diag(w_i^{1/p})` the weighted norm of the resolvent is the
/// `l_p` norm of `W R W^{-1}`.
pub fn semigroup_probe(p: &Problem1D, sector: &SectorSpec, levels: &[usize], seed: u64) -> Result<SemigroupTable> {
    sector.validate()?;
    if levels.is_empty() {
        return Err(Error::invalid("no mesh levels given"));
    }
    let depth = p.grid.depth();
    let mut out = Vec::with_capacity(levels.len());
    for &n in levels {
        let q = Problem1D {
            grid: crate::mesh::build_grid(*p.grid.transform(), n, depth)?,
            ..p.clone()
        };
        q.validate()?;
        let b = discrete_operator_sparse(&q)?;
        let size = b.n();
        let dim = q.dim();
        let w = q.grid.weights();
        let wp: Vec<f64> = (1..n - 1).flat_map(|i| std::iter::repeat_n(w[i].powf(1.0 / q.p), dim)).collect();
        let samples: Vec<ResolventSample> = sector
            .points()
            .into_par_iter()
            .map(|lambda| -> Result<ResolventSample> {
                let singular = |e: Error| Error::Singular(format!("resolvent at λ = {lambda}: {e}"));
                let mut shifted = b.clone();
                shifted.add_scaled(&linalg::identity(size), lambda);
                let norm = if q.p == 1.0 || q.p == 2.0 || q.p.is_infinite() {
                    let r = crate::opspace::invert(&shifted.to_dense()).map_err(singular)?;
                    let scaled = Mat::from_fn(size, size, |i, j| r[(i, j)] * c64::new(wp[i] / wp[j], 0.0));
                    induced_norm(&scaled, q.p, seed)
                } else {
                    let fwd = linalg::factor(&shifted).map_err(singular)?;
                    let adj = linalg::factor(&shifted.adjoint()).map_err(singular)?;
                    let failed = std::cell::Cell::new(false);
                    let solve = |f: &linalg::Factored, v: Vec<C64>| {
                        f.solve(&v).unwrap_or_else(|_| {
                            failed.set(true);
                            vec![C64::new(0.0, 0.0); size]
                        })
                    };
                    let norm = power_norm(
                        size,
                        |x| {
                            let v = x.iter().zip(&wp).map(|(x, w)| x / w).collect();
                            solve(&fwd, v).iter().zip(&wp).map(|(x, w)| x * w).collect()
                        },
                        |y| {
                            let v = y.iter().zip(&wp).map(|(y, w)| y * w).collect();
                            solve(&adj, v).iter().zip(&wp).map(|(y, w)| y / w).collect()
                        },
                        q.p,
                        seed,
                    );
                    if failed.get() {
                        return Err(Error::Singular(format!("resolvent at λ = {lambda} is singular")));
                    }
                    norm
                };
                Ok(ResolventSample { lambda, value: (1.0 + lambda.norm()) * norm })
            })
            .collect::<Result<_>>()?;
        let max = samples.iter().map(|s| s.value).fold(0.0, f64::max);
        out.push(ProbeLevel { n, samples, max });
    }
    let level_ratio = out.last().unwrap().max / out[0].max;
    Ok(SemigroupTable { levels: out, level_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opspace::OperatorSpec;
    use crate::solve1d::{BoundarySpec, MeshSpec, Rhs};
    use std::f64::consts::PI;

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn base(n: usize, depth: f64, lambda: C64) -> Problem1D {
        Problem1D::new(Form1D::Regularized, 1.3, 4.0, 1.0, OperatorSpec::scalar(1.0), lambda, MeshSpec::with_depth(n, depth)).unwrap()
    }

    #[test]
    fn zero_data_ratio_is_zero() {
        let p = base(65, 10.0, c(5.0));
        let r = coercivity_report_1d(&p, &solve_1d(&p).unwrap(), &NormSpec::new(4.0, 2.0)).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert_eq!(r.numerator, 0.0);
    }

    /// `f = sin(k y)` with Dirichlet ends: `u = f / (c + λ + k²)` exactly.
    #[test]
    fn fourier_mode_oracle() {
        let depth = 12.0;
        let k = 3.0 * PI / depth;
        let (cc, lam) = (1.0, 4.0);
        let p = base(1025, depth, c(lam)).with_rhs(Rhs::expr(&format!("sin({k} * (x^-0.3 - 1)/(-0.3))")).unwrap());
        let norms = NormSpec::new(4.0, 2.0);
        let r = coercivity_report_1d(&p, &solve_1d(&p).unwrap(), &norms).unwrap();

        // Analytic norms by fine Simpson quadrature in y with weight x^γ = (1 - 0.3 y)^{-13/3}.
        let lp = |g: &dyn Fn(f64) -> f64| {
            let m = 200_000;
            let h = depth / m as f64;
            let mut s = 0.0;
            for i in 0..=m {
                let y = -depth + i as f64 * h;
                let w = (1.0 - 0.3 * y).powf(-1.3 / 0.3);
                let coef = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                s += coef * w * g(y).abs().powi(4);
            }
            (s * h / 3.0).powf(0.25)
        };
        let den = cc + lam + k * k;
        let nu = lp(&|y| (k * y).sin() / den);
        let n1 = lp(&|y| k * (k * y).cos() / den);
        let n2 = lp(&|y| k * k * (k * y).sin() / den);
        let nf = lp(&|y| (k * y).sin());
        let exact = (lam * nu + lam.sqrt() * n1 + n2 + cc * nu) / nf;
        assert!((r.ratio / exact - 1.0).abs() < 0.02, "{} vs {exact}", r.ratio);
    }

    #[test]
    fn ratio_invariant_under_scaling() {
        let p = base(129, 12.0, c(10.0)).with_rhs(Rhs::expr("x^2").unwrap());
        let q = p.clone().with_rhs(Rhs::expr("-7.5 * x^2").unwrap());
        let norms = NormSpec::new(4.0, 2.0);
        let a = coercivity_report_1d(&p, &solve_1d(&p).unwrap(), &norms).unwrap();
        let b = coercivity_report_1d(&q, &solve_1d(&q).unwrap(), &norms).unwrap();
        assert!((a.ratio - b.ratio).abs() <= 1e-10 * a.ratio);
        assert!([a.term_u, a.term_d1, a.term_d2, a.term_au].iter().all(|t| *t <= a.ratio * a.denominator * (1.0 + 1e-12)));
    }

    #[test]
    fn single_point_sweep_matches_report() {
        let p = base(65, 12.0, c(1.0)).with_rhs(Rhs::expr("x").unwrap());
        let norms = NormSpec::new(4.0, 2.0);
        let sector = SectorSpec::new(PI / 3.0, vec![1.0], vec![0.0]).unwrap();
        let sw = sweep_lambda(&Instance::OneD(p.clone()), &sector, &norms).unwrap();
        let direct = coercivity_report_1d(&p, &solve_1d(&p).unwrap(), &norms).unwrap();
        assert_eq!(sw.points.len(), 1);
        assert_eq!(sw.points[0].report.as_ref().unwrap(), &direct);
    }

    /// A single mode `sin(k y)` with `|λ| = c + k²`: on the negative ray the
    /// resolvent is singular, so ratios blow up as the argument nears π.
    #[test]
    fn growth_near_spectrum_ray_is_flagged() {
        let depth = 12.0;
        let k = 3.0 * PI / depth;
        let p = base(257, depth, c(1.0)).with_rhs(Rhs::expr(&format!("sin({k} * (x^-0.3 - 1)/(-0.3))")).unwrap());
        let norms = NormSpec::new(4.0, 2.0);
        let phi = 0.995 * PI;
        let sector = SectorSpec::new(phi, vec![1.0 + k * k, 1e3], vec![0.0, PI / 3.0, 0.9 * PI, phi]).unwrap();
        let sw = sweep_lambda(&Instance::OneD(p.clone()), &sector, &norms).unwrap();
        assert!(sw.summary.growth_flagged, "{:?}", sw.summary);
        let inside = SectorSpec::new(PI / 3.0, vec![1.0 + k * k, 1e3], vec![0.0, PI / 3.0]).unwrap();
        let ok = sweep_lambda(&Instance::OneD(p), &inside, &norms).unwrap();
        assert!(!ok.summary.growth_flagged, "{:?}", ok.summary);
    }

    #[test]
    fn t_one_reduces_to_plain_report() {
        let p = base(65, 12.0, c(100.0)).with_rhs(Rhs::expr("x").unwrap());
        let q = Problem1D { kind: Form1D::Parametric, ..p.clone() }.with_t(1.0);
        let norms = NormSpec::new(4.0, 2.0);
        let a = coercivity_report_1d(&p, &solve_1d(&p).unwrap(), &norms).unwrap();
        let b = coercivity_report_1d(&q, &solve_1d(&q).unwrap(), &norms).unwrap();
        assert_eq!(a.ratio, b.ratio);
    }

    #[test]
    fn large_real_lambda_resolvent_is_bounded() {
        let p = base(65, 12.0, c(0.0)).with_bc(BoundarySpec::dirichlet());
        let sector = SectorSpec::new(0.1, vec![1e4, 1e5], vec![0.0]).unwrap();
        let t = semigroup_probe(&p, &sector, &[65], 7).unwrap();
        for s in &t.levels[0].samples {
            assert!(s.value <= 1.0 + 1e-2, "{}", s.value);
        }
    }

    #[test]
    fn csv_has_fixed_header_and_one_row_per_point() {
        let p = base(33, 8.0, c(1.0)).with_rhs(Rhs::expr("x").unwrap());
        let sector = SectorSpec::new(PI / 3.0, vec![1.0, 10.0], vec![0.0, PI / 3.0]).unwrap();
        let sw = sweep_lambda(&Instance::OneD(p), &sector, &NormSpec::new(4.0, 2.0)).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &sw).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_COLUMNS.join(","));
        assert_eq!(lines.len(), 5);
    }
}
