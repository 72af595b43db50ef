//! Truncations of the infinite coupled system
//! `-x^{2α}∂²_x u_m - y^{2β}∂²_y u_m + Σ_j (x^α a_mj ∂_x + y^β b_mj ∂_y) u_j + (d_m + λ) u_m = f_m`
//! with the norm of `l_q(D)`.

use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcdsl::Expression;
use crate::mesh::{self, ComponentNorm, DiscreteField};
use crate::opspace::OperatorSpec;
use crate::solve1d::Rhs;
use crate::solve2d::{solve_2d_direct, CoefficientLaw, Problem2D, Solution2D};
use crate::verify::{coercivity_report_2d, CoercivityReport, NormSpec};

/// Relative growth of the partial-sum supremum, from one truncation size
/// to the next, below which it counts as stabilized.
pub const STABLE_GROWTH: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct SystemSpec {
    /// `d_m`, in `m`.
    pub d_law: Expression,
    /// `a_mj`, in `m, j, x, y`.
    pub a_law: Expression,
    /// `b_mj`, in `m, j, x, y`.
    pub b_law: Expression,
    pub mu: f64,
    pub n: usize,
    pub q: f64,
    /// Geometry, bcs and λ. Its grid is shared by every truncation.
    pub base: Problem2D,
    /// `f_m`, in `x, y, m`; taken as zero for `m > leading`.
    pub rhs: Expression,
    pub leading: usize,
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return Err(Error::invalid(format!("μ = {} must lie in (0, 1/2)", self.mu)));
        }
        if self.n == 0 {
            return Err(Error::invalid("truncation size must be positive"));
        }
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return Err(Error::invalid(format!("q = {} must lie in [1, ∞)", self.q)));
        }
        self.diagonal(self.n).map(|_| ())
    }

    /// `d_1..d_n`, checked positive and nondecreasing.
    pub fn diagonal(&self, n: usize) -> Result<Vec<f64>> {
        let c = self.d_law.compile(&["m"])?;
        let mut d = Vec::with_capacity(n);
        for m in 1..=n {
            let v = c.eval(&[m as f64])?;
            if !(v > 0.0) {
                return Err(Error::invalid(format!("d_{m} = {v} must be positive")));
            }
            if let Some(&prev) = d.last() {
                if v < prev {
                    return Err(Error::invalid(format!("d_m must be nondecreasing, d_{m} = {v} < {prev}")));
                }
            }
            d.push(v);
        }
        Ok(d)
    }

    /// The `n`-component truncation on the base grid.
    pub fn problem(&self, n: usize) -> Result<Problem2D> {
        let d = self.diagonal(n)?;
        let mut p = self.base.clone();
        p.op = OperatorSpec::Diagonal(d);
        p.a1 = law(&self.a_law);
        p.a2 = law(&self.b_law);
        p.mu = self.mu;
        p.exponents.q = self.q;
        p.rhs = Rhs::Field(self.forcing(&p, n)?);
        Ok(p)
    }

    fn forcing(&self, p: &Problem2D, n: usize) -> Result<DiscreteField> {
        let c = self.rhs.compile(&["x", "y", "m"])?;
        let (xs, ys) = (p.grid.gx.x_nodes(), p.grid.gy.x_nodes());
        let mut v = Vec::with_capacity(xs.len() * ys.len() * n);
        for &x in xs {
            for &y in ys {
                for m in 1..=n {
                    let f = if m <= self.leading { c.eval(&[x, y, m as f64])? } else { 0.0 };
                    v.push(C64::new(f, 0.0));
                }
            }
        }
        DiscreteField::new(v, n)
    }

    pub fn norms(&self) -> NormSpec {
        NormSpec::new(self.base.exponents.p, self.q)
    }
}

fn law(e: &Expression) -> CoefficientLaw {
    if *e.tree() == *Expression::constant(0.0).tree() {
        CoefficientLaw::Zero
    } else {
        CoefficientLaw::Entrywise(e.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub n: usize,
    pub sup_a: f64,
    pub sup_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub sup_a: f64,
    pub sup_b: f64,
    pub finite: bool,
    pub growth_vs_n: Vec<DecayRow>,
}

/// `sup_{x,y} sup_{m ≤ N} Σ_{j ≤ N} |c_mj(x, y)| d_j^{-(1/2-μ)}` for one law.
fn partial_sup(spec: &SystemSpec, e: &Expression, d: &[f64]) -> Result<f64> {
    let c = e.compile(&["m", "j", "x", "y"])?;
    let n = d.len();
    let w: Vec<f64> = d.iter().map(|dj| dj.powf(-(0.5 - spec.mu))).collect();
    let constant = !e.variables().iter().any(|v| v == "x" || v == "y");
    let (xs, ys) = (spec.base.grid.gx.x_nodes(), spec.base.grid.gy.x_nodes());
    let pts: Vec<(f64, f64)> = if constant {
        vec![(xs[0], ys[0])]
    } else {
        xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect()
    };
    let mut sup: f64 = 0.0;
    for (x, y) in pts {
        for m in 1..=n {
            let mut s = 0.0;
            for j in 1..=n {
                s += c.eval(&[m as f64, j as f64, x, y])?.abs() * w[j - 1];
            }
            if !s.is_finite() {
                return Ok(f64::INFINITY);
            }
            sup = sup.max(s);
        }
    }
    Ok(sup)
}

/// The decay condition at every grid point for each truncation size.
/// `finite` holds when both suprema grow by at most [`STABLE_GROWTH`]
/// between the last two sizes.
pub fn decay_condition_check(spec: &SystemSpec, n_list: &[usize]) -> Result<DecayReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(Error::invalid("truncation sizes must be positive and increasing"));
    }
    if !(spec.mu > 0.0 && spec.mu < 0.5) {
        return Err(Error::invalid(format!("μ = {} must lie in (0, 1/2)", spec.mu)));
    }
    let d = spec.diagonal(*n_list.last().unwrap())?;
    let rows: Vec<DecayRow> = n_list
        .par_iter()
        .map(|&n| {
            Ok(DecayRow {
                n,
                sup_a: partial_sup(spec, &spec.a_law, &d[..n])?,
                sup_b: partial_sup(spec, &spec.b_law, &d[..n])?,
            })
        })
        .collect::<Result<_>>()?;
    let last = rows.last().unwrap();
    let finite = last.sup_a.is_finite()
        && last.sup_b.is_finite()
        && match rows.len() {
            1 => true,
            k => {
                let prev = &rows[k - 2];
                let grow = |a: f64, b: f64| if a == 0.0 { b == 0.0 } else { (b - a) / a <= STABLE_GROWTH };
                grow(prev.sup_a, last.sup_a) && grow(prev.sup_b, last.sup_b)
            }
        };
    Ok(DecayReport { sup_a: last.sup_a, sup_b: last.sup_b, finite, growth_vs_n: rows })
}

#[derive(Debug, Clone)]
pub struct SystemSolution {
    pub solution: Solution2D,
    pub report: CoercivityReport,
    pub decay: DecayReport,
}

/// Solve the `spec.n`-component truncation and report its coercive
/// estimate; the `Au` term is `‖Du‖` in `l_q`.
pub fn truncate_and_solve(spec: &SystemSpec) -> Result<SystemSolution> {
    spec.validate()?;
    let decay = decay_condition_check(spec, &[spec.n])?;
    if !decay.finite {
        return Err(Error::invalid(format!(
            "coupling fails the decay condition at N = {}: sup_a = {}, sup_b = {}",
            spec.n, decay.sup_a, decay.sup_b
        )));
    }
    let p = spec.problem(spec.n)?;
    let solution = solve_2d_direct(&p)?;
    let report = coercivity_report_2d(&p, &solution, &spec.norms())?;
    Ok(SystemSolution { solution, report, decay })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationRow {
    pub n: usize,
    /// `‖u^(N) - P_N u^(ref)‖` in `L_p(G; l_q)`.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationStudy {
    pub reference_n: usize,
    /// `‖u^(ref)‖`, the scale of the roundoff floor.
    pub reference_norm: f64,
    pub rows: Vec<TruncationRow>,
    pub decay: DecayReport,
}

pub const STUDY_COLUMNS: [&str; 2] = ["n", "difference"];

impl TruncationStudy {
    /// `difference(last) / difference(first)`; zero when both vanish.
    pub fn last_first_ratio(&self) -> f64 {
        let (f, l) = (self.rows[0].difference, self.rows.last().unwrap().difference);
        if f == 0.0 {
            if l == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            l / f
        }
    }

    /// Nonincreasing differences, ignoring changes below the roundoff
    /// floor `1e-14 ‖u^(ref)‖`.
    pub fn monotone(&self) -> bool {
        let floor = 1e-14 * self.reference_norm;
        self.rows.windows(2).all(|w| w[1].difference <= w[0].difference.max(floor))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(STUDY_COLUMNS)?;
        for r in &self.rows {
            out.write_record([r.n.to_string(), crate::verify::fmt(r.difference)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Self-convergence against the `2·max(n_list)`-component truncation.
pub fn truncation_study(spec: &SystemSpec, n_list: &[usize]) -> Result<TruncationStudy> {
    let decay = decay_condition_check(spec, n_list)?;
    if n_list.iter().any(|&n| n < spec.leading) {
        return Err(Error::invalid("every truncation must contain the forced components"));
    }
    let reference_n = 2 * n_list.last().unwrap();
    let mut sizes = n_list.to_vec();
    sizes.push(reference_n);
    let sols: Vec<DiscreteField> = sizes
        .par_iter()
        .map(|&n| Ok(solve_2d_direct(&spec.problem(n)?)?.u))
        .collect::<Result<_>>()?;
    let reference = sols.last().unwrap();
    let g = &spec.base.grid;
    let rows = n_list
        .iter()
        .zip(&sols)
        .map(|(&n, u)| {
            let v: Vec<C64> = (0..g.nodes())
                .flat_map(|node| {
                    let r = &reference.at(node)[..n];
                    u.at(node).iter().zip(r).map(|(a, b)| a - b).collect::<Vec<_>>()
                })
                .collect();
            let diff = DiscreteField::new(v, n)?;
            let difference = mesh::weighted_lp_norm(&diff, g, spec.base.exponents.p, &ComponentNorm::Lq(spec.q))?;
            Ok(TruncationRow { n, difference })
        })
        .collect::<Result<_>>()?;
    let reference_norm = mesh::weighted_lp_norm(reference, g, spec.base.exponents.p, &ComponentNorm::Lq(spec.q))?;
    Ok(TruncationStudy { reference_n, reference_norm, rows, decay })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Exponents;
    use crate::reference::coupled_system as reference_spec;
    use crate::solve1d::MeshSpec;

    fn uncoupled(n: usize) -> SystemSpec {
        let mut s = reference_spec(n).unwrap();
        s.a_law = Expression::parse("0").unwrap();
        s.b_law = Expression::parse("0").unwrap();
        s
    }

    #[test]
    fn decay_fixture_stabilizes_below_three() {
        let mut s = reference_spec(64).unwrap();
        s.a_law = Expression::parse("2^-abs(m-j)").unwrap();
        s.b_law = s.a_law.clone();
        let r = decay_condition_check(&s, &[8, 16, 32, 64]).unwrap();
        assert!(r.finite && r.sup_a <= 3.0, "{r:?}");
    }

    #[test]
    fn decay_without_decay_is_flagged() {
        let mut s = reference_spec(64).unwrap();
        s.d_law = Expression::parse("1").unwrap();
        s.a_law = Expression::parse("1").unwrap();
        s.b_law = Expression::parse("1").unwrap();
        let r = decay_condition_check(&s, &[8, 16, 32]).unwrap();
        assert!(!r.finite);
        assert_eq!(r.growth_vs_n.iter().map(|g| g.sup_a).collect::<Vec<_>>(), vec![8.0, 16.0, 32.0]);
        s.a_law = Expression::parse("0").unwrap();
        s.b_law = s.a_law.clone();
        assert_eq!(decay_condition_check(&s, &[8]).unwrap().sup_a, 0.0);
    }

    #[test]
    fn nonpositive_diagonal_rejected() {
        let mut s = reference_spec(4).unwrap();
        s.d_law = Expression::parse("m - 2").unwrap();
        assert!(decay_condition_check(&s, &[4]).is_err());
    }

    #[test]
    fn zero_coupling_matches_scalar_solves() {
        let s = uncoupled(2);
        let sys = truncate_and_solve(&s).unwrap();
        for (m, dm) in [1.0, 4.0].into_iter().enumerate() {
            let mut p = s.base.clone();
            p.op = OperatorSpec::scalar(dm);
            p.rhs = Rhs::expr(&format!("x*y*(1-x)*(1-y)/{}", m + 1)).unwrap();
            let u = solve_2d_direct(&p).unwrap().u;
            let err = (0..u.nodes()).map(|k| (u.at(k)[0] - sys.solution.u.at(k)[m]).norm()).fold(0.0, f64::max);
            assert!(err <= 1e-12 * u.max_abs().max(1e-300), "component {m}: {err}");
        }
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let mut s = reference_spec(4).unwrap();
        s.rhs = Expression::parse("0").unwrap();
        assert_eq!(truncate_and_solve(&s).unwrap().solution.u.max_abs(), 0.0);
    }

    #[test]
    fn zero_coupling_truncations_agree() {
        let s = uncoupled(4);
        let st = truncation_study(&s, &[2, 4, 8]).unwrap();
        assert!(st.rows.iter().all(|r| r.difference == 0.0), "{:?}", st.rows);
    }

    #[test]
    fn diagonal_report_combines_scalar_reports() {
        // p = q, so the L_p(l_q) norms split across components.
        let mut s = uncoupled(2);
        s.q = 4.0;
        s.base.exponents.q = 4.0;
        let sys = truncate_and_solve(&s).unwrap();
        let mut au = 0.0;
        let mut d2 = 0.0;
        for (m, dm) in [1.0, 4.0].into_iter().enumerate() {
            let mut p = s.base.clone();
            p.op = OperatorSpec::scalar(dm);
            p.rhs = Rhs::expr(&format!("x*y*(1-x)*(1-y)/{}", m + 1)).unwrap();
            let sol = solve_2d_direct(&p).unwrap();
            let r = coercivity_report_2d(&p, &sol, &NormSpec::new(4.0, 4.0)).unwrap();
            au += r.term_au.powi(4);
            d2 += r.term_d2.powi(4);
        }
        assert!((sys.report.term_au - au.powf(0.25)).abs() <= 1e-10 * sys.report.term_au);
        assert!((sys.report.term_d2 - d2.powf(0.25)).abs() <= 1e-10 * sys.report.term_d2);
    }

    #[test]
    fn relabeling_leaves_ratio_unchanged() {
        let e = Exponents { alpha: 1.3, beta: 1.3, p: 4.0, q: 2.0 };
        let make = |d: Vec<f64>, f: &str, a: &str| {
            Problem2D::new(e, 1.0, 1.0, OperatorSpec::Diagonal(d), C64::new(10.0, 0.0), MeshSpec::new(9), MeshSpec::new(9))
                .unwrap()
                .with_rhs(Rhs::expr(f).unwrap())
                .with_coefficients(
                    CoefficientLaw::Entrywise(Expression::parse(a).unwrap()),
                    CoefficientLaw::Zero,
                )
        };
        // Swap components 1 and 2 of a 2-component system: m -> 3 - m.
        let p = make(vec![1.0, 4.0], "x*y*m", "0.1*m + 0.05*j");
        let q = make(vec![4.0, 1.0], "x*y*(3-m)", "0.1*(3-m) + 0.05*(3-j)");
        let n = NormSpec::new(4.0, 2.0);
        let rp = coercivity_report_2d(&p, &solve_2d_direct(&p).unwrap(), &n).unwrap();
        let rq = coercivity_report_2d(&q, &solve_2d_direct(&q).unwrap(), &n).unwrap();
        assert!((rp.ratio - rq.ratio).abs() <= 1e-10 * rp.ratio);
    }
}
