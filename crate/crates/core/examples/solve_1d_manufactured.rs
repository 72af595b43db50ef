//! Solve a 1D problem with known solution `u = e^y` and print the observed
//! convergence order under refinement.

use degensolve::reference::{exact_1d, mms_1d};
use degensolve::solve1d::solve_1d;
use degensolve::verify::{coercivity_report_1d, NormSpec};

fn main() -> degensolve::Result<()> {
    let mut prev: Option<f64> = None;
    for n in [65, 129, 257, 513, 1025] {
        let p = mms_1d(n)?;
        let s = solve_1d(&p)?;
        let err = s
            .u
            .values()
            .iter()
            .zip(p.grid.y_nodes())
            .map(|(u, y)| (u.re - exact_1d(*y)).abs())
            .fold(0.0, f64::max);
        let order = prev.map(|e| (e / err).log2());
        let report = coercivity_report_1d(&p, &s, &NormSpec::new(4.0, 2.0))?;
        println!(
            "n = {n:>5}  max error {err:.3e}  order {}  coercive ratio {:.4}",
            order.map_or("   -".to_string(), |o| format!("{o:.3}")),
            report.ratio
        );
        prev = Some(err);
    }
    Ok(())
}
