//! Solve on `G_s = (0, a(s)) × (0, b(s))` by rescaling to the unit square
//! and compare with a direct solve on `G_s`.

use degensolve::reference::moving_2d;
use degensolve::solve2d::{moving_direct_problem, solve_2d_direct, solve_moving};

fn main() -> degensolve::Result<()> {
    for s in [0.0, 0.5, 1.0, 2.0] {
        let mut p = moving_2d("1 + s", 65)?;
        if let Some(m) = p.moving.as_mut() {
            m.s = s;
        }
        let pulled = solve_moving(&p)?;
        let direct = solve_2d_direct(&moving_direct_problem(&p)?)?;
        let diff = pulled.solution.u.sub(&direct.u)?.max_abs() / direct.u.max_abs();
        println!(
            "s = {s}: extent {:?}, principal coefficients ({:.4}, {:.4}), relative difference {diff:.2e}",
            pulled.extent, pulled.principal.0, pulled.principal.1
        );
    }
    Ok(())
}
