//! Truncate a coupled infinite system, check the decay condition and watch
//! the truncations converge.

use degensolve::reference::{coupled_system, decay_fixture, TRUNCATION_SIZES};
use degensolve::sysinf::{decay_condition_check, truncate_and_solve, truncation_study};

fn main() -> degensolve::Result<()> {
    let decay = decay_condition_check(&decay_fixture()?, &TRUNCATION_SIZES)?;
    for r in &decay.growth_vs_n {
        println!("N = {:>3}: sup_a {:.5}, sup_b {:.5}", r.n, r.sup_a, r.sup_b);
    }
    println!("stable: {}", decay.finite);

    let sol = truncate_and_solve(&coupled_system(16)?)?;
    println!("N = 16 coercive ratio {:.4}", sol.report.ratio);

    let study = truncation_study(&coupled_system(16)?, &TRUNCATION_SIZES)?;
    for r in &study.rows {
        println!("N = {:>3}: difference to N = {} is {:.3e}", r.n, study.reference_n, r.difference);
    }
    println!("last/first {:.3e}", study.last_first_ratio());
    Ok(())
}
