//! Picard iteration on a nonlinear problem with a manufactured solution,
//! followed by the Lipschitz probe and the ball check.

use degensolve::nonlinear::{ball_check, lipschitz_probe, picard_solve};
use degensolve::reference::{toy_nonlinear, TOY_DIVERGENT_EPS, TOY_EPS};

fn main() -> degensolve::Result<()> {
    let spec = toy_nonlinear(33, TOY_EPS)?;
    let out = picard_solve(&spec, 1e-10, 30)?;
    for r in &out.trace.records {
        println!("{:>3}  Δ {:.3e}  residual {:.3e}  ratio {:?}", r.iteration, r.delta_norm, r.residual, r.ratio);
    }
    println!("log-linear R² {:?}", out.trace.log_linear_r2(1));

    let lip = lipschitz_probe(&spec, &out.w, 200)?;
    let ball = ball_check(&out.trace, out.trace.observed_c0().unwrap_or(0.0), lip.mu_hat);
    println!("μ_hat {:.4}, C0 {:.4}, contraction {}", lip.mu_hat, ball.c0, ball.contraction_holds);

    match picard_solve(&toy_nonlinear(33, TOY_DIVERGENT_EPS)?, 1e-10, 30) {
        Ok(o) => println!("ε = {TOY_DIVERGENT_EPS}: converged in {}", o.trace.iterations()),
        Err(e) => println!("ε = {TOY_DIVERGENT_EPS}: {e}"),
    }
    Ok(())
}
