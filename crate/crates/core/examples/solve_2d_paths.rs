//! Solve a 2D problem with an operator-valued coefficient by the direct
//! Kronecker assembly and by eigen-reduction to scalar problems.

use degensolve::mesh::Exponents;
use degensolve::opspace::OperatorSpec;
use degensolve::solve1d::{BoundarySpec, MeshSpec, Rhs};
use degensolve::solve2d::{solve_2d_direct, solve_2d_reduced, Problem2D};
use num_complex::Complex64 as C64;

fn main() -> degensolve::Result<()> {
    let ex = Exponents { alpha: 1.3, beta: 1.4, p: 4.0, q: 2.0 };
    let op = OperatorSpec::Dense(vec![vec![2.0, 1.0], vec![1.0, 3.0]]);
    let p = Problem2D::new(ex, 1.0, 1.0, op, C64::new(50.0, 20.0), MeshSpec::new(49), MeshSpec::new(41))?
        .with_rhs(Rhs::expr("x * (1 - y) + m")?)
        .with_bcs(BoundarySpec::robin(C64::new(1.0, 0.0), C64::new(0.5, 0.0)), BoundarySpec::dirichlet());

    let t = std::time::Instant::now();
    let direct = solve_2d_direct(&p)?;
    let td = t.elapsed();
    let t = std::time::Instant::now();
    let reduced = solve_2d_reduced(&p)?;
    let tr = t.elapsed();

    let diff = direct.u.sub(&reduced.u)?.max_abs() / direct.u.max_abs();
    println!("direct:  residual {:.2e} in {td:?}", direct.residual_norm);
    println!("reduced: residual {:.2e} in {tr:?}", reduced.residual_norm);
    println!("relative difference {diff:.2e}");
    Ok(())
}
