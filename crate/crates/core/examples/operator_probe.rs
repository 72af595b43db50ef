//! Resolvent bounds and fractional powers of a finite-dimensional operator.

use std::f64::consts::PI;

use degensolve::opspace::{boundary_theta, interp_norm, positivity_probe, InterpMethod, InterpParams, OperatorSpec, SectorSpec};
use num_complex::Complex64 as C64;

fn main() -> degensolve::Result<()> {
    let a = OperatorSpec::Dense(vec![vec![2.0, 1.0], vec![1.0, 3.0]]);
    println!("spectral floor {:.6}", a.spectral_floor()?);

    let sector = SectorSpec::new(PI / 3.0, vec![1.0, 1e2, 1e4], vec![-PI / 3.0, 0.0, PI / 3.0])?;
    let probe = positivity_probe(&a, &sector, 2.0, 1)?;
    for s in &probe.table {
        println!("λ = {:>24.4}  (1+|λ|)‖R(λ)‖ = {:.6}", s.lambda, s.value);
    }
    println!("M_hat = {:.6}", probe.m_hat);

    let half = a.fractional_power(0.5)?;
    println!("A^(1/2) = {half:?}");

    let ip = InterpParams::new(boundary_theta(1.3, 4.0), 2.0)?;
    let v = [C64::new(1.0, 0.0), C64::new(-0.5, 0.0)];
    let closed = interp_norm(&v, &a, ip, InterpMethod::Closed)?;
    let kfun = interp_norm(&v, &a, ip, InterpMethod::Kfunctional)?;
    println!("interpolation norm: closed {closed:.6}, K-functional {kfun:.6}");
    Ok(())
}
