//! Shrink the small parameter `t` and check that the coercive ratio stays
//! bounded, with inhomogeneous boundary data in play.

use degensolve::reference::{norms, parametric_1d, t_grid};
use degensolve::verify::{sweep_t, Instance};

fn main() -> degensolve::Result<()> {
    let sweep = sweep_t(&Instance::OneD(parametric_1d(513)?), &t_grid(), &norms())?;
    for p in &sweep.points {
        let r = p.report.as_ref().expect("reference sweep solves");
        println!(
            "t = {:>7.0e}  ratio {:.4}  (t^i weights {:.4})  boundary terms {:.3e} + {:.3e}",
            p.t1, r.ratio, r.ratio_alt, r.norm_f1_interp, r.norm_f1_scaled
        );
    }
    println!("spread {:.3}", sweep.summary.max_ratio / sweep.summary.min_ratio);
    Ok(())
}
