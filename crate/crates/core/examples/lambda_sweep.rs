//! Sweep the spectral parameter over a sector and write the coercive ratio
//! table as CSV to stdout.

use degensolve::reference::{mms_1d, norms, sector};
use degensolve::verify::{sweep_lambda, write_sweep_csv, Instance};

fn main() -> degensolve::Result<()> {
    let sweep = sweep_lambda(&Instance::OneD(mms_1d(257)?), &sector(), &norms())?;
    let s = &sweep.summary;
    eprintln!(
        "max ratio {:.4}, min {:.4}, trend slope {:?}, growth flagged {}",
        s.max_ratio, s.min_ratio, s.trend_slope, s.growth_flagged
    );
    write_sweep_csv(std::io::stdout().lock(), &sweep)
}
