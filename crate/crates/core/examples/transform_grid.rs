//! Build the graded mesh for the degenerate endpoint and show how the
//! uniform `y` nodes crowd toward `x = 0`.

use degensolve::mesh::{build_grid, default_depth, window, TransformMap};

fn main() -> degensolve::Result<()> {
    let (lo, hi) = window(4.0);
    println!("exponent window for p = 4: ({lo}, {hi})");

    let map = TransformMap::new(1.3, 1.0)?;
    let depth = default_depth(2.0);
    let grid = build_grid(map, 17, depth)?;
    println!("depth {depth:.3}, h {:.4}", grid.h());
    println!("{:>10} {:>14} {:>12}", "y", "x", "weight");
    for ((y, x), w) in grid.y_nodes().iter().zip(grid.x_nodes()).zip(grid.weights()) {
        println!("{y:>10.4} {x:>14.6e} {w:>12.4e}");
    }

    let x = 0.25;
    let y = map.forward(x);
    println!("round trip: x = {x} -> y = {y:.6} -> x = {:.15}", map.inverse(y));
    Ok(())
}
