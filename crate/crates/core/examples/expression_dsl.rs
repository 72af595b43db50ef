//! Parse, evaluate and compile expressions for coefficients and forcing.

use std::collections::HashMap;

use degensolve::funcdsl::Expression;

fn main() -> degensolve::Result<()> {
    let e = Expression::parse("x^2 * exp(-y) + 0.5 * abs(m - j)")?;
    println!("source:    {e}");
    println!("unparsed:  {}", e.unparse());
    println!("variables: {:?}", e.variables());

    let vars: HashMap<String, f64> = [("x", 0.5), ("y", 1.0), ("m", 3.0), ("j", 1.0)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    println!("value at {vars:?}: {}", e.evaluate(&vars)?);

    // Compiled form for tight loops: variables bound to slots.
    let c = e.compile(&["x", "y", "m", "j"])?;
    let total: f64 = (0..1000).map(|k| c.eval(&[k as f64 / 1000.0, 0.0, 1.0, 1.0]).unwrap()).sum();
    println!("sum over 1000 samples: {total:.6}");

    for bad in ["x +", "sqrt(x)", "(-8)^0.5", "1 / 0"] {
        match Expression::parse(bad).and_then(|e| e.evaluate(&HashMap::new())) {
            Ok(v) => println!("{bad:>10} -> {v}"),
            Err(err) => println!("{bad:>10} -> {err}"),
        }
    }
    Ok(())
}
