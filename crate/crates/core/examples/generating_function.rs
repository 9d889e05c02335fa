//! Rational generating function of I_{m,n} in t, its poles and the lazy chain.
//!
//! cargo run --example generating_function -- 3

use invwalk::formulas::default_laziness;
use invwalk::genfun::{aperiodic_gf, build_gf, pole_check, series, POLE_TOLERANCE};
use invwalk::trig_core::SpectralTable;

fn main() -> invwalk::Result<()> {
    let m: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let gf = build_gf(m)?;
    println!("I_{m}(t) = {gf}");

    let coeffs = series(&gf, 12);
    let shown: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
    println!("first coefficients: {}", shown.join(", "));

    let table = SpectralTable::new(m, 128)?;
    let report = pole_check(&gf, &table, POLE_TOLERANCE)?;
    println!("\ndenominator degree {}, unmatched {}", report.denominator_degree, report.unmatched_degree);
    for p in &report.matched {
        println!("  root {:.12} x{} from {:?}", p.root, p.multiplicity, p.source);
    }

    let p = default_laziness(m);
    let lazy = aperiodic_gf(&gf, m, &p)?;
    println!("\nlazy chain with p = {p}:\n  {lazy}");
    Ok(())
}
