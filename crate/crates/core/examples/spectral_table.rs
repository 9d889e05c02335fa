//! Angles, cosines and the trigonometric identities the closed form relies on.
//!
//! cargo run --example spectral_table -- 12

use invwalk::trig_core::{certify_spectrum, identity_tolerance, verify_identities, SpectralTable};

fn main() -> invwalk::Result<()> {
    let m: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(12);
    let table = SpectralTable::new(m, 128)?;

    println!("m = {m}, {} bits", table.precision());
    println!("{:>3} {:>22} {:>22}", "j", "c_j", "s_j");
    for j in 0..m {
        println!("{j:>3} {:>22.17} {:>22.17}", table.c()[j].to_f64(), table.s()[j].to_f64());
    }

    let report = verify_identities(&table, identity_tolerance(m, 128, 16))?;
    println!();
    for c in &report.checks {
        let mark = if c.passed { "ok" } else { "FAIL" };
        println!("{mark:>4}  {:<28} residual {:.2e}", c.name, c.residual);
    }

    // the lattice eigenvalues can be checked against the transition matrix directly for tiny m
    let cert = certify_spectrum(3, 128, 1e-20)?;
    println!("\nm = 3 spectrum certified: {}", cert.all_passed());
    Ok(())
}
