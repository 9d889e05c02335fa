//! Regime classification and the limit laws, compared with exact values.
//!
//! cargo run --release --example regimes

use invwalk::asymptotics::{consistency_limits, f_kappa, g_kappa, predict, FMethod};
use invwalk::formulas::{closed_form, ClosedFormOptions};

fn main() -> invwalk::Result<()> {
    println!("f(1) = {:.15}", f_kappa(1.0, FMethod::Series, 1e-14)?);
    println!("f(1) = {:.15} (quadrature)", f_kappa(1.0, FMethod::Quadrature, 1e-12)?);
    println!("g(1) = {:.15}", g_kappa(1.0, 1e-14)?);

    let m = 60usize;
    let m3 = (m * m * m) as u64;
    let opts = ClosedFormOptions::default();
    println!("\n{:>9} {:>13} {:>14} {:>14} {:>9}", "n", "regime", "predicted", "closed form", "rel err");
    for n in [3, 60, 600, 6_000, 60_000, m3 / 2, 2 * m3, 40 * m3] {
        let est = predict(m, n)?;
        let exact = closed_form(m, n, &opts)?.to_f64();
        println!(
            "{n:>9} {:>13} {:>14.4} {:>14.4} {:>9.2e}",
            est.regime.name(),
            est.predicted,
            exact,
            (est.predicted - exact).abs() / exact
        );
    }

    let report = consistency_limits(1e-10)?;
    println!("\nlimit sqrt(2/pi) = {:.6}", report.limit);
    for s in report.f_side.iter().chain(&report.g_side) {
        println!("  kappa {:>8}: {:.6} ({:.2}% off)", s.kappa, s.value, 100.0 * s.deviation);
    }
    Ok(())
}
