//! Spectral sum, the Eriksen formula and the two-sided bounds side by side.
//!
//! cargo run --example closed_form -- 10

use invwalk::budget::WorkBudget;
use invwalk::chain_dp::expected_inversions_trajectory;
use invwalk::formulas::{bounds, eriksen, ClosedFormEvaluator, ClosedFormOptions, SpectralVariant};
use invwalk::numeric::rational_to_f64;

fn main() -> invwalk::Result<()> {
    let m: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let steps = [0u64, 1, 2, 5, 10, 20, 50, 100, 200];
    let exact = expected_inversions_trajectory(m, *steps.last().unwrap(), WorkBudget::default())?;

    let eval = ClosedFormEvaluator::new(m, ClosedFormOptions::with_precision(128))?;
    let ser3 = ClosedFormEvaluator::new(m, ClosedFormOptions::with_precision(128).variant(SpectralVariant::Ser3))?;

    println!("{:>5} {:>20} {:>20} {:>20} {:>12} {:>12}", "n", "exact", "spectral", "ser3", "lower", "upper");
    for &n in &steps {
        let e = &exact[n as usize];
        let b = bounds(m, n)?;
        println!(
            "{n:>5} {:>20.14} {:>20.14} {:>20.14} {:>12.6} {:>12.6}",
            rational_to_f64(e),
            eval.eval(n).to_f64(),
            ser3.eval(n).to_f64(),
            b.lower,
            b.upper
        );
    }

    let n = 12;
    let er = eriksen(m, n, WorkBudget::default())?;
    println!("\nEriksen at n = {n}: {er} (equal to the recursion: {})", er == exact[n as usize]);
    Ok(())
}
