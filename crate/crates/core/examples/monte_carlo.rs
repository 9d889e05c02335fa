//! Direct simulation of the walk against the exact mean.
//!
//! cargo run --release --example monte_carlo

use invwalk::budget::WorkBudget;
use invwalk::chain_dp::expected_inversions_dp;
use invwalk::formulas::{aperiodic_expected, default_laziness};
use invwalk::numeric::rational_to_f64;
use invwalk::simulator::{monte_carlo, MonteCarloConfig};

fn main() -> invwalk::Result<()> {
    let budget = WorkBudget::default();
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);

    for (m, n) in [(5, 10), (10, 50), (20, 400)] {
        let cfg = MonteCarloConfig { m, n, trials: 20_000, seed: 42, lazy_p: None, workers };
        let s = monte_carlo(&cfg, budget)?;
        let exact = rational_to_f64(&expected_inversions_dp(m, n, budget)?);
        println!(
            "m={m:>2} n={n:>3}: mean {:>9.4} +- {:.4}, exact {exact:>9.4}, within 4 se: {}",
            s.mean,
            s.stderr,
            s.agrees_with(exact, 4.0)
        );
    }

    let (m, n) = (6, 30);
    let p = default_laziness(m);
    let cfg = MonteCarloConfig { m, n, trials: 20_000, seed: 7, lazy_p: Some(p.clone()), workers };
    let s = monte_carlo(&cfg, budget)?;
    let exact = rational_to_f64(&aperiodic_expected(m, n, &p, budget)?);
    println!("lazy p={p}, m={m} n={n}: mean {:.4} +- {:.4}, exact {exact:.4}", s.mean, s.stderr);

    let single = monte_carlo(&MonteCarloConfig { workers: 1, ..cfg }, budget)?;
    println!("same summary on one thread: {}", single.same_result(&s));
    Ok(())
}
