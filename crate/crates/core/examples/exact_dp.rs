//! Exact expected inversion counts from the pair-position recursion.
//!
//! cargo run --example exact_dp -- 6 20

use invwalk::budget::WorkBudget;
use invwalk::chain_dp::{expected_inversions_trajectory, symmetry_check, InversionState};
use invwalk::oracle::enumerate_expected_inversions;

fn main() -> invwalk::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().ok());
    let m = args.next().flatten().unwrap_or(6);
    let n = args.next().flatten().unwrap_or(20);

    let values = expected_inversions_trajectory(m, n as u64, WorkBudget::default())?;
    for (step, v) in values.iter().enumerate() {
        println!("I({m},{step:>3}) = {v}  ~ {:.6}", v.to_f64());
    }

    let mut state = InversionState::initial(m)?;
    for _ in 0..n {
        state.advance();
    }
    println!("\nsymmetric: {}, probabilities: {}", symmetry_check(&state), state.is_probability_array());

    // brute force over the whole symmetric group, only feasible for tiny m
    if m <= 3 && n <= 8 {
        let brute = enumerate_expected_inversions(m, n)?;
        println!("brute force agrees: {}", brute == values[n]);
    }
    Ok(())
}
