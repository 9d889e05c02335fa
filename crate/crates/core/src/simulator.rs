//! Monte Carlo estimate of `I_{m,n}` by running the chain directly.
//!
//! Swapping positions `i, i+1` changes the inversion number by exactly one:
//! the pair `(i, i+1)` flips and every other pair keeps its relative order.
//! So the count is tracked in O(1) per step.

use std::time::Instant;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::budget::WorkBudget;
use crate::error::{invalid, Error, Result};
use crate::numeric::rational_to_f64;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based generator: output `k` of stream `(seed, trial)` is a fixed
/// function of `(seed, trial, k)`, so trials can run on any thread in any
/// order and still draw the same numbers.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, trial: u64) -> Self {
        let key = mix64(seed ^ mix64(trial.wrapping_add(GOLDEN)));
        CounterRng { key, counter: 0 }
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// Rational move probability `num/den` of the lazy chain, sampled exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveProbability {
    num: u64,
    den: u64,
}

impl MoveProbability {
    pub fn new(p: &Rational) -> Result<Self> {
        if *p <= 0 || *p > 1 {
            return invalid("move probability must lie in (0, 1]");
        }
        match (p.numer().to_u64(), p.denom().to_u64()) {
            (Some(num), Some(den)) => Ok(MoveProbability { num, den }),
            _ => invalid("move probability numerator and denominator must fit in 64 bits"),
        }
    }

    fn moves<R: Rng>(&self, rng: &mut R) -> bool {
        self.num == self.den || rng.gen_range(0..self.den) < self.num
    }
}

fn run<R: Rng>(m: usize, n: u64, rng: &mut R, lazy: Option<MoveProbability>) -> u64 {
    let mut perm: Vec<u32> = (0..=m as u32).collect();
    let mut inversions: u64 = 0;
    for _ in 0..n {
        if let Some(p) = lazy {
            if !p.moves(rng) {
                continue;
            }
        }
        let i = rng.gen_range(0..m);
        if perm[i] < perm[i + 1] {
            inversions += 1;
        } else {
            inversions -= 1;
        }
        perm.swap(i, i + 1);
    }
    inversions
}

/// Inversion number after `n` uniform adjacent swaps of `0..=m`.
pub fn simulate_once<R: Rng>(m: usize, n: u64, rng: &mut R) -> Result<u64> {
    if m == 0 {
        return invalid("m must be at least 1");
    }
    Ok(run(m, n, rng, None))
}

/// Same, but each step first holds with probability `1 - p`.
pub fn simulate_lazy_once<R: Rng>(m: usize, n: u64, p: MoveProbability, rng: &mut R) -> Result<u64> {
    if m == 0 {
        return invalid("m must be at least 1");
    }
    Ok(run(m, n, rng, Some(p)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub m: usize,
    pub n: u64,
    pub trials: u64,
    /// `"num/den"` when the lazy chain was simulated
    pub lazy_p: Option<String>,
    pub mean: f64,
    /// unbiased sample variance
    pub variance: f64,
    pub stderr: f64,
    pub seed: u64,
    /// wall-clock seconds
    pub elapsed: f64,
}

impl SimulationSummary {
    /// Equality of everything except the timing.
    pub fn same_result(&self, other: &SimulationSummary) -> bool {
        SimulationSummary { elapsed: 0.0, ..self.clone() } == SimulationSummary { elapsed: 0.0, ..other.clone() }
    }

    /// `|mean - exact| <= k * stderr`
    pub fn agrees_with(&self, exact: f64, k: f64) -> bool {
        (self.mean - exact).abs() <= k * self.stderr
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarloConfig {
    pub m: usize,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub lazy_p: Option<Rational>,
    pub workers: usize,
}

/// Runs `trials` independent walks on a pool of `workers` threads. Trial
/// `k` uses `CounterRng::new(seed, k)` and the moments are accumulated in
/// exact integers, so the summary does not depend on `workers`.
pub fn monte_carlo(cfg: &MonteCarloConfig, budget: WorkBudget) -> Result<SimulationSummary> {
    let MonteCarloConfig {
        m,
        n,
        trials,
        seed,
        workers,
        ..
    } = *cfg;
    if m == 0 {
        return invalid("m must be at least 1");
    }
    if trials < 2 {
        return invalid("need at least 2 trials for a variance");
    }
    if workers == 0 {
        return invalid("workers must be positive");
    }
    budget.check("monte carlo", u128::from(trials) * (u128::from(n) + m as u128))?;
    let lazy = cfg.lazy_p.as_ref().map(MoveProbability::new).transpose()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;

    let start = Instant::now();
    let (sum, sum_sq) = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|k| {
                let mut rng = CounterRng::new(seed, k);
                let c = u128::from(run(m, n, &mut rng, lazy));
                (c, c * c)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    });
    let elapsed = start.elapsed().as_secs_f64();

    let t = Integer::from(trials);
    let mean = Rational::from((Integer::from(sum), t.clone()));
    // (T sum_sq - sum^2) / (T (T - 1))
    let num = (&t * Integer::from(sum_sq)) - Integer::from(sum) * Integer::from(sum);
    let variance = Rational::from((num, (&t * Integer::from(&t - 1u32))));
    let stderr = rational_to_f64(&Rational::from(&variance / &t)).sqrt();
    Ok(SimulationSummary {
        m,
        n,
        trials,
        lazy_p: cfg.lazy_p.as_ref().map(|p| format!("{}/{}", p.numer(), p.denom())),
        mean: rational_to_f64(&mean),
        variance: rational_to_f64(&variance),
        stderr,
        seed,
        elapsed,
    })
}
