//! Acceptance suite: thirteen criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so that every criterion reports even when
//! an earlier one fails. Exits nonzero if any criterion fails. Each criterion
//! also has a wall-clock limit, counted as part of passing.

use std::time::{Duration, Instant};

use invwalk::asymptotics::{critical_estimate, f_kappa, g_kappa, sqrt_two_over_pi, FMethod};
use invwalk::budget::WorkBudget;
use invwalk::chain_dp::{
    expected_inversions_float, expected_inversions_trajectory, functional_equation_residual,
};
use invwalk::formulas::{bounds, closed_form, eriksen, ClosedFormEvaluator, ClosedFormOptions};
use invwalk::genfun::{build_gf, series, Polynomial, RationalFunction};
use invwalk::numeric::{pi, rational_to_f64};
use invwalk::oracle::enumerate_expected_inversions;
use invwalk::simulator::{monte_carlo, MonteCarloConfig};
use invwalk::trig_core::{certify_spectrum, verify_identities, SpectralTable};
use rug::{Float, Rational};

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn budget() -> WorkBudget {
    WorkBudget::unlimited()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn closed(m: usize, n: u64, prec: u32) -> Result<f64, String> {
    Ok(closed_form(m, n, &ClosedFormOptions::with_precision(prec)).map_err(err)?.to_f64())
}

fn pi_f64() -> f64 {
    pi(128).to_f64()
}

fn poly(c: &[i64]) -> Polynomial {
    Polynomial::from_i64s(c)
}

fn printed(num: &[&[i64]], den: &[&[i64]]) -> RationalFunction {
    let prod = |fs: &[&[i64]]| fs.iter().fold(Polynomial::one(), |acc, f| acc.mul(&poly(f)));
    RationalFunction::new(prod(num), prod(den)).expect("printed denominators are nonzero at 0")
}

fn printed_gfs() -> Outcome {
    let expected = [
        printed(&[&[0, 1]], &[&[1, -1], &[1, 1]]),
        printed(&[&[0, 1], &[2, 1]], &[&[1, -1], &[2, -1], &[1, 1]]),
        printed(&[&[0, 3], &[27, 9, -7, -1]], &[&[1, -1], &[9, 6, -1], &[9, -6, -1]]),
        printed(
            &[&[0, 1], &[256, -192, -48, 44, -5]],
            &[&[1, -1], &[16, 0, -5], &[16, -20, 5]],
        ),
    ];
    let mut bad = Vec::new();
    for (i, want) in expected.iter().enumerate() {
        let got = build_gf(i + 1).map_err(err)?;
        if got != *want || got.to_string() != want.to_string() {
            bad.push(i + 1);
        }
    }
    Ok((bad.is_empty(), format!("I_1..I_4, mismatches at m = {bad:?}")))
}

fn four_way() -> Outcome {
    let mut exact_bad = 0;
    let mut worst_rel = 0.0f64;
    for m in 1..=8 {
        let dp = expected_inversions_trajectory(m, 25, budget()).map_err(err)?;
        let gf = series(&build_gf(m).map_err(err)?, 25);
        let ev = ClosedFormEvaluator::new(m, ClosedFormOptions::with_precision(128)).map_err(err)?;
        for (n, v) in dp.iter().enumerate() {
            let e = eriksen(m, n as u64, budget()).map_err(err)?;
            if e != *v || gf[n] != *v {
                exact_bad += 1;
            }
            let c = ev.eval(n as u64).value;
            let diff = Float::with_val(128, &c - Float::with_val(128, v)).abs().to_f64();
            let rel = if v.is_zero() { diff } else { diff / Float::with_val(128, v).to_f64() };
            worst_rel = worst_rel.max(rel);
        }
    }
    Ok((
        exact_bad == 0 && worst_rel <= 1e-9,
        format!("m <= 8, n <= 25: {exact_bad} exact mismatches, closed form worst relative error {worst_rel:.2e}"),
    ))
}

fn trig_identities() -> Outcome {
    let mut failures = [0usize; 2];
    let mut worst = [0.0f64; 2];
    for m in 1..=200usize {
        for (slot, (prec, exp)) in [(53u32, -46i32), (128, -120)].into_iter().enumerate() {
            let tol = ((m + 1) as f64).powi(3) * 2f64.powi(exp);
            let table = SpectralTable::new(m, prec).map_err(err)?;
            let report = verify_identities(&table, tol).map_err(err)?;
            if !report.all_passed() {
                failures[slot] += 1;
            }
            worst[slot] = worst[slot].max(report.max_residual() / tol);
        }
    }
    Ok((
        failures == [0, 0],
        format!(
            "m <= 200: failing m count {} at 53 bits (worst {:.2}x tolerance), {} at 128 bits (worst {:.2}x)",
            failures[0], worst[0], failures[1], worst[1]
        ),
    ))
}

fn certification() -> Outcome {
    let mut ok = true;
    let mut states = Vec::new();
    for m in [2usize, 3] {
        let cert = certify_spectrum(m, 256, 1e-8).map_err(err)?;
        ok &= cert.all_passed();
        states.push(format!("m={m}: {} eigenvalues checked", cert.checks.len()));
    }
    Ok((ok, states.join(", ")))
}

fn functional_equation() -> Outcome {
    let mut residuals = Vec::new();
    for (m, order) in [(1usize, 6usize), (2, 6), (3, 5)] {
        residuals.push(functional_equation_residual(m, order, budget()).map_err(err)?);
    }
    let ok = residuals.iter().all(|r| r.is_zero());
    Ok((ok, format!("residuals {:?}", residuals.iter().map(|r| r.to_string()).collect::<Vec<_>>())))
}

fn sandwich() -> Outcome {
    let mut violations = 0;
    for m in 3..=12 {
        let dp = expected_inversions_trajectory(m, 300, budget()).map_err(err)?;
        for (n, v) in dp.iter().enumerate() {
            // the bounds are doubles; compare at that precision (rounding is monotone)
            let b = bounds(m, n as u64).map_err(err)?;
            let v = rational_to_f64(v);
            if v < b.lower || v > b.upper {
                violations += 1;
            }
        }
    }
    Ok((violations == 0, format!("3 <= m <= 12, n <= 300: {violations} violations")))
}

fn linear_regime() -> Outcome {
    let f1 = f_kappa(1.0, FMethod::Series, 1e-14).map_err(err)?;
    let mut devs = Vec::new();
    for m in [100usize, 150, 200] {
        let v = expected_inversions_float(m, m as u64, budget()).map_err(err)?;
        devs.push((v / m as f64 - f1).abs());
    }
    let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
    let f_small = f_kappa(0.01, FMethod::Series, 1e-14).map_err(err)?;
    let small_ok = (f_small - 0.99005).abs() <= 1e-4;
    Ok((
        decreasing && devs[2] <= 0.06 && small_ok,
        format!("|I/m - f(1)| = {devs:.5?}; f(0.01) = {f_small:.6}"),
    ))
}

fn cubic_regime() -> Outcome {
    let g1 = g_kappa(1.0, 1e-15).map_err(err)?;
    let mut devs = Vec::new();
    for m in [20usize, 30, 40] {
        let m3 = (m * m * m) as u64;
        devs.push((closed(m, m3, 53)? / (m * m) as f64 - g1).abs());
    }
    let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
    Ok((decreasing, format!("|I/m^2 - g(1)| = {devs:.5?}")))
}

fn intermediate_regime() -> Outcome {
    let limit = sqrt_two_over_pi();
    let ratio = |m: usize| -> Result<f64, String> {
        let n = (m * m) as u64;
        Ok(closed(m, n, 53)? / ((m as f64) * n as f64).sqrt())
    };
    let r100 = ratio(100)?;
    let r200 = ratio(200)?;
    let in_band = (0.72..=0.88).contains(&r100);
    let improves = (r200 - limit).abs() < (r100 - limit).abs();
    Ok((
        in_band && improves,
        format!("I/sqrt(mn) = {r100:.6} at m=100 (band [0.72, 0.88]: {in_band}), {r200:.6} at m=200 (closer: {improves})"),
    ))
}

fn consistency() -> Outcome {
    let limit = sqrt_two_over_pi();
    let f_side = 100f64.sqrt() * f_kappa(100.0, FMethod::Quadrature, 1e-12).map_err(err)?;
    let g_side = g_kappa(1e-4, 1e-15).map_err(err)? / 1e-4f64.sqrt();
    let df = (f_side - limit).abs() / limit;
    let dg = (g_side - limit).abs() / limit;
    Ok((
        df <= 0.02 && dg <= 0.02,
        format!("sqrt(k) f(k) at k=100: {f_side:.6} ({:.2}% off); g(k)/sqrt(k) at k=1e-4: {g_side:.6} ({:.2}% off)", df * 100.0, dg * 100.0),
    ))
}

fn critical_window() -> Outcome {
    let pi = pi_f64();
    let rel_err = |m: usize, alpha: f64| -> Result<f64, String> {
        let mf = m as f64;
        let center = (mf.powi(3) * mf.ln() / (pi * pi)).round();
        let n = (center + alpha * mf.powi(3)) as u64;
        let correction = 16.0 * mf / pi.powi(4) * (-alpha * pi * pi).exp();
        let est = critical_estimate(m, alpha).map_err(err)?;
        Ok((closed(m, n, 53)? - est).abs() / correction)
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.0, 1.0] {
        let e60 = rel_err(60, alpha)?;
        let e100 = rel_err(100, alpha)?;
        ok &= e60 <= 0.25 && e100 < e60;
        parts.push(format!("alpha={alpha}: error/correction {e60:.3} at m=60, {e100:.3} at m=100"));
    }
    Ok((ok, parts.join("; ")))
}

fn monte_carlo_grid() -> Outcome {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut misses = Vec::new();
    for m in [5usize, 10, 20] {
        for n in [10u64, 100, 1000] {
            let cfg = MonteCarloConfig {
                m,
                n,
                trials: 100_000,
                seed: 42,
                lazy_p: None,
                workers,
            };
            let s = monte_carlo(&cfg, budget()).map_err(err)?;
            let exact = expected_inversions_float(m, n, budget()).map_err(err)?;
            if !s.agrees_with(exact, 4.0) {
                misses.push((m, n));
            }
        }
    }
    let cfg = |workers| MonteCarloConfig {
        m: 10,
        n: 100,
        trials: 20_000,
        seed: 42,
        lazy_p: None,
        workers,
    };
    let one = monte_carlo(&cfg(1), budget()).map_err(err)?;
    let four = monte_carlo(&cfg(4), budget()).map_err(err)?;
    let identical = one.same_result(&four);
    Ok((
        misses.len() <= 1 && identical,
        format!("cells outside 4 sigma: {misses:?}; workers 1 vs 4 identical: {identical}"),
    ))
}

fn brute_force() -> Outcome {
    let mut bad = Vec::new();
    for m in 1..=3 {
        let dp = expected_inversions_trajectory(m, 8, budget()).map_err(err)?;
        for (n, v) in dp.iter().enumerate() {
            let brute: Rational = enumerate_expected_inversions(m, n).map_err(err)?;
            if brute != *v {
                bad.push((m, n));
            }
        }
    }
    Ok((bad.is_empty(), format!("m <= 3, n <= 8, mismatches {bad:?}")))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "printed generating functions", limit: Duration::from_secs(1), run: printed_gfs },
        Criterion { id: 2, name: "four-way agreement grid", limit: Duration::from_secs(120), run: four_way },
        Criterion { id: 3, name: "trigonometric identities", limit: Duration::from_secs(30), run: trig_identities },
        Criterion { id: 4, name: "spectral certification", limit: Duration::from_secs(10), run: certification },
        Criterion { id: 5, name: "functional equation residual", limit: Duration::from_secs(30), run: functional_equation },
        Criterion { id: 6, name: "bounds sandwich", limit: Duration::from_secs(60), run: sandwich },
        Criterion { id: 7, name: "linear regime", limit: Duration::from_secs(60), run: linear_regime },
        Criterion { id: 8, name: "cubic regime", limit: Duration::from_secs(30), run: cubic_regime },
        Criterion { id: 9, name: "intermediate regime", limit: Duration::from_secs(10), run: intermediate_regime },
        Criterion { id: 10, name: "consistency limits", limit: Duration::from_secs(10), run: consistency },
        Criterion { id: 11, name: "critical window", limit: Duration::from_secs(10), run: critical_window },
        Criterion { id: 12, name: "monte carlo", limit: Duration::from_secs(120), run: monte_carlo_grid },
        Criterion { id: 13, name: "brute-force ground truth", limit: Duration::from_secs(60), run: brute_force },
    ];
    let mut failed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let (passed, detail) = match result {
            Ok((ok, detail)) => (ok && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let timing = format!("{:.2}s of {}s", elapsed.as_secs_f64(), c.limit.as_secs());
        println!(
            "criterion {:>2} {} [{}] {}: {}{}",
            c.id,
            if passed { "PASS" } else { "FAIL" },
            c.name,
            timing,
            detail,
            if in_time { "" } else { " (over time limit)" }
        );
        if !passed {
            failed.push(c.id);
        }
    }
    println!("acceptance: {} of {} passed; failed {:?}", criteria.len() - failed.len(), criteria.len(), failed);
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
