use invwalk::asymptotics::{critical_estimate, f_kappa, g_kappa, predict, FMethod, Regime};
use invwalk::budget::WorkBudget;
use invwalk::chain_dp::{
    cell_count, cell_index, expected_inversions_dp, functional_equation_residual, symmetry_check, InversionState,
};
use invwalk::formulas::{aperiodic_expected, bounds, closed_form, eriksen, ClosedFormOptions};
use invwalk::genfun::{
    aperiodic_gf, build_gf, pole_check, pole_check_lazy, series, Polynomial, RationalFunction, POLE_TOLERANCE,
};
use invwalk::simulator::{monte_carlo, simulate_once, CounterRng, MonteCarloConfig};
use invwalk::trig_core::SpectralTable;
use rug::Rational;

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

fn b() -> WorkBudget {
    WorkBudget::default()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn cosines_and_sines() {
    let h = 0.5f64.sqrt();
    let t = SpectralTable::new(1, 53).unwrap();
    let c: Vec<f64> = t.c().iter().map(|x| x.to_f64()).collect();
    let s: Vec<f64> = t.s().iter().map(|x| x.to_f64()).collect();
    assert!(close(c[0], h, 1e-15) && close(c[1], -h, 1e-15));
    assert!(close(s[0], h, 1e-15) && close(s[1], h, 1e-15));

    let t = SpectralTable::new(2, 53).unwrap();
    let r3 = 3f64.sqrt() / 2.0;
    let c: Vec<f64> = t.c().iter().map(|x| x.to_f64()).collect();
    assert!(close(c[0], r3, 1e-15) && close(c[1], 0.0, 1e-15) && close(c[2], -r3, 1e-15));

    let t = SpectralTable::new(3, 53).unwrap();
    assert!(close(t.c()[0].to_f64(), 0.9238795, 1e-7));
}

#[test]
fn eigenvalue_formula() {
    let t1 = SpectralTable::new(1, 53).unwrap();
    assert_eq!(t1.eigenvalue(0, 0).unwrap().to_f64(), -1.0);
    let t3 = SpectralTable::new(3, 53).unwrap();
    assert!(close(t3.eigenvalue(0, 0).unwrap().to_f64(), 0.8047379, 1e-7));
    let t2 = SpectralTable::new(2, 53).unwrap();
    assert!(close(t2.eigenvalue(0, 2).unwrap().to_f64(), -2.5, 1e-14));
    assert!(!t2.is_certified_eigenvalue(0, 2));
    assert!(t2.is_certified_eigenvalue(0, 1));
}

#[test]
fn eigenvalue_containment_and_symmetry() {
    for m in [3usize, 5, 8, 13, 40] {
        let t = SpectralTable::new(m, 128).unwrap();
        for j in 0..=m {
            for k in 0..=m {
                let x = t.eigenvalue(j, k).unwrap();
                assert_eq!(x, t.eigenvalue(k, j).unwrap());
                assert_eq!(x, t.eigenvalue(m - j, m - k).unwrap());
                if j + k != m {
                    assert!(x.clone().abs() < 1);
                }
                if m >= 8 {
                    assert!(x > 0 && x < 1, "m={m} j={j} k={k}");
                }
            }
        }
    }
}

#[test]
fn first_recursion_steps() {
    let mut s = InversionState::initial(2).unwrap();
    s.advance();
    assert_eq!(s.probability(0, 0), q("1/2"));
    assert_eq!(s.probability(1, 1), q("1/2"));
    assert_eq!(s.probability(0, 1), 0);
    s.advance();
    assert_eq!(s.probability(0, 0), q("1/4"));
    assert_eq!(s.probability(1, 1), q("1/4"));
    assert_eq!(s.probability(0, 1), q("1/2"));

    let mut s = InversionState::initial(1).unwrap();
    for n in 0..6 {
        assert_eq!(s.probability(0, 0), n % 2);
        s.advance();
    }
}

#[test]
fn expected_values_small() {
    for m in 1..6 {
        assert_eq!(expected_inversions_dp(m, 0, b()).unwrap(), 0);
        assert_eq!(expected_inversions_dp(m, 1, b()).unwrap(), 1);
    }
    assert_eq!(expected_inversions_dp(2, 3, b()).unwrap(), q("3/2"));
}

#[test]
fn symmetry_predicate() {
    let mut cells = vec![Rational::new(); cell_count(3)];
    cells[cell_index(0, 0)] = Rational::from(1);
    let lopsided = InversionState::from_probabilities(3, 0, &cells).unwrap();
    assert!(!symmetry_check(&lopsided));

    let mut s = InversionState::initial(1).unwrap();
    for _ in 0..4 {
        assert!(symmetry_check(&s));
        s.advance();
    }
}

#[test]
fn functional_equation_vanishes() {
    for (m, order) in [(1, 6), (2, 6), (3, 5)] {
        assert_eq!(functional_equation_residual(m, order, b()).unwrap(), 0, "m={m}");
    }
}

#[test]
fn expected_values_increase_for_larger_m() {
    for m in [8usize, 9, 10] {
        let vals = invwalk::chain_dp::expected_inversions_trajectory(m, 200, b()).unwrap();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]), "m={m}");
    }
}

#[test]
fn spectral_sum_values() {
    let opts = ClosedFormOptions::default();
    assert!(close(closed_form(1, 1, &opts).unwrap().to_f64(), 1.0, 1e-12));
    assert!(close(closed_form(2, 2, &opts).unwrap().to_f64(), 1.0, 1e-12));
    let far = closed_form(3, 1_000_000, &opts).unwrap();
    assert!(close(far.to_f64(), 3.0, 1e-9));
    assert!(far.saturated);
    for m in [1usize, 4, 17] {
        assert!(close(closed_form(m, 0, &opts).unwrap().to_f64(), 0.0, 1e-12));
    }
}

#[test]
fn eriksen_values() {
    assert_eq!(eriksen(4, 0, b()).unwrap(), 0);
    assert_eq!(eriksen(2, 1, b()).unwrap(), 1);
    assert_eq!(eriksen(2, 3, b()).unwrap(), q("3/2"));
}

#[test]
fn bound_values() {
    let b0 = bounds(3, 0).unwrap();
    assert_eq!(b0.lower, 0.0);
    assert!(close(b0.upper, 1.756, 1e-3), "{}", b0.upper);
    let far = bounds(5, 100_000).unwrap();
    assert!(close(far.lower, 7.5, 1e-3) && close(far.upper, 7.5, 1e-3));
    assert!(bounds(2, 5).is_err());
}

#[test]
fn lazy_chain_values() {
    assert_eq!(aperiodic_expected(4, 0, &q("1/3"), b()).unwrap(), 0);
    assert_eq!(aperiodic_expected(1, 2, &q("1/2"), b()).unwrap(), q("1/2"));
    for (m, n) in [(3usize, 7u64), (5, 12)] {
        let plain = expected_inversions_dp(m, n, b()).unwrap();
        assert_eq!(aperiodic_expected(m, n, &Rational::from(1), b()).unwrap(), plain);
    }
}

fn printed(num: &[i64], den: &[i64]) -> RationalFunction {
    RationalFunction::new(Polynomial::from_i64s(num), Polynomial::from_i64s(den)).unwrap()
}

#[test]
fn printed_generating_functions() {
    // t/((1-t)(1+t))
    assert_eq!(build_gf(1).unwrap(), printed(&[0, 1], &[1, 0, -1]));
    // t(2+t)/((1-t)(2-t)(1+t))
    let den2 = Polynomial::from_i64s(&[1, -1]).mul(&Polynomial::from_i64s(&[2, -1])).mul(&Polynomial::from_i64s(&[1, 1]));
    let expect2 = RationalFunction::new(Polynomial::from_i64s(&[0, 2, 1]), den2).unwrap();
    assert_eq!(build_gf(2).unwrap(), expect2);
    // t(256-192t-48t^2+44t^3-5t^4)/((1-t)(16-5t^2)(16-20t+5t^2))
    let den4 = Polynomial::from_i64s(&[1, -1])
        .mul(&Polynomial::from_i64s(&[16, 0, -5]))
        .mul(&Polynomial::from_i64s(&[16, -20, 5]));
    let expect4 = RationalFunction::new(Polynomial::from_i64s(&[0, 256, -192, -48, 44, -5]), den4).unwrap();
    assert_eq!(build_gf(4).unwrap(), expect4);
}

#[test]
fn series_values() {
    let ones: Vec<Rational> = [0, 1, 0, 1, 0, 1].iter().map(|&v| Rational::from(v)).collect();
    assert_eq!(series(&build_gf(1).unwrap(), 5), ones);
    let two: Vec<Rational> = ["0", "1", "1", "3/2", "5/4"].iter().map(|s| q(s)).collect();
    assert_eq!(series(&build_gf(2).unwrap(), 4), two);
    let rf = build_gf(3).unwrap();
    assert_eq!(series(&rf, 0), vec![Rational::new()]);
}

#[test]
fn lazy_generating_function() {
    let rf = build_gf(3).unwrap();
    assert_eq!(aperiodic_gf(&rf, 3, &Rational::from(1)).unwrap(), rf);

    let half = aperiodic_gf(&build_gf(1).unwrap(), 1, &q("1/2")).unwrap();
    let s = series(&half, 8);
    assert_eq!(s[0], 0);
    assert!(s[1..].iter().all(|c| *c == q("1/2")));

    let two = aperiodic_gf(&build_gf(2).unwrap(), 2, &q("2/3")).unwrap();
    assert_eq!(series(&two, 1)[1], q("2/3"));
}

#[test]
fn denominator_poles() {
    for m in [1usize, 2, 4, 6] {
        let rf = build_gf(m).unwrap();
        let report = pole_check(&rf, &SpectralTable::new(m, 128).unwrap(), POLE_TOLERANCE).unwrap();
        assert!(report.passed, "m={m}: {report:?}");
        assert_eq!(report.unmatched_degree, 0);
    }
    for m in [2usize, 3, 5] {
        let table = SpectralTable::new(m, 128).unwrap();
        for p in [q("1/2"), Rational::from((m, m + 1))] {
            let lazy = aperiodic_gf(&build_gf(m).unwrap(), m, &p).unwrap();
            let report = pole_check_lazy(&lazy, &table, &p, POLE_TOLERANCE).unwrap();
            assert!(report.passed, "m={m} p={p}: {report:?}");
        }
    }
    let report = pole_check(&build_gf(2).unwrap(), &SpectralTable::new(2, 128).unwrap(), POLE_TOLERANCE).unwrap();
    let mut roots: Vec<f64> = report.matched.iter().map(|p| p.root).collect();
    roots.sort_by(f64::total_cmp);
    assert!(close(roots[0], -1.0, 1e-9) && close(roots[1], 1.0, 1e-9) && close(roots[2], 2.0, 1e-9));
}

#[test]
fn linear_law_values() {
    assert_eq!(f_kappa(0.0, FMethod::Series, 1e-12).unwrap(), 1.0);
    assert!(close(f_kappa(0.01, FMethod::Series, 1e-12).unwrap(), 0.99005, 1e-4));
    let a = f_kappa(1.0, FMethod::Series, 1e-12).unwrap();
    let b = f_kappa(1.0, FMethod::Quadrature, 1e-12).unwrap();
    assert!(close(a, b, 1e-8));
    assert!(close(a, 0.5732560017588407, 1e-13));
}

#[test]
fn linear_law_shape() {
    let grid: Vec<f64> = (1..=50).map(|i| f_kappa(0.1 * i as f64, FMethod::Series, 1e-12).unwrap()).collect();
    assert!(grid.iter().all(|&v| v > 0.0));
    assert!(grid.windows(2).all(|w| w[1] < w[0]));
    for kappa in [0.01, 0.3, 2.0, 7.5, 20.0] {
        let a = f_kappa(kappa, FMethod::Series, 1e-12).unwrap();
        let b = f_kappa(kappa, FMethod::Quadrature, 1e-12).unwrap();
        assert!(close(a, b, 1e-8), "kappa={kappa}: {a} vs {b}");
    }
}

#[test]
fn cubic_law_values() {
    assert!(close(g_kappa(10.0, 1e-15).unwrap(), 0.25, 1e-15));
    assert!(g_kappa(1e-4, 1e-12).unwrap() < 1e-2);
    assert!(close(g_kappa(0.1, 1e-15).unwrap(), 0.18851777748213505, 1e-15));
    assert!(g_kappa(0.0, 1e-12).is_err());
    let grid: Vec<f64> = (1..=100).map(|i| g_kappa(0.01 * i as f64, 1e-12).unwrap()).collect();
    assert!(grid.iter().all(|&v| v > 0.0 && v < 0.25));
    assert!(grid.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn critical_window_values() {
    assert!(close(critical_estimate(100, 0.0).unwrap(), 2525.0 - 1600.0 / std::f64::consts::PI.powi(4), 1e-9));
    assert!(close(critical_estimate(100, 60.0).unwrap(), 2525.0, 1e-9));
}

#[test]
fn regime_predictions() {
    let e = predict(1_000_000, 1000).unwrap();
    assert_eq!(e.regime, Regime::Sublinear);
    assert!(close(e.predicted, 1000.0, 1.0));

    let e = predict(200, 200).unwrap();
    assert_eq!(e.regime, Regime::Linear);
    assert!(close(e.predicted, 200.0 * f_kappa(1.0, FMethod::Series, 1e-12).unwrap(), 1e-9));

    let e = predict(100, 10_000).unwrap();
    assert_eq!(e.regime, Regime::Intermediate);
    assert!(close(e.predicted, 797.88, 1e-2));
}

#[test]
fn simulation_trivial_cases() {
    for seed in 0..5 {
        let mut rng = CounterRng::new(seed, 1);
        assert_eq!(simulate_once(1, 7, &mut rng).unwrap(), 1);
        assert_eq!(simulate_once(6, 0, &mut rng).unwrap(), 0);
        assert_eq!(simulate_once(2, 1, &mut rng).unwrap(), 1);
    }
}

#[test]
fn simulation_summary() {
    let cfg = |m, n, trials, seed| MonteCarloConfig { m, n, trials, seed, lazy_p: None, workers: 4 };
    let s = monte_carlo(&cfg(1, 6, 1000, 9), b()).unwrap();
    assert_eq!((s.mean, s.variance), (0.0, 0.0));

    let a = monte_carlo(&cfg(10, 50, 100_000, 42), b()).unwrap();
    let exact = invwalk::numeric::rational_to_f64(&expected_inversions_dp(10, 50, b()).unwrap());
    assert!(a.agrees_with(exact, 4.0), "{} vs {exact}", a.mean);
    let again = monte_carlo(&cfg(10, 50, 100_000, 42), b()).unwrap();
    assert!(a.same_result(&again));
}

#[test]
fn lazy_simulation_matches() {
    let m = 6;
    let p = invwalk::formulas::default_laziness(m);
    let cfg = MonteCarloConfig { m, n: 40, trials: 50_000, seed: 11, lazy_p: Some(p.clone()), workers: 4 };
    let s = monte_carlo(&cfg, b()).unwrap();
    let exact = invwalk::numeric::rational_to_f64(&aperiodic_expected(m, 40, &p, b()).unwrap());
    assert!(s.agrees_with(exact, 4.0), "{} vs {exact}", s.mean);
}
