//! Limit laws for `I_{m,n}` as `m -> infinity` with `n` coupled to `m`.
//!
//! | regime        | coupling               | law                                         |
//! |---------------|------------------------|---------------------------------------------|
//! | sublinear     | `n = o(m)`             | `I ~ n`                                     |
//! | linear        | `n ~ kappa m`          | `I ~ n f(kappa)`                            |
//! | intermediate  | `m << n << m^3`        | `I ~ sqrt(2 m n / pi)`                      |
//! | cubic         | `n ~ kappa m^3`        | `I ~ m^2 g(kappa)`                          |
//! | critical      | `n = m^3 log m/pi^2 + alpha m^3` | `m(m+1)/4 - (16 m/pi^4) e^{-alpha pi^2}` |
//!
//! Crossover points are not determined by the limit statements; the
//! thresholds in [`RegimeThresholds`] are engineering choices.

use rug::Float;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::formulas::bounds;
use crate::numeric::pi;

/// Precision used for the regime constants.
const CONST_PRECISION: u32 = 128;

fn pi_f64() -> f64 {
    pi(CONST_PRECISION).to_f64()
}

/// `sqrt(2/pi)`, the common limit of the three regimes.
pub fn sqrt_two_over_pi() -> f64 {
    let p = CONST_PRECISION;
    Float::with_val(p, Float::with_val(p, 2u32) / pi(p)).sqrt().to_f64()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FMethod {
    #[default]
    Series,
    Quadrature,
}

impl std::str::FromStr for FMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(FMethod::Series),
            "quadrature" => Ok(FMethod::Quadrature),
            other => invalid(format!("unknown method {other:?} (expected series or quadrature)")),
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return invalid("tolerance must be positive");
    }
    Ok(())
}

/// The linear-regime law `f(kappa) = lim I_{m, kappa m} / (kappa m)`.
///
/// ```text
/// f(kappa) = sum_j (-1)^j (2j)! (2 kappa)^j / (j! (j+1)!^2)
///          = 1/(2 pi kappa) int_0^inf (1 - exp(-8 kappa t^2/(1+t^2))) / (t^2 (1+t^2)) dt
/// ```
pub fn f_kappa(kappa: f64, method: FMethod, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!("f needs kappa >= 0, got {kappa}")));
    }
    if kappa == 0.0 {
        return Ok(1.0);
    }
    Ok(match method {
        FMethod::Series => f_series(kappa, tol),
        FMethod::Quadrature => f_quadrature(kappa, tol),
    })
}

fn f_series(kappa: f64, tol: f64) -> f64 {
    // Terms grow to about e^{8 kappa} before decaying.
    let bits = (8.0 * kappa * std::f64::consts::LOG2_E).ceil() as u32 + 64 + (-tol.log2()).max(0.0).ceil() as u32;
    let two_kappa = Float::with_val(bits, 2.0 * kappa);
    let mut term = Float::with_val(bits, 1);
    let mut sum = Float::with_val(bits, 1);
    let mut j: u64 = 0;
    loop {
        // t_{j+1} / t_j = -2 (2j+1) (2 kappa) / (j+2)^2
        let ratio_num = 2 * (2 * j + 1);
        let ratio_den = (j + 2) * (j + 2);
        term *= &two_kappa;
        term *= ratio_num;
        term /= ratio_den;
        term = -term;
        sum += &term;
        j += 1;
        let shrinking = 2.0 * (2 * j + 1) as f64 * 2.0 * kappa < ((j + 2) * (j + 2)) as f64;
        if shrinking && term.clone().abs() < tol {
            break;
        }
    }
    sum.to_f64()
}

fn f_integrand(kappa: f64, t: f64) -> f64 {
    let t2 = t * t;
    let u = 8.0 * kappa * t2 / (1.0 + t2);
    -(-u).exp_m1() / (t2 * (1.0 + t2))
}

fn f_quadrature(kappa: f64, tol: f64) -> f64 {
    let two_pi_kappa = 2.0 * pi_f64() * kappa;
    // integrand <= 1/t^4, so the tail past T contributes <= 1/(6 pi kappa T^3)
    let cutoff = (1.0 / (3.0 * pi_f64() * kappa * tol)).cbrt().max(1.0);
    // geometric breakpoints: the integrand changes scale near t ~ 1/sqrt(kappa)
    let mut breaks = vec![0.0];
    let mut b = (1.0 / kappa.sqrt()).min(1.0);
    while b < cutoff {
        breaks.push(b);
        b *= 4.0;
    }
    breaks.push(cutoff);
    let pieces = (breaks.len() - 1) as f64;
    let local = tol * two_pi_kappa / (4.0 * pieces);
    let integral: f64 = breaks
        .windows(2)
        .map(|w| adaptive_gk15(&|t| f_integrand(kappa, t), w[0], w[1], local, 0))
        .sum();
    integral / two_pi_kappa
}

#[allow(clippy::excessive_precision)]
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
#[allow(clippy::excessive_precision)]
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
// Gauss weights for nodes 1, 3, 5, 7 above
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its distance from the embedded 7-point
/// Gauss rule.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = GK_WEIGHTS[7] * f(c);
    let mut gauss = G_WEIGHTS[3] * f(c);
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += GK_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive_gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = gk15(f, a, b);
    if err <= tol || depth >= 40 {
        return value;
    }
    let mid = 0.5 * (a + b);
    adaptive_gk15(f, a, mid, tol / 2.0, depth + 1) + adaptive_gk15(f, mid, b, tol / 2.0, depth + 1)
}

/// The cubic-regime law `g(kappa) = lim I_{m, kappa m^3} / m^2`,
///
/// ```text
/// g(kappa) = 1/4 - (16/pi^4) (sum_{j>=0} e^{-kappa pi^2 (2j+1)^2 / 2} / (2j+1)^2)^2
/// ```
///
/// `g(0+) = 0`, but `kappa = 0` itself is rejected.
pub fn g_kappa(kappa: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!("g needs kappa > 0, got {kappa}")));
    }
    let p = CONST_PRECISION.max((-tol.log2()).ceil() as u32 + 64);
    let pi = pi(p);
    let pi2 = Float::with_val(p, pi.square_ref());
    let a = Float::with_val(p, &pi2 * kappa) / 2u32;
    let coef = Float::with_val(p, Float::with_val(p, 16u32) / Float::with_val(p, pi2.square_ref()));
    let term = |j: u64| {
        let odd = 2 * j + 1;
        let e = Float::with_val(p, -Float::with_val(p, &a * (odd * odd))).exp();
        e / (odd * odd)
    };
    let mut sum = Float::with_val(p, 0);
    let mut j = 0u64;
    loop {
        sum += term(j);
        // tail past j: sum_{i>j} T_i <= T_{j+1} / (1 - e^{-8 a (j+2)})
        let next = term(j + 1);
        let ratio = Float::with_val(p, -Float::with_val(p, &a * (8 * (j + 2)))).exp();
        let tail = next / Float::with_val(p, 1u32 - ratio);
        let effect = Float::with_val(p, &coef * &tail) * Float::with_val(p, Float::with_val(p, &sum * 2u32) + &tail);
        if effect < tol / 2.0 {
            break;
        }
        j += 1;
    }
    let g = Float::with_val(p, 0.25) - coef * sum.square();
    Ok(g.to_f64())
}

/// `m(m+1)/4 - (16 m / pi^4) e^{-alpha pi^2}`.
pub fn critical_estimate(m: usize, alpha: f64) -> Result<f64> {
    if m < 3 {
        return Err(Error::Domain(format!("critical estimate needs m >= 3, got m = {m}")));
    }
    let p = CONST_PRECISION;
    let pi2 = Float::with_val(p, pi(p).square_ref());
    let limit = Float::with_val(p, (m as u64) * (m as u64 + 1)) / 4u32;
    let decay = Float::with_val(p, -Float::with_val(p, &pi2 * alpha)).exp();
    let corr = Float::with_val(p, 16 * m as u64) / pi2.square() * decay;
    Ok((limit - corr).to_f64())
}

/// Centre of the critical window, `m^3 log m / pi^2`.
pub fn critical_center(m: usize) -> f64 {
    let m = m as f64;
    let pi = pi_f64();
    m.powi(3) * m.ln() / (pi * pi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Sublinear,
    Linear,
    Intermediate,
    Cubic,
    CriticalLog,
    Supercubic,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Sublinear => "sublinear",
            Regime::Linear => "linear",
            Regime::Intermediate => "intermediate",
            Regime::Cubic => "cubic",
            Regime::CriticalLog => "critical_log",
            Regime::Supercubic => "supercubic",
        }
    }
}

/// Boundaries used by [`classify`]; the defaults are
/// sublinear `n < m/10`, linear `n <= 10 m`,
/// intermediate `n < m^3 / (10 max(1, log m))`,
/// critical `|n - m^3 log m / pi^2| <= 5 m^3`, cubic `m^3/10 <= n <= 10 m^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeThresholds {
    pub sublinear_below: f64,
    pub linear_up_to: f64,
    pub intermediate_divisor: f64,
    pub critical_half_width: f64,
    pub cubic_from: f64,
    pub cubic_up_to: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            sublinear_below: 0.1,
            linear_up_to: 10.0,
            intermediate_divisor: 10.0,
            critical_half_width: 5.0,
            cubic_from: 0.1,
            cubic_up_to: 10.0,
        }
    }
}

/// Regime of `(m, n)`, with `alpha = (n - m^3 log m / pi^2) / m^3` for the
/// critical window. Rules are tried in the order sublinear, linear,
/// intermediate, critical, cubic; anything left below `m^3` scale counts as
/// intermediate and anything above as supercubic.
pub fn classify(m: usize, n: u64, th: &RegimeThresholds) -> (Regime, Option<f64>) {
    let mf = m as f64;
    let nf = n as f64;
    let m3 = mf.powi(3);
    if nf < th.sublinear_below * mf {
        return (Regime::Sublinear, None);
    }
    if nf <= th.linear_up_to * mf {
        return (Regime::Linear, None);
    }
    if nf < m3 / (th.intermediate_divisor * mf.ln().max(1.0)) {
        return (Regime::Intermediate, None);
    }
    let alpha = (nf - critical_center(m)) / m3;
    if alpha.abs() <= th.critical_half_width {
        return (Regime::CriticalLog, Some(alpha));
    }
    if nf >= th.cubic_from * m3 && nf <= th.cubic_up_to * m3 {
        return (Regime::Cubic, None);
    }
    if nf < th.cubic_from * m3 {
        (Regime::Intermediate, None)
    } else {
        (Regime::Supercubic, None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeEstimate {
    pub regime: Regime,
    pub predicted: f64,
    /// The scale the limit law is stated in, e.g. `"sqrt(m n)"`.
    pub normalizer: &'static str,
    /// `n/m`, `n/m^3` or `alpha`, depending on the regime.
    pub kappa: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    /// The raw law fell outside `[lower, upper]` and was moved inside.
    pub clamped: bool,
}

/// Tolerance used for `f` and `g` inside [`predict`].
const PREDICT_TOL: f64 = 1e-12;

pub fn predict(m: usize, n: u64) -> Result<RegimeEstimate> {
    predict_with(m, n, &RegimeThresholds::default())
}

pub fn predict_with(m: usize, n: u64, th: &RegimeThresholds) -> Result<RegimeEstimate> {
    if m < 3 {
        return Err(Error::Domain(format!("regime prediction needs m >= 3, got m = {m}")));
    }
    let mf = m as f64;
    let nf = n as f64;
    let (regime, alpha) = classify(m, n, th);
    let (raw, normalizer, kappa) = match regime {
        Regime::Sublinear => (nf, "n", Some(nf / mf)),
        Regime::Linear => {
            let k = nf / mf;
            (nf * f_kappa(k, FMethod::Series, PREDICT_TOL)?, "n", Some(k))
        }
        Regime::Intermediate => ((2.0 * mf * nf / pi_f64()).sqrt(), "sqrt(m n)", None),
        Regime::Cubic => {
            let k = nf / mf.powi(3);
            (mf * mf * g_kappa(k, PREDICT_TOL)?, "m^2", Some(k))
        }
        Regime::CriticalLog => {
            let a = alpha.expect("critical regime carries alpha");
            (critical_estimate(m, a)?, "m(m+1)/4", Some(a))
        }
        Regime::Supercubic => (mf * (mf + 1.0) / 4.0, "m(m+1)/4", None),
    };
    let b = bounds(m, n)?;
    let predicted = raw.clamp(b.lower, b.upper);
    Ok(RegimeEstimate {
        regime,
        predicted,
        normalizer,
        kappa,
        lower: b.lower,
        upper: b.upper,
        clamped: predicted != raw,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSample {
    pub kappa: f64,
    pub value: f64,
    /// `|value - sqrt(2/pi)| / sqrt(2/pi)`
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub limit: f64,
    /// `sqrt(kappa) f(kappa)` at kappa = 10, 50, 100
    pub f_side: Vec<LimitSample>,
    /// `g(kappa) / sqrt(kappa)` at kappa = 1e-2, 1e-3, 1e-4
    pub g_side: Vec<LimitSample>,
    pub f_monotone: bool,
    pub g_monotone: bool,
}

impl ConsistencyReport {
    /// Both end samples within `rel` of the limit and both approaches monotone.
    pub fn passed(&self, rel: f64) -> bool {
        let last_ok = |s: &[LimitSample]| s.last().is_some_and(|x| x.deviation <= rel);
        last_ok(&self.f_side) && last_ok(&self.g_side) && self.f_monotone && self.g_monotone
    }
}

fn monotone_approach(samples: &[LimitSample]) -> bool {
    samples.windows(2).all(|w| w[1].deviation < w[0].deviation)
}

/// Checks `lim_{kappa->inf} sqrt(kappa) f(kappa) = sqrt(2/pi) = lim_{kappa->0} g(kappa)/sqrt(kappa)`
/// on sample points; `f` by quadrature, `g` by its series.
pub fn consistency_limits(tol: f64) -> Result<ConsistencyReport> {
    check_tol(tol)?;
    let limit = sqrt_two_over_pi();
    let sample = |kappa: f64, value: f64| LimitSample {
        kappa,
        value,
        deviation: (value - limit).abs() / limit,
    };
    let mut f_side = Vec::new();
    for kappa in [10.0f64, 50.0, 100.0] {
        let v = kappa.sqrt() * f_kappa(kappa, FMethod::Quadrature, tol)?;
        f_side.push(sample(kappa, v));
    }
    let mut g_side = Vec::new();
    for kappa in [1e-2f64, 1e-3, 1e-4] {
        let v = g_kappa(kappa, tol)? / kappa.sqrt();
        g_side.push(sample(kappa, v));
    }
    Ok(ConsistencyReport {
        limit,
        f_monotone: monotone_approach(&f_side),
        g_monotone: monotone_approach(&g_side),
        f_side,
        g_side,
    })
}
