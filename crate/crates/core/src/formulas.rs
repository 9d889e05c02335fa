//! Closed-form evaluators for `I_{m,n}`.
//!
//! * the spectral sum
//!   `I_{m,n} = m(m+1)/4 - 1/(8(m+1)^2) sum_{j,k} (c_j+c_k)^2/(s_j^2 s_k^2) x_{jk}^n`
//!   and two algebraically equal rewrites of its weights;
//! * Eriksen's binomial double sum, in exact arithmetic;
//! * the two-sided bounds obtained from the dominant eigenvalue `x_00`;
//! * the lazy (aperiodic) chain as a binomial transform of `I_{m,k}`.

use rayon::prelude::*;
use rug::{Float, Integer, Rational};

use crate::budget::WorkBudget;
use crate::chain_dp;
use crate::error::{invalid, Error, Result};
use crate::numeric::{GUARD_BITS, pairwise_reduce, pow_by_squaring, sum_slice, CompensatedSum, MIN_PRECISION};
use crate::trig_core::SpectralTable;

/// Which form of the spectral weights to sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralVariant {
    /// `m(m+1)/4 - K sum (c_j+c_k)^2/(s_j^2 s_k^2) x^n`
    #[default]
    Theorem1,
    /// `m(m+1)/4 - K sum (c_j+c_k)/((1-c_j)(1-c_k)) x^n`
    Ser2,
    /// `K sum (c_j+c_k)/((1-c_j)(1-c_k)) (1 - x^n)`
    Ser3,
}

impl std::str::FromStr for SpectralVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "theorem1" => Ok(SpectralVariant::Theorem1),
            "ser2" => Ok(SpectralVariant::Ser2),
            "ser3" => Ok(SpectralVariant::Ser3),
            other => invalid(format!("unknown variant {other:?} (expected theorem1, ser2 or ser3)")),
        }
    }
}

impl SpectralVariant {
    pub fn name(self) -> &'static str {
        match self {
            SpectralVariant::Theorem1 => "theorem1",
            SpectralVariant::Ser2 => "ser2",
            SpectralVariant::Ser3 => "ser3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosedFormOptions {
    pub variant: SpectralVariant,
    pub precision: u32,
    /// Precompute the weights and `x_{jk}` once so that repeated evaluation
    /// at many `n` only pays for the powers. Ignored above
    /// [`MATERIALIZE_LIMIT`] entries.
    pub materialize_x: bool,
}

impl Default for ClosedFormOptions {
    fn default() -> Self {
        ClosedFormOptions {
            variant: SpectralVariant::Theorem1,
            precision: MIN_PRECISION,
            materialize_x: true,
        }
    }
}

impl ClosedFormOptions {
    pub fn with_precision(precision: u32) -> Self {
        ClosedFormOptions {
            precision,
            ..Default::default()
        }
    }

    pub fn variant(mut self, variant: SpectralVariant) -> Self {
        self.variant = variant;
        self
    }
}

/// Largest `(m+1)^2` for which the weight/eigenvalue tables are kept.
pub const MATERIALIZE_LIMIT: usize = 1 << 24;

/// Result of a spectral evaluation.
#[derive(Debug, Clone)]
pub struct ClosedFormValue {
    pub value: Float,
    pub precision: u32,
    pub variant: SpectralVariant,
    /// `x_00^n` fell below the working precision and the limit
    /// `m(m+1)/4` was returned exactly.
    pub saturated: bool,
}

impl ClosedFormValue {
    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }
}

/// Spectral evaluator bound to one `m`.
///
/// The sum runs over row pairs `(j, m-j)`: since `x_{m-j,m-k} = x_{jk}`
/// exactly, each power `x^n` is computed once and used for both terms.
/// Rows are summed in canonical `k` order and combined with a fixed pairwise
/// tree, so the result is bit-identical to the plain double loop
/// ([`closed_form_reference`]) and independent of the thread count.
#[derive(Debug, Clone)]
pub struct ClosedFormEvaluator {
    table: SpectralTable,
    opts: ClosedFormOptions,
    cache: Option<Materialized>,
}

#[derive(Debug, Clone)]
struct Materialized {
    /// weights[j][k] for every pair
    weights: Vec<Vec<Float>>,
    /// x[j][k] for j <= m/2 only
    x: Vec<Vec<Float>>,
}

fn weight(table: &SpectralTable, variant: SpectralVariant, j: usize, k: usize) -> Float {
    let p = table.precision();
    let (c, s, omc) = (table.c(), table.s(), table.one_minus_c());
    let sum = Float::with_val(p, &c[j] + &c[k]);
    match variant {
        SpectralVariant::Theorem1 => {
            let den = Float::with_val(p, Float::with_val(p, s[j].square_ref()) * Float::with_val(p, s[k].square_ref()));
            Float::with_val(p, sum.square() / den)
        }
        SpectralVariant::Ser2 | SpectralVariant::Ser3 => {
            let den = Float::with_val(p, &omc[j] * &omc[k]);
            Float::with_val(p, sum / den)
        }
    }
}

fn term(variant: SpectralVariant, w: &Float, xn: &Float) -> Float {
    let p = w.prec();
    match variant {
        SpectralVariant::Ser3 => Float::with_val(p, w * Float::with_val(p, 1u32 - xn)),
        _ => Float::with_val(p, w * xn),
    }
}

fn limit_value(m: usize, p: u32) -> Float {
    Float::with_val(p, (m as u64) * (m as u64 + 1)) / 4u32
}

fn finish(table: &SpectralTable, variant: SpectralVariant, sum: Float) -> Float {
    let m = table.m();
    let p = table.precision();
    let scale = 8 * (m as u64 + 1) * (m as u64 + 1);
    let part = Float::with_val(p, sum / scale);
    match variant {
        SpectralVariant::Ser3 => part,
        _ => Float::with_val(p, limit_value(m, p) - part),
    }
}

/// `x_00^n < 2^-(p+1)`: the correction is below the working precision.
/// For `m >= 3` every certified `|x_{jk}| <= x_00` and the weights sum to
/// `m(m+1)/4`, so the whole correction is bounded by `m(m+1)/4 x_00^n`.
fn is_saturated(table: &SpectralTable, n: u64) -> bool {
    if table.m() < 3 || n == 0 {
        return false;
    }
    let x00 = table.eigenvalue_unchecked(0, 0);
    let log2 = x00.log2().to_f64();
    (n as f64) * log2 < -(table.precision() as f64 + 1.0)
}

impl ClosedFormEvaluator {
    pub fn new(m: usize, opts: ClosedFormOptions) -> Result<Self> {
        let table = SpectralTable::new(m, opts.precision)?;
        Self::from_table(table, opts)
    }

    pub fn from_table(table: SpectralTable, opts: ClosedFormOptions) -> Result<Self> {
        if opts.precision != table.precision() {
            return invalid("options and table disagree on precision");
        }
        let m = table.m();
        let cache = if opts.materialize_x && (m + 1) * (m + 1) <= MATERIALIZE_LIMIT {
            let weights = (0..=m)
                .into_par_iter()
                .map(|j| (0..=m).map(|k| weight(&table, opts.variant, j, k)).collect())
                .collect();
            let x = (0..=m / 2)
                .into_par_iter()
                .map(|j| (0..=m).map(|k| table.eigenvalue_unchecked(j, k)).collect())
                .collect();
            Some(Materialized { weights, x })
        } else {
            None
        };
        Ok(ClosedFormEvaluator { table, opts, cache })
    }

    pub fn table(&self) -> &SpectralTable {
        &self.table
    }

    fn w(&self, j: usize, k: usize) -> Float {
        match &self.cache {
            Some(c) => c.weights[j][k].clone(),
            None => weight(&self.table, self.opts.variant, j, k),
        }
    }

    fn x(&self, j: usize, k: usize) -> Float {
        match &self.cache {
            Some(c) if j < c.x.len() => c.x[j][k].clone(),
            _ => self.table.eigenvalue_unchecked(j, k),
        }
    }

    /// Row sums for `j` and `m - j`, sharing the powers.
    fn row_pair(&self, j: usize, n: u64) -> (CompensatedSum, Option<CompensatedSum>) {
        let m = self.table.m();
        let p = self.opts.precision;
        let v = self.opts.variant;
        let mirror = m - j;
        if mirror == j {
            // middle row: x_{j,k} = x_{j,m-k}
            let powers: Vec<Float> = (0..=m / 2).map(|k| pow_by_squaring(&self.x(j, k), n)).collect();
            let row: Vec<Float> = (0..=m)
                .map(|k| {
                    let xn = if k <= m / 2 { &powers[k] } else { &powers[m - k] };
                    term(v, &self.w(j, k), xn)
                })
                .collect();
            (sum_slice(&row, p), None)
        } else {
            let powers: Vec<Float> = (0..=m).map(|k| pow_by_squaring(&self.x(j, k), n)).collect();
            let row: Vec<Float> = (0..=m).map(|k| term(v, &self.w(j, k), &powers[k])).collect();
            // term(m-j, k) uses x_{m-j,k} = x_{j,m-k}
            let mirrored: Vec<Float> = (0..=m).map(|k| term(v, &self.w(mirror, k), &powers[m - k])).collect();
            (sum_slice(&row, p), Some(sum_slice(&mirrored, p)))
        }
    }

    pub fn eval(&self, n: u64) -> ClosedFormValue {
        let m = self.table.m();
        let p = self.opts.precision;
        let variant = self.opts.variant;
        if is_saturated(&self.table, n) {
            return ClosedFormValue {
                value: limit_value(m, p),
                precision: p,
                variant,
                saturated: true,
            };
        }
        let pairs: Vec<(CompensatedSum, Option<CompensatedSum>)> =
            (0..=m / 2).into_par_iter().map(|j| self.row_pair(j, n)).collect();
        let mut rows: Vec<Option<CompensatedSum>> = vec![None; m + 1];
        for (j, (row, mirror)) in pairs.into_iter().enumerate() {
            rows[j] = Some(row);
            if let Some(mr) = mirror {
                rows[m - j] = Some(mr);
            }
        }
        let rows: Vec<CompensatedSum> = rows.into_iter().map(|r| r.expect("every row filled")).collect();
        let sum = pairwise_reduce(rows, p).value();
        ClosedFormValue {
            value: finish(&self.table, variant, sum),
            precision: p,
            variant,
            saturated: false,
        }
    }
}

/// Spectral evaluation of `I_{m,n}`; `O(m^2 log n)`.
pub fn closed_form(m: usize, n: u64, opts: &ClosedFormOptions) -> Result<ClosedFormValue> {
    let opts = ClosedFormOptions {
        materialize_x: false,
        ..*opts
    };
    Ok(ClosedFormEvaluator::new(m, opts)?.eval(n))
}

/// The unoptimised double loop: every `(j, k)` term computed on its own,
/// rows summed in order, same pairwise tree. Exists to check that the
/// optimised evaluator reproduces it bit for bit.
pub fn closed_form_reference(m: usize, n: u64, opts: &ClosedFormOptions) -> Result<ClosedFormValue> {
    let table = SpectralTable::new(m, opts.precision)?;
    let p = opts.precision;
    let v = opts.variant;
    if is_saturated(&table, n) {
        return Ok(ClosedFormValue {
            value: limit_value(m, p),
            precision: p,
            variant: v,
            saturated: true,
        });
    }
    let rows: Vec<CompensatedSum> = (0..=m)
        .map(|j| {
            let row: Vec<Float> = (0..=m)
                .map(|k| {
                    let xn = pow_by_squaring(&table.eigenvalue_unchecked(j, k), n);
                    term(v, &weight(&table, v, j, k), &xn)
                })
                .collect();
            sum_slice(&row, p)
        })
        .collect();
    let sum = pairwise_reduce(rows, p).value();
    Ok(ClosedFormValue {
        value: finish(&table, v, sum),
        precision: p,
        variant: v,
        saturated: false,
    })
}

fn binomial(n: u64, k: u64) -> Integer {
    Integer::from(Integer::binomial_u(n as u32, k as u32))
}

/// `g_{s,m} = sum_{l=0}^{m} sum_{k>=0} (-1)^k (m - 2l) C(2 ceil(s/2) - 1, ceil(s/2) + l + k(m+1))`
pub fn eriksen_g(s: u64, m: u64) -> Integer {
    let a = s.div_ceil(2);
    let top = 2 * a - 1;
    let mut g = Integer::new();
    for l in 0..=m {
        let mut inner = Integer::new();
        let mut k = 0u64;
        while a + l + k * (m + 1) <= top {
            let b = binomial(top, a + l + k * (m + 1));
            if k.is_multiple_of(2) {
                inner += b;
            } else {
                inner -= b;
            }
            k += 1;
        }
        g += inner * (m as i64 - 2 * l as i64);
    }
    g
}

/// `h_{s,m} = sum_{j in Z} (-1)^j C(2 floor(s/2), floor(s/2) + j(m+1))`
pub fn eriksen_h(s: u64, m: u64) -> Integer {
    let b = s / 2;
    let reach = (b / (m + 1)) as i64;
    let mut h = Integer::new();
    for j in -reach..=reach {
        let lower = b as i64 + j * (m as i64 + 1);
        let c = binomial(2 * b, lower as u64);
        if j.rem_euclid(2) == 0 {
            h += c;
        } else {
            h -= c;
        }
    }
    h
}

/// Eriksen's exact expression
///
/// ```text
/// I_{m,n} = sum_{r=1}^{n} m^{-r} C(n, r) sum_{s=1}^{r} C(r-1, s-1) (-4)^{r-s} g_{s,m} h_{s,m}
/// ```
///
/// evaluated over the integers with the single denominator `m^n`.
pub fn eriksen(m: usize, n: u64, budget: WorkBudget) -> Result<Rational> {
    if m == 0 {
        return invalid("m must be at least 1");
    }
    let mu = m as u64;
    let cost = u128::from(n) * u128::from(n) * u128::from(n / mu + mu);
    budget.check("eriksen formula", cost)?;
    if n == 0 {
        return Ok(Rational::new());
    }
    let gh: Vec<Integer> = (1..=n).map(|s| eriksen_g(s, mu) * eriksen_h(s, mu)).collect();
    let mut neg4 = vec![Integer::from(1)];
    for i in 1..n as usize {
        let next = Integer::from(&neg4[i - 1] * -4i32);
        neg4.push(next);
    }
    let m_int = Integer::from(m);
    let mut m_pow = vec![Integer::from(1)];
    for i in 1..=n as usize {
        let next = Integer::from(&m_pow[i - 1] * &m_int);
        m_pow.push(next);
    }
    // Pascal row C(r-1, .) updated in place as r grows.
    let mut pascal: Vec<Integer> = vec![Integer::from(1)];
    let mut numerator = Integer::new();
    let mut choose_n = Integer::from(1); // C(n, r), advanced each r
    for r in 1..=n {
        if r > 1 {
            pascal.push(Integer::from(1));
            for i in (1..pascal.len() - 1).rev() {
                let prev = pascal[i - 1].clone();
                pascal[i] += prev;
            }
        }
        choose_n *= n - r + 1;
        choose_n /= r;
        let mut inner = Integer::new();
        for s in 1..=r {
            let idx = (s - 1) as usize;
            let t = Integer::from(&pascal[idx] * &neg4[(r - s) as usize]);
            inner += t * &gh[idx];
        }
        numerator += inner * &choose_n * &m_pow[(n - r) as usize];
    }
    Ok(Rational::from((numerator, m_pow[n as usize].clone())))
}

/// Two-sided bracket on `I_{m,n}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundsPair {
    pub lower: f64,
    pub upper: f64,
}

/// `m(m+1)/4 (1 - x_00^n) <= I_{m,n} <= m(m+1)/4 - c_0^2/(2(m+1)^2 s_0^4) x_00^n`,
/// valid for `m >= 3`.
pub fn bounds(m: usize, n: u64) -> Result<BoundsPair> {
    if m < 3 {
        return Err(Error::Domain(format!("bounds need m >= 3, got m = {m}")));
    }
    // only the first angle is needed, so skip the full table
    let p = 128;
    let alpha0 = Float::with_val(p + GUARD_BITS, crate::numeric::pi(p + GUARD_BITS) / (2 * (m as u64 + 1)));
    let (s0, c0) = alpha0.sin_cos(Float::new(p + GUARD_BITS));
    let s0_2 = Float::with_val(p, s0.square_ref());
    let c0_2 = Float::with_val(p, c0.square_ref());
    // x_00 = 1 - (4/m)(1 - c_0^2) = 1 - 4 s_0^2 / m
    let x00 = Float::with_val(p, 1u32 - Float::with_val(p, &s0_2 * 4u32) / m as u64);
    let xn = pow_by_squaring(&x00, n);
    let limit = limit_value(m, p);
    let lower = Float::with_val(p, &limit * Float::with_val(p, 1u32 - &xn));
    let m1 = (m as u64 + 1) * (m as u64 + 1) * 2;
    let coef = c0_2 / Float::with_val(p, s0_2.square() * m1);
    let upper = Float::with_val(p, &limit - Float::with_val(p, coef * &xn));
    Ok(BoundsPair {
        lower: lower.to_f64(),
        upper: upper.to_f64(),
    })
}

/// Default step probability of the lazy chain, `m/(m+1)` (hold with
/// probability `1/(m+1)`).
pub fn default_laziness(m: usize) -> Rational {
    Rational::from((m as u64, m as u64 + 1))
}

/// Expected inversions of the lazy chain that moves with probability `p`:
/// `sum_k C(n,k) p^k (1-p)^{n-k} I_{m,k}`, exact.
pub fn aperiodic_expected(m: usize, n: u64, p: &Rational, budget: WorkBudget) -> Result<Rational> {
    if *p <= 0 || *p > 1 {
        return invalid("move probability must lie in (0, 1]");
    }
    let exact = chain_dp::expected_inversions_trajectory(m, n, budget)?;
    let q = 1 - p.clone();
    let mut total = Rational::new();
    let mut choose = Integer::from(1);
    for (k, ik) in exact.iter().enumerate() {
        let k = k as u64;
        if k > 0 {
            choose *= n - k + 1;
            choose /= k;
        }
        if ik.is_zero() {
            continue;
        }
        let pk = Rational::from(rug::ops::Pow::pow(p, k as u32));
        let qk = Rational::from(rug::ops::Pow::pow(&q, (n - k) as u32));
        total += (pk * qk) * ik * &choose;
    }
    Ok(total)
}
