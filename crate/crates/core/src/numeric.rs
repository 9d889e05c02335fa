//! Multiple-precision helpers shared by the spectral code.
//!
//! All floating values are MPFR numbers carrying an explicit precision. At
//! 53 bits they round exactly like IEEE doubles (ignoring the exponent range),
//! so one code path serves both the "double" and the extended settings.

use rug::{Float, Integer, Rational};

/// Smallest working precision accepted anywhere in the crate.
pub const MIN_PRECISION: u32 = 53;

/// Extra bits used when deriving stored constants, so that the stored value
/// is (almost always) the correctly rounded one.
pub(crate) const GUARD_BITS: u32 = 32;

pub fn float(prec: u32, v: impl Into<f64>) -> Float {
    Float::with_val(prec, v.into())
}

pub fn float_from_rational(prec: u32, q: &Rational) -> Float {
    Float::with_val(prec, q)
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, rug::float::Constant::Pi)
}

/// `base^exp` by repeated squaring at the precision of `base`.
pub fn pow_by_squaring(base: &Float, mut exp: u64) -> Float {
    let prec = base.prec();
    let mut acc = Float::with_val(prec, 1);
    let mut sq = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= &sq;
        }
        exp >>= 1;
        if exp > 0 {
            sq.square_mut();
        }
    }
    acc
}

/// Error-free transformation `a + b = s + e` (Knuth's TwoSum). Valid for any
/// binary floating format with round-to-nearest, MPFR included.
fn two_sum(a: &Float, b: &Float) -> (Float, Float) {
    let prec = a.prec().max(b.prec());
    let s = Float::with_val(prec, a + b);
    let bp = Float::with_val(prec, &s - a);
    let ap = Float::with_val(prec, &s - &bp);
    let db = Float::with_val(prec, b - &bp);
    let da = Float::with_val(prec, a - &ap);
    (s, da + db)
}

/// Running sum with a second word holding the accumulated rounding error.
#[derive(Debug, Clone)]
pub struct CompensatedSum {
    sum: Float,
    err: Float,
}

impl CompensatedSum {
    pub fn new(prec: u32) -> Self {
        CompensatedSum {
            sum: Float::with_val(prec, 0),
            err: Float::with_val(prec, 0),
        }
    }

    pub fn add(&mut self, x: &Float) {
        let (s, e) = two_sum(&self.sum, x);
        self.sum = s;
        self.err += e;
    }

    /// Folds another partial sum into this one.
    pub fn merge(&mut self, other: &CompensatedSum) {
        let (s, e) = two_sum(&self.sum, &other.sum);
        self.sum = s;
        self.err += e;
        self.err += &other.err;
    }

    pub fn value(&self) -> Float {
        Float::with_val(self.sum.prec(), &self.sum + &self.err)
    }
}

/// Reduces partial sums with a fixed-shape pairwise tree. The result depends
/// only on the order of `parts`, never on how they were produced.
pub fn pairwise_reduce(mut parts: Vec<CompensatedSum>, prec: u32) -> CompensatedSum {
    if parts.is_empty() {
        return CompensatedSum::new(prec);
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.merge(&b);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap()
}

/// Compensated sum of a slice, in slice order.
pub fn sum_slice(xs: &[Float], prec: u32) -> CompensatedSum {
    let mut acc = CompensatedSum::new(prec);
    for x in xs {
        acc.add(x);
    }
    acc
}

/// Nearest double to `q` (`Rational::to_f64` truncates instead).
pub fn rational_to_f64(q: &Rational) -> f64 {
    Float::with_val(MIN_PRECISION, q).to_f64()
}

/// Exact comparison of a rational against a double.
pub fn cmp_rational_f64(q: &Rational, x: f64) -> Option<std::cmp::Ordering> {
    Rational::from_f64(x).map(|r| q.cmp(&r))
}

/// Decimal rendering of a rational with `digits` significant digits,
/// trailing zeros trimmed ("3/2" -> "1.5").
pub fn rational_to_decimal(q: &Rational, digits: usize) -> String {
    if q.denom() == &Integer::from(1) {
        return q.numer().to_string();
    }
    // Enough bits for `digits` decimal digits plus slack.
    let prec = (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 16;
    let f = Float::with_val(prec, q);
    trim_float_string(&f.to_string_radix(10, Some(digits)))
}

/// Decimal rendering of a float with `digits` significant digits.
pub fn float_to_decimal(f: &Float, digits: usize) -> String {
    trim_float_string(&f.to_string_radix(10, Some(digits)))
}

fn trim_float_string(raw: &str) -> String {
    // MPFR gives "d.ddddde±x" forms; normalise to plain decimal when the
    // exponent is moderate.
    let (mantissa, exp) = match raw.split_once('e') {
        Some((m, e)) => (m.to_string(), e.parse::<i64>().unwrap_or(0)),
        None => (raw.to_string(), 0),
    };
    let neg = mantissa.starts_with('-');
    let body = mantissa.trim_start_matches('-');
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    let digits: String = format!("{int_part}{frac_part}");
    let point = int_part.len() as i64 + exp;
    let out = if exp.abs() > 30 {
        let frac = frac_part.trim_end_matches('0');
        if frac.is_empty() {
            format!("{int_part}e{exp}")
        } else {
            format!("{int_part}.{frac}e{exp}")
        }
    } else if point <= 0 {
        let s = format!("0.{}{}", "0".repeat((-point) as usize), digits);
        trim_zeros(&s)
    } else if point as usize >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (a, b) = digits.split_at(point as usize);
        trim_zeros(&format!("{a}.{b}"))
    };
    if neg && out.chars().any(|c| c.is_ascii_digit() && c != '0') {
        format!("-{out}")
    } else {
        out
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Parses an exact decimal or fraction: "3", "-2/7", "0.125", "1e-3".
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if s.contains('/') {
        return s.parse::<Rational>().ok();
    }
    let (mant, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (s, 0),
    };
    let neg = mant.starts_with('-');
    let mant = mant.trim_start_matches(['-', '+']);
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{ip}{fp}");
    let num: Integer = digits.parse().ok()?;
    let scale = exp - fp.len() as i32;
    let mut q = Rational::from(num);
    if scale >= 0 {
        q *= Integer::from(Integer::u_pow_u(10, scale as u32));
    } else {
        q /= Integer::from(Integer::u_pow_u(10, (-scale) as u32));
    }
    if neg {
        q = -q;
    }
    Some(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squaring_matches_mpfr_pow() {
        let x = Float::with_val(128, 0.987654321);
        for n in [0u64, 1, 2, 3, 17, 1000, 123_457] {
            let a = pow_by_squaring(&x, n);
            let b = Float::with_val(128, rug::ops::Pow::pow(x.clone(), n as u32));
            let diff = Float::with_val(128, &a - &b);
            let rel = Float::with_val(128, diff / &b).abs();
            assert!(rel < 1e-30, "n={n}");
        }
    }

    #[test]
    fn compensated_sum_recovers_cancelled_bits() {
        let prec = 53;
        let mut acc = CompensatedSum::new(prec);
        acc.add(&float(prec, 1e16));
        acc.add(&float(prec, 1.0));
        acc.add(&float(prec, -1e16));
        assert_eq!(acc.value(), 1.0);
    }

    #[test]
    fn pairwise_is_deterministic_in_order() {
        let xs: Vec<Float> = (1..100).map(|i| float(53, 1.0 / i as f64)).collect();
        let parts: Vec<_> = xs.chunks(7).map(|c| sum_slice(c, 53)).collect();
        let a = pairwise_reduce(parts.clone(), 53).value();
        let b = pairwise_reduce(parts, 53).value();
        assert_eq!(a, b);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(rational_to_decimal(&Rational::from((3, 2)), 30), "1.5");
        assert_eq!(rational_to_decimal(&Rational::from((-1, 8)), 30), "-0.125");
        assert_eq!(rational_to_decimal(&Rational::from(7), 30), "7");
        assert!(rational_to_decimal(&Rational::from((1, 3)), 10).starts_with("0.3333333333"));
        assert_eq!(float_to_decimal(&float(53, 2508.5), 10), "2508.5");
    }

    #[test]
    fn rounds_rationals_to_nearest() {
        assert_eq!(rational_to_f64(&Rational::from((13990, 1000))), 13.99);
        assert_eq!(rational_to_f64(&Rational::from((1, 3))), 1.0 / 3.0);
    }

    #[test]
    fn parses_exact_numbers() {
        assert_eq!(parse_rational("0.125"), Some(Rational::from((1, 8))));
        assert_eq!(parse_rational("2/3"), Some(Rational::from((2, 3))));
        assert_eq!(parse_rational("-4"), Some(Rational::from(-4)));
        assert_eq!(parse_rational("1e-3"), Some(Rational::from((1, 1000))));
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
    }
}
