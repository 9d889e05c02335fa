//! Exact generating functions `I_m(t) = sum_n I_{m,n} t^n`.
//!
//! The recursion on the triangle is a linear system
//! `(m Id - t B) G(t) = t/(1-t) e_diag` with `B = m A` an integer matrix, so
//! `I_m(t) = sum_cells G` is rational. It is obtained from two determinants
//! computed by fraction-free elimination over `Z[t]`:
//!
//! ```text
//! 1^T M^-1 e = -det [[M, e], [1^T, 0]] / det M
//! ```

use std::fmt;

use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::chain_dp::{cell_count, cell_index, for_each_neighbor};
use crate::error::{invalid, Error, Result};
use crate::trig_core::SpectralTable;

/// Largest state dimension `m(m+1)/2` accepted by [`build_gf`] (m = 15).
pub const DEFAULT_MAX_DIMENSION: usize = 120;

/// Dense polynomial over the rationals, ascending degree, no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial::constant(Rational::from(1))
    }

    pub fn constant(c: Rational) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn from_i64s(coeffs: &[i64]) -> Self {
        Polynomial::new(coeffs.iter().map(|&c| Rational::from(c)).collect())
    }

    pub fn from_integers(coeffs: &[Integer]) -> Self {
        Polynomial::new(coeffs.iter().map(|c| Rational::from(c.clone())).collect())
    }

    /// `1 - c t`
    fn one_minus(c: &Rational) -> Self {
        Polynomial::new(vec![Rational::from(1), Rational::from(-c)])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `t^k` (zero past the degree).
    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        let mut acc = Rational::new();
        for c in self.coeffs.iter().rev() {
            acc *= t;
            acc += c;
        }
        acc
    }

    pub fn eval_float(&self, t: &Float) -> Float {
        let p = t.prec();
        let mut acc = Float::with_val(p, 0);
        for c in self.coeffs.iter().rev() {
            acc *= t;
            acc += Float::with_val(p, c);
        }
        acc
    }

    pub fn scale(&self, s: &Rational) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| Rational::from(c * s)).collect())
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![Rational::new(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += Rational::from(a * b);
            }
        }
        Polynomial::new(out)
    }

    pub fn pow(&self, e: usize) -> Polynomial {
        let mut acc = Polynomial::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Euclidean division `self = q * d + r`, `deg r < deg d`.
    pub fn div_rem(&self, d: &Polynomial) -> Result<(Polynomial, Polynomial)> {
        let Some(dd) = d.degree() else {
            return Err(Error::Domain("polynomial division by zero".into()));
        };
        let lead = d.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Polynomial::zero(), self.clone()));
        }
        let mut q = vec![Rational::new(); rem.len() - dd];
        for k in (0..q.len()).rev() {
            let c = Rational::from(&rem[k + dd] / &lead);
            if !c.is_zero() {
                for (i, di) in d.coeffs.iter().enumerate() {
                    rem[k + i] -= Rational::from(&c * di);
                }
            }
            q[k] = c;
        }
        rem.truncate(dd);
        Ok((Polynomial::new(q), Polynomial::new(rem)))
    }

    /// Positive rational `s` with `s * self` integral and content-free.
    fn primitive_scale(&self) -> Rational {
        let mut lcm = Integer::from(1);
        for c in &self.coeffs {
            lcm.lcm_mut(c.denom());
        }
        let mut g = Integer::new();
        for c in &self.coeffs {
            let v = Integer::from(c.numer() * &lcm) / c.denom();
            g.gcd_mut(&v);
        }
        if g.is_zero() {
            return Rational::from(1);
        }
        Rational::from((lcm, g))
    }

    /// Greatest common divisor, monic.
    pub fn gcd(&self, other: &Polynomial) -> Polynomial {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b).expect("nonzero divisor");
            a = b;
            // keep remainders primitive to limit coefficient growth
            b = r.scale(&r.primitive_scale());
        }
        match a.leading() {
            None => Polynomial::zero(),
            Some(l) => {
                let inv = Rational::from(l.recip_ref());
                a.scale(&inv)
            }
        }
    }

    /// Terms as `c*t^k`, ascending, e.g. `2 - t - 2*t^2 + t^3`.
    pub fn to_canonical_string(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = *c < 0;
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let a = Rational::from(c.abs_ref());
            let var = match k {
                0 => String::new(),
                1 => "t".into(),
                _ => format!("t^{k}"),
            };
            if k == 0 {
                out.push_str(&a.to_string());
            } else if a == 1 {
                out.push_str(&var);
            } else {
                out.push_str(&format!("{a}*{var}"));
            }
        }
        out
    }

    fn term_count(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

/// Reduced quotient of polynomials, expandable at `t = 0`.
///
/// Normal form: `gcd(num, den) = 1`, `den` has integer coprime coefficients
/// and a positive constant term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalFunction {
    numerator: Polynomial,
    denominator: Polynomial,
}

impl RationalFunction {
    /// Reduces and normalises `num / den`.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        if den.coeff(0).is_zero() {
            return Err(Error::Domain("denominator vanishes at t = 0".into()));
        }
        let g = num.gcd(&den);
        let (num, den) = if g.degree().unwrap_or(0) > 0 {
            (num.div_rem(&g)?.0, den.div_rem(&g)?.0)
        } else {
            (num, den)
        };
        let mut s = den.primitive_scale();
        if den.coeff(0) < 0 {
            s = -s;
        }
        Ok(RationalFunction {
            numerator: num.scale(&s),
            denominator: den.scale(&s),
        })
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.numerator
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.denominator
    }

    pub fn eval(&self, t: &Rational) -> Result<Rational> {
        let d = self.denominator.eval(t);
        if d.is_zero() {
            return Err(Error::Domain(format!("pole at t = {t}")));
        }
        Ok(self.numerator.eval(t) / d)
    }

    /// `"num / den"`; parenthesised sides when they have several terms.
    pub fn to_canonical_string(&self) -> String {
        let side = |p: &Polynomial| {
            let s = p.to_canonical_string();
            if p.term_count() > 1 {
                format!("({s})")
            } else {
                s
            }
        };
        if self.denominator == Polynomial::one() {
            return side(&self.numerator);
        }
        format!("{} / {}", side(&self.numerator), side(&self.denominator))
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

type ZPoly = Vec<Integer>;

fn ztrim(mut p: ZPoly) -> ZPoly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn zmul(a: &ZPoly, b: &ZPoly) -> ZPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Integer::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    ztrim(out)
}

fn zsub(mut a: ZPoly, b: &ZPoly) -> ZPoly {
    if a.len() < b.len() {
        a.resize(b.len(), Integer::new());
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x -= y;
    }
    ztrim(a)
}

/// `a / b` when the quotient is known to lie in `Z[t]`.
fn zdiv_exact(a: &ZPoly, b: &ZPoly) -> ZPoly {
    if a.is_empty() {
        return Vec::new();
    }
    let db = b.len() - 1;
    let lead = &b[db];
    let mut rem = a.clone();
    let mut q = vec![Integer::new(); a.len() - db];
    for k in (0..q.len()).rev() {
        let c = Integer::from(&rem[k + db] / lead);
        if !c.is_zero() {
            for (i, bi) in b.iter().enumerate() {
                rem[k + i] -= Integer::from(&c * bi);
            }
        }
        q[k] = c;
    }
    debug_assert!(rem.iter().all(|c| c.is_zero()), "inexact polynomial division");
    ztrim(q)
}

/// The bordered matrix `[[m Id - t B, e_diag], [1^T, 0]]` over `Z[t]`.
fn bordered_system(m: usize) -> Vec<Vec<ZPoly>> {
    let d = cell_count(m);
    let mut a = vec![vec![ZPoly::new(); d + 1]; d + 1];
    for j in 0..m {
        for i in 0..=j {
            let r = cell_index(i, j);
            let mut degree = 0i64;
            for_each_neighbor(m, i, j, |c| {
                a[r][c] = vec![Integer::new(), Integer::from(-1)];
                degree += 1;
            });
            let delta = i64::from(i == j);
            let diag = m as i64 - degree - 2 * delta;
            a[r][r] = ztrim(vec![Integer::from(m), Integer::from(-diag)]);
            if i == j {
                a[r][d] = vec![Integer::from(1)];
            }
        }
    }
    for entry in a[d].iter_mut().take(d) {
        *entry = vec![Integer::from(1)];
    }
    a
}

/// Bareiss elimination without row exchanges. Returns the leading
/// principal minors of orders `dim - 1` and `dim`.
///
/// Every leading minor of `m Id - t B` has constant term `m^k`, so the
/// natural pivots are never zero; a zero pivot is reported as an internal
/// error.
fn bareiss_minors(mut a: Vec<Vec<ZPoly>>) -> Result<(ZPoly, ZPoly)> {
    let dim = a.len();
    let mut prev: ZPoly = vec![Integer::from(1)];
    for k in 0..dim - 1 {
        if a[k][k].is_empty() {
            return Err(Error::Internal(format!("singular pivot at row {k}")));
        }
        let (top, rest) = a.split_at_mut(k + 1);
        let pivot_row = &top[k];
        let pivot = &pivot_row[k];
        for row in rest.iter_mut() {
            let factor = std::mem::take(&mut row[k]);
            for j in k + 1..dim {
                let cur = std::mem::take(&mut row[j]);
                if cur.is_empty() && (factor.is_empty() || pivot_row[j].is_empty()) {
                    continue;
                }
                let mut v = zmul(pivot, &cur);
                if !factor.is_empty() && !pivot_row[j].is_empty() {
                    v = zsub(v, &zmul(&factor, &pivot_row[j]));
                }
                row[j] = zdiv_exact(&v, &prev);
            }
        }
        prev = a[k][k].clone();
    }
    let last = a[dim - 1][dim - 1].clone();
    Ok((prev, last))
}

/// Exact `I_m(t)`; the state dimension must not exceed
/// [`DEFAULT_MAX_DIMENSION`].
pub fn build_gf(m: usize) -> Result<RationalFunction> {
    build_gf_with_limit(m, DEFAULT_MAX_DIMENSION)
}

pub fn build_gf_with_limit(m: usize, max_dimension: usize) -> Result<RationalFunction> {
    if m == 0 {
        return invalid("m must be at least 1");
    }
    let d = cell_count(m);
    if d > max_dimension {
        return Err(Error::BudgetExceeded {
            operation: "generating function",
            required: d as u128,
            budget: max_dimension as u64,
        });
    }
    let (det_m, det_b) = bareiss_minors(bordered_system(m))?;
    // I = t/(1-t) * (-det_b / det_m)
    let t = Polynomial::from_i64s(&[0, 1]);
    let num = t.mul(&Polynomial::from_integers(&det_b)).scale(&Rational::from(-1));
    let den = Polynomial::from_i64s(&[1, -1]).mul(&Polynomial::from_integers(&det_m));
    RationalFunction::new(num, den)
}

/// First `order + 1` Taylor coefficients at `t = 0`.
pub fn series(rf: &RationalFunction, order: usize) -> Vec<Rational> {
    let den = rf.denominator();
    let d0 = den.coeff(0);
    let mut out: Vec<Rational> = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let mut acc = rf.numerator().coeff(n);
        for i in 1..=n.min(den.degree().unwrap_or(0)) {
            acc -= Rational::from(&den.coeffs()[i] * &out[n - i]);
        }
        out.push(acc / &d0);
    }
    out
}

/// `F(t) -> 1/(1 - q t) F(p t / (1 - q t))` with `q = 1 - p`: the
/// generating function of the chain that moves with probability `p` and
/// holds otherwise.
pub fn aperiodic_gf(rf: &RationalFunction, m: usize, p: &Rational) -> Result<RationalFunction> {
    if m == 0 {
        return invalid("m must be at least 1");
    }
    if *p <= 0 || *p > 1 {
        return invalid("move probability must lie in (0, 1]");
    }
    if *p == 1 {
        return Ok(rf.clone());
    }
    let q = 1 - p.clone();
    let k = rf
        .numerator()
        .degree()
        .unwrap_or(0)
        .max(rf.denominator().degree().unwrap_or(0));
    let pt = Polynomial::new(vec![Rational::new(), p.clone()]);
    let hold = Polynomial::one_minus(&q);
    // sum_i a_i (p t)^i (1 - q t)^(k - i)
    let substitute = |poly: &Polynomial| {
        let mut acc = Polynomial::zero();
        for (i, a) in poly.coeffs().iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let term = pt.pow(i).mul(&hold.pow(k - i)).scale(a);
            acc = acc.add(&term);
        }
        acc
    };
    let num = substitute(rf.numerator());
    let den = hold.mul(&substitute(rf.denominator()));
    RationalFunction::new(num, den)
}

/// Where a denominator root came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PoleSource {
    /// `t = 1`
    Unit,
    /// `t = 1/x_{jk}`
    Eigen { j: usize, k: usize, x: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleMatch {
    pub root: f64,
    pub multiplicity: usize,
    pub source: PoleSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleReport {
    pub m: usize,
    pub denominator_degree: usize,
    pub matched: Vec<PoleMatch>,
    pub unmatched_degree: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Default tolerance for [`pole_check`].
pub const POLE_TOLERANCE: f64 = 1e-8;

const POLE_PRECISION: u32 = 128;

fn float_coeffs(p: &Polynomial, prec: u32) -> Vec<Float> {
    p.coeffs().iter().map(|c| Float::with_val(prec, c)).collect()
}

fn horner(coeffs: &[Float], t: &Float) -> (Float, Float) {
    let p = t.prec();
    let mut acc = Float::with_val(p, 0);
    let mut scale = Float::with_val(p, 0);
    let abs_t = Float::with_val(p, t.abs_ref());
    for c in coeffs.iter().rev() {
        acc *= t;
        acc += c;
        scale *= &abs_t;
        scale += Float::with_val(p, c.abs_ref());
    }
    (acc, scale)
}

/// Divides by `(t - r)`, dropping the remainder.
fn deflate(coeffs: &[Float], r: &Float) -> Vec<Float> {
    let p = r.prec();
    let n = coeffs.len();
    let mut out = vec![Float::with_val(p, 0); n - 1];
    let mut carry = Float::with_val(p, 0);
    for i in (1..n).rev() {
        carry = Float::with_val(p, &carry * r) + &coeffs[i];
        out[i - 1] = carry.clone();
    }
    out
}

/// Accounts for every denominator root by `t = 1` or `t = 1/x_{jk}` with a
/// certified eigenvalue `x_{jk}`, deflating matched roots one at a time.
pub fn pole_check(rf: &RationalFunction, table: &SpectralTable, tol: f64) -> Result<PoleReport> {
    pole_check_impl(rf, table, None, tol)
}

/// [`pole_check`] for the output of [`aperiodic_gf`] with move probability
/// `p`: the candidates are `1/(1 - p + p x_{jk})`.
pub fn pole_check_lazy(rf: &RationalFunction, table: &SpectralTable, p: &Rational, tol: f64) -> Result<PoleReport> {
    if *p <= 0 || *p > 1 {
        return invalid("move probability must lie in (0, 1]");
    }
    pole_check_impl(rf, table, Some(p), tol)
}

fn pole_check_impl(rf: &RationalFunction, table: &SpectralTable, p: Option<&Rational>, tol: f64) -> Result<PoleReport> {
    let m = table.m();
    let rebuilt;
    let table = if table.precision() < POLE_PRECISION {
        rebuilt = SpectralTable::new(m, POLE_PRECISION)?;
        &rebuilt
    } else {
        table
    };
    let prec = table.precision();
    let mut coeffs = float_coeffs(rf.denominator(), prec);
    let degree = coeffs.len().saturating_sub(1);

    let mut candidates: Vec<(Float, PoleSource)> = vec![(Float::with_val(prec, 1), PoleSource::Unit)];
    for (j, k, x) in table.certified_eigenvalues(tol) {
        let y = match p {
            Some(p) => {
                let p = Float::with_val(prec, p);
                Float::with_val(prec, 1 - &p) + Float::with_val(prec, &p * &x)
            }
            None => x.clone(),
        };
        if y.clone().abs() < tol {
            continue;
        }
        let root = Float::with_val(prec, y.recip_ref());
        candidates.push((root, PoleSource::Eigen { j, k, x: x.to_f64() }));
    }

    let mut matched = Vec::new();
    for (root, source) in candidates {
        let mut multiplicity = 0;
        while coeffs.len() > 1 {
            let (value, scale) = horner(&coeffs, &root);
            if value.abs() > scale * tol {
                break;
            }
            coeffs = deflate(&coeffs, &root);
            multiplicity += 1;
        }
        if multiplicity > 0 {
            matched.push(PoleMatch {
                root: root.to_f64(),
                multiplicity,
                source,
            });
        }
    }
    let unmatched = coeffs.len().saturating_sub(1);
    Ok(PoleReport {
        m,
        denominator_degree: degree,
        matched,
        unmatched_degree: unmatched,
        tolerance: tol,
        passed: unmatched == 0,
    })
}
