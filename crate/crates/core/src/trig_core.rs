//! Spectral constants of the adjacent-transposition walk on `S_{m+1}`.
//!
//! For `0 <= k <= m` let `alpha_k = (2k+1) pi / (2m+2)`, `c_k = cos alpha_k`,
//! `s_k = sin alpha_k`, and `x_{jk} = 1 - (4/m)(1 - c_j c_k)`. The values
//! `x_{jk}` with `j + k != m` are eigenvalues of the transition matrix; the
//! pairs with `j + k = m` have `c_j + c_k = 0` and carry no spectral claim.
//! (A larger family, `1 - (2/m)(2 - cos(p pi/(m+1)) - cos(q pi/(m+1)))` for
//! `p != q`, is also known to be in the spectrum; it is not enumerated here.)

use rug::ops::Pow;
use rug::Float;

use crate::error::{invalid, Result};
use crate::numeric::{pairwise_reduce, pi, sum_slice, CompensatedSum, GUARD_BITS, MIN_PRECISION};
use crate::oracle;

/// Precomputed `alpha_k`, `c_k`, `s_k` for one `m` at a fixed precision.
///
/// Besides the raw cosines the table keeps `1 - c_k = 2 sin^2(alpha_k/2)` and
/// `1 + c_k = 2 cos^2(alpha_k/2)`, evaluated from the half angle so that no
/// digits are lost when `c_k` is close to `±1`. The values for `k > m/2` are
/// mirrored from `m - k`, which makes `c[m-k] = -c[k]` and `s[m-k] = s[k]`
/// hold exactly.
#[derive(Debug, Clone)]
pub struct SpectralTable {
    m: usize,
    precision: u32,
    alphas: Vec<Float>,
    c: Vec<Float>,
    s: Vec<Float>,
    one_minus_c: Vec<Float>,
    one_plus_c: Vec<Float>,
}

impl SpectralTable {
    pub fn new(m: usize, precision: u32) -> Result<Self> {
        if m == 0 {
            return invalid("m must be at least 1");
        }
        if precision < MIN_PRECISION {
            return invalid(format!("precision must be at least {MIN_PRECISION} bits, got {precision}"));
        }
        let hi = precision + GUARD_BITS;
        let round = |x: Float| Float::with_val(precision, x);
        let step = Float::with_val(hi, pi(hi) / (2 * (m as u64 + 1)));

        let mut alphas = Vec::with_capacity(m + 1);
        for k in 0..=m {
            alphas.push(round(Float::with_val(hi, &step * (2 * k as u64 + 1))));
        }

        let zero = Float::with_val(precision, 0);
        let mut c = vec![zero.clone(); m + 1];
        let mut s = vec![zero.clone(); m + 1];
        let mut omc = vec![zero.clone(); m + 1];
        let mut opc = vec![zero; m + 1];
        for k in 0..=m / 2 {
            let alpha = Float::with_val(hi, &step * (2 * k as u64 + 1));
            let half = Float::with_val(hi, &alpha / 2u32);
            // cos(alpha_k) = sin((m - 2k) pi / (2m + 2)), accurate near zero.
            let ck = round(Float::with_val(hi, &step * (m as u64 - 2 * k as u64)).sin());
            let sk = round(alpha.sin());
            let sin_half = half.clone().sin();
            let cos_half = half.cos();
            let omck = round(Float::with_val(hi, sin_half.square() * 2u32));
            let opck = round(Float::with_val(hi, cos_half.square() * 2u32));
            let mirror = m - k;
            c[mirror] = Float::with_val(precision, -&ck);
            s[mirror] = sk.clone();
            omc[mirror] = opck.clone();
            opc[mirror] = omck.clone();
            c[k] = ck;
            s[k] = sk;
            omc[k] = omck;
            opc[k] = opck;
        }
        Ok(SpectralTable {
            m,
            precision,
            alphas,
            c,
            s,
            one_minus_c: omc,
            one_plus_c: opc,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn alphas(&self) -> &[Float] {
        &self.alphas
    }

    pub fn c(&self) -> &[Float] {
        &self.c
    }

    pub fn s(&self) -> &[Float] {
        &self.s
    }

    pub fn one_minus_c(&self) -> &[Float] {
        &self.one_minus_c
    }

    pub fn one_plus_c(&self) -> &[Float] {
        &self.one_plus_c
    }

    fn check_index(&self, j: usize, k: usize) -> Result<()> {
        if j > self.m || k > self.m {
            return invalid(format!("index ({j}, {k}) out of range 0..={}", self.m));
        }
        Ok(())
    }

    /// `1 - c_j c_k`, written as `((1-c_j)(1+c_k) + (1+c_j)(1-c_k)) / 2` so
    /// that both summands are nonnegative.
    pub(crate) fn one_minus_cc(&self, j: usize, k: usize) -> Float {
        let p = self.precision;
        let a = Float::with_val(p, &self.one_minus_c[j] * &self.one_plus_c[k]);
        let b = Float::with_val(p, &self.one_plus_c[j] * &self.one_minus_c[k]);
        Float::with_val(p, a + b) / 2u32
    }

    pub(crate) fn eigenvalue_unchecked(&self, j: usize, k: usize) -> Float {
        let p = self.precision;
        let d = self.one_minus_cc(j, k) * 4u32 / self.m as u32;
        Float::with_val(p, 1u32 - d)
    }

    /// `x_{jk} = 1 - (4/m)(1 - c_j c_k)`, defined for every pair; only pairs
    /// with [`is_certified_eigenvalue`](Self::is_certified_eigenvalue) are
    /// known eigenvalues.
    pub fn eigenvalue(&self, j: usize, k: usize) -> Result<Float> {
        self.check_index(j, k)?;
        Ok(self.eigenvalue_unchecked(j, k))
    }

    pub fn is_certified_eigenvalue(&self, j: usize, k: usize) -> bool {
        j + k != self.m
    }

    /// Distinct certified eigenvalues (merged when closer than `tol`), each
    /// with one representative pair.
    pub fn certified_eigenvalues(&self, tol: f64) -> Vec<(usize, usize, Float)> {
        let mut out: Vec<(usize, usize, Float)> = Vec::new();
        for j in 0..=self.m {
            for k in j..=self.m {
                if !self.is_certified_eigenvalue(j, k) {
                    continue;
                }
                let x = self.eigenvalue_unchecked(j, k);
                let dup = out
                    .iter()
                    .any(|(_, _, y)| Float::with_val(self.precision, &x - y).abs() <= tol);
                if !dup {
                    out.push((j, k, x));
                }
            }
        }
        out
    }
}

/// Outcome of evaluating one closed-form trigonometric sum.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub statement: &'static str,
    pub expected: f64,
    pub computed: Float,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub m: usize,
    pub precision: u32,
    pub tolerance: f64,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

/// Double sum over `0 <= j, k <= m` with compensated row sums and a pairwise
/// reduction over rows.
fn double_sum(table: &SpectralTable, term: impl Fn(usize, usize) -> Float) -> Float {
    let p = table.precision;
    let rows: Vec<CompensatedSum> = (0..=table.m)
        .map(|j| {
            let row: Vec<Float> = (0..=table.m).map(|k| term(j, k)).collect();
            sum_slice(&row, p)
        })
        .collect();
    pairwise_reduce(rows, p).value()
}

/// Evaluates the seven trigonometric sums that the spectral formula relies
/// on and compares each with its closed form.
pub fn verify_identities(table: &SpectralTable, tol: f64) -> Result<IdentityReport> {
    if tol.is_nan() || tol <= 0.0 {
        return invalid("tolerance must be positive");
    }
    let m = table.m;
    let p = table.precision;
    let mf = m as f64;
    let m1 = mf + 1.0;
    let (c, s, omc) = (&table.c, &table.s, &table.one_minus_c);
    fn fv<T>(p: u32, x: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(p, x)
    }

    let single = |term: &dyn Fn(usize) -> Float, upto: usize| -> Float {
        let xs: Vec<Float> = (0..=upto).map(term).collect();
        sum_slice(&xs, p).value()
    };

    let mut checks = Vec::with_capacity(7);
    let mut push = |name, statement, expected: f64, computed: Float| {
        let residual = fv(p, &computed - expected).abs().to_f64();
        checks.push(IdentityCheck {
            name,
            statement,
            expected,
            computed,
            residual,
            passed: residual < tol,
        });
    };

    push(
        "inv_one_minus_c",
        "sum_j 1/(1-c_j) = (m+1)^2",
        m1 * m1,
        single(&|j| fv(p, 1u32 / &omc[j]), m),
    );
    push(
        "c_over_one_minus_c",
        "sum_j c_j/(1-c_j) = m(m+1)",
        mf * m1,
        single(&|j| fv(p, &c[j] / &omc[j]), m),
    );
    // Empty sum for m = 0 never happens (m >= 1), and (m-1)/2 floors to 0 for m = 1, 2.
    push(
        "half_cot_squared",
        "sum_{k<=(m-1)/2} c_k^2/s_k^2 = m(m+1)/2",
        mf * m1 / 2.0,
        single(&|k| fv(p, c[k].clone().square() / s[k].clone().square()), (m - 1) / 2),
    );
    push(
        "spectral_weights",
        "sum_{j,k} (c_j+c_k)^2/(s_j^2 s_k^2) = 2m(m+1)^3",
        2.0 * mf * m1.powi(3),
        double_sum(table, |j, k| {
            let num = fv(p, &c[j] + &c[k]).square();
            let den = fv(p, s[j].clone().square() * s[k].clone().square());
            fv(p, num / den)
        }),
    );
    push(
        "mixed_weights",
        "sum_{j,k} (c_j+c_k)(1-c_j c_k)/((1-c_j)(1-c_k)) = 2m(m+1)^2",
        2.0 * mf * m1 * m1,
        double_sum(table, |j, k| {
            let num = fv(p, fv(p, &c[j] + &c[k]) * table.one_minus_cc(j, k));
            fv(p, num / fv(p, &omc[j] * &omc[k]))
        }),
    );
    push(
        "squared_product_weights",
        "sum_{j,k} (1-c_j c_k)^2/((1-c_j)(1-c_k)) = (2m+1)(m+1)^2",
        (2.0 * mf + 1.0) * m1 * m1,
        double_sum(table, |j, k| {
            let num = table.one_minus_cc(j, k).square();
            fv(p, num / fv(p, &omc[j] * &omc[k]))
        }),
    );
    push(
        "constant_term",
        "sum_{j,k} (c_j+c_k)/((1-c_j)(1-c_k)) = 2m(m+1)^3",
        2.0 * mf * m1.powi(3),
        double_sum(table, |j, k| fv(p, fv(p, &c[j] + &c[k]) / fv(p, &omc[j] * &omc[k]))),
    );

    Ok(IdentityReport {
        m,
        precision: p,
        tolerance: tol,
        checks,
    })
}

/// One certified eigenvalue checked against the full transition matrix.
#[derive(Debug, Clone)]
pub struct EigenCheck {
    pub j: usize,
    pub k: usize,
    pub x: f64,
    /// `det(P - x Id)`, evaluated at the certification precision.
    pub determinant: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct SpectralCertificate {
    pub m: usize,
    pub states: usize,
    pub checks: Vec<EigenCheck>,
}

impl SpectralCertificate {
    pub fn all_passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

/// Builds the `(m+1)! x (m+1)!` transition matrix and checks that every
/// certified `x_{jk}` is a root of its characteristic polynomial.
///
/// Only feasible for `m <= 4`.
pub fn certify_spectrum(m: usize, precision: u32, tol: f64) -> Result<SpectralCertificate> {
    if m > 4 {
        return invalid("spectral certification is limited to m <= 4");
    }
    let table = SpectralTable::new(m, precision.max(256))?;
    let p = table.precision;
    let (states, matrix) = oracle::transition_matrix(m)?;
    let mut checks = Vec::new();
    for (j, k, x) in table.certified_eigenvalues(1e-30) {
        let det = shifted_determinant(&matrix, &x, p);
        let det_f = det.to_f64();
        checks.push(EigenCheck {
            j,
            k,
            x: x.to_f64(),
            determinant: det_f,
            passed: det_f.abs() <= tol,
        });
    }
    Ok(SpectralCertificate {
        m,
        states: states.len(),
        checks,
    })
}

/// `det(P - x Id)` by Gaussian elimination with partial pivoting.
fn shifted_determinant(matrix: &[Vec<rug::Rational>], x: &Float, prec: u32) -> Float {
    let n = matrix.len();
    let mut a: Vec<Vec<Float>> = matrix
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(|(c, v)| {
                    let mut e = Float::with_val(prec, v);
                    if r == c {
                        e -= x;
                    }
                    e
                })
                .collect()
        })
        .collect();
    let mut det = Float::with_val(prec, 1);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| {
                let a1 = Float::with_val(prec, a[r1][col].abs_ref());
                let a2 = Float::with_val(prec, a[r2][col].abs_ref());
                a1.partial_cmp(&a2).unwrap()
            })
            .unwrap();
        if a[pivot][col].is_zero() {
            return Float::with_val(prec, 0);
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= &a[col][col];
        let (top, bottom) = a.split_at_mut(col + 1);
        let prow = &top[col];
        for row in bottom.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let factor = Float::with_val(prec, &row[col] / &prow[col]);
            for c in col..n {
                let delta = Float::with_val(prec, &factor * &prow[c]);
                row[c] -= delta;
            }
        }
    }
    det
}

/// Residual scale used by the identity sweep: `(m+1)^3 2^{-(precision - slack)}`.
pub fn identity_tolerance(m: usize, precision: u32, slack_bits: i32) -> f64 {
    let m1 = (m + 1) as f64;
    m1.powi(3) * Float::with_val(64, 2u32).pow(-(precision as i32) + slack_bits).to_f64()
}
