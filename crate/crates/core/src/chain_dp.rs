//! Exact recursion for the pairwise inversion probabilities.
//!
//! For `0 <= i <= j < m` let `p_{i,j}^{(n)}` be the probability that after
//! `n` steps the entries at positions `i` and `j+1` are inverted. These
//! numbers live on the triangle `G_m = {(i, j) : 0 <= i <= j < m}` of the
//! square lattice and evolve by
//!
//! ```text
//! p'_{i,j} = p_{i,j} + (1/m) sum_{(k,l) ~ (i,j)} (p_{k,l} - p_{i,j})
//!                    + (delta_{ij}/m) (1 - 2 p_{i,j})
//! ```
//!
//! where `~` is lattice adjacency inside the triangle (no wraparound). The
//! expected inversion number is the sum of all cells.
//!
//! States store integer numerators over one shared denominator. Starting
//! from zero the denominator is `m^n`, so no gcd is ever taken while
//! stepping.

use rug::{Integer, Rational};

use crate::budget::WorkBudget;
use crate::error::{invalid, Result};

/// Number of cells in the triangle `G_m`.
pub fn cell_count(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Flat index of cell `(i, j)`, `i <= j`.
#[inline]
pub fn cell_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

/// Calls `f` with the flat index of every lattice neighbour of `(i, j)`
/// inside the triangle.
#[inline]
pub(crate) fn for_each_neighbor(m: usize, i: usize, j: usize, mut f: impl FnMut(usize)) {
    if i > 0 {
        f(cell_index(i - 1, j));
    }
    if i < j {
        f(cell_index(i + 1, j));
        // (i, j-1) stays in the triangle only when i <= j-1
        f(cell_index(i, j - 1));
    }
    if j + 1 < m {
        f(cell_index(i, j + 1));
    }
}

/// Degree of `(i, j)` in `G_m`.
pub fn neighbor_count(m: usize, i: usize, j: usize) -> usize {
    let mut d = 0;
    for_each_neighbor(m, i, j, |_| d += 1);
    d
}

/// Inversion probabilities after `n` steps, as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InversionState {
    m: usize,
    n: u64,
    numer: Vec<Integer>,
    denom: Integer,
}

impl InversionState {
    /// The identity permutation: every probability is zero.
    pub fn initial(m: usize) -> Result<Self> {
        if m == 0 {
            return invalid("m must be at least 1");
        }
        Ok(InversionState {
            m,
            n: 0,
            numer: vec![Integer::new(); cell_count(m)],
            denom: Integer::from(1),
        })
    }

    /// Builds a state from explicit cell values, listed row by row in
    /// [`cell_index`] order. Used for hand-made (possibly unreachable) states.
    pub fn from_probabilities(m: usize, n: u64, cells: &[Rational]) -> Result<Self> {
        if m == 0 {
            return invalid("m must be at least 1");
        }
        if cells.len() != cell_count(m) {
            return invalid(format!("expected {} cells, got {}", cell_count(m), cells.len()));
        }
        if cells.iter().any(|p| *p < 0 || *p > 1) {
            return invalid("cell values must be probabilities");
        }
        let mut denom = Integer::from(1);
        for p in cells {
            denom.lcm_mut(p.denom());
        }
        let numer = cells
            .iter()
            .map(|p| p.numer() * Integer::from(&denom / p.denom()))
            .collect();
        Ok(InversionState { m, n, numer, denom })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn steps(&self) -> u64 {
        self.n
    }

    /// `p_{i,j}` in lowest terms.
    pub fn probability(&self, i: usize, j: usize) -> Rational {
        assert!(i <= j && j < self.m, "cell ({i}, {j}) outside the triangle");
        Rational::from((self.numer[cell_index(i, j)].clone(), self.denom.clone()))
    }

    /// Shared denominator of all cells (not necessarily reduced).
    pub fn denominator(&self) -> &Integer {
        &self.denom
    }

    /// Sum of the diagonal cells, `sum_i p_{i,i}`.
    pub fn diagonal_mass(&self) -> Rational {
        let s: Integer = (0..self.m).map(|i| &self.numer[cell_index(i, i)]).sum();
        Rational::from((s, self.denom.clone()))
    }

    /// One step of the recursion; returns the state at `n + 1`.
    pub fn dp_step(&self) -> InversionState {
        let mut next = self.clone();
        next.advance();
        next
    }

    /// In-place version of [`dp_step`](Self::dp_step).
    pub fn advance(&mut self) {
        let m = self.m;
        let mm = m as u32;
        let mut out = Vec::with_capacity(self.numer.len());
        for j in 0..m {
            for i in 0..=j {
                let here = &self.numer[cell_index(i, j)];
                // new numerator over denominator m * D:
                //   m N + sum (N_nb - N) + delta (D - 2N)
                let mut acc = Integer::from(here * mm);
                let mut deg = 0u32;
                for_each_neighbor(m, i, j, |nb| {
                    acc += &self.numer[nb];
                    deg += 1;
                });
                acc -= Integer::from(here * deg);
                if i == j {
                    acc += &self.denom;
                    acc -= Integer::from(here * 2u32);
                }
                out.push(acc);
            }
        }
        self.numer = out;
        self.denom *= mm;
        self.n += 1;
    }

    /// `I_{m,n} = sum_{i <= j} p_{i,j}`.
    pub fn expected_inversions(&self) -> Rational {
        let s: Integer = self.numer.iter().sum();
        Rational::from((s, self.denom.clone()))
    }

    /// Every cell lies in `[0, 1]`.
    pub fn is_probability_array(&self) -> bool {
        self.numer.iter().all(|x| *x >= 0 && *x <= self.denom)
    }
}

/// True iff `p_{i,j} = p_{m-j-1, m-i-1}` for every cell (invariance under
/// conjugation by the reversal permutation).
pub fn symmetry_check(state: &InversionState) -> bool {
    let m = state.m;
    (0..m).all(|j| (0..=j).all(|i| state.numer[cell_index(i, j)] == state.numer[cell_index(m - j - 1, m - i - 1)]))
}

fn check_work(m: usize, n: u64, budget: WorkBudget, op: &'static str) -> Result<()> {
    if m == 0 {
        return invalid("m must be at least 1");
    }
    budget.check(op, u128::from(n) * (m as u128) * (m as u128))
}

/// Exact `I_{m,n}` by iterating the recursion `n` times. `O(n m^2)`.
pub fn expected_inversions_dp(m: usize, n: u64, budget: WorkBudget) -> Result<Rational> {
    check_work(m, n, budget, "exact recursion")?;
    let mut state = InversionState::initial(m)?;
    for _ in 0..n {
        state.advance();
    }
    Ok(state.expected_inversions())
}

/// Exact `I_{m,0}, ..., I_{m,n_max}` from a single pass.
pub fn expected_inversions_trajectory(m: usize, n_max: u64, budget: WorkBudget) -> Result<Vec<Rational>> {
    check_work(m, n_max, budget, "exact recursion")?;
    let mut state = InversionState::initial(m)?;
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(state.expected_inversions());
    for _ in 0..n_max {
        state.advance();
        out.push(state.expected_inversions());
    }
    Ok(out)
}

/// Double-precision version of the recursion, for sweeps where the exact
/// numbers would be too large. Approximate: rounding accumulates over steps.
pub fn expected_inversions_float_trajectory(m: usize, n_max: u64, budget: WorkBudget) -> Result<Vec<f64>> {
    check_work(m, n_max, budget, "float recursion")?;
    let cells = cell_count(m);
    let inv_m = 1.0 / m as f64;
    let mut p = vec![0.0f64; cells];
    let mut q = vec![0.0f64; cells];
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(0.0);
    for _ in 0..n_max {
        for j in 0..m {
            for i in 0..=j {
                let here = p[cell_index(i, j)];
                let mut acc = 0.0;
                for_each_neighbor(m, i, j, |nb| acc += p[nb] - here);
                let mut v = here + inv_m * acc;
                if i == j {
                    v += inv_m * (1.0 - 2.0 * here);
                }
                q[cell_index(i, j)] = v;
            }
        }
        std::mem::swap(&mut p, &mut q);
        out.push(p.iter().sum());
    }
    Ok(out)
}

/// Double-precision `I_{m,n}` (approximate fast path).
pub fn expected_inversions_float(m: usize, n: u64, budget: WorkBudget) -> Result<f64> {
    Ok(*expected_inversions_float_trajectory(m, n, budget)?.last().unwrap())
}

/// Power series in `t`, truncated after `t^order`, whose coefficients are
/// polynomials in `u` and `v` with rational coefficients.
///
/// The generating function `P(u, v) = sum_n t^n sum p_{i,j}^{(n)} u^i v^j`
/// and its border series are held in this form; intermediate products may
/// leave the triangle, so the degree bounds are arbitrary.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedBivariateSeries {
    order: usize,
    deg_u: usize,
    deg_v: usize,
    coeffs: Vec<Rational>,
}

impl TruncatedBivariateSeries {
    pub fn zero(order: usize, deg_u: usize, deg_v: usize) -> Self {
        TruncatedBivariateSeries {
            order,
            deg_u,
            deg_v,
            coeffs: vec![Rational::new(); (order + 1) * (deg_u + 1) * (deg_v + 1)],
        }
    }

    #[inline]
    fn idx(&self, r: usize, a: usize, b: usize) -> usize {
        (r * (self.deg_u + 1) + a) * (self.deg_v + 1) + b
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of `t^r u^a v^b` (zero outside the stored range).
    pub fn coeff(&self, r: usize, a: usize, b: usize) -> Rational {
        if r > self.order || a > self.deg_u || b > self.deg_v {
            Rational::new()
        } else {
            self.coeffs[self.idx(r, a, b)].clone()
        }
    }

    pub fn set(&mut self, r: usize, a: usize, b: usize, value: Rational) {
        let k = self.idx(r, a, b);
        self.coeffs[k] = value;
    }

    /// `self += scale * t^dt u^du v^dv * src`, dropping powers of `t` beyond
    /// the truncation order.
    ///
    /// Panics if the shifted support exceeds the degree bounds of `self`.
    pub fn add_shifted(&mut self, src: &TruncatedBivariateSeries, scale: &Rational, dt: usize, du: usize, dv: usize) {
        for r in 0..=src.order {
            let rr = r + dt;
            if rr > self.order {
                break;
            }
            for a in 0..=src.deg_u {
                for b in 0..=src.deg_v {
                    let c = &src.coeffs[src.idx(r, a, b)];
                    if c.is_zero() {
                        continue;
                    }
                    assert!(a + du <= self.deg_u && b + dv <= self.deg_v, "shift leaves the series bounds");
                    let k = self.idx(rr, a + du, b + dv);
                    self.coeffs[k] += Rational::from(c * scale);
                }
            }
        }
    }

    /// Support contained in `0 <= a <= b < m`.
    pub fn is_triangular(&self, m: usize) -> bool {
        (0..=self.order).all(|r| {
            (0..=self.deg_u).all(|a| {
                (0..=self.deg_v).all(|b| (a <= b && b < m) || self.coeffs[self.idx(r, a, b)].is_zero())
            })
        })
    }

    pub fn max_abs_coefficient(&self) -> Rational {
        self.coeffs
            .iter()
            .map(|c| Rational::from(c.abs_ref()))
            .max()
            .unwrap_or_default()
    }
}

/// The series `P`, `P_l`, `P_t`, `P_d` of the recursion up to `t^order`.
#[derive(Debug, Clone)]
pub struct BorderSeries {
    /// `P(u, v)`, triangular support.
    pub full: TruncatedBivariateSeries,
    /// `P_l(v) = sum p_{0,j} v^j` (left border).
    pub left: TruncatedBivariateSeries,
    /// `P_t(u) = sum p_{i,m-1} u^i` (top border).
    pub top: TruncatedBivariateSeries,
    /// `P_d(uv) = sum p_{i,i} (uv)^i` (diagonal, already evaluated at `uv`).
    pub diagonal: TruncatedBivariateSeries,
}

pub fn border_series(m: usize, order: usize, budget: WorkBudget) -> Result<BorderSeries> {
    check_work(m, order as u64 + 1, budget, "functional equation")?;
    let d = m - 1;
    let mut full = TruncatedBivariateSeries::zero(order, d, d);
    let mut left = TruncatedBivariateSeries::zero(order, 0, d);
    let mut top = TruncatedBivariateSeries::zero(order, d, 0);
    let mut diagonal = TruncatedBivariateSeries::zero(order, d, d);
    let mut state = InversionState::initial(m)?;
    for r in 0..=order {
        for j in 0..m {
            for i in 0..=j {
                full.set(r, i, j, state.probability(i, j));
            }
            left.set(r, 0, j, state.probability(0, j));
            top.set(r, j, 0, state.probability(j, m - 1));
            diagonal.set(r, j, j, state.probability(j, j));
        }
        state.advance();
    }
    Ok(BorderSeries { full, left, top, diagonal })
}

/// Largest absolute coefficient of `LHS - RHS` in the functional equation
///
/// ```text
/// (1 - t + (t/m)(4 - u - 1/u - v - 1/v)) P(u,v)
///   = (t/m) ( (1 - u^m v^m) / ((1 - uv)(1 - t)) - (1/u - 1) P_l(v)
///             - (v - 1) v^{m-1} P_t(u) - (u + 1/v) P_d(uv) )
/// ```
///
/// after multiplying both sides by `m u v`, truncated at `t^order`. Exact, so
/// a correct recursion yields zero.
pub fn functional_equation_residual(m: usize, order: usize, budget: WorkBudget) -> Result<Rational> {
    if order == 0 {
        return invalid("truncation order must be at least 1");
    }
    let series = border_series(m, order, budget)?;
    let bound = m + 1;
    let mut diff = TruncatedBivariateSeries::zero(order, bound, bound);

    // (1 - u^m v^m) / (1 - uv) = sum_{i<m} (uv)^i, times 1/(1-t).
    let mut geometric = TruncatedBivariateSeries::zero(order, m - 1, m - 1);
    for r in 0..=order {
        for i in 0..m {
            geometric.set(r, i, i, Rational::from(1));
        }
    }

    let q = |x: i64| Rational::from(x);
    let mi = m as i64;
    let p = &series.full;
    // LHS: m(1-t) uv P + t (4uv - u^2 v - v - u v^2 - u) P
    for (c, dt, du, dv) in [(mi, 0, 1, 1), (-mi, 1, 1, 1), (4, 1, 1, 1), (-1, 1, 2, 1), (-1, 1, 0, 1), (-1, 1, 1, 2), (-1, 1, 1, 0)] {
        diff.add_shifted(p, &q(c), dt, du, dv);
    }
    // minus RHS: t [ uv S/(1-t) - (v - uv) P_l - (u v^{m+1} - u v^m) P_t - (u^2 v + u) P_d(uv) ]
    diff.add_shifted(&geometric, &q(-1), 1, 1, 1);
    diff.add_shifted(&series.left, &q(1), 1, 0, 1);
    diff.add_shifted(&series.left, &q(-1), 1, 1, 1);
    diff.add_shifted(&series.top, &q(1), 1, 1, m + 1);
    diff.add_shifted(&series.top, &q(-1), 1, 1, m);
    diff.add_shifted(&series.diagonal, &q(1), 1, 2, 1);
    diff.add_shifted(&series.diagonal, &q(1), 1, 1, 0);

    Ok(diff.max_abs_coefficient())
}
