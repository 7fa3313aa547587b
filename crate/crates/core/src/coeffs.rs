//! Exact rational coefficients of the k-step densities.
//!
//! After `k` steps from independent uniforms the joint density of the five
//! fitness values is `sum_nu q_k(min(x_nu, x_nu+1), max(x_nu, x_nu+1))` with
//! `q_k(x, y) = sum alpha[i][j] x^i y^j`. The tables are advanced with an exact
//! recursion over `BigRational`; nothing here ever rounds.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number in lowest terms.
pub type Rational = BigRational;

pub(crate) fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub(crate) fn rat_int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

pub(crate) fn to_f64(r: &Rational) -> f64 {
    // BigRational::to_f64 handles huge numerators/denominators without overflow.
    r.to_f64().unwrap_or(f64::NAN)
}

/// Coefficients `alpha[i][j]` of `q_k` at a fixed step `k`.
///
/// Absent entries are zero. Only nonzero values are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffTable {
    k: u32,
    entries: BTreeMap<(u32, u32), Rational>,
}

impl CoeffTable {
    /// Builds a table from `(i, j, value)` triples, dropping zeros and checking invariants.
    pub fn from_entries<I>(k: u32, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32, Rational)>,
    {
        let mut map = BTreeMap::new();
        for (i, j, v) in entries {
            if !v.is_zero() && map.insert((i, j), v).is_some() {
                return Err(Error::TableInvariant(format!("duplicate entry ({i},{j})")));
            }
        }
        let table = CoeffTable { k, entries: map };
        table.check_invariants()?;
        Ok(table)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Coefficient at `(i, j)`; zero when absent.
    pub fn get(&self, i: u32, j: u32) -> Rational {
        self.entries.get(&(i, j)).cloned().unwrap_or_else(Rational::zero)
    }

    fn get_ref(&self, i: i64, j: i64) -> Option<&Rational> {
        if i < 0 || j < 0 {
            return None;
        }
        self.entries.get(&(i as u32, j as u32))
    }

    /// Nonzero entries in `(i, j)` order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, &Rational)> {
        self.entries.iter().map(|(&(i, j), v)| (i, j, v))
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.len()
    }

    /// Largest `i` and `j` carrying a nonzero entry.
    pub fn extent(&self) -> (u32, u32) {
        self.entries.keys().fold((0, 0), |(mi, mj), &(i, j)| (mi.max(i), mj.max(j)))
    }

    /// Checks `alpha[0][j] = 0`, `alpha[1][0] = 0` for `k >= 2`, and the support bound
    /// `i <= 3k`, `j <= 3k - 1`.
    ///
    /// The `k = 1` table is the one exception to `alpha[1][0] = 0`: `q_1 = x - x^2 + x^3/3`.
    pub fn check_invariants(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::TableInvariant("step index must be at least 1".into()));
        }
        let (max_i, max_j) = (3 * self.k, 3 * self.k - 1);
        for &(i, j) in self.entries.keys() {
            if i == 0 {
                return Err(Error::TableInvariant(format!("nonzero alpha(0,{j}) at k={}", self.k)));
            }
            if self.k >= 2 && i == 1 && j == 0 {
                return Err(Error::TableInvariant(format!("nonzero alpha(1,0) at k={}", self.k)));
            }
            if i > max_i || j > max_j {
                return Err(Error::TableInvariant(format!(
                    "entry ({i},{j}) outside support i<={max_i}, j<={max_j} at k={}",
                    self.k
                )));
            }
        }
        Ok(())
    }
}

/// The hard-coded `k = 1` table: `q_1(x, y) = x - x^2 + x^3/3`.
pub fn seed_table_k1() -> CoeffTable {
    let mut entries = BTreeMap::new();
    entries.insert((1, 0), rat_int(1));
    entries.insert((2, 0), rat_int(-1));
    entries.insert((3, 0), rat(1, 3));
    CoeffTable { k: 1, entries }
}

/// Returns the exact table for step `k + 1`.
///
/// Rows are filled in dependency order: `i = 1` for `j >= 1` (old data only),
/// `i = 2` (uses the new `i = 1` row), `i >= 3`, and finally the `j = 0` column.
pub fn advance(table: &CoeffTable) -> Result<CoeffTable> {
    table.check_invariants()?;
    let k = table.k as i64;
    // Upper limit of the p-sums over a full row.
    let p_max = 3 * k + 1;
    let i_top = 3 * (k + 1) + 2;
    let j_top = 3 * (k + 1) + 1;

    let a = |i: i64, j: i64| table.get_ref(i, j);

    // row_sum[i] = sum_{p=0}^{3k+1} alpha[i][p] / (p + 1)
    let row_sum = |i: i64| -> Rational {
        let mut s = Rational::zero();
        for p in 0..=p_max {
            if let Some(v) = a(i, p) {
                s += v / rat_int(p + 1);
            }
        }
        s
    };

    let mut next: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
    let put = |next: &mut BTreeMap<(u32, u32), Rational>, i: i64, j: i64, v: Rational| {
        if !v.is_zero() {
            next.insert((i as u32, j as u32), v);
        }
    };

    // i = 1, j >= 1
    let mut row1 = vec![Rational::zero(); (j_top + 1) as usize];
    for j in 1..=j_top {
        let mut v = row_sum(j);
        for p in 0..j {
            if let Some(c) = a(j - 1 - p, p) {
                v += c * rat(2 * p - j + 1, (p + 1) * (j - p));
            }
        }
        row1[j as usize] = v.clone();
        put(&mut next, 1, j, v);
    }

    // i = 2, j >= 1
    let half = rat(1, 2);
    for j in 1..=j_top {
        let old = a(1, j).cloned().unwrap_or_else(Rational::zero);
        let v = old - &row1[j as usize] * &half;
        put(&mut next, 2, j, v);
    }

    // i >= 3, j >= 1
    for i in 3..=i_top {
        let c2 = Rational::one() + rat(1, i * (i - 1));
        let c3 = rat(1, 3) + rat(1, i * (i - 2));
        for j in 1..=j_top {
            let mut v = Rational::zero();
            if let Some(x) = a(i - 1, j) {
                v += x;
            }
            if let Some(x) = a(i - 2, j) {
                v -= x * &c2;
            }
            if let Some(x) = a(i - 3, j) {
                v += x * &c3;
            }
            put(&mut next, i, j, v);
        }
    }

    // j = 0 column. alpha[1][0] vanishes for every produced table. The extra
    // alpha[1][0][k] term in the i = 2 entry is zero unless the input is the k = 1 seed.
    {
        let mut v = row_sum(1) * rat_int(2);
        if let Some(x) = a(1, 0) {
            v += x;
        }
        put(&mut next, 2, 0, v);
    }
    for i in 3..=i_top {
        let mut v = Rational::zero();
        if let Some(x) = a(i - 1, 0) {
            v += x;
        }
        if let Some(x) = a(i - 2, 0) {
            v -= x * (Rational::one() + rat(1, (i - 1) * i));
        }
        if let Some(x) = a(i - 3, 0) {
            v += x * (rat(1, 3) + rat(1, (i - 2) * i));
        }
        v += row_sum(i - 1) * rat(i + 2, i);
        v -= row_sum(i - 2) * rat(i + 4, 2 * i);
        for p in 0..=(i - 2) {
            if let Some(x) = a(i - 2 - p, p) {
                v -= x * rat(i + 2, i * (p + 1));
                v += x / rat_int(i - p);
            }
        }
        for p in 0..=(i - 3) {
            if let Some(x) = a(i - 3 - p, p) {
                v += x * rat(i + 4, 2 * i * (p + 1));
                v -= x * rat(1, 2 * (i - p));
            }
        }
        put(&mut next, i, 0, v);
    }

    let out = CoeffTable { k: table.k + 1, entries: next };
    out.check_invariants()?;
    Ok(out)
}

/// All tables for steps `1..=k_max`, index `k - 1`.
pub fn tables_up_to(k_max: u32) -> Result<Vec<CoeffTable>> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(k_max as usize);
    out.push(seed_table_k1());
    while out.len() < k_max as usize {
        let next = advance(out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}

/// Pairs `(i, j, k)` where `i + j + 1 <= k` but `alpha` differs between steps `k` and `k + 1`.
pub fn stabilization_violations(tables: &[CoeffTable]) -> Vec<(u32, u32, u32)> {
    let mut bad = Vec::new();
    for pair in tables.windows(2) {
        let (cur, nxt) = (&pair[0], &pair[1]);
        let k = cur.k;
        let keys = cur.entries.keys().chain(nxt.entries.keys());
        let mut seen = alloc::collections::BTreeSet::new();
        for &(i, j) in keys {
            if i + j < k && seen.insert((i, j)) && cur.get(i, j) != nxt.get(i, j) {
                bad.push((i, j, k));
            }
        }
    }
    bad
}

/// Stabilized coefficients `beta[i][j]` read off at step `k_used`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitTable {
    k_used: u32,
    entries: BTreeMap<(u32, u32), Rational>,
}

impl LimitTable {
    pub fn k_used(&self) -> u32 {
        self.k_used
    }

    /// `beta[i][j]` if it is determined at `k_used`, i.e. `i + j + 1 <= k_used`.
    pub fn get(&self, i: u32, j: u32) -> Option<&Rational> {
        self.entries.get(&(i, j))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, &Rational)> {
        self.entries.iter().map(|(&(i, j), v)| (i, j, v))
    }
}

/// Iterates to `k_max` and returns every `beta[i][j]` with `i + j + 1 <= k_max`
/// (zeros included, since they are determined too).
///
/// Entries that were already stable at `k_max - 1` are cross-checked against
/// that table.
pub fn limits(k_max: u32) -> Result<LimitTable> {
    if k_max < 2 {
        return Err(Error::InvalidParameter("k_max must be at least 2".into()));
    }
    let tables = tables_up_to(k_max)?;
    let last = &tables[tables.len() - 1];
    let prev = &tables[tables.len() - 2];
    let mut entries = BTreeMap::new();
    for i in 0..k_max {
        for j in 0..(k_max - i) {
            let v = last.get(i, j);
            if i + j + 1 < k_max && prev.get(i, j) != v {
                return Err(Error::Stabilization { i, j, k: k_max });
            }
            entries.insert((i, j), v);
        }
    }
    Ok(LimitTable { k_used: k_max, entries })
}

/// `q_k(x, y)` in floating point.
pub fn eval_qk(table: &CoeffTable, x: f64, y: f64) -> f64 {
    table.iter().map(|(i, j, v)| to_f64(v) * libm::pow(x, i as f64) * libm::pow(y, j as f64)).sum()
}

/// Exact integral of `g_k` over the unit 5-cube: `10 * sum alpha / ((i + 1)(i + j + 2))`.
pub fn integral_gk(table: &CoeffTable) -> Rational {
    let mut s = Rational::zero();
    for (i, j, v) in table.iter() {
        s += v / rat_int(((i + 1) * (i + j + 2)) as i64);
    }
    s * rat_int(10)
}

/// Dense univariate polynomial with exact coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPoly {
    coeffs: Vec<Rational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RationalPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, d: usize) -> Rational {
        self.coeffs.get(d).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> RationalPoly {
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(Rational::zero());
        for (d, a) in self.coeffs.iter().enumerate() {
            c.push(a / rat_int(d as i64 + 1));
        }
        RationalPoly::new(c)
    }

    /// Exact value at a rational point.
    pub fn eval_exact(&self, x: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    /// Exact `integral_0^1`.
    pub fn integral_unit(&self) -> Rational {
        self.antiderivative().eval_exact(&Rational::one())
    }

    /// Floating-point image of the coefficients, for fast repeated evaluation.
    pub fn to_f64(&self) -> F64Poly {
        F64Poly { coeffs: self.coeffs.iter().map(to_f64).collect() }
    }

    /// Value at `x`, evaluated exactly and rounded once.
    ///
    /// The alternating high-degree coefficients of late tables make plain
    /// floating-point Horner lose digits, so this goes through the exact path.
    pub fn eval(&self, x: f64) -> f64 {
        match Rational::from_float(x) {
            Some(xr) => to_f64(&self.eval_exact(&xr)),
            None => f64::NAN,
        }
    }

    pub fn min_on_grid(&self, n: usize) -> f64 {
        let f = self.to_f64();
        (0..=n).map(|s| f.eval(s as f64 / n as f64)).fold(f64::INFINITY, f64::min)
    }

    pub fn is_nonnegative_leading(&self) -> bool {
        self.coeffs.last().is_none_or(|c| !c.is_negative())
    }
}

/// Floating-point polynomial, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct F64Poly {
    coeffs: Vec<f64>,
}

impl F64Poly {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

/// One-dimensional marginal density of `g_k`, expanded in powers of `x`:
/// `3/5 + 2 int_0^x q_k(y, x) dy + 2 int_x^1 q_k(x, y) dy`.
pub fn marginal_poly_k(table: &CoeffTable) -> RationalPoly {
    let (mi, mj) = table.extent();
    let mut c = vec![Rational::zero(); (mi + mj + 2) as usize];
    c[0] = rat(3, 5);
    for (i, j, v) in table.iter() {
        let two_v = v * rat_int(2);
        let top = (i + j + 1) as usize;
        // int_0^x y^i x^j dy = x^(i+j+1) / (i+1)
        c[top] += &two_v / rat_int(i as i64 + 1);
        // int_x^1 x^i y^j dy = x^i (1 - x^(j+1)) / (j+1)
        let w = &two_v / rat_int(j as i64 + 1);
        c[i as usize] += &w;
        c[top] -= w;
    }
    RationalPoly::new(c)
}

/// Cumulative distribution of [`marginal_poly_k`]; the `k = 0` law (uniform) is `x`.
pub fn marginal_cdf_poly_k(table: &CoeffTable) -> RationalPoly {
    marginal_poly_k(table).antiderivative()
}

/// Boundary values `(B(1), B'(1), B''(1), B'''(1), B''''(1))` of the fifth-order ODE.
///
/// The first value is fixed at `1/5`; derivative `n + 1` at `y = 1` equals
/// `(-1)^n n! beta[1][n]`.
pub fn boundary_conditions_from_limits(lt: &LimitTable) -> Result<[Rational; 5]> {
    let beta = |j: u32| lt.get(1, j).cloned().ok_or(Error::MissingLimit { i: 1, j });
    let b0 = beta(0)?;
    let b1 = beta(1)?;
    let b2 = beta(2)?;
    let b3 = beta(3)?;
    Ok([rat(1, 5), b0, -b1, b2 * rat_int(2), -b3 * rat_int(6)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        rat(p, q)
    }

    #[test]
    fn seed_matches_first_table() {
        let t = seed_table_k1();
        assert_eq!(t.get(1, 0), r(1, 1));
        assert_eq!(t.get(2, 0), r(-1, 1));
        assert_eq!(t.get(3, 0), r(1, 3));
        assert_eq!(t.get(0, 0), r(0, 1));
        assert_eq!(t.get(1, 1), r(0, 1));
        assert_eq!(t.nonzero_count(), 3);
    }

    #[test]
    fn advance_once_and_twice() {
        let t2 = advance(&seed_table_k1()).unwrap();
        assert_eq!(t2.k(), 2);
        assert_eq!(t2.get(2, 0), r(3, 1));
        assert_eq!(t2.get(3, 0), r(-19, 3));
        assert_eq!(t2.get(1, 1), r(1, 1));
        let t3 = advance(&t2).unwrap();
        assert_eq!(t3.get(1, 1), r(1, 5));
        assert_eq!(t3.get(2, 0), r(2, 5));
        assert_eq!(t3.get(9, 0), r(487, 1260));
    }

    #[test]
    fn fifth_table_spot_values() {
        let t = tables_up_to(5).unwrap();
        assert_eq!(t[4].get(4, 0), r(47, 60));
        assert_eq!(t[4].get(1, 3), r(3, 5));
        assert_eq!(t[4].get(15, 0), r(6257393, 18018000));
    }

    #[test]
    fn rejects_bad_input() {
        let bad = CoeffTable::from_entries(2, [(0, 1, r(1, 2))]);
        assert!(matches!(bad, Err(Error::TableInvariant(_))));
        let bad = CoeffTable::from_entries(3, [(1, 0, r(1, 2))]);
        assert!(bad.is_err());
        let bad = CoeffTable::from_entries(1, [(4, 0, r(1, 2))]);
        assert!(bad.is_err(), "support bound i <= 3k");
        assert!(CoeffTable::from_entries(0, []).is_err());
    }

    #[test]
    fn limits_respect_frontier() {
        let lt = limits(5).unwrap();
        assert_eq!(lt.k_used(), 5);
        assert_eq!(lt.get(1, 1), Some(&r(1, 5)));
        assert_eq!(lt.get(1, 2), Some(&r(1, 2)));
        assert_eq!(lt.get(1, 3), Some(&r(3, 5)));
        assert_eq!(lt.get(2, 0), Some(&r(2, 5)));
        assert_eq!(lt.get(3, 0), Some(&r(1, 1)));
        assert_eq!(lt.get(1, 0), Some(&r(0, 1)));

        let lt3 = limits(3).unwrap();
        assert_eq!(lt3.get(1, 1), Some(&r(1, 5)));
        assert_eq!(lt3.get(1, 3), None);
        assert!(limits(1).is_err());
    }

    #[test]
    fn q1_values() {
        let t = seed_table_k1();
        assert!((eval_qk(&t, 1.0, 0.7) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(eval_qk(&t, 0.0, 0.4), 0.0);
    }

    #[test]
    fn integral_of_single_term() {
        let t = CoeffTable::from_entries(1, [(1, 0, r(1, 1))]).unwrap();
        assert_eq!(integral_gk(&t), r(5, 3));
        assert_eq!(integral_gk(&seed_table_k1()), r(1, 1));
    }

    #[test]
    fn first_marginal_polynomial() {
        let m = marginal_poly_k(&seed_table_k1());
        let want = [r(3, 5), r(2, 1), r(-3, 1), r(2, 1), r(-1, 2)];
        assert_eq!(m.coeffs(), &want);
        assert_eq!(m.integral_unit(), r(1, 1));
    }

    #[test]
    fn boundary_values_from_fifth_step() {
        let bc = boundary_conditions_from_limits(&limits(5).unwrap()).unwrap();
        assert_eq!(bc, [r(1, 5), r(0, 1), r(-1, 5), r(1, 1), r(-18, 5)]);
        let short = limits(4).unwrap();
        assert_eq!(boundary_conditions_from_limits(&short), Err(Error::MissingLimit { i: 1, j: 3 }));
    }

    #[test]
    fn marginal_constant_term() {
        for t in tables_up_to(6).unwrap() {
            assert_eq!(marginal_poly_k(&t).coeff(0), r(3, 5));
        }
    }
}
