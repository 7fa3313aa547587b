//! Real-valued Gauss hypergeometric building blocks.
//!
//! `F_{n,m}(x) = 2F1((n + i sqrt2)/3, (n - i sqrt2)/3; m/3; x)`. The conjugate
//! parameter pair makes `(a)_s (b)_s` real, so the series runs in plain `f64`.
//! Every argument used by the model lies in `[-1/2, 1/2]`.

use crate::error::{Error, Result};

/// Parameters `(n, m)` of `F_{n,m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FnmSpec {
    n: i32,
    m: i32,
}

impl FnmSpec {
    /// Rejects `m <= 0` divisible by 3, where the third parameter is a nonpositive integer.
    pub fn new(n: i32, m: i32) -> Result<Self> {
        if m <= 0 && m % 3 == 0 {
            return Err(Error::InvalidParameter(alloc::format!(
                "F_{{{n},{m}}}: third parameter m/3 is a nonpositive integer"
            )));
        }
        Ok(FnmSpec { n, m })
    }

    pub fn n(&self) -> i32 {
        self.n
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    /// Ratio `a_{s+1} / a_s` of consecutive series coefficients.
    fn ratio(&self, s: usize) -> f64 {
        let s = s as f64;
        let a = self.n as f64 / 3.0 + s;
        (a * a + 2.0 / 9.0) / ((self.m as f64 / 3.0 + s) * (1.0 + s))
    }
}

const fn spec(n: i32, m: i32) -> FnmSpec {
    FnmSpec { n, m }
}

pub const F21: FnmSpec = spec(2, 1);
pub const F45: FnmSpec = spec(4, 5);
pub const F12: FnmSpec = spec(1, 2);
pub const F24: FnmSpec = spec(2, 4);
pub const F23: FnmSpec = spec(2, 3);

/// Stopping rule for series summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig { rel_tol: 1e-14, max_terms: 10_000 }
    }
}

impl SeriesConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.max_terms < 1 {
            return Err(Error::InvalidParameter("series config needs rel_tol > 0 and max_terms >= 1".into()));
        }
        Ok(())
    }
}

fn falling(p: usize, d: u32) -> f64 {
    (0..d as usize).fold(1.0, |acc, r| acc * (p - r) as f64)
}

/// `sum_s a_s c^s D^order[t^(3s + offset)]`, the `F_{n,m}(c t^3)` series scaled by
/// `t^offset` and differentiated termwise in `t`.
///
/// With `stride = 1`, `offset = 0`, `c = 1` this is the plain `F_{n,m}(t)` series.
fn strided_series(
    spec: FnmSpec,
    c: f64,
    stride: usize,
    offset: usize,
    t: f64,
    order: u32,
    cfg: &SeriesConfig,
) -> Result<f64> {
    let mut coef = 1.0;
    let mut sum = 0.0;
    let mut quiet = 0;
    for s in 0..cfg.max_terms {
        let p = stride * s + offset;
        if p >= order as usize {
            let term = coef * falling(p, order) * libm::pow(t, (p - order as usize) as f64);
            sum += term;
            if term.abs() <= cfg.rel_tol * sum.abs() || (term == 0.0 && p > order as usize) {
                quiet += 1;
                if quiet >= 2 {
                    return Ok(sum);
                }
            } else {
                quiet = 0;
            }
        }
        coef *= spec.ratio(s) * c;
    }
    Err(Error::NonConvergence { terms: cfg.max_terms })
}

fn check_arg(x: f64) -> Result<()> {
    if !(x.abs() < 1.0) {
        return Err(Error::OutOfDomain { y: x, lo: -1.0, hi: 1.0 });
    }
    Ok(())
}

/// `F_{n,m}(x)` for `|x| < 1`.
pub fn f_nm(spec: FnmSpec, x: f64, cfg: &SeriesConfig) -> Result<f64> {
    f_nm_deriv(spec, x, 0, cfg)
}

/// `order`-th derivative of `F_{n,m}` at `x`, by termwise differentiation.
pub fn f_nm_deriv(spec: FnmSpec, x: f64, order: u32, cfg: &SeriesConfig) -> Result<f64> {
    cfg.validate()?;
    let spec = FnmSpec::new(spec.n, spec.m)?;
    check_arg(x)?;
    strided_series(spec, 1.0, 1, 0, x, order, cfg)
}

/// Which reading of the closed forms to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Hypergeometric arguments `-1/2`, `-(1-x)^3/2`, `-x^3/2`, reproducing the coefficient series.
    Consistent,
    /// Arguments `+1/2`, `+(1-x)^3/2`, `+x^3/2` and the `F_{2,3}` basis function.
    Literal,
}

/// Constants of the two-term solution `d1 (1-x)^2 F_{4,5}(w) + d2 F_{2,m}(w)` fitted to
/// `B(0) = 0`, `B'(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DConstants {
    pub d1: f64,
    pub d2: f64,
    /// `B''(0)` of the fitted combination; the recursion requires 1.
    pub second_derivative: f64,
    /// Determinant of the 2x2 initial-value system.
    pub determinant: f64,
}

impl DConstants {
    pub fn sum(&self) -> f64 {
        self.d1 + self.d2
    }
}

/// Cached constants for `G`, `G2` and the script-G function used by the ODE.
#[derive(Debug, Clone)]
pub struct Hypergeom {
    cfg: SeriesConfig,
    /// `F_{4,5}(-1/2)`
    a: f64,
    /// `F_{2,1}(-1/2)`
    b: f64,
}

impl Hypergeom {
    pub fn new(cfg: SeriesConfig) -> Result<Self> {
        cfg.validate()?;
        let a = f_nm(F45, -0.5, &cfg)?;
        let b = f_nm(F21, -0.5, &cfg)?;
        Ok(Hypergeom { cfg, a, b })
    }

    pub fn config(&self) -> &SeriesConfig {
        &self.cfg
    }

    /// `(F_{4,5}(-1/2), F_{2,1}(-1/2))`.
    pub fn constants(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn unit(x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain { y: x, lo: 0.0, hi: 1.0 });
        }
        Ok(())
    }

    /// `G(x) = 9/8 [F45(-1/2) F21(-(1-x)^3/2) - (1-x)^2 F21(-1/2) F45(-(1-x)^3/2)]`.
    pub fn g(&self, x: f64) -> Result<f64> {
        self.g_deriv(x, 0)
    }

    /// `order`-th derivative of `G`, summed termwise as a power series in `1 - x`.
    pub fn g_deriv(&self, x: f64, order: u32) -> Result<f64> {
        Self::unit(x)?;
        let t = 1.0 - x;
        let p = strided_series(F21, -0.5, 3, 0, t, order, &self.cfg)?;
        let q = strided_series(F45, -0.5, 3, 2, t, order, &self.cfg)?;
        let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(sign * 9.0 / 8.0 * (self.a * p - self.b * q))
    }

    /// `G` with positive hypergeometric arguments, the literal reading.
    pub fn g_literal(&self, x: f64) -> Result<f64> {
        Self::unit(x)?;
        let t = 1.0 - x;
        let w = t * t * t / 2.0;
        let a = f_nm(F45, 0.5, &self.cfg)?;
        let b = f_nm(F21, 0.5, &self.cfg)?;
        Ok(9.0 / 8.0 * (a * f_nm(F21, w, &self.cfg)? - t * t * b * f_nm(F45, w, &self.cfg)?))
    }

    /// Two-variable generalization with `G2(x, 1) = G(x)` and `G2(x, 0) = x - x^2/2`.
    pub fn g2(&self, x: f64, z: f64) -> Result<f64> {
        Self::unit(x)?;
        Self::unit(z)?;
        let t = 1.0 - x;
        let v = z / (z - 3.0);
        let u = t * t * t * v;
        let pre = 9.0 / (2.0 * (3.0 - z) * (3.0 - z));
        let c = &self.cfg;
        Ok(pre * (f_nm(F45, v, c)? * f_nm(F21, u, c)? - t * t * f_nm(F21, v, c)? * f_nm(F45, u, c)?))
    }

    /// `G2`, literal reading: the second bracket uses `F_{1,2}` and the arguments `z/(3-z)`.
    pub fn g2_literal(&self, x: f64, z: f64) -> Result<f64> {
        Self::unit(x)?;
        Self::unit(z)?;
        let t = 1.0 - x;
        let u = t * t * t * z / (3.0 - z);
        let pre = 9.0 / (2.0 * (3.0 - z) * (3.0 - z));
        let c = &self.cfg;
        Ok(pre
            * (f_nm(F45, z / (z - 3.0), c)? * f_nm(F21, u, c)?
                - t * t * f_nm(F12, z / (3.0 - z), c)? * f_nm(F45, u, c)?))
    }

    /// Termwise `order`-th derivative of
    /// `SG(x) = 3/2 F21(-1/2) F12(-x^3/2) + 9/8 x F45(-1/2) F24(-x^3/2)`.
    pub fn script_g_series(&self, x: f64, order: u32) -> Result<f64> {
        Self::unit(x)?;
        let p = strided_series(F12, -0.5, 3, 0, x, order, &self.cfg)?;
        let q = strided_series(F24, -0.5, 3, 1, x, order, &self.cfg)?;
        Ok(1.5 * self.b * p + 9.0 / 8.0 * self.a * q)
    }

    /// Script-G with positive arguments, the literal reading.
    pub fn script_g_literal(&self, x: f64) -> Result<f64> {
        Self::unit(x)?;
        let w = x * x * x / 2.0;
        let c = &self.cfg;
        let a = f_nm(F45, 0.5, c)?;
        let b = f_nm(F21, 0.5, c)?;
        Ok(1.5 * b * f_nm(F12, w, c)? + 9.0 / 8.0 * x * a * f_nm(F24, w, c)?)
    }

    /// Script-G and its derivatives of orders `0..=5` at `y`.
    ///
    /// Orders 0 and 1 are summed from the series; orders 2 to 5 follow from the
    /// four linear ODEs that script-G satisfies. Orders 3 and up need `y > 0`.
    pub fn script_g_all(&self, y: f64) -> Result<[f64; 6]> {
        Self::unit(y)?;
        let g0 = self.script_g_series(y, 0)?;
        let g1 = self.script_g_series(y, 1)?;
        let y3 = y * y * y;
        let g2 = -(3.0 * y * g0 + 3.0 * y * y * g1) / (y3 + 2.0);
        if y == 0.0 {
            return Err(Error::SingularPoint { y });
        }
        let g3 = -(6.0 * y * y * g1 + (5.0 * y3 - 2.0) * g2) / (y * (y3 + 2.0));
        let g4 = -((11.0 * y3 + 4.0) * g2 + y * (7.0 * y3 - 4.0) * g3) / (y * y * (y3 + 2.0));
        let g5 = -(18.0 * y * (11.0 * y3 + 16.0) * g3 + 9.0 * y * y * (11.0 * y3 - 2.0) * g4)
            / (11.0 * y3 * y3 + 26.0 * y3 + 8.0);
        Ok([g0, g1, g2, g3, g4, g5])
    }

    /// Single order of [`Self::script_g_all`]; orders 0 to 2 are also available at `y = 0`.
    pub fn script_g(&self, y: f64, order: u32) -> Result<f64> {
        match order {
            0 => self.script_g_series(y, 0),
            1 => self.script_g_series(y, 1),
            2 => {
                let g0 = self.script_g_series(y, 0)?;
                let g1 = self.script_g_series(y, 1)?;
                Ok(-(3.0 * y * g0 + 3.0 * y * y * g1) / (y * y * y + 2.0))
            }
            3..=5 => Ok(self.script_g_all(y)?[order as usize]),
            _ => Err(Error::InvalidParameter(alloc::format!("derivative order {order} > 5"))),
        }
    }

    /// Script-G and its first derivative, the only inputs of the simplified ODE coefficients.
    pub fn script_g01(&self, y: f64) -> Result<(f64, f64)> {
        Ok((self.script_g_series(y, 0)?, self.script_g_series(y, 1)?))
    }

    /// Fits `d1 (1-x)^2 F45(w) + d2 F2m(w)`, `w = s (1-x)^3 / 2`, to `B(0) = 0`, `B'(0) = 1`.
    ///
    /// The consistent variant uses `s = -1`, `m = 1`; the literal variant uses `s = +1`, `m = 3`.
    pub fn d_constants(&self, variant: Variant) -> Result<DConstants> {
        let (c, f2) = match variant {
            Variant::Consistent => (-0.5, F21),
            Variant::Literal => (0.5, F23),
        };
        // Values at x = 0 (t = 1); derivatives in x flip sign per order.
        let cfg = &self.cfg;
        let f1 = |k: u32| -> Result<f64> {
            let v = strided_series(F45, c, 3, 2, 1.0, k, cfg)?;
            Ok(if k.is_multiple_of(2) { v } else { -v })
        };
        let f2v = |k: u32| -> Result<f64> {
            let v = strided_series(f2, c, 3, 0, 1.0, k, cfg)?;
            Ok(if k.is_multiple_of(2) { v } else { -v })
        };
        let (a0, a1, a2) = (f1(0)?, f1(1)?, f1(2)?);
        let (b0, b1, b2) = (f2v(0)?, f2v(1)?, f2v(2)?);
        let det = a0 * b1 - a1 * b0;
        if det == 0.0 {
            return Err(Error::SingularPoint { y: 0.0 });
        }
        let d1 = -b0 / det;
        let d2 = a0 / det;
        Ok(DConstants { d1, d2, second_derivative: d1 * a2 + d2 * b2, determinant: det })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h() -> Hypergeom {
        Hypergeom::new(SeriesConfig::default()).unwrap()
    }

    #[test]
    fn value_at_zero_is_one() {
        let cfg = SeriesConfig::default();
        for (n, m) in [(2, 1), (4, 5), (1, 2), (2, 4), (-3, 7)] {
            assert_eq!(f_nm(FnmSpec::new(n, m).unwrap(), 0.0, &cfg).unwrap(), 1.0);
        }
    }

    #[test]
    fn known_constants() {
        let (a, b) = h().constants();
        assert!((a - 0.6100155910080084).abs() < 1e-15);
        assert!((b - 0.3679481056816759).abs() < 1e-15);
    }

    #[test]
    fn first_derivative_at_zero() {
        let cfg = SeriesConfig::default();
        let d = f_nm_deriv(F21, 0.0, 1, &cfg).unwrap();
        assert!((d - ((2.0f64 / 3.0).powi(2) + 2.0 / 9.0) / (1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FnmSpec::new(1, 0).is_err());
        assert!(FnmSpec::new(1, -3).is_err());
        assert!(FnmSpec::new(1, -2).is_ok());
        assert!(f_nm(F21, 1.0, &SeriesConfig::default()).is_err());
        let tiny = SeriesConfig { rel_tol: 1e-300, max_terms: 3 };
        assert_eq!(f_nm(F21, 0.5, &tiny), Err(Error::NonConvergence { terms: 3 }));
    }

    #[test]
    fn g_boundary_values() {
        let h = h();
        assert!(h.g(0.0).unwrap().abs() < 1e-15);
        assert!((h.g_deriv(0.0, 1).unwrap() - 1.0).abs() < 1e-13);
        assert!((h.g_deriv(0.0, 2).unwrap() - 1.0).abs() < 1e-13);
        assert!((h.g(1.0).unwrap() - 9.0 / 8.0 * h.constants().0).abs() < 1e-15);
    }

    #[test]
    fn g2_at_zero_z() {
        let h = h();
        assert!((h.g2(0.4, 0.0).unwrap() - 0.32).abs() < 1e-15);
        assert!(h.g2(0.0, 0.7).unwrap().abs() < 1e-14);
    }

    #[test]
    fn script_g_at_one() {
        assert!((h().script_g(1.0, 0).unwrap() - 1.0).abs() < 1e-14);
        assert!(h().script_g(1.0, 1).unwrap().abs() < 1e-14);
    }

    #[test]
    fn script_g_singular_at_zero() {
        assert!(matches!(h().script_g(0.0, 3), Err(Error::SingularPoint { .. })));
        assert!(h().script_g(0.0, 2).is_ok());
    }

    #[test]
    fn chain_matches_series() {
        let h = h();
        for y in [0.2, 0.5, 0.9, 1.0] {
            let chain = h.script_g_all(y).unwrap();
            for (k, c) in chain.iter().enumerate() {
                let s = h.script_g_series(y, k as u32).unwrap();
                assert!((c - s).abs() < 1e-11 * (1.0 + s.abs()), "y={y} k={k}: {c} vs {s}");
            }
        }
    }

    #[test]
    fn consistent_d_constants() {
        let d = h().d_constants(Variant::Consistent).unwrap();
        let (a, b) = h().constants();
        assert!((d.d1 + 9.0 / 8.0 * b).abs() < 1e-13);
        assert!((d.d2 - 9.0 / 8.0 * a).abs() < 1e-13);
        assert!((d.second_derivative - 1.0).abs() < 1e-12);
        assert!((5.0 * d.determinant - 40.0 / 9.0).abs() < 1e-12);
    }
}
