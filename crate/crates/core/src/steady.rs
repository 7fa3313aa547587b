//! Steady-state joint density, marginal density and CDF.
//!
//! Everything is assembled from the ODE solution `B` and script-G:
//! `q(x, y) = SG'(1 - x) B'(1 - y) + Bc0(x)` with
//! `Bc0(x) = int_{1-x}^1 [SG''(s) B(s) - SG(s) B''(s)] / s ds`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hypergeom::{Hypergeom, SeriesConfig};
use crate::ode5::{self, DenseSolution, SolverConfig, State};
use crate::quadrature::{self, QuadConfig};

/// A value together with a flag telling whether extrapolation below `y_min` was needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged {
    pub value: f64,
    pub extrapolated: bool,
}

impl Flagged {
    fn exact(value: f64) -> Self {
        Flagged { value, extrapolated: false }
    }
}

/// Reading of the marginal law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalForm {
    /// `3/5 + 2 B'(1 - x)`, obtained by integrating the joint density over four coordinates.
    Integrated,
    /// `3/5 + B'(1 - x)`.
    Literal,
    /// The literal form divided by its total mass.
    LiteralRenormalized,
}

/// Chebyshev expansion on `[lo, hi]` of the antiderivative `int_lo^s f`.
#[derive(Debug, Clone, PartialEq)]
struct ChebPanel {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
    /// `int_lo^hi f`
    total: f64,
    /// `int_hi^1 f`
    above: f64,
}

impl ChebPanel {
    fn antiderivative(&self, s: f64) -> f64 {
        let t = (2.0 * s - self.lo - self.hi) / (self.hi - self.lo);
        // Clenshaw recurrence for sum c_k T_k(t).
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }
}

const CHEB_DEGREE: usize = 24;

fn cheb_antiderivative(values: &[f64], half_width: f64) -> Vec<f64> {
    let n = values.len() - 1;
    let mut c = alloc::vec![0.0; n + 1];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, v) in values.iter().enumerate() {
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            s += w * v * libm::cos(core::f64::consts::PI * (j * k) as f64 / n as f64);
        }
        *ck = 2.0 * s / n as f64;
    }
    c[0] *= 0.5;
    c[n] *= 0.5;
    let at = |k: usize| if k <= n { c[k] } else { 0.0 };
    let mut b = alloc::vec![0.0; n + 2];
    b[1] = at(0) - at(2) / 2.0;
    for k in 2..=n + 1 {
        b[k] = (at(k - 1) - at(k + 1)) / (2.0 * k as f64);
    }
    // Fix the constant so the antiderivative vanishes at t = -1.
    let at_minus_one: f64 = b.iter().enumerate().skip(1).map(|(k, v)| if k % 2 == 0 { *v } else { -v }).sum();
    b[0] = -at_minus_one;
    for v in &mut b {
        *v *= half_width;
    }
    b
}

/// Steady-state model: the ODE solution, script-G, and a tabulated `Bc0`.
#[derive(Debug, Clone)]
pub struct SteadyModel {
    hyp: Hypergeom,
    sol: DenseSolution,
    quad: QuadConfig,
    panels: Vec<ChebPanel>,
}

impl SteadyModel {
    /// Solves the ODE with the given boundary values and tabulates `Bc0`.
    pub fn new(series: SeriesConfig, solver: SolverConfig, bc: State, quad: QuadConfig) -> Result<Self> {
        let hyp = Hypergeom::new(series)?;
        let sol = ode5::solve(&hyp, &solver, bc)?;
        Self::from_solution(hyp, sol, quad)
    }

    /// Default configuration with the boundary values at `y = 1`.
    pub fn default_model() -> Result<Self> {
        Self::new(SeriesConfig::default(), SolverConfig::default(), ode5::DEFAULT_BC, QuadConfig::default())
    }

    pub fn from_solution(hyp: Hypergeom, sol: DenseSolution, quad: QuadConfig) -> Result<Self> {
        let mut model = SteadyModel { hyp, sol, quad, panels: Vec::new() };
        model.tabulate()?;
        let g0 = model.marginal_pdf(0.0, MarginalForm::Integrated)?.value;
        if (g0 - 0.6).abs() > 1e-10 {
            return Err(Error::InvalidParameter(alloc::format!("marginal density at 0 is {g0}, not 3/5")));
        }
        Ok(model)
    }

    fn tabulate(&mut self) -> Result<()> {
        let mesh = self.sol.mesh();
        let mut above = 0.0;
        let mut panels = Vec::with_capacity(mesh.len());
        for w in mesh.windows(2) {
            let (hi, lo) = (w[0], w[1]);
            let n = CHEB_DEGREE;
            let mut vals = Vec::with_capacity(n + 1);
            for j in 0..=n {
                // Chebyshev-Lobatto nodes, ordered from t = -1 upward.
                let t = -libm::cos(core::f64::consts::PI * j as f64 / n as f64);
                let s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
                vals.push(self.integrand(s)?);
            }
            // The nodes above run from t = -1; reorder to the cos(pi j / n) convention.
            vals.reverse();
            let coeffs = cheb_antiderivative(&vals, 0.5 * (hi - lo));
            let mut p = ChebPanel { lo, hi, coeffs, total: 0.0, above };
            p.total = p.antiderivative(hi);
            above += p.total;
            panels.push(p);
        }
        self.panels = panels;
        Ok(())
    }

    pub fn hypergeom(&self) -> &Hypergeom {
        &self.hyp
    }

    pub fn solution(&self) -> &DenseSolution {
        &self.sol
    }

    pub fn y_min(&self) -> f64 {
        self.sol.y_min()
    }

    fn b1(&self, y: f64, order: u32) -> Result<Flagged> {
        let (value, extrapolated) = self.sol.eval_extrapolated(y, order)?;
        Ok(Flagged { value, extrapolated })
    }

    /// `[SG''(s) B(s) - SG(s) B''(s)] / s`, the derivative of `Bc0` at `x = 1 - s`.
    pub fn integrand(&self, s: f64) -> Result<f64> {
        let g0 = self.hyp.script_g(s, 0)?;
        let g2 = self.hyp.script_g(s, 2)?;
        let b0 = self.b1(s, 0)?.value;
        let b2 = self.b1(s, 2)?.value;
        Ok((g2 * b0 - g0 * b2) / s)
    }

    /// `Bc0(x)` by adaptive quadrature over `[1 - x, 1]`, split at the solver mesh.
    pub fn b_circ_0_quadrature(&self, x: f64) -> Result<Flagged> {
        check_unit(x)?;
        let lo = 1.0 - x;
        let mut total = 0.0;
        let mut edges: Vec<f64> = self.sol.mesh().into_iter().filter(|&m| m > lo).collect();
        edges.push(lo.max(self.y_min()).min(1.0));
        for w in edges.windows(2) {
            if w[0] > w[1] {
                total += quadrature::integrate(|s| self.integrand(s), w[1], w[0], &self.quad)?.value;
            }
        }
        let extrapolated = lo < self.y_min();
        if extrapolated && lo > 0.0 {
            total += quadrature::integrate(|s| self.integrand(s), lo, self.y_min(), &self.quad)?.value;
        }
        Ok(Flagged { value: total, extrapolated })
    }

    /// `Bc0(x)` from the per-step Chebyshev table; below `y_min` the remainder is integrated directly.
    pub fn b_circ_0(&self, x: f64) -> Result<Flagged> {
        check_unit(x)?;
        let s = 1.0 - x;
        if s >= self.y_min() {
            let idx = self.panels.partition_point(|p| p.lo > s).min(self.panels.len() - 1);
            let p = &self.panels[idx];
            return Ok(Flagged::exact(p.above + p.total - p.antiderivative(s)));
        }
        let last = self.panels.last().expect("nonempty table");
        let head = last.above + last.total;
        let tail = if s > 0.0 {
            quadrature::integrate(|t| self.integrand(t), s, self.y_min(), &self.quad)?.value
        } else {
            quadrature::integrate(|t| self.integrand(t.max(1e-300)), 0.0, self.y_min(), &self.quad)?.value
        };
        Ok(Flagged { value: head + tail, extrapolated: true })
    }

    /// `q(x, y)` for `0 <= x <= y <= 1`.
    pub fn q_steady(&self, x: f64, y: f64) -> Result<Flagged> {
        check_unit(x)?;
        check_unit(y)?;
        if x > y {
            return Err(Error::InvalidParameter(alloc::format!("q needs x <= y, got x={x}, y={y}")));
        }
        let g = self.hyp.script_g(1.0 - x, 1)?;
        let b = self.b1(1.0 - y, 1)?;
        let c = self.b_circ_0(x)?;
        Ok(Flagged { value: g * b.value + c.value, extrapolated: b.extrapolated || c.extrapolated })
    }

    /// Joint density of the five fitness values: `sum_nu q(min, max)` over cyclic neighbours.
    pub fn joint_density(&self, f: &[f64; 5]) -> Result<Flagged> {
        let mut out = Flagged::exact(0.0);
        for nu in 0..5 {
            let (a, b) = (f[nu], f[(nu + 1) % 5]);
            let q = self.q_steady(a.min(b), a.max(b))?;
            out.value += q.value;
            out.extrapolated |= q.extrapolated;
        }
        Ok(out)
    }

    fn b1_total(&self) -> Result<f64> {
        // B(1) - B(0): the literal marginal's total mass minus 3/5.
        Ok(self.b1(1.0, 0)?.value - self.b1(0.0, 0)?.value)
    }

    /// One-dimensional marginal density.
    pub fn marginal_pdf(&self, x: f64, form: MarginalForm) -> Result<Flagged> {
        check_unit(x)?;
        let b = self.b1(1.0 - x, 1)?;
        let value = match form {
            MarginalForm::Integrated => 0.6 + 2.0 * b.value,
            MarginalForm::Literal => 0.6 + b.value,
            MarginalForm::LiteralRenormalized => (0.6 + b.value) / (0.6 + self.b1_total()?),
        };
        Ok(Flagged { value, extrapolated: b.extrapolated })
    }

    /// Cumulative distribution of [`Self::marginal_pdf`] via the exact antiderivative in `B`.
    pub fn marginal_cdf(&self, x: f64, form: MarginalForm) -> Result<Flagged> {
        check_unit(x)?;
        let top = self.b1(1.0, 0)?.value;
        let b = self.b1(1.0 - x, 0)?;
        let value = match form {
            MarginalForm::Integrated => 0.6 * x + 2.0 * (top - b.value),
            MarginalForm::Literal => 0.6 * x + top - b.value,
            MarginalForm::LiteralRenormalized => (0.6 * x + top - b.value) / (0.6 + self.b1_total()?),
        };
        Ok(Flagged { value, extrapolated: b.extrapolated })
    }

    /// `int_0^{1-y} Bc0(x) dx`, whose derivative in `y` is `-Bc0(1 - y)`.
    pub fn script_b0(&self, y: f64) -> Result<Flagged> {
        check_unit(y)?;
        let top = 1.0 - y;
        let split = (1.0 - self.y_min()).min(top);
        let mut v = quadrature::integrate(|x| Ok(self.b_circ_0(x)?.value), 0.0, split, &self.quad)?.value;
        let extrapolated = top > split;
        if extrapolated {
            v += quadrature::integrate(|x| Ok(self.b_circ_0(x)?.value), split, top, &self.quad)?.value;
        }
        Ok(Flagged { value: v, extrapolated })
    }

    /// `B(0)` by extrapolation; the single-variable integral equation forces 0.
    pub fn b1_at_zero(&self) -> Result<f64> {
        Ok(self.b1(0.0, 0)?.value)
    }

    /// Residual of `Bc0'(x)(1-x) + G'(x) int_x^1 B'(1-s) ds + B''(1-x) SG(1-x)` at `x`.
    ///
    /// With `Bc0' ` taken from the integrand this reduces to `SG''(1-x) B(0)`.
    pub fn integral_equation_residual(&self, x: f64) -> Result<(f64, f64)> {
        check_unit(x)?;
        let y = 1.0 - x;
        let d = self.integrand(y)?;
        let g_prime = -self.hyp.script_g(y, 2)?;
        let tail = self.b1(y, 0)?.value - self.b1(0.0, 0)?.value;
        let b2 = self.b1(y, 2)?.value;
        let sg = self.hyp.script_g(y, 0)?;
        let terms = [d * y, g_prime * tail, b2 * sg];
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        Ok((terms.iter().sum(), scale))
    }
}

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain { y: x, lo: 0.0, hi: 1.0 });
    }
    Ok(())
}

/// Uniform law on `[2/3, 1]`, the conjectured large-N limit.
pub fn conjectured_cdf(x: f64) -> f64 {
    (3.0 * x - 2.0).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> SteadyModel {
        SteadyModel::default_model().unwrap()
    }

    #[test]
    fn cheb_antiderivative_of_polynomial() {
        let n = 8;
        let vals: Vec<f64> = (0..=n)
            .map(|j| {
                let t = libm::cos(core::f64::consts::PI * j as f64 / n as f64);
                3.0 * t * t - 1.0
            })
            .collect();
        let p = ChebPanel { lo: -1.0, hi: 1.0, coeffs: cheb_antiderivative(&vals, 1.0), total: 0.0, above: 0.0 };
        for s in [-1.0, -0.3, 0.5, 1.0] {
            let want = s * s * s - s;
            assert!((p.antiderivative(s) - want).abs() < 1e-14, "{s}");
        }
    }

    #[test]
    fn table_matches_quadrature() {
        let m = model();
        for x in [0.0, 0.1, 0.37, 0.5, 0.8, 0.95, 0.998] {
            let a = m.b_circ_0(x).unwrap();
            let b = m.b_circ_0_quadrature(x).unwrap();
            assert!(!a.extrapolated && !b.extrapolated);
            assert!((a.value - b.value).abs() < 1e-10, "x={x}: {} vs {}", a.value, b.value);
        }
        assert_eq!(m.b_circ_0(0.0).unwrap().value, 0.0);
        assert!(m.b_circ_0(0.9995).unwrap().extrapolated);
    }

    #[test]
    fn q_vanishes_at_left_edge() {
        let m = model();
        for y in [0.1, 0.5, 0.9] {
            assert!(m.q_steady(0.0, y).unwrap().value.abs() < 1e-14);
        }
        assert!(m.q_steady(0.6, 0.4).is_err());
    }

    #[test]
    fn marginal_at_zero() {
        let m = model();
        let v = m.marginal_pdf(0.0, MarginalForm::Integrated).unwrap();
        assert!((v.value - 0.6).abs() < 1e-12);
        assert_eq!(m.marginal_cdf(0.0, MarginalForm::Integrated).unwrap().value, 0.0);
    }

    #[test]
    fn conjectured_limit() {
        assert_eq!(conjectured_cdf(2.0 / 3.0), 0.0);
        assert_eq!(conjectured_cdf(1.0), 1.0);
        assert!((conjectured_cdf(5.0 / 6.0) - 0.5).abs() < 1e-15);
        assert_eq!(conjectured_cdf(0.2), 0.0);
    }

    #[test]
    fn joint_density_symmetries() {
        let m = model();
        let f = [0.3, 0.8, 0.55, 0.91, 0.62];
        let base = m.joint_density(&f).unwrap().value;
        let shifted = [f[1], f[2], f[3], f[4], f[0]];
        assert!((m.joint_density(&shifted).unwrap().value - base).abs() < 1e-13);
        let c = 0.7;
        let diag = m.joint_density(&[c; 5]).unwrap().value;
        assert!((diag - 5.0 * m.q_steady(c, c).unwrap().value).abs() < 1e-13);
    }
}
