//! Adaptive Gauss-Kronrod (7/15) quadrature.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Tolerances and panel budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { abs_tol: 1e-10, rel_tol: 1e-10, max_panels: 2000 }
    }
}

/// Result of a quadrature: value and estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

/// One 15-point Kronrod panel on `[a, b]` with its embedded 7-point Gauss estimate.
pub fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<Quad> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx)? + f(c + dx)?;
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Ok(Quad { value: kron * h, error: ((kron - gauss) * h).abs() })
}

/// Globally adaptive bisection until the summed error estimate meets the tolerance.
pub fn integrate<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<Quad> {
    if a == b {
        return Ok(Quad { value: 0.0, error: 0.0 });
    }
    let first = gk15(&mut f, a, b)?;
    let mut panels: Vec<(f64, f64, Quad)> = alloc::vec![(a, b, first)];
    loop {
        let value: f64 = panels.iter().map(|p| p.2.value).sum();
        let error: f64 = panels.iter().map(|p| p.2.error).sum();
        if error <= cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
            return Ok(Quad { value, error });
        }
        if panels.len() >= cfg.max_panels {
            return Err(Error::Quadrature { a, b, error });
        }
        let (idx, _) = panels.iter().enumerate().max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error)).unwrap();
        let (lo, hi, _) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Quadrature { a, b, error });
        }
        panels.push((lo, mid, gk15(&mut f, lo, mid)?));
        panels.push((mid, hi, gk15(&mut f, mid, hi)?));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let q = gk15(&mut |x| Ok(x.powi(20)), 0.0, 1.0).unwrap();
        assert!((q.value - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_integrand() {
        let q = integrate(|x| Ok(libm::exp(x) * libm::sin(3.0 * x)), 0.0, 2.0, &QuadConfig::default()).unwrap();
        let exact = |x: f64| libm::exp(x) * (libm::sin(3.0 * x) - 3.0 * libm::cos(3.0 * x)) / 10.0;
        assert!((q.value - (exact(2.0) - exact(0.0))).abs() < 1e-12);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        let cfg = QuadConfig::default();
        assert_eq!(integrate(Ok, 0.3, 0.3, &cfg).unwrap().value, 0.0);
        let q = integrate(Ok, 1.0, 0.0, &cfg).unwrap();
        assert!((q.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let cfg = QuadConfig { abs_tol: 0.0, rel_tol: 0.0, max_panels: 4 };
        assert!(matches!(integrate(|x| Ok(libm::sqrt(x)), 0.0, 1.0, &cfg), Err(Error::Quadrature { .. })));
    }
}
