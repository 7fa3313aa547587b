//! The fifth-order linear ODE `sum_j c_j(y) B^(j)(y) = 0` for the steady-state
//! generating function `B`, integrated downward from the boundary values at `y = 1`.
//!
//! Integration uses an adaptive Dormand-Prince 8(5,3) pair; every accepted step
//! keeps its order-7 interpolant so the solution can be evaluated anywhere.

mod tableau;

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hypergeom::Hypergeom;
use tableau::{A, B, C, D, E3, E5, N_STAGES};

/// State `(B, B', B'', B''', B'''')`.
pub type State = [f64; 5];

/// Boundary values at `y = 1` implied by the stabilized coefficients.
pub const DEFAULT_BC: State = [0.2, 0.0, -0.2, 1.0, -3.6];

/// `c_0 .. c_5` at a point `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientVector {
    pub y: f64,
    pub c: [f64; 6],
}

impl CoefficientVector {
    /// `sum_j c_j u_j` for a state extended by the fifth derivative.
    pub fn apply(&self, u: &State, u5: f64) -> f64 {
        self.c[..5].iter().zip(u).map(|(c, v)| c * v).sum::<f64>() + self.c[5] * u5
    }

    /// `sum_j |c_j u_j|`, the natural scale of [`Self::apply`].
    pub fn magnitude(&self, u: &State, u5: f64) -> f64 {
        self.c[..5].iter().zip(u).map(|(c, v)| (c * v).abs()).sum::<f64>() + (self.c[5] * u5).abs()
    }
}

fn check_y(y: f64) -> Result<()> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::OutOfDomain { y, lo: 0.0, hi: 1.0 });
    }
    Ok(())
}

/// Simplified coefficients, built from script-G and its first derivative.
pub fn coefficients(h: &Hypergeom, y: f64) -> Result<CoefficientVector> {
    check_y(y)?;
    let (g, gp) = h.script_g01(y)?;
    let y2 = y * y;
    let y3 = y2 * y;
    let y6 = y3 * y3;
    let c0 = 18.0 * y2 * y2 / ((y3 + 2.0) * (y3 + 2.0)) * (y * (y3 - 22.0) * gp + (5.0 * y3 - 14.0) * g);
    let c1 = -y * c0;
    let c2 = 6.0 / (y3 + 2.0) * (y * (3.0 * y6 - 38.0 * y3 - 4.0) * gp + (15.0 * y6 - 10.0 * y3 + 4.0) * g);
    let c3 = -12.0 * y * (y * (4.0 * y3 - 1.0) * gp + (5.0 * y3 + 1.0) * g);
    let c4 = -3.0 * y2 * (y * (y3 + 2.0) * gp + (9.0 * y3 - 2.0) * g);
    let c5 = y3 * (y3 + 2.0) * (y * gp - g);
    Ok(CoefficientVector { y, c: [c0, c1, c2, c3, c4, c5] })
}

/// Unsimplified coefficients in terms of script-G derivatives of orders 0 to 5.
pub fn raw_coefficients(h: &Hypergeom, y: f64) -> Result<CoefficientVector> {
    check_y(y)?;
    let g = h.script_g_all(y)?;
    let y2 = y * y;
    let y3 = y2 * y;
    let c0 = 6.0 * (5.0 * y3 - 2.0) * g[2]
        + 6.0 * y * (5.0 * y3 + 2.0) * g[3]
        + y2 * (9.0 * y3 - 6.0) * g[4]
        + y3 * (y3 + 2.0) * g[5];
    let c1 = 3.0 * y * ((y3 + 4.0) * g[2] + y * (3.0 * y3 - 4.0) * g[3] + y2 * (y3 + 2.0) * g[4]);
    let c2 = 6.0 * (2.0 - 5.0 * y3) * g[0] - 6.0 * y * (13.0 * y3 + 2.0) * g[1] - 9.0 * y2 * y3 * g[2]
        + y3 * ((11.0 * y3 + 4.0) * g[3] + (y3 + 2.0) * y * g[4]);
    let c3 = y
        * (-3.0 * (19.0 * y3 + 4.0) * g[0]
            + 3.0 * y * (4.0 - 9.0 * y3) * g[1]
            + 4.0 * y2 * (4.0 * y3 - 1.0) * g[2]
            + 3.0 * y3 * (y3 + 2.0) * g[3]);
    let c4 = 3.0 * y2 * ((2.0 - 6.0 * y3) * g[0] + 2.0 * y * (y3 - 1.0) * g[1] + y2 * (y3 + 2.0) * g[2]);
    let c5 = y3 * (y3 + 2.0) * (-g[0] + y * g[1]);
    Ok(CoefficientVector { y, c: [c0, c1, c2, c3, c4, c5] })
}

/// Tolerances and domain for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub y_min: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
    /// `|c_5|` below this multiple of `sum |c_j|` counts as singular.
    pub singular_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            y_min: 1e-3,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            initial_step: 1e-2,
            max_steps: 100_000,
            singular_floor: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.y_min > 0.0 && self.y_min < 1.0) {
            return Err(Error::InvalidParameter("y_min must lie in (0, 1)".into()));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol >= 0.0 && self.initial_step > 0.0) {
            return Err(Error::InvalidParameter("tolerances and initial step must be positive".into()));
        }
        Ok(())
    }
}

/// Counters gathered while integrating.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    /// Smallest `|c_5|` met at any right-hand-side evaluation.
    pub min_abs_c5: f64,
    pub min_abs_c5_at: f64,
    /// Smallest `|c_5| / sum |c_j|`.
    pub min_relative_c5: f64,
    /// `-1`, `+1`, or `0` when the sign of `c_5` changed along the way.
    pub c5_sign: i8,
}

struct Rhs<'a> {
    h: &'a Hypergeom,
    floor: f64,
    diag: Diagnostics,
}

impl<'a> Rhs<'a> {
    fn new(h: &'a Hypergeom, floor: f64) -> Self {
        let diag = Diagnostics { min_abs_c5: f64::INFINITY, min_relative_c5: f64::INFINITY, ..Diagnostics::default() };
        Rhs { h, floor, diag }
    }

    fn eval(&mut self, y: f64, u: &State) -> Result<State> {
        let cv = coefficients(self.h, y)?;
        let c = &cv.c;
        let scale: f64 = c.iter().map(|v| v.abs()).sum();
        let c5 = c[5];
        let d = &mut self.diag;
        d.rhs_evaluations += 1;
        if c5.abs() < d.min_abs_c5 {
            d.min_abs_c5 = c5.abs();
            d.min_abs_c5_at = y;
        }
        d.min_relative_c5 = d.min_relative_c5.min(c5.abs() / scale);
        let sign = if c5 < 0.0 { -1 } else { 1 };
        if d.rhs_evaluations == 1 {
            d.c5_sign = sign;
        } else if d.c5_sign != sign {
            d.c5_sign = 0;
        }
        if !(c5.abs() > self.floor * scale) {
            return Err(Error::SingularPoint { y });
        }
        let top = -(c[0] * u[0] + c[1] * u[1] + c[2] * u[2] + c[3] * u[3] + c[4] * u[4]) / c5;
        Ok([u[1], u[2], u[3], u[4], top])
    }
}

fn axpy(u: &State, h: f64, k: &[State], w: &[f64]) -> State {
    let mut out = *u;
    for (ks, ws) in k.iter().zip(w) {
        if *ws != 0.0 {
            for n in 0..5 {
                out[n] += h * ws * ks[n];
            }
        }
    }
    out
}

/// One accepted step and its interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub y_start: f64,
    pub y_end: f64,
    pub u_start: State,
    pub u_end: State,
    f: [State; 7],
}

impl Segment {
    /// Interpolated `(value, d/dy)` of component `n` at `y`.
    fn eval(&self, y: f64, n: usize) -> (f64, f64) {
        let h = self.y_end - self.y_start;
        let x = (y - self.y_start) / h;
        // Nested form x(F0 + (1-x)(F1 + x(F2 + ...))) evaluated together with its x-derivative.
        let (mut v, mut dv) = (0.0, 0.0);
        for (i, fi) in self.f.iter().enumerate().rev() {
            v += fi[n];
            let (m, dm) = if i % 2 == 0 { (x, 1.0) } else { (1.0 - x, -1.0) };
            dv = dv * m + v * dm;
            v *= m;
        }
        (self.u_start[n] + v, dv / h)
    }

    fn contains(&self, y: f64) -> bool {
        let (lo, hi) = if self.y_start < self.y_end { (self.y_start, self.y_end) } else { (self.y_end, self.y_start) };
        lo <= y && y <= hi
    }
}

/// The solved `B` on `[y_min, 1]` with derivatives up to order 5.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    segments: Vec<Segment>,
    y_start: f64,
    y_lo: f64,
    y_hi: f64,
    u_start: State,
    diagnostics: Diagnostics,
}

impl DenseSolution {
    /// Lower end of the solved interval.
    pub fn y_min(&self) -> f64 {
        self.y_lo
    }

    /// Upper end of the solved interval.
    pub fn y_max(&self) -> f64 {
        self.y_hi
    }

    /// State the integration started from.
    pub fn initial_state(&self) -> &State {
        &self.u_start
    }

    /// State at the far end of the integration.
    pub fn final_state(&self) -> &State {
        self.segments.last().map_or(&self.u_start, |s| &s.u_end)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Step boundaries in integration order.
    pub fn mesh(&self) -> Vec<f64> {
        let mut m = Vec::with_capacity(self.segments.len() + 1);
        m.push(self.y_start);
        m.extend(self.segments.iter().map(|s| s.y_end));
        m
    }

    fn segment(&self, y: f64) -> Result<&Segment> {
        if !(y >= self.y_lo && y <= self.y_hi) || self.segments.is_empty() {
            return Err(Error::OutOfDomain { y, lo: self.y_lo, hi: self.y_hi });
        }
        let idx = if self.y_start == self.y_hi {
            self.segments.partition_point(|s| s.y_end > y)
        } else {
            self.segments.partition_point(|s| s.y_end < y)
        };
        let s = &self.segments[idx.min(self.segments.len() - 1)];
        debug_assert!(s.contains(y));
        Ok(s)
    }

    /// `B^(order)(y)` for `order` in `0..=5` and `y` in the solved interval.
    ///
    /// Orders 0 to 4 are interpolated state components; order 5 is the
    /// derivative of the interpolated fourth derivative.
    pub fn eval(&self, y: f64, order: u32) -> Result<f64> {
        if order > 5 {
            return Err(Error::InvalidParameter(alloc::format!("derivative order {order} > 5")));
        }
        if y == self.y_start && order < 5 {
            return Ok(self.u_start[order as usize]);
        }
        let s = self.segment(y)?;
        Ok(if order == 5 { s.eval(y, 4).1 } else { s.eval(y, order as usize).0 })
    }

    /// Full state at `y`.
    pub fn state(&self, y: f64) -> Result<State> {
        if y == self.y_start {
            return Ok(self.u_start);
        }
        let s = self.segment(y)?;
        let mut u = [0.0; 5];
        for (n, v) in u.iter_mut().enumerate() {
            *v = s.eval(y, n).0;
        }
        Ok(u)
    }

    /// Like [`Self::eval`] but accepts `y` in `[0, y_min)` by Taylor extrapolation
    /// from `y_min`; the flag is set when extrapolation was used.
    pub fn eval_extrapolated(&self, y: f64, order: u32) -> Result<(f64, bool)> {
        if y >= self.y_lo || order > 4 {
            return Ok((self.eval(y, order)?, false));
        }
        if y < 0.0 {
            return Err(Error::OutOfDomain { y, lo: 0.0, hi: 1.0 });
        }
        let u = self.state(self.y_lo)?;
        let dy = y - self.y_lo;
        let mut v = 0.0;
        let mut p = 1.0;
        for (k, val) in u[order as usize..].iter().enumerate() {
            v += val * p;
            p *= dy / (k + 1) as f64;
        }
        Ok((v, true))
    }
}

/// Integrates from `(y_start, u_start)` to `y_end` in either direction.
pub fn integrate(h: &Hypergeom, cfg: &SolverConfig, y_start: f64, u_start: State, y_end: f64) -> Result<DenseSolution> {
    cfg.validate()?;
    check_y(y_start)?;
    check_y(y_end)?;
    let mut rhs = Rhs::new(h, cfg.singular_floor);
    let dir = if y_end < y_start { -1.0 } else { 1.0 };
    let mut y = y_start;
    let mut u = u_start;
    let mut f = rhs.eval(y, &u)?;
    let mut h_abs = cfg.initial_step.min((y_end - y_start).abs());
    let mut segments = Vec::new();
    let mut k = [[0.0; 5]; 16];
    let exponent = -1.0 / 8.0;

    while (y_end - y) * dir > 0.0 {
        if segments.len() >= cfg.max_steps {
            return Err(Error::TooManySteps { y });
        }
        let mut rejected = false;
        loop {
            let min_step = 10.0 * f64::EPSILON * y.abs().max(1e-300);
            if h_abs < min_step {
                return Err(Error::StepUnderflow { y, h: h_abs });
            }
            let mut hs = h_abs * dir;
            let mut y_new = y + hs;
            if (y_new - y_end) * dir > 0.0 {
                y_new = y_end;
                hs = y_new - y;
                h_abs = hs.abs();
            }
            k[0] = f;
            for s in 1..N_STAGES {
                let us = axpy(&u, hs, &k[..s], &A[s][..s]);
                k[s] = rhs.eval(y + C[s] * hs, &us)?;
            }
            let u_new = axpy(&u, hs, &k[..N_STAGES], &B);
            let f_new = rhs.eval(y_new, &u_new)?;
            k[N_STAGES] = f_new;

            let mut e5 = 0.0;
            let mut e3 = 0.0;
            for n in 0..5 {
                let sc = cfg.abs_tol + u[n].abs().max(u_new[n].abs()) * cfg.rel_tol;
                let a: f64 = (0..=N_STAGES).map(|s| k[s][n] * E5[s]).sum::<f64>() / sc;
                let b: f64 = (0..=N_STAGES).map(|s| k[s][n] * E3[s]).sum::<f64>() / sc;
                e5 += a * a;
                e3 += b * b;
            }
            let err = if e5 == 0.0 && e3 == 0.0 { 0.0 } else { h_abs * e5 / libm::sqrt((e5 + 0.01 * e3) * 5.0) };

            if err < 1.0 {
                let mut factor = if err == 0.0 { 10.0 } else { (0.9 * libm::pow(err, exponent)).min(10.0) };
                if rejected {
                    factor = factor.min(1.0);
                }
                // Extra stages for the interpolant.
                for s in N_STAGES + 1..16 {
                    let us = axpy(&u, hs, &k[..s], &A[s][..s]);
                    k[s] = rhs.eval(y + C[s] * hs, &us)?;
                }
                let mut fi = [[0.0; 5]; 7];
                for n in 0..5 {
                    let dy = u_new[n] - u[n];
                    fi[0][n] = dy;
                    fi[1][n] = hs * f[n] - dy;
                    fi[2][n] = 2.0 * dy - hs * (f_new[n] + f[n]);
                    for (r, drow) in D.iter().enumerate() {
                        fi[3 + r][n] = hs * (0..16).map(|s| drow[s] * k[s][n]).sum::<f64>();
                    }
                }
                segments.push(Segment { y_start: y, y_end: y_new, u_start: u, u_end: u_new, f: fi });
                rhs.diag.accepted_steps += 1;
                y = y_new;
                u = u_new;
                f = f_new;
                h_abs *= factor;
                break;
            }
            rhs.diag.rejected_steps += 1;
            rejected = true;
            h_abs *= (0.9 * libm::pow(err, exponent)).max(0.2);
        }
    }
    Ok(DenseSolution {
        segments,
        y_start,
        y_lo: y_start.min(y_end),
        y_hi: y_start.max(y_end),
        u_start,
        diagnostics: rhs.diag,
    })
}

/// Integrates from the boundary values at `y = 1` down to `cfg.y_min`.
pub fn solve(h: &Hypergeom, cfg: &SolverConfig, bc: State) -> Result<DenseSolution> {
    integrate(h, cfg, 1.0, bc, cfg.y_min)
}

/// Classical fixed-step RK4 from `y = 1` to `y_end`, returning the state at every node.
///
/// Independent of the adaptive solver; used for cross-checks.
pub fn solve_rk4(h: &Hypergeom, bc: State, y_end: f64, n_steps: usize) -> Result<Vec<(f64, State)>> {
    check_y(y_end)?;
    if n_steps == 0 {
        return Err(Error::InvalidParameter("RK4 needs at least one step".into()));
    }
    let mut rhs = Rhs::new(h, 0.0);
    let hs = (y_end - 1.0) / n_steps as f64;
    let mut u = bc;
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push((1.0, u));
    for i in 0..n_steps {
        let y = 1.0 + i as f64 * hs;
        let k1 = rhs.eval(y, &u)?;
        let k2 = rhs.eval(y + hs / 2.0, &axpy(&u, hs / 2.0, &[k1], &[1.0]))?;
        let k3 = rhs.eval(y + hs / 2.0, &axpy(&u, hs / 2.0, &[k2], &[1.0]))?;
        let y_next = if i + 1 == n_steps { y_end } else { 1.0 + (i + 1) as f64 * hs };
        let k4 = rhs.eval(y_next, &axpy(&u, hs, &[k3], &[1.0]))?;
        u = axpy(&u, hs / 6.0, &[k1, k2, k3, k4], &[1.0, 2.0, 2.0, 1.0]);
        out.push((y_next, u));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergeom::SeriesConfig;

    fn h() -> Hypergeom {
        Hypergeom::new(SeriesConfig::default()).unwrap()
    }

    #[test]
    fn coefficients_at_one() {
        let cv = coefficients(&h(), 1.0).unwrap();
        let want = [-18.0, 18.0, 18.0, -72.0, -21.0, -3.0];
        for (a, b) in cv.c.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn raw_matches_simplified() {
        let h = h();
        for y in [0.4, 0.8, 1.0] {
            let s = coefficients(&h, y).unwrap();
            let r = raw_coefficients(&h, y).unwrap();
            for (a, b) in s.c.iter().zip(r.c) {
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "y={y}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn interpolant_hits_step_endpoints() {
        let sol = solve(&h(), &SolverConfig::default(), DEFAULT_BC).unwrap();
        for s in sol.segments() {
            for n in 0..5 {
                let (v0, _) = s.eval(s.y_start, n);
                let (v1, _) = s.eval(s.y_end, n);
                assert!((v0 - s.u_start[n]).abs() < 1e-14 * (1.0 + v0.abs()));
                assert!((v1 - s.u_end[n]).abs() < 1e-12 * (1.0 + v1.abs()));
            }
        }
    }

    #[test]
    fn boundary_values_exact() {
        let sol = solve(&h(), &SolverConfig::default(), DEFAULT_BC).unwrap();
        for (o, want) in DEFAULT_BC.iter().enumerate() {
            assert_eq!(sol.eval(1.0, o as u32).unwrap(), *want);
        }
        assert!(sol.eval(1.5, 0).is_err());
        assert!(sol.eval(1e-4, 0).is_err());
        let (_, flag) = sol.eval_extrapolated(1e-4, 0).unwrap();
        assert!(flag);
    }

    #[test]
    fn near_boundary_taylor() {
        let sol = solve(&h(), &SolverConfig::default(), DEFAULT_BC).unwrap();
        let v = sol.eval(0.999, 2).unwrap();
        assert!((v - (-0.2 - 1e-3)).abs() < 1e-5, "{v}");
    }

    #[test]
    fn rk4_agrees_with_adaptive() {
        let h = h();
        let sol = solve(&h, &SolverConfig::default(), DEFAULT_BC).unwrap();
        let rk = solve_rk4(&h, DEFAULT_BC, 0.5, 400).unwrap();
        let (y, u) = rk.last().unwrap();
        assert_eq!(*y, 0.5);
        for n in 0..5 {
            let v = sol.eval(0.5, n as u32).unwrap();
            assert!((v - u[n]).abs() < 1e-7 * (1.0 + v.abs()), "n={n}: {v} vs {}", u[n]);
        }
    }

    #[test]
    fn residual_along_solution() {
        let h = h();
        let sol = solve(&h, &SolverConfig::default(), DEFAULT_BC).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..100 {
            let y = 1e-3 + (1.0 - 1e-3) * (i as f64 + 0.5) / 100.0;
            let u = sol.state(y).unwrap();
            let u5 = sol.eval(y, 5).unwrap();
            let cv = coefficients(&h, y).unwrap();
            worst = worst.max(cv.apply(&u, u5).abs() / cv.magnitude(&u, u5));
        }
        assert!(worst < 1e-7, "worst relative residual {worst}");
    }

    #[test]
    fn tolerance_refinement_is_stable() {
        let h = h();
        let a = solve(&h, &SolverConfig::default(), DEFAULT_BC).unwrap();
        let cfg = SolverConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..SolverConfig::default() };
        let b = solve(&h, &cfg, DEFAULT_BC).unwrap();
        let (va, vb) = (a.eval(0.5, 0).unwrap(), b.eval(0.5, 0).unwrap());
        assert!((va - vb).abs() < 1e-8, "{va} vs {vb}");
    }

    #[test]
    fn upward_from_checkpoint_returns_to_boundary() {
        let h = h();
        let cfg = SolverConfig::default();
        let down = solve(&h, &cfg, DEFAULT_BC).unwrap();
        let up = integrate(&h, &cfg, 0.3, down.state(0.3).unwrap(), 1.0).unwrap();
        for (a, b) in up.final_state().iter().zip(DEFAULT_BC) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        let mid = up.eval(0.6, 1).unwrap();
        assert!((mid - down.eval(0.6, 1).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn continuous_across_steps() {
        let sol = solve(&h(), &SolverConfig::default(), DEFAULT_BC).unwrap();
        for w in sol.segments().windows(2) {
            let y = w[0].y_end;
            for n in 0..5 {
                let left = w[0].eval(y, n).0;
                let right = w[1].eval(y, n).0;
                assert!((left - right).abs() < 1e-10 * (1.0 + left.abs()));
            }
        }
        let d = sol.diagnostics();
        assert!(d.accepted_steps > 10);
        assert!(d.c5_sign != 0);
    }

    #[test]
    fn invalid_config() {
        let cfg = SolverConfig { y_min: 0.0, ..SolverConfig::default() };
        assert!(solve(&h(), &cfg, DEFAULT_BC).is_err());
    }
}
