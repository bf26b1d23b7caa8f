//! The comparison equation
//!
//! ```text
//! (1/r^{n-1}) (r^{n-1} (1+g) v')' - λ v / r² = 0,   λ = n - 1,
//! ```
//!
//! written in `t = -log r` as the first-order system
//! `v' = w / (1+g)`, `w' = λ v + (n-2) w` with `w = (1+g) dv/dt`.
//!
//! The finite-energy solution decays like `e^{-t}` as `t → ∞`. It is found by
//! integrating backward from `t_max` (classical RK4, fixed step): the other
//! solution, growing like `e^{(n-1)t}`, is damped by `e^{-n(t_max - t)}` on the
//! way back.

use std::io::Write;

use crate::error::{Error, Result};
use crate::profiles::{total_variation, Horizon, RadialProfile, TAIL_SPAN};
use crate::quadrature::{cumulative_simpson, linear_fit, simpson};
use crate::verdict::{Status, Verdict};

pub const DEFAULT_STEP: f64 = 1e-3;
pub const MAX_STEP: f64 = 1e-3;

/// Largest growth of `log(Z/r)` over the final span still read as bounded.
pub const BOUNDED_EXCESS: f64 = 0.05;
/// Growth of `log(Z/r)` over the final span read as unbounded.
pub const UNBOUNDED_EXCESS: f64 = 0.1;
/// Absolute level of `log(Z/r)` read as unbounded when still rising.
pub const UNBOUNDED_LOG_RATIO: f64 = 10.0;

const RESCALE_ABOVE: f64 = 1e250;

/// Eigenvalues `(Λ1, Λ2)` of the frozen-coefficient matrix
/// `[[0, 1/(1+g)], [λ, n-2]]`, with `Λ1 < 0 < Λ2`.
pub fn frozen_eigenvalues(g: f64, n: usize, lambda: f64) -> (f64, f64) {
    let b = (n as f64) - 2.0;
    let disc = (b * b + 4.0 * lambda / (1.0 + g)).sqrt();
    (0.5 * (b - disc), 0.5 * (b + disc))
}

/// `dΛ1/dg` at `g = 0` for the first spherical harmonic: `(n-1)/n`.
pub fn decaying_rate_slope(n: usize) -> f64 {
    (n as f64 - 1.0) / n as f64
}

/// Grid function `(t_i, v_i, w_i)` solving the comparison system.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    n: usize,
    eigenvalue: f64,
    t: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    dv: Vec<f64>,
    normalization: f64,
}

impl RadialSolution {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Angular eigenvalue `λ` (`n - 1` for `Z`, `k(k+n-2)` for mode `k`).
    pub fn eigenvalue(&self) -> f64 {
        self.eigenvalue
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// `dv/dt`.
    pub fn dv(&self) -> &[f64] {
        &self.dv
    }

    /// Factor applied to the raw integration to reach the boundary value.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    /// `v(t) / r = v(t) e^{t}`.
    pub fn v_over_r(&self) -> Vec<f64> {
        self.t.iter().zip(&self.v).map(|(t, v)| v * t.exp()).collect()
    }

    fn index_at_or_after(&self, t: f64) -> usize {
        self.t.partition_point(|x| *x < t - 1e-12).min(self.t.len() - 1)
    }

    /// Cubic Hermite interpolation of `v` (uses `dv/dt`).
    pub fn value_at(&self, t: f64) -> f64 {
        let last = self.t.len() - 1;
        let t = t.clamp(self.t[0], self.t[last]);
        let i = self.t.partition_point(|x| *x <= t).clamp(1, last) - 1;
        let h = self.t[i + 1] - self.t[i];
        let s = (t - self.t[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.v[i] + h10 * h * self.dv[i] + h01 * self.v[i + 1] + h11 * h * self.dv[i + 1]
    }

    /// Writes `t,r,v,w,v_over_r` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "r", "v", "w", "v_over_r"])?;
        for i in 0..self.len() {
            let t = self.t[i];
            let r = (-t).exp();
            wtr.write_record([
                fmt12(t),
                fmt12(r),
                fmt12(self.v[i]),
                fmt12(self.w[i]),
                fmt12(self.v[i] / r),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

fn rhs(p: &RadialProfile, n: usize, lambda: f64, t: f64, s: [f64; 2]) -> [f64; 2] {
    let q = 1.0 + p.g(t);
    [s[1] / q, lambda * s[0] + (n as f64 - 2.0) * s[1]]
}

fn rk4_step(p: &RadialProfile, n: usize, lambda: f64, t: f64, s: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], c: f64| [a[0] + c * b[0], a[1] + c * b[1]];
    let k1 = rhs(p, n, lambda, t, s);
    let k2 = rhs(p, n, lambda, t + 0.5 * h, add(s, k1, 0.5 * h));
    let k3 = rhs(p, n, lambda, t + 0.5 * h, add(s, k2, 0.5 * h));
    let k4 = rhs(p, n, lambda, t + h, add(s, k3, h));
    [
        s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Integrates the system from `(t0, state)` to `t1` with RK4 using
/// `ceil(|t1 - t0| / step)` equal steps. Returns the state at `t1`.
pub fn integrate_between(
    p: &RadialProfile,
    n: usize,
    lambda: f64,
    t0: f64,
    state: [f64; 2],
    t1: f64,
    step: f64,
) -> [f64; 2] {
    let count = step_count(t0, t1, step);
    let h = (t1 - t0) / count as f64;
    let mut s = state;
    for i in 0..count {
        s = rk4_step(p, n, lambda, t0 + i as f64 * h, s, h);
    }
    s
}

fn step_count(t0: f64, t1: f64, step: f64) -> usize {
    (((t1 - t0).abs() / step) - 1e-9).ceil().max(1.0) as usize
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step <= MAX_STEP {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("step must lie in (0, {MAX_STEP}], got {step}")))
    }
}

/// Which solution of the system to follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Finite-energy solution, `~ r^k` near the origin.
    Decaying,
    /// `~ r^{-(k+n-2)}` near the origin.
    Growing,
}

/// Solves the radial equation with angular eigenvalue `lambda` and scales the
/// result so that `v(t_min) = boundary`.
pub fn solve_radial(
    p: &RadialProfile,
    n: usize,
    lambda: f64,
    step: f64,
    boundary: f64,
    branch: Branch,
) -> Result<RadialSolution> {
    check_step(step)?;
    p.check_dimension(n)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("eigenvalue must be positive, got {lambda}")));
    }
    let (t_min, t_max) = (p.t_min(), p.t_max());
    let count = step_count(t_min, t_max, step);
    let h = (t_max - t_min) / count as f64;
    let grid: Vec<f64> = (0..=count)
        .map(|i| if i == count { t_max } else { t_min + i as f64 * h })
        .collect();

    let mut v = vec![0.0; count + 1];
    let mut w = vec![0.0; count + 1];
    match branch {
        Branch::Decaying => {
            // Seed on the decaying eigenvector of the frozen matrix at t_max.
            let q = 1.0 + p.g(t_max);
            let (mu, _) = frozen_eigenvalues(p.g(t_max), n, lambda);
            let mut s = [1.0, q * mu];
            v[count] = s[0];
            w[count] = s[1];
            for i in (0..count).rev() {
                s = rk4_step(p, n, lambda, grid[i + 1], s, -h);
                if s[0].abs() > RESCALE_ABOVE {
                    let f = 1.0 / RESCALE_ABOVE;
                    for j in i + 1..=count {
                        v[j] *= f;
                        w[j] *= f;
                    }
                    s = [s[0] * f, s[1] * f];
                }
                v[i] = s[0];
                w[i] = s[1];
            }
        }
        Branch::Growing => {
            let q = 1.0 + p.g(t_min);
            let (_, mu) = frozen_eigenvalues(p.g(t_min), n, lambda);
            let mut s = [1.0, q * mu];
            v[0] = s[0];
            w[0] = s[1];
            for i in 0..count {
                s = rk4_step(p, n, lambda, grid[i], s, h);
                v[i + 1] = s[0];
                w[i + 1] = s[1];
            }
        }
    }

    if let Some(i) = v.iter().position(|x| !(*x > 0.0)) {
        return Err(Error::SignChange { t: grid[i] });
    }
    let scale = boundary / v[0];
    for (vi, wi) in v.iter_mut().zip(w.iter_mut()) {
        *vi *= scale;
        *wi *= scale;
    }
    let dv = grid
        .iter()
        .zip(&w)
        .map(|(t, w)| w / (1.0 + p.g(*t)))
        .collect();
    Ok(RadialSolution {
        n,
        eigenvalue: lambda,
        t: grid,
        v,
        w,
        dv,
        normalization: scale,
    })
}

/// Positive finite-energy solution `Z` normalized by `Z(r_max) = r_max`
/// (so `g ≡ 0` gives `Z(r) = r`).
pub fn solve_z(p: &RadialProfile, n: usize, step: f64) -> Result<RadialSolution> {
    solve_radial(p, n, n as f64 - 1.0, step, p.r_max(), Branch::Decaying)
}

/// The solution behaving like `r^{1-n}` near the origin, same normalization.
pub fn solve_growing(p: &RadialProfile, n: usize, step: f64) -> Result<RadialSolution> {
    solve_radial(p, n, n as f64 - 1.0, step, p.r_max(), Branch::Growing)
}

/// Max over grid midpoints of `|w' - (n-2) w - λ v| / |v|`, the scale-free
/// form of the radial equation. `w'` is a fourth-order staggered difference
/// (one-sided in the end cells); midpoint values of `v` and `w` are cubic
/// Hermite interpolants.
pub fn ode_residual(sol: &RadialSolution) -> f64 {
    let n = sol.n as f64;
    let lambda = sol.eigenvalue;
    let w = &sol.w;
    let last = sol.len() - 1;
    let mut worst = 0.0f64;
    for i in 0..last {
        let h = sol.t[i + 1] - sol.t[i];
        let dw = |j: usize| lambda * sol.v[j] + (n - 2.0) * w[j];
        let v_mid = 0.5 * (sol.v[i] + sol.v[i + 1]) + h / 8.0 * (sol.dv[i] - sol.dv[i + 1]);
        let w_mid = 0.5 * (w[i] + w[i + 1]) + h / 8.0 * (dw(i) - dw(i + 1));
        let w_prime = if last < 3 {
            (w[i + 1] - w[i]) / h
        } else if i == 0 {
            (-23.0 * w[0] + 21.0 * w[1] + 3.0 * w[2] - w[3]) / (24.0 * h)
        } else if i == last - 1 {
            (23.0 * w[last] - 21.0 * w[last - 1] - 3.0 * w[last - 2] + w[last - 3]) / (24.0 * h)
        } else {
            (27.0 * (w[i + 1] - w[i]) - (w[i + 2] - w[i - 1])) / (24.0 * h)
        };
        let r = (w_prime - (n - 2.0) * w_mid - lambda * v_mid).abs() / v_mid.abs();
        worst = worst.max(r);
    }
    worst
}

/// A candidate `v(t)` known in closed form with two derivatives.
pub trait ClosedForm {
    fn v(&self, t: f64) -> f64;
    fn dv(&self, t: f64) -> f64;
    fn d2v(&self, t: f64) -> f64;
}

/// `v = C r^α = C e^{-α t}`.
#[derive(Debug, Clone, Copy)]
pub struct PowerLaw {
    pub alpha: f64,
    pub scale: f64,
}

impl ClosedForm for PowerLaw {
    fn v(&self, t: f64) -> f64 {
        self.scale * (-self.alpha * t).exp()
    }
    fn dv(&self, t: f64) -> f64 {
        -self.alpha * self.v(t)
    }
    fn d2v(&self, t: f64) -> f64 {
        self.alpha * self.alpha * self.v(t)
    }
}

/// `Z = r (A + sin|log r|) = e^{-t}(A + sin t)`.
#[derive(Debug, Clone, Copy)]
pub struct Ex3Z {
    pub a: f64,
}

impl ClosedForm for Ex3Z {
    fn v(&self, t: f64) -> f64 {
        (-t).exp() * (self.a + t.sin())
    }
    fn dv(&self, t: f64) -> f64 {
        (-t).exp() * (t.cos() - self.a - t.sin())
    }
    fn d2v(&self, t: f64) -> f64 {
        (-t).exp() * (self.a - 2.0 * t.cos())
    }
}

/// Exponent `α` with `r^α` solving the equation for `g ≡ c`:
/// `α² + (n-2) α - (n-1)/(1+c) = 0`, positive root.
pub fn power_law_exponent(c: f64, n: usize) -> f64 {
    let b = n as f64 - 2.0;
    0.5 * (-b + (b * b + 4.0 * (n as f64 - 1.0) / (1.0 + c)).sqrt())
}

/// Residual of a closed-form candidate on the given t-points, in the same
/// scale-free form as [`ode_residual`]. Uses the analytic `dg/dt`.
pub fn closed_form_residual<C: ClosedForm>(
    p: &RadialProfile,
    candidate: &C,
    n: usize,
    ts: &[f64],
) -> f64 {
    let b = n as f64 - 2.0;
    let lambda = n as f64 - 1.0;
    ts.iter()
        .map(|&t| {
            let q = 1.0 + p.g(t);
            let dq = p.dg_dt(t);
            let (v, dv, d2v) = (candidate.v(t), candidate.dv(t), candidate.d2v(t));
            (q * d2v + dq * dv - b * q * dv - lambda * v).abs() / v.abs()
        })
        .fold(0.0, f64::max)
}

/// `∫ (|Z'|² + r^{-2} Z²) r^{n-1} dr` on the solution window plus a tail
/// estimate, and whether it is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteEnergy {
    pub value: f64,
    pub verdict: Verdict,
}

/// In `t`, the energy integrand is `e^{(2-n)t} ((dv/dt)² + v²)`.
pub fn finite_energy(sol: &RadialSolution) -> FiniteEnergy {
    let n = sol.n as f64;
    let density: Vec<f64> = (0..sol.len())
        .map(|i| ((2.0 - n) * sol.t[i]).exp() * (sol.dv[i].powi(2) + sol.v[i].powi(2)))
        .collect();
    let window = simpson(&density, sol.step());

    let t_end = *sol.t.last().unwrap();
    let start = sol.index_at_or_after(t_end - TAIL_SPAN);
    let logs: Vec<f64> = density[start..].iter().map(|d| d.ln()).collect();
    let rate = linear_fit(&sol.t[start..], &logs).map_or(0.0, |(m, _)| m);
    let sup_ratio = sol.v_over_r().into_iter().fold(0.0, f64::max);

    let (value, status) = if rate < -0.1 {
        (window + density.last().unwrap() / -rate, Status::HoldsNumericWindow)
    } else if rate >= 0.0 {
        (window, Status::FailsNumericWindow)
    } else {
        (window, Status::Inconclusive)
    };
    FiniteEnergy {
        value,
        verdict: Verdict::new(status)
            .with("window_integral", window)
            .with("log_density_slope", rate)
            .with("sup_v_over_r", sup_ratio),
    }
}

/// Fitted model `c exp[-t + ((n-1)/n) ∫_{t_min}^t g]` for `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticModel {
    pub c_fit: f64,
    pub fit_t: f64,
    /// Exponent `((n-1)/n) ∫_{t_min}^t g` on the solution grid.
    pub exponent: Vec<f64>,
    /// `sup_{t ≥ fit_t} |log v - log model|`.
    pub drift: f64,
}

impl AsymptoticModel {
    pub fn log_model(&self, t: &[f64], i: usize) -> f64 {
        self.c_fit.ln() - t[i] + self.exponent[i]
    }
}

pub fn asymptotic_ratio(
    sol: &RadialSolution,
    p: &RadialProfile,
    fit_t: f64,
) -> Result<AsymptoticModel> {
    let tv = total_variation(p, Horizon::Window(p.t_max()));
    if tv.verdict.fails() {
        return Err(Error::HypothesisUnmet(
            "the profile has infinite total variation; the asymptotic law does not apply".into(),
        ));
    }
    let t_end = *sol.t.last().unwrap();
    if !(fit_t >= sol.t[0] && fit_t < t_end) {
        return Err(Error::InvalidArgument(format!("fit_t = {fit_t} outside the solution grid")));
    }
    let factor = decaying_rate_slope(sol.n);
    let exponent: Vec<f64> = cumulative_simpson(|t| p.g(t), &sol.t)
        .into_iter()
        .map(|s| factor * s)
        .collect();
    let i_fit = sol.index_at_or_after(fit_t);
    let c_fit = (sol.v[i_fit].ln() + sol.t[i_fit] - exponent[i_fit]).exp();
    let mut model = AsymptoticModel {
        c_fit,
        fit_t: sol.t[i_fit],
        exponent,
        drift: 0.0,
    };
    model.drift = (i_fit..sol.len())
        .map(|i| (sol.v[i].ln() - model.log_model(&sol.t, i)).abs())
        .fold(0.0, f64::max);
    Ok(model)
}

/// Windowed evidence for `Z(r) ≤ c r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBound {
    pub sup_ratio: f64,
    /// Least-squares slope of `log(Z/r)` over the final span.
    pub trend: f64,
    /// Rise of the running maximum of `log(Z/r)` over the final span.
    pub excess: f64,
    pub log_ratio_end: f64,
    pub verdict: Verdict,
}

pub fn z_linear_bound(sol: &RadialSolution) -> LinearBound {
    let log_ratio: Vec<f64> = sol.t.iter().zip(&sol.v).map(|(t, v)| v.ln() + t).collect();
    linear_bound_from_log(&sol.t, &log_ratio)
}

/// The rule behind [`z_linear_bound`], applied to samples of `log(f/r)`.
pub fn linear_bound_from_log(t: &[f64], log_ratio: &[f64]) -> LinearBound {
    let t_end = *t.last().unwrap();
    let start = t.partition_point(|x| *x < t_end - TAIL_SPAN - 1e-12).clamp(1, t.len() - 1);
    let trend = linear_fit(&t[start..], &log_ratio[start..]).map_or(0.0, |(m, _)| m);
    let max_before = log_ratio[..start].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_tail = log_ratio[start..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let excess = max_tail - max_before;
    let log_ratio_end = *log_ratio.last().unwrap();
    let sup_ratio = max_before.max(max_tail).exp();

    let status = if (log_ratio_end > UNBOUNDED_LOG_RATIO && trend > 0.0)
        || (excess > UNBOUNDED_EXCESS && trend > 0.0)
    {
        Status::FailsNumericWindow
    } else if sup_ratio.is_finite() && excess <= BOUNDED_EXCESS {
        Status::HoldsNumericWindow
    } else {
        Status::Inconclusive
    };
    LinearBound {
        sup_ratio,
        trend,
        excess,
        log_ratio_end,
        verdict: Verdict::new(status)
            .with("sup_ratio", sup_ratio)
            .with("trend", trend)
            .with("excess", excess)
            .with("log_ratio_end", log_ratio_end),
    }
}
