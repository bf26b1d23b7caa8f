//! Ball means and mean oscillation at the origin.
//!
//! For a radial `g`, `˜g(r) = (n/rⁿ) ∫_0^r g(ρ) ρ^{n-1} dρ`, which in
//! `t = -log r` is `n e^{n t} ∫_t^∞ g(τ) e^{-nτ} dτ`. The variable part of the
//! coefficient matrix is `g Θ` with `Θ = θ ⊗ θ`, whose sphere mean is `I/n`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{ex3_coefficients, window_verdict, Family, RadialProfile};
use crate::quadrature::{cumulative_simpson, linear_fit, AdaptiveSimpson};
use crate::radial_ode::fmt12;
use crate::verdict::{Status, Verdict};

/// Relative size allowed for the neglected part of `∫_t^∞`.
pub const TAIL_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_CURVE_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatrixNorm {
    #[default]
    Spectral,
    Frobenius,
}

fn quad() -> AdaptiveSimpson {
    AdaptiveSimpson { rel_tol: 1e-12, abs_tol: 1e-15, panel: 0.5 }
}

/// Largest `t_r` whose ball integral can be truncated at `t_max`.
pub fn usable_t_max(p: &RadialProfile, n: usize) -> f64 {
    p.t_max() - (1.0 / TAIL_TOLERANCE).ln() / n as f64
}

/// `n e^{n t_r} ∫_{t_r}^{t_max} f(τ) e^{-nτ} dτ` plus the leading tail term
/// `f(t_max) e^{-n(t_max - t_r)}`. `bound` is `sup|f|` past `t_max`.
fn ball_average<F: Fn(f64) -> f64>(p: &RadialProfile, n: usize, t_r: f64, f: F, bound: f64) -> Result<f64> {
    if !(t_r >= p.t_min() - 1e-12 && t_r < p.t_max()) {
        return Err(Error::OutOfDomain { t: t_r, t_min: p.t_min(), t_max: p.t_max() });
    }
    let nf = n as f64;
    let decay = (-nf * (p.t_max() - t_r)).exp();
    let body = quad().integrate(|tau| nf * (-nf * (tau - t_r)).exp() * f(tau), t_r, p.t_max());
    let result = body + f(p.t_max()) * decay;
    let tail = bound * decay;
    let tol = TAIL_TOLERANCE * result.abs().max(bound);
    if tail > tol {
        return Err(Error::TailTooLarge { tail, tol });
    }
    Ok(result)
}

/// `˜g` at radius `r`.
pub fn ball_mean(p: &RadialProfile, n: usize, r: f64) -> Result<f64> {
    ball_mean_at(p, n, -r.ln())
}

/// `˜g` at `t = -log r`.
pub fn ball_mean_at(p: &RadialProfile, n: usize, t: f64) -> Result<f64> {
    p.check_dimension(n)?;
    ball_average(p, n, t, |tau| p.g(tau), p.sup_abs_g())
}

/// `⨍_{S^{n-1}} ‖g Θ(θ) - gt I/n‖ dθ`. Both norms are invariant under
/// rotations, so the integrand does not depend on `θ`: `gΘ - gt I/n` has the
/// eigenvalue `g - gt/n` once and `-gt/n` with multiplicity `n - 1`.
pub fn sphere_norm_mean(g: f64, gt: f64, n: usize, norm: MatrixNorm) -> f64 {
    let nf = n as f64;
    let radial = g - gt / nf;
    let tangential = gt / nf;
    match norm {
        MatrixNorm::Spectral => radial.abs().max(tangential.abs()),
        MatrixNorm::Frobenius => (radial * radial + (nf - 1.0) * tangential * tangential).sqrt(),
    }
}

/// `⨍_{S^{n-1}} ‖Θ - I/n‖ dθ`.
pub fn theta_oscillation(n: usize, norm: MatrixNorm) -> f64 {
    sphere_norm_mean(1.0, 1.0, n, norm)
}

/// `⨍_{B_r} ‖g(ρ) Θ - ˜g(r) I/n‖ dx`.
pub fn matrix_mean_oscillation_at_zero(
    p: &RadialProfile,
    n: usize,
    r: f64,
    norm: MatrixNorm,
) -> Result<f64> {
    let t = -r.ln();
    let gt = ball_mean_at(p, n, t)?;
    omega_at(p, n, t, gt, norm)
}

fn omega_at(p: &RadialProfile, n: usize, t: f64, gt: f64, norm: MatrixNorm) -> Result<f64> {
    let bound = p.sup_abs_g() + gt.abs();
    ball_average(p, n, t, |tau| sphere_norm_mean(p.g(tau), gt, n, norm), bound)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationCurve {
    pub t: Vec<f64>,
    pub gtilde: Vec<f64>,
    pub g_minus_gtilde: Vec<f64>,
    pub omega_a: Vec<f64>,
    pub matrix_norm: MatrixNorm,
}

impl OscillationCurve {
    /// Samples `[t_min, usable_t_max]` with the given step.
    pub fn compute(p: &RadialProfile, n: usize, step: f64, norm: MatrixNorm) -> Result<Self> {
        p.check_dimension(n)?;
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
        }
        let hi = usable_t_max(p, n);
        if hi <= p.t_min() {
            return Err(Error::InvalidArgument("window too short for ball means".into()));
        }
        let count = ((hi - p.t_min()) / step).floor() as usize + 1;
        let t: Vec<f64> = (0..count).map(|i| p.t_min() + i as f64 * step).collect();
        let mut gtilde = Vec::with_capacity(count);
        let mut diff = Vec::with_capacity(count);
        let mut omega = Vec::with_capacity(count);
        for &ti in &t {
            let gt = ball_mean_at(p, n, ti)?;
            gtilde.push(gt);
            diff.push(p.g(ti) - gt);
            omega.push(omega_at(p, n, ti, gt, norm)?);
        }
        Ok(OscillationCurve {
            t,
            gtilde,
            g_minus_gtilde: diff,
            omega_a: omega,
            matrix_norm: norm,
        })
    }

    /// Writes `t,r,gtilde,g_minus_gtilde,omega_A` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "r", "gtilde", "g_minus_gtilde", "omega_A"])?;
        for i in 0..self.t.len() {
            wtr.write_record([
                fmt12(self.t[i]),
                fmt12((-self.t[i]).exp()),
                fmt12(self.gtilde[i]),
                fmt12(self.g_minus_gtilde[i]),
                fmt12(self.omega_a[i]),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// `∫ ω_A(r) dr / r` over the sampled window.
    pub fn dini_integral(&self) -> Vec<f64> {
        let h = self.t[1] - self.t[0];
        let mut out = vec![0.0; self.t.len()];
        for i in 1..self.t.len() {
            out[i] = out[i - 1] + 0.5 * h * (self.omega_a[i - 1] + self.omega_a[i]);
        }
        out
    }
}

/// Dini mean oscillation at the origin.
pub fn dmo_test(p: &RadialProfile, n: usize) -> Result<Verdict> {
    let curve = OscillationCurve::compute(p, n, DEFAULT_CURVE_STEP, MatrixNorm::Spectral)?;
    let partial = curve.dini_integral();
    let window = window_verdict(&curve.t, &partial);
    let status = match p.family() {
        Family::Zero => Status::HoldsAnalytic,
        Family::Const { c } => Status::analytic(*c == 0.0),
        Family::Ex1Pos { gamma } | Family::Ex1Neg { gamma } => Status::analytic(*gamma > 1.0),
        Family::Ex2 { beta } => Status::analytic(*beta > 1.0),
        Family::Ex3 { .. } => Status::FailsAnalytic,
        Family::Table(_) => return Ok(window),
    };
    let mut v = Verdict::new(status);
    v.evidence.extend(&window.evidence);
    Ok(v)
}

/// `(sin t - n cos t) / ((n²+1) t^β)`: the closed form for `g - ˜g` of
/// `g = sin t / t^β` obtained by dropping the derivative of `t^{-β}` in the
/// integration by parts.
pub fn ex2_closed_form_difference(beta: f64, n: usize, t: f64) -> f64 {
    let nf = n as f64;
    (t.sin() - nf * t.cos()) / ((nf * nf + 1.0) * t.powf(beta))
}

/// `|(g - ˜g)_quadrature - (sin t - n cos t)/((n²+1) t^β)|`.
pub fn ex2_identity_residual(beta: f64, n: usize, t: f64) -> Result<f64> {
    if t < 2.0 {
        return Err(Error::InvalidArgument(format!("t must be at least 2, got {t}")));
    }
    let p = RadialProfile::ex2(beta)?.with_domain(crate::profiles::DEFAULT_T_MIN, t + 30.0)?;
    let gt = ball_mean_at(&p, n, t)?;
    Ok(((p.g(t) - gt) - ex2_closed_form_difference(beta, n, t)).abs())
}

/// `π (C₁ - C₂) / A²`, the leading term of `∫ g` over one period of the
/// EX3 profile.
pub fn ex3_leading_period_integral(a: f64, n: usize) -> f64 {
    let (c1, c2) = ex3_coefficients(n);
    PI * (c1 - c2) / (a * a)
}

/// `∫ g dt` over `count` consecutive periods starting at `t0`.
pub fn period_integrals(p: &RadialProfile, t0: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let a = t0 + 2.0 * PI * k as f64;
            quad().integrate(|t| p.g(t), a, a + 2.0 * PI)
        })
        .collect()
}

/// Linear growth of the running integral of `g` sampled at period ends:
/// `(slope per period, max deviation from the fitted line)`.
pub fn period_growth(p: &RadialProfile, t0: f64, count: usize) -> (f64, f64) {
    let per = period_integrals(p, t0, count);
    let mut cum = vec![0.0];
    for v in &per {
        cum.push(cum.last().unwrap() + v);
    }
    let k: Vec<f64> = (0..cum.len()).map(|i| i as f64).collect();
    let (slope, icpt) = linear_fit(&k, &cum).expect("at least two points");
    let dev = k
        .iter()
        .zip(&cum)
        .map(|(k, c)| (c - (slope * k + icpt)).abs())
        .fold(0.0, f64::max);
    (slope, dev)
}

/// `∫ |g - ˜g| dt` over `count` consecutive periods starting at `t0`, with the
/// window extended as needed for the ball means.
pub fn oscillation_period_integrals(
    p: &RadialProfile,
    n: usize,
    t0: f64,
    count: usize,
) -> Result<Vec<f64>> {
    let t_end = t0 + 2.0 * PI * count as f64;
    let needed = t_end + (1.0 / TAIL_TOLERANCE).ln() / n as f64 + 1.0;
    let q = if needed > p.t_max() { p.with_domain(p.t_min(), needed)? } else { p.clone() };
    let per_step = 400;
    let h = 2.0 * PI / per_step as f64;
    (0..count)
        .map(|k| {
            let a = t0 + 2.0 * PI * k as f64;
            let grid: Vec<f64> = (0..=per_step).map(|i| a + i as f64 * h).collect();
            let mut diff = Vec::with_capacity(grid.len());
            for t in &grid {
                diff.push((q.g(*t) - ball_mean_at(&q, n, *t)?).abs());
            }
            Ok(crate::quadrature::simpson(&diff, h))
        })
        .collect()
}

/// Running `∫ g` on a grid; re-exported for the CLI's curve output.
pub fn running_integral(p: &RadialProfile, grid: &[f64]) -> Vec<f64> {
    cumulative_simpson(|t| p.g(t), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::SphereRule;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn constant_ball_mean_is_exact() {
        let p = RadialProfile::constant(0.3).unwrap();
        for n in [2, 3] {
            for t in [1.0, 5.0, 15.0] {
                assert_relative_eq!(ball_mean_at(&p, n, t).unwrap(), 0.3, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn ex1_ball_mean_expansion() {
        let p = RadialProfile::ex1_pos(1.0).unwrap();
        for n in [2, 3] {
            for t in [8.0, 12.0, 16.0] {
                let gt = ball_mean_at(&p, n, t).unwrap();
                // integration by parts in τ: ˜g = Σ_k (-1)^k k! / (n^k t^{k+1})
                let series = 1.0 / t - 1.0 / (n as f64 * t * t) + 2.0 / ((n * n) as f64 * t.powi(3));
                assert!((gt - series).abs() < 6.0 / ((n * n * n) as f64 * t.powi(4)) + 1e-12);
            }
        }
    }

    #[test]
    fn tail_too_large() {
        let p = RadialProfile::ex2(1.0).unwrap();
        assert!(matches!(ball_mean_at(&p, 2, 35.0), Err(Error::TailTooLarge { .. })));
        assert!(ball_mean_at(&p, 2, 10.0).is_ok());
    }

    #[test]
    fn sphere_norm_matches_quadrature() {
        for n in [2, 3] {
            let rule = SphereRule::with_resolution(n, 16, 32).unwrap();
            for (g, gt) in [(0.4, 0.1), (-0.3, 0.2), (0.05, -0.6)] {
                for norm in [MatrixNorm::Spectral, MatrixNorm::Frobenius] {
                    let q = rule.mean(|th| {
                        let m = DMatrix::from_fn(n, n, |i, j| {
                            g * th[i] * th[j] - if i == j { gt / n as f64 } else { 0.0 }
                        });
                        match norm {
                            MatrixNorm::Spectral => m.singular_values().max(),
                            MatrixNorm::Frobenius => m.norm(),
                        }
                    });
                    assert_relative_eq!(q, sphere_norm_mean(g, gt, n, norm), max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_mean_oscillation() {
        let c = 0.4;
        let p = RadialProfile::constant(c).unwrap();
        for n in [2, 3] {
            let w = matrix_mean_oscillation_at_zero(&p, n, 0.01, MatrixNorm::Spectral).unwrap();
            assert_relative_eq!(w, c * (n as f64 - 1.0) / n as f64, max_relative = 1e-12);
        }
        let z = RadialProfile::zero();
        assert_eq!(matrix_mean_oscillation_at_zero(&z, 2, 0.01, MatrixNorm::Spectral).unwrap(), 0.0);
    }

    #[test]
    fn ex1_lower_bound() {
        let p = RadialProfile::ex1_pos(1.0).unwrap();
        let r = (-10f64).exp();
        let w = matrix_mean_oscillation_at_zero(&p, 2, r, MatrixNorm::Spectral).unwrap();
        let gt = ball_mean(&p, 2, r).unwrap();
        let d = (p.g(10.0) - gt).abs();
        // g - ˜g = γ t^{-γ-1} / n + O(t^{-γ-2})
        assert!(d > 0.004 && d < 0.005, "{d}");
        assert!(w >= d / 2.0);
        assert!(w >= 0.005);
    }

    #[test]
    fn curve_and_lower_bounds() {
        for p in [
            RadialProfile::ex1_pos(0.75).unwrap(),
            RadialProfile::ex2(0.5).unwrap(),
            RadialProfile::ex3(10.0, 2).unwrap(),
        ] {
            for n in [2, 3] {
                if p.check_dimension(n).is_err() {
                    continue;
                }
                let c = OscillationCurve::compute(&p, n, 0.25, MatrixNorm::Spectral).unwrap();
                let theta = theta_oscillation(n, MatrixNorm::Spectral);
                for i in 0..c.t.len() {
                    let g = p.g(c.t[i]);
                    let w = c.omega_a[i];
                    let d = c.g_minus_gtilde[i].abs();
                    assert!(w + 1e-12 >= d / n as f64, "t = {}", c.t[i]);
                    // the per-sphere form of the lower bound at radius r
                    let s = sphere_norm_mean(g, c.gtilde[i], n, MatrixNorm::Spectral);
                    assert!(s + 1e-12 >= g.abs() * theta - d / n as f64);
                }
            }
        }
    }

    #[test]
    fn dmo_examples() {
        assert_eq!(dmo_test(&RadialProfile::ex1_pos(2.0).unwrap(), 2).unwrap().status, Status::HoldsAnalytic);
        assert_eq!(dmo_test(&RadialProfile::ex2(0.5).unwrap(), 2).unwrap().status, Status::FailsAnalytic);
        assert_eq!(dmo_test(&RadialProfile::ex3(10.0, 2).unwrap(), 2).unwrap().status, Status::FailsAnalytic);
        assert_eq!(dmo_test(&RadialProfile::zero(), 3).unwrap().status, Status::HoldsAnalytic);
    }

    #[test]
    fn ex2_difference_decays_like_derivative_term() {
        // The closed form drops a term of order β t^{-β-1}.
        let r1 = ex2_identity_residual(1.0, 2, 10.0).unwrap();
        let r2 = ex2_identity_residual(1.0, 2, 10.0 + 2.0 * PI * 3.0).unwrap();
        let ratio = r1 / r2;
        let expected = ((10.0 + 6.0 * PI) / 10.0f64).powi(2);
        assert!(ratio > 0.3 * expected && ratio < 3.0 * expected, "{ratio} vs {expected}");
    }

    #[test]
    fn ex3_period_integrals() {
        for a in [10.0, 50.0] {
            let p = RadialProfile::ex3(a, 2).unwrap();
            let lead = ex3_leading_period_integral(a, 2);
            for v in period_integrals(&p, 1.0, 10) {
                assert!((v - lead).abs() < 5.0 / a.powi(3));
            }
        }
        let p = RadialProfile::ex3(10.0, 2).unwrap();
        let (slope, dev) = period_growth(&p, 1.0, 10);
        assert!(slope > 0.0 && dev < 1e-9);
        let osc = oscillation_period_integrals(&p, 2, 1.0, 10).unwrap();
        let first = osc[0];
        assert!(osc.iter().all(|v| (v - first).abs() < 1e-8 && *v > 0.0));
    }
}
