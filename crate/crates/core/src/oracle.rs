//! Brute-force checks of the radial theory.
//!
//! A solution of the full equation is assembled from spherical-harmonic modes,
//! each solved by [`crate::radial_ode::solve_radial`] with the angular
//! eigenvalue `k(k+n-2)`. For n = 2 an independent finite-difference solver in
//! `(t, θ)` is provided, which does not separate variables.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{cumulative_simpson, legendre, linear_fit};
use crate::radial_ode::{
    fmt12, linear_bound_from_log, solve_radial, solve_z, Branch, LinearBound, RadialSolution,
};
use crate::profiles::RadialProfile;

pub const DEFAULT_SEED: u64 = 42;
/// Relative slack for the monotone-ratio check.
pub const MONOTONE_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_T_CUT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Harmonic {
    /// `√2 cos kθ` (n = 2), or the constant 1 when `k = 0`.
    Cos,
    /// `√2 sin kθ` (n = 2).
    Sin,
    /// `√(2k+1) P_k(cos φ)` (n = 3).
    Zonal,
}

/// One term of the boundary data, on a harmonic with unit mean square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: usize,
    pub kind: Harmonic,
    pub amplitude: f64,
}

impl Mode {
    /// The normalized harmonic at a unit vector.
    pub fn harmonic(&self, dir: &[f64]) -> f64 {
        if self.k == 0 {
            return 1.0;
        }
        match self.kind {
            Harmonic::Cos | Harmonic::Sin => {
                let theta = dir[1].atan2(dir[0]);
                let arg = self.k as f64 * theta;
                SQRT_2 * if self.kind == Harmonic::Cos { arg.cos() } else { arg.sin() }
            }
            Harmonic::Zonal => ((2 * self.k + 1) as f64).sqrt() * legendre(self.k, dir[2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub n: usize,
    pub modes: Vec<Mode>,
}

impl BoundaryData {
    pub fn new(n: usize, modes: Vec<Mode>) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::UnsupportedDimension(n));
        }
        for m in &modes {
            let ok = match (n, m.kind) {
                (2, Harmonic::Cos) => true,
                (2, Harmonic::Sin) => m.k > 0,
                (3, Harmonic::Zonal) => true,
                _ => false,
            };
            if !ok || !m.amplitude.is_finite() {
                return Err(Error::InvalidArgument(format!("mode {m:?} not valid for n = {n}")));
            }
        }
        Ok(BoundaryData { n, modes })
    }

    /// `a cos kθ` for n = 2.
    pub fn cosine(k: usize, a: f64) -> Self {
        let amplitude = if k == 0 { a } else { a / SQRT_2 };
        BoundaryData { n: 2, modes: vec![Mode { k, kind: Harmonic::Cos, amplitude }] }
    }

    /// A single first-order harmonic with unit mean square.
    pub fn first_harmonic(n: usize) -> Result<Self> {
        let kind = if n == 3 { Harmonic::Zonal } else { Harmonic::Cos };
        BoundaryData::new(n, vec![Mode { k: 1, kind, amplitude: 1.0 }])
    }

    /// Modes `k = 1..=count` with amplitudes uniform in `[-1, 1]`; for n = 2
    /// each mode is a cosine or a sine at random.
    pub fn random_zero_mean(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let modes = (1..=count)
            .map(|k| {
                let kind = match n {
                    3 => Harmonic::Zonal,
                    _ if rng.gen_bool(0.5) => Harmonic::Cos,
                    _ => Harmonic::Sin,
                };
                Mode { k, kind, amplitude: rng.gen_range(-1.0..=1.0) }
            })
            .collect();
        BoundaryData::new(n, modes)
    }

    /// `count` independent data sets from one seeded generator.
    pub fn random_batch(n: usize, modes: usize, sets: usize, seed: u64) -> Result<Vec<Self>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..sets).map(|_| Self::random_zero_mean(n, modes, &mut rng)).collect()
    }

    pub fn is_zero_mean(&self) -> bool {
        self.modes.iter().all(|m| m.k > 0 || m.amplitude == 0.0)
    }

    pub fn mean(&self) -> f64 {
        self.modes.iter().filter(|m| m.k == 0).map(|m| m.amplitude).sum()
    }

    pub fn eval(&self, dir: &[f64]) -> f64 {
        self.modes.iter().map(|m| m.amplitude * m.harmonic(dir)).sum()
    }

    /// n = 2 only: value at angle `theta`.
    pub fn eval_angle(&self, theta: f64) -> f64 {
        self.eval(&[theta.cos(), theta.sin(), 0.0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    pub k: usize,
    pub eigenvalue: f64,
    /// `None` for `k = 0`, whose finite-energy solution is constant.
    pub solution: Option<RadialSolution>,
    pub boundary_amp: f64,
}

impl ModeSolution {
    pub fn value_at_index(&self, i: usize) -> f64 {
        self.solution.as_ref().map_or(self.boundary_amp, |s| s.v()[i])
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.solution.as_ref().map_or(self.boundary_amp, |s| s.value_at(t))
    }
}

pub fn mode_eigenvalue(n: usize, k: usize) -> f64 {
    (k * (k + n - 2)) as f64
}

/// Finite-energy solution of mode `k` with `v_k(t_min) = boundary_amp`.
pub fn solve_mode(
    p: &RadialProfile,
    n: usize,
    k: usize,
    boundary_amp: f64,
    step: f64,
) -> Result<ModeSolution> {
    p.check_dimension(n)?;
    let eigenvalue = mode_eigenvalue(n, k);
    let solution = if k == 0 {
        None
    } else {
        Some(solve_radial(p, n, eigenvalue, step, boundary_amp, Branch::Decaying)?)
    };
    Ok(ModeSolution { k, eigenvalue, solution, boundary_amp })
}

/// A solution of the full equation assembled from modes that share one grid.
#[derive(Debug, Clone)]
pub struct SpectralSolution {
    pub data: BoundaryData,
    pub t: Vec<f64>,
    /// Mode solutions normalized to 1 at `t_min`, in the order of `data.modes`.
    pub modes: Vec<ModeSolution>,
}

impl SpectralSolution {
    pub fn solve(p: &RadialProfile, bd: &BoundaryData, step: f64) -> Result<Self> {
        p.check_dimension(bd.n)?;
        let mut modes = Vec::with_capacity(bd.modes.len());
        let mut grid: Option<Vec<f64>> = None;
        for m in &bd.modes {
            let sol = solve_mode(p, bd.n, m.k, 1.0, step)?;
            if grid.is_none() {
                if let Some(s) = &sol.solution {
                    grid = Some(s.t().to_vec());
                }
            }
            modes.push(sol);
        }
        let t = match grid {
            Some(t) => t,
            None => solve_z(p, bd.n, step)?.t().to_vec(),
        };
        Ok(SpectralSolution { data: bd.clone(), t, modes })
    }

    /// `‖u(ρ)‖ = (⨍ u(ρθ)² dθ)^{1/2}` at grid index `i` (Parseval).
    pub fn norm_at_index(&self, i: usize) -> f64 {
        self.data
            .modes
            .iter()
            .zip(&self.modes)
            .map(|(m, s)| (m.amplitude * s.value_at_index(i)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norms(&self) -> Vec<f64> {
        (0..self.t.len()).map(|i| self.norm_at_index(i)).collect()
    }

    pub fn value(&self, t: f64, dir: &[f64]) -> f64 {
        self.data
            .modes
            .iter()
            .zip(&self.modes)
            .map(|(m, s)| m.amplitude * m.harmonic(dir) * s.value_at(t))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub t: Vec<f64>,
    /// `‖u(ρ)‖ / Z(ρ)` at `ρ = e^{-t}`.
    pub ratios: Vec<f64>,
    pub monotone: bool,
    pub max_violation: f64,
    pub max_ratio: f64,
}

/// `‖u(ρ)‖ / Z(ρ)` must be nondecreasing in `ρ`, i.e. nonincreasing in `t`.
pub fn comparison_check(
    p: &RadialProfile,
    bd: &BoundaryData,
    step: f64,
) -> Result<ComparisonReport> {
    if !bd.is_zero_mean() {
        return Err(Error::InvalidArgument("comparison needs zero-mean boundary data".into()));
    }
    let z = solve_z(p, bd.n, step)?;
    let spec = SpectralSolution::solve(p, bd, step)?;
    let ratios: Vec<f64> = spec.norms().iter().zip(z.v()).map(|(u, z)| u / z).collect();
    let mut run_min = f64::INFINITY;
    let mut max_violation = 0.0f64;
    for r in &ratios {
        run_min = run_min.min(*r);
        max_violation = max_violation.max(r - run_min);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ComparisonReport {
        t: spec.t,
        monotone: max_violation <= MONOTONE_TOLERANCE * max_ratio,
        ratios,
        max_violation,
        max_ratio,
    })
}

/// Grid solution of the n = 2 equation `∂_t((1+g) ∂_t u) + ∂_θ² u = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fd2dSolution {
    pub t: Vec<f64>,
    pub theta: Vec<f64>,
    /// Row-major, `u[i * theta.len() + j]`.
    pub u: Vec<f64>,
    pub relative_residual: f64,
}

impl Fd2dSolution {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.theta.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.theta.len();
        &self.u[i * m..(i + 1) * m]
    }

    pub fn angular_mean(&self, i: usize) -> f64 {
        self.row(i).iter().sum::<f64>() / self.theta.len() as f64
    }

    /// `(⨍ u²)^{1/2}` on circle `i`.
    pub fn angular_norm(&self, i: usize) -> f64 {
        (self.row(i).iter().map(|x| x * x).sum::<f64>() / self.theta.len() as f64).sqrt()
    }

    /// Relative `L²(B)` distance to `f(t, θ)` with the area element
    /// `r dr dθ = e^{-2t} dt dθ`.
    pub fn relative_l2_error<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        let last = self.t.len() - 1;
        for (i, t) in self.t.iter().enumerate() {
            let w = (-2.0 * t).exp() * if i == 0 || i == last { 0.5 } else { 1.0 };
            for (j, th) in self.theta.iter().enumerate() {
                let exact = f(*t, *th);
                num += w * (self.at(i, j) - exact).powi(2);
                den += w * exact * exact;
            }
        }
        (num / den).sqrt()
    }

    /// Writes `t,theta,u` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "theta", "u"])?;
        for (i, t) in self.t.iter().enumerate() {
            for (j, th) in self.theta.iter().enumerate() {
                wtr.write_record([fmt12(*t), fmt12(*th), fmt12(self.at(i, j))])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Conservative 5-point scheme on `[t_min, t_cut] × [0, 2π)` with `n_r`
/// intervals in `t` and `n_theta` angles. Dirichlet data from `bd` at `t_min`
/// and `u = mean(bd)` at `t_cut`. Solved by block tridiagonal elimination.
pub fn fd2d_solve(
    p: &RadialProfile,
    bd: &BoundaryData,
    n_r: usize,
    n_theta: usize,
    t_cut: f64,
) -> Result<Fd2dSolution> {
    if bd.n != 2 {
        return Err(Error::UnsupportedDimension(bd.n));
    }
    p.check_dimension(2)?;
    if n_r < 64 || n_theta < 32 {
        return Err(Error::InvalidArgument(format!(
            "grid {n_r}x{n_theta} too coarse (need at least 64x32)"
        )));
    }
    if !(t_cut <= DEFAULT_T_CUT && t_cut <= p.t_max() && t_cut > p.t_min()) {
        return Err(Error::InvalidArgument(format!("t_cut = {t_cut} outside the allowed range")));
    }
    let t0 = p.t_min();
    let h = (t_cut - t0) / n_r as f64;
    let dth = 2.0 * PI / n_theta as f64;
    let t: Vec<f64> = (0..=n_r).map(|i| if i == n_r { t_cut } else { t0 + i as f64 * h }).collect();
    let theta: Vec<f64> = (0..n_theta).map(|j| j as f64 * dth).collect();
    let q_half: Vec<f64> = (0..n_r).map(|i| 1.0 + p.g(t0 + (i as f64 + 0.5) * h)).collect();

    let m = n_theta;
    let inner = n_r - 1;
    let bottom: Vec<f64> = theta.iter().map(|th| bd.eval_angle(*th)).collect();
    let top = vec![bd.mean(); m];

    // Row i (node i+1) of -L u = 0:
    //   -(a_i u_{i-1} + c_i u_{i+1}) / h² + (a_i + c_i) u_i / h² - (circulant) / dθ² = 0.
    let circ = {
        let mut c = DMatrix::zeros(m, m);
        for j in 0..m {
            c[(j, j)] = 2.0 / (dth * dth);
            c[(j, (j + 1) % m)] -= 1.0 / (dth * dth);
            c[(j, (j + m - 1) % m)] -= 1.0 / (dth * dth);
        }
        c
    };
    let lower = |i: usize| q_half[i] / (h * h);
    let upper = |i: usize| q_half[i + 1] / (h * h);
    let diag = |i: usize| {
        let mut d = circ.clone();
        for j in 0..m {
            d[(j, j)] += lower(i) + upper(i);
        }
        d
    };
    let rhs = |i: usize| {
        let mut b = DVector::zeros(m);
        if i == 0 {
            b += DVector::from_column_slice(&bottom) * lower(i);
        }
        if i == inner - 1 {
            b += DVector::from_column_slice(&top) * upper(i);
        }
        b
    };

    // Forward elimination: D'_i = D_i - l_i u_{i-1} D'^{-1}_{i-1}.
    let mut inv: Vec<DMatrix<f64>> = Vec::with_capacity(inner);
    let mut y: Vec<DVector<f64>> = Vec::with_capacity(inner);
    for i in 0..inner {
        let mut d = diag(i);
        let mut b = rhs(i);
        if i > 0 {
            let f = lower(i) * upper(i - 1);
            d -= &inv[i - 1] * f;
            b += &inv[i - 1] * &y[i - 1] * lower(i);
        }
        let di = d
            .try_inverse()
            .ok_or_else(|| Error::SingularSystem(format!("block {i} is singular")))?;
        inv.push(di);
        y.push(b);
    }
    let mut x: Vec<DVector<f64>> = vec![DVector::zeros(m); inner];
    for i in (0..inner).rev() {
        let mut b = y[i].clone();
        if i + 1 < inner {
            b += &x[i + 1] * upper(i);
        }
        x[i] = &inv[i] * b;
    }

    let mut u = Vec::with_capacity((n_r + 1) * m);
    u.extend_from_slice(&bottom);
    for xi in &x {
        u.extend(xi.iter());
    }
    u.extend_from_slice(&top);

    // Residual of the assembled equations.
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for i in 0..inner {
        let row = |k: usize| &u[k * m..(k + 1) * m];
        let (um, uc, up) = (row(i), row(i + 1), row(i + 2));
        for j in 0..m {
            let lap_t = (q_half[i + 1] * (up[j] - uc[j]) - q_half[i] * (uc[j] - um[j])) / (h * h);
            let lap_th = (uc[(j + 1) % m] - 2.0 * uc[j] + uc[(j + m - 1) % m]) / (dth * dth);
            res = res.max((lap_t + lap_th).abs());
            scale = scale.max((q_half[i + 1] * (up[j] - uc[j]) / (h * h)).abs());
        }
    }
    let relative_residual = if scale > 0.0 { res / scale } else { res };
    if !(relative_residual < 1e-10) {
        return Err(Error::SingularSystem(format!("relative residual {relative_residual:e}")));
    }
    Ok(Fd2dSolution { t, theta, u, relative_residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzProbe {
    /// `sup_t ‖u(e^{-t})‖ e^{t}`.
    pub sup_ratio: f64,
    /// Least-squares slope of `log(‖u‖/r)` against the predicted exponent
    /// `((n-1)/n) ∫ g` over the fit window; 0 when the prediction is flat.
    pub growth_exponent: f64,
    pub fit_window: (f64, f64),
    pub bound: LinearBound,
}

/// Growth of `‖u(ρ)‖/ρ` for the solution with boundary data `bd`.
pub fn lipschitz_probe(
    p: &RadialProfile,
    bd: &BoundaryData,
    step: f64,
    fit_window: (f64, f64),
) -> Result<LipschitzProbe> {
    if !bd.is_zero_mean() {
        return Err(Error::InvalidArgument("probe needs zero-mean boundary data".into()));
    }
    let n = bd.n;
    let spec = SpectralSolution::solve(p, bd, step)?;
    let log_ratio: Vec<f64> = spec
        .norms()
        .iter()
        .zip(&spec.t)
        .map(|(u, t)| u.ln() + t)
        .collect();
    let factor = (n as f64 - 1.0) / n as f64;
    let predicted: Vec<f64> = cumulative_simpson(|t| p.g(t), &spec.t)
        .into_iter()
        .map(|s| factor * s)
        .collect();
    let (lo, hi) = fit_window;
    let idx: Vec<usize> = (0..spec.t.len()).filter(|&i| spec.t[i] >= lo && spec.t[i] <= hi).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| predicted[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| log_ratio[i]).collect();
    let spread = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().copied().fold(f64::INFINITY, f64::min);
    let growth_exponent = if idx.len() >= 2 && spread > 1e-12 {
        linear_fit(&xs, &ys).map_or(0.0, |(m, _)| m)
    } else {
        0.0
    };
    let bound = linear_bound_from_log(&spec.t, &log_ratio);
    Ok(LipschitzProbe {
        sup_ratio: bound.sup_ratio,
        growth_exponent,
        fit_window,
        bound,
    })
}
