//! Quadrature rules used throughout the crate.
//!
//! Every radial integral is written in the log variable `t = -log r`, so the
//! integrands here are smooth (possibly oscillatory) functions on bounded
//! intervals. Long intervals are split into unit panels before adaptive
//! refinement so that oscillations are resolved.

use std::f64::consts::PI;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_ABS_TOL: f64 = 1e-12;

const MAX_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveSimpson {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum panel width before adaptive refinement starts.
    pub panel: f64,
}

impl Default for AdaptiveSimpson {
    fn default() -> Self {
        AdaptiveSimpson {
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            panel: 1.0,
        }
    }
}

impl AdaptiveSimpson {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let panels = ((hi - lo) / self.panel).ceil().max(1.0) as usize;
        let h = (hi - lo) / panels as f64;

        // Coarse pass fixes the absolute scale for the relative tolerance.
        let mut coarse = 0.0;
        for i in 0..panels {
            let x0 = lo + i as f64 * h;
            let x1 = if i + 1 == panels { hi } else { x0 + h };
            let m = 0.5 * (x0 + x1);
            coarse += (x1 - x0) / 6.0 * (f(x0) + 4.0 * f(m) + f(x1)).abs();
        }
        let tol = (self.rel_tol * coarse).max(self.abs_tol);

        let mut total = 0.0;
        for i in 0..panels {
            let x0 = lo + i as f64 * h;
            let x1 = if i + 1 == panels { hi } else { x0 + h };
            let m = 0.5 * (x0 + x1);
            let (f0, fm, f1) = (f(x0), f(m), f(x1));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            let panel_tol = tol * (x1 - x0) / (hi - lo);
            total += refine(&f, x0, x1, f0, fm, f1, whole, panel_tol, MAX_DEPTH);
        }
        sign * total
    }
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson with the default tolerances (relative 1e-10, absolute 1e-12).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    AdaptiveSimpson::default().integrate(f, a, b)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_with_derivative(n, x).0
}

/// Composite trapezoid rule for samples on a uniform grid.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        len => h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[len - 1])),
    }
}

/// Composite Simpson for samples on a uniform grid; an odd trailing interval
/// is closed with the trapezoid rule.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let len = values.len();
    if len < 3 {
        return trapezoid(values, h);
    }
    let intervals = len - 1;
    let even = intervals - intervals % 2;
    let mut s = values[0] + values[even];
    for (i, v) in values.iter().enumerate().take(even).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let mut total = s * h / 3.0;
    if even < intervals {
        total += 0.5 * h * (values[even] + values[intervals]);
    }
    total
}

/// Running integral of `f` on a uniform grid: each cell is integrated with
/// Simpson's rule using the cell midpoint.
pub fn cumulative_simpson<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    if grid.is_empty() {
        return out;
    }
    out.push(0.0);
    let mut acc = 0.0;
    let mut f_left = f(grid[0]);
    for pair in grid.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let f_right = f(b);
        acc += (b - a) / 6.0 * (f_left + 4.0 * f(0.5 * (a + b)) + f_right);
        out.push(acc);
        f_left = f_right;
    }
    out
}

/// Least-squares slope and intercept of `y` against `x`. Returns `None` when
/// `x` has (numerically) zero variance.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    let scale = x[..n].iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if sxx <= 1e-24 * scale * scale * n as f64 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Uniform grid with `count` points on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    let h = (b - a) / (count - 1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { b } else { a + i as f64 * h })
        .collect()
}
