//! Radial coefficient profiles `g(r)` of the Gilbarg-Serrin matrix
//! `a_ij = δ_ij + g(r) θ_i θ_j`, evaluated in the log variable `t = -log r`,
//! and tests of their continuity moduli.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{cumulative_simpson, uniform_grid, AdaptiveSimpson};
use crate::verdict::{Status, Verdict};

pub const DEFAULT_T_MIN: f64 = LN_2;
pub const DEFAULT_T_MAX: f64 = 40.0;
pub const DEFAULT_EPS_ELL: f64 = 1e-3;
pub const DEFAULT_EX3_A: f64 = 10.0;

/// Partial integral above which a windowed integral is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e3;
/// Increment over the final stretch of the window below which it is
/// declared convergent.
pub const CAUCHY_TOLERANCE: f64 = 1e-6;
/// Length in `t` of the final stretch used by the windowed heuristics.
pub const TAIL_SPAN: f64 = 10.0;

const ELLIPTICITY_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    t: Vec<f64>,
    g: Vec<f64>,
}

impl Table {
    pub fn new(t: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if t.len() != g.len() || t.len() < 2 {
            return Err(Error::InvalidProfile(
                "table needs at least two (t, g) samples of equal length".into(),
            ));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile("table t values must be strictly increasing".into()));
        }
        if t.iter().chain(&g).any(|x| !x.is_finite()) {
            return Err(Error::InvalidProfile("table contains non-finite values".into()));
        }
        Ok(Table { t, g })
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    fn segment(&self, t: f64) -> usize {
        match self.t.partition_point(|x| *x <= t) {
            0 => 0,
            i if i >= self.t.len() => self.t.len() - 2,
            i => i - 1,
        }
    }

    fn value(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let s = (t - self.t[i]) / (self.t[i + 1] - self.t[i]);
        self.g[i] + s * (self.g[i + 1] - self.g[i])
    }

    fn node_slope(&self, i: usize) -> f64 {
        let last = self.t.len() - 1;
        let (a, b) = match i {
            0 => (0, 1),
            i if i == last => (last - 1, last),
            i => (i - 1, i + 1),
        };
        (self.g[b] - self.g[a]) / (self.t[b] - self.t[a])
    }

    /// Centered-difference slope at the nodes, interpolated linearly.
    fn slope(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let s = (t - self.t[i]) / (self.t[i + 1] - self.t[i]);
        let (d0, d1) = (self.node_slope(i), self.node_slope(i + 1));
        d0 + s * (d1 - d0)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut t = Vec::new();
        let mut g = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() < 2 {
                return Err(Error::InvalidProfile(format!("row {row}: expected two columns")));
            }
            match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    t.push(a);
                    g.push(b);
                }
                // header row
                _ if row == 0 => continue,
                _ => {
                    return Err(Error::InvalidProfile(format!("row {row}: unparsable number")));
                }
            }
        }
        Table::new(t, g)
    }
}

/// Closed-form families and tabulated profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Zero,
    Const { c: f64 },
    /// `g = |log r|^{-γ}`
    Ex1Pos { gamma: f64 },
    /// `g = -|log r|^{-γ}`
    Ex1Neg { gamma: f64 },
    /// `g = sin|log r| / |log r|^β`
    Ex2 { beta: f64 },
    /// The profile for which `Z(r) = r (A + sin|log r|)` solves the
    /// comparison equation; tied to the dimension `n`.
    Ex3 { a: f64, n: usize },
    Table(Table),
}

impl Family {
    pub fn name(&self) -> FamilyName {
        match self {
            Family::Zero => FamilyName::Zero,
            Family::Const { .. } => FamilyName::Const,
            Family::Ex1Pos { .. } => FamilyName::Ex1Pos,
            Family::Ex1Neg { .. } => FamilyName::Ex1Neg,
            Family::Ex2 { .. } => FamilyName::Ex2,
            Family::Ex3 { .. } => FamilyName::Ex3,
            Family::Table(_) => FamilyName::Table,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Family::Table(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Zero,
    Const,
    Ex1Pos,
    Ex1Neg,
    Ex2,
    Ex3,
    Table,
}

/// Coefficients `(C1, C2)` of the EX3 profile for dimension `n`, obtained by
/// substituting `Z = e^{-t}(A + sin t)` into the comparison equation and
/// solving for `g`.
pub fn ex3_coefficients(n: usize) -> (f64, f64) {
    let m = (n - 1) as f64;
    let d = m * m + 1.0;
    (1.0 / d, -(1.0 + m / d))
}

/// JSON form of a profile, e.g. `{"family": "ex1_pos", "gamma": 0.75}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub family: Option<FamilyName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, rename = "A", alias = "a", skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_ell: Option<f64>,
    /// CSV file with `(t, g)` rows, TABLE only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl ProfileSpec {
    pub fn family(name: FamilyName) -> Self {
        ProfileSpec {
            family: Some(name),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    family: Family,
    t_min: f64,
    t_max: f64,
    eps_ell: f64,
    min_ellipticity: f64,
    sup_abs_g: f64,
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::InvalidProfile(format!("{name} must be positive, got {x}")))
    }
}

impl RadialProfile {
    /// Builds a profile on `[t_min, t_max]` (defaults per family when `None`)
    /// and verifies uniform ellipticity `1 + g ≥ eps_ell`.
    pub fn new(family: Family, t_min: Option<f64>, t_max: Option<f64>, eps_ell: f64) -> Result<Self> {
        match &family {
            Family::Zero => {}
            Family::Const { c } => {
                if !c.is_finite() {
                    return Err(Error::InvalidProfile("c must be finite".into()));
                }
            }
            Family::Ex1Pos { gamma } | Family::Ex1Neg { gamma } => {
                positive("gamma", *gamma)?;
            }
            Family::Ex2 { beta } => {
                positive("beta", *beta)?;
            }
            Family::Ex3 { a, n } => {
                if !(2..=3).contains(n) {
                    return Err(Error::UnsupportedDimension(*n));
                }
                // The denominator A + sin t - cos t vanishes unless A > √2.
                if !(a.is_finite() && *a > SQRT_2) {
                    return Err(Error::InvalidProfile(format!("EX3 needs A > √2, got {a}")));
                }
            }
            Family::Table(_) => {}
        }
        let (t_min, t_max) = match &family {
            Family::Table(tab) => {
                let lo = t_min.unwrap_or(tab.t[0]);
                let hi = t_max.unwrap_or(*tab.t.last().unwrap());
                if lo < tab.t[0] || hi > *tab.t.last().unwrap() {
                    return Err(Error::InvalidProfile("domain exceeds table range".into()));
                }
                (lo, hi)
            }
            _ => (
                t_min.unwrap_or_else(|| default_t_min(&family)),
                t_max.unwrap_or(DEFAULT_T_MAX),
            ),
        };
        if !(t_min.is_finite() && t_max.is_finite() && 0.0 < t_min && t_min < t_max) {
            return Err(Error::InvalidProfile(format!(
                "invalid domain [{t_min}, {t_max}]"
            )));
        }
        if !(eps_ell > 0.0 && eps_ell < 1.0) {
            return Err(Error::InvalidProfile(format!("eps_ell must lie in (0, 1), got {eps_ell}")));
        }
        let mut p = RadialProfile {
            family,
            t_min,
            t_max,
            eps_ell,
            min_ellipticity: f64::NAN,
            sup_abs_g: f64::NAN,
        };
        p.verify_ellipticity()?;
        if let Family::Ex3 { a, .. } = p.family {
            if p.sup_abs_g >= 1.0 {
                return Err(Error::InvalidProfile(format!(
                    "EX3 with A = {a} has sup|g| = {} ≥ 1",
                    p.sup_abs_g
                )));
            }
        }
        Ok(p)
    }

    pub fn zero() -> Self {
        Self::new(Family::Zero, None, None, DEFAULT_EPS_ELL).expect("zero profile")
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(Family::Const { c }, None, None, DEFAULT_EPS_ELL)
    }

    pub fn ex1_pos(gamma: f64) -> Result<Self> {
        Self::new(Family::Ex1Pos { gamma }, None, None, DEFAULT_EPS_ELL)
    }

    pub fn ex1_neg(gamma: f64) -> Result<Self> {
        Self::new(Family::Ex1Neg { gamma }, None, None, DEFAULT_EPS_ELL)
    }

    pub fn ex2(beta: f64) -> Result<Self> {
        Self::new(Family::Ex2 { beta }, None, None, DEFAULT_EPS_ELL)
    }

    pub fn ex3(a: f64, n: usize) -> Result<Self> {
        Self::new(Family::Ex3 { a, n }, None, None, DEFAULT_EPS_ELL)
    }

    pub fn table(t: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        Self::new(Family::Table(Table::new(t, g)?), None, None, DEFAULT_EPS_ELL)
    }

    /// Same family on a different window.
    pub fn with_domain(&self, t_min: f64, t_max: f64) -> Result<Self> {
        Self::new(self.family.clone(), Some(t_min), Some(t_max), self.eps_ell)
    }

    pub fn from_spec(spec: &ProfileSpec, base_dir: Option<&Path>) -> Result<Self> {
        let name = spec
            .family
            .ok_or_else(|| Error::InvalidProfile("missing \"family\"".into()))?;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::InvalidProfile(format!("family {name:?} requires \"{key}\"")))
        };
        let family = match name {
            FamilyName::Zero => Family::Zero,
            FamilyName::Const => Family::Const { c: need(spec.c, "c")? },
            FamilyName::Ex1Pos => Family::Ex1Pos { gamma: need(spec.gamma, "gamma")? },
            FamilyName::Ex1Neg => Family::Ex1Neg { gamma: need(spec.gamma, "gamma")? },
            FamilyName::Ex2 => Family::Ex2 { beta: need(spec.beta, "beta")? },
            FamilyName::Ex3 => Family::Ex3 {
                a: spec.a.unwrap_or(DEFAULT_EX3_A),
                n: spec
                    .n
                    .ok_or_else(|| Error::InvalidProfile("family ex3 requires \"n\"".into()))?,
            },
            FamilyName::Table => {
                let path = spec
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::InvalidProfile("family table requires \"path\"".into()))?;
                let path = match base_dir {
                    Some(dir) if Path::new(path).is_relative() => dir.join(path),
                    _ => Path::new(path).to_path_buf(),
                };
                let file = std::fs::File::open(&path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                Family::Table(Table::from_csv_reader(file)?)
            }
        };
        Self::new(family, spec.t_min, spec.t_max, spec.eps_ell.unwrap_or(DEFAULT_EPS_ELL))
    }

    /// JSON form of this profile (tables are echoed without their path).
    pub fn to_spec(&self) -> ProfileSpec {
        let mut spec = ProfileSpec::family(self.family.name());
        match self.family {
            Family::Const { c } => spec.c = Some(c),
            Family::Ex1Pos { gamma } | Family::Ex1Neg { gamma } => spec.gamma = Some(gamma),
            Family::Ex2 { beta } => spec.beta = Some(beta),
            Family::Ex3 { a, n } => {
                spec.a = Some(a);
                spec.n = Some(n);
            }
            Family::Zero | Family::Table(_) => {}
        }
        spec.t_min = Some(self.t_min);
        spec.t_max = Some(self.t_max);
        spec.eps_ell = Some(self.eps_ell);
        spec
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn r_max(&self) -> f64 {
        (-self.t_min).exp()
    }

    pub fn eps_ell(&self) -> f64 {
        self.eps_ell
    }

    /// Smallest value of `1 + g` found by the constructor.
    pub fn min_ellipticity(&self) -> f64 {
        self.min_ellipticity
    }

    /// Largest `|g|` found by the constructor's sampling.
    pub fn sup_abs_g(&self) -> f64 {
        self.sup_abs_g
    }

    /// Dimension the profile is tied to, if any (EX3 only).
    pub fn dimension(&self) -> Option<usize> {
        match self.family {
            Family::Ex3 { n, .. } => Some(n),
            _ => None,
        }
    }

    /// Checks that `n` is a supported dimension compatible with the profile.
    pub fn check_dimension(&self, n: usize) -> Result<()> {
        if !(2..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        match self.dimension() {
            Some(m) if m != n => Err(Error::DimensionMismatch { profile: m, requested: n }),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let slack = 1e-12 * t.abs().max(1.0);
        t >= self.t_min - slack && t <= self.t_max + slack
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { t, t_min: self.t_min, t_max: self.t_max })
        }
    }

    /// `g(e^{-t})`.
    pub fn eval_g(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        let g = self.g(t);
        if matches!(self.family, Family::Table(_)) && 1.0 + g < self.eps_ell {
            return Err(Error::EllipticityViolation { t, value: 1.0 + g, eps: self.eps_ell });
        }
        Ok(g)
    }

    /// `d/dt g(e^{-t}) = -r g'(r)`. Tables use interpolated centered differences.
    pub fn eval_dg_dt(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(self.dg_dt(t))
    }

    /// Unchecked evaluation; closed forms extend past the window, tables are
    /// extrapolated linearly.
    pub(crate) fn g(&self, t: f64) -> f64 {
        match &self.family {
            Family::Zero => 0.0,
            Family::Const { c } => *c,
            Family::Ex1Pos { gamma } => t.powf(-gamma),
            Family::Ex1Neg { gamma } => -t.powf(-gamma),
            Family::Ex2 { beta } => t.sin() * t.powf(-beta),
            Family::Ex3 { a, n } => {
                let (c1, c2) = ex3_coefficients(*n);
                let (s, c) = t.sin_cos();
                (-c1 * s - c2 * c) / (a + s - c)
            }
            Family::Table(tab) => tab.value(t),
        }
    }

    pub(crate) fn dg_dt(&self, t: f64) -> f64 {
        match &self.family {
            Family::Zero | Family::Const { .. } => 0.0,
            Family::Ex1Pos { gamma } => -gamma * t.powf(-gamma - 1.0),
            Family::Ex1Neg { gamma } => gamma * t.powf(-gamma - 1.0),
            Family::Ex2 { beta } => {
                let (s, c) = t.sin_cos();
                c * t.powf(-beta) - beta * s * t.powf(-beta - 1.0)
            }
            Family::Ex3 { a, n } => {
                let (c1, c2) = ex3_coefficients(*n);
                let (s, c) = t.sin_cos();
                let num = -c1 * s - c2 * c;
                let dnum = -c1 * c + c2 * s;
                let den = a + s - c;
                let dden = c + s;
                (dnum * den - num * dden) / (den * den)
            }
            Family::Table(tab) => tab.slope(t),
        }
    }

    fn verify_ellipticity(&mut self) -> Result<()> {
        let mut min_val = f64::INFINITY;
        let mut min_t = self.t_min;
        let mut sup = 0.0f64;
        let mut consider = |t: f64, g: f64| {
            if 1.0 + g < min_val {
                min_val = 1.0 + g;
                min_t = t;
            }
            sup = sup.max(g.abs());
        };
        for t in uniform_grid(self.t_min, self.t_max, ELLIPTICITY_SAMPLES) {
            consider(t, self.g(t));
        }
        match &self.family {
            Family::Table(tab) => {
                for (t, g) in tab.t.iter().zip(&tab.g) {
                    if self.t_min <= *t && *t <= self.t_max {
                        consider(*t, *g);
                    }
                }
            }
            // Monotone families: extremes sit at the window ends.
            Family::Ex1Pos { .. } | Family::Ex1Neg { .. } => {
                consider(self.t_min, self.g(self.t_min));
                consider(self.t_max, self.g(self.t_max));
            }
            Family::Ex3 { .. } => {
                // g is 2π-periodic in t: one finely resolved period covers every value.
                for t in uniform_grid(0.0, 2.0 * PI, ELLIPTICITY_SAMPLES) {
                    consider(self.t_min + t, self.g(self.t_min + t));
                }
            }
            _ => {}
        }
        self.min_ellipticity = min_val;
        self.sup_abs_g = sup;
        if min_val < self.eps_ell {
            return Err(Error::EllipticityViolation { t: min_t, value: min_val, eps: self.eps_ell });
        }
        Ok(())
    }

    /// `g > 0` near the origin (used by the non-Lipschitz criterion when
    /// square-Dini fails).
    pub fn positive_near_zero(&self) -> Verdict {
        match &self.family {
            Family::Ex1Pos { .. } => Verdict::new(Status::HoldsAnalytic),
            Family::Const { c } => Verdict::new(Status::analytic(*c > 0.0)),
            Family::Zero | Family::Ex1Neg { .. } | Family::Ex2 { .. } | Family::Ex3 { .. } => {
                Verdict::new(Status::FailsAnalytic)
            }
            Family::Table(_) => {
                let lo = (self.t_max - TAIL_SPAN).max(self.t_min);
                let min_tail = uniform_grid(lo, self.t_max, 1000)
                    .into_iter()
                    .map(|t| self.g(t))
                    .fold(f64::INFINITY, f64::min);
                let status = if min_tail > 0.0 {
                    Status::HoldsNumericWindow
                } else {
                    Status::FailsNumericWindow
                };
                Verdict::new(status).with("min_g_last_span", min_tail)
            }
        }
    }
}

fn default_t_min(family: &Family) -> f64 {
    match family {
        // -t^{-γ} ≤ -1 for t ≤ 1: start where 1 + g ≥ 1/2.
        Family::Ex1Neg { gamma } => DEFAULT_T_MIN.max(2f64.powf(1.0 / gamma)),
        _ => DEFAULT_T_MIN,
    }
}

/// Outcome of the windowed divergence heuristic on a running integral.
pub fn window_verdict(grid: &[f64], partial: &[f64]) -> Verdict {
    let last = partial.len() - 1;
    let end = partial[last];
    let t_end = grid[last];
    let start = grid.partition_point(|t| *t < t_end - TAIL_SPAN).min(last);
    let increment = end - partial[start];
    let mut v = if end > DIVERGENCE_THRESHOLD && increment > 0.0 {
        Verdict::new(Status::FailsNumericWindow)
    } else if end < DIVERGENCE_THRESHOLD && increment.abs() < CAUCHY_TOLERANCE {
        Verdict::new(Status::HoldsNumericWindow)
    } else {
        Verdict::inconclusive()
    };
    v.evidence.insert("partial_integral", end);
    v.evidence.insert("tail_increment", increment);
    v.evidence.insert("t_end", t_end);
    v
}

fn partial_integral<F: Fn(f64) -> f64>(p: &RadialProfile, f: F) -> f64 {
    AdaptiveSimpson::default().integrate(|t| f(p.g(t)), p.t_min, p.t_max)
}

fn table_window<F: Fn(f64) -> f64>(p: &RadialProfile, f: F) -> Verdict {
    let count = (((p.t_max - p.t_min) / 0.01).ceil() as usize + 1).max(3);
    let grid = uniform_grid(p.t_min, p.t_max, count);
    let partial = cumulative_simpson(|t| f(p.g(t)), &grid);
    window_verdict(&grid, &partial)
}

/// Dini condition `∫ |g(e^{-t})| dt < ∞`.
pub fn dini_test(p: &RadialProfile) -> Verdict {
    let status = match &p.family {
        Family::Zero => Status::HoldsAnalytic,
        Family::Const { c } => Status::analytic(*c == 0.0),
        Family::Ex1Pos { gamma } | Family::Ex1Neg { gamma } => Status::analytic(*gamma > 1.0),
        Family::Ex2 { beta } => Status::analytic(*beta > 1.0),
        Family::Ex3 { .. } => Status::FailsAnalytic,
        Family::Table(_) => return table_window(p, f64::abs),
    };
    Verdict::new(status).with("partial_integral", partial_integral(p, f64::abs))
}

/// Square-Dini condition `∫ g(e^{-t})² dt < ∞`.
pub fn square_dini_test(p: &RadialProfile) -> Verdict {
    let status = match &p.family {
        Family::Zero => Status::HoldsAnalytic,
        Family::Const { c } => Status::analytic(*c == 0.0),
        Family::Ex1Pos { gamma } | Family::Ex1Neg { gamma } => Status::analytic(*gamma > 0.5),
        Family::Ex2 { beta } => Status::analytic(*beta > 0.5),
        Family::Ex3 { .. } => Status::FailsAnalytic,
        Family::Table(_) => return table_window(p, |g| g * g),
    };
    Verdict::new(status).with("partial_integral", partial_integral(p, |g| g * g))
}

/// Upper limit for [`total_variation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Window(f64),
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalVariation {
    /// `+∞` when the variation is known to be infinite.
    pub value: f64,
    pub verdict: Verdict,
}

/// `∫ |dg/dt| dt` from `t_min` to the horizon.
pub fn total_variation(p: &RadialProfile, horizon: Horizon) -> TotalVariation {
    let upper = match horizon {
        Horizon::Window(t) => t,
        Horizon::Infinite => p.t_max,
    };
    let quad = AdaptiveSimpson { panel: 0.5, ..Default::default() };
    let window = quad.integrate(|t| p.dg_dt(t).abs(), p.t_min, upper);
    let infinite = matches!(horizon, Horizon::Infinite);

    match &p.family {
        Family::Zero | Family::Const { .. } => TotalVariation {
            value: 0.0,
            verdict: Verdict::new(Status::HoldsAnalytic).with("window_integral", 0.0),
        },
        Family::Ex1Pos { gamma } | Family::Ex1Neg { gamma } => {
            // |g| is monotone, so the tail past the window is exactly upper^{-γ}.
            let value = if infinite { window + upper.powf(-gamma) } else { window };
            TotalVariation {
                value,
                verdict: Verdict::new(Status::HoldsAnalytic).with("window_integral", window),
            }
        }
        Family::Ex2 { beta } => {
            let finite = *beta > 1.0;
            let value = if infinite && !finite { f64::INFINITY } else { window };
            let mut verdict = Verdict::new(Status::analytic(finite)).with("window_integral", window);
            if infinite && finite {
                let tail = upper.powf(1.0 - beta) / (beta - 1.0) + upper.powf(-beta);
                verdict.evidence.insert("tail_bound", tail);
            }
            TotalVariation { value, verdict }
        }
        Family::Ex3 { .. } => {
            let per_period = (0..10)
                .map(|k| {
                    let a = p.t_min + 2.0 * PI * k as f64;
                    quad.integrate(|t| p.dg_dt(t).abs(), a, a + 2.0 * PI)
                })
                .fold(f64::INFINITY, f64::min);
            TotalVariation {
                value: if infinite { f64::INFINITY } else { window },
                verdict: Verdict::new(Status::FailsAnalytic)
                    .with("window_integral", window)
                    .with("min_per_period_variation", per_period),
            }
        }
        Family::Table(_) => {
            let count = (((upper - p.t_min) / 0.01).ceil() as usize + 1).max(3);
            let grid = uniform_grid(p.t_min, upper, count);
            let partial = cumulative_simpson(|t| p.dg_dt(t).abs(), &grid);
            TotalVariation {
                value: *partial.last().unwrap(),
                verdict: window_verdict(&grid, &partial),
            }
        }
    }
}

/// Boundedness of `|r g'(r)| = |dg/dt|`.
pub fn rgprime_bounded(p: &RadialProfile) -> Verdict {
    let sup = uniform_grid(p.t_min, p.t_max, ELLIPTICITY_SAMPLES)
        .into_iter()
        .map(|t| p.dg_dt(t).abs())
        .fold(0.0f64, f64::max);
    let status = match p.family {
        Family::Table(_) if sup <= DIVERGENCE_THRESHOLD => Status::HoldsNumericWindow,
        Family::Table(_) => Status::Inconclusive,
        // Every closed form has a bounded t-derivative on t ≥ t_min > 0.
        _ => Status::HoldsAnalytic,
    };
    Verdict::new(status).with("sup_abs_dg_dt", sup)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusReport {
    pub dini: Verdict,
    pub square_dini: Verdict,
    pub total_variation: TotalVariation,
    pub rgprime_bounded: Verdict,
    pub sup_window_values: WindowValues,
}

/// Partial integrals at the window edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowValues {
    pub dini: f64,
    pub square_dini: f64,
    pub total_variation: f64,
}

pub fn modulus_report(p: &RadialProfile) -> ModulusReport {
    let dini = dini_test(p);
    let square_dini = square_dini_test(p);
    let tv = total_variation(p, Horizon::Window(p.t_max));
    let sup_window_values = WindowValues {
        dini: dini.evidence.get("partial_integral").unwrap_or(f64::NAN),
        square_dini: square_dini.evidence.get("partial_integral").unwrap_or(f64::NAN),
        total_variation: tv.value,
    };
    ModulusReport {
        dini,
        square_dini,
        total_variation: tv,
        rgprime_bounded: rgprime_bounded(p),
        sup_window_values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn eval_examples() {
        assert_eq!(RadialProfile::zero().eval_g(5.0).unwrap(), 0.0);
        let p = RadialProfile::ex1_pos(1.0).unwrap();
        assert_relative_eq!(p.eval_g(10.0).unwrap(), 0.1, epsilon = 1e-16);
        let p = RadialProfile::ex2(1.0).unwrap();
        assert_relative_eq!(p.eval_g(FRAC_PI_2).unwrap(), 2.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(RadialProfile::zero().eval_dg_dt(3.0).unwrap(), 0.0);
        let p = RadialProfile::ex1_pos(1.0).unwrap();
        assert_relative_eq!(p.eval_dg_dt(10.0).unwrap(), -0.01, epsilon = 1e-16);
        let p = RadialProfile::ex2(1.0).unwrap();
        assert_relative_eq!(p.eval_dg_dt(PI).unwrap(), -1.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn out_of_domain() {
        let p = RadialProfile::ex1_pos(1.0).unwrap();
        assert!(matches!(p.eval_g(0.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(p.eval_g(40.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(p.eval_dg_dt(41.0), Err(Error::OutOfDomain { .. })));
        assert!(p.eval_g(LN_2).is_ok());
    }

    #[test]
    fn ellipticity_is_enforced() {
        assert!(matches!(
            RadialProfile::constant(-1.0),
            Err(Error::EllipticityViolation { .. })
        ));
        assert!(matches!(
            RadialProfile::table(vec![1.0, 2.0, 3.0], vec![0.0, -0.9995, 0.0]),
            Err(Error::EllipticityViolation { .. })
        ));
        // On the default window r ≤ 1/2, -|log r|^{-γ} < -1: the window is moved in.
        let p = RadialProfile::ex1_neg(0.75).unwrap();
        assert!(p.t_min() > 1.0);
        assert!(p.min_ellipticity() >= 0.5 - 1e-12);
        assert!(matches!(
            p.with_domain(LN_2, 40.0),
            Err(Error::EllipticityViolation { .. })
        ));
    }

    #[test]
    fn ex3_needs_large_enough_a() {
        assert!(RadialProfile::ex3(1.2, 2).is_err());
        assert!(RadialProfile::ex3(10.0, 4).is_err());
        let p = RadialProfile::ex3(10.0, 2).unwrap();
        assert!(p.sup_abs_g() < 1.0);
        assert_eq!(p.dimension(), Some(2));
        assert!(matches!(p.check_dimension(3), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn table_interpolates_and_parses_csv() {
        let csv = "t,g\n1.0,0.0\n2.0,0.5\n4.0,0.1\n";
        let tab = Table::from_csv_reader(csv.as_bytes()).unwrap();
        let p = RadialProfile::new(Family::Table(tab), None, None, DEFAULT_EPS_ELL).unwrap();
        assert_relative_eq!(p.eval_g(1.5).unwrap(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(p.eval_g(3.0).unwrap(), 0.3, epsilon = 1e-15);
        assert_eq!(p.t_min(), 1.0);
        assert_eq!(p.t_max(), 4.0);
        assert!(Table::from_csv_reader("1,0\n1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn dini_table() {
        assert_eq!(dini_test(&RadialProfile::ex1_pos(2.0).unwrap()).status, Status::HoldsAnalytic);
        assert_eq!(dini_test(&RadialProfile::ex1_pos(0.75).unwrap()).status, Status::FailsAnalytic);
        assert_eq!(dini_test(&RadialProfile::zero()).status, Status::HoldsAnalytic);
        assert_eq!(dini_test(&RadialProfile::ex3(10.0, 2).unwrap()).status, Status::FailsAnalytic);
    }

    #[test]
    fn square_dini_table() {
        let s = |p: RadialProfile| square_dini_test(&p).status;
        assert_eq!(s(RadialProfile::ex1_neg(0.75).unwrap()), Status::HoldsAnalytic);
        assert_eq!(s(RadialProfile::ex1_pos(0.4).unwrap()), Status::FailsAnalytic);
        assert_eq!(s(RadialProfile::constant(0.1).unwrap()), Status::FailsAnalytic);
        assert_eq!(s(RadialProfile::ex2(0.6).unwrap()), Status::HoldsAnalytic);
    }

    #[test]
    fn dini_evidence_matches_antiderivative() {
        // ∫_{log 2}^{40} t^{-2} dt
        let v = dini_test(&RadialProfile::ex1_pos(2.0).unwrap());
        let exact = 1.0 / LN_2 - 1.0 / 40.0;
        assert_relative_eq!(v.evidence.get("partial_integral").unwrap(), exact, max_relative = 1e-10);
    }

    #[test]
    fn total_variation_examples() {
        let tv = total_variation(&RadialProfile::zero(), Horizon::Infinite);
        assert_eq!(tv.value, 0.0);
        assert_eq!(tv.verdict.status, Status::HoldsAnalytic);

        // ∫_{log 2}^∞ t^{-2} dt = 1 / log 2
        let tv = total_variation(&RadialProfile::ex1_pos(1.0).unwrap(), Horizon::Infinite);
        assert_relative_eq!(tv.value, 1.0 / LN_2, max_relative = 1e-9);
        assert_eq!(tv.verdict.status, Status::HoldsAnalytic);

        let tv = total_variation(&RadialProfile::ex3(10.0, 2).unwrap(), Horizon::Infinite);
        assert!(tv.value.is_infinite());
        assert_eq!(tv.verdict.status, Status::FailsAnalytic);
        assert!(tv.verdict.evidence.get("min_per_period_variation").unwrap() > 0.05);

        let tv = total_variation(&RadialProfile::ex2(0.5).unwrap(), Horizon::Infinite);
        assert_eq!(tv.verdict.status, Status::FailsAnalytic);
        let tv = total_variation(&RadialProfile::ex2(2.0).unwrap(), Horizon::Infinite);
        assert_eq!(tv.verdict.status, Status::HoldsAnalytic);
        assert!(tv.value.is_finite());
    }

    #[test]
    fn ex3_is_periodic() {
        let p = RadialProfile::ex3(10.0, 3).unwrap();
        for k in 0..200 {
            let t = 1.0 + 0.137 * k as f64;
            assert!((p.g(t) - p.g(t + 2.0 * PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn window_heuristic_on_tables() {
        // g = 1 / t is not Dini (log growth, slow) but square-Dini.
        let t = uniform_grid(1.0, 40.0, 400);
        let g: Vec<f64> = t.iter().map(|t| 0.5 / t).collect();
        let p = RadialProfile::table(t.clone(), g).unwrap();
        assert_eq!(dini_test(&p).status, Status::Inconclusive);
        // Compactly supported table: every integral is settled on the window.
        let g: Vec<f64> = t.iter().map(|t| if *t < 10.0 { 0.2 } else { 0.0 }).collect();
        let p = RadialProfile::table(t.clone(), g).unwrap();
        assert_eq!(dini_test(&p).status, Status::HoldsNumericWindow);
        assert_eq!(square_dini_test(&p).status, Status::HoldsNumericWindow);
        // Large constant on a long window: partial integral exceeds the threshold.
        let t = uniform_grid(1.0, 2000.0, 2000);
        let g = vec![0.9; t.len()];
        let p = RadialProfile::table(t, g).unwrap();
        assert_eq!(dini_test(&p).status, Status::FailsNumericWindow);
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"family": "ex1_pos", "gamma": 0.75, "n": 3, "t_max": 40}"#;
        let spec: ProfileSpec = serde_json::from_str(json).unwrap();
        let p = RadialProfile::from_spec(&spec, None).unwrap();
        assert_eq!(p.family(), &Family::Ex1Pos { gamma: 0.75 });
        let again = RadialProfile::from_spec(&p.to_spec(), None).unwrap();
        assert_eq!(again, p);
        let bad: ProfileSpec = serde_json::from_str(r#"{"family": "ex2"}"#).unwrap();
        assert!(RadialProfile::from_spec(&bad, None).is_err());
        let ex3: ProfileSpec = serde_json::from_str(r#"{"family": "ex3", "A": 10, "n": 2}"#).unwrap();
        assert_eq!(RadialProfile::from_spec(&ex3, None).unwrap().dimension(), Some(2));
    }
}
