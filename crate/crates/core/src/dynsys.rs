//! Stability of the angular dynamical system and the final regularity
//! classification.
//!
//! For a general coefficient field the relevant object is the R-matrix
//! `R(r) = ⨍ (A - n (Aθ) ⊗ θ) dθ`. For Gilbarg-Serrin coefficients it reduces
//! to `-((n-1)/n) g I`, and the system becomes the scalar equation
//! `φ' = ((n-1)/n) g(t) φ`, solved by `φ = exp S(t)` with
//! `S(t) = ((n-1)/n) ∫_{t_min}^t g`.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::{
    modulus_report, window_verdict, Family, RadialProfile, DIVERGENCE_THRESHOLD,
    CAUCHY_TOLERANCE, TAIL_SPAN,
};
use crate::quadrature::{cumulative_simpson, uniform_grid};
use crate::radial_ode::{fmt12, power_law_exponent, solve_z, z_linear_bound, DEFAULT_STEP};
use crate::sphere::SphereRule;
use crate::verdict::{Finding, PaperTag, Status, Verdict};

/// Grid step used by [`classify`] for `S(t)`.
pub const STABILITY_STEP: f64 = 1e-2;

/// `A = I + g θ ⊗ θ`.
pub fn gs_coefficient(g: f64, theta: &[f64]) -> DMatrix<f64> {
    let n = theta.len();
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } + g * theta[i] * theta[j])
}

/// `⨍_{S^{n-1}} (A(r, θ) - n (A θ) ⊗ θ) dθ`.
pub fn compute_r_matrix<F>(coeff: F, n: usize, r: f64) -> Result<DMatrix<f64>>
where
    F: Fn(f64, &[f64]) -> DMatrix<f64>,
{
    let rule = SphereRule::standard(n)?;
    let mut out = DMatrix::zeros(n, n);
    for (i, w) in rule.weights.iter().enumerate() {
        let theta = rule.direction(i);
        let a = coeff(r, theta);
        let th = nalgebra::DVector::from_column_slice(theta);
        let a_theta = &a * &th;
        out += (a - (n as f64) * a_theta * th.transpose()) * *w;
    }
    Ok(out)
}

/// R-matrix of the Gilbarg-Serrin coefficients of `p` at `t = -log r`.
pub fn gs_r_matrix(p: &RadialProfile, n: usize, t: f64) -> Result<DMatrix<f64>> {
    let g = p.eval_g(t)?;
    compute_r_matrix(|_, theta| gs_coefficient(g, theta), n, (-t).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub t_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// `sup_t (S(t) - min_{s ≤ t} S(s))` on the grid.
    pub sup_increment: f64,
    pub uniform_stable: Verdict,
    /// `S` converges in `[-∞, ∞)`.
    pub asympt_constant: Verdict,
    /// `limsup S = +∞`.
    pub limsup_divergent: Verdict,
    /// `S → -∞`.
    pub s_to_minus_infinity: Verdict,
}

impl StabilityReport {
    /// Writes `t,S,running_min,increment` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "S", "running_min", "increment"])?;
        let mut run_min = f64::INFINITY;
        for (t, s) in self.t_grid.iter().zip(&self.s_grid) {
            run_min = run_min.min(*s);
            wtr.write_record([fmt12(*t), fmt12(*s), fmt12(run_min), fmt12(s - run_min)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn check_uniform(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::InvalidArgument("stability grid needs at least 3 points".into()));
    }
    let h = grid[1] - grid[0];
    if !(h > 0.0 && h <= STABILITY_STEP * (1.0 + 1e-9)) {
        return Err(Error::InvalidArgument(format!("grid step must lie in (0, {STABILITY_STEP}]")));
    }
    let uniform = grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.max(1.0));
    if uniform {
        Ok(())
    } else {
        Err(Error::InvalidArgument("stability grid must be uniform".into()))
    }
}

/// `S(t)` on `grid` with the stability verdicts.
pub fn cumulative_s(p: &RadialProfile, n: usize, grid: &[f64]) -> Result<StabilityReport> {
    p.check_dimension(n)?;
    check_uniform(grid)?;
    let factor = (n as f64 - 1.0) / n as f64;
    let s_grid: Vec<f64> = cumulative_simpson(|t| p.g(t), grid)
        .into_iter()
        .map(|s| factor * s)
        .collect();

    let mut run_min = f64::INFINITY;
    let mut sup_increment = 0.0f64;
    let mut running_sup = Vec::with_capacity(grid.len());
    for s in &s_grid {
        run_min = run_min.min(*s);
        sup_increment = sup_increment.max(s - run_min);
        running_sup.push(sup_increment);
    }

    let last = s_grid.len() - 1;
    let t_end = grid[last];
    let start = grid.partition_point(|t| *t < t_end - TAIL_SPAN).min(last);
    let s_end = s_grid[last];
    let tail_change = s_end - s_grid[start];
    let max_tail = s_grid[start..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = DIVERGENCE_THRESHOLD * factor;

    let (uniform_stable, asympt_constant, limsup_divergent, s_to_minus_infinity) = match p.family() {
        Family::Table(_) => {
            let us = window_verdict(grid, &running_sup);
            let cauchy = tail_change.abs() < CAUCHY_TOLERANCE;
            let to_minus = s_end < -threshold && tail_change < 0.0;
            let to_plus = max_tail > threshold && tail_change > 0.0;
            let numeric = |holds: bool, fails: bool| {
                Verdict::new(if holds {
                    Status::HoldsNumericWindow
                } else if fails {
                    Status::FailsNumericWindow
                } else {
                    Status::Inconclusive
                })
            };
            (
                us,
                numeric(cauchy || to_minus, to_plus),
                numeric(to_plus, cauchy || to_minus),
                numeric(to_minus, cauchy || to_plus),
            )
        }
        family => {
            let [a, b, c, d] = analytic_stability(family);
            (
                Verdict::new(Status::analytic(a)),
                Verdict::new(Status::analytic(b)),
                Verdict::new(Status::analytic(c)),
                Verdict::new(Status::analytic(d)),
            )
        }
    };
    let with_ev = |v: Verdict| {
        v.with("S_end", s_end)
            .with("sup_increment", sup_increment)
            .with("max_S_last_span", max_tail)
    };
    Ok(StabilityReport {
        t_grid: grid.to_vec(),
        s_grid,
        sup_increment,
        uniform_stable: with_ev(uniform_stable),
        asympt_constant: with_ev(asympt_constant),
        limsup_divergent: with_ev(limsup_divergent),
        s_to_minus_infinity: with_ev(s_to_minus_infinity),
    })
}

/// `[uniformly stable, asymptotically constant, limsup S = ∞, S → -∞]`.
fn analytic_stability(family: &Family) -> [bool; 4] {
    match family {
        Family::Zero => [true, true, false, false],
        Family::Const { c } => [*c <= 0.0, *c <= 0.0, *c > 0.0, *c < 0.0],
        Family::Ex1Pos { gamma } => [*gamma > 1.0, *gamma > 1.0, *gamma <= 1.0, false],
        Family::Ex1Neg { gamma } => [true, true, false, *gamma <= 1.0],
        // ∫ sin τ / τ^β converges for every β > 0.
        Family::Ex2 { .. } => [true, true, false, false],
        // Positive mean over each period.
        Family::Ex3 { .. } => [false, false, true, false],
        Family::Table(_) => unreachable!("tables use the window heuristic"),
    }
}

/// [`cumulative_s`] on the profile window with step [`STABILITY_STEP`].
pub fn stability_report(p: &RadialProfile, n: usize) -> Result<StabilityReport> {
    let count = ((p.t_max() - p.t_min()) / STABILITY_STEP).ceil() as usize + 1;
    cumulative_s(p, n, &uniform_grid(p.t_min(), p.t_max(), count))
}

/// Evidence on the positive finite-energy solution `Z` of the comparison
/// equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ZRoute {
    /// `0 < Z(r) ≤ c r`.
    pub linear_bound: Verdict,
    /// `Z(r) / r → 0`.
    pub ratio_to_zero: Verdict,
}

pub fn z_route(p: &RadialProfile, n: usize) -> Result<ZRoute> {
    let sol = solve_z(p, n, DEFAULT_STEP)?;
    let lb = z_linear_bound(&sol);
    let (linear, to_zero) = match p.family() {
        Family::Table(_) => {
            let to_zero = if lb.log_ratio_end < -UNBOUNDED_LOG && lb.trend < 0.0 {
                Status::HoldsNumericWindow
            } else {
                Status::Inconclusive
            };
            (lb.verdict.status, to_zero)
        }
        Family::Zero => (Status::HoldsAnalytic, Status::FailsAnalytic),
        Family::Const { c } => {
            let alpha = power_law_exponent(*c, n);
            (Status::analytic(alpha >= 1.0), Status::analytic(alpha > 1.0))
        }
        // Z ~ r exp(((n-1)/n) ∫ g): the exponent diverges to ±∞ exactly when ∫ g does.
        Family::Ex1Pos { gamma } => (Status::analytic(*gamma > 1.0), Status::FailsAnalytic),
        Family::Ex1Neg { gamma } => (Status::HoldsAnalytic, Status::analytic(*gamma <= 1.0)),
        Family::Ex2 { .. } => (Status::HoldsAnalytic, Status::FailsAnalytic),
        // Z = r (A + sin t) in closed form.
        Family::Ex3 { .. } => (Status::HoldsAnalytic, Status::FailsAnalytic),
    };
    let ev = |s: Status| {
        Verdict::new(s)
            .with("sup_ratio", lb.sup_ratio)
            .with("excess", lb.excess)
            .with("trend", lb.trend)
            .with("log_ratio_end", lb.log_ratio_end)
    };
    Ok(ZRoute {
        linear_bound: ev(linear),
        ratio_to_zero: ev(to_zero),
    })
}

const UNBOUNDED_LOG: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rationale {
    pub criterion: String,
    pub paper_tag: PaperTag,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityVerdict {
    pub lipschitz_at_0: Finding,
    pub differentiable_at_0: Finding,
    pub c1_neighborhood: Finding,
    pub non_lipschitz_exists: Finding,
    pub grad_zero_at_0: Finding,
    pub rationale: Vec<Rationale>,
}

impl RegularityVerdict {
    pub fn findings(&self) -> [&Finding; 5] {
        [
            &self.lipschitz_at_0,
            &self.differentiable_at_0,
            &self.c1_neighborhood,
            &self.non_lipschitz_exists,
            &self.grad_zero_at_0,
        ]
    }

    /// Fails with [`Error::ContradictoryVerdicts`] if the verdicts are not
    /// mutually consistent.
    pub fn check_consistency(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::ContradictoryVerdicts(msg.to_string()));
        if self.non_lipschitz_exists.holds() && self.lipschitz_at_0.holds() {
            return bad("non-Lipschitz solution exists but all solutions are Lipschitz");
        }
        if self.c1_neighborhood.holds() && !self.lipschitz_at_0.holds() {
            return bad("C1 near the origin without Lipschitz at the origin");
        }
        if self.differentiable_at_0.holds() && !self.lipschitz_at_0.holds() {
            return bad("differentiable at the origin without Lipschitz at the origin");
        }
        Ok(())
    }
}

const LIPSCHITZ: &str = "lipschitz_at_0";
const DIFFERENTIABLE: &str = "differentiable_at_0";
const C1: &str = "c1_neighborhood";
const NON_LIPSCHITZ: &str = "non_lipschitz_exists";
const GRAD_ZERO: &str = "grad_zero_at_0";

fn merged(status_holds: bool, inputs: &[&Verdict]) -> Verdict {
    let analytic = inputs.iter().all(|v| v.status.is_analytic());
    let status = if status_holds {
        Status::holding(analytic)
    } else {
        Status::failing(analytic)
    };
    let mut v = Verdict::new(status);
    for input in inputs {
        v.evidence.extend(&input.evidence);
    }
    v
}

/// Applies, in order: the stability criteria, the non-Lipschitz criterion,
/// then the `Z`-based criterion for whatever is still undecided.
pub fn classify(p: &RadialProfile, n: usize) -> Result<RegularityVerdict> {
    p.check_dimension(n)?;
    let moduli = modulus_report(p);
    let stab = stability_report(p, n)?;
    let positive = p.positive_near_zero();
    let sq = &moduli.square_dini;
    let tv = &moduli.total_variation.verdict;
    let rg = &moduli.rgprime_bounded;

    let mut lip: Option<Finding> = None;
    let mut diff: Option<Finding> = None;
    let mut c1: Option<Finding> = None;
    let mut nonlip: Option<Finding> = None;
    let mut grad: Option<Finding> = None;
    let mut rationale = Vec::new();
    let mut note = |criterion: &str, tag: PaperTag, text: &str| {
        rationale.push(Rationale {
            criterion: criterion.to_string(),
            paper_tag: tag,
            note: text.to_string(),
        })
    };

    if sq.holds() && stab.uniform_stable.holds() {
        let base = [sq, &stab.uniform_stable];
        lip = Some(Finding::new(LIPSCHITZ, merged(true, &base), PaperTag::Prop1));
        note(LIPSCHITZ, PaperTag::Prop1, "square-Dini and uniformly stable");
        nonlip = Some(Finding::new(NON_LIPSCHITZ, merged(false, &base), PaperTag::Prop1));
        if stab.asympt_constant.holds() {
            let v = merged(true, &[sq, &stab.uniform_stable, &stab.asympt_constant]);
            diff = Some(Finding::new(DIFFERENTIABLE, v, PaperTag::Prop1));
            note(DIFFERENTIABLE, PaperTag::Prop1, "integral of g/r converges in [-inf, inf)");
        }
        if rg.holds() {
            let v = merged(true, &[sq, &stab.uniform_stable, rg]);
            c1 = Some(Finding::new(C1, v, PaperTag::Thm2));
            note(C1, PaperTag::Thm2, "|r g'| bounded");
        }
        if stab.s_to_minus_infinity.holds() {
            let v = merged(true, &[sq, &stab.uniform_stable, &stab.s_to_minus_infinity]);
            grad = Some(Finding::new(GRAD_ZERO, v, PaperTag::Prop1Corollary));
            note(GRAD_ZERO, PaperTag::Prop1Corollary, "integral of g/r tends to -inf");
        }
    }

    if lip.is_none()
        && stab.limsup_divergent.holds()
        && tv.holds()
        && (sq.holds() || positive.holds())
    {
        let side = if sq.holds() { sq } else { &positive };
        let base = [&stab.limsup_divergent, tv, side];
        nonlip = Some(Finding::new(NON_LIPSCHITZ, merged(true, &base), PaperTag::Prop3));
        note(
            NON_LIPSCHITZ,
            PaperTag::Prop3,
            "limsup of the integral of g/r is +inf with finite total variation",
        );
        let failed = |name: &str| Some(Finding::new(name, merged(false, &base), PaperTag::Prop3));
        lip = failed(LIPSCHITZ);
        diff = failed(DIFFERENTIABLE);
        c1 = failed(C1);
        grad = failed(GRAD_ZERO);
    }

    let needs_z = lip.is_none() || (grad.is_none() && nonlip.as_ref().is_none_or(|f| !f.holds()));
    if needs_z {
        let z = z_route(p, n)?;
        if lip.is_none() {
            if z.linear_bound.holds() {
                let lb = &z.linear_bound;
                lip = Some(Finding::new(LIPSCHITZ, merged(true, &[lb]), PaperTag::Prop2));
                note(LIPSCHITZ, PaperTag::Prop2, "positive finite-energy Z with Z <= c r");
                nonlip = Some(Finding::new(NON_LIPSCHITZ, merged(false, &[lb]), PaperTag::Prop2));
                if rg.holds() && c1.is_none() {
                    c1 = Some(Finding::new(C1, merged(true, &[lb, rg]), PaperTag::Prop2));
                    note(C1, PaperTag::Prop2, "Z <= c r and |r g'| bounded");
                }
            } else if z.linear_bound.fails() {
                let lb = &z.linear_bound;
                nonlip = Some(Finding::new(NON_LIPSCHITZ, merged(true, &[lb]), PaperTag::Prop2));
                note(NON_LIPSCHITZ, PaperTag::Prop2, "Z / r unbounded; Z Θ1 is not Lipschitz");
                let failed = |name: &str| Some(Finding::new(name, merged(false, &[lb]), PaperTag::Prop2));
                lip = failed(LIPSCHITZ);
                diff = failed(DIFFERENTIABLE);
                c1 = failed(C1);
                grad = failed(GRAD_ZERO);
            }
        }
        if grad.is_none() && z.ratio_to_zero.holds() && lip.as_ref().is_some_and(|f| f.holds()) {
            let v = merged(true, &[&z.linear_bound, &z.ratio_to_zero]);
            grad = Some(Finding::new(GRAD_ZERO, v, PaperTag::Prop2));
            note(GRAD_ZERO, PaperTag::Prop2, "Z / r tends to 0");
        }
    }

    let undecided = |f: Option<Finding>, name: &str, tag: PaperTag| {
        f.unwrap_or_else(|| Finding::new(name, Verdict::inconclusive(), tag))
    };
    let verdict = RegularityVerdict {
        lipschitz_at_0: undecided(lip, LIPSCHITZ, PaperTag::Prop2),
        differentiable_at_0: undecided(diff, DIFFERENTIABLE, PaperTag::Prop1),
        c1_neighborhood: undecided(c1, C1, PaperTag::Thm2),
        non_lipschitz_exists: undecided(nonlip, NON_LIPSCHITZ, PaperTag::Prop3),
        grad_zero_at_0: undecided(grad, GRAD_ZERO, PaperTag::Prop1Corollary),
        rationale,
    };
    verdict.check_consistency()?;
    Ok(verdict)
}
