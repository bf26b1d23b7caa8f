//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;

use gslab_core::dynsys::{classify, compute_r_matrix, gs_coefficient};
use gslab_core::oracle::{
    comparison_check, fd2d_solve, lipschitz_probe, solve_mode, BoundaryData, Harmonic, Mode,
    SpectralSolution, DEFAULT_SEED, DEFAULT_T_CUT,
};
use gslab_core::oscillation::{
    dmo_test, ex2_identity_residual, ex3_leading_period_integral, period_growth, period_integrals,
};
use gslab_core::radial_ode::{
    asymptotic_ratio, closed_form_residual, power_law_exponent, solve_z, Ex3Z,
    DEFAULT_STEP,
};
use gslab_core::RadialProfile;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ex3_closed_form() -> Outcome {
    let p = RadialProfile::ex3(10.0, 2).map_err(|e| e.to_string())?;
    let ts: Vec<f64> = (0..=29_000).map(|i| 1.0 + i as f64 * 1e-3).collect();
    let res = closed_form_residual(&p, &Ex3Z { a: 10.0 }, 2, &ts);
    check(res < 1e-8, format!("max residual {res:.3e} (< 1e-8)"))
}

fn ex3_solver() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2, 3] {
        let p = RadialProfile::ex3(10.0, n).map_err(|e| e.to_string())?;
        let z = solve_z(&p, n, DEFAULT_STEP).map_err(|e| e.to_string())?;
        let t0 = p.t_min();
        let scale = 1.0 / (10.0 + t0.sin());
        for (t, v) in z.t().iter().zip(z.v()) {
            if *t > 30.0 {
                break;
            }
            let exact = scale * (-t).exp() * (10.0 + t.sin());
            worst = worst.max(((v - exact) / exact).abs());
        }
    }
    check(worst < 1e-6, format!("max relative error {worst:.3e} (< 1e-6)"))
}

fn harmonic_baseline() -> Outcome {
    let p = RadialProfile::zero();
    let t0 = p.t_min();
    let mut worst_z = 0.0f64;
    let mut worst_mode = 0.0f64;
    for n in [2, 3] {
        let z = solve_z(&p, n, DEFAULT_STEP).map_err(|e| e.to_string())?;
        for (t, v) in z.t().iter().zip(z.v()) {
            let exact = (-t).exp();
            worst_z = worst_z.max(((v - exact) / exact).abs());
        }
        for k in 1..=5 {
            let m = solve_mode(&p, n, k, 1.0, DEFAULT_STEP).map_err(|e| e.to_string())?;
            let sol = m.solution.ok_or("missing mode solution")?;
            for (t, v) in sol.t().iter().zip(sol.v()) {
                let exact = (-(k as f64) * (t - t0)).exp();
                worst_mode = worst_mode.max(((v - exact) / exact).abs());
            }
        }
    }
    check(
        worst_z < 1e-8 && worst_mode < 1e-8,
        format!("Z = r error {worst_z:.3e}, modes r^k error {worst_mode:.3e} (< 1e-8)"),
    )
}

fn power_law() -> Outcome {
    let mut worst = 0.0f64;
    for c in [-0.5, 0.3] {
        for n in [2, 3] {
            let p = RadialProfile::constant(c).map_err(|e| e.to_string())?;
            let alpha = power_law_exponent(c, n);
            let z = solve_z(&p, n, DEFAULT_STEP).map_err(|e| e.to_string())?;
            let t0 = p.t_min();
            for (t, v) in z.t().iter().zip(z.v()) {
                let exact = (-t0 - alpha * (t - t0)).exp();
                worst = worst.max(((v - exact) / exact).abs());
            }
        }
    }
    check(worst < 1e-6, format!("max relative error {worst:.3e} (< 1e-6)"))
}

fn ex2_identity() -> Outcome {
    let mut worst = (0.0f64, 0.0, 0, 0.0);
    for beta in [0.5, 1.0, 2.0] {
        for n in [2, 3] {
            for t in [2.0, 5.0, 10.0, 30.0] {
                let r = ex2_identity_residual(beta, n, t).map_err(|e| e.to_string())?;
                if r > worst.0 {
                    worst = (r, beta, n, t);
                }
            }
        }
    }
    let (r, beta, n, t) = worst;
    check(
        r < 1e-8,
        format!("max residual {r:.3e} at beta={beta}, n={n}, t={t} (< 1e-8)"),
    )
}

fn ex3_divergence() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for a in [10.0, 50.0] {
        for n in [2, 3] {
            let p = RadialProfile::ex3(a, n)
                .and_then(|p| p.with_domain(p.t_min(), 80.0))
                .map_err(|e| e.to_string())?;
            let expected = ex3_leading_period_integral(a, n);
            let tol = 5.0 / (a * a * a);
            let t0 = 5.0;
            let worst = period_integrals(&p, t0, 10)
                .iter()
                .map(|v| (v - expected).abs())
                .fold(0.0, f64::max);
            let (slope, dev) = period_growth(&p, t0, 10);
            let linear = slope > 0.0 && (slope - expected).abs() < tol && dev < 10.0 * tol;
            ok &= worst < tol && linear;
            lines.push(format!("A={a} n={n} err {worst:.2e}/{tol:.1e} slope {slope:.4e}"));
        }
    }
    check(ok, lines.join("; "))
}

fn truth_table() -> Outcome {
    let mut failures = Vec::new();
    let mut cases = 0;
    let mut expect = |label: String, ok: bool| {
        cases += 1;
        if !ok {
            failures.push(label);
        }
    };
    for n in [2, 3] {
        for g in [0.3, 0.75, 1.0] {
            let v = classify(&RadialProfile::ex1_pos(g).unwrap(), n).map_err(|e| e.to_string())?;
            expect(format!("ex1_pos {g} n={n}"), v.non_lipschitz_exists.holds());
        }
        for g in [1.5, 2.0] {
            let v = classify(&RadialProfile::ex1_pos(g).unwrap(), n).map_err(|e| e.to_string())?;
            expect(
                format!("ex1_pos {g} n={n}"),
                v.lipschitz_at_0.holds() && v.c1_neighborhood.holds(),
            );
        }
        for g in [0.3, 0.75, 2.0] {
            let v = classify(&RadialProfile::ex1_neg(g).unwrap(), n).map_err(|e| e.to_string())?;
            let grad = g > 1.0 || v.grad_zero_at_0.holds();
            expect(format!("ex1_neg {g} n={n}"), v.lipschitz_at_0.holds() && grad);
        }
        for b in [0.3, 0.75, 2.0] {
            let v = classify(&RadialProfile::ex2(b).unwrap(), n).map_err(|e| e.to_string())?;
            expect(format!("ex2 {b} n={n}"), v.lipschitz_at_0.holds());
        }
        let v = classify(&RadialProfile::ex3(10.0, n).unwrap(), n).map_err(|e| e.to_string())?;
        expect(
            format!("ex3 n={n}"),
            v.lipschitz_at_0.holds() && v.lipschitz_at_0.paper_tag.as_str() == "Prop2",
        );
    }
    check(
        failures.is_empty(),
        format!("{} of {cases} cases match; mismatches {failures:?}", cases - failures.len()),
    )
}

fn dmo_table() -> Outcome {
    let mut failures = Vec::new();
    let mut cases = 0;
    for n in [2, 3] {
        for g in [0.3, 0.75, 1.0, 1.5, 2.0] {
            for (name, p) in [
                ("ex1_pos", RadialProfile::ex1_pos(g).unwrap()),
                ("ex1_neg", RadialProfile::ex1_neg(g).unwrap()),
                ("ex2", RadialProfile::ex2(g).unwrap()),
            ] {
                cases += 1;
                let v = dmo_test(&p, n).map_err(|e| e.to_string())?;
                let ok = if g > 1.0 { v.holds() } else { v.fails() };
                if !ok {
                    failures.push(format!("{name} {g} n={n}: {}", v.status));
                }
            }
        }
        cases += 1;
        let v = dmo_test(&RadialProfile::ex3(10.0, n).unwrap(), n).map_err(|e| e.to_string())?;
        if !v.fails() {
            failures.push(format!("ex3 n={n}: {}", v.status));
        }
    }
    check(
        failures.is_empty(),
        format!("{} of {cases} cases match; mismatches {failures:?}", cases - failures.len()),
    )
}

fn comparison() -> Outcome {
    let p = RadialProfile::ex1_neg(0.8).map_err(|e| e.to_string())?;
    let batch = BoundaryData::random_batch(2, 5, 20, DEFAULT_SEED).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for bd in &batch {
        let c = comparison_check(&p, bd, DEFAULT_STEP).map_err(|e| e.to_string())?;
        worst = worst.max(c.max_violation / c.max_ratio);
    }
    let single = BoundaryData::first_harmonic(2).map_err(|e| e.to_string())?;
    let c = comparison_check(&p, &single, DEFAULT_STEP).map_err(|e| e.to_string())?;
    let first = c.ratios[0];
    let spread = c.ratios.iter().map(|r| (r - first).abs() / first).fold(0.0, f64::max);
    check(
        worst < 1e-6 && spread < 1e-10,
        format!("relative violation {worst:.3e} (< 1e-6), k=1 spread {spread:.3e} (< 1e-10)"),
    )
}

fn asymptotic_law() -> Outcome {
    let p = RadialProfile::ex1_pos(0.75).map_err(|e| e.to_string())?;
    let z = solve_z(&p, 2, DEFAULT_STEP).map_err(|e| e.to_string())?;
    let model = asymptotic_ratio(&z, &p, 25.0).map_err(|e| e.to_string())?;
    let bd = BoundaryData::first_harmonic(2).map_err(|e| e.to_string())?;
    let probe = lipschitz_probe(&p, &bd, DEFAULT_STEP, (20.0, 40.0)).map_err(|e| e.to_string())?;
    let growth = probe.growth_exponent;
    check(
        model.drift < 0.05 && (growth - 1.0).abs() < 0.1,
        format!("drift {:.3e} (< 0.05), growth ratio {growth:.4} (within 10%)", model.drift),
    )
}

fn fd2d_equivalence() -> Outcome {
    let bd = BoundaryData::cosine(1, 1.0);
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, p) in [
        ("zero", RadialProfile::zero()),
        ("ex1_pos 2", RadialProfile::ex1_pos(2.0).map_err(|e| e.to_string())?),
    ] {
        let fd = fd2d_solve(&p, &bd, 128, 64, DEFAULT_T_CUT).map_err(|e| e.to_string())?;
        let spec = SpectralSolution::solve(&p, &bd, DEFAULT_STEP).map_err(|e| e.to_string())?;
        let err = fd.relative_l2_error(|t, th| spec.value(t, &[th.cos(), th.sin()]));
        ok &= err < 1e-3;
        lines.push(format!("{name} L2 {err:.3e}"));
    }
    let p = RadialProfile::ex1_pos(2.0).map_err(|e| e.to_string())?;
    let mut bd0 = BoundaryData::cosine(1, 1.0);
    bd0.modes.push(Mode { k: 0, kind: Harmonic::Cos, amplitude: 1.0 });
    let fd = fd2d_solve(&p, &bd0, 128, 64, DEFAULT_T_CUT).map_err(|e| e.to_string())?;
    let drift = (0..fd.t.len()).map(|i| (fd.angular_mean(i) - 1.0).abs()).fold(0.0, f64::max);
    ok &= drift < 1e-6;
    lines.push(format!("k=0 mean drift {drift:.3e}"));
    check(ok, lines.join("; "))
}

fn r_matrix() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let g: f64 = rng.gen_range(-0.9..5.0);
        let n: usize = rng.gen_range(2..=3);
        let r: f64 = rng.gen_range(0.01..1.0);
        let r_mat = compute_r_matrix(|_, th| gs_coefficient(g, th), n, r).map_err(|e| e.to_string())?;
        let expected = DMatrix::<f64>::identity(n, n) * (-(n as f64 - 1.0) / n as f64 * g);
        worst = worst.max((r_mat - expected).abs().max());
    }
    check(worst < 1e-10, format!("max entry error {worst:.3e} (< 1e-10)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("closed-form Z residual", ex3_closed_form),
        ("solver vs closed form", ex3_solver),
        ("harmonic baseline", harmonic_baseline),
        ("power-law oracle", power_law),
        ("ex2 oscillation identity", ex2_identity),
        ("ex3 divergence", ex3_divergence),
        ("classification truth table", truth_table),
        ("dmo verdicts", dmo_table),
        ("comparison monotonicity", comparison),
        ("asymptotic law", asymptotic_law),
        ("fd2d vs spectral", fd2d_equivalence),
        ("R-matrix reduction", r_matrix),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
