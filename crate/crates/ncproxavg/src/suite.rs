//! The bundled verification suite: one report per property family, composed
//! from the sampled checks so a whole problem can be vetted in one call.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::funcspace::{is_shift_convex, GridSpec, SimplexWeight};
use crate::moreau;
use crate::proxavg::{argmin_equivalence, pa_eval, ProxAverageProblem};
use crate::regularity::{
    check_para_prox_inequality, check_shifted_convexity, estimate_prox_map_lipschitz, CheckReport,
    Violation,
};

fn subgrid(grid: &GridSpec, n: usize) -> GridSpec {
    GridSpec::line(grid.lower()[0], grid.upper()[0], n).expect("valid 1-D grid")
}

fn merge(name: &str, parts: Vec<CheckReport>, seed: Option<u64>) -> CheckReport {
    let samples = parts.iter().map(|p| p.samples).sum();
    let estimate = parts
        .iter()
        .filter_map(|p| p.estimate)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    let note = parts.iter().find_map(|p| p.note.clone());
    let violations = parts.into_iter().flat_map(|p| p.violations).collect();
    CheckReport::finish(name, samples, violations, estimate, seed, note)
}

fn interior_weights(problem: &ProxAverageProblem, count: usize, seed: u64) -> Vec<SimplexWeight> {
    let m = problem.m();
    let mut out = vec![SimplexWeight::uniform(m)];
    if m == 1 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 1..count {
        let mut w: Vec<f64> = (0..m)
            .map(|_| -(rng.random_range(1e-9..1.0f64)).ln() + 0.05)
            .collect();
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= sum);
        out.push(SimplexWeight::new(w).expect("interior weights"));
    }
    out
}

fn check_majorization(problem: &ProxAverageProblem) -> CheckReport {
    let grid = problem.inner_grid();
    let mut violations = Vec::new();
    let mut samples = 0;
    for (i, f) in problem.functions().iter().enumerate() {
        for x in grid.axis_values(0) {
            samples += 1;
            let fx = f.eval_1d(x);
            if !fx.is_finite() {
                continue;
            }
            let env = problem.inner_envelope(i, &[x]);
            let margin = fx - env;
            if margin < -1e-9 * (1.0 + fx.abs()) {
                violations.push(Violation {
                    x,
                    xp: x,
                    lambda: None,
                    margin,
                });
            }
        }
    }
    CheckReport::finish("majorization", samples, violations, None, None, None)
}

fn check_r_monotonicity(problem: &ProxAverageProblem) -> Result<CheckReport> {
    let r2 = problem.r();
    let bound = problem
        .functions()
        .iter()
        .map(crate::funcspace::prox_threshold)
        .fold(0.0, f64::max);
    let r1 = bound + 0.5 * (r2 - bound);
    let grid = subgrid(problem.inner_grid(), 101);
    let mut violations = Vec::new();
    let mut samples = 0;
    for f in problem.functions() {
        for x in grid.axis_values(0) {
            samples += 1;
            let lo = moreau::envelope(f, r1, &[x], problem.inner_grid())?;
            let hi = moreau::envelope(f, r2, &[x], problem.inner_grid())?;
            let margin = hi - lo;
            if margin < -1e-7 * (1.0 + hi.abs()) {
                violations.push(Violation {
                    x,
                    xp: x,
                    lambda: None,
                    margin,
                });
            }
        }
    }
    Ok(CheckReport::finish(
        "r_monotonicity",
        samples,
        violations,
        None,
        None,
        Some(format!("compared r = {r1} against r = {r2}")),
    ))
}

fn check_gradient_identity(problem: &ProxAverageProblem, seed: u64) -> Result<CheckReport> {
    let grid = problem.inner_grid();
    let (lo, hi) = (grid.lower()[0], grid.upper()[0]);
    let r = problem.r();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut violations = Vec::new();
    let mut samples = 0;
    for f in problem.functions() {
        let mut tested = 0;
        let mut attempts = 0;
        while tested < 100 && attempts < 1000 {
            attempts += 1;
            let x: f64 = rng.random_range(lo..hi);
            let prox_at =
                |p: f64| moreau::prox(f, r, &[p], grid, moreau::DEFAULT_REFINE_ITERS, None);
            let (center, left, right) = (prox_at(x)?, prox_at(x - h)?, prox_at(x + h)?);
            let (Some(pc), Some(pl), Some(pr)) = (center.single(), left.single(), right.single())
            else {
                continue;
            };
            // Skip straddled prox kinks, where the finite difference of the
            // envelope is not a gradient sample.
            if (pr[0] - pl[0]).abs() > 0.1 {
                continue;
            }
            tested += 1;
            samples += 1;
            let grad = r * (x - pc[0]);
            let num = (moreau::envelope(f, r, &[x + h], grid)?
                - moreau::envelope(f, r, &[x - h], grid)?)
                / (2.0 * h);
            let err = (grad - num).abs();
            if err > 1e-4 * (1.0 + num.abs()) {
                violations.push(Violation {
                    x,
                    xp: x,
                    lambda: None,
                    margin: -err,
                });
            }
        }
    }
    Ok(CheckReport::finish(
        "gradient_identity",
        samples,
        violations,
        None,
        Some(seed),
        None,
    ))
}

fn check_vertex_recovery(problem: &ProxAverageProblem) -> Result<CheckReport> {
    let grid = subgrid(problem.inner_grid(), 201);
    let mut violations = Vec::new();
    let mut samples = 0;
    let mut skipped = Vec::new();
    for (i, f) in problem.functions().iter().enumerate() {
        if !is_shift_convex(f, problem.r()) {
            skipped.push(i + 1);
            continue;
        }
        let vertex = SimplexWeight::vertex(problem.m(), i);
        for x in grid.axis_values(0) {
            let fx = f.eval_1d(x);
            if !fx.is_finite() {
                continue; // off the domain box the average is improper too
            }
            samples += 1;
            let pa = pa_eval(problem, &[x], &vertex)?;
            let err = (pa - fx).abs();
            if err > 1e-5 * (1.0 + fx.abs()) {
                violations.push(Violation {
                    x,
                    xp: x,
                    lambda: Some(vertex.weights().to_vec()),
                    margin: -err,
                });
            }
        }
    }
    let note = (!skipped.is_empty())
        .then(|| format!("functions {skipped:?} skipped: shifted convexity not certified at r"));
    Ok(CheckReport::finish(
        "vertex_recovery",
        samples,
        violations,
        None,
        None,
        note,
    ))
}

fn check_argmin_equivalence_sweep(problem: &ProxAverageProblem, tol: f64) -> Result<CheckReport> {
    let grid = subgrid(problem.inner_grid(), 201);
    let weights: Vec<SimplexWeight> = if problem.m() >= 2 {
        crate::funcspace::simplex_path(
            &SimplexWeight::vertex(problem.m(), 0),
            &SimplexWeight::vertex(problem.m(), 1),
            5,
        )?
    } else {
        vec![SimplexWeight::vertex(1, 0)]
    };
    let mut violations = Vec::new();
    let mut worst: f64 = 0.0;
    for lambda in &weights {
        let eq = argmin_equivalence(problem, lambda, &grid, tol)?;
        worst = worst.max(eq.hausdorff);
        if !eq.agree {
            violations.push(Violation {
                x: eq.argmin_pa.first().map_or(f64::NAN, |p| p[0]),
                xp: eq.argmin_weighted.first().map_or(f64::NAN, |p| p[0]),
                lambda: Some(lambda.weights().to_vec()),
                margin: tol - eq.hausdorff,
            });
        }
    }
    Ok(CheckReport::finish(
        "argmin_equivalence",
        weights.len(),
        violations,
        Some(worst),
        None,
        None,
    ))
}

/// Runs the standard verification suite on a one-dimensional problem and
/// returns one report per property family.
pub fn standard_suite(problem: &ProxAverageProblem, seed: u64) -> Result<Vec<CheckReport>> {
    if problem.dimension() != 1 {
        return Err(Error::Invalid(
            "the verification suite supports one-dimensional problems".into(),
        ));
    }
    let inner = problem.inner_grid();
    let mut reports = vec![
        check_majorization(problem),
        check_r_monotonicity(problem)?,
        check_gradient_identity(problem, seed)?,
        check_vertex_recovery(problem)?,
    ];

    // Shifted convexity of the average for a few weights and shift centers.
    let lambdas = interior_weights(problem, 3, seed.wrapping_add(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let shift_grid = subgrid(inner, 101);
    let mut parts = Vec::new();
    for lambda in &lambdas {
        for _ in 0..2 {
            let x_bar = rng.random_range(inner.lower()[0]..inner.upper()[0]);
            parts.push(check_shifted_convexity(
                problem,
                lambda,
                &[x_bar],
                &shift_grid,
            )?);
        }
    }
    reports.push(merge("shifted_convexity", parts, Some(seed)));

    // Lipschitz estimate of the weighted prox combination minus identity.
    let lip_grid = subgrid(inner, 201);
    let parts = lambdas
        .iter()
        .map(|lambda| estimate_prox_map_lipschitz(problem, lambda, &lip_grid))
        .collect::<Result<Vec<_>>>()?;
    reports.push(merge("prox_map_lipschitz", parts, None));

    reports.push(check_argmin_equivalence_sweep(problem, 1e-4)?);

    // Parametric minorization around the grid center with a modest margin
    // over the inner prox-parameter.
    let center = 0.5 * (inner.lower()[0] + inner.upper()[0]);
    let eps = 0.1 * inner.max_extent();
    reports.push(check_para_prox_inequality(
        problem,
        center,
        &SimplexWeight::uniform(problem.m()),
        eps,
        1.25 * problem.r(),
        300,
        seed.wrapping_add(3),
    )?);

    Ok(reports)
}
