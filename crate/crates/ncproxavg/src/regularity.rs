//! Sampled verification of regularity and stability conditions: the
//! quadratic-minorization inequality with and without a weight parameter,
//! shifted convexity of the average, and Lipschitz estimates for the
//! prox-map combination and the gradient's weight dependence.
//!
//! Sampling can only falsify; reports state that a sufficient condition was
//! checked, never that a hypothesis was proved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::{GridSpec, MaxQuadFunction, SimplexWeight};
use crate::moreau;
use crate::proxavg::{pa_curve, pa_eval, ProxAverageProblem};

/// A single sampled counterexample: the inequality margin at `(x, xp)` (and
/// the sampled weights, when the check is parametric).
#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub x: f64,
    pub xp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    pub margin: f64,
}

/// Outcome of one sampled check. `passed` holds exactly when no violation
/// was recorded; `estimate` carries a Lipschitz-type quantity when the check
/// produces one.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub violations: Vec<Violation>,
}

const MAX_STORED_VIOLATIONS: usize = 100;

impl CheckReport {
    pub(crate) fn finish(
        name: impl Into<String>,
        samples: usize,
        mut violations: Vec<Violation>,
        estimate: Option<f64>,
        seed: Option<u64>,
        note: Option<String>,
    ) -> Self {
        let passed = violations.is_empty();
        violations.truncate(MAX_STORED_VIOLATIONS);
        CheckReport {
            name: name.into(),
            passed,
            samples,
            estimate,
            seed,
            note,
            violations,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

fn margin_tol(scale: f64) -> f64 {
    1e-9 * (1.0 + scale.abs())
}

/// Tests `f(x') >= f(x) + v (x'-x) - (r/2)(x'-x)^2` on an exhaustive pair
/// scan of the `eps`-ball around `x_bar`, with `v` ranging over the active
/// piece gradients at `x`.
pub fn check_prox_inequality(
    f: &MaxQuadFunction,
    x_bar: f64,
    eps: f64,
    r: f64,
    samples_per_axis: usize,
) -> CheckReport {
    assert_eq!(f.dimension(), 1, "prox-regularity scan is one-dimensional");
    let n = samples_per_axis.max(2);
    let xs: Vec<f64> = (0..n)
        .map(|i| x_bar - eps + 2.0 * eps * i as f64 / (n - 1) as f64)
        .collect();
    let mut violations = Vec::new();
    let mut samples = 0;
    for &x in &xs {
        let fx = f.eval_1d(x);
        if !fx.is_finite() {
            continue;
        }
        let grads = f.active_gradients_1d(x);
        for &xp in &xs {
            if xp == x {
                continue;
            }
            let fxp = f.eval_1d(xp);
            samples += 1;
            if !fxp.is_finite() {
                continue; // +inf satisfies any lower bound
            }
            let d = xp - x;
            for &v in &grads {
                let margin = fxp - fx - v * d + 0.5 * r * d * d;
                if margin < -margin_tol(fx) {
                    violations.push(Violation {
                        x,
                        xp,
                        lambda: None,
                        margin,
                    });
                }
            }
        }
    }
    CheckReport::finish("prox_inequality", samples, violations, None, None, None)
}

/// Draws a simplex point within `radius` of `center` (uniform direction in
/// the sum-zero tangent space, rejected until feasible).
fn sample_simplex_near(rng: &mut ChaCha8Rng, center: &SimplexWeight, radius: f64) -> SimplexWeight {
    let m = center.m();
    if m == 1 {
        return center.clone();
    }
    'attempt: for _ in 0..64 {
        let mut z: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = z.iter().sum::<f64>() / m as f64;
        z.iter_mut().for_each(|v| *v -= mean);
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        let scale = radius * rng.random_range(0.0..1.0) / norm;
        let mut w: Vec<f64> = center
            .weights()
            .iter()
            .zip(&z)
            .map(|(c, zi)| c + scale * zi)
            .collect();
        for v in &w {
            if *v < 0.0 {
                continue 'attempt;
            }
        }
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= sum);
        if let Ok(sw) = SimplexWeight::new(w) {
            return sw;
        }
    }
    center.clone()
}

/// Parametric variant: tests the minorization inequality for the inner
/// objective `F(x, lambda)` with weights sampled near `lambda_bar` and
/// gradients taken by central differences.
pub fn check_para_prox_inequality(
    problem: &ProxAverageProblem,
    x_bar: f64,
    lambda_bar: &SimplexWeight,
    eps: f64,
    r: f64,
    sample_count: usize,
    seed: u64,
) -> Result<CheckReport> {
    if problem.dimension() != 1 {
        return Err(Error::Invalid(
            "the parametric scan supports one-dimensional problems".into(),
        ));
    }
    if lambda_bar.m() != problem.m() {
        return Err(Error::Invalid("weight dimension mismatch".into()));
    }
    let f = |x: f64, lambda: &SimplexWeight| -problem.weighted_envelope(lambda, &[x]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut violations = Vec::new();
    for _ in 0..sample_count {
        let lambda = sample_simplex_near(&mut rng, lambda_bar, eps);
        let x = x_bar + rng.random_range(-eps..eps);
        let xp = x_bar + rng.random_range(-eps..eps);
        if xp == x {
            continue;
        }
        let v = (f(x + h, &lambda) - f(x - h, &lambda)) / (2.0 * h);
        let fx = f(x, &lambda);
        let d = xp - x;
        let margin = f(xp, &lambda) - fx - v * d + 0.5 * r * d * d;
        if margin < -margin_tol(fx) {
            violations.push(Violation {
                x,
                xp,
                lambda: Some(lambda.weights().to_vec()),
                margin,
            });
        }
    }
    Ok(CheckReport::finish(
        "para_prox_inequality",
        sample_count,
        violations,
        None,
        Some(seed),
        None,
    ))
}

/// Midpoint-convexity scan of the average plus the quadratic shift
/// `((r + delta(lambda))/2)|x - x_bar|^2` over consecutive grid triples.
pub fn check_shifted_convexity(
    problem: &ProxAverageProblem,
    lambda: &SimplexWeight,
    x_bar: &[f64],
    grid: &GridSpec,
) -> Result<CheckReport> {
    let c = problem.outer_parameter(lambda);
    let curve = pa_curve(problem, lambda, grid)?;
    let phi = |flat: usize| {
        let x = grid.point(flat);
        curve.values()[flat] + 0.5 * c * crate::util::dist2(&x, x_bar)
    };
    let mut violations = Vec::new();
    let mut samples = 0;
    let mut check_triple = |a: usize, b: usize, cc: usize| {
        samples += 1;
        let (va, vb, vc) = (phi(a), phi(b), phi(cc));
        let margin = 0.5 * (va + vc) - vb;
        if margin < -1e-7 * (1.0 + vb.abs()) {
            violations.push(Violation {
                x: grid.point(b)[0],
                xp: grid.point(cc)[0],
                lambda: Some(lambda.weights().to_vec()),
                margin,
            });
        }
    };
    match grid.dim() {
        1 => {
            for i in 1..grid.points()[0] - 1 {
                check_triple(i - 1, i, i + 1);
            }
        }
        2 => {
            let (n0, n1) = (grid.points()[0], grid.points()[1]);
            for i in 0..n0 {
                for j in 1..n1 - 1 {
                    check_triple(i * n1 + j - 1, i * n1 + j, i * n1 + j + 1);
                }
            }
            for j in 0..n1 {
                for i in 1..n0 - 1 {
                    check_triple((i - 1) * n1 + j, i * n1 + j, (i + 1) * n1 + j);
                }
            }
        }
        d => {
            return Err(Error::Invalid(format!(
                "shifted-convexity scan supports dimensions 1 and 2, got {d}"
            )))
        }
    }
    let note = lambda
        .is_vertex()
        .then(|| "vertex weight: the average may be merely proper here".to_string());
    Ok(CheckReport::finish(
        "shifted_convexity",
        samples,
        violations,
        None,
        None,
        note,
    ))
}

/// Estimates `Lip(sum_i lambda_i P_r f_i - I)` by the largest difference
/// quotient over consecutive grid points. Passes iff the estimate stays
/// below `1 + 1e-6`; grid points with a multivalued prox are excluded.
pub fn estimate_prox_map_lipschitz(
    problem: &ProxAverageProblem,
    lambda: &SimplexWeight,
    grid: &GridSpec,
) -> Result<CheckReport> {
    if problem.dimension() != 1 || grid.dim() != 1 {
        return Err(Error::Invalid(
            "the prox-map estimate supports one-dimensional problems".into(),
        ));
    }
    if lambda.m() != problem.m() {
        return Err(Error::Invalid("weight dimension mismatch".into()));
    }
    let r = problem.r();
    let n = grid.points()[0];
    let mut h_vals: Vec<Option<f64>> = Vec::with_capacity(n);
    let mut excluded = 0usize;
    for x in grid.axis_values(0) {
        let mut acc = 0.0;
        let mut valid = true;
        for (i, w) in lambda.weights().iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let res = moreau::prox(
                &problem.functions()[i],
                r,
                &[x],
                problem.inner_grid(),
                moreau::DEFAULT_REFINE_ITERS,
                None,
            )?;
            match res.single() {
                Some(p) => acc += w * p[0],
                None => {
                    valid = false;
                    break;
                }
            }
        }
        if valid {
            h_vals.push(Some(acc - x));
        } else {
            excluded += 1;
            h_vals.push(None);
        }
    }
    let bound = 1.0 + 1e-6;
    let mut estimate: f64 = 0.0;
    let mut violations = Vec::new();
    let step = grid.step(0);
    for i in 0..n - 1 {
        let (Some(a), Some(b)) = (h_vals[i], h_vals[i + 1]) else {
            continue;
        };
        let q = (b - a).abs() / step;
        estimate = estimate.max(q);
        if q > bound {
            violations.push(Violation {
                x: grid.coord(0, i),
                xp: grid.coord(0, i + 1),
                lambda: Some(lambda.weights().to_vec()),
                margin: bound - q,
            });
        }
    }
    let note = (excluded > 0).then(|| format!("{excluded} multivalued prox points excluded"));
    Ok(CheckReport::finish(
        "prox_map_lipschitz",
        n,
        violations,
        Some(estimate),
        None,
        note,
    ))
}

fn pa_gradient(
    problem: &ProxAverageProblem,
    x: &[f64],
    lambda: &SimplexWeight,
) -> Result<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    for (d, gd) in g.iter_mut().enumerate() {
        let h = problem.outer_grid().step(d);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[d] += h;
        xm[d] -= h;
        *gd = (pa_eval(problem, &xp, lambda)? - pa_eval(problem, &xm, lambda)?) / (2.0 * h);
    }
    Ok(g)
}

/// Estimates the Lipschitz modulus of `grad_x PA(x, .)` across weight pairs
/// sampled near `lambda_bar`, and checks that the estimate is finite and
/// stable when the sampling radius is halved.
pub fn check_gradient_lambda_lipschitz(
    problem: &ProxAverageProblem,
    x: &[f64],
    lambda_bar: &SimplexWeight,
    radius: f64,
    sample_count: usize,
    seed: u64,
) -> Result<CheckReport> {
    if lambda_bar.m() != problem.m() {
        return Err(Error::Invalid("weight dimension mismatch".into()));
    }
    if problem.m() == 1 {
        // A single weight is pinned to 1; the average cannot vary with it.
        return Ok(CheckReport::finish(
            "gradient_lambda_lipschitz",
            0,
            Vec::new(),
            Some(0.0),
            Some(seed),
            Some("single function: the average does not depend on the weights".into()),
        ));
    }
    let estimate_at = |radius: f64, seed: u64| -> Result<(f64, Option<Vec<f64>>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let mut worst_lambda = None;
        for _ in 0..sample_count {
            let la = sample_simplex_near(&mut rng, lambda_bar, radius);
            let mut lb = sample_simplex_near(&mut rng, lambda_bar, radius);
            for _ in 0..16 {
                if la.distance(&lb) >= radius / 10.0 {
                    break;
                }
                lb = sample_simplex_near(&mut rng, lambda_bar, radius);
            }
            let d = la.distance(&lb);
            if d < 1e-12 {
                continue;
            }
            let ga = pa_gradient(problem, x, &la)?;
            let gb = pa_gradient(problem, x, &lb)?;
            let ratio = crate::util::dist(&ga, &gb) / d;
            if ratio > worst {
                worst = ratio;
                worst_lambda = Some(la.weights().to_vec());
            }
        }
        Ok((worst, worst_lambda))
    };
    let (full, worst_lambda) = estimate_at(radius, seed)?;
    let (half, _) = estimate_at(0.5 * radius, seed.wrapping_add(1))?;
    let stable = full.is_finite() && half.is_finite() && half <= 1.5 * full + 1e-6;
    let mut violations = Vec::new();
    if !stable {
        violations.push(Violation {
            x: x[0],
            xp: x[0],
            lambda: worst_lambda,
            margin: 1.5 * full + 1e-6 - half,
        });
    }
    Ok(CheckReport::finish(
        "gradient_lambda_lipschitz",
        2 * sample_count,
        violations,
        Some(full),
        Some(seed),
        Some(format!(
            "estimate {half:.6e} at half radius {:.3e}",
            0.5 * radius
        )),
    ))
}
