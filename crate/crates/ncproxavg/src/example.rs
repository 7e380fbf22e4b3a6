//! Closed-form reference pair: two max-of-quadratics functions sharing a
//! concave hump, with exact prox maps, envelopes, the weighted-envelope
//! combination, its critical points, and a demo that tracks how the minimizer
//! of the average jumps as the weights sweep the simplex edge.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::{GridSpec, MaxQuadFunction, QuadraticPiece, SimplexWeight};
use crate::minpath::{self, ArgminPath};
use crate::proxavg::{DeltaSpec, ProxAverageProblem};

/// Derived constants of the reference pair for a hump offset `eps` in (0, 1].
///
/// `g_0 = max{-x, -(x-1)^2/2 + 1/2, x - 2 + eps}` and `g_1` mirrors it with
/// the offset on the left tail instead. `k` and `l` are the points where the
/// hump meets the offset and plain linear tails.
#[derive(Clone, Copy, Debug)]
pub struct ExampleParams {
    pub eps: f64,
    pub k: f64,
    pub l: f64,
}

impl ExampleParams {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Invalid(format!(
                "hump offset must lie in (0, 1], got {eps}"
            )));
        }
        let l = (4.0 - 2.0 * eps).sqrt();
        Ok(Self { eps, k: 2.0 - l, l })
    }

    /// Left kink of the envelope's flat branch for function `index`.
    pub fn k_i(&self, index: usize) -> f64 {
        match index {
            0 => 0.0,
            1 => self.k,
            _ => panic!("index must be 0 or 1"),
        }
    }

    /// Right kink of the envelope's flat branch for function `index`.
    pub fn l_i(&self, index: usize) -> f64 {
        match index {
            0 => self.l,
            1 => 2.0,
            _ => panic!("index must be 0 or 1"),
        }
    }

    /// Constant offset of the left linear tail of function `index`.
    pub fn delta_i(&self, index: usize) -> f64 {
        match index {
            0 => 0.0,
            1 => self.eps,
            _ => panic!("index must be 0 or 1"),
        }
    }

    /// Constant offset of the right linear tail of function `index`.
    pub fn eps_i(&self, index: usize) -> f64 {
        match index {
            0 => self.eps,
            1 => 0.0,
            _ => panic!("index must be 0 or 1"),
        }
    }
}

/// Builds `g_0` or `g_1`: max of a left line, the hump `-(x-1)^2/2 + 1/2`,
/// and a right line, with the `eps` offset on the right (index 0) or left
/// (index 1) tail.
pub fn make_g(index: usize, eps: f64) -> Result<MaxQuadFunction> {
    let p = ExampleParams::new(eps)?;
    let pieces = vec![
        QuadraticPiece::line_1d(0.0, -1.0, p.delta_i(index)),
        QuadraticPiece::line_1d(-1.0, 1.0, 0.0),
        QuadraticPiece::line_1d(0.0, 1.0, -2.0 + p.eps_i(index)),
    ];
    MaxQuadFunction::new(1, pieces, None)
}

fn require_r(r: f64) -> Result<()> {
    if r <= 1.0 {
        return Err(Error::ProxParameter {
            r,
            bound: 1.0,
            context: "the closed-form prox of the reference pair".into(),
        });
    }
    Ok(())
}

/// Closed-form proximal point of `g_index` at `x_bar`, valid for `r > 1`.
pub fn prox_g_closed(index: usize, r: f64, x_bar: f64, eps: f64) -> Result<f64> {
    require_r(r)?;
    let p = ExampleParams::new(eps)?;
    let (k, l) = (p.k_i(index), p.l_i(index));
    Ok(if x_bar < k - 1.0 / r {
        x_bar + 1.0 / r
    } else if x_bar <= k - k / r + 1.0 / r {
        k
    } else if x_bar < l - l / r + 1.0 / r {
        (r * x_bar - 1.0) / (r - 1.0)
    } else if x_bar <= l + 1.0 / r {
        l
    } else {
        x_bar - 1.0 / r
    })
}

/// Closed-form Moreau envelope of `g_index` at `x_bar`, valid for `r > 1`.
pub fn envelope_g_closed(index: usize, r: f64, x_bar: f64, eps: f64) -> Result<f64> {
    require_r(r)?;
    let p = ExampleParams::new(eps)?;
    let (k, l) = (p.k_i(index), p.l_i(index));
    Ok(if x_bar < k - 1.0 / r {
        -x_bar - 0.5 / r + p.delta_i(index)
    } else if x_bar <= k - k / r + 1.0 / r {
        0.5 * r * x_bar * x_bar - r * k * x_bar + 0.5 * (r - 1.0) * k * k + k
    } else if x_bar < l - l / r + 1.0 / r {
        -(r * x_bar * x_bar - 2.0 * r * x_bar + 1.0) / (2.0 * (r - 1.0))
    } else if x_bar <= l + 1.0 / r {
        0.5 * r * x_bar * x_bar - r * l * x_bar + 0.5 * (r - 1.0) * l * l + l
    } else {
        x_bar - 2.0 - 0.5 / r + p.eps_i(index)
    })
}

/// The weighted envelope sum `w0 * e_2(g_0) + (1 - w0) * e_2(g_1)` in fully
/// expanded nine-branch form. Valid only for `r = 2`, `eps = 1/2`.
pub fn weighted_envelope_closed(x: f64, w0: f64) -> f64 {
    let s = 3.0f64.sqrt();
    let la = w0;
    if x < -0.5 {
        -x - 0.5 * la + 0.25
    } else if x < 0.5 * (3.0 - 2.0 * s) {
        la * x * x + (la - 1.0) * x - 0.25 * (la - 1.0)
    } else if x <= 0.5 {
        x * x + (la - 1.0) * (4.0 - 2.0 * s) * x - 0.5 * (la - 1.0) * (11.0 - 6.0 * s)
    } else if x <= 0.5 * (3.0 - s) {
        (1.0 - 2.0 * la) * x * x
            + (-4.0 + 2.0 * s + (6.0 - 2.0 * s) * la) * x
            + 0.5 * (11.0 - 6.0 * s)
            - (6.0 - 3.0 * s) * la
    } else if x < 0.5 * (1.0 + s) {
        -x * x + 2.0 * x - 0.5
    } else if x < 1.5 {
        (2.0 * la - 1.0) * x * x + (2.0 - (2.0 + 2.0 * s) * la) * x - 0.5 + (2.0 + s) * la
    } else if x <= 0.5 * (1.0 + 2.0 * s) {
        x * x - (4.0 - (4.0 - 2.0 * s) * la) * x + 4.0 - 0.5 * (5.0 - 2.0 * s) * la
    } else if x <= 2.5 {
        (1.0 - la) * x * x + (5.0 * la - 4.0) * x + 4.0 - 5.75 * la
    } else {
        x + 0.5 * la - 2.25
    }
}

/// The three critical points of the weighted envelope sum at `r = 2`,
/// `eps = 1/2`: left local minimum, local maximum, right local minimum.
pub fn critical_points_closed(w0: f64) -> [f64; 3] {
    let k = 2.0 - 3.0f64.sqrt();
    [(1.0 - w0) * k, 1.0, 2.0 - k * w0]
}

/// The reference two-function averaging problem: `r = 2`, symmetric-quadratic
/// perturbation, inner grid `[-1, 3]`.
pub fn example_problem(eps: f64) -> Result<ProxAverageProblem> {
    example_problem_on(eps, GridSpec::line(-1.0, 3.0, 801)?)
}

/// Same problem with a caller-chosen inner grid.
pub fn example_problem_on(eps: f64, inner_grid: GridSpec) -> Result<ProxAverageProblem> {
    ProxAverageProblem::new(
        vec![make_g(0, eps)?, make_g(1, eps)?],
        2.0,
        DeltaSpec::SymmetricQuadratic,
        inner_grid,
        None,
    )
}

/// Configuration of the minimizer-discontinuity demo.
#[derive(Clone, Debug)]
pub struct DemoConfig {
    pub eps: f64,
    pub steps: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            eps: 0.5,
            steps: 101,
        }
    }
}

/// Outcome of the demo; `failures` names every claim that did not hold.
#[derive(Clone, Debug, Serialize)]
pub struct DemoReport {
    pub passed: bool,
    pub failures: Vec<String>,
    pub jump_count: usize,
    pub jump_weight: Option<f64>,
    pub jump_magnitude: Option<f64>,
    pub tie_argmin: Vec<f64>,
    pub tie_value: Option<f64>,
}

/// Sweeps the simplex edge, tracks the argmin of the weighted envelope sum,
/// and checks the discontinuity claims: a single jump near the balanced
/// weight, a two-point argmin at the tie, and agreement of the single-valued
/// branches with the closed-form critical points (the latter two only for the
/// `eps = 1/2` instance where the closed forms apply).
pub fn run_discontinuity_demo(cfg: &DemoConfig) -> Result<(DemoReport, ArgminPath)> {
    if cfg.steps < 2 {
        return Err(Error::Invalid("demo needs at least 2 path steps".into()));
    }
    let problem = example_problem(cfg.eps)?;
    let path = crate::funcspace::simplex_path(
        &SimplexWeight::vertex(2, 0),
        &SimplexWeight::vertex(2, 1),
        cfg.steps,
    )?;
    let grid = problem.inner_grid().clone();
    let tracked = minpath::track_argmin(&problem, &path, &grid, None, None)?;

    let mut failures = Vec::new();
    let step_width = 1.0 / (cfg.steps - 1) as f64;
    let k = 2.0 - 3.0f64.sqrt();
    let closed_forms_apply = (cfg.eps - 0.5).abs() < 1e-12;

    if tracked.jumps.len() != 1 {
        failures.push(format!(
            "expected exactly one jump, found {}",
            tracked.jumps.len()
        ));
    }
    let jump = tracked.jumps.first();
    let jump_weight = jump.map(|j| j.lambda_star.weights()[0]);
    let jump_magnitude = jump.map(|j| j.magnitude);
    if closed_forms_apply {
        if let Some(w) = jump_weight {
            if (w - 0.5).abs() > step_width + 1e-12 {
                failures.push(format!(
                    "jump localized at weight {w}, more than one step from 1/2"
                ));
            }
        }
    }

    // The record at the balanced weight, when the path hits it exactly.
    let tie = tracked
        .records
        .iter()
        .find(|rec| (rec.lambda.weights()[0] - 0.5).abs() < 1e-12);
    let (mut tie_argmin, mut tie_value) = (Vec::new(), None);
    if let Some(rec) = tie {
        tie_argmin = rec.argmin.clone();
        tie_value = Some(rec.min_value);
        if closed_forms_apply {
            if rec.argmin.len() != 2 {
                failures.push(format!(
                    "expected a two-point argmin at the balanced weight, found {:?}",
                    rec.argmin
                ));
            }
            let expected_value = 0.5 * k;
            if (rec.min_value - expected_value).abs() > 1e-6 {
                failures.push(format!(
                    "tie value {} differs from {} by more than 1e-6",
                    rec.min_value, expected_value
                ));
            }
        }
    }

    if closed_forms_apply {
        for rec in &tracked.records {
            let w = rec.lambda.weights()[0];
            if (w - 0.5).abs() < 1e-12 || rec.argmin.len() != 1 {
                continue;
            }
            let expected = if w > 0.5 { (1.0 - w) * k } else { 2.0 - k * w };
            if (rec.argmin[0] - expected).abs() > 1e-6 {
                failures.push(format!(
                    "argmin {} at weight {w} differs from branch formula {expected}",
                    rec.argmin[0]
                ));
                break;
            }
        }
    }

    let report = DemoReport {
        passed: failures.is_empty(),
        failures,
        jump_count: tracked.jumps.len(),
        jump_weight,
        jump_magnitude,
        tie_argmin,
        tie_value,
    };
    Ok((report, tracked))
}
