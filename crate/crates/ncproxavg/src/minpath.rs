//! Tracking the minimizers of the average along weight paths: per-weight
//! argmin records, jump detection between consecutive records, critical-point
//! location, and the critical-limit check for convergent argmin sequences.
//!
//! Minimization runs on the weighted envelope sum rather than on the average
//! itself; the two share minimizers because the outer envelope of the average
//! returns the inner objective. A direct cross-check is kept in the tests.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::funcspace::{GridSpec, SimplexWeight};
use crate::moreau;
use crate::proxavg::{pa_eval, ProxAverageProblem};
use crate::regularity::{CheckReport, Violation};
use crate::util;

/// Argmin set of the average at one weight vector.
#[derive(Clone, Debug)]
pub struct ArgminRecord {
    pub lambda: SimplexWeight,
    pub argmin: Vec<f64>,
    pub min_value: f64,
    pub gradient_norms: Vec<f64>,
}

/// One detected discontinuity of the argmin map.
#[derive(Clone, Debug)]
pub struct JumpEvent {
    /// Index of the record on the left edge of the event.
    pub index: usize,
    pub lambda_star: SimplexWeight,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub magnitude: f64,
}

/// Ordered records along a weight path plus the jumps between them.
#[derive(Clone, Debug)]
pub struct ArgminPath {
    pub records: Vec<ArgminRecord>,
    pub jumps: Vec<JumpEvent>,
}

/// Default jump threshold: one percent of the grid extent, well below the
/// reference jump and above refinement noise.
pub fn default_jump_threshold(grid: &GridSpec) -> f64 {
    1e-2 * grid.max_extent()
}

/// Minimizes the weighted envelope sum at every weight of the path, keeping
/// all basins within the tie tolerance, and flags jumps between consecutive
/// argmin sets.
pub fn track_argmin(
    problem: &ProxAverageProblem,
    path: &[SimplexWeight],
    grid: &GridSpec,
    tie_tol: Option<f64>,
    jump_threshold: Option<f64>,
) -> Result<ArgminPath> {
    if problem.dimension() != 1 || grid.dim() != 1 {
        return Err(Error::Invalid(
            "argmin tracking supports one-dimensional problems".into(),
        ));
    }
    if path.is_empty() {
        return Err(Error::Invalid("weight path is empty".into()));
    }
    let records: Vec<ArgminRecord> = path
        .par_iter()
        .map(|lambda| {
            if lambda.m() != problem.m() {
                return Err(Error::Invalid("weight dimension mismatch on path".into()));
            }
            let objective = |x: &[f64]| problem.weighted_envelope(lambda, x);
            let res = moreau::grid_minimize(
                &objective,
                grid,
                moreau::DEFAULT_REFINE_ITERS,
                tie_tol,
                false,
            )?;
            let argmin = res.minimizers_1d();
            let h = 1e-5;
            let gradient_norms = argmin
                .iter()
                .map(|&p| ((objective(&[p + h]) - objective(&[p - h])) / (2.0 * h)).abs())
                .collect();
            Ok(ArgminRecord {
                lambda: lambda.clone(),
                argmin,
                min_value: res.value,
                gradient_norms,
            })
        })
        .collect::<Result<_>>()?;
    let threshold = jump_threshold.unwrap_or_else(|| default_jump_threshold(grid));
    let jumps = detect_jumps(&records, threshold);
    Ok(ArgminPath { records, jumps })
}

/// Flags consecutive records whose argmin sets are farther apart than the
/// threshold (in Hausdorff distance) and merges adjacent flags into events.
///
/// When an event straddles a record whose argmin is itself a set (the tie),
/// that record supplies the event location and the set diameter supplies the
/// magnitude; otherwise the midpoint and the pair distance do.
pub fn detect_jumps(records: &[ArgminRecord], threshold: f64) -> Vec<JumpEvent> {
    let mut flagged: Vec<usize> = Vec::new();
    for i in 0..records.len().saturating_sub(1) {
        if util::hausdorff_1d(&records[i].argmin, &records[i + 1].argmin) > threshold {
            flagged.push(i);
        }
    }
    let diameter_1d = |set: &[f64]| -> f64 {
        match (
            set.iter().cloned().reduce(f64::min),
            set.iter().cloned().reduce(f64::max),
        ) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    };
    let mut events = Vec::new();
    let mut s = 0;
    while s < flagged.len() {
        let mut e = s;
        while e + 1 < flagged.len() && flagged[e + 1] == flagged[e] + 1 {
            e += 1;
        }
        let i0 = flagged[s];
        let i1 = flagged[e] + 1;
        let left = records[i0].argmin.clone();
        let right = records[i1].argmin.clone();
        let tie = records[i0 + 1..i1]
            .iter()
            .filter(|rec| rec.argmin.len() >= 2)
            .max_by(|a, b| {
                diameter_1d(&a.argmin)
                    .partial_cmp(&diameter_1d(&b.argmin))
                    .unwrap()
            });
        let (lambda_star, magnitude) = match tie {
            Some(rec) => (rec.lambda.clone(), diameter_1d(&rec.argmin)),
            None => {
                let mid: Vec<f64> = records[i0]
                    .lambda
                    .weights()
                    .iter()
                    .zip(records[i1].lambda.weights())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                let lambda = SimplexWeight::new(mid).expect("midpoint stays on the simplex");
                (lambda, util::hausdorff_1d(&left, &right))
            }
        };
        events.push(JumpEvent {
            index: i0,
            lambda_star,
            left,
            right,
            magnitude,
        });
        s = e + 1;
    }
    events
}

/// Classification of a critical point by its second difference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticalKind {
    Minimum,
    Maximum,
    Flat,
}

/// Locates the sign changes of the numerical derivative of the weighted
/// envelope sum over the grid, bisects each to high precision, and
/// classifies by second differences.
pub fn critical_points_1d(
    problem: &ProxAverageProblem,
    lambda: &SimplexWeight,
    grid: &GridSpec,
) -> Result<Vec<(f64, CriticalKind)>> {
    if problem.dimension() != 1 || grid.dim() != 1 {
        return Err(Error::Invalid(
            "critical-point location supports one-dimensional problems".into(),
        ));
    }
    if lambda.m() != problem.m() {
        return Err(Error::Invalid("weight dimension mismatch".into()));
    }
    let w = |x: f64| problem.weighted_envelope(lambda, &[x]);
    let deriv = |x: f64| {
        let h = 1e-6 * (1.0 + x.abs());
        (w(x + h) - w(x - h)) / (2.0 * h)
    };
    let xs: Vec<f64> = grid.axis_values(0).collect();
    let ds: Vec<f64> = xs.iter().map(|&x| deriv(x)).collect();
    let mut roots: Vec<f64> = Vec::new();
    for i in 0..xs.len() - 1 {
        if ds[i] == 0.0 {
            roots.push(xs[i]);
        } else if ds[i] * ds[i + 1] < 0.0 {
            let (mut a, mut b) = (xs[i], xs[i + 1]);
            let mut da = ds[i];
            while b - a > 1e-10 {
                let m = 0.5 * (a + b);
                let dm = deriv(m);
                if da * dm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    da = dm;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    if ds.last() == Some(&0.0) {
        roots.push(*xs.last().unwrap());
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-8 * (1.0 + b.abs()));
    let h2 = 1e-4;
    Ok(roots
        .into_iter()
        .map(|x| {
            let second = (w(x + h2) - 2.0 * w(x) + w(x - h2)) / (h2 * h2);
            let kind = if second > 1e-2 {
                CriticalKind::Minimum
            } else if second < -1e-2 {
                CriticalKind::Maximum
            } else {
                CriticalKind::Flat
            };
            (x, kind)
        })
        .collect())
}

/// Validates that a sequence of `(argmin point, weights)` pairs converges and
/// that the derivative of the average vanishes at the extrapolated limit.
///
/// Every sequence point must be a minimizer at its own weights (checked by
/// re-minimizing); the limit is estimated by Aitken extrapolation of the
/// tail.
pub fn verify_limit_critical(
    problem: &ProxAverageProblem,
    sequence: &[(f64, SimplexWeight)],
    conv_tol: f64,
) -> Result<CheckReport> {
    if problem.dimension() != 1 {
        return Err(Error::Invalid(
            "the limit check supports one-dimensional problems".into(),
        ));
    }
    if sequence.is_empty() {
        return Err(Error::Invalid("empty argmin sequence".into()));
    }
    for (k, (x, lambda)) in sequence.iter().enumerate() {
        let res = moreau::grid_minimize(
            &|y: &[f64]| problem.weighted_envelope(lambda, y),
            problem.inner_grid(),
            moreau::DEFAULT_REFINE_ITERS,
            None,
            false,
        )?;
        let dist_to_argmin = res
            .minimizers_1d()
            .iter()
            .map(|p| (p - x).abs())
            .fold(f64::INFINITY, f64::min);
        if dist_to_argmin > 1e-4 * (1.0 + x.abs()) {
            return Err(Error::Invalid(format!(
                "sequence point {k} ({x}) is not a minimizer at its weights"
            )));
        }
    }
    if sequence.len() >= 2 {
        let (xa, la) = &sequence[sequence.len() - 2];
        let (xb, lb) = &sequence[sequence.len() - 1];
        let gap = (xb - xa).abs() + la.distance(lb);
        if gap > conv_tol {
            return Err(Error::NonConvergent(format!(
                "last step moved by {gap}, above the tolerance {conv_tol}"
            )));
        }
    }

    let xs: Vec<f64> = sequence.iter().map(|(x, _)| *x).collect();
    let x_limit = util::aitken_limit(&xs);
    let m = problem.m();
    let mut w_limit = vec![0.0; m];
    for (j, wj) in w_limit.iter_mut().enumerate() {
        let comp: Vec<f64> = sequence.iter().map(|(_, l)| l.weights()[j]).collect();
        *wj = util::aitken_limit(&comp);
    }
    let sum: f64 = w_limit.iter().sum();
    w_limit.iter_mut().for_each(|v| *v /= sum);
    let lambda_limit = SimplexWeight::new(w_limit)
        .map_err(|e| Error::NonConvergent(format!("extrapolated weights left the simplex: {e}")))?;

    let h = 1e-5;
    let d = (pa_eval(problem, &[x_limit + h], &lambda_limit)?
        - pa_eval(problem, &[x_limit - h], &lambda_limit)?)
        / (2.0 * h);
    let mut violations = Vec::new();
    if d.abs() > 1e-4 {
        violations.push(Violation {
            x: x_limit,
            xp: x_limit,
            lambda: Some(lambda_limit.weights().to_vec()),
            margin: 1e-4 - d.abs(),
        });
    }
    Ok(CheckReport::finish(
        "limit_critical",
        sequence.len(),
        violations,
        Some(d.abs()),
        None,
        Some(format!(
            "limit ({x_limit:.12}, {:?})",
            lambda_limit.weights()
        )),
    ))
}
