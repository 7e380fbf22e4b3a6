//! Moreau envelopes and proximal point mappings: exact breakpoint
//! decomposition for one-dimensional max-of-quadratics, brute-force grid
//! oracles with golden-section refinement for everything else.

use crate::error::{Error, Result};
use crate::funcspace::{prox_threshold, GridSpec, MaxQuadFunction, SampledFunction};

/// Default number of refinement iterations per basin.
pub const DEFAULT_REFINE_ITERS: usize = 60;

/// Relative tie tolerance: values this close to the best count as tied.
pub fn default_tie_tol(best: f64) -> f64 {
    1e-8 * (1.0 + best.abs())
}

/// Envelope value plus the set of proximal points attaining it.
#[derive(Clone, Debug)]
pub struct ProxResult {
    pub value: f64,
    pub minimizers: Vec<Vec<f64>>,
    pub multivalued: bool,
}

impl ProxResult {
    fn from_candidates(mut cands: Vec<(Vec<f64>, f64)>, tie_tol: Option<f64>) -> Self {
        debug_assert!(!cands.is_empty());
        let best = cands.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
        let tol = tie_tol.unwrap_or_else(|| default_tie_tol(best));
        cands.retain(|(_, v)| *v <= best + tol);
        // Merge candidates that refined into the same point.
        cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut minimizers: Vec<Vec<f64>> = Vec::new();
        for (p, _) in cands {
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dup = minimizers
                .last()
                .is_some_and(|q| crate::util::dist(q, &p) <= 1e-6 * (1.0 + norm));
            if !dup {
                minimizers.push(p);
            }
        }
        let multivalued = minimizers.len() >= 2;
        ProxResult {
            value: best,
            minimizers,
            multivalued,
        }
    }

    /// The unique proximal point, if there is exactly one.
    pub fn single(&self) -> Option<&[f64]> {
        if self.minimizers.len() == 1 {
            Some(&self.minimizers[0])
        } else {
            None
        }
    }

    /// Scalar minimizers of a one-dimensional result.
    pub fn minimizers_1d(&self) -> Vec<f64> {
        self.minimizers.iter().map(|p| p[0]).collect()
    }
}

fn exact_bound(f: &MaxQuadFunction) -> f64 {
    f64::max(prox_threshold(f), -f.min_alpha())
}

/// True when the exact one-dimensional path applies: every piece subproblem
/// is strongly convex.
pub fn exact_1d_eligible(f: &MaxQuadFunction, r: f64) -> bool {
    f.dimension() == 1 && r > exact_bound(f)
}

/// Exact prox of a one-dimensional max-of-quadratics: minimizes the active
/// piece plus the quadratic penalty on every breakpoint cell, clamping the
/// unconstrained minimizer to the cell.
pub fn prox_exact_1d(
    f: &MaxQuadFunction,
    r: f64,
    x_bar: f64,
    tie_tol: Option<f64>,
) -> Result<ProxResult> {
    if f.dimension() != 1 {
        return Err(Error::Invalid(
            "exact prox requires a one-dimensional function".into(),
        ));
    }
    if !exact_1d_eligible(f, r) {
        return Err(Error::ProxParameter {
            r,
            bound: exact_bound(f),
            context: "the exact 1-D prox (strong convexity of every piece subproblem)".into(),
        });
    }
    let cells = f.cells_1d()?;
    if cells.is_empty() {
        return Err(Error::Internal("empty cell decomposition".into()));
    }
    let pieces = f.pieces();
    let mut cands = Vec::with_capacity(cells.len());
    for cell in cells {
        let p = &pieces[cell.piece];
        let a = p.alpha + r;
        let y = ((r * x_bar - p.beta[0]) / a).clamp(cell.lo, cell.hi);
        let d = y - x_bar;
        let val = 0.5 * p.alpha * y * y + p.beta[0] * y + p.gamma + 0.5 * r * d * d;
        cands.push((vec![y], val));
    }
    Ok(ProxResult::from_candidates(cands, tie_tol))
}

/// Envelope value of the exact path, without the set bookkeeping. The caller
/// must have checked `exact_1d_eligible`.
pub(crate) fn envelope_exact_value(f: &MaxQuadFunction, r: f64, x_bar: f64) -> f64 {
    let cells = f.cells_1d().expect("validated one-dimensional function");
    let pieces = f.pieces();
    let mut best = f64::INFINITY;
    for cell in cells {
        let p = &pieces[cell.piece];
        let a = p.alpha + r;
        let y = ((r * x_bar - p.beta[0]) / a).clamp(cell.lo, cell.hi);
        let d = y - x_bar;
        let val = 0.5 * p.alpha * y * y + p.beta[0] * y + p.gamma + 0.5 * r * d * d;
        best = best.min(val);
    }
    best
}

/// Golden-section search on `[a, b]`; returns the best point seen.
fn golden_section(obj: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = obj(x1);
    let mut f2 = obj(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = obj(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = obj(x2);
        }
    }
    let xm = 0.5 * (a + b);
    let fm = obj(xm);
    let mut out = (x1, f1);
    if f2 < out.1 {
        out = (x2, f2);
    }
    if fm < out.1 {
        out = (xm, fm);
    }
    out
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Indices of grid-local minima, with runs of equal values collapsed to one
/// representative per flat stretch.
fn basin_indices(vals: &[f64]) -> Vec<usize> {
    let n = vals.len();
    let mut idx = Vec::new();
    for i in 0..n {
        if !vals[i].is_finite() {
            continue;
        }
        let left_ok = i == 0 || vals[i] <= vals[i - 1];
        let right_ok = i + 1 == n || vals[i] <= vals[i + 1];
        if left_ok && right_ok {
            idx.push(i);
        }
    }
    // Collapse plateaus: consecutive indices with equal values.
    let mut out: Vec<usize> = Vec::new();
    let mut run_start = 0;
    for j in 0..idx.len() {
        let new_run =
            j + 1 == idx.len() || idx[j + 1] != idx[j] + 1 || vals[idx[j + 1]] != vals[idx[j]];
        if new_run {
            out.push(idx[(run_start + j) / 2]);
            run_start = j + 1;
        }
    }
    out
}

struct ScanOutcome {
    candidates: Vec<(Vec<f64>, f64)>,
    best_on_boundary: bool,
    best_point: Vec<f64>,
}

fn scan_1d(
    obj: &impl Fn(&[f64]) -> f64,
    grid: &GridSpec,
    refine_iters: usize,
) -> Result<ScanOutcome> {
    let n = grid.points()[0];
    let xs: Vec<f64> = grid.axis_values(0).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| sanitize(obj(&[x]))).collect();
    if !vals.iter().any(|v| v.is_finite()) {
        return Err(Error::ImproperOnGrid);
    }
    let obj1 = |x: f64| sanitize(obj(&[x]));
    let mut candidates = Vec::new();
    for i in basin_indices(&vals) {
        let a = xs[i.saturating_sub(1)];
        let b = xs[(i + 1).min(n - 1)];
        let (mut y, mut v) = golden_section(&obj1, a, b, refine_iters);
        if vals[i] < v {
            y = xs[i];
            v = vals[i];
        }
        candidates.push((vec![y], v));
    }
    let by = candidates
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("at least one basin")
        .0[0];
    let half_step = 0.5 * grid.step(0);
    let best_on_boundary = by <= xs[0] + half_step || by >= xs[n - 1] - half_step;
    Ok(ScanOutcome {
        candidates,
        best_on_boundary,
        best_point: vec![by],
    })
}

fn scan_2d(
    obj: &impl Fn(&[f64]) -> f64,
    grid: &GridSpec,
    refine_iters: usize,
) -> Result<ScanOutcome> {
    let (n0, n1) = (grid.points()[0], grid.points()[1]);
    let mut vals = vec![0.0; n0 * n1];
    for i in 0..n0 {
        let x = grid.coord(0, i);
        for j in 0..n1 {
            vals[i * n1 + j] = sanitize(obj(&[x, grid.coord(1, j)]));
        }
    }
    if !vals.iter().any(|v| v.is_finite()) {
        return Err(Error::ImproperOnGrid);
    }
    let mut candidates = Vec::new();
    for i in 0..n0 {
        for j in 0..n1 {
            let v = vals[i * n1 + j];
            if !v.is_finite() {
                continue;
            }
            let le = |a: usize, b: usize| v <= vals[a * n1 + b];
            let local = (i == 0 || le(i - 1, j))
                && (i + 1 == n0 || le(i + 1, j))
                && (j == 0 || le(i, j - 1))
                && (j + 1 == n1 || le(i, j + 1));
            if !local {
                continue;
            }
            // Coordinate descent: alternate golden-section line searches with
            // a shrinking window, starting from one grid cell.
            let mut y = vec![grid.coord(0, i), grid.coord(1, j)];
            let mut v_cur = v;
            let mut w = [grid.step(0), grid.step(1)];
            for it in 0..refine_iters {
                let axis = it % 2;
                let line = |t: f64| {
                    let mut p = y.clone();
                    p[axis] = t;
                    sanitize(obj(&p))
                };
                let (t, vt) = golden_section(&line, y[axis] - w[axis], y[axis] + w[axis], 24);
                if vt < v_cur {
                    y[axis] = t;
                    v_cur = vt;
                }
                if axis == 1 {
                    w[0] *= 0.6;
                    w[1] *= 0.6;
                }
            }
            candidates.push((y, v_cur));
        }
    }
    let best = candidates
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("at least one basin")
        .clone();
    let on_edge = (0..2).any(|axis| {
        let half = 0.5 * grid.step(axis);
        best.0[axis] <= grid.lower()[axis] + half || best.0[axis] >= grid.upper()[axis] - half
    });
    Ok(ScanOutcome {
        candidates,
        best_on_boundary: on_edge,
        best_point: best.0,
    })
}

/// Brute-force minimization over a grid with per-basin refinement.
///
/// Keeps every refined basin within the tie tolerance of the best. With
/// `expand_once` the scan retries on a grid of doubled extent when the best
/// point lands on the boundary, and errors if it still does.
pub fn grid_minimize(
    obj: &(impl Fn(&[f64]) -> f64 + ?Sized),
    grid: &GridSpec,
    refine_iters: usize,
    tie_tol: Option<f64>,
    expand_once: bool,
) -> Result<ProxResult> {
    let scan = |g: &GridSpec| match g.dim() {
        1 => scan_1d(&obj, g, refine_iters),
        2 => scan_2d(&obj, g, refine_iters),
        d => Err(Error::Invalid(format!(
            "grid minimization supports dimensions 1 and 2, got {d}"
        ))),
    };
    let mut outcome = scan(grid)?;
    if outcome.best_on_boundary && expand_once {
        outcome = scan(&grid.doubled())?;
        if outcome.best_on_boundary {
            return Err(Error::GridTooSmall {
                at: outcome.best_point,
            });
        }
    }
    Ok(ProxResult::from_candidates(outcome.candidates, tie_tol))
}

/// Brute-force prox: minimizes `f(y) + (r/2)|y - x_bar|^2` over the grid,
/// refining each surviving basin.
pub fn prox_oracle(
    f_eval: impl Fn(&[f64]) -> f64,
    r: f64,
    x_bar: &[f64],
    grid: &GridSpec,
    refine_iters: usize,
    tie_tol: Option<f64>,
) -> Result<ProxResult> {
    if r <= 0.0 {
        return Err(Error::ProxParameter {
            r,
            bound: 0.0,
            context: "the prox oracle".into(),
        });
    }
    if x_bar.len() != grid.dim() {
        return Err(Error::Invalid("prox center dimension mismatch".into()));
    }
    let obj = |y: &[f64]| f_eval(y) + 0.5 * r * crate::util::dist2(y, x_bar);
    grid_minimize(&obj, grid, refine_iters, tie_tol, true)
}

fn check_envelope_params(f: &MaxQuadFunction, r: f64, context: &str) -> Result<()> {
    let bound = prox_threshold(f);
    if r <= bound {
        return Err(Error::ProxParameter {
            r,
            bound,
            context: context.into(),
        });
    }
    Ok(())
}

/// Proximal points of a max-of-quadratics function: exact when the
/// one-dimensional breakpoint path applies, grid oracle otherwise.
pub fn prox(
    f: &MaxQuadFunction,
    r: f64,
    x_bar: &[f64],
    oracle_grid: &GridSpec,
    refine_iters: usize,
    tie_tol: Option<f64>,
) -> Result<ProxResult> {
    check_envelope_params(f, r, "the proximal point mapping")?;
    if exact_1d_eligible(f, r) {
        prox_exact_1d(f, r, x_bar[0], tie_tol)
    } else {
        prox_oracle(|y| f.eval(y), r, x_bar, oracle_grid, refine_iters, tie_tol)
    }
}

/// Moreau envelope value; always bounded above by `f` itself.
pub fn envelope(f: &MaxQuadFunction, r: f64, x_bar: &[f64], oracle_grid: &GridSpec) -> Result<f64> {
    check_envelope_params(f, r, "the Moreau envelope")?;
    if exact_1d_eligible(f, r) {
        Ok(envelope_exact_value(f, r, x_bar[0]))
    } else {
        Ok(prox_oracle(
            |y| f.eval(y),
            r,
            x_bar,
            oracle_grid,
            DEFAULT_REFINE_ITERS,
            None,
        )?
        .value)
    }
}

/// Envelope gradient `r (x_bar - p)` where `p` is the unique proximal point.
pub fn envelope_gradient(
    f: &MaxQuadFunction,
    r: f64,
    x_bar: &[f64],
    oracle_grid: &GridSpec,
) -> Result<Vec<f64>> {
    let res = prox(f, r, x_bar, oracle_grid, DEFAULT_REFINE_ITERS, None)?;
    let Some(p) = res.single() else {
        return Err(Error::MultivaluedProx { at: x_bar.to_vec() });
    };
    Ok(x_bar.iter().zip(p).map(|(x, y)| r * (x - y)).collect())
}

/// Proximal hull value `-e_r(-e_r f)(x_bar)`: the envelope of the negated
/// envelope, negated. Equals `f` wherever `f + (r/2)|x|^2` is convex.
pub fn double_envelope(
    f: &MaxQuadFunction,
    r: f64,
    x_bar: &[f64],
    oracle_grid: &GridSpec,
) -> Result<f64> {
    check_envelope_params(f, r, "the proximal hull")?;
    let outer = |inner: &dyn Fn(&[f64]) -> f64| {
        prox_oracle(
            |y| -inner(y),
            r,
            x_bar,
            oracle_grid,
            DEFAULT_REFINE_ITERS,
            None,
        )
        .map(|res| -res.value)
    };
    if exact_1d_eligible(f, r) {
        outer(&|y: &[f64]| envelope_exact_value(f, r, y[0]))
    } else {
        // Tabulate the inner envelope once so the outer oracle interpolates
        // instead of re-minimizing per query.
        let inner_grid = oracle_grid.expanded(0.25);
        let values: Vec<f64> = (0..inner_grid.len())
            .map(|i| {
                prox_oracle(
                    |y| f.eval(y),
                    r,
                    &inner_grid.point(i),
                    oracle_grid,
                    DEFAULT_REFINE_ITERS,
                    None,
                )
                .map(|res| res.value)
            })
            .collect::<Result<_>>()?;
        let table = SampledFunction::new(inner_grid, values)?;
        outer(&|y: &[f64]| table.interpolate(y))
    }
}
