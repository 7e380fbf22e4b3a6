//! Representations of the input functions: pointwise maxima of quadratic
//! pieces, prox-boundedness thresholds, simplex weights, and sampling grids.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// One quadratic piece `(alpha/2)|x|^2 + <beta, x> + gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticPiece {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: f64,
}

impl QuadraticPiece {
    pub fn new(alpha: f64, beta: Vec<f64>, gamma: f64) -> Result<Self> {
        if !alpha.is_finite() || !gamma.is_finite() || beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Invalid(
                "quadratic piece coefficients must be finite".into(),
            ));
        }
        Ok(Self { alpha, beta, gamma })
    }

    /// Convenience constructor for one-dimensional pieces.
    pub fn line_1d(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self::new(alpha, vec![beta], gamma).expect("finite coefficients")
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.beta.len());
        let sq: f64 = x.iter().map(|v| v * v).sum();
        let lin: f64 = self.beta.iter().zip(x).map(|(b, v)| b * v).sum();
        0.5 * self.alpha * sq + lin + self.gamma
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.beta)
            .map(|(v, b)| self.alpha * v + b)
            .collect()
    }

    fn value_1d(&self, x: f64) -> f64 {
        0.5 * self.alpha * x * x + self.beta[0] * x + self.gamma
    }
}

/// Axis-aligned box outside of which a function is `+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Invalid("domain bound lengths differ".into()));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !l.is_finite() || !u.is_finite() || l >= u)
        {
            return Err(Error::Invalid(
                "domain box requires finite lower < upper per axis".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }
}

/// A closed interval of the real line on which a single piece attains the max.
#[derive(Clone, Copy, Debug)]
pub struct Cell1d {
    pub lo: f64,
    pub hi: f64,
    pub piece: usize,
}

/// Pointwise maximum of finitely many quadratic pieces, optionally restricted
/// to a box (the function is `+inf` outside it).
#[derive(Debug)]
pub struct MaxQuadFunction {
    dimension: usize,
    pieces: Vec<QuadraticPiece>,
    domain: Option<BoxDomain>,
    cells_1d: OnceLock<Vec<Cell1d>>,
}

impl Clone for MaxQuadFunction {
    fn clone(&self) -> Self {
        Self {
            dimension: self.dimension,
            pieces: self.pieces.clone(),
            domain: self.domain.clone(),
            cells_1d: self.cells_1d.clone(),
        }
    }
}

impl MaxQuadFunction {
    pub fn new(
        dimension: usize,
        pieces: Vec<QuadraticPiece>,
        domain: Option<BoxDomain>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Invalid("dimension must be positive".into()));
        }
        if pieces.is_empty() {
            return Err(Error::Invalid("need at least one quadratic piece".into()));
        }
        if pieces.iter().any(|p| p.beta.len() != dimension) {
            return Err(Error::Invalid(format!(
                "every piece must have a linear coefficient of length {dimension}"
            )));
        }
        if let Some(b) = &domain {
            if b.lower.len() != dimension {
                return Err(Error::Invalid("domain box dimension mismatch".into()));
            }
        }
        Ok(Self {
            dimension,
            pieces,
            domain,
            cells_1d: OnceLock::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn pieces(&self) -> &[QuadraticPiece] {
        &self.pieces
    }

    pub fn domain(&self) -> Option<&BoxDomain> {
        self.domain.as_ref()
    }

    pub fn min_alpha(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.alpha)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_alpha(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.alpha)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Function value: max over pieces inside the domain box, `+inf` outside.
    ///
    /// Panics on dimension mismatch.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(
            x.len(),
            self.dimension,
            "point dimension {} does not match function dimension {}",
            x.len(),
            self.dimension
        );
        if let Some(b) = &self.domain {
            if !b.contains(x) {
                return f64::INFINITY;
            }
        }
        self.pieces
            .iter()
            .map(|p| p.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Scalar shorthand for one-dimensional functions.
    pub fn eval_1d(&self, x: f64) -> f64 {
        self.eval(&[x])
    }

    /// Gradients of all pieces active at `x` within a relative tolerance.
    ///
    /// At a breakpoint this returns one representative slope per active piece;
    /// between breakpoints it returns the single active gradient.
    pub fn active_gradients_1d(&self, x: f64) -> Vec<f64> {
        assert_eq!(self.dimension, 1);
        let fx = self.eval_1d(x);
        if !fx.is_finite() {
            return Vec::new();
        }
        let tol = 1e-9 * (1.0 + fx.abs());
        let mut grads: Vec<f64> = self
            .pieces
            .iter()
            .filter(|p| (p.value_1d(x) - fx).abs() <= tol)
            .map(|p| p.alpha * x + p.beta[0])
            .collect();
        grads.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grads.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        grads
    }

    /// Breakpoint decomposition of a one-dimensional max-of-quadratics: the
    /// ordered closed cells on which a single piece attains the maximum.
    pub fn cells_1d(&self) -> Result<&[Cell1d]> {
        if self.dimension != 1 {
            return Err(Error::Invalid(
                "breakpoint decomposition requires a one-dimensional function".into(),
            ));
        }
        Ok(self.cells_1d.get_or_init(|| self.compute_cells_1d()))
    }

    fn compute_cells_1d(&self) -> Vec<Cell1d> {
        let (lo, hi) = match &self.domain {
            Some(b) => (b.lower[0], b.upper[0]),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        };
        let mut cuts: Vec<f64> = Vec::new();
        for i in 0..self.pieces.len() {
            for j in (i + 1)..self.pieces.len() {
                let (pi, pj) = (&self.pieces[i], &self.pieces[j]);
                quad_roots(
                    0.5 * (pi.alpha - pj.alpha),
                    pi.beta[0] - pj.beta[0],
                    pi.gamma - pj.gamma,
                    &mut cuts,
                );
            }
        }
        cuts.retain(|c| c.is_finite() && *c > lo && *c < hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));

        let mut bounds = Vec::with_capacity(cuts.len() + 2);
        bounds.push(lo);
        bounds.extend(cuts);
        bounds.push(hi);

        let mut cells: Vec<Cell1d> = Vec::new();
        for w in bounds.windows(2) {
            let (l, h) = (w[0], w[1]);
            if l >= h {
                continue;
            }
            let rep = match (l.is_finite(), h.is_finite()) {
                (true, true) => 0.5 * (l + h),
                (true, false) => l + 1.0,
                (false, true) => h - 1.0,
                (false, false) => 0.0,
            };
            let piece = self
                .pieces
                .iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| a.value_1d(rep).partial_cmp(&b.value_1d(rep)).unwrap())
                .map(|(i, _)| i)
                .expect("nonempty pieces");
            match cells.last_mut() {
                Some(prev) if prev.piece == piece => prev.hi = h,
                _ => cells.push(Cell1d {
                    lo: l,
                    hi: h,
                    piece,
                }),
            }
        }
        cells
    }
}

/// Real roots of `a x^2 + b x + c`, appended to `out`.
fn quad_roots(a: f64, b: f64, c: f64, out: &mut Vec<f64>) {
    let scale = a.abs() + b.abs() + c.abs();
    if a.abs() <= 1e-14 * (1.0 + scale) {
        if b.abs() > 1e-14 * (1.0 + scale) {
            out.push(-c / b);
        }
        return;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        out.push(0.0);
    } else {
        out.push(q / a);
        out.push(c / q);
    }
}

/// Threshold of prox-boundedness for a max-of-quadratics function.
///
/// Any single piece bounds the max from below, so the envelope is finite
/// everywhere once one piece plus `(r/2)|x|^2` is convex; the binding piece is
/// the one with the largest curvature.
pub fn prox_threshold(f: &MaxQuadFunction) -> f64 {
    f64::max(0.0, -f.max_alpha())
}

/// Verdict of a shifted-convexity test of `f + (c/2)|x|^2`.
#[derive(Clone, Debug, PartialEq)]
pub enum ShiftConvexity {
    /// Every piece curvature satisfies `alpha + c >= 0`; the max of convex
    /// pieces is convex, so this certifies convexity.
    Certified,
    /// The piece test failed but a midpoint-convexity scan found no
    /// violation. A sampled verdict only; it cannot prove convexity.
    SampledConvex,
    /// Midpoint convexity fails at `x` with the given (negative) margin.
    SampledViolation { x: f64, margin: f64 },
}

impl ShiftConvexity {
    pub fn holds(&self) -> bool {
        !matches!(self, ShiftConvexity::SampledViolation { .. })
    }
}

/// Conservative piece-curvature test: true when `min_j alpha_j + c >= 0`.
pub fn is_shift_convex(f: &MaxQuadFunction, c: f64) -> bool {
    assert!(c >= 0.0, "shift parameter must be nonnegative");
    f.min_alpha() + c >= 0.0
}

/// Piece test first; on failure, a midpoint-convexity scan of
/// `f + (c/2)|x|^2` over the supplied grid decides the (sampled) verdict.
pub fn shift_convexity(f: &MaxQuadFunction, c: f64, grid: &GridSpec) -> Result<ShiftConvexity> {
    if is_shift_convex(f, c) {
        return Ok(ShiftConvexity::Certified);
    }
    Ok(match midpoint_convexity_scan(f, c, grid)? {
        Some((x, margin)) => ShiftConvexity::SampledViolation { x, margin },
        None => ShiftConvexity::SampledConvex,
    })
}

/// Worst midpoint-convexity violation of `f + (c/2)|x|^2` over the grid, if
/// any: `(first coordinate of the midpoint, margin)` with margin < 0.
pub fn midpoint_convexity_scan(
    f: &MaxQuadFunction,
    c: f64,
    grid: &GridSpec,
) -> Result<Option<(f64, f64)>> {
    if grid.dim() != f.dimension() {
        return Err(Error::Invalid("grid dimension mismatch".into()));
    }
    let shifted = |x: &[f64]| {
        let sq: f64 = x.iter().map(|v| v * v).sum();
        f.eval(x) + 0.5 * c * sq
    };
    let mut worst: Option<(f64, f64)> = None;
    grid.for_each_axis_triple(|prev, mid, next| {
        let (vp, vm, vn) = (shifted(prev), shifted(mid), shifted(next));
        if !vp.is_finite() || !vm.is_finite() || !vn.is_finite() {
            return;
        }
        let margin = 0.5 * (vp + vn) - vm;
        if margin < -1e-9 * (1.0 + vm.abs()) && worst.is_none_or(|(_, m)| margin < m) {
            worst = Some((mid[0], margin));
        }
    });
    Ok(worst)
}

const SIMPLEX_TOL: f64 = 1e-12;

/// A point of the unit simplex: nonnegative weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexWeight {
    weights: Vec<f64>,
}

impl SimplexWeight {
    /// Validates and clamps: components in `(-1e-15, 0)` are snapped to zero,
    /// anything farther off the simplex is rejected rather than projected.
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Invalid("simplex weight needs m >= 1".into()));
        }
        for w in &mut weights {
            if !w.is_finite() {
                return Err(Error::Invalid("simplex weights must be finite".into()));
            }
            if *w < 0.0 {
                if *w < -1e-15 {
                    return Err(Error::Invalid(format!("negative simplex weight {w}")));
                }
                *w = 0.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Invalid(format!(
                "simplex weights sum to {sum}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    /// The i-th canonical vertex of the m-simplex.
    pub fn vertex(m: usize, i: usize) -> Self {
        assert!(i < m, "vertex index out of range");
        let mut w = vec![0.0; m];
        w[i] = 1.0;
        Self { weights: w }
    }

    pub fn uniform(m: usize) -> Self {
        assert!(m >= 1);
        Self::new(vec![1.0 / m as f64; m]).expect("uniform weights lie on the simplex")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    /// True iff some component equals one within the simplex tolerance.
    pub fn is_vertex(&self) -> bool {
        self.vertex_index().is_some()
    }

    pub fn vertex_index(&self) -> Option<usize> {
        self.weights
            .iter()
            .position(|w| (w - 1.0).abs() <= SIMPLEX_TOL)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        crate::util::dist(&self.weights, &other.weights)
    }
}

/// Straight-line path `(1-t) a + t b` for `t = k/(steps-1)`.
pub fn simplex_path(
    a: &SimplexWeight,
    b: &SimplexWeight,
    steps: usize,
) -> Result<Vec<SimplexWeight>> {
    if a.m() != b.m() {
        return Err(Error::Invalid(format!(
            "simplex dimension mismatch: {} vs {}",
            a.m(),
            b.m()
        )));
    }
    if steps < 2 {
        return Err(Error::Invalid("a path needs at least 2 steps".into()));
    }
    (0..steps)
        .map(|k| {
            let t = k as f64 / (steps - 1) as f64;
            let w = a
                .weights()
                .iter()
                .zip(b.weights())
                .map(|(wa, wb)| (1.0 - t) * wa + t * wb)
                .collect();
            SimplexWeight::new(w)
        })
        .collect()
}

/// Uniform rectangular sampling grid, one `(lower, upper, points)` triple per
/// axis.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
    points: Vec<usize>,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() || lower.len() != points.len() {
            return Err(Error::Invalid(
                "grid axis specs have mismatched lengths".into(),
            ));
        }
        for ((l, u), n) in lower.iter().zip(&upper).zip(&points) {
            if !l.is_finite() || !u.is_finite() || l >= u {
                return Err(Error::Invalid(
                    "grid needs finite lower < upper per axis".into(),
                ));
            }
            if *n < 2 {
                return Err(Error::Invalid(
                    "grid needs at least 2 points per axis".into(),
                ));
            }
        }
        Ok(Self {
            lower,
            upper,
            points,
        })
    }

    /// One-dimensional grid over `[lo, hi]` with `n` points.
    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo], vec![hi], vec![n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    /// Total number of grid points (product over axes).
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.points[axis] - 1) as f64
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.points[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + i as f64 * self.step(axis)
        }
    }

    /// Decomposes a flat row-major index into the grid point it addresses.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut out = vec![0.0; self.dim()];
        for axis in (0..self.dim()).rev() {
            let n = self.points[axis];
            out[axis] = self.coord(axis, rem % n);
            rem /= n;
        }
        out
    }

    pub fn axis_values(&self, axis: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.points[axis]).map(move |i| self.coord(axis, i))
    }

    /// Widest axis extent; used to scale jump thresholds.
    pub fn max_extent(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .fold(0.0, f64::max)
    }

    /// Grid widened by `factor * extent` on each side of every axis, keeping
    /// roughly the same step.
    pub fn expanded(&self, factor: f64) -> GridSpec {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        let mut points = self.points.clone();
        for axis in 0..self.dim() {
            let extent = self.upper[axis] - self.lower[axis];
            let pad = factor * extent;
            lower[axis] -= pad;
            upper[axis] += pad;
            let step = self.step(axis);
            points[axis] = (((upper[axis] - lower[axis]) / step).round() as usize + 1).max(2);
        }
        GridSpec {
            lower,
            upper,
            points,
        }
    }

    /// Grid with the extent doubled about its center, same step.
    pub fn doubled(&self) -> GridSpec {
        self.expanded(0.5)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    /// Visits every consecutive triple of grid points along every axis.
    pub fn for_each_axis_triple(&self, mut visit: impl FnMut(&[f64], &[f64], &[f64])) {
        match self.dim() {
            1 => {
                for i in 1..self.points[0] - 1 {
                    visit(
                        &[self.coord(0, i - 1)],
                        &[self.coord(0, i)],
                        &[self.coord(0, i + 1)],
                    );
                }
            }
            2 => {
                let (n0, n1) = (self.points[0], self.points[1]);
                for j in 0..n1 {
                    let y = self.coord(1, j);
                    for i in 1..n0 - 1 {
                        visit(
                            &[self.coord(0, i - 1), y],
                            &[self.coord(0, i), y],
                            &[self.coord(0, i + 1), y],
                        );
                    }
                }
                for i in 0..n0 {
                    let x = self.coord(0, i);
                    for j in 1..n1 - 1 {
                        visit(
                            &[x, self.coord(1, j - 1)],
                            &[x, self.coord(1, j)],
                            &[x, self.coord(1, j + 1)],
                        );
                    }
                }
            }
            d => panic!("axis triples not implemented for dimension {d}"),
        }
    }
}

/// Function values tabulated on a grid; the oracle-side representation of
/// envelopes and averages. `+inf` entries are allowed, `-inf` and NaN are not.
#[derive(Clone, Debug)]
pub struct SampledFunction {
    grid: GridSpec,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Invalid(format!(
                "expected {} sampled values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::Invalid(
                "sampled values may not be NaN or -inf".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Smallest sampled value with its flat index.
    pub fn min(&self) -> (usize, f64) {
        self.values
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .map(|(i, v)| (i, *v))
            .expect("grids are never empty")
    }

    /// Piecewise-linear interpolation, clamped to the grid box.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        match self.grid.dim() {
            1 => {
                let (i, t) = self.locate(0, x[0]);
                let n = self.grid.points()[0];
                let (a, b) = (self.values[i], self.values[(i + 1).min(n - 1)]);
                lerp(a, b, t)
            }
            2 => {
                let (i, s) = self.locate(0, x[0]);
                let (j, t) = self.locate(1, x[1]);
                let n1 = self.grid.points()[1];
                let idx = |a: usize, b: usize| a * n1 + b;
                let i1 = (i + 1).min(self.grid.points()[0] - 1);
                let j1 = (j + 1).min(n1 - 1);
                let v00 = self.values[idx(i, j)];
                let v01 = self.values[idx(i, j1)];
                let v10 = self.values[idx(i1, j)];
                let v11 = self.values[idx(i1, j1)];
                lerp(lerp(v00, v01, t), lerp(v10, v11, t), s)
            }
            d => panic!("interpolation not implemented for dimension {d}"),
        }
    }

    fn locate(&self, axis: usize, x: f64) -> (usize, f64) {
        let n = self.grid.points()[axis];
        let step = self.grid.step(axis);
        let rel = (x - self.grid.lower()[axis]) / step;
        if rel <= 0.0 {
            return (0, 0.0);
        }
        if rel >= (n - 1) as f64 {
            return (n - 2, 1.0);
        }
        let i = (rel.floor() as usize).min(n - 2);
        (i, rel - i as f64)
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t <= 0.0 {
        a
    } else if t >= 1.0 {
        b
    } else if a.is_infinite() || b.is_infinite() {
        f64::INFINITY
    } else {
        (1.0 - t) * a + t * b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::make_g;
    use proptest::prelude::*;

    fn zero_fn() -> MaxQuadFunction {
        MaxQuadFunction::new(1, vec![QuadraticPiece::line_1d(0.0, 0.0, 0.0)], None).unwrap()
    }

    #[test]
    fn eval_matches_hand_values() {
        let g0 = make_g(0, 0.5).unwrap();
        assert_eq!(g0.eval_1d(0.0), 0.0);
        assert_eq!(g0.eval_1d(1.0), 0.5);
        assert_eq!(zero_fn().eval_1d(3.7), 0.0);
    }

    #[test]
    fn eval_respects_domain_box() {
        let f = MaxQuadFunction::new(
            1,
            vec![QuadraticPiece::line_1d(0.0, 1.0, 0.0)],
            Some(BoxDomain::new(vec![-1.0], vec![1.0]).unwrap()),
        )
        .unwrap();
        assert_eq!(f.eval_1d(0.5), 0.5);
        assert_eq!(f.eval_1d(2.0), f64::INFINITY);
    }

    #[test]
    #[should_panic(expected = "dimension")]
    fn eval_panics_on_dimension_mismatch() {
        zero_fn().eval(&[1.0, 2.0]);
    }

    #[test]
    fn prox_threshold_examples() {
        let g0 = make_g(0, 0.5).unwrap();
        assert_eq!(prox_threshold(&g0), 0.0);
        let hump =
            MaxQuadFunction::new(1, vec![QuadraticPiece::line_1d(-3.0, 0.0, 0.0)], None).unwrap();
        assert_eq!(prox_threshold(&hump), 3.0);
        let convex =
            MaxQuadFunction::new(1, vec![QuadraticPiece::line_1d(1.0, 0.0, 0.0)], None).unwrap();
        assert_eq!(prox_threshold(&convex), 0.0);
    }

    #[test]
    fn shift_convexity_examples() {
        let g0 = make_g(0, 0.5).unwrap();
        assert!(is_shift_convex(&g0, 1.0));
        assert!(!is_shift_convex(&g0, 0.5));
        let grid = GridSpec::line(-1.0, 3.0, 2001).unwrap();
        match shift_convexity(&g0, 0.5, &grid).unwrap() {
            ShiftConvexity::SampledViolation { x, .. } => {
                assert!(
                    x > 0.0 && x < 3f64.sqrt(),
                    "violation near the hump, got {x}"
                );
            }
            v => panic!("expected a sampled violation, got {v:?}"),
        }
        assert!(is_shift_convex(&zero_fn(), 0.0));
    }

    #[test]
    fn shift_convexity_sampled_fallback_can_accept() {
        // |x| plus a dominated concave piece: the piece test fails but the
        // function is convex on the scanned window.
        let f = MaxQuadFunction::new(
            1,
            vec![
                QuadraticPiece::line_1d(0.0, -1.0, 0.0),
                QuadraticPiece::line_1d(0.0, 1.0, 0.0),
                QuadraticPiece::line_1d(-1.0, 0.0, -10.0),
            ],
            None,
        )
        .unwrap();
        let grid = GridSpec::line(-3.0, 3.0, 1001).unwrap();
        assert_eq!(
            shift_convexity(&f, 0.0, &grid).unwrap(),
            ShiftConvexity::SampledConvex
        );
    }

    #[test]
    fn cells_of_g0_follow_the_kinks() {
        let g0 = make_g(0, 0.5).unwrap();
        let cells = g0.cells_1d().unwrap();
        assert_eq!(cells.len(), 3);
        assert!((cells[0].hi - 0.0).abs() < 1e-12);
        assert!((cells[1].hi - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(cells[1].piece, 1);
    }

    #[test]
    fn simplex_weight_validation() {
        assert!(SimplexWeight::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexWeight::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexWeight::new(vec![-0.1, 1.1]).is_err());
        let w = SimplexWeight::new(vec![-1e-16, 1.0]).unwrap();
        assert_eq!(w.weights()[0], 0.0);
        assert!(SimplexWeight::vertex(3, 1).is_vertex());
        assert_eq!(SimplexWeight::vertex(3, 1).vertex_index(), Some(1));
        assert!(!SimplexWeight::uniform(2).is_vertex());
    }

    #[test]
    fn simplex_path_examples() {
        let a = SimplexWeight::vertex(2, 0);
        let b = SimplexWeight::vertex(2, 1);
        let path = simplex_path(&a, &b, 3).unwrap();
        assert_eq!(path[1].weights(), &[0.5, 0.5]);

        let path = simplex_path(&a, &a, 5).unwrap();
        assert_eq!(path.len(), 5);
        assert!(path.iter().all(|w| w == &a));

        let a3 = SimplexWeight::vertex(3, 0);
        let b3 = SimplexWeight::vertex(3, 2);
        let path = simplex_path(&a3, &b3, 2).unwrap();
        assert_eq!(path[0].weights(), &[1.0, 0.0, 0.0]);
        assert_eq!(path[1].weights(), &[0.0, 0.0, 1.0]);

        assert!(simplex_path(&a, &a3, 3).is_err());
        assert!(simplex_path(&a, &b, 1).is_err());
    }

    #[test]
    fn grid_spec_basics() {
        let g = GridSpec::line(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.step(0), 0.5);
        assert_eq!(g.point(4), vec![1.0]);
        assert!(GridSpec::line(1.0, 1.0, 5).is_err());
        assert!(GridSpec::line(0.0, 1.0, 1).is_err());
        let wide = g.doubled();
        assert_eq!(wide.lower()[0], -2.0);
        assert_eq!(wide.upper()[0], 2.0);
        assert_eq!(wide.points()[0], 9);
    }

    #[test]
    fn sampled_function_interpolates() {
        let g = GridSpec::line(0.0, 1.0, 3).unwrap();
        let s = SampledFunction::new(g, vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(s.interpolate(&[0.25]), 0.5);
        assert_eq!(s.interpolate(&[-5.0]), 0.0);
        assert_eq!(s.interpolate(&[5.0]), 4.0);
        assert!(SampledFunction::new(GridSpec::line(0.0, 1.0, 3).unwrap(), vec![0.0]).is_err());
        assert!(
            SampledFunction::new(GridSpec::line(0.0, 1.0, 2).unwrap(), vec![f64::NAN, 0.0])
                .is_err()
        );
    }

    #[test]
    fn sampled_function_bilinear_is_exact_on_affine_data() {
        let g = GridSpec::new(vec![0.0, 0.0], vec![1.0, 2.0], vec![3, 5]).unwrap();
        let affine = |x: &[f64]| 2.0 * x[0] - 0.5 * x[1] + 1.0;
        let values: Vec<f64> = (0..g.len()).map(|i| affine(&g.point(i))).collect();
        let s = SampledFunction::new(g, values).unwrap();
        for p in [[0.1, 0.3], [0.5, 1.0], [0.99, 1.7]] {
            assert!((s.interpolate(&p) - affine(&p)).abs() <= 1e-12);
        }
        // Clamped outside the box.
        assert_eq!(s.interpolate(&[-1.0, -1.0]), affine(&[0.0, 0.0]));
    }

    fn arb_pieces() -> impl Strategy<Value = Vec<QuadraticPiece>> {
        prop::collection::vec((-2.0..2.0f64, -3.0..3.0f64, -2.0..2.0f64), 1..5).prop_map(|ps| {
            ps.into_iter()
                .map(|(a, b, c)| QuadraticPiece::line_1d(a, b, c))
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eval_dominates_every_piece(pieces in arb_pieces(), x in -10.0..10.0f64) {
            let f = MaxQuadFunction::new(1, pieces.clone(), None).unwrap();
            let fx = f.eval_1d(x);
            for p in &pieces {
                prop_assert!(fx >= p.value(&[x]) - 1e-12 * (1.0 + fx.abs()));
            }
        }

        #[test]
        fn threshold_invariant_under_dominated_piece(pieces in arb_pieces(), drop in 0.1..5.0f64) {
            let f = MaxQuadFunction::new(1, pieces.clone(), None).unwrap();
            let before = prox_threshold(&f);
            // A copy of an existing piece shifted down is dominated everywhere.
            let mut augmented = pieces.clone();
            let mut dominated = pieces[0].clone();
            dominated.gamma -= drop;
            augmented.push(dominated);
            let g = MaxQuadFunction::new(1, augmented, None).unwrap();
            prop_assert_eq!(before, prox_threshold(&g));
        }

        #[test]
        fn certified_shift_convexity_survives_sampling(pieces in arb_pieces(), c in 0.0..6.0f64) {
            let f = MaxQuadFunction::new(1, pieces, None).unwrap();
            prop_assume!(is_shift_convex(&f, c));
            let grid = GridSpec::line(-4.0, 4.0, 401).unwrap();
            prop_assert_eq!(midpoint_convexity_scan(&f, c, &grid).unwrap(), None);
        }

        #[test]
        fn simplex_path_stays_on_simplex(w0 in 0.0..1.0f64, w1 in 0.0..1.0f64, steps in 2usize..30) {
            let a = SimplexWeight::new(vec![w0, 1.0 - w0]).unwrap();
            let b = SimplexWeight::new(vec![w1, 1.0 - w1]).unwrap();
            let path = simplex_path(&a, &b, steps).unwrap();
            prop_assert_eq!(path.len(), steps);
            for w in &path {
                let sum: f64 = w.weights().iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12);
                prop_assert!(w.weights().iter().all(|v| *v >= 0.0));
            }
        }
    }
}
