//! The proximal average of m functions: the negated outer envelope, at
//! parameter `r + delta(lambda)`, of the negated weighted sum of inner
//! envelopes, together with the perturbation family `delta`.

use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{prox_threshold, GridSpec, MaxQuadFunction, SampledFunction, SimplexWeight};
use crate::moreau;
use crate::util;

/// One monomial of a custom perturbation polynomial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyTerm {
    pub powers: Vec<u32>,
    pub coef: f64,
}

/// The perturbation added to the outer prox-parameter: zero exactly at the
/// simplex vertices and strictly positive elsewhere on the simplex.
/// Polynomials only, so the perturbation is twice continuously
/// differentiable.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaSpec {
    /// `(1/2)(1 - sum_i lambda_i^2)`; reduces to `w(1-w)` for two functions.
    SymmetricQuadratic,
    CustomPolynomial {
        terms: Vec<PolyTerm>,
    },
}

/// Evaluates the perturbation at a simplex point.
pub fn delta_eval(spec: &DeltaSpec, lambda: &SimplexWeight) -> f64 {
    let w = lambda.weights();
    match spec {
        DeltaSpec::SymmetricQuadratic => 0.5 * (1.0 - w.iter().map(|v| v * v).sum::<f64>()),
        DeltaSpec::CustomPolynomial { terms } => terms
            .iter()
            .map(|t| {
                t.coef
                    * t.powers
                        .iter()
                        .zip(w)
                        .map(|(p, v)| v.powi(*p as i32))
                        .product::<f64>()
            })
            .sum(),
    }
}

/// Checks the defining properties of a perturbation by sampling: exact zero
/// at every vertex, strictly positive at 1000 interior points.
pub fn validate_delta(spec: &DeltaSpec, m: usize) -> Result<()> {
    if let DeltaSpec::CustomPolynomial { terms } = spec {
        if terms.iter().any(|t| t.powers.len() != m) {
            return Err(Error::Invalid(format!(
                "custom perturbation terms need {m} exponents each"
            )));
        }
        if terms.iter().any(|t| !t.coef.is_finite()) {
            return Err(Error::Invalid(
                "perturbation coefficients must be finite".into(),
            ));
        }
    }
    for i in 0..m {
        let v = delta_eval(spec, &SimplexWeight::vertex(m, i));
        if v.abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "perturbation must vanish at vertex {}, got {v}",
                i + 1
            )));
        }
    }
    if m == 1 {
        return Ok(()); // the simplex is a single vertex
    }
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    for _ in 0..1000 {
        // Exponential spacings give a uniform interior sample of the simplex.
        let mut w: Vec<f64> = (0..m)
            .map(|_| -(rng.random_range(1e-12..1.0f64)).ln())
            .collect();
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= sum);
        let lambda = SimplexWeight::new(w)
            .map_err(|e| Error::Internal(format!("interior sample left the simplex: {e}")))?;
        let v = delta_eval(spec, &lambda);
        if v <= 0.0 {
            return Err(Error::Invalid(format!(
                "perturbation must be positive on the simplex interior; got {v} at {:?}",
                lambda.weights()
            )));
        }
    }
    Ok(())
}

/// How each inner envelope is evaluated.
#[derive(Clone, Debug)]
enum InnerRoute {
    /// Exact breakpoint decomposition (one-dimensional, strongly convex cells).
    Exact,
    /// Envelope tabulated on the inner grid, interpolated between nodes.
    Sampled(SampledFunction),
}

/// An m-function averaging problem: the functions, the inner prox-parameter,
/// the perturbation, and the grids backing the two oracle layers.
#[derive(Clone, Debug)]
pub struct ProxAverageProblem {
    functions: Vec<MaxQuadFunction>,
    r: f64,
    delta: DeltaSpec,
    inner_grid: GridSpec,
    outer_grid: GridSpec,
    routes: Vec<InnerRoute>,
}

impl ProxAverageProblem {
    /// Validates the inputs and precomputes the inner envelope routes. The
    /// outer grid defaults to the inner grid widened by 25% per side.
    pub fn new(
        functions: Vec<MaxQuadFunction>,
        r: f64,
        delta: DeltaSpec,
        inner_grid: GridSpec,
        outer_grid: Option<GridSpec>,
    ) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::Invalid("need at least one function".into()));
        }
        let dim = functions[0].dimension();
        if functions.iter().any(|f| f.dimension() != dim) {
            return Err(Error::Invalid(
                "all functions must share one dimension".into(),
            ));
        }
        if inner_grid.dim() != dim {
            return Err(Error::Invalid("inner grid dimension mismatch".into()));
        }
        for (i, f) in functions.iter().enumerate() {
            let bound = prox_threshold(f);
            if r <= bound {
                return Err(Error::ProxParameter {
                    r,
                    bound,
                    context: format!("prox-boundedness of function {}", i + 1),
                });
            }
        }
        validate_delta(&delta, functions.len())?;
        let outer_grid = match outer_grid {
            Some(g) => {
                if g.dim() != dim {
                    return Err(Error::Invalid("outer grid dimension mismatch".into()));
                }
                g
            }
            None => inner_grid.expanded(0.25),
        };
        let routes = functions
            .iter()
            .map(|f| {
                if moreau::exact_1d_eligible(f, r) {
                    f.cells_1d()?; // warm the breakpoint cache
                    Ok(InnerRoute::Exact)
                } else {
                    let values: Vec<f64> = (0..inner_grid.len())
                        .into_par_iter()
                        .map(|i| {
                            moreau::prox_oracle(
                                |y| f.eval(y),
                                r,
                                &inner_grid.point(i),
                                &inner_grid,
                                moreau::DEFAULT_REFINE_ITERS,
                                None,
                            )
                            .map(|res| res.value)
                        })
                        .collect::<Result<_>>()?;
                    Ok(InnerRoute::Sampled(SampledFunction::new(
                        inner_grid.clone(),
                        values,
                    )?))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            functions,
            r,
            delta,
            inner_grid,
            outer_grid,
            routes,
        })
    }

    pub fn m(&self) -> usize {
        self.functions.len()
    }

    pub fn dimension(&self) -> usize {
        self.functions[0].dimension()
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn delta(&self) -> &DeltaSpec {
        &self.delta
    }

    pub fn functions(&self) -> &[MaxQuadFunction] {
        &self.functions
    }

    pub fn inner_grid(&self) -> &GridSpec {
        &self.inner_grid
    }

    pub fn outer_grid(&self) -> &GridSpec {
        &self.outer_grid
    }

    /// Outer prox-parameter `r + delta(lambda)`.
    pub fn outer_parameter(&self, lambda: &SimplexWeight) -> f64 {
        self.r + delta_eval(&self.delta, lambda)
    }

    fn check_lambda(&self, lambda: &SimplexWeight) -> Result<()> {
        if lambda.m() != self.m() {
            return Err(Error::Invalid(format!(
                "weight vector has {} entries for {} functions",
                lambda.m(),
                self.m()
            )));
        }
        Ok(())
    }

    /// Value of the i-th inner envelope `e_r f_i` at `x`.
    pub fn inner_envelope(&self, i: usize, x: &[f64]) -> f64 {
        match &self.routes[i] {
            InnerRoute::Exact => moreau::envelope_exact_value(&self.functions[i], self.r, x[0]),
            InnerRoute::Sampled(table) => table.interpolate(x),
        }
    }

    /// Weighted sum of inner envelopes `sum_i lambda_i e_r f_i(x)`.
    pub fn weighted_envelope(&self, lambda: &SimplexWeight, x: &[f64]) -> f64 {
        lambda
            .weights()
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| w * self.inner_envelope(i, x))
            .sum()
    }

    /// The inner objective: `F_lambda(x) = -sum_i lambda_i e_r f_i(x)`,
    /// finite everywhere and affine in the weights pointwise.
    pub fn inner_function<'a>(
        &'a self,
        lambda: &'a SimplexWeight,
    ) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
        move |x: &[f64]| -self.weighted_envelope(lambda, x)
    }
}

/// The average at one point: `-e_{r+delta(lambda)}(F_lambda)(x)`, computed by
/// the grid oracle over the outer grid.
pub fn pa_eval(problem: &ProxAverageProblem, x: &[f64], lambda: &SimplexWeight) -> Result<f64> {
    problem.check_lambda(lambda)?;
    if x.len() != problem.dimension() {
        return Err(Error::Invalid("evaluation point dimension mismatch".into()));
    }
    let c = problem.outer_parameter(lambda);
    let obj = |y: &[f64]| -problem.weighted_envelope(lambda, y) + 0.5 * c * util::dist2(y, x);
    let res = moreau::grid_minimize(
        &obj,
        &problem.outer_grid,
        moreau::DEFAULT_REFINE_ITERS,
        None,
        true,
    )?;
    Ok(-res.value)
}

/// The average tabulated over a grid.
pub fn pa_curve(
    problem: &ProxAverageProblem,
    lambda: &SimplexWeight,
    grid: &GridSpec,
) -> Result<SampledFunction> {
    problem.check_lambda(lambda)?;
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| pa_eval(problem, &grid.point(i), lambda))
        .collect::<Result<_>>()?;
    SampledFunction::new(grid.clone(), values)
}

/// Result of comparing the two argmin routes.
#[derive(Clone, Debug, Serialize)]
pub struct ArgminEquivalence {
    pub argmin_pa: Vec<Vec<f64>>,
    pub argmin_weighted: Vec<Vec<f64>>,
    pub hausdorff: f64,
    pub agree: bool,
}

/// Minimizes the average directly and through the weighted envelope sum, and
/// compares the argmin sets by Hausdorff distance.
pub fn argmin_equivalence(
    problem: &ProxAverageProblem,
    lambda: &SimplexWeight,
    grid: &GridSpec,
    tol: f64,
) -> Result<ArgminEquivalence> {
    problem.check_lambda(lambda)?;
    let weighted = moreau::grid_minimize(
        &|x: &[f64]| problem.weighted_envelope(lambda, x),
        grid,
        moreau::DEFAULT_REFINE_ITERS,
        None,
        false,
    )?;

    // The direct route evaluates the average per query; stash the first
    // oracle failure and surface it after the scan.
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let obj = |x: &[f64]| match pa_eval(problem, x, lambda) {
        Ok(v) => v,
        Err(e) => {
            failure.lock().unwrap().get_or_insert(e);
            f64::INFINITY
        }
    };
    let direct = moreau::grid_minimize(&obj, grid, moreau::DEFAULT_REFINE_ITERS, None, false)?;
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }

    let hausdorff = util::hausdorff(&direct.minimizers, &weighted.minimizers);
    Ok(ArgminEquivalence {
        argmin_pa: direct.minimizers,
        argmin_weighted: weighted.minimizers,
        hausdorff,
        agree: hausdorff <= tol,
    })
}
