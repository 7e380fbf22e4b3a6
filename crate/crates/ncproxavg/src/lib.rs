//! Proximal averages of finitely many nonconvex functions via nested Moreau
//! envelopes.
//!
//! Given proper, lsc, prox-bounded functions `f_1, ..., f_m` and weights on
//! the unit simplex, the average is the negated outer envelope, at parameter
//! `r + delta(lambda)`, of the negated weighted sum of the inner envelopes
//! `e_r f_i`. The crate provides:
//!
//! - [`funcspace`]: max-of-quadratics functions, prox-boundedness thresholds,
//!   simplex weights, and sampling grids;
//! - [`moreau`]: envelopes and proximal points, exact in one dimension and
//!   via brute-force grid oracles otherwise;
//! - [`proxavg`]: the average itself, the perturbation family, and the
//!   argmin-equivalence check between its two computation routes;
//! - [`regularity`]: sampled checks of quadratic minorization, shifted
//!   convexity, and Lipschitz estimates;
//! - [`minpath`]: argmin tracking along weight paths with jump detection,
//!   critical-point location, and the critical-limit check;
//! - [`suite`]: the bundled verification run behind the CLI;
//! - [`example`]: a closed-form two-function reference pair whose argmin
//!   map is multivalued at the balanced weight and jumps across it;
//! - [`io`]: JSON problem files and CSV emission.

pub mod error;
pub mod example;
pub mod funcspace;
pub mod io;
pub mod minpath;
pub mod moreau;
pub mod proxavg;
pub mod regularity;
pub mod suite;
pub mod util;

pub use error::{Error, Result};
