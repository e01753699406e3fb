//! Dissipativity-preserving quadratization of polynomial ODE systems.
//!
//! A system `x' = p(x)` is lifted with monomial new variables `y = g(x)` so that
//! every right-hand side is at most quadratic in `(x, y)`. [`quadratize`] finds
//! a smallest inner-quadratic set of new variables; [`stability`] then adds
//! multiples of the stabilizers `y_i - a_i*b_i` until the lifted system is
//! dissipative at every given equilibrium.

pub mod error;
pub mod json;
pub mod matrix;
pub mod models;
pub mod parser;
pub mod poly;
pub mod quadratize;
pub mod random;
pub mod simulate;
pub mod stability;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{ParseError, PolyError, QuadratizeError, SimulateError, StabilityError};
pub use json::serialize_result;
pub use parser::{parse_points, parse_system, serialize_system};
pub use poly::{Coeff, CoeffKind, Monomial, Point, PolySystem, Polynomial, VarTable};
pub use quadratize::{branch_and_bound, carothers_universal, QuadratizationResult, RewriteRule, SearchOptions};
pub use stability::{check_dissipative, dissipative_quadratize, CheckMode, CheckOptions, DissipateOptions, StabilityReport};
