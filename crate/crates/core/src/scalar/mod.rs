//! Scalar machinery shared by every bound: polynomials, the function
//! registry, envelopes, chord/tangent lines and 1-D optimization.

pub mod envelope;
pub mod function;
pub mod linear;
pub mod optimize;
pub mod polynomial;

pub use envelope::{build_envelope, chebyshev_interpolant, sup_error, Envelope};
pub use function::{Domain, ScalarFunction};
pub use linear::{affine_compose_coefficients, chord_tangent, chord_tangent_auto, LinearBound};
pub use optimize::{closure_range, function_range, optimize_fn, scalar_optimize, Interval, Mode, Optimum};
pub use polynomial::Polynomial;
