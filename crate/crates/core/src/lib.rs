//! Symbolic-numeric toolkit for real-analytic hypersurfaces in complex
//! 2-space and their associated singular differential equations.
//!
//! The crate is organized around one substrate, exact truncated power series
//! over Gaussian rationals ([`series`]), and the pipeline built on it:
//!
//! - [`hypersurface`]: defining series, reality/normality checks, the
//!   invariants m (nonminimality order), p (pure order), k (nondegeneracy).
//! - [`segre_ode`]: elimination of Segre-family parameters into associated
//!   ODEs and ODE systems, with exact residual verification.
//! - [`jet`]: jet prolongation of formal maps and the second-order
//!   transformation rule.
//! - [`tangency`]: the tangency identities tying a formal map to a pair of
//!   associated systems, in concrete and symbolic-channel form.
//! - [`map_reduction`]: reduction of a formal equivalence to a singular
//!   8-dimensional ODE system and the parametric Cauchy reconstruction.
//! - [`exceptional`]: blow-ups (space and Segre-parameter), pure-order
//!   coordinate adaptation, high-order Cauchy reconstruction.
//! - [`resummation`]: Gevrey estimates and Borel-Pade-Laplace summation of
//!   divergent one-variable series, with asymptotic verification.
//!
//! Everything symbolic is exact; only [`resummation`] works in doubles, and
//! the conversion point is explicit.

pub mod error;
pub mod exceptional;
pub mod hypersurface;
pub mod jet;
pub mod map_reduction;
pub mod num;
pub mod resummation;
pub mod segre_ode;
pub mod series;
pub mod tangency;

pub use error::{Error, Result};
pub use num::GaussianRational;
pub use series::{solve_implicit, TruncatedSeries, Valuation};
