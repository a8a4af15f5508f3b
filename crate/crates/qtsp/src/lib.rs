//! Toolkit for the quadratic traveling salesperson problem (QTSP), where the
//! cost of a tour is attached to consecutive customer *triples* rather than
//! edges: turn-dependent routing, angle-penalized path planning, and similar
//! settings.
//!
//! The crate covers the full desk-scale workflow:
//!
//! * [`instance`]: benchmark generation on an integer grid (angle and
//!   angle-plus-distance cost families), explicit cost tensors, and a text
//!   file format with exact 12-decimal cost serialization.
//! * [`oracle`]: brute-force reference solvers used to validate everything
//!   else on small inputs.
//! * [`didp`]: a dynamic-programming state space with an admissible dual
//!   bound, solved exactly by memoized best-first search or anytime by
//!   complete anytime beam search (CABS).
//! * [`model`]: MILP / MIQP / CP formulations as text exports plus in-process
//!   checkers that score and verify candidate solutions.
//! * [`metrics`]: optimality gap, primal gap, primal integral, and report
//!   aggregation.
//!
//! Numeric kernels are generic over the floating-point scalar through the
//! [`Scalar`] trait; the aliases below fix `f64` for ordinary use.
//!
//! ```
//! use qtsp::{instance, oracle};
//!
//! let inst: qtsp::Instance =
//!     instance::generate_instance(6, 42, instance::CostKind::Angle).unwrap();
//! let (tour, cost) = oracle::brute_force_optimal(&inst).unwrap();
//! assert_eq!(tour.order()[0], 0);
//! assert!(cost > 0.0);
//! ```

pub mod didp;
pub mod error;
pub mod instance;
pub mod io;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod tour;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tour::Tour;

/// Instance with `f64` costs, the default working type.
pub type Instance = instance::Instance<f64>;
/// Dense cost tensor over `f64`.
pub type CostTensor = instance::CostTensor<f64>;
/// Cost family selector over `f64` (rho parameter).
pub type CostKind = instance::CostKind<f64>;
/// Per-customer minima backing the DP dual bound, over `f64`.
pub type BoundTables = didp::BoundTables<f64>;
/// Solver outcome (incumbent, bound, trace) over `f64`.
pub type SolveOutcome = didp::SolveOutcome<f64>;
/// Anytime solver trace over `f64`.
pub type AnytimeTrace = didp::AnytimeTrace<f64>;
