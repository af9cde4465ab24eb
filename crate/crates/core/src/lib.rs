//! Symmetry-preserving four-point difference schemes for third-order ODEs
//! invariant under `Sim(2)`, `SL(2, R)` acting on `y`, and `GL(2, R)`.

// `!(v > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffapprox;
pub mod error;
pub mod groups;
pub mod invariants;
pub mod odes;
pub mod real;
pub mod schemes;
pub mod stencil;

pub use error::{Error, Result};
pub use groups::{AlgebraId, ElementSampler, GroupElement};
pub use odes::{Forcing, InitialData, OdeSpec};
pub use schemes::{NewtonReport, SchemeKind, SchemeSpec, StepState};
pub use stencil::{Jet3, Point, SpacingDirection, Stencil4};
