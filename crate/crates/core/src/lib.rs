//! Structure-preserving particle-in-cell kit for the reduced 1d2v
//! Vlasov–Maxwell system on a periodic interval.
//!
//! Fields are discretized with compatible periodic B-splines (`splines`,
//! `fields`), particles carry fixed weights (`particles`), and the
//! `integrators` module provides the explicit Hamiltonian splitting, the
//! average-vector-field Strang scheme and the Gauss-law preserving
//! discrete-gradient scheme with optional substepping. `stability` holds the
//! von Neumann analysis and `harness` the test cases and time loop.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

// `!(x > 0)` checks below also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fields;
pub mod harness;
pub mod integrators;
pub mod particles;
pub mod scalar;
pub mod splines;
pub mod stability;

pub use error::{PicError, Result};
pub use scalar::Real;

pub type Space = splines::SplineSpace<f64>;
pub type Circulant = splines::CirculantOperator<f64>;
pub type Fields = fields::FieldState<f64>;
pub type Operators = fields::FemOperators<f64>;
pub type Particles = particles::Species<f64>;
pub type State = integrators::PicState<f64>;
pub type Config = integrators::IntegratorConfig<f64>;
