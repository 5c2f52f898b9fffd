//! Generalized unified gas kinetic scheme for one-dimensional linear kinetic
//! equations with a discrete-velocity collision operator.

pub mod error;
pub mod exec;
pub mod harness;
pub mod linalg;
pub mod oracles;
pub mod report;
pub mod scenario;
pub mod scheme;
pub mod velocity;

pub use error::{Error, Result};
pub use exec::Execution;
pub use scenario::{initialize_state, load_scenario, Scenario};
pub use scheme::{KineticState, SchemeParams, Ugks, Variant};
pub use velocity::{CollisionOperator, OperatorKind, VelocityGrid};
