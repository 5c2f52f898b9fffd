//! Generalized unified gas kinetic scheme.
//!
//! The interface distribution comes from a relaxation form `D = (D − λ⋆I) + λ⋆I`
//! of the collision operator. Its time integral over one step reduces to three
//! scalar weights ([`FluxCoefficients`]) and the vector `U = D⁺V`, so no
//! spectral decomposition of `D` is needed.

mod coefficients;
mod flux;
mod step;

pub use coefficients::{flux_coefficients, FluxCoefficients, SchemeParams, Variant};
pub use flux::{half_moments, macro_flux, micro_flux, HalfMoments};
pub use step::{KineticState, RunOutput, Snapshot, Ugks};
