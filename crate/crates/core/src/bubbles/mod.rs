//! Bubble profiles, the multi-bubble ansatz, its correction and residual.

pub mod ansatz;
pub mod correction;
pub mod profile;
pub mod residual;

pub use ansatz::{cutoff_eta, Ansatz, AnsatzConfig};
pub use correction::{correction_p0, p0_default_grid, q0_radial, solve_p0, CorrectionProfile};
pub use profile::*;
pub use residual::{project_sampler, residual_parts, residual_s, ProjectionOptions, ResidualField, ResidualParts};
