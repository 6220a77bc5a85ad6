//! Safe regions and conditional sampling of frequency-violating power
//! disturbances.
//!
//! The library models the post-disturbance frequency response of a
//! Kron-reduced transmission network under linearized swing dynamics,
//! characterizes the set of step disturbances whose rate of change of
//! frequency (RoCoF) stays below a threshold as a convex polytope, and
//! samples disturbances *conditioned on a violation* with a
//! Metropolis-Hastings chain whose random-walk proposals are translated
//! through the safe region ("ghost" proposals).
//!
//! Pipeline, end to end:
//!
//! 1. [`matpower`] parses a case file into a [`grid::GridCase`];
//! 2. [`grid`] builds the susceptance-weighted Laplacian and Kron-reduces
//!    it to a generator-only [`grid::ReducedNetwork`];
//! 3. [`dynamics`] turns the reduced network into the linear state matrix
//!    and evaluates frequency/RoCoF trajectories via the matrix
//!    exponential;
//! 4. [`region`] assembles safe regions as half-space intersections and
//!    answers membership/ray-clipping queries;
//! 5. [`density`] evaluates the joint disturbance density;
//! 6. [`sampler`] runs the conditional chain on the region complement;
//! 7. [`stats`] reduces the retained samples to violation statistics.

// Validation uses `!(x > 0.0)` on purpose: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csvfmt;
pub mod density;
pub mod dynamics;
pub mod grid;
pub mod matpower;
pub mod oracle;
pub mod region;
pub mod sampler;
pub mod stats;

pub use density::DensityModel;
pub use dynamics::{StateMatrix, SystemFreqParams, Trajectory};
pub use grid::{GridCase, MachineParams, ReducedNetwork};
pub use region::{HalfSpace, Polytope, RayHit};
pub use sampler::{ChainRun, SamplerConfig};
pub use stats::StatsReport;
