//! Random potentials with inverse-Gaussian marginals and the mixing measures
//! of the vertex reinforced jump process and the edge reinforced random walk.
//!
//! * [`graph`]: conductance networks, distances, spanning-tree sums.
//! * [`linalg`]: triangular elimination of `2β − P`, Green function columns.
//! * [`beta_family`]: the family `ν^{W,θ}`, its exact sampler and closed forms.
//! * [`bridge`]: the change of variables `β ↔ (u, γ)` and the density `Q^{W,φ}`.
//! * [`process`]: VRJP and ERRW simulators.
//! * [`magic`]: the ERRW mixing measure ("magic formula") and path probabilities.
//! * [`verify`]: statistical tests, quadrature and the verification suites.

// Matrix code indexes several arrays with one loop variable.
#![allow(clippy::needless_range_loop)]

pub mod beta_family;
pub mod bridge;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod magic;
pub mod process;
pub mod rng;
pub mod verify;

pub use beta_family::{BetaField, BetaSampler, FamilyParams, IGParams};
pub use bridge::{GammaComponent, UField};
pub use error::{DensityError, GraphError, LinalgError, ParamError, PathError, QuadratureError};
pub use graph::{Network, VertexOrdering};
pub use linalg::{PotentialMatrix, TriangularFactors};
pub use magic::{EdgeInitialWeights, MagicPoint};
pub use process::{ErrwState, VrjpState};
