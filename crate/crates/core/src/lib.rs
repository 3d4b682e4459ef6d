//! Similarity solutions for swirling vortices whose velocity decays like
//! `r^{-b}`: closed forms, nonexistence witnesses, finite-difference solvers
//! for the inviscid and viscous boundary-value problems, residual oracles and
//! field reconstruction.

pub mod analytic;
pub mod banded;
pub mod error;
pub mod fields;
pub mod jet;
pub mod model;
pub mod newton;
pub mod quad;
pub mod residuals;
pub mod solver_inviscid;
pub mod solver_viscous;
pub mod specfun;
pub mod stencil;

pub use analytic::{ClosedFormSolution, OmegaLimitClass, OmegaLimit};
pub use error::{Result, VortexError};

pub use jet::Jet;
pub use fields::{FieldGrid, FieldKind, Point, RayleighSample, Stability, Streamline};
pub use model::{Case, GridSpec, Mesh, Profile, ProfilePoint, SolutionFile, VortexParams};
pub use residuals::{EquationId, Form, GoverningMode, ResidualReport};
pub use solver_inviscid::{InviscidProblem, PSolution};
pub use solver_viscous::{LayerMeasurement, ViscousProblem, ViscousSolution};
pub use specfun::HyperParams;
