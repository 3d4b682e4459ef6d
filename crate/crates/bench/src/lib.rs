//! Fixtures shared by the criterion benches.

use vortex_core::analytic::inviscid_b1;
use vortex_core::solver_inviscid::{self, recover_profile};
use vortex_core::{InviscidProblem, Mesh, Profile};

/// The closed-form `b = 1` profile with `C1 = 4 sqrt(2)`, `C_omega = 1`.
pub fn b1_profile() -> Profile {
    inviscid_b1(4.0 * 2f64.sqrt(), 1.0).expect("valid constants").profile()
}

/// The inviscid problem at `b`, `c = 0.25` on the default mesh.
pub fn inviscid_problem(b: f64) -> InviscidProblem {
    InviscidProblem::new(b, 0.25, Mesh::uniform(1e-3).expect("valid step")).expect("valid parameters")
}

/// A converged inviscid profile, as loaded by the field tools.
pub fn solved_profile(b: f64) -> Profile {
    let problem = inviscid_problem(b);
    let sol = solver_inviscid::solve(&problem).expect("converges");
    recover_profile(&sol, &problem).expect("recoverable")
}
