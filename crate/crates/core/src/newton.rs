//! Damped Newton iteration for square nonlinear systems with banded Jacobians.

use crate::banded::Banded;
use crate::error::{Result, VortexError};

pub trait NewtonSystem {
    fn residual(&self, u: &[f64]) -> Vec<f64>;
    fn jacobian(&self, u: &[f64]) -> Banded;
    /// Whether an iterate may be accepted by the line search.
    fn admissible(&self, _u: &[f64]) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Convergence threshold on the sup-norm of the accepted correction.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 50,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
    pub step_norm: f64,
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.abs() > m || x.is_nan() { x.abs() } else { m })
}

/// Newton's method with backtracking: each step is halved until the iterate
/// is admissible and the residual sup-norm decreases.
pub fn damped_newton<S: NewtonSystem>(sys: &S, u0: Vec<f64>, opts: NewtonOptions) -> Result<NewtonOutcome> {
    let mut u = u0;
    let mut r = sys.residual(&u);
    let mut rn = sup_norm(&r);
    if !rn.is_finite() {
        return Err(VortexError::NonConvergence {
            iterations: 0,
            residual: rn,
        });
    }
    for it in 0..opts.max_iter {
        let jac = sys.jacobian(&u);
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let du = jac.solve(&neg).map_err(|_| VortexError::NonConvergence {
            iterations: it,
            residual: rn,
        })?;
        let dn = sup_norm(&du);
        if dn <= opts.tol {
            u.iter_mut().zip(&du).for_each(|(a, d)| *a += d);
            let rn = sup_norm(&sys.residual(&u));
            return Ok(NewtonOutcome {
                u,
                iterations: it + 1,
                residual_norm: rn,
                step_norm: dn,
            });
        }
        let mut lam = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a + lam * d).collect();
            if sys.admissible(&trial) {
                let rt = sys.residual(&trial);
                let rtn = sup_norm(&rt);
                if rtn < rn {
                    accepted = Some((trial, rt, rtn));
                    break;
                }
            }
            lam *= 0.5;
        }
        match accepted {
            Some((trial, rt, rtn)) => {
                u = trial;
                r = rt;
                rn = rtn;
                if lam * dn <= opts.tol {
                    return Ok(NewtonOutcome {
                        u,
                        iterations: it + 1,
                        residual_norm: rn,
                        step_norm: lam * dn,
                    });
                }
            }
            // The residual sits on its rounding floor: a tiny full step that
            // cannot decrease it further means the iteration has converged.
            // The step is still taken since it is below the noise level.
            None if dn <= 1e3 * opts.tol => {
                u.iter_mut().zip(&du).for_each(|(a, d)| *a += d);
                let rn = sup_norm(&sys.residual(&u));
                return Ok(NewtonOutcome {
                    u,
                    iterations: it,
                    residual_norm: rn,
                    step_norm: dn,
                })
            }
            None => {
                return Err(VortexError::NonConvergence {
                    iterations: it,
                    residual: rn,
                })
            }
        }
    }
    Err(VortexError::NonConvergence {
        iterations: opts.max_iter,
        residual: rn,
    })
}
