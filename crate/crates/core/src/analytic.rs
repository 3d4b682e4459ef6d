//! Closed-form solutions and the viscous nonexistence analysis.

use crate::error::{Result, VortexError};
use crate::jet::{Jet, ORDER};
use crate::model::{Case, Profile, VortexParams};
use crate::specfun::{self, HyperParams};

/// A solution known in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormSolution {
    /// Pure rotation `F = G = 0`, `Omega = C_omega`, valid for every `b`.
    Trivial { params: VortexParams },
    /// Inviscid `b = 1` family `F = C1 sqrt(x(1-x))`, `Omega = C_omega`.
    InviscidB1 { c1: f64, c_omega: f64 },
}

impl ClosedFormSolution {
    pub fn params(&self) -> VortexParams {
        match *self {
            ClosedFormSolution::Trivial { params } => params,
            ClosedFormSolution::InviscidB1 { c_omega, .. } => VortexParams {
                b: 1.0,
                nu: 0.0,
                c_omega,
            },
        }
    }

    /// Generator tag used in solution files.
    pub fn generator(&self) -> &'static str {
        match self {
            ClosedFormSolution::Trivial { .. } => "trivial",
            ClosedFormSolution::InviscidB1 { .. } => "analytic-b1",
        }
    }

    /// Upper-case profile with exact derivatives.
    pub fn profile(&self) -> Profile {
        match *self {
            ClosedFormSolution::Trivial { params } => {
                let w = params.c_omega;
                Profile::from_fn(params, Case::Upper, move |_| {
                    [Jet::constant(0.0), Jet::constant(0.0), Jet::constant(w)]
                })
            }
            ClosedFormSolution::InviscidB1 { c1, c_omega } => {
                Profile::from_fn(self.params(), Case::Upper, move |x| {
                    let f = (x * (1.0 - x)).sqrt() * c1;
                    let g = (1.0 - 2.0 * x) * (1.0 + x).sqrt() / (2.0 * x.sqrt()) * c1;
                    [f, g, Jet::constant(c_omega)]
                })
            }
        }
    }
}

pub fn trivial_solution(params: VortexParams) -> ClosedFormSolution {
    ClosedFormSolution::Trivial { params }
}

/// The inviscid `b = 1` family; `C1 = 0` gives the trivial solution.
pub fn inviscid_b1(c1: f64, c_omega: f64) -> Result<ClosedFormSolution> {
    if c_omega == 0.0 || !c_omega.is_finite() || !c1.is_finite() {
        return Err(VortexError::Domain(format!(
            "need finite C1 and nonzero C_omega, got C1 = {c1}, C_omega = {c_omega}"
        )));
    }
    if c1 == 0.0 {
        return Ok(ClosedFormSolution::Trivial {
            params: VortexParams::inviscid(1.0, c_omega)?,
        });
    }
    Ok(ClosedFormSolution::InviscidB1 { c1, c_omega })
}

/// Hand-differentiated stack of `F = C1 sqrt(u)`, `u = x(1-x)`:
/// `F'' = -C1 / (4 u^{3/2})`, `F''' = 3 C1 (1-2x) / (8 u^{5/2})`,
/// `F'''' = 3 C1 (16u - 5) / (16 u^{7/2})`.
pub fn b1_meridional_stack(c1: f64, x: f64) -> [f64; 5] {
    let u = x * (1.0 - x);
    let su = u.sqrt();
    [
        c1 * su,
        c1 * (1.0 - 2.0 * x) / (2.0 * su),
        -c1 / (4.0 * u * su),
        3.0 * c1 * (1.0 - 2.0 * x) / (8.0 * u * u * su),
        3.0 * c1 * (16.0 * u - 5.0) / (16.0 * u * u * u * su),
    ]
}

/// Pressure of the `b = 1` family,
/// `p = -(C_omega^2 - C1^2 (1-x)) / (2 r^2) + T` with `r^2 = R^2 (1-x^2)`.
pub fn pressure_b1(r_big: f64, x: f64, c1: f64, c_omega: f64, t: f64) -> Result<f64> {
    if !(r_big > 0.0) {
        return Err(VortexError::Domain(format!("R must be positive, got {r_big}")));
    }
    if !(0.0..1.0).contains(&x) {
        return Err(VortexError::Pole {
            x,
            what: "pressure is singular on the axis".into(),
        });
    }
    let r2 = r_big * r_big * (1.0 - x * x);
    Ok(-(c_omega * c_omega - c1 * c1 * (1.0 - x)) / (2.0 * r2) + t)
}

/// The zero isobar `x* = 1 - (C_omega / C1)^2` of the `b = 1` family with
/// `T = 0`, or `None` when it falls outside `[0, 1)`.
pub fn zero_isobar_x(c1: f64, c_omega: f64) -> Result<Option<f64>> {
    if c1 == 0.0 {
        return Err(VortexError::Domain("zero isobar undefined for C1 = 0".into()));
    }
    let xs = 1.0 - (c_omega / c1).powi(2);
    Ok(if (0.0..1.0).contains(&xs) { Some(xs) } else { None })
}

/// Whether the zero isobar is a cone opening upward (`C1^2 > C_omega^2`).
pub fn isobar_cone_opens_upward(c1: f64, c_omega: f64) -> bool {
    c1 * c1 > c_omega * c_omega
}

/// Viscous azimuthal profile solving `Omega(0) = 0`, `Omega'(0) = C`:
/// `Omega = C x (1-x^2)^((b-1)/2) 2F1((1-b)/2, b/2; 3/2; x^2)`.
pub fn viscous_omega_hyper(b: f64, c: f64, x: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(VortexError::Domain(format!("b must be positive, got {b}")));
    }
    if !(0.0..1.0).contains(&x) {
        return Err(VortexError::Domain(format!("x must lie in [0, 1), got {x}")));
    }
    let hyp = specfun::gauss_2f1(HyperParams::for_model_exponent(b), x * x)?;
    Ok(c * x * (1.0 - x * x).powf(0.5 * (b - 1.0)) * hyp)
}

/// Jet of `2F1(a, b; c; z)` through the derivative identity
/// `d^k/dz^k 2F1 = (a)_k (b)_k / (c)_k 2F1(a+k, b+k; c+k; z)`.
pub fn hyper_jet(p: HyperParams, z: Jet) -> Jet {
    let z0 = z.value();
    let mut outer = [0.0; ORDER + 1];
    let mut fact = 1.0;
    for (k, o) in outer.iter_mut().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        let ku = k as u32;
        let coeff =
            specfun::pochhammer(p.a, ku) * specfun::pochhammer(p.b, ku) / specfun::pochhammer(p.c, ku) / fact;
        *o = match specfun::gauss_2f1(p.shifted(k), z0) {
            Ok(v) => coeff * v,
            Err(_) => f64::NAN,
        };
    }
    z.compose(&outer)
}

/// Upper-case profile `F = G = 0` with the hypergeometric `Omega`.
pub fn viscous_omega_profile(params: VortexParams, c: f64) -> Profile {
    let b = params.b;
    let hp = HyperParams::for_model_exponent(b);
    Profile::from_fn(params, Case::Upper, move |x| {
        let w = x * c * (1.0 - x * x).powf(0.5 * (b - 1.0)) * hyper_jet(hp, x * x);
        [Jet::constant(0.0), Jet::constant(0.0), w]
    })
}

/// Limit of the hypergeometric `Omega` as `x -> 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaLimit {
    DivergesToInfinity,
    TendsToZero,
    FiniteNonzero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaLimitClass {
    pub b: f64,
    pub classification: OmegaLimit,
    /// `2F1((1-b)/2, b/2; 3/2; 1)`.
    pub gamma_factor: f64,
}

/// Classifies `lim_{x->1} Omega` from the sign of `(b-1)/2` and the Gamma
/// formula for the hypergeometric factor.
pub fn omega_limit_class(b: f64) -> Result<OmegaLimitClass> {
    if !(b > 0.0) {
        return Err(VortexError::Domain(format!("b must be positive, got {b}")));
    }
    if b == 1.0 {
        return Err(VortexError::Domain(
            "b = 1 is the Serrin case, not a nonexistence witness".into(),
        ));
    }
    let gamma_factor = specfun::gauss_2f1_at_one(b);
    let classification = if b > 1.0 {
        OmegaLimit::TendsToZero
    } else if gamma_factor == 0.0 {
        OmegaLimit::FiniteNonzero
    } else {
        OmegaLimit::DivergesToInfinity
    };
    Ok(OmegaLimitClass {
        b,
        classification,
        gamma_factor,
    })
}
