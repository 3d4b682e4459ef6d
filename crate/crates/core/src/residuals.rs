//! Convective (`C_i`) and viscous (`D_i`) angular factors of the momentum
//! equations, their compatibility composites, and residual reports for the
//! reduced ODE systems.
//!
//! Every quantity is available in upper case `(F, G, Omega)`, lower case
//! `(f, g, omega)` and in the trigonometric form written with
//! `alpha = acos(x)`; the forms are algebraically identical and are compared
//! against each other in the tests. Derivatives `'` are taken in `x`, while
//! composites use the angle derivative `d/dalpha = -sqrt(1-x^2) d/dx`.

use crate::error::{Result, VortexError};
use crate::model::{convert_point, Case, GridSpec, Mesh, Profile, ProfilePoint, VortexParams};
use serde::Serialize;
use std::fmt;
use std::fmt::Write as _;

/// Which variable set an appendix expression is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `(F, G, Omega)` with trigonometric coefficients in `alpha`.
    Alpha,
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EquationId {
    C3eq,
    C1C2eq,
    D3eq,
    D1D2eq,
    SerrinSys1,
    SerrinSys2,
    #[serde(rename = "FullNS_R")]
    FullNsR,
    #[serde(rename = "FullNS_alpha")]
    FullNsAlpha,
    #[serde(rename = "FullNS_theta")]
    FullNsTheta,
    Continuity,
}

impl fmt::Display for EquationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EquationId::C3eq => "C3eq",
            EquationId::C1C2eq => "C1C2eq",
            EquationId::D3eq => "D3eq",
            EquationId::D1D2eq => "D1D2eq",
            EquationId::SerrinSys1 => "SerrinSys1",
            EquationId::SerrinSys2 => "SerrinSys2",
            EquationId::FullNsR => "FullNS_R",
            EquationId::FullNsAlpha => "FullNS_alpha",
            EquationId::FullNsTheta => "FullNS_theta",
            EquationId::Continuity => "Continuity",
        };
        f.write_str(s)
    }
}

/// The reduced system that governs a given `(b, nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GoverningMode {
    /// `nu = 0`: the two reduced Euler equations in `(f, Omega)`.
    InviscidReduced,
    /// `nu > 0`, `b = 1`: the coupled fourth/second order system.
    ViscousB1,
    /// `nu > 0`, `b != 1, 2`: convective and viscous parts vanish separately.
    ViscousSplit,
    /// `nu > 0`, `b = 2`, where `F` vanishes identically.
    ViscousB2,
}

impl GoverningMode {
    pub fn for_params(b: f64, nu: f64) -> Self {
        if nu == 0.0 {
            GoverningMode::InviscidReduced
        } else if b == 1.0 {
            GoverningMode::ViscousB1
        } else if b == 2.0 {
            GoverningMode::ViscousB2
        } else {
            GoverningMode::ViscousSplit
        }
    }
}

/// Pointwise residuals of one equation.
///
/// `scale[i]` is the sum of the magnitudes of the individual terms at node
/// `i`, so `|residual| / scale` measures cancellation relative to the size
/// of the terms. `coords` is set for reports sampled in the `(r, z)` plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub equation: EquationId,
    /// Power of `(1-x^2)` multiplied into the residual before reporting.
    pub prefactor: String,
    pub nodes: Vec<f64>,
    pub coords: Option<Vec<[f64; 2]>>,
    pub residuals: Vec<f64>,
    pub scale: Vec<f64>,
    pub sup_norm: f64,
    /// Root mean square of the residuals.
    pub l2_norm: f64,
}

impl ResidualReport {
    pub fn new(equation: EquationId, prefactor: &str, nodes: Vec<f64>, residuals: Vec<f64>, scale: Vec<f64>) -> Self {
        let (sup_norm, l2_norm) = norms(&residuals);
        ResidualReport {
            equation,
            prefactor: prefactor.to_string(),
            nodes,
            coords: None,
            residuals,
            scale,
            sup_norm,
            l2_norm,
        }
    }

    /// Largest `|r_i| / max(scale_i, floor)`.
    pub fn relative_sup_norm(&self, floor: f64) -> f64 {
        self.residuals
            .iter()
            .zip(&self.scale)
            .map(|(r, s)| r.abs() / s.max(floor))
            .fold(0.0, f64::max)
    }

    /// The report restricted to nodes with `lo <= x <= hi`.
    pub fn restricted(&self, lo: f64, hi: f64) -> ResidualReport {
        let keep: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i] >= lo && self.nodes[i] <= hi)
            .collect();
        let mut out = ResidualReport::new(
            self.equation,
            &self.prefactor,
            keep.iter().map(|&i| self.nodes[i]).collect(),
            keep.iter().map(|&i| self.residuals[i]).collect(),
            keep.iter().map(|&i| self.scale[i]).collect(),
        );
        out.coords = self.coords.as_ref().map(|c| keep.iter().map(|&i| c[i]).collect());
        out
    }

    /// CSV lines without header: `x,equation,residual` or
    /// `r,z,equation,residual`.
    fn write_rows(&self, out: &mut String) {
        for i in 0..self.residuals.len() {
            match &self.coords {
                Some(c) => {
                    let _ = writeln!(
                        out,
                        "{:.16e},{:.16e},{},{:.16e}",
                        c[i][0], c[i][1], self.equation, self.residuals[i]
                    );
                }
                None => {
                    let _ = writeln!(out, "{:.16e},{},{:.16e}", self.nodes[i], self.equation, self.residuals[i]);
                }
            }
        }
    }

    pub fn to_csv(&self) -> String {
        reports_to_csv(std::slice::from_ref(self))
    }
}

/// Concatenates reports into one CSV table. Reports mixing `x` nodes and
/// `(r, z)` samples use the layout of the first report for the header.
pub fn reports_to_csv(reports: &[ResidualReport]) -> String {
    let planar = reports.first().map(|r| r.coords.is_some()).unwrap_or(false);
    let mut out = String::from(if planar {
        "r,z,equation_id,residual\n"
    } else {
        "x,equation_id,residual\n"
    });
    for r in reports {
        r.write_rows(&mut out);
    }
    out
}

fn norms(r: &[f64]) -> (f64, f64) {
    if r.is_empty() {
        return (0.0, 0.0);
    }
    let sup = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l2 = (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt();
    (sup, l2)
}

fn interior_x(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(VortexError::Pole {
            x,
            what: "appendix expressions are singular at the endpoints".into(),
        })
    }
}

fn finite<const N: usize>(x: f64, v: [f64; N], what: &str) -> Result<[f64; N]> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(VortexError::Pole { x, what: what.into() })
    }
}

/// Stacks at `x` in `case`, requiring only the listed derivative counts of
/// `(f, g, omega)` to be finite.
fn partial_stacks(x: f64, profile: &Profile, case: Case, need: [usize; 3]) -> Result<ProfilePoint> {
    let raw = profile.eval_raw(x)?;
    let p = convert_point(x, profile.params().b, &raw, profile.case(), case);
    let ok = p.f[..need[0]].iter().all(|v| v.is_finite())
        && p.g[..need[1]].iter().all(|v| v.is_finite())
        && p.omega[..need[2]].iter().all(|v| v.is_finite());
    if ok {
        Ok(p)
    } else {
        Err(VortexError::Pole {
            x,
            what: "profile derivative is not finite".into(),
        })
    }
}

fn stacks(x: f64, profile: &Profile, form: Form) -> Result<ProfilePoint> {
    interior_x(x)?;
    let case = match form {
        Form::Lower => Case::Lower,
        Form::Upper | Form::Alpha => Case::Upper,
    };
    profile.eval_in(x, case)
}

/// `(C1, C2, C3)` evaluated with the lower-case expressions.
#[allow(non_snake_case)]
pub fn eval_C(x: f64, profile: &Profile) -> Result<[f64; 3]> {
    eval_C_form(x, profile, Form::Lower)
}

#[allow(non_snake_case)]
pub fn eval_C_form(x: f64, profile: &Profile, form: Form) -> Result<[f64; 3]> {
    let p = stacks(x, profile, form)?;
    let b = profile.params().b;
    let v = match form {
        Form::Alpha => c_alpha(x, b, &p),
        Form::Upper => c_upper(x, b, &p),
        Form::Lower => c_lower(x, b, &p),
    };
    finite(x, v, "convective factor is not finite")
}

/// `(D1, D2, D3)` evaluated with the lower-case expressions.
#[allow(non_snake_case)]
pub fn eval_D(x: f64, profile: &Profile) -> Result<[f64; 3]> {
    eval_D_form(x, profile, Form::Lower)
}

#[allow(non_snake_case)]
pub fn eval_D_form(x: f64, profile: &Profile, form: Form) -> Result<[f64; 3]> {
    let p = stacks(x, profile, form)?;
    let b = profile.params().b;
    let v = match form {
        Form::Alpha => d_alpha(x, b, &p),
        Form::Upper => d_upper(x, b, &p),
        Form::Lower => d_lower(x, b, &p),
    };
    finite(x, v, "viscous factor is not finite")
}

/// Closed forms of `dC1/dalpha + 2b C2` and `dD1/dalpha + (1+b) D2`, lower
/// case.
pub fn eval_composites(x: f64, profile: &Profile) -> Result<(f64, f64)> {
    eval_composites_form(x, profile, Form::Lower)
}

/// Composites in the requested form; the trigonometric form shares the
/// upper-case expression.
pub fn eval_composites_form(x: f64, profile: &Profile, form: Form) -> Result<(f64, f64)> {
    let p = stacks(x, profile, form)?;
    let b = profile.params().b;
    let v = match form {
        Form::Upper | Form::Alpha => composites_upper(x, b, &p),
        Form::Lower => composites_lower(x, b, &p),
    };
    let [c, d] = finite(x, v, "composite is not finite")?;
    Ok((c, d))
}

/// The composites rebuilt from `C1, C2, D1, D2` with a centered difference
/// of step `h` in `alpha`.
pub fn numerical_composites(x: f64, profile: &Profile, h: f64) -> Result<(f64, f64)> {
    interior_x(x)?;
    let b = profile.params().b;
    let a = x.acos();
    let (xp, xm) = ((a + h).cos(), (a - h).cos());
    let cp = eval_C_form(xp, profile, Form::Upper)?;
    let cm = eval_C_form(xm, profile, Form::Upper)?;
    let dp = eval_D_form(xp, profile, Form::Upper)?;
    let dm = eval_D_form(xm, profile, Form::Upper)?;
    let c0 = eval_C_form(x, profile, Form::Upper)?;
    let d0 = eval_D_form(x, profile, Form::Upper)?;
    let c = (cp[0] - cm[0]) / (2.0 * h) + 2.0 * b * c0[1];
    let d = (dp[0] - dm[0]) / (2.0 * h) + (1.0 + b) * d0[1];
    Ok((c, d))
}

/// `C3`, `D3` and the two composites after eliminating the radial component
/// through continuity (valid for `b != 2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Substituted {
    pub c3: f64,
    pub d3: f64,
    pub c_comp: f64,
    pub d_comp: f64,
}

/// Substituted forms evaluated on the meridional and azimuthal components
/// only; the radial component of `profile` is ignored.
pub fn eval_substituted(x: f64, profile: &Profile, case: Case) -> Result<Substituted> {
    let b = profile.params().b;
    if b == 2.0 {
        return Err(VortexError::Domain("substituted forms require b != 2".into()));
    }
    let form = match case {
        Case::Upper => Form::Upper,
        Case::Lower => Form::Lower,
    };
    let p = stacks(x, profile, form)?;
    let v = match case {
        Case::Upper => substituted_upper(x, b, &p),
        Case::Lower => substituted_lower(x, b, &p),
    };
    let [c3, d3, c_comp, d_comp] = finite(x, v, "substituted form is not finite")?;
    Ok(Substituted { c3, d3, c_comp, d_comp })
}

fn c_upper(x: f64, b: f64, p: &ProfilePoint) -> [f64; 3] {
    let s = 1.0 - x * x;
    let q = s.sqrt();
    let w = s.powf(-b);
    let (f, g, o) = (&p.f, &p.g, &p.omega);
    [
        w * (-f[0] * f[0] - b * g[0] * g[0] - o[0] * o[0] - f[0] * (q * g[1] + b * x * g[0] / q)),
        w * (-x / q * (b * f[0] * f[0] + o[0] * o[0]) - f[0] * (q * f[1] - (1.0 - b) * g[0])),
        w * ((1.0 - b) * g[0] * o[0] - f[0] * (q * o[1] - (1.0 - b) * x * o[0] / q)),
    ]
}

fn c_lower(x: f64, b: f64, p: &ProfilePoint) -> [f64; 3] {
    let s = 1.0 - x * x;
    let q = s.sqrt();
    let (f, g, w) = (&p.f, &p.g, &p.omega);
    [
        (-f[0] * f[0] - b * g[0] * g[0] - w[0] * w[0] - f[0] * (q * g[1] + x * g[0] / q)) / s,
        (-x / q * (f[0] * f[0] + w[0] * w[0]) - f[0] * (q * f[1] - (1.0 - b) * g[0])) / s,
        ((1.0 - b) * g[0] * w[0] - q * f[0] * w[1]) / s,
    ]
}

fn c_alpha(x: f64, b: f64, p: &ProfilePoint) -> [f64; 3] {
    let a = x.acos();
    let (sn, cs) = a.sin_cos();
    let cot = cs / sn;
    let w = sn.powf(-2.0 * b);
    let (f, g, o) = (&p.f, &p.g, &p.omega);
    [
        -(f[0] * f[0] + b * g[0] * g[0] + o[0] * o[0] + b * f[0] * g[0] * cot + f[0] * g[1] * sn) * w,
        (-(b * f[0] * f[0] + o[0] * o[0]) * cot + (1.0 - b) * f[0] * g[0] - f[0] * f[1] * sn) * w,
        ((1.0 - b) * g[0] * o[0] + f[0] * ((1.0 - b) * o[0] * cot - o[1] * sn)) * w,
    ]
}

fn d_upper(x: f64, b: f64, p: &ProfilePoint) -> [f64; 3] {
    let s = 1.0 - x * x;
    let q = s.sqrt();
    let w = s.powf(-0.5 * b);
    let (f, g, o) = (&p.f, &p.g, &p.omega);
    [
        w * (s * g[2] - 2.0 * (1.0 - b) * x * g[1] - (2.0 * s - b * b) / s * g[0] - 2.0 * (1.0 - b) * x / q * f[0]
            + 2.0 * q * f[1]),
        w * (s * f[2] - 2.0 * (1.0 - b) * x * f[1] - (1.0 - b * b) / s * f[0] - 2.0 * b * x / q * g[0] - 2.0 * q * g[1]),
        w * (s * o[2] - 2.0 * (1.0 - b) * x * o[1] - (1.0 - b * b) / s * o[0]),
    ]
}

fn d_lower(x: f64, b: f64, p: &ProfilePoint) -> [f64; 3] {
    let s = 1.0 - x * x;
    let q = s.sqrt();
    let (f, g, w) = (&p.f, &p.g, &p.omega);
    [
        (s * g[2] + (1.0 / s - (2.0 - b) * (1.0 + b)) * g[0] + 2.0 * q * f[1]) / q,
        (s * f[2] - b * (1.0 - b) * f[0] - 2.0 * x / q * g[0] - 2.0 * q * g[1]) / q,
        (s * w[2] - b * (1.0 - b) * w[0]) / q,
    ]
}

fn d_alpha(x: f64, b: f64, p: &ProfilePoint) -> [f64; 3] {
    let a = x.acos();
    let (sn, cs) = a.sin_cos();
    let (s2, cot, csc2) = (sn * sn, cs / sn, 1.0 / (sn * sn));
    let w = sn.powf(-b);
    let (f, g, o) = (&p.f, &p.g, &p.omega);
    [
        (g[2] * s2 - 2.0 * (1.0 - b) * g[1] * cs - (1.0 - b * b - (2.0 * a).cos()) * g[0] * csc2
            - 2.0 * (1.0 - b) * f[0] * cot
            + 2.0 * f[1] * sn)
            * w,
        (f[2] * s2 - 2.0 * (1.0 - b) * f[1] * cs - (1.0 - b * b) * f[0] * csc2 - 2.0 * b * g[0] * cot - 2.0 * g[1] * sn)
            * w,
        (o[2] * s2 - 2.0 * (1.0 - b) * o[1] * cs - (1.0 - b * b) * o[0] * csc2) * w,
    ]
}

fn composites_upper(x: f64, b: f64, p: &ProfilePoint) -> [f64; 2] {
    let s = 1.0 - x * x;
    let q = s.sqrt();
    let (f, g, o) = (&p.f, &p.g, &p.omega);
    let c = s.powf(-b)
        * (2.0 * b * x / q * ((1.0 - b) * f[0] * f[0] + b * g[0] * g[0])
            + 2.0 * q * ((1.0 - b) * f[0] * f[1] + b * g[0] * g[1] + o[0] * o[1])
            + s * (f[1] * g[1] + f[0] * g[2])
            + b * (3.0 - 2.0 * b - 2.0 * (1.0 - 2.0 * b) * x * x) / s * f[0] * g[0]
            + b * x * f[1] * g[0]
            - (1.0 - 3.0 * b) * x * f[0] * g[1]);
    let d = s.powf(-0.5 * (2.0 + b))
        * ((1.0 - b) * (1.0 - b * b - 2.0 * b * s) * f[0] - b * b * (4.0 + b - 2.0 * x * x) * x / q * g[0]
            + 2.0 * (1.0 - b) * (1.0 - b) * x * s * f[1]
            + (2.0 - 4.0 * b - b * b - 2.0 * (1.0 - 3.0 * b + b * b) * x * x) * q * g[1]
            - s * s * ((1.0 - b) * f[2] - (4.0 - 3.0 * b) * x / q * g[2] + q * g[3]));
    [c, d]
}

fn composites_lower(x: f64, b: f64, p: &ProfilePoint) -> [f64; 2] {
    let s = 1.0 - x * x;
    let q = s.sqrt();
    let (f, g, w) = (&p.f, &p.g, &p.omega);
    let c = (2.0 * x / q * ((1.0 - b) * f[0] * f[0] + b * g[0] * g[0] + (1.0 - b) * w[0] * w[0])
        + 2.0 * q * ((1.0 - b) * f[0] * f[1] + b * g[0] * g[1] + w[0] * w[1])
        + s * (f[1] * g[1] + f[0] * g[2])
        + (1.0 + 2.0 * x * x + 2.0 * b * (1.0 - b) * s) / s * f[0] * g[0]
        + x * f[1] * g[0]
        + 2.0 * x * f[0] * g[1])
        / s;
    let d = s.powf(-1.5)
        * (-b * (1.0 - b * b) * s * f[0] + (-3.0 - b * (1.0 + b) * s) * x / q * g[0]
            - (1.0 + b * (1.0 + b) * s) * q * g[1]
            - s * s * ((1.0 - b) * f[2] - x / q * g[2] + q * g[3]));
    [c, d]
}

fn substituted_upper(x: f64, b: f64, p: &ProfilePoint) -> [f64; 4] {
    let s = 1.0 - x * x;
    let x2 = x * x;
    let k = (1.0 - b) / (2.0 - b);
    let (f, o) = (&p.f, &p.omega);
    let c3 = s.powf(0.5 - b) * (k * o[0] * (f[1] + x * f[0] / s) - f[0] * o[1]);
    let d3 = s.powf(-1.0 - 0.5 * b) * (s * s * o[2] - 2.0 * (1.0 - b) * x * s * o[1] - (1.0 - b * b) * o[0]);
    let cc = s.powf(0.5 - b) / (2.0 - b)
        * (s * ((2.0 + b) / (2.0 - b) * f[1] * f[2] + f[0] * f[3]) + 2.0 * (2.0 - b) * o[0] * o[1]
            - 2.0 * k
                * (2.0 * x * (1.0 + b * x2) / (s * s) * f[0] * f[0]
                    + (b + (2.0 + 3.0 * b) * x2) / s * f[0] * f[1]
                    + (2.0 + b) * x * f[1] * f[1]
                    + (4.0 - b) * x * f[0] * f[2]));
    let dd = -s.powf(-2.0 - 0.5 * b) / (2.0 - b)
        * (s.powi(4) * f[4] - 4.0 * (2.0 - b) * x * s.powi(3) * f[3]
            - 2.0 * (1.0 - b) * (3.0 + b - 2.0 * (3.0 - b) * x2) * s * s * f[2]
            - 4.0 * b * (1.0 - b) * (2.0 + b - x2) * x * s * f[1]
            - (1.0 - b) * (3.0 - b * (1.0 - b - b * b - 4.0 * (3.0 + b) * x2 + 4.0 * x2 * x2)) * f[0]);
    [c3, d3, cc, dd]
}

fn substituted_lower(x: f64, b: f64, p: &ProfilePoint) -> [f64; 4] {
    let s = 1.0 - x * x;
    let q = s.sqrt();
    let k = (1.0 - b) / (2.0 - b);
    let (f, w) = (&p.f, &p.omega);
    let c3 = (k * f[1] * w[0] - f[0] * w[1]) / q;
    let d3 = (s * w[2] - b * (1.0 - b) * w[0]) / q;
    let cc = (s * ((2.0 + b) / (2.0 - b) * f[1] * f[2] + f[0] * f[3])
        + 2.0 * (2.0 - b) * w[0] * w[1]
        + 2.0 * (1.0 - b) * ((2.0 - b) * x / s * (f[0] * f[0] + w[0] * w[0]) + 2.0 * f[0] * f[1]))
        / (q * (2.0 - b));
    let dd = -(s * s * f[4] - 4.0 * x * s * f[3] - 2.0 * b * (1.0 - b) * s * f[2]
        + b * (1.0 - b * b) * (2.0 - b) * f[0])
        / (q * (2.0 - b));
    [c3, d3, cc, dd]
}

/// Residual terms of the two reduced Euler equations at `x`, from the
/// lower-case meridional stack `f` and the upper-case azimuthal stack `Om`.
/// Returns `(value, sum of term magnitudes)` for each equation, with the
/// first multiplied by `1-x^2`.
#[allow(non_snake_case)]
pub fn euler_terms(x: f64, b: f64, f: &[f64; 5], Om: &[f64; 5]) -> [(f64, f64); 2] {
    let s = 1.0 - x * x;
    let k = (1.0 - b) / (2.0 - b);
    let t1 = [s * f[0] * Om[1], -k * s * f[1] * Om[0], -k * (2.0 - b) * x * f[0] * Om[0]];
    let t2 = [
        s * (2.0 + b) / (2.0 - b) * f[1] * f[2],
        s * f[0] * f[3],
        4.0 * (1.0 - b) * f[0] * f[1],
        2.0 * (1.0 - b) * (2.0 - b) * x * f[0] * f[0] / s,
        2.0 * (2.0 - b) * s.powf(1.0 - b) * Om[0] * Om[1],
    ];
    [sum_terms(&t1), sum_terms(&t2)]
}

fn sum_terms(t: &[f64]) -> (f64, f64) {
    (t.iter().sum(), t.iter().map(|v| v.abs()).sum())
}

fn report_from<F>(equation: EquationId, prefactor: &str, nodes: &[f64], mut eval: F) -> Result<ResidualReport>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let mut res = Vec::with_capacity(nodes.len());
    let mut scale = Vec::with_capacity(nodes.len());
    for &x in nodes {
        let (r, s) = eval(x)?;
        if !r.is_finite() {
            return Err(VortexError::Pole {
                x,
                what: format!("{equation} residual is not finite"),
            });
        }
        res.push(r);
        scale.push(s);
    }
    Ok(ResidualReport::new(equation, prefactor, nodes.to_vec(), res, scale))
}

/// Residuals of the two reduced Euler equations at the interior mesh nodes.
///
/// The azimuthal equation is reported as
/// `(1-x^2) [f Omega' - k (f' + (2-b) x f / (1-x^2)) Omega]` with
/// `k = (1-b)/(2-b)`; the meridional one without extra factor. For `b = 2`
/// the pair `G Omega` and `(1-x^2)(2[(G^2)' + 4x G^2/(1-x^2)] + (Omega^2)')`
/// is returned instead.
pub fn euler_residuals(profile: &Profile, mesh: &Mesh) -> Result<(ResidualReport, ResidualReport)> {
    let params = profile.params();
    if params.nu != 0.0 {
        return Err(VortexError::Domain("Euler residuals require nu = 0".into()));
    }
    let b = params.b;
    let nodes = mesh.interior();
    if b == 2.0 {
        let r1 = report_from(EquationId::C3eq, "1", &nodes, |x| {
            let p = profile.eval_in(x, Case::Upper)?;
            Ok((p.g[0] * p.omega[0], (p.g[0] * p.omega[0]).abs()))
        })?;
        let r2 = report_from(EquationId::C1C2eq, "(1-x^2)", &nodes, |x| {
            let p = profile.eval_in(x, Case::Upper)?;
            let s = 1.0 - x * x;
            let (g, o) = (&p.g, &p.omega);
            Ok(sum_terms(&[4.0 * s * g[0] * g[1], 8.0 * x * g[0] * g[0], 2.0 * s * o[0] * o[1]]))
        })?;
        return Ok((r1, r2));
    }
    let mut cache = Vec::with_capacity(nodes.len());
    for &x in &nodes {
        let lo = partial_stacks(x, profile, Case::Lower, [4, 0, 0])?;
        let up = partial_stacks(x, profile, Case::Upper, [0, 0, 2])?;
        cache.push(euler_terms(x, b, &lo.f, &up.omega));
    }
    let mut it1 = cache.iter();
    let r1 = report_from(EquationId::C3eq, "(1-x^2)", &nodes, |_| Ok(it1.next().expect("cached")[0]))?;
    let mut it2 = cache.iter();
    let r2 = report_from(EquationId::C1C2eq, "1", &nodes, |_| Ok(it2.next().expect("cached")[1]))?;
    Ok((r1, r2))
}

/// Residuals of the viscous reduced system selected by
/// [`GoverningMode::for_params`], at the interior mesh nodes.
///
/// * `b = 1`: `(1-x^2) [nu (1-x^2) F'''' - 4 nu x F''' + F F''' + 3 F' F''] + 2 Omega Omega'`
///   and `nu (1-x^2) Omega'' + F Omega'`.
/// * `b = 2`: `G Omega`, `(1-x^2)^2 Omega'' + 2x(1-x^2) Omega' + 3 Omega` and
///   `8x G^2 + (1-x^2)(2 (G^2)' + (Omega^2)')`.
/// * otherwise `C3`, `D3` and the two composites, each with its leading
///   power of `1-x^2` multiplied out.
pub fn ns_residuals(profile: &Profile, params: VortexParams, mesh: &Mesh) -> Result<Vec<ResidualReport>> {
    if !(params.nu > 0.0) {
        return Err(VortexError::Domain("viscous residuals require nu > 0".into()));
    }
    if params.b != profile.params().b {
        return Err(VortexError::Domain(format!(
            "profile exponent {} differs from requested b = {}",
            profile.params().b,
            params.b
        )));
    }
    let (b, nu) = (params.b, params.nu);
    let nodes = mesh.interior();
    let up = |x: f64| profile.eval_in(x, Case::Upper);
    match GoverningMode::for_params(b, nu) {
        GoverningMode::ViscousB1 => {
            let fo = |x: f64| partial_stacks(x, profile, Case::Upper, [5, 0, 3]);
            let r1 = report_from(EquationId::SerrinSys1, "(1-x^2)", &nodes, |x| {
                let p = fo(x)?;
                let s = 1.0 - x * x;
                let (f, o) = (&p.f, &p.omega);
                Ok(sum_terms(&[
                    nu * s * s * f[4],
                    -4.0 * nu * x * s * f[3],
                    s * f[0] * f[3],
                    3.0 * s * f[1] * f[2],
                    2.0 * o[0] * o[1],
                ]))
            })?;
            let r2 = report_from(EquationId::SerrinSys2, "1", &nodes, |x| {
                let p = fo(x)?;
                Ok(sum_terms(&[nu * (1.0 - x * x) * p.omega[2], p.f[0] * p.omega[1]]))
            })?;
            Ok(vec![r1, r2])
        }
        GoverningMode::ViscousB2 => {
            let r1 = report_from(EquationId::C3eq, "1", &nodes, |x| {
                let p = up(x)?;
                Ok(sum_terms(&[p.g[0] * p.omega[0]]))
            })?;
            let r3 = report_from(EquationId::D3eq, "(1-x^2)^2", &nodes, |x| {
                let o = up(x)?.omega;
                let s = 1.0 - x * x;
                Ok(sum_terms(&[s * s * o[2], 2.0 * x * s * o[1], 3.0 * o[0]]))
            })?;
            let r2 = report_from(EquationId::C1C2eq, "(1-x^2)", &nodes, |x| {
                let p = up(x)?;
                let s = 1.0 - x * x;
                let (g, o) = (&p.g, &p.omega);
                Ok(sum_terms(&[8.0 * x * g[0] * g[0], 4.0 * s * g[0] * g[1], 2.0 * s * o[0] * o[1]]))
            })?;
            Ok(vec![r1, r3, r2])
        }
        GoverningMode::ViscousSplit | GoverningMode::InviscidReduced => {
            let mut c3 = Vec::new();
            let mut d3 = Vec::new();
            let mut cc = Vec::new();
            let mut dd = Vec::new();
            for &x in &nodes {
                let s = 1.0 - x * x;
                let c = eval_C_form(x, profile, Form::Upper)?;
                let d = eval_D_form(x, profile, Form::Upper)?;
                let (ccv, ddv) = eval_composites_form(x, profile, Form::Upper)?;
                c3.push(c[2] * s.powf(b));
                d3.push(d[2] * s.powf(1.0 + 0.5 * b));
                cc.push(ccv * s.powf(b));
                dd.push(ddv * s.powf(1.0 + 0.5 * b));
            }
            let scale = |v: &[f64]| v.iter().map(|r| r.abs()).collect::<Vec<_>>();
            Ok(vec![
                ResidualReport::new(EquationId::C3eq, "(1-x^2)^b", nodes.clone(), c3.clone(), scale(&c3)),
                ResidualReport::new(EquationId::D3eq, "(1-x^2)^(1+b/2)", nodes.clone(), d3.clone(), scale(&d3)),
                ResidualReport::new(EquationId::C1C2eq, "(1-x^2)^b", nodes.clone(), cc.clone(), scale(&cc)),
                ResidualReport::new(EquationId::D1D2eq, "(1-x^2)^(1+b/2)", nodes, dd.clone(), scale(&dd)),
            ])
        }
    }
}

/// Pressure `C1 / (2b R^(2b)) - nu D1 / ((1+b) R^(1+b)) + T`; the viscous
/// term is skipped entirely when `nu = 0`.
pub fn pressure_from_profile(r_big: f64, x: f64, profile: &Profile, params: VortexParams, t: f64) -> Result<f64> {
    if !(r_big > 0.0) {
        return Err(VortexError::Domain(format!("R must be positive, got {r_big}")));
    }
    let b = params.b;
    let c1 = eval_C_form(x, profile, Form::Upper)?[0];
    let mut p = c1 / (2.0 * b * r_big.powf(2.0 * b)) + t;
    if params.nu != 0.0 {
        let d1 = eval_D_form(x, profile, Form::Upper)?[0];
        p -= params.nu * d1 / ((1.0 + b) * r_big.powf(1.0 + b));
    }
    Ok(p)
}

/// Spherical velocity components `(v_R, v_alpha, v_theta)` at `(R, alpha)`.
fn spherical_velocity(profile: &Profile, r_big: f64, alpha: f64) -> Result<[f64; 3]> {
    let x = alpha.cos();
    let r = r_big * alpha.sin();
    let [f, g, o] = profile.values_in(x, Case::Upper)?;
    let w = r.powf(-profile.params().b);
    Ok([g * w, f * w, o * w])
}

/// Independent check of a similarity profile against the full axisymmetric
/// momentum and continuity equations in spherical coordinates.
///
/// Velocity and pressure are rebuilt on the `(r, z)` sample points of
/// `grid`, every partial derivative is replaced by a centered difference of
/// physical step `spacing`, and each momentum residual is divided by
/// `max(1, |convective term|)`. Returns one report per equation, in the
/// order radial, meridional, azimuthal, continuity.
pub fn fullfield_ns_residual(
    profile: &Profile,
    params: VortexParams,
    grid: &GridSpec,
    spacing: f64,
) -> Result<Vec<ResidualReport>> {
    grid.validate()?;
    if !(spacing > 0.0) {
        return Err(VortexError::Domain("spacing must be positive".into()));
    }
    if grid.r_min < 5.0 * spacing || grid.z_min < 5.0 * spacing {
        return Err(VortexError::Domain(format!(
            "grid must stay 5 spacings ({}) away from the axis and the ground",
            5.0 * spacing
        )));
    }
    if params.b != profile.params().b {
        return Err(VortexError::Domain("profile exponent differs from params".into()));
    }
    let nu = params.nu;
    let pts = grid.points();
    let mut rows: [Vec<f64>; 4] = Default::default();
    let mut scales: [Vec<f64>; 4] = Default::default();
    for &[r, z] in &pts {
        let big_r = r.hypot(z);
        let a = (z / big_r).acos();
        let da = spacing / big_r;
        let dr = spacing;
        let v = |i: i32, j: i32| spherical_velocity(profile, big_r + i as f64 * dr, a + j as f64 * da);
        let p = |i: i32, j: i32| {
            let rr = big_r + i as f64 * dr;
            let aa = a + j as f64 * da;
            pressure_from_profile(rr, aa.cos(), profile, params, 0.0)
        };
        let c = v(0, 0)?;
        let (rp, rm, ap, am) = (v(1, 0)?, v(-1, 0)?, v(0, 1)?, v(0, -1)?);
        let mut d_r = [0.0; 3];
        let mut d_rr = [0.0; 3];
        let mut d_a = [0.0; 3];
        let mut d_aa = [0.0; 3];
        for k in 0..3 {
            d_r[k] = (rp[k] - rm[k]) / (2.0 * dr);
            d_rr[k] = (rp[k] - 2.0 * c[k] + rm[k]) / (dr * dr);
            d_a[k] = (ap[k] - am[k]) / (2.0 * da);
            d_aa[k] = (ap[k] - 2.0 * c[k] + am[k]) / (da * da);
        }
        let p_r = (p(1, 0)? - p(-1, 0)?) / (2.0 * dr);
        let p_a = (p(0, 1)? - p(0, -1)?) / (2.0 * da);
        let (sn, cs) = a.sin_cos();
        let cot = cs / sn;
        let rr = big_r;
        let lap = |k: usize| d_rr[k] + 2.0 / rr * d_r[k] + (d_aa[k] + cot * d_a[k]) / (rr * rr);
        let [vr, va, vt] = c;

        let conv_r = vr * d_r[0] + va / rr * d_a[0] - (va * va + vt * vt) / rr;
        let vis_r = lap(0) - 2.0 / (rr * rr) * (vr + d_a[1] + va * cot);
        let conv_a = vr * d_r[1] + va / rr * d_a[1] + (vr * va - vt * vt * cot) / rr;
        let vis_a = lap(1) + 2.0 / (rr * rr) * d_a[0] - va / (rr * rr * sn * sn);
        let conv_t = vr * d_r[2] + va / rr * d_a[2] + (vr * vt + va * vt * cot) / rr;
        let vis_t = lap(2) - vt / (rr * rr * sn * sn);
        let cont = [d_r[0], 2.0 * vr / rr, d_a[1] / rr, cot * va / rr];

        let eqs = [
            (conv_r + p_r - nu * vis_r, conv_r),
            (conv_a + p_a / rr - nu * vis_a, conv_a),
            (conv_t - nu * vis_t, conv_t),
            (cont.iter().sum::<f64>(), cont.iter().map(|t| t.abs()).sum::<f64>()),
        ];
        for (k, (res, conv)) in eqs.iter().enumerate() {
            let sc = conv.abs().max(1.0);
            rows[k].push(res / sc);
            scales[k].push(sc);
        }
    }
    let ids = [
        EquationId::FullNsR,
        EquationId::FullNsAlpha,
        EquationId::FullNsTheta,
        EquationId::Continuity,
    ];
    let xs: Vec<f64> = pts.iter().map(|[r, z]| z / r.hypot(*z)).collect();
    let mut out = Vec::with_capacity(4);
    for (k, id) in ids.iter().enumerate() {
        let res = std::mem::take(&mut rows[k]);
        if let Some(i) = res.iter().position(|v| !v.is_finite()) {
            return Err(VortexError::Pole {
                x: xs[i],
                what: format!("{id} residual is not finite"),
            });
        }
        let mut rep = ResidualReport::new(*id, "max(1,|convective|)^-1", xs.clone(), res, std::mem::take(&mut scales[k]));
        rep.coords = Some(pts.clone());
        out.push(rep);
    }
    Ok(out)
}

/// Largest sup-norm over a set of reports.
pub fn max_sup_norm(reports: &[ResidualReport]) -> f64 {
    reports.iter().map(|r| r.sup_norm).fold(0.0, f64::max)
}
