//! Parameters, meshes, profiles and the kinematic relations between them.
//!
//! A profile is a triple of functions of `x = cos(alpha)` on `(0, 1)`, either
//! in upper case `(F, G, Omega)` or lower case `(f, g, omega)` with
//! `f = F (1-x^2)^((1-b)/2)` and likewise for the other two components.

use crate::error::{Result, VortexError};
use crate::jet::Jet;
use crate::quad::{self, Quadrature};
use crate::stencil;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// Model constants: decay exponent `b`, kinematic viscosity `nu` and the
/// azimuthal amplitude `C_omega` near the axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexParams {
    pub b: f64,
    pub nu: f64,
    pub c_omega: f64,
}

impl VortexParams {
    pub fn new(b: f64, nu: f64, c_omega: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(VortexError::Domain(format!("exponent b must be positive, got {b}")));
        }
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(VortexError::Domain(format!("viscosity must be nonnegative, got {nu}")));
        }
        if !c_omega.is_finite() {
            return Err(VortexError::Domain("C_omega must be finite".into()));
        }
        Ok(VortexParams { b, nu, c_omega })
    }

    pub fn inviscid(b: f64, c_omega: f64) -> Result<Self> {
        Self::new(b, 0.0, c_omega)
    }
}

/// Uniform mesh `x_i = i h`, `i = 0..=n`, on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    n: usize,
}

impl Mesh {
    pub fn uniform(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 0.5) {
            return Err(VortexError::Domain(format!("mesh step must lie in (0, 0.5], got {h}")));
        }
        let n = (1.0 / h).round() as usize;
        if (n as f64 * h - 1.0).abs() > 1e-12 {
            return Err(VortexError::Domain(format!("1/h must be an integer, got h = {h}")));
        }
        Ok(Mesh { n })
    }

    pub fn with_intervals(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(VortexError::Domain("a mesh needs at least two intervals".into()));
        }
        Ok(Mesh { n })
    }

    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.x(i)).collect()
    }

    pub fn interior(&self) -> Vec<f64> {
        (1..self.n).map(|i| self.x(i)).collect()
    }
}

/// Which variable set a profile is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `(F, G, Omega)`
    Upper,
    /// `(f, g, omega)`
    Lower,
}

/// Derivative stacks `[v, v', v'', v''', v'''']` of the three components at a
/// point. In upper case the fields hold `F`, `G`, `Omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub f: [f64; 5],
    pub g: [f64; 5],
    pub omega: [f64; 5],
}

impl ProfilePoint {
    pub const ZERO: ProfilePoint = ProfilePoint {
        f: [0.0; 5],
        g: [0.0; 5],
        omega: [0.0; 5],
    };

    pub fn from_jets(j: &[Jet; 3]) -> Self {
        ProfilePoint {
            f: j[0].stack(),
            g: j[1].stack(),
            omega: j[2].stack(),
        }
    }

    pub fn jets(&self) -> [Jet; 3] {
        [Jet::from_stack(&self.f), Jet::from_stack(&self.g), Jet::from_stack(&self.omega)]
    }

    pub fn is_finite(&self) -> bool {
        self.f
            .iter()
            .chain(self.g.iter())
            .chain(self.omega.iter())
            .all(|v| v.is_finite())
    }

    pub fn values(&self) -> [f64; 3] {
        [self.f[0], self.g[0], self.omega[0]]
    }
}

/// `(1-x^2)^e` as a jet at `x`; exactly one when `e = 0`.
pub fn sin_power(x: Jet, e: f64) -> Jet {
    if e == 0.0 {
        return Jet::constant(1.0);
    }
    (1.0 - x * x).powf(e)
}

/// Converts a point between cases for exponent `b`.
pub fn convert_point(x: f64, b: f64, p: &ProfilePoint, from: Case, to: Case) -> ProfilePoint {
    if from == to || b == 1.0 {
        return *p;
    }
    let e = match to {
        Case::Lower => 0.5 * (1.0 - b),
        Case::Upper => 0.5 * (b - 1.0),
    };
    let fac = sin_power(Jet::variable(x), e);
    let [f, g, w] = p.jets();
    ProfilePoint::from_jets(&[f * fac, g * fac, w * fac])
}

type JetFn = dyn Fn(Jet) -> [Jet; 3] + Send + Sync;

#[derive(Clone)]
enum Repr {
    Closed(Arc<JetFn>),
    Sampled(Arc<Sampled>),
    /// Samples whose radial component is re-derived from the interpolated
    /// `f` through continuity at every evaluation point.
    Continuity(Arc<Sampled>, f64),
}

/// Node stacks on a uniform grid `x_i = x0 + i h`.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub x0: f64,
    pub h: f64,
    pub nodes: Vec<ProfilePoint>,
}

/// A solution triple over `x in (0, 1)`.
#[derive(Clone)]
pub struct Profile {
    params: VortexParams,
    case: Case,
    repr: Repr,
}

impl std::fmt::Debug for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.repr {
            Repr::Closed(_) => "closed-form".to_string(),
            Repr::Sampled(s) | Repr::Continuity(s, _) => format!("sampled({} nodes)", s.nodes.len()),
        };
        f.debug_struct("Profile")
            .field("params", &self.params)
            .field("case", &self.case)
            .field("kind", &kind)
            .finish()
    }
}

fn check_x(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(VortexError::Domain(format!("x = {x} outside [0, 1]")))
    }
}

impl Profile {
    /// A closed-form profile; `f` maps the jet of `x` to the jets of the
    /// three components.
    pub fn from_fn<F>(params: VortexParams, case: Case, f: F) -> Profile
    where
        F: Fn(Jet) -> [Jet; 3] + Send + Sync + 'static,
    {
        Profile {
            params,
            case,
            repr: Repr::Closed(Arc::new(f)),
        }
    }

    pub fn from_samples(params: VortexParams, case: Case, sampled: Sampled) -> Result<Profile> {
        if sampled.nodes.len() < 6 {
            return Err(VortexError::Format("a sampled profile needs at least 6 nodes".into()));
        }
        if !(sampled.h > 0.0) {
            return Err(VortexError::Format("sample spacing must be positive".into()));
        }
        Ok(Profile {
            params,
            case,
            repr: Repr::Sampled(Arc::new(sampled)),
        })
    }

    /// Sampled profile from node values on a uniform grid; derivative stacks
    /// come from second-order finite differences.
    pub fn from_node_values(
        params: VortexParams,
        case: Case,
        x0: f64,
        h: f64,
        f: &[f64],
        g: &[f64],
        omega: &[f64],
    ) -> Result<Profile> {
        if f.len() != g.len() || f.len() != omega.len() {
            return Err(VortexError::Format("component arrays differ in length".into()));
        }
        if f.len() < 6 {
            return Err(VortexError::Format("a sampled profile needs at least 6 nodes".into()));
        }
        let (sf, sg, so) = (
            stencil::derivative_stacks(f, h),
            stencil::derivative_stacks(g, h),
            stencil::derivative_stacks(omega, h),
        );
        let nodes = (0..f.len())
            .map(|i| ProfilePoint {
                f: sf[i],
                g: sg[i],
                omega: so[i],
            })
            .collect();
        Self::from_samples(params, case, Sampled { x0, h, nodes })
    }

    pub fn params(&self) -> VortexParams {
        self.params
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.repr, Repr::Sampled(_) | Repr::Continuity(..))
    }

    pub fn samples(&self) -> Option<&Sampled> {
        match &self.repr {
            Repr::Sampled(s) | Repr::Continuity(s, _) => Some(s),
            Repr::Closed(_) => None,
        }
    }

    /// Same profile with different model constants attached.
    pub fn with_params(&self, params: VortexParams) -> Profile {
        Profile {
            params,
            case: self.case,
            repr: self.repr.clone(),
        }
    }

    /// Component stacks at `x`, possibly containing non-finite entries.
    pub fn eval_raw(&self, x: f64) -> Result<ProfilePoint> {
        check_x(x)?;
        Ok(match &self.repr {
            Repr::Closed(f) => ProfilePoint::from_jets(&f(Jet::variable(x))),
            Repr::Sampled(s) => s.eval(x),
            Repr::Continuity(s, b) => {
                let mut p = s.eval(x);
                if s.node_hit(x).is_some_and(|i| s.nodes[i].f.iter().all(|v| v.is_finite())) {
                    return Ok(p);
                }
                // Off the nodes f and g come from one interpolant of f, so
                // that continuity (and the stream function) hold exactly.
                let f = s.consistent_jet(x, |p| &p.f);
                let g = continuity_jet(Jet::variable(x), f, *b, self.case).stack();
                for (k, fk) in f.stack().into_iter().enumerate() {
                    // At the endpoints continuity may be singular; keep the
                    // sampled limit there.
                    if fk.is_finite() {
                        p.f[k] = fk;
                    }
                    if g[k].is_finite() {
                        p.g[k] = g[k];
                    }
                }
                p
            }
        })
    }

    /// Component stacks at `x`; any non-finite entry is reported as a pole.
    pub fn eval(&self, x: f64) -> Result<ProfilePoint> {
        let p = self.eval_raw(x)?;
        if p.is_finite() {
            Ok(p)
        } else {
            Err(VortexError::Pole {
                x,
                what: "profile derivative is not finite".into(),
            })
        }
    }

    /// Component values at `x`; only the values need to be finite.
    pub fn values(&self, x: f64) -> Result<[f64; 3]> {
        let v = self.eval_raw(x)?.values();
        if v.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(VortexError::Pole {
                x,
                what: "profile value is not finite".into(),
            })
        }
    }

    /// Stacks at `x` expressed in the requested case.
    pub fn eval_in(&self, x: f64, case: Case) -> Result<ProfilePoint> {
        let p = self.eval(x)?;
        let q = convert_point(x, self.params.b, &p, self.case, case);
        if q.is_finite() {
            Ok(q)
        } else {
            Err(VortexError::Pole {
                x,
                what: "case conversion is singular".into(),
            })
        }
    }

    /// Values at `x` in the requested case.
    pub fn values_in(&self, x: f64, case: Case) -> Result<[f64; 3]> {
        let v = self.values(x)?;
        if case == self.case || self.params.b == 1.0 {
            return Ok(v);
        }
        let e = match case {
            Case::Lower => 0.5 * (1.0 - self.params.b),
            Case::Upper => 0.5 * (self.params.b - 1.0),
        };
        let fac = (1.0 - x * x).powf(e);
        let out = [v[0] * fac, v[1] * fac, v[2] * fac];
        if out.iter().all(|c| c.is_finite()) {
            Ok(out)
        } else {
            Err(VortexError::Pole {
                x,
                what: "case conversion is singular".into(),
            })
        }
    }

    fn convert(&self, to: Case) -> Result<Profile> {
        if self.case == to {
            return Err(VortexError::Domain(format!("profile is already in {to:?} case")));
        }
        let b = self.params.b;
        let e = match to {
            Case::Lower => 0.5 * (1.0 - b),
            Case::Upper => 0.5 * (b - 1.0),
        };
        let repr = match &self.repr {
            Repr::Closed(f) => {
                let f = f.clone();
                Repr::Closed(Arc::new(move |x: Jet| {
                    let fac = sin_power(x, e);
                    let [a, g, w] = f(x);
                    [a * fac, g * fac, w * fac]
                }))
            }
            Repr::Sampled(s) => {
                let nodes = s
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(i, p)| convert_point(s.x0 + i as f64 * s.h, b, p, self.case, to))
                    .collect();
                Repr::Sampled(Arc::new(Sampled {
                    x0: s.x0,
                    h: s.h,
                    nodes,
                }))
            }
            Repr::Continuity(s, cb) => {
                let nodes = s
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(i, p)| convert_point(s.x0 + i as f64 * s.h, b, p, self.case, to))
                    .collect();
                Repr::Continuity(
                    Arc::new(Sampled {
                        x0: s.x0,
                        h: s.h,
                        nodes,
                    }),
                    *cb,
                )
            }
        };
        Ok(Profile {
            params: self.params,
            case: to,
            repr,
        })
    }

    /// `(F, G, Omega) -> (f, g, omega)`.
    pub fn to_lowercase(&self) -> Result<Profile> {
        self.convert(Case::Lower)
    }

    /// `(f, g, omega) -> (F, G, Omega)`.
    pub fn to_uppercase(&self) -> Result<Profile> {
        self.convert(Case::Upper)
    }

    /// Replaces the radial component by the one implied by continuity.
    pub fn with_g_from_continuity(&self) -> Result<Profile> {
        let b = self.params.b;
        if b == 2.0 {
            return Err(VortexError::Domain("continuity is degenerate for b = 2".into()));
        }
        let case = self.case;
        let repr = match &self.repr {
            Repr::Closed(f) => {
                let f = f.clone();
                Repr::Closed(Arc::new(move |x: Jet| {
                    let [a, _, w] = f(x);
                    [a, continuity_jet(x, a, b, case), w]
                }))
            }
            Repr::Sampled(s) | Repr::Continuity(s, _) => {
                let mut nodes = s.nodes.clone();
                let mut g3 = Vec::with_capacity(nodes.len());
                for (i, p) in nodes.iter_mut().enumerate() {
                    let x = s.x0 + i as f64 * s.h;
                    let g = continuity_jet(Jet::variable(x), Jet::from_stack(&p.f), b, case).stack();
                    p.g = g;
                    g3.push(g[3]);
                }
                // The top derivative is one order short; difference g''' instead.
                let n = nodes.len();
                for (i, p) in nodes.iter_mut().enumerate() {
                    let st = stencil::Stencil::second_order(i, n, 1, s.h);
                    p.g[4] = st.apply(&g3);
                }
                Repr::Continuity(
                    Arc::new(Sampled {
                        x0: s.x0,
                        h: s.h,
                        nodes,
                    }),
                    b,
                )
            }
        };
        Ok(Profile {
            params: self.params,
            case,
            repr,
        })
    }

    /// Integral continuity `int_0^1 g / sqrt(1-x^2) dx` of the lower-case `g`.
    pub fn flux(&self) -> Result<Quadrature> {
        flux_integral(|x| self.values_in(x, Case::Lower).map(|v| v[1]).unwrap_or(f64::NAN))
    }
}

fn continuity_jet(x: Jet, f: Jet, b: f64, case: Case) -> Jet {
    let s = 1.0 - x * x;
    let q = s.sqrt();
    match case {
        Case::Lower => q * f.diff() / (2.0 - b),
        Case::Upper => (q * f.diff() - (1.0 - b) * x * f / q) / (2.0 - b),
    }
}

impl Sampled {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn node_hit(&self, x: f64) -> Option<usize> {
        let pos = (x - self.x0) / self.h;
        let near = pos.round();
        ((pos - near).abs() < 1e-9 && near >= 0.0 && (near as usize) < self.nodes.len()).then(|| near as usize)
    }

    fn eval(&self, x: f64) -> ProfilePoint {
        let pos = (x - self.x0) / self.h;
        let hit = self.node_hit(x);
        if let Some(i) = hit {
            if self.nodes[i].is_finite() {
                return self.nodes[i];
            }
        }
        // Singular entries at a node are replaced by the interpolated or
        // extrapolated value, which is how endpoint limits are reached.
        let pick = |k: usize, comp: fn(&ProfilePoint) -> &[f64; 5]| {
            let at_node = hit.map(|i| comp(&self.nodes[i])[k]).filter(|v| v.is_finite());
            at_node.unwrap_or_else(|| self.interp(x, pos, k, comp))
        };
        let mut out = ProfilePoint::ZERO;
        for k in 0..5 {
            out.f[k] = pick(k, |p| &p.f);
            out.g[k] = pick(k, |p| &p.g);
            out.omega[k] = pick(k, |p| &p.omega);
        }
        out
    }

    /// Jet of one component from a single local interpolant, so that its
    /// derivatives are those of the interpolated value. Interior cells use
    /// the quintic Hermite polynomial matching value, slope and curvature at
    /// both nodes; cells touching a node with a singular stack use a power
    /// law in the distance to the nearer endpoint.
    fn consistent_jet(&self, x: f64, comp: fn(&ProfilePoint) -> &[f64; 5]) -> Jet {
        let n = self.nodes.len();
        let good = |i: usize| comp(&self.nodes[i])[..3].iter().all(|v| v.is_finite());
        let first = (0..n).find(|&i| good(i));
        let last = (0..n).rev().find(|&i| good(i));
        let (Some(mut first), Some(mut last)) = (first, last) else {
            return Jet::constant(f64::NAN);
        };
        // Similarity profiles behave like powers of x and 1-x at the ends,
        // so the cells touching x = 0 and x = 1 always use the power-law
        // form, even when one-sided differences gave the end node a finite
        // stack.
        if self.x(first) <= 0.0 {
            first += 1;
        }
        if self.x(last) >= 1.0 {
            last -= 1;
        }
        if first + 1 >= last {
            return Jet::constant(f64::NAN);
        }
        let pos = (x - self.x0) / self.h;
        let xv = Jet::variable(x);
        if pos < first as f64 {
            let v = |j: usize| comp(&self.nodes[j])[0];
            let j = [first, first + 1, first + 2];
            return power_law_jet(xv, j.map(|i| self.x(i)), j.map(v));
        }
        if pos > last as f64 {
            let v = |j: usize| comp(&self.nodes[j])[0];
            let d = (xv - 1.0) * -1.0;
            let j = [last, last - 1, last - 2];
            return power_law_jet(d, j.map(|i| 1.0 - self.x(i)), j.map(v));
        }
        let i = (pos.floor() as usize).clamp(first, last - 1);
        let (a, c) = (comp(&self.nodes[i]), comp(&self.nodes[i + 1]));
        let h = self.h;
        let t = (xv - self.x(i)) / h;
        let (a0, a1, a2) = (a[0], a[1] * h, a[2] * h * h);
        let (c0, c1, c2) = (c[0], c[1] * h, c[2] * h * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h0 = Jet::constant(1.0) - t3 * 10.0 + t4 * 15.0 - t5 * 6.0;
        let h1 = t - t3 * 6.0 + t4 * 8.0 - t5 * 3.0;
        let h2 = (t2 - t3 * 3.0 + t4 * 3.0 - t5) * 0.5;
        let k0 = t3 * 10.0 - t4 * 15.0 + t5 * 6.0;
        let k1 = t3 * -4.0 + t4 * 7.0 - t5 * 3.0;
        let k2 = (t3 - t4 * 2.0 + t5) * 0.5;
        h0 * a0 + h1 * a1 + h2 * a2 + k0 * c0 + k1 * c1 + k2 * c2
    }

    fn interp(&self, x: f64, pos: f64, k: usize, comp: impl Fn(&ProfilePoint) -> &[f64; 5]) -> f64 {
        let n = self.nodes.len();
        let v = |i: usize| comp(&self.nodes[i])[k];
        let first = (0..n).find(|&i| v(i).is_finite());
        let last = (0..n).rev().find(|&i| v(i).is_finite());
        let (Some(first), Some(last)) = (first, last) else {
            return f64::NAN;
        };
        if first + 1 >= last {
            return f64::NAN;
        }
        if pos < first as f64 {
            let j = [first, first + 1, first + 2];
            return power_law(x, j.map(|i| self.x(i)), j.map(v));
        }
        if pos > last as f64 {
            let t = 1.0 - x;
            let j = [last, last - 1, last - 2];
            return power_law(t, j.map(|i| 1.0 - self.x(i)), j.map(v));
        }
        let i = (pos.floor() as usize).min(n - 2);
        let t = pos - i as f64;
        let (a, b) = (v(i), v(i + 1));
        if !(a.is_finite() && b.is_finite()) {
            return f64::NAN;
        }
        if k < 4 {
            let da = comp(&self.nodes[i])[k + 1] * self.h;
            let db = comp(&self.nodes[i + 1])[k + 1] * self.h;
            if da.is_finite() && db.is_finite() {
                let t2 = t * t;
                let t3 = t2 * t;
                return (2.0 * t3 - 3.0 * t2 + 1.0) * a
                    + (t3 - 2.0 * t2 + t) * da
                    + (-2.0 * t3 + 3.0 * t2) * b
                    + (t3 - t2) * db;
            }
        }
        a + t * (b - a)
    }
}

/// Extrapolation to distance `t` from an endpoint using the three nodes
/// nearest to it, at distances `d[0] < d[1] < d[2]` with values `v`. Near
/// the ends similarity profiles behave either like a power of the distance
/// (zeros and poles) or approach a finite limit. A power law through the two
/// nearest nodes is used when it predicts the third node better than a
/// straight line does; at the endpoint itself it must also have a clear
/// exponent (magnitude at least 0.1), since a power law with a tiny
/// exponent still jumps to 0 or infinity there. Returns the exponent, or
/// `None` for linear extrapolation.
fn endpoint_exponent(t: f64, d: [f64; 3], v: [f64; 3]) -> Option<f64> {
    if !(v[0] != 0.0 && v[1] != 0.0 && v[0].signum() == v[1].signum()) {
        return None;
    }
    let s = (v[1] / v[0]).ln() / (d[1] / d[0]).ln();
    let power = v[0] * (d[2] / d[0]).powf(s);
    let linear = v[0] + (v[1] - v[0]) * (d[2] - d[0]) / (d[1] - d[0]);
    let better = (power - v[2]).abs() <= (linear - v[2]).abs();
    (better && (t > 0.0 || s.abs() >= 0.1)).then_some(s)
}

fn power_law(t: f64, d: [f64; 3], v: [f64; 3]) -> f64 {
    match endpoint_exponent(t, d, v) {
        Some(s) => v[0] * (t / d[0]).powf(s),
        None => v[0] + (v[1] - v[0]) * (t - d[0]) / (d[1] - d[0]),
    }
}

fn power_law_jet(t: Jet, d: [f64; 3], v: [f64; 3]) -> Jet {
    match endpoint_exponent(t.value(), d, v) {
        Some(s) => (t / d[0]).powf(s) * v[0],
        None => (t - d[0]) * ((v[1] - v[0]) / (d[1] - d[0])) + v[0],
    }
}

/// Lower-case continuity: `g = sqrt(1-x^2) f' / (2-b)`; returns the stack of
/// `g` through its third derivative.
pub fn continuity_g_from_f(x: f64, f: &[f64; 5], b: f64) -> Result<[f64; 4]> {
    continuity_point(x, f, b, Case::Lower)
}

/// Upper-case continuity:
/// `(2-b) G = sqrt(1-x^2) F' - (1-b) x F / sqrt(1-x^2)`.
#[allow(non_snake_case)]
pub fn continuity_G_from_F(x: f64, F: &[f64; 5], b: f64) -> Result<[f64; 4]> {
    continuity_point(x, F, b, Case::Upper)
}

fn continuity_point(x: f64, f: &[f64; 5], b: f64, case: Case) -> Result<[f64; 4]> {
    if b == 2.0 {
        return Err(VortexError::Domain("continuity is degenerate for b = 2".into()));
    }
    check_x(x)?;
    if f.iter().all(|v| *v == 0.0) {
        return Ok([0.0; 4]);
    }
    let g = continuity_jet(Jet::variable(x), Jet::from_stack(f), b, case).stack();
    let out = [g[0], g[1], g[2], g[3]];
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(VortexError::Pole {
            x,
            what: "continuity relation is singular".into(),
        })
    }
}

/// `int_0^1 g(x) / sqrt(1-x^2) dx`, computed in the angle variable
/// `x = sin(t)` where the weight disappears.
pub fn flux_integral<G: Fn(f64) -> f64>(g: G) -> Result<Quadrature> {
    quad::integrate(
        |t: f64| g(t.sin()),
        0.0,
        std::f64::consts::FRAC_PI_2,
        1e-8,
        4000,
    )
}

/// Stream function `Psi = R^(2-b) f(x)`.
pub fn stream_function(r_big: f64, x: f64, profile: &Profile) -> Result<f64> {
    if !(r_big > 0.0) {
        return Err(VortexError::Domain(format!("R must be positive, got {r_big}")));
    }
    let f = profile.values_in(x, Case::Lower)?[0];
    Ok(r_big.powf(2.0 - profile.params().b) * f)
}

/// `x = cos(alpha) = z / sqrt(r^2 + z^2)`.
pub fn x_from_cylindrical(r: f64, z: f64) -> Result<f64> {
    if !(r >= 0.0 && z >= 0.0) {
        return Err(VortexError::Domain(format!("(r, z) = ({r}, {z}) outside the half-space")));
    }
    let big_r = r.hypot(z);
    if big_r == 0.0 {
        return Err(VortexError::Domain("direction undefined at the origin".into()));
    }
    Ok(z / big_r)
}

/// Rectangular sample box in the meridional `(r, z)` half-plane with
/// `n_r x n_z` evenly spaced points, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub n_r: usize,
    pub n_z: usize,
}

impl GridSpec {
    pub fn new(r: (f64, f64), z: (f64, f64), n_r: usize, n_z: usize) -> Result<Self> {
        let g = GridSpec {
            r_min: r.0,
            r_max: r.1,
            z_min: z.0,
            z_max: z.1,
            n_r,
            n_z,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.r_min > 0.0
            && self.z_min > 0.0
            && self.r_max >= self.r_min
            && self.z_max >= self.z_min
            && self.r_max.is_finite()
            && self.z_max.is_finite();
        if !ok {
            return Err(VortexError::Domain(format!(
                "grid must lie in r > 0, z > 0 with ordered bounds, got r in [{}, {}], z in [{}, {}]",
                self.r_min, self.r_max, self.z_min, self.z_max
            )));
        }
        if self.n_r == 0 || self.n_z == 0 {
            return Err(VortexError::Domain("grid needs at least one point per direction".into()));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    pub fn r(&self, i: usize) -> f64 {
        Self::axis(self.r_min, self.r_max, self.n_r, i)
    }

    pub fn z(&self, j: usize) -> f64 {
        Self::axis(self.z_min, self.z_max, self.n_z, j)
    }

    /// All points, row by row in `z` with `r` varying fastest.
    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.n_z)
            .flat_map(|j| (0..self.n_r).map(move |i| [self.r(i), self.z(j)]))
            .collect()
    }
}

pub const SOLUTION_VERSION: u32 = 1;

/// On-disk solution format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub b: f64,
    pub nu: f64,
    pub c: Option<f64>,
    #[serde(rename = "C1")]
    pub c1: Option<f64>,
    #[serde(rename = "C_omega")]
    pub c_omega: f64,
    pub h: f64,
    pub x: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    #[serde(rename = "Omega")]
    pub omega: Vec<f64>,
    pub residual_norm: f64,
    pub generator: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

impl SolutionFile {
    /// Samples the upper-case triple at the mesh nodes, omitting nodes where
    /// any component value is singular.
    pub fn from_profile(profile: &Profile, mesh: &Mesh, generator: &str) -> Result<SolutionFile> {
        let p = profile.params();
        let mut out = SolutionFile {
            b: p.b,
            nu: p.nu,
            c: None,
            c1: None,
            c_omega: p.c_omega,
            h: mesh.h(),
            x: Vec::new(),
            f: Vec::new(),
            g: Vec::new(),
            omega: Vec::new(),
            residual_norm: 0.0,
            generator: generator.to_string(),
            version: SOLUTION_VERSION,
            meta: None,
        };
        for x in mesh.nodes() {
            if let Ok(v) = profile.values_in(x, Case::Upper) {
                out.x.push(x);
                out.f.push(v[0]);
                out.g.push(v[1]);
                out.omega.push(v[2]);
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.len();
        if self.f.len() != n || self.g.len() != n || self.omega.len() != n {
            return Err(VortexError::Format("arrays x, F, G, Omega differ in length".into()));
        }
        if n < 6 {
            return Err(VortexError::Format("solution needs at least 6 samples".into()));
        }
        if self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(VortexError::Format("x must be strictly increasing".into()));
        }
        if !(self.h > 0.0) {
            return Err(VortexError::Format("h must be positive".into()));
        }
        for (i, w) in self.x.windows(2).enumerate() {
            if ((w[1] - w[0]) - self.h).abs() > 1e-9 {
                return Err(VortexError::Format(format!("samples not uniformly spaced at index {i}")));
            }
        }
        let all = self.x.iter().chain(&self.f).chain(&self.g).chain(&self.omega);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(VortexError::Format("non-finite sample".into()));
        }
        if self.version != SOLUTION_VERSION {
            return Err(VortexError::Format(format!("unsupported version {}", self.version)));
        }
        VortexParams::new(self.b, self.nu, self.c_omega)?;
        Ok(())
    }

    pub fn params(&self) -> Result<VortexParams> {
        VortexParams::new(self.b, self.nu, self.c_omega)
    }

    /// Upper-case sampled profile with finite-difference derivative stacks.
    pub fn to_profile(&self) -> Result<Profile> {
        self.validate()?;
        Profile::from_node_values(
            self.params()?,
            Case::Upper,
            self.x[0],
            self.h,
            &self.f,
            &self.g,
            &self.omega,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<SolutionFile> {
        let f: SolutionFile = serde_json::from_str(s)?;
        f.validate()?;
        Ok(f)
    }

    /// Writes through a temporary file and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<SolutionFile> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json(&s)
    }
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| VortexError::Io(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(b: f64) -> VortexParams {
        VortexParams::inviscid(b, 1.0).unwrap()
    }

    fn smooth(b: f64) -> Profile {
        Profile::from_fn(params(b), Case::Upper, |x| {
            [x * (1.0 - x) * 2.0, (x * 0.7).exp(), x * x + 0.3]
        })
    }

    #[test]
    fn mesh_basics() {
        let m = Mesh::uniform(1e-3).unwrap();
        assert_eq!(m.intervals(), 1000);
        assert_eq!(m.nodes().len(), 1001);
        assert_eq!(m.x(1000), 1.0);
        assert!(Mesh::uniform(0.3).is_err());
        assert!(Mesh::uniform(-1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(VortexParams::new(0.0, 0.0, 1.0).is_err());
        assert!(VortexParams::new(1.0, -1.0, 1.0).is_err());
        assert!(VortexParams::new(0.5, 0.01, 1.0).is_ok());
    }

    #[test]
    fn b1_conversion_is_identity() {
        let p = Profile::from_fn(params(1.0), Case::Upper, |x| [x.sqrt(), x, x * x]);
        let l = p.to_lowercase().unwrap();
        let (a, c) = (p.eval(0.3).unwrap(), l.eval(0.3).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn lowercase_of_constant() {
        let p = Profile::from_fn(params(0.5), Case::Upper, |_| {
            [Jet::constant(1.0), Jet::constant(0.0), Jet::constant(0.0)]
        });
        let f = p.to_lowercase().unwrap().values(0.6).unwrap()[0];
        assert!((f - 0.64f64.powf(0.25)).abs() < 1e-15);
        assert!(p.to_uppercase().is_err());
    }

    #[test]
    fn case_round_trip() {
        for b in [0.2, 0.6, 1.0, 1.5] {
            let p = smooth(b);
            let back = p.to_lowercase().unwrap().to_uppercase().unwrap();
            for i in 1..20 {
                let x = i as f64 / 20.0;
                let (u, v) = (p.eval(x).unwrap(), back.eval(x).unwrap());
                for k in 0..5 {
                    // values to 1e-12; the k-th derivative of the conversion
                    // factor grows like (1-x^2)^-k
                    let tol = 1e-12 * (1.0 - x * x).powi(-(k as i32)) * (1 + k) as f64;
                    assert!((u.f[k] - v.f[k]).abs() <= tol * (1.0 + u.f[k].abs()));
                    assert!((u.omega[k] - v.omega[k]).abs() <= tol * (1.0 + u.omega[k].abs()));
                }
            }
        }
    }

    #[test]
    fn continuity_examples() {
        // f = sqrt(x(1-x)), b = 1: g = (1-2x) sqrt(1+x) / (2 sqrt x)
        let x = 0.3;
        let f = (Jet::variable(x) * (1.0 - Jet::variable(x))).sqrt().stack();
        let g = continuity_g_from_f(x, &f, 1.0).unwrap();
        let expect = (1.0 - 2.0 * x) * (1.0 + x).sqrt() / (2.0 * x.sqrt());
        assert!((g[0] - expect).abs() < 1e-14);
        assert_eq!(continuity_g_from_f(0.4, &[0.0; 5], 0.5).unwrap(), [0.0; 4]);
        let fx = (Jet::variable(0.5) * (1.0 - Jet::variable(0.5))).stack();
        assert!(continuity_g_from_f(0.5, &fx, 0.5).unwrap()[0].abs() < 1e-15);
        let g_up = continuity_G_from_F(0.5, &(Jet::variable(0.5) * (1.0 - Jet::variable(0.5))).sqrt().stack(), 1.0)
            .unwrap();
        assert!(g_up[0].abs() < 1e-15);
        assert!(continuity_g_from_f(0.5, &f, 2.0).is_err());
    }

    #[test]
    fn upper_and_lower_continuity_agree() {
        let b = 0.7;
        let p = smooth(b).with_g_from_continuity().unwrap();
        let l = smooth(b).to_lowercase().unwrap().with_g_from_continuity().unwrap();
        for x in [0.1, 0.5, 0.9] {
            let g_from_upper = p.eval_in(x, Case::Lower).unwrap().g;
            let g_lower = l.eval(x).unwrap().g;
            for k in 0..4 {
                assert!((g_from_upper[k] - g_lower[k]).abs() < 1e-10 * (1.0 + g_lower[k].abs()));
            }
        }
    }

    #[test]
    fn flux_examples() {
        let q = flux_integral(|x| x).unwrap();
        assert!((q.value - 1.0).abs() < 1e-10);
        assert_eq!(flux_integral(|_| 0.0).unwrap().value, 0.0);
        // g of the b = 1 family integrates to zero
        let q = flux_integral(|x| (1.0 - 2.0 * x) * (1.0 + x).sqrt() / (2.0 * x.sqrt())).unwrap();
        assert!(q.value.abs() < 1e-6, "{}", q.value);
    }

    #[test]
    fn stream_function_examples() {
        let p = Profile::from_fn(params(1.0), Case::Upper, |x| {
            [(x * (1.0 - x)).sqrt(), Jet::constant(0.0), Jet::constant(1.0)]
        });
        assert!((stream_function(2.0, 0.5, &p).unwrap() - 1.0).abs() < 1e-15);
        let p2 = p.with_params(params(2.0));
        assert_eq!(stream_function(1.0, 0.5, &p2).unwrap(), stream_function(7.0, 0.5, &p2).unwrap());
    }

    #[test]
    fn cylindrical_map() {
        assert_eq!(x_from_cylindrical(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(x_from_cylindrical(0.0, 1.0).unwrap(), 1.0);
        assert!((x_from_cylindrical(1.0, 1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(x_from_cylindrical(0.0, 0.0).is_err());
    }

    #[test]
    fn sampled_interpolation_and_poles() {
        let mesh = Mesh::uniform(0.01).unwrap();
        let xs = mesh.nodes();
        let f: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let p = Profile::from_node_values(params(1.0), Case::Upper, 0.0, 0.01, &f, &f, &f).unwrap();
        let v = p.eval(0.123).unwrap();
        assert!((v.f[0] - 0.123f64.sin()).abs() < 1e-7);
        assert!((v.f[1] - 0.123f64.cos()).abs() < 1e-3);
        assert!(p.eval(1.5).is_err());
    }

    #[test]
    fn solution_file_round_trip() {
        let p = smooth(1.0);
        let mesh = Mesh::uniform(0.05).unwrap();
        let sf = SolutionFile::from_profile(&p, &mesh, "test").unwrap();
        let back = SolutionFile::from_json(&sf.to_json().unwrap()).unwrap();
        assert_eq!(sf, back);
        let mut bad = sf.clone();
        bad.f.pop();
        assert!(bad.validate().is_err());
    }
}
