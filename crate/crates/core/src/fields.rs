//! Physical fields rebuilt from a similarity profile: velocity, speed,
//! pressure, the Rayleigh discriminant, streamlines and the velocity decay
//! exponent.

use crate::analytic::pressure_b1;
use crate::error::{Result, VortexError};
use crate::model::{Case, GridSpec, Profile, VortexParams};
use crate::residuals::pressure_from_profile;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A point of the meridional half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    /// Horizontal distance `r` and height `z`.
    Cylindrical { r: f64, z: f64 },
    /// Distance `R` from the origin and polar angle `alpha` from the axis.
    Spherical { big_r: f64, alpha: f64 },
}

impl Point {
    /// `(R, alpha)`.
    pub fn spherical(self) -> (f64, f64) {
        match self {
            Point::Cylindrical { r, z } => (r.hypot(z), r.atan2(z)),
            Point::Spherical { big_r, alpha } => (big_r, alpha),
        }
    }

    /// `(r, z)`.
    pub fn cylindrical(self) -> (f64, f64) {
        match self {
            Point::Cylindrical { r, z } => (r, z),
            Point::Spherical { big_r, alpha } => (big_r * alpha.sin(), big_r * alpha.cos()),
        }
    }
}

/// Spherical components `(v_R, v_alpha, v_theta) = (G, F, Omega) / r^b`.
pub fn velocity_at(profile: &Profile, point: Point) -> Result<[f64; 3]> {
    let (big_r, alpha) = point.spherical();
    let r = big_r * alpha.sin();
    let x = alpha.cos();
    if !(r > 0.0) || !(big_r > 0.0) || !(x >= 0.0) {
        return Err(VortexError::Pole {
            x,
            what: format!("velocity requested on the axis or below the ground (r = {r})"),
        });
    }
    let [f, g, o] = profile.values_in(x.min(1.0), Case::Upper)?;
    let w = r.powf(-profile.params().b);
    Ok([g * w, f * w, o * w])
}

/// Cartesian velocity from spherical components at azimuth `theta`.
pub fn spherical_to_cartesian(alpha: f64, theta: f64, v: [f64; 3]) -> [f64; 3] {
    let (sa, ca) = alpha.sin_cos();
    let (st, ct) = theta.sin_cos();
    let [vr, va, vt] = v;
    let horizontal = vr * sa + va * ca;
    [horizontal * ct - vt * st, horizontal * st + vt * ct, vr * ca - va * sa]
}

/// Velocity at a Cartesian point `(x, y, z)`.
pub fn velocity_cartesian(profile: &Profile, p: [f64; 3]) -> Result<[f64; 3]> {
    let r = p[0].hypot(p[1]);
    let point = Point::Cylindrical { r, z: p[2] };
    let (_, alpha) = point.spherical();
    let v = velocity_at(profile, point)?;
    Ok(spherical_to_cartesian(alpha, p[1].atan2(p[0]), v))
}

pub fn speed_at(profile: &Profile, point: Point) -> Result<f64> {
    let [a, b, c] = velocity_at(profile, point)?;
    Ok((a * a + b * b + c * c).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Speed,
    Pressure,
    /// Cartesian velocity in the plane `y = 0`.
    Velocity,
}

/// Samples on the points of a [`GridSpec`], `z` rows with `r` fastest.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub spec: GridSpec,
    pub kind: FieldKind,
    pub values: Vec<Vec<f64>>,
}

impl FieldGrid {
    fn sample<F>(spec: &GridSpec, kind: FieldKind, f: F) -> Result<FieldGrid>
    where
        F: Fn(f64, f64) -> Result<Vec<f64>> + Sync,
    {
        spec.validate()?;
        let rows: Vec<Vec<Vec<f64>>> = (0..spec.n_z)
            .into_par_iter()
            .map(|j| {
                let z = spec.z(j);
                (0..spec.n_r).map(|i| f(spec.r(i), z)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(FieldGrid {
            spec: *spec,
            kind,
            values: rows.into_iter().flatten().collect(),
        })
    }

    /// Scalar value at grid indices `(i, j)` (first component for vectors).
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.n_r + i][0]
    }

    /// `(min, max)` of the first component.
    pub fn range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v[0]), hi.max(v[0]))
        })
    }

    pub fn to_csv(&self) -> String {
        let header = match self.kind {
            FieldKind::Velocity => "r,z,vx,vy,vz",
            _ => "r,z,value",
        };
        let mut out = format!("{header}\n");
        for (k, [r, z]) in self.spec.points().into_iter().enumerate() {
            out.push_str(&format!("{r:.16e},{z:.16e}"));
            for v in &self.values[k] {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn speed_grid(profile: &Profile, spec: &GridSpec) -> Result<FieldGrid> {
    FieldGrid::sample(spec, FieldKind::Speed, |r, z| {
        Ok(vec![speed_at(profile, Point::Cylindrical { r, z })?])
    })
}

pub fn velocity_grid(profile: &Profile, spec: &GridSpec) -> Result<FieldGrid> {
    FieldGrid::sample(spec, FieldKind::Velocity, |r, z| {
        Ok(velocity_cartesian(profile, [r, 0.0, z])?.to_vec())
    })
}

/// Pressure through the general formula built on the `C_1` / `D_1`
/// expressions of the profile.
pub fn pressure_grid(profile: &Profile, params: VortexParams, t: f64, spec: &GridSpec) -> Result<FieldGrid> {
    FieldGrid::sample(spec, FieldKind::Pressure, |r, z| {
        let big_r = r.hypot(z);
        Ok(vec![pressure_from_profile(big_r, z / big_r, profile, params, t)?])
    })
}

/// Pressure of the inviscid `b = 1` family from its closed form.
pub fn pressure_grid_b1(c1: f64, c_omega: f64, t: f64, spec: &GridSpec) -> Result<FieldGrid> {
    FieldGrid::sample(spec, FieldKind::Pressure, |r, z| {
        let big_r = r.hypot(z);
        Ok(vec![pressure_b1(big_r, z / big_r, c1, c_omega, t)?])
    })
}

/// Rayleigh discriminant
/// `Phi = 2 / r^(2(1+b)) Omega [(1-b) Omega - x (1-x^2) Omega']`.
pub fn rayleigh_phi(profile: &Profile, r: f64, x: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(VortexError::Pole {
            x,
            what: "Rayleigh discriminant on the axis".into(),
        });
    }
    let b = profile.params().b;
    let p = profile.eval_in(x, Case::Upper)?;
    let (om, dom) = (p.omega[0], p.omega[1]);
    Ok(2.0 / r.powf(2.0 * (1.0 + b)) * om * ((1.0 - b) * om - x * (1.0 - x * x) * dom))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
}

pub fn classify_stability(min_phi: f64, tol: f64) -> Stability {
    if min_phi >= -tol {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighSample {
    pub r: f64,
    pub x: f64,
    pub phi: f64,
}

/// `Phi` on the grid points, with the classification of its minimum.
pub fn rayleigh_scan(profile: &Profile, spec: &GridSpec, tol: f64) -> Result<(Vec<RayleighSample>, Stability)> {
    spec.validate()?;
    let samples = spec
        .points()
        .into_iter()
        .map(|[r, z]| {
            let x = z / r.hypot(z);
            Ok(RayleighSample {
                r,
                x,
                phi: rayleigh_phi(profile, r, x)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let min = samples.iter().map(|s| s.phi).fold(f64::INFINITY, f64::min);
    Ok((samples, classify_stability(min, tol)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamlineExit {
    Ground,
    Axis,
    StepCap,
    /// The velocity could not be evaluated.
    Singular,
}

#[derive(Debug, Clone)]
pub struct Streamline {
    pub start: [f64; 3],
    pub dt: f64,
    /// `(t, x, y, z)`.
    pub points: Vec<[f64; 4]>,
    pub exit: StreamlineExit,
}

impl Streamline {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,z\n");
        for [t, x, y, z] in &self.points {
            out.push_str(&format!("{t:.16e},{x:.16e},{y:.16e},{z:.16e}\n"));
        }
        out
    }

    /// Accumulated azimuth change divided by `2 pi` per unit of height lost.
    pub fn revolutions_per_descent(&self) -> f64 {
        let mut turn = 0.0;
        for w in self.points.windows(2) {
            let a0 = w[0][2].atan2(w[0][1]);
            let a1 = w[1][2].atan2(w[1][1]);
            let mut d = a1 - a0;
            if d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            } else if d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            turn += d;
        }
        let z0 = self.points.first().map_or(0.0, |p| p[3]);
        let z1 = self.points.last().map_or(0.0, |p| p[3]);
        turn.abs() / (2.0 * std::f64::consts::PI) / (z0 - z1).abs()
    }
}

/// Paths closer than this to the ground or the axis are stopped.
pub const STREAMLINE_EPS: f64 = 1e-3;

/// Classical fourth-order Runge-Kutta for `dX/dt = v(X)`. A step whose
/// displacement `|v| dt` exceeds a tenth of the distance to the nearest
/// singular line is replaced by halved substeps.
pub fn integrate_streamline(profile: &Profile, start: [f64; 3], dt: f64, max_steps: usize) -> Result<Streamline> {
    if !(dt > 0.0) {
        return Err(VortexError::Domain(format!("time step must be positive, got {dt}")));
    }
    let r0 = start[0].hypot(start[1]);
    if !(r0 > STREAMLINE_EPS && start[2] > STREAMLINE_EPS) {
        return Err(VortexError::Domain("streamline must start off the axis and above the ground".into()));
    }
    let vel = |p: [f64; 3]| velocity_cartesian(profile, p);
    let rk4 = |p: [f64; 3], h: f64| -> Result<[f64; 3]> {
        let add = |a: [f64; 3], k: [f64; 3], s: f64| [a[0] + s * k[0], a[1] + s * k[1], a[2] + s * k[2]];
        let k1 = vel(p)?;
        let k2 = vel(add(p, k1, 0.5 * h))?;
        let k3 = vel(add(p, k2, 0.5 * h))?;
        let k4 = vel(add(p, k3, h))?;
        Ok([0, 1, 2].map(|i| p[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
    };
    let mut p = start;
    let mut t = 0.0;
    let mut points = vec![[0.0, p[0], p[1], p[2]]];
    let mut exit = StreamlineExit::StepCap;
    'outer: for _ in 0..max_steps {
        let v = match vel(p) {
            Ok(v) => v,
            Err(_) => {
                exit = StreamlineExit::Singular;
                break;
            }
        };
        let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let scale = p[0].hypot(p[1]).min(p[2]);
        let mut sub = 1usize;
        while speed * dt / sub as f64 > 0.1 * scale && sub < 1 << 20 {
            sub *= 2;
        }
        let h = dt / sub as f64;
        for _ in 0..sub {
            p = match rk4(p, h) {
                Ok(q) if q.iter().all(|c| c.is_finite()) => q,
                _ => {
                    exit = StreamlineExit::Singular;
                    break 'outer;
                }
            };
            if p[2] <= STREAMLINE_EPS {
                exit = StreamlineExit::Ground;
                points.push([t + h, p[0], p[1], p[2]]);
                break 'outer;
            }
            if p[0].hypot(p[1]) <= STREAMLINE_EPS {
                exit = StreamlineExit::Axis;
                points.push([t + h, p[0], p[1], p[2]]);
                break 'outer;
            }
            t += h;
        }
        points.push([t, p[0], p[1], p[2]]);
    }
    Ok(Streamline {
        start,
        dt,
        points,
        exit,
    })
}

/// Largest relative change of the stream function `R^(2-b) f(x)` along the
/// path.
pub fn psi_drift(profile: &Profile, line: &Streamline) -> Result<f64> {
    let psi = |p: &[f64; 4]| -> Result<f64> {
        let r = p[1].hypot(p[2]);
        let big_r = r.hypot(p[3]);
        crate::model::stream_function(big_r, p[3] / big_r, profile)
    };
    let first = line
        .points
        .first()
        .ok_or_else(|| VortexError::Domain("empty streamline".into()))?;
    let psi0 = psi(first)?;
    if psi0 == 0.0 {
        return Err(VortexError::Domain("stream function vanishes at the start".into()));
    }
    let mut worst: f64 = 0.0;
    for p in &line.points {
        worst = worst.max((psi(p)? - psi0).abs() / psi0.abs());
    }
    Ok(worst)
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(VortexError::DegenerateFit("need at least two (x, y) pairs".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) || !sxy.is_finite() {
        return Err(VortexError::DegenerateFit("abscissae do not vary".into()));
    }
    Ok(sxy / sxx)
}

/// Default radii for [`powerlaw_exponent`]: 10 points spaced geometrically
/// over `[1e-3, 1e-2]`.
pub fn default_powerlaw_radii() -> Vec<f64> {
    (0..10).map(|i| 1e-3 * 10f64.powf(i as f64 / 9.0)).collect()
}

/// Slope of `ln(speed)` against `ln(r)` at height `z0`.
pub fn powerlaw_exponent(profile: &Profile, z0: f64, r_samples: &[f64]) -> Result<f64> {
    if !(z0 > 0.0) {
        return Err(VortexError::Domain(format!("height must be positive, got {z0}")));
    }
    if r_samples.iter().any(|r| !(*r > 0.0)) {
        return Err(VortexError::Domain("radii must be positive".into()));
    }
    let ys = r_samples
        .iter()
        .map(|&r| speed_at(profile, Point::Cylindrical { r, z: z0 }).map(f64::ln))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = r_samples.iter().map(|r| r.ln()).collect();
    let slope = least_squares_slope(&xs, &ys)?;
    if !slope.is_finite() {
        return Err(VortexError::DegenerateFit("speed is not positive at every radius".into()));
    }
    Ok(slope)
}
