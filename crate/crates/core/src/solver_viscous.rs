//! Viscous `b = 1` boundary-value problem and the boundary-layer experiment.
//!
//! The coupled system
//!
//! ```text
//! nu S^2 F'''' - 4 nu x S F''' + S (F F''' + 3 F' F'') + 2 Omega Omega' = 0
//! nu S Omega'' + F Omega' = 0,                       S = 1 - x^2
//! ```
//!
//! is collocated at the interior nodes of a uniform mesh with second-order
//! central differences. Five boundary conditions are imposed strongly
//! (`F(0) = F'(0) = 0`, `Omega(0) = 0`, `F(1) = 0`, `Omega(1) = C_omega`);
//! `F'(0) = 0` enters through the even ghost value `F(-h) = F(h)`. The sixth
//! condition is the `closure` value of `F''` at the first interior node. It
//! replaces the momentum equation at the last interior node.

use crate::banded::Banded;
use crate::error::{Result, VortexError};
use crate::model::{Case, Mesh, Profile, SolutionFile, VortexParams};
use crate::newton::{self, NewtonOptions, NewtonSystem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Default deviation threshold for [`layer_size`].
pub const DEFAULT_DELTA: f64 = 0.05;

/// Window on which the outer amplitude of `F / sqrt(x(1-x))` is fitted.
pub const OUTER_WINDOW: (f64, f64) = (0.5, 0.95);

#[derive(Debug, Clone, Copy)]
pub struct ViscousProblem {
    pub nu: f64,
    pub c_omega: f64,
    pub mesh: Mesh,
    /// `F''` at the first interior node.
    pub closure: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl ViscousProblem {
    pub fn new(nu: f64, c_omega: f64, mesh: Mesh) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(VortexError::Domain(format!("viscosity must be positive, got {nu}")));
        }
        if !c_omega.is_finite() {
            return Err(VortexError::Domain("C_omega must be finite".into()));
        }
        if mesh.intervals() < 8 {
            return Err(VortexError::Domain("mesh needs at least 8 intervals".into()));
        }
        Ok(ViscousProblem {
            nu,
            c_omega,
            mesh,
            closure: 0.0,
            // The momentum rows carry nu / h^4 times the rounding error of F,
            // so corrections below ~1e-7 are noise on fine meshes.
            tol: 1e-9,
            max_iter: 60,
        })
    }

    /// Problem on the coarsest uniform mesh with `h <= nu / 4`.
    pub fn resolved(nu: f64, c_omega: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(VortexError::Domain(format!("viscosity must be positive, got {nu}")));
        }
        ViscousProblem::new(nu, c_omega, Mesh::with_intervals(resolving_intervals(nu))?)
    }

    pub fn with_closure(mut self, closure: f64) -> Self {
        self.closure = closure;
        self
    }

    /// `k = 1 / (2 nu)`.
    pub fn k(&self) -> f64 {
        0.5 / self.nu
    }

    /// Whether the step resolves the layer (`h <= nu / 4`).
    pub fn resolves_layer(&self) -> bool {
        self.mesh.h() <= 0.25 * self.nu * (1.0 + 1e-12)
    }

    fn options(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            max_halvings: 30,
        }
    }
}

/// Number of intervals of the coarsest mesh with `h <= nu / 4`.
pub fn resolving_intervals(nu: f64) -> usize {
    ((4.0 / nu) * (1.0 - 1e-12)).ceil().max(8.0) as usize
}

#[derive(Debug, Clone)]
pub struct ViscousSolution {
    pub nu: f64,
    pub c_omega: f64,
    pub mesh: Mesh,
    pub closure: f64,
    /// `F` at every node, boundaries included.
    pub f: Vec<f64>,
    pub omega: Vec<f64>,
    pub residual_norm: f64,
    pub newton_iters: usize,
}

impl ViscousSolution {
    /// Sampled upper-case profile with `G = sqrt(1-x^2) F'`.
    pub fn profile(&self) -> Result<Profile> {
        let params = VortexParams::new(1.0, self.nu, self.c_omega)?;
        let zeros = vec![0.0; self.f.len()];
        Profile::from_node_values(params, Case::Upper, 0.0, self.mesh.h(), &self.f, &zeros, &self.omega)?
            .with_g_from_continuity()
    }

    /// Least-squares amplitude `A` of `F ~ A sqrt(x(1-x))` on [`OUTER_WINDOW`].
    pub fn outer_amplitude(&self) -> f64 {
        outer_amplitude(&self.mesh, &self.f)
    }
}

fn outer_amplitude(mesh: &Mesh, f: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in f.iter().enumerate() {
        let x = mesh.x(i);
        if x >= OUTER_WINDOW.0 - 1e-12 && x <= OUTER_WINDOW.1 + 1e-12 {
            let w = (x * (1.0 - x)).sqrt();
            num += v * w;
            den += w * w;
        }
    }
    num / den
}

struct Collocation {
    nu: f64,
    c_omega: f64,
    closure: f64,
    n: usize,
    h: f64,
}

impl Collocation {
    fn new(p: &ViscousProblem) -> Self {
        Collocation {
            nu: p.nu,
            c_omega: p.c_omega,
            closure: p.closure,
            n: p.mesh.intervals(),
            h: p.mesh.h(),
        }
    }

    fn dim(&self) -> usize {
        2 * (self.n - 1)
    }

    fn f_col(j: usize) -> usize {
        2 * (j - 1)
    }

    fn w_col(j: usize) -> usize {
        2 * (j - 1) + 1
    }

    /// Rows: the closure first, then the momentum and swirl equations of
    /// nodes `1..n-2` interleaved, then the swirl equation of node `n-1`.
    fn f_row(i: usize) -> usize {
        2 * i - 1
    }

    fn w_row(&self, i: usize) -> usize {
        if i + 1 == self.n {
            2 * self.n - 3
        } else {
            2 * i
        }
    }

    /// Unknown index of `F` at node `j`, folding the ghost node `-1` onto 1.
    fn f_unknown(&self, j: i64) -> Option<usize> {
        let j = if j == -1 { 1 } else { j };
        (j >= 1 && (j as usize) < self.n).then(|| Self::f_col(j as usize))
    }

    fn f_at(&self, u: &[f64], j: i64) -> f64 {
        self.f_unknown(j).map_or(0.0, |k| u[k])
    }

    fn w_at(&self, u: &[f64], j: usize) -> f64 {
        if j == 0 {
            0.0
        } else if j == self.n {
            self.c_omega
        } else {
            u[Self::w_col(j)]
        }
    }

    /// Central stencils `(offsets, weights)` for `F^(d)`, `d = 1..4`.
    fn stencils(&self) -> [(Vec<i64>, Vec<f64>); 4] {
        let h = self.h;
        [
            (vec![-1, 1], vec![-0.5 / h, 0.5 / h]),
            (vec![-1, 0, 1], vec![1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)]),
            (vec![-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5].map(|w| w / h.powi(3)).to_vec()),
            (vec![-2, -1, 0, 1, 2], [1.0, -4.0, 6.0, -4.0, 1.0].map(|w| w / h.powi(4)).to_vec()),
        ]
    }

    fn f_derivs(&self, u: &[f64], i: usize, st: &[(Vec<i64>, Vec<f64>); 4]) -> [f64; 5] {
        let mut d = [self.f_at(u, i as i64), 0.0, 0.0, 0.0, 0.0];
        for (k, (offs, ws)) in st.iter().enumerate() {
            d[k + 1] = offs.iter().zip(ws).map(|(o, w)| w * self.f_at(u, i as i64 + o)).sum();
        }
        d
    }

    fn closure_row(&self, u: &[f64]) -> f64 {
        (self.f_at(u, 2) - 2.0 * self.f_at(u, 1)) / (self.h * self.h) - self.closure
    }
}

impl NewtonSystem for Collocation {
    fn residual(&self, u: &[f64]) -> Vec<f64> {
        let st = self.stencils();
        let h = self.h;
        let mut r = vec![0.0; self.dim()];
        r[0] = self.closure_row(u);
        for i in 1..self.n {
            let x = i as f64 * h;
            let s = 1.0 - x * x;
            let (wm, w0, wp) = (self.w_at(u, i - 1), self.w_at(u, i), self.w_at(u, i + 1));
            let w1 = (wp - wm) / (2.0 * h);
            let w2 = (wp - 2.0 * w0 + wm) / (h * h);
            let f = self.f_derivs(u, i, &st);
            if i + 1 < self.n {
                r[Self::f_row(i)] = self.nu * s * f[4] - 4.0 * self.nu * x * f[3]
                    + f[0] * f[3]
                    + 3.0 * f[1] * f[2]
                    + 2.0 * w0 * w1 / s;
            }
            r[self.w_row(i)] = self.nu * s * w2 + f[0] * w1;
        }
        r
    }

    fn jacobian(&self, u: &[f64]) -> Banded {
        let st = self.stencils();
        let h = self.h;
        let mut jac = Banded::zeros(self.dim(), 6, 6);
        jac.add(0, Self::f_col(1), -2.0 / (h * h));
        jac.add(0, Self::f_col(2), 1.0 / (h * h));
        for i in 1..self.n {
            let x = i as f64 * h;
            let s = 1.0 - x * x;
            let (wm, w0, wp) = (self.w_at(u, i - 1), self.w_at(u, i), self.w_at(u, i + 1));
            let w1 = (wp - wm) / (2.0 * h);
            let f = self.f_derivs(u, i, &st);
            let add_w = |jac: &mut Banded, row: usize, j: usize, v: f64| {
                if j >= 1 && j < self.n {
                    jac.add(row, Self::w_col(j), v);
                }
            };
            if i + 1 < self.n {
                let row = Self::f_row(i);
                // Partial derivatives with respect to F, F', F'', F''', F''''.
                let pf = [
                    f[3],
                    3.0 * f[2],
                    3.0 * f[1],
                    f[0] - 4.0 * self.nu * x,
                    self.nu * s,
                ];
                jac.add(row, Self::f_col(i), pf[0]);
                for (d, (offs, ws)) in st.iter().enumerate() {
                    for (o, w) in offs.iter().zip(ws) {
                        if let Some(k) = self.f_unknown(i as i64 + o) {
                            jac.add(row, k, pf[d + 1] * w);
                        }
                    }
                }
                add_w(&mut jac, row, i, 2.0 * w1 / s);
                add_w(&mut jac, row, i - 1, -w0 / (s * h));
                add_w(&mut jac, row, i + 1, w0 / (s * h));
            }
            let row = self.w_row(i);
            jac.add(row, Self::f_col(i), w1);
            let a = self.nu * s / (h * h);
            let c = f[0] / (2.0 * h);
            add_w(&mut jac, row, i - 1, a - c);
            add_w(&mut jac, row, i, -2.0 * a);
            add_w(&mut jac, row, i + 1, a + c);
        }
        jac
    }
}

/// Initial guess `F = C_omega sqrt(x(1-x)) (1 - e^{-x/d})^2`,
/// `Omega = C_omega (1 - e^{-x/d})` with `d = nu^(2/3)`.
pub fn initial_guess(problem: &ViscousProblem) -> (Vec<f64>, Vec<f64>) {
    let d = problem.nu.powf(2.0 / 3.0);
    let c = problem.c_omega;
    let nodes = problem.mesh.nodes();
    let f = nodes
        .iter()
        .map(|&x| c * (x * (1.0 - x)).sqrt() * (1.0 - (-x / d).exp()).powi(2))
        .collect();
    let w = nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| if i == nodes.len() - 1 { c } else { c * (1.0 - (-x / d).exp()) })
        .collect();
    (f, w)
}

/// Damped Newton from the given node values (boundary entries are ignored
/// and replaced by the boundary data).
pub fn newton_solve(problem: &ViscousProblem, f0: &[f64], w0: &[f64]) -> Result<ViscousSolution> {
    let n = problem.mesh.intervals();
    if f0.len() != n + 1 || w0.len() != n + 1 {
        return Err(VortexError::Domain(format!(
            "initial guess has {} / {} nodes, mesh has {}",
            f0.len(),
            w0.len(),
            n + 1
        )));
    }
    let col = Collocation::new(problem);
    let mut u = vec![0.0; col.dim()];
    for j in 1..n {
        u[Collocation::f_col(j)] = f0[j];
        u[Collocation::w_col(j)] = w0[j];
    }
    let out = newton::damped_newton(&col, u, problem.options())?;
    let mut f = vec![0.0; n + 1];
    let mut omega = vec![0.0; n + 1];
    for j in 1..n {
        f[j] = out.u[Collocation::f_col(j)];
        omega[j] = out.u[Collocation::w_col(j)];
    }
    omega[n] = problem.c_omega;
    Ok(ViscousSolution {
        nu: problem.nu,
        c_omega: problem.c_omega,
        mesh: problem.mesh,
        closure: problem.closure,
        f,
        omega,
        residual_norm: out.residual_norm,
        newton_iters: out.iterations,
    })
}

/// Solves the system for the problem's fixed closure value. A cold start
/// that fails is retried by continuation in the closure, starting from
/// [`closure_estimate`] and halving the increment after every failure.
pub fn solve_serrin_b1(problem: &ViscousProblem) -> Result<ViscousSolution> {
    let (f, w) = initial_guess(problem);
    let cold = newton_solve(problem, &f, &w);
    if cold.is_ok() {
        return cold;
    }
    let start = closure_estimate(problem.nu, problem.c_omega);
    let mut sol = newton_solve(&problem.with_closure(start), &f, &w).map_err(|_| cold.unwrap_err())?;
    let target = problem.closure;
    let mut step = target - start;
    let mut attempts = 0;
    while sol.closure != target {
        attempts += 1;
        if attempts > 200 || step.abs() < 1e-9 * (1.0 + target.abs()) {
            return Err(VortexError::NonConvergence {
                iterations: attempts,
                residual: (target - sol.closure).abs(),
            });
        }
        let next = if (target - sol.closure).abs() <= step.abs() { target } else { sol.closure + step };
        match newton_solve(&problem.with_closure(next), &sol.f, &sol.omega) {
            Ok(s) => {
                sol = s;
                step *= 1.5;
            }
            Err(_) => step *= 0.5,
        }
    }
    Ok(sol)
}

/// Starting value for the calibration. Calibrated runs follow
/// `closure ~ 0.45 C_omega / nu` closely over `nu` in `[5e-4, 2e-2]`.
pub fn closure_estimate(nu: f64, c_omega: f64) -> f64 {
    0.45 * c_omega / nu
}

/// One secant iterate of the closure calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStep {
    pub closure: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone)]
pub struct CalibratedSolution {
    pub solution: ViscousSolution,
    pub history: Vec<CalibrationStep>,
}

/// Chooses the closure so that the outer amplitude of `F / sqrt(x(1-x))`
/// equals `C_omega`, by the secant method with warm-started solves.
pub fn calibrate(problem: &ViscousProblem) -> Result<CalibratedSolution> {
    let target = problem.c_omega;
    let scale = target.abs().max(1e-300);
    let (f0, w0) = initial_guess(problem);
    // First run at the curvature of the initial guess, which always
    // converges from that guess; the second aims at the empirical estimate.
    let h = problem.mesh.h();
    let k0 = (f0[2] - 2.0 * f0[1]) / (h * h);
    let mut history = Vec::new();
    let mut run = |closure: f64, f: &[f64], w: &[f64]| -> Result<(ViscousSolution, f64)> {
        let sol = newton_solve(&problem.with_closure(closure), f, w)?;
        let amp = sol.outer_amplitude();
        history.push(CalibrationStep {
            closure,
            amplitude: amp,
        });
        Ok((sol, amp - target))
    };
    let (s0, mut e0) = run(k0, &f0, &w0)?;
    let mut k1 = closure_estimate(problem.nu, target);
    let (mut sol, mut e1) = loop {
        match run(k1, &s0.f, &s0.omega) {
            Ok(v) => break v,
            Err(e) if (k1 - k0).abs() < 1e-6 * (1.0 + k0.abs()) => return Err(e),
            Err(_) => k1 = k0 + 0.5 * (k1 - k0),
        }
    };
    let (mut c0, mut c1) = (k0, k1);
    for _ in 0..40 {
        if e1.abs() <= 1e-7 * scale {
            return Ok(CalibratedSolution { solution: sol, history });
        }
        if e1 == e0 {
            break;
        }
        let mut step = -e1 * (c1 - c0) / (e1 - e0);
        if !step.is_finite() {
            break;
        }
        // Keep every secant step within half the current closure and halve
        // it whenever the warm-started solve fails.
        let cap = 0.5 * c1.abs().max(1.0);
        step = step.clamp(-cap, cap);
        let (c2, s2, e2) = loop {
            match run(c1 + step, &sol.f, &sol.omega) {
                Ok((s2, e2)) => break (c1 + step, s2, e2),
                Err(e) if step.abs() < 1e-9 * (1.0 + c1.abs()) => return Err(e),
                Err(_) => step *= 0.5,
            }
        };
        (c0, e0, c1, e1, sol) = (c1, e1, c2, e2, s2);
    }
    // Secant stalls only on the rounding floor of the amplitude.
    if e1.abs() <= 1e-6 * scale {
        return Ok(CalibratedSolution { solution: sol, history });
    }
    Err(VortexError::NonConvergence {
        iterations: history.len(),
        residual: e1.abs(),
    })
}

/// Solution file with generator `newton-viscous-b1`.
pub fn solution_file(cal: &CalibratedSolution) -> Result<SolutionFile> {
    let sol = &cal.solution;
    let profile = sol.profile()?;
    let mut file = SolutionFile::from_profile(&profile, &sol.mesh, "newton-viscous-b1")?;
    file.residual_norm = sol.residual_norm;
    file.meta = Some(json!({
        "nu": sol.nu,
        "k": 0.5 / sol.nu,
        "closure": sol.closure,
        "h": sol.mesh.h(),
        "iters": sol.newton_iters,
        "calibration": {
            "target": "outer amplitude of F/sqrt(x(1-x)) on [0.5, 0.95] equals C_omega",
            "steps": cal.history,
        },
    }));
    Ok(file)
}

/// `sup { x : |Omega(x) - C_omega| > delta |C_omega| }`, located on the
/// sample nodes (or a uniform scan of 10^4 cells for closed forms) with
/// linear interpolation of the crossing. The empty set gives 0.
pub fn layer_size(profile: &Profile, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(VortexError::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let c = profile.params().c_omega;
    let xs: Vec<f64> = match profile.samples() {
        Some(s) => (0..s.len()).map(|i| s.x(i)).filter(|x| (0.0..=1.0).contains(x)).collect(),
        None => (0..=10_000).map(|i| i as f64 / 10_000.0).collect(),
    };
    let thr = delta * c.abs();
    let excess: Vec<f64> = xs
        .iter()
        .map(|&x| profile.values_in(x, Case::Upper).map(|v| (v[2] - c).abs() - thr))
        .collect::<Result<_>>()?;
    let Some(last) = excess.iter().rposition(|e| *e > 0.0) else {
        return Ok(0.0);
    };
    if last + 1 == xs.len() {
        return Err(VortexError::Domain(format!(
            "Omega deviates by more than delta = {delta} at x = 1; no crossing"
        )));
    }
    let (a, b) = (excess[last], excess[last + 1]);
    Ok(xs[last] + (xs[last + 1] - xs[last]) * a / (a - b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerMeasurement {
    pub nu: f64,
    pub layer_x: f64,
    pub delta: f64,
}

/// Smallest spread of `log10(nu)` accepted by [`layer_slope`].
pub const MIN_DECADES: f64 = 1.0;

/// Least-squares slope of `ln(layer_x)` against `ln(nu)`.
pub fn layer_slope(points: &[LayerMeasurement]) -> Result<f64> {
    if points.len() < 4 {
        return Err(VortexError::DegenerateFit(format!(
            "need at least 4 layer measurements, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !(p.nu > 0.0 && p.layer_x > 0.0)) {
        return Err(VortexError::DegenerateFit("viscosities and layer sizes must be positive".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.nu.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.layer_x.ln()).collect();
    let span = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if span < MIN_DECADES * std::f64::consts::LN_10 * (1.0 - 1e-9) {
        return Err(VortexError::DegenerateFit(format!(
            "viscosities must span at least {MIN_DECADES} decade(s)"
        )));
    }
    crate::fields::least_squares_slope(&xs, &ys)
}

#[derive(Debug, Clone)]
pub struct LayerScaling {
    pub measurements: Vec<LayerMeasurement>,
    pub slope: f64,
}

/// Calibrated runs for every viscosity (in parallel), their layer sizes and
/// the fitted slope.
pub fn layer_scaling(nu_list: &[f64], c_omega: f64, delta: f64) -> Result<LayerScaling> {
    let measurements = nu_list
        .par_iter()
        .map(|&nu| {
            let cal = calibrate(&ViscousProblem::resolved(nu, c_omega)?)?;
            let layer_x = layer_size(&cal.solution.profile()?, delta)?;
            Ok(LayerMeasurement { nu, layer_x, delta })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = layer_slope(&measurements)?;
    Ok(LayerScaling { measurements, slope })
}

/// CSV with columns `nu,layer_x`.
pub fn layer_csv(points: &[LayerMeasurement]) -> String {
    let mut out = String::from("nu,layer_x\n");
    for p in points {
        out.push_str(&format!("{:.16e},{:.16e}\n", p.nu, p.layer_x));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::trivial_solution;
    use crate::jet::Jet;
    use crate::residuals::{ns_residuals, EquationId};

    fn calibrated(nu: f64) -> CalibratedSolution {
        calibrate(&ViscousProblem::resolved(nu, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn problem_validation() {
        let mesh = Mesh::with_intervals(100).unwrap();
        assert!(ViscousProblem::new(0.0, 1.0, mesh).is_err());
        assert!(ViscousProblem::new(-1.0, 1.0, mesh).is_err());
        assert!(ViscousProblem::new(0.01, f64::NAN, mesh).is_err());
        assert_eq!(resolving_intervals(0.01), 400);
        assert_eq!(resolving_intervals(1.0 / 2000.0), 8000);
        let p = ViscousProblem::resolved(0.01, 1.0).unwrap();
        assert!(p.resolves_layer());
        assert!(!ViscousProblem::new(0.01, 1.0, mesh).unwrap().resolves_layer());
        assert!((p.k() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = ViscousProblem::new(0.05, 1.0, Mesh::with_intervals(16).unwrap())
            .unwrap()
            .with_closure(3.0);
        let col = Collocation::new(&p);
        let u: Vec<f64> = (0..col.dim()).map(|k| 0.3 + 0.1 * (k as f64 * 0.7).sin()).collect();
        let jac = col.jacobian(&u);
        let eps = 1e-6;
        for j in 0..col.dim() {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += eps;
            um[j] -= eps;
            let (rp, rm) = (col.residual(&up), col.residual(&um));
            for i in 0..col.dim() {
                let fd = (rp[i] - rm[i]) / (2.0 * eps);
                let an = jac.get(i, j);
                assert!((fd - an).abs() <= 1e-5 * (1.0 + an.abs()), "({i},{j}): {fd} vs {an}");
            }
        }
    }

    #[test]
    fn calibrated_run_satisfies_boundary_data_and_equations() {
        let nu = 1.0 / 200.0;
        let cal = calibrated(nu);
        let s = &cal.solution;
        let n = s.f.len() - 1;
        assert_eq!(s.f[0], 0.0);
        assert_eq!(s.f[n], 0.0);
        assert_eq!(s.omega[0], 0.0);
        assert_eq!(s.omega[n], 1.0);
        assert!((s.outer_amplitude() - 1.0).abs() <= 1e-6);
        // F'(0) = 0 through the even ghost node: the one-sided slope is O(h).
        let h = s.mesh.h();
        assert!(((s.f[1] - s.f[0]) / h).abs() <= 10.0 * h * s.closure.abs());

        let prof = s.profile().unwrap();
        let window = (2.0 * h - 1e-12, 1.0 - 2.0 * h + 1e-12);
        let reps: Vec<_> = ns_residuals(&prof, prof.params(), &s.mesh)
            .unwrap()
            .into_iter()
            .map(|r| r.restricted(window.0, window.1))
            .collect();
        let f4 = prof
            .samples()
            .unwrap()
            .nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| (2..n - 1).contains(i))
            .map(|(_, p)| p.f[4].abs())
            .fold(0.0, f64::max);
        for r in &reps {
            assert!(matches!(r.equation, EquationId::SerrinSys1 | EquationId::SerrinSys2));
            assert!(r.sup_norm <= 1e-6 * (1.0 + f4), "{}: {} vs {}", r.equation, r.sup_norm, f4);
        }

        // Outside the layer the swirl matches the inviscid value C_omega.
        for (i, w) in s.omega.iter().enumerate() {
            if s.mesh.x(i) >= 0.2 {
                assert!((w - 1.0).abs() <= 0.05, "x = {}: {w}", s.mesh.x(i));
            }
        }
        let xs = layer_size(&prof, DEFAULT_DELTA).unwrap();
        for (i, w) in s.omega.iter().enumerate() {
            if s.mesh.x(i) > 2.0 * xs {
                assert!((w - 1.0).abs() <= 2.0 * DEFAULT_DELTA);
            }
        }
        // No interior extremum of Omega strictly between 0 and C_omega.
        for i in 1..n {
            let (a, b, c) = (s.omega[i - 1], s.omega[i], s.omega[i + 1]);
            let tol = 1e-9;
            if b > tol && b < 1.0 - tol {
                let peak = b > a + tol && b > c + tol;
                let dip = b < a - tol && b < c - tol;
                assert!(!(peak || dip), "extremum at x = {}", s.mesh.x(i));
            }
        }
        let file = solution_file(&cal).unwrap();
        assert_eq!(file.generator, "newton-viscous-b1");
        let meta = file.meta.unwrap();
        assert!((meta["k"].as_f64().unwrap() - 100.0).abs() < 1e-9);
        assert!(meta["calibration"]["steps"].as_array().unwrap().len() >= 2);
    }

    #[test]
    fn layer_shrinks_with_viscosity() {
        let thick = layer_size(&calibrated(1.0 / 200.0).solution.profile().unwrap(), 0.05).unwrap();
        let thin = layer_size(&calibrated(1.0 / 2000.0).solution.profile().unwrap(), 0.05).unwrap();
        assert!(thin < thick, "{thin} vs {thick}");
        assert!(thick > 0.0 && thick < 1.0 && thin > 0.0);
    }

    #[test]
    fn fixed_closure_cold_start() {
        let p = ViscousProblem::resolved(0.02, 1.0).unwrap();
        let cal = calibrate(&p).unwrap().solution;
        let fixed = solve_serrin_b1(&p.with_closure(cal.closure)).unwrap();
        let diff = fixed.f.iter().zip(&cal.f).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff <= 1e-6, "{diff}");
    }

    #[test]
    fn zero_swirl_gives_zero_profile() {
        let p = ViscousProblem::resolved(0.01, 0.0).unwrap().with_closure(0.0);
        let s = solve_serrin_b1(&p).unwrap();
        assert!(s.f.iter().chain(&s.omega).all(|v| v.abs() <= 1e-12));
        // Small imposed swirl with closure 0 gives a small response.
        let small = solve_serrin_b1(&ViscousProblem::resolved(0.01, 1e-3).unwrap()).unwrap();
        let sup = small.f.iter().chain(&small.omega).fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(sup <= 1e-2, "{sup}");
    }

    #[test]
    fn mesh_refinement_converges() {
        let nu = 0.02;
        let run = |n: usize| {
            let p = ViscousProblem::new(nu, 1.0, Mesh::with_intervals(n).unwrap()).unwrap();
            let s = calibrate(&p).unwrap().solution;
            s.omega[n / 10]
        };
        let (a, b, c) = (run(200), run(400), run(800));
        // The axis end limits the observed order to about one; the
        // differences must still contract.
        let ratio = (a - b) / (b - c);
        assert!(ratio > 1.8 && ratio < 5.5, "ratio {ratio}");
    }

    #[test]
    fn layer_size_examples() {
        let params = VortexParams::new(1.0, 0.01, 1.0).unwrap();
        let flat = trivial_solution(VortexParams::inviscid(1.0, 1.0).unwrap()).profile();
        assert_eq!(layer_size(&flat, 0.05).unwrap(), 0.0);
        let ramp = Profile::from_fn(params, Case::Upper, |x: Jet| {
            let w = if x.value() < 0.1 { x / 0.1 } else { Jet::constant(1.0) };
            [Jet::constant(0.0), Jet::constant(0.0), w]
        });
        assert!((layer_size(&ramp, 0.05).unwrap() - 0.095).abs() < 1e-12);
        assert!(layer_size(&ramp, 0.0).is_err());
        assert!(layer_size(&ramp, 1.0).is_err());
        let off = Profile::from_fn(params, Case::Upper, |_x: Jet| {
            [Jet::constant(0.0), Jet::constant(0.0), Jet::constant(0.5)]
        });
        assert!(layer_size(&off, 0.05).is_err());
    }

    #[test]
    fn slope_fits() {
        let nus = [1e-2, 5e-3, 2e-3, 1e-3, 5e-4];
        let pts = |f: &dyn Fn(f64) -> f64| -> Vec<LayerMeasurement> {
            nus.iter()
                .map(|&nu| LayerMeasurement {
                    nu,
                    layer_x: f(nu),
                    delta: 0.05,
                })
                .collect()
        };
        let s = layer_slope(&pts(&|nu| nu.powf(2.0 / 3.0))).unwrap();
        assert!((s - 2.0 / 3.0).abs() <= 1e-12);
        assert!(layer_slope(&pts(&|_| 0.2)).unwrap().abs() <= 1e-12);
        assert!(layer_slope(&pts(&|nu| nu)[..3]).is_err());
        let narrow: Vec<_> = [1e-2, 8e-3, 6e-3, 4e-3]
            .iter()
            .map(|&nu| LayerMeasurement {
                nu,
                layer_x: nu,
                delta: 0.05,
            })
            .collect();
        assert!(layer_slope(&narrow).is_err());
        let csv = layer_csv(&pts(&|nu| nu)[..1]);
        assert!(csv.starts_with("nu,layer_x\n1.0000000000000000e-2,"));
    }
}
