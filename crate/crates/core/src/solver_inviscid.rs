//! Finite-difference solver for the inviscid problem with `0 < b < 1`.
//!
//! The unknown is `p = gamma^2`, where the meridional and azimuthal
//! components are `f = gamma (1-x^2)^((2-b)/2)` and
//! `Omega = c gamma^((1-b)/(2-b))`. With that substitution the azimuthal
//! equation holds identically and the meridional one becomes a single third
//! order ODE for `p` with `p(0) = 0`, `p(1) = 1`:
//!
//! ```text
//! p^2 [ (1-x^2)((1-x^2) p''' - 2(4-b) x p'') - 2(2+b-3(2-b)x^2) p' ]
//!   + 2 c^2 (1-b) p^((3-2b)/(2-b)) p'
//!   + k (1-x^2) p' [ (1-x^2) p'^2 - 2 p ((1-x^2) p'' - (2-b) x p') ] = 0,
//! ```
//!
//! with `k = (1-b)/(2-b)`. It is collocated at the interior nodes of a
//! uniform mesh and solved by damped Newton iteration.

use crate::banded::Banded;
use crate::error::{Result, VortexError};
use crate::jet::Jet;
use crate::model::{sin_power, Case, Mesh, Profile, ProfilePoint, Sampled, SolutionFile, VortexParams};
use crate::newton::{self, NewtonOptions, NewtonSystem};
use crate::stencil::{self, Stencil};
use rayon::prelude::*;
use serde_json::json;

/// Iterates with `p` below this are rejected by the line search.
pub const NEGATIVITY_FLOOR: f64 = -1e-12;
const POWER_GUARD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    pub max_halvings: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch { max_halvings: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InviscidProblem {
    pub b: f64,
    /// Swirl constant: `Omega -> c` as `x -> 1` before normalization.
    pub c: f64,
    pub mesh: Mesh,
    /// Convergence threshold on the sup-norm of the Newton correction.
    pub tol: f64,
    pub max_iter: usize,
    pub line_search: LineSearch,
}

impl InviscidProblem {
    pub fn new(b: f64, c: f64, mesh: Mesh) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(VortexError::Domain(format!(
                "the inviscid solver requires 0 < b < 1, got b = {b}"
            )));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(VortexError::Domain(format!("c must be positive, got {c}")));
        }
        if mesh.intervals() < 8 {
            return Err(VortexError::Domain("the mesh needs at least 8 intervals".into()));
        }
        Ok(InviscidProblem {
            b,
            c,
            mesh,
            tol: 1e-10,
            max_iter: 50,
            line_search: LineSearch::default(),
        })
    }

    pub fn with_step(b: f64, c: f64, h: f64) -> Result<Self> {
        Self::new(b, c, Mesh::uniform(h)?)
    }

    fn options(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            max_halvings: self.line_search.max_halvings,
        }
    }
}

/// Converged node values of `p` on the problem mesh, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct PSolution {
    pub p: Vec<f64>,
    /// Sup-norm of the collocation residual at the returned iterate.
    pub residual_norm: f64,
    pub newton_iters: usize,
}

/// `p0 = (2x/(1+x))^(2-b)` at the mesh nodes.
pub fn initial_guess(b: f64, mesh: &Mesh) -> Result<Vec<f64>> {
    if !(b > 0.0 && b < 1.0) {
        return Err(VortexError::Domain(format!("initial guess requires 0 < b < 1, got {b}")));
    }
    Ok(mesh
        .nodes()
        .into_iter()
        .map(|x| (2.0 * x / (1.0 + x)).powf(2.0 - b))
        .collect())
}

/// The closed-form pair behind [`initial_guess`], in lower case:
/// `f0 = 2^((1-b)/2) (x(1-x))^((2-b)/2)`, `Omega0 = (2x/(1+x))^((1-b)/2)`,
/// with `g` from continuity.
pub fn initial_guess_profile(b: f64) -> Result<Profile> {
    let params = VortexParams::inviscid(b, 1.0)?;
    let prof = Profile::from_fn(params, Case::Lower, move |x: Jet| {
        let f = (x * (1.0 - x)).powf(0.5 * (2.0 - b)) * 2f64.powf(0.5 * (1.0 - b));
        let om = (x * 2.0 / (x + 1.0)).powf(0.5 * (1.0 - b));
        [f, Jet::constant(0.0), om * sin_power(x, 0.5 * (1.0 - b))]
    });
    prof.with_g_from_continuity()
}

struct Collocation {
    b: f64,
    c: f64,
    h: f64,
    n: usize,
    x: Vec<f64>,
    st3: Vec<Stencil>,
}

/// Coefficients of the node residual and its partial derivatives with
/// respect to `p, p', p'', p'''`.
struct NodeEval {
    r: f64,
    dp: f64,
    d1: f64,
    d2: f64,
    d3: f64,
}

impl Collocation {
    fn new(problem: &InviscidProblem) -> Self {
        let n = problem.mesh.intervals();
        let h = problem.mesh.h();
        Collocation {
            b: problem.b,
            c: problem.c,
            h,
            n,
            x: problem.mesh.nodes(),
            st3: (0..=n).map(|i| Stencil::second_order(i, n + 1, 3, h)).collect(),
        }
    }

    fn full(&self, u: &[f64]) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n + 1);
        p.push(0.0);
        p.extend_from_slice(u);
        p.push(1.0);
        p
    }

    fn node(&self, p: &[f64], i: usize) -> NodeEval {
        let (b, c, h) = (self.b, self.c, self.h);
        let x = self.x[i];
        let s = 1.0 - x * x;
        let pp = p[i];
        let d1 = (p[i + 1] - p[i - 1]) / (2.0 * h);
        let d2 = (p[i + 1] - 2.0 * pp + p[i - 1]) / (h * h);
        let d3 = self.st3[i].apply(p);
        let e = (3.0 - 2.0 * b) / (2.0 - b);
        let k = (1.0 - b) / (2.0 - b);
        let pc = pp.max(POWER_GUARD);
        let pw = (e * pc.ln()).exp();
        let a = s * (s * d3 - 2.0 * (4.0 - b) * x * d2) - 2.0 * (2.0 + b - 3.0 * (2.0 - b) * x * x) * d1;
        let inner = s * d2 - (2.0 - b) * x * d1;
        let r = pp * pp * a + 2.0 * c * c * (1.0 - b) * pw * d1 + k * s * d1 * (s * d1 * d1 - 2.0 * pp * inner);
        NodeEval {
            r,
            dp: 2.0 * pp * a + 2.0 * c * c * (1.0 - b) * e * pw / pc * d1 - 2.0 * k * s * d1 * inner,
            d1: -2.0 * pp * pp * (2.0 + b - 3.0 * (2.0 - b) * x * x)
                + 2.0 * c * c * (1.0 - b) * pw
                + k * s * (3.0 * s * d1 * d1 - 2.0 * pp * (s * d2 - 2.0 * (2.0 - b) * x * d1)),
            d2: -2.0 * (4.0 - b) * x * s * pp * pp - 2.0 * k * pp * s * s * d1,
            d3: pp * pp * s * s,
        }
    }

    fn residual_full(&self, p: &[f64]) -> Vec<f64> {
        (1..self.n).map(|i| self.node(p, i).r).collect()
    }
}

impl NewtonSystem for Collocation {
    fn residual(&self, u: &[f64]) -> Vec<f64> {
        self.residual_full(&self.full(u))
    }

    fn jacobian(&self, u: &[f64]) -> Banded {
        let p = self.full(u);
        let m = self.n - 1;
        let mut jac = Banded::zeros(m, 3, 3);
        let h = self.h;
        for i in 1..self.n {
            let ev = self.node(&p, i);
            let row = i - 1;
            let mut put = |node: usize, v: f64| {
                if node >= 1 && node < self.n {
                    jac.add(row, node - 1, v);
                }
            };
            put(i, ev.dp);
            put(i - 1, -ev.d1 / (2.0 * h) + ev.d2 / (h * h));
            put(i, -2.0 * ev.d2 / (h * h));
            put(i + 1, ev.d1 / (2.0 * h) + ev.d2 / (h * h));
            let st = &self.st3[i];
            for (k, w) in st.weights.iter().enumerate() {
                put(st.start + k, ev.d3 * w);
            }
        }
        jac
    }

    fn admissible(&self, u: &[f64]) -> bool {
        u.iter().all(|v| *v >= NEGATIVITY_FLOOR)
    }
}

fn check_nodes(p: &[f64], problem: &InviscidProblem) -> Result<()> {
    let n = problem.mesh.intervals();
    if p.len() != n + 1 {
        return Err(VortexError::Domain(format!("expected {} node values, got {}", n + 1, p.len())));
    }
    if p[0] != 0.0 || p[n] != 1.0 {
        return Err(VortexError::Domain("p must satisfy p(0) = 0 and p(1) = 1".into()));
    }
    if let Some(i) = p.iter().position(|v| !v.is_finite() || *v < NEGATIVITY_FLOOR) {
        return Err(VortexError::Domain(format!(
            "invalid iterate: p = {} at x = {}",
            p[i],
            problem.mesh.x(i)
        )));
    }
    Ok(())
}

/// The collocation residual at the interior nodes.
pub fn assemble_residual(p: &[f64], problem: &InviscidProblem) -> Result<Vec<f64>> {
    check_nodes(p, problem)?;
    Ok(Collocation::new(problem).residual_full(p))
}

/// Jacobian of [`assemble_residual`] with respect to the interior values,
/// assembled from the exact partial derivatives of the node residual.
pub fn analytic_jacobian(p: &[f64], problem: &InviscidProblem) -> Result<Banded> {
    check_nodes(p, problem)?;
    let col = Collocation::new(problem);
    Ok(col.jacobian(&p[1..p.len() - 1]))
}

/// Jacobian by forward differences, perturbing every seventh column at once
/// (the residual couples nodes at most three apart).
pub fn fd_jacobian(p: &[f64], problem: &InviscidProblem) -> Result<Banded> {
    check_nodes(p, problem)?;
    let col = Collocation::new(problem);
    let u: Vec<f64> = p[1..p.len() - 1].to_vec();
    let m = u.len();
    let r0 = col.residual(&u);
    let mut jac = Banded::zeros(m, 3, 3);
    for color in 0..7 {
        let mut v = u.clone();
        let mut steps = vec![0.0; m];
        for j in (color..m).step_by(7) {
            steps[j] = 1e-7 * u[j].abs().max(1e-3);
            v[j] += steps[j];
        }
        let r1 = col.residual(&v);
        for j in (color..m).step_by(7) {
            for i in j.saturating_sub(3)..(j + 4).min(m) {
                jac.add(i, j, (r1[i] - r0[i]) / steps[j]);
            }
        }
    }
    Ok(jac)
}

/// Damped Newton iteration from `guess` (node values including endpoints).
pub fn newton_solve(problem: &InviscidProblem, guess: &[f64]) -> Result<PSolution> {
    check_nodes(guess, problem)?;
    let col = Collocation::new(problem);
    let u0 = guess[1..guess.len() - 1].to_vec();
    let out = newton::damped_newton(&col, u0, problem.options())?;
    let p = col.full(&out.u);
    Ok(PSolution {
        residual_norm: out.residual_norm,
        newton_iters: out.iterations,
        p,
    })
}

/// Cold start from [`initial_guess`].
pub fn solve(problem: &InviscidProblem) -> Result<PSolution> {
    newton_solve(problem, &initial_guess(problem.b, &problem.mesh)?)
}

/// Exponent of `p` in `Omega / c`.
fn omega_exponent(b: f64) -> f64 {
    (1.0 - b) / (2.0 * (2.0 - b))
}

/// Lower-case profile from a converged `p`, rescaled to `C_omega = 1`:
/// `f = sqrt(p) (1-x^2)^((2-b)/2) / c`, `Omega = p^((1-b)/(2(2-b)))`, and
/// `g` from continuity. Derivatives of `p` come from the same stencils as
/// the collocation; endpoint stacks are singular and left non-finite.
pub fn recover_profile(sol: &PSolution, problem: &InviscidProblem) -> Result<Profile> {
    let (b, c) = (problem.b, problem.c);
    let h = problem.mesh.h();
    let clamped: Vec<f64> = sol.p.iter().map(|v| v.max(0.0)).collect();
    let stacks = stencil::derivative_stacks(&clamped, h);
    let e = omega_exponent(b);
    let nodes = stacks
        .iter()
        .enumerate()
        .map(|(i, st)| {
            let x = Jet::variable(problem.mesh.x(i));
            let p = Jet::from_stack(st);
            let f = p.sqrt() * sin_power(x, 0.5 * (2.0 - b)) / c;
            let om = p.powf(e) * sin_power(x, 0.5 * (1.0 - b));
            ProfilePoint::from_jets(&[f, Jet::constant(0.0), om])
        })
        .collect();
    let params = VortexParams::inviscid(b, 1.0)?;
    Profile::from_samples(params, Case::Lower, Sampled { x0: 0.0, h, nodes })?.with_g_from_continuity()
}

/// Rayleigh discriminant without the positive factor `2 / r^(2(1+b))`,
/// `Omega [(1-b) Omega - x (1-x^2) Omega']`, at the interior nodes, with
/// `Omega'` taken from the `p` stencils by the chain rule.
pub fn rayleigh_phi_nodes(sol: &PSolution, problem: &InviscidProblem) -> Vec<f64> {
    let b = problem.b;
    let h = problem.mesh.h();
    let e = omega_exponent(b);
    let p = &sol.p;
    (1..p.len() - 1)
        .map(|i| {
            let x = problem.mesh.x(i);
            let pi = p[i].max(POWER_GUARD);
            let om = pi.powf(e);
            let dp = (p[i + 1] - p[i - 1]) / (2.0 * h);
            let dom = e * om * dp / pi;
            om * ((1.0 - b) * om - x * (1.0 - x * x) * dom)
        })
        .collect()
}

/// Normalized `Omega` at the first interior node.
pub fn omega_first_node(sol: &PSolution, problem: &InviscidProblem) -> f64 {
    sol.p[1].max(0.0).powf(omega_exponent(problem.b))
}

/// Sup-norm distance over the interior nodes between a normalized profile
/// and the closed-form `b = 1` solution with `C1 = 4 sqrt(2)`,
/// `C_omega = 1`, taking the larger of the meridional and azimuthal gaps.
pub fn distance_to_b1(profile: &Profile, mesh: &Mesh) -> Result<f64> {
    let c1 = 4.0 * 2f64.sqrt();
    let mut d: f64 = 0.0;
    for x in mesh.interior() {
        let [f, _, om] = profile.values_in(x, Case::Upper)?;
        let fb = c1 * (x * (1.0 - x)).sqrt();
        d = d.max((f - fb).abs()).max((om - 1.0).abs());
    }
    Ok(d)
}

/// Emits a solution file with generator `newton-inviscid`.
pub fn solution_file(sol: &PSolution, problem: &InviscidProblem, profile: &Profile) -> Result<SolutionFile> {
    let mut file = SolutionFile::from_profile(profile, &problem.mesh, "newton-inviscid")?;
    file.c = Some(problem.c);
    file.residual_norm = sol.residual_norm;
    file.meta = Some(json!({
        "b": problem.b,
        "c": problem.c,
        "h": problem.mesh.h(),
        "iters": sol.newton_iters,
        "residual_norm": sol.residual_norm,
        "normalization": "C_omega = 1 (f and Omega divided by c)",
    }));
    Ok(file)
}

/// One entry of a parameter sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub b: f64,
    pub c: f64,
    pub outcome: Result<(PSolution, Profile)>,
    /// See [`distance_to_b1`]; `None` when the solve failed.
    pub distance_to_b1: Option<f64>,
}

impl SweepEntry {
    fn from_solve(problem: &InviscidProblem, outcome: Result<PSolution>) -> SweepEntry {
        let outcome = outcome.and_then(|sol| recover_profile(&sol, problem).map(|prof| (sol, prof)));
        let distance_to_b1 = outcome
            .as_ref()
            .ok()
            .and_then(|(_, prof)| distance_to_b1(prof, &problem.mesh).ok());
        SweepEntry {
            b: problem.b,
            c: problem.c,
            outcome,
            distance_to_b1,
        }
    }

    pub fn converged(&self) -> bool {
        self.outcome.is_ok()
    }
}

/// How each sweep entry is started.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStart {
    /// Continuation from the previous converged entry; sequential.
    Warm,
    /// Every entry from [`initial_guess`]; entries run in parallel.
    Cold,
}

fn run_sweep(problems: Vec<InviscidProblem>, start: SweepStart) -> Vec<SweepEntry> {
    match start {
        SweepStart::Cold => problems
            .par_iter()
            .map(|pr| SweepEntry::from_solve(pr, solve(pr)))
            .collect(),
        SweepStart::Warm => {
            let mut prev: Option<Vec<f64>> = None;
            problems
                .iter()
                .map(|pr| {
                    let res = match &prev {
                        Some(guess) => newton_solve(pr, guess).or_else(|_| solve(pr)),
                        None => solve(pr),
                    };
                    if let Ok(sol) = &res {
                        prev = Some(sol.p.clone());
                    }
                    SweepEntry::from_solve(pr, res)
                })
                .collect()
        }
    }
}

/// Sweep over increasing `b` at fixed `c`. Failed entries are recorded and
/// the sweep continues.
pub fn sweep_b(b_list: &[f64], c: f64, mesh: Mesh, start: SweepStart) -> Result<Vec<SweepEntry>> {
    if b_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(VortexError::Domain("b values must be strictly increasing".into()));
    }
    let problems = b_list
        .iter()
        .map(|&b| InviscidProblem::new(b, c, mesh))
        .collect::<Result<Vec<_>>>()?;
    Ok(run_sweep(problems, start))
}

/// Sweep over `c` at fixed `b`.
pub fn sweep_c(b: f64, c_list: &[f64], mesh: Mesh, start: SweepStart) -> Result<Vec<SweepEntry>> {
    let problems = c_list
        .iter()
        .map(|&c| InviscidProblem::new(b, c, mesh))
        .collect::<Result<Vec<_>>>()?;
    Ok(run_sweep(problems, start))
}
