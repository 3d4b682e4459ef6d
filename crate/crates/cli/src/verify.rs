//! Residual checks of a solution file.
//!
//! Sampled files carry node values only, so every derivative is rebuilt by
//! finite differences and the residuals contain an `O(h^2)` truncation part
//! that grows like `(h/x)^2` toward the axis cone `x = 0`. The inviscid and
//! split-viscous equations are therefore checked on `[w, 1-w]`, relative to
//! the size of their individual terms, with a threshold proportional to
//! `(h/w)^2`. Centered differences also leave an odd-even oscillation in
//! solver output, which third differences amplify; these checks therefore
//! use every second node by default. The `b = 1` viscous system is
//! collocated on the same stencils the file was produced with and is held
//! to a fixed relative bound on `[2h, 1-2h]`.

use crate::args::{VerifyArgs, VerifyMode};
use crate::error::{CliError, CliResult};
use std::fmt::Write as _;
use vortex_core::fields::{classify_stability, rayleigh_phi};
use vortex_core::model::write_atomic;
use vortex_core::residuals::{euler_residuals, fullfield_ns_residual, ns_residuals, reports_to_csv};
use vortex_core::{Case, EquationId, GoverningMode, GridSpec, Mesh, Profile, ResidualReport, SolutionFile, Stability};

/// The bound on `|residual| / sum |terms|` for the reduced inviscid and
/// split-viscous equations and for continuity is this factor times
/// `(h / w)^2`, the relative truncation error of the difference stencils at
/// the window edge `x = w`.
pub const TRUNCATION_FACTOR: f64 = 2.5;
/// Bound on `sup |residual| / sup sum |terms|` for the `b = 1` viscous
/// system. Outside the boundary layer every term of the azimuthal equation
/// is at rounding level, so a pointwise relative norm is meaningless there.
pub const VISCOUS_B1_TOL: f64 = 1e-6;
/// Bound on the scaled full-field residual.
pub const FULLFIELD_TOL: f64 = 1e-3;
/// Term sums below this are treated as this value in relative norms.
const SCALE_FLOOR: f64 = 1e-12;
const STABILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub metric: f64,
    pub threshold: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.metric <= self.threshold
    }
}

/// `(2-b) G - sqrt(1-x^2) F' + (1-b) x F / sqrt(1-x^2)` at `nodes`.
fn continuity_report(profile: &Profile, nodes: &[f64]) -> CliResult<ResidualReport> {
    let b = profile.params().b;
    let mut res = Vec::with_capacity(nodes.len());
    let mut scale = Vec::with_capacity(nodes.len());
    for &x in nodes {
        let p = profile.eval_in(x, Case::Upper)?;
        let s = (1.0 - x * x).sqrt();
        let terms = [(2.0 - b) * p.g[0], -s * p.f[1], (1.0 - b) * x * p.f[0] / s];
        res.push(terms.iter().sum());
        scale.push(terms.iter().map(|t| t.abs()).sum());
    }
    Ok(ResidualReport::new(EquationId::Continuity, "1", nodes.to_vec(), res, scale))
}

fn relative_check(r: &ResidualReport, tol: f64) -> Check {
    Check {
        name: r.equation.to_string(),
        metric: r.relative_sup_norm(SCALE_FLOOR),
        threshold: tol,
    }
}

/// Minimum over `x` of the Rayleigh discriminant at `r = 1`; the sign does
/// not depend on `r`.
fn min_phi(profile: &Profile, nodes: &[f64]) -> CliResult<f64> {
    let mut m = f64::INFINITY;
    for &x in nodes {
        m = m.min(rayleigh_phi(profile, 1.0, x)?);
    }
    Ok(m)
}

pub struct Outcome {
    pub mode: GoverningMode,
    pub checks: Vec<Check>,
    pub reports: Vec<ResidualReport>,
    pub stability: Stability,
    pub min_phi: f64,
}

/// The samples at every `stride`-th multiple of `h`.
fn sublattice(file: &SolutionFile, stride: usize) -> CliResult<SolutionFile> {
    let n = (1.0 / file.h).round() as usize;
    if stride == 0 || n % stride != 0 {
        return Err(CliError::Validation(format!("stride {stride} does not divide the {n} mesh intervals")));
    }
    let keep: Vec<usize> = (0..file.x.len())
        .filter(|&i| ((file.x[i] / file.h).round() as usize) % stride == 0)
        .collect();
    let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
    let mut out = file.clone();
    out.h = file.h * stride as f64;
    out.x = pick(&file.x);
    out.f = pick(&file.f);
    out.g = pick(&file.g);
    out.omega = pick(&file.omega);
    Ok(out)
}

pub fn run_checks(file: &SolutionFile, a: &VerifyArgs) -> CliResult<Outcome> {
    let params = file.params()?;
    let auto = GoverningMode::for_params(params.b, params.nu);
    let mode = match a.mode {
        VerifyMode::Auto => auto,
        VerifyMode::Inviscid if params.nu != 0.0 => {
            return Err(CliError::Validation(format!("inviscid mode needs nu = 0, file has nu = {}", params.nu)))
        }
        VerifyMode::Viscous if params.nu == 0.0 => {
            return Err(CliError::Validation("viscous mode needs nu > 0, file has nu = 0".into()))
        }
        _ => auto,
    };
    let stride = if mode == GoverningMode::ViscousB1 { 1 } else { a.stride };
    let file = &sublattice(file, stride)?;
    let profile = file.to_profile()?;
    if !(a.window >= 0.0 && a.window < 0.5) {
        return Err(CliError::Validation(format!("window must lie in [0, 0.5), got {}", a.window)));
    }
    let mesh = Mesh::with_intervals((1.0 / file.h).round() as usize)?;
    let h = mesh.h();
    let (lo, hi) = match mode {
        GoverningMode::ViscousB1 => (2.0 * h, 1.0 - 2.0 * h),
        _ => (a.window.max(h), 1.0 - a.window.max(h)),
    };
    let window_nodes: Vec<f64> = mesh.interior().into_iter().filter(|x| *x >= lo - 1e-12 && *x <= hi + 1e-12).collect();
    let rel_tol = a
        .tol
        .unwrap_or((TRUNCATION_FACTOR * (h / a.window.max(h)).powi(2)).max(1e-8));
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    match mode {
        GoverningMode::InviscidReduced => {
            let (r1, r2) = euler_residuals(&profile, &mesh)?;
            for r in [r1.restricted(lo, hi), r2.restricted(lo, hi)] {
                checks.push(relative_check(&r, rel_tol));
                reports.push(r);
            }
        }
        GoverningMode::ViscousB1 => {
            let tol = a.tol.unwrap_or(VISCOUS_B1_TOL);
            for r in ns_residuals(&profile, params, &mesh)? {
                let r = r.restricted(lo, hi);
                let top = r.scale.iter().cloned().fold(SCALE_FLOOR, f64::max);
                checks.push(Check {
                    name: r.equation.to_string(),
                    metric: r.sup_norm / top,
                    threshold: tol,
                });
                reports.push(r);
            }
        }
        GoverningMode::ViscousSplit | GoverningMode::ViscousB2 => {
            for r in ns_residuals(&profile, params, &mesh)? {
                let r = r.restricted(lo, hi);
                checks.push(relative_check(&r, rel_tol));
                reports.push(r);
            }
        }
    }
    if params.b != 2.0 {
        let r = continuity_report(&profile, &window_nodes)?;
        checks.push(relative_check(&r, rel_tol));
        reports.push(r);
    }
    if a.fullfield {
        let grid = GridSpec::new((0.5, 1.5), (0.5, 1.5), 11, 11)?;
        for r in fullfield_ns_residual(&profile, params, &grid, a.spacing)? {
            checks.push(Check {
                name: r.equation.to_string(),
                metric: r.sup_norm,
                threshold: a.tol.unwrap_or(FULLFIELD_TOL),
            });
            reports.push(r);
        }
    }
    let min_phi = min_phi(&profile, &window_nodes)?;
    Ok(Outcome {
        mode,
        checks,
        reports,
        stability: classify_stability(min_phi, STABILITY_TOL),
        min_phi,
    })
}

pub fn verify(a: &VerifyArgs) -> CliResult<()> {
    let file = SolutionFile::load(&a.solution)?;
    let out = run_checks(&file, a)?;
    let mut text = format!("mode={:?} b={} nu={} generator={}\n", out.mode, file.b, file.nu, file.generator);
    for c in &out.checks {
        let _ = writeln!(
            text,
            "{:<13} metric={:.3e} threshold={:.1e} {}",
            c.name,
            c.metric,
            c.threshold,
            if c.passed() { "PASS" } else { "FAIL" }
        );
    }
    print!("{text}");
    if out.stability == Stability::Unstable {
        eprintln!(
            "warning: Rayleigh discriminant is negative (min Phi = {:.3e}); the swirl is centrifugally unstable",
            out.min_phi
        );
    }
    if let Some(path) = &a.report {
        write_atomic(path, reports_to_csv(&out.reports).as_bytes())?;
    }
    let failed: Vec<&str> = out.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        println!("verification passed");
        Ok(())
    } else {
        Err(CliError::Verification(format!("residuals above threshold for {}", failed.join(", "))))
    }
}
