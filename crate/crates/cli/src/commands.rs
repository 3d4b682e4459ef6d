use crate::args::{
    AnalyticArgs, FieldsArgs, FieldsCommand, GridArgs, GridKind, InviscidArgs, LayerArgs, SweepArgs, ViscousArgs,
};
use crate::config::{pick, Config, DEFAULT_C, DEFAULT_C_OMEGA, DEFAULT_H, DEFAULT_T, DEFAULT_TOL};
use crate::error::{CliError, CliResult};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use vortex_core::analytic::{inviscid_b1, trivial_solution};
use vortex_core::fields::{self, FieldGrid};
use vortex_core::model::write_atomic;
use vortex_core::solver_inviscid::{self as inviscid, InviscidProblem, PSolution, SweepEntry, SweepStart};
use vortex_core::solver_viscous::{self as viscous, CalibratedSolution, ViscousProblem, DEFAULT_DELTA};
use vortex_core::{GridSpec, Mesh, Profile, SolutionFile, VortexParams};

pub const DEFAULT_NU_LIST: [f64; 5] = [1.0 / 100.0, 1.0 / 200.0, 1.0 / 500.0, 1.0 / 1000.0, 1.0 / 2000.0];

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    Ok(write_atomic(path, text.as_bytes())?)
}

fn require<T>(v: Option<T>, what: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Validation(format!("missing required value {what} (flag or config key)")))
}

pub fn analytic(a: &AnalyticArgs, cfg: &Config) -> CliResult<()> {
    let c1 = require(a.c1.or(cfg.c1), "--C1")?;
    let c_omega = pick(a.c_omega, cfg.c_omega, DEFAULT_C_OMEGA);
    let b = pick(a.b, cfg.b, 1.0);
    let h = pick(a.h, cfg.h, DEFAULT_H);
    if c_omega == 0.0 {
        return Err(CliError::Validation(
            "C_omega must be nonzero: it is the azimuthal amplitude near the axis".into(),
        ));
    }
    let mesh = Mesh::uniform(h)?;
    let sol = if c1 == 0.0 {
        trivial_solution(VortexParams::inviscid(b, c_omega)?)
    } else if b == 1.0 {
        inviscid_b1(c1, c_omega)?
    } else {
        return Err(CliError::Validation(format!(
            "closed-form solutions with C1 != 0 exist only for b = 1, got b = {b}"
        )));
    };
    let mut file = SolutionFile::from_profile(&sol.profile(), &mesh, sol.generator())?;
    if b == 1.0 {
        file.c1 = Some(c1);
    }
    file.save(&a.out)?;
    println!("generator={} b={} C1={} C_omega={} h={} samples={}", file.generator, b, c1, c_omega, h, file.x.len());
    println!("wrote {}", a.out.display());
    Ok(())
}

fn inviscid_b_check(b: f64) -> CliResult<()> {
    if b > 0.0 && b < 1.0 {
        return Ok(());
    }
    let why = if b > 1.0 {
        "for b > 1 the swirl decays faster than 1/r and the circulation decreases outward, \
         so the Rayleigh criterion fails and the flow is centrifugally unstable"
    } else if b == 1.0 {
        "the b = 1 family is known in closed form; use the analytic subcommand"
    } else {
        "the decay exponent must be positive"
    };
    Err(CliError::Validation(format!("solve-inviscid requires 0 < b < 1, got b = {b}: {why}")))
}

/// Summary of one converged inviscid run.
#[derive(Debug, Serialize)]
struct InviscidReport {
    b: f64,
    c: f64,
    h: f64,
    newton_iters: usize,
    residual_norm: f64,
    omega_first_node: f64,
    min_phi: f64,
    flux: f64,
    distance_to_b1: f64,
}

impl InviscidReport {
    fn new(sol: &PSolution, problem: &InviscidProblem, profile: &Profile) -> CliResult<Self> {
        let min_phi = inviscid::rayleigh_phi_nodes(sol, problem)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        Ok(InviscidReport {
            b: problem.b,
            c: problem.c,
            h: problem.mesh.h(),
            newton_iters: sol.newton_iters,
            residual_norm: sol.residual_norm,
            omega_first_node: inviscid::omega_first_node(sol, problem),
            min_phi,
            flux: profile.flux()?.value,
            distance_to_b1: inviscid::distance_to_b1(profile, &problem.mesh)?,
        })
    }

    fn print(&self) {
        println!(
            "converged b={} c={} h={} iters={} residual={:.3e} Omega(h)={:.6e} min_phi={:.3e} flux={:.3e} dist_b1={:.6e}",
            self.b,
            self.c,
            self.h,
            self.newton_iters,
            self.residual_norm,
            self.omega_first_node,
            self.min_phi,
            self.flux,
            self.distance_to_b1
        );
    }
}

pub fn solve_inviscid(a: &InviscidArgs, cfg: &Config) -> CliResult<()> {
    let b = require(a.b.or(cfg.b), "--b")?;
    inviscid_b_check(b)?;
    let c = pick(a.c, cfg.c, DEFAULT_C);
    let h = pick(a.h, cfg.h, DEFAULT_H);
    let mut problem = InviscidProblem::with_step(b, c, h)?;
    problem.tol = pick(a.tol, cfg.tol, DEFAULT_TOL);
    if let Some(m) = a.max_iter.or(cfg.max_iter) {
        problem.max_iter = m;
    }
    let sol = inviscid::solve(&problem).map_err(|e| match e {
        vortex_core::VortexError::NonConvergence { .. } => CliError::NonConvergence(format!(
            "Newton iteration for b = {b}, c = {c} did not converge: {e}"
        )),
        other => other.into(),
    })?;
    let profile = inviscid::recover_profile(&sol, &problem)?;
    let report = InviscidReport::new(&sol, &problem, &profile)?;
    inviscid::solution_file(&sol, &problem, &profile)?.save(&a.out)?;
    if let Some(path) = &a.report {
        write_text(path, &(serde_json::to_string_pretty(&report).expect("plain struct") + "\n"))?;
    }
    report.print();
    println!("wrote {}", a.out.display());
    Ok(())
}

pub fn solve_viscous(a: &ViscousArgs, cfg: &Config) -> CliResult<()> {
    let nu = match (a.nu, a.k) {
        (Some(nu), _) => nu,
        (None, Some(k)) if k > 0.0 => 0.5 / k,
        (None, Some(k)) => return Err(CliError::Validation(format!("k must be positive, got {k}"))),
        (None, None) => require(cfg.nu, "--nu or --k")?,
    };
    let c_omega = pick(a.c_omega, cfg.c_omega, DEFAULT_C_OMEGA);
    let delta = pick(a.delta, cfg.delta, DEFAULT_DELTA);
    if !(nu > 0.0) {
        return Err(CliError::Validation(format!("viscosity must be positive, got {nu}")));
    }
    let problem = match a.h.or(cfg.h) {
        None => ViscousProblem::resolved(nu, c_omega)?,
        Some(h) => {
            let p = ViscousProblem::new(nu, c_omega, Mesh::uniform(h)?)?;
            if !p.resolves_layer() {
                let msg = format!("mesh step h = {h} exceeds nu/4 = {}; the boundary layer is not resolved", nu / 4.0);
                if !a.allow_unresolved {
                    return Err(CliError::Validation(msg + " (pass --allow-unresolved to run anyway)"));
                }
                eprintln!("warning: {msg}");
            }
            p
        }
    };
    let cal = match a.closure {
        Some(k) => CalibratedSolution {
            solution: viscous::solve_serrin_b1(&problem.with_closure(k))?,
            history: Vec::new(),
        },
        None => viscous::calibrate(&problem)?,
    };
    let sol = &cal.solution;
    let layer = viscous::layer_size(&sol.profile()?, delta)?;
    viscous::solution_file(&cal)?.save(&a.out)?;
    println!(
        "converged nu={} k={} h={} closure={:.10e} amplitude={:.10e} layer_x={:.6e} (delta={}) iters={} residual={:.3e} calibration_steps={}",
        nu,
        0.5 / nu,
        problem.mesh.h(),
        sol.closure,
        sol.outer_amplitude(),
        layer,
        delta,
        sol.newton_iters,
        sol.residual_norm,
        cal.history.len()
    );
    println!("wrote {}", a.out.display());
    Ok(())
}

fn entry_file_name(b: f64, c: f64) -> String {
    format!("b{b}_c{c}.json")
}

pub fn sweep(a: &SweepArgs, cfg: &Config) -> CliResult<()> {
    let h = pick(a.h, cfg.h, DEFAULT_H);
    let mesh = Mesh::uniform(h)?;
    let start = if a.cold { SweepStart::Cold } else { SweepStart::Warm };
    let entries: Vec<SweepEntry> = match (a.b_list.clone().map(|l| l.0).or(cfg.b_list.clone()), a.c_list.clone().map(|l| l.0).or(cfg.c_list.clone())) {
        (Some(bs), None) => {
            for &b in &bs {
                inviscid_b_check(b)?;
            }
            inviscid::sweep_b(&bs, pick(a.c, cfg.c, DEFAULT_C), mesh, start)?
        }
        (None, Some(cs)) => {
            let b = require(a.b.or(cfg.b), "--b")?;
            inviscid_b_check(b)?;
            inviscid::sweep_c(b, &cs, mesh, start)?
        }
        _ => return Err(CliError::Validation("give exactly one of --b-list and --c-list".into())),
    };
    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", a.out_dir.display())))?;
    let mut csv = String::from(
        "b,c,converged,newton_iters,residual_norm,omega_first_node,min_phi,flux,distance_to_b1,file\n",
    );
    let mut failed = Vec::new();
    for e in &entries {
        let problem = InviscidProblem::new(e.b, e.c, mesh)?;
        match &e.outcome {
            Ok((sol, profile)) => {
                let name = entry_file_name(e.b, e.c);
                inviscid::solution_file(sol, &problem, profile)?.save(&a.out_dir.join(&name))?;
                let r = InviscidReport::new(sol, &problem, profile)?;
                r.print();
                let _ = writeln!(
                    csv,
                    "{},{},true,{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                    e.b, e.c, r.newton_iters, r.residual_norm, r.omega_first_node, r.min_phi, r.flux, r.distance_to_b1, name
                );
            }
            Err(err) => {
                println!("failed b={} c={}: {err}", e.b, e.c);
                let _ = writeln!(csv, "{},{},false,,,,,,,", e.b, e.c);
                failed.push(format!("(b={}, c={})", e.b, e.c));
            }
        }
    }
    let summary = a.out_dir.join("summary.csv");
    write_text(&summary, &csv)?;
    println!("wrote {} entries to {}", entries.len(), a.out_dir.display());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!("sweep entries did not converge: {}", failed.join(", "))))
    }
}

pub fn layer_scaling(a: &LayerArgs, cfg: &Config) -> CliResult<()> {
    let nus = a.nu_list.clone().map(|l| l.0).or(cfg.nu_list.clone()).unwrap_or(DEFAULT_NU_LIST.to_vec());
    let c_omega = pick(a.c_omega, cfg.c_omega, DEFAULT_C_OMEGA);
    let delta = pick(a.delta, cfg.delta, DEFAULT_DELTA);
    let scaling = viscous::layer_scaling(&nus, c_omega, delta)?;
    write_text(&a.out, &viscous::layer_csv(&scaling.measurements))?;
    for m in &scaling.measurements {
        println!("nu={:.6e} layer_x={:.6e}", m.nu, m.layer_x);
    }
    println!("slope={:.6}", scaling.slope);
    println!("wrote {}", a.out.display());
    Ok(())
}

fn grid_spec(g: &GridArgs) -> CliResult<GridSpec> {
    Ok(GridSpec::new(g.r, g.z, g.n_r, g.n_z)?)
}

pub fn fields(a: &FieldsArgs, cfg: &Config) -> CliResult<()> {
    let file = SolutionFile::load(&a.solution)?;
    let params = file.params()?;
    // Rebuilding G from F keeps the interpolated field divergence free, so
    // streamlines stay on level sets of the stream function.
    let profile = match params.b == 2.0 {
        true => file.to_profile()?,
        false => file.to_profile()?.with_g_from_continuity()?,
    };
    match &a.what {
        FieldsCommand::Grid { kind, grid, t, out } => {
            let spec = grid_spec(grid)?;
            let g: FieldGrid = match kind {
                GridKind::Speed => fields::speed_grid(&profile, &spec)?,
                GridKind::Velocity => fields::velocity_grid(&profile, &spec)?,
                GridKind::Pressure => {
                    fields::pressure_grid(&profile, params, pick(*t, cfg.t, DEFAULT_T), &spec)?
                }
            };
            write_text(out, &g.to_csv())?;
            let (lo, hi) = g.range();
            println!("kind={kind:?} points={} min={lo:.6e} max={hi:.6e}", spec.n_r * spec.n_z);
            println!("wrote {}", out.display());
        }
        FieldsCommand::Streamline { start, dt, steps, out } => {
            let line = fields::integrate_streamline(&profile, *start, *dt, *steps)?;
            write_text(out, &line.to_csv())?;
            let drift = match fields::psi_drift(&profile, &line) {
                Ok(d) => format!("{d:.3e}"),
                Err(_) => "n/a (stream function vanishes at the start)".into(),
            };
            println!("exit={:?} points={} psi_drift={}", line.exit, line.points.len(), drift);
            println!("wrote {}", out.display());
        }
        FieldsCommand::Powerlaw { z0, radii } => {
            let rs = radii.clone().map(|l| l.0).unwrap_or_else(fields::default_powerlaw_radii);
            let slope = fields::powerlaw_exponent(&profile, *z0, &rs)?;
            println!("z0={z0} exponent={slope:.6} (expected -b = {})", -params.b);
        }
        FieldsCommand::Rayleigh { grid, out } => {
            let spec = grid_spec(grid)?;
            let (samples, class) = fields::rayleigh_scan(&profile, &spec, 1e-8)?;
            let mut csv = String::from("r,x,phi\n");
            for s in &samples {
                let _ = writeln!(csv, "{:.16e},{:.16e},{:.16e}", s.r, s.x, s.phi);
            }
            write_text(out, &csv)?;
            let min = samples.iter().map(|s| s.phi).fold(f64::INFINITY, f64::min);
            println!("min_phi={min:.6e} stability={class:?}");
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
