//! `simulate`, `bracket`, `equilibrium` and `roots`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use covham::dynamics::{
    acceleration, equilibrium_solve, integrate, Complex64, IntegratorSettings, NewtonSettings, Trajectory,
};
use covham::fields::ScalarField;
use covham::poisson::{gpb, gspb, x_chi_pair};
use covham::riemann::riemann_acceleration;
use covham::Error;
use serde::Serialize;

use crate::exit::CliError;
use crate::output::{write_csv, write_json, Format};
use crate::scenario::Model;

fn check_point(model: &Model, x: &[f64], flag: &str) -> Result<(), CliError> {
    if x.len() != model.dim() {
        return Err(CliError::input(format!(
            "{flag}: expected {} values, got {}",
            model.dim(),
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CliError::input(format!("{flag}: values must be finite")));
    }
    Ok(())
}

fn write(traj: &Trajectory, model: &Model, out: &Path, format: Format) -> Result<(), CliError> {
    let file = File::create(out).map_err(|e| CliError::input(format!("cannot create {}: {e}", out.display())))?;
    let w = BufWriter::new(file);
    match format {
        Format::Csv => write_csv(traj, model.coordinates(), w),
        Format::Json => write_json(traj, w),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub rows: usize,
    pub dt: f64,
    pub t_end: f64,
    pub final_state: Vec<f64>,
}

/// Integrates the scenario and writes the trajectory. On blow-up the partial
/// trajectory is still written and a numerical error is returned.
pub fn simulate(
    model: &Model,
    t_end: Option<f64>,
    dt: Option<f64>,
    observables: &[String],
    out: &Path,
    format: Format,
) -> Result<SimulationSummary, CliError> {
    let dt = dt.unwrap_or(model.settings.dt);
    let t_end = t_end.unwrap_or(model.settings.t_end);
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CliError::input("--dt must be > 0"));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(CliError::input("--t-end must be >= 0"));
    }
    let settings = IntegratorSettings::rk4(dt, t_end)?;
    let mut problem = model.problem(settings)?;
    for text in observables {
        problem = problem.with_observable(text.clone(), model.field(text)?)?;
    }
    match integrate(&problem, &model.selector()) {
        Ok(traj) => {
            write(&traj, model, out, format)?;
            Ok(SimulationSummary {
                rows: traj.len(),
                dt: traj.dt,
                t_end,
                final_state: traj.last().map(|s| s.x.clone()).unwrap_or_default(),
            })
        }
        Err(Error::BlowUp { time, reason, partial }) => {
            write(&partial, model, out, format)?;
            Err(CliError::numerical(format!(
                "blow-up at t = {time}: {reason}; {} rows written to {}",
                partial.len(),
                out.display()
            )))
        }
        Err(e) => Err(CliError::numerical(e.to_string())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BracketReport {
    pub gspb: f64,
    pub gpb: f64,
    pub x_chi_pair: f64,
    pub decomposition_residual: f64,
}

pub fn bracket(model: &Model, f: &str, g: &str, at: &[f64]) -> Result<BracketReport, CliError> {
    check_point(model, at, "--at")?;
    let (f, g) = (model.field(f)?, model.field(g)?);
    let (j, s) = (&model.j, &model.s);
    let full = gspb(f.as_ref(), g.as_ref(), j, s, at)?;
    let classical = gpb(f.as_ref(), g.as_ref(), j, at)?;
    let pair = x_chi_pair(f.as_ref(), g.as_ref(), j, s, at)?;
    Ok(BracketReport {
        gspb: full,
        gpb: classical,
        x_chi_pair: pair,
        decomposition_residual: (full - classical - pair).abs(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub converged: bool,
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub message: Option<String>,
}

/// Always returns a report when the search itself ran; `converged` is false
/// for non-convergence, a singular Newton step or a degenerate `J`.
pub fn equilibrium(model: &Model, guess: &[f64], tol: f64, max_iter: usize) -> Result<EquilibriumReport, CliError> {
    check_point(model, guess, "--guess")?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::input("--tol must be > 0"));
    }
    let settings = NewtonSettings { tol, max_iter };
    match equilibrium_solve(model.h.as_ref(), &model.j, &model.s, guess, settings) {
        Ok(e) => Ok(EquilibriumReport {
            converged: true,
            x: e.x.as_slice().to_vec(),
            residual: e.residual,
            iterations: e.iterations,
            message: None,
        }),
        Err(e @ (Error::NoConvergence { .. } | Error::SingularJacobian { .. } | Error::DegenerateStructure { .. })) => {
            let (residual, iterations) = match e {
                Error::NoConvergence { iterations, residual } => (residual, iterations),
                Error::SingularJacobian { iteration } => (f64::NAN, iteration),
                Error::DegenerateStructure { residual, .. } => (residual, 0),
                _ => unreachable!(),
            };
            Ok(EquilibriumReport {
                converged: false,
                x: guess.to_vec(),
                residual,
                iterations,
                message: Some(e.to_string()),
            })
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RootsReport {
    pub w: f64,
    pub dwdt: f64,
    pub beta: f64,
    pub discriminant: f64,
    pub lambda1: Root,
    pub lambda2: Root,
    pub oscillatory: bool,
    pub acceleration: Vec<f64>,
}

pub fn roots(model: &Model, at: &[f64]) -> Result<RootsReport, CliError> {
    check_point(model, at, "--at")?;
    let h: &dyn ScalarField = model.h.as_ref();
    let (a, c) = match &model.metric {
        Some(g) => riemann_acceleration(h, &model.j, g, at)?,
        None => acceleration(h, &model.j, &model.s, at)?,
    };
    let root = |z: Complex64| Root { re: z.re, im: z.im };
    Ok(RootsReport {
        w: c.w,
        dwdt: c.dwdt,
        beta: c.beta,
        discriminant: c.discriminant,
        lambda1: root(c.roots[0]),
        lambda2: root(c.roots[1]),
        oscillatory: c.oscillatory,
        acceleration: a.as_slice().to_vec(),
    })
}

