//! Manufactured-solution convergence studies.

use super::manufactured::{CaseDim, ManufacturedCase};
use crate::error::{Error, Result};
use crate::field::{Dimensionless, FieldContext, Forcing};
use crate::mesh::{max_norm_error, Mesh};
use crate::schemes::{NormChecker, SchemeKind, SolveStats, Stepper};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vary {
    Time,
    Space,
}

/// One resolution of a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub mesh: Mesh,
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergencePoint {
    /// `dt` for temporal studies, `dx` for spatial ones.
    pub step_size: f64,
    pub error: f64,
    pub seconds: f64,
    pub steps: u64,
    pub max_norm_deviation: f64,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub scheme: SchemeKind,
    pub vary: Vary,
    pub points: Vec<ConvergencePoint>,
    /// Least-squares slope of `log(error)` against `log(step_size)`.
    pub slope: f64,
}

/// Result of a single manufactured run.
#[derive(Debug, Clone)]
pub struct CaseRun {
    pub error: f64,
    pub seconds: f64,
    pub steps: u64,
    pub max_norm_deviation: f64,
    pub stats: SolveStats,
}

/// Number of steps of size `dt` that land on `t_final`.
pub fn step_count(t_final: f64, dt: f64) -> Result<u64> {
    let n = (t_final / dt).round();
    if n < 1.0 || ((n * dt - t_final) / t_final).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("dt = {dt} does not divide T = {t_final}")));
    }
    Ok(n as u64)
}

/// Runs `case` from its exact initial data to `T` and measures the max-norm error.
pub fn run_case(case: &ManufacturedCase, scheme: SchemeKind, grid: Grid, forcing: Arc<dyn Forcing>) -> Result<CaseRun> {
    let params = Dimensionless { q: 0.0, eps: 1.0, alpha: case.alpha };
    let ctx = FieldContext::exchange_only(grid.mesh, params).with_forcing(forcing);
    let m0 = case.exact_field(&grid.mesh, 0.0);
    let steps = step_count(case.final_time, grid.dt)?;
    let start = Instant::now();
    let mut stepper = Stepper::new(scheme, ctx, m0, grid.dt)?;
    let mut norms = NormChecker::default();
    stepper.run(steps, &mut [&mut norms])?;
    let seconds = start.elapsed().as_secs_f64();
    let exact = case.exact_field(&grid.mesh, case.final_time);
    Ok(CaseRun {
        error: max_norm_error(&exact, stepper.magnetization())?,
        seconds,
        steps,
        max_norm_deviation: norms.worst,
        stats: stepper.stats().clone(),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Default desk-scale resolutions for one case and direction of refinement.
///
/// 1D time: `nx = 100`, `dt = T/1250 .. T/10000`. 1D space: `T = 1e-3`,
/// `dt = 1e-7`, `dx = 1/10, 1/20, 1/40`. 3D time: `32 x 16 x 4` cells,
/// `dt = T/10 .. T/80`. 3D space: uniform `h = 1/6 .. 1/12` (counts rounded per
/// axis), `dt = 1e-9`.
pub fn desk_plan(dim: CaseDim, vary: Vary) -> (ManufacturedCase, Vec<Grid>) {
    match (dim, vary) {
        (CaseDim::One, Vary::Time) => {
            let case = ManufacturedCase::one_d();
            let mesh = case.mesh([100, 1, 1]);
            let grids = [1250.0, 2500.0, 5000.0, 10000.0].iter().map(|d| Grid { mesh, dt: case.final_time / d }).collect();
            (case, grids)
        }
        (CaseDim::One, Vary::Space) => {
            let case = ManufacturedCase { final_time: 1e-3, ..ManufacturedCase::one_d() };
            let grids = [10, 20, 40].iter().map(|&n| Grid { mesh: case.mesh([n, 1, 1]), dt: 1e-7 }).collect();
            (case, grids)
        }
        (CaseDim::Three, Vary::Time) => {
            let case = ManufacturedCase::three_d();
            let mesh = case.mesh([32, 16, 4]);
            let grids = [10.0, 20.0, 40.0, 80.0].iter().map(|d| Grid { mesh, dt: case.final_time / d }).collect();
            (case, grids)
        }
        (CaseDim::Three, Vary::Space) => {
            let case = ManufacturedCase::three_d();
            let grids = [6.0, 8.0, 10.0, 12.0].iter().map(|n| Grid { mesh: case.mesh_with_spacing(1.0 / n), dt: 1e-9 }).collect();
            (case, grids)
        }
    }
}

pub fn convergence_study(case: &ManufacturedCase, scheme: SchemeKind, vary: Vary, grids: &[Grid]) -> Result<ConvergenceTable> {
    let step_of = |g: &Grid| match vary {
        Vary::Time => g.dt,
        Vary::Space => g.mesh.dx,
    };
    if grids.len() < 2 || grids.windows(2).any(|w| step_of(&w[1]) >= step_of(&w[0])) {
        return Err(Error::InvalidArgument("grids must be at least two and strictly refining".into()));
    }
    let forcing: Arc<dyn Forcing> = Arc::new(*case);
    let mut points = Vec::with_capacity(grids.len());
    for g in grids {
        let run = run_case(case, scheme, *g, forcing.clone()).map_err(|e| match e {
            Error::Diverged { step, cell } => Error::NotConverged(format!(
                "{scheme} diverged at step {step} (cell {cell}) on grid {:?}, dt = {}",
                g.mesh.dims(),
                g.dt
            )),
            other => other,
        })?;
        points.push(ConvergencePoint {
            step_size: step_of(g),
            error: run.error,
            seconds: run.seconds,
            steps: run.steps,
            max_norm_deviation: run.max_norm_deviation,
            stats: run.stats,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.step_size).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.error).collect();
    Ok(ConvergenceTable { scheme, vary, slope: fit_log_slope(&xs, &ys), points })
}
