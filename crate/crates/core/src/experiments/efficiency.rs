//! Wall-clock cost of the improved schemes relative to the original one.

use super::convergence::{run_case, Grid};
use super::manufactured::ManufacturedCase;
use crate::error::Result;
use crate::field::Forcing;
use crate::schemes::SchemeKind;
use serde::Serialize;
use std::sync::Arc;

/// Largest distance from the ideal saving before a ratio is flagged.
pub const RATIO_WARN_BAND: f64 = 0.15;

#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub dt: f64,
    pub dx: f64,
    /// Best-of-`repeats` seconds for GSPM, A, B.
    pub seconds: [f64; 3],
    pub ratio_a: f64,
    pub ratio_b: f64,
    /// Same ratios computed from total linear-solve counts instead of time.
    pub solve_ratio_a: f64,
    pub solve_ratio_b: f64,
}

/// `(T_G - T_i) / T_G`.
pub fn saving(reference: f64, other: f64) -> f64 {
    (reference - other) / reference
}

/// Times every scheme on every grid, `repeats` times each, interleaving
/// schemes so slow drifts in machine load hit all of them alike.
pub fn efficiency_ratios(case: &ManufacturedCase, grids: &[Grid], repeats: usize) -> Result<Vec<RatioRow>> {
    let forcing: Arc<dyn Forcing> = Arc::new(*case);
    let mut rows = Vec::with_capacity(grids.len());
    for g in grids {
        let mut best = [f64::INFINITY; 3];
        let mut solves = [0u64; 3];
        for _ in 0..repeats.max(1) {
            for (slot, scheme) in SchemeKind::ALL.iter().enumerate() {
                let run = run_case(case, *scheme, *g, forcing.clone())?;
                best[slot] = best[slot].min(run.seconds);
                solves[slot] = run.stats.total_linear_solves;
            }
        }
        let s = solves.map(|v| v as f64);
        rows.push(RatioRow {
            dt: g.dt,
            dx: g.mesh.dx,
            seconds: best,
            ratio_a: saving(best[0], best[1]),
            ratio_b: saving(best[0], best[2]),
            solve_ratio_a: saving(s[0], s[1]),
            solve_ratio_b: saving(s[0], s[2]),
        });
    }
    Ok(rows)
}
