//! Zero-field relaxation of a film from a three-band initial state.

use crate::error::{Error, Result};
use crate::field::FieldContext;
use crate::mesh::{in_plane_angle_map, AngleMap, Mesh, VectorField};
use crate::schemes::{NormChecker, Observer, SchemeKind, SolveStats, Stepper};
use serde::Serialize;

/// `(0, 1, 0)` in the outer fifths along x, `(1, 0, 0)` in between.
pub fn banded_initial_state(mesh: Mesh) -> VectorField {
    let lx = mesh.extent()[0];
    VectorField::from_fn(mesh, |x| {
        let s = x[0] - mesh.origin[0];
        if s <= lx / 5.0 || s >= 4.0 * lx / 5.0 {
            [0.0, 1.0, 0.0]
        } else {
            [1.0, 0.0, 0.0]
        }
    })
}

/// The `k = nz / 2` layer as a one-layer field.
pub fn center_slice(f: &VectorField) -> Result<VectorField> {
    let [nx, ny, nz] = f.mesh.dims();
    let k = nz / 2;
    let mut origin = f.mesh.origin;
    origin[2] += k as f64 * f.mesh.dz;
    let mesh = Mesh::with_origin([nx, ny, 1], f.mesh.spacing(), origin)?;
    let start = nx * ny * k;
    VectorField::from_data(mesh, f.data[start..start + nx * ny].to_vec())
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileSummary {
    pub scheme: SchemeKind,
    pub alpha: f64,
    pub dt: f64,
    pub steps: u64,
    pub initial_energy: f64,
    pub max_energy: f64,
    pub final_energy: f64,
    pub max_norm_deviation: f64,
    pub counters_exact: bool,
    /// Step at which `reference_rate` was taken.
    pub reference_step: u64,
    /// `max |m^{n+1} - m^n| / dt` over cells at `reference_step`.
    pub reference_rate: f64,
    /// Same quantity on the last step.
    pub final_rate: f64,
    pub stats: SolveStats,
}

impl ProfileSummary {
    pub fn energy_bounded(&self, slack: f64) -> bool {
        self.max_energy <= self.initial_energy + slack
    }

    pub fn near_stationary(&self) -> bool {
        self.final_rate <= 10.0 * self.reference_rate
    }
}

#[derive(Debug, Clone)]
pub struct ProfileRun {
    pub summary: ProfileSummary,
    pub initial: VectorField,
    pub final_state: VectorField,
}

impl ProfileRun {
    pub fn final_slice(&self) -> Result<VectorField> {
        center_slice(&self.final_state)
    }

    pub fn final_angles(&self) -> Result<AngleMap> {
        Ok(in_plane_angle_map(&self.final_slice()?))
    }
}

struct Trace {
    dt: f64,
    prev: Option<VectorField>,
    reference_step: u64,
    reference_rate: f64,
    last_rate: f64,
    e0: f64,
    max_e: f64,
    last_e: f64,
}

impl Observer for Trace {
    fn observe(&mut self, step: u64, state: &Stepper) -> Result<()> {
        let m = state.magnetization();
        if let Some(prev) = &self.prev {
            self.last_rate = crate::mesh::max_norm_error(m, prev)? / self.dt;
            if step == self.reference_step {
                self.reference_rate = self.last_rate;
            }
        }
        let e = state.energy()?;
        if !e.is_finite() {
            return Err(Error::Diverged { step, cell: 0 });
        }
        if step == 0 {
            self.e0 = e;
        }
        self.max_e = self.max_e.max(e);
        self.last_e = e;
        self.prev = Some(m.clone());
        Ok(())
    }
}

/// Relaxes `ctx` (its applied field is cleared) from the banded state for
/// `n_steps`, taking the reference rate at `n_steps / 10`.
pub fn profile_relaxation(scheme: SchemeKind, alpha: f64, mut ctx: FieldContext, dt: f64, n_steps: u64) -> Result<ProfileRun> {
    if n_steps < 10 {
        return Err(Error::InvalidArgument(format!("profile runs need at least 10 steps, got {n_steps}")));
    }
    ctx.params.alpha = alpha;
    let ctx = ctx.with_external([0.0; 3]);
    let initial = banded_initial_state(ctx.mesh);
    let mut stepper = Stepper::new(scheme, ctx, initial.clone(), dt)?;
    let mut trace = Trace {
        dt,
        prev: None,
        reference_step: n_steps / 10,
        reference_rate: f64::NAN,
        last_rate: f64::NAN,
        e0: f64::NAN,
        max_e: f64::NEG_INFINITY,
        last_e: f64::NAN,
    };
    let mut norms = NormChecker::default();
    stepper.run(n_steps, &mut [&mut trace, &mut norms])?;
    let stats = stepper.stats().clone();
    let summary = ProfileSummary {
        scheme,
        alpha,
        dt,
        steps: stats.steps,
        initial_energy: trace.e0,
        max_energy: trace.max_e,
        final_energy: trace.last_e,
        max_norm_deviation: norms.worst,
        counters_exact: stats.every_step_matches(scheme.counts_per_step()),
        reference_step: trace.reference_step,
        reference_rate: trace.reference_rate,
        final_rate: trace.last_rate,
        stats,
    };
    Ok(ProfileRun { summary, initial, final_state: stepper.magnetization().clone() })
}
