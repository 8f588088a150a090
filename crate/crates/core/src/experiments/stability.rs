//! Long runs over a grid of damping and step-size values, checking that
//! nothing blows up and the energy never climbs above where it started.

use crate::error::{Error, Result};
use crate::field::{Dimensionless, FieldContext};
use crate::mesh::{Mesh, VectorField};
use crate::schemes::{NormChecker, Observer, SchemeKind, Stepper};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Absolute slack on "energy bounded by its initial value".
pub const ENERGY_SLACK: f64 = 1e-8;

/// Random unit field built from a few low cosine modes per component, so it
/// is smooth and compatible with the Neumann closure.
pub fn random_smooth_field(mesh: &Mesh, seed: u64, modes: usize) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ext = mesh.extent();
    // coeffs[c][axis][k]
    let coeffs: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|_| (0..3).map(|_| (0..=modes).map(|_| rng.random_range(-1.0..1.0)).collect()).collect())
        .collect();
    VectorField::from_fn(*mesh, |x| {
        let mut v = [0.0; 3];
        for (c, out) in v.iter_mut().enumerate() {
            for axis in 0..3 {
                let s = (x[axis] - mesh.origin[axis]) / ext[axis];
                *out += coeffs[c][axis].iter().enumerate().map(|(k, a)| a * (k as f64 * PI * s).cos()).sum::<f64>();
            }
        }
        let n = crate::mesh::norm(&v);
        if n < 1e-3 {
            [0.0, 0.0, 1.0]
        } else {
            v.map(|c| c / n)
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityCell {
    pub scheme: SchemeKind,
    pub alpha: f64,
    pub dt: f64,
    pub steps: u64,
    pub finite: bool,
    pub initial_energy: f64,
    pub max_energy: f64,
    pub max_norm_deviation: f64,
    pub counters_exact: bool,
    pub stable: bool,
    /// Error message if the run aborted.
    pub failure: Option<String>,
}

struct Watch {
    e0: f64,
    max_e: f64,
}

impl Observer for Watch {
    fn observe(&mut self, _step: u64, state: &Stepper) -> Result<()> {
        let e = state.energy()?;
        if !e.is_finite() {
            return Err(Error::Diverged { step: state.stats().steps, cell: 0 });
        }
        self.max_e = self.max_e.max(e);
        Ok(())
    }
}

/// Exchange-only runs (`eps = 1`, no forcing or applied field) for every
/// `(alpha, dt)` pair.
pub fn stability_sweep(scheme: SchemeKind, alphas: &[f64], dts: &[f64], mesh: Mesh, n_steps: u64, seed: u64) -> Result<Vec<StabilityCell>> {
    let m0 = random_smooth_field(&mesh, seed, 4);
    let mut cells = Vec::new();
    for &alpha in alphas {
        for &dt in dts {
            let ctx = FieldContext::exchange_only(mesh, Dimensionless { q: 0.0, eps: 1.0, alpha });
            let e0 = ctx.total_energy(&m0)?;
            let mut watch = Watch { e0, max_e: e0 };
            let mut norms = NormChecker::default();
            let mut stepper = Stepper::new(scheme, ctx, m0.clone(), dt)?;
            let outcome = stepper.run(n_steps, &mut [&mut watch, &mut norms]);
            let finite = stepper.magnetization().first_non_finite().is_none();
            let counters_exact = stepper.stats().every_step_matches(scheme.counts_per_step());
            let failure = outcome.err().map(|e| e.to_string());
            let stable = failure.is_none() && finite && watch.max_e <= watch.e0 + ENERGY_SLACK;
            cells.push(StabilityCell {
                scheme,
                alpha,
                dt,
                steps: stepper.stats().steps,
                finite,
                initial_energy: watch.e0,
                max_energy: watch.max_e,
                max_norm_deviation: norms.worst,
                counters_exact,
                stable,
                failure,
            });
        }
    }
    Ok(cells)
}
