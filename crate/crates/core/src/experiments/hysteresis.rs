//! Quasi-static field sweeps: relax at each applied field, record the mean
//! magnetization, step the field, repeat.

use crate::error::{Error, Result};
use crate::field::FieldContext;
use crate::mesh::{average_magnetization, VectorField};
use crate::schemes::{SchemeKind, SolveStats, Stepper};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HysteresisProtocol {
    /// 0, 1 or 2 for x, y, z.
    pub axis: usize,
    /// Amplitude, dimensionless.
    pub h0: f64,
    /// Field step, dimensionless.
    pub dh: f64,
    /// Relative energy change that counts as relaxed.
    pub energy_tol: f64,
    pub max_steps: u64,
    pub scheme: SchemeKind,
    pub alpha: f64,
    pub dt: f64,
    /// Constant field added to every applied value; zero by default.
    #[serde(default)]
    pub bias: [f64; 3],
}

impl HysteresisProtocol {
    /// Field along x, `dh = h0 / 25`, threshold `1e-7`.
    pub fn along_x(scheme: SchemeKind, h0: f64, dt: f64) -> Self {
        Self { axis: 0, h0, dh: h0 / 25.0, energy_tol: 1e-7, max_steps: 20_000, scheme, alpha: 0.1, dt, bias: [0.0; 3] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis > 2 {
            return Err(Error::Validation(format!("field axis must be 0, 1 or 2, got {}", self.axis)));
        }
        if !(self.h0 > 0.0 && self.dh > 0.0 && self.dh <= 2.0 * self.h0) {
            return Err(Error::Validation(format!("need 0 < dh <= 2 h0, got h0 = {}, dh = {}", self.h0, self.dh)));
        }
        let n = 2.0 * self.h0 / self.dh;
        if (n - n.round()).abs() > 1e-9 * n {
            return Err(Error::Validation(format!("2 h0 / dh = {n} must be an integer")));
        }
        if !(self.energy_tol > 0.0) || self.max_steps == 0 {
            return Err(Error::Validation("energy_tol and max_steps must be positive".into()));
        }
        Ok(())
    }

    /// `+h0 -> -h0 -> +h0` inclusive, uniform steps, with the branch of each value.
    pub fn fields(&self) -> Vec<(Branch, f64)> {
        let n = (2.0 * self.h0 / self.dh).round() as usize;
        let down = (0..=n).map(|k| (Branch::Descending, self.h0 - k as f64 * self.dh));
        let up = (1..=n).map(|k| (Branch::Ascending, -self.h0 + k as f64 * self.dh));
        down.chain(up).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Descending,
    Ascending,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoopPoint {
    pub branch: Branch,
    pub h: f64,
    pub average: [f64; 3],
    pub steps: u64,
    pub energy: f64,
    pub converged: bool,
    /// Largest single-step energy rise while relaxing at this field.
    pub max_energy_increase: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HysteresisLoop {
    pub scheme: SchemeKind,
    pub axis: usize,
    pub dh: f64,
    pub points: Vec<LoopPoint>,
    pub stats: SolveStats,
    pub counters_exact: bool,
    pub max_norm_deviation: f64,
}

impl HysteresisLoop {
    /// Field where the mean component along the sweep axis first changes
    /// sign on `branch`, linearly interpolated between recorded fields.
    pub fn switch_field(&self, branch: Branch) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.points.iter().filter(|p| p.branch == branch).map(|p| (p.h, p.average[self.axis])).collect();
        let crossed = |a: f64, b: f64| match branch {
            Branch::Descending => a > 0.0 && b <= 0.0,
            Branch::Ascending => a < 0.0 && b >= 0.0,
        };
        // the ascending branch starts from the last descending point
        let start = match branch {
            Branch::Ascending => self.points.iter().rev().find(|p| p.branch == Branch::Descending).map(|p| (p.h, p.average[self.axis])),
            Branch::Descending => None,
        };
        let seq: Vec<(f64, f64)> = start.into_iter().chain(pts).collect();
        seq.windows(2).find(|w| crossed(w[0].1, w[1].1)).map(|w| {
            let ((h0, m0), (h1, m1)) = (w[0], w[1]);
            h0 + (h1 - h0) * m0 / (m0 - m1)
        })
    }

    /// `|closed integral of <m_axis> dH|` by the trapezoid rule.
    pub fn enclosed_area(&self) -> f64 {
        let seq: Vec<(f64, f64)> = self.points.iter().map(|p| (p.h, p.average[self.axis])).collect();
        let area: f64 = seq.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum();
        area.abs()
    }

    pub fn unconverged(&self) -> usize {
        self.points.iter().filter(|p| !p.converged).count()
    }
}

/// Runs the sweep from `m0`. Unrelaxed field values are flagged, not fatal.
pub fn hysteresis_loop(protocol: &HysteresisProtocol, mut ctx: FieldContext, m0: VectorField) -> Result<HysteresisLoop> {
    protocol.validate()?;
    ctx.params.alpha = protocol.alpha;
    let field_at = |h: f64| {
        let mut v = protocol.bias;
        v[protocol.axis] += h;
        v
    };
    ctx = ctx.with_external(field_at(protocol.h0));
    let mut stepper = Stepper::new(protocol.scheme, ctx, m0, protocol.dt)?;
    let mut points = Vec::new();
    let mut worst_norm = 0.0f64;
    for (branch, h) in protocol.fields() {
        stepper.set_applied_field(field_at(h));
        let mut e_prev = stepper.energy()?;
        let mut converged = false;
        let mut rise = 0.0f64;
        let mut steps = 0;
        while steps < protocol.max_steps {
            stepper.step()?;
            steps += 1;
            worst_norm = worst_norm.max(stepper.magnetization().max_norm_deviation());
            let e = stepper.energy()?;
            rise = rise.max(e - e_prev);
            let rel = (e - e_prev).abs() / e_prev.abs();
            e_prev = e;
            if rel < protocol.energy_tol {
                converged = true;
                break;
            }
        }
        points.push(LoopPoint {
            branch,
            h,
            average: average_magnetization(stepper.magnetization()),
            steps,
            energy: e_prev,
            converged,
            max_energy_increase: rise,
        });
    }
    let stats = stepper.stats().clone();
    Ok(HysteresisLoop {
        scheme: protocol.scheme,
        axis: protocol.axis,
        dh: protocol.dh,
        counters_exact: stats.every_step_matches(protocol.scheme.counts_per_step()),
        points,
        stats,
        max_norm_deviation: worst_norm,
    })
}
