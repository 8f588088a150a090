//! Time steppers: the Gauss-Seidel projection method (with the stabilized
//! starred local field) and the two reduced-cost variants A and B.
//!
//! Every stepper advances a unit field by `dt`. Per-step work is instrumented
//! in [`SolveStats`]: a "linear solve" is one scalar solve of
//! `(I - lambda Lap_h) u = b`, and an "FFT execution" is one rebuild of the
//! local field `fhat` (which carries one stray-field convolution when the
//! stray term is enabled).
//!
//! A manufactured source term, when present, is added as `dt * f(t^n)` to the
//! row that produces each component of the unprojected update.

use crate::error::{Error, Result};
use crate::field::FieldContext;
use crate::heat::HeatOperator;
use crate::mesh::{project_in_place, VectorField};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(rename = "gspm")]
    GspmOriginal,
    #[serde(rename = "a")]
    SchemeA,
    #[serde(rename = "b")]
    SchemeB,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::GspmOriginal, SchemeKind::SchemeA, SchemeKind::SchemeB];

    /// (linear solves, FFT executions) per step.
    pub fn counts_per_step(self) -> (u32, u32) {
        match self {
            SchemeKind::GspmOriginal => (7, 4),
            SchemeKind::SchemeA => (5, 3),
            SchemeKind::SchemeB => (3, 3),
        }
    }

    /// Fraction of linear solves saved relative to GSPM.
    pub fn ideal_saving(self) -> f64 {
        let (base, _) = SchemeKind::GspmOriginal.counts_per_step();
        let (own, _) = self.counts_per_step();
        (base - own) as f64 / base as f64
    }

    pub fn label(self) -> &'static str {
        match self {
            SchemeKind::GspmOriginal => "gspm",
            SchemeKind::SchemeA => "a",
            SchemeKind::SchemeB => "b",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gspm" | "original" | "gspm-original" => Ok(SchemeKind::GspmOriginal),
            "a" | "scheme-a" | "schemea" => Ok(SchemeKind::SchemeA),
            "b" | "scheme-b" | "schemeb" => Ok(SchemeKind::SchemeB),
            other => Err(Error::InvalidArgument(format!("unknown scheme `{other}` (expected gspm, a or b)"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub steps: u64,
    /// Counts of the most recent step.
    pub linear_solves_per_step: u32,
    pub fft_executions_per_step: u32,
    /// Extremes over all steps taken; equal to the per-step values when every step matched.
    pub linear_solves_range: (u32, u32),
    pub fft_executions_range: (u32, u32),
    pub total_linear_solves: u64,
    pub total_fft_executions: u64,
    /// One-time initialization cost (Scheme B's `g^0`), not part of the per-step counts.
    pub warm_start_linear_solves: u32,
    pub warm_start_fft_executions: u32,
    pub wall_seconds: f64,
    pub last_step_seconds: f64,
}

impl SolveStats {
    fn record(&mut self, solves: u32, ffts: u32, seconds: f64) {
        if self.steps == 0 {
            self.linear_solves_range = (solves, solves);
            self.fft_executions_range = (ffts, ffts);
        } else {
            self.linear_solves_range = (self.linear_solves_range.0.min(solves), self.linear_solves_range.1.max(solves));
            self.fft_executions_range = (self.fft_executions_range.0.min(ffts), self.fft_executions_range.1.max(ffts));
        }
        self.steps += 1;
        self.linear_solves_per_step = solves;
        self.fft_executions_per_step = ffts;
        self.total_linear_solves += solves as u64;
        self.total_fft_executions += ffts as u64;
        self.wall_seconds += seconds;
        self.last_step_seconds = seconds;
    }

    /// True when every recorded step used exactly `counts` (solves, FFTs).
    pub fn every_step_matches(&self, counts: (u32, u32)) -> bool {
        self.steps > 0
            && self.linear_solves_range == (counts.0, counts.0)
            && self.fft_executions_range == (counts.1, counts.1)
    }
}

/// Scheme B's second set of approximate solutions.
#[derive(Debug, Clone)]
struct SchemeBCarry {
    g: [Vec<f64>; 3],
    mstar: Option<VectorField>,
}

type Comps = [Vec<f64>; 3];

/// An owned simulation: current state plus everything needed to advance it.
#[derive(Debug)]
pub struct Stepper {
    kind: SchemeKind,
    dt: f64,
    t: f64,
    ctx: FieldContext,
    m: VectorField,
    heat: HeatOperator,
    damping_heat: Option<HeatOperator>,
    carry: Option<SchemeBCarry>,
    stats: SolveStats,
    field_builds: u32,
}

/// Largest `||m| - 1|` accepted as a unit initial field.
pub const UNIT_TOLERANCE: f64 = 1e-12;

impl Stepper {
    pub fn new(kind: SchemeKind, ctx: FieldContext, m0: VectorField, dt: f64) -> Result<Self> {
        Self::starting_at(kind, ctx, m0, dt, 0.0)
    }

    pub fn starting_at(kind: SchemeKind, ctx: FieldContext, m0: VectorField, dt: f64, t0: f64) -> Result<Self> {
        ctx.validate()?;
        ctx.mesh.check_same(&m0.mesh)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if let Some(cell) = m0.first_non_finite() {
            return Err(Error::InvalidArgument(format!("initial field is non-finite at cell {cell}")));
        }
        let dev = m0.max_norm_deviation();
        if dev > UNIT_TOLERANCE {
            return Err(Error::InvalidArgument(format!("initial field is not unit (max ||m|-1| = {dev:e})")));
        }
        let eps = ctx.params.eps;
        let alpha = ctx.params.alpha;
        let heat = HeatOperator::new(ctx.mesh, dt * eps);
        let damping_heat = (kind == SchemeKind::GspmOriginal).then(|| HeatOperator::new(ctx.mesh, alpha * dt * eps));
        let mut stepper = Self {
            kind,
            dt,
            t: t0,
            ctx,
            m: m0,
            heat,
            damping_heat,
            carry: None,
            stats: SolveStats::default(),
            field_builds: 0,
        };
        if kind == SchemeKind::SchemeB {
            stepper.warm_start()?;
        }
        Ok(stepper)
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn magnetization(&self) -> &VectorField {
        &self.m
    }

    pub fn context(&self) -> &FieldContext {
        &self.ctx
    }

    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    /// Scheme B's carried `g^n`, if any.
    pub fn carried_g(&self) -> Option<VectorField> {
        self.carry.as_ref().map(|c| VectorField::from_components(self.ctx.mesh, [&c.g[0], &c.g[1], &c.g[2]]))
    }

    /// Scheme B's unprojected `m*` from the last step.
    pub fn last_unprojected(&self) -> Option<&VectorField> {
        self.carry.as_ref().and_then(|c| c.mstar.as_ref())
    }

    /// Changes the applied field between steps (hysteresis sweeps).
    pub fn set_applied_field(&mut self, h: [f64; 3]) {
        self.ctx.h_ext = h;
        self.ctx.terms.external = true;
    }

    pub fn energy(&self) -> Result<f64> {
        self.ctx.total_energy(&self.m)
    }

    fn solve_count(&self) -> u64 {
        self.heat.solve_count() + self.damping_heat.as_ref().map_or(0, |h| h.solve_count())
    }

    /// `fhat` on the state assembled from three component arrays.
    fn fhat(&mut self, c: [&[f64]; 3]) -> Result<Comps> {
        self.field_builds += 1;
        let field = VectorField::from_components(self.ctx.mesh, c);
        Ok(self.ctx.local_field(&field)?.components())
    }

    fn solve_shifted(&self, m: &[f64], f: &[f64]) -> Vec<f64> {
        let dt = self.dt;
        let rhs: Vec<f64> = m.iter().zip(f).map(|(a, b)| a + dt * b).collect();
        self.heat.solve(&rhs)
    }

    fn warm_start(&mut self) -> Result<()> {
        let solves0 = self.solve_count();
        let builds0 = self.field_builds;
        let m = self.m.components();
        let fh = self.fhat([&m[0], &m[1], &m[2]])?;
        let g = [0, 1, 2].map(|c| self.solve_shifted(&m[c], &fh[c]));
        self.carry = Some(SchemeBCarry { g, mstar: None });
        self.stats.warm_start_linear_solves = (self.solve_count() - solves0) as u32;
        self.stats.warm_start_fft_executions = self.field_builds - builds0;
        Ok(())
    }

    /// Advances one step of size `dt`.
    pub fn step(&mut self) -> Result<()> {
        let start = Instant::now();
        let solves0 = self.solve_count();
        let builds0 = self.field_builds;
        let source = self.ctx.forcing(self.t).map(|f| f.components());
        let unprojected = match self.kind {
            SchemeKind::GspmOriginal => self.gspm(source.as_ref())?,
            SchemeKind::SchemeA => self.scheme_a(source.as_ref())?,
            SchemeKind::SchemeB => self.scheme_b(source.as_ref())?,
        };
        let step_no = self.stats.steps + 1;
        let mut next = VectorField::from_components(self.ctx.mesh, [&unprojected[0], &unprojected[1], &unprojected[2]]);
        if let Some(cell) = next.first_non_finite() {
            return Err(Error::Diverged { step: step_no, cell });
        }
        if let Some(carry) = self.carry.as_mut() {
            carry.mstar = Some(next.clone());
        }
        project_in_place(&mut next.data)?;
        self.m = next;
        self.t += self.dt;
        let solves = (self.solve_count() - solves0) as u32;
        let builds = self.field_builds - builds0;
        self.stats.record(solves, builds, start.elapsed().as_secs_f64());
        Ok(())
    }

    fn gspm(&mut self, source: Option<&Comps>) -> Result<Comps> {
        let dt = self.dt;
        let alpha = self.ctx.params.alpha;
        let [m1, m2, m3] = self.m.components();
        let n = m1.len();
        let src = |c: usize, i: usize| source.map_or(0.0, |s| dt * s[c][i]);

        let fh = self.fhat([&m1, &m2, &m3])?;
        let g2 = self.solve_shifted(&m2, &fh[1]);
        let g3 = self.solve_shifted(&m3, &fh[2]);
        let s1: Vec<f64> = (0..n).map(|i| m1[i] + (g2[i] * m3[i] - g3[i] * m2[i]) + src(0, i)).collect();

        let fh = self.fhat([&s1, &m2, &m3])?;
        let g1s = self.solve_shifted(&s1, &fh[0]);
        let s2: Vec<f64> = (0..n).map(|i| m2[i] + (g3[i] * s1[i] - g1s[i] * m3[i]) + src(1, i)).collect();

        let fh = self.fhat([&s1, &s2, &m3])?;
        let g2s = self.solve_shifted(&s2, &fh[1]);
        let s3: Vec<f64> = (0..n).map(|i| m3[i] + (g1s[i] * s2[i] - g2s[i] * s1[i]) + src(2, i)).collect();

        // Heat flow without constraint, local field taken at the starred state.
        let fh = self.fhat([&s1, &s2, &s3])?;
        let damping = self.damping_heat.as_ref().expect("GSPM stepper owns a damping operator");
        let star = [s1, s2, s3];
        let out = [0, 1, 2].map(|c| {
            let rhs: Vec<f64> = star[c].iter().zip(&fh[c]).map(|(m, f)| m + alpha * dt * f).collect();
            damping.solve(&rhs)
        });
        Ok(out)
    }

    fn scheme_a(&mut self, source: Option<&Comps>) -> Result<Comps> {
        let dt = self.dt;
        let alpha = self.ctx.params.alpha;
        let [m1, m2, m3] = self.m.components();
        let n = m1.len();
        let src = |c: usize, i: usize| source.map_or(0.0, |s| dt * s[c][i]);

        let fh = self.fhat([&m1, &m2, &m3])?;
        let g1 = self.solve_shifted(&m1, &fh[0]);
        let g2 = self.solve_shifted(&m2, &fh[1]);
        let g3 = self.solve_shifted(&m3, &fh[2]);

        let s1: Vec<f64> = (0..n)
            .map(|i| {
                let mg = m1[i] * g1[i] + m2[i] * g2[i] + m3[i] * g3[i];
                m1[i] - (m2[i] * g3[i] - m3[i] * g2[i]) - alpha * mg * m1[i] + alpha * g1[i] + src(0, i)
            })
            .collect();

        let fh = self.fhat([&s1, &m2, &m3])?;
        let g1s = self.solve_shifted(&s1, &fh[0]);
        let s2: Vec<f64> = (0..n)
            .map(|i| {
                let mg = s1[i] * g1s[i] + m2[i] * g2[i] + m3[i] * g3[i];
                m2[i] - (m3[i] * g1s[i] - s1[i] * g3[i]) - alpha * mg * m2[i] + alpha * g2[i] + src(1, i)
            })
            .collect();

        let fh = self.fhat([&s1, &s2, &m3])?;
        let g2s = self.solve_shifted(&s2, &fh[1]);
        let s3: Vec<f64> = (0..n)
            .map(|i| {
                let mg = s1[i] * g1s[i] + s2[i] * g2s[i] + m3[i] * g3[i];
                m3[i] - (s1[i] * g2s[i] - s2[i] * g1s[i]) - alpha * mg * m3[i] + alpha * g3[i] + src(2, i)
            })
            .collect();
        Ok([s1, s2, s3])
    }

    fn scheme_b(&mut self, source: Option<&Comps>) -> Result<Comps> {
        let dt = self.dt;
        let alpha = self.ctx.params.alpha;
        let [m1, m2, m3] = self.m.components();
        let n = m1.len();
        let src = |c: usize, i: usize| source.map_or(0.0, |s| dt * s[c][i]);
        let [g1, g2, g3] = self.carry.take().expect("scheme B stepper is warm-started").g;

        let s1: Vec<f64> = (0..n)
            .map(|i| {
                let mg = m1[i] * g1[i] + m2[i] * g2[i] + m3[i] * g3[i];
                let mm = m1[i] * m1[i] + m2[i] * m2[i] + m3[i] * m3[i];
                m1[i] - (m2[i] * g3[i] - m3[i] * g2[i]) - alpha * mg * m1[i] + alpha * mm * g1[i] + src(0, i)
            })
            .collect();
        let fh = self.fhat([&s1, &m2, &m3])?;
        let n1 = self.solve_shifted(&s1, &fh[0]);

        let s2: Vec<f64> = (0..n)
            .map(|i| {
                let mg = s1[i] * n1[i] + m2[i] * g2[i] + m3[i] * g3[i];
                let mm = s1[i] * s1[i] + m2[i] * m2[i] + m3[i] * m3[i];
                m2[i] - (m3[i] * n1[i] - s1[i] * g3[i]) - alpha * mg * m2[i] + alpha * mm * g2[i] + src(1, i)
            })
            .collect();
        let fh = self.fhat([&s1, &s2, &m3])?;
        let n2 = self.solve_shifted(&s2, &fh[1]);

        let s3: Vec<f64> = (0..n)
            .map(|i| {
                let mg = s1[i] * n1[i] + s2[i] * n2[i] + m3[i] * g3[i];
                let mm = s1[i] * s1[i] + s2[i] * s2[i] + m3[i] * m3[i];
                m3[i] - (s1[i] * n2[i] - s2[i] * n1[i]) - alpha * mg * m3[i] + alpha * mm * g3[i] + src(2, i)
            })
            .collect();
        let fh = self.fhat([&s1, &s2, &s3])?;
        let n3 = self.solve_shifted(&s3, &fh[2]);

        self.carry = Some(SchemeBCarry { g: [n1, n2, n3], mstar: None });
        Ok([s1, s2, s3])
    }

    /// Advances `n_steps`, calling each observer on its stride (and once on the initial state).
    pub fn run(&mut self, n_steps: u64, observers: &mut [&mut dyn Observer]) -> Result<RunReport> {
        for obs in observers.iter_mut() {
            obs.observe(0, self)?;
        }
        for k in 1..=n_steps {
            self.step()?;
            for obs in observers.iter_mut() {
                let stride = obs.stride().max(1);
                if k % stride == 0 || k == n_steps {
                    obs.observe(k, self)?;
                }
            }
        }
        Ok(self.report())
    }

    pub fn report(&self) -> RunReport {
        RunReport {
            scheme: self.kind,
            steps: self.stats.steps,
            dt: self.dt,
            final_time: self.t,
            stats: self.stats.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scheme: SchemeKind,
    pub steps: u64,
    pub dt: f64,
    pub final_time: f64,
    pub stats: SolveStats,
}

/// Hook invoked during [`Stepper::run`].
pub trait Observer {
    fn stride(&self) -> u64 {
        1
    }

    /// `step` is 0 for the initial state.
    fn observe(&mut self, step: u64, state: &Stepper) -> Result<()>;
}

/// Records `(step, time, energy)`.
#[derive(Debug, Default, Clone)]
pub struct EnergyRecorder {
    pub stride: u64,
    pub samples: Vec<(u64, f64, f64)>,
}

impl EnergyRecorder {
    pub fn every(stride: u64) -> Self {
        Self { stride, samples: Vec::new() }
    }

    /// Largest increase between consecutive samples (0 if energy never rose).
    pub fn max_increase(&self) -> f64 {
        self.samples.windows(2).map(|w| w[1].2 - w[0].2).fold(0.0, f64::max)
    }
}

impl Observer for EnergyRecorder {
    fn stride(&self) -> u64 {
        self.stride
    }

    fn observe(&mut self, step: u64, state: &Stepper) -> Result<()> {
        self.samples.push((step, state.time(), state.energy()?));
        Ok(())
    }
}

/// Tracks the worst `||m| - 1|` seen.
#[derive(Debug, Default, Clone)]
pub struct NormChecker {
    pub worst: f64,
}

impl Observer for NormChecker {
    fn observe(&mut self, _step: u64, state: &Stepper) -> Result<()> {
        self.worst = self.worst.max(state.magnetization().max_norm_deviation());
        Ok(())
    }
}

/// Keeps copies of the field at a stride.
#[derive(Debug, Default, Clone)]
pub struct SnapshotRecorder {
    pub stride: u64,
    pub snapshots: Vec<(u64, f64, VectorField)>,
}

impl Observer for SnapshotRecorder {
    fn stride(&self) -> u64 {
        self.stride
    }

    fn observe(&mut self, step: u64, state: &Stepper) -> Result<()> {
        self.snapshots.push((step, state.time(), state.magnetization().clone()));
        Ok(())
    }
}
