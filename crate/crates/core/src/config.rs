//! Run configuration.
//!
//! The format is TOML restricted to flat `section.key = value` lines (a
//! `[section]` header followed by `key = value` is equivalent). Unknown keys are
//! rejected. Physical quantities carry their unit in the key name; everything
//! is converted to dimensionless form through [`MaterialParams`].
//!
//! ```toml
//! scheme = "b"
//! seed = 7
//! mesh.cells = [64, 64, 1]
//! mesh.cell_size = 4e-9
//! material.alpha = 0.1
//! time.dt_physical = 1e-12
//! time.n_steps = 1000
//! field.external_mt = [0.0, 0.0, 0.0]
//! output.dir = "out"
//! ```

use crate::error::{Error, Result};
use crate::experiments::film::Film;
use crate::experiments::hysteresis::HysteresisProtocol;
use crate::field::{Dimensionless, FieldContext};
use crate::material::MaterialParams;
use crate::mesh::Mesh;
use crate::schemes::SchemeKind;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scheme: Option<SchemeKind>,
    seed: Option<u64>,
    #[serde(default)]
    mesh: RawMesh,
    #[serde(default)]
    material: RawMaterial,
    #[serde(default)]
    dimensionless: RawOverrides,
    time: Option<RawTime>,
    #[serde(default)]
    field: RawField,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    hysteresis: RawHysteresis,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    cells: Option<[usize; 3]>,
    /// Cubic cell edge in meters.
    cell_size: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    ms: Option<f64>,
    a_ex: Option<f64>,
    ku: Option<f64>,
    gamma: Option<f64>,
    mu0: Option<f64>,
    length: Option<f64>,
    alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOverrides {
    q: Option<f64>,
    eps: Option<f64>,
    alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: Option<f64>,
    dt_physical: Option<f64>,
    t_final: Option<f64>,
    n_steps: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    #[serde(default = "yes")]
    anisotropy: bool,
    #[serde(default = "yes")]
    stray: bool,
    #[serde(default)]
    external_mt: [f64; 3],
}

fn yes() -> bool {
    true
}

impl Default for RawField {
    fn default() -> Self {
        Self { anisotropy: true, stray: true, external_mt: [0.0; 3] }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    snapshot_stride: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHysteresis {
    axis: Option<usize>,
    h0_mt: Option<f64>,
    dh_mt: Option<f64>,
    energy_tol: Option<f64>,
    max_steps: Option<u64>,
    bias_mt: Option<[f64; 3]>,
}

/// Either a fixed step count or a final time; resolved against `dt` by [`RunConfig::n_steps`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Duration {
    Steps(u64),
    FinalTime(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HysteresisSettings {
    pub axis: usize,
    pub h0_mt: f64,
    pub dh_mt: f64,
    pub energy_tol: f64,
    pub max_steps: u64,
    pub bias_mt: [f64; 3],
}

/// Validated configuration. Anything not given keeps the desk-film default.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scheme: SchemeKind,
    pub seed: u64,
    pub cells: [usize; 3],
    pub cell_size: f64,
    pub material: MaterialParams,
    /// Dimensionless groups after overrides.
    pub params: Dimensionless,
    pub dt: f64,
    pub duration: Option<Duration>,
    pub anisotropy: bool,
    pub stray: bool,
    /// Dimensionless applied field.
    pub external: [f64; 3],
    pub out_dir: Option<PathBuf>,
    pub snapshot_stride: u64,
    pub hysteresis: HysteresisSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("empty config is valid")
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn exactly_one<T>(a: Option<T>, b: Option<T>, names: (&str, &str)) -> Result<Option<(bool, T)>> {
    match (a, b) {
        (Some(_), Some(_)) => Err(Error::Validation(format!("give only one of {} and {}", names.0, names.1))),
        (Some(v), None) => Ok(Some((true, v))),
        (None, Some(v)) => Ok(Some((false, v))),
        (None, None) => Ok(None),
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Validation(format!("{name} must be positive, got {v}")))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
        message: e.message().to_string(),
    })?;
    let cells = raw.mesh.cells.unwrap_or([64, 64, 1]);
    if cells.iter().any(|&n| n == 0) {
        return Err(Error::Validation(format!("mesh.cells must be positive, got {cells:?}")));
    }
    let cell_size = positive("mesh.cell_size", raw.mesh.cell_size.unwrap_or(4e-9))?;
    let m = raw.material;
    let defaults = MaterialParams::permalloy(Film::diameter(cells, cell_size));
    let material = MaterialParams {
        ms: m.ms.unwrap_or(defaults.ms),
        a_ex: m.a_ex.unwrap_or(defaults.a_ex),
        ku: m.ku.unwrap_or(defaults.ku),
        gamma: m.gamma.unwrap_or(defaults.gamma),
        mu0: m.mu0.unwrap_or(defaults.mu0),
        length: m.length.unwrap_or(defaults.length),
        alpha: m.alpha.unwrap_or(defaults.alpha),
    };
    material.validate()?;
    let mut params = Dimensionless::from_material(&material);
    let o = raw.dimensionless;
    params.q = o.q.unwrap_or(params.q);
    params.eps = o.eps.unwrap_or(params.eps);
    params.alpha = o.alpha.unwrap_or(params.alpha);
    if !(params.q >= 0.0 && params.eps > 0.0 && params.alpha >= 0.0) {
        return Err(Error::Validation(format!("need q >= 0, eps > 0, alpha >= 0, got {params:?}")));
    }

    let (dt, duration) = match raw.time {
        None => (material.to_dimensionless_time(1e-12), None),
        Some(t) => {
            let dt = match exactly_one(t.dt, t.dt_physical, ("time.dt", "time.dt_physical"))? {
                Some((true, v)) => positive("time.dt", v)?,
                Some((false, v)) => material.to_dimensionless_time(positive("time.dt_physical", v)?),
                None => return Err(Error::Validation("time section needs exactly one of time.dt and time.dt_physical".into())),
            };
            let duration = match exactly_one(t.t_final, t.n_steps.map(|n| n as f64), ("time.t_final", "time.n_steps"))? {
                Some((true, v)) => Duration::FinalTime(positive("time.t_final", v)?),
                Some((false, n)) => Duration::Steps(n as u64),
                None => return Err(Error::Validation("time section needs exactly one of time.t_final and time.n_steps".into())),
            };
            (dt, Some(duration))
        }
    };

    let to_field = |mt: f64| material.tesla_to_field(mt * 1e-3);
    let h = raw.hysteresis;
    let h0_mt = positive("hysteresis.h0_mt", h.h0_mt.unwrap_or(50.0))?;
    let hysteresis = HysteresisSettings {
        axis: h.axis.unwrap_or(0),
        h0_mt,
        dh_mt: positive("hysteresis.dh_mt", h.dh_mt.unwrap_or(h0_mt / 25.0))?,
        energy_tol: positive("hysteresis.energy_tol", h.energy_tol.unwrap_or(1e-7))?,
        max_steps: h.max_steps.unwrap_or(20_000),
        bias_mt: h.bias_mt.unwrap_or([0.0; 3]),
    };
    let cfg = RunConfig {
        scheme: raw.scheme.unwrap_or(SchemeKind::SchemeB),
        seed: raw.seed.unwrap_or(7),
        cells,
        cell_size,
        material,
        params,
        dt,
        duration,
        anisotropy: raw.field.anisotropy,
        stray: raw.field.stray,
        external: raw.field.external_mt.map(to_field),
        out_dir: raw.output.dir,
        snapshot_stride: raw.output.snapshot_stride.unwrap_or(0),
        hysteresis,
    };
    cfg.hysteresis_protocol(cfg.scheme)?.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

impl RunConfig {
    pub fn mesh(&self) -> Result<Mesh> {
        let h = self.material.to_dimensionless_length(self.cell_size);
        Mesh::new(self.cells, [h; 3])
    }

    /// Field terms as configured, on [`mesh`](Self::mesh).
    pub fn context(&self) -> Result<FieldContext> {
        self.context_on(self.mesh()?)
    }

    /// Same terms and parameters on another mesh.
    pub fn context_on(&self, mesh: Mesh) -> Result<FieldContext> {
        let mut ctx = FieldContext::exchange_only(mesh, self.params);
        if self.anisotropy {
            ctx = ctx.with_anisotropy();
        }
        if self.stray {
            ctx = ctx.with_stray();
        }
        if self.external != [0.0; 3] {
            ctx = ctx.with_external(self.external);
        }
        ctx.validate()?;
        Ok(ctx)
    }

    /// Steps to run, `default` if the config has no time section.
    pub fn n_steps(&self, default: u64) -> Result<u64> {
        match self.duration {
            None => Ok(default),
            Some(Duration::Steps(n)) => Ok(n),
            Some(Duration::FinalTime(t)) => crate::experiments::convergence::step_count(t, self.dt),
        }
    }

    pub fn field_from_mt(&self, mt: f64) -> f64 {
        self.material.tesla_to_field(mt * 1e-3)
    }

    pub fn field_to_mt(&self, h: f64) -> f64 {
        self.material.field_to_tesla(h) * 1e3
    }

    pub fn hysteresis_protocol(&self, scheme: SchemeKind) -> Result<HysteresisProtocol> {
        let s = &self.hysteresis;
        let p = HysteresisProtocol {
            axis: s.axis,
            h0: self.field_from_mt(s.h0_mt),
            dh: self.field_from_mt(s.dh_mt),
            energy_tol: s.energy_tol,
            max_steps: s.max_steps,
            scheme,
            alpha: self.params.alpha,
            dt: self.dt,
            bias: s.bias_mt.map(|b| self.field_from_mt(b)),
        };
        Ok(p)
    }
}
