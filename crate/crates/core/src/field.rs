//! Effective-field assembly and the discrete Landau-Lifshitz energy.
//!
//! The effective field is split as `h = eps * Lap_h m + fhat` where
//! `fhat = -Q (m2 e2 + m3 e3) + h_e + h_s`. A manufactured-solution source
//! term is carried alongside, but it is not part of `fhat`: it enters the
//! equation additively (`m_t = ... + f`), never through the cross products.

use crate::demag::DemagTensor;
use crate::error::{Error, Result};
use crate::heat::apply_laplacian_vector;
use crate::material::MaterialParams;
use crate::mesh::{Mesh, VectorField};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Time-dependent source sampled on a mesh.
pub trait Forcing: Send + Sync {
    fn evaluate(&self, mesh: &Mesh, t: f64) -> VectorField;
}

impl<F> Forcing for F
where
    F: Fn([f64; 3], f64) -> [f64; 3] + Send + Sync,
{
    fn evaluate(&self, mesh: &Mesh, t: f64) -> VectorField {
        VectorField::from_fn(*mesh, |x| self(x, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensionless {
    pub q: f64,
    pub eps: f64,
    pub alpha: f64,
}

impl Dimensionless {
    pub fn from_material(p: &MaterialParams) -> Self {
        Self { q: p.q(), eps: p.eps(), alpha: p.alpha }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terms {
    pub anisotropy: bool,
    pub external: bool,
    pub stray: bool,
    pub forcing: bool,
}

impl Terms {
    pub const NONE: Terms = Terms { anisotropy: false, external: false, stray: false, forcing: false };
}

#[derive(Clone)]
pub struct FieldContext {
    pub mesh: Mesh,
    pub params: Dimensionless,
    /// Uniform applied field, dimensionless.
    pub h_ext: [f64; 3],
    pub terms: Terms,
    demag: Option<Arc<DemagTensor>>,
    forcing: Option<Arc<dyn Forcing>>,
}

impl fmt::Debug for FieldContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldContext")
            .field("mesh", &self.mesh)
            .field("params", &self.params)
            .field("h_ext", &self.h_ext)
            .field("terms", &self.terms)
            .field("demag", &self.demag.is_some())
            .field("forcing", &self.forcing.is_some())
            .finish()
    }
}

impl FieldContext {
    /// Exchange only: every optional term disabled.
    pub fn exchange_only(mesh: Mesh, params: Dimensionless) -> Self {
        Self { mesh, params, h_ext: [0.0; 3], terms: Terms::NONE, demag: None, forcing: None }
    }

    pub fn with_anisotropy(mut self) -> Self {
        self.terms.anisotropy = true;
        self
    }

    pub fn with_external(mut self, h: [f64; 3]) -> Self {
        self.terms.external = true;
        self.h_ext = h;
        self
    }

    /// Enables the stray field, building the tensor for this mesh.
    pub fn with_stray(self) -> Self {
        let tensor = Arc::new(DemagTensor::new(self.mesh));
        self.with_demag(tensor)
    }

    pub fn with_demag(mut self, tensor: Arc<DemagTensor>) -> Self {
        assert!(tensor.mesh().same_grid(&self.mesh), "demag tensor built for another mesh");
        self.terms.stray = true;
        self.demag = Some(tensor);
        self
    }

    pub fn with_forcing(mut self, f: Arc<dyn Forcing>) -> Self {
        self.terms.forcing = true;
        self.forcing = Some(f);
        self
    }

    pub fn demag(&self) -> Option<&Arc<DemagTensor>> {
        self.demag.as_ref()
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.stray && self.demag.is_none() {
            return Err(Error::Validation("stray field enabled without a demag tensor".into()));
        }
        if self.terms.forcing && self.forcing.is_none() {
            return Err(Error::Validation("forcing enabled without a forcing function".into()));
        }
        let p = self.params;
        if !(p.q >= 0.0 && p.eps > 0.0 && p.alpha >= 0.0) {
            return Err(Error::Validation(format!("need Q >= 0, eps > 0, alpha >= 0; got {p:?}")));
        }
        Ok(())
    }

    /// Stray field of `m`, or `None` when the term is disabled.
    pub fn stray(&self, m: &VectorField) -> Result<Option<VectorField>> {
        match (&self.demag, self.terms.stray) {
            (Some(t), true) => t.stray_field(m).map(Some),
            _ => Ok(None),
        }
    }

    /// Source term `f(., t)`, or `None` when disabled.
    pub fn forcing(&self, t: f64) -> Option<VectorField> {
        match (&self.forcing, self.terms.forcing) {
            (Some(f), true) => Some(f.evaluate(&self.mesh, t)),
            _ => None,
        }
    }

    /// `fhat = -Q (m2 e2 + m3 e3) + h_e + h_s`, enabled terms only.
    pub fn local_field(&self, m: &VectorField) -> Result<VectorField> {
        self.mesh.check_same(&m.mesh)?;
        let stray = self.stray(m)?;
        Ok(self.local_field_with_stray(m, stray.as_ref()))
    }

    /// As [`local_field`](Self::local_field) but with a precomputed stray field.
    pub fn local_field_with_stray(&self, m: &VectorField, stray: Option<&VectorField>) -> VectorField {
        let mut out = VectorField::zeros(self.mesh);
        if self.terms.anisotropy {
            let q = self.params.q;
            for (o, v) in out.data.iter_mut().zip(&m.data) {
                o[1] -= q * v[1];
                o[2] -= q * v[2];
            }
        }
        if self.terms.external {
            for o in out.data.iter_mut() {
                for c in 0..3 {
                    o[c] += self.h_ext[c];
                }
            }
        }
        if let Some(hs) = stray {
            for (o, h) in out.data.iter_mut().zip(&hs.data) {
                for c in 0..3 {
                    o[c] += h[c];
                }
            }
        }
        out
    }

    /// `h = eps * Lap_h m + fhat`.
    pub fn full_field(&self, m: &VectorField) -> Result<VectorField> {
        let fhat = self.local_field(m)?;
        Ok(fhat.axpy(self.params.eps, &apply_laplacian_vector(m)))
    }

    /// Dimensionless energy per unit volume,
    /// `1/2 mean[ eps |grad_h m|^2 + Q (m2^2 + m3^2) - 2 h_e . m - h_s . m ]`.
    pub fn total_energy(&self, m: &VectorField) -> Result<f64> {
        self.mesh.check_same(&m.mesh)?;
        let stray = self.stray(m)?;
        Ok(self.energy_with_stray(m, stray.as_ref()))
    }

    pub fn energy_with_stray(&self, m: &VectorField, stray: Option<&VectorField>) -> f64 {
        let n = self.mesh.n_cells() as f64;
        let mut sum = self.params.eps * exchange_sum(m);
        if self.terms.anisotropy {
            sum += self.params.q * m.data.iter().map(|v| v[1] * v[1] + v[2] * v[2]).sum::<f64>();
        }
        if self.terms.external {
            sum -= 2.0 * m.data.iter().map(|v| crate::mesh::dot(v, &self.h_ext)).sum::<f64>();
        }
        if let Some(hs) = stray {
            sum -= hs.dot(m);
        }
        0.5 * sum / n
    }
}

/// Sum over interior faces of `|m_b - m_a|^2 / d^2`; boundary faces carry no flux.
fn exchange_sum(m: &VectorField) -> f64 {
    let mesh = &m.mesh;
    let mut acc = 0.0;
    let spacing = mesh.spacing();
    let dims = mesh.dims();
    for axis in 0..3 {
        if dims[axis] < 2 {
            continue;
        }
        let w = 1.0 / (spacing[axis] * spacing[axis]);
        for k in 0..mesh.nz {
            for j in 0..mesh.ny {
                for i in 0..mesh.nx {
                    let pos = [i, j, k];
                    if pos[axis] + 1 >= dims[axis] {
                        continue;
                    }
                    let mut nb = pos;
                    nb[axis] += 1;
                    let a = &m.data[mesh.idx(i, j, k)];
                    let b = &m.data[mesh.idx(nb[0], nb[1], nb[2])];
                    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                    acc += w * crate::mesh::dot(&d, &d);
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::project_onto_sphere;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(q: f64, eps: f64) -> Dimensionless {
        Dimensionless { q, eps, alpha: 0.1 }
    }

    fn random_unit(mesh: Mesh, seed: u64) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = VectorField::from_fn(mesh, |_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        project_onto_sphere(&f).unwrap()
    }

    #[test]
    fn disabled_terms_give_zero() {
        let mesh = Mesh::line(5, 0.2).unwrap();
        let ctx = FieldContext::exchange_only(mesh, params(2.0, 1.0));
        let m = random_unit(mesh, 1);
        let f = ctx.local_field(&m).unwrap();
        assert!(f.data.iter().all(|v| v.iter().all(|&c| c.to_bits() == 0)));
        assert!(ctx.forcing(0.0).is_none());
    }

    #[test]
    fn anisotropy_and_external() {
        let mesh = Mesh::line(3, 1.0).unwrap();
        let m = VectorField::uniform(mesh, [0.0, 1.0, 0.0]);
        let ctx = FieldContext::exchange_only(mesh, params(2.0, 1.0)).with_anisotropy();
        assert!(ctx.local_field(&m).unwrap().data.iter().all(|v| *v == [0.0, -2.0, 0.0]));
        // Uniform m: the exchange part vanishes and h equals fhat exactly.
        assert_eq!(ctx.full_field(&m).unwrap(), ctx.local_field(&m).unwrap());
        let ext = FieldContext::exchange_only(mesh, params(2.0, 1.0)).with_external([0.5, 0.0, 0.0]);
        assert!(ext.local_field(&m).unwrap().data.iter().all(|v| *v == [0.5, 0.0, 0.0]));
    }

    #[test]
    fn full_field_exchange_stencil() {
        let mesh = Mesh::line(3, 1.0).unwrap();
        let m = VectorField::from_data(mesh, vec![[0.0; 3], [0.0, 0.0, 1.0], [0.0; 3]]).unwrap();
        let ctx = FieldContext::exchange_only(mesh, params(0.0, 1.0));
        let h = ctx.full_field(&m).unwrap();
        assert_eq!(h.component(2), vec![1.0, -2.0, 1.0]);
        assert_eq!(h.component(0), vec![0.0; 3]);
        let uniform = ctx.full_field(&VectorField::uniform(mesh, [0.3, 0.4, 0.5])).unwrap();
        assert!(uniform.data.iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn energy_examples() {
        let mesh = Mesh::new([4, 3, 2], [0.1, 0.1, 0.1]).unwrap();
        let ex = VectorField::uniform(mesh, [1.0, 0.0, 0.0]);
        let ctx = FieldContext::exchange_only(mesh, params(1.0, 1.0)).with_anisotropy();
        assert_eq!(ctx.total_energy(&ex).unwrap(), 0.0);
        let ey = VectorField::uniform(mesh, [0.0, 1.0, 0.0]);
        assert!((ctx.total_energy(&ey).unwrap() - 0.5).abs() < 1e-15);
        let zee = FieldContext::exchange_only(mesh, params(0.0, 1.0)).with_external([1.0, 0.0, 0.0]);
        assert!((zee.total_energy(&ex).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn stray_requires_tensor() {
        let mesh = Mesh::line(2, 1.0).unwrap();
        let mut ctx = FieldContext::exchange_only(mesh, params(0.0, 1.0));
        ctx.terms.stray = true;
        assert!(ctx.validate().is_err());
        let ok = FieldContext::exchange_only(mesh, params(0.0, 1.0)).with_stray();
        ok.validate().unwrap();
    }

    #[test]
    fn exchange_energy_variation_matches_laplacian() {
        // d/ds E(m + s v) at s = 0 equals -(1/N) <eps Lap_h m, v>.
        let mesh = Mesh::new([5, 4, 3], [0.2, 0.3, 0.25]).unwrap();
        let ctx = FieldContext::exchange_only(mesh, params(0.0, 0.7));
        let m = random_unit(mesh, 4);
        let v = random_unit(mesh, 5);
        let s = 1e-6;
        let ep = ctx.total_energy(&m.axpy(s, &v)).unwrap();
        let em = ctx.total_energy(&m.axpy(-s, &v)).unwrap();
        let fd = (ep - em) / (2.0 * s);
        let h = ctx.full_field(&m).unwrap();
        let exact = -h.dot(&v) / mesh.n_cells() as f64;
        assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "{fd} vs {exact}");
    }

    #[test]
    fn zeeman_shift_is_linear() {
        let mesh = Mesh::new([6, 5, 1], [0.1, 0.1, 0.1]).unwrap();
        let m = random_unit(mesh, 8);
        let base = FieldContext::exchange_only(mesh, params(0.3, 0.5)).with_anisotropy().with_external([0.1, -0.2, 0.3]);
        let delta = [0.05, 0.02, -0.04];
        let shifted = base.clone().with_external([0.15, -0.18, 0.26]);
        let diff = shifted.total_energy(&m).unwrap() - base.total_energy(&m).unwrap();
        let mean: f64 = m.data.iter().map(|v| crate::mesh::dot(v, &delta)).sum::<f64>() / mesh.n_cells() as f64;
        assert!((diff + mean).abs() < 1e-14);
    }

    #[test]
    fn exchange_energy_is_rotation_invariant() {
        let mesh = Mesh::new([7, 3, 2], [0.1, 0.2, 0.3]).unwrap();
        let ctx = FieldContext::exchange_only(mesh, params(0.0, 1.3));
        let m = random_unit(mesh, 9);
        let (s, c) = 0.7f64.sin_cos();
        let rot = VectorField::from_data(mesh, m.data.iter().map(|v| [v[0], c * v[1] - s * v[2], s * v[1] + c * v[2]]).collect()).unwrap();
        let a = ctx.total_energy(&m).unwrap();
        let b = ctx.total_energy(&rot).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn stray_energy_is_nonnegative() {
        let mesh = Mesh::new([4, 4, 2], [1.0, 1.0, 0.5]).unwrap();
        let ctx = FieldContext::exchange_only(mesh, params(0.0, 1e-9)).with_stray();
        for seed in 0..5 {
            let e = ctx.total_energy(&random_unit(mesh, seed)).unwrap();
            assert!(e >= 0.0);
        }
    }
}
