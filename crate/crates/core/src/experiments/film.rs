//! Thin-film geometry in physical units and its dimensionless mesh.

use crate::error::Result;
use crate::field::{Dimensionless, FieldContext};
use crate::material::MaterialParams;
use crate::mesh::Mesh;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Film {
    pub cells: [usize; 3],
    /// Cubic cell edge, m.
    pub cell_size: f64,
    pub material: MaterialParams,
}

impl Film {
    /// Rescaling length for a box of `cells` cubes of edge `cell_size`: the box diagonal.
    pub fn diameter(cells: [usize; 3], cell_size: f64) -> f64 {
        cells.iter().map(|&n| (n as f64 * cell_size).powi(2)).sum::<f64>().sqrt()
    }

    pub fn new(cells: [usize; 3], cell_size: f64) -> Self {
        Self { cells, cell_size, material: MaterialParams::permalloy(Self::diameter(cells, cell_size)) }
    }

    /// 64 x 64 x 1 cells of 4 nm.
    pub fn desk() -> Self {
        Self::new([64, 64, 1], 4e-9)
    }

    /// 1 um x 1 um x 20 nm in 4 nm cells.
    pub fn full() -> Self {
        Self::new([250, 250, 5], 4e-9)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.material.alpha = alpha;
        self
    }

    pub fn mesh(&self) -> Result<Mesh> {
        let h = self.material.to_dimensionless_length(self.cell_size);
        Mesh::new(self.cells, [h; 3])
    }

    pub fn params(&self) -> Dimensionless {
        Dimensionless::from_material(&self.material)
    }

    /// Exchange, anisotropy and stray field; no applied field yet.
    pub fn context(&self) -> Result<FieldContext> {
        self.material.validate()?;
        Ok(FieldContext::exchange_only(self.mesh()?, self.params()).with_anisotropy().with_stray())
    }

    pub fn dt(&self, seconds: f64) -> f64 {
        self.material.to_dimensionless_time(seconds)
    }
}
