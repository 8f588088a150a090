//! Cell-centered structured grids and 3-component fields living on them.
//!
//! Storage is x-fastest, then y, then z. Boundary cells see virtual ghost
//! copies of themselves (homogeneous Neumann closure), so no ghost layer is
//! ever stored.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Norms below this are treated as zero by [`project_onto_sphere`].
pub const ZERO_NORM: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub origin: [f64; 3],
}

impl Mesh {
    pub fn new(n: [usize; 3], d: [f64; 3]) -> Result<Self> {
        Self::with_origin(n, d, [0.0; 3])
    }

    pub fn with_origin(n: [usize; 3], d: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if n.iter().any(|&c| c == 0) {
            return Err(Error::InvalidArgument(format!("cell counts must be >= 1, got {n:?}")));
        }
        if d.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidArgument(format!("spacings must be positive, got {d:?}")));
        }
        Ok(Self { nx: n[0], ny: n[1], nz: n[2], dx: d[0], dy: d[1], dz: d[2], origin })
    }

    /// 1D mesh of `nx` cells on `[0, nx*dx]`.
    pub fn line(nx: usize, dx: f64) -> Result<Self> {
        Self::new([nx, 1, 1], [dx, 1.0, 1.0])
    }

    /// Mesh covering the box `[0, lx] x [0, ly] x [0, lz]` with the given cell counts.
    pub fn boxed(n: [usize; 3], extent: [f64; 3]) -> Result<Self> {
        Self::new(n, [extent[0] / n[0] as f64, extent[1] / n[1] as f64, extent[2] / n[2] as f64])
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    #[inline]
    pub fn spacing(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.nx;
        let j = (idx / self.nx) % self.ny;
        let k = idx / (self.nx * self.ny);
        (i, j, k)
    }

    /// Cell-center coordinates for 0-based indices, i.e. `origin + (i + 1/2) * d`.
    #[inline]
    pub fn center(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.dx,
            self.origin[1] + (j as f64 + 0.5) * self.dy,
            self.origin[2] + (k as f64 + 0.5) * self.dz,
        ]
    }

    pub fn center_of(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.ijk(idx);
        self.center(i, j, k)
    }

    /// Physical extent of the meshed box.
    pub fn extent(&self) -> [f64; 3] {
        [self.nx as f64 * self.dx, self.ny as f64 * self.dy, self.nz as f64 * self.dz]
    }

    pub fn same_grid(&self, other: &Mesh) -> bool {
        self.dims() == other.dims() && self.spacing() == other.spacing()
    }

    pub(crate) fn check_same(&self, other: &Mesh) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::MeshMismatch(format!(
                "{:?}/{:?} vs {:?}/{:?}",
                self.dims(),
                self.spacing(),
                other.dims(),
                other.spacing()
            )))
        }
    }
}

/// A 3-vector per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub mesh: Mesh,
    pub data: Vec<[f64; 3]>,
}

impl VectorField {
    pub fn zeros(mesh: Mesh) -> Self {
        Self { data: vec![[0.0; 3]; mesh.n_cells()], mesh }
    }

    pub fn uniform(mesh: Mesh, v: [f64; 3]) -> Self {
        Self { data: vec![v; mesh.n_cells()], mesh }
    }

    pub fn from_data(mesh: Mesh, data: Vec<[f64; 3]>) -> Result<Self> {
        if data.len() != mesh.n_cells() {
            return Err(Error::MeshMismatch(format!(
                "field has {} cells, mesh has {}",
                data.len(),
                mesh.n_cells()
            )));
        }
        Ok(Self { mesh, data })
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(mesh: Mesh, mut f: impl FnMut([f64; 3]) -> [f64; 3]) -> Self {
        let data = (0..mesh.n_cells()).map(|c| f(mesh.center_of(c))).collect();
        Self { mesh, data }
    }

    pub fn from_components(mesh: Mesh, c: [&[f64]; 3]) -> Self {
        let data = (0..mesh.n_cells()).map(|i| [c[0][i], c[1][i], c[2][i]]).collect();
        Self { mesh, data }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn component(&self, axis: usize) -> Vec<f64> {
        self.data.iter().map(|v| v[axis]).collect()
    }

    pub fn components(&self) -> [Vec<f64>; 3] {
        [self.component(0), self.component(1), self.component(2)]
    }

    pub fn set_component(&mut self, axis: usize, values: &[f64]) {
        for (v, &x) in self.data.iter_mut().zip(values) {
            v[axis] = x;
        }
    }

    /// Index of the first cell holding a NaN or infinite component.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|v| !v.iter().all(|x| x.is_finite()))
    }

    /// `max over cells of ||m| - 1|`.
    pub fn max_norm_deviation(&self) -> f64 {
        self.data.iter().map(|v| (norm(v) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Sum of `a . b` over cells.
    pub fn dot(&self, other: &VectorField) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| dot(a, b)).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { mesh: self.mesh, data: self.data.iter().map(|v| [s * v[0], s * v[1], s * v[2]]).collect() }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &VectorField) -> Self {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]])
            .collect();
        Self { mesh: self.mesh, data }
    }
}

#[inline]
pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Normalizes each cell vector to unit length.
pub fn project_onto_sphere(f: &VectorField) -> Result<VectorField> {
    let mut out = f.clone();
    project_in_place(&mut out.data)?;
    Ok(out)
}

pub(crate) fn project_in_place(data: &mut [[f64; 3]]) -> Result<()> {
    for (cell, v) in data.iter_mut().enumerate() {
        let n = norm(v);
        if !(n >= ZERO_NORM) {
            return Err(Error::ZeroVector { cell, norm: n });
        }
        for c in v.iter_mut() {
            *c /= n;
        }
    }
    Ok(())
}

/// Component-wise arithmetic mean over all cells.
pub fn average_magnetization(f: &VectorField) -> [f64; 3] {
    let n = f.len() as f64;
    let mut acc = [0.0; 3];
    for v in &f.data {
        for a in 0..3 {
            acc[a] += v[a];
        }
    }
    acc.map(|s| s / n)
}

/// `max over cells and components of |a - b|`.
pub fn max_norm_error(a: &VectorField, b: &VectorField) -> Result<f64> {
    a.mesh.check_same(&b.mesh)?;
    Ok(a
        .data
        .iter()
        .zip(&b.data)
        .flat_map(|(u, v)| (0..3).map(move |c| (u[c] - v[c]).abs()))
        .fold(0.0, f64::max))
}

/// In-plane angle per cell, `atan2(m2, m1)` in `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleMap {
    pub mesh: Mesh,
    pub angle: Vec<f64>,
    /// Cells with `m1 = m2 = 0`; their angle is reported as 0.
    pub degenerate: Vec<bool>,
}

pub fn in_plane_angle_map(f: &VectorField) -> AngleMap {
    let mut angle = Vec::with_capacity(f.len());
    let mut degenerate = Vec::with_capacity(f.len());
    for v in &f.data {
        if v[0] == 0.0 && v[1] == 0.0 {
            angle.push(0.0);
            degenerate.push(true);
        } else {
            let mut a = v[1].atan2(v[0]);
            // atan2(-0.0, -1) gives -pi; fold it onto the closed end of the range.
            if a == -std::f64::consts::PI {
                a = std::f64::consts::PI;
            }
            angle.push(a);
            degenerate.push(false);
        }
    }
    AngleMap { mesh: f.mesh, angle, degenerate }
}
