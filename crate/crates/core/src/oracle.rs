//! Slow reference implementations used to cross-check the fast paths.
//!
//! Nothing here shares code with the spectral heat solver or the FFT
//! convolution: the heat oracle assembles the Laplacian matrix entry by entry
//! and factorizes it densely, and the stray-field oracle sums the kernel over
//! all cell pairs.

use crate::demag::cell_kernel;
use crate::mesh::{Mesh, VectorField};
use nalgebra::{DMatrix, DVector};

/// Dense `I - lambda * Lap_h` with an LU factorization.
pub struct DenseHeat {
    laplacian: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseHeat {
    pub fn new(mesh: &Mesh, lambda: f64) -> Self {
        let laplacian = laplacian_matrix(mesh);
        let n = mesh.n_cells();
        let system = DMatrix::<f64>::identity(n, n) - &laplacian * lambda;
        Self { laplacian, lu: system.lu() }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_column_slice(b);
        self.lu.solve(&rhs).expect("I - lambda Lap_h is nonsingular for lambda >= 0").as_slice().to_vec()
    }

    pub fn apply_laplacian(&self, f: &[f64]) -> Vec<f64> {
        (&self.laplacian * DVector::from_column_slice(f)).as_slice().to_vec()
    }
}

/// Assembles the Neumann Laplacian: each interior face couples its two cells,
/// boundary faces contribute nothing (ghost equals the boundary cell).
pub fn laplacian_matrix(mesh: &Mesh) -> DMatrix<f64> {
    let n = mesh.n_cells();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let dims = mesh.dims();
    let spacing = mesh.spacing();
    for c in 0..n {
        let (i, j, k) = mesh.ijk(c);
        let pos = [i, j, k];
        for axis in 0..3 {
            let w = 1.0 / (spacing[axis] * spacing[axis]);
            for step in [-1i64, 1] {
                let q = pos[axis] as i64 + step;
                if q < 0 || q >= dims[axis] as i64 {
                    continue;
                }
                let mut nb = pos;
                nb[axis] = q as usize;
                let other = mesh.idx(nb[0], nb[1], nb[2]);
                a[(c, other)] += w;
                a[(c, c)] -= w;
            }
        }
    }
    a
}

/// `O(n^2)` direct summation of the stray field.
pub fn direct_stray_field(mesh: &Mesh, m: &VectorField) -> VectorField {
    let cell = mesh.spacing();
    let n = mesh.n_cells();
    let mut out = VectorField::zeros(*mesh);
    for p in 0..n {
        let (pi, pj, pk) = mesh.ijk(p);
        let mut acc = [0.0; 3];
        for q in 0..n {
            let (qi, qj, qk) = mesh.ijk(q);
            let r = [
                (pi as f64 - qi as f64) * cell[0],
                (pj as f64 - qj as f64) * cell[1],
                (pk as f64 - qk as f64) * cell[2],
            ];
            let [kxx, kxy, kxz, kyy, kyz, kzz] = cell_kernel(r, cell);
            let v = m.data[q];
            acc[0] += kxx * v[0] + kxy * v[1] + kxz * v[2];
            acc[1] += kxy * v[0] + kyy * v[1] + kyz * v[2];
            acc[2] += kxz * v[0] + kyz * v[1] + kzz * v[2];
        }
        out.data[p] = acc;
    }
    out
}
