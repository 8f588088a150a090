//! Exact solutions `m_e = (cos(phi) sin t, sin(phi) sin t, cos t)` with a
//! polynomial phase `phi(x)`, and the source term that makes them solve
//! `m_t = -m x Lap m - alpha m x (m x Lap m) + f`.

use crate::field::Forcing;
use crate::heat::apply_laplacian_vector;
use crate::mesh::{cross, Mesh, VectorField};
use serde::{Deserialize, Serialize};

/// `p(s) = s^2 (1 - s)^2` and its first two derivatives.
fn bump(s: f64) -> (f64, f64, f64) {
    let v = s * s * (1.0 - s) * (1.0 - s);
    let d1 = 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    let d2 = 2.0 - 12.0 * s + 12.0 * s * s;
    (v, d1, d2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseDim {
    #[serde(rename = "1d")]
    One,
    #[serde(rename = "3d")]
    Three,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedCase {
    pub dim: CaseDim,
    pub alpha: f64,
    pub final_time: f64,
    /// Box `[0, L0] x [0, L1] x [0, L2]`; unused axes are 1.
    pub extent: [f64; 3],
}

impl ManufacturedCase {
    /// Unit interval, `alpha = 1e-5`, `T = 5e-2`.
    pub fn one_d() -> Self {
        Self { dim: CaseDim::One, alpha: 1e-5, final_time: 5e-2, extent: [1.0, 1.0, 1.0] }
    }

    /// `[0,2] x [0,1] x [0,0.2]`, `alpha = 0.01`, `T = 1e-5`.
    pub fn three_d() -> Self {
        Self { dim: CaseDim::Three, alpha: 0.01, final_time: 1e-5, extent: [2.0, 1.0, 0.2] }
    }

    /// Phase, squared gradient norm and Laplacian of `phi` at `x`.
    pub fn phase(&self, x: [f64; 3]) -> (f64, f64, f64) {
        match self.dim {
            CaseDim::One => {
                let (p, d1, d2) = bump(x[0]);
                (p, d1 * d1, d2)
            }
            CaseDim::Three => {
                let (a, a1, a2) = bump(x[0]);
                let (b, b1, b2) = bump(x[1]);
                let (c, c1, c2) = bump(x[2]);
                let g = [a1 * b * c, a * b1 * c, a * b * c1];
                (a * b * c, g[0] * g[0] + g[1] * g[1] + g[2] * g[2], a2 * b * c + a * b2 * c + a * b * c2)
            }
        }
    }

    pub fn exact(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let (p, _, _) = self.phase(x);
        [p.cos() * t.sin(), p.sin() * t.sin(), t.cos()]
    }

    pub fn time_derivative(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let (p, _, _) = self.phase(x);
        [p.cos() * t.cos(), p.sin() * t.cos(), -t.sin()]
    }

    /// Continuous Laplacian of the exact solution.
    pub fn laplacian(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let (p, grad2, lap) = self.phase(x);
        let (s, c) = p.sin_cos();
        [(-s * lap - c * grad2) * t.sin(), (c * lap - s * grad2) * t.sin(), 0.0]
    }

    /// `f = m_t + m x Lap m + alpha m x (m x Lap m)`.
    pub fn forcing(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        source_term(self.exact(x, t), self.time_derivative(x, t), self.laplacian(x, t), self.alpha)
    }

    pub fn exact_field(&self, mesh: &Mesh, t: f64) -> VectorField {
        VectorField::from_fn(*mesh, |x| self.exact(x, t))
    }

    /// Cell-centered mesh with `n` cells per used axis.
    pub fn mesh(&self, n: [usize; 3]) -> Mesh {
        let n = match self.dim {
            CaseDim::One => [n[0], 1, 1],
            CaseDim::Three => n,
        };
        Mesh::boxed(n, self.extent).expect("manufactured meshes are valid")
    }

    /// Mesh with (approximately) uniform spacing `h`; counts are rounded per axis.
    pub fn mesh_with_spacing(&self, h: f64) -> Mesh {
        let count = |l: f64| ((l / h).round() as usize).max(1);
        match self.dim {
            CaseDim::One => self.mesh([count(self.extent[0]), 1, 1]),
            CaseDim::Three => self.mesh([count(self.extent[0]), count(self.extent[1]), count(self.extent[2])]),
        }
    }

    /// Residual of the equation at `(x, t)` with derivatives taken by sixth-order
    /// central differences of [`exact`](Self::exact) instead of the closed forms.
    pub fn finite_difference_residual(&self, x: [f64; 3], t: f64, h: f64) -> f64 {
        let d1 = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
        let d2 = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
        let mut mt = [0.0; 3];
        for (k, w) in d1.iter().enumerate() {
            let v = self.exact(x, t + (k as f64 - 3.0) * h);
            for c in 0..3 {
                mt[c] += w * v[c] / h;
            }
        }
        let axes = match self.dim {
            CaseDim::One => 1,
            CaseDim::Three => 3,
        };
        let mut lap = [0.0; 3];
        for axis in 0..axes {
            for (k, w) in d2.iter().enumerate() {
                let mut y = x;
                y[axis] += (k as f64 - 3.0) * h;
                let v = self.exact(y, t);
                for c in 0..3 {
                    lap[c] += w * v[c] / (h * h);
                }
            }
        }
        let m = self.exact(x, t);
        let rhs_without_f = {
            let mxl = cross(&m, &lap);
            let mmxl = cross(&m, &mxl);
            [0, 1, 2].map(|c| -mxl[c] - self.alpha * mmxl[c])
        };
        let f = self.forcing(x, t);
        (0..3).map(|c| (mt[c] - rhs_without_f[c] - f[c]).abs()).fold(0.0, f64::max)
    }
}

fn source_term(m: [f64; 3], mt: [f64; 3], lap: [f64; 3], alpha: f64) -> [f64; 3] {
    let mxl = cross(&m, &lap);
    let mmxl = cross(&m, &mxl);
    [0, 1, 2].map(|c| mt[c] + mxl[c] + alpha * mmxl[c])
}

impl Forcing for ManufacturedCase {
    fn evaluate(&self, mesh: &Mesh, t: f64) -> VectorField {
        VectorField::from_fn(*mesh, |x| self.forcing(x, t))
    }
}

/// Source built with the discrete Laplacian of the sampled exact solution, so
/// the grid restriction of `m_e` solves the semi-discrete system exactly.
/// Isolates temporal error from spatial error.
#[derive(Debug, Clone, Copy)]
pub struct DiscreteForcing(pub ManufacturedCase);

impl Forcing for DiscreteForcing {
    fn evaluate(&self, mesh: &Mesh, t: f64) -> VectorField {
        let case = &self.0;
        let exact = case.exact_field(mesh, t);
        let lap = apply_laplacian_vector(&exact);
        let data = exact
            .data
            .iter()
            .zip(&lap.data)
            .enumerate()
            .map(|(i, (m, l))| source_term(*m, case.time_derivative(mesh.center_of(i), t), *l, case.alpha))
            .collect();
        VectorField { mesh: *mesh, data }
    }
}
