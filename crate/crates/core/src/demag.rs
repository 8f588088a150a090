//! Stray (demagnetizing) field by zero-padded FFT convolution with the
//! cell-averaged Newell tensor.
//!
//! The stored kernel is `K = -N`, so that `h_s(p) = sum_q K(p - q) m(q)` and
//! the self-cell diagonal of a cube is `-1/3`.

use crate::error::Result;
use crate::mesh::{Mesh, VectorField};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Beyond this many (largest) cell sizes the Newell sums lose precision to
/// cancellation and the point-dipole limit is used instead.
pub const DIPOLE_CUTOFF: f64 = 40.0;

/// Kernel entries in the order xx, xy, xz, yy, yz, zz.
pub type TensorEntries = [f64; 6];

fn newell_f(x: f64, y: f64, z: f64) -> f64 {
    let (x, y, z) = (x.abs(), y.abs(), z.abs());
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let r = (x2 + y2 + z2).sqrt();
    let mut res = (2.0 * x2 - y2 - z2) * r / 6.0;
    if y > 0.0 && x2 + z2 > 0.0 {
        res += 0.5 * y * (z2 - x2) * (y / (x2 + z2).sqrt()).asinh();
    }
    if z > 0.0 && x2 + y2 > 0.0 {
        res += 0.5 * z * (y2 - x2) * (z / (x2 + y2).sqrt()).asinh();
    }
    if x > 0.0 && y > 0.0 && z > 0.0 {
        res -= x * y * z * (y * z / (x * r)).atan();
    }
    res
}

fn newell_g(x: f64, y: f64, z: f64) -> f64 {
    let sign = x.signum() * y.signum();
    let (x, y, z) = (x.abs(), y.abs(), z.abs());
    if x == 0.0 || y == 0.0 {
        // g is odd in x and y.
        return 0.0;
    }
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let r = (x2 + y2 + z2).sqrt();
    let mut res = -x * y * r / 3.0;
    if z > 0.0 {
        res += x * y * z * (z / (x2 + y2).sqrt()).asinh();
        res -= z2 * z / 6.0 * (x * y / (z * r)).atan();
        res -= 0.5 * z * y2 * (x * z / (y * r)).atan();
        res -= 0.5 * z * x2 * (y * z / (x * r)).atan();
    }
    res += y / 6.0 * (3.0 * z2 - y2) * (x / (y2 + z2).sqrt()).asinh();
    res += x / 6.0 * (3.0 * z2 - x2) * (y / (x2 + z2).sqrt()).asinh();
    sign * res
}

/// Applies the (-1, 2, -1) second difference along every axis.
fn second_difference(func: fn(f64, f64, f64) -> f64, r: [f64; 3], d: [f64; 3]) -> f64 {
    const W: [(f64, f64); 3] = [(-1.0, -1.0), (0.0, 2.0), (1.0, -1.0)];
    let mut acc = 0.0;
    for &(si, wi) in &W {
        for &(sj, wj) in &W {
            for &(sk, wk) in &W {
                acc += wi * wj * wk * func(r[0] + si * d[0], r[1] + sj * d[1], r[2] + sk * d[2]);
            }
        }
    }
    acc
}

fn newell_nxx(r: [f64; 3], d: [f64; 3]) -> f64 {
    second_difference(newell_f, r, d) / (4.0 * PI * d[0] * d[1] * d[2])
}

fn newell_nxy(r: [f64; 3], d: [f64; 3]) -> f64 {
    second_difference(newell_g, r, d) / (4.0 * PI * d[0] * d[1] * d[2])
}

/// Point-dipole kernel `V (3 r r^T - |r|^2 I) / (4 pi |r|^5)`.
pub fn dipole_kernel(r: [f64; 3], volume: f64) -> TensorEntries {
    let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let r5 = r2 * r2 * r2.sqrt();
    let c = volume / (4.0 * PI * r5);
    [
        c * (3.0 * r[0] * r[0] - r2),
        c * 3.0 * r[0] * r[1],
        c * 3.0 * r[0] * r[2],
        c * (3.0 * r[1] * r[1] - r2),
        c * 3.0 * r[1] * r[2],
        c * (3.0 * r[2] * r[2] - r2),
    ]
}

/// Kernel `K = -N` between two cells of size `cell` separated by `offset`
/// (center to center, same length unit as `cell`).
pub fn cell_kernel(offset: [f64; 3], cell: [f64; 3]) -> TensorEntries {
    let h = cell[0].max(cell[1]).max(cell[2]);
    let r = offset.map(|v| v / h);
    let d = cell.map(|v| v / h);
    let dist = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if dist > DIPOLE_CUTOFF {
        return dipole_kernel(r, d[0] * d[1] * d[2]);
    }
    let [x, y, z] = r;
    let [dx, dy, dz] = d;
    [
        -newell_nxx([x, y, z], [dx, dy, dz]),
        -newell_nxy([x, y, z], [dx, dy, dz]),
        -newell_nxy([x, z, y], [dx, dz, dy]),
        -newell_nxx([y, x, z], [dy, dx, dz]),
        -newell_nxy([y, z, x], [dy, dz, dx]),
        -newell_nxx([z, y, x], [dz, dy, dx]),
    ]
}

/// In-place 3D FFT over a padded box, one axis at a time.
struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.map(|n| planner.plan_fft_forward(n));
        let inverse = dims.map(|n| planner.plan_fft_inverse(n));
        Self { dims, forward, inverse }
    }

    fn len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Transforms along `axis`. Only lines that can touch the region
    /// `j < support[1], k < support[2]` are processed: on the way in the rest
    /// is zero padding, on the way out it is never read.
    fn axis_pass(&self, data: &mut [Complex64], axis: usize, inverse: bool, support: [usize; 3], work: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>) {
        let [px, py, pz] = self.dims;
        let n = self.dims[axis];
        if n <= 1 {
            return;
        }
        let plan = if inverse { &self.inverse[axis] } else { &self.forward[axis] };
        scratch.resize(plan.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
        let plane = px * py;
        match axis {
            0 => {
                for k in 0..support[2] {
                    let start = plane * k;
                    plan.process_with_scratch(&mut data[start..start + px * support[1]], scratch);
                }
            }
            1 => {
                for k in 0..support[2] {
                    let block = &mut data[plane * k..plane * (k + 1)];
                    gather_process_scatter(block, px, n, plan.as_ref(), work, scratch);
                }
            }
            _ => gather_process_scatter(&mut data[..plane * pz], plane, n, plan.as_ref(), work, scratch),
        }
    }

    /// Forward transform of data supported on `[0, support)`.
    fn forward_pruned(&self, data: &mut [Complex64], support: [usize; 3]) {
        let (mut work, mut scratch) = (Vec::new(), Vec::new());
        self.axis_pass(data, 0, false, support, &mut work, &mut scratch);
        self.axis_pass(data, 1, false, support, &mut work, &mut scratch);
        self.axis_pass(data, 2, false, support, &mut work, &mut scratch);
    }

    /// Inverse transform, correct only on `[0, support)`.
    fn inverse_pruned(&self, data: &mut [Complex64], support: [usize; 3]) {
        let (mut work, mut scratch) = (Vec::new(), Vec::new());
        self.axis_pass(data, 2, true, support, &mut work, &mut scratch);
        self.axis_pass(data, 1, true, support, &mut work, &mut scratch);
        self.axis_pass(data, 0, true, support, &mut work, &mut scratch);
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.forward_pruned(data, self.dims);
    }
}

/// `block` holds `n` rows of `width` values; transforms each of the `width`
/// columns of length `n`.
fn gather_process_scatter(block: &mut [Complex64], width: usize, n: usize, plan: &dyn Fft<f64>, work: &mut Vec<Complex64>, scratch: &mut [Complex64]) {
    work.resize(width * n, Complex64::new(0.0, 0.0));
    for t in 0..n {
        for (a, v) in block[t * width..(t + 1) * width].iter().enumerate() {
            work[a * n + t] = *v;
        }
    }
    plan.process_with_scratch(work, scratch);
    for t in 0..n {
        for (a, v) in block[t * width..(t + 1) * width].iter_mut().enumerate() {
            *v = work[a * n + t];
        }
    }
}

/// Padded length along one axis: `2n` for open boundaries, or 1 for a single cell.
fn padded(n: usize) -> usize {
    if n == 1 {
        1
    } else {
        2 * n
    }
}

/// Cached kernel transforms for one mesh.
pub struct DemagTensor {
    mesh: Mesh,
    fft: Fft3,
    /// Forward transforms of the padded kernel, order xx, xy, xz, yy, yz, zz.
    /// Each component is even or odd-odd in the periodic offsets, so its
    /// transform is real.
    spectra: [Vec<f64>; 6],
    /// Flat index of the spectral point `-k` for each `k`.
    mirror: Vec<usize>,
    updates: AtomicU64,
}

impl fmt::Debug for DemagTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DemagTensor")
            .field("mesh", &self.mesh)
            .field("padded", &self.fft.dims)
            .field("updates", &self.update_count())
            .finish()
    }
}

impl DemagTensor {
    pub fn new(mesh: Mesh) -> Self {
        let n = mesh.dims();
        let p = n.map(padded);
        let fft = Fft3::new(p);
        let len = fft.len();
        let cell = mesh.spacing();
        let mut kernels: [Vec<Complex64>; 6] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); len]);
        let offset = |idx: usize, n: usize, p: usize| -> Option<i64> {
            if idx < n {
                Some(idx as i64)
            } else if idx > p - n {
                Some(idx as i64 - p as i64)
            } else {
                None
            }
        };
        for k in 0..p[2] {
            let Some(oz) = offset(k, n[2], p[2]) else { continue };
            for j in 0..p[1] {
                let Some(oy) = offset(j, n[1], p[1]) else { continue };
                for i in 0..p[0] {
                    let Some(ox) = offset(i, n[0], p[0]) else { continue };
                    let r = [ox as f64 * cell[0], oy as f64 * cell[1], oz as f64 * cell[2]];
                    let entries = cell_kernel(r, cell);
                    let at = i + p[0] * (j + p[1] * k);
                    for (kernel, v) in kernels.iter_mut().zip(entries) {
                        kernel[at] = Complex64::new(v, 0.0);
                    }
                }
            }
        }
        for kernel in kernels.iter_mut() {
            fft.forward(kernel);
        }
        let spectra = kernels.map(|k| k.iter().map(|c| c.re).collect());
        let mut mirror = Vec::with_capacity(len);
        for k in 0..p[2] {
            for j in 0..p[1] {
                for i in 0..p[0] {
                    let (mi, mj, mk) = ((p[0] - i) % p[0], (p[1] - j) % p[1], (p[2] - k) % p[2]);
                    mirror.push(mi + p[0] * (mj + p[1] * mk));
                }
            }
        }
        Self { mesh, fft, spectra, mirror, updates: AtomicU64::new(0) }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// Stray-field evaluations performed so far.
    pub fn update_count(&self) -> u64 {
        self.updates.load(Ordering::Relaxed)
    }

    /// Kernel entries for an integer cell offset.
    pub fn kernel_at(&self, offset: [i64; 3]) -> TensorEntries {
        let c = self.mesh.spacing();
        cell_kernel([offset[0] as f64 * c[0], offset[1] as f64 * c[1], offset[2] as f64 * c[2]], c)
    }

    /// `h_s = K * m` on the physical grid.
    ///
    /// `m1 + i m2` share one transform and are split by Hermitian symmetry;
    /// `h1 + i h2` share the inverse. Four transforms per call instead of six.
    pub fn stray_field(&self, m: &VectorField) -> Result<VectorField> {
        self.mesh.check_same(&m.mesh)?;
        self.updates.fetch_add(1, Ordering::Relaxed);
        let support = self.mesh.dims();
        let [nx, ny, nz] = support;
        let [px, py, _] = self.fft.dims;
        let len = self.fft.len();
        let zero = Complex64::new(0.0, 0.0);
        let mut xy = vec![zero; len];
        let mut z = vec![zero; len];
        for k in 0..nz {
            for j in 0..ny {
                let row = px * (j + py * k);
                let src = nx * (j + ny * k);
                for i in 0..nx {
                    let v = m.data[src + i];
                    xy[row + i] = Complex64::new(v[0], v[1]);
                    z[row + i] = Complex64::new(v[2], 0.0);
                }
            }
        }
        self.fft.forward_pruned(&mut xy, support);
        self.fft.forward_pruned(&mut z, support);
        let [kxx, kxy, kxz, kyy, kyz, kzz] = &self.spectra;
        let mut hxy = vec![zero; len];
        for t in 0..len {
            let a = xy[t];
            let b = xy[self.mirror[t]].conj();
            let mx = (a + b) * 0.5;
            let my = Complex64::new(0.0, -0.5) * (a - b);
            let mz = z[t];
            let hx = mx * kxx[t] + my * kxy[t] + mz * kxz[t];
            let hy = mx * kxy[t] + my * kyy[t] + mz * kyz[t];
            z[t] = mx * kxz[t] + my * kyz[t] + mz * kzz[t];
            hxy[t] = hx + Complex64::new(0.0, 1.0) * hy;
        }
        self.fft.inverse_pruned(&mut hxy, support);
        self.fft.inverse_pruned(&mut z, support);
        let norm = 1.0 / len as f64;
        let mut out = VectorField::zeros(self.mesh);
        for k in 0..nz {
            for j in 0..ny {
                let row = px * (j + py * k);
                let dst = nx * (j + ny * k);
                for i in 0..nx {
                    let (a, b) = (hxy[row + i], z[row + i]);
                    out.data[dst + i] = [a.re * norm, a.im * norm, b.re * norm];
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::direct_stray_field;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cube_self_term() {
        let k = cell_kernel([0.0; 3], [1.0; 3]);
        for d in [k[0], k[3], k[5]] {
            assert!((d + 1.0 / 3.0).abs() < 1e-14, "{k:?}");
        }
        for o in [k[1], k[2], k[4]] {
            assert!(o.abs() < 1e-14);
        }
    }

    #[test]
    fn self_term_trace_is_minus_one_for_flat_cells() {
        for cell in [[1.0, 1.0, 0.2], [2.0, 1.0, 0.5], [0.3, 1.7, 1.1]] {
            let k = cell_kernel([0.0; 3], cell);
            assert!((k[0] + k[3] + k[5] + 1.0).abs() < 1e-13, "{cell:?}: {k:?}");
        }
        // Thin plate: out-of-plane factor dominates.
        let k = cell_kernel([0.0; 3], [1.0, 1.0, 0.05]);
        assert!(k[5] < -0.8 && k[0] > -0.1);
    }

    #[test]
    fn kernel_parity_and_symmetry() {
        let cell = [1.0, 0.7, 0.4];
        let r = [2.0, -1.4, 0.8];
        let a = cell_kernel(r, cell);
        let b = cell_kernel(r.map(|v| -v), cell);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
        // Flipping a single axis flips the sign of the off-diagonals involving it.
        let fx = cell_kernel([-r[0], r[1], r[2]], cell);
        assert!((fx[0] - a[0]).abs() < 1e-14);
        assert!((fx[1] + a[1]).abs() < 1e-14);
        assert!((fx[2] + a[2]).abs() < 1e-14);
        assert!((fx[4] - a[4]).abs() < 1e-14);
    }

    #[test]
    fn far_cells_approach_point_dipole() {
        let cell = [1.0, 1.0, 1.0];
        let diag = 3f64.sqrt();
        for (dir, scale) in [([1.0, 0.0, 0.0], 10.0), ([1.0, 1.0, 0.0], 12.0), ([1.0, 2.0, 3.0], 15.0), ([0.0, 0.3, 1.0], 20.0)] {
            let len = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]) as f64;
            let r = dir.map(|v: f64| v / len.sqrt() * scale * diag);
            let k = cell_kernel(r, cell);
            let d = dipole_kernel(r, 1.0);
            let dmax = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for (a, b) in k.iter().zip(&d) {
                assert!((a - b).abs() <= 0.01 * dmax, "{r:?}: {k:?} vs {d:?}");
            }
        }
    }

    #[test]
    fn zero_magnetization_gives_zero_field() {
        let mesh = Mesh::new([4, 3, 2], [1.0, 1.0, 0.5]).unwrap();
        let t = DemagTensor::new(mesh);
        let h = t.stray_field(&VectorField::zeros(mesh)).unwrap();
        assert!(h.data.iter().all(|v| v.iter().all(|&c| c == 0.0)));
        assert_eq!(t.update_count(), 1);
    }

    #[test]
    fn single_cubic_cell() {
        let mesh = Mesh::new([1, 1, 1], [0.01; 3]).unwrap();
        let h = DemagTensor::new(mesh).stray_field(&VectorField::uniform(mesh, [0.0, 0.0, 1.0])).unwrap();
        let v = h.data[0];
        assert!(v[0].abs() < 1e-14 && v[1].abs() < 1e-14);
        assert!((v[2] + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mesh_mismatch_is_reported() {
        let t = DemagTensor::new(Mesh::new([2, 2, 1], [1.0; 3]).unwrap());
        let other = VectorField::zeros(Mesh::new([2, 1, 1], [1.0; 3]).unwrap());
        assert!(t.stray_field(&other).is_err());
    }

    fn random_field(mesh: Mesh, rng: &mut ChaCha8Rng) -> VectorField {
        VectorField::from_fn(mesh, |_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
    }

    fn rel_max_err(a: &VectorField, b: &VectorField) -> f64 {
        let scale = b.data.iter().flat_map(|v| v.iter()).map(|x| x.abs()).fold(0.0, f64::max);
        crate::mesh::max_norm_error(a, b).unwrap() / scale
    }

    #[test]
    fn fft_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, d) in [([8, 8, 4], [1.0, 1.0, 1.0]), ([5, 3, 1], [2.0, 1.0, 0.25]), ([1, 1, 6], [0.5, 0.5, 1.0])] {
            let mesh = Mesh::new(n, d).unwrap();
            let t = DemagTensor::new(mesh);
            let m = random_field(mesh, &mut rng);
            let fast = t.stray_field(&m).unwrap();
            let slow = direct_stray_field(&mesh, &m);
            assert!(rel_max_err(&fast, &slow) <= 1e-12, "{n:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn linear_reciprocal_and_energy_positive(
            nx in 1usize..6, ny in 1usize..5, nz in 1usize..4,
            a in -2.0f64..2.0, b in -2.0f64..2.0, seed in any::<u64>(),
        ) {
            let mesh = Mesh::new([nx, ny, nz], [1.0, 0.8, 0.5]).unwrap();
            let t = DemagTensor::new(mesh);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_field(mesh, &mut rng);
            let n = random_field(mesh, &mut rng);
            let hm = t.stray_field(&m).unwrap();
            let hn = t.stray_field(&n).unwrap();
            let combo = t.stray_field(&m.scaled(a).axpy(b, &n)).unwrap();
            let expect = hm.scaled(a).axpy(b, &hn);
            prop_assert!(crate::mesh::max_norm_error(&combo, &expect).unwrap() <= 1e-12);
            prop_assert!((hm.dot(&n) - hn.dot(&m)).abs() <= 1e-12 * (1.0 + hm.dot(&hm)).sqrt() * mesh.n_cells() as f64);
            prop_assert!(-0.5 * hm.dot(&m) >= -1e-12);
        }
    }
}
