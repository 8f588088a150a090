//! From-scratch transcriptions of the three update rules, with dense LU for
//! every linear solve and direct summation for the stray field.

#![allow(dead_code)]

use gspm::field::{Dimensionless, FieldContext};
use gspm::mesh::{project_onto_sphere, Mesh, VectorField};
use gspm::oracle::{direct_stray_field, DenseHeat};
use gspm::{SchemeKind, Stepper};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub type C = [Vec<f64>; 3];

pub struct Setup {
    pub mesh: Mesh,
    pub q: f64,
    pub eps: f64,
    pub alpha: f64,
    pub dt: f64,
    pub h_ext: [f64; 3],
    pub stray: bool,
    /// Source sampled at t^n, already per cell.
    pub source: Option<C>,
}

impl Setup {
    fn fhat(&self, m: [&[f64]; 3]) -> C {
        let n = m[0].len();
        let hs = if self.stray {
            let field = VectorField::from_data(self.mesh, (0..n).map(|i| [m[0][i], m[1][i], m[2][i]]).collect()).unwrap();
            let h = direct_stray_field(&self.mesh, &field);
            [0, 1, 2].map(|c| h.data.iter().map(|v| v[c]).collect::<Vec<f64>>())
        } else {
            [vec![0.0; n], vec![0.0; n], vec![0.0; n]]
        };
        [
            (0..n).map(|i| self.h_ext[0] + hs[0][i]).collect(),
            (0..n).map(|i| -self.q * m[1][i] + self.h_ext[1] + hs[1][i]).collect(),
            (0..n).map(|i| -self.q * m[2][i] + self.h_ext[2] + hs[2][i]).collect(),
        ]
    }

    fn src(&self, c: usize, i: usize) -> f64 {
        self.source.as_ref().map_or(0.0, |s| self.dt * s[c][i])
    }

    fn g(&self, heat: &DenseHeat, m: &[f64], f: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = m.iter().zip(f).map(|(a, b)| a + self.dt * b).collect();
        heat.solve(&rhs)
    }
}

pub fn normalize(s: C) -> C {
    let n = s[0].len();
    let mut out = s.clone();
    for i in 0..n {
        let r = (s[0][i].powi(2) + s[1][i].powi(2) + s[2][i].powi(2)).sqrt();
        for c in 0..3 {
            out[c][i] = s[c][i] / r;
        }
    }
    out
}

pub fn oracle_gspm(p: &Setup, m: &C) -> C {
    let heat = DenseHeat::new(&p.mesh, p.dt * p.eps);
    let damp = DenseHeat::new(&p.mesh, p.alpha * p.dt * p.eps);
    let n = m[0].len();
    let f = p.fhat([&m[0], &m[1], &m[2]]);
    let g2 = p.g(&heat, &m[1], &f[1]);
    let g3 = p.g(&heat, &m[2], &f[2]);
    let mut a = vec![0.0; n];
    for i in 0..n {
        a[i] = m[0][i] + (g2[i] * m[2][i] - g3[i] * m[1][i]) + p.src(0, i);
    }
    let f = p.fhat([&a, &m[1], &m[2]]);
    let g1s = p.g(&heat, &a, &f[0]);
    let mut b = vec![0.0; n];
    for i in 0..n {
        b[i] = m[1][i] + (g3[i] * a[i] - g1s[i] * m[2][i]) + p.src(1, i);
    }
    let f = p.fhat([&a, &b, &m[2]]);
    let g2s = p.g(&heat, &b, &f[1]);
    let mut c = vec![0.0; n];
    for i in 0..n {
        c[i] = m[2][i] + (g1s[i] * b[i] - g2s[i] * a[i]) + p.src(2, i);
    }
    let f = p.fhat([&a, &b, &c]);
    let star = [a, b, c];
    let ss = [0, 1, 2].map(|k| {
        let rhs: Vec<f64> = (0..n).map(|i| star[k][i] + p.alpha * p.dt * f[k][i]).collect();
        damp.solve(&rhs)
    });
    normalize(ss)
}

pub fn oracle_a(p: &Setup, m: &C) -> C {
    let heat = DenseHeat::new(&p.mesh, p.dt * p.eps);
    let n = m[0].len();
    let al = p.alpha;
    let (m1, m2, m3) = (&m[0], &m[1], &m[2]);
    let f = p.fhat([m1, m2, m3]);
    let g1 = p.g(&heat, m1, &f[0]);
    let g2 = p.g(&heat, m2, &f[1]);
    let g3 = p.g(&heat, m3, &f[2]);
    let mut s1 = vec![0.0; n];
    for i in 0..n {
        s1[i] = m1[i] - (m2[i] * g3[i] - m3[i] * g2[i]) - al * (m1[i] * g1[i] + m2[i] * g2[i] + m3[i] * g3[i]) * m1[i]
            + al * g1[i]
            + p.src(0, i);
    }
    let f = p.fhat([&s1, m2, m3]);
    let g1s = p.g(&heat, &s1, &f[0]);
    let mut s2 = vec![0.0; n];
    for i in 0..n {
        s2[i] = m2[i] - (m3[i] * g1s[i] - s1[i] * g3[i]) - al * (s1[i] * g1s[i] + m2[i] * g2[i] + m3[i] * g3[i]) * m2[i]
            + al * g2[i]
            + p.src(1, i);
    }
    let f = p.fhat([&s1, &s2, m3]);
    let g2s = p.g(&heat, &s2, &f[1]);
    let mut s3 = vec![0.0; n];
    for i in 0..n {
        s3[i] = m3[i] - (s1[i] * g2s[i] - s2[i] * g1s[i]) - al * (s1[i] * g1s[i] + s2[i] * g2s[i] + m3[i] * g3[i]) * m3[i]
            + al * g3[i]
            + p.src(2, i);
    }
    normalize([s1, s2, s3])
}

/// Returns `(m^{n+1}, g^{n+1})`.
pub fn oracle_b(p: &Setup, m: &C, g: &C) -> (C, C) {
    let heat = DenseHeat::new(&p.mesh, p.dt * p.eps);
    let n = m[0].len();
    let al = p.alpha;
    let (m1, m2, m3) = (&m[0], &m[1], &m[2]);
    let (g1, g2, g3) = (&g[0], &g[1], &g[2]);
    let mut s1 = vec![0.0; n];
    for i in 0..n {
        let nn = m1[i] * m1[i] + m2[i] * m2[i] + m3[i] * m3[i];
        s1[i] = m1[i] - (m2[i] * g3[i] - m3[i] * g2[i]) - al * (m1[i] * g1[i] + m2[i] * g2[i] + m3[i] * g3[i]) * m1[i]
            + al * nn * g1[i]
            + p.src(0, i);
    }
    let f = p.fhat([&s1, m2, m3]);
    let n1 = p.g(&heat, &s1, &f[0]);
    let mut s2 = vec![0.0; n];
    for i in 0..n {
        let nn = s1[i] * s1[i] + m2[i] * m2[i] + m3[i] * m3[i];
        s2[i] = m2[i] - (m3[i] * n1[i] - s1[i] * g3[i]) - al * (s1[i] * n1[i] + m2[i] * g2[i] + m3[i] * g3[i]) * m2[i]
            + al * nn * g2[i]
            + p.src(1, i);
    }
    let f_d = p.fhat([&s1, &s2, m3]);
    let n2 = p.g(&heat, &s2, &f_d[1]);
    let mut s3 = vec![0.0; n];
    for i in 0..n {
        let nn = s1[i] * s1[i] + s2[i] * s2[i] + m3[i] * m3[i];
        s3[i] = m3[i] - (s1[i] * n2[i] - s2[i] * n1[i]) - al * (s1[i] * n1[i] + s2[i] * n2[i] + m3[i] * g3[i]) * m3[i]
            + al * nn * g3[i]
            + p.src(2, i);
    }
    let f = p.fhat([&s1, &s2, &s3]);
    let n3 = p.g(&heat, &s3, &f[2]);
    (normalize([s1, s2, s3]), [n1, n2, n3])
}

pub fn random_unit(mesh: &Mesh, seed: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = VectorField::from_fn(*mesh, |_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
    project_onto_sphere(&raw).unwrap()
}

pub fn comps(f: &VectorField) -> C {
    f.components()
}

pub fn max_diff(a: &C, b: &VectorField) -> f64 {
    let bc = b.components();
    (0..3).flat_map(|c| a[c].iter().zip(&bc[c]).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max)
}

pub fn context(p: &Setup) -> FieldContext {
    let mut ctx = FieldContext::exchange_only(p.mesh, Dimensionless { q: p.q, eps: p.eps, alpha: p.alpha });
    if p.q > 0.0 {
        ctx = ctx.with_anisotropy();
    }
    if p.h_ext != [0.0; 3] {
        ctx = ctx.with_external(p.h_ext);
    }
    if p.stray {
        ctx = ctx.with_stray();
    }
    if let Some(s) = &p.source {
        let s = s.clone();
        let mesh = p.mesh;
        // constant in time; the oracle samples it once
        ctx = ctx.with_forcing(Arc::new(move |x: [f64; 3], _t: f64| {
            let d = mesh.spacing();
            let i = ((x[0] - mesh.origin[0]) / d[0]).floor() as usize;
            let j = ((x[1] - mesh.origin[1]) / d[1]).floor() as usize;
            let k = ((x[2] - mesh.origin[2]) / d[2]).floor() as usize;
            let c = mesh.idx(i, j, k);
            [s[0][c], s[1][c], s[2][c]]
        }));
    }
    ctx
}

pub fn plain(mesh: Mesh) -> Setup {
    Setup { mesh, q: 0.0, eps: 1.0, alpha: 0.1, dt: 1e-4, h_ext: [0.0; 3], stray: false, source: None }
}

pub fn full(mesh: Mesh, seed: u64) -> Setup {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mesh.n_cells();
    let mut rnd = || (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    Setup {
        mesh,
        q: 0.3,
        eps: 0.7,
        alpha: 0.25,
        dt: 3e-3,
        h_ext: [0.2, -0.1, 0.05],
        stray: mesh.n_cells() > 8,
        source: Some([rnd(), rnd(), rnd()]),
    }
}

/// Max deviation of one library step from the transcription (GSPM and A).
pub fn one_step_error(kind: SchemeKind, p: &Setup, seed: u64) -> f64 {
    let m0 = random_unit(&p.mesh, seed);
    let mut st = Stepper::new(kind, context(p), m0.clone(), p.dt).unwrap();
    st.step().unwrap();
    let expect = match kind {
        SchemeKind::GspmOriginal => oracle_gspm(p, &comps(&m0)),
        SchemeKind::SchemeA => oracle_a(p, &comps(&m0)),
        SchemeKind::SchemeB => unreachable!(),
    };
    max_diff(&expect, st.magnetization())
}

/// Max deviation of `m` and the carried `g` over the warm start and two steps of B.
pub fn two_b_steps_error(p: &Setup, seed: u64) -> f64 {
    let m0 = random_unit(&p.mesh, seed);
    let mut st = Stepper::new(SchemeKind::SchemeB, context(p), m0.clone(), p.dt).unwrap();
    let heat = DenseHeat::new(&p.mesh, p.dt * p.eps);
    let m = comps(&m0);
    let f0 = p.fhat([&m[0], &m[1], &m[2]]);
    let g0 = [0, 1, 2].map(|c| p.g(&heat, &m[c], &f0[c]));
    let mut err = max_diff(&g0, &st.carried_g().unwrap());
    let (m1, g1) = oracle_b(p, &m, &g0);
    st.step().unwrap();
    err = err.max(max_diff(&m1, st.magnetization())).max(max_diff(&g1, &st.carried_g().unwrap()));
    let (m2, g2) = oracle_b(p, &m1, &g1);
    st.step().unwrap();
    err.max(max_diff(&m2, st.magnetization())).max(max_diff(&g2, &st.carried_g().unwrap()))
}

