//! Consistency and invariant properties of the steppers.

use gspm::experiments::convergence::fit_log_slope;
use gspm::experiments::manufactured::{DiscreteForcing, ManufacturedCase};
use gspm::experiments::stability::random_smooth_field;
use gspm::field::{Dimensionless, FieldContext, Forcing};
use gspm::mesh::{max_norm_error, project_onto_sphere, Mesh, VectorField};
use gspm::schemes::NormChecker;
use gspm::{SchemeKind, Stepper};
use proptest::prelude::*;
use std::sync::Arc;

const T0: f64 = 0.5;

fn case() -> ManufacturedCase {
    ManufacturedCase::one_d()
}

/// One step from the sampled exact solution at `T0`; the source uses the
/// discrete Laplacian so only the temporal error remains.
fn one_step_with(c: ManufacturedCase, scheme: SchemeKind, mesh: Mesh, dt: f64) -> (VectorField, VectorField) {
    let forcing: Arc<dyn Forcing> = Arc::new(DiscreteForcing(c));
    let ctx = FieldContext::exchange_only(mesh, Dimensionless { q: 0.0, eps: 1.0, alpha: c.alpha }).with_forcing(forcing);
    let mut s = Stepper::starting_at(scheme, ctx, c.exact_field(&mesh, T0), dt, T0).unwrap();
    s.step().unwrap();
    (s.magnetization().clone(), c.exact_field(&mesh, T0 + dt))
}

fn local_errors(c: ManufacturedCase, scheme: SchemeKind) -> Vec<f64> {
    let mesh = c.mesh([8, 1, 1]);
    [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&dt| {
            let (got, want) = one_step_with(c, scheme, mesh, dt);
            max_norm_error(&got, &want).unwrap()
        })
        .collect()
}

fn assert_fourfold(scheme: SchemeKind, errs: &[f64]) {
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((3.2..=4.8).contains(&r), "{scheme}: local error ratio {r} ({errs:?})");
    }
}

#[test]
fn local_error_drops_fourfold_when_step_halves() {
    for scheme in SchemeKind::ALL {
        assert_fourfold(scheme, &local_errors(case(), scheme));
    }
}

#[test]
fn strong_damping_keeps_second_order_local_error_for_gspm_and_b() {
    let c = ManufacturedCase { alpha: 0.1, ..case() };
    for scheme in [SchemeKind::GspmOriginal, SchemeKind::SchemeB] {
        assert_fourfold(scheme, &local_errors(c, scheme));
    }
}

#[test]
fn scheme_a_damping_term_is_first_order_locally() {
    // `+alpha g_i` without the |m|^2 factor leaves an O(alpha dt) residue once
    // the Gauss-Seidel rows mix starred and unstarred components
    let c = ManufacturedCase { alpha: 0.1, ..case() };
    let errs = local_errors(c, SchemeKind::SchemeA);
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((1.8..=2.5).contains(&r), "ratio {r} ({errs:?})");
    }
}

fn one_step_gaps(c: ManufacturedCase, x: SchemeKind, y: SchemeKind, dts: &[f64]) -> Vec<f64> {
    let mesh = c.mesh([8, 1, 1]);
    dts.iter()
        .map(|&dt| {
            let (u, _) = one_step_with(c, x, mesh, dt);
            let (v, _) = one_step_with(c, y, mesh, dt);
            max_norm_error(&u, &v).unwrap()
        })
        .collect()
}

const GAP_STEPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

#[test]
fn gspm_and_b_agree_to_second_order_after_one_step() {
    for alpha in [1e-5, 0.1, 1.0] {
        let c = ManufacturedCase { alpha, ..case() };
        let gaps = one_step_gaps(c, SchemeKind::GspmOriginal, SchemeKind::SchemeB, &GAP_STEPS);
        let slope = fit_log_slope(&GAP_STEPS, &gaps);
        assert!((1.8..=2.2).contains(&slope), "alpha {alpha}: slope {slope} ({gaps:?})");
    }
}

#[test]
fn scheme_a_gap_is_first_order_and_proportional_to_damping() {
    for other in [SchemeKind::GspmOriginal, SchemeKind::SchemeB] {
        let weak = one_step_gaps(ManufacturedCase { alpha: 1e-5, ..case() }, SchemeKind::SchemeA, other, &GAP_STEPS);
        let strong = one_step_gaps(ManufacturedCase { alpha: 0.1, ..case() }, SchemeKind::SchemeA, other, &GAP_STEPS);
        let slope = fit_log_slope(&GAP_STEPS, &strong);
        assert!((0.8..=1.2).contains(&slope), "{other}: slope {slope} ({strong:?})");
        let scale = strong[0] / weak[0];
        assert!((0.5e4..=2e4).contains(&scale), "{other}: gap scales by {scale} for 1e4 times the damping");
    }
    // undamped, the three schemes coincide
    let c = ManufacturedCase { alpha: 0.0, ..case() };
    for other in [SchemeKind::GspmOriginal, SchemeKind::SchemeB] {
        let gaps = one_step_gaps(c, SchemeKind::SchemeA, other, &GAP_STEPS);
        assert!(gaps.iter().all(|g| *g < 1e-15), "{gaps:?}");
    }
}

#[test]
fn gyromagnetic_only_runs_stay_unit_and_finite() {
    let mesh = Mesh::line(50, 0.02).unwrap();
    let m0 = random_smooth_field(&mesh, 11, 3);
    for scheme in SchemeKind::ALL {
        let ctx = FieldContext::exchange_only(mesh, Dimensionless { q: 0.0, eps: 1.0, alpha: 0.0 });
        let mut s = Stepper::new(scheme, ctx, m0.clone(), 1e-3).unwrap();
        let mut norms = NormChecker::default();
        s.run(1000, &mut [&mut norms]).unwrap();
        assert!(s.magnetization().first_non_finite().is_none());
        assert!(norms.worst <= 1e-14, "{scheme}: {}", norms.worst);
        assert!(s.stats().every_step_matches(scheme.counts_per_step()));
    }
}

#[test]
fn zero_steps_change_nothing() {
    let mesh = Mesh::line(8, 0.1).unwrap();
    let m0 = random_smooth_field(&mesh, 2, 2);
    for scheme in SchemeKind::ALL {
        let ctx = FieldContext::exchange_only(mesh, Dimensionless { q: 0.2, eps: 1.0, alpha: 0.1 }).with_anisotropy();
        let mut s = Stepper::new(scheme, ctx, m0.clone(), 1e-2).unwrap();
        s.run(0, &mut []).unwrap();
        assert_eq!(s.magnetization(), &m0);
    }
}

fn unit_field(mesh: Mesh, raw: &[(f64, f64, f64)]) -> VectorField {
    let data = raw.iter().map(|&(a, b, c)| [a, b, c + 2.0]).collect();
    project_onto_sphere(&VectorField::from_data(mesh, data).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_step_is_unit_with_exact_counters(
        raw in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 12),
        scheme_idx in 0usize..3,
        alpha in 0.0..1.0f64,
        dt in 1e-4..1e-1f64,
        q in 0.0..1.0f64,
    ) {
        let mesh = Mesh::new([3, 2, 2], [0.3, 0.4, 0.5]).unwrap();
        let scheme = SchemeKind::ALL[scheme_idx];
        let ctx = FieldContext::exchange_only(mesh, Dimensionless { q, eps: 0.5, alpha })
            .with_anisotropy()
            .with_external([0.1, -0.2, 0.05])
            .with_stray();
        let mut s = Stepper::new(scheme, ctx, unit_field(mesh, &raw), dt).unwrap();
        for _ in 0..5 {
            s.step().unwrap();
            prop_assert!(s.magnetization().max_norm_deviation() <= 1e-14);
        }
        prop_assert!(s.stats().every_step_matches(scheme.counts_per_step()));
    }

    #[test]
    fn uniform_states_along_the_easy_axis_are_fixed(sign in prop::bool::ANY, scheme_idx in 0usize..3, dt in 1e-4..1.0f64) {
        // exchange vanishes, anisotropy and the field along e1 only rescale g
        let mesh = Mesh::new([4, 3, 1], [0.2; 3]).unwrap();
        let s1 = if sign { 1.0 } else { -1.0 };
        let m0 = VectorField::uniform(mesh, [s1, 0.0, 0.0]);
        let ctx = FieldContext::exchange_only(mesh, Dimensionless { q: 0.3, eps: 1.0, alpha: 0.2 }).with_anisotropy();
        let mut s = Stepper::new(SchemeKind::ALL[scheme_idx], ctx, m0.clone(), dt).unwrap();
        s.run(10, &mut []).unwrap();
        prop_assert!(max_norm_error(s.magnetization(), &m0).unwrap() <= 1e-12);
    }
}
