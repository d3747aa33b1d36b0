use std::f64::consts::PI;
use std::sync::Arc;

use anismhd::field::{curl, forward, inverse, MhdState, VectorField};
use anismhd::grid::{make_grid, Grid};
use anismhd::init::InitRecipe;
use anismhd::linprop::apply_semigroup;
use anismhd::norms::Components;
use anismhd::solver::{energy_balance, rhs, run, FieldId, Integrator, ObserverSpec, SolverConfig, SystemKind};
use anismhd::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn box16() -> Arc<Grid> {
    make_grid(2.0 * PI, 2.0 * PI, [16, 16, 16]).unwrap()
}

/// Divergence-free field: curl of a random trigonometric potential on modes |k_i| ≤ 2.
fn smooth_field(g: &Arc<Grid>, seed: u64, amp: f64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<([f64; 3], [f64; 3], f64)> = (0..6)
        .map(|_| {
            let k = [0, 1, 2].map(|_| rng.random_range(-2..=2) as f64);
            let a = [0, 1, 2].map(|_| rng.random_range(-1.0..1.0));
            (k, a, rng.random_range(0.0..2.0 * PI))
        })
        .collect();
    let pot = VectorField::from_fn(g, |x| {
        let mut v = [0.0; 3];
        for (k, a, ph) in &modes {
            let c = (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).sin();
            for i in 0..3 {
                v[i] += amp * a[i] * c;
            }
        }
        v
    });
    curl(&pot)
}

fn state(g: &Arc<Grid>, seed: u64, amp: f64) -> MhdState {
    MhdState { u: smooth_field(g, seed, amp), b: smooth_field(g, seed + 1000, amp), t: 0.0 }
}

fn rel_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.sub(b).unwrap().l2() / b.l2()
}

#[test]
fn zero_state_has_zero_tendency() {
    let g = box16();
    let (du, db) = rhs(SystemKind::A, &MhdState::zeros(&g)).unwrap();
    assert_eq!(du.max_abs(), 0.0);
    assert_eq!(db.max_abs(), 0.0);
}

#[test]
fn vanishing_magnetic_field_has_zero_magnetic_tendency() {
    let g = box16();
    let mut s = state(&g, 1, 1.0);
    s.b = VectorField::zeros(&g);
    let (du, db) = rhs(SystemKind::A, &s).unwrap();
    assert_eq!(db.max_abs(), 0.0);
    assert!(du.max_abs() > 0.0);
}

#[test]
fn equal_fields_leave_only_diffusion_in_induction() {
    let g = box16();
    let f = smooth_field(&g, 2, 1.0);
    let s = MhdState { u: f.clone(), b: f.clone(), t: 0.0 };
    for kind in [SystemKind::A, SystemKind::B] {
        let (_, db) = rhs(kind, &s).unwrap();
        let mut lap = f.spectral();
        let p = kind.magnetic_propagator();
        lap.apply(|k| num_complex::Complex64::new(-p.rate(k), 0.0));
        assert!(rel_diff(&db, &lap.to_real()) < 1e-12);
    }
}

#[test]
fn zero_initial_data_stays_zero() {
    let g = box16();
    let cfg = SolverConfig::new(0.1, 1.0);
    let traj = run(SystemKind::B, &MhdState::zeros(&g), &cfg, &[], &mut []).unwrap();
    assert_eq!(traj.final_state.u.max_abs(), 0.0);
    assert_eq!(traj.final_state.b.max_abs(), 0.0);
    assert!(energy_balance(&traj).iter().all(|&(_, r)| r == 0.0));
}

#[test]
fn linear_only_run_matches_semigroup_and_balances_energy() {
    let g = box16();
    let s0 = state(&g, 3, 0.5);
    for kind in [SystemKind::A, SystemKind::B] {
        let cfg = SolverConfig::new(0.1, 2.0).linear_only().with_stride(5);
        let traj = run(kind, &s0, &cfg, &[], &mut []).unwrap();
        let u = apply_semigroup(kind.velocity_propagator(), &s0.u, 2.0).unwrap();
        let b = apply_semigroup(kind.magnetic_propagator(), &s0.b, 2.0).unwrap();
        assert!(rel_diff(&traj.final_state.u, &u) < 1e-12);
        assert!(rel_diff(&traj.final_state.b, &b) < 1e-12);
        let e0 = traj.energy[0];
        for (_, r) in energy_balance(&traj) {
            assert!(r.abs() <= 1e-8 * e0, "{r}");
        }
    }
}

#[test]
fn nonlinear_run_balances_energy_and_stays_solenoidal() {
    let g = box16();
    let s0 = state(&g, 4, 0.1);
    for kind in [SystemKind::A, SystemKind::B] {
        let residual = |dt: f64| {
            let traj = run(kind, &s0, &SolverConfig::new(dt, 1.0).with_stride(10), &[], &mut []).unwrap();
            assert!(traj.energy.windows(2).all(|w| w[1] <= w[0]));
            assert!(traj.max_divergence() <= 1e-9);
            let e0 = traj.energy[0];
            energy_balance(&traj).iter().fold(0.0_f64, |m, &(_, r)| m.max(r.abs())) / e0
        };
        let (r1, r2) = (residual(0.02), residual(0.01));
        assert!(r2 <= 1e-5, "{kind}: {r2:e}");
        // the dissipation quadrature is second order in the step
        assert!(r1 / r2 >= 3.5, "{kind}: {r1:e} vs {r2:e}");
    }
}

#[test]
fn magnetic_free_system_a_keeps_magnetic_field_zero() {
    let g = box16();
    let mut s0 = state(&g, 5, 0.5);
    s0.b = VectorField::zeros(&g);
    let cfg = SolverConfig::new(0.05, 1.0);
    let a = run(SystemKind::A, &s0, &cfg, &[], &mut []).unwrap();
    let again = run(SystemKind::A, &s0, &cfg, &[], &mut []).unwrap();
    assert_eq!(a.final_state.b.max_abs(), 0.0);
    assert_eq!(a.final_state.u.components(), again.final_state.u.components());
}

fn final_error(kind: SystemKind, s0: &MhdState, integrator: Integrator, dt: f64, reference: &MhdState) -> f64 {
    let cfg = SolverConfig::new(dt, 0.5).with_integrator(integrator).with_stride(1000);
    let f = run(kind, s0, &cfg, &[], &mut []).unwrap().final_state;
    let du = f.u.sub(&reference.u).unwrap().l2();
    let db = f.b.sub(&reference.b).unwrap().l2();
    (du * du + db * db).sqrt()
}

#[test]
fn time_step_refinement_orders() {
    let g = box16();
    let s0 = state(&g, 6, 0.3);
    let kind = SystemKind::A;
    let reference = run(kind, &s0, &SolverConfig::new(0.5 / 256.0, 0.5).with_stride(1000), &[], &mut [])
        .unwrap()
        .final_state;
    let e1 = final_error(kind, &s0, Integrator::Ifrk4, 0.5 / 16.0, &reference);
    let e2 = final_error(kind, &s0, Integrator::Ifrk4, 0.5 / 32.0, &reference);
    assert!(e2 > 0.0);
    assert!(e1 / e2 >= 8.0, "IFRK4 ratio {}", e1 / e2);
    let f1 = final_error(kind, &s0, Integrator::Etd2, 0.5 / 32.0, &reference);
    let f2 = final_error(kind, &s0, Integrator::Etd2, 0.5 / 64.0, &reference);
    assert!(f1 / f2 >= 3.0, "ETD2 ratio {}", f1 / f2);
}

#[test]
fn nonlinear_residual_scales_quadratically() {
    let g = make_grid(40.0, 40.0, [24, 24, 24]).unwrap();
    let recipe = InitRecipe::curl_gaussian(0.05, 11);
    let kind = SystemKind::B;
    let cfg = SolverConfig::new(0.1, 1.0).with_stride(10);
    let residual = |a: f64| {
        let s0 = recipe.with_amplitude(a).build(&g).unwrap();
        let f = run(kind, &s0, &cfg, &[], &mut []).unwrap().final_state;
        let u = apply_semigroup(kind.velocity_propagator(), &s0.u, 1.0).unwrap();
        let b = apply_semigroup(kind.magnetic_propagator(), &s0.b, 1.0).unwrap();
        let du = f.u.sub(&u).unwrap().l2();
        let db = f.b.sub(&b).unwrap().l2();
        (du * du + db * db).sqrt()
    };
    let ratio = residual(0.05) / residual(0.025);
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn large_data_triggers_step_halving_then_abort() {
    let g = box16();
    let s0 = state(&g, 7, 1.0);
    let speed = s0.u.max_abs().max(s0.b.max_abs());
    let h = 2.0 * PI / 16.0;
    // dt twice the CFL limit forces at least one halving
    let dt = 2.0 * 0.5 * h / (speed * 3f64.sqrt()) * 1.01;
    let traj = run(SystemKind::A, &s0, &SolverConfig::new(dt, dt), &[], &mut []).unwrap();
    assert!(traj.halvings >= 1);
    let big = MhdState { u: s0.u.scaled(1e4), b: s0.b.scaled(1e4), t: 0.0 };
    assert!(matches!(
        run(SystemKind::A, &big, &SolverConfig::new(0.1, 0.1), &[], &mut []),
        Err(Error::CflAbort { .. })
    ));
}

#[test]
fn non_finite_initial_data_is_rejected() {
    let g = box16();
    let mut s0 = state(&g, 8, 1.0);
    s0.u.component_mut(0)[[1, 2, 3]] = f64::NAN;
    assert!(matches!(run(SystemKind::A, &s0, &SolverConfig::new(0.1, 0.1), &[], &mut []), Err(Error::NonFinite { .. })));
}

#[test]
fn bad_configurations_are_rejected() {
    let g = box16();
    let s0 = MhdState::zeros(&g);
    for cfg in [SolverConfig::new(0.3, 1.0), SolverConfig::new(0.0, 1.0), SolverConfig { dealias: 0.4, ..SolverConfig::new(0.1, 1.0) }] {
        assert!(run(SystemKind::A, &s0, &cfg, &[], &mut []).is_err());
    }
}

#[test]
fn observers_sample_every_stride_and_snapshots_are_kept() {
    let g = box16();
    let s0 = state(&g, 9, 0.2);
    let obs = [
        ObserverSpec::new(FieldId::Velocity, Components::Horizontal, f64::INFINITY, f64::INFINITY),
        ObserverSpec::new(FieldId::Magnetic, Components::All, 2.0, 2.0),
    ];
    let cfg = SolverConfig::new(0.05, 1.0).with_stride(4).with_snapshots();
    let traj = run(SystemKind::A, &s0, &cfg, &obs, &mut []).unwrap();
    assert_eq!(traj.times.len(), 6);
    assert_eq!(traj.snapshots.len(), 6);
    assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    let b2 = traj.series("B", 2.0, 2.0).unwrap();
    for (s, (_, v)) in traj.snapshots.iter().zip(b2.points.iter()) {
        assert!((s.b.l2() - v).abs() <= 1e-12 * v);
    }
    assert!(traj.series("u_h", f64::INFINITY, f64::INFINITY).is_some() || traj.series("uh", f64::INFINITY, f64::INFINITY).is_some());
}

#[test]
fn final_state_is_real_consistent() {
    let g = box16();
    let s0 = state(&g, 10, 0.5);
    let traj = run(SystemKind::B, &s0, &SolverConfig::new(0.05, 0.5), &[], &mut []).unwrap();
    for c in 0..3 {
        let a = traj.final_state.u.component(c);
        let back = inverse(&g, forward(&g, a.view()).view());
        let err = a.iter().zip(back.iter()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(err <= 1e-12 * a.iter().fold(0.0_f64, |m, x| m.max(x.abs())));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn energy_never_increases(seed in 0u64..500, amp in 0.05f64..0.5, horizontal_u in any::<bool>()) {
        let kind = if horizontal_u { SystemKind::A } else { SystemKind::B };
        let g = make_grid(2.0 * PI, 2.0 * PI, [8, 8, 8]).unwrap();
        let s0 = state(&g, seed, amp);
        let traj = run(kind, &s0, &SolverConfig::new(0.05, 0.5), &[], &mut []).unwrap();
        prop_assert!(traj.energy.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert!(traj.max_divergence() <= 1e-9);
    }
}
