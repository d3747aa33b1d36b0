use std::sync::Arc;

use anismhd::duhamel::{
    all_terms, eval_term, integrals, profile_integral, reconstruct, DuhamelAccumulator, DuhamelObserver, DuhamelTermId,
    ProductGroups, ProfileAccumulator, ProfilePair, TermArgument, TermFamily,
};
use anismhd::field::MhdState;
use anismhd::grid::{make_grid, Grid};
use anismhd::init::InitRecipe;
use anismhd::solver::{rhs, run, FieldId, Products, SolverConfig, SystemKind, Trajectory};
use anismhd::tolerances::DEALIAS_TWO_THIRDS;
use anismhd::{Error, SpectralVector};
use ndarray::Zip;
use proptest::prelude::*;

fn recipe(amplitude: f64, seed: u64) -> InitRecipe {
    InitRecipe::CurlGaussian { amplitude, width: 1.5, seed, band_limited: true, magnetic: true, sobolev: 0.0 }
}

fn grid() -> Arc<Grid> {
    make_grid(20.0, 20.0, [24, 24, 24]).unwrap()
}

fn trajectory(kind: SystemKind, init: &MhdState, dt: f64, stride: usize) -> Trajectory {
    let cfg = SolverConfig::new(dt, 1.0).with_stride(stride).with_snapshots();
    run(kind, init, &cfg, &[], &mut []).unwrap()
}

fn diff_l2(a: &MhdState, b: &MhdState) -> f64 {
    (a.u.sub(&b.u).unwrap().l2().powi(2) + a.b.sub(&b.b).unwrap().l2().powi(2)).sqrt()
}

fn state_l2(a: &MhdState) -> f64 {
    (a.u.l2().powi(2) + a.b.l2().powi(2)).sqrt()
}

#[test]
fn reconstruction_matches_solver_and_converges() {
    let g = grid();
    let init = recipe(1.0, 4).build(&g).unwrap();
    for kind in [SystemKind::A, SystemKind::B] {
        let fine = trajectory(kind, &init, 1.0 / 128.0, 4);
        let coarse = trajectory(kind, &init, 1.0 / 128.0, 8);
        let linear = run(kind, &init, &SolverConfig::new(1.0 / 128.0, 1.0).linear_only(), &[], &mut []).unwrap();
        let nonlinear = diff_l2(&fine.final_state, &linear.final_state);
        let gap_f = diff_l2(&reconstruct(&fine, 1.0).unwrap(), &fine.final_state);
        let gap_c = diff_l2(&reconstruct(&coarse, 1.0).unwrap(), &coarse.final_state);
        assert!(nonlinear > 1e-3 * state_l2(&fine.final_state), "{kind}: nonlinear part too small");
        assert!(gap_f < 1e-2 * nonlinear, "{kind}: gap {gap_f:e} vs nonlinear part {nonlinear:e}");
        assert!(gap_c / gap_f > 3.0, "{kind}: refinement ratio {}", gap_c / gap_f);
    }
}

#[test]
fn richardson_estimate_tracks_true_error() {
    let g = grid();
    let init = recipe(1.0, 5).build(&g).unwrap();
    let traj = trajectory(SystemKind::A, &init, 1.0 / 128.0, 4);
    let reference = trajectory(SystemKind::A, &init, 1.0 / 128.0, 1);
    let id = DuhamelTermId::new(TermFamily::Uh, 2, TermArgument::Velocity).unwrap();
    let t = eval_term(id, &traj, 1.0).unwrap();
    let r = eval_term(id, &reference, 1.0).unwrap();
    let err = t.field.sub(&r.field).unwrap().l2();
    let est = t.error.expect("even number of intervals");
    assert!(est > 0.3 * err && est < 3.0 * err, "estimate {est:e} vs error {err:e}");
}

#[test]
fn zero_magnetic_field_kills_magnetic_and_mixed_terms() {
    let g = grid();
    let r = InitRecipe::CurlGaussian { amplitude: 1.0, width: 1.5, seed: 2, band_limited: true, magnetic: false, sobolev: 0.0 };
    let init = r.build(&g).unwrap();
    for kind in [SystemKind::A, SystemKind::B] {
        let traj = trajectory(kind, &init, 1.0 / 32.0, 1);
        let q = integrals(&traj, 1.0, ProductGroups::ALL).unwrap();
        for id in all_terms(kind) {
            let f = q.term(id).unwrap();
            let n = f.field.l2();
            if id.argument == TermArgument::Velocity {
                continue;
            }
            assert_eq!(n, 0.0, "{id}");
        }
    }
}

#[test]
fn too_few_snapshots_is_an_error() {
    let g = grid();
    let init = recipe(0.5, 1).build(&g).unwrap();
    let traj = trajectory(SystemKind::A, &init, 1.0 / 16.0, 2);
    let id = all_terms(SystemKind::A)[0];
    assert!(matches!(eval_term(id, &traj, 1.0), Err(Error::Snapshots(_))));
    assert!(matches!(eval_term(id, &traj, 0.0), Err(Error::Snapshots(_))));
    let no_snap = run(SystemKind::A, &init, &SolverConfig::new(1.0 / 32.0, 1.0), &[], &mut []).unwrap();
    assert!(matches!(eval_term(id, &no_snap, 1.0), Err(Error::Snapshots(_))));
}

#[test]
fn wrong_system_is_rejected() {
    let g = grid();
    let init = recipe(0.5, 1).build(&g).unwrap();
    let traj = trajectory(SystemKind::A, &init, 1.0 / 32.0, 1);
    let q = integrals(&traj, 1.0, ProductGroups::ALL).unwrap();
    let id = DuhamelTermId::new(TermFamily::Eh, 1, TermArgument::Velocity).unwrap();
    assert!(q.term(id).is_err());
    let only_mixed = integrals(&traj, 1.0, ProductGroups { uu: false, bb: false, bu: true }).unwrap();
    assert!(only_mixed.term(all_terms(SystemKind::A)[0]).is_err());
}

/// With time-independent products, Q = (1 - e^{-tλ})/λ · p̂, so each family sum
/// must equal that factor times the solver's nonlinear tendency.
#[test]
fn family_sums_match_solver_tendency_for_frozen_products() {
    let g = make_grid(2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, [16, 16, 16]).unwrap();
    let state = recipe(1.0, 8).build(&make_grid(20.0, 20.0, [16, 16, 16]).unwrap()).unwrap();
    // reuse the values on a 2π box so |k| = 1 modes are present
    let state = MhdState {
        u: anismhd::VectorField::from_components(&g, state.u.components().clone()).unwrap(),
        b: anismhd::VectorField::from_components(&g, state.b.components().clone()).unwrap(),
        t: 0.0,
    };
    let products = Products::compute(&state.u, &state.b, DEALIAS_TWO_THIRDS);
    let h = 0.05;
    let t = 16.0 * h;
    for kind in [SystemKind::A, SystemKind::B] {
        let mut acc = DuhamelAccumulator::new(kind, &g, ProductGroups::ALL);
        for n in 0..=16 {
            acc.push(n as f64 * h, &products).unwrap();
        }
        let q = acc.integrals().unwrap();
        let (du, db) = rhs(kind, &state).unwrap();
        let nu = subtract_diffusion(&du.spectral(), &state.u.spectral(), kind.velocity_propagator());
        let nb = subtract_diffusion(&db.spectral(), &state.b.spectral(), kind.magnetic_propagator());
        for (field, n, prop) in [(FieldId::Velocity, nu, kind.velocity_propagator()), (FieldId::Magnetic, nb, kind.magnetic_propagator())] {
            let ids: Vec<_> = all_terms(kind).into_iter().filter(|id| id.family.field() == field).collect();
            let sum = q.sum(&ids).unwrap();
            let mut worst: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for c in 0..3 {
                Zip::indexed(sum.component(c)).and(n.component(c)).for_each(|(i, j, l), s, nn| {
                    let lam = prop.rate(g.wavevector(i, j, l));
                    let f = if lam * t < 1e-10 { t } else { -(-lam * t).exp_m1() / lam };
                    worst = worst.max((s - nn * f).norm());
                    scale = scale.max((nn * f).norm());
                });
            }
            assert!(scale > 0.0);
            assert!(worst <= 1e-10 * scale, "{kind} {field:?}: {worst:e} vs {scale:e}");
        }
    }
}

fn subtract_diffusion(total: &SpectralVector, s: &SpectralVector, p: anismhd::linprop::PropagatorKind) -> SpectralVector {
    let g = total.grid().clone();
    let mut out = total.clone();
    for (o, v) in out.components_mut().iter_mut().zip(s.components()) {
        Zip::indexed(o).and(v).for_each(|(i, j, l), o, v| {
            *o += v * p.rate(g.wavevector(i, j, l));
        });
    }
    out
}

#[test]
fn observer_matches_post_hoc_integrals() {
    let g = grid();
    let init = recipe(1.0, 6).build(&g).unwrap();
    let cfg = SolverConfig::new(1.0 / 64.0, 1.0).with_stride(2).with_snapshots();
    let mut obs = DuhamelObserver::new(SystemKind::B, &g, ProductGroups::ALL, cfg.dealias, &[1.0]);
    let traj = run(SystemKind::B, &init, &cfg, &[], &mut [&mut obs]).unwrap();
    assert_eq!(obs.frozen.len(), 1);
    let post = integrals(&traj, 1.0, ProductGroups::ALL).unwrap();
    for id in all_terms(SystemKind::B) {
        let a = obs.frozen[0].term(id).unwrap().field;
        let b = post.term(id).unwrap().field;
        assert!(a.sub(&b).unwrap().l2() <= 1e-12 * b.l2().max(1e-300), "{id}");
    }
}

#[test]
fn vertical_derivative_lines_integrate_to_zero() {
    let g = grid();
    let init = recipe(1.0, 7).build(&g).unwrap();
    let cfg = SolverConfig::new(0.25, 40.0).with_stride(4).with_snapshots();
    let traj = run(SystemKind::A, &init, &cfg, &[], &mut []).unwrap();
    let pair = ProfilePair::Line { first: FieldId::Velocity, second: FieldId::Velocity, vertical_derivative: true };
    match profile_integral(&traj, pair) {
        Ok(p) => {
            let h = g.spacing()[2];
            for c in 0..2 {
                let prof = p.x3_profile(c);
                let total: f64 = prof.iter().sum::<f64>() * h;
                let size: f64 = prof.iter().map(|x| x.abs()).sum::<f64>() * h;
                assert!(total.abs() <= 1e-12 * size.max(1e-300), "{total:e} vs {size:e}");
            }
        }
        Err(Error::TailTooLarge { .. }) => {}
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn profile_lines_match_direct_plane_integrals() {
    // one state scaled by (1+τ)^{-3/2}, so the plane sums decay like (1+τ)^{-3}
    let g = grid();
    let init = recipe(1.0, 3).build(&g).unwrap();
    let mut acc = ProfileAccumulator::new(&g, DEALIAS_TWO_THIRDS);
    let h = 0.1;
    for n in 0..=100 {
        let f = (1.0 + n as f64 * h).powf(-1.5);
        acc.push(&MhdState { u: init.u.scaled(f), b: init.b.scaled(f), t: n as f64 * h }).unwrap();
    }
    let pair = ProfilePair::Line { first: FieldId::Magnetic, second: FieldId::Velocity, vertical_derivative: false };
    let p = acc.integral(pair).unwrap();
    // oracle: plane integral of B₃u₁ times ∫₀^∞ (1+τ)^{-3} dτ = 1/2
    let hs = g.spacing();
    let nz = g.n()[2];
    let mut direct = vec![0.0; nz];
    Zip::indexed(init.b.component(2)).and(init.u.component(0)).for_each(|(_, _, l), a, b| direct[l] += a * b * hs[0] * hs[1]);
    let prof = p.x3_profile(0);
    let err: f64 = prof.iter().zip(&direct).map(|(a, b)| (a - 0.5 * b).abs()).fold(0.0, f64::max);
    let size = direct.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    // trapezoid error plus the fitted tail, and the band limit on the line
    assert!(err <= 0.01 * size, "{err:e} vs {size:e}");
    let total = acc.integral(ProfilePair::Total { first: FieldId::Magnetic, second: FieldId::Velocity }).unwrap();
    let m = total.total.unwrap();
    let direct_total: f64 = direct.iter().sum::<f64>() * hs[2];
    assert!((m[2][0] - 0.5 * direct_total).abs() <= 0.01 * direct_total.abs().max(size * hs[2]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn terms_are_quadratic_in_the_data(c in 0.1f64..3.0, seed in 0u64..50, system_b in any::<bool>()) {
        let kind = if system_b { SystemKind::B } else { SystemKind::A };
        let g = make_grid(20.0, 20.0, [12, 12, 12]).unwrap();
        let init = recipe(1.0, seed).build(&g).unwrap();
        // any sequence of states works; use the linear evolution
        let traj = run(kind, &init, &SolverConfig::new(1.0 / 16.0, 1.0).linear_only().with_snapshots(), &[], &mut []).unwrap();
        let mut a = DuhamelAccumulator::new(kind, &g, ProductGroups::ALL);
        let mut b = DuhamelAccumulator::new(kind, &g, ProductGroups::ALL);
        for s in &traj.snapshots {
            a.push(s.t, &Products::compute(&s.u, &s.b, DEALIAS_TWO_THIRDS)).unwrap();
            b.push(s.t, &Products::compute(&s.u.scaled(c), &s.b.scaled(c), DEALIAS_TWO_THIRDS)).unwrap();
        }
        let (qa, qb) = (a.integrals().unwrap(), b.integrals().unwrap());
        for id in all_terms(kind) {
            let fa = qa.term(id).unwrap().field;
            let fb = qb.term(id).unwrap().field;
            let d = fb.sub(&fa.scaled(c * c)).unwrap().l2();
            prop_assert!(d <= 1e-10 * fb.l2().max(1e-300), "{}", id);
        }
    }
}
