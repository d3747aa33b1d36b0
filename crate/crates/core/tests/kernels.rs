use std::f64::consts::PI;

use anismhd::field::VectorField;
use anismhd::fit::geometric_samples;
use anismhd::grid::make_grid;
use anismhd::kernels::{convolve_kernel, eval_kernel, fit_kernel_exponent, kernel_norm, KernelKind, KernelSpec};
use anismhd::quadrature::{integrate, integrate_semi_infinite};
use anismhd::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INF: f64 = f64::INFINITY;

fn spec(kind: KernelKind) -> KernelSpec {
    KernelSpec::plain(kind)
}

/// N(t, x) = ∫₀^∞ G(t+s, x) ds by quadrature; the substitution t + s = w^{-2}
/// turns it into 2(4π)^{-3/2} ∫₀^{1/√t} e^{-r²w²/4} dw with a smooth integrand.
fn n_by_quadrature(t: f64, r: f64) -> f64 {
    let g = |w: f64| 2.0 * (4.0 * PI).powf(-1.5) * (-r * r * w * w / 4.0).exp();
    integrate(g, 0.0, 1.0 / t.sqrt(), 1e-300, 1e-14).unwrap().value
}

#[test]
fn gaussian_normalization_at_origin() {
    let v = eval_kernel(&spec(KernelKind::Gauss3), 1.0 / (4.0 * PI), [0.0; 3]).unwrap();
    assert!((v - 1.0).abs() < 1e-14);
}

#[test]
fn n_at_origin() {
    let v = eval_kernel(&spec(KernelKind::N), 1.0, [0.0; 3]).unwrap();
    let closed = 2.0 * (4.0 * PI).powf(-1.5);
    assert!((v - closed).abs() < 1e-15);
    assert!((v - 0.044897).abs() < 1e-6);
    let oracle = n_by_quadrature(1.0, 0.0);
    assert!((v - oracle).abs() < 1e-8 * oracle);
}

#[test]
fn ktilde_vanishes_on_midplane() {
    for t in [0.1, 3.0] {
        assert_eq!(eval_kernel(&spec(KernelKind::KTilde), t, [0.4, -1.0, 0.0]).unwrap(), 0.0);
    }
}

#[test]
fn nonpositive_time_rejected() {
    assert!(eval_kernel(&spec(KernelKind::Gauss3), 0.0, [0.0; 3]).is_err());
    assert!(kernel_norm(&spec(KernelKind::Gauss3), -1.0, 1.0, 1.0).is_err());
}

#[test]
fn gaussian_norm_examples() {
    for t in [0.1, 1.0, 30.0] {
        let v = kernel_norm(&spec(KernelKind::Gauss3), t, 1.0, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }
    // ∫G(1)² = (8π)^{-3/2}.
    let v = kernel_norm(&spec(KernelKind::Gauss3), 1.0, 2.0, 2.0).unwrap();
    assert!((v - (8.0 * PI).powf(-0.75)).abs() < 1e-10);
    assert!((v - 0.089088).abs() < 1e-6);
    let v = kernel_norm(&spec(KernelKind::Gauss2), 1.0, INF, INF).unwrap();
    assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-14);
}

#[test]
fn weighted_gaussian_moment() {
    // ‖|x| G(1)‖₁ = 4/√π; ‖|x_h| G_h(1)‖₁ = √π.
    let w = kernel_norm(&spec(KernelKind::Gauss3).with_weight(1), 1.0, 1.0, 1.0).unwrap();
    assert!((w - 4.0 / PI.sqrt()).abs() < 1e-8);
    let w = kernel_norm(&spec(KernelKind::Gauss2).with_weight(1), 1.0, 1.0, 1.0).unwrap();
    assert!((w - PI.sqrt()).abs() < 1e-8);
}

#[test]
fn gaussian_fits_are_exact() {
    let ts = geometric_samples(0.5, 50.0, 8);
    let f = fit_kernel_exponent(&spec(KernelKind::Gauss3), INF, INF, &ts).unwrap();
    assert!((f.exponent + 1.5).abs() < 1e-6);
    let f = fit_kernel_exponent(&spec(KernelKind::Gauss2).with_beta(1, 0), 2.0, 2.0, &ts).unwrap();
    assert!((f.exponent + 1.0).abs() < 1e-6);
}

#[test]
fn n_second_derivative_sup_exponent() {
    let s = spec(KernelKind::N).with_beta(1, 0).with_vertical(1);
    let ts = geometric_samples(1.0, 100.0, 6);
    let f = fit_kernel_exponent(&s, INF, INF, &ts).unwrap();
    assert!((f.exponent + 1.5).abs() < 0.05, "{}", f.exponent);
    let s = spec(KernelKind::N).with_beta(2, 0);
    let f = fit_kernel_exponent(&s, INF, INF, &ts).unwrap();
    assert!((f.exponent + 1.5).abs() < 0.05, "{}", f.exponent);
}

#[test]
fn hypothesis_violations_are_reported() {
    // |β|+γ = 0 with p = q = 1: 0 > 2 + 1 − 1 fails.
    let e = kernel_norm(&spec(KernelKind::K), 1.0, 1.0, 1.0).unwrap_err();
    match e {
        Error::Hypothesis(msg) => assert!(msg.contains("2/p + 1/q - 1 + m")),
        other => panic!("unexpected {other}"),
    }
    // N with p = 2, α = 0: 3/4 ≤ 1.
    assert!(matches!(kernel_norm(&spec(KernelKind::N), 1.0, 2.0, 2.0), Err(Error::Hypothesis(_))));
    assert!(fit_kernel_exponent(&spec(KernelKind::Gauss3), 1.0, 1.0, &[1.0, 2.0, 3.0]).is_err());
}

#[test]
fn n_closed_form_matches_s_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let t = 10f64.powf(rng.random_range(-1.0..1.5));
        let x = [0, 1, 2].map(|_| rng.random_range(-4.0..4.0) * t.sqrt());
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let v = eval_kernel(&spec(KernelKind::N), t, x).unwrap();
        let o = n_by_quadrature(t, r);
        assert!(((v - o) / o).abs() < 1e-8, "t={t} r={r}: {v} vs {o}");
    }
}

#[test]
fn n_time_derivative_is_minus_heat_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let t = rng.random_range(0.2..5.0);
        let x = [0, 1, 2].map(|_| rng.random_range(-3.0..3.0));
        let h = 1e-4 * t;
        let n = |s: f64| eval_kernel(&spec(KernelKind::N), s, x).unwrap();
        let dt = (n(t + h) - n(t - h)) / (2.0 * h);
        let g = eval_kernel(&spec(KernelKind::Gauss3), t, x).unwrap();
        assert!(((dt + g) / g).abs() < 1e-4);
    }
}

#[test]
fn lemma_one_scaling_is_exact_for_gaussians() {
    for (b, v, m) in [([0, 0], 0, 0), ([1, 0], 0, 0), ([0, 0], 1, 0), ([0, 0], 0, 1), ([1, 0], 0, 1)] {
        let s = spec(KernelKind::Gauss3).with_beta(b[0], b[1]).with_vertical(v).with_weight(m);
        for p in [1.0, 2.0, INF] {
            let a = kernel_norm(&s, 0.7, p, p).unwrap();
            let c = kernel_norm(&s, 4.0 * 0.7, p, p).unwrap();
            let expect = 2f64.powf(-3.0 * (1.0 - 1.0 / p) - (b[0] + b[1] + v) as f64 + m as f64);
            assert!((c / a / expect - 1.0).abs() < 1e-8, "spec {s:?} p={p}");
        }
    }
}

#[test]
fn k_symbol_against_s_quadrature() {
    // K̂(t,k) = ∫₀^∞ e^{-(t+s)|k_h|² - s k₃²} ds.
    let s = spec(KernelKind::K);
    for (t, k) in [(0.5, [1.0, 0.0, 2.0]), (2.0, [0.3, -0.4, 0.1]), (1.0, [0.0, 0.0, 1.5])] {
        let kh2 = k[0] * k[0] + k[1] * k[1];
        let o = integrate_semi_infinite(|x| (-(t + x) * kh2 - x * k[2] * k[2]).exp(), 0.0, 1e-300, 1e-13).unwrap().value;
        let v = s.symbol(t, k);
        assert!((v.re - o).abs() < 1e-10 * o && v.im == 0.0);
        assert!(v.re > 0.0);
    }
}

#[test]
fn ktilde_symbol_against_vertical_quadrature() {
    // F_{x₃}[sgn(x₃) F_h K(t,k_h,x₃)](k₃) with F_h K from s-quadrature of the 1D heat kernel.
    let s = spec(KernelKind::KTilde);
    for (t, k) in [(0.5, [1.0, 0.5, 2.0]), (1.5, [0.4, 0.0, -0.7])] {
        let kh2: f64 = k[0] * k[0] + k[1] * k[1];
        let partial = |z: f64| {
            let g = |sg: f64| {
                let x = sg * sg;
                (-(t + x) * kh2).exp() * (-z * z / (4.0 * x.max(1e-300))).exp()
            };
            integrate_semi_infinite(g, 0.0, 1e-300, 1e-12).unwrap().value / PI.sqrt()
        };
        // sgn(z) is odd, so ∫ sgn(z) P(z) e^{-ik₃z} dz = −2i ∫₀^∞ P(z) sin(k₃ z) dz.
        let im = -2.0 * integrate(|z| partial(z) * (k[2] * z).sin(), 0.0, 60.0, 1e-12, 1e-9).unwrap().value;
        let v = s.symbol(t, k);
        assert!(v.re.abs() < 1e-14);
        assert!((v.im - im).abs() < 1e-6 * im.abs(), "{} vs {im}", v.im);
    }
    // k_h = 0 convention.
    assert_eq!(s.symbol(1.0, [0.0, 0.0, 2.0]).norm(), 0.0);
}

#[test]
fn k_decay_exponents() {
    let ts = geometric_samples(1.0, 100.0, 6);
    for (s, expect) in [
        (spec(KernelKind::K).with_beta(2, 1), -2.0),
        (spec(KernelKind::K).with_beta(1, 1).with_gamma(1), -2.0),
        (spec(KernelKind::K).with_beta(1, 0), -1.0),
    ] {
        let f = fit_kernel_exponent(&s, INF, INF, &ts).unwrap();
        assert!((s.predicted_exponent(INF, INF) - expect).abs() < 1e-12);
        assert!((f.exponent - expect).abs() < 0.05, "{s:?}: {}", f.exponent);
    }
}

#[test]
fn k_norm_matches_pointwise_quadrature_for_l_infinity_of_k() {
    let v = kernel_norm(&spec(KernelKind::K), 2.0, INF, INF).unwrap();
    let o = eval_kernel(&spec(KernelKind::K), 2.0, [0.0; 3]).unwrap();
    assert_eq!(v, o);
}

#[test]
fn k_partial_fourier_norm_matches_direct_sum() {
    // Compare ‖∂₁K(t)‖ restricted to the midplane with a direct real-space
    // evaluation of ∂₁K by finite differences of the pointwise quadrature.
    let t = 1.0;
    let s = spec(KernelKind::K).with_beta(1, 0);
    let sup = kernel_norm(&s, t, INF, INF).unwrap();
    let h = 1e-4;
    let mut best: f64 = 0.0;
    for i in 1..200 {
        let x = 0.02 * i as f64;
        let d = (eval_kernel(&spec(KernelKind::K), t, [x + h, 0.0, 1e-9]).unwrap()
            - eval_kernel(&spec(KernelKind::K), t, [x - h, 0.0, 1e-9]).unwrap())
            / (2.0 * h);
        best = best.max(d.abs());
    }
    // Suprema are grid maxima of the partial-Fourier field, spacing √t/8.
    assert!((sup - best).abs() < 5e-3 * best, "{sup} vs {best}");
}

#[test]
fn convolution_examples() {
    let g = make_grid(2.0 * PI, 2.0 * PI, [16, 16, 16]).unwrap();
    let k = [2.0, -1.0, 3.0];
    let f = VectorField::from_fn(&g, |x| [(k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).cos(), 0.0, 0.0]);
    let t = 0.05;
    let c = convolve_kernel(&spec(KernelKind::Gauss3), &f, t).unwrap();
    let e = f.scaled((-t * 14.0).exp());
    assert!(c.sub(&e).unwrap().max_abs() < 1e-13);

    // Δ(N(t) * f) = −e^{tΔ} f for mean-zero f.
    let f = VectorField::from_fn(&g, |x| [(x[0]).sin() * (2.0 * x[2]).cos() + (-(x[1] * x[1])).exp() - 0.2822, 0.0, 0.0]);
    let mut fs = f.spectral();
    fs.component_mut(0)[[0, 0, 0]] = 0.0.into();
    let f = fs.to_real();
    let n = convolve_kernel(&spec(KernelKind::N), &f, 0.3).unwrap();
    let mut lap = n.spectral();
    lap.apply(|k| (-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2])).into());
    let heat = convolve_kernel(&spec(KernelKind::Gauss3), &f, 0.3).unwrap();
    assert!(lap.to_real().add(&heat).unwrap().max_abs() < 1e-10);

    let z = VectorField::zeros(&g);
    assert_eq!(convolve_kernel(&spec(KernelKind::K), &z, 1.0).unwrap().max_abs(), 0.0);
    // Nonzero mean under a singular symbol.
    let one = VectorField::from_fn(&g, |_| [1.0, 0.0, 0.0]);
    assert!(convolve_kernel(&spec(KernelKind::N), &one, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauss_semigroup_on_grid(t1 in 0.01f64..0.5, t2 in 0.01f64..0.5, seed in 0u64..1000) {
        let g = make_grid(2.0 * PI, 2.0 * PI, [8, 8, 8]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = VectorField::from_fn(&g, |x| [c[0] * x[0].sin() + c[1] * (x[1] + x[2]).cos(), c[2] * (2.0 * x[2]).sin(), c[3] + c[4] * x[0].cos() * c[5]]);
        let s = spec(KernelKind::Gauss3);
        let a = convolve_kernel(&s, &convolve_kernel(&s, &f, t1).unwrap(), t2).unwrap();
        let b = convolve_kernel(&s, &f, t1 + t2).unwrap();
        prop_assert!(a.sub(&b).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn k_symbol_positive(k1 in -5.0f64..5.0, k2 in -5.0f64..5.0, k3 in -5.0f64..5.0, t in 0.0f64..3.0) {
        prop_assume!(k1 * k1 + k2 * k2 + k3 * k3 > 1e-6);
        let v = spec(KernelKind::K).symbol(t, [k1, k2, k3]);
        prop_assert!(v.re > 0.0);
    }
}
