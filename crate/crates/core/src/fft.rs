//! Real-to-complex 3D transforms on row-major arrays (z fastest).
//!
//! Forward transforms are unnormalized (f̂(k) = Σ f e^{-ik·x}); the inverse
//! divides by the number of points.

use std::sync::Arc;

use ndarray::{Array2, Array3, ArrayView3, ArrayViewMut2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

pub struct Fft3 {
    n: [usize; 3],
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(n: [usize; 3]) -> Self {
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        Fft3 {
            n,
            r2c: rp.plan_fft_forward(n[2]),
            c2r: rp.plan_fft_inverse(n[2]),
            fwd_x: cp.plan_fft_forward(n[0]),
            inv_x: cp.plan_fft_inverse(n[0]),
            fwd_y: cp.plan_fft_forward(n[1]),
            inv_y: cp.plan_fft_inverse(n[1]),
        }
    }

    pub fn forward(&self, input: ArrayView3<f64>) -> Array3<Complex64> {
        let [nx, ny, nz] = self.n;
        let nzc = nz / 2 + 1;
        assert_eq!(input.dim(), (nx, ny, nz));
        let mut out = Array3::<Complex64>::zeros((nx, ny, nzc));
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .zip(input.axis_iter(Axis(0)).into_par_iter())
            .for_each(|(mut oslab, islab)| {
                let mut buf = self.r2c.make_input_vec();
                let mut spec = self.r2c.make_output_vec();
                let mut scratch = self.r2c.make_scratch_vec();
                for j in 0..ny {
                    for (b, v) in buf.iter_mut().zip(islab.row(j).iter()) {
                        *b = *v;
                    }
                    self.r2c
                        .process_with_scratch(&mut buf, &mut spec, &mut scratch)
                        .expect("r2c lengths match plan");
                    for (o, s) in oslab.row_mut(j).iter_mut().zip(spec.iter()) {
                        *o = *s;
                    }
                }
                transform_columns(&mut oslab, &*self.fwd_y);
            });
        out.axis_iter_mut(Axis(1)).into_par_iter().for_each(|mut plane| {
            transform_columns(&mut plane, &*self.fwd_x);
        });
        out
    }

    pub fn inverse(&self, spec: ArrayView3<Complex64>) -> Array3<f64> {
        let [nx, ny, nz] = self.n;
        let nzc = nz / 2 + 1;
        assert_eq!(spec.dim(), (nx, ny, nzc));
        let mut work = spec.to_owned();
        work.axis_iter_mut(Axis(1)).into_par_iter().for_each(|mut plane| {
            transform_columns(&mut plane, &*self.inv_x);
        });
        let scale = 1.0 / (nx * ny * nz) as f64;
        let mut out = Array3::<f64>::zeros((nx, ny, nz));
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .zip(work.axis_iter_mut(Axis(0)).into_par_iter())
            .for_each(|(mut oslab, mut wslab)| {
                transform_columns(&mut wslab, &*self.inv_y);
                let mut buf = self.c2r.make_input_vec();
                let mut real = self.c2r.make_output_vec();
                let mut scratch = self.c2r.make_scratch_vec();
                for j in 0..ny {
                    for (b, v) in buf.iter_mut().zip(wslab.row(j).iter()) {
                        *b = *v;
                    }
                    buf[0].im = 0.0;
                    buf[nzc - 1].im = 0.0;
                    self.c2r
                        .process_with_scratch(&mut buf, &mut real, &mut scratch)
                        .expect("c2r lengths match plan");
                    for (o, r) in oslab.row_mut(j).iter_mut().zip(real.iter()) {
                        *o = r * scale;
                    }
                }
            });
        out
    }
}

/// In-place complex FFT of every column `a[.., c]` of a (len, lanes) view.
fn transform_columns(a: &mut ArrayViewMut2<Complex64>, plan: &dyn Fft<f64>) {
    let (len, lanes) = a.dim();
    debug_assert_eq!(len, plan.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); len * lanes];
    for (c, col) in a.axis_iter(Axis(1)).enumerate() {
        for (b, v) in buf[c * len..(c + 1) * len].iter_mut().zip(col.iter()) {
            *b = *v;
        }
    }
    plan.process(&mut buf);
    for (c, mut col) in a.axis_iter_mut(Axis(1)).enumerate() {
        for (v, b) in col.iter_mut().zip(buf[c * len..(c + 1) * len].iter()) {
            *v = *b;
        }
    }
}

/// Unnormalized 2D complex inverse transform (sum of f̂ e^{+ik·x}) of an
/// (n0, n1) array, in place.
pub fn ifft2_unnormalized(a: &mut Array2<Complex64>) {
    let (n0, n1) = a.dim();
    let mut planner = FftPlanner::<f64>::new();
    let p0 = planner.plan_fft_inverse(n0);
    let p1 = planner.plan_fft_inverse(n1);
    let mut v = a.view_mut();
    transform_columns(&mut v, &*p0);
    let mut t = a.view_mut().reversed_axes();
    transform_columns(&mut t, &*p1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn brute_dft(a: &Array3<f64>) -> Array3<Complex64> {
        let (nx, ny, nz) = a.dim();
        let mut out = Array3::zeros((nx, ny, nz / 2 + 1));
        for ((i, j, l), o) in out.indexed_iter_mut() {
            let mut s = Complex64::new(0.0, 0.0);
            for ((x, y, z), v) in a.indexed_iter() {
                let ph = -2.0 * PI * ((i * x) as f64 / nx as f64 + (j * y) as f64 / ny as f64 + (l * z) as f64 / nz as f64);
                s += v * Complex64::from_polar(1.0, ph);
            }
            *o = s;
        }
        out
    }

    fn sample(n: [usize; 3]) -> Array3<f64> {
        Array3::from_shape_fn((n[0], n[1], n[2]), |(i, j, l)| {
            ((i * 7 + j * 3 + l * 11) % 13) as f64 / 13.0 - 0.4 + 0.1 * (i as f64).sin()
        })
    }

    #[test]
    fn forward_matches_direct_sum() {
        let n = [8, 6, 10];
        let a = sample(n);
        let f = Fft3::new(n).forward(a.view());
        let d = brute_dft(&a);
        let err = (&f - &d).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn round_trip() {
        let n = [12, 8, 16];
        let a = sample(n);
        let plan = Fft3::new(n);
        let b = plan.inverse(plan.forward(a.view()).view());
        let err = (&a - &b).iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }

    #[test]
    fn ifft2_of_delta_is_constant() {
        let mut a = Array2::<Complex64>::zeros((4, 6));
        a[[0, 0]] = Complex64::new(1.0, 0.0);
        ifft2_unnormalized(&mut a);
        assert!(a.iter().all(|c| (c.re - 1.0).abs() < 1e-14 && c.im.abs() < 1e-14));
    }
}
