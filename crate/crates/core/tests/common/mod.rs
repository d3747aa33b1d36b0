#![allow(dead_code)]

use std::f64::consts::PI;

use anismhd::grid::Grid;
use ndarray::Array3;

/// Heat kernel convolution on the periodic box by direct summation over grid
/// points, with the 3×3×3 nearest periodic images of the Gaussian.
pub fn periodic_heat_convolution(grid: &Grid, f: &Array3<f64>, t: f64) -> Array3<f64> {
    let n = grid.n();
    let h = grid.spacing();
    let l = grid.lengths();
    // the 3D Gaussian and its image sum factor by axis
    let tables: Vec<Vec<f64>> = (0..3)
        .map(|a| {
            (0..n[a])
                .map(|d| {
                    let mut x = d as f64 * h[a];
                    if x >= l[a] / 2.0 {
                        x -= l[a];
                    }
                    (-1..=1)
                        .map(|m| {
                            let y = x + m as f64 * l[a];
                            (-y * y / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
                        })
                        .sum::<f64>()
                })
                .collect()
        })
        .collect();
    let w = grid.cell_volume();
    let mut out = Array3::<f64>::zeros(f.dim());
    for ((i, j, k), o) in out.indexed_iter_mut() {
        let mut acc = 0.0;
        for ((p, q, r), v) in f.indexed_iter() {
            let gi = tables[0][(i + n[0] - p) % n[0]];
            let gj = tables[1][(j + n[1] - q) % n[1]];
            let gk = tables[2][(k + n[2] - r) % n[2]];
            acc += gi * gj * gk * v;
        }
        *o = acc * w;
    }
    out
}

pub fn relative_l2(a: &Array3<f64>, b: &Array3<f64>) -> f64 {
    let num: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}
