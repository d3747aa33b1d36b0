//! Anisotropic Lebesgue norms L^p_h L^q_v on grid data.

use ndarray::{Array3, ArrayView3, Axis};

use crate::field::VectorField;
use crate::grid::Grid;
use crate::{Error, Result};

/// Spatial weight |x|^m or |x_h|^m measured from the box center.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Weight {
    Full,
    Horizontal,
}

/// Which components of a vector field a norm measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Components {
    All,
    Horizontal,
    Vertical,
    Single(usize),
}

impl Components {
    pub fn indices(&self) -> &'static [usize] {
        match self {
            Components::All => &[0, 1, 2],
            Components::Horizontal => &[0, 1],
            Components::Vertical | Components::Single(2) => &[2],
            Components::Single(0) => &[0],
            Components::Single(1) => &[1],
            Components::Single(_) => &[],
        }
    }

    pub fn suffix(&self) -> String {
        match self {
            Components::All => String::new(),
            Components::Horizontal => "h".into(),
            Components::Vertical => "3".into(),
            Components::Single(c) => format!("{}", c + 1),
        }
    }
}

/// Parse an exponent: a number ≥ 1 or `inf`.
pub fn parse_exponent(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase();
    let v = if t == "inf" || t == "infinity" || t == "∞" {
        f64::INFINITY
    } else {
        t.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("exponent '{s}'")))?
    };
    check_exponent(v)?;
    Ok(v)
}

pub fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("exponent {p} outside [1, inf]")))
    }
}

pub fn format_exponent(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

/// 1/p with 1/∞ = 0.
pub fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

fn power_sum<'a>(vals: impl Iterator<Item = &'a f64>, p: f64, h: f64) -> f64 {
    if p.is_infinite() {
        vals.fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        vals.map(|v| v.abs()).sum::<f64>() * h
    } else if p == 2.0 {
        (vals.map(|v| v * v).sum::<f64>() * h).sqrt()
    } else {
        (vals.map(|v| v.abs().powf(p)).sum::<f64>() * h).powf(1.0 / p)
    }
}

/// ‖ ‖f(x_h, ·)‖_{L^q_v} ‖_{L^p_h} by uniform-grid sums; infinite exponents use max.
pub fn aniso_norm(grid: &Grid, f: ArrayView3<f64>, p: f64, q: f64) -> f64 {
    let [hx, hy, hz] = grid.spacing();
    let (nx, ny, _) = f.dim();
    let mut cols = Vec::with_capacity(nx * ny);
    for row in f.lanes(Axis(2)) {
        cols.push(power_sum(row.iter(), q, hz));
    }
    power_sum(cols.iter(), p, hx * hy)
}

/// Norm of the pointwise magnitude of the selected components.
pub fn field_norm(f: &VectorField, comps: &[usize], p: f64, q: f64) -> f64 {
    if comps.len() == 1 {
        aniso_norm(f.grid(), f.component(comps[0]).view(), p, q)
    } else {
        aniso_norm(f.grid(), f.magnitude(comps).view(), p, q)
    }
}

/// Weight array |x|^m or |x_h|^m on the grid.
pub fn weight_array(grid: &Grid, weight: Weight, m: u32) -> Array3<f64> {
    Array3::from_shape_fn(grid.real_shape(), |(i, j, l)| {
        let x = grid.centered_coord(0, i);
        let y = grid.centered_coord(1, j);
        let r2 = match weight {
            Weight::Full => {
                let z = grid.centered_coord(2, l);
                x * x + y * y + z * z
            }
            Weight::Horizontal => x * x + y * y,
        };
        r2.sqrt().powi(m as i32)
    })
}

/// ‖ w^m |f| ‖_{L^p_h L^q_v} for the selected components.
pub fn weighted_norm(f: &VectorField, comps: &[usize], weight: Weight, m: u32, p: f64, q: f64) -> Result<f64> {
    if m > 1 {
        return Err(Error::Unsupported(format!("weight order {m}")));
    }
    if m == 0 {
        return Ok(field_norm(f, comps, p, q));
    }
    let mag = f.magnitude(comps) * weight_array(f.grid(), weight, m);
    Ok(aniso_norm(f.grid(), mag.view(), p, q))
}
