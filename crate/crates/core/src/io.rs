//! Binary field container, JSON sidecars and atomic file writes.
//!
//! Layout (little endian): magic `ANIS`, version u32, N as 3×u32, (L_h, L_v)
//! as 2×f64, component count u32, then each component row-major (z fastest)
//! as f64.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array3;

use crate::field::{MhdState, VectorField};
use crate::grid::{make_grid, Grid};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ANIS";
pub const VERSION: u32 = 1;

/// Write `bytes` to `path` through a temporary file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Encode components of a grid into the container byte layout.
pub fn encode(grid: &Grid, comps: &[&Array3<f64>]) -> Vec<u8> {
    let n = grid.n();
    let mut out = Vec::with_capacity(40 + comps.len() * grid.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for ni in n {
        out.extend_from_slice(&(ni as u32).to_le_bytes());
    }
    out.extend_from_slice(&grid.l_h().to_le_bytes());
    out.extend_from_slice(&grid.l_v().to_le_bytes());
    out.extend_from_slice(&(comps.len() as u32).to_le_bytes());
    for c in comps {
        for v in c.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decoded container: grid and component arrays.
pub struct Container {
    pub grid: Arc<Grid>,
    pub comps: Vec<Array3<f64>>,
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<Container> {
    let bad = |reason: &str| Error::Container { path: path.to_path_buf(), reason: reason.to_string() };
    let mut pos = 0usize;
    let mut take = |k: usize| -> Result<&[u8]> {
        if pos + k > bytes.len() {
            return Err(bad("truncated"));
        }
        let s = &bytes[pos..pos + k];
        pos += k;
        Ok(s)
    };
    if take(4)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let u32le = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
    let f64le = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());
    let version = u32le(take(4)?);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let n = [u32le(take(4)?) as usize, u32le(take(4)?) as usize, u32le(take(4)?) as usize];
    let l_h = f64le(take(8)?);
    let l_v = f64le(take(8)?);
    let ncomp = u32le(take(4)?) as usize;
    let grid = make_grid(l_h, l_v, n)?;
    let npts = grid.len();
    let mut comps = Vec::with_capacity(ncomp);
    for _ in 0..ncomp {
        let raw = take(npts * 8)?;
        let data: Vec<f64> = raw.chunks_exact(8).map(f64le).collect();
        comps.push(Array3::from_shape_vec(grid.real_shape(), data).map_err(|e| bad(&e.to_string()))?);
    }
    if pos != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    Ok(Container { grid, comps })
}

pub fn write_container(path: &Path, grid: &Grid, comps: &[&Array3<f64>]) -> Result<()> {
    write_atomic(path, &encode(grid, comps))
}

pub fn read_container(path: &Path) -> Result<Container> {
    let bytes = fs::read(path)?;
    decode(&bytes, path)
}

/// Sidecar path: `<file>.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write an MHD state (u1 u2 u3 B1 B2 B3) with a sidecar recording t and `meta`.
pub fn write_state(path: &Path, state: &MhdState, meta: serde_json::Value) -> Result<()> {
    let u = state.u.components();
    let b = state.b.components();
    write_container(path, state.grid(), &[&u[0], &u[1], &u[2], &b[0], &b[1], &b[2]])?;
    let side = serde_json::json!({
        "format": "ANIS",
        "version": VERSION,
        "components": ["u1", "u2", "u3", "B1", "B2", "B3"],
        "t": state.t,
        "meta": meta,
    });
    write_atomic(&sidecar_path(path), serde_json::to_string_pretty(&side)?.as_bytes())
}

pub fn read_state(path: &Path) -> Result<MhdState> {
    let c = read_container(path)?;
    if c.comps.len() != 6 {
        return Err(Error::Container { path: path.to_path_buf(), reason: format!("{} components, expected 6", c.comps.len()) });
    }
    let side: serde_json::Value = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    let t = side["t"].as_f64().ok_or_else(|| Error::Container { path: path.to_path_buf(), reason: "sidecar lacks t".into() })?;
    let mut it = c.comps.into_iter();
    let mut next3 = || [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
    let u = VectorField::from_components(&c.grid, next3())?;
    let b = VectorField::from_components(&c.grid, next3())?;
    Ok(MhdState { u, b, t })
}
