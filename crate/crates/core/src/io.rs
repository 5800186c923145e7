//! Binary field dumps with a JSON sidecar.
//!
//! Layout of the `.field` file, all little-endian:
//!
//! | offset | type     | content                          |
//! |--------|----------|----------------------------------|
//! | 0      | [u8; 8]  | magic `RELFLD01`                 |
//! | 8      | u64      | grid_n                           |
//! | 16     | f64      | box_l                            |
//! | 24     | u64      | component count (always 4)       |
//! | 32     | f32 × 2  | (re, im) pairs, row-major (x, y, z, component) |
//!
//! Values are stored as complex64 (two f32). The sidecar `<name>.json` holds
//! the same header fields plus free-form metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SpinorField};
use crate::real::Real;

pub const MAGIC: &[u8; 8] = b"RELFLD01";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub grid_n: usize,
    pub box_l: f64,
    pub components: usize,
    pub value_type: String,
    pub layout: String,
    pub norm: f64,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_field<T: Real>(path: &Path, f: &SpinorField<T>, metadata: serde_json::Value) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(f.grid.n() as u64).to_le_bytes())?;
    w.write_all(&f.grid.box_l().to_f64_lossy().to_le_bytes())?;
    w.write_all(&4u64.to_le_bytes())?;
    for idx in 0..f.grid.len() {
        for comp in &f.comps {
            let v = comp[idx];
            w.write_all(&(v.re.to_f64_lossy() as f32).to_le_bytes())?;
            w.write_all(&(v.im.to_f64_lossy() as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    let side = FieldSidecar {
        grid_n: f.grid.n(),
        box_l: f.grid.box_l().to_f64_lossy(),
        components: 4,
        value_type: "complex64".into(),
        layout: "row-major (x, y, z, component), little-endian".into(),
        norm: f.norm().to_f64_lossy(),
        metadata,
    };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn read_field<T: Real>(path: &Path) -> Result<SpinorField<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 32];
    r.read_exact(&mut head)?;
    if &head[0..8] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let n = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let l = f64::from_le_bytes(head[16..24].try_into().unwrap());
    let comps = u64::from_le_bytes(head[24..32].try_into().unwrap());
    if comps != 4 {
        return Err(Error::Format(format!("expected 4 components, found {comps}")));
    }
    let grid = Grid::new(n, T::lit(l))?;
    let mut f = SpinorField::zeros(grid);
    let mut buf = [0u8; 8];
    for idx in 0..grid.len() {
        for comp in f.comps.iter_mut() {
            r.read_exact(&mut buf)?;
            let re = f32::from_le_bytes(buf[0..4].try_into().unwrap());
            let im = f32::from_le_bytes(buf[4..8].try_into().unwrap());
            comp[idx] = Complex::new(T::lit(re as f64), T::lit(im as f64));
        }
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after field data".into()));
    }
    Ok(f)
}
