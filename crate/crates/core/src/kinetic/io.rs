//! Snapshot files.
//!
//! CSV: `#` header lines with t, grid sizes, ε, η₀, d, k and mode, then rows
//! `ix,x1,x2,alpha,f` in row-major (x, α) order.
//!
//! Binary (little endian): magic `SOKF`, u32 version, f64 t, u32 dim,
//! u32 n_x[2], f64 L[2], u32 n_alpha, f64 ε, u8 η₀, f64 d, f64 k, u8 mode,
//! then the f64 samples in row-major (x, α) order.

use std::io::{Read, Write};
use std::path::Path;

use super::{KineticField, KineticParams, Mode};
use crate::error::{Error, Result};
use crate::sphere::{AngularGrid, TorusGrid};

const MAGIC: &[u8; 4] = b"SOKF";
const VERSION: u32 = 1;

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Nonlinear => "nonlinear",
        Mode::Linearized => "linearized",
    }
}

pub fn write_snapshot_csv(f: &KineticField, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let p = f.params();
    let n = f.grid_x().n_cells();
    writeln!(out, "# t={:.16e}", f.t())?;
    writeln!(out, "# dim={} n_x={:?} lengths={:?} n_alpha={}", f.grid_x().dim(), n, f.grid_x().lengths(), f.grid_w().n_modes())?;
    writeln!(
        out,
        "# epsilon={:.16e} eta0={} d={:.16e} k={:.16e} mode={}",
        p.epsilon,
        p.eta0,
        p.d,
        p.k,
        mode_name(f.mode())
    )?;
    writeln!(out, "ix,x1,x2,alpha,f")?;
    for i in 0..f.grid_x().len() {
        let x = f.grid_x().coords(i);
        for (a, v) in f.grid_w().nodes().iter().zip(f.column(i)) {
            writeln!(out, "{i},{:.16e},{:.16e},{:.16e},{:.16e}", x[0], x[1], a, v)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_snapshot_binary(f: &KineticField, path: &Path) -> Result<()> {
    let mut b: Vec<u8> = Vec::with_capacity(96 + 8 * f.values().len());
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&VERSION.to_le_bytes());
    b.extend_from_slice(&f.t().to_le_bytes());
    let gx = f.grid_x();
    b.extend_from_slice(&(gx.dim() as u32).to_le_bytes());
    for a in 0..2 {
        let n = gx.n_cells().get(a).copied().unwrap_or(1) as u32;
        b.extend_from_slice(&n.to_le_bytes());
    }
    for a in 0..2 {
        let l = gx.lengths().get(a).copied().unwrap_or(0.0);
        b.extend_from_slice(&l.to_le_bytes());
    }
    b.extend_from_slice(&(f.grid_w().n_modes() as u32).to_le_bytes());
    let p = f.params();
    b.extend_from_slice(&p.epsilon.to_le_bytes());
    b.push(p.eta0);
    b.extend_from_slice(&p.d.to_le_bytes());
    b.extend_from_slice(&p.k.to_le_bytes());
    b.push(matches!(f.mode(), Mode::Linearized) as u8);
    for v in f.values() {
        b.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, b)?;
    Ok(())
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.0
            .read_exact(&mut buf)
            .map_err(|_| Error::Parse("truncated snapshot".into()))?;
        Ok(buf)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }
}

/// Reads a binary snapshot. Linearised snapshots come back in nonlinear
/// mode because the SOH state is not stored.
pub fn read_snapshot_binary(path: &Path) -> Result<(KineticField, Mode)> {
    let bytes = std::fs::read(path)?;
    let mut c = Cursor(&bytes);
    if &c.take::<4>()? != MAGIC {
        return Err(Error::Parse("not a snapshot file".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported snapshot version {version}")));
    }
    let t = c.f64()?;
    let dim = c.u32()? as usize;
    let n = [c.u32()? as usize, c.u32()? as usize];
    let l = [c.f64()?, c.f64()?];
    let nw = c.u32()? as usize;
    let params = KineticParams {
        epsilon: c.f64()?,
        eta0: c.u8()?,
        d: c.f64()?,
        k: c.f64()?,
    };
    let mode = if c.u8()? == 1 { Mode::Linearized } else { Mode::Nonlinear };
    let gx = TorusGrid::new(&n[..dim], &l[..dim])?;
    let gw = AngularGrid::new(nw)?;
    let count = gx.len() * nw;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(c.f64()?);
    }
    let f = KineticField::new(gx, gw, values, params, Mode::Nonlinear)?.with_time(t);
    Ok((f, mode))
}
