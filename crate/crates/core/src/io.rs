//! OHFL binary files: single fields (`.ohfl`) and Euler trajectories (`.ohflt`).
//!
//! Header: magic `OHFL`, then little-endian `u32` version, backend (0 torus,
//! 1 sphere), `d`, `N` or `L_max`, component count. The body is `(re, im)`
//! `f64` pairs, one block per component. Torus blocks are in FFT index order
//! (row-major in `k`); sphere blocks are `(l, m)` lexicographic, curl block
//! first. A trajectory header is followed by `dt`, the snapshot stride, the
//! valid flag and the snapshot count, then per snapshot the time, the velocity
//! blocks and the pressure block.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::euler::EulerTrajectory;
use crate::fields::AnyField;
use crate::sphere::{SphereBasis, SphereField};
use crate::torus::{TorusField, TorusGrid, TorusScalar};

pub const MAGIC: &[u8; 4] = b"OHFL";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub version: u32,
    pub backend: u32,
    pub d: u32,
    pub size: u32,
    pub components: u32,
}

impl Header {
    fn write(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [self.version, self.backend, self.d, self.size, self.components] {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    fn read(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| Error::Format("missing header".into()))?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let h = Header { version: u32_(r)?, backend: u32_(r)?, d: u32_(r)?, size: u32_(r)?, components: u32_(r)? };
        if h.version != VERSION {
            return Err(Error::Format(format!("unsupported version {}", h.version)));
        }
        Ok(h)
    }
}

fn truncated<E>(_: E) -> Error {
    Error::Format("truncated file".into())
}

fn u32_(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn u64_(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn f64_(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(u64_(r)?))
}

fn write_block(w: &mut impl Write, c: &[Complex64]) -> Result<()> {
    let mut buf = Vec::with_capacity(16 * c.len());
    for z in c {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_block(r: &mut impl Read, len: usize) -> Result<Vec<Complex64>> {
    let mut buf = vec![0u8; 16 * len];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(buf
        .chunks_exact(16)
        .map(|b| {
            let re = f64::from_le_bytes(b[..8].try_into().unwrap());
            let im = f64::from_le_bytes(b[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect())
}

fn torus_header(grid: &TorusGrid, components: usize) -> Header {
    Header { version: VERSION, backend: 0, d: grid.d() as u32, size: grid.n() as u32, components: components as u32 }
}

pub fn write_field(w: &mut impl Write, field: &AnyField) -> Result<()> {
    match field {
        AnyField::Torus(f) => {
            torus_header(&f.grid, f.comps.len()).write(w)?;
            for c in &f.comps {
                write_block(w, c)?;
            }
        }
        AnyField::Sphere(f) => {
            let h = Header { version: VERSION, backend: 1, d: 2, size: f.basis.l_max() as u32, components: 2 };
            h.write(w)?;
            write_block(w, &f.curl)?;
            write_block(w, &f.grad)?;
        }
    }
    Ok(())
}

pub fn read_field(r: &mut impl Read) -> Result<AnyField> {
    let h = Header::read(r)?;
    match h.backend {
        0 => {
            let grid = TorusGrid::new(h.d as usize, h.size as usize)?;
            if h.components != h.d {
                return Err(Error::Format(format!("{} components for d = {}", h.components, h.d)));
            }
            let comps = (0..h.components).map(|_| read_block(r, grid.len())).collect::<Result<_>>()?;
            Ok(AnyField::Torus(TorusField { grid, comps }))
        }
        1 => {
            if h.d != 2 || h.components != 2 {
                return Err(Error::Format("sphere files carry d = 2 and two blocks".into()));
            }
            let basis = Arc::new(SphereBasis::new(h.size as usize)?);
            let n = basis.n_coeffs();
            let curl = read_block(r, n)?;
            let grad = read_block(r, n)?;
            Ok(AnyField::Sphere(SphereField::from_coeffs(basis, curl, grad)?))
        }
        b => Err(Error::Format(format!("unknown backend tag {b}"))),
    }
}

pub fn save_field(path: impl AsRef<Path>, field: &AnyField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<AnyField> {
    read_field(&mut BufReader::new(File::open(path)?))
}

pub fn write_trajectory(w: &mut impl Write, traj: &EulerTrajectory) -> Result<()> {
    let grid = traj.velocities.first().map(|v| v.grid).ok_or(Error::EmptySet)?;
    torus_header(&grid, 3).write(w)?;
    w.write_all(&traj.dt.to_le_bytes())?;
    w.write_all(&(traj.stride as u32).to_le_bytes())?;
    w.write_all(&[traj.valid as u8])?;
    w.write_all(&(traj.len() as u64).to_le_bytes())?;
    for ((t, v), p) in traj.times.iter().zip(&traj.velocities).zip(&traj.pressures) {
        w.write_all(&t.to_le_bytes())?;
        for c in &v.comps {
            write_block(w, c)?;
        }
        write_block(w, &p.coeffs)?;
    }
    Ok(())
}

pub fn read_trajectory(r: &mut impl Read) -> Result<EulerTrajectory> {
    let h = Header::read(r)?;
    if h.backend != 0 || h.d != 2 || h.components != 3 {
        return Err(Error::Format("trajectories hold a 2-torus velocity and pressure".into()));
    }
    let grid = TorusGrid::new(2, h.size as usize)?;
    let dt = f64_(r)?;
    let stride = u32_(r)? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag).map_err(truncated)?;
    let count = u64_(r)? as usize;
    let mut traj = EulerTrajectory {
        n: grid.n(),
        dt,
        stride,
        times: Vec::with_capacity(count.min(1 << 12)),
        velocities: Vec::with_capacity(count.min(1 << 12)),
        pressures: Vec::with_capacity(count.min(1 << 12)),
        energies: Vec::with_capacity(count.min(1 << 12)),
        dealias: true,
        valid: flag[0] != 0,
        failure: None,
    };
    for _ in 0..count {
        traj.times.push(f64_(r)?);
        let comps = vec![read_block(r, grid.len())?, read_block(r, grid.len())?];
        let v = TorusField { grid, comps };
        traj.energies.push(0.5 * v.inner(&v));
        traj.velocities.push(v);
        traj.pressures.push(TorusScalar { grid, coeffs: read_block(r, grid.len())? });
    }
    Ok(traj)
}

pub fn save_trajectory(path: impl AsRef<Path>, traj: &EulerTrajectory) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_trajectory(&mut w, traj)?;
    w.flush()?;
    Ok(())
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<EulerTrajectory> {
    read_trajectory(&mut BufReader::new(File::open(path)?))
}
