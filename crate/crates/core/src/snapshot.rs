//! JFLD field snapshots.
//!
//! Layout, all little-endian: magic `JFLD`, `u32` version (1), four `u32`
//! grid dimensions, `u32` component count (1 for scalar fields, 4 for form
//! fields), then `f64` samples in grid order. Form fields interleave
//! `a11, a22, Re a12, Im a12` per point.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::grid::{FormField, GridError, GridShape, ScalarField};
use crate::hermitian::HermitianMatrix2;

pub const MAGIC: [u8; 4] = *b"JFLD";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a JFLD file (magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported JFLD version {0}")]
    BadVersion(u32),
    #[error("unsupported component count {0}")]
    BadComponents(u32),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("expected a {expected} snapshot")]
    WrongKind { expected: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Scalar(ScalarField),
    Form(FormField),
}

impl Snapshot {
    pub fn shape(&self) -> GridShape {
        match self {
            Snapshot::Scalar(f) => f.shape(),
            Snapshot::Form(f) => f.shape(),
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField, SnapshotError> {
        match self {
            Snapshot::Scalar(f) => Ok(f),
            Snapshot::Form(_) => Err(SnapshotError::WrongKind { expected: "scalar" }),
        }
    }

    pub fn into_form(self) -> Result<FormField, SnapshotError> {
        match self {
            Snapshot::Form(f) => Ok(f),
            Snapshot::Scalar(_) => Err(SnapshotError::WrongKind { expected: "form" }),
        }
    }
}

fn write_header<W: Write>(w: &mut W, shape: GridShape, components: u32) -> io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for n in shape.dims() {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    w.write_all(&components.to_le_bytes())
}

pub fn write_scalar<W: Write>(w: &mut W, f: &ScalarField) -> io::Result<()> {
    write_header(w, f.shape(), 1)?;
    for v in f.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_form<W: Write>(w: &mut W, f: &FormField) -> io::Result<()> {
    write_header(w, f.shape(), 4)?;
    for m in f.data() {
        for v in m.components() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read<R: Read>(r: &mut R) -> Result<Snapshot, SnapshotError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(SnapshotError::BadVersion(version));
    }
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = read_u32(r)? as usize;
    }
    let shape = GridShape::new(dims)?;
    match read_u32(r)? {
        1 => {
            let data = (0..shape.len()).map(|_| read_f64(r)).collect::<io::Result<Vec<_>>>()?;
            Ok(Snapshot::Scalar(ScalarField::from_vec(shape, data)?))
        }
        4 => {
            let data = (0..shape.len())
                .map(|_| {
                    let mut c = [0.0; 4];
                    for v in &mut c {
                        *v = read_f64(r)?;
                    }
                    Ok(HermitianMatrix2::from_components(c))
                })
                .collect::<io::Result<Vec<_>>>()?;
            Ok(Snapshot::Form(FormField::from_vec(shape, data)?))
        }
        other => Err(SnapshotError::BadComponents(other)),
    }
}

pub fn save_scalar(path: impl AsRef<Path>, f: &ScalarField) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_scalar(&mut w, f)?;
    w.flush()
}

pub fn save_form(path: impl AsRef<Path>, f: &FormField) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_form(&mut w, f)?;
    w.flush()
}

pub fn load(path: impl AsRef<Path>) -> Result<Snapshot, SnapshotError> {
    read(&mut BufReader::new(File::open(path)?))
}
