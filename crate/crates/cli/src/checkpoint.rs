//! Bit-exact binary checkpoints.
//!
//! Layout: magic `BSQ1`, then little-endian `u32` version (= 1), `u64` grid
//! size, `f64` time, and three runs of `n` doubles: the `u`, `w`, and `f`
//! samples in that order.

use bsq_core::{Field, Grid, State};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 4] = b"BSQ1";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic bytes: not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    VersionMismatch(u32),
    #[error("file truncated mid-record")]
    TruncatedFile,
    #[error("checkpoint holds an invalid state: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn save_checkpoint(state: &State, f: &Field, path: &Path) -> Result<(), CheckpointError> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(state.grid().n() as u64).to_le_bytes())?;
    out.write_all(&state.t().to_le_bytes())?;
    for field in [state.u(), state.w(), f] {
        for &v in field.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(State, Field), CheckpointError> {
    let mut input = BufReader::new(std::fs::File::open(path)?);

    let mut magic = [0u8; 4];
    read_exact(&mut input, &mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != VERSION {
        return Err(CheckpointError::VersionMismatch(version));
    }
    let n = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let grid = Grid::new(n).map_err(|e| CheckpointError::Invalid(e.to_string()))?;
    let t = f64::from_le_bytes(read_array(&mut input)?);

    let read_field = |input: &mut BufReader<std::fs::File>| -> Result<Field, CheckpointError> {
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(f64::from_le_bytes(read_array(input)?));
        }
        Ok(Field::from_values(grid, values))
    };
    let u = read_field(&mut input)?;
    let w = read_field(&mut input)?;
    let f = read_field(&mut input)?;

    let state = State::new(u, w, t).map_err(|e| CheckpointError::Invalid(e.to_string()))?;
    Ok((state, f))
}

fn read_exact(input: &mut impl Read, buf: &mut [u8]) -> Result<(), CheckpointError> {
    input.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            CheckpointError::TruncatedFile
        } else {
            CheckpointError::Io(e)
        }
    })
}

fn read_array<const N: usize>(input: &mut impl Read) -> Result<[u8; N], CheckpointError> {
    let mut buf = [0u8; N];
    read_exact(input, &mut buf)?;
    Ok(buf)
}
