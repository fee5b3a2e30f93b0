//! Binary snapshot format for fields and states.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic       4 bytes  "GM3S"
//! version     u32      1
//! dim         u32      1 or 2
//! n           u32 x dim
//! length      f64 x dim
//! time        f64
//! step        u64      time-step index, so resumed runs replay the same time grid
//! components  u32      1 for a bare field, 3 for a (u, v, w) state
//! values      f64 x components x cells, component-major, row-major cells
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Dim, Field, Grid};

pub const MAGIC: &[u8; 4] = b"GM3S";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub time: f64,
    pub step: u64,
    pub fields: Vec<Field>,
}

pub fn write_snapshot<W: Write>(out: &mut W, snap: &Snapshot) -> std::io::Result<()> {
    let g = &snap.grid;
    let axes = g.dim().count();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(axes as u32).to_le_bytes())?;
    for ax in 0..axes {
        out.write_all(&(g.n(ax) as u32).to_le_bytes())?;
    }
    for ax in 0..axes {
        out.write_all(&g.length(ax).to_le_bytes())?;
    }
    out.write_all(&snap.time.to_le_bytes())?;
    out.write_all(&snap.step.to_le_bytes())?;
    out.write_all(&(snap.fields.len() as u32).to_le_bytes())?;
    for f in &snap.fields {
        for v in f.values() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn encode(snap: &Snapshot) -> Vec<u8> {
    let mut buf = Vec::new();
    write_snapshot(&mut buf, snap).expect("writing to a Vec cannot fail");
    buf
}

fn take<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    input
        .read_exact(&mut b)
        .map_err(|e| Error::Snapshot(format!("truncated input: {e}")))?;
    Ok(b)
}

fn take_u32<R: Read>(input: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(take(input)?))
}

fn take_f64<R: Read>(input: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(take(input)?))
}

pub fn read_snapshot<R: Read>(input: &mut R) -> Result<Snapshot> {
    let magic: [u8; 4] = take(input)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot(format!("bad magic {magic:?}")));
    }
    let version = take_u32(input)?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let dim = match take_u32(input)? {
        1 => Dim::One,
        2 => Dim::Two,
        d => return Err(Error::Snapshot(format!("unsupported dimension {d}"))),
    };
    let axes = dim.count();
    let mut n = [1usize; 2];
    let mut length = [1.0f64; 2];
    for slot in n.iter_mut().take(axes) {
        *slot = take_u32(input)? as usize;
    }
    for slot in length.iter_mut().take(axes) {
        *slot = take_f64(input)?;
    }
    let grid = Grid::new(dim, n, length)?;
    let time = take_f64(input)?;
    let step = u64::from_le_bytes(take(input)?);
    let components = take_u32(input)? as usize;
    if components == 0 || components > 16 {
        return Err(Error::Snapshot(format!("implausible component count {components}")));
    }
    let mut fields = Vec::with_capacity(components);
    for _ in 0..components {
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            values.push(take_f64(input)?);
        }
        fields.push(Field::new(grid, values)?);
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing).map_err(|e| Error::Snapshot(e.to_string()))? != 0 {
        return Err(Error::Snapshot("trailing bytes after payload".into()));
    }
    Ok(Snapshot {
        grid,
        time,
        step,
        fields,
    })
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    read_snapshot(&mut &bytes[..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_fixed() {
        let g = Grid::new_1d(3, 2.0).unwrap();
        let snap = Snapshot {
            grid: g,
            time: 0.5,
            step: 7,
            fields: vec![Field::new(g, vec![1.0, 2.0, 3.0]).unwrap()],
        };
        let bytes = encode(&snap);
        assert_eq!(&bytes[0..4], b"GM3S");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &3u32.to_le_bytes());
        assert_eq!(&bytes[16..24], &2.0f64.to_le_bytes());
        assert_eq!(&bytes[24..32], &0.5f64.to_le_bytes());
        assert_eq!(&bytes[32..40], &7u64.to_le_bytes());
        assert_eq!(&bytes[40..44], &1u32.to_le_bytes());
        assert_eq!(bytes.len(), 44 + 3 * 8);
        assert_eq!(decode(&bytes).unwrap(), snap);
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode(b"NOPE").is_err());
        let g = Grid::new_2d(3, 4, 1.0, 1.0).unwrap();
        let snap = Snapshot {
            grid: g,
            time: 0.0,
            step: 0,
            fields: vec![Field::constant(g, 1.0)],
        };
        let mut bytes = encode(&snap);
        bytes.pop();
        assert!(decode(&bytes).is_err());
        let mut bytes = encode(&snap);
        bytes.push(0);
        assert!(decode(&bytes).is_err());
        let mut bytes = encode(&snap);
        bytes[4] = 9;
        assert!(decode(&bytes).is_err());
    }
}
