//! Binary field snapshots.
//!
//! Layout (all little endian):
//!
//! | bytes | content                                        |
//! |-------|------------------------------------------------|
//! | 4     | magic `NSF1`                                   |
//! | 4     | `u32` format version (currently 1)             |
//! | 8     | `f64` box length `L`                           |
//! | 4     | `u32` points per side `N`                      |
//! | 4     | `u32` dimension (2 or 3)                       |
//! | 4     | `u32` number of components                     |
//! | 1     | representation: 0 physical, 1 spectral        |
//! | 1     | divergence-free flag (0 or 1)                  |
//! | 8     | `f64` time stamp                               |
//! | ...   | component-major payload                        |
//!
//! Physical payloads hold `N^d` `f64` values per component in row-major order
//! (last axis fastest). Spectral payloads hold `N^(d-1) (N/2+1)` complex
//! coefficients per component as `(re, im)` pairs of `f64`, in the half
//! storage order of [`TorusGrid`].

use num_complex::Complex64;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::SnapshotError;
use crate::field::{Field, FieldData, Representation};
use crate::grid::TorusGrid;

pub const MAGIC: &[u8; 4] = b"NSF1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 4 + 4 + 4 + 1 + 1 + 8;

pub fn encode(field: &Field) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * g.spectral_len() * field.ncomp());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&g.length().to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(field.ncomp() as u32).to_le_bytes());
    let repr = match field.representation() {
        Representation::Physical => 0u8,
        Representation::Spectral => 1u8,
    };
    out.push(repr);
    out.push(field.divergence_free() as u8);
    out.extend_from_slice(&field.time().to_le_bytes());
    match field.data() {
        FieldData::Physical(comps) => {
            for v in comps.iter().flatten() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        FieldData::Spectral(comps) => {
            for z in comps.iter().flatten() {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(SnapshotError::BadHeader(format!(
                "truncated: need {end} bytes, have {}",
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }
}

pub fn decode(bytes: &[u8]) -> Result<Field, SnapshotError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).map_err(|_| SnapshotError::BadMagic)? != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(SnapshotError::BadVersion(version));
    }
    let length = r.f64()?;
    let n = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let ncomp = r.u32()? as usize;
    let repr = r.u8()?;
    let divfree = r.u8()?;
    let time = r.f64()?;
    let grid = TorusGrid::new(length, n, dim)?;
    if divfree > 1 {
        return Err(SnapshotError::BadHeader(format!(
            "divergence flag {divfree}"
        )));
    }
    let mut field = match repr {
        0 => {
            let mut comps = Vec::with_capacity(ncomp);
            for _ in 0..ncomp {
                let c = (0..grid.physical_len())
                    .map(|_| r.f64())
                    .collect::<Result<Vec<_>, _>>()?;
                comps.push(c);
            }
            Field::from_physical(grid, comps)?
        }
        1 => {
            let mut comps = Vec::with_capacity(ncomp);
            for _ in 0..ncomp {
                let c = (0..grid.spectral_len())
                    .map(|_| Ok(Complex64::new(r.f64()?, r.f64()?)))
                    .collect::<Result<Vec<_>, SnapshotError>>()?;
                comps.push(c);
            }
            Field::from_spectral(grid, comps)?
        }
        other => {
            return Err(SnapshotError::BadHeader(format!(
                "representation tag {other}"
            )))
        }
    };
    if r.pos != bytes.len() {
        return Err(SnapshotError::BadHeader(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    field.set_time(time);
    field.set_divergence_free(divfree == 1);
    Ok(field)
}

pub fn write_snapshot(path: &Path, field: &Field) -> Result<(), SnapshotError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(field))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Field, SnapshotError> {
    decode(&fs::read(path)?)
}

/// File name of the `index`-th snapshot of a trajectory directory.
pub fn snapshot_name(index: usize) -> String {
    format!("snap_{index:06}.nsf")
}

/// All snapshot files of a directory, sorted by name.
pub fn list_snapshots(dir: &Path) -> Result<Vec<std::path::PathBuf>, SnapshotError> {
    let mut out: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "nsf"))
        .collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_divfree_field;

    #[test]
    fn spectral_round_trip_is_bit_exact() {
        let g = TorusGrid::new(3.0, 8, 3).unwrap();
        let f = random_divfree_field(&g, 9, 1.0).unwrap().with_time(0.75);
        let back = decode(&encode(&f)).unwrap();
        assert_eq!(back, f);
        assert!(back.divergence_free());
    }

    #[test]
    fn physical_round_trip_and_file() {
        let g = TorusGrid::new(2.0, 6, 2).unwrap();
        let f = Field::from_fn(g, 1, |x| [x[0] * x[1], 0.0, 0.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(snapshot_name(3));
        write_snapshot(&p, &f).unwrap();
        assert_eq!(read_snapshot(&p).unwrap(), f);
        assert_eq!(list_snapshots(dir.path()).unwrap(), vec![p]);
    }

    #[test]
    fn rejects_corrupt_input() {
        let g = TorusGrid::new(2.0, 4, 2).unwrap();
        let bytes = encode(&Field::zeros(g, 2));
        assert!(matches!(decode(b"XXXX"), Err(SnapshotError::BadMagic)));
        let mut v = bytes.clone();
        v[4] = 7;
        assert!(matches!(decode(&v), Err(SnapshotError::BadVersion(7))));
        assert!(matches!(
            decode(&bytes[..bytes.len() - 1]),
            Err(SnapshotError::BadHeader(_))
        ));
        let mut v = bytes.clone();
        v.push(0);
        assert!(matches!(decode(&v), Err(SnapshotError::BadHeader(_))));
    }
}
