//! `HYLM` snapshot files.
//!
//! Layout (all little-endian): magic `HYLM`, format version `u32`, `nx`,
//! `ny`, `nz` as `u32`, then `l1`, `l2`, `eps`, `alpha`, `t` as `f64`,
//! followed by one physical-space `f64` array per component in x-fastest,
//! then y, then z order. The component count is implied by the file length.
//! Primitive-equation snapshots carry `eps = alpha = 0`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Field, Parity};
use crate::grid::{make_grid, Grid};

pub const MAGIC: [u8; 4] = *b"HYLM";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 3 * 4 + 5 * 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: u32,
    pub ny: u32,
    pub nz: u32,
    pub l1: f64,
    pub l2: f64,
    pub eps: f64,
    pub alpha: f64,
    pub t: f64,
    pub components: Vec<Vec<f64>>,
}

impl Snapshot {
    /// Captures spectral fields by transforming them to physical space.
    pub fn from_fields(fields: &[&Field], eps: f64, alpha: f64, t: f64) -> Result<Snapshot> {
        let grid = fields
            .first()
            .ok_or_else(|| Error::Snapshot("no components".into()))?
            .grid();
        let mut components = Vec::with_capacity(fields.len());
        for f in fields {
            f.same_grid(fields[0])?;
            components.push(f.to_physical()?.real_values()?);
        }
        Ok(Snapshot {
            nx: grid.nx as u32,
            ny: grid.ny as u32,
            nz: grid.nz as u32,
            l1: grid.l1,
            l2: grid.l2,
            eps,
            alpha,
            t,
            components,
        })
    }

    pub fn is_primitive(&self) -> bool {
        self.eps == 0.0 && self.alpha == 0.0
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        make_grid(
            self.nx as usize,
            self.ny as usize,
            self.nz as usize,
            self.l1,
            self.l2,
        )
    }

    /// Spectral fields on `grid`, with parities assigned per component.
    pub fn to_fields(&self, grid: &Arc<Grid>, parities: &[Parity]) -> Result<Vec<Field>> {
        if parities.len() != self.components.len() {
            return Err(Error::Snapshot(format!(
                "expected {} components, file has {}",
                parities.len(),
                self.components.len()
            )));
        }
        if (grid.nx, grid.ny, grid.nz) != (self.nx as usize, self.ny as usize, self.nz as usize)
            || grid.l1 != self.l1
            || grid.l2 != self.l2
        {
            return Err(Error::GridMismatch);
        }
        self.components
            .iter()
            .zip(parities)
            .map(|(values, &p)| Field::from_real(grid, values, p)?.to_spectral())
            .collect()
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        for n in [self.nx, self.ny, self.nz] {
            w.write_all(&n.to_le_bytes())?;
        }
        for x in [self.l1, self.l2, self.eps, self.alpha, self.t] {
            w.write_all(&x.to_le_bytes())?;
        }
        for comp in &self.components {
            for x in comp {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Snapshot> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Snapshot("truncated header".into()));
        }
        if bytes[..4] != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != FORMAT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let (nx, ny, nz) = (u32_at(8), u32_at(12), u32_at(16));
        let mut o = 20;
        let mut header = [0.0; 5];
        for h in &mut header {
            *h = f64_at(o);
            o += 8;
        }
        let [l1, l2, eps, alpha, t] = header;
        let points = nx as usize * ny as usize * nz as usize;
        let body = bytes.len() - HEADER_LEN;
        if points == 0 || !body.is_multiple_of(8 * points) {
            return Err(Error::Snapshot(format!(
                "body of {body} bytes is not a whole number of {nx}x{ny}x{nz} arrays"
            )));
        }
        let components = bytes[HEADER_LEN..]
            .chunks_exact(8 * points)
            .map(|chunk| {
                chunk
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect()
            })
            .collect();
        Ok(Snapshot {
            nx,
            ny,
            nz,
            l1,
            l2,
            eps,
            alpha,
            t,
            components,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Snapshot> {
        let mut bytes = Vec::new();
        File::open(path)
            .map(BufReader::new)
            .and_then(|mut r| r.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Snapshot::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(ncomp: usize) -> Snapshot {
        let n = 4 * 4 * 4;
        Snapshot {
            nx: 4,
            ny: 4,
            nz: 4,
            l1: 1.5,
            l2: 2.5,
            eps: 0.1,
            alpha: 3.0,
            t: 0.25,
            components: (0..ncomp)
                .map(|c| (0..n).map(|i| (i + 100 * c) as f64 * 0.5).collect())
                .collect(),
        }
    }

    #[test]
    fn header_layout() {
        let mut bytes = Vec::new();
        sample(3).write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"HYLM");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(bytes[52..60].try_into().unwrap()), 0.25);
        // first value of first component, then x-fastest
        assert_eq!(f64::from_le_bytes(bytes[60..68].try_into().unwrap()), 0.0);
        assert_eq!(f64::from_le_bytes(bytes[68..76].try_into().unwrap()), 0.5);
        assert_eq!(bytes.len(), HEADER_LEN + 3 * 64 * 8);
    }

    #[test]
    fn rejects_unknown_version_and_bad_length() {
        let mut bytes = Vec::new();
        sample(2).write_to(&mut bytes).unwrap();
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(Snapshot::from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Snapshot::from_bytes(&bad).is_err());
        bytes.pop();
        assert!(Snapshot::from_bytes(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn byte_round_trip(values in prop::collection::vec(-1e6f64..1e6, 64), t in 0.0f64..10.0) {
            let mut s = sample(1);
            s.components[0] = values;
            s.t = t;
            let mut bytes = Vec::new();
            s.write_to(&mut bytes).unwrap();
            prop_assert_eq!(Snapshot::from_bytes(&bytes).unwrap(), s);
        }
    }
}
