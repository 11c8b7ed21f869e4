//! OCCG binary voxel volumes.
//!
//! Little-endian layout:
//!
//! | offset | field        | type      |
//! |-------:|--------------|-----------|
//! | 0      | magic `OCCG` | 4 bytes   |
//! | 4      | version = 1  | u32       |
//! | 8      | dims x, y, z | 3 x u32   |
//! | 20     | voxel size   | 3 x f32   |
//! | 32     | origin       | 3 x f32   |
//! | 44     | class count  | u32       |
//! | 48     | free class   | u32       |
//! | 52     | semantics    | u8 x N    |
//! | 52 + N | instances    | u16 x N   |
//!
//! `N` is the product of the dims; voxels are x-major. Header floats are
//! widened through their shortest decimal form, so `0.4f32` reads back as
//! `0.4f64` and re-encodes to the same bits.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::GridGeometry;
use crate::grid::{InstanceId, VoxelGrid, NO_INSTANCE};

pub const MAGIC: [u8; 4] = *b"OCCG";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 52;

fn widen(v: f32) -> f64 {
    v.to_string().parse().expect("f32 display parses as f64")
}

pub fn encode_occg(grid: &VoxelGrid) -> Vec<u8> {
    let g = grid.geometry();
    let n = g.voxel_count();
    let mut out = Vec::with_capacity(HEADER_LEN + 3 * n);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in g.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in g.voxel_size().into_iter().chain(g.min()) {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out.extend_from_slice(&(grid.class_count() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.free_class() as u32).to_le_bytes());
    out.extend_from_slice(grid.semantics());
    for &i in grid.instances() {
        out.extend_from_slice(&i.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, section: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(
                self.pos,
                format!(
                    "truncated {section}: need {len} bytes, {} remain",
                    self.bytes.len() - self.pos
                ),
            )),
        }
    }

    fn u32(&mut self, section: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, section)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self, section: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, section)?.try_into().expect("4 bytes")))
    }
}

pub fn decode_occg(bytes: &[u8]) -> Result<VoxelGrid> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::format(0, "bad magic, expected OCCG"));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = r.u32("dims")? as usize;
    }
    let mut voxel_size = [0.0; 3];
    for v in &mut voxel_size {
        *v = widen(r.f32("voxel size")?);
    }
    let mut origin = [0.0; 3];
    for v in &mut origin {
        *v = widen(r.f32("origin")?);
    }
    let geometry = GridGeometry::from_origin(origin, voxel_size, dims)
        .map_err(|e| Error::format(8, format!("invalid geometry header: {e}")))?;
    let class_count = r.u32("class count")? as usize;
    let free_class = r.u32("free class")?;
    if class_count == 0 || class_count > 256 {
        return Err(Error::format(44, format!("class count {class_count} outside 1..=256")));
    }
    if free_class as usize >= class_count {
        return Err(Error::format(48, format!("free class {free_class} >= class count {class_count}")));
    }
    let free_class = free_class as u8;

    let n = geometry.voxel_count();
    let sem_offset = r.pos;
    let semantics = r.take(n, "semantics payload")?.to_vec();
    if let Some(i) = semantics.iter().position(|&c| c as usize >= class_count) {
        return Err(Error::format(
            sem_offset + i,
            format!("semantic label {} >= class count {class_count}", semantics[i]),
        ));
    }
    let inst_offset = r.pos;
    let raw = r.take(2 * n, "instances payload")?;
    let instances: Vec<InstanceId> = raw
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    if let Some(i) = (0..n).find(|&i| instances[i] != NO_INSTANCE && semantics[i] == free_class) {
        return Err(Error::format(inst_offset + 2 * i, "instance id on a FREE voxel"));
    }
    if r.pos != bytes.len() {
        return Err(Error::format(
            r.pos,
            format!("{} trailing bytes after instances payload", bytes.len() - r.pos),
        ));
    }
    VoxelGrid::from_parts(geometry, semantics, instances, class_count, free_class)
}

pub fn read_occg(path: impl AsRef<Path>) -> Result<VoxelGrid> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_occg(&bytes)
}

pub fn write_occg(path: impl AsRef<Path>, grid: &VoxelGrid) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_occg(grid)).map_err(|e| Error::io(path, e))
}
