//! File formats: OCCG volumes, TOML rig configs, CSV and PGM outputs.

pub mod occg;
pub mod rig;
pub mod text;

pub use occg::{decode_occg, encode_occg, read_occg, write_occg};
pub use rig::{read_rig, rig_from_toml, rig_to_toml, write_rig};
pub use text::{bev_csv, edge_csv, edge_pgm, grad_csv, parse_bev_csv, parse_report_csv, report_csv};

use std::path::Path;

use crate::error::{Error, Result};

/// Write `contents` to `path`, mapping failures to [`Error::Io`].
pub fn write_file(path: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
