//! Camera rig files in TOML:
//!
//! ```toml
//! [[camera]]
//! name = "CAM_FRONT"
//! image_size = [704, 256]
//! intrinsics = [fx, 0, cx, 0, fy, cy, 0, 0, 1]   # row-major
//! extrinsic = [...]                               # 16 values, camera-to-ego, row-major
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct CameraEntry {
    name: String,
    image_size: [u32; 2],
    intrinsics: Vec<f64>,
    extrinsic: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RigFile {
    camera: Vec<CameraEntry>,
}

pub fn rig_to_toml(cams: &[CameraModel]) -> String {
    let file = RigFile {
        camera: cams
            .iter()
            .map(|c| CameraEntry {
                name: c.name().to_string(),
                image_size: [c.image_size().0, c.image_size().1],
                intrinsics: c.intrinsics().to_vec(),
                extrinsic: c.extrinsic().to_vec(),
            })
            .collect(),
    };
    toml::to_string(&file).expect("rig serializes")
}

pub fn rig_from_toml(text: &str) -> Result<Vec<CameraModel>> {
    let file: RigFile = toml::from_str(text).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start);
        Error::format(offset, format!("rig config: {}", e.message()))
    })?;
    if file.camera.is_empty() {
        return Err(Error::config("rig config lists no cameras"));
    }
    file.camera
        .into_iter()
        .map(|c| {
            let k: [f64; 9] = c.intrinsics.as_slice().try_into().map_err(|_| {
                Error::config(format!("camera '{}': intrinsics need 9 values", c.name))
            })?;
            let e: [f64; 16] = c.extrinsic.as_slice().try_into().map_err(|_| {
                Error::config(format!("camera '{}': extrinsic needs 16 values", c.name))
            })?;
            CameraModel::new(c.name, k, e, (c.image_size[0], c.image_size[1]))
        })
        .collect()
}

pub fn read_rig(path: impl AsRef<Path>) -> Result<Vec<CameraModel>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    rig_from_toml(&text)
}

pub fn write_rig(path: impl AsRef<Path>, cams: &[CameraModel]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, rig_to_toml(cams)).map_err(|e| Error::io(path, e))
}
