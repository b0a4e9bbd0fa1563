//! Checkpoints: one AMRA tensor per parameter block plus `manifest.json`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{CnnParams, Real};
use crate::error::{Error, Result};
use crate::io::{tensor_read, tensor_write, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    /// `[channels, height, width]`
    pub input: [usize; 3],
    pub classes: usize,
    pub blocks: Vec<BlockEntry>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub name: String,
    pub file: String,
    pub len: usize,
}

const FORMAT: &str = "amra-cnn/1";

pub fn save_checkpoint<T: Real>(
    params: &CnnParams<T>,
    dir: impl AsRef<Path>,
    meta: serde_json::Value,
) -> Result<CheckpointManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut blocks = Vec::new();
    for (name, values) in params.blocks() {
        let file = format!("{name}.amra");
        let t = Tensor::new(vec![values.len()], values.iter().map(|v| v.as_f64()).collect())?;
        tensor_write(&t, dir.join(&file))?;
        blocks.push(BlockEntry {
            name,
            file,
            len: values.len(),
        });
    }
    let (c, h, w) = params.input;
    let manifest = CheckpointManifest {
        format: FORMAT.into(),
        input: [c, h, w],
        classes: params.classes,
        blocks,
        meta,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn load_checkpoint<T: Real>(dir: impl AsRef<Path>) -> Result<(CnnParams<T>, CheckpointManifest)> {
    let dir = dir.as_ref();
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if manifest.format != FORMAT {
        return Err(Error::Format(format!("unknown checkpoint format {:?}", manifest.format)));
    }
    let [c, h, w] = manifest.input;
    let mut params = CnnParams::<T>::zeros((c, h, w), manifest.classes)?;
    for (name, block) in params.blocks_mut() {
        let entry = manifest
            .blocks
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| Error::Format(format!("checkpoint lacks block {name}")))?;
        let t = tensor_read(dir.join(&entry.file))?;
        if t.data.len() != block.len() {
            return Err(Error::Shape(format!(
                "block {name}: expected {} values, found {}",
                block.len(),
                t.data.len()
            )));
        }
        for (dst, &v) in block.iter_mut().zip(&t.data) {
            *dst = T::from_f64(v);
        }
    }
    Ok((params, manifest))
}
