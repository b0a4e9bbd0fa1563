//! Sub-band bookkeeping for coefficient canvases.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spec::{TransformKind, TransformSpec};

/// A named rectangle of the coefficient canvas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

impl Block {
    pub fn new(name: impl Into<String>, rows: Range<usize>, cols: Range<usize>) -> Self {
        Block {
            name: name.into(),
            rows,
            cols,
        }
    }

    pub fn area(&self) -> usize {
        self.rows.len() * self.cols.len()
    }
}

/// Describes how a coefficient canvas splits into sub-bands.
///
/// Rectangular kinds list their sub-bands in `blocks`. Reflect-padded Mallat
/// canvases cannot tile with sub-bands alone; the zero-filled gaps are listed
/// in `padding` so that blocks plus padding always tile the canvas. Samplet
/// coefficients live at the pixel positions of their supports, so their
/// blocks are defined by `level_map` (one block index per canvas position)
/// and each block's rectangle is just its bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandLayout {
    pub kind: TransformKind,
    /// Resolved decomposition level.
    pub level: usize,
    pub rows: usize,
    pub cols: usize,
    /// Spatial size of the transformed input.
    pub input_rows: usize,
    pub input_cols: usize,
    pub blocks: Vec<Block>,
    #[serde(default)]
    pub padding: Vec<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_map: Option<Vec<u32>>,
    /// The spec that produced the canvas; inverses are driven by it.
    pub spec: TransformSpec,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl SubbandLayout {
    /// A single block covering the whole canvas.
    pub fn single(spec: TransformSpec, name: &str, rows: usize, cols: usize) -> Self {
        SubbandLayout {
            kind: spec.kind,
            level: 0,
            rows,
            cols,
            input_rows: rows,
            input_cols: cols,
            blocks: vec![Block::new(name, 0..rows, 0..cols)],
            padding: Vec::new(),
            level_map: None,
            spec,
            meta: BTreeMap::new(),
        }
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn block(&self, name: &str) -> Result<&Block> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| Error::Layout(format!("layout has no block `{name}`")))
    }

    /// Flat canvas positions (`row * cols + col`) belonging to block `index`.
    pub fn block_positions(&self, index: usize) -> Vec<usize> {
        match &self.level_map {
            Some(map) => map
                .iter()
                .enumerate()
                .filter(|(_, &b)| b as usize == index)
                .map(|(p, _)| p)
                .collect(),
            None => {
                let b = &self.blocks[index];
                b.rows
                    .clone()
                    .flat_map(|r| b.cols.clone().map(move |c| r * self.cols + c))
                    .collect()
            }
        }
    }

    /// Positions of every block, computed in one pass.
    pub fn all_block_positions(&self) -> Vec<Vec<usize>> {
        match &self.level_map {
            Some(map) => {
                let mut out = vec![Vec::new(); self.blocks.len()];
                for (p, &b) in map.iter().enumerate() {
                    out[b as usize].push(p);
                }
                out
            }
            None => (0..self.blocks.len())
                .map(|i| self.block_positions(i))
                .collect(),
        }
    }

    /// Number of positions in block `index`.
    pub fn block_size(&self, index: usize) -> usize {
        match &self.level_map {
            Some(map) => map.iter().filter(|&&b| b as usize == index).count(),
            None => self.blocks[index].area(),
        }
    }

    /// Checks that blocks (and padding) cover the canvas exactly once.
    pub fn validate(&self) -> Result<()> {
        let n = self.rows * self.cols;
        if let Some(map) = &self.level_map {
            if map.len() != n {
                return Err(Error::Layout(format!(
                    "level map has {} entries for a {}x{} canvas",
                    map.len(),
                    self.rows,
                    self.cols
                )));
            }
            if let Some(bad) = map.iter().find(|&&b| b as usize >= self.blocks.len()) {
                return Err(Error::Layout(format!("level map refers to block {bad}")));
            }
            return Ok(());
        }
        let mut cover = vec![0u8; n];
        for b in self.blocks.iter().chain(&self.padding) {
            if b.rows.end > self.rows || b.cols.end > self.cols {
                return Err(Error::Layout(format!("block `{}` leaves the canvas", b.name)));
            }
            for r in b.rows.clone() {
                for c in b.cols.clone() {
                    cover[r * self.cols + c] += 1;
                }
            }
        }
        match cover.iter().position(|&k| k != 1) {
            None => Ok(()),
            Some(p) => Err(Error::Layout(format!(
                "canvas position ({}, {}) covered {} times",
                p / self.cols,
                p % self.cols,
                cover[p]
            ))),
        }
    }
}
