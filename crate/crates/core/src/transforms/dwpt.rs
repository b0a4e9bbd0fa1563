//! Wavelet packets: every band is decomposed again down to level `l`.
//!
//! Packets are placed on a `2^l × 2^l` grid in natural (frequency-bit)
//! order: the row index collects the vertical high-pass bits and the column
//! index the horizontal ones, first level most significant. A packet name
//! spells its path, e.g. `ah` = approximation, then horizontal detail.

use std::collections::BTreeMap;

use super::{
    analysis_2d, check_layout, check_shape, per_channel, per_channel_inverse, resolve_level,
    synthesis_2d, wavelet_filter,
};
use crate::error::Result;
use crate::filterbank::{output_lengths, WaveletFilter};
use crate::layout::{Block, SubbandLayout};
use crate::spec::{Boundary, TransformKind, TransformSpec};
use crate::tensor::{CoefficientSet, ImageTensor, Plane};

const BAND_CHARS: [[char; 2]; 2] = [['a', 'h'], ['v', 'd']];

/// Length of the packet reached from `s` by the first `depth` bits of `path`
/// (an `level`-bit index, most significant bit first).
fn packet_len(
    s: usize,
    f: &WaveletFilter,
    mode: Boundary,
    path: usize,
    depth: usize,
    level: usize,
) -> usize {
    let mut cur = s;
    for k in 0..depth {
        let (a, d) = output_lengths(cur, f, mode);
        cur = if (path >> (level - 1 - k)) & 1 == 0 { a } else { d };
    }
    cur
}

fn offsets(s: usize, f: &WaveletFilter, mode: Boundary, level: usize) -> Vec<usize> {
    let mut out = vec![0];
    for i in 0..1usize << level {
        out.push(out[i] + packet_len(s, f, mode, i, level, level));
    }
    out
}

/// Name of packet `(iy, ix)` at `level`.
pub fn packet_name(iy: usize, ix: usize, level: usize) -> String {
    (0..level)
        .map(|k| {
            let by = (iy >> (level - 1 - k)) & 1;
            let bx = (ix >> (level - 1 - k)) & 1;
            BAND_CHARS[by][bx]
        })
        .collect()
}

pub fn dwpt_layout(spec: &TransformSpec, h: usize, w: usize) -> Result<SubbandLayout> {
    let f = wavelet_filter(spec, TransformKind::Dwpt)?;
    let level = resolve_level(spec, f, h, w)?;
    Ok(build_layout(spec, f, level, h, w))
}

fn build_layout(
    spec: &TransformSpec,
    f: &WaveletFilter,
    level: usize,
    h: usize,
    w: usize,
) -> SubbandLayout {
    let ro = offsets(h, f, spec.boundary, level);
    let co = offsets(w, f, spec.boundary, level);
    let n = 1usize << level;
    let mut blocks = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            blocks.push(Block::new(
                packet_name(iy, ix, level),
                ro[iy]..ro[iy + 1],
                co[ix]..co[ix + 1],
            ));
        }
    }
    SubbandLayout {
        kind: TransformKind::Dwpt,
        level,
        rows: ro[n],
        cols: co[n],
        input_rows: h,
        input_cols: w,
        blocks,
        padding: Vec::new(),
        level_map: None,
        spec: spec.clone(),
        meta: BTreeMap::from([("packet_order".to_string(), "natural".to_string())]),
    }
}

/// Full packet decomposition of every channel.
pub fn dwpt2(img: &ImageTensor, spec: &TransformSpec) -> Result<CoefficientSet> {
    let layout = dwpt_layout(spec, img.height(), img.width())?;
    let f = wavelet_filter(spec, TransformKind::Dwpt)?;
    let ro = offsets(img.height(), f, spec.boundary, layout.level);
    let co = offsets(img.width(), f, spec.boundary, layout.level);
    let (rows, cols, level) = (layout.rows, layout.cols, layout.level);
    per_channel(img, layout, |p| {
        let mut canvas = Plane::zeros(rows, cols);
        let mut stack = vec![(p.clone(), 0usize, 0usize, 0usize)];
        while let Some((plane, iy, ix, depth)) = stack.pop() {
            if depth == level {
                canvas.paste(&plane, ro[iy], co[ix]);
                continue;
            }
            let bands = analysis_2d(&plane, f, spec.boundary)?;
            for (b, band) in bands.into_iter().enumerate() {
                stack.push((band, 2 * iy + b / 2, 2 * ix + b % 2, depth + 1));
            }
        }
        Ok(canvas)
    })
}

/// Inverse of [`dwpt2`].
pub fn idwpt2(c: &CoefficientSet, spec: &TransformSpec) -> Result<ImageTensor> {
    check_layout(c, spec)?;
    let f = wavelet_filter(spec, TransformKind::Dwpt)?;
    let lay = &c.layout;
    let (h, w, level) = (lay.input_rows, lay.input_cols, lay.level);
    check_shape(c, &build_layout(spec, f, level, h, w))?;
    let ro = offsets(h, f, spec.boundary, level);
    let co = offsets(w, f, spec.boundary, level);
    per_channel_inverse(c, |p| {
        // Reconstruct depth by depth, from packets up to the image.
        let n = 1usize << level;
        let mut nodes: Vec<Plane> = (0..n * n)
            .map(|i| p.crop(ro[i / n]..ro[i / n + 1], co[i % n]..co[i % n + 1]))
            .collect();
        for depth in (0..level).rev() {
            let m = 1usize << depth;
            let mut parents = Vec::with_capacity(m * m);
            for iy in 0..m {
                for ix in 0..m {
                    let child = |by: usize, bx: usize| &nodes[(2 * iy + by) * 2 * m + 2 * ix + bx];
                    // Path bits of this node, left-aligned to `level` bits.
                    let shift = level - depth;
                    let rows = packet_len(h, f, spec.boundary, iy << shift, depth, level);
                    let cols = packet_len(w, f, spec.boundary, ix << shift, depth, level);
                    parents.push(synthesis_2d(
                        [child(0, 0), child(0, 1), child(1, 0), child(1, 1)],
                        f,
                        spec.boundary,
                        rows,
                        cols,
                    )?);
                }
            }
            nodes = parents;
        }
        Ok(nodes.pop().expect("root node"))
    })
}
