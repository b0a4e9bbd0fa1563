//! Samplets: orthonormal multiresolution bases with `m` vanishing moments
//! over a binary cluster tree of pixel positions.
//!
//! Coefficients are stored in place: a node's scaling coefficients occupy
//! the first slots of its children's scaling slots and its samplets the
//! rest, so an image transform returns a canvas the size of the image. The
//! `level_map` of the layout says which block every position belongs to.

mod basis;
mod tree;

pub use basis::{construct_basis, monomial_count, monomials, NodeBasis, SampletBasis};
pub use tree::{build_cluster_tree, grid_points, Axis, BBox, ClusterNode, ClusterTree};

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::layout::{Block, SubbandLayout};
use crate::spec::{Level, TransformKind, TransformSpec};
use crate::tensor::{CoefficientSet, ImageTensor};

/// Default leaf capacity for order `m`: leaves then hold between `m_q` and
/// `2·m_q − 1` points.
pub fn default_leaf_capacity(m: usize) -> usize {
    2 * monomial_count(m) - 1
}

/// Basis for the pixel grid of an `h × w` image, shared across calls.
pub fn grid_basis(h: usize, w: usize, m: usize) -> Result<Arc<SampletBasis>> {
    type Slot = Arc<OnceLock<Arc<SampletBasis>>>;
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize, usize), Slot>>> = OnceLock::new();
    let slot = CACHE
        .get_or_init(Default::default)
        .lock()
        .unwrap()
        .entry((h, w, m))
        .or_default()
        .clone();
    if let Some(b) = slot.get() {
        return Ok(Arc::clone(b));
    }
    let tree = build_cluster_tree(&grid_points(h, w), default_leaf_capacity(m))?;
    let basis = Arc::new(construct_basis(tree, m)?);
    // A concurrent builder may have won; either result is identical.
    Ok(Arc::clone(slot.get_or_init(|| basis)))
}

fn level_option(level: Level) -> Option<usize> {
    match level {
        Level::Fixed(l) => Some(l),
        Level::Full => None,
    }
}

/// Block table and per-position block indices for canvas positions given
/// by `position_of(tree_slot)`.
fn samplet_blocks(
    basis: &SampletBasis,
    cut: usize,
    cols: usize,
    position_of: impl Fn(usize) -> usize,
) -> (Vec<Block>, Vec<u32>) {
    let depths = basis.coefficient_depths(cut);
    let mut present: Vec<usize> = depths.iter().flatten().copied().collect();
    present.sort_unstable();
    present.dedup();
    // Coarse to fine, like the wavelet canvases.
    let index_of = |d: Option<usize>| match d {
        None => 0,
        Some(d) => 1 + present.binary_search(&d).expect("depth present"),
    };
    let mut map = vec![0u32; depths.len()];
    let mut bbox: Vec<Option<(usize, usize, usize, usize)>> = vec![None; present.len() + 1];
    for (slot, d) in depths.iter().enumerate() {
        let b = index_of(*d);
        let pos = position_of(slot);
        map[pos] = b as u32;
        let (r, c) = (pos / cols, pos % cols);
        let e = bbox[b].get_or_insert((r, r, c, c));
        *e = (e.0.min(r), e.1.max(r), e.2.min(c), e.3.max(c));
    }
    let rect = |b: usize| bbox[b].map_or((0..0, 0..0), |(r0, r1, c0, c1)| (r0..r1 + 1, c0..c1 + 1));
    let mut blocks = Vec::with_capacity(present.len() + 1);
    let (r, c) = rect(0);
    blocks.push(Block::new("a", r, c));
    for (i, d) in present.iter().enumerate() {
        let (r, c) = rect(i + 1);
        blocks.push(Block::new(format!("s_{d}"), r, c));
    }
    (blocks, map)
}

fn samplet_layout(
    spec: &TransformSpec,
    basis: &SampletBasis,
    cut: usize,
    rows: usize,
    cols: usize,
    position_of: impl Fn(usize) -> usize,
) -> SubbandLayout {
    let (blocks, map) = samplet_blocks(basis, cut, cols, position_of);
    SubbandLayout {
        kind: TransformKind::Samplet,
        level: match spec.level {
            Level::Fixed(l) => l,
            Level::Full => basis.tree.depth.div_ceil(2),
        },
        rows,
        cols,
        input_rows: rows,
        input_cols: cols,
        blocks,
        padding: Vec::new(),
        level_map: Some(map),
        spec: spec.clone(),
        meta: BTreeMap::from([
            ("cut_depth".to_string(), cut.to_string()),
            ("tree_depth".to_string(), basis.tree.depth.to_string()),
            (
                "level_rule".to_string(),
                "image level l processes tree depths >= ceil(log2 N) - 2l".to_string(),
            ),
        ]),
    }
}

/// Samplet transform of values over the basis' points. The result is a
/// `1 × N` canvas in tree order; blocks are given by the level map.
pub fn samplet_transform(
    values: &[f64],
    basis: &SampletBasis,
    level: Option<usize>,
) -> Result<CoefficientSet> {
    let cut = basis.cut_depth(level);
    let y = basis.forward(values, cut)?;
    let spec = TransformSpec::samplet(basis.m, 1).with_level(level.map_or(Level::Full, Level::Fixed));
    let layout = samplet_layout(&spec, basis, cut, 1, y.len(), |s| s);
    CoefficientSet::new(y, 1, layout)
}

/// Inverse of [`samplet_transform`].
pub fn samplet_inverse(c: &CoefficientSet, basis: &SampletBasis) -> Result<Vec<f64>> {
    if c.channels != 1 || c.layout.rows != 1 {
        return Err(Error::Layout("expected a 1 x N single-channel samplet canvas".into()));
    }
    basis.inverse(&c.data, basis.cut_depth(level_option(c.layout.spec.level)))
}

/// Per-channel samplet transform of an image over its pixel grid.
pub fn samplet_image_transform(img: &ImageTensor, spec: &TransformSpec) -> Result<CoefficientSet> {
    if spec.kind != TransformKind::Samplet {
        return Err(Error::Argument(format!("expected a samplet spec, got {}", spec.kind)));
    }
    spec.validate()?;
    let (h, w, ch) = img.shape();
    let basis = grid_basis(h, w, spec.moments)?;
    let cut = basis.cut_depth(level_option(spec.level));
    let perm = &basis.tree.perm;
    let mut data = vec![0.0; h * w * ch];
    for (c, plane) in img.planes().iter().enumerate() {
        let y = basis.forward(&plane.data, cut)?;
        for (slot, v) in y.into_iter().enumerate() {
            data[perm[slot] * ch + c] = v;
        }
    }
    let layout = samplet_layout(spec, &basis, cut, h, w, |s| perm[s]);
    CoefficientSet::new(data, ch, layout)
}

/// Inverse of [`samplet_image_transform`].
pub fn samplet_image_inverse(c: &CoefficientSet) -> Result<ImageTensor> {
    let spec = &c.layout.spec;
    if c.layout.kind != TransformKind::Samplet {
        return Err(Error::Layout(format!("expected samplet coefficients, got {}", c.layout.kind)));
    }
    let (h, w, ch) = c.shape();
    let basis = grid_basis(h, w, spec.moments)?;
    let cut = basis.cut_depth(level_option(spec.level));
    let perm = &basis.tree.perm;
    let mut out = vec![0.0; h * w * ch];
    for (ci, plane) in c.planes().iter().enumerate() {
        let y: Vec<f64> = perm.iter().map(|&p| plane.data[p]).collect();
        let x = basis.inverse(&y, cut)?;
        for (p, v) in x.into_iter().enumerate() {
            out[p * ch + ci] = v;
        }
    }
    ImageTensor::new(h, w, ch, out)
}
