//! Fully separable wavelet transform.
//!
//! Every row is transformed completely to level `l` (giving
//! `[a_l, d_l, …, d_1]`), then every column of the result. The canvas is an
//! `(l+1) × (l+1)` grid; block `d2_a3` is the vertical `d_2` part crossed
//! with the horizontal `a_3` part.

use std::collections::BTreeMap;

use super::{
    check_layout, check_shape, per_channel, per_channel_inverse, resolve_level, wavelet_filter,
};
use crate::error::Result;
use crate::filterbank::{wavedec, wavedec_lengths, waverec, WaveletFilter};
use crate::layout::{Block, SubbandLayout};
use crate::spec::{TransformKind, TransformSpec};
use crate::tensor::{CoefficientSet, ImageTensor, Plane};

fn part_names(level: usize) -> Vec<String> {
    let mut v = vec![format!("a{level}")];
    v.extend((1..=level).rev().map(|j| format!("d{j}")));
    v
}

pub fn fswt_layout(spec: &TransformSpec, h: usize, w: usize) -> Result<SubbandLayout> {
    let f = wavelet_filter(spec, TransformKind::Fswt)?;
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
    let bounds = |s: usize| {
        let mut acc = 0;
        wavedec_lengths(s, f, spec.boundary, level)
            .into_iter()
            .map(|n| {
                acc += n;
                acc - n..acc
            })
            .collect::<Vec<_>>()
    };
    let (ry, rx) = (bounds(h), bounds(w));
    let names = part_names(level);
    let mut blocks = Vec::with_capacity((level + 1) * (level + 1));
    for (ny, y) in names.iter().zip(&ry) {
        for (nx, x) in names.iter().zip(&rx) {
            blocks.push(Block::new(format!("{ny}_{nx}"), y.clone(), x.clone()));
        }
    }
    SubbandLayout {
        kind: TransformKind::Fswt,
        level,
        rows: ry.last().map_or(0, |r| r.end),
        cols: rx.last().map_or(0, |r| r.end),
        input_rows: h,
        input_cols: w,
        blocks,
        padding: Vec::new(),
        level_map: None,
        spec: spec.clone(),
        meta: BTreeMap::from([("axis_order".to_string(), "rows,cols".to_string())]),
    }
}

/// Fully separable transform of every channel.
pub fn fswt2(img: &ImageTensor, spec: &TransformSpec) -> Result<CoefficientSet> {
    let layout = fswt_layout(spec, img.height(), img.width())?;
    let f = wavelet_filter(spec, TransformKind::Fswt)?;
    let level = layout.level;
    per_channel(img, layout, |p| {
        let rows = try_map_rows(p, |r| wavedec(r, f, spec.boundary, level))?;
        Ok(try_map_rows(&rows.transpose(), |c| wavedec(c, f, spec.boundary, level))?.transpose())
    })
}

/// Inverse of [`fswt2`].
pub fn ifswt2(c: &CoefficientSet, spec: &TransformSpec) -> Result<ImageTensor> {
    check_layout(c, spec)?;
    let f = wavelet_filter(spec, TransformKind::Fswt)?;
    let lay = &c.layout;
    check_shape(c, &build_layout(spec, f, lay.level, lay.input_rows, lay.input_cols))?;
    per_channel_inverse(c, |p| {
        let cols = try_map_rows(&p.transpose(), |col| {
            waverec(col, f, spec.boundary, lay.level, lay.input_rows)
        })?
        .transpose();
        try_map_rows(&cols, |row| waverec(row, f, spec.boundary, lay.level, lay.input_cols))
    })
}

fn try_map_rows(p: &Plane, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Plane> {
    let mut data = Vec::new();
    let mut cols = 0;
    for r in 0..p.rows {
        let row = f(p.row(r))?;
        cols = row.len();
        data.extend(row);
    }
    Ok(Plane {
        rows: p.rows,
        cols,
        data,
    })
}
