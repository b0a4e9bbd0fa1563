//! Mallat decomposition.
//!
//! Canvas arrangement: the coarsest approximation sits top-left; level `j`
//! adds `h_j` to the right of everything coarser, `v_j` below it and `d_j`
//! in the corner. Under reflect padding the coarser canvas can be a few
//! samples larger than `h_j`/`v_j`; those gaps are zero and listed as padding.

use std::collections::BTreeMap;

use super::{
    analysis_2d, check_layout, check_shape, per_channel, per_channel_inverse, resolve_level,
    synthesis_2d, wavelet_filter,
};
use crate::error::Result;
use crate::filterbank::{approx_chain, output_lengths, WaveletFilter};
use crate::layout::{Block, SubbandLayout};
use crate::spec::{TransformKind, TransformSpec};
use crate::tensor::{CoefficientSet, ImageTensor, Plane};

/// Layout of a level-`level` Mallat canvas for an `h × w` input.
pub fn dwt_layout(spec: &TransformSpec, h: usize, w: usize) -> Result<SubbandLayout> {
    let f = wavelet_filter(spec, TransformKind::Dwt)?;
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
    let mode = spec.boundary;
    let rows = approx_chain(h, f, mode, level);
    let cols = approx_chain(w, f, mode, level);
    let (mut ir, mut ic) = (rows[level], cols[level]);
    let mut blocks = vec![Block::new("a", 0..ir, 0..ic)];
    let mut padding = Vec::new();
    for j in (1..=level).rev() {
        let (ra, rd) = output_lengths(rows[j - 1], f, mode);
        let (ca, cd) = output_lengths(cols[j - 1], f, mode);
        blocks.push(Block::new(format!("h_{j}"), 0..ra, ic..ic + cd));
        blocks.push(Block::new(format!("v_{j}"), ir..ir + rd, 0..ca));
        blocks.push(Block::new(format!("d_{j}"), ir..ir + rd, ic..ic + cd));
        if ra < ir {
            padding.push(Block::new(format!("pad_h_{j}"), ra..ir, ic..ic + cd));
        }
        if ca < ic {
            padding.push(Block::new(format!("pad_v_{j}"), ir..ir + rd, ca..ic));
        }
        ir += rd;
        ic += cd;
    }
    SubbandLayout {
        kind: TransformKind::Dwt,
        level,
        rows: ir,
        cols: ic,
        input_rows: h,
        input_cols: w,
        blocks,
        padding,
        level_map: None,
        spec: spec.clone(),
        meta: BTreeMap::from([(
            "orientation".to_string(),
            "h: lowpass rows / highpass cols, v: highpass rows / lowpass cols".to_string(),
        )]),
    }
}

/// Multilevel Mallat DWT of every channel.
pub fn dwt2(img: &ImageTensor, spec: &TransformSpec) -> Result<CoefficientSet> {
    let layout = dwt_layout(spec, img.height(), img.width())?;
    let f = wavelet_filter(spec, TransformKind::Dwt)?;
    let lay = layout.clone();
    per_channel(img, layout, |p| {
        let mut canvas = Plane::zeros(lay.rows, lay.cols);
        let mut approx = p.clone();
        for j in 1..=lay.level {
            let [a, h, v, d] = analysis_2d(&approx, f, spec.boundary)?;
            for (name, band) in [("h", &h), ("v", &v), ("d", &d)] {
                let b = lay.block(&format!("{name}_{j}"))?;
                canvas.paste(band, b.rows.start, b.cols.start);
            }
            approx = a;
        }
        canvas.paste(&approx, 0, 0);
        Ok(canvas)
    })
}

/// Inverse of [`dwt2`].
pub fn idwt2(c: &CoefficientSet, spec: &TransformSpec) -> Result<ImageTensor> {
    check_layout(c, spec)?;
    let f = wavelet_filter(spec, TransformKind::Dwt)?;
    let lay = &c.layout;
    let expected = build_layout(spec, f, lay.level, lay.input_rows, lay.input_cols);
    check_shape(c, &expected)?;
    let rows = approx_chain(lay.input_rows, f, spec.boundary, lay.level);
    let cols = approx_chain(lay.input_cols, f, spec.boundary, lay.level);
    per_channel_inverse(c, |p| {
        let crop = |name: &str| -> Result<Plane> {
            let b = lay.block(name)?;
            Ok(p.crop(b.rows.clone(), b.cols.clone()))
        };
        let mut approx = crop("a")?;
        for j in (1..=lay.level).rev() {
            let h = crop(&format!("h_{j}"))?;
            let v = crop(&format!("v_{j}"))?;
            let d = crop(&format!("d_{j}"))?;
            approx = synthesis_2d([&approx, &h, &v, &d], f, spec.boundary, rows[j - 1], cols[j - 1])?;
        }
        Ok(approx)
    })
}
