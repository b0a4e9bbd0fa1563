//! 2D transforms built from the 1D filter bank, plus the spec dispatcher.
//!
//! Every transform acts on each channel independently and writes a
//! [`CoefficientSet`] whose layout records the spec, so [`inverse`] needs
//! nothing but the coefficients.

mod dwpt;
mod dwt;
mod fswt;

pub use dwpt::{dwpt2, dwpt_layout, idwpt2};
pub use dwt::{dwt2, dwt_layout, idwt2};
pub use fswt::{fswt2, fswt_layout, ifswt2};

use crate::dct;
use crate::error::{Error, Result};
use crate::filterbank::{self, analysis_1d, output_lengths, synthesis_1d, WaveletFilter};
use crate::layout::SubbandLayout;
use crate::samplets;
use crate::spec::{Boundary, Level, TransformKind, TransformSpec};
use crate::tensor::{CoefficientSet, ImageTensor, Plane};

/// Applies the transform described by `spec` to every channel.
pub fn forward(img: &ImageTensor, spec: &TransformSpec) -> Result<CoefficientSet> {
    spec.validate()?;
    match spec.kind {
        TransformKind::Pixels => {
            let (h, w, c) = img.shape();
            let layout = SubbandLayout::single(spec.clone(), "pixels", h, w);
            CoefficientSet::new(img.data().to_vec(), c, layout)
        }
        TransformKind::Dwt => dwt2(img, spec),
        TransformKind::Dwpt => dwpt2(img, spec),
        TransformKind::Fswt => fswt2(img, spec),
        TransformKind::Dct => dct::dct2(img),
        TransformKind::Samplet => samplets::samplet_image_transform(img, spec),
    }
}

/// Inverts [`forward`] using the spec stored in the layout.
pub fn inverse(c: &CoefficientSet) -> Result<ImageTensor> {
    let spec = &c.layout.spec;
    match c.layout.kind {
        TransformKind::Pixels => {
            let (h, w, ch) = c.shape();
            ImageTensor::new(h, w, ch, c.data.clone())
        }
        TransformKind::Dwt => idwt2(c, spec),
        TransformKind::Dwpt => idwpt2(c, spec),
        TransformKind::Fswt => ifswt2(c, spec),
        TransformKind::Dct => dct::idct2(c),
        TransformKind::Samplet => samplets::samplet_image_inverse(c),
    }
}

/// Smallest length one analysis step accepts.
fn min_length(filter: &WaveletFilter, mode: Boundary) -> usize {
    if filter.is_haar() {
        2
    } else if mode == Boundary::BoundaryFilter {
        2 * filter.len()
    } else {
        filter.len()
    }
}

/// Deepest level usable on a length-`s` axis.
pub fn max_level(s: usize, filter: &WaveletFilter, mode: Boundary) -> usize {
    let min = min_length(filter, mode);
    let mut level = 0;
    let mut cur = s;
    while cur >= min && (1usize << (level + 1)) <= s {
        cur = output_lengths(cur, filter, mode).0;
        level += 1;
    }
    level
}

/// Resolves the spec's level for an `h × w` input.
pub(crate) fn resolve_level(
    spec: &TransformSpec,
    filter: &WaveletFilter,
    h: usize,
    w: usize,
) -> Result<usize> {
    let deepest = max_level(h, filter, spec.boundary).min(max_level(w, filter, spec.boundary));
    match spec.level {
        Level::Full if deepest == 0 => Err(Error::Size(format!(
            "{h}x{w} input is too small for a {} decomposition",
            filter.name
        ))),
        Level::Full => Ok(deepest),
        Level::Fixed(l) if l == 0 || l > deepest => Err(Error::Size(format!(
            "level {l} is too deep for a {h}x{w} input with {} ({} boundary); at most {deepest}",
            filter.name, spec.boundary
        ))),
        Level::Fixed(l) => Ok(l),
    }
}

pub(crate) fn wavelet_filter(
    spec: &TransformSpec,
    kind: TransformKind,
) -> Result<&'static WaveletFilter> {
    if spec.kind != kind {
        return Err(Error::Argument(format!(
            "expected a {kind} spec, got {}",
            spec.kind
        )));
    }
    spec.validate()?;
    filterbank::get_filter(&spec.wavelet)
}

/// Checks that a coefficient set was produced by `spec`.
pub(crate) fn check_layout(c: &CoefficientSet, spec: &TransformSpec) -> Result<()> {
    if &c.layout.spec != spec || c.layout.kind != spec.kind {
        return Err(Error::Layout(format!(
            "coefficients were produced by `{}`, not `{spec}`",
            c.layout.spec
        )));
    }
    Ok(())
}

pub(crate) fn check_shape(c: &CoefficientSet, expected: &SubbandLayout) -> Result<()> {
    if c.layout.rows != expected.rows
        || c.layout.cols != expected.cols
        || c.layout.blocks != expected.blocks
    {
        return Err(Error::Layout(format!(
            "layout {}x{} does not match the {}x{} canvas implied by its spec",
            c.layout.rows, c.layout.cols, expected.rows, expected.cols
        )));
    }
    Ok(())
}

/// Filters every row: returns the low-pass and high-pass halves.
fn split_rows(p: &Plane, f: &WaveletFilter, mode: Boundary) -> Result<(Plane, Plane)> {
    let (na, nd) = output_lengths(p.cols, f, mode);
    let mut lo = Plane::zeros(p.rows, na);
    let mut hi = Plane::zeros(p.rows, nd);
    for r in 0..p.rows {
        let (a, d) = analysis_1d(p.row(r), f, mode)?;
        lo.data[r * na..(r + 1) * na].copy_from_slice(&a);
        hi.data[r * nd..(r + 1) * nd].copy_from_slice(&d);
    }
    Ok((lo, hi))
}

fn merge_rows(lo: &Plane, hi: &Plane, f: &WaveletFilter, mode: Boundary, cols: usize) -> Result<Plane> {
    let mut out = Plane::zeros(lo.rows, cols);
    for r in 0..lo.rows {
        let x = synthesis_1d(lo.row(r), hi.row(r), f, mode, cols)?;
        out.data[r * cols..(r + 1) * cols].copy_from_slice(&x);
    }
    Ok(out)
}

fn split_cols(p: &Plane, f: &WaveletFilter, mode: Boundary) -> Result<(Plane, Plane)> {
    let (lo, hi) = split_rows(&p.transpose(), f, mode)?;
    Ok((lo.transpose(), hi.transpose()))
}

fn merge_cols(lo: &Plane, hi: &Plane, f: &WaveletFilter, mode: Boundary, rows: usize) -> Result<Plane> {
    Ok(merge_rows(&lo.transpose(), &hi.transpose(), f, mode, rows)?.transpose())
}

/// One 2D analysis level: rows first, then columns.
///
/// Returns `[a, h, v, d]` where `h` is low-pass vertically and high-pass
/// horizontally, `v` the reverse.
pub(crate) fn analysis_2d(p: &Plane, f: &WaveletFilter, mode: Boundary) -> Result<[Plane; 4]> {
    let (lo_x, hi_x) = split_rows(p, f, mode)?;
    let (a, v) = split_cols(&lo_x, f, mode)?;
    let (h, d) = split_cols(&hi_x, f, mode)?;
    Ok([a, h, v, d])
}

pub(crate) fn synthesis_2d(
    bands: [&Plane; 4],
    f: &WaveletFilter,
    mode: Boundary,
    rows: usize,
    cols: usize,
) -> Result<Plane> {
    let [a, h, v, d] = bands;
    let lo_x = merge_cols(a, v, f, mode, rows)?;
    let hi_x = merge_cols(h, d, f, mode, rows)?;
    merge_rows(&lo_x, &hi_x, f, mode, cols)
}

/// Per-channel driver: applies `f` to every plane and assembles the result.
pub(crate) fn per_channel(
    img: &ImageTensor,
    layout: SubbandLayout,
    f: impl Fn(&Plane) -> Result<Plane>,
) -> Result<CoefficientSet> {
    let planes = img.planes().iter().map(&f).collect::<Result<Vec<_>>>()?;
    CoefficientSet::from_planes(&planes, layout)
}

pub(crate) fn per_channel_inverse(
    c: &CoefficientSet,
    f: impl Fn(&Plane) -> Result<Plane>,
) -> Result<ImageTensor> {
    let planes = c.planes().iter().map(&f).collect::<Result<Vec<_>>>()?;
    ImageTensor::from_planes(&planes)
}
