//! Orthonormal 2D DCT-II (and its DCT-III inverse).
//!
//! Implemented as a dense per-axis matrix product, `O(n³)` for an `n × n`
//! image; at the sizes used here (n ≤ 256) that is fast enough.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::Result;
use crate::layout::SubbandLayout;
use crate::spec::{TransformKind, TransformSpec};
use crate::tensor::{CoefficientSet, ImageTensor, Plane};

/// Row-major `n × n` DCT-II matrix: `C[k][i] = s_k cos(π k (2i+1) / 2n)`.
fn dct_matrix(n: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(m) = cache.read().unwrap().get(&n) {
        return Arc::clone(m);
    }
    let mut m = vec![0.0; n * n];
    for k in 0..n {
        let s = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for i in 0..n {
            m[k * n + i] =
                s * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos();
        }
    }
    let m = Arc::new(m);
    cache.write().unwrap().insert(n, Arc::clone(&m));
    m
}

/// Orthonormal 1D DCT-II.
pub fn dct1(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = dct_matrix(n);
    (0..n)
        .map(|k| m[k * n..(k + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Orthonormal 1D DCT-III, the inverse of [`dct1`].
pub fn idct1(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let m = dct_matrix(n);
    let mut x = vec![0.0; n];
    for (k, &ck) in c.iter().enumerate() {
        for (xi, mi) in x.iter_mut().zip(&m[k * n..(k + 1) * n]) {
            *xi += ck * mi;
        }
    }
    x
}

fn along_both_axes(p: &Plane, f: fn(&[f64]) -> Vec<f64>) -> Plane {
    p.map_rows(f).map_cols(f)
}

pub fn dct2(img: &ImageTensor) -> Result<CoefficientSet> {
    let (h, w, _) = img.shape();
    let layout = SubbandLayout::single(TransformSpec::dct(), "dct", h, w);
    let planes: Vec<Plane> = img.planes().iter().map(|p| along_both_axes(p, dct1)).collect();
    CoefficientSet::from_planes(&planes, layout)
}

pub fn idct2(c: &CoefficientSet) -> Result<ImageTensor> {
    if c.layout.kind != TransformKind::Dct {
        return Err(crate::Error::Layout(format!(
            "expected DCT coefficients, got {}",
            c.layout.kind
        )));
    }
    let planes: Vec<Plane> = c.planes().iter().map(|p| along_both_axes(p, idct1)).collect();
    ImageTensor::from_planes(&planes)
}
