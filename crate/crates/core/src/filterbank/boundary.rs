//! Orthogonal boundary-corrected analysis matrices.
//!
//! The analysis operator for a length-`s` signal is an `s × s` matrix whose
//! rows alternate low-pass / high-pass (`lo_0, hi_0, lo_1, hi_1, …`). Row `o`
//! of either kind carries the filter taps over positions `2o−k+1 ..= 2o+k`
//! (filter length `2k`), which balances the truncation between both ends.
//! Rows that fit inside the signal are kept verbatim. Rows that stick out are
//! truncated, then re-orthonormalized by QR (two-pass Gram-Schmidt) against
//! the interior rows and against each other, so the matrix stays orthogonal
//! and square.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use super::filters::WaveletFilter;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct SparseRow {
    start: usize,
    taps: Vec<f64>,
}

impl SparseRow {
    fn from_dense(v: &[f64]) -> Self {
        let first = v.iter().position(|&x| x != 0.0).unwrap_or(0);
        let last = v.iter().rposition(|&x| x != 0.0).map_or(first, |p| p + 1);
        SparseRow {
            start: first,
            taps: v[first..last].to_vec(),
        }
    }

    #[inline]
    fn dot(&self, x: &[f64]) -> f64 {
        self.taps
            .iter()
            .zip(&x[self.start..self.start + self.taps.len()])
            .map(|(a, b)| a * b)
            .sum()
    }

    #[inline]
    fn axpy(&self, alpha: f64, y: &mut [f64]) {
        for (t, v) in self.taps.iter().zip(&mut y[self.start..]) {
            *v += alpha * t;
        }
    }
}

/// Orthogonal `n × n` analysis matrix with boundary-corrected rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTransform {
    pub n: usize,
    pub filter: WaveletFilter,
    rows: Vec<SparseRow>,
    boundary_rows: Vec<usize>,
}

impl BoundaryTransform {
    /// Number of approximation outputs, `⌈n/2⌉`.
    pub fn approx_len(&self) -> usize {
        self.n.div_ceil(2)
    }

    /// Number of detail outputs, `⌊n/2⌋`.
    pub fn detail_len(&self) -> usize {
        self.n / 2
    }

    /// Indices of rows that were truncated and re-orthonormalized.
    pub fn boundary_rows(&self) -> &[usize] {
        &self.boundary_rows
    }

    /// Row `i` as a dense vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        self.rows[i].axpy(1.0, &mut v);
        v
    }

    /// The full matrix, row-major.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i)).collect()
    }

    pub fn analyze(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut approx = Vec::with_capacity(self.approx_len());
        let mut detail = Vec::with_capacity(self.detail_len());
        for (i, row) in self.rows.iter().enumerate() {
            let v = row.dot(x);
            if i % 2 == 0 {
                approx.push(v);
            } else {
                detail.push(v);
            }
        }
        (approx, detail)
    }

    /// Applies the transpose: the exact inverse of [`analyze`](Self::analyze).
    pub fn synthesize(&self, approx: &[f64], detail: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            let c = if i % 2 == 0 {
                approx[i / 2]
            } else {
                detail[i / 2]
            };
            row.axpy(c, &mut x);
        }
        x
    }
}

/// Builds the boundary-corrected analysis matrix for signals of length `s`.
pub fn boundary_matrix(s: usize, filter: &WaveletFilter) -> Result<BoundaryTransform> {
    let len = filter.len();
    let min = if filter.is_haar() { 2 } else { 2 * len };
    if s < min {
        return Err(Error::Size(format!(
            "boundary filter for {} needs signals of length >= {min}, got {s}",
            filter.name
        )));
    }
    let k = len / 2;
    let mut rows: Vec<Option<SparseRow>> = vec![None; s];
    let mut truncated: Vec<(usize, Vec<f64>)> = Vec::new();
    for r in 0..s {
        let o = r / 2;
        let taps = if r % 2 == 0 {
            &filter.dec_lo
        } else {
            &filter.dec_hi
        };
        let lo = 2 * o as isize - k as isize + 1;
        let hi = (2 * o + k) as isize;
        let mut dense = vec![0.0; s];
        for p in lo.max(0)..=hi.min(s as isize - 1) {
            dense[p as usize] = taps[(2 * o + k) - p as usize];
        }
        if lo >= 0 && hi < s as isize {
            rows[r] = Some(SparseRow::from_dense(&dense));
        } else {
            truncated.push((r, dense));
        }
    }

    let interior: Vec<SparseRow> = rows.iter().flatten().cloned().collect();
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(truncated.len());
    let mut boundary_rows = Vec::with_capacity(truncated.len());
    for (r, mut v) in truncated {
        let original = norm(&v);
        for _pass in 0..2 {
            for row in &interior {
                let c = row.dot(&v);
                if c != 0.0 {
                    row.axpy(-c, &mut v);
                }
            }
            for q in &accepted {
                let c = dot(q, &v);
                for (a, b) in v.iter_mut().zip(q) {
                    *a -= c * b;
                }
            }
        }
        let nv = norm(&v);
        if nv <= 1e-8 * original.max(f64::MIN_POSITIVE) {
            return Err(Error::Construction(format!(
                "boundary row {r} of {} is dependent for length {s}",
                filter.name
            )));
        }
        v.iter_mut().for_each(|x| *x /= nv);
        rows[r] = Some(SparseRow::from_dense(&v));
        accepted.push(v);
        boundary_rows.push(r);
    }

    Ok(BoundaryTransform {
        n: s,
        filter: filter.clone(),
        rows: rows.into_iter().map(|r| r.expect("every row assigned")).collect(),
        boundary_rows,
    })
}

/// Shared, lazily built boundary matrices keyed by (length, filter).
pub(crate) fn cached_boundary_matrix(
    s: usize,
    filter: &WaveletFilter,
) -> Result<Arc<BoundaryTransform>> {
    type Cache = RwLock<HashMap<(usize, &'static str), Arc<BoundaryTransform>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(m) = cache.read().unwrap().get(&(s, filter.name)) {
        return Ok(Arc::clone(m));
    }
    let m = Arc::new(boundary_matrix(s, filter)?);
    cache
        .write()
        .unwrap()
        .entry((s, filter.name))
        .or_insert_with(|| Arc::clone(&m));
    Ok(m)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbank::{get_filter, WAVELET_NAMES};

    fn max_orthogonality_error(m: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..m.len() {
            for j in 0..m.len() {
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&m[i], &m[j]) - expected).abs());
            }
        }
        worst
    }

    #[test]
    fn haar_matrix_is_the_plain_haar_matrix() {
        let haar = get_filter("haar").unwrap();
        let t = boundary_matrix(16, haar).unwrap();
        assert!(t.boundary_rows().is_empty());
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (i, row) in t.matrix().iter().enumerate() {
            let o = i / 2;
            let mut expected = vec![0.0; 16];
            // detail rows are the convolution x[2o+1]·h[0] + x[2o]·h[1]
            expected[2 * o] = if i % 2 == 0 { r } else { -r };
            expected[2 * o + 1] = r;
            assert_eq!(row, &expected, "row {i}");
        }
    }

    #[test]
    fn db3_length_32_is_orthogonal_with_untouched_interior() {
        let f = get_filter("db3").unwrap();
        let t = boundary_matrix(32, f).unwrap();
        let m = t.matrix();
        assert!(max_orthogonality_error(&m) < 1e-10);
        for (i, row) in m.iter().enumerate().take(28).skip(5) {
            let o = i / 2;
            let taps = if i % 2 == 0 { &f.dec_lo } else { &f.dec_hi };
            for (p, &v) in row.iter().enumerate() {
                let j = (2 * o + 3) as isize - p as isize;
                let expected = if (0..6).contains(&j) { taps[j as usize] } else { 0.0 };
                assert_eq!(v, expected, "row {i} col {p}");
            }
        }
    }

    #[test]
    fn orthogonal_for_every_filter_and_many_lengths() {
        for name in WAVELET_NAMES {
            let f = get_filter(name).unwrap();
            let min = if f.is_haar() { 2 } else { 2 * f.len() };
            for s in (min..=72).chain([99, 100, 128, 129, 200]) {
                let t = boundary_matrix(s, f).unwrap();
                let err = max_orthogonality_error(&t.matrix());
                assert!(err < 1e-10, "{name} s={s}: {err:e}");
            }
        }
    }

    #[test]
    fn too_short_is_a_size_error() {
        let f = get_filter("db4").unwrap();
        assert!(matches!(boundary_matrix(15, f), Err(Error::Size(_))));
        assert!(boundary_matrix(16, f).is_ok());
    }
}
