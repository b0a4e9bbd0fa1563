//! Sparsity counts, test patterns, average fingerprints and PCA.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::blockwise_normalize;
use crate::spec::TransformSpec;
use crate::tensor::{CoefficientSet, ImageTensor};
use crate::transforms;

/// Default relative threshold for counting non-zeros.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityCount {
    pub per_block: Vec<(String, usize)>,
    pub total: usize,
}

/// Counts coefficients with `|v| > tol · max|v|` (all channels).
pub fn sparsity_count(c: &CoefficientSet, tol: f64) -> SparsityCount {
    let threshold = tol.max(0.0) * c.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ch = c.channels;
    let nonzero = |v: f64| v.abs() > threshold;
    let per_block = c
        .layout
        .blocks
        .iter()
        .zip(c.layout.all_block_positions())
        .map(|(b, pos)| {
            let n = pos
                .iter()
                .flat_map(|&p| &c.data[p * ch..(p + 1) * ch])
                .filter(|&&v| nonzero(v))
                .count();
            (b.name.clone(), n)
        })
        .collect();
    SparsityCount {
        per_block,
        total: c.data.iter().filter(|&&v| nonzero(v)).count(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    /// `grid × grid` equal squares in a checkerboard of 0 and 255.
    IsoSquares { grid: usize },
    /// `count` rectangles from seeded dyadic guillotine cuts, each 0 or 255.
    AnisoRects { count: usize, seed: u64 },
}

/// Rectangle `(row0, col0, rows, cols)` of a generated pattern.
pub type Rect = (usize, usize, usize, usize);

/// Piecewise-constant grayscale test image of size `n × n`.
pub fn generate_pattern(kind: PatternKind, n: usize) -> Result<ImageTensor> {
    Ok(generate_pattern_rects(kind, n)?.0)
}

/// Like [`generate_pattern`], also returning the rectangles.
pub fn generate_pattern_rects(kind: PatternKind, n: usize) -> Result<(ImageTensor, Vec<Rect>)> {
    if !n.is_power_of_two() {
        return Err(Error::Argument(format!("pattern size {n} is not a power of two")));
    }
    match kind {
        PatternKind::IsoSquares { grid } => {
            if grid == 0 || n % grid != 0 {
                return Err(Error::Argument(format!("grid {grid} does not divide {n}")));
            }
            let s = n / grid;
            let img = ImageTensor::from_fn(n, n, 1, |r, c, _| {
                if (r / s + c / s) % 2 == 1 {
                    255.0
                } else {
                    0.0
                }
            });
            let rects = (0..grid * grid)
                .map(|i| ((i / grid) * s, (i % grid) * s, s, s))
                .collect();
            Ok((img, rects))
        }
        PatternKind::AnisoRects { count, seed } => {
            if count == 0 || count > n * n {
                return Err(Error::Argument(format!(
                    "cannot partition a {n}x{n} image into {count} rectangles"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rects: Vec<Rect> = vec![(0, 0, n, n)];
            while rects.len() < count {
                let i = rng.random_range(0..rects.len());
                let (r, c, h, w) = rects[i];
                let axes: Vec<bool> = [h >= 2, w >= 2]
                    .into_iter()
                    .enumerate()
                    .filter(|&(_, ok)| ok)
                    .map(|(a, _)| a == 0)
                    .collect();
                if axes.is_empty() {
                    continue;
                }
                let split_rows = axes[rng.random_range(0..axes.len())];
                if split_rows {
                    rects[i] = (r, c, h / 2, w);
                    rects.push((r + h / 2, c, h / 2, w));
                } else {
                    rects[i] = (r, c, h, w / 2);
                    rects.push((r, c + w / 2, h, w / 2));
                }
            }
            let mut img = ImageTensor::zeros(n, n, 1);
            for &(r, c, h, w) in &rects {
                let v = if rng.random_bool(0.5) { 255.0 } else { 0.0 };
                for y in r..r + h {
                    for x in c..c + w {
                        img.set(y, x, 0, v);
                    }
                }
            }
            Ok((img, rects))
        }
    }
}

/// Mean of the transformed images (before normalization), block-wise normalized.
pub fn average_fingerprint<I>(images: I, spec: &TransformSpec) -> Result<CoefficientSet>
where
    I: IntoIterator<Item = Result<ImageTensor>>,
{
    let mut mean: Option<CoefficientSet> = None;
    let mut count = 0usize;
    for img in images {
        let c = transforms::forward(&img?, spec)?;
        count += 1;
        match &mut mean {
            None => mean = Some(c),
            Some(m) => {
                if m.data.len() != c.data.len() || m.layout != c.layout {
                    return Err(Error::Argument(
                        "fingerprint images differ in size or channels".into(),
                    ));
                }
                // Running mean keeps memory independent of the set size.
                let k = count as f64;
                for (a, b) in m.data.iter_mut().zip(&c.data) {
                    *a += (b - *a) / k;
                }
            }
        }
    }
    let mean = mean.ok_or_else(|| Error::Argument("fingerprint needs at least one image".into()))?;
    Ok(blockwise_normalize(&mean))
}

/// Coefficients of the selected blocks, block by block (row-major inside a
/// block, channels interleaved).
pub fn block_values(c: &CoefficientSet, mut select: impl FnMut(&str) -> bool) -> Vec<f64> {
    let mut out = Vec::new();
    for (i, b) in c.layout.blocks.iter().enumerate() {
        if select(&b.name) {
            for p in c.layout.block_positions(i) {
                out.extend_from_slice(&c.data[p * c.channels..(p + 1) * c.channels]);
            }
        }
    }
    out
}

/// Whether a block holds finest-scale detail along some axis: FSWT blocks
/// with a `d1` factor (`d1_a3`, `a3_d1`, …) or the DWT block `d1`.
pub fn is_finest_detail(name: &str) -> bool {
    name.split('_').any(|part| part == "d1")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Orthonormal components, largest variance first.
    pub components: Vec<Vec<f64>>,
    /// Per-sample coordinates in the component basis.
    pub coordinates: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
}

impl Pca {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
            .collect()
    }
}

/// Mean-centred PCA keeping the top `k` components.
///
/// Uses the `D × D` covariance when the feature dimension is small and the
/// `N × N` Gram matrix otherwise. Each component's largest-magnitude entry
/// is made positive.
pub fn pca_project(features: &[Vec<f64>], k: usize) -> Result<Pca> {
    let n = features.len();
    if k == 0 || k > n {
        return Err(Error::Argument(format!("cannot take {k} components of {n} samples")));
    }
    let d = features[0].len();
    if d == 0 || features.iter().any(|f| f.len() != d) {
        return Err(Error::Argument("features must be non-empty and equally long".into()));
    }
    if k > d {
        return Err(Error::Argument(format!("cannot take {k} components in {d} dimensions")));
    }
    let mut mean = vec![0.0; d];
    for f in features {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v / n as f64;
        }
    }
    let x = DMatrix::from_fn(n, d, |i, j| features[i][j] - mean[j]);
    let (values, mut components): (Vec<f64>, Vec<Vec<f64>>) = if d <= n {
        let cov = x.transpose() * &x;
        let eig = SymmetricEigen::new(cov);
        let order = descending(eig.eigenvalues.as_slice());
        let vals = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let comps = order
            .iter()
            .take(k)
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (vals, comps)
    } else {
        let gram = &x * x.transpose();
        let eig = SymmetricEigen::new(gram);
        let order = descending(eig.eigenvalues.as_slice());
        let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let floor = 1e-12 * vals[0].max(f64::MIN_POSITIVE);
        let mut comps: Vec<Vec<f64>> = Vec::with_capacity(k);
        for (j, &i) in order.iter().take(k).enumerate() {
            if vals[j] <= floor {
                break;
            }
            let u = eig.eigenvectors.column(i);
            let v = x.transpose() * u / vals[j].sqrt();
            comps.push(v.iter().copied().collect());
        }
        complete_orthonormal(&mut comps, d, k);
        (vals, comps)
    };
    for c in &mut components {
        let big = c.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        if big < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let total: f64 = values.iter().sum();
    let explained_variance_ratio = values
        .iter()
        .take(k)
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect();
    let coordinates = (0..n)
        .map(|i| {
            components
                .iter()
                .map(|c| c.iter().zip(x.row(i).iter()).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    Ok(Pca {
        mean,
        components,
        coordinates,
        explained_variance_ratio,
    })
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Extends `comps` with unit vectors orthogonal to it until it has `k`
/// members (only needed when the data has fewer than `k` directions).
fn complete_orthonormal(comps: &mut Vec<Vec<f64>>, d: usize, k: usize) {
    let mut e = 0;
    while comps.len() < k && e < d {
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for c in comps.iter() {
                let dot: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            comps.push(v);
        }
    }
}

/// Best single-threshold accuracy for separating two labelled groups along
/// one coordinate (either orientation).
pub fn threshold_accuracy(values: &[f64], labels: &[bool]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let positives = labels.iter().filter(|&&l| l).count();
    // Predict "positive" above the cut; sweep the cut upwards.
    let mut below_pos = 0usize;
    let mut best = positives.max(n - positives);
    for (i, &idx) in order.iter().enumerate() {
        if labels[idx] {
            below_pos += 1;
        }
        let below = i + 1;
        if i + 1 < n && values[order[i + 1]] == values[idx] {
            continue;
        }
        let below_neg = below - below_pos;
        let above_pos = positives - below_pos;
        let correct = below_neg + above_pos;
        best = best.max(correct).max(n - correct);
    }
    best as f64 / n as f64
}
