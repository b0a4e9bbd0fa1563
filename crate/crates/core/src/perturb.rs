//! Image perturbations used for the robustness study: blur, crop, JPEG and
//! Gaussian noise, plus the "perturb with probability 1/2" protocol.


use image::codecs::jpeg::JpegEncoder;
use image::{ExtendedColorType, ImageEncoder};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::ImageTensor;

pub const BLUR_KERNELS: [usize; 4] = [3, 5, 7, 9];

/// Which perturbation was applied, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    None,
    Blur { kernel: usize },
    Crop { percent: f64 },
    Jpeg { quality: u8 },
    Noise { variance: f64 },
}

impl Perturbation {
    pub fn name(&self) -> &'static str {
        match self {
            Perturbation::None => "none",
            Perturbation::Blur { .. } => "blur",
            Perturbation::Crop { .. } => "crop",
            Perturbation::Jpeg { .. } => "jpeg",
            Perturbation::Noise { .. } => "noise",
        }
    }

    /// Parameter value as text (empty when unperturbed).
    pub fn parameter(&self) -> String {
        match self {
            Perturbation::None => String::new(),
            Perturbation::Blur { kernel } => kernel.to_string(),
            Perturbation::Crop { percent } => format!("{percent:.4}"),
            Perturbation::Jpeg { quality } => quality.to_string(),
            Perturbation::Noise { variance } => format!("{variance:.4}"),
        }
    }

    pub fn apply(&self, img: &ImageTensor, rng: &mut impl Rng) -> Result<ImageTensor> {
        match *self {
            Perturbation::None => Ok(img.clone()),
            Perturbation::Blur { kernel } => gaussian_blur(img, kernel),
            Perturbation::Crop { percent } => random_crop(img, percent),
            Perturbation::Jpeg { quality } => jpeg_roundtrip(img, quality),
            Perturbation::Noise { variance } => add_noise(img, variance, rng),
        }
    }
}

/// Normalized 1D Gaussian with the customary size-derived sigma
/// `0.3·((k−1)/2 − 1) + 0.8`.
pub fn gaussian_kernel(size: usize) -> Vec<f64> {
    let sigma = 0.3 * ((size as f64 - 1.0) / 2.0 - 1.0) + 0.8;
    let c = (size / 2) as f64;
    let w: Vec<f64> = (0..size)
        .map(|i| (-(i as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn reflect101(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Separable Gaussian blur with mirrored borders.
pub fn gaussian_blur(img: &ImageTensor, kernel_size: usize) -> Result<ImageTensor> {
    if !BLUR_KERNELS.contains(&kernel_size) {
        return Err(Error::Argument(format!(
            "blur kernel size {kernel_size} is not one of 3, 5, 7, 9"
        )));
    }
    let k = gaussian_kernel(kernel_size);
    let half = (kernel_size / 2) as isize;
    let (h, w, c) = img.shape();
    let mut tmp = ImageTensor::zeros(h, w, c);
    for r in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let v: f64 = k
                    .iter()
                    .enumerate()
                    .map(|(i, kv)| kv * img.get(r, reflect101(x as isize + i as isize - half, w), ch))
                    .sum();
                tmp.set(r, x, ch, v);
            }
        }
    }
    let mut out = ImageTensor::zeros(h, w, c);
    for r in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let v: f64 = k
                    .iter()
                    .enumerate()
                    .map(|(i, kv)| kv * tmp.get(reflect101(r as isize + i as isize - half, h), x, ch))
                    .sum();
                out.set(r, x, ch, v.clamp(0.0, 255.0));
            }
        }
    }
    Ok(out)
}

/// Bilinear resize with pixel-centre alignment.
pub fn resize_bilinear(img: &ImageTensor, new_h: usize, new_w: usize) -> ImageTensor {
    let (h, w, c) = img.shape();
    let map = |dst: usize, from: usize, to: usize| -> (usize, usize, f64) {
        let s = ((dst as f64 + 0.5) * from as f64 / to as f64 - 0.5).max(0.0);
        let i0 = (s.floor() as usize).min(from - 1);
        let i1 = (i0 + 1).min(from - 1);
        (i0, i1, s - i0 as f64)
    };
    let rows: Vec<_> = (0..new_h).map(|r| map(r, h, new_h)).collect();
    let cols: Vec<_> = (0..new_w).map(|x| map(x, w, new_w)).collect();
    ImageTensor::from_fn(new_h, new_w, c, |r, x, ch| {
        let (r0, r1, fr) = rows[r];
        let (c0, c1, fc) = cols[x];
        let top = img.get(r0, c0, ch) * (1.0 - fc) + img.get(r0, c1, ch) * fc;
        let bottom = img.get(r1, c0, ch) * (1.0 - fc) + img.get(r1, c1, ch) * fc;
        top * (1.0 - fr) + bottom * fr
    })
}

/// Removes `percent`% of each dimension around the centre, then resizes back.
pub fn random_crop(img: &ImageTensor, percent: f64) -> Result<ImageTensor> {
    if !(0.0..100.0).contains(&percent) {
        return Err(Error::Argument(format!("crop percentage {percent} out of range")));
    }
    let (h, w, _) = img.shape();
    let keep = |n: usize| ((n as f64 * (100.0 - percent) / 100.0).round() as usize).clamp(1, n);
    let (kh, kw) = (keep(h), keep(w));
    let (r0, c0) = ((h - kh) / 2, (w - kw) / 2);
    let cropped = ImageTensor::from_fn(kh, kw, img.channels(), |r, c, ch| img.get(r0 + r, c0 + c, ch));
    Ok(resize_bilinear(&cropped, h, w))
}

/// Baseline JPEG encode/decode at `quality` (1..=100); 1- or 3-channel only.
pub fn jpeg_roundtrip(img: &ImageTensor, quality: u8) -> Result<ImageTensor> {
    let (h, w, c) = img.shape();
    let color = match c {
        1 => ExtendedColorType::L8,
        3 => ExtendedColorType::Rgb8,
        _ => return Err(Error::Perturbation(format!("JPEG needs 1 or 3 channels, got {c}"))),
    };
    if !(1..=100).contains(&quality) {
        return Err(Error::Argument(format!("JPEG quality {quality} out of range")));
    }
    let bytes: Vec<u8> = img.data().iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, quality)
        .write_image(&bytes, w as u32, h as u32, color)
        .map_err(|e| Error::Perturbation(format!("JPEG encode: {e}")))?;
    let decoded = image::load_from_memory_with_format(&buf, image::ImageFormat::Jpeg)
        .map_err(|e| Error::Perturbation(format!("JPEG decode: {e}")))?;
    let data: Vec<f64> = if c == 1 {
        decoded.to_luma8().into_raw().into_iter().map(f64::from).collect()
    } else {
        decoded.to_rgb8().into_raw().into_iter().map(f64::from).collect()
    };
    ImageTensor::new(h, w, c, data)
}

/// Adds `N(0, variance)` noise, clips to `[0, 255]` and rounds to integers.
pub fn add_noise(img: &ImageTensor, variance: f64, rng: &mut impl Rng) -> Result<ImageTensor> {
    let normal = Normal::new(0.0, variance.max(0.0).sqrt())
        .map_err(|e| Error::Argument(format!("noise variance {variance}: {e}")))?;
    let data = img
        .data()
        .iter()
        .map(|&v| (v + normal.sample(rng)).clamp(0.0, 255.0).round())
        .collect();
    let (h, w, c) = img.shape();
    ImageTensor::new(h, w, c, data)
}

/// Draws a perturbation: none with probability 1/2, otherwise one of the
/// four kinds uniformly with parameters from their sampling ranges.
pub fn sample_perturbation(rng: &mut impl Rng) -> Perturbation {
    if rng.random_bool(0.5) {
        return Perturbation::None;
    }
    match rng.random_range(0..4) {
        0 => Perturbation::Blur {
            kernel: BLUR_KERNELS[rng.random_range(0..BLUR_KERNELS.len())],
        },
        1 => Perturbation::Crop {
            percent: rng.random_range(5.0..20.0),
        },
        2 => Perturbation::Jpeg {
            quality: rng.random_range(10..=75),
        },
        _ => Perturbation::Noise {
            variance: rng.random_range(5.0..20.0),
        },
    }
}

/// Applies the sampling protocol to one image.
pub fn perturb_pipeline(img: &ImageTensor, rng: &mut impl Rng) -> Result<(ImageTensor, Perturbation)> {
    let p = sample_perturbation(rng);
    Ok((p.apply(img, rng)?, p))
}

/// Per-image seed derived from a global seed (SplitMix64 finalizer).
pub fn derive_seed(global: u64, index: u64) -> u64 {
    let mut z = global ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
