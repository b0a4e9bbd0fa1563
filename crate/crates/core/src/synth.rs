//! Synthetic two-source data for desk-scale studies.
//!
//! "Real" images are seeded smooth random fields. "Fake" images take the
//! same field, halve its resolution and bring it back with a stride-2
//! transposed convolution whose 3-tap kernel is slightly off the linear
//! interpolator. The uneven overlap of a stride-2, size-3 kernel leaves the
//! period-2 checkerboard that CNN generators are known for.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::derive_seed;
use crate::tensor::ImageTensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Side length (even).
    pub size: usize,
    pub channels: usize,
    /// Random cosine components per field.
    pub components: usize,
    /// Highest spatial frequency, in cycles per image.
    pub max_freq: f64,
    /// Side tap of the `[s, 1, s]` upsampling kernel; 0.5 is exact linear
    /// interpolation, anything else leaves a period-2 pattern.
    pub side_tap: f64,
    /// Std of the sensor-like noise added to both sources (gray levels).
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            size: 64,
            channels: 3,
            components: 24,
            max_freq: 6.0,
            side_tap: 0.44,
            noise: 2.0,
        }
    }
}

/// Smooth field in `[0, 255]`: a random sum of low-frequency cosines,
/// shared across channels up to per-channel gain and offset.
pub fn smooth_field(cfg: &SynthConfig, seed: u64) -> ImageTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.size;
    let comps: Vec<(f64, f64, f64, f64)> = (0..cfg.components)
        .map(|_| {
            let fx = rng.random_range(-cfg.max_freq..=cfg.max_freq);
            let fy = rng.random_range(-cfg.max_freq..=cfg.max_freq);
            let amp = rng.random_range(0.2..1.0) / (1.0 + fx.hypot(fy));
            (fx, fy, rng.random_range(0.0..2.0 * PI), amp)
        })
        .collect();
    let norm: f64 = comps.iter().map(|c| c.3).sum::<f64>().max(1e-12);
    let mut base = vec![0.0; n * n];
    for (r, row) in base.chunks_mut(n).enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let (y, x) = (r as f64 / n as f64, c as f64 / n as f64);
            *v = comps
                .iter()
                .map(|&(fx, fy, ph, a)| a * (2.0 * PI * (fx * x + fy * y) + ph).cos())
                .sum::<f64>()
                / norm;
        }
    }
    let gains: Vec<(f64, f64)> = (0..cfg.channels)
        .map(|_| (rng.random_range(60.0..110.0), rng.random_range(100.0..155.0)))
        .collect();
    ImageTensor::from_fn(n, n, cfg.channels, |r, c, ch| {
        let (g, o) = gains[ch];
        (o + g * base[r * n + c]).clamp(0.0, 255.0)
    })
}

/// 2×2 average pooling.
pub fn downsample2(img: &ImageTensor) -> ImageTensor {
    let (h, w, c) = img.shape();
    ImageTensor::from_fn(h / 2, w / 2, c, |r, x, ch| {
        0.25 * (img.get(2 * r, 2 * x, ch)
            + img.get(2 * r + 1, 2 * x, ch)
            + img.get(2 * r, 2 * x + 1, ch)
            + img.get(2 * r + 1, 2 * x + 1, ch))
    })
}

/// Stride-2 transposed convolution with the separable kernel `k ⊗ k`
/// (`k` of length 3, centred), doubling both sides. Border taps that fall
/// outside are dropped and the result is renormalized by the summed weight
/// of a constant image, so flat regions stay flat away from the pattern.
pub fn transposed_conv_upsample(img: &ImageTensor, k: [f64; 3]) -> ImageTensor {
    let (h, w, c) = img.shape();
    let up = |len: usize, src: &dyn Fn(usize) -> f64, out: &mut [f64]| {
        out.fill(0.0);
        for i in 0..len {
            let v = src(i);
            for (t, &kt) in k.iter().enumerate() {
                let o = 2 * i + t;
                // centre tap lands on 2i
                if let Some(o) = o.checked_sub(1) {
                    if o < 2 * len {
                        out[o] += kt * v;
                    }
                }
            }
        }
    };
    // Row pass then column pass.
    let mut tmp = ImageTensor::zeros(h, 2 * w, c);
    let mut buf = vec![0.0; 2 * w];
    for r in 0..h {
        for ch in 0..c {
            up(w, &|i| img.get(r, i, ch), &mut buf);
            for (x, &v) in buf.iter().enumerate() {
                tmp.set(r, x, ch, v);
            }
        }
    }
    let mut out = ImageTensor::zeros(2 * h, 2 * w, c);
    let mut buf = vec![0.0; 2 * h];
    for x in 0..2 * w {
        for ch in 0..c {
            up(h, &|i| tmp.get(i, x, ch), &mut buf);
            for (r, &v) in buf.iter().enumerate() {
                out.set(r, x, ch, v);
            }
        }
    }
    // Mean gain of the kernel is (k0 + k1 + k2) / 2 per axis.
    let gain = ((k[0] + k[1] + k[2]) / 2.0).powi(2);
    out.map(|v| (v / gain).clamp(0.0, 255.0))
}

fn add_sensor_noise(img: &ImageTensor, sigma: f64, rng: &mut impl Rng) -> ImageTensor {
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    img.map(|v| (v + normal.sample(rng)).clamp(0.0, 255.0).round())
}

/// The pair generated from one field seed: `(real, fake)`.
pub fn source_pair(cfg: &SynthConfig, seed: u64) -> Result<(ImageTensor, ImageTensor)> {
    if cfg.size < 8 || cfg.size % 2 != 0 || cfg.channels == 0 {
        return Err(Error::Argument(format!(
            "synthetic size {} must be even and at least 8",
            cfg.size
        )));
    }
    let field = smooth_field(cfg, seed);
    let fake = transposed_conv_upsample(&downsample2(&field), [cfg.side_tap, 1.0, cfg.side_tap]);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5eed));
    let real = add_sensor_noise(&field, cfg.noise, &mut rng);
    let fake = add_sensor_noise(&fake, cfg.noise, &mut rng);
    Ok((real, fake))
}

/// `per_class` real images (label 0) followed by their fakes (label 1).
/// Real and fake come from independent fields so no pair shares content.
pub fn two_source_dataset(
    cfg: &SynthConfig,
    per_class: usize,
    seed: u64,
) -> Result<(Vec<ImageTensor>, Vec<usize>)> {
    let mut images = Vec::with_capacity(2 * per_class);
    let mut fakes = Vec::with_capacity(per_class);
    for i in 0..per_class as u64 {
        let (real, _) = source_pair(cfg, derive_seed(seed, 2 * i))?;
        let (_, fake) = source_pair(cfg, derive_seed(seed, 2 * i + 1))?;
        images.push(real);
        fakes.push(fake);
    }
    images.extend(fakes);
    let labels = (0..2 * per_class).map(|i| usize::from(i >= per_class)).collect();
    Ok((images, labels))
}
