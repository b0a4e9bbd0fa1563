//! Block-wise normalization and classifier-ready feature tensors.

use crate::error::{Error, Result};
use crate::spec::{TransformKind, TransformSpec};
use crate::tensor::{CoefficientSet, ImageTensor};
use crate::transforms;

/// Divides every block, per channel, by its largest magnitude.
///
/// All-zero blocks are left alone so the zero pattern survives; padding
/// gaps are not blocks and stay zero.
pub fn blockwise_normalize(c: &CoefficientSet) -> CoefficientSet {
    let mut out = c.clone();
    let ch = c.channels;
    for positions in c.layout.all_block_positions() {
        for channel in 0..ch {
            let max = positions
                .iter()
                .map(|&p| c.data[p * ch + channel].abs())
                .fold(0.0, f64::max);
            if max > 0.0 {
                for &p in &positions {
                    out.data[p * ch + channel] /= max;
                }
            }
        }
    }
    out
}

/// Transform → (optional) block-wise normalization → feature tensor.
///
/// Packet coefficients are stacked along channels (packet-major, so channel
/// `k·C + c` is packet `k` of input channel `c`); every other kind keeps its
/// canvas. For the pixel spec the whole image is a single block, scaled by
/// its global maximum.
pub fn extract_features(img: &ImageTensor, spec: &TransformSpec) -> Result<ImageTensor> {
    if spec.kind == TransformKind::Pixels {
        let max = img.max_abs();
        return Ok(if spec.bn && max > 0.0 {
            img.map(|v| v / max)
        } else {
            img.clone()
        });
    }
    let coeffs = transforms::forward(img, spec)?;
    let coeffs = if spec.bn {
        blockwise_normalize(&coeffs)
    } else {
        coeffs
    };
    if spec.kind == TransformKind::Dwpt {
        stack_packets(&coeffs)
    } else {
        Ok(coeffs.to_image())
    }
}

/// Rearranges a packet canvas into `packet_rows × packet_cols × (C·4^l)`.
pub fn stack_packets(c: &CoefficientSet) -> Result<ImageTensor> {
    let blocks = &c.layout.blocks;
    let first = blocks
        .first()
        .ok_or_else(|| Error::Layout("packet layout has no blocks".into()))?;
    let (pr, pc) = (first.rows.len(), first.cols.len());
    if blocks.iter().any(|b| b.rows.len() != pr || b.cols.len() != pc) {
        return Err(Error::Shape(
            "packets differ in size and cannot be stacked along channels".into(),
        ));
    }
    let ch = c.channels;
    let out_ch = ch * blocks.len();
    let cols = c.layout.cols;
    let mut data = vec![0.0; pr * pc * out_ch];
    for (k, b) in blocks.iter().enumerate() {
        for r in 0..pr {
            for col in 0..pc {
                let src = ((b.rows.start + r) * cols + b.cols.start + col) * ch;
                let dst = (r * pc + col) * out_ch + k * ch;
                data[dst..dst + ch].copy_from_slice(&c.data[src..src + ch]);
            }
        }
    }
    ImageTensor::new(pr, pc, out_ch, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{Block, SubbandLayout};

    fn two_blocks(values: Vec<f64>) -> CoefficientSet {
        let mut layout = SubbandLayout::single(TransformSpec::dct(), "x", 1, values.len());
        let half = values.len() / 2;
        layout.blocks = vec![Block::new("a", 0..1, 0..half), Block::new("b", 0..1, half..values.len())];
        CoefficientSet::new(values, 1, layout).unwrap()
    }

    #[test]
    fn examples() {
        let mut one = two_blocks(vec![-2.0, 0.0, 4.0, 0.0, 0.0, 0.0]);
        one.layout.blocks = vec![Block::new("a", 0..1, 0..3), Block::new("z", 0..1, 3..6)];
        assert_eq!(blockwise_normalize(&one).data, vec![-0.5, 0.0, 1.0, 0.0, 0.0, 0.0]);

        let two = two_blocks(vec![1.0, 2.0, 10.0, 20.0]);
        assert_eq!(blockwise_normalize(&two).data, vec![0.5, 1.0, 0.5, 1.0]);
    }

    #[test]
    fn idempotent_and_scale_invariant() {
        let c = two_blocks(vec![0.3, -7.0, 2.5, 0.0, 1e-3, -4.0, 0.0, 9.0]);
        let n = blockwise_normalize(&c);
        let nn = blockwise_normalize(&n);
        assert!(n.data.iter().zip(&nn.data).all(|(a, b)| (a - b).abs() < 1e-12));
        let mut scaled = c.clone();
        scaled.data.iter_mut().for_each(|v| *v *= 8.0);
        assert_eq!(blockwise_normalize(&scaled).data, n.data);
    }
}
