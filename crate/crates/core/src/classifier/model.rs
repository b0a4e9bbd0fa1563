use std::fmt::Debug;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CONV_CHANNELS;
use crate::error::{Error, Result};
use crate::tensor::ImageTensor;

/// Scalar type of a model: `f32` for training runs, `f64` for gradient checks.
pub trait Real: Float + Send + Sync + Debug + Default + 'static {
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}

/// 3×3 "same" convolution. Weights are `[out][in][ky][kx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv<T> {
    pub in_ch: usize,
    pub out_ch: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Fully connected layer. Weights are `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// All weights of the network. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnParams<T> {
    /// Input shape `(channels, height, width)`.
    pub input: (usize, usize, usize),
    pub classes: usize,
    pub convs: [Conv<T>; 4],
    pub dense: Dense<T>,
}

impl<T: Real> CnnParams<T> {
    /// Zero-valued parameters of the given architecture.
    pub fn zeros(input: (usize, usize, usize), classes: usize) -> Result<Self> {
        let (c, h, w) = input;
        if h < 8 || w < 8 || c == 0 || classes == 0 {
            return Err(Error::Shape(format!(
                "input {h}x{w}x{c} with {classes} classes is too small (need at least 8x8)"
            )));
        }
        let mut in_ch = c;
        let convs = CONV_CHANNELS.map(|out_ch| {
            let conv = Conv {
                in_ch,
                out_ch,
                weight: vec![T::zero(); out_ch * in_ch * 9],
                bias: vec![T::zero(); out_ch],
            };
            in_ch = out_ch;
            conv
        });
        let (dh, dw) = Self::pooled(h, w);
        let inputs = CONV_CHANNELS[3] * dh * dw;
        Ok(CnnParams {
            input,
            classes,
            convs,
            dense: Dense {
                inputs,
                outputs: classes,
                weight: vec![T::zero(); inputs * classes],
                bias: vec![T::zero(); classes],
            },
        })
    }

    /// Spatial size after the two pooling stages.
    pub fn pooled(h: usize, w: usize) -> (usize, usize) {
        (h / 2 / 2, w / 2 / 2)
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.blocks_mut().into_iter().for_each(|(_, b)| b.fill(T::zero()));
        z
    }

    /// Named parameter blocks in a fixed order.
    pub fn blocks(&self) -> Vec<(String, &[T])> {
        let mut out = Vec::with_capacity(10);
        for (i, c) in self.convs.iter().enumerate() {
            out.push((format!("conv{}.weight", i + 1), c.weight.as_slice()));
            out.push((format!("conv{}.bias", i + 1), c.bias.as_slice()));
        }
        out.push(("dense.weight".to_string(), self.dense.weight.as_slice()));
        out.push(("dense.bias".to_string(), self.dense.bias.as_slice()));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<(String, &mut [T])> {
        let mut out = Vec::with_capacity(10);
        for (i, c) in self.convs.iter_mut().enumerate() {
            out.push((format!("conv{}.weight", i + 1), c.weight.as_mut_slice()));
            out.push((format!("conv{}.bias", i + 1), c.bias.as_mut_slice()));
        }
        out.push(("dense.weight".to_string(), self.dense.weight.as_mut_slice()));
        out.push(("dense.bias".to_string(), self.dense.bias.as_mut_slice()));
        out
    }

    /// Fan-in of every block, matching [`blocks`](Self::blocks).
    fn fan_ins(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for c in &self.convs {
            out.push(c.in_ch * 9);
            out.push(c.in_ch * 9);
        }
        out.push(self.dense.inputs);
        out.push(self.dense.inputs);
        out
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    pub fn cast<U: Real>(&self) -> CnnParams<U> {
        let conv = |c: &Conv<T>| Conv {
            in_ch: c.in_ch,
            out_ch: c.out_ch,
            weight: c.weight.iter().map(|v| U::from_f64(v.as_f64())).collect(),
            bias: c.bias.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        };
        CnnParams {
            input: self.input,
            classes: self.classes,
            convs: [
                conv(&self.convs[0]),
                conv(&self.convs[1]),
                conv(&self.convs[2]),
                conv(&self.convs[3]),
            ],
            dense: Dense {
                inputs: self.dense.inputs,
                outputs: self.dense.outputs,
                weight: self.dense.weight.iter().map(|v| U::from_f64(v.as_f64())).collect(),
                bias: self.dense.bias.iter().map(|v| U::from_f64(v.as_f64())).collect(),
            },
        }
    }

    /// Element-wise `self += other`.
    pub fn add_assign(&mut self, other: &Self) {
        for ((_, a), (_, b)) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x = *x + y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for (_, a) in self.blocks_mut() {
            for x in a.iter_mut() {
                *x = *x * s;
            }
        }
    }
}

/// Seeded initialization: every weight and bias drawn from
/// `U(−1/√fan_in, 1/√fan_in)`, block by block in [`CnnParams::blocks`] order.
pub fn init_params<T: Real>(
    seed: u64,
    input: (usize, usize, usize),
    classes: usize,
) -> Result<CnnParams<T>> {
    let mut p = CnnParams::<T>::zeros(input, classes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fans = p.fan_ins();
    for ((_, block), fan) in p.blocks_mut().into_iter().zip(fans) {
        let bound = 1.0 / (fan as f64).sqrt();
        for v in block.iter_mut() {
            *v = T::from_f64(rng.random_range(-bound..bound));
        }
    }
    Ok(p)
}

/// In-memory features in channel-major (`C × H × W`) order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub shape: (usize, usize, usize),
    pub samples: Vec<Vec<T>>,
    pub labels: Vec<usize>,
}

impl<T: Real> Dataset<T> {
    pub fn new(shape: (usize, usize, usize)) -> Self {
        Dataset {
            shape,
            samples: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Converts channel-last feature tensors.
    pub fn from_images(images: &[ImageTensor], labels: &[usize]) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::Argument("dataset needs at least one sample".into()))?;
        let (h, w, c) = first.shape();
        let mut ds = Dataset::new((c, h, w));
        for (img, &label) in images.iter().zip(labels) {
            ds.push(img, label)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, img: &ImageTensor, label: usize) -> Result<()> {
        let (c, h, w) = self.shape;
        if img.shape() != (h, w, c) {
            return Err(Error::Shape(format!(
                "sample {:?} does not match dataset shape {h}x{w}x{c}",
                img.shape()
            )));
        }
        let data = img.data();
        let mut x = vec![T::zero(); c * h * w];
        for p in 0..h * w {
            for ch in 0..c {
                x[ch * h * w + p] = T::from_f64(data[p * c + ch]);
            }
        }
        self.samples.push(x);
        self.labels.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Dataset {
            shape: self.shape,
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Activation buffers for one forward/backward pass.
#[derive(Debug, Clone)]
pub struct Workspace<T> {
    a1: Vec<T>,
    a2: Vec<T>,
    p2: Vec<T>,
    a3: Vec<T>,
    p3: Vec<T>,
    a4: Vec<T>,
    logits: Vec<T>,
    g_a: Vec<T>,
    g_b: Vec<T>,
}

impl<T: Real> Workspace<T> {
    pub fn new(p: &CnnParams<T>) -> Self {
        let (_, h, w) = p.input;
        let (h2, w2) = (h / 2, w / 2);
        let (h4, w4) = (h2 / 2, w2 / 2);
        let z = |n: usize| vec![T::zero(); n];
        let widest = 8 * h * w;
        Workspace {
            a1: z(3 * h * w),
            a2: z(8 * h * w),
            p2: z(8 * h2 * w2),
            a3: z(16 * h2 * w2),
            p3: z(16 * h4 * w4),
            a4: z(32 * h4 * w4),
            logits: z(p.classes),
            g_a: z(widest.max(p.input.0 * h * w)),
            g_b: z(widest.max(p.input.0 * h * w)),
        }
    }

    pub fn logits(&self) -> &[T] {
        &self.logits
    }
}

fn conv_forward<T: Real>(conv: &Conv<T>, input: &[T], h: usize, w: usize, out: &mut [T]) {
    let hw = h * w;
    for o in 0..conv.out_ch {
        let out_o = &mut out[o * hw..(o + 1) * hw];
        out_o.fill(conv.bias[o]);
        for c in 0..conv.in_ch {
            let inp = &input[c * hw..(c + 1) * hw];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wv = conv.weight[((o * conv.in_ch + c) * 3 + ky) * 3 + kx];
                    let (y0, y1) = (usize::from(ky == 0), if ky == 2 { h - 1 } else { h });
                    let (x0, x1) = (usize::from(kx == 0), if kx == 2 { w - 1 } else { w });
                    for y in y0..y1 {
                        let iy = y + ky - 1;
                        let orow = &mut out_o[y * w + x0..y * w + x1];
                        let irow = &inp[iy * w + x0 + kx - 1..iy * w + x1 + kx - 1];
                        for (ov, &iv) in orow.iter_mut().zip(irow) {
                            *ov = *ov + wv * iv;
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates weight/bias gradients and (optionally) the input gradient.
fn conv_backward<T: Real>(
    conv: &Conv<T>,
    input: &[T],
    h: usize,
    w: usize,
    g_out: &[T],
    grad: &mut Conv<T>,
    mut g_in: Option<&mut [T]>,
) {
    let hw = h * w;
    if let Some(g) = g_in.as_deref_mut() {
        g[..conv.in_ch * hw].fill(T::zero());
    }
    for o in 0..conv.out_ch {
        let go = &g_out[o * hw..(o + 1) * hw];
        grad.bias[o] = grad.bias[o] + go.iter().fold(T::zero(), |a, &b| a + b);
        for c in 0..conv.in_ch {
            let inp = &input[c * hw..(c + 1) * hw];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wi = ((o * conv.in_ch + c) * 3 + ky) * 3 + kx;
                    let wv = conv.weight[wi];
                    let (y0, y1) = (usize::from(ky == 0), if ky == 2 { h - 1 } else { h });
                    let (x0, x1) = (usize::from(kx == 0), if kx == 2 { w - 1 } else { w });
                    let mut acc = T::zero();
                    for y in y0..y1 {
                        let iy = y + ky - 1;
                        let grow = &go[y * w + x0..y * w + x1];
                        let irow = &inp[iy * w + x0 + kx - 1..iy * w + x1 + kx - 1];
                        for (&gv, &iv) in grow.iter().zip(irow) {
                            acc = acc + gv * iv;
                        }
                        if let Some(g) = g_in.as_deref_mut() {
                            let gi = &mut g[c * hw + iy * w + x0 + kx - 1..c * hw + iy * w + x1 + kx - 1];
                            for (gv, &o_) in gi.iter_mut().zip(grow) {
                                *gv = *gv + wv * o_;
                            }
                        }
                    }
                    grad.weight[wi] = grad.weight[wi] + acc;
                }
            }
        }
    }
}

fn relu<T: Real>(x: &mut [T]) {
    for v in x {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Zeroes gradient entries where the ReLU output was not positive.
fn relu_backward<T: Real>(out: &[T], g: &mut [T]) {
    for (gv, &o) in g.iter_mut().zip(out) {
        if o <= T::zero() {
            *gv = T::zero();
        }
    }
}

fn pool_forward<T: Real>(input: &[T], ch: usize, h: usize, w: usize, out: &mut [T]) {
    let (ho, wo) = (h / 2, w / 2);
    let q = T::from_f64(0.25);
    for c in 0..ch {
        for y in 0..ho {
            for x in 0..wo {
                let i = c * h * w + 2 * y * w + 2 * x;
                out[c * ho * wo + y * wo + x] =
                    (input[i] + input[i + 1] + input[i + w] + input[i + w + 1]) * q;
            }
        }
    }
}

fn pool_backward<T: Real>(g_out: &[T], ch: usize, h: usize, w: usize, g_in: &mut [T]) {
    let (ho, wo) = (h / 2, w / 2);
    let q = T::from_f64(0.25);
    g_in[..ch * h * w].fill(T::zero());
    for c in 0..ch {
        for y in 0..ho {
            for x in 0..wo {
                let g = g_out[c * ho * wo + y * wo + x] * q;
                let i = c * h * w + 2 * y * w + 2 * x;
                g_in[i] = g;
                g_in[i + 1] = g;
                g_in[i + w] = g;
                g_in[i + w + 1] = g;
            }
        }
    }
}

impl<T: Real> CnnParams<T> {
    /// Forward pass; class scores end up in `ws.logits()`.
    pub fn forward_into(&self, x: &[T], ws: &mut Workspace<T>) {
        let (_, h, w) = self.input;
        let (h2, w2) = (h / 2, w / 2);
        let (h4, w4) = (h2 / 2, w2 / 2);
        conv_forward(&self.convs[0], x, h, w, &mut ws.a1);
        relu(&mut ws.a1);
        conv_forward(&self.convs[1], &ws.a1, h, w, &mut ws.a2);
        relu(&mut ws.a2);
        pool_forward(&ws.a2, 8, h, w, &mut ws.p2);
        conv_forward(&self.convs[2], &ws.p2, h2, w2, &mut ws.a3);
        relu(&mut ws.a3);
        pool_forward(&ws.a3, 16, h2, w2, &mut ws.p3);
        conv_forward(&self.convs[3], &ws.p3, h4, w4, &mut ws.a4);
        relu(&mut ws.a4);
        let d = &self.dense;
        for k in 0..d.outputs {
            let row = &d.weight[k * d.inputs..(k + 1) * d.inputs];
            ws.logits[k] = row
                .iter()
                .zip(&ws.a4)
                .fold(d.bias[k], |acc, (&a, &b)| acc + a * b);
        }
    }

    /// Class scores of one sample.
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let mut ws = Workspace::new(self);
        self.forward_into(x, &mut ws);
        ws.logits
    }

    /// Cross-entropy loss of one sample; adds its gradient into `grad`.
    pub fn backward_into(
        &self,
        x: &[T],
        label: usize,
        ws: &mut Workspace<T>,
        grad: &mut CnnParams<T>,
    ) -> T {
        self.forward_into(x, ws);
        let (_, h, w) = self.input;
        let (h2, w2) = (h / 2, w / 2);
        let (h4, w4) = (h2 / 2, w2 / 2);
        let max = ws.logits.iter().copied().fold(T::neg_infinity(), T::max);
        let sum = ws.logits.iter().fold(T::zero(), |a, &l| a + (l - max).exp());
        let loss = sum.ln() + max - ws.logits[label];
        let d = &self.dense;
        // g_logits = softmax - onehot
        let g_logits: Vec<T> = ws
            .logits
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                let p = (l - max).exp() / sum;
                if k == label {
                    p - T::one()
                } else {
                    p
                }
            })
            .collect();
        let n4 = d.inputs;
        let g_a4 = &mut ws.g_a[..n4];
        g_a4.fill(T::zero());
        for (k, &g) in g_logits.iter().enumerate() {
            grad.dense.bias[k] = grad.dense.bias[k] + g;
            let row = &d.weight[k * n4..(k + 1) * n4];
            let grow = &mut grad.dense.weight[k * n4..(k + 1) * n4];
            for ((gw, &a), (ga, &wv)) in grow.iter_mut().zip(&ws.a4).zip(g_a4.iter_mut().zip(row)) {
                *gw = *gw + g * a;
                *ga = *ga + g * wv;
            }
        }
        relu_backward(&ws.a4, &mut ws.g_a[..n4]);
        // conv4: input p3 (16 × h4 × w4)
        conv_backward(
            &self.convs[3],
            &ws.p3,
            h4,
            w4,
            &ws.g_a[..n4],
            &mut grad.convs[3],
            Some(&mut ws.g_b),
        );
        pool_backward(&ws.g_b, 16, h2, w2, &mut ws.g_a);
        relu_backward(&ws.a3, &mut ws.g_a[..16 * h2 * w2]);
        conv_backward(
            &self.convs[2],
            &ws.p2,
            h2,
            w2,
            &ws.g_a[..16 * h2 * w2],
            &mut grad.convs[2],
            Some(&mut ws.g_b),
        );
        pool_backward(&ws.g_b, 8, h, w, &mut ws.g_a);
        relu_backward(&ws.a2, &mut ws.g_a[..8 * h * w]);
        conv_backward(
            &self.convs[1],
            &ws.a1,
            h,
            w,
            &ws.g_a[..8 * h * w],
            &mut grad.convs[1],
            Some(&mut ws.g_b),
        );
        relu_backward(&ws.a1, &mut ws.g_b[..3 * h * w]);
        conv_backward(
            &self.convs[0],
            x,
            h,
            w,
            &ws.g_b[..3 * h * w],
            &mut grad.convs[0],
            None,
        );
        loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts() {
        let count = |n: usize| CnnParams::<f32>::zeros((3, n, n), 5).unwrap().num_params();
        assert_eq!(count(128), 169_961);
        assert_eq!(count(141), 202_121);
        assert_eq!(count(148), 225_161);
    }

    #[test]
    fn zero_weights_give_uniform_loss() {
        let p = CnnParams::<f64>::zeros((2, 8, 8), 4).unwrap();
        let mut g = p.zeros_like();
        let mut ws = Workspace::new(&p);
        let loss = p.backward_into(&[0.3; 128], 1, &mut ws, &mut g);
        assert!((loss - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_params::<f32>(0, (3, 16, 16), 5).unwrap();
        let b = init_params::<f32>(0, (3, 16, 16), 5).unwrap();
        assert_eq!(a, b);
        let c = init_params::<f32>(1, (3, 16, 16), 5).unwrap();
        assert_ne!(a, c);
        let bound = 1.0 / 27f32.sqrt();
        assert!(a.convs[0].weight.iter().all(|v| v.abs() <= bound));
        assert!(CnnParams::<f32>::zeros((3, 7, 7), 2).is_err());
    }
}
