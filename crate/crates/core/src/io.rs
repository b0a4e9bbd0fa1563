//! The AMRA binary tensor format.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "AMRA"
//! 4       2           version (u16 LE) = 1
//! 6       1           dtype code: 1 = f32, 2 = f64
//! 7       1           rank
//! 8       8 * rank    dims (u64 LE each)
//! ...     n * size    payload, little-endian, row-major
//! ...     8           layout record length in bytes (u64 LE), 0 if absent
//! ...     len         layout record (UTF-8 JSON)
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::layout::SubbandLayout;
use crate::tensor::{CoefficientSet, ImageTensor};

pub const MAGIC: &[u8; 4] = b"AMRA";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32 = 1,
    F64 = 2,
}

impl Dtype {
    fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Dtype::F32),
            2 => Some(Dtype::F64),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

/// A decoded tensor file.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub dtype: Dtype,
    pub data: Vec<f64>,
    pub layout: Option<SubbandLayout>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "dims {dims:?} need {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            dims,
            dtype: Dtype::F64,
            data,
            layout: None,
        })
    }

    pub fn with_dtype(mut self, dtype: Dtype) -> Self {
        self.dtype = dtype;
        self
    }

    /// Payload values as they will be stored, i.e. rounded through f32 if needed.
    pub fn stored_values(&self) -> Vec<f64> {
        match self.dtype {
            Dtype::F64 => self.data.clone(),
            Dtype::F32 => self.data.iter().map(|&v| v as f32 as f64).collect(),
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let layout = match &self.layout {
            Some(l) => serde_json::to_vec(l)
                .map_err(|e| Error::Format(format!("cannot encode layout: {e}")))?,
            None => Vec::new(),
        };
        let rank = u8::try_from(self.dims.len())
            .map_err(|_| Error::Format(format!("rank {} exceeds 255", self.dims.len())))?;
        let mut out = Vec::with_capacity(
            16 + 8 * self.dims.len() + self.data.len() * self.dtype.size() + layout.len(),
        );
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.dtype as u8);
        out.push(rank);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match self.dtype {
            Dtype::F32 => {
                for &v in &self.data {
                    out.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
            Dtype::F64 => {
                for &v in &self.data {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out.extend_from_slice(&(layout.len() as u64).to_le_bytes());
        out.extend_from_slice(&layout);
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur
            .take(4)
            .map_err(|_| Error::Format("file shorter than the magic number".into()))?;
        if magic != MAGIC {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected \"AMRA\"",
                String::from_utf8_lossy(magic)
            )));
        }
        let version = u16::from_le_bytes(cur.array::<2>()?);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let [code, rank] = cur.array::<2>()?;
        let dtype =
            Dtype::from_code(code).ok_or_else(|| Error::Format(format!("unknown dtype {code}")))?;
        let mut dims = Vec::with_capacity(rank as usize);
        for _ in 0..rank {
            let d = u64::from_le_bytes(cur.array::<8>()?);
            dims.push(usize::try_from(d).map_err(|_| Error::Corruption(format!("dim {d}")))?);
        }
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Corruption(format!("dims {dims:?} overflow")))?;
        let payload = cur.take(
            n.checked_mul(dtype.size())
                .ok_or_else(|| Error::Corruption("payload size overflows".into()))?,
        )?;
        let data: Vec<f64> = match dtype {
            Dtype::F32 => payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect(),
            Dtype::F64 => payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        };
        let layout_len = u64::from_le_bytes(cur.array::<8>()?) as usize;
        let layout = if layout_len == 0 {
            None
        } else {
            let raw = cur.take(layout_len)?;
            Some(
                serde_json::from_slice(raw)
                    .map_err(|e| Error::Corruption(format!("layout record: {e}")))?,
            )
        };
        if cur.pos != bytes.len() {
            return Err(Error::Corruption(format!(
                "{} trailing bytes",
                bytes.len() - cur.pos
            )));
        }
        Ok(Tensor {
            dims,
            dtype,
            data,
            layout,
        })
    }

    pub fn into_image(self) -> Result<ImageTensor> {
        match self.dims[..] {
            [h, w, c] => ImageTensor::new(h, w, c, self.data),
            [h, w] => ImageTensor::new(h, w, 1, self.data),
            _ => Err(Error::Shape(format!(
                "expected a rank-2 or rank-3 image, got dims {:?}",
                self.dims
            ))),
        }
    }

    pub fn into_coefficients(self) -> Result<CoefficientSet> {
        let layout = self
            .layout
            .ok_or_else(|| Error::Layout("tensor file carries no layout record".into()))?;
        let channels = match self.dims[..] {
            [r, c, ch] if r == layout.rows && c == layout.cols => ch,
            _ => {
                return Err(Error::Layout(format!(
                    "dims {:?} do not match layout {}x{}",
                    self.dims, layout.rows, layout.cols
                )))
            }
        };
        CoefficientSet::new(self.data, channels, layout)
    }
}

impl From<&ImageTensor> for Tensor {
    fn from(img: &ImageTensor) -> Self {
        let (h, w, c) = img.shape();
        Tensor {
            dims: vec![h, w, c],
            dtype: Dtype::F64,
            data: img.data().to_vec(),
            layout: None,
        }
    }
}

impl From<&CoefficientSet> for Tensor {
    fn from(c: &CoefficientSet) -> Self {
        let (r, cols, ch) = c.shape();
        Tensor {
            dims: vec![r, cols, ch],
            dtype: Dtype::F64,
            data: c.data.clone(),
            layout: Some(c.layout.clone()),
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Corruption(format!(
                    "truncated: need {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }
}

/// Writes a tensor to `path`.
pub fn tensor_write(tensor: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = tensor.encode()?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Reads a tensor from `path`.
pub fn tensor_read(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Tensor::decode(&bytes)
}

pub fn write_image(img: &ImageTensor, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    tensor_write(&Tensor::from(img).with_dtype(dtype), path)
}

pub fn write_coefficients(c: &CoefficientSet, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    tensor_write(&Tensor::from(c).with_dtype(dtype), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_f64_round_trip_is_bit_exact() {
        let t = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let back = Tensor::decode(&t.encode().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let mut bytes = Tensor::new(vec![1], vec![1.0]).unwrap().encode().unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(Tensor::decode(&bytes), Err(Error::Format(_))));

        let mut bytes = Tensor::new(vec![1], vec![1.0]).unwrap().encode().unwrap();
        bytes[4] = 9;
        assert!(matches!(Tensor::decode(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload_is_corruption() {
        let bytes = Tensor::new(vec![4, 4], vec![0.5; 16]).unwrap().encode().unwrap();
        for cut in [9, 20, 40, bytes.len() - 1] {
            assert!(
                matches!(Tensor::decode(&bytes[..cut]), Err(Error::Corruption(_))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn image_file_size_follows_header_layout() {
        let img = ImageTensor::zeros(128, 128, 3);
        let bytes = Tensor::from(&img).with_dtype(Dtype::F32).encode().unwrap();
        // 8-byte prefix + 8-byte layout length, 3 dims of 8 bytes, f32 payload.
        assert_eq!(bytes.len(), 16 + 3 * 8 + 128 * 128 * 3 * 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn encode_decode_is_identity(
            dims in proptest::collection::vec(1usize..6, 1..4),
            seed in any::<u64>(),
        ) {
            let n: usize = dims.iter().product();
            let mut x = seed;
            let data: Vec<f64> = (0..n)
                .map(|_| {
                    x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    f64::from_bits((x >> 2) | 0x3000_0000_0000_0000)
                })
                .collect();
            let t = Tensor::new(dims, data).unwrap();
            prop_assert_eq!(Tensor::decode(&t.encode().unwrap()).unwrap(), t);
        }
    }
}
