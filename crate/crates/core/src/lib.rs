//! Multiresolution image transforms (DWT, wavelet packets, fully separable
//! wavelets, DCT, samplets) and a small source-identification pipeline built
//! on them: block-wise normalized features, a shallow CNN, perturbations and
//! seeded evaluation.

pub mod analysis;
pub mod classifier;
pub mod cli;
pub mod dataset;
pub mod dct;
pub mod error;
pub mod features;
pub mod filterbank;
pub mod io;
pub mod layout;
pub mod linalg;
pub mod perturb;
pub mod samplets;
pub mod spec;
pub mod synth;
pub mod tensor;
pub mod transforms;

pub use error::{Error, Result};
pub use features::{blockwise_normalize, extract_features};
pub use layout::{Block, SubbandLayout};
pub use spec::{Boundary, Level, TransformKind, TransformSpec};
pub use tensor::{CoefficientSet, ImageTensor, Plane};
