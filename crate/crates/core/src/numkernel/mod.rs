// SPDX-License-Identifier: Apache-2.0

//! Numeric foundation: special functions, dense arrays, image-style
//! resampling and filtering, and the seeded random stream.

mod filter;
mod rng;
mod special;
mod tensor;

pub use filter::{gaussian_blur, gaussian_kernel, upsample_bilinear};
pub use rng::Rng;
pub use special::{digamma, lgamma, trigamma};
pub use tensor::Tensor;
