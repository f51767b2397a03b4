//! Toolkit for image-downscaling attacks: generate carriers that reveal a
//! hidden image at a chosen bilinear resize scale, detect the embedding
//! lattice in the frequency domain, and neutralize the channel with
//! antialiased or multi-step resizing.

pub mod attack;
pub mod detect;
pub mod error;
pub mod harness;
pub mod image;
pub mod io;
pub mod metrics;
pub mod resize;
pub mod synth;

pub use error::{Error, Result};
pub use image::{Image, PixelCoord};
pub use resize::{resize, ResizePolicy, ScaleSpec};
