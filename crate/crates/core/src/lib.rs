//! Core pipeline for a dual-mode low-power camera system.
//!
//! The device side pairs a continuously running low-resolution grayscale
//! sensor with a heavily duty-cycled high-resolution color sensor that only
//! wakes for periodic key frames. Both streams cross a lossy packet link.
//! The receiver repairs dropped lines, then a decoder fuses the gray stream
//! with the sparse color key frames into full-rate, full-resolution color
//! video.
//!
//! This crate holds everything that is pure buffer math and therefore
//! `no_std` (with `alloc`):
//!
//! * [`frame`] / [`color`]: planar frame container and the CIELAB transforms
//!   used both as the sensor model and the decoder working space
//! * [`resample`]: bicubic resampling compatible with the classic
//!   Matlab-style antialiased kernel, plus reflect padding
//! * [`capture`]: ground truth to dual-stream synthesis (degrade + key-frame
//!   duty cycling)
//! * [`geometry`]: homography estimation and warping for cross-sensor
//!   alignment
//! * [`wire`]: the bit-exact packet format, CRC, loss model and reassembly
//! * [`repair`]: line-loss concealment by local bicubic expansion
//! * [`nn`]: reference kernels (attention feature filter, residual block,
//!   pixel shuffle, Charbonnier loss, frame-memory recurrence)
//! * [`reconstruct`]: windowing harness and pluggable decoders
//! * [`metrics`]: PSNR / SSIM evaluation protocol
//! * [`power`]: power and bandwidth arithmetic for the hardware platform
//!
//! File formats, configs and the CLI live in the companion `neuricam` crate.

#![no_std]
#![forbid(unsafe_code)]
// Numeric code reads better with explicit index loops, constants keep the
// full printed precision of their sources, and `!(x > 0.0)` guards are
// NaN-rejecting on purpose.
#![allow(clippy::excessive_precision)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod capture;
pub mod color;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod math;
pub mod metrics;
pub mod nn;
pub mod power;
pub mod repair;
pub mod reconstruct;
pub mod resample;
pub mod rng;
pub mod wire;

pub use error::{Error, Result};
pub use frame::{ColorSpace, Frame, Samples, StreamKind};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
