//! Reference kernels for the learned decoder family.
//!
//! These are small, exactly specified building blocks: an attention filter
//! that fuses feature maps from multiple levels, a residual convolution
//! block, sub-pixel shuffling, the Charbonnier training loss, and the
//! frame-memory recurrence that resets on key frames. They exist so
//! alternative decoder implementations have a bit-level reference to test
//! against; no training happens here.

pub mod attention;
pub mod blocks;
pub mod memory;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::{ColorSpace, Frame, StreamKind};

pub use attention::{attention_backward, attention_forward, AttentionForward, AttentionGrads};
pub use blocks::{charbonnier, pixel_shuffle, pixel_unshuffle, CharbonnierMode, Conv3x3, ResidualBlock};
pub use memory::FrameMemory;

/// Dense feature tensor: `channels` planes of `width * height` f64 samples,
/// planar layout, row major within a plane.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::InvalidParameter {
                what: "feature map shape",
                detail: format!("{width}x{height}x{channels}"),
            });
        }
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch {
                what: "FeatureMap::new",
                expected: format!("{} samples", width * height * channels),
                got: format!("{}", data.len()),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// Real-valued frame to feature map (planes map to channels).
    pub fn from_frame(frame: &Frame) -> Result<Self> {
        if !frame.colorspace().is_real() {
            return Err(Error::ColorSpace {
                what: "FeatureMap::from_frame",
                expected: "a real colorspace",
                got: frame.colorspace().name(),
            });
        }
        let ch = frame.channels();
        let mut data = Vec::with_capacity(frame.width() * frame.height() * ch);
        for c in 0..ch {
            data.extend_from_slice(frame.plane_f64(c));
        }
        Self::new(frame.width(), frame.height(), ch, data)
    }

    /// Back to a real-valued frame. Channel count must match the colorspace.
    pub fn to_frame(&self, colorspace: ColorSpace, kind: StreamKind) -> Result<Frame> {
        if colorspace.channels() != self.channels || !colorspace.is_real() {
            return Err(Error::ColorSpace {
                what: "FeatureMap::to_frame",
                expected: "a real colorspace with matching channel count",
                got: colorspace.name(),
            });
        }
        Frame::from_reals(colorspace, kind, self.width, self.height, self.data.clone())
    }
}

pub(crate) fn expect_same_shape(what: &'static str, a: &FeatureMap, b: &FeatureMap) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            what,
            expected: format!("{:?}", a.shape()),
            got: format!("{:?}", b.shape()),
        });
    }
    Ok(())
}
