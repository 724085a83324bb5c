//! Planar frame container shared by every stage.
//!
//! Samples are stored planar (all of channel 0, then channel 1, ...), row
//! major within a plane. Two sample types exist: `u8` for sensor and wire
//! data, `f64` for normalized working buffers. The colorspace pins both the
//! channel count and the sample type, so a frame cannot silently hold the
//! wrong kind of data.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Colorspace of a frame. Decides channel count and sample representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ColorSpace {
    /// 8-bit sRGB, 3 channels.
    Srgb8,
    /// 8-bit grayscale (the luma sensor model: L* scaled by 2.55), 1 channel.
    Gray8,
    /// CIELAB normalized to `[-1, 1]` per channel, 3 channels of `f64`.
    LabNorm,
    /// Grayscale normalized to `[-1, 1]`, 1 channel of `f64`.
    GrayNorm,
}

impl ColorSpace {
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Srgb8 | ColorSpace::LabNorm => 3,
            ColorSpace::Gray8 | ColorSpace::GrayNorm => 1,
        }
    }

    /// True when samples are `f64`, false when they are `u8`.
    pub fn is_real(self) -> bool {
        matches!(self, ColorSpace::LabNorm | ColorSpace::GrayNorm)
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorSpace::Srgb8 => "srgb8",
            ColorSpace::Gray8 => "gray8",
            ColorSpace::LabNorm => "lab_norm",
            ColorSpace::GrayNorm => "gray_norm",
        }
    }
}

/// Which logical stream a frame belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StreamKind {
    /// Ground truth input.
    GroundTruth,
    /// Continuous low-resolution grayscale stream.
    LowRes,
    /// Duty-cycled high-resolution color key frames.
    Key,
    /// Reconstructed output.
    Output,
}

/// Planar sample storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Bytes(Vec<u8>),
    Reals(Vec<f64>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::Bytes(v) => v.len(),
            Samples::Reals(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A single frame of any stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    colorspace: ColorSpace,
    kind: StreamKind,
    /// Position in the originating ground-truth sequence.
    pub frame_index: u32,
    /// Capture timestamp from the 1 ms wrapping timer, if assigned.
    pub timestamp_ms: Option<u32>,
    samples: Samples,
}

impl Frame {
    /// Build a byte frame. Fails if the colorspace expects reals or the
    /// buffer length is not `width * height * channels`.
    pub fn from_bytes(
        colorspace: ColorSpace,
        kind: StreamKind,
        width: usize,
        height: usize,
        data: Vec<u8>,
    ) -> Result<Self> {
        if colorspace.is_real() {
            return Err(Error::ColorSpace {
                what: "Frame::from_bytes",
                expected: "a byte colorspace",
                got: colorspace.name(),
            });
        }
        Self::check_dims(width, height)?;
        let want = width * height * colorspace.channels();
        if data.len() != want {
            return Err(Error::ShapeMismatch {
                what: "Frame::from_bytes",
                expected: format!("{want} samples"),
                got: format!("{}", data.len()),
            });
        }
        Ok(Self {
            width,
            height,
            colorspace,
            kind,
            frame_index: 0,
            timestamp_ms: None,
            samples: Samples::Bytes(data),
        })
    }

    /// Build a real-valued frame. Fails if the colorspace expects bytes or
    /// the buffer length is wrong.
    pub fn from_reals(
        colorspace: ColorSpace,
        kind: StreamKind,
        width: usize,
        height: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if !colorspace.is_real() {
            return Err(Error::ColorSpace {
                what: "Frame::from_reals",
                expected: "a real colorspace",
                got: colorspace.name(),
            });
        }
        Self::check_dims(width, height)?;
        let want = width * height * colorspace.channels();
        if data.len() != want {
            return Err(Error::ShapeMismatch {
                what: "Frame::from_reals",
                expected: format!("{want} samples"),
                got: format!("{}", data.len()),
            });
        }
        Ok(Self {
            width,
            height,
            colorspace,
            kind,
            frame_index: 0,
            timestamp_ms: None,
            samples: Samples::Reals(data),
        })
    }

    /// All-zero frame of the given shape.
    pub fn zeros(colorspace: ColorSpace, kind: StreamKind, width: usize, height: usize) -> Self {
        let n = width * height * colorspace.channels();
        let samples = if colorspace.is_real() {
            Samples::Reals(vec![0.0; n])
        } else {
            Samples::Bytes(vec![0u8; n])
        };
        Self {
            width,
            height,
            colorspace,
            kind,
            frame_index: 0,
            timestamp_ms: None,
            samples,
        }
    }

    fn check_dims(width: usize, height: usize) -> Result<()> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter {
                what: "frame dimensions",
                detail: format!("{width}x{height} (must be nonzero)"),
            });
        }
        Ok(())
    }

    pub fn with_index(mut self, frame_index: u32) -> Self {
        self.frame_index = frame_index;
        self
    }

    pub fn with_timestamp(mut self, timestamp_ms: u32) -> Self {
        self.timestamp_ms = Some(timestamp_ms);
        self
    }

    pub fn with_kind(mut self, kind: StreamKind) -> Self {
        self.kind = kind;
        self
    }

    /// Copy frame index and timestamp from another frame.
    pub fn with_meta_from(mut self, src: &Frame) -> Self {
        self.frame_index = src.frame_index;
        self.timestamp_ms = src.timestamp_ms;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.colorspace.channels()
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn kind(&self) -> StreamKind {
        self.kind
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    /// Borrow one plane of a byte frame.
    pub fn plane_u8(&self, c: usize) -> &[u8] {
        let n = self.width * self.height;
        match &self.samples {
            Samples::Bytes(v) => &v[c * n..(c + 1) * n],
            Samples::Reals(_) => panic!("plane_u8 on a real frame"),
        }
    }

    /// Borrow one plane of a real frame.
    pub fn plane_f64(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        match &self.samples {
            Samples::Reals(v) => &v[c * n..(c + 1) * n],
            Samples::Bytes(_) => panic!("plane_f64 on a byte frame"),
        }
    }

    pub fn plane_u8_mut(&mut self, c: usize) -> &mut [u8] {
        let n = self.width * self.height;
        match &mut self.samples {
            Samples::Bytes(v) => &mut v[c * n..(c + 1) * n],
            Samples::Reals(_) => panic!("plane_u8_mut on a real frame"),
        }
    }

    pub fn plane_f64_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.width * self.height;
        match &mut self.samples {
            Samples::Reals(v) => &mut v[c * n..(c + 1) * n],
            Samples::Bytes(_) => panic!("plane_f64_mut on a byte frame"),
        }
    }

    pub fn get_u8(&self, c: usize, y: usize, x: usize) -> u8 {
        self.plane_u8(c)[y * self.width + x]
    }

    pub fn get_f64(&self, c: usize, y: usize, x: usize) -> f64 {
        self.plane_f64(c)[y * self.width + x]
    }

    /// Number of bytes in one interleaved row (byte frames only).
    pub fn row_bytes(&self) -> usize {
        self.width * self.channels()
    }

    /// One row as channel-interleaved bytes, the unit the wire layer ships.
    pub fn interleaved_row(&self, y: usize) -> Vec<u8> {
        let ch = self.channels();
        let mut out = Vec::with_capacity(self.width * ch);
        for x in 0..self.width {
            for c in 0..ch {
                out.push(self.get_u8(c, y, x));
            }
        }
        out
    }

    /// Whole byte frame as channel-interleaved rows, top to bottom.
    pub fn to_interleaved(&self) -> Vec<u8> {
        let ch = self.channels();
        let mut out = Vec::with_capacity(self.width * self.height * ch);
        for y in 0..self.height {
            for x in 0..self.width {
                for c in 0..ch {
                    out.push(self.get_u8(c, y, x));
                }
            }
        }
        out
    }

    /// Build a byte frame from channel-interleaved data (PNG order).
    pub fn from_interleaved(
        colorspace: ColorSpace,
        kind: StreamKind,
        width: usize,
        height: usize,
        data: &[u8],
    ) -> Result<Self> {
        let ch = colorspace.channels();
        if data.len() != width * height * ch {
            return Err(Error::ShapeMismatch {
                what: "Frame::from_interleaved",
                expected: format!("{} bytes", width * height * ch),
                got: format!("{}", data.len()),
            });
        }
        let mut planar = vec![0u8; data.len()];
        let n = width * height;
        for i in 0..n {
            for c in 0..ch {
                planar[c * n + i] = data[i * ch + c];
            }
        }
        Frame::from_bytes(colorspace, kind, width, height, planar)
    }

    /// Build a byte frame from per-row interleaved byte vectors.
    pub fn from_interleaved_rows(
        colorspace: ColorSpace,
        kind: StreamKind,
        width: usize,
        rows: &[Vec<u8>],
    ) -> Result<Self> {
        let mut flat = Vec::with_capacity(rows.len() * width * colorspace.channels());
        for row in rows {
            if row.len() != width * colorspace.channels() {
                return Err(Error::ShapeMismatch {
                    what: "Frame::from_interleaved_rows",
                    expected: format!("{} bytes per row", width * colorspace.channels()),
                    got: format!("{}", row.len()),
                });
            }
            flat.extend_from_slice(row);
        }
        Frame::from_interleaved(colorspace, kind, width, rows.len(), &flat)
    }

    /// True when the two frames have identical shape, colorspace and samples.
    /// Metadata (kind, index, timestamp) is ignored.
    pub fn same_samples(&self, other: &Frame) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.colorspace == other.colorspace
            && self.samples == other.samples
    }
}
