//! Ground truth to dual-stream synthesis.
//!
//! The simulated device sees each ground-truth frame twice: the always-on
//! low-resolution sensor captures a degraded grayscale view every frame,
//! and the duty-cycled color sensor wakes every `key_interval` frames to
//! capture a full-resolution key frame (which is the ground-truth frame,
//! bit for bit). Timestamps come from a wrapping 32-bit millisecond timer.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::color::rgb_to_gray;
use crate::error::{Error, Result};
use crate::frame::{ColorSpace, Frame, StreamKind};
use crate::math::quantize_u8;
use crate::resample::resample_frame;
use crate::rng::{split_seed, SeededRng};

/// Sensor noise model for the low-resolution stream.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseConfig {
    pub enabled: bool,
    /// Standard deviation, in gray levels, of the per-pixel read noise.
    /// The static fixed-pattern offsets use the same deviation.
    pub read_noise_sigma: f64,
    /// Seed for both noise components. Sub-stream 0 generates the fixed
    /// pattern; sub-stream 1 + frame_index generates that frame's read
    /// noise, so every frame is independently reproducible.
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            read_noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// Geometry and timing of the two sensors.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CaptureConfig {
    /// Low-resolution sensor size.
    pub lr_width: usize,
    pub lr_height: usize,
    /// Spatial scale between the sensors (high = low * scale).
    pub scale: usize,
    /// Low-resolution stream rate in frames per second.
    pub lr_fps: f64,
    /// A key frame every this many ground-truth frames.
    pub key_interval: usize,
    /// Start value of the wrapping 32-bit millisecond timer.
    pub timer_offset_ms: u32,
    pub noise: NoiseConfig,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self {
            lr_width: 160,
            lr_height: 120,
            scale: 4,
            lr_fps: 15.0,
            key_interval: 15,
            timer_offset_ms: 0,
            noise: NoiseConfig::default(),
        }
    }
}

impl CaptureConfig {
    pub fn hr_width(&self) -> usize {
        self.lr_width * self.scale
    }

    pub fn hr_height(&self) -> usize {
        self.lr_height * self.scale
    }

    pub fn validate(&self) -> Result<()> {
        if self.lr_width == 0 || self.lr_height == 0 || self.scale == 0 {
            return Err(Error::InvalidParameter {
                what: "capture geometry",
                detail: format!(
                    "{}x{} scale {} (must be nonzero)",
                    self.lr_width, self.lr_height, self.scale
                ),
            });
        }
        if !(self.lr_fps.is_finite() && self.lr_fps > 0.0) {
            return Err(Error::InvalidParameter {
                what: "lr_fps",
                detail: format!("{}", self.lr_fps),
            });
        }
        if self.key_interval == 0 {
            return Err(Error::InvalidParameter {
                what: "key_interval",
                detail: "must be at least 1".into(),
            });
        }
        if self.noise.enabled && !(self.noise.read_noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter {
                what: "read_noise_sigma",
                detail: format!("{}", self.noise.read_noise_sigma),
            });
        }
        Ok(())
    }

    /// Timestamp of ground-truth frame `index` on the wrapping 1 ms timer:
    /// `offset + round(index * 1000 / fps)` mod 2^32.
    pub fn timestamp_ms(&self, index: u32) -> u32 {
        let ideal = index as f64 * 1000.0 / self.lr_fps;
        let ticks = libm::round(ideal) as u64 as u32;
        self.timer_offset_ms.wrapping_add(ticks)
    }
}

/// The synthesized pair of sensor streams.
#[derive(Debug, Clone)]
pub struct DualStream {
    pub config: CaptureConfig,
    /// One degraded grayscale frame per ground-truth frame.
    pub lr: Vec<Frame>,
    /// Key frames at ground-truth indices 0, K, 2K, ...
    pub keys: Vec<Frame>,
}

/// Degrade one ground-truth frame into the low-resolution sensor's view:
/// lightness-model grayscale, antialiased bicubic downscale, then optional
/// sensor noise. Deterministic given the frame, the config and the index.
pub fn degrade(gt: &Frame, config: &CaptureConfig, frame_index: u32) -> Result<Frame> {
    expect_gt_shape(gt, config)?;
    let gray = rgb_to_gray(gt)?;
    let mut lr = resample_frame(&gray, config.lr_width, config.lr_height, true)?
        .with_kind(StreamKind::LowRes);
    if config.noise.enabled && config.noise.read_noise_sigma > 0.0 {
        apply_noise(&mut lr, &config.noise, frame_index);
    }
    Ok(lr)
}

fn apply_noise(frame: &mut Frame, noise: &NoiseConfig, frame_index: u32) {
    let n = frame.width() * frame.height();
    let sigma = noise.read_noise_sigma;
    let mut pattern = SeededRng::new(split_seed(noise.seed, 0));
    let mut read = SeededRng::new(split_seed(noise.seed, 1 + frame_index as u64));
    let plane = frame.plane_u8_mut(0);
    for v in plane.iter_mut().take(n) {
        let offset = pattern.gaussian() * sigma + read.gaussian() * sigma;
        *v = quantize_u8(*v as f64 + offset);
    }
}

fn expect_gt_shape(gt: &Frame, config: &CaptureConfig) -> Result<()> {
    if gt.colorspace() != ColorSpace::Srgb8 {
        return Err(Error::ColorSpace {
            what: "capture input",
            expected: ColorSpace::Srgb8.name(),
            got: gt.colorspace().name(),
        });
    }
    if gt.width() != config.hr_width() || gt.height() != config.hr_height() {
        return Err(Error::ShapeMismatch {
            what: "capture input",
            expected: format!("{}x{}", config.hr_width(), config.hr_height()),
            got: format!("{}x{}", gt.width(), gt.height()),
        });
    }
    Ok(())
}

/// Run the whole ground-truth sequence through both simulated sensors.
pub fn synthesize(gt: &[Frame], config: &CaptureConfig) -> Result<DualStream> {
    config.validate()?;
    if gt.is_empty() {
        return Err(Error::InvalidParameter {
            what: "ground truth sequence",
            detail: "empty".into(),
        });
    }
    let mut lr = Vec::with_capacity(gt.len());
    let mut keys = Vec::new();
    for (i, frame) in gt.iter().enumerate() {
        let index = i as u32;
        let ts = config.timestamp_ms(index);
        lr.push(
            degrade(frame, config, index)?
                .with_index(index)
                .with_timestamp(ts),
        );
        if i % config.key_interval == 0 {
            keys.push(
                frame
                    .clone()
                    .with_kind(StreamKind::Key)
                    .with_index(index)
                    .with_timestamp(ts),
            );
        }
    }
    Ok(DualStream {
        config: *config,
        lr,
        keys,
    })
}

/// Default alignment tolerance between the two sensor timelines.
pub const SYNC_TOLERANCE_MS: u32 = 10;

/// Distance between two wrapping 32-bit millisecond timestamps.
pub fn timestamp_distance_ms(a: u32, b: u32) -> u32 {
    let d = a.wrapping_sub(b);
    d.min(0u32.wrapping_sub(d))
}

/// One key frame matched to the low-resolution frame nearest in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyncPair {
    pub key_index: usize,
    pub lr_index: usize,
    pub delta_ms: u32,
}

/// Result of aligning the two timelines.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyncReport {
    pub pairs: Vec<SyncPair>,
    /// Low-resolution frames no key frame claimed.
    pub unpaired_lr: Vec<usize>,
}

/// Pair every key frame with the low-resolution frame whose timestamp is
/// nearest on the wrapping timer. A key frame with no candidate within
/// `tolerance_ms` is a desync. Ties go to the earlier LR index.
pub fn synchronize(lr: &[Frame], keys: &[Frame], tolerance_ms: u32) -> Result<SyncReport> {
    let stamp = |f: &Frame, what: &'static str| {
        f.timestamp_ms.ok_or_else(|| Error::Desync {
            detail: format!("{what} frame {} has no timestamp", f.frame_index),
        })
    };
    let lr_ts: Vec<u32> = lr
        .iter()
        .map(|f| stamp(f, "low-resolution"))
        .collect::<Result<_>>()?;
    let mut pairs = Vec::with_capacity(keys.len());
    let mut claimed = vec![false; lr.len()];
    for (ki, key) in keys.iter().enumerate() {
        let kt = stamp(key, "key")?;
        let best = lr_ts
            .iter()
            .enumerate()
            .map(|(i, &t)| (timestamp_distance_ms(kt, t), i))
            .min_by_key(|&(d, i)| (d, i));
        match best {
            Some((d, i)) if d <= tolerance_ms => {
                claimed[i] = true;
                pairs.push(SyncPair {
                    key_index: ki,
                    lr_index: i,
                    delta_ms: d,
                });
            }
            _ => {
                return Err(Error::Desync {
                    detail: format!(
                        "key frame {} at {kt} ms has no low-resolution frame within {tolerance_ms} ms",
                        key.frame_index
                    ),
                });
            }
        }
    }
    let unpaired_lr = claimed
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| i)
        .collect();
    Ok(SyncReport { pairs, unpaired_lr })
}
