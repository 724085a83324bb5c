//! Key-to-key windowing, the decoder plug-in contract and a classical
//! baseline reconstructor.
//!
//! The sequence is cut into windows of `K` low-resolution frames bracketed
//! by the key frames at both ends. A decoder sees one prepared window at a
//! time: the gray frames perspective-corrected, normalized and reflect-
//! padded by [`LR_PAD`], the key frames Lab-normalized and padded by
//! [`KEY_PAD`]. It returns one padded SRGB8 frame per gray input; the
//! harness crops the padding, stitches windows in order and emits the
//! measured key frame itself at every key timestep.
//!
//! The baseline decoder upsamples lightness bicubically and copies chroma
//! from the temporally nearest key frame, with no motion compensation. It
//! is deliberately naive: the floor any learned decoder has to beat.

use alloc::format;
use alloc::vec::Vec;

use crate::capture::DualStream;
use crate::color::{gray_to_norm, lab_to_rgb, rgb_to_lab};
use crate::error::{Error, Result};
use crate::frame::{ColorSpace, Frame, StreamKind};
use crate::geometry::{warp_frame, Homography};
use crate::resample::{crop_pad, pad_reflect, resample_frame};

/// Reflection padding applied to each low-resolution frame.
pub const LR_PAD: usize = 2;
/// Reflection padding applied to each key frame (and expected back on
/// decoder output).
pub const KEY_PAD: usize = 8;

/// One key-to-key slice of the sequence. `start` is the global index of
/// the first low-resolution frame; `key_prev`/`key_next` index into the
/// stream's key list. A window without `key_next` is the trailing partial,
/// decoded forward-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Window {
    pub window_index: usize,
    pub start: usize,
    pub len: usize,
    pub key_prev: usize,
    pub key_next: Option<usize>,
}

impl Window {
    pub fn is_partial(&self) -> bool {
        self.key_next.is_none()
    }
}

/// Cut the stream into key-to-key windows.
///
/// Full window `n` holds low-resolution frames `nK .. nK+K-1` plus keys
/// `nK` and `(n+1)K`. Frames after the last key form a partial window with
/// no `key_next` (this is also the shape when the stream has a single key
/// frame). A sequence ending exactly on a key yields no partial window;
/// the reconstruction emits that final key directly.
pub fn split_windows(stream: &DualStream) -> Result<Vec<Window>> {
    let n = stream.lr.len();
    if n == 0 {
        return Err(Error::InvalidParameter {
            what: "stream",
            detail: "no low-resolution frames".into(),
        });
    }
    let k = stream.config.key_interval;
    let expected_keys = (n - 1) / k + 1;
    if stream.keys.len() != expected_keys {
        return Err(Error::ShapeMismatch {
            what: "key frame count",
            expected: format!("{expected_keys}"),
            got: format!("{}", stream.keys.len()),
        });
    }
    let full = (n - 1) / k;
    let mut windows = Vec::with_capacity(full + 1);
    for w in 0..full {
        windows.push(Window {
            window_index: w,
            start: w * k,
            len: k,
            key_prev: w,
            key_next: Some(w + 1),
        });
    }
    if n - 1 > full * k {
        windows.push(Window {
            window_index: full,
            start: full * k,
            len: n - full * k,
            key_prev: full,
            key_next: None,
        });
    }
    Ok(windows)
}

/// A window as the decoder receives it: gray frames warped into the key
/// plane, normalized ([`ColorSpace::GrayNorm`]) and padded by [`LR_PAD`];
/// key frames Lab-normalized and padded by [`KEY_PAD`].
#[derive(Debug, Clone)]
pub struct PreparedWindow {
    pub window_index: usize,
    pub start: usize,
    pub scale: usize,
    pub lr: Vec<Frame>,
    pub key_prev: Frame,
    pub key_next: Option<Frame>,
}

impl PreparedWindow {
    /// The key frame temporally nearest to local timestep `t`; the exact
    /// midpoint breaks toward `key_prev`. Forward-only windows always
    /// answer `key_prev`.
    pub fn nearest_key(&self, t: usize) -> &Frame {
        match &self.key_next {
            None => &self.key_prev,
            Some(next) => {
                if 2 * t <= self.lr.len() {
                    &self.key_prev
                } else {
                    next
                }
            }
        }
    }
}

/// Correct, normalize and pad one window for decoding. `warp` maps the
/// low-resolution sensor's pixel coordinates into the key sensor's plane
/// (scaled down to low resolution); pass the identity when uncalibrated.
pub fn prepare_window(
    stream: &DualStream,
    window: &Window,
    warp: &Homography,
) -> Result<PreparedWindow> {
    let mut lr = Vec::with_capacity(window.len);
    for i in window.start..window.start + window.len {
        let corrected = warp_frame(&stream.lr[i], warp)?.frame;
        lr.push(pad_reflect(&gray_to_norm(&corrected)?, LR_PAD));
    }
    let prep_key = |key: &Frame| -> Result<Frame> { Ok(pad_reflect(&rgb_to_lab(key)?, KEY_PAD)) };
    Ok(PreparedWindow {
        window_index: window.window_index,
        start: window.start,
        scale: stream.config.scale,
        lr,
        key_prev: prep_key(&stream.keys[window.key_prev])?,
        key_next: match window.key_next {
            Some(k) => Some(prep_key(&stream.keys[k])?),
            None => None,
        },
    })
}

/// A reconstruction backend. Given a prepared window it returns one SRGB8
/// frame per low-resolution input, still carrying the [`KEY_PAD`] border
/// (the harness crops it). Implementations must be deterministic.
pub trait DecoderPlugin {
    fn name(&self) -> &str;
    fn decode(&self, window: &PreparedWindow) -> Result<Vec<Frame>>;
}

/// Bicubic lightness upsampling plus nearest-key chroma transfer.
///
/// The normalized gray value and the normalized L* channel coincide (both
/// are `L*/50 - 1` under the sensor's lightness model), so the upsampled
/// gray plane slots directly into a Lab-normalized frame.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselineDecoder;

impl DecoderPlugin for BaselineDecoder {
    fn name(&self) -> &str {
        "baseline"
    }

    fn decode(&self, window: &PreparedWindow) -> Result<Vec<Frame>> {
        let mut out = Vec::with_capacity(window.lr.len());
        for (t, lr) in window.lr.iter().enumerate() {
            let key = window.nearest_key(t);
            let (kw, kh) = (key.width(), key.height());
            let up = resample_frame(lr, kw, kh, true)?;
            let mut data = Vec::with_capacity(3 * kw * kh);
            data.extend_from_slice(up.plane_f64(0));
            data.extend_from_slice(key.plane_f64(1));
            data.extend_from_slice(key.plane_f64(2));
            let lab = Frame::from_reals(ColorSpace::LabNorm, StreamKind::Output, kw, kh, data)?
                .with_meta_from(lr);
            out.push(lab_to_rgb(&lab)?);
        }
        Ok(out)
    }
}

/// Nearest-key passthrough: every timestep answers the nearest key frame
/// unchanged. Useful as a plumbing check and as the dumbest possible
/// reference point.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityDecoder;

impl DecoderPlugin for IdentityDecoder {
    fn name(&self) -> &str {
        "identity"
    }

    fn decode(&self, window: &PreparedWindow) -> Result<Vec<Frame>> {
        window
            .lr
            .iter()
            .enumerate()
            .map(|(t, lr)| {
                Ok(lab_to_rgb(window.nearest_key(t))?
                    .with_kind(StreamKind::Output)
                    .with_meta_from(lr))
            })
            .collect()
    }
}

/// Run a decoder over the whole stream.
///
/// Output length equals the low-resolution sequence length. Key timesteps
/// emit the measured key frame itself, bit for bit; everything else is the
/// decoder's cropped output. Decoder failures are annotated with the
/// window index.
pub fn reconstruct_sequence(
    stream: &DualStream,
    decoder: &dyn DecoderPlugin,
    calib: &Homography,
) -> Result<Vec<Frame>> {
    stream.config.validate()?;
    let n = stream.lr.len();
    let k = stream.config.key_interval;
    let (hw, hh) = (stream.config.hr_width(), stream.config.hr_height());
    let padded = (hw + 2 * KEY_PAD, hh + 2 * KEY_PAD);
    let windows = split_windows(stream)?;

    let mut out: Vec<Frame> = Vec::with_capacity(n);
    for window in &windows {
        let prepared = prepare_window(stream, window, calib)?;
        let decoded = decoder.decode(&prepared).map_err(|e| Error::Decoder {
            detail: format!(
                "{} decoder failed on window {}: {e}",
                decoder.name(),
                window.window_index
            ),
        })?;
        if decoded.len() != window.len {
            return Err(Error::Decoder {
                detail: format!(
                    "{} decoder returned {} frames for window {} of {}",
                    decoder.name(),
                    decoded.len(),
                    window.window_index,
                    window.len
                ),
            });
        }
        for (t, frame) in decoded.into_iter().enumerate() {
            let global = window.start + t;
            if frame.colorspace() != ColorSpace::Srgb8 {
                return Err(Error::Decoder {
                    detail: format!(
                        "{} decoder emitted {} for frame {global} (want srgb8)",
                        decoder.name(),
                        frame.colorspace().name()
                    ),
                });
            }
            if (frame.width(), frame.height()) != padded {
                return Err(Error::Decoder {
                    detail: format!(
                        "{} decoder emitted {}x{} for frame {global} (want padded {}x{})",
                        decoder.name(),
                        frame.width(),
                        frame.height(),
                        padded.0,
                        padded.1
                    ),
                });
            }
            out.push(
                crop_pad(&frame, KEY_PAD)?
                    .with_kind(StreamKind::Output)
                    .with_meta_from(&stream.lr[global]),
            );
        }
    }

    // A sequence ending exactly on a key frame has no window covering its
    // last timestep; the key itself is the answer there.
    if out.len() == n - 1 {
        out.push(key_output(stream, stream.keys.len() - 1, n - 1));
    }
    for g in (0..n).step_by(k) {
        out[g] = key_output(stream, g / k, g);
    }
    debug_assert_eq!(out.len(), n);
    Ok(out)
}

fn key_output(stream: &DualStream, key_index: usize, global: usize) -> Frame {
    stream.keys[key_index]
        .clone()
        .with_kind(StreamKind::Output)
        .with_meta_from(&stream.lr[global])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::{synthesize, CaptureConfig};
    use alloc::vec;
    use alloc::vec::Vec;

    fn tiny_config(k: usize) -> CaptureConfig {
        CaptureConfig {
            lr_width: 8,
            lr_height: 6,
            scale: 2,
            key_interval: k,
            ..CaptureConfig::default()
        }
    }

    /// Smooth moving gradient so downsampling loses little.
    fn gradient_gt(w: usize, h: usize, phase: usize) -> Frame {
        let mut data = Vec::with_capacity(w * h * 3);
        for c in 0..3usize {
            for y in 0..h {
                for x in 0..w {
                    let v = 40.0
                        + 10.0 * c as f64
                        + 150.0 * (x + phase) as f64 / (w + 40) as f64
                        + 30.0 * y as f64 / h as f64;
                    data.push(v as u8);
                }
            }
        }
        Frame::from_bytes(ColorSpace::Srgb8, StreamKind::GroundTruth, w, h, data).unwrap()
    }

    fn stream(n: usize, k: usize, moving: bool) -> DualStream {
        let config = tiny_config(k);
        let gt: Vec<Frame> = (0..n)
            .map(|i| {
                gradient_gt(
                    config.hr_width(),
                    config.hr_height(),
                    if moving { i * 3 } else { 0 },
                )
            })
            .collect();
        synthesize(&gt, &config).unwrap()
    }

    #[test]
    fn window_arithmetic() {
        // Ends exactly on a key: full windows only.
        let w = split_windows(&stream(31, 15, false)).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].start, w[0].len, w[0].key_prev, w[0].key_next), (0, 15, 0, Some(1)));
        assert_eq!((w[1].start, w[1].len, w[1].key_prev, w[1].key_next), (15, 15, 1, Some(2)));
        assert!(!w[0].is_partial());

        let w = split_windows(&stream(16, 15, false)).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].start, w[0].len), (0, 15));

        // Trailing frames past the last key: partial window.
        let w = split_windows(&stream(20, 15, false)).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!((w[1].start, w[1].len, w[1].key_prev, w[1].key_next), (15, 5, 1, None));
        assert!(w[1].is_partial());

        // Single key frame: one partial window covering everything.
        let w = split_windows(&stream(10, 15, false)).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].start, w[0].len, w[0].key_next), (0, 10, None));
    }

    #[test]
    fn windows_cover_sequence_without_gaps() {
        for n in [2usize, 5, 15, 16, 20, 31, 33] {
            let s = stream(n, 5, false);
            let windows = split_windows(&s).unwrap();
            let mut covered = vec![false; n];
            for w in &windows {
                for i in w.start..w.start + w.len {
                    assert!(!covered[i], "overlap at {i} (n={n})");
                    covered[i] = true;
                }
            }
            let uncovered: Vec<usize> =
                (0..n).filter(|&i| !covered[i]).collect();
            // Only the final key timestep may fall outside all windows.
            assert!(uncovered.is_empty() || uncovered == vec![n - 1], "n={n}: {uncovered:?}");
        }
    }

    #[test]
    fn prepared_window_shapes() {
        let s = stream(16, 15, false);
        let w = split_windows(&s).unwrap();
        let p = prepare_window(&s, &w[0], &Homography::identity()).unwrap();
        assert_eq!(p.lr.len(), 15);
        for lr in &p.lr {
            assert_eq!(lr.colorspace(), ColorSpace::GrayNorm);
            assert_eq!((lr.width(), lr.height()), (8 + 2 * LR_PAD, 6 + 2 * LR_PAD));
        }
        assert_eq!(p.key_prev.colorspace(), ColorSpace::LabNorm);
        assert_eq!(
            (p.key_prev.width(), p.key_prev.height()),
            (16 + 2 * KEY_PAD, 12 + 2 * KEY_PAD)
        );
        assert!(p.key_next.is_some());
    }

    #[test]
    fn nearest_key_rule() {
        let s = stream(16, 15, false);
        let w = split_windows(&s).unwrap();
        let p = prepare_window(&s, &w[0], &Homography::identity()).unwrap();
        let prev = p.key_prev.clone();
        let next = p.key_next.clone().unwrap();
        // K=15: t=7 still prev, t=8 flips to next.
        assert!(p.nearest_key(7).same_samples(&prev));
        assert!(p.nearest_key(8).same_samples(&next));
        assert!(p.nearest_key(0).same_samples(&prev));
        assert!(p.nearest_key(14).same_samples(&next));
    }

    #[test]
    fn identity_decoder_emits_n_frames_with_exact_keys() {
        let s = stream(31, 15, false);
        let out = reconstruct_sequence(&s, &IdentityDecoder, &Homography::identity()).unwrap();
        assert_eq!(out.len(), 31);
        for (g, key_idx) in [(0usize, 0usize), (15, 1), (30, 2)] {
            assert!(out[g].same_samples(&s.keys[key_idx]), "key at {g}");
        }
        for (i, f) in out.iter().enumerate() {
            assert_eq!(f.kind(), StreamKind::Output);
            assert_eq!(f.frame_index, i as u32);
            assert_eq!(f.colorspace(), ColorSpace::Srgb8);
            assert_eq!((f.width(), f.height()), (16, 12));
        }
    }

    #[test]
    fn trailing_partial_is_forward_only() {
        let s = stream(20, 15, false);
        let out = reconstruct_sequence(&s, &IdentityDecoder, &Homography::identity()).unwrap();
        assert_eq!(out.len(), 20);
        // Last 5 frames come from key_prev (key 1), up to Lab rounding.
        let key = &s.keys[1];
        for g in 16..20 {
            for c in 0..3 {
                for (a, b) in out[g].plane_u8(c).iter().zip(key.plane_u8(c)) {
                    assert!((*a as i16 - *b as i16).abs() <= 1, "frame {g}");
                }
            }
        }
    }

    #[test]
    fn baseline_static_scene_is_accurate() {
        let s = stream(11, 5, false);
        let out = reconstruct_sequence(&s, &BaselineDecoder, &Homography::identity()).unwrap();
        assert_eq!(out.len(), 11);
        let gt = gradient_gt(16, 12, 0);
        // Non-key frames: chroma comes straight from a key equal to GT, so
        // only lightness resampling and rounding separate them.
        let score =
            crate::metrics::evaluate_pair(&out[2], &gt, crate::metrics::MetricChannel::Rgb)
                .unwrap();
        assert!(score.psnr_db > 30.0, "{}", score.psnr_db);
        let ab = crate::metrics::evaluate_pair(&out[2], &gt, crate::metrics::MetricChannel::Ab)
            .unwrap();
        assert!(ab.psnr_db > 38.0, "{}", ab.psnr_db);
    }

    #[test]
    fn reconstruction_is_deterministic() {
        let s = stream(20, 15, true);
        let a = reconstruct_sequence(&s, &BaselineDecoder, &Homography::identity()).unwrap();
        let b = reconstruct_sequence(&s, &BaselineDecoder, &Homography::identity()).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!(x.same_samples(y));
        }
    }

    struct ShortDecoder;
    impl DecoderPlugin for ShortDecoder {
        fn name(&self) -> &str {
            "short"
        }
        fn decode(&self, window: &PreparedWindow) -> Result<Vec<Frame>> {
            IdentityDecoder
                .decode(window)
                .map(|mut v| {
                    v.pop();
                    v
                })
        }
    }

    #[test]
    fn bad_decoder_output_is_annotated() {
        let s = stream(16, 15, false);
        let err = reconstruct_sequence(&s, &ShortDecoder, &Homography::identity()).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("window 0"), "{msg}");
        assert!(msg.contains("short"), "{msg}");
    }

    #[test]
    fn single_frame_sequence_is_the_key() {
        let s = stream(1, 15, false);
        let out = reconstruct_sequence(&s, &BaselineDecoder, &Homography::identity()).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].same_samples(&s.keys[0]));
    }
}
