//! Quality metrics and the sequence evaluation protocol.
//!
//! Reconstructions are scored against ground truth per frame with PSNR and
//! single-scale SSIM, on three channel views:
//!
//! * `Y`: lightness L* scaled by 2.55 to the [0, 255] range (real valued,
//!   not quantized), so the luma score ignores chroma entirely
//! * `Ab`: the two chroma channels, offset to a* + 128 / b* + 128 so they
//!   live on the same [0, 255] scale
//! * `Rgb`: the raw sRGB bytes
//!
//! Key-frame timesteps are excluded from sequence means: the pipeline emits
//! the measured key frames there, so scoring them would only flatter the
//! decoder. A PSNR of infinity (zero MSE) is reported per frame but never
//! averaged; means use compensated summation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::color::{lightness_from_linear, rgb8_to_lab, srgb_u8_to_linear};
use crate::error::{Error, Result};
use crate::frame::{ColorSpace, Frame};
use crate::math::KahanSum;

/// Which channel view a score is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum MetricChannel {
    Y,
    Ab,
    Rgb,
}

impl MetricChannel {
    pub fn name(self) -> &'static str {
        match self {
            MetricChannel::Y => "y",
            MetricChannel::Ab => "ab",
            MetricChannel::Rgb => "rgb",
        }
    }
}

/// SSIM window: 11 taps, sigma 1.5.
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
/// SSIM stabilizers for the 255 dynamic range: (0.01 * 255)^2, (0.03 * 255)^2.
pub const SSIM_C1: f64 = 6.5025;
pub const SSIM_C2: f64 = 58.5225;

/// JSON has no literal for non-finite floats and serde_json writes them as
/// null, which cannot be read back. Score fields that can legitimately be
/// infinite (exact frames) serialize non-finite values as the strings
/// "infinity", "-infinity" and "nan" instead.
#[cfg(feature = "serde")]
pub mod score_value {
    use alloc::string::String;

    pub fn serialize<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("infinity")
        } else {
            s.serialize_str("-infinity")
        }
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        use serde::Deserialize;

        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => match s.as_str() {
                "infinity" => Ok(f64::INFINITY),
                "-infinity" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(alloc::format!(
                    "unknown score value {other:?}"
                ))),
            },
        }
    }
}

/// Scores for one frame. `psnr_db` is `f64::INFINITY` when the frames are
/// identical on the selected channels.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrameScore {
    pub frame_index: u32,
    #[cfg_attr(feature = "serde", serde(with = "score_value"))]
    pub psnr_db: f64,
    pub ssim: f64,
}

/// Scores for a sequence with key-frame timesteps excluded.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SequenceReport {
    pub channel: MetricChannel,
    pub frames: Vec<FrameScore>,
    pub excluded_key_indices: Vec<u32>,
    /// Mean over frames with finite PSNR; infinity when every evaluated
    /// frame was exact.
    #[cfg_attr(feature = "serde", serde(with = "score_value"))]
    pub mean_psnr_db: f64,
    pub infinite_psnr_frames: usize,
    #[cfg_attr(feature = "serde", serde(with = "score_value"))]
    pub mean_ssim: f64,
}

fn expect_comparable(pred: &Frame, gt: &Frame) -> Result<()> {
    if pred.colorspace() != ColorSpace::Srgb8 || gt.colorspace() != ColorSpace::Srgb8 {
        return Err(Error::ColorSpace {
            what: "metric input",
            expected: ColorSpace::Srgb8.name(),
            got: if pred.colorspace() != ColorSpace::Srgb8 {
                pred.colorspace().name()
            } else {
                gt.colorspace().name()
            },
        });
    }
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::ShapeMismatch {
            what: "metric input",
            expected: format!("{}x{}", gt.width(), gt.height()),
            got: format!("{}x{}", pred.width(), pred.height()),
        });
    }
    Ok(())
}

/// Extract the channel view as real planes on the [0, 255] scale.
fn channel_planes(frame: &Frame, channel: MetricChannel) -> Vec<Vec<f64>> {
    let n = frame.width() * frame.height();
    let (rp, gp, bp) = (frame.plane_u8(0), frame.plane_u8(1), frame.plane_u8(2));
    match channel {
        MetricChannel::Y => {
            // L* * 2.55 from the luminance path only.
            let mut lut = [0.0f64; 256];
            for (v, slot) in lut.iter_mut().enumerate() {
                *slot = srgb_u8_to_linear(v as u8);
            }
            let mut plane = vec![0.0; n];
            for i in 0..n {
                let l = lightness_from_linear(
                    lut[rp[i] as usize],
                    lut[gp[i] as usize],
                    lut[bp[i] as usize],
                );
                plane[i] = l * 2.55;
            }
            vec![plane]
        }
        MetricChannel::Ab => {
            let mut a_plane = vec![0.0; n];
            let mut b_plane = vec![0.0; n];
            for i in 0..n {
                let (_, a, b) = rgb8_to_lab(rp[i], gp[i], bp[i]);
                a_plane[i] = a + 128.0;
                b_plane[i] = b + 128.0;
            }
            vec![a_plane, b_plane]
        }
        MetricChannel::Rgb => (0..3)
            .map(|c| frame.plane_u8(c).iter().map(|&v| v as f64).collect())
            .collect(),
    }
}

/// PSNR in dB over pooled channel MSE against a 255 peak. Zero MSE gives
/// infinity.
pub fn psnr_from_planes(pred: &[Vec<f64>], gt: &[Vec<f64>]) -> f64 {
    let mut acc = KahanSum::new();
    let mut count = 0usize;
    for (p, g) in pred.iter().zip(gt) {
        for (a, b) in p.iter().zip(g) {
            let d = a - b;
            acc.add(d * d);
            count += 1;
        }
    }
    let mse = acc.value() / count as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * libm::log10(255.0 * 255.0 / mse)
    }
}

/// PSNR between two byte frames of the same shape and colorspace, all
/// channels pooled.
pub fn psnr_bytes(a: &Frame, b: &Frame) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::ShapeMismatch {
            what: "psnr frames",
            expected: format!("{}x{}", a.width(), a.height()),
            got: format!("{}x{}", b.width(), b.height()),
        });
    }
    if a.colorspace() != b.colorspace() || a.colorspace().is_real() {
        return Err(Error::ColorSpace {
            what: "psnr frames",
            expected: a.colorspace().name(),
            got: b.colorspace().name(),
        });
    }
    let to_planes = |f: &Frame| -> Vec<Vec<f64>> {
        (0..f.colorspace().channels())
            .map(|c| f.plane_u8(c).iter().map(|&v| v as f64).collect())
            .collect()
    };
    Ok(psnr_from_planes(&to_planes(a), &to_planes(b)))
}

/// Normalized 11-tap Gaussian, sigma 1.5.
fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (k, slot) in w.iter_mut().enumerate() {
        let d = k as f64 - half;
        *slot = libm::exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
        sum += *slot;
    }
    for slot in &mut w {
        *slot /= sum;
    }
    w
}

/// Separable valid-mode Gaussian filter: output is (w - 10) x (h - 10).
fn gauss_filter_valid(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    let win = gaussian_window();
    let ow = w - (SSIM_WINDOW - 1);
    let oh = h - (SSIM_WINDOW - 1);
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, &g) in win.iter().enumerate() {
                acc += g * src[y * w + x + k];
            }
            horiz[y * ow + x] = acc;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for x in 0..ow {
        for y in 0..oh {
            let mut acc = 0.0;
            for (k, &g) in win.iter().enumerate() {
                acc += g * horiz[(y + k) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Single-scale SSIM of one plane pair, mean over valid window positions.
pub fn ssim_plane(pred: &[f64], gt: &[f64], w: usize, h: usize) -> Result<f64> {
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidParameter {
            what: "ssim input size",
            detail: format!("{w}x{h} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"),
        });
    }
    let n = w * h;
    let mut pred_sq = vec![0.0; n];
    let mut gt_sq = vec![0.0; n];
    let mut cross = vec![0.0; n];
    for i in 0..n {
        pred_sq[i] = pred[i] * pred[i];
        gt_sq[i] = gt[i] * gt[i];
        cross[i] = pred[i] * gt[i];
    }
    let mu_p = gauss_filter_valid(pred, w, h);
    let mu_g = gauss_filter_valid(gt, w, h);
    let e_pp = gauss_filter_valid(&pred_sq, w, h);
    let e_gg = gauss_filter_valid(&gt_sq, w, h);
    let e_pg = gauss_filter_valid(&cross, w, h);

    let mut acc = KahanSum::new();
    for i in 0..mu_p.len() {
        let (mp, mg) = (mu_p[i], mu_g[i]);
        let var_p = e_pp[i] - mp * mp;
        let var_g = e_gg[i] - mg * mg;
        let cov = e_pg[i] - mp * mg;
        let v = ((2.0 * mp * mg + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((mp * mp + mg * mg + SSIM_C1) * (var_p + var_g + SSIM_C2));
        acc.add(v);
    }
    Ok(acc.value() / mu_p.len() as f64)
}

/// PSNR and SSIM of one frame pair on the chosen channel view. SSIM over
/// multiple channels is the mean of the per-channel scores.
pub fn evaluate_pair(pred: &Frame, gt: &Frame, channel: MetricChannel) -> Result<FrameScore> {
    expect_comparable(pred, gt)?;
    let (w, h) = (gt.width(), gt.height());
    let pp = channel_planes(pred, channel);
    let gp = channel_planes(gt, channel);
    let psnr = psnr_from_planes(&pp, &gp);
    let mut acc = KahanSum::new();
    for (p, g) in pp.iter().zip(&gp) {
        acc.add(ssim_plane(p, g, w, h)?);
    }
    Ok(FrameScore {
        frame_index: gt.frame_index,
        psnr_db: psnr,
        ssim: acc.value() / pp.len() as f64,
    })
}

/// Score a reconstructed sequence against ground truth, skipping key-frame
/// timesteps (indices divisible by `key_interval`).
pub fn evaluate_sequence(
    pred: &[Frame],
    gt: &[Frame],
    key_interval: usize,
    channel: MetricChannel,
) -> Result<SequenceReport> {
    if pred.len() != gt.len() {
        return Err(Error::ShapeMismatch {
            what: "sequence lengths",
            expected: format!("{}", gt.len()),
            got: format!("{}", pred.len()),
        });
    }
    if key_interval == 0 {
        return Err(Error::InvalidParameter {
            what: "key_interval",
            detail: "must be at least 1".into(),
        });
    }
    let mut frames = Vec::new();
    let mut excluded = Vec::new();
    let mut psnr_acc = KahanSum::new();
    let mut ssim_acc = KahanSum::new();
    let mut finite = 0usize;
    let mut infinite = 0usize;
    for (i, (p, g)) in pred.iter().zip(gt).enumerate() {
        if i % key_interval == 0 {
            excluded.push(i as u32);
            continue;
        }
        let mut score = evaluate_pair(p, g, channel)?;
        score.frame_index = i as u32;
        if score.psnr_db.is_finite() {
            psnr_acc.add(score.psnr_db);
            finite += 1;
        } else {
            infinite += 1;
        }
        ssim_acc.add(score.ssim);
        frames.push(score);
    }
    let mean_psnr_db = if finite == 0 {
        f64::INFINITY
    } else {
        psnr_acc.value() / finite as f64
    };
    let mean_ssim = if frames.is_empty() {
        f64::NAN
    } else {
        ssim_acc.value() / frames.len() as f64
    };
    Ok(SequenceReport {
        channel,
        frames,
        excluded_key_indices: excluded,
        mean_psnr_db,
        infinite_psnr_frames: infinite,
        mean_ssim,
    })
}
