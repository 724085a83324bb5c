//! sRGB / CIELAB conversions and the grayscale sensor model.
//!
//! The gray sensor is modeled as quantized lightness: `gray8 = round(L* *
//! 2.55)`. Decoders work in a normalized Lab space where every channel lies
//! in `[-1, 1]`. All arithmetic is f64 end to end; the only quantization
//! happens at the explicit u8 boundaries.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::{ColorSpace, Frame};
use crate::math::quantize_u8;

/// Linear-RGB to XYZ matrix for sRGB primaries with the D65 white point.
pub const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

const DELTA: f64 = 6.0 / 29.0;
const DELTA3: f64 = DELTA * DELTA * DELTA;

/// Reference white, defined as the XYZ of linear RGB (1, 1, 1) under the
/// matrix above with left-to-right row summation. Using the row sums (and
/// the same summation order as the per-pixel dot product) makes pure white
/// land on L* = 100, a* = 0, b* = 0 exactly in f64.
pub fn white_point() -> (f64, f64, f64) {
    let xn = RGB_TO_XYZ[0][0] + RGB_TO_XYZ[0][1] + RGB_TO_XYZ[0][2];
    let yn = RGB_TO_XYZ[1][0] + RGB_TO_XYZ[1][1] + RGB_TO_XYZ[1][2];
    let zn = RGB_TO_XYZ[2][0] + RGB_TO_XYZ[2][1] + RGB_TO_XYZ[2][2];
    (xn, yn, zn)
}

/// sRGB byte to linear light (IEC 61966-2-1 EOTF).
pub fn srgb_u8_to_linear(v: u8) -> f64 {
    let c = v as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        libm::pow((c + 0.055) / 1.055, 2.4)
    }
}

/// Linear light to sRGB byte (inverse EOTF, then round half away from zero
/// and saturate).
pub fn linear_to_srgb_u8(c: f64) -> u8 {
    let c = c.clamp(0.0, 1.0);
    let s = if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * libm::pow(c, 1.0 / 2.4) - 0.055
    };
    quantize_u8(s * 255.0)
}

fn lab_f(t: f64) -> f64 {
    if t > DELTA3 {
        libm::cbrt(t)
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(t: f64) -> f64 {
    if t > DELTA {
        t * t * t
    } else {
        3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
    }
}

/// L* of a linear-RGB triple, touching only the luminance row.
pub fn lightness_from_linear(lr: f64, lg: f64, lb: f64) -> f64 {
    let (_, yn, _) = white_point();
    let y = RGB_TO_XYZ[1][0] * lr + RGB_TO_XYZ[1][1] * lg + RGB_TO_XYZ[1][2] * lb;
    116.0 * lab_f(y / yn) - 16.0
}

/// One sRGB8 pixel to raw CIELAB (L* in [0, 100], a*/b* unbounded).
pub fn rgb8_to_lab(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let lr = srgb_u8_to_linear(r);
    let lg = srgb_u8_to_linear(g);
    let lb = srgb_u8_to_linear(b);
    lab_from_linear(lr, lg, lb)
}

fn lab_from_linear(lr: f64, lg: f64, lb: f64) -> (f64, f64, f64) {
    let x = RGB_TO_XYZ[0][0] * lr + RGB_TO_XYZ[0][1] * lg + RGB_TO_XYZ[0][2] * lb;
    let y = RGB_TO_XYZ[1][0] * lr + RGB_TO_XYZ[1][1] * lg + RGB_TO_XYZ[1][2] * lb;
    let z = RGB_TO_XYZ[2][0] * lr + RGB_TO_XYZ[2][1] * lg + RGB_TO_XYZ[2][2] * lb;
    let (xn, yn, zn) = white_point();
    let fx = lab_f(x / xn);
    let fy = lab_f(y / yn);
    let fz = lab_f(z / zn);
    let l = 116.0 * fy - 16.0;
    let a = 500.0 * (fx - fy);
    let b = 200.0 * (fy - fz);
    (l, a, b)
}

/// Raw CIELAB back to one sRGB8 pixel.
pub fn lab_to_rgb8(l: f64, a: f64, b: f64) -> (u8, u8, u8) {
    let fy = (l + 16.0) / 116.0;
    let fx = fy + a / 500.0;
    let fz = fy - b / 200.0;
    let (xn, yn, zn) = white_point();
    let x = xn * lab_f_inv(fx);
    let y = yn * lab_f_inv(fy);
    let z = zn * lab_f_inv(fz);
    let inv = invert3(&RGB_TO_XYZ);
    let lr = inv[0][0] * x + inv[0][1] * y + inv[0][2] * z;
    let lg = inv[1][0] * x + inv[1][1] * y + inv[1][2] * z;
    let lb = inv[2][0] * x + inv[2][1] * y + inv[2][2] * z;
    (
        linear_to_srgb_u8(lr),
        linear_to_srgb_u8(lg),
        linear_to_srgb_u8(lb),
    )
}

/// Hand-rolled 3x3 inverse by the adjugate.
pub(crate) fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let inv_det = 1.0 / det;
    [
        [
            (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det,
        ],
        [
            (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det,
        ],
        [
            (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det,
        ],
    ]
}

/// L* in [0, 100] to the normalized [-1, 1] channel.
#[inline]
pub fn norm_l(l: f64) -> f64 {
    l / 50.0 - 1.0
}

/// a* or b* to the normalized channel: offset by 128, scale by 127.5.
#[inline]
pub fn norm_ab(v: f64) -> f64 {
    (v + 128.0) / 127.5 - 1.0
}

#[inline]
pub fn denorm_l(n: f64) -> f64 {
    (n + 1.0) * 50.0
}

#[inline]
pub fn denorm_ab(n: f64) -> f64 {
    (n + 1.0) * 127.5 - 128.0
}

/// Gray byte to the normalized [-1, 1] channel. Because gray8 is L* * 2.55,
/// this equals norm_l of the quantized lightness: v / 127.5 - 1.
#[inline]
pub fn gray_norm(v: u8) -> f64 {
    v as f64 / 127.5 - 1.0
}

#[inline]
pub fn denorm_gray(n: f64) -> u8 {
    quantize_u8((n + 1.0) * 127.5)
}

fn linear_lut() -> [f64; 256] {
    let mut lut = [0.0; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        *slot = srgb_u8_to_linear(v as u8);
    }
    lut
}

fn expect_colorspace(frame: &Frame, what: &'static str, want: ColorSpace) -> Result<()> {
    if frame.colorspace() != want {
        return Err(Error::ColorSpace {
            what,
            expected: want.name(),
            got: frame.colorspace().name(),
        });
    }
    Ok(())
}

/// sRGB8 frame to normalized Lab.
pub fn rgb_to_lab(frame: &Frame) -> Result<Frame> {
    expect_colorspace(frame, "rgb_to_lab", ColorSpace::Srgb8)?;
    let lut = linear_lut();
    let (w, h) = (frame.width(), frame.height());
    let n = w * h;
    let (rp, gp, bp) = (frame.plane_u8(0), frame.plane_u8(1), frame.plane_u8(2));
    let mut out = vec![0.0f64; 3 * n];
    for i in 0..n {
        let (l, a, b) = lab_from_linear(lut[rp[i] as usize], lut[gp[i] as usize], lut[bp[i] as usize]);
        out[i] = norm_l(l);
        out[n + i] = norm_ab(a);
        out[2 * n + i] = norm_ab(b);
    }
    Ok(Frame::from_reals(ColorSpace::LabNorm, frame.kind(), w, h, out)?
        .with_meta_from(frame))
}

/// Normalized Lab frame to sRGB8.
pub fn lab_to_rgb(frame: &Frame) -> Result<Frame> {
    expect_colorspace(frame, "lab_to_rgb", ColorSpace::LabNorm)?;
    let (w, h) = (frame.width(), frame.height());
    let n = w * h;
    let (lp, ap, bp) = (frame.plane_f64(0), frame.plane_f64(1), frame.plane_f64(2));
    let mut out = vec![0u8; 3 * n];
    for i in 0..n {
        let (r, g, b) = lab_to_rgb8(denorm_l(lp[i]), denorm_ab(ap[i]), denorm_ab(bp[i]));
        out[i] = r;
        out[n + i] = g;
        out[2 * n + i] = b;
    }
    Ok(Frame::from_bytes(ColorSpace::Srgb8, frame.kind(), w, h, out)?
        .with_meta_from(frame))
}

/// sRGB8 frame to the 8-bit gray sensor model: round(L* * 2.55).
pub fn rgb_to_gray(frame: &Frame) -> Result<Frame> {
    expect_colorspace(frame, "rgb_to_gray", ColorSpace::Srgb8)?;
    let lut = linear_lut();
    let (w, h) = (frame.width(), frame.height());
    let n = w * h;
    let (rp, gp, bp) = (frame.plane_u8(0), frame.plane_u8(1), frame.plane_u8(2));
    let mut out = vec![0u8; n];
    for i in 0..n {
        let l = lightness_from_linear(
            lut[rp[i] as usize],
            lut[gp[i] as usize],
            lut[bp[i] as usize],
        );
        out[i] = quantize_u8(l * 2.55);
    }
    Ok(Frame::from_bytes(ColorSpace::Gray8, frame.kind(), w, h, out)?
        .with_meta_from(frame))
}

/// Gray8 frame to normalized [-1, 1] reals.
pub fn gray_to_norm(frame: &Frame) -> Result<Frame> {
    expect_colorspace(frame, "gray_to_norm", ColorSpace::Gray8)?;
    let (w, h) = (frame.width(), frame.height());
    let out: Vec<f64> = frame.plane_u8(0).iter().map(|&v| gray_norm(v)).collect();
    Ok(Frame::from_reals(ColorSpace::GrayNorm, frame.kind(), w, h, out)?
        .with_meta_from(frame))
}

/// Normalized gray frame back to bytes.
pub fn norm_to_gray(frame: &Frame) -> Result<Frame> {
    expect_colorspace(frame, "norm_to_gray", ColorSpace::GrayNorm)?;
    let (w, h) = (frame.width(), frame.height());
    let out: Vec<u8> = frame.plane_f64(0).iter().map(|&v| denorm_gray(v)).collect();
    Ok(Frame::from_bytes(ColorSpace::Gray8, frame.kind(), w, h, out)?
        .with_meta_from(frame))
}
