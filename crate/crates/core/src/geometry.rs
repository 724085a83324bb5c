//! Planar homographies for cross-sensor alignment.
//!
//! The two sensors sit side by side, so their views differ by a projective
//! transform. Calibration produces four matched point pairs; estimation is
//! the exactly determined DLT: an 8x8 linear system solved by Gaussian
//! elimination with partial pivoting. Warping uses inverse mapping with
//! bilinear sampling, pixel centers at integer + 0.5.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::{Frame, Samples};
use crate::math::quantize_u8;

/// Denominators smaller than this are treated as projective blow-up.
const W_EPS: f64 = 1e-12;

/// 3x3 projective transform, normalized so `m[2][2] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    pub m: [[f64; 3]; 3],
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Normalize an arbitrary matrix so the bottom-right entry is 1.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        let w = m[2][2];
        if !w.is_finite() || w.abs() < W_EPS {
            return Err(Error::Degenerate {
                detail: format!("cannot normalize homography, h33 = {w}"),
            });
        }
        let mut out = [[0.0; 3]; 3];
        for (i, row) in m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                out[i][j] = v / w;
            }
        }
        out[2][2] = 1.0;
        Ok(Self { m: out })
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            m: [[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]],
        }
    }

    /// Isotropic scale about the origin: diag(s, s, 1).
    pub fn scaling(s: f64) -> Self {
        Self {
            m: [[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Map a point. `None` when the projective denominator collapses.
    pub fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let m = &self.m;
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        if !w.is_finite() || w.abs() < W_EPS {
            return None;
        }
        let px = (m[0][0] * x + m[0][1] * y + m[0][2]) / w;
        let py = (m[1][0] * x + m[1][1] * y + m[1][2]) / w;
        Some((px, py))
    }

    /// Exact 4-point DLT. Each pair contributes the two rows
    /// `[x, y, 1, 0, 0, 0, -x x', -y x'] . h = x'` and
    /// `[0, 0, 0, x, y, 1, -x y', -y y'] . h = y'`
    /// for the unknowns h11..h32 (h33 pinned to 1).
    pub fn from_points(src: &[(f64, f64); 4], dst: &[(f64, f64); 4]) -> Result<Self> {
        let mut a = [[0.0f64; 8]; 8];
        let mut b = [0.0f64; 8];
        for (p, (&(x, y), &(xp, yp))) in src.iter().zip(dst.iter()).enumerate() {
            a[2 * p] = [x, y, 1.0, 0.0, 0.0, 0.0, -x * xp, -y * xp];
            b[2 * p] = xp;
            a[2 * p + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -x * yp, -y * yp];
            b[2 * p + 1] = yp;
        }
        let h = solve8(&mut a, &mut b)?;
        Ok(Self {
            m: [
                [h[0], h[1], h[2]],
                [h[3], h[4], h[5]],
                [h[6], h[7], 1.0],
            ],
        })
    }

    /// Matrix inverse via the adjugate, renormalized to h33 = 1.
    pub fn inverse(&self) -> Result<Self> {
        let m = &self.m;
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if !det.is_finite() || det.abs() < W_EPS {
            return Err(Error::Degenerate {
                detail: format!("homography not invertible, det = {det}"),
            });
        }
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        Self::new(adj)
    }

    /// `self.compose(other)` applies `other` first: (a o b)(p) = a(b(p)).
    pub fn compose(&self, other: &Homography) -> Result<Self> {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for (k, row) in other.m.iter().enumerate() {
                    s += self.m[i][k] * row[j];
                }
                out[i][j] = s;
            }
        }
        Self::new(out)
    }

    /// Largest absolute entry difference between two homographies.
    pub fn max_abs_diff(&self, other: &Homography) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        worst
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }
}

/// Gaussian elimination with partial pivoting on an 8x8 system.
fn solve8(a: &mut [[f64; 8]; 8], b: &mut [f64; 8]) -> Result<[f64; 8]> {
    for col in 0..8 {
        let mut pivot = col;
        for row in col + 1..8 {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < W_EPS {
            return Err(Error::Degenerate {
                detail: format!("singular DLT system at column {col} (collinear points?)"),
            });
        }
        if pivot != col {
            a.swap(pivot, col);
            b.swap(pivot, col);
        }
        for row in col + 1..8 {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..8 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 8];
    for col in (0..8).rev() {
        let mut s = b[col];
        for k in col + 1..8 {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Ok(x)
}

/// A warped frame plus its validity mask (false where the inverse mapping
/// left the source footprint; those samples are zero).
#[derive(Debug, Clone)]
pub struct Warped {
    pub frame: Frame,
    pub mask: Vec<bool>,
}

/// Warp a frame by `h`, which maps source coordinates to destination
/// coordinates. Implemented as inverse mapping: each destination pixel
/// center (j + 0.5, i + 0.5) is pulled back through `h^-1` and bilinearly
/// sampled. Out-of-range samples become 0 and are flagged in the mask.
pub fn warp_frame(frame: &Frame, h: &Homography) -> Result<Warped> {
    let inv = h.inverse()?;
    let (w, hgt, ch) = (frame.width(), frame.height(), frame.channels());
    let n = w * hgt;
    let mut mask = vec![true; n];

    // Gather per-pixel source positions once; planes reuse them.
    let mut pos = vec![(0.0f64, 0.0f64); n];
    for i in 0..hgt {
        for j in 0..w {
            let (u, v) = (j as f64 + 0.5, i as f64 + 0.5);
            match inv.apply(u, v) {
                Some((us, vs)) => {
                    let xs = us - 0.5;
                    let ys = vs - 0.5;
                    if xs < 0.0 || ys < 0.0 || xs > (w - 1) as f64 || ys > (hgt - 1) as f64 {
                        mask[i * w + j] = false;
                    } else {
                        pos[i * w + j] = (xs, ys);
                    }
                }
                None => mask[i * w + j] = false,
            }
        }
    }

    let sample_plane = |plane: &mut dyn FnMut(usize) -> f64, out: &mut [f64]| {
        for (p, (&(xs, ys), &valid)) in pos.iter().zip(mask.iter()).enumerate() {
            if !valid {
                out[p] = 0.0;
                continue;
            }
            let x0 = libm::floor(xs) as usize;
            let y0 = libm::floor(ys) as usize;
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(hgt - 1);
            let fx = xs - x0 as f64;
            let fy = ys - y0 as f64;
            let s00 = plane(y0 * w + x0);
            let s01 = plane(y0 * w + x1);
            let s10 = plane(y1 * w + x0);
            let s11 = plane(y1 * w + x1);
            let top = s00 + fx * (s01 - s00);
            let bot = s10 + fx * (s11 - s10);
            out[p] = top + fy * (bot - top);
        }
    };

    match frame.samples() {
        Samples::Reals(_) => {
            let mut data = Vec::with_capacity(n * ch);
            for c in 0..ch {
                let plane = frame.plane_f64(c);
                let mut out = vec![0.0; n];
                sample_plane(&mut |i| plane[i], &mut out);
                data.extend(out);
            }
            let out = Frame::from_reals(frame.colorspace(), frame.kind(), w, hgt, data)?
                .with_meta_from(frame);
            Ok(Warped { frame: out, mask })
        }
        Samples::Bytes(_) => {
            let mut data = Vec::with_capacity(n * ch);
            for c in 0..ch {
                let plane = frame.plane_u8(c);
                let mut out = vec![0.0; n];
                sample_plane(&mut |i| plane[i] as f64, &mut out);
                data.extend(out.iter().map(|&v| quantize_u8(v)));
            }
            let out = Frame::from_bytes(frame.colorspace(), frame.kind(), w, hgt, data)?
                .with_meta_from(frame);
            Ok(Warped { frame: out, mask })
        }
    }
}
