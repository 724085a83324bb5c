//! Convolutional building blocks and the training loss.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::pairwise_sum;

use super::{expect_same_shape, FeatureMap};

/// 3x3 convolution, stride 1, zero ("same") padding, with bias.
/// Weight layout: `[out_ch][in_ch][ky][kx]`, flattened row major.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv3x3 {
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv3x3 {
    pub fn new(in_channels: usize, out_channels: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != out_channels * in_channels * 9 {
            return Err(Error::ShapeMismatch {
                what: "Conv3x3 weights",
                expected: format!("{} values", out_channels * in_channels * 9),
                got: format!("{}", weights.len()),
            });
        }
        if bias.len() != out_channels {
            return Err(Error::ShapeMismatch {
                what: "Conv3x3 bias",
                expected: format!("{out_channels} values"),
                got: format!("{}", bias.len()),
            });
        }
        Ok(Self {
            in_channels,
            out_channels,
            weights,
            bias,
        })
    }

    /// All-zero kernel and bias (the identity residual branch).
    pub fn zeros(in_channels: usize, out_channels: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            weights: vec![0.0; out_channels * in_channels * 9],
            bias: vec![0.0; out_channels],
        }
    }

    #[inline]
    fn weight(&self, oc: usize, ic: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((oc * self.in_channels + ic) * 3 + ky) * 3 + kx]
    }

    pub fn apply(&self, input: &FeatureMap) -> Result<FeatureMap> {
        if input.channels() != self.in_channels {
            return Err(Error::ShapeMismatch {
                what: "Conv3x3 input channels",
                expected: format!("{}", self.in_channels),
                got: format!("{}", input.channels()),
            });
        }
        let (w, h, _) = input.shape();
        let mut out = FeatureMap::zeros(w, h, self.out_channels);
        for oc in 0..self.out_channels {
            for y in 0..h {
                for x in 0..w {
                    let mut acc = self.bias[oc];
                    for ic in 0..self.in_channels {
                        for ky in 0..3 {
                            let sy = y as i64 + ky as i64 - 1;
                            if sy < 0 || sy >= h as i64 {
                                continue;
                            }
                            for kx in 0..3 {
                                let sx = x as i64 + kx as i64 - 1;
                                if sx < 0 || sx >= w as i64 {
                                    continue;
                                }
                                acc += self.weight(oc, ic, ky, kx)
                                    * input.get(ic, sy as usize, sx as usize);
                            }
                        }
                    }
                    out.set(oc, y, x, acc);
                }
            }
        }
        Ok(out)
    }
}

/// Elementwise max(0, x).
pub fn relu(input: &FeatureMap) -> FeatureMap {
    let mut out = input.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// Residual block: `y = x + conv2(relu(conv1(x)))`. Both convolutions must
/// preserve the channel count so the skip connection lines up.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub conv1: Conv3x3,
    pub conv2: Conv3x3,
}

impl ResidualBlock {
    pub fn new(conv1: Conv3x3, conv2: Conv3x3) -> Result<Self> {
        if conv1.out_channels != conv2.in_channels || conv1.in_channels != conv2.out_channels {
            return Err(Error::ShapeMismatch {
                what: "ResidualBlock channel chain",
                expected: format!(
                    "conv2 {}->{}",
                    conv1.out_channels, conv1.in_channels
                ),
                got: format!("conv2 {}->{}", conv2.in_channels, conv2.out_channels),
            });
        }
        Ok(Self { conv1, conv2 })
    }

    pub fn apply(&self, input: &FeatureMap) -> Result<FeatureMap> {
        let hidden = relu(&self.conv1.apply(input)?);
        let branch = self.conv2.apply(&hidden)?;
        expect_same_shape("residual skip", input, &branch)?;
        let mut out = input.clone();
        for (o, b) in out.data_mut().iter_mut().zip(branch.data()) {
            *o += b;
        }
        Ok(out)
    }
}

/// Sub-pixel shuffle: `(w, h, c)` to `(w*r, h*r, c/r^2)`. Input channel
/// `co*r^2 + rr*r + rc` lands at output channel `co`, row offset `rr`,
/// column offset `rc` inside each r-by-r cell.
pub fn pixel_shuffle(input: &FeatureMap, r: usize) -> Result<FeatureMap> {
    if r == 0 {
        return Err(Error::InvalidParameter {
            what: "pixel_shuffle factor",
            detail: "zero".into(),
        });
    }
    let (w, h, c) = input.shape();
    if c % (r * r) != 0 {
        return Err(Error::ShapeMismatch {
            what: "pixel_shuffle channels",
            expected: format!("a multiple of {}", r * r),
            got: format!("{c}"),
        });
    }
    let out_c = c / (r * r);
    let mut out = FeatureMap::zeros(w * r, h * r, out_c);
    for ci in 0..c {
        let co = ci / (r * r);
        let rr = (ci / r) % r;
        let rc = ci % r;
        for y in 0..h {
            for x in 0..w {
                out.set(co, y * r + rr, x * r + rc, input.get(ci, y, x));
            }
        }
    }
    Ok(out)
}

/// Exact inverse of [`pixel_shuffle`].
pub fn pixel_unshuffle(input: &FeatureMap, r: usize) -> Result<FeatureMap> {
    if r == 0 {
        return Err(Error::InvalidParameter {
            what: "pixel_unshuffle factor",
            detail: "zero".into(),
        });
    }
    let (w, h, c) = input.shape();
    if w % r != 0 || h % r != 0 {
        return Err(Error::ShapeMismatch {
            what: "pixel_unshuffle size",
            expected: format!("dimensions divisible by {r}"),
            got: format!("{w}x{h}"),
        });
    }
    let mut out = FeatureMap::zeros(w / r, h / r, c * r * r);
    for co in 0..c {
        for rr in 0..r {
            for rc in 0..r {
                let ci = (co * r + rr) * r + rc;
                for y in 0..h / r {
                    for x in 0..w / r {
                        out.set(ci, y, x, input.get(co, y * r + rr, x * r + rc));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// How the Charbonnier penalty reduces over a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CharbonnierMode {
    /// Mean over elements of `sqrt(d^2 + eps^2)` (the default).
    Element,
    /// Single penalty over the whole frame: `sqrt(sum d^2 + eps^2)`.
    Frame,
}

/// Charbonnier (smooth L1) distance between two equally shaped maps.
pub fn charbonnier(
    pred: &FeatureMap,
    target: &FeatureMap,
    mode: CharbonnierMode,
    epsilon: f64,
) -> Result<f64> {
    expect_same_shape("charbonnier operands", pred, target)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            what: "charbonnier epsilon",
            detail: format!("{epsilon}"),
        });
    }
    let eps2 = epsilon * epsilon;
    match mode {
        CharbonnierMode::Element => {
            let terms: Vec<f64> = pred
                .data()
                .iter()
                .zip(target.data())
                .map(|(p, t)| {
                    let d = p - t;
                    libm::sqrt(d * d + eps2)
                })
                .collect();
            Ok(pairwise_sum(&terms) / terms.len() as f64)
        }
        CharbonnierMode::Frame => {
            let terms: Vec<f64> = pred
                .data()
                .iter()
                .zip(target.data())
                .map(|(p, t)| {
                    let d = p - t;
                    d * d
                })
                .collect();
            Ok(libm::sqrt(pairwise_sum(&terms) + eps2))
        }
    }
}

/// The default Charbonnier epsilon.
pub const CHARBONNIER_EPSILON: f64 = 1e-3;
