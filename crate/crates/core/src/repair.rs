//! Line-loss concealment.
//!
//! The wire layer ships frames line by line, so channel drops turn into
//! horizontal zero bands. Repair walks the loss runs top to bottom and for
//! each run of `n` lost rows takes the [`SNIPPET_ROWS`] rows directly above,
//! bicubically stretches that snippet vertically to `SNIPPET_ROWS + n` rows,
//! and writes the stretched snippet over both the context rows and the gap.
//! Runs too close to the top fall back to replicating the nearest valid
//! row. A frame with every line lost cannot be repaired; it stays zero and
//! is flagged.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::{Frame, Samples};
use crate::math::quantize_u8;
use crate::resample::resample_plane;
use crate::wire::LossMap;

/// Height of the context snippet stretched over each loss run.
pub const SNIPPET_ROWS: usize = 5;

/// A repaired frame. `fully_lost` marks the unrepairable all-lines-lost
/// case, where the frame is left zero filled.
#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub frame: Frame,
    pub fully_lost: bool,
}

/// Conceal the lost lines of a frame. An empty loss map returns the frame
/// bit for bit. Channels are repaired independently; byte frames are
/// re-quantized with round-half-away saturation.
pub fn repair(frame: &Frame, loss: &LossMap) -> Result<RepairOutcome> {
    let (w, h, ch) = (frame.width(), frame.height(), frame.channels());
    for run in loss.runs() {
        let end = run.start as usize + run.count as usize;
        if end > h {
            return Err(Error::InvalidParameter {
                what: "loss map",
                detail: format!(
                    "run at {} of {} lines exceeds frame height {h}",
                    run.start, run.count
                ),
            });
        }
    }
    if loss.is_empty() {
        return Ok(RepairOutcome {
            frame: frame.clone(),
            fully_lost: false,
        });
    }
    if loss.total_lines() == h {
        return Ok(RepairOutcome {
            frame: Frame::zeros(frame.colorspace(), frame.kind(), w, h).with_meta_from(frame),
            fully_lost: true,
        });
    }

    let mut planes: Vec<Vec<f64>> = (0..ch)
        .map(|c| match frame.samples() {
            Samples::Bytes(_) => frame.plane_u8(c).iter().map(|&v| v as f64).collect(),
            Samples::Reals(_) => frame.plane_f64(c).to_vec(),
        })
        .collect();

    for plane in &mut planes {
        for run in loss.runs() {
            repair_run(plane, w, h, run.start as usize, run.count as usize);
        }
    }

    let out = match frame.samples() {
        Samples::Bytes(_) => {
            let mut data = Vec::with_capacity(w * h * ch);
            for plane in &planes {
                data.extend(plane.iter().map(|&v| quantize_u8(v)));
            }
            Frame::from_bytes(frame.colorspace(), frame.kind(), w, h, data)?
        }
        Samples::Reals(_) => {
            let mut data = Vec::with_capacity(w * h * ch);
            for plane in &planes {
                data.extend_from_slice(plane);
            }
            Frame::from_reals(frame.colorspace(), frame.kind(), w, h, data)?
        }
    };
    Ok(RepairOutcome {
        frame: out.with_meta_from(frame),
        fully_lost: false,
    })
}

/// Before/after quality of a concealment pass against the clean reference.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RepairStats {
    pub lost_lines: usize,
    #[cfg_attr(feature = "serde", serde(with = "crate::metrics::score_value"))]
    pub psnr_before_db: f64,
    #[cfg_attr(feature = "serde", serde(with = "crate::metrics::score_value"))]
    pub psnr_after_db: f64,
}

/// Score a repair: PSNR of the damaged and the repaired frame against the
/// reference, plus how many lines the loss map covered. With no losses
/// both PSNRs are equal.
pub fn repair_report(
    damaged: &Frame,
    repaired: &Frame,
    reference: &Frame,
    loss: &LossMap,
) -> Result<RepairStats> {
    Ok(RepairStats {
        lost_lines: loss.total_lines(),
        psnr_before_db: crate::metrics::psnr_bytes(damaged, reference)?,
        psnr_after_db: crate::metrics::psnr_bytes(repaired, reference)?,
    })
}

/// Repair one run in one plane. Earlier runs are already repaired when a
/// later run reads its context, because runs arrive sorted top to bottom.
fn repair_run(plane: &mut [f64], w: usize, h: usize, start: usize, count: usize) {
    if start >= SNIPPET_ROWS {
        // Stretch the snippet above the run over snippet + gap.
        let top = start - SNIPPET_ROWS;
        let snippet = plane[top * w..start * w].to_vec();
        let stretched = resample_plane(&snippet, w, SNIPPET_ROWS, w, SNIPPET_ROWS + count, true);
        plane[top * w..(start + count) * w].copy_from_slice(&stretched);
    } else {
        // Not enough context above: replicate the nearest valid row.
        let donor = if start > 0 { start - 1 } else { start + count };
        debug_assert!(donor < h);
        let row = plane[donor * w..(donor + 1) * w].to_vec();
        for y in start..start + count {
            plane[y * w..(y + 1) * w].copy_from_slice(&row);
        }
    }
}
