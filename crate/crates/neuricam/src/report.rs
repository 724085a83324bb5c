//! Report types written by the CLI: evaluation scores, the power and
//! bandwidth table, and repair summaries.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use neuricam_core::capture::CaptureConfig;
use neuricam_core::frame::Frame;
use neuricam_core::metrics::{evaluate_sequence, MetricChannel, SequenceReport};
use neuricam_core::power::{
    bitrate_split, duty_cycle_savings, SystemProfile, SINGLE_CAMERA_MW,
};
use neuricam_core::repair::RepairStats;
use neuricam_core::wire::{rate_report, RateReport, RADIO_BPS};

use crate::error::{CliError, CliResult};

/// Stated in every report: which luma definition the Y channel uses.
pub const Y_CHANNEL_NOTE: &str =
    "Y channel is CIE L* rescaled to [0, 255] (not YCbCr luma); ab are the \
     CIELAB chroma channels offset by +128.";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub note: String,
    pub key_interval: usize,
    pub frame_count: usize,
    pub excluded_key_indices: Vec<u32>,
    /// One series per channel view (y, ab, rgb).
    pub channels: Vec<SequenceReport>,
}

impl EvaluationReport {
    /// Score `pred` against `gt` on all three channel views.
    pub fn compute(pred: &[Frame], gt: &[Frame], key_interval: usize) -> CliResult<Self> {
        let mut channels = Vec::new();
        for ch in [MetricChannel::Y, MetricChannel::Ab, MetricChannel::Rgb] {
            channels.push(evaluate_sequence(pred, gt, key_interval, ch)?);
        }
        Ok(EvaluationReport {
            note: Y_CHANNEL_NOTE.into(),
            key_interval,
            frame_count: gt.len(),
            excluded_key_indices: channels[0].excluded_key_indices.clone(),
            channels,
        })
    }

    pub fn channel(&self, ch: MetricChannel) -> &SequenceReport {
        self.channels
            .iter()
            .find(|r| r.channel == ch)
            .expect("report holds all channels")
    }

    /// Per-frame CSV for plotting: one row per evaluated frame, one
    /// psnr/ssim column pair per channel. Infinite PSNR prints as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame");
        for r in &self.channels {
            let n = r.channel.name();
            let _ = write!(out, ",{n}_psnr_db,{n}_ssim");
        }
        out.push('\n');
        let rows = self.channels.first().map_or(0, |r| r.frames.len());
        for i in 0..rows {
            let _ = write!(out, "{}", self.channels[0].frames[i].frame_index);
            for r in &self.channels {
                let f = &r.frames[i];
                let _ = write!(out, ",{},{}", f.psnr_db, f.ssim);
            }
            out.push('\n');
        }
        out
    }
}

/// One measured component with its derived averages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentRow {
    pub name: String,
    pub active_current_ma: f64,
    pub voltage_v: f64,
    pub duty_cycle: f64,
    pub average_current_ma: f64,
    pub average_power_mw: f64,
    /// Controllers and radios run reference firmware with no power tuning;
    /// their draw is carried in totals but is not a design claim.
    pub unoptimized: bool,
}

/// One derived quantity next to the figure the hardware report publishes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivedRow {
    pub quantity: String,
    pub computed: f64,
    pub unit: String,
    pub published: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerReport {
    pub components: Vec<ComponentRow>,
    pub total_mw: f64,
    pub camera_subsystem_mw: f64,
    pub derived: Vec<DerivedRow>,
    pub rates: RateReport,
}

impl PowerReport {
    pub fn compute(profile: &SystemProfile) -> CliResult<Self> {
        profile.validate().map_err(CliError::from)?;
        let components = profile
            .entries
            .iter()
            .map(|e| ComponentRow {
                name: e.name.clone(),
                active_current_ma: e.active_current_ma,
                voltage_v: e.voltage_v,
                duty_cycle: e.duty_cycle,
                average_current_ma: e.average_current_ma(),
                average_power_mw: e.average_power_mw(),
                unoptimized: e.kind != neuricam_core::power::ComponentKind::Sensor,
            })
            .collect();

        let (factor_frame, factor_rate) = profile.data_reduction_factors();
        let duty_sensor = profile
            .entries
            .iter()
            .find(|e| e.duty_cycle < 1.0)
            .cloned();
        let key_frame_bits =
            (profile.hr_width * profile.hr_height) as f64 * 16.0;
        let (lr_share, key_share) = bitrate_split(1.0).map_err(CliError::from)?;

        let mut derived = vec![
            DerivedRow {
                quantity: "camera subsystem power".into(),
                computed: profile.camera_subsystem_mw(),
                unit: "mW".into(),
                published: "5.8 mW".into(),
            },
            DerivedRow {
                quantity: "single continuous color camera power".into(),
                computed: SINGLE_CAMERA_MW,
                unit: "mW".into(),
                published: "46.2 mW".into(),
            },
            DerivedRow {
                quantity: "sensor power ratio (single / dual)".into(),
                computed: profile.sensor_power_ratio(),
                unit: "x".into(),
                published: "8x lower sensor power".into(),
            },
            DerivedRow {
                quantity: "codec pixel-rate ratio (single / dual pixels per second)".into(),
                computed: profile.codec_pixel_ratio(),
                unit: "x".into(),
                published: "7-8x lower codec power".into(),
            },
            DerivedRow {
                quantity: "data reduction (a): color samples per frame / gray samples per frame"
                    .into(),
                computed: factor_frame,
                unit: "x".into(),
                published: "factor of 48".into(),
            },
            DerivedRow {
                quantity:
                    "data reduction (b): full-rate single-camera samples/s / dual-mode samples/s \
                     including key frames"
                        .into(),
                computed: factor_rate,
                unit: "x".into(),
                published: "not printed; the published 48 counts per-frame samples only".into(),
            },
            DerivedRow {
                quantity: format!("duty-cycle savings at {} fps", profile.lr_fps),
                computed: duty_cycle_savings(profile.lr_fps).map_err(CliError::from)?,
                unit: "x".into(),
                published: "roughly 15x for 15 fps video".into(),
            },
            DerivedRow {
                quantity: "key frame size at 16 bits per pixel".into(),
                computed: key_frame_bits,
                unit: "bits".into(),
                published: "5 Mb".into(),
            },
            DerivedRow {
                quantity: "bitrate share for the low-resolution stream".into(),
                computed: lr_share,
                unit: "fraction".into(),
                published: "three-quarters of the bitrate".into(),
            },
            DerivedRow {
                quantity: "bitrate share for the key-frame stream".into(),
                computed: key_share,
                unit: "fraction".into(),
                published: "the rest".into(),
            },
            DerivedRow {
                quantity: "system total".into(),
                computed: profile.total_mw(),
                unit: "mW".into(),
                published: "106 mW and 85 mW (the two printed table versions disagree)".into(),
            },
        ];
        if let Some(e) = duty_sensor {
            derived.insert(
                0,
                DerivedRow {
                    quantity: format!("{} average current", e.name),
                    computed: e.average_current_ma(),
                    unit: "mA".into(),
                    published: "1.10 mA".into(),
                },
            );
        }

        let rates = rate_report(&CaptureConfig {
            lr_width: profile.lr_width,
            lr_height: profile.lr_height,
            scale: (profile.hr_width / profile.lr_width).max(1),
            lr_fps: profile.lr_fps,
            key_interval: if profile.key_fps > 0.0 {
                (profile.lr_fps / profile.key_fps).round().max(1.0) as usize
            } else {
                usize::MAX
            },
            timer_offset_ms: 0,
            noise: Default::default(),
        });

        Ok(PowerReport {
            components,
            total_mw: profile.total_mw(),
            camera_subsystem_mw: profile.camera_subsystem_mw(),
            derived,
            rates,
        })
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("# Power and bandwidth report\n\n");
        out.push_str("## Component table\n\n");
        out.push_str(
            "| component | active mA | V | duty | avg mA | avg mW | note |\n\
             |---|---|---|---|---|---|---|\n",
        );
        for c in &self.components {
            let _ = writeln!(
                out,
                "| {} | {:.2} mA | {:.1} V | {:.2} | {:.4} mA | {:.5} mW | {} |",
                c.name,
                c.active_current_ma,
                c.voltage_v,
                c.duty_cycle,
                c.average_current_ma,
                c.average_power_mw,
                if c.unoptimized { "unoptimized" } else { "" },
            );
        }
        let _ = writeln!(
            out,
            "\nCamera subsystem (sensors only): {:.5} mW. System total: {:.5} mW.\n",
            self.camera_subsystem_mw, self.total_mw
        );
        out.push_str("## Derived quantities\n\n");
        out.push_str("| quantity | computed | published |\n|---|---|---|\n");
        for d in &self.derived {
            let _ = writeln!(
                out,
                "| {} | {:.5} {} | {} |",
                d.quantity, d.computed, d.unit, d.published
            );
        }
        let _ = writeln!(
            out,
            "\n## Radio budget\n\n\
             Low-resolution stream: {:.0} bits/s, {} radio(s) at {:.0} bits/s each.\n\
             Key frame: {:.0} bits every {:.2} s, {} radio(s) for burst transfer.",
            self.rates.lr_bits_per_sec,
            self.rates.lr_radios,
            RADIO_BPS,
            self.rates.key_frame_bits,
            1.0 / self.rates.key_fps,
            self.rates.key_radios,
        );
        out
    }
}

/// What the `repair` subcommand writes next to the repaired frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepairSummary {
    pub lost_lines: usize,
    pub fully_lost: bool,
    /// Present when a clean reference was supplied for scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<RepairStats>,
}
