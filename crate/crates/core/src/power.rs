//! Power, bandwidth and design-space arithmetic for the hardware platform.
//!
//! The dual-mode design wins on three axes, each quantified here from the
//! component table: sensor power (a duty-cycled color sensor plus an
//! always-on low-power gray sensor versus one full-rate color sensor),
//! captured data volume, and the pixel rate a compression codec would have
//! to chew through. The table values are measurements of the reference
//! hardware; everything else is arithmetic on top.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// What a component is; controllers and radios are carried in the totals
/// but are not part of the camera-subsystem comparisons (the reference
/// firmware leaves them unoptimized).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ComponentKind {
    Sensor,
    Controller,
    Radio,
}

/// One row of the component power table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerEntry {
    pub name: String,
    pub kind: ComponentKind,
    pub active_current_ma: f64,
    pub voltage_v: f64,
    /// Fraction of time the component is active.
    pub duty_cycle: f64,
}

impl PowerEntry {
    pub fn validate(&self) -> Result<()> {
        if self.active_current_ma < 0.0 || self.voltage_v < 0.0 {
            return Err(Error::InvalidParameter {
                what: "power entry",
                detail: format!(
                    "{}: negative current or voltage",
                    self.name
                ),
            });
        }
        if !(0.0..=1.0).contains(&self.duty_cycle) {
            return Err(Error::InvalidParameter {
                what: "power entry duty cycle",
                detail: format!("{}: {}", self.name, self.duty_cycle),
            });
        }
        Ok(())
    }

    /// Average current in mA: active current scaled by duty.
    pub fn average_current_ma(&self) -> f64 {
        self.active_current_ma * self.duty_cycle
    }

    /// Average power in mW: current x duty x voltage.
    pub fn average_power_mw(&self) -> f64 {
        self.active_current_ma * self.duty_cycle * self.voltage_v
    }
}

/// The whole platform: component table plus the stream geometry the
/// design-space numbers derive from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemProfile {
    pub entries: Vec<PowerEntry>,
    pub lr_width: usize,
    pub lr_height: usize,
    pub hr_width: usize,
    pub hr_height: usize,
    pub lr_fps: f64,
    /// Key frames per second.
    pub key_fps: f64,
}

/// Measured power of a conventional single color camera streaming
/// continuously at full rate, in mW.
pub const SINGLE_CAMERA_MW: f64 = 46.2;

impl Default for SystemProfile {
    fn default() -> Self {
        Self::reference()
    }
}

impl SystemProfile {
    /// The measured component table of the reference hardware.
    pub fn reference() -> Self {
        let entry = |name: &str, kind, ma, v, duty| PowerEntry {
            name: String::from(name),
            kind,
            active_current_ma: ma,
            voltage_v: v,
            duty_cycle: duty,
        };
        Self {
            entries: vec![
                entry("HM01B0 gray sensor (15 fps)", ComponentKind::Sensor, 0.97, 2.8, 1.0),
                entry("OV7692 color sensor (40 ms/s)", ComponentKind::Sensor, 27.52, 2.8, 0.04),
                entry("STM32L496 controller", ComponentKind::Controller, 4.57, 1.8, 1.0),
                entry("STM32U575 controller", ComponentKind::Controller, 18.0, 1.8, 1.0),
                entry("CC2640R2F radios", ComponentKind::Radio, 21.42, 1.8, 1.0),
            ],
            lr_width: 160,
            lr_height: 120,
            hr_width: 640,
            hr_height: 480,
            lr_fps: 15.0,
            key_fps: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidParameter {
                what: "power profile",
                detail: "no entries".into(),
            });
        }
        for e in &self.entries {
            e.validate()?;
        }
        if self.lr_width == 0
            || self.lr_height == 0
            || self.hr_width == 0
            || self.hr_height == 0
            || !(self.lr_fps > 0.0)
            || !(self.key_fps >= 0.0)
        {
            return Err(Error::InvalidParameter {
                what: "power profile geometry",
                detail: format!(
                    "{}x{} / {}x{} @ {} fps, keys {} fps",
                    self.lr_width, self.lr_height, self.hr_width, self.hr_height,
                    self.lr_fps, self.key_fps
                ),
            });
        }
        Ok(())
    }

    /// Average power of the two image sensors together, in mW.
    pub fn camera_subsystem_mw(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.kind == ComponentKind::Sensor)
            .map(|e| e.average_power_mw())
            .sum()
    }

    /// Average power of the whole platform, in mW (controllers and radios
    /// included, unoptimized as measured).
    pub fn total_mw(&self) -> f64 {
        self.entries.iter().map(|e| e.average_power_mw()).sum()
    }

    /// Sensor-power advantage of the dual-mode design over one continuous
    /// color camera.
    pub fn sensor_power_ratio(&self) -> f64 {
        SINGLE_CAMERA_MW / self.camera_subsystem_mw()
    }

    /// Data reduction, two ways.
    ///
    /// (a) per-frame sample count: color samples of one high-res frame over
    /// gray samples of one low-res frame.
    /// (b) full-rate sample throughput including the key-frame stream.
    pub fn data_reduction_factors(&self) -> (f64, f64) {
        let hr_samples = (self.hr_width * self.hr_height * 3) as f64;
        let lr_samples = (self.lr_width * self.lr_height) as f64;
        let a = hr_samples / lr_samples;
        let full_rate = hr_samples * self.lr_fps;
        let dual_rate = lr_samples * self.lr_fps + hr_samples * self.key_fps;
        (a, full_rate / dual_rate)
    }

    /// Pixels per second a codec must process: single continuous color
    /// camera over the dual-mode pair.
    pub fn codec_pixel_ratio(&self) -> f64 {
        let single = (self.hr_width * self.hr_height) as f64 * self.lr_fps;
        let dual = (self.lr_width * self.lr_height) as f64 * self.lr_fps
            + (self.hr_width * self.hr_height) as f64 * self.key_fps;
        single / dual
    }
}

/// Allocate a total codec bitrate between the streams: three quarters to
/// the dense low-resolution stream, the rest to the key-frame stream.
pub fn bitrate_split(total_bps: f64) -> Result<(f64, f64)> {
    if !(total_bps > 0.0) {
        return Err(Error::InvalidParameter {
            what: "total bitrate",
            detail: format!("{total_bps}"),
        });
    }
    Ok((0.75 * total_bps, 0.25 * total_bps))
}

/// Power-reduction factor from duty-cycling a sensor down to a 1 Hz
/// key-frame regime: equal to the full frame rate.
pub fn duty_cycle_savings(fps: f64) -> Result<f64> {
    if !(fps >= 1.0) {
        return Err(Error::InvalidParameter {
            what: "fps",
            detail: format!("{fps} (need at least 1)"),
        });
    }
    Ok(fps)
}
