//! Directory formats for frame sequences and dual streams.
//!
//! A ground-truth sequence is a directory of numbered PNGs plus a
//! `sequence.json` sidecar carrying what pixels cannot: frame rate and the
//! nominal resolution. A dual stream is two such frame directories (`lr/`,
//! `keys/`) under one root with a `stream.json` manifest holding the
//! capture config, per-frame timestamps and, for received streams, the
//! loss annotations.

use std::fs;
use std::path::{Path, PathBuf};

use neuricam_core::capture::{CaptureConfig, DualStream};
use neuricam_core::frame::{Frame, StreamKind};
use neuricam_core::wire::LossMap;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::imageio::{read_png, write_png};

/// Sidecar for a plain frame directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceSidecar {
    pub fps: f64,
    pub width: usize,
    pub height: usize,
}

pub const SIDECAR_NAME: &str = "sequence.json";
pub const STREAM_MANIFEST_NAME: &str = "stream.json";

fn frame_name(index: u32) -> String {
    format!("{index:06}.png")
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Write a ground-truth sequence: numbered PNGs plus the sidecar.
pub fn write_sequence(dir: &Path, frames: &[Frame], fps: f64) -> CliResult<()> {
    if frames.is_empty() {
        return Err(CliError::Data("empty sequence".into()));
    }
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (i, f) in frames.iter().enumerate() {
        write_png(&dir.join(frame_name(i as u32)), f)?;
    }
    let sidecar = SequenceSidecar {
        fps,
        width: frames[0].width(),
        height: frames[0].height(),
    };
    write_json(&dir.join(SIDECAR_NAME), &sidecar)
}

/// Numbered PNG files of a directory, sorted by their numeric stem.
fn png_files(dir: &Path) -> CliResult<Vec<(u32, PathBuf)>> {
    let mut out = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("png") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let index: u32 = stem.parse().map_err(|_| {
            CliError::Data(format!(
                "{}: frame file name is not a number",
                path.display()
            ))
        })?;
        out.push((index, path));
    }
    out.sort();
    Ok(out)
}

/// Read a ground-truth sequence directory.
pub fn read_sequence(dir: &Path) -> CliResult<(Vec<Frame>, SequenceSidecar)> {
    let sidecar: SequenceSidecar = read_json(&dir.join(SIDECAR_NAME))?;
    let files = png_files(dir)?;
    if files.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no numbered PNG frames",
            dir.display()
        )));
    }
    let mut frames = Vec::with_capacity(files.len());
    for (index, path) in files {
        let f = read_png(&path, StreamKind::GroundTruth)?;
        if f.width() != sidecar.width || f.height() != sidecar.height {
            return Err(CliError::Data(format!(
                "{}: {}x{} does not match sidecar {}x{}",
                path.display(),
                f.width(),
                f.height(),
                sidecar.width,
                sidecar.height
            )));
        }
        frames.push(f.with_index(index));
    }
    Ok((frames, sidecar))
}

/// One frame's entry in a stream manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: u32,
    pub timestamp_ms: Option<u32>,
    pub file: String,
    /// Lines that were lost on the wire (already zero-filled or repaired
    /// in the stored image). Absent for clean streams.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossMap>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fully_lost: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamManifest {
    pub config: CaptureConfig,
    pub lr: Vec<FrameRecord>,
    pub keys: Vec<FrameRecord>,
}

/// Loss annotations for a received stream, parallel to the frame lists.
#[derive(Debug, Clone, Default)]
pub struct LossAnnotations {
    pub lr: Vec<(LossMap, bool)>,
    pub keys: Vec<(LossMap, bool)>,
}

/// Write a dual stream as `lr/` and `keys/` frame directories plus
/// `stream.json`. `losses`, when given, must be parallel to the streams.
pub fn write_stream(
    dir: &Path,
    stream: &DualStream,
    losses: Option<&LossAnnotations>,
) -> CliResult<()> {
    if let Some(l) = losses {
        if l.lr.len() != stream.lr.len() || l.keys.len() != stream.keys.len() {
            return Err(CliError::Data(
                "loss annotations do not match stream length".into(),
            ));
        }
    }
    let lr_dir = dir.join("lr");
    let key_dir = dir.join("keys");
    fs::create_dir_all(&lr_dir).map_err(|e| CliError::io(&lr_dir, e))?;
    fs::create_dir_all(&key_dir).map_err(|e| CliError::io(&key_dir, e))?;

    let record = |sub: &str, f: &Frame, loss: Option<&(LossMap, bool)>| FrameRecord {
        index: f.frame_index,
        timestamp_ms: f.timestamp_ms,
        file: format!("{sub}/{}", frame_name(f.frame_index)),
        loss: loss
            .filter(|(map, _)| !map.is_empty())
            .map(|(map, _)| map.clone()),
        fully_lost: loss.map(|&(_, fl)| fl).unwrap_or(false),
    };

    let mut manifest = StreamManifest {
        config: stream.config,
        lr: Vec::with_capacity(stream.lr.len()),
        keys: Vec::with_capacity(stream.keys.len()),
    };
    for (i, f) in stream.lr.iter().enumerate() {
        write_png(&lr_dir.join(frame_name(f.frame_index)), f)?;
        manifest
            .lr
            .push(record("lr", f, losses.map(|l| &l.lr[i])));
    }
    for (i, f) in stream.keys.iter().enumerate() {
        write_png(&key_dir.join(frame_name(f.frame_index)), f)?;
        manifest
            .keys
            .push(record("keys", f, losses.map(|l| &l.keys[i])));
    }
    write_json(&dir.join(STREAM_MANIFEST_NAME), &manifest)
}

/// Read a dual stream directory back. Shapes are validated against the
/// stored config; timestamps and indices come from the manifest.
pub fn read_stream(dir: &Path) -> CliResult<(DualStream, StreamManifest)> {
    let manifest: StreamManifest = read_json(&dir.join(STREAM_MANIFEST_NAME))?;
    manifest
        .config
        .validate()
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let load = |records: &[FrameRecord],
                kind: StreamKind,
                w: usize,
                h: usize|
     -> CliResult<Vec<Frame>> {
        let mut out = Vec::with_capacity(records.len());
        for r in records {
            let path = dir.join(&r.file);
            let mut f = read_png(&path, kind)?.with_index(r.index);
            if let Some(ts) = r.timestamp_ms {
                f = f.with_timestamp(ts);
            }
            if f.width() != w || f.height() != h {
                return Err(CliError::Data(format!(
                    "{}: {}x{} does not match config {w}x{h}",
                    path.display(),
                    f.width(),
                    f.height()
                )));
            }
            out.push(f);
        }
        Ok(out)
    };
    let c = &manifest.config;
    let lr = load(&manifest.lr, StreamKind::LowRes, c.lr_width, c.lr_height)?;
    let keys = load(&manifest.keys, StreamKind::Key, c.hr_width(), c.hr_height())?;
    Ok((
        DualStream {
            config: *c,
            lr,
            keys,
        },
        manifest,
    ))
}
