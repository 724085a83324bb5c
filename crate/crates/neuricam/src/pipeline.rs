//! Subcommand implementations.
//!
//! Each function here is one CLI subcommand with plain typed arguments so
//! the whole pipeline is callable (and testable) without spawning a
//! process. Every run that writes files also writes a manifest; no
//! subcommand mutates its inputs; reruns with the same inputs and seed
//! are byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use neuricam_core::capture::{
    synchronize, synthesize, CaptureConfig, DualStream, NoiseConfig, SYNC_TOLERANCE_MS,
};
use neuricam_core::frame::{ColorSpace, Frame, StreamKind};
use neuricam_core::geometry::Homography;
use neuricam_core::reconstruct::{reconstruct_sequence, BaselineDecoder, IdentityDecoder};
use neuricam_core::repair::{repair, repair_report};
use neuricam_core::wire::{
    group_kind, group_packets, packetize, reassemble, Channel, FrameGeometry, LossMap, Packet,
};

use crate::calib::load_calibration;
use crate::error::{config_err, CliError, CliResult};
use crate::imageio::{read_png, write_png};
use crate::manifest::RunManifest;
use crate::ncs::{read_ncs, recv_udp, send_udp, write_ncs};
use crate::report::{EvaluationReport, PowerReport, RepairSummary};
use crate::streamio::{
    read_json, read_sequence, read_stream, write_json, write_sequence, write_stream,
    LossAnnotations,
};

/// Capture configuration sources, lowest to highest precedence: built-in
/// defaults, a JSON config file, individual flags.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub config_path: Option<PathBuf>,
    pub lr_width: Option<usize>,
    pub lr_height: Option<usize>,
    pub scale: Option<usize>,
    pub fps: Option<f64>,
    pub key_interval: Option<usize>,
    pub timer_offset_ms: Option<u32>,
    pub noise_sigma: Option<f64>,
    pub seed: Option<u64>,
}

impl ConfigOverrides {
    /// Resolve to a full capture config. Noise is a stochastic stage, so
    /// turning it on without a seed is a config error.
    pub fn resolve(&self) -> CliResult<CaptureConfig> {
        let mut config = match &self.config_path {
            Some(path) => read_json::<CaptureConfig>(path)
                .map_err(|e| CliError::Config(e.to_string()))?,
            None => CaptureConfig::default(),
        };
        if let Some(v) = self.lr_width {
            config.lr_width = v;
        }
        if let Some(v) = self.lr_height {
            config.lr_height = v;
        }
        if let Some(v) = self.scale {
            config.scale = v;
        }
        if let Some(v) = self.fps {
            config.lr_fps = v;
        }
        if let Some(v) = self.key_interval {
            config.key_interval = v;
        }
        if let Some(v) = self.timer_offset_ms {
            config.timer_offset_ms = v;
        }
        if let Some(sigma) = self.noise_sigma {
            config.noise = NoiseConfig {
                enabled: sigma > 0.0,
                read_noise_sigma: sigma,
                seed: 0,
            };
        }
        if config.noise.enabled && config.noise.read_noise_sigma > 0.0 {
            match self.seed {
                Some(seed) => config.noise.seed = seed,
                None if self.noise_sigma.is_none() => {
                    // Seed came from the config file; keep it.
                }
                None => {
                    return config_err("sensor noise needs --seed (stochastic stage)");
                }
            }
        }
        config
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(config)
    }
}

/// `simulate`: ground-truth directory in, dual stream directory out.
///
/// The low-resolution geometry is derived from the ground-truth frames
/// and the scale factor unless set explicitly; the frame rate comes from
/// the sequence sidecar unless overridden.
pub fn simulate(gt_dir: &Path, out_dir: &Path, overrides: &ConfigOverrides) -> CliResult<()> {
    let (gt, sidecar) = read_sequence(gt_dir)?;
    let mut overrides = overrides.clone();
    if overrides.fps.is_none() {
        overrides.fps = Some(sidecar.fps);
    }
    let mut config = overrides.resolve()?;
    if overrides.lr_width.is_none() && overrides.lr_height.is_none() {
        let s = config.scale;
        if sidecar.width % s != 0 || sidecar.height % s != 0 {
            return config_err(format!(
                "ground truth {}x{} is not divisible by scale {s}",
                sidecar.width, sidecar.height
            ));
        }
        config.lr_width = sidecar.width / s;
        config.lr_height = sidecar.height / s;
    }
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let stream = synthesize(&gt, &config)?;
    log::info!(
        "simulate: {} ground-truth frames -> {} low-res + {} key frames",
        gt.len(),
        stream.lr.len(),
        stream.keys.len()
    );
    write_stream(out_dir, &stream, None)?;
    RunManifest::new("simulate", &config, config.noise.enabled.then_some(config.noise.seed))?
        .input("gt", gt_dir)
        .write_for_tree(out_dir)
}

/// Transmit order: for each ground-truth index, the low-resolution
/// frame's packets, then (at key indices) the key frame's packets.
pub fn stream_packets(stream: &DualStream) -> CliResult<Vec<Packet>> {
    let keys: BTreeMap<u32, &Frame> = stream.keys.iter().map(|f| (f.frame_index, f)).collect();
    let mut packets = Vec::new();
    for lr in &stream.lr {
        packets.extend(packetize(lr)?);
        if let Some(key) = keys.get(&lr.frame_index) {
            packets.extend(packetize(key)?);
        }
    }
    Ok(packets)
}

/// `transmit`: stream directory -> packet capture file or UDP.
///
/// `out` is a `.ncs` path or a `udp://host:port` address. A nonzero
/// packet error rate makes the run stochastic and requires a seed.
pub fn transmit(stream_dir: &Path, out: &str, per: f64, seed: Option<u64>) -> CliResult<()> {
    let (stream, _) = read_stream(stream_dir)?;
    let mut packets = stream_packets(&stream)?;
    let sent = packets.len();
    if per > 0.0 {
        let seed = seed
            .ok_or_else(|| CliError::Config("packet loss needs --seed (stochastic stage)".into()))?;
        let mut channel = Channel::new(per, seed)?;
        packets = channel.transmit(packets);
    }
    log::info!(
        "transmit: {sent} packets, {} survived the channel (per {per})",
        packets.len()
    );
    if let Some(addr) = out.strip_prefix("udp://") {
        send_udp(addr, &packets)
    } else {
        let path = Path::new(out);
        write_ncs(path, &packets)?;
        let config = serde_json::json!({ "per": per, "capture": stream.config });
        RunManifest::new("transmit", &config, seed)?
            .input("stream", stream_dir)
            .write_for_file(path)
    }
}

fn geometry_for(kind: StreamKind, config: &CaptureConfig) -> FrameGeometry {
    match kind {
        StreamKind::LowRes => FrameGeometry {
            width: config.lr_width,
            height: config.lr_height,
            colorspace: ColorSpace::Gray8,
        },
        _ => FrameGeometry {
            width: config.hr_width(),
            height: config.hr_height(),
            colorspace: ColorSpace::Srgb8,
        },
    }
}

struct ReceivedFrame {
    frame: Frame,
    loss: LossMap,
    fully_lost: bool,
}

/// Group, reassemble and (optionally) repair a received packet sequence.
/// A frame whose packets were all lost never reaches the receiver; such
/// gaps in the low-resolution sequence and at expected key indices come
/// back zero filled and flagged fully lost, without a timestamp.
fn rebuild_streams(
    packets: Vec<Packet>,
    config: &CaptureConfig,
    do_repair: bool,
) -> CliResult<(DualStream, LossAnnotations)> {
    let groups = group_packets(packets)?;
    let mut lr: BTreeMap<u32, ReceivedFrame> = BTreeMap::new();
    let mut keys: BTreeMap<u32, ReceivedFrame> = BTreeMap::new();
    for ((class, seq), group) in groups {
        let kind = group_kind(class);
        let geom = geometry_for(kind, config);
        let got = reassemble(&group, &geom, kind)?;
        let (mut frame, loss, fully_lost) = (got.frame, got.loss, got.fully_lost);
        if do_repair && !loss.is_empty() && !fully_lost {
            frame = repair(&frame, &loss)?.frame;
        }
        let slot = ReceivedFrame {
            frame,
            loss,
            fully_lost,
        };
        match kind {
            StreamKind::LowRes => lr.insert(seq, slot),
            _ => keys.insert(seq, slot),
        };
    }
    if lr.is_empty() {
        return Err(CliError::Data("no low-resolution packets received".into()));
    }

    let max_seq = *lr.keys().next_back().expect("nonempty");
    let blank = |kind: StreamKind, seq: u32| {
        let geom = geometry_for(kind, config);
        let n = geom.width * geom.height * geom.colorspace.channels();
        ReceivedFrame {
            frame: Frame::from_bytes(geom.colorspace, kind, geom.width, geom.height, vec![0; n])
                .expect("blank frame shape")
                .with_index(seq),
            loss: LossMap::from_lines(0..geom.height as u16),
            fully_lost: true,
        }
    };
    for seq in 0..=max_seq {
        lr.entry(seq).or_insert_with(|| {
            log::warn!("low-res frame {seq} lost entirely");
            blank(StreamKind::LowRes, seq)
        });
        if seq % config.key_interval as u32 == 0 {
            keys.entry(seq).or_insert_with(|| {
                log::warn!("key frame {seq} lost entirely");
                blank(StreamKind::Key, seq)
            });
        }
    }
    let unpack = |map: BTreeMap<u32, ReceivedFrame>| {
        let mut frames = Vec::with_capacity(map.len());
        let mut losses = Vec::with_capacity(map.len());
        for (_, r) in map {
            frames.push(r.frame);
            losses.push((r.loss, r.fully_lost));
        }
        (frames, losses)
    };
    let (lr_frames, lr_losses) = unpack(lr);
    let (key_frames, key_losses) = unpack(keys);
    Ok((
        DualStream {
            config: *config,
            lr: lr_frames,
            keys: key_frames,
        },
        LossAnnotations {
            lr: lr_losses,
            keys: key_losses,
        },
    ))
}

/// `receive`: packet capture file or UDP socket -> stream directory.
///
/// The wire format carries no geometry, so the capture config must be
/// supplied (file or flags). Lost lines are concealed unless `repair` is
/// false; loss maps are recorded in the stream manifest either way.
pub fn receive(
    input: &str,
    out_dir: &Path,
    overrides: &ConfigOverrides,
    do_repair: bool,
    udp_timeout: Duration,
) -> CliResult<()> {
    let config = overrides.resolve()?;
    let packets = if let Some(addr) = input.strip_prefix("udp://") {
        recv_udp(addr, udp_timeout)?
    } else {
        read_ncs(Path::new(input))?
    };
    log::info!("receive: {} packets", packets.len());
    let (stream, losses) = rebuild_streams(packets, &config, do_repair)?;
    write_stream(out_dir, &stream, Some(&losses))?;
    let config_json = serde_json::json!({ "capture": config, "repair": do_repair });
    RunManifest::new("receive", &config_json, None)?
        .input("packets", Path::new(input))
        .write_for_tree(out_dir)
}

/// `repair`: one damaged frame plus its loss map -> repaired frame and a
/// stats sidecar. With a clean reference the sidecar carries before and
/// after PSNR.
pub fn repair_frame(
    damaged_path: &Path,
    loss_path: &Path,
    out_path: &Path,
    reference_path: Option<&Path>,
) -> CliResult<()> {
    let damaged = read_png(damaged_path, StreamKind::LowRes)?;
    let loss: LossMap = read_json(loss_path)?;
    let outcome = repair(&damaged, &loss)?;
    write_png(out_path, &outcome.frame)?;

    let stats = match reference_path {
        Some(path) => {
            let reference = read_png(path, StreamKind::GroundTruth)?;
            Some(repair_report(&damaged, &outcome.frame, &reference, &loss)?)
        }
        None => None,
    };
    let summary = RepairSummary {
        lost_lines: loss.total_lines(),
        fully_lost: outcome.fully_lost,
        stats,
    };
    let stats_path = out_path.with_extension("stats.json");
    write_json(&stats_path, &summary)?;

    let mut manifest_path = out_path.as_os_str().to_owned();
    manifest_path.push(".manifest.json");
    let mut m = RunManifest::new("repair", &serde_json::json!({}), None)?
        .input("damaged", damaged_path)
        .input("loss", loss_path);
    if let Some(p) = reference_path {
        m = m.input("reference", p);
    }
    m.write_for_files(&[out_path, &stats_path], Path::new(&manifest_path))
}

/// Which reconstruction decoder to run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecoderChoice {
    Baseline,
    Identity,
    /// Import frames some external decoder already produced.
    External(PathBuf),
}

impl FromStr for DecoderChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "baseline" => Ok(DecoderChoice::Baseline),
            "identity" => Ok(DecoderChoice::Identity),
            _ => match s.strip_prefix("external:") {
                Some(dir) if !dir.is_empty() => Ok(DecoderChoice::External(PathBuf::from(dir))),
                _ => Err(format!(
                    "unknown decoder {s:?} (want baseline, identity or external:<dir>)"
                )),
            },
        }
    }
}

impl DecoderChoice {
    pub fn name(&self) -> String {
        match self {
            DecoderChoice::Baseline => "baseline".into(),
            DecoderChoice::Identity => "identity".into(),
            DecoderChoice::External(dir) => format!("external:{}", dir.display()),
        }
    }
}

/// Load an externally produced reconstruction: numbered PNGs that must
/// match the expected frame count and high resolution.
pub fn import_external_reconstruction(
    dir: &Path,
    expected_frames: usize,
    hr_width: usize,
    hr_height: usize,
) -> CliResult<Vec<Frame>> {
    let (frames, sidecar) = read_sequence(dir)?;
    if frames.len() != expected_frames {
        return Err(CliError::Data(format!(
            "{}: {} frames, stream has {expected_frames}",
            dir.display(),
            frames.len()
        )));
    }
    if sidecar.width != hr_width || sidecar.height != hr_height {
        return Err(CliError::Data(format!(
            "{}: {}x{} frames, stream expects {hr_width}x{hr_height}",
            dir.display(),
            sidecar.width,
            sidecar.height
        )));
    }
    Ok(frames
        .into_iter()
        .map(|f| {
            let index = f.frame_index;
            f.with_kind(StreamKind::Output).with_index(index)
        })
        .collect())
}

/// Run the timestamp alignment check when the stream carries full timing.
/// Received streams can lose timestamps with the terminal packets; the
/// check is skipped (with a log note) rather than failed in that case.
fn sync_check(stream: &DualStream) -> CliResult<()> {
    let timed = |f: &Frame| f.timestamp_ms.is_some();
    if stream.lr.iter().all(timed) && stream.keys.iter().all(timed) {
        let report = synchronize(&stream.lr, &stream.keys, SYNC_TOLERANCE_MS)?;
        log::info!(
            "sync: {} key frames paired, worst offset {} ms",
            report.pairs.len(),
            report.pairs.iter().map(|p| p.delta_ms).max().unwrap_or(0)
        );
    } else {
        log::warn!("sync check skipped: stream has frames without timestamps");
    }
    Ok(())
}

/// `reconstruct`: stream directory -> full-rate color frame directory.
pub fn reconstruct(
    stream_dir: &Path,
    out_dir: &Path,
    decoder: &DecoderChoice,
    calib_path: Option<&Path>,
) -> CliResult<()> {
    let (stream, _) = read_stream(stream_dir)?;
    sync_check(&stream)?;
    let calib = match calib_path {
        Some(path) => {
            let h = load_calibration(path)?;
            // Full precision: Debug prints the shortest exact representation.
            println!("calibration matrix: {:?}", h.m);
            h
        }
        None => Homography::identity(),
    };

    let outputs = match decoder {
        DecoderChoice::Baseline => reconstruct_sequence(&stream, &BaselineDecoder, &calib)?,
        DecoderChoice::Identity => reconstruct_sequence(&stream, &IdentityDecoder, &calib)?,
        DecoderChoice::External(dir) => import_external_reconstruction(
            dir,
            stream.lr.len(),
            stream.config.hr_width(),
            stream.config.hr_height(),
        )?,
    };
    write_sequence(out_dir, &outputs, stream.config.lr_fps)?;
    let config = serde_json::json!({
        "decoder": decoder.name(),
        "capture": stream.config,
        "calibration": calib.m,
    });
    RunManifest::new("reconstruct", &config, None)?
        .input("stream", stream_dir)
        .write_for_tree(out_dir)
}

/// `evaluate`: score a reconstruction against ground truth; write the
/// report JSON and, optionally, a per-frame CSV.
pub fn evaluate(
    pred_dir: &Path,
    gt_dir: &Path,
    key_interval: usize,
    report_path: &Path,
    csv_path: Option<&Path>,
) -> CliResult<EvaluationReport> {
    let (pred, _) = read_sequence(pred_dir)?;
    let (gt, _) = read_sequence(gt_dir)?;
    let report = EvaluationReport::compute(&pred, &gt, key_interval)?;
    write_json(report_path, &report)?;
    let mut outputs: Vec<&Path> = vec![report_path];
    if let Some(csv) = csv_path {
        fs::write(csv, report.to_csv()).map_err(|e| CliError::io(csv, e))?;
        outputs.push(csv);
    }
    let mut manifest_path = report_path.as_os_str().to_owned();
    manifest_path.push(".manifest.json");
    RunManifest::new(
        "evaluate",
        &serde_json::json!({ "key_interval": key_interval }),
        None,
    )?
    .input("pred", pred_dir)
    .input("gt", gt_dir)
    .write_for_files(&outputs, Path::new(&manifest_path))?;
    Ok(report)
}

/// Output format for the power report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format {other:?} (want markdown or json)")),
        }
    }
}

/// `power-report`: render the component table and derived quantities.
/// Returns the rendered text; writes it to `out` when given.
pub fn power_report(
    profile_path: Option<&Path>,
    format: ReportFormat,
    out: Option<&Path>,
) -> CliResult<String> {
    let profile = match profile_path {
        Some(path) => read_json(path).map_err(|e| CliError::Config(e.to_string()))?,
        None => neuricam_core::power::SystemProfile::reference(),
    };
    let report = PowerReport::compute(&profile)?;
    let text = match format {
        ReportFormat::Markdown => report.to_markdown(),
        ReportFormat::Json => {
            let mut t = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Data(e.to_string()))?;
            t.push('\n');
            t
        }
    };
    if let Some(path) = out {
        fs::write(path, &text).map_err(|e| CliError::io(path, e))?;
        let config = serde_json::json!({
            "profile": profile,
            "format": match format {
                ReportFormat::Markdown => "markdown",
                ReportFormat::Json => "json",
            },
        });
        RunManifest::new("power-report", &config, None)?.write_for_file(path)?;
    }
    Ok(text)
}

/// `end-to-end`: simulate, transmit, receive, reconstruct and evaluate
/// with one seed, leaving every intermediate artifact under `out_dir`.
#[allow(clippy::too_many_arguments)]
pub fn end_to_end(
    gt_dir: &Path,
    out_dir: &Path,
    overrides: &ConfigOverrides,
    per: f64,
    seed: u64,
    decoder: &DecoderChoice,
    calib_path: Option<&Path>,
) -> CliResult<EvaluationReport> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let stream_dir = out_dir.join("stream");
    let wire_path = out_dir.join("wire.ncs");
    let received_dir = out_dir.join("received");
    let recon_dir = out_dir.join("reconstruction");
    let report_path = out_dir.join("report.json");

    simulate(gt_dir, &stream_dir, overrides)?;
    transmit(
        &stream_dir,
        wire_path.to_str().expect("utf-8 path"),
        per,
        Some(seed),
    )?;
    // The receiver gets the exact capture geometry the simulator used;
    // on a real deployment this is shared configuration.
    let sim_config: crate::streamio::StreamManifest =
        read_json(&stream_dir.join(crate::streamio::STREAM_MANIFEST_NAME))?;
    let recv_overrides = ConfigOverrides {
        config_path: None,
        lr_width: Some(sim_config.config.lr_width),
        lr_height: Some(sim_config.config.lr_height),
        scale: Some(sim_config.config.scale),
        fps: Some(sim_config.config.lr_fps),
        key_interval: Some(sim_config.config.key_interval),
        timer_offset_ms: Some(sim_config.config.timer_offset_ms),
        noise_sigma: None,
        seed: None,
    };
    receive(
        wire_path.to_str().expect("utf-8 path"),
        &received_dir,
        &recv_overrides,
        true,
        Duration::from_secs(1),
    )?;
    reconstruct(&received_dir, &recon_dir, decoder, calib_path)?;
    let report = evaluate(
        &recon_dir,
        gt_dir,
        sim_config.config.key_interval,
        &report_path,
        None,
    )?;

    let config = serde_json::json!({
        "per": per,
        "decoder": decoder.name(),
        "capture": sim_config.config,
    });
    RunManifest::new("end-to-end", &config, Some(seed))?
        .input("gt", gt_dir)
        .write_for_tree(out_dir)?;
    Ok(report)
}
