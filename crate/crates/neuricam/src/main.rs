use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use neuricam::error::{CliError, CliResult};
use neuricam::kernelcheck;
use neuricam::pipeline::{self, ConfigOverrides, DecoderChoice, ReportFormat};

/// Dual-mode camera pipeline: simulate capture, push it through the lossy
/// wire protocol, repair, reconstruct color video and score the result.
///
/// Set NEURICAM_LOG=info (or debug) for progress output. Exit codes:
/// 0 ok, 2 config error, 3 data error, 4 desync, 5 decoder failure.
#[derive(Parser)]
#[command(name = "neuricam", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Capture geometry flags, shared by the subcommands that need to know
/// the stream shape. Precedence: defaults < --config file < flags.
#[derive(Args, Clone, Default)]
struct ConfigFlags {
    /// JSON capture config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Low-resolution sensor width in pixels.
    #[arg(long)]
    lr_width: Option<usize>,
    /// Low-resolution sensor height in pixels.
    #[arg(long)]
    lr_height: Option<usize>,
    /// Spatial scale between the sensors (high = low x scale).
    #[arg(long)]
    scale: Option<usize>,
    /// Low-resolution frame rate.
    #[arg(long)]
    fps: Option<f64>,
    /// Ground-truth frames between key frames.
    #[arg(long)]
    key_interval: Option<usize>,
    /// Start value of the wrapping millisecond timer.
    #[arg(long)]
    timer_offset_ms: Option<u32>,
}

impl ConfigFlags {
    fn overrides(&self, noise_sigma: Option<f64>, seed: Option<u64>) -> ConfigOverrides {
        ConfigOverrides {
            config_path: self.config.clone(),
            lr_width: self.lr_width,
            lr_height: self.lr_height,
            scale: self.scale,
            fps: self.fps,
            key_interval: self.key_interval,
            timer_offset_ms: self.timer_offset_ms,
            noise_sigma,
            seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the dual sensor streams from a ground-truth directory.
    Simulate {
        /// Ground-truth directory: numbered PNGs plus sequence.json.
        #[arg(long)]
        gt: PathBuf,
        /// Output stream directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
        /// Sensor read-noise sigma in gray levels (0 disables noise).
        #[arg(long)]
        noise_sigma: Option<f64>,
        /// Seed for the noise generator (required when noise is on).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Packetize a stream directory and send it through the lossy channel.
    Transmit {
        /// Input stream directory.
        #[arg(long)]
        stream: PathBuf,
        /// Output: a .ncs capture file path or udp://host:port.
        #[arg(long)]
        out: String,
        /// Packet error rate in [0, 1).
        #[arg(long, default_value_t = 0.0)]
        per: f64,
        /// Channel seed (required when --per > 0).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rebuild a stream directory from received packets.
    Receive {
        /// Input: a .ncs capture file path or udp://host:port to bind.
        #[arg(long)]
        input: String,
        /// Output stream directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
        /// Keep lost lines zero-filled instead of concealing them.
        #[arg(long)]
        no_repair: bool,
        /// UDP receive timeout in milliseconds.
        #[arg(long, default_value_t = 5000)]
        udp_timeout_ms: u64,
    },
    /// Conceal lost lines in one damaged frame.
    Repair {
        /// Damaged frame PNG.
        #[arg(long)]
        frame: PathBuf,
        /// Loss map JSON ({"runs": [{"start": .., "count": ..}]}).
        #[arg(long)]
        loss: PathBuf,
        /// Repaired frame PNG; stats land next to it as .stats.json.
        #[arg(long)]
        out: PathBuf,
        /// Clean reference PNG for before/after PSNR.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Reconstruct full-rate color video from a stream directory.
    Reconstruct {
        /// Input stream directory.
        #[arg(long)]
        stream: PathBuf,
        /// Output frame directory.
        #[arg(long)]
        out: PathBuf,
        /// baseline | identity | external:<dir>
        #[arg(long, default_value = "baseline")]
        decoder: String,
        /// Calibration JSON (3x3 matrix or 4 point pairs).
        #[arg(long)]
        calib: Option<PathBuf>,
    },
    /// Score a reconstruction against ground truth.
    Evaluate {
        /// Reconstructed frame directory.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth frame directory.
        #[arg(long)]
        gt: PathBuf,
        /// Key-frame interval used for exclusion.
        #[arg(long, default_value_t = 15)]
        key_interval: usize,
        /// Report JSON output path.
        #[arg(long)]
        out: PathBuf,
        /// Optional per-frame CSV output path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Reproduce the power and bandwidth arithmetic.
    PowerReport {
        /// JSON system profile overriding the built-in component table.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// markdown | json
        #[arg(long, default_value = "markdown")]
        format: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the reference-kernel invariant suite.
    KernelCheck,
    /// Chain simulate, transmit, receive, reconstruct and evaluate.
    EndToEnd {
        /// Ground-truth directory.
        #[arg(long)]
        gt: PathBuf,
        /// Output directory for all pipeline artifacts.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
        /// Packet error rate in [0, 1).
        #[arg(long, default_value_t = 0.0)]
        per: f64,
        /// Seed for every stochastic stage.
        #[arg(long)]
        seed: u64,
        /// baseline | identity | external:<dir>
        #[arg(long, default_value = "baseline")]
        decoder: String,
        /// Calibration JSON (3x3 matrix or 4 point pairs).
        #[arg(long)]
        calib: Option<PathBuf>,
        /// Sensor read-noise sigma in gray levels.
        #[arg(long)]
        noise_sigma: Option<f64>,
    },
}

fn parse_decoder(s: &str) -> CliResult<DecoderChoice> {
    s.parse().map_err(CliError::Config)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            gt,
            out,
            config,
            noise_sigma,
            seed,
        } => pipeline::simulate(&gt, &out, &config.overrides(noise_sigma, seed)),
        Command::Transmit {
            stream,
            out,
            per,
            seed,
        } => pipeline::transmit(&stream, &out, per, seed),
        Command::Receive {
            input,
            out,
            config,
            no_repair,
            udp_timeout_ms,
        } => pipeline::receive(
            &input,
            &out,
            &config.overrides(None, None),
            !no_repair,
            Duration::from_millis(udp_timeout_ms),
        ),
        Command::Repair {
            frame,
            loss,
            out,
            reference,
        } => pipeline::repair_frame(&frame, &loss, &out, reference.as_deref()),
        Command::Reconstruct {
            stream,
            out,
            decoder,
            calib,
        } => pipeline::reconstruct(&stream, &out, &parse_decoder(&decoder)?, calib.as_deref()),
        Command::Evaluate {
            pred,
            gt,
            key_interval,
            out,
            csv,
        } => {
            let report = pipeline::evaluate(&pred, &gt, key_interval, &out, csv.as_deref())?;
            for ch in &report.channels {
                println!(
                    "{}: mean psnr {:.4} dB, mean ssim {:.6} ({} frames, {} exact)",
                    ch.channel.name(),
                    ch.mean_psnr_db,
                    ch.mean_ssim,
                    ch.frames.len(),
                    ch.infinite_psnr_frames
                );
            }
            Ok(())
        }
        Command::PowerReport {
            profile,
            format,
            out,
        } => {
            let format: ReportFormat = format.parse().map_err(CliError::Config)?;
            let text = pipeline::power_report(profile.as_deref(), format, out.as_deref())?;
            if out.is_none() {
                print!("{text}");
            }
            Ok(())
        }
        Command::KernelCheck => {
            let (results, ok) = kernelcheck::run_all();
            for r in &results {
                match &r.detail {
                    Ok(()) => println!("ok   {}", r.name),
                    Err(e) => println!("FAIL {}: {e}", r.name),
                }
            }
            if ok {
                Ok(())
            } else {
                Err(CliError::Data("kernel check failed".into()))
            }
        }
        Command::EndToEnd {
            gt,
            out,
            config,
            per,
            seed,
            decoder,
            calib,
            noise_sigma,
        } => {
            let report = pipeline::end_to_end(
                &gt,
                &out,
                &config.overrides(noise_sigma, Some(seed)),
                per,
                seed,
                &parse_decoder(&decoder)?,
                calib.as_deref(),
            )?;
            for ch in &report.channels {
                println!(
                    "{}: mean psnr {:.4} dB, mean ssim {:.6}",
                    ch.channel.name(),
                    ch.mean_psnr_db,
                    ch.mean_ssim
                );
            }
            Ok(())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("NEURICAM_LOG")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
