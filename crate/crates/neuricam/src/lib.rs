//! Host-side toolkit for the dual-mode camera simulator.
//!
//! The `neuricam-core` crate holds the arithmetic: capture synthesis, the
//! wire protocol, repair, reconstruction and the reference kernels. This
//! crate adds everything that needs an operating system: PNG and raw
//! image IO, stream directories, packet capture files, UDP transport,
//! calibration files, run manifests, reports and the `neuricam` CLI.

pub mod calib;
pub mod error;
pub mod imageio;
pub mod kernelcheck;
pub mod manifest;
pub mod ncs;
pub mod pipeline;
pub mod report;
pub mod scene;
pub mod streamio;

pub use error::{CliError, CliResult};
