//! Regenerates the committed test assets under `tests/data/`.
//!
//! Everything is derived from fixed seeds, so rerunning this must be a
//! no-op on a clean checkout:
//!
//!     cargo run -p neuricam --example gen_assets
//!
//! * `natural01..03.png`: synthetic natural images for the repair goldens
//! * `golden.ncs`: a small packet capture pinning the wire format

use std::path::Path;

use neuricam::imageio::write_png;
use neuricam::ncs::write_ncs;
use neuricam::pipeline::stream_packets;
use neuricam::scene::{natural_image, static_scene};
use neuricam_core::capture::{synthesize, CaptureConfig};

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    std::fs::create_dir_all(&data).expect("create tests/data");

    for (i, seed) in [101u64, 202, 303].iter().enumerate() {
        let img = natural_image(320, 240, *seed);
        let path = data.join(format!("natural{:02}.png", i + 1));
        write_png(&path, &img).expect("write natural image");
        println!("wrote {}", path.display());
    }

    let config = CaptureConfig {
        lr_width: 8,
        lr_height: 6,
        scale: 2,
        key_interval: 2,
        ..CaptureConfig::default()
    };
    let gt = static_scene(16, 12, 4, 1);
    let stream = synthesize(&gt, &config).expect("synthesize");
    let packets = stream_packets(&stream).expect("packetize");
    let path = data.join("golden.ncs");
    write_ncs(&path, &packets).expect("write golden capture");
    println!("wrote {} ({} packets)", path.display(), packets.len());
}
