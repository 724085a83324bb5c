//! Frame file formats: 8-bit PNG, a raw planar dump and a raw tensor dump.
//!
//! PNG is the interchange format (ground truth in, reconstructions out).
//! The raw formats exist for bit-exact golden tests where PNG's interleaving
//! or a decoder's pixel-format coercion would get in the way: a 12-byte
//! little-endian header (width, height, channels as u32) followed by the
//! planar samples, bytes for [`write_raw`] and IEEE f64 for
//! [`write_tensor`].

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use image::{DynamicImage, ImageFormat};
use neuricam_core::frame::{ColorSpace, Frame, StreamKind};
use neuricam_core::nn::FeatureMap;

use crate::error::{CliError, CliResult};

/// Load an 8-bit grayscale or RGB PNG. Anything else (16-bit, alpha,
/// palette expansions the decoder cannot map to those two) is rejected so
/// goldens stay bit-exact.
pub fn read_png(path: &Path, kind: StreamKind) -> CliResult<Frame> {
    let img = image::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let frame = match img {
        DynamicImage::ImageLuma8(g) => Frame::from_interleaved(
            ColorSpace::Gray8,
            kind,
            g.width() as usize,
            g.height() as usize,
            g.as_raw(),
        )?,
        DynamicImage::ImageRgb8(c) => Frame::from_interleaved(
            ColorSpace::Srgb8,
            kind,
            c.width() as usize,
            c.height() as usize,
            c.as_raw(),
        )?,
        other => {
            return Err(CliError::Data(format!(
                "{}: unsupported pixel format {:?} (need 8-bit gray or rgb)",
                path.display(),
                other.color()
            )))
        }
    };
    Ok(frame)
}

/// Write a byte frame as PNG.
pub fn write_png(path: &Path, frame: &Frame) -> CliResult<()> {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let data = frame.to_interleaved();
    let img = match frame.colorspace() {
        ColorSpace::Gray8 => DynamicImage::ImageLuma8(
            image::GrayImage::from_raw(w, h, data).expect("interleaved size matches"),
        ),
        ColorSpace::Srgb8 => DynamicImage::ImageRgb8(
            image::RgbImage::from_raw(w, h, data).expect("interleaved size matches"),
        ),
        other => {
            return Err(CliError::Data(format!(
                "cannot encode {} frames as PNG",
                other.name()
            )))
        }
    };
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn header(w: usize, h: usize, ch: usize) -> [u8; 12] {
    let mut out = [0u8; 12];
    out[0..4].copy_from_slice(&(w as u32).to_le_bytes());
    out[4..8].copy_from_slice(&(h as u32).to_le_bytes());
    out[8..12].copy_from_slice(&(ch as u32).to_le_bytes());
    out
}

fn parse_header(path: &Path, buf: &[u8]) -> CliResult<(usize, usize, usize)> {
    if buf.len() < 12 {
        return Err(CliError::Data(format!(
            "{}: truncated header",
            path.display()
        )));
    }
    let field = |i: usize| u32::from_le_bytes(buf[i..i + 4].try_into().unwrap()) as usize;
    Ok((field(0), field(4), field(8)))
}

/// Raw planar byte dump: header + planes, no encoding in the way.
pub fn write_raw(path: &Path, frame: &Frame) -> CliResult<()> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(&header(frame.width(), frame.height(), frame.channels()))
        .map_err(|e| CliError::io(path, e))?;
    for c in 0..frame.channels() {
        f.write_all(frame.plane_u8(c))
            .map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

/// Read a raw planar byte dump; 1 channel reads as grayscale, 3 as sRGB.
pub fn read_raw(path: &Path, kind: StreamKind) -> CliResult<Frame> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| CliError::io(path, e))?;
    let (w, h, ch) = parse_header(path, &buf)?;
    let colorspace = match ch {
        1 => ColorSpace::Gray8,
        3 => ColorSpace::Srgb8,
        other => {
            return Err(CliError::Data(format!(
                "{}: {other} channels (need 1 or 3)",
                path.display()
            )))
        }
    };
    let body = &buf[12..];
    if body.len() != w * h * ch {
        return Err(CliError::Data(format!(
            "{}: {} sample bytes for {w}x{h}x{ch}",
            path.display(),
            body.len()
        )));
    }
    Ok(Frame::from_bytes(colorspace, kind, w, h, body.to_vec())?)
}

/// Raw tensor dump: header + planar little-endian f64 samples.
pub fn write_tensor(path: &Path, map: &FeatureMap) -> CliResult<()> {
    let (w, h, c) = map.shape();
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(&header(w, h, c))
        .map_err(|e| CliError::io(path, e))?;
    let mut bytes = Vec::with_capacity(map.data().len() * 8);
    for v in map.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    f.write_all(&bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_tensor(path: &Path) -> CliResult<FeatureMap> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| CliError::io(path, e))?;
    let (w, h, c) = parse_header(path, &buf)?;
    let body = &buf[12..];
    if body.len() != w * h * c * 8 {
        return Err(CliError::Data(format!(
            "{}: {} data bytes for {w}x{h}x{c} f64",
            path.display(),
            body.len()
        )));
    }
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(FeatureMap::new(w, h, c, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb_frame() -> Frame {
        let data: Vec<u8> = (0..6 * 4 * 3).map(|i| (i * 37 % 256) as u8).collect();
        Frame::from_bytes(ColorSpace::Srgb8, StreamKind::GroundTruth, 6, 4, data).unwrap()
    }

    #[test]
    fn png_roundtrip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let f = rgb_frame();
        let p = dir.path().join("f.png");
        write_png(&p, &f).unwrap();
        let back = read_png(&p, StreamKind::GroundTruth).unwrap();
        assert!(back.same_samples(&f));

        let g = Frame::from_bytes(
            ColorSpace::Gray8,
            StreamKind::LowRes,
            5,
            3,
            (0u8..15).collect(),
        )
        .unwrap();
        let pg = dir.path().join("g.png");
        write_png(&pg, &g).unwrap();
        assert!(read_png(&pg, StreamKind::LowRes).unwrap().same_samples(&g));
    }

    #[test]
    fn raw_roundtrip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let f = rgb_frame();
        let p = dir.path().join("f.raw");
        write_raw(&p, &f).unwrap();
        assert!(read_raw(&p, StreamKind::GroundTruth)
            .unwrap()
            .same_samples(&f));
    }

    #[test]
    fn tensor_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let data: Vec<f64> = (0..3 * 2 * 4).map(|i| (i as f64).sqrt() - 1.5).collect();
        let m = FeatureMap::new(3, 2, 4, data).unwrap();
        let p = dir.path().join("m.tensor");
        write_tensor(&p, &m).unwrap();
        let back = read_tensor(&p).unwrap();
        assert_eq!(back.shape(), m.shape());
        assert_eq!(back.data(), m.data());
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.raw");
        fs::write(&p, [1, 2, 3]).unwrap();
        assert!(read_raw(&p, StreamKind::LowRes).is_err());
        let t = dir.path().join("bad.tensor");
        fs::write(&t, header(2, 2, 1)).unwrap();
        assert!(read_tensor(&t).is_err());
    }
}
