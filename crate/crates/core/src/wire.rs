//! Bit-exact wire protocol for the two camera streams.
//!
//! Each frame is shipped line by line. A line becomes one or more packets
//! (payload capped at [`MAX_PAYLOAD`] bytes), each protected by
//! CRC-16/CCITT-FALSE. After the last line a terminal packet carries the
//! capture timestamp followed by the 3-byte end-of-frame footer. Key frames
//! alternate between two radio streams by line parity so the two halves can
//! ride separate links.
//!
//! All multi-byte header fields are little endian. Packet layout:
//!
//! ```text
//! offset 0  stream_id      u8   (0 = low-res, 1 = key even lines, 2 = key odd lines)
//! offset 1  frame_seq      u32
//! offset 5  line_index     u16  (== frame height for the terminal packet)
//! offset 7  segment_index  u8
//! offset 8  payload_len    u16
//! offset 10 payload        [payload_len]
//! then      crc            u16  over header + payload
//! ```

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::{ColorSpace, Frame, StreamKind};
use crate::rng::SeededRng;

/// Largest payload a single packet may carry.
pub const MAX_PAYLOAD: usize = 1024;
/// Packet header length in bytes.
pub const HEADER_LEN: usize = 10;
/// CRC trailer length in bytes.
pub const CRC_LEN: usize = 2;
/// End-of-frame footer: carriage return, NUL, line feed.
pub const FOOTER: [u8; 3] = [13, 0, 10];

/// Stream identifiers on the wire.
pub const STREAM_LOW_RES: u8 = 0;
pub const STREAM_KEY_EVEN: u8 = 1;
pub const STREAM_KEY_ODD: u8 = 2;

/// CRC-16/CCITT-FALSE: polynomial 0x1021, initial value 0xFFFF, no
/// reflection, no final xor. The check value over b"123456789" is 0x29B1.
pub fn crc16(data: &[u8]) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for &byte in data {
        crc ^= (byte as u16) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ 0x1021
            } else {
                crc << 1
            };
        }
    }
    crc
}

/// One wire packet (validated on decode).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub stream_id: u8,
    pub frame_seq: u32,
    pub line_index: u16,
    pub segment_index: u8,
    pub payload: Vec<u8>,
}

impl Packet {
    /// Serialize to header + payload + CRC.
    pub fn encode(&self) -> Vec<u8> {
        debug_assert!(self.payload.len() <= MAX_PAYLOAD);
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len() + CRC_LEN);
        out.push(self.stream_id);
        out.extend_from_slice(&self.frame_seq.to_le_bytes());
        out.extend_from_slice(&self.line_index.to_le_bytes());
        out.push(self.segment_index);
        out.extend_from_slice(&(self.payload.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.payload);
        let crc = crc16(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    /// Parse and validate one packet buffer. Rejects short buffers, length
    /// mismatches, oversized payloads and CRC failures.
    pub fn decode(bytes: &[u8]) -> Result<Packet> {
        if bytes.len() < HEADER_LEN + CRC_LEN {
            return Err(Error::Packet {
                detail: format!("buffer too short: {} bytes", bytes.len()),
            });
        }
        let payload_len =
            u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        if payload_len > MAX_PAYLOAD {
            return Err(Error::Packet {
                detail: format!("payload_len {payload_len} exceeds {MAX_PAYLOAD}"),
            });
        }
        let total = HEADER_LEN + payload_len + CRC_LEN;
        if bytes.len() != total {
            return Err(Error::Packet {
                detail: format!("length mismatch: buffer {} vs declared {}", bytes.len(), total),
            });
        }
        let body = &bytes[..HEADER_LEN + payload_len];
        let stored = u16::from_le_bytes([bytes[total - 2], bytes[total - 1]]);
        let computed = crc16(body);
        if stored != computed {
            return Err(Error::Packet {
                detail: format!("crc mismatch: stored {stored:#06x}, computed {computed:#06x}"),
            });
        }
        Ok(Packet {
            stream_id: bytes[0],
            frame_seq: u32::from_le_bytes([bytes[1], bytes[2], bytes[3], bytes[4]]),
            line_index: u16::from_le_bytes([bytes[5], bytes[6]]),
            segment_index: bytes[7],
            payload: bytes[HEADER_LEN..HEADER_LEN + payload_len].to_vec(),
        })
    }

    /// Whether this is the terminal packet of a frame of the given height.
    pub fn is_terminal(&self, height: usize) -> bool {
        self.line_index as usize == height
    }
}

fn stream_id_for(kind: StreamKind, line_index: u16) -> Result<u8> {
    match kind {
        StreamKind::LowRes => Ok(STREAM_LOW_RES),
        StreamKind::Key => Ok(if line_index.is_multiple_of(2) {
            STREAM_KEY_EVEN
        } else {
            STREAM_KEY_ODD
        }),
        other => Err(Error::InvalidParameter {
            what: "packetize stream kind",
            detail: format!("{other:?} frames are never transmitted"),
        }),
    }
}

/// Split a frame into wire packets: every line in row order, segmented at
/// [`MAX_PAYLOAD`], then the terminal packet (timestamp + footer).
pub fn packetize(frame: &Frame) -> Result<Vec<Packet>> {
    if frame.colorspace().is_real() {
        return Err(Error::ColorSpace {
            what: "packetize",
            expected: "a byte colorspace",
            got: frame.colorspace().name(),
        });
    }
    if frame.height() > u16::MAX as usize - 1 {
        return Err(Error::InvalidParameter {
            what: "packetize height",
            detail: format!("{} does not fit the line index field", frame.height()),
        });
    }
    let timestamp = frame.timestamp_ms.ok_or_else(|| Error::InvalidParameter {
        what: "packetize timestamp",
        detail: "frame has no capture timestamp".into(),
    })?;

    let mut packets = Vec::with_capacity(frame.height() + 1);
    for y in 0..frame.height() {
        let line_index = y as u16;
        let stream_id = stream_id_for(frame.kind(), line_index)?;
        let row = frame.interleaved_row(y);
        for (segment_index, chunk) in row.chunks(MAX_PAYLOAD).enumerate() {
            packets.push(Packet {
                stream_id,
                frame_seq: frame.frame_index,
                line_index,
                segment_index: segment_index as u8,
                payload: chunk.to_vec(),
            });
        }
    }
    let terminal_line = frame.height() as u16;
    let mut payload = Vec::with_capacity(7);
    payload.extend_from_slice(&timestamp.to_le_bytes());
    payload.extend_from_slice(&FOOTER);
    packets.push(Packet {
        stream_id: stream_id_for(frame.kind(), terminal_line)?,
        frame_seq: frame.frame_index,
        line_index: terminal_line,
        segment_index: 0,
        payload,
    });
    Ok(packets)
}

/// Lossy link: drops each packet independently with fixed probability.
#[derive(Debug, Clone)]
pub struct Channel {
    drop_probability: f64,
    rng: SeededRng,
}

impl Channel {
    pub fn new(drop_probability: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&drop_probability) {
            return Err(Error::InvalidParameter {
                what: "drop_probability",
                detail: format!("{drop_probability} outside [0, 1]"),
            });
        }
        Ok(Self {
            drop_probability,
            rng: SeededRng::new(seed),
        })
    }

    /// One Bernoulli trial per packet, in order. Survivors keep their order.
    pub fn transmit(&mut self, packets: Vec<Packet>) -> Vec<Packet> {
        packets
            .into_iter()
            .filter(|_| !self.rng.bernoulli(self.drop_probability))
            .collect()
    }
}

/// Sorted, merged runs of lost line indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossMap {
    runs: Vec<LossRun>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossRun {
    pub start: u16,
    pub count: u16,
}

impl LossMap {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Build from an iterator of lost line indices (any order, duplicates
    /// tolerated). Adjacent lines merge into one run.
    pub fn from_lines<I: IntoIterator<Item = u16>>(lines: I) -> Self {
        let mut sorted: Vec<u16> = lines.into_iter().collect();
        sorted.sort_unstable();
        sorted.dedup();
        let mut runs: Vec<LossRun> = Vec::new();
        for line in sorted {
            match runs.last_mut() {
                Some(run) if run.start as u32 + run.count as u32 == line as u32 => run.count += 1,
                _ => runs.push(LossRun {
                    start: line,
                    count: 1,
                }),
            }
        }
        Self { runs }
    }

    pub fn runs(&self) -> &[LossRun] {
        &self.runs
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn total_lines(&self) -> usize {
        self.runs.iter().map(|r| r.count as usize).sum()
    }

    pub fn contains(&self, line: u16) -> bool {
        self.runs
            .iter()
            .any(|r| line >= r.start && (line - r.start) < r.count)
    }

    pub fn iter_lines(&self) -> impl Iterator<Item = u16> + '_ {
        self.runs
            .iter()
            .flat_map(|r| (0..r.count).map(move |k| r.start + k))
    }
}

/// Shape of the frame a set of packets is reassembled into.
#[derive(Debug, Clone, Copy)]
pub struct FrameGeometry {
    pub width: usize,
    pub height: usize,
    pub colorspace: ColorSpace,
}

impl FrameGeometry {
    pub fn row_bytes(&self) -> usize {
        self.width * self.colorspace.channels()
    }

    fn segments_per_line(&self) -> usize {
        self.row_bytes().div_ceil(MAX_PAYLOAD)
    }
}

/// Result of reassembling one frame from surviving packets.
#[derive(Debug, Clone)]
pub struct Reassembled {
    pub frame: Frame,
    pub loss: LossMap,
    /// Timestamp from the terminal packet, if it survived.
    pub timestamp_ms: Option<u32>,
    /// Whether every data line was lost.
    pub fully_lost: bool,
}

/// Rebuild one frame from its surviving packets. Lines with any missing
/// segment come back zero filled and are recorded in the loss map. Packets
/// must all share one frame_seq and belong to one stream class; structural
/// violations (bad line index, bad footer, inconsistent sequence numbers)
/// are hard errors.
pub fn reassemble(packets: &[Packet], geom: &FrameGeometry, kind: StreamKind) -> Result<Reassembled> {
    let height = geom.height;
    let row_bytes = geom.row_bytes();
    let nseg = geom.segments_per_line();
    let mut frame_seq: Option<u32> = None;
    let mut timestamp: Option<u32> = None;
    let mut lines: Vec<Vec<Option<&[u8]>>> = vec![vec![None; nseg]; height];

    for p in packets {
        match frame_seq {
            None => frame_seq = Some(p.frame_seq),
            Some(seq) if seq != p.frame_seq => {
                return Err(Error::Packet {
                    detail: format!(
                        "mixed frame sequences in reassembly: {seq} and {}",
                        p.frame_seq
                    ),
                })
            }
            _ => {}
        }
        let expect_id = stream_id_for(kind, p.line_index)?;
        if p.stream_id != expect_id {
            return Err(Error::Packet {
                detail: format!(
                    "stream id {} on line {} (expected {expect_id})",
                    p.stream_id, p.line_index
                ),
            });
        }
        let li = p.line_index as usize;
        if li == height {
            // Terminal packet: u32 timestamp then the footer.
            if p.payload.len() != 4 + FOOTER.len() || p.payload[4..] != FOOTER {
                return Err(Error::Packet {
                    detail: format!("malformed terminal packet payload {:?}", p.payload),
                });
            }
            timestamp = Some(u32::from_le_bytes([
                p.payload[0], p.payload[1], p.payload[2], p.payload[3],
            ]));
            continue;
        }
        if li > height {
            return Err(Error::Packet {
                detail: format!("line index {li} beyond frame height {height}"),
            });
        }
        let seg = p.segment_index as usize;
        if seg >= nseg {
            return Err(Error::Packet {
                detail: format!("segment {seg} beyond {nseg} segments per line"),
            });
        }
        let expected_len = if seg + 1 == nseg {
            row_bytes - (nseg - 1) * MAX_PAYLOAD
        } else {
            MAX_PAYLOAD
        };
        if p.payload.len() != expected_len {
            return Err(Error::Packet {
                detail: format!(
                    "segment {seg} of line {li} has {} bytes, expected {expected_len}",
                    p.payload.len()
                ),
            });
        }
        lines[li][seg] = Some(&p.payload);
    }

    let mut lost = Vec::new();
    let mut rows: Vec<Vec<u8>> = Vec::with_capacity(height);
    for (li, segs) in lines.iter().enumerate() {
        if segs.iter().all(|s| s.is_some()) {
            let mut row = Vec::with_capacity(row_bytes);
            for s in segs {
                row.extend_from_slice(s.unwrap());
            }
            rows.push(row);
        } else {
            lost.push(li as u16);
            rows.push(vec![0u8; row_bytes]);
        }
    }
    let fully_lost = lost.len() == height;
    let loss = LossMap::from_lines(lost);

    let mut frame = Frame::from_interleaved_rows(geom.colorspace, kind, geom.width, &rows)?
        .with_index(frame_seq.unwrap_or(0));
    if let Some(ts) = timestamp {
        frame = frame.with_timestamp(ts);
    }
    Ok(Reassembled {
        frame,
        loss,
        timestamp_ms: timestamp,
        fully_lost,
    })
}

/// Stream class on the receive side: key packets from both parity streams
/// belong to one logical frame.
fn stream_class(stream_id: u8) -> Result<StreamKind> {
    match stream_id {
        STREAM_LOW_RES => Ok(StreamKind::LowRes),
        STREAM_KEY_EVEN | STREAM_KEY_ODD => Ok(StreamKind::Key),
        other => Err(Error::Packet {
            detail: format!("unknown stream id {other}"),
        }),
    }
}

/// Group a mixed packet sequence by (stream class, frame_seq), preserving
/// arrival order inside each group. Unknown stream ids are a hard error.
pub type PacketGroups = BTreeMap<(u8, u32), Vec<Packet>>;

pub fn group_packets(packets: Vec<Packet>) -> Result<PacketGroups> {
    let mut groups: PacketGroups = BTreeMap::new();
    for p in packets {
        let class = match stream_class(p.stream_id)? {
            StreamKind::LowRes => 0u8,
            StreamKind::Key => 1u8,
            _ => unreachable!(),
        };
        groups.entry((class, p.frame_seq)).or_default().push(p);
    }
    Ok(groups)
}

/// Stream kind for a group key produced by [`group_packets`].
pub fn group_kind(class: u8) -> StreamKind {
    if class == 0 {
        StreamKind::LowRes
    } else {
        StreamKind::Key
    }
}

/// Throughput of one low-power radio link in bits per second.
pub const RADIO_BPS: f64 = 2_500_000.0;

/// Raw (uncompressed, unpacketized) bandwidth demands of the two streams.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateReport {
    /// Continuous gray stream, bits per second.
    pub lr_bits_per_sec: f64,
    /// One color key frame at 16 bits per pixel, bits.
    pub key_frame_bits: f64,
    /// Key frames per second.
    pub key_fps: f64,
    /// Key stream average, bits per second.
    pub key_bits_per_sec: f64,
    /// Radios required to carry each stream at [`RADIO_BPS`].
    pub lr_radios: u32,
    pub key_radios: u32,
}

impl RateReport {
    pub fn lr_fits_single_radio(&self) -> bool {
        self.lr_radios <= 1
    }
}

/// Compute the raw rate budget for a capture configuration. The gray
/// stream carries 8 bits per pixel; key frames are counted at 16 bits per
/// pixel as the sensor emits them.
pub fn rate_report(config: &crate::capture::CaptureConfig) -> RateReport {
    let lr_bits_per_sec =
        (config.lr_width * config.lr_height * 8) as f64 * config.lr_fps;
    let key_frame_bits = (config.hr_width() * config.hr_height() * 16) as f64;
    let key_fps = config.lr_fps / config.key_interval as f64;
    let key_bits_per_sec = key_frame_bits * key_fps;
    let radios = |bps: f64| libm::ceil(bps / RADIO_BPS) as u32;
    RateReport {
        lr_bits_per_sec,
        key_frame_bits,
        key_fps,
        key_bits_per_sec,
        lr_radios: radios(lr_bits_per_sec),
        key_radios: radios(key_bits_per_sec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{ColorSpace, StreamKind};
    use proptest::prelude::*;

    fn lr_frame(w: usize, h: usize, seq: u32) -> Frame {
        let data: Vec<u8> = (0..w * h).map(|i| (i * 7 % 251) as u8).collect();
        Frame::from_bytes(ColorSpace::Gray8, StreamKind::LowRes, w, h, data)
            .unwrap()
            .with_index(seq)
            .with_timestamp(123_456)
    }

    fn key_frame(w: usize, h: usize, seq: u32) -> Frame {
        let data: Vec<u8> = (0..w * h * 3).map(|i| (i * 13 % 255) as u8).collect();
        Frame::from_bytes(ColorSpace::Srgb8, StreamKind::Key, w, h, data)
            .unwrap()
            .with_index(seq)
            .with_timestamp(7_890)
    }

    #[test]
    fn crc_check_value() {
        assert_eq!(crc16(b"123456789"), 0x29B1);
        assert_eq!(crc16(b""), 0xFFFF);
    }

    #[test]
    fn packet_layout_is_little_endian() {
        let p = Packet {
            stream_id: 2,
            frame_seq: 0x0403_0201,
            line_index: 0x0605,
            segment_index: 7,
            payload: vec![0xAA, 0xBB],
        };
        let enc = p.encode();
        assert_eq!(&enc[..10], &[2, 1, 2, 3, 4, 5, 6, 7, 2, 0]);
        assert_eq!(&enc[10..12], &[0xAA, 0xBB]);
        let crc = crc16(&enc[..12]);
        assert_eq!(enc[12], (crc & 0xFF) as u8);
        assert_eq!(enc[13], (crc >> 8) as u8);
    }

    #[test]
    fn decode_roundtrip() {
        let p = Packet {
            stream_id: 0,
            frame_seq: 42,
            line_index: 3,
            segment_index: 0,
            payload: (0..160).collect(),
        };
        assert_eq!(Packet::decode(&p.encode()).unwrap(), p);
    }

    #[test]
    fn any_bit_flip_fails_crc() {
        let p = Packet {
            stream_id: 1,
            frame_seq: 9,
            line_index: 1,
            segment_index: 0,
            payload: vec![1, 2, 3, 4, 5],
        };
        let enc = p.encode();
        for byte in 0..enc.len() {
            for bit in 0..8 {
                let mut bad = enc.clone();
                bad[byte] ^= 1 << bit;
                assert!(Packet::decode(&bad).is_err(), "byte {byte} bit {bit}");
            }
        }
    }

    #[test]
    fn truncated_and_padded_buffers_fail() {
        let enc = Packet {
            stream_id: 0,
            frame_seq: 1,
            line_index: 0,
            segment_index: 0,
            payload: vec![7; 16],
        }
        .encode();
        assert!(Packet::decode(&enc[..enc.len() - 1]).is_err());
        let mut padded = enc.clone();
        padded.push(0);
        assert!(Packet::decode(&padded).is_err());
        assert!(Packet::decode(&[]).is_err());
    }

    #[test]
    fn lr_packet_count_and_ids() {
        let f = lr_frame(160, 120, 5);
        let packets = packetize(&f).unwrap();
        // 160-byte rows fit one segment; 120 lines + 1 terminal.
        assert_eq!(packets.len(), 121);
        assert!(packets.iter().all(|p| p.stream_id == STREAM_LOW_RES));
        assert!(packets.iter().all(|p| p.frame_seq == 5));
        assert_eq!(packets[120].line_index, 120);
        assert_eq!(packets[120].payload[4..], FOOTER);
        assert_eq!(&packets[120].payload[..4], &123_456u32.to_le_bytes());
    }

    #[test]
    fn key_lines_split_segments_and_alternate_streams() {
        let f = key_frame(640, 4, 2);
        let packets = packetize(&f).unwrap();
        // 1920-byte rows split 1024 + 896; 4 lines * 2 + terminal.
        assert_eq!(packets.len(), 9);
        assert_eq!(packets[0].payload.len(), 1024);
        assert_eq!(packets[1].payload.len(), 896);
        assert_eq!(packets[0].stream_id, STREAM_KEY_EVEN);
        assert_eq!(packets[2].stream_id, STREAM_KEY_ODD);
        assert_eq!(packets[4].stream_id, STREAM_KEY_EVEN);
        // Terminal line index 4 is even.
        assert_eq!(packets[8].stream_id, STREAM_KEY_EVEN);
    }

    #[test]
    fn missing_timestamp_is_rejected() {
        let f = Frame::from_bytes(
            ColorSpace::Gray8,
            StreamKind::LowRes,
            4,
            4,
            vec![0u8; 16],
        )
        .unwrap();
        assert!(packetize(&f).is_err());
    }

    #[test]
    fn lossless_roundtrip_is_bit_identical() {
        for f in [lr_frame(160, 120, 1), key_frame(64, 48, 3)] {
            let geom = FrameGeometry {
                width: f.width(),
                height: f.height(),
                colorspace: f.colorspace(),
            };
            let packets = packetize(&f).unwrap();
            let out = reassemble(&packets, &geom, f.kind()).unwrap();
            assert!(out.frame.same_samples(&f));
            assert!(out.loss.is_empty());
            assert_eq!(out.timestamp_ms, f.timestamp_ms);
            assert!(!out.fully_lost);
        }
    }

    #[test]
    fn dropped_lines_become_zero_runs() {
        let f = key_frame(640, 8, 1);
        let geom = FrameGeometry {
            width: 640,
            height: 8,
            colorspace: ColorSpace::Srgb8,
        };
        let packets: Vec<Packet> = packetize(&f)
            .unwrap()
            .into_iter()
            // Drop one segment of line 2 and both of line 3.
            .filter(|p| !(p.line_index == 2 && p.segment_index == 1) && p.line_index != 3)
            .collect();
        let out = reassemble(&packets, &geom, StreamKind::Key).unwrap();
        assert_eq!(
            out.loss.runs(),
            &[LossRun { start: 2, count: 2 }]
        );
        for x in 0..640 {
            for c in 0..3 {
                assert_eq!(out.frame.get_u8(c, 2, x), 0);
                assert_eq!(out.frame.get_u8(c, 3, x), 0);
            }
        }
        // Untouched lines keep their bytes.
        assert_eq!(out.frame.interleaved_row(1), f.interleaved_row(1));
    }

    #[test]
    fn lost_terminal_packet_leaves_timestamp_unknown() {
        let f = lr_frame(16, 8, 0);
        let geom = FrameGeometry {
            width: 16,
            height: 8,
            colorspace: ColorSpace::Gray8,
        };
        let packets: Vec<Packet> = packetize(&f)
            .unwrap()
            .into_iter()
            .filter(|p| p.line_index != 8)
            .collect();
        let out = reassemble(&packets, &geom, StreamKind::LowRes).unwrap();
        assert_eq!(out.timestamp_ms, None);
        assert!(out.loss.is_empty());
    }

    #[test]
    fn fully_lost_frame_is_flagged() {
        let f = lr_frame(16, 8, 0);
        let geom = FrameGeometry {
            width: 16,
            height: 8,
            colorspace: ColorSpace::Gray8,
        };
        let packets: Vec<Packet> = packetize(&f)
            .unwrap()
            .into_iter()
            .filter(|p| p.line_index == 8)
            .collect();
        let out = reassemble(&packets, &geom, StreamKind::LowRes).unwrap();
        assert!(out.fully_lost);
        assert_eq!(out.loss.total_lines(), 8);
    }

    #[test]
    fn mixed_sequences_are_rejected() {
        let a = packetize(&lr_frame(16, 4, 1)).unwrap();
        let b = packetize(&lr_frame(16, 4, 2)).unwrap();
        let mut mixed = a;
        mixed.extend(b);
        let geom = FrameGeometry {
            width: 16,
            height: 4,
            colorspace: ColorSpace::Gray8,
        };
        assert!(reassemble(&mixed, &geom, StreamKind::LowRes).is_err());
    }

    #[test]
    fn loss_map_merges_adjacent_lines() {
        let m = LossMap::from_lines([5u16, 3, 4, 9, 10, 3]);
        assert_eq!(
            m.runs(),
            &[
                LossRun { start: 3, count: 3 },
                LossRun { start: 9, count: 2 }
            ]
        );
        assert_eq!(m.total_lines(), 5);
        assert!(m.contains(4));
        assert!(!m.contains(6));
        let lines: Vec<u16> = m.iter_lines().collect();
        assert_eq!(lines, vec![3, 4, 5, 9, 10]);
    }

    #[test]
    fn channel_is_deterministic_and_order_preserving() {
        let f = lr_frame(160, 120, 0);
        let packets = packetize(&f).unwrap();
        let mut c1 = Channel::new(0.3, 99).unwrap();
        let mut c2 = Channel::new(0.3, 99).unwrap();
        let s1 = c1.transmit(packets.clone());
        let s2 = c2.transmit(packets.clone());
        assert_eq!(s1, s2);
        assert!(s1.len() < packets.len());
        // Order preserved: line indices non-decreasing.
        for pair in s1.windows(2) {
            assert!(pair[0].line_index <= pair[1].line_index);
        }
        let mut c3 = Channel::new(0.3, 100).unwrap();
        assert_ne!(c3.transmit(packets.clone()), s1);
    }

    #[test]
    fn zero_and_one_drop_probability() {
        let packets = packetize(&lr_frame(16, 8, 0)).unwrap();
        let mut keep_all = Channel::new(0.0, 1).unwrap();
        assert_eq!(keep_all.transmit(packets.clone()).len(), packets.len());
        let mut drop_all = Channel::new(1.0, 1).unwrap();
        assert!(drop_all.transmit(packets.clone()).is_empty());
        assert!(Channel::new(1.5, 0).is_err());
        assert!(Channel::new(-0.1, 0).is_err());
    }

    #[test]
    fn grouping_splits_streams_and_frames() {
        let mut all = Vec::new();
        all.extend(packetize(&lr_frame(16, 4, 0)).unwrap());
        all.extend(packetize(&key_frame(16, 4, 0)).unwrap());
        all.extend(packetize(&lr_frame(16, 4, 1)).unwrap());
        let groups = group_packets(all).unwrap();
        assert_eq!(groups.len(), 3);
        assert!(groups.contains_key(&(0, 0)));
        assert!(groups.contains_key(&(0, 1)));
        assert!(groups.contains_key(&(1, 0)));
        assert_eq!(group_kind(0), StreamKind::LowRes);
        assert_eq!(group_kind(1), StreamKind::Key);
    }

    #[test]
    fn rate_report_for_reference_config() {
        let cfg = crate::capture::CaptureConfig::default();
        let r = rate_report(&cfg);
        // 160 * 120 * 8 * 15
        assert_eq!(r.lr_bits_per_sec, 2_304_000.0);
        assert!(r.lr_fits_single_radio());
        assert_eq!(r.lr_radios, 1);
        // 640 * 480 * 16
        assert_eq!(r.key_frame_bits, 4_915_200.0);
        assert_eq!(r.key_fps, 1.0);
        // Just under 5 Mbit per key frame once a second: two radios.
        assert_eq!(r.key_radios, 2);
    }

    proptest! {
        #[test]
        fn prop_roundtrip_random_frames(
            w in 1usize..40,
            h in 1usize..20,
            color in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let cs = if color { ColorSpace::Srgb8 } else { ColorSpace::Gray8 };
            let kind = if color { StreamKind::Key } else { StreamKind::LowRes };
            let mut rng = crate::rng::SeededRng::new(seed);
            let data: Vec<u8> = (0..w * h * cs.channels())
                .map(|_| (rng.next_u32() & 0xFF) as u8)
                .collect();
            let f = Frame::from_bytes(cs, kind, w, h, data)
                .unwrap()
                .with_index(seed as u32)
                .with_timestamp(seed as u32 ^ 0xDEAD);
            let geom = FrameGeometry { width: w, height: h, colorspace: cs };
            let packets = packetize(&f).unwrap();
            // Encode and decode every packet to cover the byte layer too.
            let decoded: Vec<Packet> = packets
                .iter()
                .map(|p| Packet::decode(&p.encode()).unwrap())
                .collect();
            let out = reassemble(&decoded, &geom, kind).unwrap();
            prop_assert!(out.frame.same_samples(&f));
            prop_assert!(out.loss.is_empty());
            prop_assert_eq!(out.timestamp_ms, f.timestamp_ms);
        }
    }
}
