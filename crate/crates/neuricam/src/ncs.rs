//! Stream capture files and the live datagram pipe.
//!
//! A `.ncs` file is the byte-exact record of what crossed the wire: an
//! 8-byte magic followed by length-prefixed packets in transmit order.
//! Committed golden files pin the format. For live demos the same packets
//! travel as individual datagrams on localhost; an empty datagram marks
//! end of stream.

use std::fs;
use std::io::{Read, Write};
use std::net::UdpSocket;
use std::path::Path;
use std::time::Duration;

use neuricam_core::wire::Packet;

use crate::error::{CliError, CliResult};

pub const NCS_MAGIC: &[u8; 8] = b"NCSTRM01";

/// Write packets in transmit order.
pub fn write_ncs(path: &Path, packets: &[Packet]) -> CliResult<()> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(NCS_MAGIC).map_err(|e| CliError::io(path, e))?;
    for p in packets {
        let bytes = p.encode();
        f.write_all(&(bytes.len() as u32).to_le_bytes())
            .map_err(|e| CliError::io(path, e))?;
        f.write_all(&bytes).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

/// Read a capture back; every packet is CRC-checked on the way in.
pub fn read_ncs(path: &Path) -> CliResult<Vec<Packet>> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| CliError::io(path, e))?;
    if buf.len() < NCS_MAGIC.len() || &buf[..NCS_MAGIC.len()] != NCS_MAGIC {
        return Err(CliError::Data(format!(
            "{}: not a stream capture (bad magic)",
            path.display()
        )));
    }
    let mut packets = Vec::new();
    let mut pos = NCS_MAGIC.len();
    while pos < buf.len() {
        if pos + 4 > buf.len() {
            return Err(CliError::Data(format!(
                "{}: truncated length prefix at packet {}",
                path.display(),
                packets.len()
            )));
        }
        let len = u32::from_le_bytes(buf[pos..pos + 4].try_into().unwrap()) as usize;
        pos += 4;
        if pos + len > buf.len() {
            return Err(CliError::Data(format!(
                "{}: truncated packet {} ({} of {len} bytes)",
                path.display(),
                packets.len(),
                buf.len() - pos
            )));
        }
        let packet = Packet::decode(&buf[pos..pos + len]).map_err(|e| {
            CliError::Data(format!("{}: packet {}: {e}", path.display(), packets.len()))
        })?;
        packets.push(packet);
        pos += len;
    }
    Ok(packets)
}

/// Send packets as datagrams to `addr`, then an empty end-of-stream
/// datagram.
pub fn send_udp(addr: &str, packets: &[Packet]) -> CliResult<()> {
    let sock = UdpSocket::bind("127.0.0.1:0")
        .map_err(|e| CliError::Data(format!("udp bind: {e}")))?;
    for p in packets {
        sock.send_to(&p.encode(), addr)
            .map_err(|e| CliError::Data(format!("udp send to {addr}: {e}")))?;
    }
    sock.send_to(&[], addr)
        .map_err(|e| CliError::Data(format!("udp send to {addr}: {e}")))?;
    Ok(())
}

/// Receive datagrams on `bind_addr` until the empty end-of-stream marker
/// or `timeout` of silence. Undecodable datagrams count as channel losses
/// and are skipped.
pub fn recv_udp(bind_addr: &str, timeout: Duration) -> CliResult<Vec<Packet>> {
    let sock = UdpSocket::bind(bind_addr)
        .map_err(|e| CliError::Data(format!("udp bind {bind_addr}: {e}")))?;
    sock.set_read_timeout(Some(timeout))
        .map_err(|e| CliError::Data(format!("udp timeout: {e}")))?;
    let mut packets = Vec::new();
    let mut buf = [0u8; 2048];
    loop {
        match sock.recv_from(&mut buf) {
            Ok((0, _)) => break,
            Ok((n, _)) => {
                if let Ok(p) = Packet::decode(&buf[..n]) {
                    packets.push(p);
                } else {
                    log::warn!("dropping undecodable datagram of {n} bytes");
                }
            }
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                break
            }
            Err(e) => return Err(CliError::Data(format!("udp recv: {e}"))),
        }
    }
    Ok(packets)
}
