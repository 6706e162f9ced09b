//! Classic libpcap capture ingestion: Ethernet → IPv4 → TCP/UDP, one flow
//! record per packet. Both byte orders of the microsecond magic are
//! accepted; nanosecond captures are rejected. Packets that are not plain
//! IPv4 TCP/UDP are counted and skipped, never fatal; a truncated record
//! stops the parse with a partial result and a warning count.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use super::{DatasetError, FlowRecord, Label, Proto};

const MAGIC_USEC: u32 = 0xA1B2_C3D4;
const MAGIC_USEC_SWAPPED: u32 = 0xD4C3_B2A1;
const MAGIC_NSEC: u32 = 0xA1B2_3C4D;
const MAGIC_NSEC_SWAPPED: u32 = 0x4D3C_B2A1;
const LINKTYPE_ETHERNET: u32 = 1;

/// Ingestion outcome: parsed flows plus skip/warning accounting.
#[derive(Debug)]
pub struct IngestReport {
    pub flows: Vec<FlowRecord>,
    /// Per-reason counts of packets skipped (non-IPv4, fragments, ...).
    pub skipped: BTreeMap<String, usize>,
    /// Truncation warnings (parse stopped early).
    pub warnings: usize,
}

impl IngestReport {
    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }
}

/// Parses a classic pcap capture into benign-labeled flow records.
pub fn ingest_pcap(bytes: &[u8]) -> Result<IngestReport, DatasetError> {
    if bytes.len() < 24 {
        return Err(DatasetError::PcapFormat(
            "truncated global header".to_string(),
        ));
    }
    let magic = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let swapped = match magic {
        MAGIC_USEC => false,
        MAGIC_USEC_SWAPPED => true,
        MAGIC_NSEC | MAGIC_NSEC_SWAPPED => {
            return Err(DatasetError::PcapFormat(
                "nanosecond-resolution pcap is not supported".to_string(),
            ))
        }
        other => {
            return Err(DatasetError::PcapFormat(format!("bad magic 0x{other:08X}")));
        }
    };
    let read_u32 = |b: &[u8]| -> u32 {
        let v = u32::from_le_bytes(b.try_into().unwrap());
        if swapped {
            v.swap_bytes()
        } else {
            v
        }
    };

    let network = read_u32(&bytes[20..24]);
    if network != LINKTYPE_ETHERNET {
        return Err(DatasetError::PcapFormat(format!(
            "unsupported linktype {network}"
        )));
    }

    let mut flows = Vec::new();
    let mut skipped: BTreeMap<String, usize> = BTreeMap::new();
    let mut warnings = 0usize;
    let skip = |skipped: &mut BTreeMap<String, usize>, reason: &str| {
        *skipped.entry(reason.to_string()).or_insert(0) += 1;
    };

    let mut off = 24usize;
    while off < bytes.len() {
        if off + 16 > bytes.len() {
            warnings += 1;
            break;
        }
        let ts_sec = read_u32(&bytes[off..off + 4]) as u64;
        let ts_usec = read_u32(&bytes[off + 4..off + 8]) as u64;
        let incl_len = read_u32(&bytes[off + 8..off + 12]) as usize;
        off += 16;
        if off + incl_len > bytes.len() {
            warnings += 1;
            break;
        }
        let data = &bytes[off..off + incl_len];
        off += incl_len;

        match parse_packet(data) {
            Ok(Some((src_host, dst_host, src_port, dst_port, proto, payload))) => {
                flows.push(FlowRecord {
                    src_host,
                    dst_host,
                    src_port,
                    dst_port,
                    proto,
                    payload,
                    timestamp_micros: ts_sec * 1_000_000 + ts_usec,
                    label: Label::Benign,
                    origin: "benign".to_string(),
                });
            }
            Ok(None) => skip(&mut skipped, "non-ipv4"),
            Err(reason) => skip(&mut skipped, reason),
        }
    }

    Ok(IngestReport {
        flows,
        skipped,
        warnings,
    })
}

type Parsed = (Ipv4Addr, Ipv4Addr, u16, u16, Proto, Vec<u8>);

/// `Ok(None)` for non-IPv4 ethertypes; `Err(reason)` for packets skipped
/// for any other reason.
fn parse_packet(data: &[u8]) -> Result<Option<Parsed>, &'static str> {
    if data.len() < 14 {
        return Err("short-ethernet");
    }
    let ethertype = u16::from_be_bytes([data[12], data[13]]);
    if ethertype != 0x0800 {
        return Ok(None);
    }
    let ip = &data[14..];
    if ip.len() < 20 {
        return Err("short-ipv4");
    }
    if ip[0] >> 4 != 4 {
        return Err("non-ipv4-version");
    }
    let ihl = ((ip[0] & 0x0F) as usize) * 4;
    if ihl < 20 || ip.len() < ihl {
        return Err("bad-ihl");
    }
    let total_len = u16::from_be_bytes([ip[2], ip[3]]) as usize;
    if total_len < ihl || total_len > ip.len() {
        return Err("bad-total-length");
    }
    let flags_frag = u16::from_be_bytes([ip[6], ip[7]]);
    if flags_frag & 0x2000 != 0 || flags_frag & 0x1FFF != 0 {
        return Err("fragmented");
    }
    let src_host = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst_host = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
    let transport = &ip[ihl..total_len];

    match ip[9] {
        6 => {
            if transport.len() < 20 {
                return Err("short-tcp");
            }
            let src_port = u16::from_be_bytes([transport[0], transport[1]]);
            let dst_port = u16::from_be_bytes([transport[2], transport[3]]);
            let data_off = ((transport[12] >> 4) as usize) * 4;
            if data_off < 20 || transport.len() < data_off {
                return Err("bad-tcp-offset");
            }
            Ok(Some((
                src_host,
                dst_host,
                src_port,
                dst_port,
                Proto::Tcp,
                transport[data_off..].to_vec(),
            )))
        }
        17 => {
            if transport.len() < 8 {
                return Err("short-udp");
            }
            let src_port = u16::from_be_bytes([transport[0], transport[1]]);
            let dst_port = u16::from_be_bytes([transport[2], transport[3]]);
            Ok(Some((
                src_host,
                dst_host,
                src_port,
                dst_port,
                Proto::Udp,
                transport[8..].to_vec(),
            )))
        }
        _ => Err("unsupported-ip-proto"),
    }
}
