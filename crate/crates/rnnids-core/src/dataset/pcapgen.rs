//! Construction of classic pcap captures, byte-by-byte from the header
//! layouts. Used to build test and demo fixtures; the inverse of
//! [`super::ingest_pcap`] for the packet shapes this crate understands.

use std::net::Ipv4Addr;

/// Fields for a synthetic packet.
pub struct PacketSpec {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub payload: Vec<u8>,
}

/// Ethernet/IPv4/UDP frame bytes for the spec.
pub fn udp_packet(spec: &PacketSpec) -> Vec<u8> {
    let udp_len = 8 + spec.payload.len();
    let mut udp = Vec::with_capacity(udp_len);
    udp.extend_from_slice(&spec.src_port.to_be_bytes());
    udp.extend_from_slice(&spec.dst_port.to_be_bytes());
    udp.extend_from_slice(&(udp_len as u16).to_be_bytes());
    udp.extend_from_slice(&[0, 0]); // checksum unverified by the parser
    udp.extend_from_slice(&spec.payload);
    frame(spec, 17, &udp)
}

/// Ethernet/IPv4/TCP frame bytes for the given packet fields (minimal
/// 20-byte TCP header, flags PSH|ACK).
pub fn tcp_packet(spec: &PacketSpec) -> Vec<u8> {
    let mut tcp = Vec::with_capacity(20 + spec.payload.len());
    tcp.extend_from_slice(&spec.src_port.to_be_bytes());
    tcp.extend_from_slice(&spec.dst_port.to_be_bytes());
    tcp.extend_from_slice(&1u32.to_be_bytes()); // seq
    tcp.extend_from_slice(&0u32.to_be_bytes()); // ack
    tcp.push(5 << 4); // data offset 5 words
    tcp.push(0x18); // PSH|ACK
    tcp.extend_from_slice(&1024u16.to_be_bytes()); // window
    tcp.extend_from_slice(&[0, 0, 0, 0]); // checksum, urgent
    tcp.extend_from_slice(&spec.payload);
    frame(spec, 6, &tcp)
}

fn frame(spec: &PacketSpec, ip_proto: u8, transport: &[u8]) -> Vec<u8> {
    let total_len = 20 + transport.len();
    let mut pkt = Vec::with_capacity(14 + total_len);
    pkt.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x01]); // dst mac
    pkt.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x02]); // src mac
    pkt.extend_from_slice(&[0x08, 0x00]); // IPv4
    pkt.push(0x45); // version 4, IHL 5
    pkt.push(0); // dscp/ecn
    pkt.extend_from_slice(&(total_len as u16).to_be_bytes());
    pkt.extend_from_slice(&[0, 0]); // identification
    pkt.extend_from_slice(&[0x40, 0]); // DF, no fragmentation
    pkt.push(64); // ttl
    pkt.push(ip_proto);
    pkt.extend_from_slice(&[0, 0]); // header checksum unverified
    pkt.extend_from_slice(&spec.src.octets());
    pkt.extend_from_slice(&spec.dst.octets());
    pkt.extend_from_slice(transport);
    pkt
}

/// Little-endian classic capture (magic 0xA1B2C3D4, microsecond
/// timestamps, linktype Ethernet) from `(ts_sec, ts_usec, frame)` entries.
pub fn pcap_bytes(packets: &[(u32, u32, Vec<u8>)]) -> Vec<u8> {
    build(packets, false)
}

/// Byte-swapped twin of [`pcap_bytes`].
pub fn pcap_bytes_be(packets: &[(u32, u32, Vec<u8>)]) -> Vec<u8> {
    build(packets, true)
}

fn build(packets: &[(u32, u32, Vec<u8>)], swapped: bool) -> Vec<u8> {
    let put = |out: &mut Vec<u8>, v: u32| {
        if swapped {
            out.extend_from_slice(&v.to_be_bytes());
        } else {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    let put16 = |out: &mut Vec<u8>, v: u16| {
        if swapped {
            out.extend_from_slice(&v.to_be_bytes());
        } else {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    let mut out = Vec::new();
    put(&mut out, 0xA1B2_C3D4);
    put16(&mut out, 2); // version major
    put16(&mut out, 4); // version minor
    put(&mut out, 0); // thiszone
    put(&mut out, 0); // sigfigs
    put(&mut out, 65535); // snaplen
    put(&mut out, 1); // linktype ethernet
    for (sec, usec, frame) in packets {
        put(&mut out, *sec);
        put(&mut out, *usec);
        put(&mut out, frame.len() as u32);
        put(&mut out, frame.len() as u32);
        out.extend_from_slice(frame);
    }
    out
}
