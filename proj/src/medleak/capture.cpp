#include "medleak/capture.hpp"

#include "medleak/bytes.hpp"
#include "medleak/error.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace medleak {

namespace {

constexpr std::uint32_t magic_usec = 0xa1b2c3d4;
constexpr std::uint32_t magic_nsec = 0xa1b23c4d;
constexpr std::uint32_t magic_usec_swapped = 0xd4c3b2a1;
constexpr std::uint32_t magic_nsec_swapped = 0x4d3cb2a1;
constexpr std::uint32_t magic_pcapng = 0x0a0d0d0a;
constexpr std::uint32_t link_type_ethernet = 1;
constexpr std::size_t global_header_size = 24;
constexpr std::size_t record_header_size = 16;

constexpr std::uint8_t proto_tcp = 6;
constexpr std::uint8_t proto_udp = 17;

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
}

// Returns an error message when the frame cannot be decoded.
std::optional<std::string> decode_frame(std::span<const std::uint8_t> frame, RawPacket& pkt) {
    using bytes::be16;

    if (frame.size() < 14) return "truncated Ethernet header";
    std::copy_n(frame.begin(), 6, pkt.dst_mac.octets.begin());
    std::copy_n(frame.begin() + 6, 6, pkt.src_mac.octets.begin());
    std::uint16_t type = be16(frame, 12);
    std::size_t off = 14;
    if (type == ethertype_vlan) {
        if (frame.size() < 18) return "truncated VLAN tag";
        type = be16(frame, 16);
        off = 18;
    }
    pkt.ethertype = type;

    std::size_t end = frame.size();
    std::optional<std::uint8_t> l4_protocol;

    if (type == ethertype_ipv4) {
        if (frame.size() < off + 20) return "truncated IPv4 header";
        if ((frame[off] >> 4) != 4) return "bad IPv4 version";
        const std::size_t ihl = std::size_t{frame[off] & 0x0fu} * 4;
        if (ihl < 20 || frame.size() < off + ihl) return "truncated IPv4 header";
        const std::size_t total = be16(frame, off + 2);
        if (total < ihl) return "IPv4 total length below header length";
        end = std::min(frame.size(), off + total);

        IpHeader ip;
        ip.protocol = frame[off + 9];
        std::copy_n(frame.begin() + off + 12, 4, ip.src.bytes.begin());
        std::copy_n(frame.begin() + off + 16, 4, ip.dst.bytes.begin());
        pkt.ip = ip;
        const bool later_fragment = (be16(frame, off + 6) & 0x1fff) != 0;
        if (!later_fragment) l4_protocol = ip.protocol;
        off += ihl;
    } else if (type == ethertype_ipv6) {
        if (frame.size() < off + 40) return "truncated IPv6 header";
        if ((frame[off] >> 4) != 6) return "bad IPv6 version";
        const std::size_t payload_len = be16(frame, off + 4);
        end = std::min(frame.size(), off + 40 + payload_len);

        IpHeader ip;
        ip.src.family = IpAddress::Family::V6;
        ip.dst.family = IpAddress::Family::V6;
        std::copy_n(frame.begin() + off + 8, 16, ip.src.bytes.begin());
        std::copy_n(frame.begin() + off + 24, 16, ip.dst.bytes.begin());
        std::uint8_t next = frame[off + 6];
        off += 40;

        bool later_fragment = false;
        // hop-by-hop, routing, destination options, fragment
        while (next == 0 || next == 43 || next == 60 || next == 44) {
            if (end < off + 8) return "truncated IPv6 extension header";
            const std::uint8_t following = frame[off];
            if (next == 44) {
                later_fragment = (be16(frame, off + 2) & 0xfff8) != 0;
                off += 8;
            } else {
                const std::size_t len = (std::size_t{frame[off + 1]} + 1) * 8;
                if (end < off + len) return "truncated IPv6 extension header";
                off += len;
            }
            next = following;
        }
        ip.protocol = next;
        pkt.ip = ip;
        if (!later_fragment) l4_protocol = next;
    }

    if (l4_protocol == proto_tcp) {
        if (end < off + 20) return "truncated TCP header";
        const std::size_t data_offset = static_cast<std::size_t>(frame[off + 12] >> 4) * 4;
        if (data_offset < 20 || end < off + data_offset) return "truncated TCP header";
        TransportHeader t;
        t.kind = TransportKind::Tcp;
        t.src_port = be16(frame, off);
        t.dst_port = be16(frame, off + 2);
        t.tcp_flags = frame[off + 13];
        pkt.transport = t;
        off += data_offset;
    } else if (l4_protocol == proto_udp) {
        if (end < off + 8) return "truncated UDP header";
        TransportHeader t;
        t.kind = TransportKind::Udp;
        t.src_port = be16(frame, off);
        t.dst_port = be16(frame, off + 2);
        pkt.transport = t;
        off += 8;
    }

    pkt.header_length = static_cast<std::uint32_t>(off);
    pkt.trailer_length = static_cast<std::uint32_t>(frame.size() - end);
    pkt.payload.assign(frame.begin() + off, frame.begin() + end);
    return std::nullopt;
}

std::uint16_t internet_checksum(std::span<const std::uint8_t> data, std::uint32_t sum = 0) {
    for (std::size_t i = 0; i + 1 < data.size(); i += 2) sum += bytes::be16(data, i);
    if (data.size() % 2) sum += std::uint32_t{data.back()} << 8;
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

std::uint32_t pseudo_header_sum(const IpHeader& ip, std::uint8_t protocol, std::size_t length) {
    std::uint32_t sum = 0;
    const std::size_t n = ip.src.family == IpAddress::Family::V4 ? 4 : 16;
    for (std::size_t i = 0; i < n; i += 2) {
        sum += (std::uint32_t{ip.src.bytes[i]} << 8) | ip.src.bytes[i + 1];
        sum += (std::uint32_t{ip.dst.bytes[i]} << 8) | ip.dst.bytes[i + 1];
    }
    sum += protocol;
    sum += static_cast<std::uint32_t>(length & 0xffff);
    sum += static_cast<std::uint32_t>(length >> 16);
    return sum;
}

std::vector<std::uint8_t> build_transport(const RawPacket& pkt) {
    std::vector<std::uint8_t> seg;
    const auto& t = *pkt.transport;
    bytes::put_be16(seg, t.src_port);
    bytes::put_be16(seg, t.dst_port);
    std::uint8_t protocol = 0;
    if (t.kind == TransportKind::Tcp) {
        protocol = proto_tcp;
        bytes::put_be32(seg, 0);          // seq
        bytes::put_be32(seg, 0);          // ack
        seg.push_back(5 << 4);            // data offset
        seg.push_back(t.tcp_flags);
        bytes::put_be16(seg, 65535);      // window
        bytes::put_be16(seg, 0);          // checksum
        bytes::put_be16(seg, 0);          // urgent
    } else {
        protocol = proto_udp;
        bytes::put_be16(seg, static_cast<std::uint16_t>(8 + pkt.payload.size()));
        bytes::put_be16(seg, 0);
    }
    seg.insert(seg.end(), pkt.payload.begin(), pkt.payload.end());
    if (pkt.ip) {
        std::uint16_t sum = internet_checksum(seg, pseudo_header_sum(*pkt.ip, protocol, seg.size()));
        if (protocol == proto_udp && sum == 0) sum = 0xffff;
        const std::size_t at = protocol == proto_tcp ? 16 : 6;
        seg[at] = static_cast<std::uint8_t>(sum >> 8);
        seg[at + 1] = static_cast<std::uint8_t>(sum);
    }
    return seg;
}

} // namespace

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Io: return "I/O error";
    case ErrorCode::MalformedCapture: return "malformed capture";
    case ErrorCode::EmptyPayload: return "empty payload";
    case ErrorCode::EmptyCorpus: return "empty corpus";
    case ErrorCode::EmptyRegistry: return "empty registry";
    case ErrorCode::Config: return "configuration error";
    case ErrorCode::Dictionary: return "dictionary error";
    case ErrorCode::UnknownScenario: return "unknown scenario";
    case ErrorCode::InvalidCorpusSpec: return "invalid corpus spec";
    }
    return "unknown error";
}

const char* to_string(TransportKind kind) {
    return kind == TransportKind::Tcp ? "tcp" : "udp";
}

std::optional<MacAddress> MacAddress::parse(std::string_view text) {
    if (text.size() != 17) return std::nullopt;
    MacAddress mac;
    for (std::size_t i = 0; i < 6; ++i) {
        const std::size_t at = i * 3;
        const int hi = hex_value(text[at]);
        const int lo = hex_value(text[at + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        if (i < 5 && text[at + 2] != ':' && text[at + 2] != '-') return std::nullopt;
        mac.octets[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    return mac;
}

std::string MacAddress::to_string() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets[0], octets[1],
                  octets[2], octets[3], octets[4], octets[5]);
    return buf;
}

IpAddress IpAddress::v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    IpAddress ip;
    ip.bytes[0] = a;
    ip.bytes[1] = b;
    ip.bytes[2] = c;
    ip.bytes[3] = d;
    return ip;
}

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
    const std::string s(text);
    IpAddress ip;
    if (inet_pton(AF_INET, s.c_str(), ip.bytes.data()) == 1) return ip;
    ip.family = Family::V6;
    if (inet_pton(AF_INET6, s.c_str(), ip.bytes.data()) == 1) return ip;
    return std::nullopt;
}

std::string IpAddress::to_string() const {
    char buf[INET6_ADDRSTRLEN] = {};
    inet_ntop(family == Family::V4 ? AF_INET : AF_INET6, bytes.data(), buf, sizeof buf);
    return buf;
}

Capture parse_capture(std::span<const std::uint8_t> data, std::uint32_t capture_id) {
    if (data.size() < 4) throw Error(ErrorCode::MalformedCapture, "capture shorter than magic number");
    const std::uint32_t magic = bytes::le32(data, 0);
    if (magic == magic_pcapng)
        throw Error(ErrorCode::MalformedCapture, "PCAPNG captures are not supported; convert to classic pcap");

    bool swapped = false;
    Capture cap;
    switch (magic) {
    case magic_usec: break;
    case magic_nsec: cap.nanosecond = true; break;
    case magic_usec_swapped: swapped = true; break;
    case magic_nsec_swapped: swapped = true; cap.nanosecond = true; break;
    default: throw Error(ErrorCode::MalformedCapture, "bad pcap magic number");
    }
    if (data.size() < global_header_size)
        throw Error(ErrorCode::MalformedCapture, "truncated pcap global header");

    auto u32 = [&](std::size_t at) { return swapped ? bytes::be32(data, at) : bytes::le32(data, at); };
    cap.link_type = u32(20);
    if (cap.link_type != link_type_ethernet)
        throw Error(ErrorCode::MalformedCapture,
                    "unsupported link type " + std::to_string(cap.link_type) + " (only Ethernet)");

    std::size_t off = global_header_size;
    std::uint64_t frame_no = 0;
    std::vector<PacketPtr> packets;
    while (off < data.size()) {
        if (data.size() - off < record_header_size) {
            cap.warnings.push_back({frame_no, "truncated record header"});
            break;
        }
        const std::uint32_t sec = u32(off);
        const std::uint32_t frac = u32(off + 4);
        const std::uint32_t caplen = u32(off + 8);
        const std::uint32_t origlen = u32(off + 12);
        off += record_header_size;
        if (caplen > data.size() - off) {
            cap.warnings.push_back({frame_no, "record caplen " + std::to_string(caplen) +
                                                  " exceeds remaining " +
                                                  std::to_string(data.size() - off) + " bytes"});
            break;
        }

        auto pkt = std::make_shared<RawPacket>();
        pkt->index = frame_no;
        pkt->capture = capture_id;
        pkt->timestamp_us = std::int64_t{sec} * 1'000'000 + (cap.nanosecond ? frac / 1000 : frac);
        pkt->captured_length = caplen;
        pkt->original_length = origlen;
        if (auto err = decode_frame(data.subspan(off, caplen), *pkt))
            cap.warnings.push_back({frame_no, *err});
        else
            packets.push_back(std::move(pkt));
        off += caplen;
        ++frame_no;
    }
    sort_by_time(packets);
    cap.packets = std::move(packets);
    return cap;
}

Capture read_capture_file(const std::filesystem::path& path, std::uint32_t capture_id) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open capture " + path.string());
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::Io, "cannot read capture " + path.string());
    return parse_capture(data, capture_id);
}

std::vector<std::uint8_t> serialize_frame(const RawPacket& pkt) {
    std::vector<std::uint8_t> frame;
    frame.insert(frame.end(), pkt.dst_mac.octets.begin(), pkt.dst_mac.octets.end());
    frame.insert(frame.end(), pkt.src_mac.octets.begin(), pkt.src_mac.octets.end());

    if (!pkt.ip) {
        bytes::put_be16(frame, pkt.ethertype);
        frame.insert(frame.end(), pkt.payload.begin(), pkt.payload.end());
        return frame;
    }

    const auto& ip = *pkt.ip;
    std::vector<std::uint8_t> body;
    std::uint8_t protocol = ip.protocol;
    if (pkt.transport) {
        body = build_transport(pkt);
        protocol = pkt.transport->kind == TransportKind::Tcp ? proto_tcp : proto_udp;
    } else {
        body = pkt.payload;
    }

    if (ip.src.family == IpAddress::Family::V4) {
        bytes::put_be16(frame, ethertype_ipv4);
        std::vector<std::uint8_t> hdr;
        hdr.push_back(0x45);
        hdr.push_back(0);
        bytes::put_be16(hdr, static_cast<std::uint16_t>(20 + body.size()));
        bytes::put_be16(hdr, static_cast<std::uint16_t>(pkt.index));
        bytes::put_be16(hdr, 0x4000); // don't fragment
        hdr.push_back(64);
        hdr.push_back(protocol);
        bytes::put_be16(hdr, 0);
        hdr.insert(hdr.end(), ip.src.bytes.begin(), ip.src.bytes.begin() + 4);
        hdr.insert(hdr.end(), ip.dst.bytes.begin(), ip.dst.bytes.begin() + 4);
        const std::uint16_t sum = internet_checksum(hdr);
        hdr[10] = static_cast<std::uint8_t>(sum >> 8);
        hdr[11] = static_cast<std::uint8_t>(sum);
        frame.insert(frame.end(), hdr.begin(), hdr.end());
    } else {
        bytes::put_be16(frame, ethertype_ipv6);
        bytes::put_be32(frame, 0x60000000);
        bytes::put_be16(frame, static_cast<std::uint16_t>(body.size()));
        frame.push_back(protocol);
        frame.push_back(64);
        frame.insert(frame.end(), ip.src.bytes.begin(), ip.src.bytes.end());
        frame.insert(frame.end(), ip.dst.bytes.begin(), ip.dst.bytes.end());
    }
    frame.insert(frame.end(), body.begin(), body.end());
    return frame;
}

std::vector<std::uint8_t> write_capture(std::span<const PacketPtr> packets) {
    std::vector<std::uint8_t> out;
    bytes::put_le32(out, magic_usec);
    bytes::put_le16(out, 2);
    bytes::put_le16(out, 4);
    bytes::put_le32(out, 0);      // thiszone
    bytes::put_le32(out, 0);      // sigfigs
    bytes::put_le32(out, 262144); // snaplen
    bytes::put_le32(out, link_type_ethernet);
    for (const auto& pkt : packets) {
        const auto frame = serialize_frame(*pkt);
        const auto len = static_cast<std::uint32_t>(frame.size());
        bytes::put_le32(out, static_cast<std::uint32_t>(pkt->timestamp_us / 1'000'000));
        bytes::put_le32(out, static_cast<std::uint32_t>(pkt->timestamp_us % 1'000'000));
        bytes::put_le32(out, len);
        bytes::put_le32(out, len);
        out.insert(out.end(), frame.begin(), frame.end());
    }
    return out;
}

DeviceSplit split_by_device(std::span<const PacketPtr> packets, const Registry& registry) {
    DeviceSplit split;
    if (registry.empty())
        split.warnings.push_back("device registry is empty; all packets are unattributed");

    std::map<MacAddress, std::size_t> slot;
    for (const auto& [mac, id] : registry) {
        slot.emplace(mac, split.streams.size());
        split.streams.push_back({id, mac, {}});
    }
    for (const auto& pkt : packets) {
        auto it = slot.find(pkt->src_mac);
        if (it == slot.end()) it = slot.find(pkt->dst_mac);
        if (it == slot.end())
            split.unattributed.push_back(pkt);
        else
            split.streams[it->second].packets.push_back(pkt);
    }
    return split;
}

void sort_by_time(std::vector<PacketPtr>& packets) {
    std::stable_sort(packets.begin(), packets.end(), [](const PacketPtr& a, const PacketPtr& b) {
        return a->timestamp_us < b->timestamp_us;
    });
}

} // namespace medleak
