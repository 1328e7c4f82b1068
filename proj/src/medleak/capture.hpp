#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace medleak {

struct MacAddress {
    std::array<std::uint8_t, 6> octets{};

    /// Accepts `aa:bb:cc:dd:ee:ff` or `aa-bb-cc-dd-ee-ff`, any case.
    static std::optional<MacAddress> parse(std::string_view text);
    std::string to_string() const;

    auto operator<=>(const MacAddress&) const = default;
};

struct IpAddress {
    enum class Family : std::uint8_t { V4, V6 };

    Family family = Family::V4;
    std::array<std::uint8_t, 16> bytes{}; // V4 uses the first four

    static IpAddress v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d);
    static std::optional<IpAddress> parse(std::string_view text);
    std::string to_string() const;

    auto operator<=>(const IpAddress&) const = default;
};

enum class TransportKind : std::uint8_t { Tcp, Udp };

const char* to_string(TransportKind kind);

struct IpHeader {
    IpAddress src;
    IpAddress dst;
    std::uint8_t protocol = 0;
};

struct TransportHeader {
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    TransportKind kind = TransportKind::Tcp;
    std::uint8_t tcp_flags = 0;
};

namespace tcp_flags {
inline constexpr std::uint8_t fin = 0x01;
inline constexpr std::uint8_t syn = 0x02;
inline constexpr std::uint8_t psh = 0x08;
inline constexpr std::uint8_t ack = 0x10;
} // namespace tcp_flags

inline constexpr std::uint16_t ethertype_ipv4 = 0x0800;
inline constexpr std::uint16_t ethertype_arp = 0x0806;
inline constexpr std::uint16_t ethertype_ipv6 = 0x86dd;
inline constexpr std::uint16_t ethertype_vlan = 0x8100;

// One captured Ethernet frame, decoded down to the transport layer.
//
// payload.size() == captured_length - header_length - trailer_length, where
// the trailer is link-layer padding beyond the IP datagram's declared length.
struct RawPacket {
    std::uint64_t index = 0;    // ordinal within its capture, before sorting
    std::uint32_t capture = 0;  // which input capture this frame came from
    std::int64_t timestamp_us = 0;
    std::uint32_t captured_length = 0;
    std::uint32_t original_length = 0;
    MacAddress src_mac;
    MacAddress dst_mac;
    std::uint16_t ethertype = 0;
    std::optional<IpHeader> ip;
    std::optional<TransportHeader> transport;
    std::uint32_t header_length = 0;
    std::uint32_t trailer_length = 0;
    std::vector<std::uint8_t> payload;
};

using PacketPtr = std::shared_ptr<const RawPacket>;

struct CaptureWarning {
    std::uint64_t frame = 0;
    std::string message;
};

struct Capture {
    std::uint32_t link_type = 0;
    bool nanosecond = false;
    std::vector<PacketPtr> packets; // stable-sorted by timestamp
    std::vector<CaptureWarning> warnings;
};

/// Parses a classic libpcap capture with Ethernet link type.
///
/// Throws Error(MalformedCapture) for a bad magic number, a truncated global
/// header, PCAPNG input, or a non-Ethernet link type. Frames that cannot be
/// decoded are skipped and reported in `warnings`; a record header whose
/// caplen overruns the file ends parsing with one warning.
Capture parse_capture(std::span<const std::uint8_t> bytes, std::uint32_t capture_id = 0);

Capture read_capture_file(const std::filesystem::path& path, std::uint32_t capture_id = 0);

/// Rebuilds the wire frame for a decoded packet (Ethernet, IPv4/IPv6,
/// TCP/UDP, payload) with valid lengths and checksums.
std::vector<std::uint8_t> serialize_frame(const RawPacket& packet);

/// Writes a microsecond-resolution little-endian pcap with link type 1.
std::vector<std::uint8_t> write_capture(std::span<const PacketPtr> packets);

using Registry = std::map<MacAddress, std::string>;

struct DeviceStream {
    std::string device_id;
    MacAddress mac;
    std::vector<PacketPtr> packets;
};

struct DeviceSplit {
    std::vector<DeviceStream> streams; // one per registry entry, ordered by MAC
    std::vector<PacketPtr> unattributed;
    std::vector<std::string> warnings;
};

/// Partitions packets by registered MAC. A packet whose source and
/// destination are both registered goes to the source device.
DeviceSplit split_by_device(std::span<const PacketPtr> packets, const Registry& registry);

/// Stable sort by timestamp; equal timestamps keep their relative order.
void sort_by_time(std::vector<PacketPtr>& packets);

} // namespace medleak
