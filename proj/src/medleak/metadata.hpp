#pragma once

#include "medleak/capture.hpp"
#include "medleak/payload.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace medleak {

struct Endpoint {
    IpAddress address;
    std::optional<std::string> hostname;

    auto operator<=>(const Endpoint&) const = default;
};

struct ActivityPeriod {
    std::string device_id;
    std::int64_t start_us = 0;
    std::int64_t end_us = 0;
    std::uint64_t packet_count = 0;
    std::uint64_t bytes_total = 0;     // captured frame bytes
    std::vector<Endpoint> endpoints;   // sorted by address, unique

    bool operator==(const ActivityPeriod&) const = default;
};

inline constexpr double default_gap_threshold_s = 60.0;

// In-capture evidence only: address -> hostname.
using HostnameMap = std::map<IpAddress, std::string>;

/// DNS answers win over HTTP Host observations; within each source the first
/// mapping seen for an address is kept.
HostnameMap collect_hostnames(std::span<const DnsAnswer> dns_answers,
                              std::span<const std::pair<IpAddress, std::string>> http_hosts = {});

/// Peer address of a packet relative to the device, if it has an IP layer.
std::optional<IpAddress> remote_address(const RawPacket& packet, const MacAddress& device);

/// Greedy segmentation of a time-sorted stream: packets whose inter-arrival
/// gap is at most `gap_threshold_s` share a period.
std::vector<ActivityPeriod> activity_periods(const DeviceStream& stream,
                                             double gap_threshold_s = default_gap_threshold_s,
                                             const HostnameMap& hostnames = {});

struct EndpointProfile {
    IpAddress address;
    std::optional<std::string> hostname;
    std::uint64_t packet_count = 0;
    bool vendor_flag = false;

    bool operator==(const EndpointProfile&) const = default;
};

/// One profile per distinct remote address, ordered by address.
std::vector<EndpointProfile> endpoint_profiles(const DeviceStream& stream, const HostnameMap& hostnames,
                                               std::span<const std::string> vendor_patterns);

struct Periodicity {
    double median_interval_s = 0.0;
    double dispersion_s = 0.0; // median absolute deviation of the intervals

    bool operator==(const Periodicity&) const = default;
};

/// Median and MAD of successive period start intervals; needs >= 3 periods.
std::optional<Periodicity> periodicity_hint(std::span<const ActivityPeriod> periods);

} // namespace medleak
