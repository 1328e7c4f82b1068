#include "medleak/metadata.hpp"

#include "medleak/leak.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace medleak {

namespace {

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::optional<std::string> lookup(const HostnameMap& names, const IpAddress& addr) {
    const auto it = names.find(addr);
    if (it == names.end()) return std::nullopt;
    return it->second;
}

} // namespace

HostnameMap collect_hostnames(std::span<const DnsAnswer> dns_answers,
                              std::span<const std::pair<IpAddress, std::string>> http_hosts) {
    HostnameMap names;
    for (const auto& a : dns_answers) names.emplace(a.address, a.hostname);
    for (const auto& [addr, host] : http_hosts) {
        // an IP literal in Host says nothing new
        if (!host.empty() && !IpAddress::parse(host)) names.emplace(addr, host);
    }
    return names;
}

std::optional<IpAddress> remote_address(const RawPacket& packet, const MacAddress& device) {
    if (!packet.ip) return std::nullopt;
    return packet.src_mac == device ? packet.ip->dst : packet.ip->src;
}

std::vector<ActivityPeriod> activity_periods(const DeviceStream& stream, double gap_threshold_s,
                                             const HostnameMap& hostnames) {
    std::vector<ActivityPeriod> periods;
    const auto gap_us = static_cast<std::int64_t>(std::llround(gap_threshold_s * 1e6));
    std::set<Endpoint> endpoints;

    auto close = [&] {
        if (periods.empty()) return;
        periods.back().endpoints.assign(endpoints.begin(), endpoints.end());
        endpoints.clear();
    };

    for (const auto& pkt : stream.packets) {
        if (periods.empty() || pkt->timestamp_us - periods.back().end_us > gap_us) {
            close();
            periods.push_back({stream.device_id, pkt->timestamp_us, pkt->timestamp_us, 0, 0, {}});
        }
        auto& p = periods.back();
        p.end_us = pkt->timestamp_us;
        ++p.packet_count;
        p.bytes_total += pkt->captured_length;
        if (auto remote = remote_address(*pkt, stream.mac))
            endpoints.insert({*remote, lookup(hostnames, *remote)});
    }
    close();
    return periods;
}

std::vector<EndpointProfile> endpoint_profiles(const DeviceStream& stream, const HostnameMap& hostnames,
                                               std::span<const std::string> vendor_patterns) {
    std::map<IpAddress, std::uint64_t> counts;
    for (const auto& pkt : stream.packets) {
        if (auto remote = remote_address(*pkt, stream.mac)) ++counts[*remote];
    }
    std::vector<EndpointProfile> out;
    for (const auto& [addr, n] : counts) {
        EndpointProfile p;
        p.address = addr;
        p.hostname = lookup(hostnames, addr);
        p.packet_count = n;
        p.vendor_flag = (p.hostname && matches_any(*p.hostname, vendor_patterns)) ||
                        matches_any(addr.to_string(), vendor_patterns);
        out.push_back(std::move(p));
    }
    return out;
}

std::optional<Periodicity> periodicity_hint(std::span<const ActivityPeriod> periods) {
    if (periods.size() < 3) return std::nullopt;
    std::vector<double> intervals;
    for (std::size_t i = 1; i < periods.size(); ++i)
        intervals.push_back(static_cast<double>(periods[i].start_us - periods[i - 1].start_us) / 1e6);
    Periodicity p;
    p.median_interval_s = median(intervals);
    std::vector<double> deviations;
    for (double v : intervals) deviations.push_back(std::abs(v - p.median_interval_s));
    p.dispersion_s = median(std::move(deviations));
    return p;
}

} // namespace medleak
