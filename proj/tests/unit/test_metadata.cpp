#include "medleak/metadata.hpp"

#include "../support/test_support.hpp"

#include <gtest/gtest.h>

using namespace medleak;
using namespace medleak::test;

namespace {

const MacAddress device = mac(1);
const IpAddress vendor_ip = IpAddress::v4(89, 30, 121, 150);

PacketPtr at(double t_s, IpAddress remote = vendor_ip, bool out = true) {
    PacketSpec s;
    s.timestamp_us = static_cast<std::int64_t>(t_s * 1e6);
    s.src_mac = out ? device : mac(2);
    s.dst_mac = out ? mac(2) : device;
    s.src_ip = out ? IpAddress::v4(192, 168, 0, 5) : remote;
    s.dst_ip = out ? remote : IpAddress::v4(192, 168, 0, 5);
    s.payload = to_bytes("x");
    return make_packet(s);
}

std::vector<ActivityPeriod> periods_at(const std::vector<std::int64_t>& starts) {
    std::vector<ActivityPeriod> out;
    for (auto s : starts) out.push_back({"d", s * 1'000'000, s * 1'000'000, 1, 10, {}});
    return out;
}

std::vector<PacketPtr> random_stream(Rng& rng) {
    std::vector<PacketPtr> pkts;
    double t = static_cast<double>(rng.uniform(0, 1000));
    const auto n = rng.uniform(0, 80);
    for (std::uint64_t i = 0; i < n; ++i) {
        t += rng.coin(0.2) ? static_cast<double>(rng.uniform(30, 5000)) : static_cast<double>(rng.uniform(0, 40000)) / 1000.0;
        if (rng.coin(0.1)) {
            pkts.push_back(make_arp(static_cast<std::int64_t>(t * 1e6), device));
            continue;
        }
        pkts.push_back(at(t, IpAddress::v4(10, 1, 1, static_cast<std::uint8_t>(rng.uniform(1, 5))), rng.coin()));
    }
    return pkts;
}

} // namespace

TEST(ActivityPeriods, TwoSessions) {
    const auto periods = activity_periods(stream_of(device, {at(0), at(1), at(2), at(3600), at(3601)}), 60);
    ASSERT_EQ(periods.size(), 2u);
    EXPECT_EQ(periods[0].start_us, 0);
    EXPECT_EQ(periods[0].end_us, 2'000'000);
    EXPECT_EQ(periods[0].packet_count, 3u);
    EXPECT_EQ(periods[1].start_us, 3'600'000'000);
    EXPECT_EQ(periods[1].end_us, 3'601'000'000);
    EXPECT_EQ(periods[1].packet_count, 2u);
    EXPECT_EQ(periods[0].device_id, "dev");
}

TEST(ActivityPeriods, EmptyAndSingle) {
    EXPECT_TRUE(activity_periods(stream_of(device, {})).empty());
    const auto one = activity_periods(stream_of(device, {at(5)}));
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].start_us, 5'000'000);
    EXPECT_EQ(one[0].end_us, 5'000'000);
}

TEST(ActivityPeriods, GapExactlyAtThresholdStaysTogether) {
    EXPECT_EQ(activity_periods(stream_of(device, {at(0), at(60)}), 60).size(), 1u);
    EXPECT_EQ(activity_periods(stream_of(device, {at(0), at(60.000001)}), 60).size(), 2u);
}

TEST(ActivityPeriods, EndpointsAndBytes) {
    const HostnameMap names = {{vendor_ip, "scalews.withings.net"}};
    const auto other = IpAddress::v4(8, 8, 8, 8);
    const std::vector<PacketPtr> built = {at(0), at(1, other, false), at(2, vendor_ip, false)};
    const auto pkts = parse_capture(write_capture(built)).packets;
    const auto periods = activity_periods(stream_of(device, pkts), 60, names);
    ASSERT_EQ(periods.size(), 1u);
    ASSERT_EQ(periods[0].endpoints.size(), 2u);
    EXPECT_EQ(periods[0].endpoints[0].address, other);
    EXPECT_FALSE(periods[0].endpoints[0].hostname);
    EXPECT_EQ(periods[0].endpoints[1].hostname, "scalews.withings.net");
    std::uint64_t bytes = 0;
    for (const auto& p : built) bytes += write_capture(std::vector<PacketPtr>{p}).size() - 24 - 16;
    EXPECT_EQ(periods[0].bytes_total, bytes);
}

TEST(ActivityPeriods, ConservationDisjointnessCoarsening) {
    Rng rng(51);
    const std::vector<double> gaps = {0.001, 0.5, 1, 10, 59.9, 60, 300, 3600, 1e6};
    for (int trial = 0; trial < 400; ++trial) {
        const auto pkts = random_stream(rng);
        const auto stream = stream_of(device, pkts);
        std::size_t previous = SIZE_MAX;
        for (double g : gaps) {
            const auto periods = activity_periods(stream, g);
            std::uint64_t total = 0;
            for (std::size_t i = 0; i < periods.size(); ++i) {
                total += periods[i].packet_count;
                EXPECT_LE(periods[i].start_us, periods[i].end_us);
                EXPECT_GE(periods[i].packet_count, 1u);
                if (i > 0) {
                    EXPECT_LT(periods[i - 1].end_us, periods[i].start_us);
                    EXPECT_GT(periods[i].start_us - periods[i - 1].end_us, static_cast<std::int64_t>(g * 1e6) - 1);
                }
            }
            EXPECT_EQ(total, pkts.size());
            EXPECT_LE(periods.size(), previous);
            previous = periods.size();
        }
    }
}

TEST(Hostnames, DnsWinsOverHttpAndFirstSeenKept) {
    const auto a = IpAddress::v4(1, 1, 1, 1);
    const auto b = IpAddress::v4(2, 2, 2, 2);
    const std::vector<DnsAnswer> dns = {{"first.example", a}, {"second.example", a}};
    const std::vector<std::pair<IpAddress, std::string>> http = {{a, "http.example"}, {b, "only-http.example"}};
    const auto names = collect_hostnames(dns, http);
    EXPECT_EQ(names.at(a), "first.example");
    EXPECT_EQ(names.at(b), "only-http.example");
}

TEST(EndpointProfiles, VendorFlagFromDnsName) {
    const HostnameMap names = {{vendor_ip, "scalews.withings.net"}};
    const auto other = IpAddress::v4(93, 184, 216, 34);
    const std::vector<std::string> patterns = {"*.withings.*"};
    const auto profiles =
        endpoint_profiles(stream_of(device, {at(0), at(1, vendor_ip, false), at(2, other)}), names, patterns);
    ASSERT_EQ(profiles.size(), 2u);
    EXPECT_EQ(profiles[0].address, vendor_ip);
    EXPECT_TRUE(profiles[0].vendor_flag);
    EXPECT_EQ(profiles[0].packet_count, 2u);
    EXPECT_EQ(profiles[1].address, other);
    EXPECT_FALSE(profiles[1].hostname);
    EXPECT_FALSE(profiles[1].vendor_flag);

    EXPECT_TRUE(endpoint_profiles(stream_of(device, {make_arp(0, device)}), names, patterns).empty());
}

TEST(EndpointProfiles, CountsSumToAddressedPackets) {
    Rng rng(52);
    const std::vector<std::string> patterns = {"10.1.1.3"};
    for (int trial = 0; trial < 300; ++trial) {
        const auto pkts = random_stream(rng);
        const auto stream = stream_of(device, pkts);
        std::uint64_t addressed = 0;
        for (const auto& p : pkts)
            if (remote_address(*p, device)) ++addressed;
        std::uint64_t sum = 0;
        for (const auto& e : endpoint_profiles(stream, {}, patterns)) {
            sum += e.packet_count;
            EXPECT_EQ(e.vendor_flag, e.address == IpAddress::v4(10, 1, 1, 3));
        }
        EXPECT_EQ(sum, addressed);
    }
}

TEST(Periodicity, Examples) {
    const auto daily = periodicity_hint(periods_at({0, 86400, 172800}));
    ASSERT_TRUE(daily);
    EXPECT_EQ(daily->median_interval_s, 86400.0);
    EXPECT_EQ(daily->dispersion_s, 0.0);

    EXPECT_FALSE(periodicity_hint(periods_at({0, 100})));

    const auto mixed = periodicity_hint(periods_at({0, 100, 90000, 90100}));
    ASSERT_TRUE(mixed);
    EXPECT_EQ(mixed->median_interval_s, 100.0);
    EXPECT_EQ(mixed->dispersion_s, 0.0);

    const auto even = periodicity_hint(periods_at({0, 10, 30, 60, 100}));
    ASSERT_TRUE(even);
    EXPECT_EQ(even->median_interval_s, 25.0); // median of {10, 20, 30, 40}
    EXPECT_EQ(even->dispersion_s, 10.0);      // median of {15, 5, 5, 15}
}
