#pragma once

// Shared helpers for the unit and acceptance tests: a small seeded generator,
// packet builders, random capture generation and brute-force oracles that do
// not reuse any library code path.

#include "medleak/capture.hpp"
#include "medleak/leak.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace medleak::test {

using Bytes = std::vector<std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return {s.begin(), s.end()}; }

// xorshift64* seeded through splitmix64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        state_ = (z ^ (z >> 31)) | 1;
    }

    std::uint64_t next() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545f4914f6cdd1dULL;
    }

    // Inclusive range.
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) { return lo + next() % (hi - lo + 1); }
    bool coin(double p = 0.5) { return static_cast<double>(next() >> 11) * 0x1.0p-53 < p; }
    std::uint8_t byte() { return static_cast<std::uint8_t>(next() >> 56); }

    Bytes bytes(std::size_t n) {
        Bytes out(n);
        for (auto& b : out) b = byte();
        return out;
    }

    template <class T>
    const T& pick(const std::vector<T>& v) {
        return v[uniform(0, v.size() - 1)];
    }

private:
    std::uint64_t state_;
};

inline MacAddress mac(std::uint8_t last) { return MacAddress{{0x02, 0x00, 0x00, 0x00, 0x00, last}}; }

struct PacketSpec {
    std::int64_t timestamp_us = 0;
    MacAddress src_mac;
    MacAddress dst_mac;
    IpAddress src_ip = IpAddress::v4(10, 0, 0, 1);
    IpAddress dst_ip = IpAddress::v4(10, 0, 0, 2);
    TransportKind kind = TransportKind::Tcp;
    std::uint16_t src_port = 40000;
    std::uint16_t dst_port = 80;
    std::uint8_t tcp_flags = tcp_flags::psh | tcp_flags::ack;
    Bytes payload;
};

inline PacketPtr make_packet(const PacketSpec& s) {
    auto p = std::make_shared<RawPacket>();
    p->timestamp_us = s.timestamp_us;
    p->src_mac = s.src_mac;
    p->dst_mac = s.dst_mac;
    p->ethertype = s.src_ip.family == IpAddress::Family::V4 ? ethertype_ipv4 : ethertype_ipv6;
    p->ip = IpHeader{s.src_ip, s.dst_ip, static_cast<std::uint8_t>(s.kind == TransportKind::Tcp ? 6 : 17)};
    p->transport = TransportHeader{s.src_port, s.dst_port, s.kind, s.kind == TransportKind::Tcp ? s.tcp_flags : std::uint8_t{0}};
    p->payload = s.payload;
    return p;
}

inline PacketPtr make_arp(std::int64_t ts, const MacAddress& src) {
    auto p = std::make_shared<RawPacket>();
    p->timestamp_us = ts;
    p->src_mac = src;
    p->dst_mac = MacAddress{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};
    p->ethertype = ethertype_arp;
    p->payload = Bytes(28, 0x01);
    return p;
}

inline DeviceStream stream_of(const MacAddress& device, std::vector<PacketPtr> packets, std::string id = "dev") {
    return DeviceStream{std::move(id), device, std::move(packets)};
}

// Independent histogram-summation oracle for Shannon entropy (natural log,
// converted), built from an ordered map rather than a fixed array.
inline double oracle_entropy(const Bytes& data) {
    std::map<std::uint8_t, std::size_t> counts;
    for (auto b : data) ++counts[b];
    const double n = static_cast<double>(data.size());
    double h = 0.0;
    for (const auto& [value, count] : counts) {
        const double p = static_cast<double>(count) / n;
        h += -p * (std::log(p) / std::log(2.0));
    }
    return h;
}

// Naive two-pass evaluation: for every symbol, count by scanning the payload.
inline double oracle_chi_squared(const Bytes& data) {
    const double expected = static_cast<double>(data.size()) / 256.0;
    double chi = 0.0;
    for (int v = 0; v < 256; ++v) {
        std::size_t observed = 0;
        for (auto b : data)
            if (b == v) ++observed;
        chi += (static_cast<double>(observed) - expected) * (static_cast<double>(observed) - expected) / expected;
    }
    return chi;
}

// Verbatim byte search, independent of the tokenizer and HTTP parser.
inline bool contains_bytes(const Bytes& haystack, std::string_view needle) {
    if (needle.empty()) return true;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

inline std::string printable(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 0x20 || u >= 0x7f) c = '.';
    }
    return out;
}

inline std::vector<Dictionary> small_dictionaries() {
    return {Dictionary::from_text(DictionaryKind::Medical, "# test\nblood pressure\nheart pulse\ndiabetes\npulse\n"),
            Dictionary::from_text(DictionaryKind::Names, "# test\nalice\nbob\ncarol\n"),
            Dictionary::from_text(DictionaryKind::Pii, "# test\nemail\nfirst_name\npassword\n")};
}

// A random capture over a small pool of MACs, with a mix of TCP/UDP,
// IPv4/IPv6, ARP, HTTP requests carrying dictionary words, and random bytes.
struct RandomCapture {
    std::vector<PacketPtr> packets; // in file order, non-decreasing timestamps
    Registry registry;
    Bytes file;
};

inline Bytes random_payload(Rng& rng) {
    static const std::vector<std::string> words = {"blood_pressure", "diabetes", "alice", "Bob", "email",
                                                   "weather", "status", "heart-pulse", "current_user", "zz"};
    switch (rng.uniform(0, 4)) {
    case 0: return {};
    case 1: return rng.bytes(rng.uniform(1, 1500));
    case 2: {
        std::string url = "/api/" + rng.pick(words) + "?" + rng.pick(words) + "=" + std::to_string(rng.next() % 10000);
        if (rng.coin()) url += "&" + rng.pick(words) + "=" + rng.pick(words);
        std::string msg = (rng.coin() ? "GET " : "POST ") + url + " HTTP/1.1\r\nHost: ";
        msg += rng.coin() ? "scalews.withings.net" : "api.example.com";
        msg += "\r\nCookie: " + rng.pick(words) + "=" + rng.pick(words) + "\r\n\r\n";
        if (rng.coin()) msg += "note=" + rng.pick(words) + "+" + rng.pick(words);
        return to_bytes(msg);
    }
    case 3: {
        std::string text;
        const auto n = rng.uniform(1, 40);
        for (std::uint64_t i = 0; i < n; ++i) text += rng.pick(words) + (rng.coin(0.8) ? " " : "_");
        return to_bytes(text);
    }
    default: {
        auto b = to_bytes("GET /img/photo.jpg HTTP/1.1\r\nHost: static.withings.com\r\n\r\n");
        if (rng.coin(0.3)) b.push_back(0xc3);
        return b;
    }
    }
}

inline RandomCapture random_capture(Rng& rng, std::size_t max_packets = 60) {
    RandomCapture rc;
    std::vector<MacAddress> pool;
    const auto n_macs = rng.uniform(1, 6);
    for (std::uint64_t i = 0; i < n_macs; ++i) pool.push_back(mac(static_cast<std::uint8_t>(i + 1)));
    for (const auto& m : pool)
        if (rng.coin(0.6)) rc.registry.emplace(m, "device-" + m.to_string());

    std::int64_t t = 1'500'000'000LL * 1'000'000 + static_cast<std::int64_t>(rng.uniform(0, 1'000'000));
    const auto n = rng.uniform(0, max_packets);
    for (std::uint64_t i = 0; i < n; ++i) {
        // Mostly short gaps with occasional long silences.
        t += rng.coin(0.15) ? static_cast<std::int64_t>(rng.uniform(10, 7200)) * 1'000'000
                            : static_cast<std::int64_t>(rng.uniform(0, 5'000'000));
        if (rng.coin(0.05)) {
            rc.packets.push_back(make_arp(t, rng.pick(pool)));
            continue;
        }
        PacketSpec s;
        s.timestamp_us = t;
        s.src_mac = rng.pick(pool);
        s.dst_mac = rng.pick(pool);
        if (rng.coin(0.2)) {
            IpAddress a;
            a.family = IpAddress::Family::V6;
            a.bytes = {0x20, 0x01, 0x0d, 0xb8};
            a.bytes[15] = static_cast<std::uint8_t>(rng.uniform(1, 8));
            IpAddress b = a;
            b.bytes[15] = static_cast<std::uint8_t>(rng.uniform(9, 16));
            s.src_ip = a;
            s.dst_ip = b;
        } else {
            s.src_ip = IpAddress::v4(192, 168, 1, static_cast<std::uint8_t>(rng.uniform(1, 8)));
            s.dst_ip = IpAddress::v4(89, 30, 121, static_cast<std::uint8_t>(rng.uniform(1, 8)));
        }
        s.kind = rng.coin(0.7) ? TransportKind::Tcp : TransportKind::Udp;
        s.src_port = static_cast<std::uint16_t>(rng.uniform(1024, 65535));
        s.dst_port = rng.pick(std::vector<std::uint16_t>{80, 443, 53, 8080, 8883});
        s.payload = random_payload(rng);
        rc.packets.push_back(make_packet(s));
    }
    rc.file = write_capture(rc.packets);
    return rc;
}

} // namespace medleak::test
