// Golden capture scenarios reconstructed from the observed behaviour of a
// cleartext-leaking blood pressure monitor and a TLS-only smart scale.

#include "medleak/bytes.hpp"
#include "medleak/corpus.hpp"
#include "medleak/error.hpp"

#include <cmath>

namespace medleak {

namespace {

using Bytes = std::vector<std::uint8_t>;

struct Host {
    MacAddress mac;
    IpAddress ip;
};

const IpAddress ap_ip = IpAddress::v4(192, 168, 4, 1);
const IpAddress bp_ip = IpAddress::v4(192, 168, 4, 21);
const IpAddress scale_ip = IpAddress::v4(192, 168, 4, 22);
const IpAddress laptop_ip = IpAddress::v4(192, 168, 4, 30);
const IpAddress scalews_ip = IpAddress::v4(89, 30, 121, 150);
const IpAddress static_ip = IpAddress::v4(89, 30, 121, 160);
const IpAddress scale_api_ip = IpAddress::v4(89, 30, 121, 140);
const IpAddress example_ip = IpAddress::v4(93, 184, 216, 34);

constexpr std::uint64_t fixture_seed = 0x5eed'f1c7;

Bytes to_bytes(std::string_view s) { return {s.begin(), s.end()}; }

class Timeline {
public:
    void add(double t_s, const Host& from, const Host& to, std::optional<TransportHeader> transport,
             Bytes payload) {
        auto pkt = std::make_shared<RawPacket>();
        pkt->timestamp_us = std::llround(t_s * 1e6);
        pkt->src_mac = from.mac;
        pkt->dst_mac = to.mac;
        pkt->ethertype = ethertype_ipv4;
        pkt->ip = IpHeader{from.ip, to.ip, static_cast<std::uint8_t>(
                                               transport && transport->kind == TransportKind::Udp ? 17 : 6)};
        pkt->transport = transport;
        pkt->payload = std::move(payload);
        packets_.push_back(std::move(pkt));
    }

    void add_arp(double t_s, const MacAddress& from, const IpAddress& sender, const IpAddress& target) {
        auto pkt = std::make_shared<RawPacket>();
        pkt->timestamp_us = std::llround(t_s * 1e6);
        pkt->src_mac = from;
        pkt->dst_mac = MacAddress{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};
        pkt->ethertype = ethertype_arp;
        Bytes arp = {0x00, 0x01, 0x08, 0x00, 0x06, 0x04, 0x00, 0x01};
        arp.insert(arp.end(), from.octets.begin(), from.octets.end());
        arp.insert(arp.end(), sender.bytes.begin(), sender.bytes.begin() + 4);
        arp.insert(arp.end(), 6, 0x00);
        arp.insert(arp.end(), target.bytes.begin(), target.bytes.begin() + 4);
        pkt->payload = std::move(arp);
        packets_.push_back(std::move(pkt));
    }

    std::vector<PacketPtr> finish() && {
        std::stable_sort(packets_.begin(), packets_.end(),
                         [](const auto& a, const auto& b) { return a->timestamp_us < b->timestamp_us; });
        std::vector<PacketPtr> out;
        std::uint64_t index = 0;
        for (auto& p : packets_) {
            p->index = index++;
            out.push_back(std::move(p));
        }
        return out;
    }

private:
    std::vector<std::shared_ptr<RawPacket>> packets_;
};

// A TCP conversation between a LAN device and a remote peer behind the AP.
class TcpFlow {
public:
    TcpFlow(Timeline& tl, Host device, IpAddress remote, std::uint16_t local_port, std::uint16_t remote_port)
        : tl_(tl), device_(device), remote_{fixture::access_point_mac, remote}, local_port_(local_port),
          remote_port_(remote_port) {}

    void open(double t) {
        send(t, tcp_flags::syn, {});
        recv(t + 0.040, tcp_flags::syn | tcp_flags::ack, {});
        send(t + 0.041, tcp_flags::ack, {});
    }
    void send(double t, std::uint8_t flags, Bytes payload) {
        tl_.add(t, device_, remote_, TransportHeader{local_port_, remote_port_, TransportKind::Tcp, flags},
                std::move(payload));
    }
    void recv(double t, std::uint8_t flags, Bytes payload) {
        tl_.add(t, remote_, device_, TransportHeader{remote_port_, local_port_, TransportKind::Tcp, flags},
                std::move(payload));
    }
    void close(double t) {
        send(t, tcp_flags::fin | tcp_flags::ack, {});
        recv(t + 0.030, tcp_flags::fin | tcp_flags::ack, {});
        send(t + 0.031, tcp_flags::ack, {});
    }

private:
    Timeline& tl_;
    Host device_;
    Host remote_;
    std::uint16_t local_port_;
    std::uint16_t remote_port_;
};

Bytes dns_name(std::string_view name) {
    Bytes out;
    std::size_t start = 0;
    while (start <= name.size()) {
        const auto dot = std::min(name.find('.', start), name.size());
        out.push_back(static_cast<std::uint8_t>(dot - start));
        out.insert(out.end(), name.begin() + static_cast<std::ptrdiff_t>(start),
                   name.begin() + static_cast<std::ptrdiff_t>(dot));
        start = dot + 1;
    }
    out.push_back(0);
    return out;
}

Bytes dns_message(std::uint16_t id, std::string_view name, const IpAddress* answer) {
    Bytes m;
    bytes::put_be16(m, id);
    bytes::put_be16(m, answer ? 0x8180 : 0x0100);
    bytes::put_be16(m, 1);
    bytes::put_be16(m, answer ? 1 : 0);
    bytes::put_be16(m, 0);
    bytes::put_be16(m, 0);
    const auto qname = dns_name(name);
    m.insert(m.end(), qname.begin(), qname.end());
    bytes::put_be16(m, 1); // A
    bytes::put_be16(m, 1); // IN
    if (answer) {
        bytes::put_be16(m, 0xc00c);
        bytes::put_be16(m, 1);
        bytes::put_be16(m, 1);
        bytes::put_be32(m, 300);
        bytes::put_be16(m, 4);
        m.insert(m.end(), answer->bytes.begin(), answer->bytes.begin() + 4);
    }
    return m;
}

void dns_lookup(Timeline& tl, double t, const Host& device, std::uint16_t port, std::uint16_t id,
                std::string_view name, const IpAddress& answer) {
    const Host resolver{fixture::access_point_mac, ap_ip};
    tl.add(t, device, resolver, TransportHeader{port, 53, TransportKind::Udp, 0}, dns_message(id, name, nullptr));
    tl.add(t + 0.018, resolver, device, TransportHeader{53, port, TransportKind::Udp, 0},
           dns_message(id, name, &answer));
}

Bytes tls_record(std::uint8_t type, std::uint8_t minor, std::size_t length, std::uint64_t record) {
    Bytes r = {type, 0x03, minor};
    bytes::put_be16(r, static_cast<std::uint16_t>(length));
    const auto body = pseudorandom_bytes(fixture_seed, record, length);
    r.insert(r.end(), body.begin(), body.end());
    return r;
}

// One blood pressure reading: upload the measurement, then fetch the
// "how to use" photo that the companion flow requests after every reading.
void bp_session(Timeline& tl, double t, int session) {
    const Host bp{fixture::bp_monitor_mac, bp_ip};
    const auto sid = static_cast<std::uint16_t>(session);

    dns_lookup(tl, t, bp, static_cast<std::uint16_t>(5301 + sid), static_cast<std::uint16_t>(0x1a20 + sid),
               "scalews.withings.net", scalews_ip);

    TcpFlow api(tl, bp, scalews_ip, static_cast<std::uint16_t>(49152 + 2 * sid), 80);
    api.open(t + 0.100);
    const std::string user = "4417203";
    const std::string request =
        "GET /cgi-bin/measure?action=store&meastype=blood_pressure&category=blood_pressure,heart_pulse"
        "&sessionid=7d0e5b1a" + std::to_string(9000 + session) +
        "&withings_mobile_app=ios_healthmate&current_user=" + user +
        " HTTP/1.1\r\n"
        "Host: scalews.withings.net\r\n"
        "User-Agent: WithingsBPM/1.3.2 (Wireless Blood Pressure Monitor)\r\n"
        "Accept: */*\r\n"
        "Accept-Encoding: identity\r\n"
        "Connection: keep-alive\r\n"
        "Cookie: current_user=" + user + "; session_key=b5f2e9c4a1d8\r\n"
        "\r\n";
    api.send(t + 0.200, tcp_flags::psh | tcp_flags::ack, to_bytes(request));
    api.recv(t + 0.280, tcp_flags::ack, {});
    const std::string body = "{\"status\":0,\"body\":{\"updatetime\":" +
                             std::to_string(fixture::base_time_s + session * 86400) + "}}";
    api.recv(t + 0.300, tcp_flags::psh | tcp_flags::ack,
             to_bytes("HTTP/1.1 200 OK\r\nServer: Apache\r\nContent-Type: application/json\r\n"
                      "Content-Length: " + std::to_string(body.size()) + "\r\n\r\n" + body));
    api.close(t + 0.400);

    dns_lookup(tl, t + 2.0, bp, static_cast<std::uint16_t>(5401 + sid), static_cast<std::uint16_t>(0x2b30 + sid),
               "static.withings.com", static_ip);
    TcpFlow img(tl, bp, static_ip, static_cast<std::uint16_t>(49153 + 2 * sid), 80);
    img.open(t + 2.100);
    img.send(t + 2.200, tcp_flags::psh | tcp_flags::ack,
             to_bytes("GET /img/bpm_usage.jpg HTTP/1.1\r\nHost: static.withings.com\r\n"
                      "User-Agent: WithingsBPM/1.3.2\r\nAccept: image/*\r\nConnection: close\r\n\r\n"));
    const std::size_t image_size = 1200;
    Bytes image = to_bytes("HTTP/1.1 200 OK\r\nContent-Type: image/jpeg\r\nContent-Length: " +
                           std::to_string(image_size) + "\r\n\r\n");
    const Bytes jfif = {0xff, 0xd8, 0xff, 0xe0, 0x00, 0x10, 'J', 'F', 'I', 'F', 0x00};
    image.insert(image.end(), jfif.begin(), jfif.end());
    const auto pixels = pseudorandom_bytes(fixture_seed, 1000 + static_cast<std::uint64_t>(session),
                                           image_size - jfif.size());
    image.insert(image.end(), pixels.begin(), pixels.end());
    img.recv(t + 2.350, tcp_flags::psh | tcp_flags::ack, std::move(image));
    img.close(t + 2.500);
}

// One weigh-in: everything application-level goes over TLS 1.2 on 443.
void scale_session(Timeline& tl, double t, int session) {
    const Host scale{fixture::scale_mac, scale_ip};
    TcpFlow flow(tl, scale, scale_api_ip, static_cast<std::uint16_t>(50200 + session), 443);
    const auto rec = static_cast<std::uint64_t>(100 * session);
    flow.open(t);
    flow.send(t + 0.050, tcp_flags::psh | tcp_flags::ack, tls_record(0x16, 0x01, 212, rec + 1));
    flow.recv(t + 0.120, tcp_flags::psh | tcp_flags::ack, tls_record(0x16, 0x03, 1380, rec + 2));
    Bytes finish = tls_record(0x14, 0x03, 1, rec + 3);
    const auto handshake = tls_record(0x16, 0x03, 40, rec + 4);
    finish.insert(finish.end(), handshake.begin(), handshake.end());
    flow.send(t + 0.180, tcp_flags::psh | tcp_flags::ack, std::move(finish));
    flow.recv(t + 0.230, tcp_flags::psh | tcp_flags::ack, tls_record(0x17, 0x03, 51, rec + 5));
    flow.send(t + 0.300, tcp_flags::psh | tcp_flags::ack, tls_record(0x17, 0x03, 368, rec + 6));
    flow.recv(t + 0.420, tcp_flags::psh | tcp_flags::ack, tls_record(0x17, 0x03, 186, rec + 7));
    flow.close(t + 0.500);
}

// Unregistered laptop browsing: leaky by content, but never attributed.
void background_traffic(Timeline& tl, double t) {
    const Host laptop{fixture::laptop_mac, laptop_ip};
    tl.add_arp(t - 0.5, fixture::laptop_mac, laptop_ip, ap_ip);
    tl.add_arp(t - 0.4, fixture::access_point_mac, ap_ip, laptop_ip);
    dns_lookup(tl, t, laptop, 5601, 0x3c40, "www.example.org", example_ip);
    TcpFlow web(tl, laptop, example_ip, 51000, 80);
    web.open(t + 0.100);
    web.send(t + 0.200, tcp_flags::psh | tcp_flags::ack,
             to_bytes("GET /search?q=diabetes+symptoms&name=alice HTTP/1.1\r\nHost: www.example.org\r\n"
                      "User-Agent: Mozilla/5.0 (X11; Linux x86_64)\r\nAccept: text/html\r\n"
                      "Cookie: first_name=alice; last_name=smith\r\nConnection: keep-alive\r\n\r\n"));
    web.close(t + 0.600);
}

constexpr int bp_sessions = 3;
constexpr int scale_sessions = 3;
constexpr double day_s = 86400.0;

} // namespace

const char* to_string(Scenario scenario) {
    switch (scenario) {
    case Scenario::BpMonitorLeaky: return "bp-monitor-leaky";
    case Scenario::ScaleEncrypted: return "scale-encrypted";
    case Scenario::MixedHome: return "mixed-home";
    }
    return "";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
    for (auto s : {Scenario::BpMonitorLeaky, Scenario::ScaleEncrypted, Scenario::MixedHome})
        if (name == to_string(s)) return s;
    return std::nullopt;
}

std::vector<PacketPtr> fixture_packets(Scenario scenario) {
    Timeline tl;
    const auto base = static_cast<double>(fixture::base_time_s);
    const bool bp = scenario != Scenario::ScaleEncrypted;
    const bool scale = scenario != Scenario::BpMonitorLeaky;
    if (bp)
        for (int s = 0; s < bp_sessions; ++s) bp_session(tl, base + 10.0 + s * day_s, s);
    if (scale)
        for (int s = 0; s < scale_sessions; ++s) scale_session(tl, base + 7200.0 + s * day_s, s);
    if (scenario == Scenario::MixedHome) {
        background_traffic(tl, base + 11.0);
        background_traffic(tl, base + 7201.0);
    }
    return std::move(tl).finish();
}

std::vector<std::uint8_t> build_fixture_capture(std::string_view scenario) {
    const auto s = parse_scenario(scenario);
    if (!s) throw Error(ErrorCode::UnknownScenario, "unknown fixture scenario '" + std::string(scenario) + "'");
    const auto packets = fixture_packets(*s);
    return write_capture(packets);
}

Registry fixture_registry(Scenario scenario) {
    Registry r;
    if (scenario != Scenario::ScaleEncrypted) r.emplace(fixture::bp_monitor_mac, std::string(fixture::bp_monitor_id));
    if (scenario != Scenario::BpMonitorLeaky) r.emplace(fixture::scale_mac, std::string(fixture::scale_id));
    return r;
}

} // namespace medleak
