#include "medleak/payload.hpp"

#include "medleak/bytes.hpp"
#include "medleak/text.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace medleak {

namespace {

constexpr std::array<std::string_view, 9> http_methods = {
    "GET", "POST", "PUT", "DELETE", "HEAD", "OPTIONS", "PATCH", "CONNECT", "TRACE"};

bool is_tls_content_type(std::uint8_t b) { return b >= 0x14 && b <= 0x17; }

// Splits off one line; accepts CRLF or bare LF.
std::optional<std::string_view> next_line(std::string_view& rest) {
    if (rest.empty()) return std::nullopt;
    const auto nl = rest.find('\n');
    std::string_view line = nl == std::string_view::npos ? rest : rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool valid_http_version(std::string_view v) {
    return v.size() == 8 && v.substr(0, 5) == "HTTP/" && text::is_digit(v[5]) && v[6] == '.' &&
           text::is_digit(v[7]);
}

bool parse_request_line(std::string_view line, HttpMessage& msg) {
    const auto sp1 = line.find(' ');
    if (sp1 == std::string_view::npos) return false;
    const auto method = line.substr(0, sp1);
    if (std::find(http_methods.begin(), http_methods.end(), method) == http_methods.end()) return false;
    const auto sp2 = line.find(' ', sp1 + 1);
    if (sp2 == std::string_view::npos || sp2 == sp1 + 1) return false;
    const auto version = line.substr(sp2 + 1);
    if (!valid_http_version(version)) return false;
    msg.kind = HttpKind::Request;
    msg.method = std::string(method);
    msg.url = std::string(line.substr(sp1 + 1, sp2 - sp1 - 1));
    msg.version = std::string(version);
    return true;
}

bool parse_status_line(std::string_view line, HttpMessage& msg) {
    if (line.size() < 12 || !valid_http_version(line.substr(0, 8)) || line[8] != ' ') return false;
    const auto code = line.substr(9, 3);
    if (!std::all_of(code.begin(), code.end(), text::is_digit)) return false;
    if (line.size() > 12 && line[12] != ' ') return false;
    const int status = (code[0] - '0') * 100 + (code[1] - '0') * 10 + (code[2] - '0');
    if (status < 100 || status > 599) return false;
    msg.kind = HttpKind::Response;
    msg.version = std::string(line.substr(0, 8));
    msg.status_code = status;
    msg.reason = line.size() > 13 ? std::string(line.substr(13)) : std::string{};
    return true;
}

void add_cookie_pairs(std::string_view value, bool first_only, HeaderList& out) {
    for (auto part : text::split(value, ';')) {
        part = text::trim(part);
        const auto eq = part.find('=');
        if (eq != std::string_view::npos && eq > 0)
            out.emplace_back(std::string(text::trim(part.substr(0, eq))),
                             std::string(text::trim(part.substr(eq + 1))));
        if (first_only) break;
    }
}

// Reads a possibly compressed DNS name starting at `at`; advances `at` past
// the name in the original position.
std::optional<std::string> read_dns_name(std::span<const std::uint8_t> msg, std::size_t& at) {
    std::string name;
    std::size_t pos = at;
    bool jumped = false;
    int hops = 0;
    while (true) {
        if (pos >= msg.size()) return std::nullopt;
        const std::uint8_t len = msg[pos];
        if ((len & 0xc0) == 0xc0) {
            if (pos + 1 >= msg.size() || ++hops > 16) return std::nullopt;
            if (!jumped) at = pos + 2;
            pos = (std::size_t{len & 0x3fu} << 8) | msg[pos + 1];
            jumped = true;
            continue;
        }
        if (len & 0xc0) return std::nullopt;
        if (len == 0) {
            if (!jumped) at = pos + 1;
            return text::to_lower(name);
        }
        if (pos + 1 + len > msg.size()) return std::nullopt;
        if (!name.empty()) name.push_back('.');
        name.append(reinterpret_cast<const char*>(msg.data() + pos + 1), len);
        pos += 1 + len;
    }
}

} // namespace

const char* to_string(Direction direction) {
    return direction == Direction::Outbound ? "outbound" : "inbound";
}

const char* to_string(TlsReason reason) {
    switch (reason) {
    case TlsReason::PortBased: return "port-based";
    case TlsReason::RecordBased: return "record-based";
    case TlsReason::Both: return "both";
    }
    return "";
}

std::vector<AppPayload> extract_payloads(const DeviceStream& stream) {
    std::vector<AppPayload> out;
    for (const auto& pkt : stream.packets) {
        if (!pkt->transport || pkt->payload.empty()) continue;
        AppPayload p;
        p.packet_index = pkt->index;
        p.capture = pkt->capture;
        p.timestamp_us = pkt->timestamp_us;
        p.direction = pkt->src_mac == stream.mac ? Direction::Outbound : Direction::Inbound;
        p.src_port = pkt->transport->src_port;
        p.dst_port = pkt->transport->dst_port;
        p.transport_kind = pkt->transport->kind;
        if (pkt->ip) p.remote = p.direction == Direction::Outbound ? pkt->ip->dst : pkt->ip->src;
        p.bytes = pkt->payload;
        out.push_back(std::move(p));
    }
    return out;
}

TlsVerdict detect_tls(std::uint16_t src_port, std::uint16_t dst_port,
                      std::span<const std::uint8_t> bytes) {
    const bool by_port = src_port == tls_port || dst_port == tls_port;
    const bool by_record = bytes.size() >= 3 && is_tls_content_type(bytes[0]) && bytes[1] == 3 &&
                           bytes[2] <= 4;
    TlsVerdict v;
    v.is_tls = by_port || by_record;
    if (by_port && by_record)
        v.reason = TlsReason::Both;
    else if (by_port)
        v.reason = TlsReason::PortBased;
    else if (by_record)
        v.reason = TlsReason::RecordBased;
    if (by_record) v.version = TlsVersion{bytes[1], bytes[2]};
    return v;
}

TlsVerdict detect_tls(const AppPayload& payload) {
    return detect_tls(payload.src_port, payload.dst_port, payload.bytes);
}

std::optional<HttpMessage> parse_http(std::span<const std::uint8_t> data) {
    std::string_view rest = bytes::as_text(data);
    const auto first = next_line(rest);
    if (!first) return std::nullopt;

    HttpMessage msg;
    if (!parse_request_line(*first, msg) && !parse_status_line(*first, msg)) return std::nullopt;

    while (auto line = next_line(rest)) {
        if (line->empty()) break;
        const auto colon = line->find(':');
        if (colon == std::string_view::npos || colon == 0) continue;
        const auto name = line->substr(0, colon);
        if (std::any_of(name.begin(), name.end(), [](char c) {
                return c == ' ' || c == '\t' || static_cast<unsigned char>(c) < 0x21 ||
                       static_cast<unsigned char>(c) > 0x7e;
            }))
            continue;
        const auto value = text::trim(line->substr(colon + 1));
        msg.headers.emplace_back(std::string(name), std::string(value));

        const auto lname = text::to_lower(name);
        if (lname == "host" && !msg.host) {
            auto host = text::to_lower(value);
            // strip a port, leaving bracketed IPv6 literals intact
            const auto colon_at = host.rfind(':');
            if (colon_at != std::string::npos && host.find(']') == std::string::npos &&
                host.find(':') == colon_at)
                host.resize(colon_at);
            msg.host = host;
        } else if (lname == "cookie") {
            add_cookie_pairs(value, false, msg.cookies);
        } else if (lname == "set-cookie") {
            add_cookie_pairs(value, true, msg.cookies);
        }
    }
    return msg;
}

std::optional<HttpMessage> parse_http(const AppPayload& payload) {
    return parse_http(payload.bytes);
}

std::string serialize_http(const HttpMessage& m) {
    std::string out;
    if (m.kind == HttpKind::Request) {
        out = m.method + " " + m.url + " " + m.version + "\r\n";
    } else {
        out = m.version + " " + std::to_string(m.status_code.value_or(0));
        if (!m.reason.empty()) out += " " + m.reason;
        out += "\r\n";
    }
    for (const auto& [name, value] : m.headers) out += name + ": " + value + "\r\n";
    out += "\r\n";
    return out;
}

std::string url_path(const std::string& url) {
    return url.substr(0, url.find_first_of("?#"));
}

std::vector<QueryParam> query_params(const std::string& url) {
    std::vector<QueryParam> out;
    const auto q = url.find('?');
    if (q == std::string::npos) return out;
    std::string_view query(url);
    query = query.substr(q + 1);
    query = query.substr(0, query.find('#'));
    std::size_t start = 0;
    while (start <= query.size()) {
        const auto end = std::min(query.find_first_of("&;", start), query.size());
        const auto raw = query.substr(start, end - start);
        if (!raw.empty()) {
            const auto eq = raw.find('=');
            QueryParam p;
            p.raw = std::string(raw);
            p.key = std::string(raw.substr(0, eq));
            if (eq != std::string_view::npos) p.value = std::string(raw.substr(eq + 1));
            out.push_back(std::move(p));
        }
        start = end + 1;
    }
    return out;
}

std::vector<DnsAnswer> parse_dns_answers(std::span<const std::uint8_t> msg) {
    std::vector<DnsAnswer> out;
    if (msg.size() < 12) return out;
    const bool is_response = (msg[2] & 0x80) != 0;
    if (!is_response) return out;
    const std::uint16_t qdcount = bytes::be16(msg, 4);
    const std::uint16_t ancount = bytes::be16(msg, 6);

    std::size_t at = 12;
    std::optional<std::string> question;
    for (std::uint16_t i = 0; i < qdcount; ++i) {
        auto name = read_dns_name(msg, at);
        if (!name || at + 4 > msg.size()) return {};
        if (!question) question = std::move(name);
        at += 4;
    }
    for (std::uint16_t i = 0; i < ancount; ++i) {
        auto owner = read_dns_name(msg, at);
        if (!owner || at + 10 > msg.size()) return out;
        const std::uint16_t type = bytes::be16(msg, at);
        const std::uint16_t rdlength = bytes::be16(msg, at + 8);
        at += 10;
        if (at + rdlength > msg.size()) return out;
        IpAddress addr;
        bool usable = false;
        if (type == 1 && rdlength == 4) {
            std::copy_n(msg.begin() + at, 4, addr.bytes.begin());
            usable = true;
        } else if (type == 28 && rdlength == 16) {
            addr.family = IpAddress::Family::V6;
            std::copy_n(msg.begin() + at, 16, addr.bytes.begin());
            usable = true;
        }
        if (usable) out.push_back({question.value_or(*owner), addr});
        at += rdlength;
    }
    return out;
}

std::size_t count_http_continuations(std::span<const AppPayload> payloads) {
    std::set<std::pair<std::uint16_t, std::uint16_t>> http_flows;
    std::size_t count = 0;
    for (const auto& p : payloads) {
        if (p.transport_kind != TransportKind::Tcp || detect_tls(p).is_tls) continue;
        const auto flow = std::minmax(p.src_port, p.dst_port);
        if (parse_http(p))
            http_flows.insert(flow);
        else if (http_flows.contains(flow))
            ++count;
    }
    return count;
}

} // namespace medleak
