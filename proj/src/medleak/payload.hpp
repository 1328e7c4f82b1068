#pragma once

#include "medleak/capture.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace medleak {

enum class Direction : std::uint8_t { Outbound, Inbound };

const char* to_string(Direction direction);

// Application bytes of a single packet; no reassembly across segments.
struct AppPayload {
    std::uint64_t packet_index = 0;
    std::uint32_t capture = 0;
    std::int64_t timestamp_us = 0;
    Direction direction = Direction::Outbound;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    TransportKind transport_kind = TransportKind::Tcp;
    std::optional<IpAddress> remote; // peer address as seen from the device
    std::vector<std::uint8_t> bytes; // never empty
};

/// One payload per packet with a transport header and non-empty
/// application bytes, in stream order.
std::vector<AppPayload> extract_payloads(const DeviceStream& stream);

enum class TlsReason : std::uint8_t { PortBased, RecordBased, Both };

const char* to_string(TlsReason reason);

struct TlsVersion {
    std::uint8_t major = 0;
    std::uint8_t minor = 0;
    bool operator==(const TlsVersion&) const = default;
};

struct TlsVerdict {
    bool is_tls = false;
    std::optional<TlsReason> reason;   // absent when !is_tls
    std::optional<TlsVersion> version; // present when the record header matched
};

inline constexpr std::uint16_t tls_port = 443;

// Depends only on the two ports and the first three payload bytes.
TlsVerdict detect_tls(std::uint16_t src_port, std::uint16_t dst_port,
                      std::span<const std::uint8_t> bytes);
TlsVerdict detect_tls(const AppPayload& payload);

enum class HttpKind : std::uint8_t { Request, Response };

using HeaderList = std::vector<std::pair<std::string, std::string>>;

struct HttpMessage {
    HttpKind kind = HttpKind::Request;
    std::string method;  // requests
    std::string url;     // requests, raw request-target
    std::string version; // "HTTP/1.1"
    std::optional<int> status_code; // responses
    std::string reason;             // responses
    HeaderList headers;
    std::optional<std::string> host; // lowercased, port stripped
    HeaderList cookies;

    bool operator==(const HttpMessage&) const = default;
};

/// Parses a request or status line plus headers. Malformed header lines are
/// skipped; anything without a valid start line yields nullopt.
std::optional<HttpMessage> parse_http(std::span<const std::uint8_t> bytes);
std::optional<HttpMessage> parse_http(const AppPayload& payload);

/// Start line and headers, CRLF-terminated, followed by the empty line.
std::string serialize_http(const HttpMessage& message);

/// Path part of a request-target (before '?' or '#').
std::string url_path(const std::string& url);

struct QueryParam {
    std::string key;
    std::string value;
    std::string raw; // "key=value" exactly as it appears in the URL
};

/// Splits the query string on '&' and ';'. No percent-decoding, so the raw
/// text can be found verbatim in the payload.
std::vector<QueryParam> query_params(const std::string& url);

struct DnsAnswer {
    std::string hostname; // question name, lowercased, no trailing dot
    IpAddress address;
};

/// A/AAAA answers from a DNS response; malformed messages yield nothing.
std::vector<DnsAnswer> parse_dns_answers(std::span<const std::uint8_t> bytes);

/// Non-TLS TCP payloads that are not HTTP but share a port pair with an
/// earlier HTTP message, which suggests a segment of a larger message.
std::size_t count_http_continuations(std::span<const AppPayload> payloads);

} // namespace medleak
