#pragma once

#include "medleak/payload.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace medleak {

enum class DictionaryKind : std::uint8_t { Medical, Names, Pii };

const char* to_string(DictionaryKind kind);

// Set of lowercase terms; multi-word entries are single-space separated.
struct Dictionary {
    DictionaryKind kind = DictionaryKind::Medical;
    std::set<std::string> entries;
    std::string source_note;

    /// Parses one entry per line; '#' starts a comment. Entries are trimmed,
    /// lowercased and have internal whitespace collapsed. The first comment
    /// line becomes the source note. Throws Error(Dictionary) if no entries.
    static Dictionary from_text(DictionaryKind kind, std::string_view text);

    bool contains(std::string_view term) const { return entries.contains(std::string(term)); }
};

/// Standard file name for each dictionary kind inside a dictionary directory.
const char* dictionary_file_name(DictionaryKind kind);

Dictionary load_dictionary(const std::filesystem::path& path, DictionaryKind kind);

/// Loads medical-terms.txt, first-names.txt and pii-fields.txt.
std::vector<Dictionary> load_dictionaries(const std::filesystem::path& dir);

enum class FindingCategory : std::uint8_t {
    DictionaryMedical,
    DictionaryName,
    DictionaryPii,
    UrlLeak,
    CookieLeak,
    VendorIdentifier,
    ImageGetSignature,
    UserIdentifier,
};

const char* to_string(FindingCategory category);
std::optional<FindingCategory> parse_finding_category(std::string_view name);

enum class Severity : std::uint8_t { Info, Warn, High };

const char* to_string(Severity severity);
std::optional<Severity> parse_severity(std::string_view name);

struct LeakFinding {
    std::uint32_t capture = 0;
    std::uint64_t packet_index = 0;
    FindingCategory category = FindingCategory::DictionaryMedical;
    std::string matched_text; // verbatim bytes from the payload
    std::string term;         // dictionary entry or pattern that fired
    std::string context;      // <= 120 bytes around the match, non-printables as '.'
    Severity severity = Severity::Info;

    bool operator==(const LeakFinding&) const = default;
};

inline constexpr std::size_t max_context_bytes = 120;

// Where a finding points: which packet, and the bytes it came from.
struct Evidence {
    std::uint32_t capture = 0;
    std::uint64_t packet_index = 0;
    std::span<const std::uint8_t> bytes;
};

struct Token {
    std::string text;     // lowercase candidate, '_'/'-' possibly mapped to ' '
    std::size_t offset = 0; // span of the source bytes it was derived from
    std::size_t length = 0;
    std::size_t group = 0;  // candidates derived from the same source token
};

/// Lowercase tokens split on non-alphanumerics. A compound such as
/// "blood_pressure" also yields "blood pressure" and its parts; mixed
/// alphanumerics such as "alice123" also yield their letter runs; words joined
/// by a single space or '+' yield two- and three-word phrases.
std::vector<Token> tokenize(std::span<const std::uint8_t> bytes);
std::vector<std::string> token_strings(std::span<const Token> tokens);

/// Per (token group, dictionary), one finding for each hit whose source span
/// is not covered by a longer hit, so "blood_pressure" is not also reported
/// as "blood" and "pressure".
std::vector<LeakFinding> dictionary_match(const Evidence& evidence, std::span<const Token> tokens,
                                          std::span<const Dictionary> dictionaries);

/// Excerpt of `bytes` around [offset, offset+length), at most 120 bytes.
std::string context_excerpt(std::span<const std::uint8_t> bytes, std::size_t offset, std::size_t length);

struct LeakConfig {
    std::vector<std::string> vendor_patterns{"*.withings.*", "withings_*"};
    std::vector<std::string> identifier_keys{"current_user", "userid", "user_id", "uid"};
    double image_window_s = 30.0;
};

/// Case-insensitive glob match ('*', '?', '[...]').
bool matches_pattern(std::string_view text, std::string_view pattern);
bool matches_any(std::string_view text, std::span<const std::string> patterns);

/// Structural leaks in one HTTP message: dictionary hits in the URL and in
/// cookies, vendor host/URL patterns, and identifier keys.
std::vector<LeakFinding> http_leak_scan(const Evidence& evidence, const HttpMessage& message,
                                        std::span<const Dictionary> dictionaries, const LeakConfig& config);

struct TrafficEvent {
    std::int64_t timestamp_us = 0;
    std::uint32_t capture = 0;
    std::uint64_t packet_index = 0;
    Direction direction = Direction::Outbound;
    bool cleartext = false;
    bool vendor_endpoint = false;
    std::optional<HttpMessage> http;
    std::span<const std::uint8_t> bytes;
};

bool is_image_get(const HttpMessage& message);

/// Flags outbound cleartext image GETs that follow, within the window, other
/// outbound cleartext traffic or any vendor-endpoint traffic of the device.
/// Events must be time-ordered.
std::vector<LeakFinding> image_get_signature(std::span<const TrafficEvent> events, double window_s);

} // namespace medleak
