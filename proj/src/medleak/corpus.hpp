#pragma once

#include "medleak/capture.hpp"
#include "medleak/classify.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace medleak {

struct CorpusSpec {
    std::size_t n_cleartext = 5000;
    std::size_t n_encrypted = 5000;
    std::size_t min_length = 64;
    std::size_t max_length = 2048;
    std::uint64_t seed = 1;
};

/// Cleartext items first, then encrypted ones; identical for identical specs.
/// Throws Error(InvalidCorpusSpec) for zero counts, zero or inverted lengths.
std::vector<LabeledPayload> generate_corpus(const CorpusSpec& spec);

/// Keyed stream output (ChaCha20 via libsodium) standing in for ciphertext.
std::vector<std::uint8_t> pseudorandom_bytes(std::uint64_t seed, std::uint64_t record, std::size_t length);

/// One cleartext payload of exactly `length` bytes drawn from the templates.
std::vector<std::uint8_t> cleartext_payload(std::uint64_t seed, std::uint64_t record, std::size_t length,
                                            std::string* note = nullptr);

/// JSON Lines: {"label","seed_record","note","hex"} per payload.
std::string corpus_to_jsonl(std::span<const LabeledPayload> corpus);
/// Throws Error(InvalidArgument) on malformed lines.
std::vector<LabeledPayload> corpus_from_jsonl(std::string_view text);

enum class Scenario : std::uint8_t { BpMonitorLeaky, ScaleEncrypted, MixedHome };

const char* to_string(Scenario scenario);
std::optional<Scenario> parse_scenario(std::string_view name);

namespace fixture {
inline const MacAddress bp_monitor_mac{{0x00, 0x24, 0xe4, 0x3a, 0x51, 0x07}};
inline const MacAddress scale_mac{{0x00, 0x24, 0xe4, 0x6c, 0x12, 0x9e}};
inline const MacAddress access_point_mac{{0xb8, 0x27, 0xeb, 0x4d, 0x20, 0x01}};
inline const MacAddress laptop_mac{{0x3c, 0x22, 0xfb, 0x81, 0x44, 0x5d}};
inline constexpr std::string_view bp_monitor_id = "withings-bp-monitor";
inline constexpr std::string_view scale_id = "withings-scale";
inline constexpr std::int64_t base_time_s = 1490000000;
} // namespace fixture

std::vector<PacketPtr> fixture_packets(Scenario scenario);

/// Throws Error(UnknownScenario) for names other than bp-monitor-leaky,
/// scale-encrypted and mixed-home.
std::vector<std::uint8_t> build_fixture_capture(std::string_view scenario);

/// Registered devices that appear in the scenario.
Registry fixture_registry(Scenario scenario);

} // namespace medleak
