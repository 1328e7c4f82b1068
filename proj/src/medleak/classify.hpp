#pragma once

#include "medleak/payload.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace medleak {

// Frequency table over the 256 byte values of one payload.
struct ByteHistogram {
    std::array<std::uint64_t, 256> counts{};
    std::uint64_t total = 0;

    double probability(std::size_t value) const {
        return static_cast<double>(counts[value]) / static_cast<double>(total);
    }
    double expected_uniform() const { return static_cast<double>(total) / 256.0; }
};

/// Throws Error(EmptyPayload) on empty input, as do all the statistics below.
ByteHistogram histogram(std::span<const std::uint8_t> bytes);

/// True when every byte is below 0x80.
bool classify_ascii(std::span<const std::uint8_t> bytes);

/// Shannon entropy in bits per byte, in [0, 8].
double shannon_entropy(std::span<const std::uint8_t> bytes);
double shannon_entropy(const ByteHistogram& hist);

/// Pearson's statistic against a uniform distribution over all 256 values.
double chi_squared(std::span<const std::uint8_t> bytes);
double chi_squared(const ByteHistogram& hist);

inline constexpr double default_entropy_threshold = 7.5;
inline constexpr double default_chi_threshold = 1000.0;
inline constexpr std::size_t default_min_stat_len = 64;

// Threshold ties go to "encrypted".
bool classify_entropy(std::span<const std::uint8_t> bytes, double threshold = default_entropy_threshold);
bool classify_chi(std::span<const std::uint8_t> bytes, double threshold = default_chi_threshold);

enum class DecisionMethod : std::uint8_t { Ascii, Entropy, ChiSquared, Majority };

const char* to_string(DecisionMethod method);
std::optional<DecisionMethod> parse_decision_method(std::string_view name);

struct ClassifierConfig {
    double entropy_threshold = default_entropy_threshold;
    double chi_threshold = default_chi_threshold;
    std::size_t min_stat_len = default_min_stat_len;
    DecisionMethod method = DecisionMethod::ChiSquared;
};

enum class Consensus : std::uint8_t { Cleartext, Encrypted, Indeterminate };

const char* to_string(Consensus consensus);

struct ClassificationResult {
    std::uint64_t packet_index = 0;
    std::size_t length = 0;
    bool ascii_verdict = false;
    double entropy_bits = 0.0;
    bool entropy_verdict = false;
    double chi_squared = 0.0;
    bool chi_verdict = false;
    bool short_payload = false; // below min_stat_len, so ASCII decided
    Consensus consensus = Consensus::Indeterminate;

    bool operator==(const ClassificationResult&) const = default;
};

/// Runs all three tests. Payloads of at least `min_stat_len` bytes follow the
/// configured decision method; shorter ones are cleartext when all-ASCII and
/// indeterminate otherwise.
ClassificationResult classify_bytes(std::span<const std::uint8_t> bytes, const ClassifierConfig& config,
                                    std::uint64_t packet_index = 0);

/// As classify_bytes; throws Error(InvalidArgument) for a TLS payload.
ClassificationResult classify(const AppPayload& payload, const ClassifierConfig& config);

enum class Label : std::uint8_t { Cleartext, Encrypted };

const char* to_string(Label label);
std::optional<Label> parse_label(std::string_view name);

struct LabeledPayload {
    std::vector<std::uint8_t> bytes;
    Label label = Label::Cleartext;
    std::string generator_note;
    std::uint64_t seed_record = 0;
};

// Counts for one method. "Positive" means flagged as cleartext.
struct MethodStats {
    std::uint64_t true_positives = 0;
    std::uint64_t false_positives = 0;
    std::uint64_t false_negatives = 0;
    std::uint64_t true_negatives = 0;

    std::uint64_t flagged() const { return true_positives + false_positives; }
    std::uint64_t total() const { return flagged() + false_negatives + true_negatives; }
    /// TP / (TP + FP); nullopt when nothing was flagged.
    std::optional<double> precision() const;
    double fraction_flagged() const;

    void record(bool flagged_cleartext, Label truth);
    MethodStats& operator+=(const MethodStats& other);
    bool operator==(const MethodStats&) const = default;
};

struct MethodReport {
    MethodStats ascii;
    MethodStats entropy;
    MethodStats chi_squared;

    MethodReport& operator+=(const MethodReport& other);
    bool operator==(const MethodReport&) const = default;
};

/// Scores each method's raw verdict against the labels. Throws
/// Error(EmptyCorpus) for an empty corpus.
MethodReport compare_methods(std::span<const LabeledPayload> corpus, const ClassifierConfig& config = {});

} // namespace medleak
