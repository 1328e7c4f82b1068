#include "medleak/classify.hpp"

#include "medleak/error.hpp"

#include <algorithm>
#include <cmath>

namespace medleak {

namespace {

void require_non_empty(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw Error(ErrorCode::EmptyPayload, "payload is empty");
}

} // namespace

ByteHistogram histogram(std::span<const std::uint8_t> bytes) {
    require_non_empty(bytes);
    ByteHistogram h;
    for (auto b : bytes) ++h.counts[b];
    h.total = bytes.size();
    return h;
}

bool classify_ascii(std::span<const std::uint8_t> bytes) {
    require_non_empty(bytes);
    return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b < 0x80; });
}

double shannon_entropy(const ByteHistogram& hist) {
    double h = 0.0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        if (hist.counts[i] == 0) continue;
        const double p = hist.probability(i);
        h -= p * std::log2(p);
    }
    return std::clamp(h, 0.0, 8.0);
}

double shannon_entropy(std::span<const std::uint8_t> bytes) {
    return shannon_entropy(histogram(bytes));
}

double chi_squared(const ByteHistogram& hist) {
    const double expected = hist.expected_uniform();
    double chi = 0.0;
    for (auto observed : hist.counts) {
        const double d = static_cast<double>(observed) - expected;
        chi += d * d / expected;
    }
    return chi;
}

double chi_squared(std::span<const std::uint8_t> bytes) {
    return chi_squared(histogram(bytes));
}

bool classify_entropy(std::span<const std::uint8_t> bytes, double threshold) {
    return shannon_entropy(bytes) < threshold;
}

bool classify_chi(std::span<const std::uint8_t> bytes, double threshold) {
    return chi_squared(bytes) > threshold;
}

const char* to_string(DecisionMethod method) {
    switch (method) {
    case DecisionMethod::Ascii: return "ascii";
    case DecisionMethod::Entropy: return "entropy";
    case DecisionMethod::ChiSquared: return "chi";
    case DecisionMethod::Majority: return "majority";
    }
    return "";
}

std::optional<DecisionMethod> parse_decision_method(std::string_view name) {
    if (name == "ascii") return DecisionMethod::Ascii;
    if (name == "entropy") return DecisionMethod::Entropy;
    if (name == "chi" || name == "chi-squared") return DecisionMethod::ChiSquared;
    if (name == "majority") return DecisionMethod::Majority;
    return std::nullopt;
}

const char* to_string(Consensus consensus) {
    switch (consensus) {
    case Consensus::Cleartext: return "cleartext";
    case Consensus::Encrypted: return "encrypted";
    case Consensus::Indeterminate: return "indeterminate";
    }
    return "";
}

ClassificationResult classify_bytes(std::span<const std::uint8_t> bytes, const ClassifierConfig& config,
                                    std::uint64_t packet_index) {
    const auto hist = histogram(bytes);
    ClassificationResult r;
    r.packet_index = packet_index;
    r.length = bytes.size();
    r.ascii_verdict = std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b < 0x80; });
    r.entropy_bits = shannon_entropy(hist);
    r.entropy_verdict = r.entropy_bits < config.entropy_threshold;
    r.chi_squared = chi_squared(hist);
    r.chi_verdict = r.chi_squared > config.chi_threshold;

    if (bytes.size() < config.min_stat_len) {
        r.short_payload = true;
        r.consensus = r.ascii_verdict ? Consensus::Cleartext : Consensus::Indeterminate;
        return r;
    }

    bool vote = false;
    switch (config.method) {
    case DecisionMethod::Ascii: vote = r.ascii_verdict; break;
    case DecisionMethod::Entropy: vote = r.entropy_verdict; break;
    case DecisionMethod::ChiSquared: vote = r.chi_verdict; break;
    case DecisionMethod::Majority:
        vote = int{r.ascii_verdict} + int{r.entropy_verdict} + int{r.chi_verdict} >= 2;
        break;
    }
    r.consensus = vote ? Consensus::Cleartext : Consensus::Encrypted;
    return r;
}

ClassificationResult classify(const AppPayload& payload, const ClassifierConfig& config) {
    if (detect_tls(payload).is_tls)
        throw Error(ErrorCode::InvalidArgument,
                    "packet " + std::to_string(payload.packet_index) + " is TLS; refusing to classify");
    return classify_bytes(payload.bytes, config, payload.packet_index);
}

const char* to_string(Label label) {
    return label == Label::Cleartext ? "cleartext" : "encrypted";
}

std::optional<Label> parse_label(std::string_view name) {
    if (name == "cleartext") return Label::Cleartext;
    if (name == "encrypted") return Label::Encrypted;
    return std::nullopt;
}

std::optional<double> MethodStats::precision() const {
    if (flagged() == 0) return std::nullopt;
    return static_cast<double>(true_positives) / static_cast<double>(flagged());
}

double MethodStats::fraction_flagged() const {
    return total() == 0 ? 0.0 : static_cast<double>(flagged()) / static_cast<double>(total());
}

void MethodStats::record(bool flagged_cleartext, Label truth) {
    const bool is_clear = truth == Label::Cleartext;
    if (flagged_cleartext)
        ++(is_clear ? true_positives : false_positives);
    else
        ++(is_clear ? false_negatives : true_negatives);
}

MethodStats& MethodStats::operator+=(const MethodStats& o) {
    true_positives += o.true_positives;
    false_positives += o.false_positives;
    false_negatives += o.false_negatives;
    true_negatives += o.true_negatives;
    return *this;
}

MethodReport& MethodReport::operator+=(const MethodReport& o) {
    ascii += o.ascii;
    entropy += o.entropy;
    chi_squared += o.chi_squared;
    return *this;
}

MethodReport compare_methods(std::span<const LabeledPayload> corpus, const ClassifierConfig& config) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus is empty");
    MethodReport report;
    for (const auto& item : corpus) {
        const auto r = classify_bytes(item.bytes, config);
        report.ascii.record(r.ascii_verdict, item.label);
        report.entropy.record(r.entropy_verdict, item.label);
        report.chi_squared.record(r.chi_verdict, item.label);
    }
    return report;
}

} // namespace medleak
