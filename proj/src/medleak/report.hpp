#pragma once

#include "medleak/capture.hpp"
#include "medleak/classify.hpp"
#include "medleak/leak.hpp"
#include "medleak/metadata.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace medleak {

inline constexpr int report_schema_version = 1;

struct RunConfig {
    ClassifierConfig classifier;
    double gap_threshold_s = default_gap_threshold_s;
    LeakConfig leak;
    std::optional<std::filesystem::path> dict_dir;
    std::optional<std::filesystem::path> corpus; // labeled JSONL for a method comparison
    Registry registry;

    /// Throws Error(Config) for non-positive thresholds.
    void validate() const;
};

/// Applies one `section.key` setting, e.g. "classifier.chi_threshold".
/// Throws Error(Config) for unknown keys or unparsable values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// INI-style file: [classifier], [metadata], [leak], [evaluation] and an
/// optional [devices] section of `mac = label` lines.
void load_config_file(RunConfig& config, const std::filesystem::path& path);
void load_config_text(RunConfig& config, std::string_view text);

/// Device registry file: a [devices] section of `mac = label` lines.
Registry load_registry_file(const std::filesystem::path& path);
Registry parse_registry_text(std::string_view text);
std::string registry_to_text(const Registry& registry);

/// --dict-dir / config value, then $MEDLEAK_DICT_DIR, then the built-in path.
std::filesystem::path resolve_dict_dir(const RunConfig& config);

enum class DeviceStatus : std::uint8_t { Ok, Warn, Leak };

const char* to_string(DeviceStatus status);
std::optional<DeviceStatus> parse_device_status(std::string_view name);

struct ReportedFinding {
    std::string capture; // capture name as given on input
    LeakFinding finding;

    bool operator==(const ReportedFinding&) const = default;
};

struct DeviceReport {
    std::string device_id;
    MacAddress mac;
    std::uint64_t packet_count = 0;
    std::uint64_t payload_count = 0;
    std::uint64_t cleartext_count = 0;
    std::uint64_t encrypted_count = 0;
    std::uint64_t indeterminate_count = 0;
    std::uint64_t tls_count = 0;
    std::uint64_t http_continuations = 0;
    std::vector<ReportedFinding> findings; // ordered by capture, then packet index
    std::vector<ActivityPeriod> activity;
    std::vector<EndpointProfile> endpoints;
    std::optional<Periodicity> periodicity;
    DeviceStatus status = DeviceStatus::Ok;

    bool operator==(const DeviceReport&) const = default;
};

/// LEAK if any high-severity finding, WARN if any finding, else OK.
DeviceStatus status_of(std::span<const ReportedFinding> findings);

struct CaptureSource {
    std::string name;
    std::vector<std::uint8_t> bytes;
};

struct AnalysisResult {
    std::vector<DeviceReport> devices; // ordered by MAC
    std::optional<MethodReport> method_report;
    std::uint64_t unattributed_count = 0;
    std::vector<std::string> warnings;

    /// 0 all OK, 1 warnings only, 2 any leak.
    int exit_code() const;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_warn = 1;
inline constexpr int exit_leak = 2;
inline constexpr int exit_error = 3;

/// Runs ingest, payload extraction, classification, leak detection and
/// metadata analysis for every registered device. Throws Error(EmptyRegistry)
/// with no devices, Error(InvalidArgument) with no captures.
AnalysisResult analyze(std::span<const CaptureSource> captures, const RunConfig& config);
AnalysisResult analyze(std::span<const CaptureSource> captures, const RunConfig& config,
                       std::span<const Dictionary> dictionaries);
AnalysisResult analyze_files(std::span<const std::filesystem::path> paths, const RunConfig& config);

/// Per-device pipeline over one stream; captures names index `capture`.
DeviceReport analyze_device(const DeviceStream& stream, std::span<const std::string> capture_names,
                            const RunConfig& config, std::span<const Dictionary> dictionaries);

enum class Format : std::uint8_t { Json, Text };

std::optional<Format> parse_format(std::string_view name);

std::string render_json(std::span<const DeviceReport> devices,
                        const std::optional<MethodReport>& method_report = std::nullopt);
std::string render_text(std::span<const DeviceReport> devices,
                        const std::optional<MethodReport>& method_report = std::nullopt);
std::string render(const AnalysisResult& result, Format format);

std::string render_method_report_json(const MethodReport& report);
std::string render_method_report_text(const MethodReport& report);

struct ParsedReport {
    std::vector<DeviceReport> devices;
    std::optional<MethodReport> method_report;
};

/// Inverse of render_json. Throws Error(InvalidArgument) on schema mismatch.
ParsedReport parse_report_json(std::string_view json);

} // namespace medleak
