#include "medleak.h"

#include "medleak/corpus.hpp"
#include "medleak/error.hpp"
#include "medleak/report.hpp"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

struct medleak_config {
    medleak::RunConfig config;
};

struct medleak_result {
    medleak::AnalysisResult result;
};

namespace {

thread_local std::string last_error;

medleak_status status_of(medleak::ErrorCode code) {
    using medleak::ErrorCode;
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::EmptyPayload: return MEDLEAK_ERR_INVALID_ARGUMENT;
    case ErrorCode::Io: return MEDLEAK_ERR_IO;
    case ErrorCode::MalformedCapture: return MEDLEAK_ERR_MALFORMED_CAPTURE;
    case ErrorCode::Config: return MEDLEAK_ERR_CONFIG;
    case ErrorCode::EmptyRegistry: return MEDLEAK_ERR_EMPTY_REGISTRY;
    case ErrorCode::Dictionary: return MEDLEAK_ERR_DICTIONARY;
    case ErrorCode::UnknownScenario: return MEDLEAK_ERR_UNKNOWN_SCENARIO;
    case ErrorCode::EmptyCorpus:
    case ErrorCode::InvalidCorpusSpec: return MEDLEAK_ERR_CORPUS;
    }
    return MEDLEAK_ERR_INTERNAL;
}

medleak_status fail(medleak_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

template <class F>
medleak_status guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return MEDLEAK_OK;
    } catch (const medleak::Error& e) {
        return fail(status_of(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(MEDLEAK_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(MEDLEAK_ERR_INTERNAL, e.what());
    }
}

void copy_out(const std::string& s, char** out, std::size_t* length) {
    auto* buf = static_cast<char*>(std::malloc(s.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, s.data(), s.size());
    buf[s.size()] = '\0';
    *out = buf;
    if (length) *length = s.size();
}

void copy_out(const std::vector<std::uint8_t>& v, std::uint8_t** out, std::size_t* length) {
    auto* buf = static_cast<std::uint8_t*>(std::malloc(v.empty() ? 1 : v.size()));
    if (!buf) throw std::bad_alloc();
    if (!v.empty()) std::memcpy(buf, v.data(), v.size());
    *out = buf;
    *length = v.size();
}

medleak::Format to_format(medleak_format f) {
    switch (f) {
    case MEDLEAK_FORMAT_JSON: return medleak::Format::Json;
    case MEDLEAK_FORMAT_TEXT: return medleak::Format::Text;
    }
    throw medleak::Error(medleak::ErrorCode::InvalidArgument, "unknown output format");
}

#define MEDLEAK_REQUIRE(cond)                                                                                  \
    do {                                                                                                       \
        if (!(cond)) return fail(MEDLEAK_ERR_INVALID_ARGUMENT, "invalid argument: " #cond);                   \
    } while (0)

} // namespace

extern "C" {

const char* medleak_version(void) { return "0.1.0"; }

const char* medleak_status_string(medleak_status status) {
    switch (status) {
    case MEDLEAK_OK: return "ok";
    case MEDLEAK_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MEDLEAK_ERR_IO: return "i/o error";
    case MEDLEAK_ERR_MALFORMED_CAPTURE: return "malformed capture";
    case MEDLEAK_ERR_CONFIG: return "configuration error";
    case MEDLEAK_ERR_EMPTY_REGISTRY: return "empty device registry";
    case MEDLEAK_ERR_DICTIONARY: return "dictionary error";
    case MEDLEAK_ERR_UNKNOWN_SCENARIO: return "unknown scenario";
    case MEDLEAK_ERR_CORPUS: return "corpus error";
    case MEDLEAK_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* medleak_last_error(void) { return last_error.c_str(); }

void medleak_buffer_free(void* buffer) { std::free(buffer); }

medleak_status medleak_config_create(medleak_config** out) {
    MEDLEAK_REQUIRE(out);
    return guarded([&] { *out = new medleak_config{}; });
}

void medleak_config_destroy(medleak_config* config) { delete config; }

medleak_status medleak_config_load(medleak_config* config, const char* path) {
    MEDLEAK_REQUIRE(config && path);
    return guarded([&] { medleak::load_config_file(config->config, path); });
}

medleak_status medleak_config_load_registry(medleak_config* config, const char* path) {
    MEDLEAK_REQUIRE(config && path);
    return guarded([&] {
        auto registry = medleak::load_registry_file(path);
        for (const auto& [mac, label] : registry) {
            if (!config->config.registry.emplace(mac, label).second)
                throw medleak::Error(medleak::ErrorCode::Config, "duplicate MAC in registry: " + mac.to_string());
        }
    });
}

medleak_status medleak_config_set(medleak_config* config, const char* key, const char* value) {
    MEDLEAK_REQUIRE(config && key && value);
    return guarded([&] {
        medleak::set_config_value(config->config, key, value);
        config->config.validate();
    });
}

medleak_status medleak_config_add_device(medleak_config* config, const char* mac, const char* label) {
    MEDLEAK_REQUIRE(config && mac && label && *label);
    return guarded([&] {
        const auto parsed = medleak::MacAddress::parse(mac);
        if (!parsed) throw medleak::Error(medleak::ErrorCode::Config, std::string("malformed MAC address: ") + mac);
        if (!config->config.registry.emplace(*parsed, label).second)
            throw medleak::Error(medleak::ErrorCode::Config, "duplicate MAC in registry: " + parsed->to_string());
    });
}

medleak_status medleak_analyze_files(const medleak_config* config, const char* const* paths, size_t count,
                                     medleak_result** out) {
    MEDLEAK_REQUIRE(config && out && (paths || count == 0));
    return guarded([&] {
        std::vector<std::filesystem::path> files;
        for (size_t i = 0; i < count; ++i) {
            if (!paths[i]) throw medleak::Error(medleak::ErrorCode::InvalidArgument, "null capture path");
            files.emplace_back(paths[i]);
        }
        auto r = std::make_unique<medleak_result>();
        r->result = medleak::analyze_files(files, config->config);
        *out = r.release();
    });
}

medleak_status medleak_analyze_memory(const medleak_config* config, const uint8_t* const* captures,
                                      const size_t* lengths, const char* const* names, size_t count,
                                      medleak_result** out) {
    MEDLEAK_REQUIRE(config && out && ((captures && lengths) || count == 0));
    return guarded([&] {
        std::vector<medleak::CaptureSource> sources;
        for (size_t i = 0; i < count; ++i) {
            if (!captures[i] && lengths[i] != 0)
                throw medleak::Error(medleak::ErrorCode::InvalidArgument, "null capture buffer");
            medleak::CaptureSource s;
            s.name = names && names[i] ? names[i] : "capture-" + std::to_string(i);
            if (lengths[i] != 0) s.bytes.assign(captures[i], captures[i] + lengths[i]);
            sources.push_back(std::move(s));
        }
        auto r = std::make_unique<medleak_result>();
        r->result = medleak::analyze(sources, config->config);
        *out = r.release();
    });
}

void medleak_result_destroy(medleak_result* result) { delete result; }

int medleak_result_exit_code(const medleak_result* result) {
    return result ? result->result.exit_code() : MEDLEAK_EXIT_ERROR;
}

uint64_t medleak_result_unattributed(const medleak_result* result) {
    return result ? result->result.unattributed_count : 0;
}

size_t medleak_result_warning_count(const medleak_result* result) {
    return result ? result->result.warnings.size() : 0;
}

const char* medleak_result_warning(const medleak_result* result, size_t index) {
    if (!result || index >= result->result.warnings.size()) return nullptr;
    return result->result.warnings[index].c_str();
}

medleak_status medleak_result_render(const medleak_result* result, medleak_format format, char** out,
                                     size_t* length) {
    MEDLEAK_REQUIRE(result && out);
    return guarded([&] { copy_out(medleak::render(result->result, to_format(format)), out, length); });
}

medleak_status medleak_generate_fixture(const char* scenario, uint8_t** out, size_t* length) {
    MEDLEAK_REQUIRE(scenario && out && length);
    return guarded([&] { copy_out(medleak::build_fixture_capture(scenario), out, length); });
}

medleak_status medleak_fixture_registry(const char* scenario, char** out, size_t* length) {
    MEDLEAK_REQUIRE(scenario && out);
    return guarded([&] {
        const auto s = medleak::parse_scenario(scenario);
        if (!s) throw medleak::Error(medleak::ErrorCode::UnknownScenario, std::string("unknown scenario: ") + scenario);
        copy_out(medleak::registry_to_text(medleak::fixture_registry(*s)), out, length);
    });
}

medleak_status medleak_generate_corpus(uint64_t seed, size_t n_cleartext, size_t n_encrypted, size_t min_length,
                                       size_t max_length, char** out, size_t* length) {
    MEDLEAK_REQUIRE(out);
    return guarded([&] {
        const medleak::CorpusSpec spec{n_cleartext, n_encrypted, min_length, max_length, seed};
        copy_out(medleak::corpus_to_jsonl(medleak::generate_corpus(spec)), out, length);
    });
}

medleak_status medleak_compare_corpus(const medleak_config* config, const char* jsonl, size_t jsonl_length,
                                      medleak_format format, char** out, size_t* length) {
    MEDLEAK_REQUIRE(config && (jsonl || jsonl_length == 0) && out);
    return guarded([&] {
        const auto corpus = medleak::corpus_from_jsonl(std::string_view(jsonl ? jsonl : "", jsonl_length));
        const auto report = medleak::compare_methods(corpus, config->config.classifier);
        copy_out(to_format(format) == medleak::Format::Json ? medleak::render_method_report_json(report)
                                                             : medleak::render_method_report_text(report),
                 out, length);
    });
}

double medleak_shannon_entropy(const uint8_t* bytes, size_t length) {
    if (!bytes || length == 0) return 0.0;
    return medleak::shannon_entropy(std::span<const std::uint8_t>(bytes, length));
}

double medleak_chi_squared(const uint8_t* bytes, size_t length) {
    if (!bytes || length == 0) return 0.0;
    return medleak::chi_squared(std::span<const std::uint8_t>(bytes, length));
}

} // extern "C"
