// medleak command line front end over the C API.
#include "medleak.h"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Failure {
    int code;
};

void check(medleak_status status, const std::string& what) {
    if (status == MEDLEAK_OK) return;
    std::cerr << "medleak: " << what << ": " << medleak_status_string(status);
    if (*medleak_last_error()) std::cerr << ": " << medleak_last_error();
    std::cerr << "\n";
    throw Failure{MEDLEAK_EXIT_ERROR};
}

struct Buffer {
    void* data = nullptr;
    size_t length = 0;
    ~Buffer() { medleak_buffer_free(data); }
    std::string_view view() const { return {static_cast<const char*>(data), length}; }
};

void write_output(const std::optional<std::string>& path, std::string_view content) {
    if (!path) {
        std::cout << content;
        if (!content.empty() && content.back() != '\n') std::cout << '\n';
        std::cout.flush();
        return;
    }
    std::ofstream out(*path, std::ios::binary);
    if (!out) {
        std::cerr << "medleak: cannot write " << *path << "\n";
        throw Failure{MEDLEAK_EXIT_ERROR};
    }
    out << content;
    if (!out) {
        std::cerr << "medleak: write failed for " << *path << "\n";
        throw Failure{MEDLEAK_EXIT_ERROR};
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "medleak: cannot open " << path << "\n";
        throw Failure{MEDLEAK_EXIT_ERROR};
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

medleak_format format_of(const std::string& name) {
    return name == "text" ? MEDLEAK_FORMAT_TEXT : MEDLEAK_FORMAT_JSON;
}

struct ClassifierFlags {
    std::optional<std::string> entropy_threshold;
    std::optional<std::string> chi_threshold;
    std::optional<std::string> min_stat_len;
    std::optional<std::string> decision_method;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--entropy-threshold", entropy_threshold, "Entropy below this is cleartext (bits/byte)");
        cmd->add_option("--chi-threshold", chi_threshold, "Chi-squared above this is cleartext");
        cmd->add_option("--min-stat-len", min_stat_len, "Shortest payload the statistical tests judge");
        cmd->add_option("--decision-method", decision_method, "ascii, entropy, chi or majority");
    }

    void apply(medleak_config* cfg) const {
        auto set = [&](const char* key, const std::optional<std::string>& v) {
            if (v) check(medleak_config_set(cfg, key, v->c_str()), key);
        };
        set("classifier.entropy_threshold", entropy_threshold);
        set("classifier.chi_threshold", chi_threshold);
        set("classifier.min_stat_len", min_stat_len);
        set("classifier.decision_method", decision_method);
    }
};

using ConfigPtr = std::unique_ptr<medleak_config, decltype(&medleak_config_destroy)>;

ConfigPtr make_config() {
    medleak_config* raw = nullptr;
    check(medleak_config_create(&raw), "config");
    return {raw, &medleak_config_destroy};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"medleak: find cleartext health data leaks in medical IoT captures"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(medleak_version()));

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Analyze captures and report per-device findings");
    std::vector<std::string> captures;
    std::optional<std::string> registry, config_path, dict_dir, out_path, gap, image_window, corpus;
    std::string format = "json";
    ClassifierFlags analyze_flags;
    analyze->add_option("--capture", captures, "Capture file (classic pcap); repeatable")->required();
    analyze->add_option("--registry", registry, "Device registry ([devices] mac = label)");
    analyze->add_option("--config", config_path, "Configuration file");
    analyze->add_option("--dict-dir", dict_dir, "Dictionary directory (else $MEDLEAK_DICT_DIR)");
    analyze->add_option("--format", format, "json or text")->check(CLI::IsMember({"json", "text"}));
    analyze->add_option("--out", out_path, "Write the report here instead of stdout");
    analyze->add_option("--gap-threshold", gap, "Seconds of silence that end an activity period");
    analyze->add_option("--image-window", image_window, "Seconds before an image GET to look for traffic");
    analyze->add_option("--corpus", corpus, "Labeled corpus (JSONL) for a method comparison");
    analyze_flags.add_to(analyze);

    // gen-corpus
    auto* gen_corpus = app.add_subcommand("gen-corpus", "Write a labeled cleartext/encrypted corpus");
    std::uint64_t seed = 1;
    std::string corpus_dir;
    size_t n_clear = 5000, n_enc = 5000, min_len = 64, max_len = 2048;
    gen_corpus->add_option("--seed", seed, "Generator seed")->required();
    gen_corpus->add_option("--out", corpus_dir, "Output directory (corpus.jsonl is written inside)")->required();
    gen_corpus->add_option("--cleartext", n_clear, "Number of cleartext payloads");
    gen_corpus->add_option("--encrypted", n_enc, "Number of encrypted payloads");
    gen_corpus->add_option("--min-length", min_len, "Shortest payload length");
    gen_corpus->add_option("--max-length", max_len, "Longest payload length");

    // gen-fixture
    auto* gen_fixture = app.add_subcommand("gen-fixture", "Write a synthetic capture for a scenario");
    std::string scenario, fixture_out;
    std::optional<std::string> registry_out;
    gen_fixture->add_option("scenario", scenario, "bp-monitor-leaky, scale-encrypted or mixed-home")->required();
    gen_fixture->add_option("--out", fixture_out, "Output pcap")->required();
    gen_fixture->add_option("--registry-out", registry_out, "Also write the scenario's device registry");

    // compare
    auto* compare = app.add_subcommand("compare", "Compare the classifiers on a labeled corpus");
    std::string compare_corpus, compare_format = "text";
    std::optional<std::string> compare_config;
    ClassifierFlags compare_flags;
    compare->add_option("--corpus", compare_corpus, "Labeled corpus (JSONL)")->required();
    compare->add_option("--config", compare_config, "Configuration file");
    compare->add_option("--format", compare_format, "json or text")->check(CLI::IsMember({"json", "text"}));
    compare_flags.add_to(compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : MEDLEAK_EXIT_ERROR;
    }

    try {
        if (*analyze) {
            auto cfg = make_config();
            if (config_path) check(medleak_config_load(cfg.get(), config_path->c_str()), *config_path);
            if (registry) check(medleak_config_load_registry(cfg.get(), registry->c_str()), *registry);
            analyze_flags.apply(cfg.get());
            if (dict_dir) check(medleak_config_set(cfg.get(), "leak.dict_dir", dict_dir->c_str()), "--dict-dir");
            if (gap) check(medleak_config_set(cfg.get(), "metadata.gap_threshold", gap->c_str()), "--gap-threshold");
            if (image_window)
                check(medleak_config_set(cfg.get(), "metadata.image_window", image_window->c_str()),
                      "--image-window");
            if (corpus) check(medleak_config_set(cfg.get(), "evaluation.corpus", corpus->c_str()), "--corpus");

            std::vector<const char*> paths;
            for (const auto& c : captures) paths.push_back(c.c_str());
            medleak_result* raw = nullptr;
            check(medleak_analyze_files(cfg.get(), paths.data(), paths.size(), &raw), "analyze");
            std::unique_ptr<medleak_result, decltype(&medleak_result_destroy)> result(raw, &medleak_result_destroy);

            for (size_t i = 0; i < medleak_result_warning_count(result.get()); ++i)
                std::cerr << "warning: " << medleak_result_warning(result.get(), i) << "\n";
            if (const auto n = medleak_result_unattributed(result.get()); n > 0)
                std::cerr << "note: " << n << " packets matched no registered device\n";

            Buffer report;
            check(medleak_result_render(result.get(), format_of(format), reinterpret_cast<char**>(&report.data),
                                        &report.length),
                  "render");
            write_output(out_path, report.view());
            return medleak_result_exit_code(result.get());
        }

        if (*gen_corpus) {
            Buffer jsonl;
            check(medleak_generate_corpus(seed, n_clear, n_enc, min_len, max_len,
                                          reinterpret_cast<char**>(&jsonl.data), &jsonl.length),
                  "gen-corpus");
            std::error_code ec;
            std::filesystem::create_directories(corpus_dir, ec);
            if (ec) {
                std::cerr << "medleak: cannot create " << corpus_dir << ": " << ec.message() << "\n";
                return MEDLEAK_EXIT_ERROR;
            }
            const auto path = (std::filesystem::path(corpus_dir) / "corpus.jsonl").string();
            write_output(path, jsonl.view());
            std::cerr << "wrote " << n_clear + n_enc << " payloads to " << path << "\n";
            return MEDLEAK_EXIT_OK;
        }

        if (*gen_fixture) {
            Buffer pcap;
            check(medleak_generate_fixture(scenario.c_str(), reinterpret_cast<uint8_t**>(&pcap.data), &pcap.length),
                  "gen-fixture");
            write_output(fixture_out, pcap.view());
            if (registry_out) {
                Buffer reg;
                check(medleak_fixture_registry(scenario.c_str(), reinterpret_cast<char**>(&reg.data), &reg.length),
                      "gen-fixture");
                write_output(*registry_out, reg.view());
            }
            return MEDLEAK_EXIT_OK;
        }

        if (*compare) {
            auto cfg = make_config();
            if (compare_config) check(medleak_config_load(cfg.get(), compare_config->c_str()), *compare_config);
            compare_flags.apply(cfg.get());
            const auto text = read_file(compare_corpus);
            Buffer report;
            check(medleak_compare_corpus(cfg.get(), text.data(), text.size(), format_of(compare_format),
                                         reinterpret_cast<char**>(&report.data), &report.length),
                  "compare");
            write_output(std::nullopt, report.view());
            return MEDLEAK_EXIT_OK;
        }
    } catch (const Failure& f) {
        return f.code;
    }
    return MEDLEAK_EXIT_ERROR;
}
