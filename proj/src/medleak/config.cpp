#include "medleak/error.hpp"
#include "medleak/report.hpp"
#include "medleak/text.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef MEDLEAK_DEFAULT_DICT_DIR
#define MEDLEAK_DEFAULT_DICT_DIR "data/dictionaries"
#endif

namespace medleak {

namespace {

namespace pt = boost::property_tree;

double parse_positive(std::string_view key, std::string_view value) {
    const std::string s(text::trim(value));
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error(ErrorCode::Config, std::string(key) + ": not a number: '" + s + "'");
    if (!(out > 0.0)) throw Error(ErrorCode::Config, std::string(key) + " must be positive");
    return out;
}

std::vector<std::string> parse_list(std::string_view value) {
    std::vector<std::string> out;
    for (auto item : text::split(value, ',')) {
        item = text::trim(item);
        if (!item.empty()) out.emplace_back(item);
    }
    return out;
}

pt::ptree read_ini(std::string_view content) {
    std::istringstream in{std::string(content)};
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorCode::Config, e.what());
    }
    return tree;
}

void add_devices(Registry& registry, const pt::ptree& section) {
    for (const auto& [key, node] : section) {
        const auto mac = MacAddress::parse(text::trim(key));
        if (!mac) throw Error(ErrorCode::Config, "malformed MAC address in registry: '" + key + "'");
        const auto label = std::string(text::trim(node.data()));
        if (label.empty()) throw Error(ErrorCode::Config, "empty device label for " + key);
        if (!registry.emplace(*mac, label).second)
            throw Error(ErrorCode::Config, "duplicate MAC in registry: " + mac->to_string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

void RunConfig::validate() const {
    if (!(classifier.entropy_threshold > 0) || !(classifier.chi_threshold > 0) || classifier.min_stat_len == 0 ||
        !(gap_threshold_s > 0) || !(leak.image_window_s > 0))
        throw Error(ErrorCode::Config, "all thresholds must be positive");
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
    if (key == "classifier.entropy_threshold") {
        config.classifier.entropy_threshold = parse_positive(key, value);
    } else if (key == "classifier.chi_threshold") {
        config.classifier.chi_threshold = parse_positive(key, value);
    } else if (key == "classifier.min_stat_len") {
        const double v = parse_positive(key, value);
        if (v != static_cast<double>(static_cast<std::size_t>(v)))
            throw Error(ErrorCode::Config, "classifier.min_stat_len must be an integer");
        config.classifier.min_stat_len = static_cast<std::size_t>(v);
    } else if (key == "classifier.decision_method") {
        const auto m = parse_decision_method(text::trim(value));
        if (!m) throw Error(ErrorCode::Config, "unknown decision method '" + std::string(value) + "'");
        config.classifier.method = *m;
    } else if (key == "metadata.gap_threshold") {
        config.gap_threshold_s = parse_positive(key, value);
    } else if (key == "metadata.image_window") {
        config.leak.image_window_s = parse_positive(key, value);
    } else if (key == "leak.dict_dir") {
        config.dict_dir = std::filesystem::path(std::string(text::trim(value)));
    } else if (key == "leak.vendor_patterns") {
        config.leak.vendor_patterns = parse_list(value);
    } else if (key == "leak.identifier_keys") {
        config.leak.identifier_keys = parse_list(value);
    } else if (key == "evaluation.corpus") {
        config.corpus = std::filesystem::path(std::string(text::trim(value)));
    } else {
        throw Error(ErrorCode::Config, "unknown configuration key '" + std::string(key) + "'");
    }
}

void load_config_text(RunConfig& config, std::string_view content) {
    const auto tree = read_ini(content);
    for (const auto& [section, node] : tree) {
        if (section == "devices") {
            add_devices(config.registry, node);
            continue;
        }
        if (!node.data().empty())
            throw Error(ErrorCode::Config, "setting '" + section + "' outside of a section");
        for (const auto& [key, leaf] : node) set_config_value(config, section + "." + key, leaf.data());
    }
    config.validate();
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
    load_config_text(config, read_file(path));
}

Registry parse_registry_text(std::string_view content) {
    const auto tree = read_ini(content);
    Registry registry;
    const auto devices = tree.get_child_optional("devices");
    if (!devices) throw Error(ErrorCode::Config, "registry has no [devices] section");
    add_devices(registry, *devices);
    return registry;
}

Registry load_registry_file(const std::filesystem::path& path) {
    return parse_registry_text(read_file(path));
}

std::string registry_to_text(const Registry& registry) {
    std::string out = "[devices]\n";
    for (const auto& [mac, label] : registry) out += mac.to_string() + " = " + label + "\n";
    return out;
}

std::filesystem::path resolve_dict_dir(const RunConfig& config) {
    if (config.dict_dir) return *config.dict_dir;
    if (const char* env = std::getenv("MEDLEAK_DICT_DIR"); env && *env) return env;
    return MEDLEAK_DEFAULT_DICT_DIR;
}

} // namespace medleak
