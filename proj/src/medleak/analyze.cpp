#include "medleak/corpus.hpp"
#include "medleak/error.hpp"
#include "medleak/report.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>

namespace medleak {

namespace {

constexpr std::uint16_t dns_port = 53;

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open capture " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

const char* to_string(DeviceStatus status) {
    switch (status) {
    case DeviceStatus::Ok: return "OK";
    case DeviceStatus::Warn: return "WARN";
    case DeviceStatus::Leak: return "LEAK";
    }
    return "";
}

std::optional<DeviceStatus> parse_device_status(std::string_view name) {
    if (name == "OK") return DeviceStatus::Ok;
    if (name == "WARN") return DeviceStatus::Warn;
    if (name == "LEAK") return DeviceStatus::Leak;
    return std::nullopt;
}

DeviceStatus status_of(std::span<const ReportedFinding> findings) {
    if (findings.empty()) return DeviceStatus::Ok;
    const bool high = std::any_of(findings.begin(), findings.end(),
                                  [](const auto& f) { return f.finding.severity == Severity::High; });
    return high ? DeviceStatus::Leak : DeviceStatus::Warn;
}

int AnalysisResult::exit_code() const {
    int code = exit_ok;
    for (const auto& d : devices) {
        if (d.status == DeviceStatus::Leak) return exit_leak;
        if (d.status == DeviceStatus::Warn) code = exit_warn;
    }
    return code;
}

DeviceReport analyze_device(const DeviceStream& stream, std::span<const std::string> capture_names,
                            const RunConfig& config, std::span<const Dictionary> dictionaries) {
    DeviceReport report;
    report.device_id = stream.device_id;
    report.mac = stream.mac;
    report.packet_count = stream.packets.size();

    const auto payloads = extract_payloads(stream);
    report.payload_count = payloads.size();
    report.http_continuations = count_http_continuations(payloads);

    struct Classified {
        bool tls = false;
        Consensus consensus = Consensus::Indeterminate;
        std::optional<HttpMessage> http;
    };
    std::vector<Classified> classified(payloads.size());
    std::vector<DnsAnswer> dns;
    std::vector<std::pair<IpAddress, std::string>> http_hosts;

    for (std::size_t i = 0; i < payloads.size(); ++i) {
        const auto& p = payloads[i];
        auto& c = classified[i];
        c.tls = detect_tls(p).is_tls;
        if (c.tls) {
            ++report.tls_count;
            continue;
        }
        c.consensus = classify(p, config.classifier).consensus;
        switch (c.consensus) {
        case Consensus::Cleartext: ++report.cleartext_count; break;
        case Consensus::Encrypted: ++report.encrypted_count; break;
        case Consensus::Indeterminate: ++report.indeterminate_count; break;
        }
        c.http = parse_http(p);
        if (p.transport_kind == TransportKind::Udp && (p.src_port == dns_port || p.dst_port == dns_port)) {
            auto answers = parse_dns_answers(p.bytes);
            dns.insert(dns.end(), answers.begin(), answers.end());
        }
        if (c.http && c.http->kind == HttpKind::Request && c.http->host && p.remote &&
            p.direction == Direction::Outbound)
            http_hosts.emplace_back(*p.remote, *c.http->host);
    }

    const auto hostnames = collect_hostnames(dns, http_hosts);
    report.endpoints = endpoint_profiles(stream, hostnames, config.leak.vendor_patterns);
    report.activity = activity_periods(stream, config.gap_threshold_s, hostnames);
    report.periodicity = periodicity_hint(report.activity);

    std::vector<IpAddress> vendor_addresses;
    for (const auto& e : report.endpoints)
        if (e.vendor_flag) vendor_addresses.push_back(e.address);
    auto is_vendor = [&](const AppPayload& p) {
        return p.remote &&
               std::find(vendor_addresses.begin(), vendor_addresses.end(), *p.remote) != vendor_addresses.end();
    };

    std::vector<LeakFinding> findings;
    std::vector<TrafficEvent> events;
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        const auto& p = payloads[i];
        const auto& c = classified[i];
        const bool cleartext = !c.tls && c.consensus == Consensus::Cleartext;

        TrafficEvent e;
        e.timestamp_us = p.timestamp_us;
        e.capture = p.capture;
        e.packet_index = p.packet_index;
        e.direction = p.direction;
        e.cleartext = cleartext;
        e.vendor_endpoint = is_vendor(p);
        e.http = c.http;
        e.bytes = p.bytes;
        events.push_back(std::move(e));

        if (!cleartext) continue;
        const Evidence ev{p.capture, p.packet_index, p.bytes};
        auto hits = dictionary_match(ev, tokenize(p.bytes), dictionaries);
        findings.insert(findings.end(), hits.begin(), hits.end());
        if (c.http) {
            auto http_hits = http_leak_scan(ev, *c.http, dictionaries, config.leak);
            findings.insert(findings.end(), http_hits.begin(), http_hits.end());
        }
    }
    auto images = image_get_signature(events, config.leak.image_window_s);
    findings.insert(findings.end(), images.begin(), images.end());

    std::stable_sort(findings.begin(), findings.end(), [](const LeakFinding& a, const LeakFinding& b) {
        return std::tie(a.capture, a.packet_index) < std::tie(b.capture, b.packet_index);
    });
    for (auto& f : findings) {
        const auto name = f.capture < capture_names.size() ? capture_names[f.capture] : std::string{};
        report.findings.push_back({name, std::move(f)});
    }
    report.status = status_of(report.findings);
    return report;
}

AnalysisResult analyze(std::span<const CaptureSource> captures, const RunConfig& config,
                       std::span<const Dictionary> dictionaries) {
    if (captures.empty()) throw Error(ErrorCode::InvalidArgument, "no capture given");
    if (config.registry.empty()) throw Error(ErrorCode::EmptyRegistry, "device registry is empty");
    config.validate();

    std::vector<std::future<Capture>> parsing;
    for (std::size_t i = 0; i < captures.size(); ++i) {
        parsing.push_back(std::async(std::launch::async, [&captures, i] {
            return parse_capture(captures[i].bytes, static_cast<std::uint32_t>(i));
        }));
    }

    AnalysisResult result;
    std::vector<PacketPtr> packets;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < parsing.size(); ++i) {
        auto cap = parsing[i].get();
        names.push_back(captures[i].name);
        for (const auto& w : cap.warnings)
            result.warnings.push_back(captures[i].name + ": frame " + std::to_string(w.frame) + ": " + w.message);
        packets.insert(packets.end(), cap.packets.begin(), cap.packets.end());
    }
    sort_by_time(packets);

    auto split = split_by_device(packets, config.registry);
    result.unattributed_count = split.unattributed.size();
    result.warnings.insert(result.warnings.end(), split.warnings.begin(), split.warnings.end());

    std::vector<std::future<DeviceReport>> devices;
    for (const auto& stream : split.streams) {
        devices.push_back(std::async(std::launch::async, [&, s = &stream] {
            return analyze_device(*s, names, config, dictionaries);
        }));
    }
    for (auto& d : devices) result.devices.push_back(d.get());

    if (config.corpus) {
        std::ifstream in(*config.corpus, std::ios::binary);
        if (!in) throw Error(ErrorCode::Io, "cannot open corpus " + config.corpus->string());
        std::stringstream buf;
        buf << in.rdbuf();
        const auto corpus = corpus_from_jsonl(buf.str());
        result.method_report = compare_methods(corpus, config.classifier);
    }
    return result;
}

AnalysisResult analyze(std::span<const CaptureSource> captures, const RunConfig& config) {
    const auto dictionaries = load_dictionaries(resolve_dict_dir(config));
    return analyze(captures, config, dictionaries);
}

AnalysisResult analyze_files(std::span<const std::filesystem::path> paths, const RunConfig& config) {
    std::vector<CaptureSource> sources;
    for (const auto& p : paths) sources.push_back({p.string(), read_bytes(p)});
    return analyze(sources, config);
}

} // namespace medleak
