#include "medleak/error.hpp"
#include "medleak/report.hpp"

#include "json.hpp"

#include <cstdio>
#include <sstream>

namespace medleak {

namespace {

using ojson = nlohmann::ordered_json;

std::string dump(const ojson& j) {
    return j.dump(-1, ' ', false, ojson::error_handler_t::replace);
}

ojson optional_string(const std::optional<std::string>& s) {
    return s ? ojson(*s) : ojson(nullptr);
}

ojson to_json(const ReportedFinding& rf) {
    const auto& f = rf.finding;
    ojson j;
    j["capture"] = rf.capture;
    j["packet_index"] = f.packet_index;
    j["category"] = to_string(f.category);
    j["severity"] = to_string(f.severity);
    j["matched_text"] = f.matched_text;
    j["term"] = f.term;
    j["context"] = f.context;
    return j;
}

ojson to_json(const ActivityPeriod& p) {
    ojson endpoints = ojson::array();
    for (const auto& e : p.endpoints)
        endpoints.push_back({{"address", e.address.to_string()}, {"hostname", optional_string(e.hostname)}});
    ojson j;
    j["start_us"] = p.start_us;
    j["end_us"] = p.end_us;
    j["packet_count"] = p.packet_count;
    j["bytes_total"] = p.bytes_total;
    j["endpoints"] = std::move(endpoints);
    return j;
}

ojson to_json(const EndpointProfile& e) {
    ojson j;
    j["address"] = e.address.to_string();
    j["hostname"] = optional_string(e.hostname);
    j["packet_count"] = e.packet_count;
    j["vendor_flag"] = e.vendor_flag;
    return j;
}

ojson to_json(const DeviceReport& d) {
    ojson j;
    j["device_id"] = d.device_id;
    j["mac"] = d.mac.to_string();
    j["status"] = to_string(d.status);
    j["packet_count"] = d.packet_count;
    j["payload_count"] = d.payload_count;
    j["cleartext_count"] = d.cleartext_count;
    j["encrypted_count"] = d.encrypted_count;
    j["indeterminate_count"] = d.indeterminate_count;
    j["tls_count"] = d.tls_count;
    j["http_continuations"] = d.http_continuations;
    j["findings"] = ojson::array();
    for (const auto& f : d.findings) j["findings"].push_back(to_json(f));
    j["activity"] = ojson::array();
    for (const auto& p : d.activity) j["activity"].push_back(to_json(p));
    j["endpoints"] = ojson::array();
    for (const auto& e : d.endpoints) j["endpoints"].push_back(to_json(e));
    if (d.periodicity)
        j["periodicity"] = {{"median_interval_s", d.periodicity->median_interval_s},
                            {"dispersion_s", d.periodicity->dispersion_s}};
    else
        j["periodicity"] = nullptr;
    return j;
}

ojson to_json(const char* name, const MethodStats& s) {
    ojson j;
    j["method"] = name;
    const auto precision = s.precision();
    j["precision"] = precision ? ojson(*precision) : ojson(nullptr);
    j["fraction_flagged_cleartext"] = s.fraction_flagged();
    j["true_positives"] = s.true_positives;
    j["false_positives"] = s.false_positives;
    j["false_negatives"] = s.false_negatives;
    j["true_negatives"] = s.true_negatives;
    return j;
}

ojson to_json(const MethodReport& r) {
    ojson j;
    j["corpus_size"] = r.ascii.total();
    j["methods"] = ojson::array({to_json("ascii", r.ascii), to_json("entropy", r.entropy),
                                 to_json("chi", r.chi_squared)});
    return j;
}

[[noreturn]] void schema_error(const std::string& why) {
    throw Error(ErrorCode::InvalidArgument, "report does not match schema: " + why);
}

IpAddress address_from(const nlohmann::json& j) {
    const auto a = IpAddress::parse(j.get<std::string>());
    if (!a) schema_error("bad address");
    return *a;
}

std::optional<std::string> optional_from(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<std::string>();
}

MethodStats stats_from(const nlohmann::json& j) {
    MethodStats s;
    s.true_positives = j.at("true_positives").get<std::uint64_t>();
    s.false_positives = j.at("false_positives").get<std::uint64_t>();
    s.false_negatives = j.at("false_negatives").get<std::uint64_t>();
    s.true_negatives = j.at("true_negatives").get<std::uint64_t>();
    return s;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string format_double(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

} // namespace

std::optional<Format> parse_format(std::string_view name) {
    if (name == "json") return Format::Json;
    if (name == "text") return Format::Text;
    return std::nullopt;
}

std::string render_json(std::span<const DeviceReport> devices, const std::optional<MethodReport>& method_report) {
    ojson root;
    root["schema"] = report_schema_version;
    root["devices"] = ojson::array();
    for (const auto& d : devices) root["devices"].push_back(to_json(d));
    if (method_report) root["method_report"] = to_json(*method_report);
    return dump(root);
}

std::string render_method_report_json(const MethodReport& report) {
    ojson root;
    root["schema"] = report_schema_version;
    root["method_report"] = to_json(report);
    return dump(root);
}

std::string render_method_report_text(const MethodReport& report) {
    std::ostringstream out;
    out << pad("METHOD", 10) << pad("PRECISION", 11) << pad("% CLEARTEXT", 13) << pad("TP", 8)
        << pad("FP", 8) << "FN\n";
    auto row = [&](const char* name, const MethodStats& s) {
        const auto p = s.precision();
        out << pad(name, 10) << pad(p ? format_double(*p, "%.4f") : "n/a", 11)
            << pad(format_double(100.0 * s.fraction_flagged(), "%.2f"), 13)
            << pad(std::to_string(s.true_positives), 8) << pad(std::to_string(s.false_positives), 8)
            << s.false_negatives << "\n";
    };
    row("ascii", report.ascii);
    row("entropy", report.entropy);
    row("chi", report.chi_squared);
    return out.str();
}

std::string render_text(std::span<const DeviceReport> devices, const std::optional<MethodReport>& method_report) {
    std::ostringstream out;
    out << pad("DEVICE", 22) << pad("MAC", 19) << pad("STATUS", 8) << pad("PACKETS", 9) << pad("PAYLOADS", 10)
        << pad("CLEAR", 7) << pad("ENC", 6) << pad("INDET", 7) << pad("TLS", 6) << "FINDINGS\n";
    for (const auto& d : devices) {
        out << pad(d.device_id, 22) << pad(d.mac.to_string(), 19) << pad(to_string(d.status), 8)
            << pad(std::to_string(d.packet_count), 9) << pad(std::to_string(d.payload_count), 10)
            << pad(std::to_string(d.cleartext_count), 7) << pad(std::to_string(d.encrypted_count), 6)
            << pad(std::to_string(d.indeterminate_count), 7) << pad(std::to_string(d.tls_count), 6)
            << d.findings.size() << "\n";
    }
    for (const auto& d : devices) {
        if (d.findings.empty() && d.activity.empty()) continue;
        out << "\n" << d.device_id << " (" << d.mac.to_string() << ")\n";
        for (const auto& rf : d.findings) {
            const auto& f = rf.finding;
            out << "  [" << to_string(f.severity) << "] " << pad(to_string(f.category), 20) << " "
                << rf.capture << "#" << f.packet_index << "  " << f.matched_text << "\n";
        }
        out << "  activity periods: " << d.activity.size();
        if (d.periodicity)
            out << ", median interval " << format_double(d.periodicity->median_interval_s, "%.0f") << " s (MAD "
                << format_double(d.periodicity->dispersion_s, "%.0f") << " s)";
        out << "\n";
        for (const auto& e : d.endpoints) {
            out << "  endpoint " << pad(e.address.to_string(), 16) << " " << pad(e.hostname.value_or("-"), 26)
                << " packets " << e.packet_count << (e.vendor_flag ? "  vendor" : "") << "\n";
        }
    }
    if (method_report) out << "\n" << render_method_report_text(*method_report);
    return out.str();
}

std::string render(const AnalysisResult& result, Format format) {
    return format == Format::Json ? render_json(result.devices, result.method_report)
                                  : render_text(result.devices, result.method_report);
}

ParsedReport parse_report_json(std::string_view text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("invalid JSON: ") + e.what());
    }
    ParsedReport out;
    try {
        if (root.at("schema").get<int>() != report_schema_version) schema_error("unsupported schema version");
        for (const auto& jd : root.at("devices")) {
            DeviceReport d;
            d.device_id = jd.at("device_id").get<std::string>();
            const auto mac = MacAddress::parse(jd.at("mac").get<std::string>());
            if (!mac) schema_error("bad mac");
            d.mac = *mac;
            const auto status = parse_device_status(jd.at("status").get<std::string>());
            if (!status) schema_error("bad status");
            d.status = *status;
            d.packet_count = jd.at("packet_count").get<std::uint64_t>();
            d.payload_count = jd.at("payload_count").get<std::uint64_t>();
            d.cleartext_count = jd.at("cleartext_count").get<std::uint64_t>();
            d.encrypted_count = jd.at("encrypted_count").get<std::uint64_t>();
            d.indeterminate_count = jd.at("indeterminate_count").get<std::uint64_t>();
            d.tls_count = jd.at("tls_count").get<std::uint64_t>();
            d.http_continuations = jd.at("http_continuations").get<std::uint64_t>();
            for (const auto& jf : jd.at("findings")) {
                ReportedFinding rf;
                rf.capture = jf.at("capture").get<std::string>();
                auto& f = rf.finding;
                f.packet_index = jf.at("packet_index").get<std::uint64_t>();
                const auto cat = parse_finding_category(jf.at("category").get<std::string>());
                const auto sev = parse_severity(jf.at("severity").get<std::string>());
                if (!cat || !sev) schema_error("bad finding category or severity");
                f.category = *cat;
                f.severity = *sev;
                f.matched_text = jf.at("matched_text").get<std::string>();
                f.term = jf.at("term").get<std::string>();
                f.context = jf.at("context").get<std::string>();
                d.findings.push_back(std::move(rf));
            }
            for (const auto& jp : jd.at("activity")) {
                ActivityPeriod p;
                p.device_id = d.device_id;
                p.start_us = jp.at("start_us").get<std::int64_t>();
                p.end_us = jp.at("end_us").get<std::int64_t>();
                p.packet_count = jp.at("packet_count").get<std::uint64_t>();
                p.bytes_total = jp.at("bytes_total").get<std::uint64_t>();
                for (const auto& je : jp.at("endpoints"))
                    p.endpoints.push_back({address_from(je.at("address")), optional_from(je.at("hostname"))});
                d.activity.push_back(std::move(p));
            }
            for (const auto& je : jd.at("endpoints")) {
                EndpointProfile e;
                e.address = address_from(je.at("address"));
                e.hostname = optional_from(je.at("hostname"));
                e.packet_count = je.at("packet_count").get<std::uint64_t>();
                e.vendor_flag = je.at("vendor_flag").get<bool>();
                d.endpoints.push_back(std::move(e));
            }
            if (const auto& jp = jd.at("periodicity"); !jp.is_null())
                d.periodicity = Periodicity{jp.at("median_interval_s").get<double>(),
                                            jp.at("dispersion_s").get<double>()};
            out.devices.push_back(std::move(d));
        }
        if (root.contains("method_report")) {
            MethodReport r;
            for (const auto& jm : root["method_report"].at("methods")) {
                const auto name = jm.at("method").get<std::string>();
                if (name == "ascii")
                    r.ascii = stats_from(jm);
                else if (name == "entropy")
                    r.entropy = stats_from(jm);
                else if (name == "chi")
                    r.chi_squared = stats_from(jm);
                else
                    schema_error("unknown method " + name);
            }
            out.method_report = r;
        }
    } catch (const nlohmann::json::exception& e) {
        schema_error(e.what());
    }
    return out;
}

} // namespace medleak
