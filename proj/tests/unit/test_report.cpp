#include "medleak/corpus.hpp"
#include "medleak/error.hpp"
#include "medleak/report.hpp"

#include "../support/test_support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace medleak;
using namespace medleak::test;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no medleak::Error thrown";
    return ErrorCode::InvalidArgument;
}

RunConfig fixture_config(Scenario s) {
    RunConfig cfg;
    cfg.registry = fixture_registry(s);
    cfg.dict_dir = MEDLEAK_TEST_DICT_DIR;
    return cfg;
}

AnalysisResult run_fixture(const char* name, std::string capture_name = "capture.pcap") {
    const auto s = *parse_scenario(name);
    const std::vector<CaptureSource> caps = {{std::move(capture_name), build_fixture_capture(name)}};
    return analyze(caps, fixture_config(s));
}

const AnalysisResult& bp_result() {
    static const AnalysisResult r = run_fixture("bp-monitor-leaky");
    return r;
}

ReportedFinding finding(Severity sev) {
    ReportedFinding f;
    f.capture = "c";
    f.finding.severity = sev;
    return f;
}

struct EnvGuard {
    std::string name;
    std::optional<std::string> old;
    explicit EnvGuard(std::string n) : name(std::move(n)) {
        if (const char* v = std::getenv(name.c_str())) old = v;
    }
    ~EnvGuard() {
        if (old)
            ::setenv(name.c_str(), old->c_str(), 1);
        else
            ::unsetenv(name.c_str());
    }
};

} // namespace

TEST(Config, SectionsAndDevices) {
    RunConfig cfg;
    load_config_text(cfg, "[classifier]\nentropy_threshold = 6.5\nchi_threshold=2000\nmin_stat_len = 32\n"
                          "decision_method = entropy\n[metadata]\ngap_threshold = 120\nimage_window = 10\n"
                          "[leak]\nvendor_patterns = *.acme.*, acme_*\nidentifier_keys = uid\n"
                          "[devices]\n00:24:e4:3a:51:07 = bp\n");
    EXPECT_EQ(cfg.classifier.entropy_threshold, 6.5);
    EXPECT_EQ(cfg.classifier.chi_threshold, 2000.0);
    EXPECT_EQ(cfg.classifier.min_stat_len, 32u);
    EXPECT_EQ(cfg.classifier.method, DecisionMethod::Entropy);
    EXPECT_EQ(cfg.gap_threshold_s, 120.0);
    EXPECT_EQ(cfg.leak.image_window_s, 10.0);
    EXPECT_EQ(cfg.leak.vendor_patterns, (std::vector<std::string>{"*.acme.*", "acme_*"}));
    EXPECT_EQ(cfg.leak.identifier_keys, (std::vector<std::string>{"uid"}));
    ASSERT_EQ(cfg.registry.size(), 1u);
    EXPECT_EQ(cfg.registry.begin()->second, "bp");
}

TEST(Config, Defaults) {
    const RunConfig cfg;
    EXPECT_EQ(cfg.classifier.entropy_threshold, 7.5);
    EXPECT_EQ(cfg.classifier.chi_threshold, 1000.0);
    EXPECT_EQ(cfg.classifier.min_stat_len, 64u);
    EXPECT_EQ(cfg.classifier.method, DecisionMethod::ChiSquared);
    EXPECT_EQ(cfg.gap_threshold_s, 60.0);
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, Errors) {
    RunConfig cfg;
    EXPECT_EQ(code_of([&] { load_config_text(cfg, "[classifier]\nbogus = 1\n"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([&] { load_config_text(cfg, "[classifier]\nchi_threshold = abc\n"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([&] { load_config_text(cfg, "[classifier]\nchi_threshold = -1\n"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([&] { load_config_text(cfg, "[classifier]\nmin_stat_len = 2.5\n"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([&] { load_config_text(cfg, "[classifier]\ndecision_method = vote\n"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([&] { load_config_text(cfg, "loose = 1\n"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([&] { load_config_text(cfg, "[classifier\n"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([&] { load_config_file(cfg, "/nonexistent/medleak.ini"); }), ErrorCode::Io);
    EXPECT_EQ(code_of([&] { set_config_value(cfg, "metadata.gap_threshold", "0"); }), ErrorCode::Config);
}

TEST(Registry, ParseAndErrors) {
    const auto reg = parse_registry_text("[devices]\n00:24:E4:3A:51:07 = withings-bp-monitor\n"
                                         "00:24:e4:6c:12:9e = withings-scale\n");
    ASSERT_EQ(reg.size(), 2u);
    EXPECT_EQ(reg.at(fixture::bp_monitor_mac), "withings-bp-monitor");
    EXPECT_EQ(parse_registry_text(registry_to_text(reg)), reg);

    EXPECT_EQ(code_of([] { parse_registry_text("[devices]\nnot-a-mac = x\n"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([] { parse_registry_text("[devices]\n00:24:e4:3a:51:07 =\n"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([] { parse_registry_text("[devices]\n00:24:e4:3a:51:07 = a\n00:24:E4:3A:51:07 = b\n"); }),
              ErrorCode::Config);
    EXPECT_EQ(code_of([] { parse_registry_text(""); }), ErrorCode::Config);
}

TEST(DictDir, Precedence) {
    EnvGuard guard("MEDLEAK_DICT_DIR");
    RunConfig cfg;
    ::unsetenv("MEDLEAK_DICT_DIR");
    const auto builtin = resolve_dict_dir(cfg);
    EXPECT_FALSE(builtin.empty());
    ::setenv("MEDLEAK_DICT_DIR", "/from/env", 1);
    EXPECT_EQ(resolve_dict_dir(cfg), std::filesystem::path("/from/env"));
    cfg.dict_dir = "/from/flag";
    EXPECT_EQ(resolve_dict_dir(cfg), std::filesystem::path("/from/flag"));
}

TEST(Status, FromFindings) {
    EXPECT_EQ(status_of({}), DeviceStatus::Ok);
    const std::vector<ReportedFinding> warn = {finding(Severity::Warn), finding(Severity::Warn)};
    EXPECT_EQ(status_of(warn), DeviceStatus::Warn);
    const std::vector<ReportedFinding> leak = {finding(Severity::Warn), finding(Severity::High)};
    EXPECT_EQ(status_of(leak), DeviceStatus::Leak);

    AnalysisResult r;
    EXPECT_EQ(r.exit_code(), exit_ok);
    r.devices.resize(2);
    r.devices[1].status = DeviceStatus::Warn;
    EXPECT_EQ(r.exit_code(), exit_warn);
    r.devices[0].status = DeviceStatus::Leak;
    EXPECT_EQ(r.exit_code(), exit_leak);
}

TEST(Render, EmptyReport) {
    EXPECT_EQ(render_json({}), R"({"schema":1,"devices":[]})");
    const auto text = render_text({});
    EXPECT_NE(text.find("DEVICE"), std::string::npos);
}

TEST(Render, TextRowCarriesLabelAndStatus) {
    DeviceReport d;
    d.device_id = "withings-bp-monitor";
    d.mac = fixture::bp_monitor_mac;
    d.status = DeviceStatus::Leak;
    d.findings = {finding(Severity::High)};
    const std::vector<DeviceReport> ds = {d};
    const auto text = render_text(ds);
    const auto row = text.find("withings-bp-monitor");
    ASSERT_NE(row, std::string::npos);
    const auto eol = text.find('\n', row);
    EXPECT_NE(text.substr(row, eol - row).find("LEAK"), std::string::npos);
}

TEST(Render, JsonRoundTripIsByteIdentical) {
    for (const char* name : {"bp-monitor-leaky", "scale-encrypted", "mixed-home"}) {
        const auto r = run_fixture(name);
        const auto json = render(r, Format::Json);
        const auto parsed = parse_report_json(json);
        EXPECT_EQ(parsed.devices, r.devices) << name;
        EXPECT_EQ(render_json(parsed.devices, parsed.method_report), json) << name;
    }
    EXPECT_EQ(code_of([] { parse_report_json(R"({"schema":2,"devices":[]})"); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { parse_report_json("[]"); }), ErrorCode::InvalidArgument);
}

TEST(Render, MethodReportRoundTrip) {
    const auto corpus = generate_corpus({100, 100, 64, 512, 3});
    const auto report = compare_methods(corpus);
    const auto json = render_json({}, report);
    const auto parsed = parse_report_json(json);
    ASSERT_TRUE(parsed.method_report);
    EXPECT_EQ(*parsed.method_report, report);
    EXPECT_EQ(render_json(parsed.devices, parsed.method_report), json);
    EXPECT_NE(render_method_report_text(report).find("chi"), std::string::npos);
}

TEST(Analyze, FixtureExitCodes) {
    EXPECT_EQ(bp_result().exit_code(), exit_leak);
    EXPECT_EQ(run_fixture("scale-encrypted").exit_code(), exit_ok);
    EXPECT_EQ(run_fixture("mixed-home").exit_code(), exit_leak);
}

TEST(Analyze, BpMonitorFindingCategories) {
    const auto& r = bp_result();
    ASSERT_EQ(r.devices.size(), 1u);
    std::set<FindingCategory> seen;
    for (const auto& f : r.devices[0].findings) {
        seen.insert(f.finding.category);
        EXPECT_EQ(f.capture, "capture.pcap");
        EXPECT_LE(f.finding.context.size(), max_context_bytes);
    }
    for (auto c : {FindingCategory::DictionaryMedical, FindingCategory::VendorIdentifier,
                   FindingCategory::UserIdentifier, FindingCategory::ImageGetSignature})
        EXPECT_TRUE(seen.count(c)) << to_string(c);
    EXPECT_EQ(r.devices[0].status, DeviceStatus::Leak);
    EXPECT_TRUE(r.devices[0].periodicity);
}

TEST(Analyze, ScaleIsAllTlsAndClean) {
    const auto r = run_fixture("scale-encrypted");
    ASSERT_EQ(r.devices.size(), 1u);
    const auto& d = r.devices[0];
    EXPECT_TRUE(d.findings.empty());
    EXPECT_GT(d.payload_count, 0u);
    EXPECT_EQ(d.tls_count, d.payload_count);
    EXPECT_EQ(d.cleartext_count, 0u);
    EXPECT_EQ(d.status, DeviceStatus::Ok);
}

TEST(Analyze, CountsReconcile) {
    for (const char* name : {"bp-monitor-leaky", "scale-encrypted", "mixed-home"}) {
        for (const auto& d : run_fixture(name).devices)
            EXPECT_EQ(d.cleartext_count + d.encrypted_count + d.indeterminate_count + d.tls_count, d.payload_count)
                << name << " " << d.device_id;
    }
}

TEST(Analyze, MixedHomeFindingsOnlyForBpMonitor) {
    const auto r = run_fixture("mixed-home");
    EXPECT_GT(r.unattributed_count, 0u);
    ASSERT_EQ(r.devices.size(), 2u);
    for (const auto& d : r.devices) {
        if (d.device_id == fixture::bp_monitor_id)
            EXPECT_FALSE(d.findings.empty());
        else
            EXPECT_TRUE(d.findings.empty()) << d.device_id;
        // The laptop's search query never lands on a registered device.
        for (const auto& f : d.findings) EXPECT_EQ(f.finding.matched_text.find("symptoms"), std::string::npos);
    }
}

TEST(Analyze, DeterministicUpToCaptureName) {
    const auto a = render(run_fixture("mixed-home", "a.pcap"), Format::Json);
    const auto b = render(run_fixture("mixed-home", "a.pcap"), Format::Json);
    EXPECT_EQ(a, b);
    auto c = render(run_fixture("mixed-home", "b.pcap"), Format::Json);
    for (std::size_t pos = 0; (pos = c.find("\"b.pcap\"", pos)) != std::string::npos;) c.replace(pos, 8, "\"a.pcap\"");
    EXPECT_EQ(a, c);
}

TEST(Analyze, RegistryDevicesWithoutTrafficAreReported) {
    auto cfg = fixture_config(Scenario::ScaleEncrypted);
    cfg.registry.emplace(mac(9), "idle");
    const std::vector<CaptureSource> caps = {{"s.pcap", build_fixture_capture("scale-encrypted")}};
    const auto r = analyze(caps, cfg);
    ASSERT_EQ(r.devices.size(), 2u);
    const auto idle = std::find_if(r.devices.begin(), r.devices.end(), [](auto& d) { return d.device_id == "idle"; });
    ASSERT_NE(idle, r.devices.end());
    EXPECT_EQ(idle->packet_count, 0u);
    EXPECT_EQ(idle->status, DeviceStatus::Ok);
}

TEST(Analyze, Errors) {
    const std::vector<CaptureSource> caps = {{"s.pcap", build_fixture_capture("scale-encrypted")}};
    RunConfig empty;
    empty.dict_dir = MEDLEAK_TEST_DICT_DIR;
    EXPECT_EQ(code_of([&] { analyze(caps, empty); }), ErrorCode::EmptyRegistry);
    const auto cfg = fixture_config(Scenario::ScaleEncrypted);
    EXPECT_EQ(code_of([&] { analyze(std::span<const CaptureSource>{}, cfg); }), ErrorCode::InvalidArgument);
    const std::vector<std::filesystem::path> missing = {"/nonexistent/x.pcap"};
    EXPECT_EQ(code_of([&] { analyze_files(missing, cfg); }), ErrorCode::Io);
    const std::vector<CaptureSource> junk = {{"j.pcap", to_bytes("definitely not a pcap file")}};
    EXPECT_EQ(code_of([&] { analyze(junk, cfg); }), ErrorCode::MalformedCapture);
    auto bad_dict = cfg;
    bad_dict.dict_dir = "/nonexistent/dicts";
    EXPECT_EQ(code_of([&] { analyze(caps, bad_dict); }), ErrorCode::Dictionary);
}

TEST(Analyze, WarningsForMalformedFrames) {
    auto bytes = build_fixture_capture("scale-encrypted");
    bytes.resize(bytes.size() - 5); // truncate the final record
    const std::vector<CaptureSource> caps = {{"t.pcap", bytes}};
    const auto r = analyze(caps, fixture_config(Scenario::ScaleEncrypted));
    EXPECT_FALSE(r.warnings.empty());
    EXPECT_EQ(r.exit_code(), exit_ok);
}
