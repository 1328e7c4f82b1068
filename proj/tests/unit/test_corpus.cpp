#include "medleak/classify.hpp"
#include "medleak/corpus.hpp"
#include "medleak/error.hpp"
#include "medleak/payload.hpp"
#include "medleak/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "../support/test_support.hpp"

#include <gtest/gtest.h>

using namespace medleak;
using namespace medleak::test;

namespace {

bool contains(const Bytes& b, std::string_view needle) { return contains_bytes(b, needle); }

const Bytes& bp_capture() {
    static const Bytes cap = build_fixture_capture("bp-monitor-leaky");
    return cap;
}

} // namespace

TEST(GenerateCorpus, MinimalSpec) {
    const auto c = generate_corpus({1, 1, 256, 256, 7});
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c[0].label, Label::Cleartext);
    EXPECT_EQ(c[1].label, Label::Encrypted);
    EXPECT_EQ(c[0].bytes.size(), 256u);
    EXPECT_EQ(c[1].bytes.size(), 256u);
    EXPECT_FALSE(c[0].generator_note.empty());
    EXPECT_EQ(c[1].generator_note, "chacha20-stream");
}

TEST(GenerateCorpus, DeterministicPerSeed) {
    const CorpusSpec spec{50, 50, 1, 900, 123};
    const auto a = generate_corpus(spec);
    const auto b = generate_corpus(spec);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].bytes, b[i].bytes);
        EXPECT_EQ(a[i].label, b[i].label);
        EXPECT_EQ(a[i].generator_note, b[i].generator_note);
    }
    const auto c = generate_corpus({50, 50, 1, 900, 124});
    EXPECT_NE(a[0].bytes, c[0].bytes);
    EXPECT_NE(a[60].bytes, c[60].bytes);
}

TEST(GenerateCorpus, LengthsInRangeAndLabelsByConstruction) {
    const CorpusSpec spec{200, 200, 64, 2048, 5};
    const auto c = generate_corpus(spec);
    ASSERT_EQ(c.size(), 400u);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& p = c[i];
        EXPECT_GE(p.bytes.size(), spec.min_length);
        EXPECT_LE(p.bytes.size(), spec.max_length);
        EXPECT_EQ(p.label, i < 200 ? Label::Cleartext : Label::Encrypted);
        // Bytes are a function of (seed, record, length) alone: the label is
        // never written into them.
        if (p.label == Label::Encrypted)
            EXPECT_EQ(p.bytes, pseudorandom_bytes(spec.seed, p.seed_record, p.bytes.size()));
        else
            EXPECT_EQ(p.bytes, cleartext_payload(spec.seed, p.seed_record, p.bytes.size()));
    }
}

TEST(GenerateCorpus, TemplatesCoverFamilies) {
    const auto c = generate_corpus({400, 1, 64, 2048, 8});
    std::set<std::string> families;
    std::size_t utf8 = 0, http = 0;
    for (const auto& p : c) {
        if (p.label != Label::Cleartext) continue;
        families.insert(p.generator_note.substr(0, p.generator_note.find('+')));
        if (!classify_ascii(p.bytes)) ++utf8;
        if (parse_http(p.bytes)) ++http;
    }
    EXPECT_GE(families.size(), 4u);
    EXPECT_GT(utf8, 50u);
    EXPECT_GT(http, 50u);
}

TEST(GenerateCorpus, InvalidSpecs) {
    for (const CorpusSpec& bad : {CorpusSpec{0, 1, 1, 10, 1}, CorpusSpec{1, 0, 1, 10, 1}, CorpusSpec{1, 1, 0, 10, 1},
                                  CorpusSpec{1, 1, 20, 10, 1}}) {
        try {
            generate_corpus(bad);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidCorpusSpec);
        }
    }
}

TEST(GenerateCorpus, JsonlRoundTrip) {
    const auto c = generate_corpus({20, 20, 1, 300, 4});
    const auto text = corpus_to_jsonl(c);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 40);
    const auto back = corpus_from_jsonl(text);
    ASSERT_EQ(back.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_EQ(back[i].bytes, c[i].bytes);
        EXPECT_EQ(back[i].label, c[i].label);
        EXPECT_EQ(back[i].seed_record, c[i].seed_record);
        EXPECT_EQ(back[i].generator_note, c[i].generator_note);
    }
    EXPECT_EQ(corpus_to_jsonl(back), text);
    EXPECT_THROW(corpus_from_jsonl("{\"label\":\"other\",\"hex\":\"00\"}\n"), Error);
    EXPECT_THROW(corpus_from_jsonl("not json\n"), Error);
    EXPECT_THROW(corpus_from_jsonl("{\"label\":\"cleartext\",\"hex\":\"zz\"}\n"), Error);
}

TEST(GenerateCorpus, ChiSquaredPrecisionFloor) {
    const auto report = compare_methods(generate_corpus({5000, 5000, 64, 2048, 1}));
    ASSERT_TRUE(report.chi_squared.precision());
    EXPECT_GE(*report.chi_squared.precision(), 0.95);
}

TEST(Fixtures, BpMonitorContents) {
    const auto& cap = bp_capture();
    EXPECT_TRUE(contains(cap, "meastype=blood_pressure&category=blood_pressure"));
    EXPECT_TRUE(contains(cap, "withings_mobile_app=ios_healthmate"));
    EXPECT_TRUE(contains(cap, "Cookie: current_user="));
    EXPECT_TRUE(contains(cap, "GET /img/bpm_usage.jpg"));
    const auto parsed = parse_capture(cap);
    EXPECT_TRUE(parsed.warnings.empty());
    EXPECT_GT(parsed.packets.size(), 20u);
}

TEST(Fixtures, ScaleIsTlsOnly) {
    const auto parsed = parse_capture(build_fixture_capture("scale-encrypted"));
    std::size_t payloads = 0;
    for (const auto& p : parsed.packets) {
        if (!p->transport || p->payload.empty()) continue;
        ++payloads;
        EXPECT_TRUE(p->transport->src_port == 443 || p->transport->dst_port == 443);
        EXPECT_TRUE(detect_tls(p->transport->src_port, p->transport->dst_port, p->payload).is_tls);
        EXPECT_EQ(detect_tls(p->transport->src_port, p->transport->dst_port, p->payload).reason, TlsReason::Both);
    }
    EXPECT_GT(payloads, 0u);
}

TEST(Fixtures, MixedHomeHasBackgroundTraffic) {
    const auto parsed = parse_capture(build_fixture_capture("mixed-home"));
    const auto split = split_by_device(parsed.packets, fixture_registry(Scenario::MixedHome));
    EXPECT_EQ(split.streams.size(), 2u);
    EXPECT_GT(split.unattributed.size(), 0u);
    for (const auto& s : split.streams) EXPECT_GT(s.packets.size(), 0u);
}

TEST(Fixtures, RoundTripLosslessly) {
    for (const char* name : {"bp-monitor-leaky", "scale-encrypted", "mixed-home"}) {
        const auto bytes = build_fixture_capture(name);
        const auto parsed = parse_capture(bytes);
        EXPECT_EQ(write_capture(parsed.packets), bytes) << name;
        EXPECT_EQ(build_fixture_capture(name), bytes) << name;
    }
}

TEST(Fixtures, UnknownScenario) {
    try {
        build_fixture_capture("fitbit-leaky");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownScenario);
    }
    EXPECT_EQ(parse_scenario("mixed-home"), Scenario::MixedHome);
    EXPECT_STREQ(to_string(Scenario::ScaleEncrypted), "scale-encrypted");
}

TEST(Fixtures, Registries) {
    const auto bp = fixture_registry(Scenario::BpMonitorLeaky);
    ASSERT_EQ(bp.size(), 1u);
    EXPECT_EQ(bp.at(fixture::bp_monitor_mac), fixture::bp_monitor_id);
    EXPECT_EQ(fixture_registry(Scenario::ScaleEncrypted).at(fixture::scale_mac), fixture::scale_id);
    EXPECT_EQ(fixture_registry(Scenario::MixedHome).size(), 2u);
}

TEST(Fixtures, CheckedInCopiesMatchGenerator) {
    const std::filesystem::path dir = std::filesystem::path(MEDLEAK_TEST_DICT_DIR).parent_path() / "fixtures";
    for (const char* name : {"bp-monitor-leaky", "scale-encrypted", "mixed-home"}) {
        std::ifstream in(dir / (std::string(name) + ".pcap"), std::ios::binary);
        ASSERT_TRUE(in) << name;
        const Bytes on_disk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        EXPECT_EQ(on_disk, build_fixture_capture(name)) << name;
        const auto reg = load_registry_file(dir / (std::string(name) + ".ini"));
        EXPECT_EQ(reg, fixture_registry(*parse_scenario(name))) << name;
    }
}
