#include "medleak/leak.hpp"

#include "medleak/bytes.hpp"
#include "medleak/error.hpp"
#include "medleak/text.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace medleak {

namespace {

constexpr std::size_t max_token_length = 100;
constexpr std::size_t min_name_length = 3;
constexpr std::int64_t us_per_s = 1'000'000;

struct Run {
    std::size_t begin;
    std::size_t end;
};

bool is_compound_char(char c) { return text::is_alnum(c) || c == '_' || c == '-'; }

std::vector<Run> alnum_runs(std::string_view s, std::size_t begin, std::size_t end) {
    std::vector<Run> runs;
    std::size_t i = begin;
    while (i < end) {
        if (!text::is_alnum(s[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < end && text::is_alnum(s[j])) ++j;
        runs.push_back({i, j});
        i = j;
    }
    return runs;
}

std::vector<Run> alpha_runs(std::string_view s, Run word) {
    std::vector<Run> runs;
    std::size_t i = word.begin;
    while (i < word.end) {
        if (!text::is_alpha(s[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < word.end && text::is_alpha(s[j])) ++j;
        runs.push_back({i, j});
        i = j;
    }
    return runs;
}

bool mixes_letters_and_digits(std::string_view s, Run word) {
    bool alpha = false, digit = false;
    for (std::size_t i = word.begin; i < word.end; ++i) {
        alpha |= text::is_alpha(s[i]);
        digit |= text::is_digit(s[i]);
    }
    return alpha && digit;
}

Severity severity_for(DictionaryKind kind) {
    return kind == DictionaryKind::Medical ? Severity::High : Severity::Warn;
}

FindingCategory category_for(DictionaryKind kind) {
    switch (kind) {
    case DictionaryKind::Medical: return FindingCategory::DictionaryMedical;
    case DictionaryKind::Names: return FindingCategory::DictionaryName;
    case DictionaryKind::Pii: return FindingCategory::DictionaryPii;
    }
    return FindingCategory::DictionaryMedical;
}

LeakFinding make_finding(const Evidence& ev, FindingCategory category, Severity severity,
                         std::size_t offset, std::size_t length, std::string term) {
    length = std::min(length, max_context_bytes);
    LeakFinding f;
    f.capture = ev.capture;
    f.packet_index = ev.packet_index;
    f.category = category;
    f.severity = severity;
    f.matched_text = std::string(bytes::as_text(ev.bytes.subspan(offset, length)));
    f.term = std::move(term);
    f.context = context_excerpt(ev.bytes, offset, length);
    return f;
}

struct Region {
    std::size_t offset = 0;
    std::size_t length = 0;
};

// Byte regions of the request-target, Host value and cookie values inside
// the raw message, so findings can point at verbatim payload bytes.
struct HttpRegions {
    std::optional<Region> url;
    std::optional<Region> host;
    std::vector<Region> cookies;
};

HttpRegions locate_regions(std::string_view s) {
    HttpRegions r;
    std::size_t pos = 0;
    bool first = true;
    while (pos < s.size()) {
        auto nl = s.find('\n', pos);
        if (nl == std::string_view::npos) nl = s.size();
        std::size_t end = nl;
        if (end > pos && s[end - 1] == '\r') --end;
        const auto line = s.substr(pos, end - pos);
        if (first) {
            first = false;
            const auto sp1 = line.find(' ');
            const auto sp2 = sp1 == std::string_view::npos ? sp1 : line.find(' ', sp1 + 1);
            if (sp2 != std::string_view::npos && line.substr(0, 5) != "HTTP/")
                r.url = Region{pos + sp1 + 1, sp2 - sp1 - 1};
        } else {
            if (line.empty()) break;
            const auto colon = line.find(':');
            if (colon != std::string_view::npos) {
                const auto name = text::to_lower(line.substr(0, colon));
                std::size_t vb = colon + 1;
                while (vb < line.size() && (line[vb] == ' ' || line[vb] == '\t')) ++vb;
                std::size_t ve = line.size();
                while (ve > vb && (line[ve - 1] == ' ' || line[ve - 1] == '\t')) --ve;
                const Region value{pos + vb, ve - vb};
                if (name == "host" && !r.host) {
                    // Drop the port so the region matches the parsed host.
                    const auto v = line.substr(vb, ve - vb);
                    const auto close = v.find(']');
                    const auto cut = v.starts_with('[') && close != v.npos ? close + 1 : v.find(':');
                    r.host = Region{value.offset, std::min(cut, v.size())};
                }
                else if (name == "cookie" || name == "set-cookie")
                    r.cookies.push_back(value);
            }
        }
        pos = nl + 1;
    }
    return r;
}

std::vector<Token> tokenize_region(std::span<const std::uint8_t> bytes, Region region) {
    auto tokens = tokenize(bytes.subspan(region.offset, region.length));
    for (auto& t : tokens) t.offset += region.offset;
    return tokens;
}

struct Pair {
    Region whole; // "key=value"
    Region key;
    Region value;
};

// Splits a region on `separators` into key=value pairs with byte offsets.
std::vector<Pair> split_pairs(std::string_view s, Region region, std::string_view separators) {
    std::vector<Pair> out;
    std::size_t start = region.offset;
    const std::size_t stop = region.offset + region.length;
    while (start < stop) {
        std::size_t end = start;
        while (end < stop && separators.find(s[end]) == std::string_view::npos) ++end;
        std::size_t b = start, e = end;
        while (b < e && s[b] == ' ') ++b;
        while (e > b && s[e - 1] == ' ') --e;
        if (e > b) {
            Pair p;
            p.whole = {b, e - b};
            std::size_t eq = b;
            while (eq < e && s[eq] != '=') ++eq;
            p.key = {b, eq - b};
            p.value = eq < e ? Region{eq + 1, e - eq - 1} : Region{e, 0};
            out.push_back(p);
        }
        start = end + 1;
    }
    return out;
}

bool is_identifier_key(std::string_view key, std::span<const std::string> keys) {
    const auto lowered = text::to_lower(key);
    return std::any_of(keys.begin(), keys.end(),
                       [&](const std::string& k) { return text::to_lower(k) == lowered; });
}

} // namespace

const char* to_string(DictionaryKind kind) {
    switch (kind) {
    case DictionaryKind::Medical: return "medical-terms";
    case DictionaryKind::Names: return "first-names";
    case DictionaryKind::Pii: return "pii-fields";
    }
    return "";
}

const char* dictionary_file_name(DictionaryKind kind) {
    switch (kind) {
    case DictionaryKind::Medical: return "medical-terms.txt";
    case DictionaryKind::Names: return "first-names.txt";
    case DictionaryKind::Pii: return "pii-fields.txt";
    }
    return "";
}

Dictionary Dictionary::from_text(DictionaryKind kind, std::string_view content) {
    Dictionary d;
    d.kind = kind;
    std::istringstream in{std::string(content)};
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view = line;
        const auto hash = view.find('#');
        if (hash != std::string_view::npos) {
            if (d.source_note.empty()) d.source_note = std::string(text::trim(view.substr(hash + 1)));
            view = view.substr(0, hash);
        }
        view = text::trim(view);
        if (view.empty()) continue;
        std::string entry;
        for (char c : view) {
            const bool ws = c == ' ' || c == '\t';
            if (ws) {
                if (!entry.empty() && entry.back() != ' ') entry.push_back(' ');
            } else {
                entry.push_back(text::lower(c));
            }
        }
        d.entries.insert(std::move(entry));
    }
    if (d.entries.empty())
        throw Error(ErrorCode::Dictionary, std::string(to_string(kind)) + " dictionary has no entries");
    return d;
}

Dictionary load_dictionary(const std::filesystem::path& path, DictionaryKind kind) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Dictionary, "cannot open dictionary " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return Dictionary::from_text(kind, buf.str());
}

std::vector<Dictionary> load_dictionaries(const std::filesystem::path& dir) {
    std::vector<Dictionary> out;
    for (auto kind : {DictionaryKind::Medical, DictionaryKind::Names, DictionaryKind::Pii})
        out.push_back(load_dictionary(dir / dictionary_file_name(kind), kind));
    return out;
}

const char* to_string(FindingCategory category) {
    switch (category) {
    case FindingCategory::DictionaryMedical: return "dictionary-medical";
    case FindingCategory::DictionaryName: return "dictionary-name";
    case FindingCategory::DictionaryPii: return "dictionary-pii";
    case FindingCategory::UrlLeak: return "url-leak";
    case FindingCategory::CookieLeak: return "cookie-leak";
    case FindingCategory::VendorIdentifier: return "vendor-identifier";
    case FindingCategory::ImageGetSignature: return "image-get-signature";
    case FindingCategory::UserIdentifier: return "user-identifier";
    }
    return "";
}

std::optional<FindingCategory> parse_finding_category(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(FindingCategory::UserIdentifier); ++i) {
        const auto c = static_cast<FindingCategory>(i);
        if (name == to_string(c)) return c;
    }
    return std::nullopt;
}

const char* to_string(Severity severity) {
    switch (severity) {
    case Severity::Info: return "info";
    case Severity::Warn: return "warn";
    case Severity::High: return "high";
    }
    return "";
}

std::optional<Severity> parse_severity(std::string_view name) {
    if (name == "info") return Severity::Info;
    if (name == "warn") return Severity::Warn;
    if (name == "high") return Severity::High;
    return std::nullopt;
}

std::vector<Token> tokenize(std::span<const std::uint8_t> data) {
    const std::string_view s = bytes::as_text(data);
    std::vector<Token> out;
    std::vector<Run> words;
    std::size_t group = 0;

    auto emit = [&](std::string text, Run run, std::size_t g) {
        out.push_back({std::move(text), run.begin, run.end - run.begin, g});
    };
    auto lower_of = [&](Run run) { return text::to_lower(s.substr(run.begin, run.end - run.begin)); };

    std::size_t i = 0;
    while (i < s.size()) {
        if (!text::is_alnum(s[i])) {
            ++i;
            continue;
        }
        std::size_t j = i, last = i;
        while (j < s.size() && is_compound_char(s[j])) {
            if (text::is_alnum(s[j])) last = j;
            ++j;
        }
        const Run primary{i, last + 1};
        i = primary.end;
        if (primary.end - primary.begin > max_token_length) continue;

        const auto parts = alnum_runs(s, primary.begin, primary.end);
        words.insert(words.end(), parts.begin(), parts.end());

        const std::size_t g = group++;
        emit(lower_of(primary), primary, g);
        if (parts.size() > 1) {
            std::string spaced;
            for (const auto& p : parts) {
                if (!spaced.empty()) spaced.push_back(' ');
                spaced += lower_of(p);
            }
            emit(std::move(spaced), primary, g);
            for (const auto& p : parts) emit(lower_of(p), p, g);
        }
        for (const auto& p : parts) {
            if (!mixes_letters_and_digits(s, p)) continue;
            for (const auto& a : alpha_runs(s, p)) emit(lower_of(a), a, g);
        }
    }

    auto joined = [&](std::size_t k) {
        const std::size_t gap_at = words[k].end;
        return words[k + 1].begin == gap_at + 1 && (s[gap_at] == ' ' || s[gap_at] == '+');
    };
    for (std::size_t k = 0; k + 1 < words.size(); ++k) {
        if (!joined(k)) continue;
        std::string phrase = lower_of(words[k]) + " " + lower_of(words[k + 1]);
        emit(phrase, {words[k].begin, words[k + 1].end}, group++);
        if (k + 2 < words.size() && joined(k + 1))
            emit(phrase + " " + lower_of(words[k + 2]), {words[k].begin, words[k + 2].end}, group++);
    }
    return out;
}

std::vector<std::string> token_strings(std::span<const Token> tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.text);
    return out;
}

std::string context_excerpt(std::span<const std::uint8_t> data, std::size_t offset, std::size_t length) {
    length = std::min(length, max_context_bytes);
    const std::size_t pad = (max_context_bytes - length) / 2;
    std::size_t begin = offset > pad ? offset - pad : 0;
    const std::size_t end = std::min(data.size(), begin + max_context_bytes);
    if (end - begin < max_context_bytes) begin = end > max_context_bytes ? end - max_context_bytes : 0;
    std::string out;
    out.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
        const auto c = data[k];
        out.push_back(c >= 0x20 && c < 0x7f ? static_cast<char>(c) : '.');
    }
    return out;
}

std::vector<LeakFinding> dictionary_match(const Evidence& evidence, std::span<const Token> tokens,
                                          std::span<const Dictionary> dictionaries) {
    std::vector<LeakFinding> out;
    std::vector<const Token*> hits;
    auto covers = [](const Token& a, const Token& b) {
        return a.offset <= b.offset && a.offset + a.length >= b.offset + b.length;
    };
    std::size_t k = 0;
    while (k < tokens.size()) {
        std::size_t end = k;
        while (end < tokens.size() && tokens[end].group == tokens[k].group) ++end;
        for (const auto& dict : dictionaries) {
            hits.clear();
            for (std::size_t t = k; t < end; ++t) {
                const auto& tok = tokens[t];
                if (dict.kind == DictionaryKind::Names && tok.text.size() < min_name_length) continue;
                if (dict.contains(tok.text)) hits.push_back(&tok);
            }
            // Keep hits not covered by another hit's span; equal spans keep the
            // longest text, then the first seen.
            for (std::size_t a = 0; a < hits.size(); ++a) {
                bool covered = false;
                for (std::size_t b = 0; b < hits.size() && !covered; ++b) {
                    if (a == b || !covers(*hits[b], *hits[a])) continue;
                    const bool same_span = hits[b]->length == hits[a]->length;
                    covered = !same_span || hits[b]->text.size() > hits[a]->text.size() ||
                              (hits[b]->text.size() == hits[a]->text.size() && b < a);
                }
                if (covered) continue;
                out.push_back(make_finding(evidence, category_for(dict.kind), severity_for(dict.kind),
                                           hits[a]->offset, hits[a]->length, hits[a]->text));
            }
        }
        k = end;
    }
    return out;
}

bool matches_pattern(std::string_view text, std::string_view pattern) {
    const std::string t(text), p(pattern);
    return fnmatch(p.c_str(), t.c_str(), FNM_CASEFOLD) == 0;
}

bool matches_any(std::string_view text, std::span<const std::string> patterns) {
    return std::any_of(patterns.begin(), patterns.end(),
                       [&](const std::string& p) { return matches_pattern(text, p); });
}

std::vector<LeakFinding> http_leak_scan(const Evidence& ev, const HttpMessage& msg,
                                        std::span<const Dictionary> dictionaries, const LeakConfig& config) {
    std::vector<LeakFinding> out;
    const std::string_view s = bytes::as_text(ev.bytes);
    const auto regions = locate_regions(s);
    auto text_of = [&](Region r) { return s.substr(r.offset, r.length); };

    auto retag = [&](std::vector<LeakFinding> found, FindingCategory category) {
        for (auto& f : found) {
            f.category = category;
            out.push_back(std::move(f));
        }
    };

    std::vector<std::string> vendor_hits;
    auto vendor = [&](Region r, const std::string& subject) {
        for (const auto& pattern : config.vendor_patterns) {
            if (!matches_pattern(subject, pattern)) continue;
            const auto matched = std::string(text_of(r));
            if (std::find(vendor_hits.begin(), vendor_hits.end(), matched) != vendor_hits.end()) return;
            vendor_hits.push_back(matched);
            out.push_back(make_finding(ev, FindingCategory::VendorIdentifier, Severity::Warn, r.offset,
                                       r.length, pattern));
            return;
        }
    };

    if (regions.host && msg.host) vendor(*regions.host, *msg.host);

    if (msg.kind == HttpKind::Request && regions.url) {
        const Region url = *regions.url;
        retag(dictionary_match(ev, tokenize_region(ev.bytes, url), dictionaries), FindingCategory::UrlLeak);

        const auto target = text_of(url);
        const auto q = target.find('?');
        const std::size_t path_len = std::min(target.find_first_of("?#"), target.size());
        for (const auto& seg : split_pairs(s, {url.offset, path_len}, "/")) {
            if (seg.whole.length > 0) vendor(seg.whole, std::string(text_of(seg.whole)));
        }
        if (q != std::string_view::npos) {
            const std::size_t qend = std::min(target.find('#', q), target.size());
            for (const auto& p : split_pairs(s, {url.offset + q + 1, qend - q - 1}, "&;")) {
                const auto key = std::string(text_of(p.key));
                const auto value = std::string(text_of(p.value));
                if (matches_any(key, config.vendor_patterns) || matches_any(value, config.vendor_patterns))
                    vendor(p.whole, matches_any(key, config.vendor_patterns) ? key : value);
                if (is_identifier_key(key, config.identifier_keys))
                    out.push_back(make_finding(ev, FindingCategory::UserIdentifier, Severity::Warn,
                                               p.whole.offset, p.whole.length, text::to_lower(key)));
            }
        }
    }

    for (const auto& region : regions.cookies) {
        retag(dictionary_match(ev, tokenize_region(ev.bytes, region), dictionaries),
              FindingCategory::CookieLeak);
        for (const auto& p : split_pairs(s, region, ";")) {
            const auto key = std::string(text_of(p.key));
            if (is_identifier_key(key, config.identifier_keys))
                out.push_back(make_finding(ev, FindingCategory::UserIdentifier, Severity::Warn,
                                           p.whole.offset, p.whole.length, text::to_lower(key)));
        }
    }
    return out;
}

bool is_image_get(const HttpMessage& msg) {
    if (msg.kind != HttpKind::Request || msg.method != "GET") return false;
    const auto path = text::to_lower(url_path(msg.url));
    for (std::string_view ext : {".jpg", ".jpeg", ".png", ".gif"}) {
        if (path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
            return true;
    }
    return false;
}

std::vector<LeakFinding> image_get_signature(std::span<const TrafficEvent> events, double window_s) {
    std::vector<LeakFinding> out;
    const auto window_us = static_cast<std::int64_t>(window_s * us_per_s);
    auto image_get = [](const TrafficEvent& e) { return e.http && is_image_get(*e.http); };

    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (!image_get(e) || !e.cleartext || e.direction != Direction::Outbound) continue;
        bool preceded = false;
        for (std::size_t j = i; j-- > 0;) {
            const auto& prior = events[j];
            if (e.timestamp_us - prior.timestamp_us > window_us) break;
            if (image_get(prior)) continue;
            if ((prior.direction == Direction::Outbound && prior.cleartext) || prior.vendor_endpoint) {
                preceded = true;
                break;
            }
        }
        if (!preceded) continue;

        const std::string_view s = bytes::as_text(e.bytes);
        const auto at = s.find(e.http->url);
        const Evidence ev{e.capture, e.packet_index, e.bytes};
        if (at == std::string_view::npos) continue;
        out.push_back(make_finding(ev, FindingCategory::ImageGetSignature, Severity::Warn, at,
                                   e.http->url.size(), url_path(e.http->url)));
    }
    return out;
}

} // namespace medleak
