#include "medleak/corpus.hpp"

#include "medleak/error.hpp"

#include "json.hpp"
#include <sodium.h>

#include <array>
#include <mutex>
#include <random>
#include <sstream>

namespace medleak {

namespace {

constexpr std::array<std::string_view, 120> words = {
    "the", "of", "and", "to", "in", "is", "you", "that", "it", "he", "was", "for", "on", "are", "as",
    "with", "his", "they", "at", "be", "this", "have", "from", "or", "one", "had", "by", "word", "but",
    "not", "what", "all", "were", "we", "when", "your", "can", "said", "there", "use", "each", "which",
    "she", "do", "how", "their", "if", "up", "other", "about", "out", "many", "then", "them", "these",
    "so", "some", "her", "would", "make", "like", "him", "into", "time", "has", "look", "two", "more",
    "write", "go", "see", "number", "no", "way", "could", "people", "my", "than", "first", "water",
    "been", "call", "who", "oil", "its", "now", "find", "long", "down", "day", "did", "get", "come",
    "made", "may", "part", "over", "new", "sound", "take", "only", "little", "work", "know", "place",
    "year", "live", "me", "back", "give", "most", "very", "after", "thing", "our", "just", "name",
    "good", "sentence", "device",
};

constexpr std::array<std::string_view, 6> hosts = {
    "www.example.com", "api.weatherdata.org", "cdn.newsportal.net", "static.shopfront.io",
    "update.homehub.local", "time.service.net"};

constexpr std::array<std::string_view, 4> user_agents = {
    "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko)",
    "curl/7.52.1", "Dalvik/2.1.0 (Linux; U; Android 7.0)", "okhttp/3.8.0"};

constexpr std::array<std::string_view, 4> statuses = {
    "200 OK", "204 No Content", "301 Moved Permanently", "404 Not Found"};

// Extended characters that turn up in real cleartext (names, units, prose).
constexpr std::array<std::string_view, 10> utf8_snippets = {
    "\xc3\xa9", "\xc3\xab", "\xc2\xb0" "C", "\xc2\xb5g", "\xe2\x80\x94", "\xe2\x82\xac", "\xc3\xb1",
    "\xc3\xbc", "\xe2\x80\x99", "\xc2\xa9"};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Picker {
public:
    explicit Picker(std::uint64_t seed) : rng_(seed) {}

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
    std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
    bool chance(unsigned percent) { return below(100) < percent; }

    template <class Array>
    std::string_view from(const Array& a) {
        return a[below(a.size())];
    }

private:
    std::mt19937_64 rng_;
};

std::string sentence(Picker& pick) {
    std::string s;
    const std::size_t n = pick.between(5, 14);
    for (std::size_t i = 0; i < n; ++i) {
        if (i) s.push_back(' ');
        s += pick.from(words);
    }
    s[0] = static_cast<char>(s[0] - 'a' + 'A');
    s += pick.chance(80) ? ". " : "? ";
    return s;
}

std::string http_request(Picker& pick) {
    const bool post = pick.chance(30);
    std::string r = post ? "POST /" : "GET /";
    r += std::string(pick.from(words)) + "/" + std::string(pick.from(words));
    if (pick.chance(70)) {
        r += "?";
        const std::size_t n = pick.between(1, 4);
        for (std::size_t i = 0; i < n; ++i) {
            if (i) r += "&";
            r += std::string(pick.from(words)) + "=" + std::to_string(pick.below(100000));
        }
    }
    r += " HTTP/1.1\r\nHost: " + std::string(pick.from(hosts)) + "\r\n";
    r += "User-Agent: " + std::string(pick.from(user_agents)) + "\r\n";
    r += "Accept: text/html,application/json;q=0.9,*/*;q=0.8\r\nAccept-Language: en-US,en;q=0.5\r\n";
    r += "Connection: keep-alive\r\n";
    if (pick.chance(50)) r += "Cookie: " + std::string(pick.from(words)) + "=" + std::to_string(pick.below(1u << 30)) + "\r\n";
    if (post) {
        std::string body;
        const std::size_t n = pick.between(2, 6);
        for (std::size_t i = 0; i < n; ++i) {
            if (i) body += "&";
            body += std::string(pick.from(words)) + "=" + std::string(pick.from(words));
        }
        r += "Content-Type: application/x-www-form-urlencoded\r\nContent-Length: " +
             std::to_string(body.size()) + "\r\n\r\n" + body;
    } else {
        r += "\r\n";
    }
    return r;
}

std::string http_response(Picker& pick) {
    std::string body;
    const bool json = pick.chance(50);
    if (json) {
        body = "{";
        const std::size_t n = pick.between(2, 6);
        for (std::size_t i = 0; i < n; ++i) {
            if (i) body += ",";
            body += "\"" + std::string(pick.from(words)) + "\":\"" + sentence(pick) + "\"";
        }
        body += "}";
    } else {
        body = "<html><body><p>" + sentence(pick) + sentence(pick) + "</p></body></html>";
    }
    std::string r = "HTTP/1.1 " + std::string(pick.from(statuses)) + "\r\n";
    r += "Date: Mon, 20 Mar 2017 08:" + std::to_string(10 + pick.below(50)) + ":00 GMT\r\n";
    r += "Server: nginx/1.10.3\r\n";
    r += std::string("Content-Type: ") + (json ? "application/json" : "text/html; charset=utf-8") + "\r\n";
    r += "Content-Length: " + std::to_string(body.size()) + "\r\n\r\n" + body;
    return r;
}

std::string key_values(Picker& pick) {
    std::string r;
    const std::size_t n = pick.between(3, 8);
    for (std::size_t i = 0; i < n; ++i) {
        r += std::string(pick.from(words)) + "_" + std::string(pick.from(words));
        r += pick.chance(50) ? "=" : ": ";
        r += pick.chance(50) ? std::to_string(pick.below(1000000)) : std::string(pick.from(words));
        r += "\n";
    }
    return r;
}

std::once_flag sodium_once;

void ensure_sodium() {
    std::call_once(sodium_once, [] {
        if (sodium_init() < 0) throw Error(ErrorCode::InvalidArgument, "libsodium initialisation failed");
    });
}

} // namespace

std::vector<std::uint8_t> pseudorandom_bytes(std::uint64_t seed, std::uint64_t record, std::size_t length) {
    ensure_sodium();
    std::array<unsigned char, randombytes_SEEDBYTES> key{};
    for (int i = 0; i < 8; ++i) {
        key[i] = static_cast<unsigned char>(seed >> (8 * i));
        key[8 + i] = static_cast<unsigned char>(record >> (8 * i));
    }
    constexpr std::string_view domain = "medleak/corpus/1";
    std::copy(domain.begin(), domain.end(), key.begin() + 16);
    std::vector<std::uint8_t> out(length);
    randombytes_buf_deterministic(out.data(), out.size(), key.data());
    return out;
}

std::vector<std::uint8_t> cleartext_payload(std::uint64_t seed, std::uint64_t record, std::size_t length,
                                            std::string* note) {
    Picker pick(splitmix64(seed ^ splitmix64(record)));
    const std::size_t kind = pick.below(4);
    static constexpr std::array<std::string_view, 4> kinds = {"http-request", "http-response", "prose",
                                                              "key-value"};
    std::string text;
    while (text.size() < length) {
        switch (kind) {
        case 0: text += http_request(pick); break;
        case 1: text += http_response(pick); break;
        case 2: text += sentence(pick); break;
        default: text += key_values(pick); break;
        }
    }
    text.resize(length);

    const bool extended = pick.chance(45);
    if (extended) {
        const std::size_t n = pick.between(1, 3);
        for (std::size_t i = 0; i < n; ++i) {
            const auto snippet = pick.from(utf8_snippets);
            if (snippet.size() >= length) break;
            const std::size_t at = pick.below(length - snippet.size() + 1);
            text.replace(at, snippet.size(), snippet);
        }
    }
    if (note) *note = std::string(kinds[kind]) + (extended ? "+utf8" : "");
    return {text.begin(), text.end()};
}

std::vector<LabeledPayload> generate_corpus(const CorpusSpec& spec) {
    if (spec.n_cleartext == 0 || spec.n_encrypted == 0)
        throw Error(ErrorCode::InvalidCorpusSpec, "corpus needs at least one payload of each label");
    if (spec.min_length == 0 || spec.min_length > spec.max_length)
        throw Error(ErrorCode::InvalidCorpusSpec, "invalid payload length range");

    std::vector<LabeledPayload> corpus;
    corpus.reserve(spec.n_cleartext + spec.n_encrypted);
    Picker lengths(splitmix64(spec.seed));
    const std::uint64_t total = spec.n_cleartext + spec.n_encrypted;
    for (std::uint64_t record = 0; record < total; ++record) {
        LabeledPayload item;
        item.seed_record = record;
        const std::size_t len = lengths.between(spec.min_length, spec.max_length);
        if (record < spec.n_cleartext) {
            item.label = Label::Cleartext;
            item.bytes = cleartext_payload(spec.seed, record, len, &item.generator_note);
        } else {
            item.label = Label::Encrypted;
            item.bytes = pseudorandom_bytes(spec.seed, record, len);
            item.generator_note = "chacha20-stream";
        }
        corpus.push_back(std::move(item));
    }
    return corpus;
}

std::string corpus_to_jsonl(std::span<const LabeledPayload> corpus) {
    ensure_sodium();
    std::string out;
    std::string hex;
    for (const auto& item : corpus) {
        hex.assign(item.bytes.size() * 2 + 1, '\0');
        sodium_bin2hex(hex.data(), hex.size(), item.bytes.data(), item.bytes.size());
        hex.pop_back();
        nlohmann::ordered_json j;
        j["label"] = to_string(item.label);
        j["seed_record"] = item.seed_record;
        j["note"] = item.generator_note;
        j["hex"] = hex;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<LabeledPayload> corpus_from_jsonl(std::string_view text) {
    ensure_sodium();
    std::vector<LabeledPayload> corpus;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fail = [&](const std::string& why) {
            return Error(ErrorCode::InvalidArgument, "corpus line " + std::to_string(line_no) + ": " + why);
        };
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw fail(e.what());
        }
        if (!j.is_object() || !j.contains("label") || !j.contains("hex")) throw fail("missing label or hex");
        const auto label = parse_label(j["label"].get<std::string>());
        if (!label) throw fail("label must be cleartext or encrypted");
        const auto hex = j["hex"].get<std::string>();
        LabeledPayload item;
        item.label = *label;
        item.bytes.resize(hex.size() / 2);
        std::size_t n = 0;
        if (hex.size() % 2 ||
            sodium_hex2bin(item.bytes.data(), item.bytes.size(), hex.data(), hex.size(), nullptr, &n, nullptr) != 0 ||
            n != item.bytes.size())
            throw fail("bad hex payload");
        item.seed_record = j.value("seed_record", std::uint64_t{0});
        item.generator_note = j.value("note", std::string{});
        corpus.push_back(std::move(item));
    }
    return corpus;
}

} // namespace medleak
