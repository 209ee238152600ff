#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "featforge/corpus.hpp"
#include "featforge/unicode.hpp"

namespace featforge {

struct StopwordList {
    std::unordered_set<std::string> words;  // NFC-normalized

    bool contains(const std::string& w) const { return words.count(w) > 0; }

    static StopwordList load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("missing stopword file: " + path);
        StopwordList sw;
        std::string line;
        while (std::getline(is, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) sw.words.insert(uni::nfc_normalize(line));
        }
        return sw;
    }
};

struct CleanDocument {
    std::string id;
    std::vector<std::string> tokens;
    std::string raw_text;  // statistical features read this, not the tokens
};

inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    std::size_t i = 0;
    while (i < text.size()) {
        const char32_t cp = uni::decode_at(text, i);
        if (uni::is_whitespace(cp)) {
            if (!cur.empty()) { tokens.push_back(std::move(cur)); cur.clear(); }
        } else {
            uni::encode_to(cp, cur);
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

namespace detail {

// Drops <...> spans. An unterminated '<' is kept literally (it is then
// removed as a symbol character anyway).
inline std::string strip_html_tags(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '<') {
            const auto close = s.find('>', i + 1);
            if (close != std::string_view::npos) {
                i = close + 1;
                out.push_back(' ');  // tag acts as a token boundary
                continue;
            }
        }
        out.push_back(s[i]);
        ++i;
    }
    return out;
}

}  // namespace detail

// Cleaning order: strip HTML tags, NFC-normalize, drop punctuation and
// symbol/control characters (digits stay), whitespace-tokenize, drop
// stopwords.
inline CleanDocument clean_text(const std::string& raw, const StopwordList& stopwords,
                                std::string id = {}) {
    CleanDocument out;
    out.id = std::move(id);
    out.raw_text = raw;

    const std::string untagged = detail::strip_html_tags(raw);
    const auto cps = uni::nfc_normalize(uni::decode(untagged));

    std::string kept;
    kept.reserve(untagged.size());
    for (char32_t cp : cps) {
        if (uni::is_punctuation(cp) || uni::is_symbol_or_control(cp)) continue;
        uni::encode_to(cp, kept);
    }
    for (auto& tok : tokenize(kept))
        if (!stopwords.contains(tok)) out.tokens.push_back(std::move(tok));
    return out;
}

inline CleanDocument clean_document(const Document& doc, const StopwordList& stopwords) {
    return clean_text(doc.raw_text, stopwords, doc.id);
}

// Maximal segments terminated by danda, '?', '!' or '.'; a trailing
// unterminated segment with any non-whitespace character counts as one.
inline std::size_t count_sentences(std::string_view raw) {
    std::size_t count = 0;
    bool in_segment = false;
    std::size_t i = 0;
    while (i < raw.size()) {
        const char32_t cp = uni::decode_at(raw, i);
        if (cp == uni::kBanglaDanda || cp == uni::kBanglaDoubleDanda || cp == '?' ||
            cp == '!' || cp == '.') {
            if (in_segment) { ++count; in_segment = false; }
        } else if (!uni::is_whitespace(cp)) {
            in_segment = true;
        }
    }
    if (in_segment) ++count;
    return count;
}

}  // namespace featforge
