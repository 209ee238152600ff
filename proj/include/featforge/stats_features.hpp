#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "featforge/corpus.hpp"
#include "featforge/matrix.hpp"
#include "featforge/preprocess.hpp"
#include "featforge/unicode.hpp"

namespace featforge {

// Eight surface statistics computed on the RAW text (cleaning would zero the
// punctuation-based ones). Divide-by-zero cases are defined as 0.
struct StatVector {
    double char_count = 0;
    double word_count = 0;
    double sentence_count = 0;
    double avg_word_length = 0;      // mean token length in codepoints
    double punctuation_count = 0;
    double digit_count = 0;
    double avg_chars_per_word = 0;   // char_count / word_count
    double punctuation_ratio = 0;    // punctuation_count / char_count

    static const std::vector<std::string>& labels() {
        static const std::vector<std::string> kLabels = {
            "char_count",    "word_count",        "sentence_count",
            "avg_word_length", "punctuation_count", "digit_count",
            "avg_chars_per_word", "punctuation_ratio"};
        return kLabels;
    }

    std::array<double, 8> as_array() const {
        return {char_count,        word_count,  sentence_count,
                avg_word_length,   punctuation_count, digit_count,
                avg_chars_per_word, punctuation_ratio};
    }
};

inline StatVector compute_stat_features(std::string_view raw) {
    StatVector v;
    std::size_t token_cp_total = 0;
    std::size_t i = 0;
    bool in_token = false;
    std::size_t n_tokens = 0;
    while (i < raw.size()) {
        const char32_t cp = uni::decode_at(raw, i);
        ++v.char_count;
        if (uni::is_whitespace(cp)) {
            in_token = false;
        } else {
            if (!in_token) { ++n_tokens; in_token = true; }
            ++token_cp_total;
        }
        if (uni::is_punctuation(cp)) ++v.punctuation_count;
        if (uni::is_digit(cp)) ++v.digit_count;
    }
    v.word_count = static_cast<double>(n_tokens);
    v.sentence_count = static_cast<double>(count_sentences(raw));
    if (n_tokens > 0) {
        v.avg_word_length = static_cast<double>(token_cp_total) / n_tokens;
        v.avg_chars_per_word = v.char_count / v.word_count;
    }
    if (v.char_count > 0) v.punctuation_ratio = v.punctuation_count / v.char_count;
    return v;
}

inline StatVector compute_stat_features(const Document& doc) {
    return compute_stat_features(doc.raw_text);
}

inline FeatureMatrix stat_feature_matrix(const Corpus& docs,
                                         const std::string& set_name = "stats") {
    FeatureMatrix out(set_name, docs.size(), 8);
    out.column_labels = StatVector::labels();
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto a = compute_stat_features(docs[d]).as_array();
        for (std::size_t c = 0; c < 8; ++c) out.at(d, c) = static_cast<float>(a[c]);
    }
    return out;
}

}  // namespace featforge
