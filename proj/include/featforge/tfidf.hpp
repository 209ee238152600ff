#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "featforge/matrix.hpp"
#include "featforge/preprocess.hpp"
#include "featforge/unicode.hpp"

namespace featforge {

enum class TfidfAnalyzer { word, character };

struct TfidfConfig {
    TfidfAnalyzer analyzer = TfidfAnalyzer::word;
    int ngram_lo = 1;
    int ngram_hi = 2;
    std::size_t max_features = 5000;
    std::size_t min_df = 3;        // keep terms appearing in >= min_df documents
    double max_df_frac = 0.95;     // drop terms appearing in > frac of documents
    bool char_cross_tokens = false;
};

struct TfidfModel {
    TfidfConfig config;
    std::unordered_map<std::string, std::size_t> vocabulary;  // term -> column
    std::vector<std::string> terms;                           // column -> term
    std::vector<double> idf;                                  // per column
};

namespace detail {

inline void word_ngrams(const std::vector<std::string>& tokens, int lo, int hi,
                        std::vector<std::string>& out) {
    for (int n = lo; n <= hi; ++n) {
        if (tokens.size() < static_cast<std::size_t>(n)) continue;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string g = tokens[i];
            for (int k = 1; k < n; ++k) { g += ' '; g += tokens[i + k]; }
            out.push_back(std::move(g));
        }
    }
}

// Character n-grams over the space-joined token stream. By default windows
// containing a space are discarded (n-grams stay within one token).
inline void char_ngrams(const std::vector<std::string>& tokens, int lo, int hi,
                        bool cross_tokens, std::vector<std::string>& out) {
    std::string joined;
    for (const auto& t : tokens) {
        if (!joined.empty()) joined += ' ';
        joined += t;
    }
    const auto cps = uni::decode(joined);
    for (int n = lo; n <= hi; ++n) {
        if (cps.size() < static_cast<std::size_t>(n)) continue;
        for (std::size_t i = 0; i + n <= cps.size(); ++i) {
            bool has_space = false;
            for (int k = 0; k < n && !has_space; ++k)
                has_space = cps[i + k] == ' ';
            if (has_space && !cross_tokens) continue;
            std::string g;
            for (int k = 0; k < n; ++k) uni::encode_to(cps[i + k], g);
            out.push_back(std::move(g));
        }
    }
}

inline std::vector<std::string> analyze(const CleanDocument& doc, const TfidfConfig& cfg) {
    std::vector<std::string> grams;
    if (cfg.analyzer == TfidfAnalyzer::word)
        word_ngrams(doc.tokens, cfg.ngram_lo, cfg.ngram_hi, grams);
    else
        char_ngrams(doc.tokens, cfg.ngram_lo, cfg.ngram_hi, cfg.char_cross_tokens, grams);
    return grams;
}

struct TermStats {
    std::size_t total_count = 0;
    std::size_t doc_count = 0;
};

// Document-frequency filter then top-K by total count, ties broken by
// lexicographic term order.
inline std::vector<std::string> select_vocabulary(
    const std::map<std::string, TermStats>& stats, std::size_t n_docs,
    std::size_t min_df, double max_df_frac, std::size_t max_features) {
    std::vector<std::pair<std::string, std::size_t>> kept;
    const double max_df = max_df_frac * static_cast<double>(n_docs);
    for (const auto& [term, ts] : stats) {
        if (ts.doc_count < min_df) continue;
        if (static_cast<double>(ts.doc_count) > max_df) continue;
        kept.emplace_back(term, ts.total_count);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (kept.size() > max_features) kept.resize(max_features);
    std::vector<std::string> terms;
    terms.reserve(kept.size());
    for (auto& [t, _] : kept) terms.push_back(std::move(t));
    std::sort(terms.begin(), terms.end());  // stable column order
    return terms;
}

}  // namespace detail

inline TfidfModel fit_tfidf(const std::vector<CleanDocument>& train_docs,
                            const TfidfConfig& cfg) {
    if (train_docs.empty()) throw std::invalid_argument("fit_tfidf: empty corpus");
    std::map<std::string, detail::TermStats> stats;
    std::vector<std::size_t> doc_counts;  // per-term doc frequency via last-seen-doc
    {
        std::unordered_map<std::string, std::size_t> last_doc;
        for (std::size_t d = 0; d < train_docs.size(); ++d) {
            for (auto& g : detail::analyze(train_docs[d], cfg)) {
                auto& ts = stats[g];
                ++ts.total_count;
                auto it = last_doc.find(g);
                if (it == last_doc.end() || it->second != d) {
                    ++ts.doc_count;
                    last_doc[g] = d;
                }
            }
        }
    }
    TfidfModel model;
    model.config = cfg;
    model.terms = detail::select_vocabulary(stats, train_docs.size(), cfg.min_df,
                                            cfg.max_df_frac, cfg.max_features);
    if (model.terms.empty())
        throw std::runtime_error("fit_tfidf: vocabulary empty after filtering");
    const double n = static_cast<double>(train_docs.size());
    model.idf.resize(model.terms.size());
    for (std::size_t c = 0; c < model.terms.size(); ++c) {
        model.vocabulary.emplace(model.terms[c], c);
        const double nt = static_cast<double>(stats.at(model.terms[c]).doc_count);
        model.idf[c] = std::log((1.0 + n) / (1.0 + nt)) + 1.0;
    }
    return model;
}

inline TfidfModel fit_word_tfidf(const std::vector<CleanDocument>& train_docs,
                                 TfidfConfig cfg = {}) {
    cfg.analyzer = TfidfAnalyzer::word;
    return fit_tfidf(train_docs, cfg);
}

inline TfidfModel fit_char_tfidf(const std::vector<CleanDocument>& train_docs,
                                 TfidfConfig cfg = {}) {
    cfg.analyzer = TfidfAnalyzer::character;
    cfg.ngram_lo = 2;
    cfg.ngram_hi = 4;
    cfg.max_features = 1000;
    return fit_tfidf(train_docs, cfg);
}

// tf(t,d)*idf(t) with tf = in-document count / total terms in the document,
// then each row scaled to unit L2 norm (all-zero rows stay zero).
inline FeatureMatrix apply_tfidf(const TfidfModel& model,
                                 const std::vector<CleanDocument>& docs,
                                 const std::string& set_name = "tfidf") {
    FeatureMatrix out(set_name, docs.size(), model.terms.size());
    out.column_labels = model.terms;
    std::vector<double> row(model.terms.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        std::fill(row.begin(), row.end(), 0.0);
        const auto grams = detail::analyze(docs[d], model.config);
        for (const auto& g : grams) {
            auto it = model.vocabulary.find(g);
            if (it != model.vocabulary.end()) row[it->second] += 1.0;
        }
        double norm_sq = 0.0;
        if (!grams.empty()) {
            const double total = static_cast<double>(grams.size());
            for (std::size_t c = 0; c < row.size(); ++c) {
                row[c] = (row[c] / total) * model.idf[c];
                norm_sq += row[c] * row[c];
            }
        }
        const double inv_norm = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;
        for (std::size_t c = 0; c < row.size(); ++c)
            out.at(d, c) = static_cast<float>(row[c] * inv_norm);
    }
    return out;
}

}  // namespace featforge
