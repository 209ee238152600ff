#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "featforge/matrix.hpp"
#include "featforge/tfidf.hpp"

namespace featforge {

struct CountConfig {
    int ngram_lo = 1;
    int ngram_hi = 3;
    std::size_t max_features = 1000;
    std::size_t min_df = 2;  // "fewer than two documents" are excluded
};

struct CountModel {
    CountConfig config;
    std::unordered_map<std::string, std::size_t> vocabulary;
    std::vector<std::string> terms;
};

inline CountModel fit_ngram_counts(const std::vector<CleanDocument>& train_docs,
                                   CountConfig cfg = {}) {
    if (train_docs.empty()) throw std::invalid_argument("fit_ngram_counts: empty corpus");
    std::map<std::string, detail::TermStats> stats;
    std::unordered_map<std::string, std::size_t> last_doc;
    std::vector<std::string> grams;
    for (std::size_t d = 0; d < train_docs.size(); ++d) {
        grams.clear();
        detail::word_ngrams(train_docs[d].tokens, cfg.ngram_lo, cfg.ngram_hi, grams);
        for (auto& g : grams) {
            auto& ts = stats[g];
            ++ts.total_count;
            auto it = last_doc.find(g);
            if (it == last_doc.end() || it->second != d) {
                ++ts.doc_count;
                last_doc[g] = d;
            }
        }
    }
    CountModel model;
    model.config = cfg;
    model.terms = detail::select_vocabulary(stats, train_docs.size(), cfg.min_df,
                                            /*max_df_frac=*/1.0, cfg.max_features);
    if (model.terms.empty())
        throw std::runtime_error("fit_ngram_counts: vocabulary empty after filtering");
    for (std::size_t c = 0; c < model.terms.size(); ++c)
        model.vocabulary.emplace(model.terms[c], c);
    return model;
}

// Raw-count document-term matrix.
inline FeatureMatrix apply_ngram_counts(const CountModel& model,
                                        const std::vector<CleanDocument>& docs,
                                        const std::string& set_name = "ngram") {
    FeatureMatrix out(set_name, docs.size(), model.terms.size());
    out.column_labels = model.terms;
    std::vector<std::string> grams;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        grams.clear();
        detail::word_ngrams(docs[d].tokens, model.config.ngram_lo, model.config.ngram_hi,
                            grams);
        for (const auto& g : grams) {
            auto it = model.vocabulary.find(g);
            if (it != model.vocabulary.end()) out.at(d, it->second) += 1.0f;
        }
    }
    return out;
}

}  // namespace featforge
