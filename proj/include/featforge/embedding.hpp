#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "featforge/matrix.hpp"
#include "featforge/preprocess.hpp"
#include "featforge/unicode.hpp"

namespace featforge {

enum class EmbeddingMode { cbow_word, cbow_subword };

struct EmbeddingConfig {
    EmbeddingMode mode = EmbeddingMode::cbow_word;
    std::size_t dim = 100;
    int window = 5;
    std::size_t min_count = 1;
    int epochs = 5;
    int negatives = 5;
    double initial_lr = 0.025;
    std::uint64_t seed = 42;
    int threads = 1;  // >1 is hogwild and therefore nondeterministic
    // subword mode only
    int minn = 3;
    int maxn = 6;
    std::size_t bucket_count = 1u << 21;
};

struct EmbeddingModel {
    EmbeddingConfig config;
    std::vector<std::string> vocab;                       // index -> word
    std::unordered_map<std::string, std::size_t> index;   // word -> index
    std::vector<float> word_vectors;                      // vocab x dim
    std::vector<float> bucket_vectors;                    // buckets x dim (subword)

    std::size_t dim() const { return config.dim; }

    std::span<const float> word_vector(std::size_t w) const {
        return {word_vectors.data() + w * config.dim, config.dim};
    }
};

namespace detail {

// fastText's FNV-1a 32-bit over the UTF-8 bytes of the n-gram.
inline std::uint32_t fnv1a32(std::string_view s) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : s) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

// Character n-grams of "<word>" with lengths in [minn, maxn], counted in
// codepoints.
inline std::vector<std::string> subword_ngrams(const std::string& word, int minn,
                                               int maxn) {
    std::string decorated = "<" + word + ">";
    const auto cps = uni::decode(decorated);
    std::vector<std::string> grams;
    for (int n = minn; n <= maxn; ++n) {
        if (cps.size() < static_cast<std::size_t>(n)) break;
        for (std::size_t i = 0; i + n <= cps.size(); ++i) {
            std::string g;
            for (int k = 0; k < n; ++k) uni::encode_to(cps[i + k], g);
            grams.push_back(std::move(g));
        }
    }
    return grams;
}

inline std::vector<std::size_t> subword_buckets(const std::string& word, int minn,
                                                int maxn, std::size_t bucket_count) {
    std::vector<std::size_t> out;
    for (const auto& g : subword_ngrams(word, minn, maxn))
        out.push_back(fnv1a32(g) % bucket_count);
    return out;
}

inline float fast_sigmoid(double x) {
    if (x > 8.0) return 1.0f;
    if (x < -8.0) return 0.0f;
    return static_cast<float>(1.0 / (1.0 + std::exp(-x)));
}

}  // namespace detail

namespace detail {

struct EmbeddingTrainer {
    const EmbeddingConfig& cfg;
    EmbeddingModel& model;
    const std::vector<std::vector<std::size_t>>& sentences;  // word indices
    std::vector<std::vector<std::size_t>> word_buckets;      // subword mode
    std::vector<float> out_vectors;                          // vocab x dim, zero init
    std::vector<std::size_t> unigram_table;
    std::size_t total_words = 0;

    explicit EmbeddingTrainer(const EmbeddingConfig& c, EmbeddingModel& m,
                              const std::vector<std::vector<std::size_t>>& sents,
                              const std::vector<std::size_t>& counts)
        : cfg(c), model(m), sentences(sents) {
        const std::size_t V = model.vocab.size();
        const std::size_t D = cfg.dim;
        out_vectors.assign(V * D, 0.0f);
        for (std::size_t c2 : counts) total_words += c2;

        // Unigram^0.75 negative-sampling table.
        const std::size_t table_size = std::min<std::size_t>(1'000'000, 100 * V + 100);
        unigram_table.resize(table_size);
        double z = 0.0;
        for (std::size_t w = 0; w < V; ++w) z += std::pow(static_cast<double>(counts[w]), 0.75);
        std::size_t w = 0;
        double cum = std::pow(static_cast<double>(counts[0]), 0.75) / z;
        for (std::size_t i = 0; i < table_size; ++i) {
            unigram_table[i] = w;
            if (static_cast<double>(i + 1) / table_size > cum && w + 1 < V) {
                ++w;
                cum += std::pow(static_cast<double>(counts[w]), 0.75) / z;
            }
        }

        if (cfg.mode == EmbeddingMode::cbow_subword) {
            word_buckets.resize(V);
            for (std::size_t i = 0; i < V; ++i)
                word_buckets[i] =
                    subword_buckets(model.vocab[i], cfg.minn, cfg.maxn, cfg.bucket_count);
            model.bucket_vectors.assign(cfg.bucket_count * D, 0.0f);
            std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
            std::uniform_real_distribution<float> u(-0.5f / D, 0.5f / D);
            for (auto& v : model.bucket_vectors) v = u(rng);
        }
    }

    // Input-side representation of one word into h (added, scaled by `scale`).
    void add_input(std::size_t w, double scale, std::vector<double>& h) const {
        const std::size_t D = cfg.dim;
        const float* wv = model.word_vectors.data() + w * D;
        if (cfg.mode == EmbeddingMode::cbow_word) {
            for (std::size_t k = 0; k < D; ++k) h[k] += scale * wv[k];
            return;
        }
        const auto& buckets = word_buckets[w];
        for (std::size_t k = 0; k < D; ++k) h[k] += scale * wv[k];
        if (!buckets.empty()) {
            const double s = scale / static_cast<double>(buckets.size());
            for (std::size_t b : buckets) {
                const float* bv = model.bucket_vectors.data() + b * D;
                for (std::size_t k = 0; k < D; ++k) h[k] += s * bv[k];
            }
        }
    }

    void apply_input_grad(std::size_t w, const std::vector<double>& grad, double scale) {
        const std::size_t D = cfg.dim;
        float* wv = model.word_vectors.data() + w * D;
        for (std::size_t k = 0; k < D; ++k) wv[k] += static_cast<float>(scale * grad[k]);
        if (cfg.mode == EmbeddingMode::cbow_subword) {
            const auto& buckets = word_buckets[w];
            if (buckets.empty()) return;
            const double s = scale / static_cast<double>(buckets.size());
            for (std::size_t b : buckets) {
                float* bv = model.bucket_vectors.data() + b * D;
                for (std::size_t k = 0; k < D; ++k)
                    bv[k] += static_cast<float>(s * grad[k]);
            }
        }
    }

    void train_range(std::size_t lo, std::size_t hi, std::uint64_t rng_seed) {
        const std::size_t D = cfg.dim;
        std::mt19937_64 rng(rng_seed);
        std::uniform_int_distribution<std::size_t> table_pick(0, unigram_table.size() - 1);
        std::vector<double> h(D), hgrad(D);

        std::size_t range_words = 0;
        for (std::size_t s = lo; s < hi; ++s) range_words += sentences[s].size();
        const std::size_t span_total = std::max<std::size_t>(1, range_words * cfg.epochs);
        std::size_t processed = 0;

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            for (std::size_t s = lo; s < hi; ++s) {
                const auto& sent = sentences[s];
                for (std::size_t t = 0; t < sent.size(); ++t) {
                    ++processed;
                    const double frac = static_cast<double>(processed) / span_total;
                    const double lr =
                        std::max(cfg.initial_lr * (1.0 - frac), cfg.initial_lr * 1e-4);

                    // mean of context word representations
                    std::fill(h.begin(), h.end(), 0.0);
                    std::size_t n_ctx = 0;
                    const std::size_t wlo = t > static_cast<std::size_t>(cfg.window)
                                                ? t - cfg.window : 0;
                    const std::size_t whi = std::min(sent.size(), t + cfg.window + 1);
                    for (std::size_t j = wlo; j < whi; ++j)
                        if (j != t) ++n_ctx;
                    if (n_ctx == 0) continue;
                    const double inv_ctx = 1.0 / static_cast<double>(n_ctx);
                    for (std::size_t j = wlo; j < whi; ++j)
                        if (j != t) add_input(sent[j], inv_ctx, h);

                    std::fill(hgrad.begin(), hgrad.end(), 0.0);
                    const std::size_t target = sent[t];
                    for (int neg = 0; neg <= cfg.negatives; ++neg) {
                        std::size_t out_w;
                        double label;
                        if (neg == 0) {
                            out_w = target;
                            label = 1.0;
                        } else {
                            out_w = unigram_table[table_pick(rng)];
                            if (out_w == target) continue;
                            label = 0.0;
                        }
                        float* ov = out_vectors.data() + out_w * D;
                        double dot = 0.0;
                        for (std::size_t k = 0; k < D; ++k) dot += h[k] * ov[k];
                        const double g = (label - detail::fast_sigmoid(dot)) * lr;
                        for (std::size_t k = 0; k < D; ++k) {
                            hgrad[k] += g * ov[k];
                            ov[k] += static_cast<float>(g * h[k]);
                        }
                    }
                    for (std::size_t j = wlo; j < whi; ++j)
                        if (j != t) apply_input_grad(sent[j], hgrad, inv_ctx);
                }
            }
        }
    }
};

}  // namespace detail

inline EmbeddingModel train_embeddings(const std::vector<CleanDocument>& train_docs,
                                       EmbeddingConfig cfg) {
    EmbeddingModel model;
    model.config = cfg;

    // Vocabulary: every token with count >= min_count, most frequent first
    // (ties lexicographic) so the unigram table stays well shaped.
    std::unordered_map<std::string, std::size_t> counts_map;
    std::size_t n_tokens = 0;
    for (const auto& d : train_docs)
        for (const auto& t : d.tokens) {
            ++counts_map[t];
            ++n_tokens;
        }
    if (n_tokens == 0) throw std::invalid_argument("train_embeddings: empty token stream");

    std::vector<std::pair<std::string, std::size_t>> by_freq(counts_map.begin(),
                                                             counts_map.end());
    std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::size_t> counts;
    for (auto& [w, c] : by_freq) {
        if (c < cfg.min_count) continue;
        model.index.emplace(w, model.vocab.size());
        model.vocab.push_back(w);
        counts.push_back(c);
    }
    if (model.vocab.empty())
        throw std::invalid_argument("train_embeddings: vocabulary empty");

    const std::size_t D = cfg.dim;
    model.word_vectors.resize(model.vocab.size() * D);
    {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<float> u(-0.5f / D, 0.5f / D);
        for (auto& v : model.word_vectors) v = u(rng);
    }

    std::vector<std::vector<std::size_t>> sentences;
    sentences.reserve(train_docs.size());
    for (const auto& d : train_docs) {
        std::vector<std::size_t> sent;
        sent.reserve(d.tokens.size());
        for (const auto& t : d.tokens) {
            auto it = model.index.find(t);
            if (it != model.index.end()) sent.push_back(it->second);
        }
        if (!sent.empty()) sentences.push_back(std::move(sent));
    }

    detail::EmbeddingTrainer trainer(cfg, model, sentences, counts);
    const int n_threads = std::max(1, cfg.threads);
    if (n_threads == 1 || sentences.size() < 2) {
        trainer.train_range(0, sentences.size(), cfg.seed + 1);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (sentences.size() + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const std::size_t lo = t * chunk;
            const std::size_t hi = std::min(sentences.size(), lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&trainer, lo, hi, t, &cfg] {
                trainer.train_range(lo, hi, cfg.seed + 1 + static_cast<std::uint64_t>(t));
            });
        }
        for (auto& th : pool) th.join();
    }
    return model;
}

inline EmbeddingModel train_cbow_embeddings(const std::vector<CleanDocument>& docs,
                                            EmbeddingConfig cfg = {}) {
    cfg.mode = EmbeddingMode::cbow_word;
    return train_embeddings(docs, cfg);
}

inline EmbeddingModel train_subword_embeddings(const std::vector<CleanDocument>& docs,
                                               EmbeddingConfig cfg = {}) {
    cfg.mode = EmbeddingMode::cbow_subword;
    return train_embeddings(docs, cfg);
}

// Representation of one word: word vector plus the mean of its subword
// bucket vectors; unseen words in subword mode compose from buckets alone.
// Returns false if the word contributes nothing (OOV in word mode).
inline bool word_embedding(const EmbeddingModel& model, const std::string& word,
                           std::vector<double>& out) {
    const std::size_t D = model.config.dim;
    out.assign(D, 0.0);
    auto it = model.index.find(word);
    if (model.config.mode == EmbeddingMode::cbow_word) {
        if (it == model.index.end()) return false;
        const auto wv = model.word_vector(it->second);
        for (std::size_t k = 0; k < D; ++k) out[k] = wv[k];
        return true;
    }
    if (it != model.index.end()) {
        const auto wv = model.word_vector(it->second);
        for (std::size_t k = 0; k < D; ++k) out[k] = wv[k];
    }
    const auto buckets = detail::subword_buckets(word, model.config.minn,
                                                 model.config.maxn,
                                                 model.config.bucket_count);
    if (!buckets.empty()) {
        const double s = 1.0 / static_cast<double>(buckets.size());
        for (std::size_t b : buckets) {
            const float* bv = model.bucket_vectors.data() + b * D;
            for (std::size_t k = 0; k < D; ++k) out[k] += s * bv[k];
        }
    } else if (it == model.index.end()) {
        return false;
    }
    return true;
}

// Document vector = arithmetic mean of per-token embeddings.
inline std::vector<double> embed_document(const EmbeddingModel& model,
                                          const CleanDocument& doc) {
    const std::size_t D = model.config.dim;
    std::vector<double> acc(D, 0.0), tmp;
    std::size_t n = 0;
    for (const auto& tok : doc.tokens) {
        if (!word_embedding(model, tok, tmp)) continue;
        for (std::size_t k = 0; k < D; ++k) acc[k] += tmp[k];
        ++n;
    }
    if (n > 0)
        for (auto& v : acc) v /= static_cast<double>(n);
    return acc;
}

inline FeatureMatrix embedding_feature_matrix(const EmbeddingModel& model,
                                              const std::vector<CleanDocument>& docs,
                                              const std::string& set_name) {
    const std::size_t D = model.config.dim;
    FeatureMatrix out(set_name, docs.size(), D);
    for (std::size_t c = 0; c < D; ++c)
        out.column_labels[c] = "dim" + std::to_string(c);
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto v = embed_document(model, docs[d]);
        for (std::size_t c = 0; c < D; ++c) out.at(d, c) = static_cast<float>(v[c]);
    }
    return out;
}

}  // namespace featforge
