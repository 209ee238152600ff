#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "featforge/corpus.hpp"
#include "featforge/embedding.hpp"
#include "featforge/matrix.hpp"
#include "featforge/metrics.hpp"
#include "featforge/ngram.hpp"
#include "featforge/nn.hpp"
#include "featforge/preprocess.hpp"
#include "featforge/selection.hpp"
#include "featforge/stats_features.hpp"
#include "featforge/tfidf.hpp"

namespace featforge {

inline constexpr const char* kToolVersion = "0.1.0";

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string hash_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot hash missing file: " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[1 << 16];
    while (is) {
        is.read(buf, sizeof buf);
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(is.gcount())), h);
    }
    return hex64(h);
}

inline std::string hash_string(const std::string& s) { return hex64(fnv1a64(s)); }

}  // namespace detail

inline int env_thread_cap() {
    if (const char* v = std::getenv("FEATFORGE_THREADS")) {
        const int n = std::atoi(v);
        if (n >= 1) return n;
    }
    return 0;  // 0 = hardware default
}

// ---------------------------------------------------------------------------

struct CnnRunConfig {
    std::string name;
    std::vector<std::string> sets;
    nn::BranchSpec branch;            // input_dim filled per set at build time
    nn::TrainConfig train;
    std::vector<std::size_t> head_units = {256, 128, 64};
    std::vector<double> head_dropout = {0.5, 0.3, 0.0};
};

struct ExperimentConfig {
    std::string corpus_path;
    CorpusFormat corpus_format = CorpusFormat::jsonl;
    SplitRatios ratios;
    std::uint64_t split_seed = 42;
    bool stratified = true;
    bool warn_duplicates = false;

    std::string stopwords_path;  // empty = no stopword removal
    bool no_stopwords = false;

    std::vector<std::string> extract_sets = {"tfidf", "word2vec", "fasttext",
                                             "ngram", "char", "stats"};
    TfidfConfig tfidf;        // word analyzer defaults
    TfidfConfig char_tfidf;   // overridden to char defaults at load
    CountConfig ngram;
    EmbeddingConfig word2vec;
    EmbeddingConfig fasttext;

    // selection
    std::size_t f_classif_top_k = 10;
    std::size_t rfe_target_k = 6;
    std::size_t rfe_step = 0;  // 0 = auto (~5% of columns)
    int mi_bins = 16;
    SelectionMetric forward_metric = SelectionMetric::f1_fake;
    std::size_t combos_k_min = 1;
    LogisticConfig logistic;
    ForestConfig forest;

    std::vector<CnnRunConfig> cnn_runs;
    std::string output_dir = "out";

    nlohmann::json raw;  // the config file as parsed, for hashing/echo
};

namespace detail {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline void load_train_config(const nlohmann::json& j, nn::TrainConfig& t) {
    maybe(j, "epochs", t.epochs);
    maybe(j, "lr", t.lr);
    maybe(j, "batch", t.batch);
    maybe(j, "early_stop_patience", t.early_stop_patience);
    maybe(j, "plateau_patience", t.plateau_patience);
    maybe(j, "plateau_factor", t.plateau_factor);
    maybe(j, "min_lr", t.min_lr);
    maybe(j, "seed", t.seed);
}

inline void load_embedding_config(const nlohmann::json& j, EmbeddingConfig& e) {
    maybe(j, "dim", e.dim);
    maybe(j, "window", e.window);
    maybe(j, "min_count", e.min_count);
    maybe(j, "epochs", e.epochs);
    maybe(j, "negatives", e.negatives);
    maybe(j, "initial_lr", e.initial_lr);
    maybe(j, "seed", e.seed);
    maybe(j, "threads", e.threads);
    maybe(j, "minn", e.minn);
    maybe(j, "maxn", e.maxn);
    maybe(j, "bucket_count", e.bucket_count);
}

}  // namespace detail

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("missing config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config parse error: " + std::string(e.what()));
    }
    ExperimentConfig cfg;
    cfg.raw = j;

    const auto& corpus = j.at("corpus");
    cfg.corpus_path = corpus.at("path").get<std::string>();
    const auto fmt = corpus.value("format", std::string("jsonl"));
    if (fmt == "csv") cfg.corpus_format = CorpusFormat::csv;
    else if (fmt == "jsonl") cfg.corpus_format = CorpusFormat::jsonl;
    else throw std::runtime_error("config: corpus.format must be csv or jsonl");

    if (j.contains("split")) {
        const auto& s = j["split"];
        detail::maybe(s, "train", cfg.ratios.train);
        detail::maybe(s, "val", cfg.ratios.val);
        detail::maybe(s, "test", cfg.ratios.test);
        detail::maybe(s, "seed", cfg.split_seed);
        detail::maybe(s, "stratified", cfg.stratified);
    }
    detail::maybe(j, "stopwords_path", cfg.stopwords_path);
    detail::maybe(j, "no_stopwords", cfg.no_stopwords);
    detail::maybe(j, "warn_duplicates", cfg.warn_duplicates);
    detail::maybe(j, "output_dir", cfg.output_dir);
    detail::maybe(j, "extract_sets", cfg.extract_sets);

    // char-tfidf defaults differ from the word analyzer
    cfg.char_tfidf.analyzer = TfidfAnalyzer::character;
    cfg.char_tfidf.ngram_lo = 2;
    cfg.char_tfidf.ngram_hi = 4;
    cfg.char_tfidf.max_features = 1000;
    cfg.word2vec.mode = EmbeddingMode::cbow_word;
    cfg.word2vec.threads = 4;
    cfg.fasttext.mode = EmbeddingMode::cbow_subword;
    cfg.fasttext.threads = 4;

    if (j.contains("extractors")) {
        const auto& ex = j["extractors"];
        if (ex.contains("tfidf")) {
            const auto& t = ex["tfidf"];
            detail::maybe(t, "ngram_lo", cfg.tfidf.ngram_lo);
            detail::maybe(t, "ngram_hi", cfg.tfidf.ngram_hi);
            detail::maybe(t, "max_features", cfg.tfidf.max_features);
            detail::maybe(t, "min_df", cfg.tfidf.min_df);
            detail::maybe(t, "max_df_frac", cfg.tfidf.max_df_frac);
        }
        if (ex.contains("char")) {
            const auto& t = ex["char"];
            detail::maybe(t, "ngram_lo", cfg.char_tfidf.ngram_lo);
            detail::maybe(t, "ngram_hi", cfg.char_tfidf.ngram_hi);
            detail::maybe(t, "max_features", cfg.char_tfidf.max_features);
            detail::maybe(t, "min_df", cfg.char_tfidf.min_df);
            detail::maybe(t, "max_df_frac", cfg.char_tfidf.max_df_frac);
            detail::maybe(t, "cross_tokens", cfg.char_tfidf.char_cross_tokens);
        }
        if (ex.contains("ngram")) {
            const auto& t = ex["ngram"];
            detail::maybe(t, "ngram_lo", cfg.ngram.ngram_lo);
            detail::maybe(t, "ngram_hi", cfg.ngram.ngram_hi);
            detail::maybe(t, "max_features", cfg.ngram.max_features);
            detail::maybe(t, "min_df", cfg.ngram.min_df);
        }
        if (ex.contains("word2vec")) detail::load_embedding_config(ex["word2vec"], cfg.word2vec);
        if (ex.contains("fasttext")) detail::load_embedding_config(ex["fasttext"], cfg.fasttext);
    }

    if (j.contains("selection")) {
        const auto& s = j["selection"];
        detail::maybe(s, "f_classif_top_k", cfg.f_classif_top_k);
        detail::maybe(s, "rfe_target_k", cfg.rfe_target_k);
        detail::maybe(s, "rfe_step", cfg.rfe_step);
        detail::maybe(s, "mi_bins", cfg.mi_bins);
        detail::maybe(s, "combos_k_min", cfg.combos_k_min);
        if (s.contains("forward_metric")) {
            const auto m = s["forward_metric"].get<std::string>();
            if (m == "f1_fake") cfg.forward_metric = SelectionMetric::f1_fake;
            else if (m == "f1_macro") cfg.forward_metric = SelectionMetric::f1_macro;
            else throw std::runtime_error("config: forward_metric must be f1_fake or f1_macro");
        }
        if (s.contains("logistic")) {
            const auto& l = s["logistic"];
            detail::maybe(l, "l2", cfg.logistic.l2);
            detail::maybe(l, "max_epochs", cfg.logistic.max_epochs);
            detail::maybe(l, "tol", cfg.logistic.tol);
            detail::maybe(l, "seed", cfg.logistic.seed);
        }
        if (s.contains("forest")) {
            const auto& f = s["forest"];
            detail::maybe(f, "n_trees", cfg.forest.n_trees);
            detail::maybe(f, "max_depth", cfg.forest.max_depth);
            detail::maybe(f, "min_leaf", cfg.forest.min_leaf);
            detail::maybe(f, "seed", cfg.forest.seed);
        }
    }

    if (j.contains("cnn_runs")) {
        for (const auto& r : j["cnn_runs"]) {
            CnnRunConfig run;
            run.name = r.at("name").get<std::string>();
            run.sets = r.at("sets").get<std::vector<std::string>>();
            if (r.contains("branch")) {
                const auto& b = r["branch"];
                detail::maybe(b, "filters", run.branch.filters);
                detail::maybe(b, "kernel", run.branch.kernel);
                detail::maybe(b, "dropout", run.branch.dropout);
            }
            if (r.contains("train")) detail::load_train_config(r["train"], run.train);
            detail::maybe(r, "head_units", run.head_units);
            detail::maybe(r, "head_dropout", run.head_dropout);
            for (const auto& s : run.sets) {
                bool known = false;
                for (const auto& e : cfg.extract_sets) known |= e == s;
                if (!known)
                    throw std::runtime_error("config: cnn run '" + run.name +
                                             "' references unknown feature set '" + s + "'");
            }
            cfg.cnn_runs.push_back(std::move(run));
        }
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Stage cache: each stage writes a stamp file with its config key and the
// hashes of its inputs and outputs. A stage is skipped when the stamp and
// every output hash still match.

struct StageResult {
    std::string name;
    bool cached = false;
    double seconds = 0.0;
    std::vector<std::string> artifacts;
};

struct RunManifest {
    std::string config_hash;
    std::string corpus_hash;
    std::string tool_version = kToolVersion;
    std::vector<StageResult> stages;

    nlohmann::json to_json(const std::string& out_dir) const {
        nlohmann::json stages_j = nlohmann::json::array();
        for (const auto& s : stages) {
            nlohmann::json arts = nlohmann::json::array();
            for (const auto& a : s.artifacts)
                arts.push_back({{"path", a}, {"hash", detail::hash_file(a)}});
            stages_j.push_back({{"name", s.name}, {"cached", s.cached},
                                {"seconds", s.seconds}, {"artifacts", arts}});
        }
        return {{"config_hash", config_hash}, {"corpus_hash", corpus_hash},
                {"tool_version", tool_version}, {"output_dir", out_dir},
                {"stages", stages_j}};
    }
};

namespace detail {

struct StageRunner {
    std::filesystem::path out_dir;
    RunManifest& manifest;

    // Runs `body` unless the stamp for (name, key) is valid and every
    // declared output still hashes the same.
    template <typename Body>
    void run(const std::string& name, const std::string& key,
             const std::vector<std::string>& outputs, Body&& body) {
        const auto stamp_path = out_dir / (name + ".stamp.json");
        StageResult result;
        result.name = name;
        for (const auto& o : outputs) result.artifacts.push_back(o);

        if (std::filesystem::exists(stamp_path)) {
            try {
                std::ifstream is(stamp_path);
                const auto stamp = nlohmann::json::parse(is);
                if (stamp.at("key").get<std::string>() == key) {
                    bool ok = true;
                    for (const auto& art : stamp.at("outputs")) {
                        const auto p = art.at("path").get<std::string>();
                        if (!std::filesystem::exists(p) ||
                            hash_file(p) != art.at("hash").get<std::string>()) {
                            ok = false;
                            break;
                        }
                    }
                    if (ok) {
                        result.cached = true;
                        manifest.stages.push_back(std::move(result));
                        return;
                    }
                }
            } catch (...) {
                // unreadable stamp: fall through and rerun
            }
        }

        // quarantine partial outputs on failure
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body();
        } catch (...) {
            for (const auto& o : outputs)
                if (std::filesystem::exists(o))
                    std::filesystem::rename(o, o + ".partial");
            throw;
        }
        result.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        nlohmann::json outs = nlohmann::json::array();
        for (const auto& o : outputs)
            outs.push_back({{"path", o}, {"hash", hash_file(o)}});
        std::ofstream os(stamp_path);
        os << nlohmann::json{{"key", key}, {"outputs", outs}}.dump(2) << "\n";
        manifest.stages.push_back(std::move(result));
    }
};

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << content;
}

inline std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pipeline: the stages are also exposed individually for the CLI.

class Pipeline {
public:
    explicit Pipeline(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
        std::filesystem::create_directories(cfg_.output_dir);
        manifest_.config_hash = detail::hash_string(cfg_.raw.dump());
        manifest_.corpus_hash = detail::hash_file(cfg_.corpus_path);
    }

    const RunManifest& manifest() const { return manifest_; }
    const ExperimentConfig& config() const { return cfg_; }

    std::string out(const std::string& name) const {
        return (std::filesystem::path(cfg_.output_dir) / name).string();
    }

    void prepare() {
        detail::StageRunner runner{cfg_.output_dir, manifest_};
        const std::string key = stage_key({"split"}) + manifest_.corpus_hash;
        const std::vector<std::string> outputs = {out("split_train.jsonl"),
                                                  out("split_val.jsonl"),
                                                  out("split_test.jsonl")};
        runner.run("prepare", key, outputs, [&] {
            const auto corpus = load_corpus(cfg_.corpus_path, cfg_.corpus_format);
            if (cfg_.warn_duplicates) {
                const auto dups = count_duplicate_texts(corpus);
                if (dups > 0)
                    std::fprintf(stderr, "warning: %zu exact-text duplicate documents\n",
                                 dups);
            }
            const auto split =
                split_dataset(corpus, cfg_.ratios, cfg_.split_seed, cfg_.stratified);
            write_split(split.train, outputs[0]);
            write_split(split.val, outputs[1]);
            write_split(split.test, outputs[2]);
        });
    }

    void extract() {
        prepare();
        load_splits();
        detail::StageRunner runner{cfg_.output_dir, manifest_};
        const int cap = env_thread_cap();

        for (const auto& set : cfg_.extract_sets) {
            std::vector<std::string> outputs;
            for (const char* part : {"train", "val", "test"})
                outputs.push_back(out(set + "_" + part + ".fmat"));
            outputs.push_back(out(set + ".meta.json"));
            const std::string key =
                stage_key({"split", "extractors", "stopwords_path", "no_stopwords"}) +
                manifest_.corpus_hash + "|" + set;
            runner.run("extract:" + set, key, outputs, [&, set] {
                extract_one(set, outputs, cap);
            });
        }
    }

    void select() {
        extract();
        detail::StageRunner runner{cfg_.output_dir, manifest_};
        const std::vector<std::string> outputs = {
            out("selection_report.json"), out("f_classif.csv"), out("chi2.csv"),
            out("mutual_info.csv"), out("rf_importance.csv"), out("rfe.csv")};
        const std::string key =
            stage_key({"split", "extractors", "selection", "stopwords_path",
                       "no_stopwords", "extract_sets"}) + manifest_.corpus_hash;
        runner.run("select", key, outputs, [&] { run_selection(outputs); });
    }

    void combos() {
        extract();
        detail::StageRunner runner{cfg_.output_dir, manifest_};
        const std::vector<std::string> outputs = {out("combinations.csv")};
        const std::string key =
            stage_key({"split", "extractors", "selection", "stopwords_path",
                       "no_stopwords", "extract_sets"}) + manifest_.corpus_hash + "|combos";
        runner.run("combos", key, outputs, [&] { run_combos(outputs[0]); });
    }

    void train_cnn() {
        extract();
        detail::StageRunner runner{cfg_.output_dir, manifest_};
        for (const auto& run : cfg_.cnn_runs) {
            std::vector<std::string> outputs = {out("cnn_" + run.name + "_history.csv"),
                                                out("cnn_" + run.name + "_metrics.json"),
                                                out("cnn_" + run.name + ".ckpt")};
            const std::string key =
                stage_key({"split", "extractors", "cnn_runs", "stopwords_path",
                           "no_stopwords"}) + manifest_.corpus_hash + "|" + run.name;
            runner.run("train-cnn:" + run.name, key, outputs,
                       [&, run] { run_cnn(run, outputs); });
        }
    }

    void report() {
        train_cnn();
        detail::StageRunner runner{cfg_.output_dir, manifest_};
        const std::vector<std::string> outputs = {out("comparison.csv"),
                                                  out("comparison.json"),
                                                  out("fake_class.csv")};
        const std::string key = stage_key({"cnn_runs"}) + manifest_.corpus_hash + "|report";
        runner.run("report", key, outputs, [&] { emit_comparison(outputs); });
    }

    void run_all() {
        select();
        combos();
        report();
        write_manifest();
    }

    void write_manifest() {
        std::ofstream os(out("run_manifest.json"));
        os << manifest_.to_json(cfg_.output_dir).dump(2) << "\n";
    }

private:
    ExperimentConfig cfg_;
    RunManifest manifest_;
    std::optional<DatasetSplit> split_;
    std::map<std::string, std::vector<CleanDocument>> clean_;  // part -> docs
    std::vector<int> y_train_, y_val_, y_test_;

    std::string stage_key(const std::vector<std::string>& config_keys) const {
        nlohmann::json sub;
        for (const auto& k : config_keys)
            if (cfg_.raw.contains(k)) sub[k] = cfg_.raw[k];
        return detail::hash_string(sub.dump()) + "|v" + kToolVersion + "|";
    }

    static void write_split(const Corpus& docs, const std::string& path) {
        std::ofstream os(path, std::ios::binary);
        for (const auto& d : docs)
            os << nlohmann::json{{"id", d.id}, {"text", d.raw_text}, {"label", d.label}}
                      .dump()
               << "\n";
    }

    void load_splits() {
        if (split_) return;
        DatasetSplit s;
        s.train = load_corpus(out("split_train.jsonl"), CorpusFormat::jsonl);
        s.val = load_corpus(out("split_val.jsonl"), CorpusFormat::jsonl);
        s.test = load_corpus(out("split_test.jsonl"), CorpusFormat::jsonl);
        split_ = std::move(s);

        StopwordList stopwords;
        if (!cfg_.no_stopwords && !cfg_.stopwords_path.empty())
            stopwords = StopwordList::load(cfg_.stopwords_path);
        auto clean_all = [&](const Corpus& docs) {
            std::vector<CleanDocument> cds;
            cds.reserve(docs.size());
            for (const auto& d : docs) cds.push_back(clean_document(d, stopwords));
            return cds;
        };
        clean_["train"] = clean_all(split_->train);
        clean_["val"] = clean_all(split_->val);
        clean_["test"] = clean_all(split_->test);
        auto labels = [](const Corpus& docs) {
            std::vector<int> y;
            y.reserve(docs.size());
            for (const auto& d : docs) y.push_back(d.label);
            return y;
        };
        y_train_ = labels(split_->train);
        y_val_ = labels(split_->val);
        y_test_ = labels(split_->test);
    }

    void save_set(const std::string& set, const FeatureMatrix& train,
                  const FeatureMatrix& val, const FeatureMatrix& test,
                  const nlohmann::json& config_echo,
                  const std::vector<std::string>& outputs) {
        save_fmat(train, outputs[0]);
        save_fmat(val, outputs[1]);
        save_fmat(test, outputs[2]);
        nlohmann::json meta = {{"set_name", set},
                               {"column_labels", train.column_labels},
                               {"corpus_hash", manifest_.corpus_hash},
                               {"config", config_echo}};
        detail::write_text(outputs[3], meta.dump(2) + "\n");
    }

    void extract_one(const std::string& set, const std::vector<std::string>& outputs,
                     int thread_cap) {
        const auto& tr = clean_.at("train");
        const auto& va = clean_.at("val");
        const auto& te = clean_.at("test");
        if (set == "tfidf") {
            const auto model = fit_word_tfidf(tr, cfg_.tfidf);
            save_set(set, apply_tfidf(model, tr, set), apply_tfidf(model, va, set),
                     apply_tfidf(model, te, set),
                     {{"max_features", cfg_.tfidf.max_features},
                      {"min_df", cfg_.tfidf.min_df},
                      {"max_df_frac", cfg_.tfidf.max_df_frac},
                      {"ngram", {cfg_.tfidf.ngram_lo, cfg_.tfidf.ngram_hi}}},
                     outputs);
        } else if (set == "char") {
            const auto model = fit_tfidf(tr, cfg_.char_tfidf);
            save_set(set, apply_tfidf(model, tr, set), apply_tfidf(model, va, set),
                     apply_tfidf(model, te, set),
                     {{"max_features", cfg_.char_tfidf.max_features},
                      {"min_df", cfg_.char_tfidf.min_df},
                      {"ngram", {cfg_.char_tfidf.ngram_lo, cfg_.char_tfidf.ngram_hi}},
                      {"cross_tokens", cfg_.char_tfidf.char_cross_tokens}},
                     outputs);
        } else if (set == "ngram") {
            const auto model = fit_ngram_counts(tr, cfg_.ngram);
            save_set(set, apply_ngram_counts(model, tr, set),
                     apply_ngram_counts(model, va, set), apply_ngram_counts(model, te, set),
                     {{"max_features", cfg_.ngram.max_features},
                      {"min_df", cfg_.ngram.min_df},
                      {"ngram", {cfg_.ngram.ngram_lo, cfg_.ngram.ngram_hi}}},
                     outputs);
        } else if (set == "word2vec" || set == "fasttext") {
            EmbeddingConfig ecfg = set == "word2vec" ? cfg_.word2vec : cfg_.fasttext;
            if (thread_cap > 0) ecfg.threads = std::min(ecfg.threads, thread_cap);
            const auto model = train_embeddings(tr, ecfg);
            save_set(set, embedding_feature_matrix(model, tr, set),
                     embedding_feature_matrix(model, va, set),
                     embedding_feature_matrix(model, te, set),
                     {{"dim", ecfg.dim}, {"window", ecfg.window},
                      {"epochs", ecfg.epochs}, {"negatives", ecfg.negatives},
                      {"seed", ecfg.seed}, {"threads", ecfg.threads},
                      {"mode", set == "word2vec" ? "cbow_word" : "cbow_subword"}},
                     outputs);
        } else if (set == "stats") {
            save_set(set, stat_feature_matrix(split_->train, set),
                     stat_feature_matrix(split_->val, set),
                     stat_feature_matrix(split_->test, set), nlohmann::json::object(),
                     outputs);
        } else {
            throw std::runtime_error("unknown feature set: " + set);
        }
    }

    struct LoadedSets {
        std::map<std::string, FeatureMatrix> train, val, test;
        FeatureSets pairs() const {
            FeatureSets fs;
            for (const auto& [name, m] : train)
                fs.emplace(name, FeaturePair{&m, &val.at(name)});
            return fs;
        }
    };

    LoadedSets load_sets() {
        LoadedSets ls;
        for (const auto& set : cfg_.extract_sets) {
            auto fix = [&](FeatureMatrix m) {
                m.set_name = set;
                return m;
            };
            ls.train[set] = fix(load_fmat(out(set + "_train.fmat")));
            ls.val[set] = fix(load_fmat(out(set + "_val.fmat")));
            ls.test[set] = fix(load_fmat(out(set + "_test.fmat")));
            std::ifstream meta(out(set + ".meta.json"));
            const auto j = nlohmann::json::parse(meta);
            const auto labels = j.at("column_labels").get<std::vector<std::string>>();
            ls.train[set].column_labels = labels;
            ls.val[set].column_labels = labels;
            ls.test[set].column_labels = labels;
        }
        return ls;
    }

    static void write_scores_csv(const std::string& path, const FeatureMatrix& X,
                                 const ColumnScores& s) {
        std::ostringstream os;
        os << "column,score\n";
        for (std::size_t c = 0; c < s.scores.size(); ++c) {
            os << '"' << X.column_labels[c] << "\",";
            if (s.scores[c]) os << detail::format_double(*s.scores[c]);
            else os << "NaN";
            os << "\n";
        }
        detail::write_text(path, os.str());
    }

    void run_selection(const std::vector<std::string>& outputs) {
        auto ls = load_sets();
        const auto sets = ls.pairs();

        std::vector<const FeatureMatrix*> parts;
        for (const auto& [n, p] : sets) parts.push_back(p.train);
        const auto X_all = concatenate(parts);

        const auto f = anova_f_scores(X_all, y_train_);
        write_scores_csv(outputs[1], X_all, f);

        std::vector<std::size_t> fit_rows(X_all.rows);
        for (std::size_t i = 0; i < fit_rows.size(); ++i) fit_rows[i] = i;
        const auto X_scaled = minmax_scale(X_all, fit_rows);
        write_scores_csv(outputs[2], X_all, chi_square_scores(X_scaled, y_train_));
        write_scores_csv(outputs[3], X_all,
                         mutual_info_scores(X_all, y_train_, cfg_.mi_bins));

        {
            const auto forest = fit_forest(X_all, y_train_, cfg_.forest);
            const auto imp = forest_feature_importance(forest);
            ColumnScores s{ScoreMethod::rf_importance, {}, {}};
            for (double v : imp) s.scores.emplace_back(v);
            write_scores_csv(outputs[4], X_all, s);
        }
        {
            std::size_t step = cfg_.rfe_step;
            if (step == 0) step = std::max<std::size_t>(1, X_all.cols / 20);
            const auto rfe = rfe_select(X_all, y_train_, cfg_.rfe_target_k, step,
                                        cfg_.logistic);
            write_scores_csv(outputs[5], X_all, rfe);
        }

        SetReportConfig rcfg;
        rcfg.f_classif_top_k = cfg_.f_classif_top_k;
        rcfg.forest = cfg_.forest;
        rcfg.logistic = cfg_.logistic;
        rcfg.forward_metric = cfg_.forward_metric;
        const auto report = build_set_report(sets, y_train_, y_val_, rcfg);

        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : report.rows) {
            nlohmann::json row = {{"feature", r.set_name},
                                  {"f_classif_selected", r.f_classif_selected},
                                  {"rf_mean_importance", r.rf_mean_importance},
                                  {"overall_rank", r.overall_rank}};
            row["correlation_score"] =
                r.correlation_score ? nlohmann::json(*r.correlation_score)
                                    : nlohmann::json();
            if (r.forward_step) {
                row["forward_step"] = *r.forward_step;
                row["forward_f1"] = *r.forward_f1;
            } else {
                row["forward_step"] = nullptr;
            }
            rows.push_back(std::move(row));
        }
        detail::write_text(outputs[0], nlohmann::json{{"rows", rows}}.dump(2) + "\n");
    }

    void run_combos(const std::string& path) {
        auto ls = load_sets();
        const auto results =
            combo_test(ls.pairs(), y_train_, y_val_, cfg_.combos_k_min, cfg_.logistic);
        std::ostringstream os;
        os << "subset,accuracy,f1_fake,f1_real,f1_macro\n";
        for (const auto& r : results) {
            std::string subset;
            for (const auto& n : r.subset) {
                if (!subset.empty()) subset += "+";
                subset += n;
            }
            os << subset << ',' << detail::format_double(r.accuracy) << ','
               << detail::format_double(r.f1_fake) << ','
               << detail::format_double(r.f1_real) << ','
               << detail::format_double(r.f1_macro) << "\n";
        }
        detail::write_text(path, os.str());
    }

    void run_cnn(const CnnRunConfig& run, const std::vector<std::string>& outputs) {
        auto ls = load_sets();
        std::vector<const FeatureMatrix*> tp, vp, ep;
        nn::CnnSpec spec;
        spec.seed = run.train.seed;
        spec.head_units = run.head_units;
        spec.head_dropout = run.head_dropout;
        std::vector<std::string> ordered = run.sets;
        std::sort(ordered.begin(), ordered.end());
        for (const auto& s : ordered) {
            tp.push_back(&ls.train.at(s));
            vp.push_back(&ls.val.at(s));
            ep.push_back(&ls.test.at(s));
            nn::BranchSpec b = run.branch;
            b.input_dim = ls.train.at(s).cols;
            spec.branches.push_back(b);
        }
        const auto X_train = concatenate(tp);
        const auto X_val = concatenate(vp);
        const auto X_test = concatenate(ep);

        auto model = nn::build_multibranch_cnn<float>(spec);
        const auto hist = nn::train(model, X_train, y_train_, X_val, y_val_, run.train);

        std::ostringstream os;
        os << "epoch,lr,train_loss,val_loss,train_acc,val_acc,train_precision,"
              "val_precision,train_recall,val_recall\n";
        for (std::size_t e = 0; e < hist.train.size(); ++e) {
            os << (e + 1) << ',' << detail::format_double(hist.lr[e]) << ','
               << detail::format_double(hist.train[e].loss) << ','
               << detail::format_double(hist.val[e].loss) << ','
               << detail::format_double(hist.train[e].accuracy) << ','
               << detail::format_double(hist.val[e].accuracy) << ','
               << detail::format_double(hist.train[e].precision) << ','
               << detail::format_double(hist.val[e].precision) << ','
               << detail::format_double(hist.train[e].recall) << ','
               << detail::format_double(hist.val[e].recall) << "\n";
        }
        detail::write_text(outputs[0], os.str());

        const auto pred = nn::predict_labels(model, X_test);
        auto rep = classification_report(y_test_, pred);
        auto j = report_to_json(rep);
        j["run"] = run.name;
        j["sets"] = ordered;
        j["history_meta"] = hist.metadata;
        j["stopped_epoch"] = hist.stopped_epoch;
        j["best_epoch"] = hist.best_epoch;
        detail::write_text(outputs[1], j.dump(2) + "\n");

        nn::save_checkpoint(model, outputs[2]);
    }

    void emit_comparison(const std::vector<std::string>& outputs) {
        struct Row {
            std::string name, sets;
            ClassificationReport rep;
        };
        std::vector<Row> rows;
        for (const auto& run : cfg_.cnn_runs) {
            std::ifstream is(out("cnn_" + run.name + "_metrics.json"));
            if (!is) throw std::runtime_error("missing metrics for run " + run.name);
            const auto j = nlohmann::json::parse(is);
            Row row;
            row.name = run.name;
            const auto sets = j.at("sets").get<std::vector<std::string>>();
            for (const auto& s : sets) {
                if (!row.sets.empty()) row.sets += "+";
                row.sets += s;
            }
            row.rep.accuracy = j.at("accuracy");
            auto cm = [&](const nlohmann::json& m, ClassMetrics& out_m) {
                out_m.precision = m.at("p");
                out_m.recall = m.at("r");
                out_m.f1 = m.at("f1");
            };
            cm(j.at("macro"), row.rep.macro);
            cm(j.at("per_class").at("fake"), row.rep.fake);
            cm(j.at("per_class").at("real"), row.rep.real);
            rows.push_back(std::move(row));
        }
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            return a.rep.macro.f1 > b.rep.macro.f1;
        });

        std::ostringstream csv;
        csv << "run,sets,accuracy,precision,recall,f1\n";
        nlohmann::json jrows = nlohmann::json::array();
        for (const auto& r : rows) {
            csv << r.name << ',' << r.sets << ','
                << detail::format_double(r.rep.accuracy) << ','
                << detail::format_double(r.rep.macro.precision) << ','
                << detail::format_double(r.rep.macro.recall) << ','
                << detail::format_double(r.rep.macro.f1) << "\n";
            jrows.push_back({{"run", r.name}, {"sets", r.sets},
                             {"accuracy", r.rep.accuracy},
                             {"precision", r.rep.macro.precision},
                             {"recall", r.rep.macro.recall}, {"f1", r.rep.macro.f1}});
        }
        detail::write_text(outputs[0], csv.str());
        detail::write_text(outputs[1], nlohmann::json{{"rows", jrows}}.dump(2) + "\n");

        std::ostringstream fake;
        fake << "run,sets,precision,recall,f1\n";
        for (const auto& r : rows)
            fake << r.name << ',' << r.sets << ','
                 << detail::format_double(r.rep.fake.precision) << ','
                 << detail::format_double(r.rep.fake.recall) << ','
                 << detail::format_double(r.rep.fake.f1) << "\n";
        detail::write_text(outputs[2], fake.str());
    }
};

}  // namespace featforge
