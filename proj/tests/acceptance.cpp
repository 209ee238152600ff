// Acceptance suite: one pass/fail line per criterion, exit 0 only if all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "featforge/experiment.hpp"
#include "synthetic.hpp"

using namespace featforge;
namespace fs = std::filesystem;

namespace {

struct Harness {
    int failures = 0;
    int index = 0;

    void run(const std::string& name, const std::function<bool()>& fn) {
        ++index;
        bool ok = false;
        std::string err;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            ok = fn();
        } catch (const std::exception& e) {
            err = e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s  %d %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", index, name.c_str(),
                    secs, err.empty() ? "" : " error: ", err.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(is), {}};
}

fs::path work_dir() {
    const auto d = fs::temp_directory_path() / "featforge_acceptance";
    fs::create_directories(d);
    return d;
}

CleanDocument doc(std::string id, std::vector<std::string> tokens) {
    return {std::move(id), std::move(tokens), ""};
}

// ---------------------------------------------------------------------------
// 1. documented repro config parses

bool check_repro_config() {
    const fs::path cfg = fs::path(FF_REPO_DIR) / "configs" / "repro.json";
    if (!fs::exists(cfg)) return false;
    const auto parsed = load_experiment_config(cfg.string());
    return !parsed.corpus_path.empty() && parsed.extract_sets.size() == 6 &&
           !parsed.cnn_runs.empty();
}

// ---------------------------------------------------------------------------
// 2. tf-idf against a brute-force oracle

std::vector<CleanDocument> random_docs(std::size_t n, std::mt19937_64& rng) {
    static const std::vector<std::string> vocab = {"ক", "খবর", "ab", "cd", "e",
                                                   "১২", "ঢাকা", "x", "yz"};
    std::vector<CleanDocument> docs;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> toks;
        const std::size_t len = 1 + rng() % 8;
        for (std::size_t k = 0; k < len; ++k) toks.push_back(vocab[rng() % vocab.size()]);
        docs.push_back(doc("d" + std::to_string(i), std::move(toks)));
    }
    return docs;
}

bool tfidf_matches_oracle(const std::vector<CleanDocument>& train,
                          const std::vector<CleanDocument>& docs,
                          const TfidfConfig& cfg, const FeatureMatrix& got) {
    auto grams_of = [&](const CleanDocument& d) {
        std::vector<std::string> g;
        if (cfg.analyzer == TfidfAnalyzer::word)
            detail::word_ngrams(d.tokens, cfg.ngram_lo, cfg.ngram_hi, g);
        else
            detail::char_ngrams(d.tokens, cfg.ngram_lo, cfg.ngram_hi,
                                cfg.char_cross_tokens, g);
        return g;
    };
    std::map<std::string, std::size_t> df;
    for (const auto& d : train) {
        std::set<std::string> seen;
        for (const auto& g : grams_of(d)) seen.insert(g);
        for (const auto& g : seen) ++df[g];
    }
    std::vector<std::string> columns;
    for (const auto& [term, n] : df) {
        if (n < cfg.min_df) continue;
        if (static_cast<double>(n) > cfg.max_df_frac * train.size()) continue;
        columns.push_back(term);
    }
    if (got.column_labels != columns) return false;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto grams = grams_of(docs[d]);
        std::vector<double> row(columns.size(), 0.0);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            std::size_t count = 0;
            for (const auto& g : grams) count += g == columns[c];
            if (grams.empty()) continue;
            const double tf = static_cast<double>(count) / grams.size();
            const double idf =
                std::log((1.0 + train.size()) / (1.0 + df.at(columns[c]))) + 1.0;
            row[c] = tf * idf;
        }
        double norm = 0.0;
        for (double x : row) norm += x * x;
        norm = std::sqrt(norm);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const double want = norm > 0 ? row[c] / norm : 0.0;
            if (std::abs(got.at(d, c) - want) >= 1e-6) return false;
        }
    }
    return true;
}

bool check_tfidf_oracle() {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 3; ++trial) {
        const auto train = random_docs(10, rng);
        const auto test = random_docs(5, rng);

        TfidfConfig wcfg;
        wcfg.min_df = 1;
        wcfg.max_df_frac = 1.0;
        wcfg.max_features = 100000;
        const auto wmodel = fit_word_tfidf(train, wcfg);
        if (!tfidf_matches_oracle(train, test, wmodel.config,
                                  apply_tfidf(wmodel, test)))
            return false;

        TfidfConfig ccfg = wcfg;
        ccfg.analyzer = TfidfAnalyzer::character;
        const auto cmodel = fit_char_tfidf(train, ccfg);
        if (!tfidf_matches_oracle(train, test, cmodel.config,
                                  apply_tfidf(cmodel, test)))
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// 3. statistical scoring against hand oracles, including degenerate inputs

FeatureMatrix column(const std::vector<float>& v) {
    FeatureMatrix m("x", v.size(), 1);
    for (std::size_t r = 0; r < v.size(); ++r) m.at(r, 0) = v[r];
    return m;
}

bool check_stat_oracles() {
    const auto near = [](double a, double b) { return std::abs(a - b) < 1e-9; };

    // pearson on a fixed vector pair
    const std::vector<double> px = {1, 2, 3, 4}, py = {1, 3, 2, 4};
    if (!pearson_r(px, py) || !near(*pearson_r(px, py), 0.8)) return false;
    const std::vector<double> constant = {2, 2, 2, 2};
    if (pearson_r(constant, py).has_value()) return false;  // undefined

    // anova: groups {0,1,2} vs {10,11,12} -> msb 150, msw 1
    const std::vector<int> y6 = {0, 0, 0, 1, 1, 1};
    const auto f = anova_f_scores(column({0, 1, 2, 10, 11, 12}), y6);
    if (!near(*f.scores[0], 150.0)) return false;
    const auto f_inf = anova_f_scores(column({1, 1, 1, 5, 5, 5}), y6);
    if (!std::isinf(*f_inf.scores[0])) return false;  // perfect separation sentinel
    const auto f_const = anova_f_scores(column({3, 3, 3, 3, 3, 3}), y6);
    if (*f_const.scores[0] != 0.0) return false;

    // chi2: per-class sums 1 and 5 on balanced classes -> 8/3
    const std::vector<int> y4 = {0, 0, 1, 1};
    const auto chi = chi_square_scores(column({1, 0, 3, 2}), y4);
    if (!near(*chi.scores[0], 8.0 / 3.0)) return false;
    const auto chi_zero = chi_square_scores(column({0, 0, 0, 0}), y4);
    if (chi_zero.scores[0].has_value()) return false;  // undefined, not zero

    // mutual information: a label copy carries H(y)=ln 2, a constant carries 0
    std::vector<int> y16(16);
    FeatureMatrix mi_x("x", 16, 2);
    for (std::size_t r = 0; r < 16; ++r) {
        y16[r] = static_cast<int>(r % 2);
        mi_x.at(r, 0) = static_cast<float>(y16[r]);
        mi_x.at(r, 1) = 1.0f;
    }
    const auto mi = mutual_info_scores(mi_x, y16);
    if (!near(*mi.scores[0], std::log(2.0))) return false;
    if (!near(*mi.scores[1], 0.0)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// 4. gradient correctness for the CNN and the linear model

bool check_gradients() {
    nn::CnnSpec spec;
    spec.branches = {{6, 3, 2, 0.3}, {4, 3, 2, 0.3}};
    spec.head_units = {8, 4, 2};
    spec.head_dropout = {0.5, 0.3, 0.0};
    auto model = nn::build_multibranch_cnn<double>(spec);

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // zero-initialized biases plus dropout can park a pre-activation exactly
    // on the relu kink; randomize so finite differences stay well-defined
    for (auto& p : model.params) p = 0.5 * u(rng);
    std::vector<std::vector<double>> batch(5, std::vector<double>(spec.input_width()));
    for (auto& row : batch)
        for (auto& v : row) v = u(rng);
    const std::vector<int> labels = {1, 0, 1, 1, 0};

    for (bool training : {false, true}) {
        const auto rep = nn::gradient_check(model, batch, labels, training);
        if (rep.max_rel_error >= 1e-5) return false;
    }

    // logistic loss gradient vs central differences
    FeatureMatrix X("x", 6, 4);
    for (auto& v : X.values) v = static_cast<float>(u(rng));
    const std::vector<int> ly = {1, 0, 1, 0, 1, 0};
    std::vector<double> w = {0.4, -0.6, 0.2, 0.9};
    const double b = -0.3, l2 = 0.7, h = 1e-6;
    std::vector<double> gw;
    double gb;
    detail::logistic_loss_grad(X, ly, w, b, l2, gw, gb);
    for (std::size_t c = 0; c <= w.size(); ++c) {
        auto loss_at = [&](double delta) {
            auto wv = w;
            double bv = b;
            if (c < w.size()) wv[c] += delta;
            else bv += delta;
            return detail::logistic_loss(X, ly, wv, bv, l2);
        };
        const double fd = (loss_at(h) - loss_at(-h)) / (2 * h);
        const double analytic = c < w.size() ? gw[c] : gb;
        const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
        if (std::abs(fd - analytic) / denom >= 1e-5) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// 5. combination enumeration against an independent oracle

FeatureMatrix leak_matrix(std::span<const int> y, std::size_t flip_every,
                          const std::string& name, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    FeatureMatrix m(name, y.size(), 2);
    for (std::size_t r = 0; r < y.size(); ++r) {
        int v = y[r];
        if (flip_every && r % flip_every == 0) v = 1 - v;
        m.at(r, 0) = static_cast<float>(v) + 0.01f * (rng() % 5);
        m.at(r, 1) = 0.05f * (rng() % 9);
    }
    return m;
}

bool check_combo_enumeration() {
    std::vector<int> y_train(40), y_val(20);
    for (std::size_t i = 0; i < y_train.size(); ++i) y_train[i] = static_cast<int>(i % 2);
    for (std::size_t i = 0; i < y_val.size(); ++i) y_val[i] = static_cast<int>(i % 2);

    std::vector<FeatureMatrix> mats;
    for (int s = 0; s < 6; ++s) {
        mats.push_back(leak_matrix(y_train, 2 + s, "s" + std::to_string(s), 10 + s));
        mats.push_back(leak_matrix(y_val, 2 + s, "s" + std::to_string(s), 50 + s));
    }
    FeatureSets six;
    for (int s = 0; s < 6; ++s)
        six["s" + std::to_string(s)] = {&mats[2 * s], &mats[2 * s + 1]};
    const auto results6 = combo_test(six, y_train, y_val);
    if (results6.size() != 63) return false;
    for (std::size_t i = 1; i < results6.size(); ++i)
        if (results6[i].f1_fake > results6[i - 1].f1_fake) return false;

    // three-set instance, checked result-for-result against a bitmask oracle
    FeatureSets three;
    for (int s = 0; s < 3; ++s)
        three["s" + std::to_string(s)] = {&mats[2 * s], &mats[2 * s + 1]};
    const auto got = combo_test(three, y_train, y_val);

    std::vector<CombinationResult> want;
    std::vector<std::string> names = {"s0", "s1", "s2"};
    for (int mask = 1; mask < 8; ++mask) {
        CombinationResult res;
        std::vector<const FeatureMatrix*> tp, vp;
        for (int bitpos = 0; bitpos < 3; ++bitpos)
            if (mask & (1 << bitpos)) {
                res.subset.push_back(names[bitpos]);
                tp.push_back(three.at(names[bitpos]).train);
                vp.push_back(three.at(names[bitpos]).val);
            }
        const auto model = fit_logistic(concatenate(tp), y_train);
        const auto rep =
            classification_report(y_val, predict_logistic(model, concatenate(vp)));
        res.accuracy = rep.accuracy;
        res.f1_fake = rep.fake.f1;
        res.f1_real = rep.real.f1;
        res.f1_macro = rep.macro.f1;
        want.push_back(std::move(res));
    }
    std::stable_sort(want.begin(), want.end(),
                     [](const CombinationResult& a, const CombinationResult& b) {
                         if (a.f1_fake != b.f1_fake) return a.f1_fake > b.f1_fake;
                         if (a.subset.size() != b.subset.size())
                             return a.subset.size() < b.subset.size();
                         return a.subset < b.subset;
                     });
    if (got.size() != want.size()) return false;
    for (std::size_t i = 0; i < got.size(); ++i) {
        if (got[i].subset != want[i].subset) return false;
        if (got[i].accuracy != want[i].accuracy) return false;
        if (got[i].f1_fake != want[i].f1_fake) return false;
        if (got[i].f1_real != want[i].f1_real) return false;
        if (got[i].f1_macro != want[i].f1_macro) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// shared plumbing for the end-to-end criteria

nlohmann::json pipeline_config(const fs::path& corpus, const fs::path& out_dir) {
    return {
        {"corpus", {{"path", corpus.string()}, {"format", "jsonl"}}},
        {"split", {{"train", 0.65}, {"val", 0.15}, {"test", 0.20}, {"seed", 42}}},
        {"output_dir", out_dir.string()},
        {"extractors",
         {{"tfidf", {{"min_df", 1}, {"max_features", 400}}},
          {"char", {{"min_df", 1}, {"max_features", 300}}},
          {"ngram", {{"min_df", 1}, {"max_features", 300}}},
          {"word2vec", {{"dim", 32}, {"epochs", 3}, {"threads", 1}}},
          {"fasttext",
           {{"dim", 32}, {"epochs", 2}, {"threads", 1}, {"bucket_count", 65536}}}}},
        {"selection",
         {{"forest", {{"n_trees", 20}}}, {"logistic", {{"max_epochs", 80}}}}}};
}

ExperimentConfig write_and_load_config(const nlohmann::json& j, const fs::path& dir,
                                       const std::string& name) {
    const auto p = dir / name;
    std::ofstream os(p);
    os << j.dump(2);
    os.close();
    return load_experiment_config(p.string());
}

struct SetData {
    std::map<std::string, FeatureMatrix> train, val, test;
    std::vector<int> y_train, y_val, y_test;
};

SetData load_pipeline_sets(const fs::path& out,
                           const std::vector<std::string>& set_names) {
    SetData sd;
    for (const auto& s : set_names) {
        sd.train[s] = load_fmat((out / (s + "_train.fmat")).string());
        sd.val[s] = load_fmat((out / (s + "_val.fmat")).string());
        sd.test[s] = load_fmat((out / (s + "_test.fmat")).string());
    }
    auto labels = [&](const std::string& part) {
        std::vector<int> y;
        for (const auto& d :
             load_corpus((out / ("split_" + part + ".jsonl")).string(),
                         CorpusFormat::jsonl))
            y.push_back(d.label);
        return y;
    };
    sd.y_train = labels("train");
    sd.y_val = labels("val");
    sd.y_test = labels("test");
    return sd;
}

ClassificationReport train_cnn_on_sets(const SetData& sd,
                                       std::vector<std::string> sets, int epochs,
                                       std::uint64_t seed) {
    std::sort(sets.begin(), sets.end());
    std::vector<const FeatureMatrix*> tp, vp, ep;
    nn::CnnSpec spec;
    spec.seed = seed;
    spec.head_units = {64, 32};
    spec.head_dropout = {0.1, 0.0};
    for (const auto& s : sets) {
        tp.push_back(&sd.train.at(s));
        vp.push_back(&sd.val.at(s));
        ep.push_back(&sd.test.at(s));
        spec.branches.push_back({sd.train.at(s).cols, 32, 3, 0.1});
    }
    auto model = nn::build_multibranch_cnn<float>(spec);
    nn::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.lr = 2e-3;
    cfg.seed = seed;
    nn::train(model, concatenate(tp), sd.y_train, concatenate(vp), sd.y_val, cfg);
    const auto pred = nn::predict_labels(model, concatenate(ep));
    return classification_report(sd.y_test, pred);
}

const std::vector<std::string> kAllSets = {"tfidf", "word2vec", "fasttext",
                                           "ngram", "char", "stats"};

// ---------------------------------------------------------------------------
// 6. end-to-end separable-corpus sanity

bool check_end_to_end() {
    const auto dir = work_dir() / "e2e";
    fs::remove_all(dir);
    fs::create_directories(dir);
    synth::CorpusOptions opt;
    opt.n_docs = 1000;
    const auto corpus_path = (dir / "corpus.jsonl").string();
    synth::write_corpus_jsonl(synth::make_corpus(opt), corpus_path);

    const auto cfg =
        write_and_load_config(pipeline_config(dir / "corpus.jsonl", dir / "out"), dir,
                              "config.json");
    Pipeline pipeline(cfg);
    pipeline.select();
    pipeline.combos();
    pipeline.write_manifest();

    // read the winning combination from the emitted ranking
    std::istringstream combos(slurp(dir / "out" / "combinations.csv"));
    std::string line;
    std::getline(combos, line);  // header
    if (!std::getline(combos, line)) return false;
    const auto subset_field = line.substr(0, line.find(','));
    std::vector<std::string> best;
    std::stringstream ss(subset_field);
    std::string part;
    while (std::getline(ss, part, '+')) best.push_back(part);
    if (best.empty()) return false;

    const auto sd = load_pipeline_sets(dir / "out", kAllSets);
    const auto rep = train_cnn_on_sets(sd, best, /*epochs=*/50, /*seed=*/42);
    std::fprintf(stderr, "  end-to-end: best=%s test macro-F1=%.4f\n",
                 subset_field.c_str(), rep.macro.f1);
    return rep.macro.f1 >= 0.95;
}

// ---------------------------------------------------------------------------
// 7. multi-set combination beats single sets on fake-class recall under noise

bool check_noise_trend() {
    const auto dir = work_dir() / "noise";
    fs::remove_all(dir);
    fs::create_directories(dir);
    synth::CorpusOptions opt;
    opt.n_docs = 1000;
    opt.label_noise = 0.30;
    synth::write_corpus_jsonl(synth::make_corpus(opt), (dir / "corpus.jsonl").string());

    const auto cfg =
        write_and_load_config(pipeline_config(dir / "corpus.jsonl", dir / "out"), dir,
                              "config.json");
    Pipeline pipeline(cfg);
    pipeline.extract();
    const auto sd = load_pipeline_sets(dir / "out", kAllSets);

    const std::vector<std::string> combined = {"tfidf", "word2vec", "fasttext", "char",
                                               "stats"};
    auto recall = [&](const std::vector<std::string>& sets, std::uint64_t seed) {
        return train_cnn_on_sets(sd, sets, /*epochs=*/50, seed).fake.recall;
    };

    auto attempt = [&](std::uint64_t seed) {
        const double multi = recall(combined, seed);
        for (const auto& s : combined) {
            const double single = recall({s}, seed);
            std::fprintf(stderr, "  noise trend seed %llu: %s recall=%.4f multi=%.4f\n",
                         static_cast<unsigned long long>(seed), s.c_str(), single,
                         multi);
            if (multi < single) return false;
        }
        return true;
    };
    if (attempt(42)) return true;

    // flaky fallback: compare 3-seed medians instead of a single draw
    const std::vector<std::uint64_t> seeds = {42, 43, 44};
    auto median_recall = [&](const std::vector<std::string>& sets) {
        std::vector<double> r;
        for (auto s : seeds) r.push_back(recall(sets, s));
        std::sort(r.begin(), r.end());
        return r[1];
    };
    const double multi = median_recall(combined);
    for (const auto& s : combined)
        if (multi < median_recall({s})) return false;
    return true;
}

// ---------------------------------------------------------------------------
// 8. determinism and round trips

bool check_determinism() {
    const auto dir = work_dir() / "det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    synth::CorpusOptions opt;
    opt.n_docs = 120;
    synth::write_corpus_jsonl(synth::make_corpus(opt), (dir / "corpus.jsonl").string());

    auto ja = pipeline_config(dir / "corpus.jsonl", dir / "out_a");
    auto jb = ja;
    jb["output_dir"] = (dir / "out_b").string();
    Pipeline a(write_and_load_config(ja, dir, "cfg_a.json"));
    a.select();
    a.combos();
    Pipeline b(write_and_load_config(jb, dir, "cfg_b.json"));
    b.select();
    b.combos();

    std::vector<std::string> artifacts = {"combinations.csv", "selection_report.json",
                                          "f_classif.csv", "chi2.csv",
                                          "mutual_info.csv", "rf_importance.csv",
                                          "rfe.csv"};
    for (const auto& s : kAllSets)
        for (const std::string part : {"_train.fmat", "_val.fmat", "_test.fmat"})
            artifacts.push_back(s + part);
    for (const auto& name : artifacts)
        if (slurp(dir / "out_a" / name) != slurp(dir / "out_b" / name)) return false;

    // FMAT round trip is lossless
    const auto m = load_fmat((dir / "out_a" / "tfidf_train.fmat").string());
    const auto rt_path = (dir / "roundtrip.fmat").string();
    save_fmat(m, rt_path);
    if (slurp(dir / "out_a" / "tfidf_train.fmat") != slurp(rt_path)) return false;

    // checkpoint round trip preserves every parameter bit
    nn::CnnSpec spec;
    spec.branches = {{8, 4, 3, 0.3}};
    auto model = nn::build_multibranch_cnn<float>(spec);
    const auto ckpt = (dir / "model.ckpt").string();
    nn::save_checkpoint(model, ckpt);
    if (nn::load_checkpoint<float>(ckpt).params != model.params) return false;

    // emitted combination rows parse back to the recomputed values exactly
    auto sd = load_pipeline_sets(dir / "out_a", kAllSets);
    FeatureSets sets;
    for (const auto& s : kAllSets) {
        sd.train.at(s).set_name = s;
        sets[s] = {&sd.train.at(s), &sd.val.at(s)};
    }
    LogisticConfig lcfg;
    lcfg.max_epochs = 80;  // matches the pipeline config above
    const auto recomputed = combo_test(sets, sd.y_train, sd.y_val, 1, lcfg);
    std::istringstream csv(slurp(dir / "out_a" / "combinations.csv"));
    std::string line;
    std::getline(csv, line);  // header
    std::size_t i = 0;
    while (std::getline(csv, line)) {
        if (i >= recomputed.size()) return false;
        std::stringstream ss(line);
        std::string subset, acc, f1f, f1r, f1m;
        std::getline(ss, subset, ',');
        std::getline(ss, acc, ',');
        std::getline(ss, f1f, ',');
        std::getline(ss, f1r, ',');
        std::getline(ss, f1m, ',');
        std::string joined;
        for (const auto& n : recomputed[i].subset) {
            if (!joined.empty()) joined += "+";
            joined += n;
        }
        if (subset != joined) return false;
        if (std::stod(acc) != recomputed[i].accuracy) return false;
        if (std::stod(f1f) != recomputed[i].f1_fake) return false;
        if (std::stod(f1r) != recomputed[i].f1_real) return false;
        if (std::stod(f1m) != recomputed[i].f1_macro) return false;
        ++i;
    }
    return i == recomputed.size() && i == 63;
}

// ---------------------------------------------------------------------------
// 9. training-loop contract audit

bool check_train_contract() {
    nn::TrainConfig defaults;
    if (defaults.epochs != 50 || defaults.lr != 1e-4 || defaults.batch != 16 ||
        defaults.early_stop_patience != 5 || defaults.plateau_patience != 3 ||
        defaults.plateau_factor != 0.5 || defaults.min_lr != 1e-7)
        return false;
    nn::CnnSpec spec_defaults;
    if (spec_defaults.head_units != std::vector<std::size_t>{256, 128, 64}) return false;
    if (spec_defaults.head_dropout != std::vector<double>{0.5, 0.3, 0.0}) return false;
    nn::BranchSpec branch_defaults;
    if (branch_defaults.filters != 64 || branch_defaults.kernel != 3 ||
        branch_defaults.dropout != 0.3)
        return false;

    // construct a run where nothing after epoch 1 counts as improvement
    nn::CnnSpec spec;
    spec.branches = {{6, 4, 3, 0.2}};
    auto model = nn::build_multibranch_cnn<float>(spec);
    std::mt19937_64 rng(1);
    std::normal_distribution<float> noise(0.0f, 0.3f);
    FeatureMatrix X_train("x", 24, 6), X_val("x", 12, 6);
    std::vector<int> y_train(24), y_val(12);
    for (std::size_t r = 0; r < 24; ++r) {
        y_train[r] = static_cast<int>(r % 2);
        for (std::size_t c = 0; c < 6; ++c)
            X_train.at(r, c) = (y_train[r] ? 1.0f : -1.0f) + noise(rng);
    }
    for (std::size_t r = 0; r < 12; ++r) {
        y_val[r] = static_cast<int>(r % 2);
        for (std::size_t c = 0; c < 6; ++c)
            X_val.at(r, c) = (y_val[r] ? 1.0f : -1.0f) + noise(rng);
    }
    nn::TrainConfig cfg;
    cfg.improvement_eps = 1e9;
    const auto hist = nn::train(model, X_train, y_train, X_val, y_val, cfg);

    // early stop: best at epoch 1, patience 5 -> stop after epoch 6
    if (hist.stopped_epoch != 6 || hist.best_epoch != 1) return false;
    // plateau: patience 3, factor 0.5 -> the halved lr shows from epoch 5 on
    if (hist.lr.size() != 6) return false;
    if (hist.lr[0] != cfg.lr || hist.lr[3] != cfg.lr) return false;
    if (hist.lr[4] != cfg.lr * 0.5 || hist.lr[5] != cfg.lr * 0.5) return false;

    // metadata echoes every training hyperparameter
    const auto& md = hist.metadata;
    return md.at("epochs") == 50 && md.at("optimizer") == "adam" &&
           md.at("loss") == "binary_crossentropy" && md.at("initial_lr") == 1e-4 &&
           md.at("batch_size") == 16 && md.at("early_stop_patience") == 5 &&
           md.at("plateau_patience") == 3 && md.at("plateau_factor") == 0.5 &&
           md.at("min_lr") == 1e-7 && md.at("monitor") == "val_loss";
}

}  // namespace

int main() {
    Harness h;
    h.run("documented-repro-config-parses", check_repro_config);
    h.run("tfidf-oracle-equivalence", check_tfidf_oracle);
    h.run("statistical-test-oracles", check_stat_oracles);
    h.run("gradient-correctness", check_gradients);
    h.run("combination-enumeration-fidelity", check_combo_enumeration);
    h.run("end-to-end-separable-corpus", check_end_to_end);
    h.run("multi-set-recall-trend-under-noise", check_noise_trend);
    h.run("determinism-and-round-trips", check_determinism);
    h.run("training-loop-contract-audit", check_train_contract);
    if (h.failures) {
        std::printf("%d criteria failed\n", h.failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
