#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "featforge/linear.hpp"
#include "featforge/matrix.hpp"
#include "featforge/metrics.hpp"

namespace featforge {

enum class ScoreMethod { f_classif, chi2, mutual_info, rf_importance, correlation, rfe };

// Per-column scores; nullopt marks columns where the method's formula is
// singular (zero variance etc.).
struct ColumnScores {
    ScoreMethod method;
    std::vector<std::optional<double>> scores;
    std::vector<bool> selected;  // empty unless the method selects
};

// --- Pearson correlation ------------------------------------------------

inline std::optional<double> pearson_r(std::span<const double> x,
                                       std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson_r: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("pearson_r: need at least 2 samples");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace detail {

inline void require_both_classes(std::span<const int> y) {
    require_binary_both_classes(y);
}

inline std::vector<double> column_as_double(const FeatureMatrix& X, std::size_t c) {
    std::vector<double> v(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) v[r] = X.at(r, c);
    return v;
}

}  // namespace detail

// --- Filter scores -------------------------------------------------------

// One-way ANOVA F over the two classes: between-class MS / within-class MS.
// Zero within-variance with unequal means yields the +inf sentinel.
inline ColumnScores anova_f_scores(const FeatureMatrix& X, std::span<const int> y) {
    detail::require_both_classes(y);
    ColumnScores out{ScoreMethod::f_classif, {}, {}};
    out.scores.resize(X.cols);
    const std::size_t n = X.rows;
    for (std::size_t c = 0; c < X.cols; ++c) {
        double sum[2] = {0, 0};
        std::size_t cnt[2] = {0, 0};
        for (std::size_t r = 0; r < n; ++r) {
            sum[y[r]] += X.at(r, c);
            ++cnt[y[r]];
        }
        const double mean0 = sum[0] / cnt[0], mean1 = sum[1] / cnt[1];
        const double grand = (sum[0] + sum[1]) / n;
        double ssw = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = X.at(r, c) - (y[r] == 0 ? mean0 : mean1);
            ssw += d * d;
        }
        const double ssb = cnt[0] * (mean0 - grand) * (mean0 - grand) +
                           cnt[1] * (mean1 - grand) * (mean1 - grand);
        const double msb = ssb / 1.0;                      // k-1 = 1
        const double msw = ssw / static_cast<double>(n - 2);
        if (msw <= 0.0)
            out.scores[c] = msb > 0.0
                                ? std::optional<double>(std::numeric_limits<double>::infinity())
                                : std::optional<double>(0.0);
        else
            out.scores[c] = msb / msw;
    }
    return out;
}

// chi2 over non-negative features: observed = per-class feature sums,
// expected proportional to class prevalence.
inline ColumnScores chi_square_scores(const FeatureMatrix& X, std::span<const int> y) {
    detail::require_both_classes(y);
    ColumnScores out{ScoreMethod::chi2, {}, {}};
    out.scores.resize(X.cols);
    const std::size_t n = X.rows;
    std::size_t cnt[2] = {0, 0};
    for (int v : y) ++cnt[v];
    const double prev[2] = {static_cast<double>(cnt[0]) / n,
                            static_cast<double>(cnt[1]) / n};
    for (std::size_t c = 0; c < X.cols; ++c) {
        double obs[2] = {0, 0};
        for (std::size_t r = 0; r < n; ++r) {
            const double v = X.at(r, c);
            if (v < 0.0f)
                throw std::invalid_argument(
                    "chi_square_scores: negative entry in column '" +
                    (c < X.column_labels.size() ? X.column_labels[c]
                                                : std::to_string(c)) +
                    "'");
            obs[y[r]] += v;
        }
        const double total = obs[0] + obs[1];
        if (total <= 0.0) {
            out.scores[c] = std::nullopt;  // feature absent everywhere
            continue;
        }
        double chi2 = 0.0;
        for (int k = 0; k < 2; ++k) {
            const double exp = total * prev[k];
            const double d = obs[k] - exp;
            chi2 += d * d / exp;
        }
        out.scores[c] = chi2;
    }
    return out;
}

namespace detail {

// Quantile-bin a column into at most q bins; constant columns get one bin.
inline std::vector<int> quantile_bins(std::span<const double> x, int q) {
    const std::size_t n = x.size();
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;  // upper edges of bins 0..q-2
    for (int k = 1; k < q; ++k) {
        const auto idx = static_cast<std::size_t>(
            static_cast<double>(k) * n / q);
        edges.push_back(sorted[std::min(idx, n - 1)]);
    }
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    // bin = count of edges <= x; constant columns land in one occupied bin
    std::vector<int> bins(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::upper_bound(edges.begin(), edges.end(), x[i]);
        bins[i] = static_cast<int>(it - edges.begin());
    }
    return bins;
}

}  // namespace detail

// Plug-in mutual information (natural log) between quantile-binned feature
// values and the label.
inline ColumnScores mutual_info_scores(const FeatureMatrix& X, std::span<const int> y,
                                       int quantile_bins = 16) {
    detail::require_both_classes(y);
    ColumnScores out{ScoreMethod::mutual_info, {}, {}};
    out.scores.resize(X.cols);
    const std::size_t n = X.rows;
    double py[2] = {0, 0};
    for (int v : y) ++py[v];
    py[0] /= n;
    py[1] /= n;
    for (std::size_t c = 0; c < X.cols; ++c) {
        const auto col = detail::column_as_double(X, c);
        const auto bins = detail::quantile_bins(col, quantile_bins);
        const int n_bins = *std::max_element(bins.begin(), bins.end()) + 1;
        std::vector<double> joint(static_cast<std::size_t>(n_bins) * 2, 0.0);
        std::vector<double> pb(n_bins, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            joint[bins[r] * 2 + y[r]] += 1.0;
            pb[bins[r]] += 1.0;
        }
        double mi = 0.0;
        for (int b = 0; b < n_bins; ++b)
            for (int k = 0; k < 2; ++k) {
                const double pbc = joint[b * 2 + k] / n;
                if (pbc <= 0.0) continue;
                mi += pbc * std::log(pbc / ((pb[b] / n) * py[k]));
            }
        out.scores[c] = std::max(0.0, mi);
    }
    return out;
}

// --- Wrapper methods ------------------------------------------------------

// Recursive feature elimination with logistic regression: drop the `step`
// smallest-|weight| columns per round until target_k remain. scores hold the
// elimination rank (1 = kept to the end group, higher = dropped earlier).
inline ColumnScores rfe_select(const FeatureMatrix& X, std::span<const int> y,
                               std::size_t target_k = 6, std::size_t step = 1,
                               LogisticConfig lr_cfg = {}) {
    if (X.cols < target_k)
        throw std::invalid_argument("rfe_select: fewer columns than target_k");
    ColumnScores out{ScoreMethod::rfe, {}, {}};
    out.scores.resize(X.cols);
    out.selected.assign(X.cols, false);

    std::vector<std::size_t> remaining(X.cols);
    for (std::size_t c = 0; c < X.cols; ++c) remaining[c] = c;

    std::vector<std::pair<std::size_t, std::size_t>> eliminated;  // (col, order)
    std::size_t elim_order = 0;
    while (remaining.size() > target_k) {
        FeatureMatrix sub("rfe", X.rows, remaining.size());
        for (std::size_t r = 0; r < X.rows; ++r)
            for (std::size_t c = 0; c < remaining.size(); ++c)
                sub.at(r, c) = X.at(r, remaining[c]);
        const auto model = fit_logistic(sub, y, lr_cfg);
        std::vector<std::size_t> order(remaining.size());
        for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double wa = std::abs(model.weights[a]), wb = std::abs(model.weights[b]);
            if (wa != wb) return wa < wb;
            return remaining[a] < remaining[b];
        });
        const std::size_t n_drop = std::min(step, remaining.size() - target_k);
        std::set<std::size_t> drop(order.begin(), order.begin() + n_drop);
        std::vector<std::size_t> next;
        for (std::size_t c = 0; c < remaining.size(); ++c) {
            if (drop.count(c)) eliminated.emplace_back(remaining[c], elim_order++);
            else next.push_back(remaining[c]);
        }
        remaining = std::move(next);
    }
    // ranks: survivors share rank 1; earlier eliminations get larger ranks
    for (std::size_t c : remaining) {
        out.selected[c] = true;
        out.scores[c] = 1.0;
    }
    for (const auto& [col, order] : eliminated)
        out.scores[col] = static_cast<double>(1 + eliminated.size() - order);
    return out;
}

// Mean |r| across columns, skipping degenerate ones; nullopt when every
// column is degenerate (the Table-style "NaN" case).
inline std::optional<double> correlation_set_score(const FeatureMatrix& X,
                                                   std::span<const int> y) {
    if (X.rows < 2) throw std::invalid_argument("correlation_set_score: need >=2 rows");
    std::vector<double> yd(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) yd[i] = y[i];
    double sum = 0.0;
    std::size_t n_def = 0;
    for (std::size_t c = 0; c < X.cols; ++c) {
        const auto col = detail::column_as_double(X, c);
        if (const auto r = pearson_r(col, yd)) {
            sum += std::abs(*r);
            ++n_def;
        }
    }
    if (n_def == 0) return std::nullopt;
    return sum / static_cast<double>(n_def);
}

// --- Set-level wrappers ----------------------------------------------------

struct FeaturePair {
    const FeatureMatrix* train;
    const FeatureMatrix* val;
};

using FeatureSets = std::map<std::string, FeaturePair>;  // ordered by name

enum class SelectionMetric { f1_fake, f1_macro };

struct ForwardStep {
    std::string set_name;
    double val_f1;
};

namespace detail {

inline double eval_metric(const ClassificationReport& rep, SelectionMetric metric) {
    return metric == SelectionMetric::f1_fake ? rep.fake.f1 : rep.macro.f1;
}

inline ClassificationReport fit_eval(const std::vector<const FeatureMatrix*>& train_parts,
                                     const std::vector<const FeatureMatrix*>& val_parts,
                                     std::span<const int> y_train,
                                     std::span<const int> y_val,
                                     const LogisticConfig& cfg) {
    const auto X_train = concatenate(train_parts);
    const auto X_val = concatenate(val_parts);
    const auto model = fit_logistic(X_train, y_train, cfg);
    const auto pred = predict_logistic(model, X_val);
    return classification_report(y_val, pred);
}

}  // namespace detail

// Greedy forward selection over feature sets, maximizing validation F1.
// Stops when no remaining candidate improves the incumbent; name-lexicographic
// tie break.
inline std::vector<ForwardStep> forward_select(const FeatureSets& sets,
                                               std::span<const int> y_train,
                                               std::span<const int> y_val,
                                               SelectionMetric metric = SelectionMetric::f1_fake,
                                               LogisticConfig lr_cfg = {}) {
    if (sets.empty()) throw std::invalid_argument("forward_select: no feature sets");
    std::vector<ForwardStep> steps;
    std::vector<std::string> chosen;
    std::set<std::string> used;
    double best_f1 = -1.0;
    for (;;) {
        std::string best_name;
        double best_candidate = best_f1;
        for (const auto& [name, pair] : sets) {
            if (used.count(name)) continue;
            std::vector<const FeatureMatrix*> tp, vp;
            for (const auto& c : chosen) {
                tp.push_back(sets.at(c).train);
                vp.push_back(sets.at(c).val);
            }
            tp.push_back(pair.train);
            vp.push_back(pair.val);
            const auto rep = detail::fit_eval(tp, vp, y_train, y_val, lr_cfg);
            const double f1 = detail::eval_metric(rep, metric);
            // map iteration is lexicographic, so strict > keeps the first name
            if (f1 > best_candidate) {
                best_candidate = f1;
                best_name = name;
            }
        }
        if (best_name.empty()) break;
        chosen.push_back(best_name);
        used.insert(best_name);
        best_f1 = best_candidate;
        steps.push_back({best_name, best_f1});
    }
    return steps;
}

struct CombinationResult {
    std::vector<std::string> subset;  // sorted names
    double accuracy = 0, f1_fake = 0, f1_real = 0, f1_macro = 0;
};

// Every subset of size in [k_min, n], evaluated with logistic regression on
// the validation split, sorted by fake-class F1 descending (ties: smaller
// subset, then lexicographic).
inline std::vector<CombinationResult> combo_test(const FeatureSets& sets,
                                                 std::span<const int> y_train,
                                                 std::span<const int> y_val,
                                                 std::size_t k_min = 1,
                                                 LogisticConfig lr_cfg = {}) {
    if (k_min < 1 || k_min > sets.size())
        throw std::invalid_argument("combo_test: k_min out of range");
    std::vector<std::string> names;
    for (const auto& [n, _] : sets) names.push_back(n);

    std::vector<CombinationResult> results;
    std::vector<std::size_t> pick;
    // subsets in size-ascending, then lexicographic order
    auto evaluate = [&](const std::vector<std::size_t>& sel) {
        std::vector<const FeatureMatrix*> tp, vp;
        CombinationResult res;
        for (std::size_t i : sel) {
            res.subset.push_back(names[i]);
            tp.push_back(sets.at(names[i]).train);
            vp.push_back(sets.at(names[i]).val);
        }
        const auto rep = detail::fit_eval(tp, vp, y_train, y_val, lr_cfg);
        res.accuracy = rep.accuracy;
        res.f1_fake = rep.fake.f1;
        res.f1_real = rep.real.f1;
        res.f1_macro = rep.macro.f1;
        results.push_back(std::move(res));
    };
    for (std::size_t r = k_min; r <= names.size(); ++r) {
        std::vector<std::size_t> sel(r);
        // first combination 0..r-1, then next-lexicographic
        for (std::size_t i = 0; i < r; ++i) sel[i] = i;
        for (;;) {
            evaluate(sel);
            // advance
            std::size_t i = r;
            while (i > 0 && sel[i - 1] == names.size() - r + i - 1) --i;
            if (i == 0) break;
            ++sel[i - 1];
            for (std::size_t k = i; k < r; ++k) sel[k] = sel[k - 1] + 1;
        }
    }
    std::stable_sort(results.begin(), results.end(),
                     [](const CombinationResult& a, const CombinationResult& b) {
                         if (a.f1_fake != b.f1_fake) return a.f1_fake > b.f1_fake;
                         if (a.subset.size() != b.subset.size())
                             return a.subset.size() < b.subset.size();
                         return a.subset < b.subset;
                     });
    return results;
}

// --- Aggregated set-level report --------------------------------------------

struct SetReportRow {
    std::string set_name;
    std::size_t f_classif_selected = 0;
    double rf_mean_importance = 0;
    std::optional<double> correlation_score;
    std::optional<std::size_t> forward_step;  // 1-based
    std::optional<double> forward_f1;
    std::size_t overall_rank = 0;  // 1 = best
};

struct SetLevelReport {
    std::vector<SetReportRow> rows;  // sorted by overall_rank
};

struct SetReportConfig {
    std::size_t f_classif_top_k = 10;  // pooled top-K columns counted per set
    ForestConfig forest;
    LogisticConfig logistic;
    SelectionMetric forward_metric = SelectionMetric::f1_fake;
};

inline SetLevelReport build_set_report(const FeatureSets& sets,
                                       std::span<const int> y_train,
                                       std::span<const int> y_val,
                                       SetReportConfig cfg = {}) {
    if (sets.empty()) throw std::invalid_argument("build_set_report: no feature sets");
    std::vector<std::string> names;
    std::vector<const FeatureMatrix*> train_parts;
    for (const auto& [n, p] : sets) {
        names.push_back(n);
        train_parts.push_back(p.train);
    }
    const auto X_all = concatenate(train_parts);

    // column -> owning set
    std::vector<std::size_t> col_set;
    for (std::size_t s = 0; s < names.size(); ++s)
        col_set.insert(col_set.end(), sets.at(names[s]).train->cols, s);

    SetLevelReport report;
    report.rows.resize(names.size());
    for (std::size_t s = 0; s < names.size(); ++s) report.rows[s].set_name = names[s];

    // F-test: pooled top-K columns, counted per owning set. Undefined and
    // infinite scores sort after/before finite ones respectively.
    {
        const auto f = anova_f_scores(X_all, y_train);
        std::vector<std::size_t> order;
        for (std::size_t c = 0; c < f.scores.size(); ++c)
            if (f.scores[c]) order.push_back(c);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (*f.scores[a] != *f.scores[b]) return *f.scores[a] > *f.scores[b];
            return a < b;
        });
        const std::size_t k = std::min(cfg.f_classif_top_k, order.size());
        for (std::size_t i = 0; i < k; ++i)
            ++report.rows[col_set[order[i]]].f_classif_selected;
    }

    // Random-forest importance, averaged over each set's columns.
    {
        const auto forest = fit_forest(X_all, y_train, cfg.forest);
        const auto imp = forest_feature_importance(forest);
        std::vector<double> sums(names.size(), 0.0);
        for (std::size_t c = 0; c < imp.size(); ++c) sums[col_set[c]] += imp[c];
        for (std::size_t s = 0; s < names.size(); ++s)
            report.rows[s].rf_mean_importance =
                sums[s] / static_cast<double>(sets.at(names[s]).train->cols);
    }

    // Correlation and forward selection.
    for (std::size_t s = 0; s < names.size(); ++s)
        report.rows[s].correlation_score =
            correlation_set_score(*sets.at(names[s]).train, y_train);
    {
        const auto steps =
            forward_select(sets, y_train, y_val, cfg.forward_metric, cfg.logistic);
        for (std::size_t i = 0; i < steps.size(); ++i)
            for (auto& row : report.rows)
                if (row.set_name == steps[i].set_name) {
                    row.forward_step = i + 1;
                    row.forward_f1 = steps[i].val_f1;
                }
    }

    // Overall rank = rank of the mean per-method rank; undefined values rank
    // after all defined ones, ties broken by set name.
    const std::size_t n = names.size();
    auto rank_desc = [n](auto key) {
        std::vector<std::size_t> order(n), rank(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), key);
        for (std::size_t i = 0; i < n; ++i) rank[order[i]] = i + 1;
        return rank;
    };
    const auto& rows = report.rows;
    const auto r1 = rank_desc([&](std::size_t a, std::size_t b) {
        return rows[a].f_classif_selected > rows[b].f_classif_selected;
    });
    const auto r2 = rank_desc([&](std::size_t a, std::size_t b) {
        return rows[a].rf_mean_importance > rows[b].rf_mean_importance;
    });
    const auto r3 = rank_desc([&](std::size_t a, std::size_t b) {
        const auto& ca = rows[a].correlation_score;
        const auto& cb = rows[b].correlation_score;
        if (ca.has_value() != cb.has_value()) return ca.has_value();
        return ca && cb && *ca > *cb;
    });
    const auto r4 = rank_desc([&](std::size_t a, std::size_t b) {
        const auto& fa = rows[a].forward_step;
        const auto& fb = rows[b].forward_step;
        if (fa.has_value() != fb.has_value()) return fa.has_value();
        return fa && fb && *fa < *fb;
    });
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ma = static_cast<double>(r1[a] + r2[a] + r3[a] + r4[a]);
        const double mb = static_cast<double>(r1[b] + r2[b] + r3[b] + r4[b]);
        if (ma != mb) return ma < mb;
        return rows[a].set_name < rows[b].set_name;
    });
    for (std::size_t i = 0; i < n; ++i) report.rows[order[i]].overall_rank = i + 1;
    std::sort(report.rows.begin(), report.rows.end(),
              [](const SetReportRow& a, const SetReportRow& b) {
                  return a.overall_rank < b.overall_rank;
              });
    return report;
}

}  // namespace featforge
