#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "featforge/matrix.hpp"

namespace featforge {

struct LogisticConfig {
    double l2 = 1.0;
    double lr = 1.0;        // initial step, shrunk by backtracking
    int max_epochs = 200;
    double tol = 1e-6;      // gradient-norm stop
    std::uint64_t seed = 42;
};

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    LogisticConfig config;
};

namespace detail {

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Mean BCE + (l2/2n)*||w||^2 and its gradient. Probabilities are clamped
// away from {0,1} before the log.
inline double logistic_loss_grad(const FeatureMatrix& X, std::span<const int> y,
                                 const std::vector<double>& w, double b, double l2,
                                 std::vector<double>& gw, double& gb) {
    const std::size_t n = X.rows, d = X.cols;
    gw.assign(d, 0.0);
    gb = 0.0;
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = X.row(r);
        double z = b;
        for (std::size_t c = 0; c < d; ++c) z += w[c] * row[c];
        const double p = std::clamp(sigmoid(z), 1e-12, 1.0 - 1e-12);
        loss -= y[r] == 1 ? std::log(p) : std::log(1.0 - p);
        const double err = p - (y[r] == 1 ? 1.0 : 0.0);
        for (std::size_t c = 0; c < d; ++c) gw[c] += err * row[c];
        gb += err;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    loss *= inv_n;
    gb *= inv_n;
    for (std::size_t c = 0; c < d; ++c) {
        gw[c] = gw[c] * inv_n + l2 * inv_n * w[c];
        loss += 0.5 * l2 * inv_n * w[c] * w[c];
    }
    return loss;
}

inline double logistic_loss(const FeatureMatrix& X, std::span<const int> y,
                            const std::vector<double>& w, double b, double l2) {
    std::vector<double> gw;
    double gb;
    return logistic_loss_grad(X, y, w, b, l2, gw, gb);
}

inline void require_binary_both_classes(std::span<const int> y) {
    bool has0 = false, has1 = false;
    for (int v : y) {
        if (v == 0) has0 = true;
        else if (v == 1) has1 = true;
        else throw std::invalid_argument("labels must be 0 or 1");
    }
    if (!has0 || !has1) throw std::invalid_argument("both classes must be present");
}

}  // namespace detail

// Full-batch gradient descent with backtracking step halving on the
// L2-regularized BCE objective.
inline LogisticModel fit_logistic(const FeatureMatrix& X, std::span<const int> y,
                                  LogisticConfig cfg = {}) {
    if (X.rows < 2 || X.rows != y.size())
        throw std::invalid_argument("fit_logistic: need >=2 rows and matching labels");
    detail::require_binary_both_classes(y);
    for (float v : X.values)
        if (!std::isfinite(v))
            throw std::invalid_argument("fit_logistic: non-finite feature value");

    LogisticModel m;
    m.config = cfg;
    m.weights.assign(X.cols, 0.0);
    m.bias = 0.0;

    std::vector<double> gw;
    double gb = 0.0;
    double loss = detail::logistic_loss_grad(X, y, m.weights, m.bias, cfg.l2, gw, gb);
    double step = cfg.lr;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        double gnorm = gb * gb;
        for (double g : gw) gnorm += g * g;
        if (std::sqrt(gnorm) < cfg.tol) break;

        std::vector<double> w_new(X.cols);
        double b_new = 0.0, loss_new = 0.0;
        bool accepted = false;
        double s = step;
        for (int half = 0; half < 40; ++half) {
            for (std::size_t c = 0; c < X.cols; ++c) w_new[c] = m.weights[c] - s * gw[c];
            b_new = m.bias - s * gb;
            loss_new = detail::logistic_loss(X, y, w_new, b_new, cfg.l2);
            if (loss_new <= loss) { accepted = true; break; }
            s *= 0.5;
        }
        if (!accepted) break;
        m.weights = std::move(w_new);
        m.bias = b_new;
        loss = loss_new;
        step = s * 2.0;  // allow the step to grow back
        loss = detail::logistic_loss_grad(X, y, m.weights, m.bias, cfg.l2, gw, gb);
    }
    return m;
}

inline std::vector<double> predict_logistic_proba(const LogisticModel& m,
                                                  const FeatureMatrix& X) {
    if (X.cols != m.weights.size())
        throw std::invalid_argument("predict_logistic: dimension mismatch");
    std::vector<double> p(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) {
        const auto row = X.row(r);
        double z = m.bias;
        for (std::size_t c = 0; c < X.cols; ++c) z += m.weights[c] * row[c];
        p[r] = detail::sigmoid(z);
    }
    return p;
}

inline std::vector<int> predict_logistic(const LogisticModel& m, const FeatureMatrix& X) {
    std::vector<int> labels(X.rows);
    const auto p = predict_logistic_proba(m, X);
    for (std::size_t r = 0; r < X.rows; ++r) labels[r] = p[r] >= 0.5 ? 1 : 0;
    return labels;
}

inline nlohmann::json logistic_to_json(const LogisticModel& m) {
    return {{"weights", m.weights}, {"bias", m.bias},
            {"config", {{"l2", m.config.l2}, {"lr", m.config.lr},
                        {"max_epochs", m.config.max_epochs}, {"tol", m.config.tol},
                        {"seed", m.config.seed}}}};
}

inline LogisticModel logistic_from_json(const nlohmann::json& j) {
    LogisticModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    const auto& c = j.at("config");
    m.config.l2 = c.at("l2");
    m.config.lr = c.at("lr");
    m.config.max_epochs = c.at("max_epochs");
    m.config.tol = c.at("tol");
    m.config.seed = c.at("seed");
    return m;
}

// ---------------------------------------------------------------------
// Random forest: gini-split CART trees on bootstrap samples with
// ceil(sqrt(d)) feature subsampling per split.

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 12;
    std::size_t min_leaf = 2;
    bool bootstrap = true;
    std::uint64_t seed = 42;
};

struct TreeNode {
    int feature = -1;       // -1 => leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double leaf_value = 0.0;       // P(class 1)
    std::size_t n_samples = 0;
    double impurity_decrease = 0.0;  // weighted, for importance
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // node 0 is the root

    double predict_proba(std::span<const float> x) const {
        int i = 0;
        while (nodes[i].feature >= 0)
            i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                          : nodes[i].right;
        return nodes[i].leaf_value;
    }
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    ForestConfig config;
    std::size_t n_features = 0;
};

namespace detail {

inline double gini(std::size_t n1, std::size_t n) {
    if (n == 0) return 0.0;
    const double p = static_cast<double>(n1) / n;
    return 2.0 * p * (1.0 - p);
}

struct TreeBuilder {
    const FeatureMatrix& X;
    std::span<const int> y;
    const ForestConfig& cfg;
    std::mt19937_64 rng;
    DecisionTree tree;

    int build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth) {
        const std::size_t n = hi - lo;
        std::size_t n1 = 0;
        for (std::size_t i = lo; i < hi; ++i) n1 += y[idx[i]];
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes[node_id].n_samples = n;
        tree.nodes[node_id].leaf_value = n ? static_cast<double>(n1) / n : 0.0;

        const double node_gini = gini(n1, n);
        if (depth >= cfg.max_depth || n < 2 * cfg.min_leaf || n1 == 0 || n1 == n)
            return node_id;

        // ceil(sqrt(d)) random candidate features, no replacement
        const std::size_t d = X.cols;
        const auto n_cand = static_cast<std::size_t>(
            std::ceil(std::sqrt(static_cast<double>(d))));
        std::vector<std::size_t> feats(d);
        for (std::size_t c = 0; c < d; ++c) feats[c] = c;
        for (std::size_t k = 0; k < n_cand; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, d - 1);
            std::swap(feats[k], feats[pick(rng)]);
        }
        feats.resize(n_cand);
        std::sort(feats.begin(), feats.end());  // lowest-index tie break

        int best_feat = -1;
        double best_thr = 0.0, best_decrease = 0.0;
        std::vector<std::pair<float, int>> vals(n);
        for (std::size_t f : feats) {
            for (std::size_t i = 0; i < n; ++i)
                vals[i] = {X.at(idx[lo + i], f), y[idx[lo + i]]};
            std::sort(vals.begin(), vals.end());
            std::size_t left_n = 0, left_n1 = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                ++left_n;
                left_n1 += vals[i].second;
                if (vals[i].first == vals[i + 1].first) continue;
                const std::size_t right_n = n - left_n;
                if (left_n < cfg.min_leaf || right_n < cfg.min_leaf) continue;
                const double w_impurity =
                    (static_cast<double>(left_n) / n) * gini(left_n1, left_n) +
                    (static_cast<double>(right_n) / n) * gini(n1 - left_n1, right_n);
                const double decrease = node_gini - w_impurity;
                const double thr = 0.5 * (static_cast<double>(vals[i].first) +
                                          static_cast<double>(vals[i + 1].first));
                // strict > keeps the lowest feature index / lowest threshold
                // on ties, since candidates are scanned in ascending order
                if (decrease > best_decrease) {
                    best_decrease = decrease;
                    best_feat = static_cast<int>(f);
                    best_thr = thr;
                }
            }
        }
        if (best_feat < 0 || best_decrease <= 0.0) return node_id;

        auto mid = std::stable_partition(
            idx.begin() + lo, idx.begin() + hi, [&](std::size_t r) {
                return X.at(r, best_feat) <= best_thr;
            });
        const auto split_at = static_cast<std::size_t>(mid - idx.begin());
        if (split_at == lo || split_at == hi) return node_id;

        tree.nodes[node_id].feature = best_feat;
        tree.nodes[node_id].threshold = best_thr;
        tree.nodes[node_id].impurity_decrease =
            best_decrease * static_cast<double>(n);
        const int left = build(idx, lo, split_at, depth + 1);
        tree.nodes[node_id].left = left;
        const int right = build(idx, split_at, hi, depth + 1);
        tree.nodes[node_id].right = right;
        return node_id;
    }
};

}  // namespace detail

inline RandomForest fit_forest(const FeatureMatrix& X, std::span<const int> y,
                               ForestConfig cfg = {}) {
    if (X.rows != y.size()) throw std::invalid_argument("fit_forest: label size mismatch");
    detail::require_binary_both_classes(y);
    RandomForest forest;
    forest.config = cfg;
    forest.n_features = X.cols;
    forest.trees.reserve(cfg.n_trees);
    for (int t = 0; t < cfg.n_trees; ++t) {
        std::mt19937_64 rng(cfg.seed + 0x100000001ull * static_cast<std::uint64_t>(t));
        std::vector<std::size_t> idx(X.rows);
        if (cfg.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, X.rows - 1);
            for (auto& i : idx) i = pick(rng);
        } else {
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        }
        detail::TreeBuilder builder{X, y, cfg, std::mt19937_64(rng()), {}};
        builder.build(idx, 0, idx.size(), 0);
        forest.trees.push_back(std::move(builder.tree));
    }
    return forest;
}

inline std::vector<double> predict_forest_proba(const RandomForest& forest,
                                                const FeatureMatrix& X) {
    std::vector<double> p(X.rows, 0.0);
    for (std::size_t r = 0; r < X.rows; ++r) {
        double acc = 0.0;
        for (const auto& t : forest.trees) acc += t.predict_proba(X.row(r));
        p[r] = acc / static_cast<double>(forest.trees.size());
    }
    return p;
}

// Mean across trees of the per-feature weighted impurity decrease,
// normalized to sum 1. Forests that never split return uniform importances.
inline std::vector<double> forest_feature_importance(const RandomForest& forest,
                                                     bool* degenerate = nullptr) {
    std::vector<double> imp(forest.n_features, 0.0);
    for (const auto& tree : forest.trees) {
        std::vector<double> tree_imp(forest.n_features, 0.0);
        double total = 0.0;
        for (const auto& node : tree.nodes)
            if (node.feature >= 0) {
                tree_imp[node.feature] += node.impurity_decrease;
                total += node.impurity_decrease;
            }
        if (total > 0.0)
            for (std::size_t f = 0; f < imp.size(); ++f)
                imp[f] += tree_imp[f] / total;
    }
    double sum = 0.0;
    for (double v : imp) sum += v;
    if (sum <= 0.0) {
        if (degenerate) *degenerate = true;
        return std::vector<double>(forest.n_features, 1.0 / forest.n_features);
    }
    if (degenerate) *degenerate = false;
    for (auto& v : imp) v /= sum;
    return imp;
}

inline nlohmann::json forest_to_json(const RandomForest& f) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : f.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes)
            nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold},
                             {"left", n.left}, {"right", n.right},
                             {"leaf_value", n.leaf_value}, {"n", n.n_samples},
                             {"decrease", n.impurity_decrease}});
        trees.push_back(std::move(nodes));
    }
    return {{"n_features", f.n_features}, {"trees", std::move(trees)},
            {"config", {{"n_trees", f.config.n_trees}, {"max_depth", f.config.max_depth},
                        {"min_leaf", f.config.min_leaf}, {"bootstrap", f.config.bootstrap},
                        {"seed", f.config.seed}}}};
}

}  // namespace featforge
