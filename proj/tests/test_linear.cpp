#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "featforge/linear.hpp"

using namespace featforge;

namespace {

FeatureMatrix matrix_from(const std::vector<std::vector<float>>& rows,
                          const std::string& name = "x") {
    FeatureMatrix m(name, rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m.at(r, c) = rows[r][c];
    return m;
}

std::pair<FeatureMatrix, std::vector<int>> separable_data(std::size_t n,
                                                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> noise(0.0f, 0.3f);
    FeatureMatrix X("x", n, 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = i % 2;
        const float center = y[i] ? 2.0f : -2.0f;
        X.at(i, 0) = center + noise(rng);
        X.at(i, 1) = noise(rng);
    }
    return {X, y};
}

}  // namespace

TEST_CASE("logistic regression separates a linearly separable cloud") {
    auto [X, y] = separable_data(60, 5);
    const auto model = fit_logistic(X, y);
    const auto pred = predict_logistic(model, X);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i];
    CHECK(correct == y.size());
    CHECK(model.weights[0] > 0.0);  // feature 0 drives class 1
}

TEST_CASE("zero features leave only the bias, which fits the class prior") {
    FeatureMatrix X("x", 10, 1);  // all-zero column carries no signal
    std::vector<int> y = {1, 1, 1, 1, 1, 1, 1, 0, 0, 0};
    LogisticConfig cfg;
    cfg.l2 = 0.0;
    cfg.max_epochs = 2000;
    cfg.tol = 1e-10;
    const auto model = fit_logistic(X, y, cfg);
    const double prior = 0.7;
    CHECK(std::abs(model.bias - std::log(prior / (1.0 - prior))) < 1e-3);
    CHECK(std::abs(model.weights[0]) < 1e-9);
}

TEST_CASE("analytic gradient matches finite differences on a 5x4 problem") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    FeatureMatrix X("x", 5, 4);
    for (auto& v : X.values) v = u(rng);
    std::vector<int> y = {1, 0, 1, 1, 0};
    std::vector<double> w = {0.3, -0.7, 0.1, 0.5};
    const double b = -0.2, l2 = 0.8;

    std::vector<double> gw;
    double gb;
    detail::logistic_loss_grad(X, y, w, b, l2, gw, gb);

    const double h = 1e-6;
    auto loss_at = [&](const std::vector<double>& wv, double bv) {
        return detail::logistic_loss(X, y, wv, bv, l2);
    };
    for (std::size_t c = 0; c < w.size(); ++c) {
        auto wp = w, wm = w;
        wp[c] += h;
        wm[c] -= h;
        const double fd = (loss_at(wp, b) - loss_at(wm, b)) / (2 * h);
        CHECK(std::abs(fd - gw[c]) / std::max(1.0, std::abs(fd)) < 1e-6);
    }
    const double fdb = (loss_at(w, b + h) - loss_at(w, b - h)) / (2 * h);
    CHECK(std::abs(fdb - gb) / std::max(1.0, std::abs(fdb)) < 1e-6);
}

TEST_CASE("predict matches hand-applied sigmoid") {
    LogisticModel m;
    m.weights = {1.0, -2.0};
    m.bias = 0.5;
    const auto X = matrix_from({{1.0f, 0.25f}, {-1.0f, 1.0f}});
    const auto p = predict_logistic_proba(m, X);
    CHECK(p[0] == Catch::Approx(1.0 / (1.0 + std::exp(-1.0))).margin(1e-12));
    CHECK(p[1] == Catch::Approx(1.0 / (1.0 + std::exp(2.5))).margin(1e-12));
    const auto labels = predict_logistic(m, X);
    CHECK(labels[0] == 1);
    CHECK(labels[1] == 0);
}

TEST_CASE("swapping labels negates the fitted weights") {
    auto [X, y] = separable_data(40, 17);
    LogisticConfig cfg;
    cfg.max_epochs = 3000;
    cfg.tol = 1e-10;
    const auto m1 = fit_logistic(X, y, cfg);
    std::vector<int> flipped(y);
    for (auto& v : flipped) v = 1 - v;
    const auto m2 = fit_logistic(X, flipped, cfg);
    for (std::size_t c = 0; c < m1.weights.size(); ++c)
        CHECK(std::abs(m1.weights[c] + m2.weights[c]) < 1e-6);
    CHECK(std::abs(m1.bias + m2.bias) < 1e-6);
}

TEST_CASE("logistic input validation") {
    FeatureMatrix X("x", 4, 1);
    std::vector<int> one_class = {1, 1, 1, 1};
    CHECK_THROWS(fit_logistic(X, one_class));
    std::vector<int> bad = {0, 1, 2, 1};
    CHECK_THROWS(fit_logistic(X, bad));
    X.at(0, 0) = std::numeric_limits<float>::quiet_NaN();
    std::vector<int> y = {0, 1, 0, 1};
    CHECK_THROWS(fit_logistic(X, y));
}

TEST_CASE("logistic model JSON round trip") {
    LogisticModel m;
    m.weights = {0.125, -3.5};
    m.bias = 1.75;
    m.config.l2 = 0.25;
    const auto back = logistic_from_json(logistic_to_json(m));
    CHECK(back.weights == m.weights);
    CHECK(back.bias == m.bias);
    CHECK(back.config.l2 == 0.25);
}

TEST_CASE("forest separates a threshold problem") {
    auto [X, y] = separable_data(80, 23);
    ForestConfig cfg;
    cfg.n_trees = 25;
    const auto forest = fit_forest(X, y, cfg);
    const auto p = predict_forest_proba(forest, X);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y.size(); ++i) correct += (p[i] >= 0.5 ? 1 : 0) == y[i];
    CHECK(static_cast<double>(correct) / y.size() >= 0.95);
}

TEST_CASE("single tree without bootstrap finds the midpoint split") {
    const auto X = matrix_from({{0.0f}, {1.0f}, {2.0f}, {3.0f}, {10.0f}, {11.0f},
                                {12.0f}, {13.0f}});
    std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.bootstrap = false;
    const auto forest = fit_forest(X, y, cfg);
    const auto& root = forest.trees[0].nodes[0];
    REQUIRE(root.feature == 0);
    CHECK(root.threshold == Catch::Approx(6.5).margin(1e-9));  // midpoint of 3 and 10
    const auto p = predict_forest_proba(forest, X);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(p[i] == double(y[i]));
}

TEST_CASE("forest training is deterministic for a fixed seed") {
    auto [X, y] = separable_data(50, 31);
    ForestConfig cfg;
    cfg.n_trees = 10;
    const auto a = fit_forest(X, y, cfg);
    const auto b = fit_forest(X, y, cfg);
    CHECK(forest_to_json(a) == forest_to_json(b));
}

TEST_CASE("feature importance sums to one and finds the informative feature") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    FeatureMatrix X("x", 100, 3);
    std::vector<int> y(100);
    for (std::size_t i = 0; i < 100; ++i) {
        y[i] = i % 2;
        X.at(i, 0) = u(rng);
        X.at(i, 1) = y[i] ? 0.8f + 0.2f * u(rng) : 0.2f * u(rng);  // informative
        X.at(i, 2) = u(rng);
    }
    ForestConfig cfg;
    cfg.n_trees = 40;
    const auto forest = fit_forest(X, y, cfg);
    bool degenerate = true;
    const auto imp = forest_feature_importance(forest, &degenerate);
    CHECK_FALSE(degenerate);
    double sum = 0.0;
    for (double v : imp) {
        CHECK(v >= 0.0);
        sum += v;
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
    CHECK(imp[1] > imp[0]);
    CHECK(imp[1] > imp[2]);
}

TEST_CASE("constant features yield the uniform degenerate importance") {
    FeatureMatrix X("x", 8, 2);  // all zeros: no split possible
    std::vector<int> y = {0, 1, 0, 1, 0, 1, 0, 1};
    ForestConfig cfg;
    cfg.n_trees = 5;
    const auto forest = fit_forest(X, y, cfg);
    bool degenerate = false;
    const auto imp = forest_feature_importance(forest, &degenerate);
    CHECK(degenerate);
    for (double v : imp) CHECK(v == 0.5);
}

TEST_CASE("pure single-split problem gives all importance to one feature") {
    const auto X = matrix_from({{0.f, 5.f}, {1.f, 5.f}, {2.f, 5.f}, {3.f, 5.f},
                                {10.f, 5.f}, {11.f, 5.f}, {12.f, 5.f}, {13.f, 5.f}});
    std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
    ForestConfig cfg;
    cfg.n_trees = 12;
    const auto forest = fit_forest(X, y, cfg);
    const auto imp = forest_feature_importance(forest);
    CHECK(imp[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(imp[1] == Catch::Approx(0.0).margin(1e-12));
}
