#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "featforge/matrix.hpp"
#include "featforge/metrics.hpp"

namespace featforge::nn {

struct BranchSpec {
    std::size_t input_dim = 0;
    std::size_t filters = 64;
    std::size_t kernel = 3;
    double dropout = 0.3;
};

// Multi-branch 1D CNN: per branch Conv1D (valid padding, ReLU) -> dropout ->
// global max pool; pooled vectors concatenated into a dense head ending in a
// single sigmoid unit.
struct CnnSpec {
    std::vector<BranchSpec> branches;
    std::vector<std::size_t> head_units = {256, 128, 64};
    std::vector<double> head_dropout = {0.5, 0.3, 0.0};
    std::uint64_t seed = 42;

    std::size_t concat_width() const {
        std::size_t w = 0;
        for (const auto& b : branches) w += b.filters;
        return w;
    }
    std::size_t input_width() const {
        std::size_t w = 0;
        for (const auto& b : branches) w += b.input_dim;
        return w;
    }
};

template <typename Real>
struct CnnModel {
    CnnSpec spec;
    std::vector<Real> params;

    // parameter-slab offsets, in spec order: per branch [W(F*K), b(F)],
    // then per dense layer [W(out*in), b(out)], then output [W(1*last), b(1)]
    std::vector<std::size_t> offsets;

    std::span<Real> slab(std::size_t i, std::size_t len) {
        return {params.data() + offsets[i], len};
    }
    std::span<const Real> slab(std::size_t i, std::size_t len) const {
        return {params.data() + offsets[i], len};
    }
};

namespace detail {

template <typename Real>
void glorot_fill(std::span<Real> w, std::size_t fan_in, std::size_t fan_out,
                 std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : w) v = static_cast<Real>(u(rng));
}

inline double clamp_proba(double p) { return std::clamp(p, 1e-7, 1.0 - 1e-7); }

}  // namespace detail

template <typename Real>
CnnModel<Real> build_multibranch_cnn(const CnnSpec& spec) {
    if (spec.branches.empty())
        throw std::invalid_argument("build_multibranch_cnn: need at least one branch");
    for (const auto& b : spec.branches)
        if (b.input_dim < b.kernel)
            throw std::invalid_argument(
                "build_multibranch_cnn: branch input_dim " + std::to_string(b.input_dim) +
                " smaller than kernel " + std::to_string(b.kernel));
    if (spec.head_units.size() != spec.head_dropout.size())
        throw std::invalid_argument("build_multibranch_cnn: head size mismatch");

    CnnModel<Real> model;
    model.spec = spec;

    std::size_t total = 0;
    auto add = [&](std::size_t len) {
        model.offsets.push_back(total);
        total += len;
    };
    for (const auto& b : spec.branches) {
        add(b.filters * b.kernel);
        add(b.filters);
    }
    std::size_t in_w = spec.concat_width();
    for (std::size_t u : spec.head_units) {
        add(u * in_w);
        add(u);
        in_w = u;
    }
    add(in_w);  // output weights
    add(1);     // output bias
    model.params.assign(total, Real(0));

    std::mt19937_64 rng(spec.seed);
    std::size_t slab_i = 0;
    for (const auto& b : spec.branches) {
        detail::glorot_fill(model.slab(slab_i, b.filters * b.kernel), b.kernel,
                            b.filters, rng);
        slab_i += 2;  // biases stay zero
    }
    in_w = spec.concat_width();
    for (std::size_t u : spec.head_units) {
        detail::glorot_fill(model.slab(slab_i, u * in_w), in_w, u, rng);
        slab_i += 2;
        in_w = u;
    }
    detail::glorot_fill(model.slab(slab_i, in_w), in_w, 1, rng);
    return model;
}

// Per-sample activation record kept for backprop.
template <typename Real>
struct ForwardTrace {
    // per branch: post-relu-dropout conv activations and pool argmax
    std::vector<std::vector<Real>> conv_act;       // [branch][pos*F]
    std::vector<std::vector<std::uint8_t>> conv_mask;  // dropout keep mask
    std::vector<std::vector<std::size_t>> pool_arg;    // [branch][F]
    std::vector<Real> concat;                       // pooled concat
    std::vector<std::vector<Real>> dense_act;       // post relu+dropout per layer
    std::vector<std::vector<std::uint8_t>> dense_mask;
    double prob = 0.0;
    double logit = 0.0;
};

// Forward pass for one sample. `training` enables inverted dropout with
// masks drawn from `rng`.
template <typename Real>
ForwardTrace<Real> forward_sample(const CnnModel<Real>& model, std::span<const Real> x,
                                  bool training, std::mt19937_64& rng) {
    const auto& spec = model.spec;
    if (x.size() != spec.input_width())
        throw std::invalid_argument("forward: input width mismatch");
    ForwardTrace<Real> tr;
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    std::size_t slab_i = 0, x_off = 0;
    for (const auto& b : spec.branches) {
        const auto W = model.slab(slab_i, b.filters * b.kernel);
        const auto bias = model.slab(slab_i + 1, b.filters);
        slab_i += 2;
        const std::size_t n_pos = b.input_dim - b.kernel + 1;
        std::vector<Real> act(n_pos * b.filters);
        std::vector<std::uint8_t> mask(n_pos * b.filters, 1);
        const double keep = 1.0 - b.dropout;
        for (std::size_t p = 0; p < n_pos; ++p) {
            for (std::size_t f = 0; f < b.filters; ++f) {
                Real z = bias[f];
                for (std::size_t k = 0; k < b.kernel; ++k)
                    z += W[f * b.kernel + k] * x[x_off + p + k];
                Real a = z > Real(0) ? z : Real(0);
                if (training && b.dropout > 0.0) {
                    if (u01(rng) < b.dropout) {
                        mask[p * b.filters + f] = 0;
                        a = Real(0);
                    } else {
                        a = static_cast<Real>(a / keep);
                    }
                }
                act[p * b.filters + f] = a;
            }
        }
        std::vector<std::size_t> argmax(b.filters, 0);
        for (std::size_t f = 0; f < b.filters; ++f) {
            Real best = act[f];
            for (std::size_t p = 1; p < n_pos; ++p)
                if (act[p * b.filters + f] > best) {
                    best = act[p * b.filters + f];
                    argmax[f] = p;
                }
            tr.concat.push_back(best);
        }
        tr.conv_act.push_back(std::move(act));
        tr.conv_mask.push_back(std::move(mask));
        tr.pool_arg.push_back(std::move(argmax));
        x_off += b.input_dim;
    }

    std::vector<Real> cur = tr.concat;
    for (std::size_t layer = 0; layer < spec.head_units.size(); ++layer) {
        const std::size_t out_w = spec.head_units[layer];
        const std::size_t in_w = cur.size();
        const auto W = model.slab(slab_i, out_w * in_w);
        const auto bias = model.slab(slab_i + 1, out_w);
        slab_i += 2;
        std::vector<Real> next(out_w);
        std::vector<std::uint8_t> mask(out_w, 1);
        const double drop = spec.head_dropout[layer];
        const double keep = 1.0 - drop;
        for (std::size_t o = 0; o < out_w; ++o) {
            Real z = bias[o];
            for (std::size_t i = 0; i < in_w; ++i) z += W[o * in_w + i] * cur[i];
            Real a = z > Real(0) ? z : Real(0);
            if (training && drop > 0.0) {
                if (u01(rng) < drop) {
                    mask[o] = 0;
                    a = Real(0);
                } else {
                    a = static_cast<Real>(a / keep);
                }
            }
            next[o] = a;
        }
        tr.dense_act.push_back(next);
        tr.dense_mask.push_back(std::move(mask));
        cur = std::move(next);
    }

    const auto Wout = model.slab(slab_i, cur.size());
    const auto bout = model.slab(slab_i + 1, 1);
    double z = bout[0];
    for (std::size_t i = 0; i < cur.size(); ++i) z += double(Wout[i]) * double(cur[i]);
    tr.logit = z;
    tr.prob = 1.0 / (1.0 + std::exp(-z));
    return tr;
}

template <typename Real>
std::vector<double> forward(const CnnModel<Real>& model, const FeatureMatrix& X,
                            bool training = false, std::uint64_t seed = 0) {
    std::mt19937_64 rng(seed);
    std::vector<double> probs(X.rows);
    std::vector<Real> row(X.cols);
    for (std::size_t r = 0; r < X.rows; ++r) {
        for (std::size_t c = 0; c < X.cols; ++c) row[c] = static_cast<Real>(X.at(r, c));
        probs[r] = forward_sample(model, std::span<const Real>(row), training, rng).prob;
    }
    return probs;
}

template <typename Real>
std::vector<int> predict_labels(const CnnModel<Real>& model, const FeatureMatrix& X,
                                double threshold = 0.5) {
    const auto p = forward(model, X, false);
    std::vector<int> labels(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) labels[i] = p[i] >= threshold ? 1 : 0;
    return labels;
}

// Mean BCE over the batch plus gradients for every parameter. Dropout masks
// are drawn from `seed`, so two calls with the same seed see identical masks
// (this is what makes finite-difference checks of the training path valid).
template <typename Real>
double loss_and_gradients(const CnnModel<Real>& model,
                          const std::vector<std::vector<Real>>& batch,
                          std::span<const int> labels, bool training,
                          std::uint64_t seed, std::vector<Real>& grads) {
    const auto& spec = model.spec;
    grads.assign(model.params.size(), Real(0));
    const std::size_t B = batch.size();
    std::mt19937_64 rng(seed);
    double loss = 0.0;

    for (std::size_t s = 0; s < B; ++s) {
        const auto tr = forward_sample(model, std::span<const Real>(batch[s]), training, rng);
        const double y = labels[s];
        const double pc = detail::clamp_proba(tr.prob);
        loss -= y == 1.0 ? std::log(pc) : std::log(1.0 - pc);
        // d(mean BCE)/d(logit); zero where the clamp is active
        double dz = 0.0;
        if (tr.prob > 1e-7 && tr.prob < 1.0 - 1e-7) dz = (tr.prob - y) / B;

        // output layer
        std::size_t slab_i = model.offsets.size() - 2;
        const auto& last_act =
            spec.head_units.empty() ? tr.concat : tr.dense_act.back();
        const auto Wout = model.slab(slab_i, last_act.size());
        {
            auto gW = std::span<Real>(grads.data() + model.offsets[slab_i], last_act.size());
            auto gb = std::span<Real>(grads.data() + model.offsets[slab_i + 1], 1);
            for (std::size_t i = 0; i < last_act.size(); ++i)
                gW[i] += static_cast<Real>(dz * double(last_act[i]));
            gb[0] += static_cast<Real>(dz);
        }
        std::vector<double> delta(last_act.size());
        for (std::size_t i = 0; i < last_act.size(); ++i)
            delta[i] = dz * double(Wout[i]);

        // dense layers, back to front
        for (std::size_t layer = spec.head_units.size(); layer-- > 0;) {
            const std::size_t out_w = spec.head_units[layer];
            const std::vector<Real>& in_act =
                layer == 0 ? tr.concat : tr.dense_act[layer - 1];
            const std::size_t in_w = in_act.size();
            const std::size_t wi = 2 * spec.branches.size() + 2 * layer;
            const auto W = model.slab(wi, out_w * in_w);
            auto gW = std::span<Real>(grads.data() + model.offsets[wi], out_w * in_w);
            auto gb = std::span<Real>(grads.data() + model.offsets[wi + 1], out_w);
            const double keep = 1.0 - spec.head_dropout[layer];
            std::vector<double> delta_in(in_w, 0.0);
            for (std::size_t o = 0; o < out_w; ++o) {
                double d = delta[o];
                if (d == 0.0) continue;
                // relu + inverted dropout: post-activation 0 means no gradient
                if (tr.dense_act[layer][o] <= Real(0)) continue;
                if (training && spec.head_dropout[layer] > 0.0) {
                    if (!tr.dense_mask[layer][o]) continue;
                    d /= keep;
                }
                for (std::size_t i = 0; i < in_w; ++i) {
                    gW[o * in_w + i] += static_cast<Real>(d * double(in_act[i]));
                    delta_in[i] += d * double(W[o * in_w + i]);
                }
                gb[o] += static_cast<Real>(d);
            }
            delta = std::move(delta_in);
        }

        // branches: route the pooled gradient through argmax, dropout, relu
        std::size_t concat_off = 0, x_off = 0;
        for (std::size_t bi = 0; bi < spec.branches.size(); ++bi) {
            const auto& b = spec.branches[bi];
            const std::size_t wi = 2 * bi;
            auto gW = std::span<Real>(grads.data() + model.offsets[wi],
                                      b.filters * b.kernel);
            auto gb = std::span<Real>(grads.data() + model.offsets[wi + 1], b.filters);
            const double keep = 1.0 - b.dropout;
            for (std::size_t f = 0; f < b.filters; ++f) {
                double d = delta[concat_off + f];
                if (d == 0.0) continue;
                const std::size_t p = tr.pool_arg[bi][f];
                const Real a = tr.conv_act[bi][p * b.filters + f];
                if (a <= Real(0)) continue;  // pooled a relu zero
                if (training && b.dropout > 0.0) {
                    if (!tr.conv_mask[bi][p * b.filters + f]) continue;
                    d /= keep;
                }
                for (std::size_t k = 0; k < b.kernel; ++k)
                    gW[f * b.kernel + k] +=
                        static_cast<Real>(d * double(batch[s][x_off + p + k]));
                gb[f] += static_cast<Real>(d);
            }
            concat_off += b.filters;
            x_off += b.input_dim;
        }
    }
    return loss / static_cast<double>(B);
}

// --- Adam ------------------------------------------------------------------

template <typename Real>
struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::uint64_t t = 0;
    std::vector<double> m, v;

    void step(std::vector<Real>& params, const std::vector<Real>& grads) {
        if (m.empty()) {
            m.assign(params.size(), 0.0);
            v.assign(params.size(), 0.0);
        }
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grads[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            params[i] -= static_cast<Real>(lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
};

template <typename Real>
double backward_and_step(CnnModel<Real>& model, const std::vector<std::vector<Real>>& batch,
                         std::span<const int> labels, AdamState<Real>& opt,
                         std::uint64_t dropout_seed) {
    std::vector<Real> grads;
    const double loss =
        loss_and_gradients(model, batch, labels, /*training=*/true, dropout_seed, grads);
    if (!std::isfinite(loss))
        throw std::runtime_error("backward_and_step: non-finite loss");
    opt.step(model.params, grads);
    return loss;
}

// --- Training loop -----------------------------------------------------------

struct TrainConfig {
    int epochs = 50;
    double lr = 1e-4;
    std::size_t batch = 16;
    int early_stop_patience = 5;
    int plateau_patience = 3;
    double plateau_factor = 0.5;
    double min_lr = 1e-7;
    double improvement_eps = 1e-6;
    std::uint64_t seed = 42;
};

struct EpochStats {
    double loss = 0, accuracy = 0, precision = 0, recall = 0;
};

struct TrainHistory {
    std::vector<EpochStats> train, val;
    std::vector<double> lr;
    int stopped_epoch = 0;        // 1-based epoch count actually run
    int best_epoch = 0;
    nlohmann::json metadata;      // echoes every hyperparameter
};

namespace detail {

inline EpochStats eval_stats(std::span<const double> probs, std::span<const int> y) {
    EpochStats st;
    std::vector<int> pred(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double pc = clamp_proba(probs[i]);
        st.loss -= y[i] == 1 ? std::log(pc) : std::log(1.0 - pc);
        pred[i] = probs[i] >= 0.5 ? 1 : 0;
    }
    st.loss /= static_cast<double>(probs.size());
    const auto rep = classification_report(y, pred);
    st.accuracy = rep.accuracy;
    st.precision = rep.real.precision;
    st.recall = rep.real.recall;
    return st;
}

}  // namespace detail

template <typename Real>
TrainHistory train(CnnModel<Real>& model, const FeatureMatrix& X_train,
                   std::span<const int> y_train, const FeatureMatrix& X_val,
                   std::span<const int> y_val, const TrainConfig& cfg) {
    if (X_train.rows == 0 || X_val.rows == 0)
        throw std::invalid_argument("train: empty train or val split");
    TrainHistory hist;
    hist.metadata = {{"epochs", cfg.epochs},
                     {"loss", "binary_crossentropy"},
                     {"optimizer", "adam"},
                     {"initial_lr", cfg.lr},
                     {"batch_size", cfg.batch},
                     {"early_stop_patience", cfg.early_stop_patience},
                     {"plateau_patience", cfg.plateau_patience},
                     {"plateau_factor", cfg.plateau_factor},
                     {"min_lr", cfg.min_lr},
                     {"seed", cfg.seed},
                     {"monitor", "val_loss"},
                     {"metrics", {"accuracy", "precision", "recall"}}};

    AdamState<Real> opt;
    opt.lr = cfg.lr;
    std::mt19937_64 shuffle_rng(cfg.seed);
    std::mt19937_64 dropout_rng(cfg.seed ^ 0xD1CEBEEFull);

    std::vector<std::size_t> order(X_train.rows);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<Real> best_params = model.params;
    int since_improve = 0, since_plateau = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch);
            std::vector<std::vector<Real>> batch;
            std::vector<int> labels;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const auto row = X_train.row(order[i]);
                batch.emplace_back(row.begin(), row.end());
                labels.push_back(y_train[order[i]]);
            }
            backward_and_step(model, batch, labels, opt, dropout_rng());
        }

        const auto train_probs = forward(model, X_train, false);
        const auto val_probs = forward(model, X_val, false);
        hist.train.push_back(detail::eval_stats(train_probs, y_train));
        hist.val.push_back(detail::eval_stats(val_probs, y_val));
        hist.lr.push_back(opt.lr);
        hist.stopped_epoch = epoch;

        const double val_loss = hist.val.back().loss;
        if (val_loss < best_val_loss - cfg.improvement_eps) {
            best_val_loss = val_loss;
            best_params = model.params;
            hist.best_epoch = epoch;
            since_improve = 0;
            since_plateau = 0;
        } else {
            ++since_improve;
            ++since_plateau;
            if (since_improve >= cfg.early_stop_patience) break;
            if (since_plateau >= cfg.plateau_patience) {
                opt.lr = std::max(cfg.min_lr, opt.lr * cfg.plateau_factor);
                since_plateau = 0;
            }
        }
    }
    model.params = best_params;  // restore best-val-loss weights
    return hist;
}

// --- Gradient check -----------------------------------------------------------

struct GradientCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t n_params = 0;
};

// Central finite differences over every parameter, f64 recommended.
template <typename Real>
GradientCheckReport gradient_check(CnnModel<Real>& model,
                                   const std::vector<std::vector<Real>>& batch,
                                   std::span<const int> labels, bool training = true,
                                   std::uint64_t seed = 7, double h = 1e-5) {
    std::vector<Real> analytic;
    loss_and_gradients(model, batch, labels, training, seed, analytic);
    GradientCheckReport rep;
    rep.n_params = model.params.size();
    std::vector<Real> dummy;
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        const Real orig = model.params[i];
        model.params[i] = orig + static_cast<Real>(h);
        const double lp = loss_and_gradients(model, batch, labels, training, seed, dummy);
        model.params[i] = orig - static_cast<Real>(h);
        const double lm = loss_and_gradients(model, batch, labels, training, seed, dummy);
        model.params[i] = orig;
        const double numeric = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::abs(numeric), std::abs(double(analytic[i])), 1e-8});
        const double rel = std::abs(numeric - double(analytic[i])) / denom;
        if (rel > rep.max_rel_error) {
            rep.max_rel_error = rel;
            rep.worst_param = i;
        }
    }
    return rep;
}

// --- Checkpoint format ---------------------------------------------------------
// "CNN1" magic, version u8=1, u32 LE param count, params as f32 LE; the
// architecture lives in a JSON sidecar.

inline nlohmann::json spec_to_json(const CnnSpec& spec) {
    nlohmann::json branches = nlohmann::json::array();
    for (const auto& b : spec.branches)
        branches.push_back({{"input_dim", b.input_dim}, {"filters", b.filters},
                            {"kernel", b.kernel}, {"dropout", b.dropout}});
    return {{"branches", branches}, {"head_units", spec.head_units},
            {"head_dropout", spec.head_dropout}, {"seed", spec.seed}};
}

inline CnnSpec spec_from_json(const nlohmann::json& j) {
    CnnSpec spec;
    spec.branches.clear();
    for (const auto& b : j.at("branches"))
        spec.branches.push_back({b.at("input_dim"), b.at("filters"), b.at("kernel"),
                                 b.at("dropout")});
    spec.head_units = j.at("head_units").get<std::vector<std::size_t>>();
    spec.head_dropout = j.at("head_dropout").get<std::vector<double>>();
    spec.seed = j.at("seed");
    return spec;
}

template <typename Real>
void save_checkpoint(const CnnModel<Real>& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write("CNN1", 4);
    const unsigned char version = 1;
    os.write(reinterpret_cast<const char*>(&version), 1);
    featforge::detail::put_u32le(os, static_cast<std::uint32_t>(model.params.size()));
    for (Real p : model.params) {
        const float f = static_cast<float>(p);
        os.write(reinterpret_cast<const char*>(&f), 4);
    }
    std::ofstream js(path + ".arch.json");
    js << spec_to_json(model.spec).dump(2) << "\n";
}

template <typename Real>
CnnModel<Real> load_checkpoint(const std::string& path) {
    std::ifstream js(path + ".arch.json");
    if (!js) throw std::runtime_error("missing architecture sidecar for " + path);
    const auto spec = spec_from_json(nlohmann::json::parse(js));
    auto model = build_multibranch_cnn<Real>(spec);
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "CNN1", 4) != 0)
        throw std::runtime_error("bad checkpoint magic in " + path);
    unsigned char version = 0;
    is.read(reinterpret_cast<char*>(&version), 1);
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");
    const auto n = featforge::detail::get_u32le(is);
    if (n != model.params.size())
        throw std::runtime_error("checkpoint parameter count mismatch");
    for (auto& p : model.params) {
        float f;
        is.read(reinterpret_cast<char*>(&f), 4);
        p = static_cast<Real>(f);
    }
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    return model;
}

}  // namespace featforge::nn
