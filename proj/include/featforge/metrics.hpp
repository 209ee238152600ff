#pragma once

#include <span>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace featforge {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
};

inline ConfusionCounts confusion_counts(std::span<const int> y_true,
                                        std::span<const int> y_pred,
                                        int positive_class) {
    if (y_true.size() != y_pred.size())
        throw std::invalid_argument("confusion_counts: length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if ((y_true[i] != 0 && y_true[i] != 1) || (y_pred[i] != 0 && y_pred[i] != 1))
            throw std::invalid_argument("confusion_counts: non-binary label");
        const bool t = y_true[i] == positive_class;
        const bool p = y_pred[i] == positive_class;
        if (t && p) ++c.tp;
        else if (!t && p) ++c.fp;
        else if (t && !p) ++c.fn;
        else ++c.tn;
    }
    return c;
}

struct ClassMetrics {
    double precision = 0, recall = 0, f1 = 0;
};

// Zero-denominator cases emit 0, never NaN.
inline ClassMetrics class_metrics(const ConfusionCounts& c) {
    ClassMetrics m;
    if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
    if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / (c.tp + c.fn);
    if (m.precision + m.recall > 0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

struct ClassificationReport {
    double accuracy = 0;
    ClassMetrics fake;   // label 0 treated as positive
    ClassMetrics real;   // label 1 treated as positive
    ClassMetrics macro;  // unweighted class mean
    ConfusionCounts confusion_real;  // positive_class = 1
};

inline ClassificationReport classification_report(std::span<const int> y_true,
                                                  std::span<const int> y_pred) {
    ClassificationReport r;
    const auto c_real = confusion_counts(y_true, y_pred, 1);
    const auto c_fake = confusion_counts(y_true, y_pred, 0);
    r.confusion_real = c_real;
    r.real = class_metrics(c_real);
    r.fake = class_metrics(c_fake);
    r.macro.precision = 0.5 * (r.real.precision + r.fake.precision);
    r.macro.recall = 0.5 * (r.real.recall + r.fake.recall);
    r.macro.f1 = 0.5 * (r.real.f1 + r.fake.f1);
    if (c_real.total() > 0)
        r.accuracy = static_cast<double>(c_real.tp + c_real.tn) / c_real.total();
    return r;
}

inline nlohmann::json report_to_json(const ClassificationReport& r) {
    auto cm = [](const ClassMetrics& m) {
        return nlohmann::json{{"p", m.precision}, {"r", m.recall}, {"f1", m.f1}};
    };
    // confusion layout: [[tn, fp], [fn, tp]] with class 1 positive
    return {{"accuracy", r.accuracy},
            {"per_class", {{"fake", cm(r.fake)}, {"real", cm(r.real)}}},
            {"macro", cm(r.macro)},
            {"confusion",
             {{r.confusion_real.tn, r.confusion_real.fp},
              {r.confusion_real.fn, r.confusion_real.tp}}}};
}

}  // namespace featforge
