#include "mmlh/metrics.hpp"

#include <cmath>

namespace mmlh {

ScoreReport score(const Graph& predicted, const Graph& truth) {
    if (predicted.dims() != truth.dims()) {
        throw UsageError("cannot score a " + std::to_string(predicted.dims()) + "-node graph against a " +
                         std::to_string(truth.dims()) + "-node truth");
    }
    ScoreReport r;
    const auto p = truth.dims();
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const bool pe = predicted.edge(i, j);
            const bool te = truth.edge(i, j);
            r.predicted_count += pe;
            r.truth_count += te;
            r.tp_count += pe && te;
        }
    }
    if (r.predicted_count == 0 && r.truth_count == 0) {
        r.precision = r.recall = r.f1 = 1.0;
        return r;
    }
    r.precision = r.predicted_count ? static_cast<double>(r.tp_count) / static_cast<double>(r.predicted_count) : 0.0;
    r.recall = r.truth_count ? static_cast<double>(r.tp_count) / static_cast<double>(r.truth_count) : 0.0;
    if (r.precision > 0.0 && r.recall > 0.0) {
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    }
    return r;
}

Aggregate aggregate(std::span<const ScoreReport> reports) {
    Aggregate a;
    a.count = reports.size();
    if (reports.empty()) return a;
    for (const auto& r : reports) {
        a.mean_f1 += r.f1;
        a.mean_tp_rate += r.recall;
    }
    const auto n = static_cast<double>(reports.size());
    a.mean_f1 /= n;
    a.mean_tp_rate /= n;
    if (reports.size() > 1) {
        double ss = 0.0;
        for (const auto& r : reports) ss += (r.f1 - a.mean_f1) * (r.f1 - a.mean_f1);
        a.std_f1 = std::sqrt(ss / (n - 1.0));
    }
    return a;
}

} // namespace mmlh
