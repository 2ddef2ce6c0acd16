#include "mmlh/simulate.hpp"

#include "mmlh/rng.hpp"

#include <cmath>
#include <string>

namespace mmlh {

EventData simulate(const HawkesModel& model, const SimConfig& cfg) {
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) {
        throw UsageError("simulation horizon must be positive");
    }
    const auto p = static_cast<Eigen::Index>(model.dims());
    const auto& mu = model.mu();
    const auto& alpha = model.alpha();
    const auto& beta = model.beta();

    Rng rng(cfg.seed);
    std::vector<std::vector<double>> times(static_cast<std::size_t>(p));
    // excitation(i, j) = sum over past events of j of exp(-beta_ij (t - t^j_k)).
    Matrix excitation = Matrix::Zero(p, p);
    Vector lambda = mu;
    std::size_t total = 0;
    double last = 0.0;

    while (true) {
        const double bound = lambda.sum();
        const double t = last + rng.exponential(bound);
        if (t > cfg.horizon) break;

        excitation.array() *= (-beta.array() * (t - last)).exp();
        last = t;
        lambda = mu + (alpha.array() * excitation.array()).rowwise().sum().matrix();

        // u is uniform on [0, bound); conditional on acceptance it is uniform
        // on [0, sum lambda) and doubles as the node selector.
        const double u = rng.uniform() * bound;
        double cumulative = 0.0;
        Eigen::Index node = -1;
        for (Eigen::Index i = 0; i < p; ++i) {
            cumulative += lambda(i);
            if (u < cumulative) {
                node = i;
                break;
            }
        }
        if (node < 0) continue; // rejected candidate

        times[static_cast<std::size_t>(node)].push_back(t);
        excitation.col(node).array() += 1.0;
        lambda += alpha.col(node);
        if (++total > cfg.max_events) {
            throw NumericalError("simulation exceeded " + std::to_string(cfg.max_events) +
                                 " events (spectral radius " + format_double(model.spectral_radius()) + ")");
        }
    }
    return validate_events(std::move(times), cfg.horizon);
}

} // namespace mmlh
