#include "mmlh/criteria.hpp"

#include "mmlh/rng.hpp"

#include <cmath>
#include <numbers>

namespace mmlh {

CriterionValue CriterionValue::assemble(double fit, double prior, double complexity, double lattice, double preamble) {
    CriterionValue v{fit, prior, complexity, lattice, preamble, 0.0};
    v.total = fit + prior + complexity + lattice + preamble;
    return v;
}

double structure_preamble(std::size_t p, std::size_t k) {
    if (k > p) throw UsageError("structure has more parents than nodes");
    const auto pd = static_cast<double>(p);
    const auto kd = static_cast<double>(k);
    const double log_binom = std::lgamma(pd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(pd - kd + 1.0);
    return log_binom + std::log(pd + 1.0);
}

double lattice_terms(std::size_t k) {
    if (k == 0) return 0.0;
    const auto kd = static_cast<double>(k);
    return -0.5 * kd * std::log(2.0 * std::numbers::pi) + 0.5 * std::log(kd * std::numbers::pi) + kDigammaOne;
}

KappaBounds kappa_bounds(std::size_t k) {
    if (k < 2) throw UsageError("kappa bounds need k >= 2");
    const auto kd = static_cast<double>(k);
    // Gamma(k/2 + 1)^{2/k} through lgamma so large k does not overflow.
    const double g = std::exp(2.0 / kd * std::lgamma(kd / 2.0 + 1.0));
    return {g / (std::numbers::pi * (kd + 2.0)), g * std::tgamma(2.0 / kd + 1.0) / (std::numbers::pi * kd)};
}

CriterionValue mml_criterion(const HistoryCache& cache, const Structure& gamma, const PriorSpec& prior,
                             const NodeParams& theta_hat) {
    const double fit = nll_node(cache, gamma, theta_hat);
    const double prior_len = neg_log_prior(prior, theta_hat, gamma.k());
    const double complexity = 0.5 * logdet_hessian(hessian_node(cache, gamma, theta_hat));
    return CriterionValue::assemble(fit, prior_len, complexity, lattice_terms(gamma.k()),
                                    structure_preamble(gamma.dims(), gamma.k()));
}

CriterionValue bic_criterion(const HistoryCache& cache, const Structure& gamma, const NodeParams& theta_hat) {
    const double fit = nll_node(cache, gamma, theta_hat);
    if (cache.n_events == 0) {
        if (gamma.k() > 0) throw NumericalError("BIC needs events on the target node");
        return CriterionValue::assemble(fit, 0.0, 0.0, 0.0, 0.0);
    }
    const double penalty = 0.5 * static_cast<double>(gamma.k() + 1) * std::log(static_cast<double>(cache.n_events));
    return CriterionValue::assemble(fit, 0.0, penalty, 0.0, 0.0);
}

CriterionValue aic_criterion(const HistoryCache& cache, const Structure& gamma, const NodeParams& theta_hat) {
    const double fit = nll_node(cache, gamma, theta_hat);
    return CriterionValue::assemble(fit, 0.0, static_cast<double>(gamma.k() + 1), 0.0, 0.0);
}

CriterionValue nll_criterion(const HistoryCache& cache, const Structure& gamma, const NodeParams& theta_hat) {
    return CriterionValue::assemble(nll_node(cache, gamma, theta_hat), 0.0, 0.0, 0.0, 0.0);
}

Structure mle_thr_rule(std::span<const double> alpha_hat_full, double threshold) {
    std::vector<std::uint8_t> gamma(alpha_hat_full.size(), 0);
    for (std::size_t j = 0; j < alpha_hat_full.size(); ++j) {
        gamma[j] = alpha_hat_full[j] > threshold ? 1 : 0;
    }
    return Structure(std::move(gamma));
}

Graph rand_rule(std::size_t p, std::uint64_t seed) {
    Rng rng(seed);
    Graph g(p);
    for (std::size_t i = 0; i < p; ++i) g.set(i, static_cast<std::size_t>(rng.below(p)), true);
    return g;
}

} // namespace mmlh
