#pragma once

#include "mmlh/events.hpp"
#include "mmlh/likelihood.hpp"
#include "mmlh/priors.hpp"

#include <cstdint>
#include <span>

namespace mmlh {

/// psi(1), the negative Euler-Mascheroni constant.
inline constexpr double kDigammaOne = -0.57721566490153286;

/// Message length of one (node, structure) hypothesis, in nats.
/// total = fit + prior + complexity + lattice + preamble, summed in that order.
struct CriterionValue {
    double fit{0.0};        // -log p(x | theta_hat)
    double prior{0.0};      // -log pi(theta_hat)
    double complexity{0.0}; // 1/2 log|H(theta_hat)|, or the BIC/AIC penalty
    double lattice{0.0};    // quantization constant terms
    double preamble{0.0};   // structure code length
    double total{0.0};

    static CriterionValue assemble(double fit, double prior, double complexity, double lattice, double preamble);
};

/// log C(p, k) + log(p + 1).
[[nodiscard]] double structure_preamble(std::size_t p, std::size_t k);

/// -(k/2) log(2 pi) + 1/2 log(k pi) + psi(1) for k >= 1, and 0 for k = 0.
/// Approximates (k/2)(log kappa_k + 1).
[[nodiscard]] double lattice_terms(std::size_t k);

struct KappaBounds {
    double lower{0.0};
    double upper{0.0};
};

/// Bounds on the normalized second moment kappa_k of the optimal k-dimensional
/// quantizing lattice:
///   Gamma(k/2+1)^{2/k} / (pi (k+2))  <  kappa_k  <  Gamma(k/2+1)^{2/k} Gamma(2/k+1) / (pi k).
/// Requires k >= 2.
[[nodiscard]] KappaBounds kappa_bounds(std::size_t k);

/// Wallace-Freeman message length of node cache.node under `gamma` at the MAP
/// estimate theta_hat. Throws NumericalError when the Hessian log-determinant fails.
[[nodiscard]] CriterionValue mml_criterion(const HistoryCache& cache, const Structure& gamma, const PriorSpec& prior,
                                           const NodeParams& theta_hat);

/// nll + ((k + 1) / 2) log n_i, on the negative-log-likelihood scale.
[[nodiscard]] CriterionValue bic_criterion(const HistoryCache& cache, const Structure& gamma, const NodeParams& theta_hat);

/// nll + (k + 1).
[[nodiscard]] CriterionValue aic_criterion(const HistoryCache& cache, const Structure& gamma, const NodeParams& theta_hat);

/// Plain negative log-likelihood (model selection by likelihood alone).
[[nodiscard]] CriterionValue nll_criterion(const HistoryCache& cache, const Structure& gamma, const NodeParams& theta_hat);

/// Edge j -> i iff alpha_hat_ij > threshold (strict).
[[nodiscard]] Structure mle_thr_rule(std::span<const double> alpha_hat_full, double threshold = 0.1);

/// One uniformly placed parent per row.
[[nodiscard]] Graph rand_rule(std::size_t p, std::uint64_t seed);

} // namespace mmlh
