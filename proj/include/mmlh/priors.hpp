#pragma once

#include "mmlh/events.hpp"

#include <span>
#include <string>

namespace mmlh {

enum class PriorKind { uniform, exponential };

/// iid prior on (mu_i, alpha_ij): U[0, b] or Exp(c).
struct PriorSpec {
    PriorKind kind{PriorKind::uniform};
    double hyper{1e5};

    static PriorSpec uniform(double b);
    static PriorSpec exponential(double c);

    /// Presets: "sparse" (b = 1e5, c = 1e-5) and "mid-dense" (b = 4, c = 0.3).
    static PriorSpec preset(PriorKind kind, const std::string& name);

    [[nodiscard]] std::string to_string() const;
    /// Parses "uniform:<b>" or "exponential:<c>".
    static PriorSpec parse(const std::string& text);

    friend bool operator==(const PriorSpec&, const PriorSpec&) = default;
};

/// -log pi(theta) for a structure with k active parents, i.e. k + 1 parameters.
///   uniform:     (k + 1) log b, or +inf if any component exceeds b
///   exponential: c (mu + sum alpha) - (k + 1) log c
[[nodiscard]] double neg_log_prior(const PriorSpec& spec, std::span<const double> theta);
[[nodiscard]] double neg_log_prior(const PriorSpec& spec, const NodeParams& theta, std::size_t k);

} // namespace mmlh
