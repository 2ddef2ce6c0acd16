#pragma once

#include "mmlh/events.hpp"

#include <span>
#include <vector>

namespace mmlh {

/// Precomputed history sums for one target node i, over every candidate parent j:
///   history[j][l] = A_ij(t^i_l) = sum_{t^j_k < t^i_l} exp(-beta_ij (t^i_l - t^j_k))
///   terminal[j]   = sum_k (1 - exp(-beta_ij (t_max - t^j_k))) / beta_ij
/// Built once per (data, node) and shared read-only by every structure evaluation.
struct HistoryCache {
    std::size_t node{0};
    std::size_t n_events{0};
    double t_max{0.0};
    std::vector<std::vector<double>> history;
    std::vector<double> terminal;

    [[nodiscard]] std::size_t dims() const noexcept { return terminal.size(); }
};

/// One merged decay-and-accumulate sweep per parent. beta_row[j] = beta_ij.
/// The likelihood is integrated up to data.t_max(), not the horizon.
[[nodiscard]] HistoryCache build_cache(const EventData& data, std::size_t node, std::span<const double> beta_row);

/// Negative log-likelihood of node i restricted to a structure, in a layout
/// suited to repeated evaluation: the history columns of the active parents are
/// packed row-major (one row per event of node i).
///
/// theta = (mu_i, alpha_ij for j in parents, in increasing j).
class NodeObjective {
public:
    NodeObjective(const HistoryCache& cache, const Structure& gamma);

    [[nodiscard]] std::size_t size() const noexcept { return k_ + 1; }
    [[nodiscard]] std::size_t active() const noexcept { return k_; }
    [[nodiscard]] std::size_t n_events() const noexcept { return n_; }
    [[nodiscard]] double t_max() const noexcept { return t_max_; }

    /// l_i(theta). Returns +inf when an intensity at an event is not positive;
    /// never throws, so optimizers can probe infeasible points.
    [[nodiscard]] double value(std::span<const double> theta) const noexcept;
    void gradient(std::span<const double> theta, std::span<double> out) const;
    [[nodiscard]] Matrix hessian(std::span<const double> theta) const;

private:
    std::size_t k_{0};
    std::size_t n_{0};
    double t_max_{0.0};
    std::vector<double> terminal_;
    std::vector<double> design_;
};

// Checked entry points. All throw NumericalError on a non-finite result and
// UsageError when theta does not match the structure.

[[nodiscard]] double nll_node(const HistoryCache& cache, const Structure& gamma, const NodeParams& theta);
[[nodiscard]] std::vector<double> grad_node(const HistoryCache& cache, const Structure& gamma, const NodeParams& theta);
[[nodiscard]] Matrix hessian_node(const HistoryCache& cache, const Structure& gamma, const NodeParams& theta);

/// log|H| via LU with partial pivoting. Throws NumericalError when the
/// determinant is non-positive, at most 1e-300, or an intermediate is non-finite.
[[nodiscard]] double logdet_hessian(const Matrix& h);

/// Smallest determinant logdet_hessian() accepts.
inline constexpr double kMinDeterminant = 1e-300;

} // namespace mmlh
