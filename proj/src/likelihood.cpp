#include "mmlh/likelihood.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mmlh {

HistoryCache build_cache(const EventData& data, std::size_t node, std::span<const double> beta_row) {
    const auto p = data.dims();
    if (node >= p) throw UsageError("node index out of range");
    if (beta_row.size() != p) throw UsageError("decay row must have one entry per node");
    for (double b : beta_row) {
        if (!(b > 0.0) || !std::isfinite(b)) throw UsageError("decay constants must be positive");
    }

    HistoryCache cache;
    cache.node = node;
    cache.t_max = data.t_max();
    const auto target = data.node(node);
    cache.n_events = target.size();
    cache.history.assign(p, std::vector<double>(target.size(), 0.0));
    cache.terminal.assign(p, 0.0);

    for (std::size_t j = 0; j < p; ++j) {
        const double beta = beta_row[j];
        const auto source = data.node(j);
        auto& a = cache.history[j];
        // running = A_ij(last^+), i.e. including every parent event at or before `last`.
        double running = 0.0;
        double last = 0.0;
        std::size_t k = 0;
        for (std::size_t l = 0; l < target.size(); ++l) {
            const double t = target[l];
            while (k < source.size() && source[k] < t) {
                running = running * std::exp(-beta * (source[k] - last)) + 1.0;
                last = source[k];
                ++k;
            }
            a[l] = running * std::exp(-beta * (t - last));
        }
        double mass = 0.0;
        for (double s : source) mass += -std::expm1(-beta * (cache.t_max - s));
        cache.terminal[j] = mass / beta;
    }
    return cache;
}

NodeObjective::NodeObjective(const HistoryCache& cache, const Structure& gamma)
    : k_(gamma.k()), n_(cache.n_events), t_max_(cache.t_max) {
    if (gamma.dims() != cache.dims()) {
        throw UsageError("structure dimension does not match history cache");
    }
    const auto& parents = gamma.parents();
    terminal_.reserve(k_);
    for (auto j : parents) terminal_.push_back(cache.terminal[j]);
    design_.resize(n_ * k_);
    for (std::size_t l = 0; l < n_; ++l) {
        for (std::size_t c = 0; c < k_; ++c) {
            design_[l * k_ + c] = cache.history[parents[c]][l];
        }
    }
}

double NodeObjective::value(std::span<const double> theta) const noexcept {
    const double mu = theta[0];
    double result = mu * t_max_;
    for (std::size_t c = 0; c < k_; ++c) result += theta[c + 1] * terminal_[c];
    const double* row = design_.data();
    for (std::size_t l = 0; l < n_; ++l, row += k_) {
        double lambda = mu;
        for (std::size_t c = 0; c < k_; ++c) lambda += theta[c + 1] * row[c];
        if (!(lambda > 0.0)) return std::numeric_limits<double>::infinity();
        result -= std::log(lambda);
    }
    return result;
}

void NodeObjective::gradient(std::span<const double> theta, std::span<double> out) const {
    out[0] = t_max_;
    for (std::size_t c = 0; c < k_; ++c) out[c + 1] = terminal_[c];
    const double* row = design_.data();
    for (std::size_t l = 0; l < n_; ++l, row += k_) {
        double lambda = theta[0];
        for (std::size_t c = 0; c < k_; ++c) lambda += theta[c + 1] * row[c];
        const double w = 1.0 / lambda;
        out[0] -= w;
        for (std::size_t c = 0; c < k_; ++c) out[c + 1] -= w * row[c];
    }
}

Matrix NodeObjective::hessian(std::span<const double> theta) const {
    const auto d = static_cast<Eigen::Index>(k_ + 1);
    Matrix h = Matrix::Zero(d, d);
    Vector z(d);
    const double* row = design_.data();
    for (std::size_t l = 0; l < n_; ++l, row += k_) {
        double lambda = theta[0];
        z(0) = 1.0;
        for (std::size_t c = 0; c < k_; ++c) {
            lambda += theta[c + 1] * row[c];
            z(static_cast<Eigen::Index>(c + 1)) = row[c];
        }
        h.selfadjointView<Eigen::Lower>().rankUpdate(z, 1.0 / (lambda * lambda));
    }
    return h.selfadjointView<Eigen::Lower>();
}

namespace {

void check_theta(const Structure& gamma, const NodeParams& theta) {
    if (theta.alpha.size() != gamma.k()) {
        throw UsageError("parameter vector has " + std::to_string(theta.size()) + " entries, structure needs " +
                         std::to_string(gamma.k() + 1));
    }
}

} // namespace

double nll_node(const HistoryCache& cache, const Structure& gamma, const NodeParams& theta) {
    check_theta(gamma, theta);
    const auto v = theta.to_vector();
    const double result = NodeObjective(cache, gamma).value(v);
    if (!std::isfinite(result)) {
        throw NumericalError("negative log-likelihood of node " + std::to_string(cache.node + 1) + " is not finite");
    }
    return result;
}

std::vector<double> grad_node(const HistoryCache& cache, const Structure& gamma, const NodeParams& theta) {
    check_theta(gamma, theta);
    const auto v = theta.to_vector();
    std::vector<double> g(v.size());
    NodeObjective(cache, gamma).gradient(v, g);
    for (double x : g) {
        if (!std::isfinite(x)) throw NumericalError("gradient is not finite");
    }
    return g;
}

Matrix hessian_node(const HistoryCache& cache, const Structure& gamma, const NodeParams& theta) {
    check_theta(gamma, theta);
    const auto v = theta.to_vector();
    Matrix h = NodeObjective(cache, gamma).hessian(v);
    if (!h.allFinite()) throw NumericalError("Hessian is not finite");
    return h;
}

double logdet_hessian(const Matrix& h) {
    if (h.rows() != h.cols()) throw UsageError("logdet needs a square matrix");
    if (h.rows() == 0) return 0.0;
    if (!h.allFinite()) throw NumericalError("Hessian has non-finite entries");
    const Eigen::PartialPivLU<Matrix> lu(h);
    const Matrix& packed = lu.matrixLU();
    double logdet = 0.0;
    int sign = static_cast<int>(lu.permutationP().determinant());
    for (Eigen::Index r = 0; r < packed.rows(); ++r) {
        const double u = packed(r, r);
        if (u == 0.0 || !std::isfinite(u)) throw NumericalError("Hessian is singular");
        if (u < 0.0) sign = -sign;
        logdet += std::log(std::abs(u));
    }
    if (sign < 0) throw NumericalError("Hessian determinant is negative");
    if (!std::isfinite(logdet) || logdet <= std::log(kMinDeterminant)) {
        throw NumericalError("Hessian determinant is numerically zero");
    }
    return logdet;
}

} // namespace mmlh
