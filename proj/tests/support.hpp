#pragma once

// Independent reference computations used as oracles by the unit tests.
// Everything here is written the slow, obvious way on purpose.

#include "mmlh/events.hpp"
#include "mmlh/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace mmlh::testing {

/// Random event data with n_per_node uniform times per node on (0, T].
inline EventData random_events(std::size_t p, std::size_t n_per_node, double horizon, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> raw(p);
    for (auto& x : raw) {
        for (std::size_t l = 0; l < n_per_node; ++l) x.push_back(horizon * (1.0 - rng.uniform()));
        std::sort(x.begin(), x.end());
        x.erase(std::unique(x.begin(), x.end()), x.end());
    }
    return validate_events(std::move(raw), horizon);
}

/// Direct double sum over all (j, k) with t^j_k < t.
inline double brute_history(const EventData& data, std::size_t j, double beta, double t) {
    double a = 0.0;
    for (double s : data.node(j)) {
        if (s < t) a += std::exp(-beta * (t - s));
    }
    return a;
}

inline double brute_intensity(const HawkesModel& m, const EventData& data, std::size_t i, double t) {
    double lambda = m.mu()(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < m.dims(); ++j) {
        const auto a = m.alpha()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const auto b = m.beta()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        lambda += a * brute_history(data, j, b, t);
    }
    return lambda;
}

/// Composite Simpson integral of the intensity, split at every event so each
/// panel integrates a smooth function.
inline double numeric_compensator(const HawkesModel& m, const EventData& data, std::size_t i, double t,
                                  int panels_per_gap = 200) {
    std::vector<double> knots{0.0, t};
    for (std::size_t j = 0; j < data.dims(); ++j) {
        for (double s : data.node(j)) {
            if (s < t) knots.push_back(s);
        }
    }
    std::sort(knots.begin(), knots.end());
    double total = 0.0;
    for (std::size_t g = 0; g + 1 < knots.size(); ++g) {
        const double a = knots[g];
        const double b = knots[g + 1];
        if (b <= a) continue;
        const double h = (b - a) / (2.0 * panels_per_gap);
        // Evaluate strictly inside the gap: the right limit at a, left limit at b.
        auto f = [&](double x) { return brute_intensity(m, data, i, std::clamp(x, a + 1e-13 * (b - a), b)); };
        double s = f(a) + f(b);
        for (int q = 1; q < 2 * panels_per_gap; ++q) s += f(a + q * h) * (q % 2 ? 4.0 : 2.0);
        total += s * h / 3.0;
    }
    return total;
}

/// Determinant by Laplace expansion along the first row.
inline double cofactor_det(const Matrix& a) {
    const auto n = a.rows();
    if (n == 1) return a(0, 0);
    double det = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
        Matrix minor(n - 1, n - 1);
        for (Eigen::Index r = 1; r < n; ++r) {
            for (Eigen::Index cc = 0, k = 0; cc < n; ++cc) {
                if (cc != c) minor(r - 1, k++) = a(r, cc);
            }
        }
        det += (c % 2 ? -1.0 : 1.0) * a(0, c) * cofactor_det(minor);
    }
    return det;
}

/// Central differences of a scalar function.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       const std::vector<double>& x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) {
        auto up = x;
        auto dn = x;
        up[c] += h;
        dn[c] -= h;
        g[c] = (f(up) - f(dn)) / (2.0 * h);
    }
    return g;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

} // namespace mmlh::testing
