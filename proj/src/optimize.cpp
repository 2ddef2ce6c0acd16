#include "mmlh/optimize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mmlh {

namespace {

struct Vertex {
    std::vector<double> x;
    double f{0.0};
};

struct RunStats {
    std::size_t iterations{0};
    std::size_t evaluations{0};
    bool converged{false};
};

RunStats simplex_run(const ObjectiveFn& f, std::vector<Vertex>& simplex, const NelderMeadOptions& options) {
    const std::size_t n = simplex.size() - 1;
    RunStats stats;
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    auto eval = [&](const std::vector<double>& x) {
        ++stats.evaluations;
        const double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };
    auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };

    while (stats.iterations < options.max_iterations) {
        std::sort(simplex.begin(), simplex.end(), by_value);
        const double spread = simplex[n].f - simplex[0].f;
        if (std::isfinite(spread) && spread <= options.abs_tol) {
            stats.converged = true;
            break;
        }
        ++stats.iterations;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[v].x[d];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        auto& worst = simplex[n];
        for (std::size_t d = 0; d < n; ++d) xr[d] = centroid[d] + (centroid[d] - worst.x[d]);
        const double fr = eval(xr);

        if (fr < simplex[0].f) {
            for (std::size_t d = 0; d < n; ++d) xe[d] = centroid[d] + 2.0 * (centroid[d] - worst.x[d]);
            const double fe = eval(xe);
            if (fe < fr) {
                worst.x = xe;
                worst.f = fe;
            } else {
                worst.x = xr;
                worst.f = fr;
            }
            continue;
        }
        if (fr < simplex[n - 1].f) {
            worst.x = xr;
            worst.f = fr;
            continue;
        }

        const bool outside = fr < worst.f;
        const auto& towards = outside ? xr : worst.x;
        for (std::size_t d = 0; d < n; ++d) xc[d] = centroid[d] + 0.5 * (towards[d] - centroid[d]);
        const double fc = eval(xc);
        if (outside ? fc <= fr : fc < worst.f) {
            worst.x = xc;
            worst.f = fc;
            continue;
        }

        // Shrink towards the best vertex.
        for (std::size_t v = 1; v <= n; ++v) {
            for (std::size_t d = 0; d < n; ++d) {
                simplex[v].x[d] = simplex[0].x[d] + 0.5 * (simplex[v].x[d] - simplex[0].x[d]);
            }
            simplex[v].f = eval(simplex[v].x);
        }
    }
    std::sort(simplex.begin(), simplex.end(), by_value);
    return stats;
}

std::vector<Vertex> make_simplex(const ObjectiveFn& f, const std::vector<double>& x0, double step, std::size_t& evals) {
    const auto n = x0.size();
    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);
    simplex.push_back({x0, f(x0)});
    for (std::size_t d = 0; d < n; ++d) {
        auto x = x0;
        x[d] += step;
        simplex.push_back({x, 0.0});
        simplex.back().f = f(simplex.back().x);
    }
    evals += n + 1;
    for (auto& v : simplex) {
        if (std::isnan(v.f)) v.f = std::numeric_limits<double>::infinity();
    }
    return simplex;
}

} // namespace

OptimizeResult nelder_mead(const ObjectiveFn& f, std::vector<double> x0, const NelderMeadOptions& options) {
    OptimizeResult result;
    if (x0.empty()) {
        result.value = f(x0);
        result.evaluations = 1;
        result.converged = std::isfinite(result.value);
        return result;
    }

    auto simplex = make_simplex(f, x0, options.initial_step, result.evaluations);
    auto stats = simplex_run(f, simplex, options);
    result.iterations += stats.iterations;
    result.evaluations += stats.evaluations;
    result.x = simplex[0].x;
    result.value = simplex[0].f;
    result.converged = stats.converged;

    for (std::size_t r = 0; r < options.restarts; ++r) {
        simplex = make_simplex(f, result.x, options.initial_step, result.evaluations);
        stats = simplex_run(f, simplex, options);
        result.iterations += stats.iterations;
        result.evaluations += stats.evaluations;
        const double improvement = result.value - simplex[0].f;
        if (simplex[0].f < result.value) {
            result.x = simplex[0].x;
            result.value = simplex[0].f;
        }
        result.converged = stats.converged;
        if (stats.converged && improvement <= options.abs_tol) break;
    }
    result.converged = result.converged && std::isfinite(result.value);
    return result;
}

OptimizeResult projected_newton(const SmoothObjective& f, std::vector<double> x0, double lower, double upper,
                                const NewtonOptions& options) {
    const auto n = x0.size();
    auto project = [&](double v) { return std::clamp(v, lower, upper); };
    for (auto& v : x0) v = project(v);

    OptimizeResult result;
    result.x = std::move(x0);
    result.value = f.value(result.x);
    ++result.evaluations;
    if (!std::isfinite(result.value)) return result;

    std::vector<double> g(n), trial(n);
    std::vector<std::size_t> free;
    for (; result.iterations < options.max_iterations; ++result.iterations) {
        f.gradient(result.x, g);
        free.clear();
        double pg = 0.0;
        for (std::size_t d = 0; d < n; ++d) {
            const bool pinned_low = result.x[d] <= lower && g[d] > 0.0;
            const bool pinned_high = result.x[d] >= upper && g[d] < 0.0;
            if (!pinned_low && !pinned_high) {
                free.push_back(d);
                pg = std::max(pg, std::abs(g[d]));
            }
        }
        if (pg <= options.gradient_tol * (1.0 + std::abs(result.value))) {
            result.converged = true;
            break;
        }

        const auto h = f.hessian(result.x);
        const auto m = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd hf(m, m);
        Eigen::VectorXd gf(m);
        for (Eigen::Index a = 0; a < m; ++a) {
            gf(a) = g[free[static_cast<std::size_t>(a)]];
            for (Eigen::Index b = 0; b < m; ++b) {
                hf(a, b) = h[free[static_cast<std::size_t>(a)] * n + free[static_cast<std::size_t>(b)]];
            }
        }
        Eigen::VectorXd step;
        double ridge = 0.0;
        for (int attempt = 0; attempt < 8; ++attempt) {
            Eigen::LLT<Eigen::MatrixXd> llt(hf + ridge * Eigen::MatrixXd::Identity(m, m));
            if (llt.info() == Eigen::Success) {
                step = llt.solve(-gf);
                break;
            }
            ridge = ridge == 0.0 ? 1e-10 * (1.0 + hf.diagonal().cwiseAbs().maxCoeff()) : ridge * 100.0;
        }
        if (step.size() != m || !step.allFinite()) step = -gf;

        double t = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            trial = result.x;
            for (Eigen::Index a = 0; a < m; ++a) {
                const auto d = free[static_cast<std::size_t>(a)];
                trial[d] = project(result.x[d] + t * step(a));
            }
            double decrease = 0.0;
            for (std::size_t d = 0; d < n; ++d) decrease += g[d] * (trial[d] - result.x[d]);
            const double ft = f.value(trial);
            ++result.evaluations;
            if (std::isfinite(ft) && ft <= result.value + 1e-4 * decrease) {
                moved = ft < result.value || trial != result.x;
                result.x = trial;
                result.value = ft;
                break;
            }
        }
        if (!moved) {
            // No descent possible at machine precision: accept as stationary.
            result.converged = true;
            break;
        }
    }
    return result;
}

} // namespace mmlh
