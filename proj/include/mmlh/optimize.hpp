#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mmlh {

using ObjectiveFn = std::function<double(std::span<const double>)>;

struct NelderMeadOptions {
    double abs_tol{1e-8};           // stop when max f - min f over the simplex is below this
    std::size_t max_iterations{5000}; // per run
    std::size_t restarts{2};        // fresh simplices around the incumbent after convergence
    double initial_step{0.5};
};

struct OptimizeResult {
    std::vector<double> x;
    double value{0.0};
    std::size_t iterations{0};
    std::size_t evaluations{0};
    bool converged{false};
};

/// Derivative-free simplex minimization with standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). After a run
/// converges the search is restarted from the best vertex with a fresh
/// simplex; the result is accepted once a restart fails to improve it by more
/// than abs_tol, or the restart budget is spent.
[[nodiscard]] OptimizeResult nelder_mead(const ObjectiveFn& f, std::vector<double> x0, const NelderMeadOptions& options = {});

/// Smooth objective with analytic derivatives, for the Newton mode.
struct SmoothObjective {
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    std::function<std::vector<double>(std::span<const double>)> hessian; // row-major d x d
};

struct NewtonOptions {
    double gradient_tol{1e-9};
    std::size_t max_iterations{200};
};

/// Projected Newton for a convex objective on the box [lower, upper]^d with
/// backtracking along the projected path.
[[nodiscard]] OptimizeResult projected_newton(const SmoothObjective& f, std::vector<double> x0, double lower, double upper,
                                              const NewtonOptions& options = {});

} // namespace mmlh
