#include "mmlh/likelihood.hpp"

#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace mmlh;
using namespace mmlh::testing;

namespace {

std::vector<double> ones(std::size_t p, double v = 1.0) { return std::vector<double>(p, v); }

NodeParams random_params(Rng& rng, std::size_t k) {
    NodeParams th;
    th.mu = rng.uniform(0.05, 1.5);
    for (std::size_t c = 0; c < k; ++c) th.alpha.push_back(rng.uniform(0.0, 1.0));
    return th;
}

Structure random_structure(Rng& rng, std::size_t p) {
    std::vector<std::uint8_t> g(p);
    for (auto& x : g) x = rng.bernoulli(0.5) ? 1 : 0;
    return Structure(g);
}

} // namespace

TEST_CASE("history of a parent without events is zero") {
    const auto d = validate_events({{1.0, 2.0}, {}}, 3.0);
    const auto c = build_cache(d, 0, ones(2));
    CHECK(c.history[1] == std::vector<double>{0.0, 0.0});
    CHECK(c.terminal[1] == 0.0);
}

TEST_CASE("one-term history") {
    const auto d = validate_events({{2.0}, {1.0}}, 3.0);
    const auto c = build_cache(d, 0, ones(2));
    CHECK(c.history[1][0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(c.t_max == 2.0);
}

TEST_CASE("recursive history equals direct summation") {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const auto d = random_events(3, 17, 10.0, 40 + rep);
        std::vector<double> beta{rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0)};
        for (std::size_t i = 0; i < 3; ++i) {
            const auto c = build_cache(d, i, beta);
            for (std::size_t j = 0; j < 3; ++j) {
                for (std::size_t l = 0; l < d.count(i); ++l) {
                    const double want = brute_history(d, j, beta[j], d.node(i)[l]);
                    CHECK(std::abs(c.history[j][l] - want) <= 1e-9 * std::max(1.0, want));
                    CHECK(c.history[j][l] >= 0.0);
                }
                double term = 0.0;
                for (double s : d.node(j)) term += (1.0 - std::exp(-beta[j] * (d.t_max() - s))) / beta[j];
                CHECK(c.terminal[j] == doctest::Approx(term).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("nll: empty structure is the Poisson likelihood") {
    const auto d = validate_events({{0.5, 1.5, 2.0}, {2.5}}, 4.0);
    const auto c = build_cache(d, 0, ones(2));
    const NodeParams th{0.7, {}};
    const double want = 0.7 * 2.5 - 3.0 * std::log(0.7);
    CHECK(nll_node(c, Structure::empty(2), th) == doctest::Approx(want).epsilon(1e-14));
    const auto g = grad_node(c, Structure::empty(2), th);
    CHECK(g[0] == doctest::Approx(2.5 - 3.0 / 0.7).epsilon(1e-14));
    const auto h = hessian_node(c, Structure::empty(2), th);
    CHECK(h(0, 0) == doctest::Approx(3.0 / 0.49).epsilon(1e-14));
}

TEST_CASE("nll: hand-evaluated toy with a numerically integrated compensator") {
    const auto d = validate_events({{1.0, 2.0}}, 2.0);
    const auto c = build_cache(d, 0, ones(1));
    const NodeParams th{1.0, {0.5}};
    const double want = 2.0 + 0.5 * (1.0 - std::exp(-1.0)) - std::log(1.0 + 0.5 * std::exp(-1.0));
    CHECK(nll_node(c, Structure::full(1), th) == doctest::Approx(want).epsilon(1e-14));

    Vector mu(1);
    mu << 1.0;
    const HawkesModel m(mu, Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1));
    const double numeric = numeric_compensator(m, d, 0, 2.0) - std::log(brute_intensity(m, d, 0, 1.0)) -
                           std::log(brute_intensity(m, d, 0, 2.0));
    CHECK(nll_node(c, Structure::full(1), th) == doctest::Approx(numeric).epsilon(1e-9));
}

TEST_CASE("per-node nll sums to the joint nll") {
    Rng rng(8);
    const std::size_t p = 3;
    Vector mu(3);
    Matrix a(3, 3);
    Matrix b(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i) {
        mu(i) = rng.uniform(0.2, 1.0);
        for (Eigen::Index j = 0; j < 3; ++j) {
            a(i, j) = rng.uniform(0.0, 0.5);
            b(i, j) = rng.uniform(0.5, 2.0);
        }
    }
    const HawkesModel m(mu, a, b);
    const auto d = random_events(p, 20, 15.0, 77);
    const double tmax = d.t_max();

    double joint = 0.0; // built from the model-level intensity and compensator
    for (std::size_t i = 0; i < p; ++i) {
        joint += compensator(m, d, i, tmax);
        for (double t : d.node(i)) joint -= std::log(brute_intensity(m, d, i, t));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        std::vector<double> beta(p);
        for (std::size_t j = 0; j < p; ++j) beta[j] = b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const auto c = build_cache(d, i, beta);
        NodeParams th{mu(static_cast<Eigen::Index>(i)), {}};
        for (std::size_t j = 0; j < p; ++j) th.alpha.push_back(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        sum += nll_node(c, Structure::full(p), th);
    }
    CHECK(sum == doctest::Approx(joint).epsilon(1e-10));
}

TEST_CASE("gradient and Hessian agree with finite differences") {
    Rng rng(21);
    int grad_checks = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t p = 1 + rng.below(3);
        const auto d = random_events(p, 10 + rng.below(20), 10.0, 500 + rep);
        std::vector<double> beta(p);
        for (auto& x : beta) x = rng.uniform(0.3, 2.5);
        const std::size_t i = rng.below(p);
        const auto c = build_cache(d, i, beta);
        const auto gamma = random_structure(rng, p);
        const auto th = random_params(rng, gamma.k());
        const auto x = th.to_vector();

        auto f = [&](const std::vector<double>& v) { return nll_node(c, gamma, NodeParams::from_vector(v)); };
        const auto g = grad_node(c, gamma, th);
        const auto g_fd = fd_gradient(f, x);
        for (std::size_t r = 0; r < x.size(); ++r) {
            CHECK(std::abs(g[r] - g_fd[r]) <= 1e-5 * std::max(1.0, std::abs(g_fd[r])));
            ++grad_checks;
        }

        const auto h = hessian_node(c, gamma, th);
        for (std::size_t r = 0; r < x.size(); ++r) {
            auto gr = [&](const std::vector<double>& v) { return grad_node(c, gamma, NodeParams::from_vector(v))[r]; };
            const auto row_fd = fd_gradient(gr, x);
            for (std::size_t s = 0; s < x.size(); ++s) {
                const auto hv = h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s));
                CHECK(std::abs(hv - row_fd[s]) <= 1e-4 * std::max(1.0, std::abs(row_fd[s])));
                CHECK(hv >= 0.0);
                CHECK(hv == h(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(r)));
            }
        }
    }
    CHECK(grad_checks > 50);
}

TEST_CASE("Hessian is positive semidefinite") {
    Rng rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        const auto d = random_events(4, 25, 20.0, 900 + rep);
        const auto c = build_cache(d, rep % 4, ones(4, rng.uniform(0.5, 2.0)));
        const auto gamma = random_structure(rng, 4);
        const auto h = hessian_node(c, gamma, random_params(rng, gamma.k()));
        const Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("nll is midpoint convex") {
    Rng rng(6);
    int violations = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const auto d = random_events(3, 15, 10.0, 1300 + rep % 10);
        const auto c = build_cache(d, rep % 3, ones(3));
        const auto gamma = random_structure(rng, 3);
        const auto a = random_params(rng, gamma.k()).to_vector();
        const auto b = random_params(rng, gamma.k()).to_vector();
        const double lam = rng.uniform(0.01, 0.99);
        std::vector<double> m(a.size());
        for (std::size_t r = 0; r < a.size(); ++r) m[r] = lam * a[r] + (1.0 - lam) * b[r];
        auto f = [&](const std::vector<double>& v) { return nll_node(c, gamma, NodeParams::from_vector(v)); };
        if (f(m) > lam * f(a) + (1.0 - lam) * f(b) + 1e-9) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("zero-alpha boundary is finite") {
    const auto d = random_events(2, 10, 5.0, 4);
    const auto c = build_cache(d, 0, ones(2));
    const NodeParams th{0.5, {0.0, 0.0}};
    CHECK(std::isfinite(nll_node(c, Structure::full(2), th)));
    CHECK(hessian_node(c, Structure::full(2), th).allFinite());
}

TEST_CASE("checked wrappers reject bad input") {
    const auto d = random_events(2, 5, 5.0, 4);
    const auto c = build_cache(d, 0, ones(2));
    CHECK_THROWS_AS((void)nll_node(c, Structure::full(2), NodeParams{0.5, {0.1}}), UsageError);
    CHECK_THROWS_AS((void)nll_node(c, Structure::empty(2), NodeParams{0.0, {}}), NumericalError);
    CHECK_THROWS_AS((void)build_cache(d, 0, std::vector<double>{1.0, -1.0}), UsageError);
}

TEST_CASE("logdet examples") {
    CHECK(logdet_hessian(Matrix::Identity(3, 3)) == 0.0);
    Matrix d2 = Matrix::Zero(2, 2);
    d2.diagonal() << 2.0, 3.0;
    CHECK(logdet_hessian(d2) == doctest::Approx(std::log(6.0)).epsilon(1e-15));
}

TEST_CASE("logdet matches cofactor expansion on Hessians") {
    Rng rng(12);
    for (int rep = 0; rep < 20; ++rep) {
        const auto d = random_events(3, 30, 10.0, 2000 + rep);
        const auto c = build_cache(d, 1, ones(3));
        const auto gamma = Structure({1, 0, 1});
        const auto h = hessian_node(c, gamma, random_params(rng, 2));
        CHECK(logdet_hessian(h) == doctest::Approx(std::log(cofactor_det(h))).epsilon(1e-10));
    }
}

TEST_CASE("logdet of a block-diagonal joint Hessian is the sum of block logdets") {
    Rng rng(13);
    const auto d = random_events(3, 30, 10.0, 31);
    std::vector<Matrix> blocks;
    Eigen::Index size = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto c = build_cache(d, i, ones(3));
        blocks.push_back(hessian_node(c, Structure::full(3), random_params(rng, 3)));
        size += blocks.back().rows();
    }
    Matrix joint = Matrix::Zero(size, size);
    Eigen::Index at = 0;
    double sum = 0.0;
    for (const auto& b : blocks) {
        joint.block(at, at, b.rows(), b.cols()) = b;
        at += b.rows();
        sum += logdet_hessian(b);
    }
    CHECK(std::abs(logdet_hessian(joint) - sum) < 1e-8);
}

TEST_CASE("logdet failure signals") {
    CHECK_THROWS_AS((void)logdet_hessian(Matrix::Zero(2, 2)), NumericalError);
    Matrix neg = Matrix::Identity(2, 2);
    neg(1, 1) = -1.0;
    CHECK_THROWS_AS((void)logdet_hessian(neg), NumericalError);
    Matrix tiny = Matrix::Identity(2, 2) * 1e-160;
    CHECK_THROWS_AS((void)logdet_hessian(tiny), NumericalError);
    Matrix nan = Matrix::Identity(2, 2);
    nan(0, 1) = std::nan("");
    CHECK_THROWS_AS((void)logdet_hessian(nan), NumericalError);
    // A node without events has an all-zero Hessian block.
    const auto d = validate_events({{}, {1.0}}, 2.0);
    const auto c = build_cache(d, 0, ones(2));
    CHECK_THROWS_AS((void)logdet_hessian(hessian_node(c, Structure({0, 1}), NodeParams{0.5, {0.2}})), NumericalError);
}
