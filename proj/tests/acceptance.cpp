// Acceptance checks. Prints one PASS/FAIL line per criterion; exits nonzero
// when a criterion fails that was not listed with --expect-fail. A run that
// selects only criteria needing unavailable data exits 77 (skipped).

#include "mmlh/bench.hpp"
#include "mmlh/criteria.hpp"
#include "mmlh/ingest.hpp"
#include "mmlh/parallel.hpp"
#include "mmlh/simulate.hpp"

#include "cli.hpp"
#include "support.hpp"

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace mmlh;
using namespace mmlh::testing;

namespace {

// Pinned thresholds.
constexpr double kTable1MinF1 = 0.85;
constexpr double kTable2MinF1 = 0.85;
constexpr double kMleThrMaxF1 = 0.55;
constexpr double kRandMaxF1 = 0.30;
constexpr double kMinHorizonGain = 0.1;
constexpr double kMinDecayDrop = 0.1;
constexpr double kGradTol = 1e-5;
constexpr double kHessTol = 1e-4;
constexpr double kHistoryTol = 1e-9;
constexpr double kConvexTol = 1e-9;
constexpr double kEigenFloor = -1e-10;
constexpr double kBlockLogdetTol = 1e-8;
constexpr double kKappaLimitTol = 0.01;
constexpr double kLatticeGapNats = 0.5;
constexpr double kPoissonSigmas = 4.0;
constexpr double kKsCritical1pct = 1.628; // times 1/sqrt(n)
constexpr std::size_t kMinSimEvents = 2000;
constexpr std::size_t kG7Lo = 350;
constexpr std::size_t kG7Hi = 650;

enum class Verdict { pass, fail, skip };

struct Outcome {
    Verdict verdict{Verdict::fail};
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }

// Desk-scale runs are shared between criteria.
const bench::ExperimentResult& experiment(const std::string& key) {
    static std::map<std::string, bench::ExperimentResult> cache;
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    bench::ExperimentSpec spec;
    if (key == "table3-T700") {
        spec = bench::preset("table3-desk");
        spec.horizon = 700.0;
    } else {
        spec = bench::preset(key);
    }
    if (key != "table1-desk") spec.methods = {"mml-u", "mml-e", "bic"};
    spec.workers = default_workers();
    std::cerr << "running " << key << " (" << spec.trials << " trials, T=" << spec.horizon << ")\n";
    return cache.emplace(key, bench::run_experiment(spec)).first->second;
}

double f1(const std::string& key, const std::string& method) { return experiment(key).method(method).aggregate.mean_f1; }

// Trials on which two methods selected the same graph.
std::size_t agreeing_trials(const bench::ExperimentResult& r, const std::string& a, const std::string& b) {
    std::map<std::size_t, const Graph*> first;
    std::size_t same = 0;
    for (const auto& t : r.trials) {
        if (t.method == a && t.ok) first[t.trial] = &t.predicted;
    }
    for (const auto& t : r.trials) {
        if (t.method != b || !t.ok) continue;
        if (auto it = first.find(t.trial); it != first.end() && *it->second == t.predicted) ++same;
    }
    return same;
}

Outcome table1() {
    const auto& r = experiment("table1-desk");
    const double u = f1("table1-desk", "mml-u");
    const double e = f1("table1-desk", "mml-e");
    const auto agree = agreeing_trials(r, "mml-u", "mml-e");
    const bool ok = u >= kTable1MinF1 && e >= kTable1MinF1 && agree == r.spec.trials;
    return verdict(ok, fmt("mean F1 mml-u %.3f, mml-e %.3f (need >= %.2f); identical graphs on %zu/%zu trials", u, e,
                           kTable1MinF1, agree, r.spec.trials));
}

Outcome ordering() {
    const auto& r = experiment("table1-desk");
    const std::string key = "table1-desk";
    const double mml = std::min(f1(key, "mml-u"), f1(key, "mml-e"));
    const double bic = f1(key, "bic");
    const double aic = f1(key, "aic");
    const double ms = f1(key, "mle-ms");
    const double thr = f1(key, "mle-thr");
    const double rnd = f1(key, "rand");
    const double rivals = std::max({ms, thr, rnd});
    const bool ok = mml >= bic && bic >= aic && aic >= rivals && thr <= kMleThrMaxF1 && rnd <= kRandMaxF1;
    return verdict(ok, fmt("mml %.3f, bic %.3f, aic %.3f, mle-ms %.3f, mle-thr %.3f (need <= %.2f), rand %.3f "
                           "(need <= %.2f); mml-u and bic agree on %zu/%zu trials",
                           mml, bic, aic, ms, thr, kMleThrMaxF1, rnd, kRandMaxF1, agreeing_trials(r, "mml-u", "bic"),
                           r.spec.trials));
}

Outcome table2() {
    const double u = f1("table2-desk", "mml-u");
    return verdict(u >= kTable2MinF1, fmt("single-input mean F1 mml-u %.3f (need >= %.2f), bic %.3f", u, kTable2MinF1,
                                          f1("table2-desk", "bic")));
}

Outcome mid_dense() {
    bool ok = true;
    std::string detail;
    for (const char* m : {"mml-u", "mml-e"}) {
        const double a = f1("table3-desk", m);
        const double b = f1("table3-T700", m);
        ok = ok && b - a >= kMinHorizonGain && a > f1("table3-desk", "bic") && b > f1("table3-T700", "bic");
        detail += fmt("%s %.3f -> %.3f; ", m, a, b);
    }
    detail += fmt("bic %.3f -> %.3f (need gain >= %.1f and mml > bic at both horizons)", f1("table3-desk", "bic"),
                  f1("table3-T700", "bic"), kMinHorizonGain);
    return verdict(ok, detail);
}

Outcome decay() {
    const double u1 = f1("table1-desk", "mml-u");
    const double u2 = f1("table4-desk", "mml-u");
    const double e1 = f1("table1-desk", "mml-e");
    const double e2 = f1("table4-desk", "mml-e");
    const bool ok = u1 - u2 >= kMinDecayDrop && e1 - e2 >= kMinDecayDrop;
    return verdict(ok, fmt("mml-u %.3f -> %.3f, mml-e %.3f -> %.3f when beta goes 1 -> 2 (need drop >= %.1f)", u1, u2,
                           e1, e2, kMinDecayDrop));
}

Outcome structure_counts() {
    const auto a = enumerate_structures(10, 5).size();
    const auto b = enumerate_structures(20, 3).size();
    const bool ok = a == 638 && b == 1351 && count_structures(10, 5) == 638 && count_structures(20, 3) == 1351;
    return verdict(ok, fmt("p=10 m=5: %zu structures; p=20 m=3: %zu structures", a, b));
}

NodeParams random_params(Rng& rng, std::size_t k) {
    NodeParams th{rng.uniform(0.05, 1.5), {}};
    for (std::size_t c = 0; c < k; ++c) th.alpha.push_back(rng.uniform(0.0, 1.0));
    return th;
}

Structure random_structure(Rng& rng, std::size_t p) {
    std::vector<std::uint8_t> g(p);
    for (auto& x : g) x = rng.bernoulli(0.5) ? 1 : 0;
    return Structure(g);
}

Outcome numerics() {
    Rng rng(20240);
    double worst_grad = 0.0;
    double worst_hess = 0.0;
    double worst_hist = 0.0;
    double worst_eig = std::numeric_limits<double>::infinity();
    int convex_violations = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t p = 1 + rng.below(3);
        const auto d = random_events(p, 10 + rng.below(20), 10.0, 7000 + static_cast<std::uint64_t>(rep));
        std::vector<double> beta(p);
        for (auto& x : beta) x = rng.uniform(0.3, 2.5);
        const std::size_t i = rng.below(p);
        const auto c = build_cache(d, i, beta);
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t l = 0; l < d.count(i); ++l) {
                const double want = brute_history(d, j, beta[j], d.node(i)[l]);
                worst_hist = std::max(worst_hist, std::abs(c.history[j][l] - want) / std::max(1.0, want));
            }
        }
        const auto gamma = random_structure(rng, p);
        const auto th = random_params(rng, gamma.k());
        const auto x = th.to_vector();
        auto f = [&](const std::vector<double>& v) { return nll_node(c, gamma, NodeParams::from_vector(v)); };
        const auto g = grad_node(c, gamma, th);
        const auto g_fd = fd_gradient(f, x);
        const auto h = hessian_node(c, gamma, th);
        for (std::size_t r = 0; r < x.size(); ++r) {
            worst_grad = std::max(worst_grad, std::abs(g[r] - g_fd[r]) / std::max(1.0, std::abs(g_fd[r])));
            auto gr = [&](const std::vector<double>& v) { return grad_node(c, gamma, NodeParams::from_vector(v))[r]; };
            const auto row = fd_gradient(gr, x);
            for (std::size_t s = 0; s < x.size(); ++s) {
                const double hv = h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s));
                worst_hess = std::max(worst_hess, std::abs(hv - row[s]) / std::max(1.0, std::abs(row[s])));
            }
        }
        worst_eig = std::min(worst_eig, Eigen::SelfAdjointEigenSolver<Matrix>(h).eigenvalues().minCoeff());

        // Midpoint convexity of nll plus either prior's negative log density.
        const auto prior = rep % 2 ? PriorSpec::exponential(rng.uniform(0.01, 2.0)) : PriorSpec::uniform(4.0);
        const auto a = random_params(rng, gamma.k()).to_vector();
        const auto b = random_params(rng, gamma.k()).to_vector();
        std::vector<double> m(a.size());
        for (std::size_t r = 0; r < a.size(); ++r) m[r] = 0.5 * (a[r] + b[r]);
        auto obj = [&](const std::vector<double>& v) { return f(v) + neg_log_prior(prior, v); };
        if (obj(m) > 0.5 * (obj(a) + obj(b)) + kConvexTol) ++convex_violations;
    }

    // Block-diagonal joint Hessian.
    const auto d = random_events(3, 30, 10.0, 31);
    std::vector<Matrix> blocks;
    Eigen::Index size = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        blocks.push_back(hessian_node(build_cache(d, i, std::vector<double>(3, 1.0)), Structure::full(3),
                                      random_params(rng, 3)));
        size += blocks.back().rows();
    }
    Matrix joint = Matrix::Zero(size, size);
    Eigen::Index at = 0;
    double sum = 0.0;
    for (const auto& blk : blocks) {
        joint.block(at, at, blk.rows(), blk.cols()) = blk;
        at += blk.rows();
        sum += logdet_hessian(blk);
    }
    const double block_err = std::abs(logdet_hessian(joint) - sum);

    const bool ok = worst_grad < kGradTol && worst_hess < kHessTol && worst_hist < kHistoryTol &&
                    convex_violations == 0 && worst_eig >= kEigenFloor && block_err < kBlockLogdetTol;
    return verdict(ok, fmt("50 instances: gradient err %.1e, Hessian err %.1e, history err %.1e, convexity "
                           "violations %d, min eigenvalue %.1e, block logdet err %.1e",
                           worst_grad, worst_hess, worst_hist, convex_violations, worst_eig, block_err));
}

Outcome kappa() {
    const double pi = std::numbers::pi;
    const auto b2 = kappa_bounds(2);
    const bool exact2 = b2.lower == 1.0 / (4.0 * pi) && b2.upper == 1.0 / (2.0 * pi);
    const double limit = 1.0 / (2.0 * pi * std::numbers::e);
    const auto big = kappa_bounds(10000);
    const double lo_err = std::abs(big.lower / limit - 1.0);
    const double hi_err = std::abs(big.upper / limit - 1.0);
    // Exact k = 1 lattice term: (1/2) log kappa_1 + 1/2.
    const double exact1 = 0.5 * std::log(1.0 / 12.0) + 0.5;
    const double gap = std::abs(lattice_terms(1) - exact1);
    const bool ok = exact2 && lo_err < kKappaLimitTol && hi_err < kKappaLimitTol && lattice_terms(0) == 0.0 &&
                    gap < kLatticeGapNats;
    return verdict(ok, fmt("k=2 bounds exact: %s; k=1e4 bounds off the limit by %.2e and %.2e; lattice(0)=%g; "
                           "lattice(1) %.4f vs exact %.4f",
                           exact2 ? "yes" : "no", lo_err, hi_err, lattice_terms(0), lattice_terms(1), exact1));
}

Outcome simulator() {
    Vector mu(1);
    mu << 1.0;
    const double horizon = 2500.0;
    const HawkesModel poisson(mu, Matrix::Zero(1, 1), Matrix::Ones(1, 1));
    const auto n = static_cast<double>(simulate(poisson, {horizon, 99}).count(0));
    const double z = (n - horizon) / std::sqrt(horizon);

    Vector mu2(2);
    mu2 << 0.5, 0.3;
    Matrix a(2, 2);
    a << 0.3, 0.1, 0.4, 0.2;
    Matrix b(2, 2);
    b << 1.0, 1.5, 0.8, 1.0;
    const HawkesModel m(mu2, a, b);
    const auto d = simulate(m, {3000.0, 7});
    bool ks_ok = d.total_count() >= kMinSimEvents;
    std::string ks;
    for (std::size_t i = 0; i < 2; ++i) {
        std::vector<double> u;
        double prev = 0.0;
        for (double t : d.node(i)) {
            const double lam = compensator(m, d, i, t);
            u.push_back(1.0 - std::exp(-(lam - prev)));
            prev = lam;
        }
        std::sort(u.begin(), u.end());
        const auto cnt = static_cast<double>(u.size());
        double stat = 0.0;
        for (std::size_t l = 0; l < u.size(); ++l) {
            const auto q = static_cast<double>(l);
            stat = std::max({stat, (q + 1.0) / cnt - u[l], u[l] - q / cnt});
        }
        const double crit = kKsCritical1pct / std::sqrt(cnt);
        ks_ok = ks_ok && stat < crit;
        ks += fmt("node %zu KS %.4f < %.4f; ", i + 1, stat, crit);
    }
    const bool ok = std::abs(z) <= kPoissonSigmas && ks_ok;
    return verdict(ok, fmt("Poisson count %.0f (z = %.2f); ", n, z) + ks + fmt("%zu events", d.total_count()));
}

Outcome g7() {
    fs::path path = MMLH_SOURCE_DIR "/data/g7.csv";
    if (const char* env = std::getenv("HAWKES_G7_CSV"); env && *env) path = env;
    if (!fs::exists(path)) return {Verdict::skip, "G7 series not found at " + path.string() + " (set HAWKES_G7_CSV)"};
    const auto table = ingest::load_csv(path.string());
    const auto d = ingest::extract_events(table, {252, 0.2, 400.0});
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < d.dims(); ++i) {
        ok = ok && d.count(i) >= kG7Lo && d.count(i) <= kG7Hi;
        detail += fmt("%s %zu; ", table.names[i].c_str(), d.count(i));
    }
    return verdict(ok, detail + fmt("need each in [%zu, %zu]", kG7Lo, kG7Hi));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "mmlh_acceptance_determinism";
    fs::remove_all(dir);
    std::ostringstream sink;
    auto run = [&](std::vector<std::string> args) {
        args.insert(args.begin(), "mmlh");
        if (cli::run(args, sink, sink) != 0) throw std::runtime_error("mmlh " + args[1] + " failed: " + sink.str());
    };
    run({"simulate", "--setting", "cascade", "--p", "7", "-T", "200", "--seed", "11", "-o", (dir / "sim").string()});
    const auto events = (dir / "sim" / "events.csv").string();
    for (const char* w : {"1", "8"}) {
        run({"infer", "-e", events, "-T", "200", "--dims", "7", "--criterion", "mml-u", "-j", w, "-o",
             (dir / (std::string("j") + w)).string()});
    }
    const bool graph = slurp(dir / "j1" / "graph.json") == slurp(dir / "j8" / "graph.json");
    const bool diag = slurp(dir / "j1" / "diagnostics.csv") == slurp(dir / "j8" / "diagnostics.csv");
    fs::remove_all(dir);
    return verdict(graph && diag, fmt("graph JSON %s, diagnostics %s between 1 and 8 workers",
                                      graph ? "identical" : "differs", diag ? "identical" : "differ"));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::vector<int> selected;
    std::vector<int> expected;
    app.add_option("--criteria", selected, "criteria to run (default: all but 10)")->delimiter(',');
    app.add_option("--expect-fail", expected, "criteria known to fail")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::map<int, Outcome (*)()> checks{{1, table1},   {2, ordering},         {3, table2},  {4, mid_dense},
                                              {5, decay},    {6, structure_counts}, {7, numerics}, {8, kappa},
                                              {9, simulator}, {10, g7},             {11, determinism}};
    if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9, 11};
    const std::set<int> known(expected.begin(), expected.end());

    int unexpected = 0;
    int skipped = 0;
    for (int c : selected) {
        const auto it = checks.find(c);
        if (it == checks.end()) {
            std::cerr << "no criterion " << c << "\n";
            return 2;
        }
        Outcome o;
        try {
            o = it->second();
        } catch (const std::exception& e) {
            o = {Verdict::fail, std::string("error: ") + e.what()};
        }
        std::string label;
        switch (o.verdict) {
        case Verdict::pass: label = known.count(c) ? "PASS (listed as expected failure)" : "PASS"; break;
        case Verdict::skip: label = "SKIP"; ++skipped; break;
        case Verdict::fail:
            label = known.count(c) ? "FAIL (expected)" : "FAIL";
            if (!known.count(c)) ++unexpected;
            break;
        }
        std::cout << "criterion " << c << ": " << label << "  " << o.detail << std::endl;
    }
    if (unexpected > 0) return 1;
    return skipped == static_cast<int>(selected.size()) ? 77 : 0;
}
