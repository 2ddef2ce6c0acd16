#include "mmlh/search.hpp"

#include "mmlh/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

namespace mmlh {

Method Method::parse(std::string_view name, double b, double c) {
    if (name == "mml-u") return {Criterion::mml, PriorSpec::uniform(b)};
    if (name == "mml-e") return {Criterion::mml, PriorSpec::exponential(c)};
    if (name == "bic") return {Criterion::bic};
    if (name == "aic") return {Criterion::aic};
    if (name == "mle-ms") return {Criterion::mle_ms};
    if (name == "mle-thr") return {Criterion::mle_thr};
    if (name == "rand") return {Criterion::rand};
    throw UsageError("unknown criterion '" + std::string(name) +
                     "' (expected mml-u, mml-e, bic, aic, mle-ms, mle-thr or rand)");
}

std::string Method::name() const {
    switch (criterion) {
    case Criterion::mml: return prior.kind == PriorKind::uniform ? "mml-u" : "mml-e";
    case Criterion::bic: return "bic";
    case Criterion::aic: return "aic";
    case Criterion::mle_ms: return "mle-ms";
    case Criterion::mle_thr: return "mle-thr";
    case Criterion::rand: return "rand";
    }
    return "?";
}

std::string Method::label() const {
    if (criterion == Criterion::mml) {
        return name() + (prior.kind == PriorKind::uniform ? "(b=" : "(c=") + format_double(prior.hyper) + ")";
    }
    if (criterion == Criterion::mle_thr) return name() + "(thr=" + format_double(threshold) + ")";
    return name();
}

OptimizerKind OptimizerOptions::parse_kind(std::string_view name) {
    if (name == "nelder-mead" || name == "nm") return OptimizerKind::nelder_mead;
    if (name == "newton") return OptimizerKind::newton;
    throw UsageError("unknown optimizer '" + std::string(name) + "' (expected nelder-mead or newton)");
}

std::string_view to_string(FitStatus status) {
    switch (status) {
    case FitStatus::ok: return "ok";
    case FitStatus::degenerate: return "degenerate";
    case FitStatus::failed: return "failed";
    }
    return "?";
}

MapFit fit_map(const HistoryCache& cache, const Structure& gamma, const std::optional<PriorSpec>& prior,
               const OptimizerOptions& options) {
    if (cache.n_events == 0 && gamma.k() > 0) {
        throw UsageError("node " + std::to_string(cache.node + 1) + " has no events; only the empty structure is fittable");
    }
    const NodeObjective nll(cache, gamma);
    const std::size_t d = nll.size();
    const double upper = prior && prior->kind == PriorKind::uniform ? prior->hyper : std::numeric_limits<double>::infinity();
    const double rate = prior && prior->kind == PriorKind::exponential ? prior->hyper : 0.0;
    // Inside the box the uniform prior is the constant (k + 1) log b.
    const double offset = prior ? (prior->kind == PriorKind::uniform ? static_cast<double>(d) * std::log(prior->hyper)
                                                                     : -static_cast<double>(d) * std::log(prior->hyper))
                                : 0.0;
    auto clamp = [&](double v) { return std::clamp(v, kParamFloor, std::max(upper, kParamFloor)); };

    std::vector<double> start(d, clamp(0.1));
    start[0] = clamp(nll.n_events() > 0 ? 0.5 * static_cast<double>(nll.n_events()) / nll.t_max() : 1e-3);

    auto map_objective = [&](std::span<const double> theta) {
        double value = nll.value(theta);
        if (rate > 0.0) {
            for (double x : theta) value += rate * x;
        }
        return value;
    };

    MapFit fit;
    if (d == 1) {
        // Baseline only: mu t_max + c mu - n log mu has its minimum at n / (t_max + c).
        const double mu = clamp(static_cast<double>(nll.n_events()) / (nll.t_max() + rate));
        const std::array<double, 1> theta{mu};
        fit.theta = NodeParams{mu, {}};
        fit.objective = map_objective(theta) + offset;
        fit.converged = true;
        fit.evaluations = 1;
    } else if (options.kind == OptimizerKind::nelder_mead) {
        // Optimize over eta = log(theta), mapping back through the clamp.
        std::vector<double> theta(d);
        auto to_theta = [&](std::span<const double> eta) {
            for (std::size_t c = 0; c < d; ++c) theta[c] = clamp(std::exp(eta[c]));
        };
        const ObjectiveFn f = [&](std::span<const double> eta) {
            to_theta(eta);
            return map_objective(theta);
        };
        std::vector<double> eta0(d);
        for (std::size_t c = 0; c < d; ++c) eta0[c] = std::log(start[c]);
        const auto result = nelder_mead(f, std::move(eta0), options.nelder_mead);
        to_theta(result.x);
        fit.theta = NodeParams::from_vector(theta);
        fit.objective = result.value + offset;
        fit.converged = result.converged;
        fit.evaluations = result.evaluations;
    } else {
        SmoothObjective f;
        f.value = map_objective;
        f.gradient = [&](std::span<const double> theta, std::span<double> out) {
            nll.gradient(theta, out);
            for (auto& g : out) g += rate;
        };
        f.hessian = [&](std::span<const double> theta) {
            const Matrix h = nll.hessian(theta);
            std::vector<double> flat(d * d);
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t b = 0; b < d; ++b) {
                    flat[a * d + b] = h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                }
            }
            return flat;
        };
        const auto result = projected_newton(f, start, kParamFloor, std::max(upper, kParamFloor), options.newton);
        fit.theta = NodeParams::from_vector(result.x);
        fit.objective = result.value + offset;
        fit.converged = result.converged;
        fit.evaluations = result.evaluations;
    }
    fit.converged = fit.converged && std::isfinite(fit.objective);
    return fit;
}

std::vector<Structure> enumerate_structures(std::size_t p, std::optional<std::size_t> max_parents) {
    const std::size_t m = std::min(max_parents.value_or(p), p);
    if (p > 30 && !max_parents) throw UsageError("unbounded structure search needs p <= 30");
    std::vector<Structure> out;
    out.reserve(static_cast<std::size_t>(count_structures(p, m)));
    for (std::size_t k = 0; k <= m; ++k) {
        // Lexicographically ascending 0/1 strings with k ones: start from
        // 0...01...1 and step with next_permutation.
        std::vector<std::uint8_t> gamma(p, 0);
        std::fill(gamma.end() - static_cast<std::ptrdiff_t>(k), gamma.end(), std::uint8_t{1});
        do {
            out.emplace_back(gamma);
        } while (std::next_permutation(gamma.begin(), gamma.end()));
    }
    return out;
}

std::uint64_t count_structures(std::size_t p, std::optional<std::size_t> max_parents) {
    const std::size_t m = std::min(max_parents.value_or(p), p);
    std::uint64_t total = 0;
    std::uint64_t binom = 1; // C(p, k)
    for (std::size_t k = 0; k <= m; ++k) {
        total += binom;
        binom = binom * (p - k) / (k + 1);
    }
    return total;
}

NodeEvaluator::NodeEvaluator(HistoryCache cache, OptimizerOptions options)
    : cache_(std::move(cache)), options_(options) {}

const MapFit& NodeEvaluator::fit(const Structure& gamma, const std::optional<PriorSpec>& prior) {
    Key key{gamma.gamma(), prior ? (prior->kind == PriorKind::uniform ? 1 : 2) : 0, prior ? prior->hyper : 0.0};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    if (prior && prior->kind == PriorKind::uniform) {
        // The box [0, b] is inactive whenever the MLE already lies inside it,
        // and then the MAP is the MLE.
        const MapFit& mle = fit(gamma, std::nullopt);
        const auto theta = mle.theta.to_vector();
        if (std::all_of(theta.begin(), theta.end(), [&](double x) { return x <= prior->hyper; })) {
            MapFit shifted = mle;
            shifted.objective += static_cast<double>(theta.size()) * std::log(prior->hyper);
            return memo_.emplace(std::move(key), std::move(shifted)).first->second;
        }
    }
    ++fits_computed_;
    return memo_.emplace(std::move(key), fit_map(cache_, gamma, prior, options_)).first->second;
}

NodeFit NodeEvaluator::evaluate(const Structure& gamma, const Method& method) {
    NodeFit out;
    out.gamma = gamma;
    if (cache_.n_events == 0 && gamma.k() > 0) {
        out.status = FitStatus::degenerate;
        out.note = "no events on target node";
        return out;
    }
    const bool map = method.criterion == Criterion::mml;
    const MapFit& f = fit(gamma, map ? std::optional<PriorSpec>(method.prior) : std::nullopt);
    out.theta = f.theta;
    if (!f.converged) {
        out.status = FitStatus::failed;
        out.note = "optimizer did not converge";
        return out;
    }
    try {
        switch (method.criterion) {
        case Criterion::mml: out.criterion = mml_criterion(cache_, gamma, method.prior, f.theta); break;
        case Criterion::bic: out.criterion = bic_criterion(cache_, gamma, f.theta); break;
        case Criterion::aic: out.criterion = aic_criterion(cache_, gamma, f.theta); break;
        case Criterion::mle_ms:
        case Criterion::mle_thr: out.criterion = nll_criterion(cache_, gamma, f.theta); break;
        case Criterion::rand: throw UsageError("rand is not a per-structure criterion");
        }
    } catch (const NumericalError& e) {
        out.status = FitStatus::failed;
        out.note = e.what();
        return out;
    }
    if (!std::isfinite(out.criterion.total)) {
        out.status = FitStatus::failed;
        out.note = "criterion is not finite";
    }
    return out;
}

NodeSearchResult search_node(NodeEvaluator& evaluator, const Method& method, std::optional<std::size_t> max_parents) {
    const auto& cache = evaluator.cache();
    const auto p = cache.dims();
    NodeSearchResult result;
    if (cache.n_events == 0) {
        result.selected = Structure::empty(p);
        result.status = FitStatus::degenerate;
        return result;
    }
    if (method.criterion == Criterion::rand) {
        throw UsageError("rand selects whole graphs; use infer_graph");
    }
    if (method.criterion == Criterion::mle_thr) {
        auto full = evaluator.evaluate(Structure::full(p), method);
        result.selected = mle_thr_rule(full.theta.alpha, method.threshold);
        result.status = full.status;
        result.fits.push_back(std::move(full));
        result.evaluated = 1;
        return result;
    }

    const auto structures = enumerate_structures(p, max_parents);
    result.fits.reserve(structures.size());
    std::optional<std::size_t> best;
    for (const auto& gamma : structures) {
        result.fits.push_back(evaluator.evaluate(gamma, method));
        const auto& f = result.fits.back();
        if (f.status == FitStatus::ok && (!best || f.criterion.total < result.fits[*best].criterion.total)) {
            best = result.fits.size() - 1;
        }
    }
    result.evaluated = structures.size();
    if (!best) {
        throw NumericalError("node " + std::to_string(cache.node + 1) + ": every structure failed to evaluate");
    }
    result.selected = result.fits[*best].gamma;
    return result;
}

std::vector<InferenceResult> infer_graphs(const EventData& data, const Matrix& beta, const std::vector<Method>& methods,
                                          const SearchConfig& cfg) {
    const auto p = data.dims();
    if (beta.rows() != static_cast<Eigen::Index>(p) || beta.cols() != static_cast<Eigen::Index>(p)) {
        throw UsageError("decay matrix must be " + std::to_string(p) + " x " + std::to_string(p));
    }
    if (cfg.max_parents && (*cfg.max_parents < 1 || *cfg.max_parents > p)) {
        throw UsageError("max parents m must satisfy 1 <= m <= p = " + std::to_string(p));
    }

    std::vector<InferenceResult> results(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        results[m].method = methods[m];
        results[m].nodes.resize(p);
    }
    const bool any_search = std::any_of(methods.begin(), methods.end(),
                                        [](const Method& m) { return m.criterion != Criterion::rand; });
    if (any_search) {
        parallel_for(p, cfg.workers, [&](std::size_t i) {
            std::vector<double> beta_row(p);
            for (std::size_t j = 0; j < p; ++j) {
                beta_row[j] = beta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
            NodeEvaluator evaluator(build_cache(data, i, beta_row), cfg.optimizer);
            for (std::size_t m = 0; m < methods.size(); ++m) {
                if (methods[m].criterion == Criterion::rand) continue;
                try {
                    results[m].nodes[i] = search_node(evaluator, methods[m], cfg.max_parents);
                } catch (const NumericalError& e) {
                    throw NumericalError(methods[m].name() + ", node " + std::to_string(i + 1) + ": " + e.what());
                }
            }
        });
    }
    for (auto& r : results) {
        if (r.method.criterion == Criterion::rand) {
            r.graph = rand_rule(p, cfg.seed);
            for (std::size_t i = 0; i < p; ++i) r.nodes[i].selected = r.graph.row(i);
            continue;
        }
        std::vector<Structure> rows;
        rows.reserve(p);
        for (const auto& n : r.nodes) rows.push_back(n.selected);
        r.graph = Graph::from_rows(rows);
    }
    return results;
}

InferenceResult infer_graph(const EventData& data, const Matrix& beta, const SearchConfig& cfg) {
    return std::move(infer_graphs(data, beta, {cfg.method}, cfg).front());
}

void write_diagnostics_csv(std::ostream& out, const InferenceResult& result) {
    out << "method,node,structure,k,status,selected,mu,alpha,fit,prior,complexity,lattice,preamble,total,note\n";
    for (std::size_t i = 0; i < result.nodes.size(); ++i) {
        const auto& node = result.nodes[i];
        for (const auto& f : node.fits) {
            std::string alpha;
            for (std::size_t c = 0; c < f.theta.alpha.size(); ++c) {
                alpha += (c ? ";" : "") + format_double(f.theta.alpha[c]);
            }
            const auto& v = f.criterion;
            out << result.method.name() << ',' << (i + 1) << ',' << f.gamma.to_string() << ',' << f.gamma.k() << ','
                << to_string(f.status) << ',' << (f.gamma == node.selected ? 1 : 0) << ','
                << format_double(f.theta.mu) << ',' << alpha << ',' << format_double(v.fit) << ','
                << format_double(v.prior) << ',' << format_double(v.complexity) << ',' << format_double(v.lattice)
                << ',' << format_double(v.preamble) << ',' << format_double(v.total) << ',' << f.note << '\n';
        }
    }
}

} // namespace mmlh
