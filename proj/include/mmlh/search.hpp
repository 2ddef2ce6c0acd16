#pragma once

#include "mmlh/criteria.hpp"
#include "mmlh/events.hpp"
#include "mmlh/likelihood.hpp"
#include "mmlh/optimize.hpp"
#include "mmlh/priors.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmlh {

enum class Criterion { mml, bic, aic, mle_ms, mle_thr, rand };

/// A structure-selection method: a criterion plus whatever it is parameterized by.
struct Method {
    Criterion criterion{Criterion::mml};
    PriorSpec prior{};      // mml only
    double threshold{0.1};  // mle-thr only

    /// Names: mml-u, mml-e, bic, aic, mle-ms, mle-thr, rand. The mml variants
    /// take their hyperparameter from b (uniform) or c (exponential).
    static Method parse(std::string_view name, double b = 1e5, double c = 1e-5);
    [[nodiscard]] std::string name() const;
    /// name() plus the hyperparameter for mml, e.g. "mml-u(b=100000)".
    [[nodiscard]] std::string label() const;
};

enum class OptimizerKind { nelder_mead, newton };

struct OptimizerOptions {
    OptimizerKind kind{OptimizerKind::nelder_mead};
    NelderMeadOptions nelder_mead{};
    NewtonOptions newton{};

    static OptimizerKind parse_kind(std::string_view name);
};

struct SearchConfig {
    Method method{};
    std::optional<std::size_t> max_parents; // unbounded when empty
    OptimizerOptions optimizer{};
    std::size_t workers{1};
    std::uint64_t seed{0}; // rand baseline only
};

/// Lower clamp applied to every parameter during fitting.
inline constexpr double kParamFloor = 1e-8;

struct MapFit {
    NodeParams theta;
    double objective{0.0}; // nll + neg-log-prior (nll alone for the MLE)
    bool converged{false};
    std::size_t evaluations{0};
};

/// MAP estimate of (mu_i, alpha_i|gamma) minimizing nll + neg_log_prior over
/// [1e-8, upper]^{k+1}, where upper = b for the uniform prior and unbounded
/// otherwise. prior = nullopt gives the plain MLE.
[[nodiscard]] MapFit fit_map(const HistoryCache& cache, const Structure& gamma, const std::optional<PriorSpec>& prior,
                             const OptimizerOptions& options = {});

enum class FitStatus { ok, degenerate, failed };
[[nodiscard]] std::string_view to_string(FitStatus status);

struct NodeFit {
    Structure gamma;
    NodeParams theta;
    CriterionValue criterion;
    FitStatus status{FitStatus::ok};
    std::string note;
};

/// All structures with at most max_parents ones, ordered by (k, gamma
/// lexicographic). This order is also the tie-break order of the search.
[[nodiscard]] std::vector<Structure> enumerate_structures(std::size_t p, std::optional<std::size_t> max_parents = {});

/// sum_{k=0}^{m} C(p, k).
[[nodiscard]] std::uint64_t count_structures(std::size_t p, std::optional<std::size_t> max_parents = {});

/// Per-node state shared by every structure evaluation: the history cache and
/// a memo of MAP fits keyed by (structure, objective). Several methods
/// evaluated through one evaluator reuse each other's fits.
class NodeEvaluator {
public:
    NodeEvaluator(HistoryCache cache, OptimizerOptions options);

    [[nodiscard]] const HistoryCache& cache() const noexcept { return cache_; }
    [[nodiscard]] const MapFit& fit(const Structure& gamma, const std::optional<PriorSpec>& prior);
    /// Fits gamma under the method's objective and scores it. Never throws on
    /// numerical trouble; the returned status records it instead.
    [[nodiscard]] NodeFit evaluate(const Structure& gamma, const Method& method);
    [[nodiscard]] std::size_t fits_computed() const noexcept { return fits_computed_; }

private:
    struct Key {
        std::vector<std::uint8_t> gamma;
        int kind{0};
        double hyper{0.0};
        auto operator<=>(const Key&) const = default;
    };

    HistoryCache cache_;
    OptimizerOptions options_;
    std::map<Key, MapFit> memo_;
    std::size_t fits_computed_{0};
};

struct NodeSearchResult {
    Structure selected;
    FitStatus status{FitStatus::ok};
    std::vector<NodeFit> fits;
    std::size_t evaluated{0};
};

/// Evaluates every admissible structure of one node and returns the minimizer
/// of the method's criterion. Ties go to the earliest structure in
/// enumerate_structures() order. A node without events gets the empty
/// structure with status degenerate. Throws NumericalError if every structure fails.
[[nodiscard]] NodeSearchResult search_node(NodeEvaluator& evaluator, const Method& method,
                                           std::optional<std::size_t> max_parents = {});

struct InferenceResult {
    Method method;
    Graph graph;
    std::vector<NodeSearchResult> nodes;
};

/// Runs the per-node search for every node (in parallel over nodes). beta is
/// the known p x p decay matrix. Output does not depend on cfg.workers.
[[nodiscard]] InferenceResult infer_graph(const EventData& data, const Matrix& beta, const SearchConfig& cfg);

/// Same as infer_graph for several methods at once; MAP fits are shared
/// between methods that use the same objective. cfg.method is ignored.
[[nodiscard]] std::vector<InferenceResult> infer_graphs(const EventData& data, const Matrix& beta,
                                                        const std::vector<Method>& methods, const SearchConfig& cfg);

/// One row per evaluated (node, structure): criterion parts and estimates.
void write_diagnostics_csv(std::ostream& out, const InferenceResult& result);

} // namespace mmlh
