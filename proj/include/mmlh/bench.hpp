#pragma once

#include "mmlh/events.hpp"
#include "mmlh/metrics.hpp"
#include "mmlh/search.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mmlh::bench {

enum class Setting { cascade, single_input, bernoulli };

[[nodiscard]] std::string_view to_string(Setting setting);
[[nodiscard]] Setting parse_setting(std::string_view name);

/// Closed interval for a randomly drawn parameter; lo == hi gives a constant.
struct Range {
    double lo{0.0};
    double hi{0.0};

    /// "0.55" or "0.1:0.2".
    static Range parse(const std::string& text);
    [[nodiscard]] std::string to_string() const;
    friend bool operator==(const Range&, const Range&) = default;
};

/// One synthetic experiment: ground-truth family, horizon, methods and seed.
struct ExperimentSpec {
    Setting setting{Setting::cascade};
    std::size_t p{7};
    double horizon{200.0};
    std::size_t trials{20};
    std::vector<std::string> methods{"mml-u", "mml-e", "bic", "aic", "mle-ms", "mle-thr", "rand"};
    double prior_b{1e5};
    double prior_c{1e-5};
    std::uint64_t seed{1};
    double beta{1.0};
    Range alpha{0.55, 0.55};
    Range mu{0.5, 0.5};
    double edge_probability{0.3}; // bernoulli setting only
    std::optional<std::size_t> max_parents;
    OptimizerKind optimizer{OptimizerKind::nelder_mead};
    std::size_t workers{1}; // trials run concurrently

    [[nodiscard]] std::vector<Method> resolved_methods() const;
    void validate() const;
};

/// Named desk-scale presets (20 trials): table1-desk (cascade), table2-desk
/// (single input), table3-desk (bernoulli, mid-dense priors), table4-desk
/// (cascade with beta = 2).
[[nodiscard]] ExperimentSpec preset(const std::string& name);
[[nodiscard]] std::vector<std::string> preset_names();

/// Config file: key = value lines, '#' comments. schema_version = 1 is required.
/// A "preset" key, if present, seeds every other field.
inline constexpr int kConfigSchemaVersion = 1;
[[nodiscard]] ExperimentSpec parse_config(std::istream& in);
/// Applies one key = value setting; throws UsageError on unknown keys.
void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value);
[[nodiscard]] std::string to_config(const ExperimentSpec& spec);

struct Truth {
    HawkesModel model;
    Graph graph;
};

[[nodiscard]] Truth make_truth(const ExperimentSpec& spec, std::uint64_t trial_seed);

/// Seed of trial t: derive_seed(spec.seed, t). Within a trial, stream 0 draws
/// the truth, stream 1 the event data and stream 2 the rand baseline.
[[nodiscard]] std::uint64_t trial_seed(const ExperimentSpec& spec, std::size_t trial);

struct TrialRecord {
    std::size_t trial{0};
    std::uint64_t seed{0};
    std::string method;
    bool ok{false};
    ScoreReport score{};
    Graph predicted{}; // empty when the method failed
    std::size_t events{0};
    double runtime_s{0.0}; // wall clock of the whole trial; fits are shared across methods
    std::string note;
};

struct MethodSummary {
    std::string method;
    std::string label;
    std::size_t ok{0};
    std::size_t failed{0};
    Aggregate aggregate{};
    double mean_precision{0.0};
    double mean_runtime_s{0.0};
};

struct ExperimentResult {
    ExperimentSpec spec;
    std::vector<TrialRecord> trials; // trial-major, methods in ExperimentSpec order
    std::vector<MethodSummary> summary;

    [[nodiscard]] const MethodSummary& method(const std::string& name) const;
};

[[nodiscard]] ExperimentResult run_experiment(const ExperimentSpec& spec);

void write_results_csv(std::ostream& out, const ExperimentResult& result);
void write_trials_csv(std::ostream& out, const ExperimentResult& result);
void print_table(std::ostream& out, const ExperimentResult& result);

struct SweepPoint {
    double hyper{0.0};
    Aggregate aggregate{};
    std::size_t failed{0};
};

/// n log-spaced values from lo to hi inclusive.
[[nodiscard]] std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// F1 and recall of MML under each hyperparameter in grid, over the experiment's
/// trials. kind selects b (uniform) or c (exponential). Every grid point sees
/// the same simulated data.
[[nodiscard]] std::vector<SweepPoint> prior_sweep(const ExperimentSpec& spec, PriorKind kind, const std::vector<double>& grid);

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);

} // namespace mmlh::bench
