#include "mmlh/bench.hpp"

#include "mmlh/parallel.hpp"
#include "mmlh/rng.hpp"
#include "mmlh/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace mmlh::bench {

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("setting '" + key + "': '" + text + "' is not a number");
}

std::size_t parse_count(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(text, &used);
        if (used == text.size() && text.find('-') == std::string::npos) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw UsageError("setting '" + key + "': '" + text + "' is not a non-negative integer");
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

std::string_view to_string(Setting setting) {
    switch (setting) {
    case Setting::cascade: return "cascade";
    case Setting::single_input: return "single-input";
    case Setting::bernoulli: return "bernoulli";
    }
    return "?";
}

Setting parse_setting(std::string_view name) {
    if (name == "cascade") return Setting::cascade;
    if (name == "single-input") return Setting::single_input;
    if (name == "bernoulli") return Setting::bernoulli;
    throw UsageError("unknown setting '" + std::string(name) + "' (expected cascade, single-input or bernoulli)");
}

Range Range::parse(const std::string& text) {
    const auto colon = text.find(':');
    Range r;
    if (colon == std::string::npos) {
        r.lo = r.hi = parse_number("range", trim(text));
    } else {
        r.lo = parse_number("range", trim(text.substr(0, colon)));
        r.hi = parse_number("range", trim(text.substr(colon + 1)));
    }
    if (r.lo > r.hi) throw UsageError("range '" + text + "' has lo > hi");
    return r;
}

std::string Range::to_string() const {
    return lo == hi ? format_double(lo) : format_double(lo) + ":" + format_double(hi);
}

std::vector<Method> ExperimentSpec::resolved_methods() const {
    std::vector<Method> out;
    out.reserve(methods.size());
    for (const auto& m : methods) out.push_back(Method::parse(m, prior_b, prior_c));
    return out;
}

void ExperimentSpec::validate() const {
    if (p == 0) throw UsageError("p must be positive");
    if (!(horizon > 0.0)) throw UsageError("horizon must be positive");
    if (trials == 0) throw UsageError("trials must be positive");
    if (methods.empty()) throw UsageError("at least one method is required");
    if (!(beta > 0.0)) throw UsageError("beta must be positive");
    if (alpha.lo < 0.0) throw UsageError("alpha must be non-negative");
    if (!(mu.lo > 0.0)) throw UsageError("mu must be positive");
    if (!(edge_probability >= 0.0 && edge_probability <= 1.0)) throw UsageError("edge_probability must lie in [0, 1]");
    if (max_parents && (*max_parents < 1 || *max_parents > p)) {
        throw UsageError("max_parents must satisfy 1 <= m <= p");
    }
    (void)resolved_methods();
}

ExperimentSpec preset(const std::string& name) {
    ExperimentSpec s;
    if (name == "table1-desk") return s;
    if (name == "table2-desk") {
        s.setting = Setting::single_input;
        return s;
    }
    if (name == "table3-desk") {
        s.setting = Setting::bernoulli;
        s.prior_b = 4.0;
        s.prior_c = 0.3;
        s.alpha = {0.1, 0.2};
        s.mu = {0.5, 1.0};
        return s;
    }
    if (name == "table4-desk") {
        s.beta = 2.0;
        return s;
    }
    throw UsageError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() { return {"table1-desk", "table2-desk", "table3-desk", "table4-desk"}; }

void apply_setting(ExperimentSpec& s, const std::string& key, const std::string& value) {
    if (key == "setting") s.setting = parse_setting(value);
    else if (key == "p") s.p = parse_count(key, value);
    else if (key == "horizon" || key == "T") s.horizon = parse_number(key, value);
    else if (key == "trials") s.trials = parse_count(key, value);
    else if (key == "methods") s.methods = split(value, ',');
    else if (key == "b") s.prior_b = parse_number(key, value);
    else if (key == "c") s.prior_c = parse_number(key, value);
    else if (key == "seed") s.seed = parse_count(key, value);
    else if (key == "beta") s.beta = parse_number(key, value);
    else if (key == "alpha") s.alpha = Range::parse(value);
    else if (key == "mu") s.mu = Range::parse(value);
    else if (key == "edge_probability") s.edge_probability = parse_number(key, value);
    else if (key == "max_parents") {
        if (value == "none" || value.empty()) s.max_parents.reset();
        else s.max_parents = parse_count(key, value);
    } else if (key == "optimizer") s.optimizer = OptimizerOptions::parse_kind(value);
    else if (key == "workers") s.workers = parse_count(key, value);
    else throw UsageError("unknown experiment setting '" + key + "'");
}

ExperimentSpec parse_config(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::optional<std::string> preset_name;
    std::optional<int> version;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key == "schema_version") version = static_cast<int>(parse_count(key, value));
        else if (key == "preset") preset_name = value;
        else entries.emplace_back(std::move(key), std::move(value));
    }
    if (!version) throw UsageError("config is missing schema_version");
    if (*version != kConfigSchemaVersion) {
        throw UsageError("unsupported config schema_version " + std::to_string(*version) + " (expected " +
                         std::to_string(kConfigSchemaVersion) + ")");
    }
    ExperimentSpec spec = preset_name ? preset(*preset_name) : ExperimentSpec{};
    for (const auto& [key, value] : entries) apply_setting(spec, key, value);
    spec.validate();
    return spec;
}

std::string to_config(const ExperimentSpec& s) {
    std::ostringstream out;
    std::string methods;
    for (const auto& m : s.methods) methods += (methods.empty() ? "" : ",") + m;
    out << "schema_version = " << kConfigSchemaVersion << '\n'
        << "setting = " << to_string(s.setting) << '\n'
        << "p = " << s.p << '\n'
        << "horizon = " << format_double(s.horizon) << '\n'
        << "trials = " << s.trials << '\n'
        << "methods = " << methods << '\n'
        << "b = " << format_double(s.prior_b) << '\n'
        << "c = " << format_double(s.prior_c) << '\n'
        << "seed = " << s.seed << '\n'
        << "beta = " << format_double(s.beta) << '\n'
        << "alpha = " << s.alpha.to_string() << '\n'
        << "mu = " << s.mu.to_string() << '\n'
        << "edge_probability = " << format_double(s.edge_probability) << '\n'
        << "max_parents = " << (s.max_parents ? std::to_string(*s.max_parents) : "none") << '\n'
        << "optimizer = " << (s.optimizer == OptimizerKind::newton ? "newton" : "nelder-mead") << '\n'
        << "workers = " << s.workers << '\n';
    return out.str();
}

std::uint64_t trial_seed(const ExperimentSpec& spec, std::size_t trial) { return derive_seed(spec.seed, trial); }

Truth make_truth(const ExperimentSpec& spec, std::uint64_t seed) {
    const auto p = static_cast<Eigen::Index>(spec.p);
    Rng rng(derive_seed(seed, 0));
    auto draw = [&](const Range& r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); };

    Vector mu(p);
    for (Eigen::Index i = 0; i < p; ++i) mu(i) = draw(spec.mu);
    Matrix alpha = Matrix::Zero(p, p);
    switch (spec.setting) {
    case Setting::cascade:
        alpha(0, 0) = draw(spec.alpha);
        for (Eigen::Index i = 1; i < p; ++i) alpha(i, i - 1) = draw(spec.alpha);
        break;
    case Setting::single_input:
        for (Eigen::Index i = 0; i < p; ++i) {
            alpha(i, static_cast<Eigen::Index>(rng.below(spec.p))) = draw(spec.alpha);
        }
        break;
    case Setting::bernoulli:
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) {
                if (i == j || rng.bernoulli(spec.edge_probability)) alpha(i, j) = draw(spec.alpha);
            }
        }
        break;
    }
    HawkesModel model(mu, alpha, Matrix::Constant(p, p, spec.beta));
    Graph graph = Graph::from_model(model);
    return {std::move(model), std::move(graph)};
}

const MethodSummary& ExperimentResult::method(const std::string& name) const {
    for (const auto& s : summary) {
        if (s.method == name) return s;
    }
    throw UsageError("experiment has no method '" + name + "'");
}

namespace {

// Runs every method on one trial. Fits are shared; if the shared run fails,
// methods are retried one at a time so a failure stays local to its method.
std::vector<TrialRecord> run_trial(const ExperimentSpec& spec, const std::vector<Method>& methods, std::size_t t) {
    const auto start = std::chrono::steady_clock::now();
    const auto seed = trial_seed(spec, t);
    std::vector<TrialRecord> records(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        records[m].trial = t;
        records[m].seed = seed;
        records[m].method = spec.methods[m];
    }
    auto fail_all = [&](const std::string& why) {
        for (auto& r : records) r.note = why;
    };

    std::optional<Truth> truth;
    std::optional<EventData> data;
    try {
        truth = make_truth(spec, seed);
        data = simulate(truth->model, {spec.horizon, derive_seed(seed, 1)});
    } catch (const std::exception& e) {
        fail_all(std::string("simulation: ") + e.what());
        return records;
    }
    if (data->empty()) {
        fail_all("simulation produced no events");
        return records;
    }

    SearchConfig cfg;
    cfg.max_parents = spec.max_parents;
    cfg.optimizer.kind = spec.optimizer;
    cfg.seed = derive_seed(seed, 2);
    const Matrix& beta = truth->model.beta();

    auto record = [&](std::size_t m, const InferenceResult& r) {
        records[m].ok = true;
        records[m].score = score(r.graph, truth->graph);
        records[m].predicted = r.graph;
    };
    try {
        const auto results = infer_graphs(*data, beta, methods, cfg);
        for (std::size_t m = 0; m < methods.size(); ++m) record(m, results[m]);
    } catch (const std::exception&) {
        for (std::size_t m = 0; m < methods.size(); ++m) {
            try {
                cfg.method = methods[m];
                record(m, infer_graph(*data, beta, cfg));
            } catch (const std::exception& e) {
                records[m].note = e.what();
            }
        }
    }
    const double elapsed = seconds_since(start);
    for (auto& r : records) {
        r.events = data->total_count();
        r.runtime_s = elapsed;
    }
    return records;
}

} // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const auto methods = spec.resolved_methods();
    std::vector<std::vector<TrialRecord>> per_trial(spec.trials);
    parallel_for(spec.trials, spec.workers, [&](std::size_t t) { per_trial[t] = run_trial(spec, methods, t); });

    ExperimentResult result;
    result.spec = spec;
    for (auto& rows : per_trial) {
        for (auto& r : rows) result.trials.push_back(std::move(r));
    }
    for (std::size_t m = 0; m < methods.size(); ++m) {
        MethodSummary s;
        s.method = spec.methods[m];
        s.label = methods[m].label();
        std::vector<ScoreReport> scores;
        for (const auto& r : result.trials) {
            if (r.method != s.method) continue;
            if (!r.ok) {
                ++s.failed;
                continue;
            }
            scores.push_back(r.score);
            s.mean_precision += r.score.precision;
            s.mean_runtime_s += r.runtime_s;
        }
        s.ok = scores.size();
        if (s.ok > 0) {
            s.mean_precision /= static_cast<double>(s.ok);
            s.mean_runtime_s /= static_cast<double>(s.ok);
        }
        s.aggregate = aggregate(scores);
        result.summary.push_back(std::move(s));
    }
    return result;
}

void write_results_csv(std::ostream& out, const ExperimentResult& result) {
    out << "method,label,trials_ok,trials_failed,mean_f1,std_f1,mean_precision,mean_tp_rate,mean_runtime_s,workers\n";
    for (const auto& s : result.summary) {
        out << s.method << ',' << s.label << ',' << s.ok << ',' << s.failed << ',' << format_double(s.aggregate.mean_f1)
            << ',' << format_double(s.aggregate.std_f1) << ',' << format_double(s.mean_precision) << ','
            << format_double(s.aggregate.mean_tp_rate) << ',' << format_double(s.mean_runtime_s) << ','
            << result.spec.workers << '\n';
    }
}

void write_trials_csv(std::ostream& out, const ExperimentResult& result) {
    out << "trial,seed,method,status,precision,recall,f1,tp,predicted,truth_edges,events,runtime_s,note\n";
    for (const auto& r : result.trials) {
        std::string note = r.note;
        std::replace(note.begin(), note.end(), ',', ';');
        std::replace(note.begin(), note.end(), '\n', ' ');
        out << r.trial << ',' << r.seed << ',' << r.method << ',' << (r.ok ? "ok" : "failed") << ','
            << format_double(r.score.precision) << ',' << format_double(r.score.recall) << ','
            << format_double(r.score.f1) << ',' << r.score.tp_count << ',' << r.score.predicted_count << ','
            << r.score.truth_count << ',' << r.events << ',' << format_double(r.runtime_s) << ',' << note << '\n';
    }
}

void print_table(std::ostream& out, const ExperimentResult& result) {
    const auto& s = result.spec;
    out << to_string(s.setting) << "  p=" << s.p << "  T=" << format_double(s.horizon) << "  beta=" << format_double(s.beta)
        << "  trials=" << s.trials << "  seed=" << s.seed << '\n';
    out << std::left << std::setw(24) << "method" << std::right << std::setw(18) << "F1 mean (std)" << std::setw(10)
        << "TP rate" << std::setw(10) << "s/trial" << std::setw(8) << "failed" << '\n';
    const auto flags = out.flags();
    for (const auto& m : result.summary) {
        std::ostringstream f1;
        f1 << std::fixed << std::setprecision(3) << m.aggregate.mean_f1 << " (" << m.aggregate.std_f1 << ")";
        out << std::left << std::setw(24) << m.label << std::right << std::setw(18) << f1.str() << std::fixed
            << std::setprecision(3) << std::setw(10) << m.aggregate.mean_tp_rate << std::setprecision(2)
            << std::setw(10) << m.mean_runtime_s << std::setw(8) << m.failed << '\n';
        out.flags(flags);
    }
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (n == 0) throw UsageError("grid needs at least one point");
    if (!(lo > 0.0) || !(hi > 0.0)) throw UsageError("log grid bounds must be positive");
    if (n == 1) return {lo};
    std::vector<double> out(n);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t s = 0; s < n; ++s) {
        // Round to 12 significant digits so decades come out as 10, 100, ...
        const double v = std::exp(a + (b - a) * static_cast<double>(s) / static_cast<double>(n - 1));
        const double scale = std::pow(10.0, 11 - std::floor(std::log10(v)));
        out[s] = std::round(v * scale) / scale;
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<SweepPoint> prior_sweep(const ExperimentSpec& spec, PriorKind kind, const std::vector<double>& grid) {
    spec.validate();
    if (grid.empty()) throw UsageError("prior sweep needs a non-empty grid");
    std::vector<Method> methods;
    for (double h : grid) {
        if (!(h > 0.0)) throw UsageError("prior hyperparameters must be positive");
        methods.push_back({Criterion::mml, kind == PriorKind::uniform ? PriorSpec::uniform(h) : PriorSpec::exponential(h)});
    }

    // scores[t][g]; nullopt marks a failed (trial, grid point).
    std::vector<std::vector<std::optional<ScoreReport>>> scores(spec.trials);
    parallel_for(spec.trials, spec.workers, [&](std::size_t t) {
        auto& row = scores[t];
        row.assign(grid.size(), std::nullopt);
        const auto seed = trial_seed(spec, t);
        try {
            const auto truth = make_truth(spec, seed);
            const auto data = simulate(truth.model, {spec.horizon, derive_seed(seed, 1)});
            if (data.empty()) return;
            SearchConfig cfg;
            cfg.max_parents = spec.max_parents;
            cfg.optimizer.kind = spec.optimizer;
            const auto results = infer_graphs(data, truth.model.beta(), methods, cfg);
            for (std::size_t g = 0; g < grid.size(); ++g) row[g] = score(results[g].graph, truth.graph);
        } catch (const std::exception&) {
            // Leave the whole trial marked failed.
        }
    });

    std::vector<SweepPoint> out;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        SweepPoint pt;
        pt.hyper = grid[g];
        std::vector<ScoreReport> ok;
        for (const auto& row : scores) {
            if (row[g]) ok.push_back(*row[g]);
            else ++pt.failed;
        }
        pt.aggregate = aggregate(ok);
        out.push_back(pt);
    }
    return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
    out << "hyper,mean_f1,std_f1,mean_tp_rate,trials_ok,trials_failed\n";
    for (const auto& pt : points) {
        out << format_double(pt.hyper) << ',' << format_double(pt.aggregate.mean_f1) << ','
            << format_double(pt.aggregate.std_f1) << ',' << format_double(pt.aggregate.mean_tp_rate) << ','
            << pt.aggregate.count << ',' << pt.failed << '\n';
    }
}

} // namespace mmlh::bench
