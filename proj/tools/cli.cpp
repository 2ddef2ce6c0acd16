#include "cli.hpp"

#include "mmlh/bench.hpp"
#include "mmlh/ingest.hpp"
#include "mmlh/metrics.hpp"
#include "mmlh/parallel.hpp"
#include "mmlh/rng.hpp"
#include "mmlh/search.hpp"
#include "mmlh/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#ifndef MMLH_VERSION
#define MMLH_VERSION "dev"
#endif

namespace mmlh::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes via a temporary sibling and a rename, so readers never see a partial file.
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        body(out);
        out.flush();
        if (!out) throw DataError("write to '" + tmp.string() + "' failed");
    }
    fs::rename(tmp, path);
}

void write_text(const fs::path& path, const std::string& text) {
    write_atomic(path, [&](std::ostream& o) { o << text; });
}

fs::path prepare_dir(const std::string& dir) {
    if (dir.empty()) throw UsageError("--out is required");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
    return fs::path(dir);
}

/// Replay record written next to a command's outputs.
struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    json config = json::object();
    std::uint64_t seed{0};
    std::string started = utc_now();
    json outputs = json::object();

    void write(const fs::path& dir) {
        json m;
        m["command"] = command;
        m["argv"] = argv;
        m["cwd"] = fs::current_path().string();
        m["config"] = config;
        m["seed"] = seed;
        m["version"] = MMLH_VERSION;
        m["rng"] = std::string(Rng::kAlgorithm);
        m["started"] = started;
        m["finished"] = utc_now();
        outputs["manifest"] = (dir / "manifest.json").string();
        m["outputs"] = outputs;
        write_text(dir / "manifest.json", m.dump(2) + "\n");
    }
};

void log(std::ostream& err, const std::string& msg) { err << "mmlh: " << msg << '\n'; }

Matrix beta_from_file(const std::string& path) {
    const auto j = json::parse(read_file(path));
    const auto& rows = j.contains("beta") ? j.at("beta") : j;
    if (!rows.is_array() || rows.empty()) throw DataError("'" + path + "' holds no beta matrix");
    const auto p = static_cast<Eigen::Index>(rows.size());
    Matrix beta(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const auto& row = rows.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != p) {
            throw DataError("beta matrix in '" + path + "' is not square");
        }
        for (Eigen::Index c = 0; c < p; ++c) beta(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    if ((beta.array() <= 0.0).any()) throw DataError("beta entries must be positive");
    return beta;
}

Graph graph_or_model_from_file(const std::string& path) {
    const auto text = read_file(path);
    const auto j = json::parse(text);
    if (j.contains("adjacency")) return graph_from_json(text);
    if (j.contains("alpha")) return Graph::from_model(model_from_json(text));
    throw DataError("'" + path + "' is neither a graph nor a model");
}

// Experiment options shared by bench and sweep. Flags override the config file.
struct SpecFlags {
    std::string preset;
    std::string config;
    std::vector<std::pair<std::string, std::string>> overrides;
    bool full{false};

    void attach(CLI::App& app) {
        app.add_option("--preset", preset, "named experiment")->check(CLI::IsMember(bench::preset_names()));
        app.add_option("--config", config, "experiment config file (key = value)");
        app.add_flag("--full", full, "full-scale run with 100 trials");
        for (const char* key : {"setting", "p", "horizon", "trials", "methods", "b", "c", "seed", "beta", "alpha",
                                "mu", "edge_probability", "max_parents", "optimizer", "workers"}) {
            std::string flag = std::string("--") + key;
            std::replace(flag.begin() + 2, flag.end(), '_', '-');
            app.add_option_function<std::string>(
                flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); },
                std::string("override '") + key + "'");
        }
    }

    [[nodiscard]] bench::ExperimentSpec resolve() const {
        if (!preset.empty() && !config.empty()) throw UsageError("use either --preset or --config");
        bench::ExperimentSpec spec;
        if (!config.empty()) {
            std::istringstream in(read_file(config));
            spec = bench::parse_config(in);
        } else if (!preset.empty()) {
            spec = bench::preset(preset);
        }
        if (full) spec.trials = 100;
        for (const auto& [k, v] : overrides) bench::apply_setting(spec, k, v);
        spec.validate();
        return spec;
    }
};

json spec_json(const bench::ExperimentSpec& spec) {
    json j = json::object();
    std::istringstream in(bench::to_config(spec));
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return j;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Granger-causal graph recovery for exponential Hawkes processes", "mmlh"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(MMLH_VERSION));

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate events from a model or a benchmark setting");
    std::string sim_model, sim_setting = "cascade", sim_out;
    std::size_t sim_p = 7;
    double sim_horizon = 0.0;
    std::uint64_t sim_seed = 0;
    std::size_t sim_max_events = 10'000'000;
    sim->add_option("--model", sim_model, "model JSON (mu, alpha, beta)");
    sim->add_option("--setting", sim_setting, "cascade, single-input or bernoulli (when no --model)");
    sim->add_option("--p", sim_p, "dimension for --setting");
    sim->add_option("--horizon,-T", sim_horizon, "observation horizon")->required();
    sim->add_option("--seed", sim_seed, "random seed");
    sim->add_option("--max-events", sim_max_events, "abort beyond this many events");
    sim->add_option("--out,-o", sim_out, "output directory")->required();

    // infer
    auto* inf = app.add_subcommand("infer", "infer the Granger-causal graph from an events file");
    std::string inf_events, inf_criterion = "mml-u", inf_beta_file, inf_optimizer = "nelder-mead", inf_out;
    double inf_horizon = 0.0, inf_b = 1e5, inf_c = 1e-5, inf_beta = 1.0, inf_threshold = 0.1;
    std::optional<std::size_t> inf_m;
    std::size_t inf_dims = 0, inf_workers = default_workers();
    std::uint64_t inf_seed = 0;
    inf->add_option("--events,-e", inf_events, "events CSV (node_id,time)")->required();
    inf->add_option("--horizon,-T", inf_horizon, "observation horizon")->required();
    inf->add_option("--dims", inf_dims, "number of nodes (default: largest node id)");
    inf->add_option("--criterion", inf_criterion, "mml-u, mml-e, bic, aic, mle-ms, mle-thr or rand");
    inf->add_option("--prior-b", inf_b, "uniform prior bound b");
    inf->add_option("--prior-c", inf_c, "exponential prior rate c");
    inf->add_option("--threshold", inf_threshold, "mle-thr cutoff");
    inf->add_option("--max-parents,-m", inf_m, "largest parent set per node");
    inf->add_option("--beta", inf_beta, "decay shared by all pairs");
    inf->add_option("--beta-file", inf_beta_file, "JSON p x p decay matrix, or a model JSON");
    inf->add_option("--optimizer", inf_optimizer, "nelder-mead or newton");
    inf->add_option("--workers,-j", inf_workers, "worker threads");
    inf->add_option("--seed", inf_seed, "seed for the rand baseline");
    inf->add_option("--out,-o", inf_out, "output directory")->required();

    // score
    auto* sc = app.add_subcommand("score", "compare a graph with the truth");
    std::string sc_pred, sc_truth;
    sc->add_option("--predicted", sc_pred, "graph JSON")->required();
    sc->add_option("--truth", sc_truth, "graph or model JSON")->required();

    // bench
    auto* be = app.add_subcommand("bench", "run a synthetic experiment");
    SpecFlags be_spec;
    be_spec.attach(*be);
    std::string be_out;
    be->add_option("--out,-o", be_out, "output directory")->required();

    // sweep
    auto* sw = app.add_subcommand("sweep", "F1 and TP rate against the prior hyperparameter");
    SpecFlags sw_spec;
    sw_spec.attach(*sw);
    std::string sw_prior = "uniform", sw_out;
    std::optional<double> sw_lo, sw_hi;
    std::size_t sw_n = 8;
    sw->add_option("--prior", sw_prior, "uniform (sweeps b) or exponential (sweeps c)")
        ->check(CLI::IsMember({"uniform", "exponential"}));
    sw->add_option("--grid-lo", sw_lo, "smallest hyperparameter");
    sw->add_option("--grid-hi", sw_hi, "largest hyperparameter");
    sw->add_option("--grid-n", sw_n, "number of log-spaced points");
    sw->add_option("--out,-o", sw_out, "output directory")->required();

    // ingest
    auto* ing = app.add_subcommand("ingest", "turn real-valued series into shock events");
    std::string ing_input, ing_delim = ",", ing_out;
    std::vector<std::string> ing_columns;
    ingest::ExtractOptions ing_opts;
    ing->add_option("--input,-i", ing_input, "series file with a header row")->required();
    ing->add_option("--delimiter", ing_delim, "field separator");
    ing->add_option("--columns", ing_columns, "series to keep, in node order")->delimiter(',');
    ing->add_option("--window", ing_opts.window, "rolling window length in samples");
    ing->add_option("--quantile", ing_opts.quantile, "top fraction counted as a shock");
    ing->add_option("--horizon,-T", ing_opts.horizon, "horizon of the emitted events");
    ing->add_option("--out,-o", ing_out, "output directory")->required();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ExitCode::ok : ExitCode::usage;
    }

    Manifest manifest;
    manifest.argv = args;
    try {
        if (sim->parsed()) {
            manifest.command = "simulate";
            if (!(sim_horizon > 0.0)) throw UsageError("--horizon must be positive");
            std::optional<HawkesModel> model;
            if (!sim_model.empty()) {
                model = model_from_json(read_file(sim_model));
            } else {
                // Benchmark defaults for the setting, including the bernoulli parameter ranges.
                const auto setting = bench::parse_setting(sim_setting);
                auto spec = bench::preset(setting == bench::Setting::bernoulli ? "table3-desk" : "table1-desk");
                spec.setting = setting;
                spec.p = sim_p;
                spec.validate();
                model = bench::make_truth(spec, sim_seed).model;
            }
            if (!model->stable()) {
                log(err, "warning: spectral radius " + format_double(model->spectral_radius()) + " >= 1");
            }
            const auto data = simulate(*model, {sim_horizon, derive_seed(sim_seed, 1), sim_max_events});
            const auto dir = prepare_dir(sim_out);
            write_atomic(dir / "events.csv", [&](std::ostream& o) { write_events_csv(o, data); });
            write_text(dir / "model.json", model_to_json(*model) + "\n");
            manifest.seed = sim_seed;
            manifest.config = {{"model", sim_model}, {"setting", sim_setting}, {"p", sim_p},
                               {"horizon", sim_horizon}, {"max_events", sim_max_events}};
            manifest.outputs = {{"events", (dir / "events.csv").string()}, {"model", (dir / "model.json").string()}};
            manifest.write(dir);
            log(err, "simulated " + std::to_string(data.total_count()) + " events on " + std::to_string(data.dims()) +
                         " nodes");
        } else if (inf->parsed()) {
            manifest.command = "infer";
            if (!(inf_horizon > 0.0)) throw UsageError("--horizon must be positive");
            if (inf_workers == 0) throw UsageError("--workers must be positive");
            SearchConfig cfg;
            cfg.method = Method::parse(inf_criterion, inf_b, inf_c);
            cfg.method.threshold = inf_threshold;
            cfg.max_parents = inf_m;
            cfg.optimizer.kind = OptimizerOptions::parse_kind(inf_optimizer);
            cfg.workers = inf_workers;
            cfg.seed = inf_seed;
            const auto data = read_events_csv(inf_events, inf_horizon, inf_dims);
            const auto p = static_cast<Eigen::Index>(data.dims());
            if (!(inf_beta > 0.0)) throw UsageError("--beta must be positive");
            const Matrix beta = inf_beta_file.empty() ? Matrix::Constant(p, p, inf_beta) : beta_from_file(inf_beta_file);
            if (inf_m && (*inf_m < 1 || *inf_m > data.dims())) {
                throw UsageError("--max-parents must satisfy 1 <= m <= p = " + std::to_string(data.dims()));
            }
            log(err, "inferring " + cfg.method.label() + " on " + std::to_string(data.dims()) + " nodes, " +
                         std::to_string(data.total_count()) + " events");
            const auto result = infer_graph(data, beta, cfg);
            const auto dir = prepare_dir(inf_out);
            write_text(dir / "graph.json", graph_to_json(result.graph) + "\n");
            write_atomic(dir / "diagnostics.csv", [&](std::ostream& o) { write_diagnostics_csv(o, result); });
            std::size_t failed = 0;
            for (const auto& n : result.nodes) {
                for (const auto& f : n.fits) failed += f.status == FitStatus::failed;
            }
            if (failed > 0) log(err, std::to_string(failed) + " structure fits failed and were skipped");
            manifest.seed = inf_seed;
            manifest.config = {{"events", inf_events},
                               {"horizon", inf_horizon},
                               {"dims", data.dims()},
                               {"criterion", result.method.label()},
                               {"max_parents", inf_m ? json(*inf_m) : json(nullptr)},
                               {"beta", inf_beta_file.empty() ? json(inf_beta) : json(inf_beta_file)},
                               {"optimizer", inf_optimizer},
                               {"workers", inf_workers}};
            manifest.outputs = {{"graph", (dir / "graph.json").string()},
                                {"diagnostics", (dir / "diagnostics.csv").string()}};
            manifest.write(dir);
            log(err, "selected " + std::to_string(result.graph.edge_count()) + " edges");
        } else if (sc->parsed()) {
            const auto predicted = graph_or_model_from_file(sc_pred);
            const auto truth = graph_or_model_from_file(sc_truth);
            const auto r = score(predicted, truth);
            json j = {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
                      {"tp", r.tp_count},         {"predicted", r.predicted_count}, {"truth", r.truth_count}};
            out << j.dump() << '\n';
        } else if (be->parsed()) {
            manifest.command = "bench";
            const auto spec = be_spec.resolve();
            log(err, "running " + std::to_string(spec.trials) + " trials of " + std::string(bench::to_string(spec.setting)));
            const auto result = bench::run_experiment(spec);
            const auto dir = prepare_dir(be_out);
            write_atomic(dir / "results.csv", [&](std::ostream& o) { bench::write_results_csv(o, result); });
            write_atomic(dir / "trials.csv", [&](std::ostream& o) { bench::write_trials_csv(o, result); });
            write_text(dir / "experiment.cfg", bench::to_config(spec));
            bench::print_table(out, result);
            manifest.seed = spec.seed;
            manifest.config = spec_json(spec);
            manifest.outputs = {{"results", (dir / "results.csv").string()},
                                {"trials", (dir / "trials.csv").string()},
                                {"config", (dir / "experiment.cfg").string()}};
            manifest.write(dir);
        } else if (sw->parsed()) {
            manifest.command = "sweep";
            const auto spec = sw_spec.resolve();
            const auto kind = sw_prior == "uniform" ? PriorKind::uniform : PriorKind::exponential;
            const double lo = sw_lo.value_or(kind == PriorKind::uniform ? 0.1 : 1e-5);
            const double hi = sw_hi.value_or(kind == PriorKind::uniform ? 1e5 : 10.0);
            const auto grid = bench::log_grid(lo, hi, sw_n);
            log(err, "sweeping " + std::to_string(grid.size()) + " values over " + std::to_string(spec.trials) + " trials");
            const auto points = bench::prior_sweep(spec, kind, grid);
            const auto dir = prepare_dir(sw_out);
            write_atomic(dir / "sweep.csv", [&](std::ostream& o) { bench::write_sweep_csv(o, points); });
            write_text(dir / "experiment.cfg", bench::to_config(spec));
            bench::write_sweep_csv(out, points);
            manifest.seed = spec.seed;
            manifest.config = spec_json(spec);
            manifest.config["prior"] = sw_prior;
            manifest.config["grid"] = grid;
            manifest.outputs = {{"sweep", (dir / "sweep.csv").string()}, {"config", (dir / "experiment.cfg").string()}};
            manifest.write(dir);
        } else if (ing->parsed()) {
            manifest.command = "ingest";
            if (ing_delim.size() != 1) throw UsageError("--delimiter must be a single character");
            const auto table = ingest::load_csv(ing_input, {ing_delim.front(), ing_columns});
            const auto data = ingest::extract_events(table, ing_opts);
            const auto dir = prepare_dir(ing_out);
            write_atomic(dir / "events.csv", [&](std::ostream& o) { write_events_csv(o, data); });
            json nodes = json::array();
            for (std::size_t i = 0; i < table.series(); ++i) {
                nodes.push_back({{"node_id", i + 1}, {"name", table.names[i]}, {"events", data.count(i)}});
            }
            write_text(dir / "nodes.json", nodes.dump(2) + "\n");
            out << "node_id,name,events\n";
            for (std::size_t i = 0; i < table.series(); ++i) {
                out << (i + 1) << ',' << table.names[i] << ',' << data.count(i) << '\n';
            }
            manifest.config = {{"input", ing_input},
                               {"delimiter", ing_delim},
                               {"columns", table.names},
                               {"window", ing_opts.window},
                               {"quantile", ing_opts.quantile},
                               {"horizon", ing_opts.horizon},
                               {"rows", table.rows()}};
            manifest.outputs = {{"events", (dir / "events.csv").string()}, {"nodes", (dir / "nodes.json").string()}};
            manifest.write(dir);
        }
    } catch (const UsageError& e) {
        log(err, std::string("usage error: ") + e.what());
        return ExitCode::usage;
    } catch (const DataError& e) {
        log(err, std::string("data error: ") + e.what());
        return ExitCode::data;
    } catch (const json::exception& e) {
        log(err, std::string("data error: ") + e.what());
        return ExitCode::data;
    } catch (const fs::filesystem_error& e) {
        log(err, std::string("data error: ") + e.what());
        return ExitCode::data;
    } catch (const NumericalError& e) {
        log(err, std::string("numerical failure: ") + e.what());
        return ExitCode::numerical;
    } catch (const std::exception& e) {
        log(err, std::string("error: ") + e.what());
        return ExitCode::numerical;
    }
    return ExitCode::ok;
}

} // namespace mmlh::cli
