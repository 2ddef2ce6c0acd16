#include "mmlh/events.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

namespace mmlh {

namespace {

using json = nlohmann::json;

Matrix matrix_from_json(const json& rows, const char* name) {
    if (!rows.is_array()) {
        throw DataError(std::string("model JSON: '") + name + "' must be an array of rows");
    }
    const auto p = rows.size();
    Matrix m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) {
        if (!rows[i].is_array() || rows[i].size() != p) {
            throw DataError(std::string("model JSON: '") + name + "' must be square");
        }
        for (std::size_t j = 0; j < p; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
        }
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

double parse_double(std::string_view text, std::size_t line) {
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw DataError("events CSV line " + std::to_string(line) + ": bad number '" + std::string(text) + "'");
    }
    return value;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace

std::size_t EventData::total_count() const noexcept {
    std::size_t n = 0;
    for (const auto& x : times_) n += x.size();
    return n;
}

double EventData::t_max() const {
    double t = -1.0;
    for (const auto& x : times_) {
        if (!x.empty()) t = std::max(t, x.back());
    }
    if (t < 0.0) {
        throw DataError("t_max is undefined for empty event data");
    }
    return t;
}

EventData validate_events(std::vector<std::vector<double>> raw, double horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw DataError("horizon must be a positive finite number");
    }
    if (raw.empty()) {
        throw DataError("event data needs at least one node");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto& x = raw[i];
        for (std::size_t l = 0; l < x.size(); ++l) {
            const double t = x[l];
            if (!(t > 0.0) || !(t <= horizon)) {
                throw DataError("node " + std::to_string(i + 1) + ": time " + format_double(t) +
                                " outside (0, " + format_double(horizon) + "]");
            }
            if (l > 0 && t == x[l - 1]) {
                throw DataError("node " + std::to_string(i + 1) + ": duplicate timestamp " + format_double(t));
            }
            if (l > 0 && t < x[l - 1]) {
                throw DataError("node " + std::to_string(i + 1) + ": times not increasing at index " +
                                std::to_string(l));
            }
        }
    }
    return EventData(std::move(raw), horizon);
}

HawkesModel::HawkesModel(Vector mu, Matrix alpha, Matrix beta)
    : mu_(std::move(mu)), alpha_(std::move(alpha)), beta_(std::move(beta)) {
    const auto p = mu_.size();
    if (p == 0) {
        throw DataError("model needs at least one node");
    }
    if (alpha_.rows() != p || alpha_.cols() != p || beta_.rows() != p || beta_.cols() != p) {
        throw DataError("model dimensions do not agree");
    }
    for (Eigen::Index i = 0; i < p; ++i) {
        if (!(mu_(i) > 0.0) || !std::isfinite(mu_(i))) {
            throw DataError("mu must be positive and finite");
        }
        for (Eigen::Index j = 0; j < p; ++j) {
            if (!(alpha_(i, j) >= 0.0) || !std::isfinite(alpha_(i, j))) {
                throw DataError("alpha must be non-negative and finite");
            }
            if (!(beta_(i, j) > 0.0) || !std::isfinite(beta_(i, j))) {
                throw DataError("beta must be positive and finite");
            }
        }
    }
    const Matrix branching = alpha_.cwiseQuotient(beta_);
    spectral_radius_ = branching.eigenvalues().cwiseAbs().maxCoeff();
}

Vector HawkesModel::stationary_rates() const {
    const auto p = mu_.size();
    const Matrix m = Matrix::Identity(p, p) - alpha_.cwiseQuotient(beta_);
    return m.partialPivLu().solve(mu_);
}

Structure::Structure(std::vector<std::uint8_t> gamma) : gamma_(std::move(gamma)) {
    for (std::size_t j = 0; j < gamma_.size(); ++j) {
        if (gamma_[j] > 1) {
            throw UsageError("structure entries must be 0 or 1");
        }
        if (gamma_[j] != 0) parents_.push_back(j);
    }
}

Structure Structure::from_parents(std::size_t p, std::span<const std::size_t> parents) {
    std::vector<std::uint8_t> gamma(p, 0);
    for (auto j : parents) gamma.at(j) = 1;
    return Structure(std::move(gamma));
}

std::string Structure::to_string() const {
    std::string s;
    s.reserve(gamma_.size());
    for (auto g : gamma_) s.push_back(g != 0 ? '1' : '0');
    return s;
}

std::vector<double> NodeParams::to_vector() const {
    std::vector<double> theta;
    theta.reserve(size());
    theta.push_back(mu);
    theta.insert(theta.end(), alpha.begin(), alpha.end());
    return theta;
}

NodeParams NodeParams::from_vector(std::span<const double> theta) {
    if (theta.empty()) {
        throw UsageError("parameter vector must contain mu");
    }
    return NodeParams{theta[0], std::vector<double>(theta.begin() + 1, theta.end())};
}

Graph Graph::from_rows(const std::vector<Structure>& rows) {
    Graph g(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].dims() != rows.size()) {
            throw UsageError("graph row " + std::to_string(i) + " has wrong length");
        }
        for (auto j : rows[i].parents()) g.set(i, j, true);
    }
    return g;
}

Graph Graph::from_model(const HawkesModel& model) {
    const auto p = model.dims();
    Graph g(p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            g.set(i, j, model.alpha()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0);
        }
    }
    return g;
}

std::size_t Graph::edge_count() const noexcept {
    return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), std::uint8_t{1}));
}

Structure Graph::row(std::size_t i) const {
    if (i >= p_) throw UsageError("graph row out of range");
    return Structure(std::vector<std::uint8_t>(adj_.begin() + static_cast<std::ptrdiff_t>(i * p_),
                                               adj_.begin() + static_cast<std::ptrdiff_t>((i + 1) * p_)));
}

namespace {

void check_query(const HawkesModel& model, const EventData& data, std::size_t node, double t) {
    if (model.dims() != data.dims()) {
        throw UsageError("model has " + std::to_string(model.dims()) + " nodes but data has " +
                         std::to_string(data.dims()));
    }
    if (node >= data.dims()) {
        throw UsageError("node index out of range");
    }
    if (!(t >= 0.0) || !(t <= data.horizon())) {
        throw UsageError("time " + format_double(t) + " outside [0, T]");
    }
}

} // namespace

double intensity(const HawkesModel& model, const EventData& data, std::size_t node, double t) {
    check_query(model, data, node, t);
    const auto i = static_cast<Eigen::Index>(node);
    double value = model.mu()(i);
    for (std::size_t j = 0; j < data.dims(); ++j) {
        const double a = model.alpha()(i, static_cast<Eigen::Index>(j));
        if (a == 0.0) continue;
        const double b = model.beta()(i, static_cast<Eigen::Index>(j));
        double excitation = 0.0;
        for (double s : data.node(j)) {
            if (s >= t) break;
            excitation += std::exp(-b * (t - s));
        }
        value += a * excitation;
    }
    return value;
}

double compensator(const HawkesModel& model, const EventData& data, std::size_t node, double t) {
    check_query(model, data, node, t);
    const auto i = static_cast<Eigen::Index>(node);
    double value = model.mu()(i) * t;
    for (std::size_t j = 0; j < data.dims(); ++j) {
        const double a = model.alpha()(i, static_cast<Eigen::Index>(j));
        if (a == 0.0) continue;
        const double b = model.beta()(i, static_cast<Eigen::Index>(j));
        double mass = 0.0;
        for (double s : data.node(j)) {
            if (s >= t) break;
            mass += -std::expm1(-b * (t - s));
        }
        value += a / b * mass;
    }
    return value;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

void write_events_csv(std::ostream& out, const EventData& data) {
    std::vector<std::pair<double, std::size_t>> rows;
    rows.reserve(data.total_count());
    for (std::size_t i = 0; i < data.dims(); ++i) {
        for (double t : data.node(i)) rows.emplace_back(t, i);
    }
    std::sort(rows.begin(), rows.end());
    out << "node_id,time\n";
    for (const auto& [t, i] : rows) {
        out << (i + 1) << ',' << format_double(t) << '\n';
    }
}

EventData read_events_csv(std::istream& in, double horizon, std::size_t dims) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw DataError("events CSV is empty");
    }
    ++line_no;
    if (trim(line) != "node_id,time") {
        throw DataError("events CSV must start with header 'node_id,time'");
    }
    std::vector<std::vector<double>> raw(dims);
    while (std::getline(in, line)) {
        ++line_no;
        const auto row = trim(line);
        if (row.empty()) continue;
        const auto comma = row.find(',');
        if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
            throw DataError("events CSV line " + std::to_string(line_no) + ": expected two columns");
        }
        const auto id_text = trim(row.substr(0, comma));
        long long id = 0;
        auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
        if (ec != std::errc{} || ptr != id_text.data() + id_text.size() || id < 1) {
            throw DataError("events CSV line " + std::to_string(line_no) + ": bad node_id");
        }
        const auto node = static_cast<std::size_t>(id - 1);
        if (dims != 0 && node >= dims) {
            throw DataError("events CSV line " + std::to_string(line_no) + ": node_id exceeds dimension");
        }
        if (node >= raw.size()) raw.resize(node + 1);
        raw[node].push_back(parse_double(trim(row.substr(comma + 1)), line_no));
    }
    // Row order carries no meaning; duplicates still fail validation.
    for (auto& times : raw) std::sort(times.begin(), times.end());
    return validate_events(std::move(raw), horizon);
}

void write_events_csv(const std::string& path, const EventData& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    write_events_csv(out, data);
    if (!out) throw DataError("failed writing '" + path + "'");
}

EventData read_events_csv(const std::string& path, double horizon, std::size_t dims) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_events_csv(in, horizon, dims);
}

std::string model_to_json(const HawkesModel& model) {
    json j;
    j["mu"] = std::vector<double>(model.mu().data(), model.mu().data() + model.mu().size());
    j["alpha"] = matrix_to_json(model.alpha());
    j["beta"] = matrix_to_json(model.beta());
    return j.dump(2) + "\n";
}

HawkesModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
        const auto mu = j.at("mu").get<std::vector<double>>();
        return HawkesModel(Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(mu.size())),
                           matrix_from_json(j.at("alpha"), "alpha"), matrix_from_json(j.at("beta"), "beta"));
    } catch (const json::exception& e) {
        throw DataError(std::string("model JSON: ") + e.what());
    }
}

std::string graph_to_json(const Graph& graph) {
    // Hand-formatted so that the bytes depend only on the adjacency.
    std::ostringstream out;
    out << "{\n  \"p\": " << graph.dims() << ",\n  \"adjacency\": [";
    for (std::size_t i = 0; i < graph.dims(); ++i) {
        out << (i == 0 ? "\n    [" : ",\n    [");
        for (std::size_t j = 0; j < graph.dims(); ++j) {
            out << (j == 0 ? "" : ", ") << (graph.edge(i, j) ? 1 : 0);
        }
        out << ']';
    }
    out << (graph.dims() == 0 ? "]\n}\n" : "\n  ]\n}\n");
    return out.str();
}

Graph graph_from_json(const std::string& text) {
    try {
        const auto j = json::parse(text);
        const auto& rows = j.at("adjacency");
        Graph g(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.size()) throw DataError("graph JSON: adjacency must be square");
            for (std::size_t jj = 0; jj < rows.size(); ++jj) {
                const int v = rows[i][jj].get<int>();
                if (v != 0 && v != 1) throw DataError("graph JSON: entries must be 0 or 1");
                g.set(i, jj, v == 1);
            }
        }
        return g;
    } catch (const json::exception& e) {
        throw DataError(std::string("graph JSON: ") + e.what());
    }
}

} // namespace mmlh
