#pragma once

#include "mmlh/error.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mmlh {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Event times of a p-dimensional point process observed on (0, T].
///
/// Per-node sequences are strictly increasing and lie in (0, T]. Instances are
/// only obtainable through validate_events() (or the CSV reader, which calls
/// it), so every EventData in circulation satisfies those invariants.
class EventData {
public:
    [[nodiscard]] std::size_t dims() const noexcept { return times_.size(); }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::span<const double> node(std::size_t i) const { return times_.at(i); }
    [[nodiscard]] std::size_t count(std::size_t i) const { return times_.at(i).size(); }
    [[nodiscard]] std::size_t total_count() const noexcept;
    [[nodiscard]] bool empty() const noexcept { return total_count() == 0; }

    /// Largest event time over all nodes. Throws DataError when there are no events.
    [[nodiscard]] double t_max() const;

    [[nodiscard]] const std::vector<std::vector<double>>& raw() const noexcept { return times_; }

    friend EventData validate_events(std::vector<std::vector<double>> raw, double horizon);

    friend bool operator==(const EventData&, const EventData&) = default;

private:
    EventData(std::vector<std::vector<double>> times, double horizon)
        : times_(std::move(times)), horizon_(horizon) {}

    std::vector<std::vector<double>> times_;
    double horizon_{0.0};
};

/// Checks ordering, range and uniqueness of every node's times and returns
/// the validated container. Throws DataError on any violation.
[[nodiscard]] EventData validate_events(std::vector<std::vector<double>> raw, double horizon);

/// Parameters of an exponential-kernel Hawkes process:
///   lambda_i(t) = mu_i + sum_j alpha_ij sum_{t^j_k < t} exp(-beta_ij (t - t^j_k)).
class HawkesModel {
public:
    HawkesModel(Vector mu, Matrix alpha, Matrix beta);

    [[nodiscard]] std::size_t dims() const noexcept { return static_cast<std::size_t>(mu_.size()); }
    [[nodiscard]] const Vector& mu() const noexcept { return mu_; }
    [[nodiscard]] const Matrix& alpha() const noexcept { return alpha_; }
    [[nodiscard]] const Matrix& beta() const noexcept { return beta_; }

    /// Spectral radius of the branching matrix alpha_ij / beta_ij.
    [[nodiscard]] double spectral_radius() const noexcept { return spectral_radius_; }
    [[nodiscard]] bool stable() const noexcept { return spectral_radius_ < 1.0; }

    /// Stationary mean rates (I - alpha/beta)^{-1} mu. Only meaningful when stable().
    [[nodiscard]] Vector stationary_rates() const;

private:
    Vector mu_;
    Matrix alpha_;
    Matrix beta_;
    double spectral_radius_{0.0};
};

/// Binary parent-inclusion vector for one node.
class Structure {
public:
    Structure() = default;
    explicit Structure(std::vector<std::uint8_t> gamma);

    static Structure empty(std::size_t p) { return Structure(std::vector<std::uint8_t>(p, 0)); }
    static Structure full(std::size_t p) { return Structure(std::vector<std::uint8_t>(p, 1)); }
    static Structure from_parents(std::size_t p, std::span<const std::size_t> parents);

    [[nodiscard]] std::size_t dims() const noexcept { return gamma_.size(); }
    [[nodiscard]] std::size_t k() const noexcept { return parents_.size(); }
    [[nodiscard]] bool has(std::size_t j) const { return gamma_.at(j) != 0; }
    [[nodiscard]] const std::vector<std::uint8_t>& gamma() const noexcept { return gamma_; }
    /// Indices of the active parents in increasing order.
    [[nodiscard]] const std::vector<std::size_t>& parents() const noexcept { return parents_; }

    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const Structure& a, const Structure& b) { return a.gamma_ == b.gamma_; }

private:
    std::vector<std::uint8_t> gamma_;
    std::vector<std::size_t> parents_;
};

/// (mu_i, alpha_i restricted to the active parents of a Structure).
struct NodeParams {
    double mu{0.0};
    std::vector<double> alpha;

    [[nodiscard]] std::size_t size() const noexcept { return alpha.size() + 1; }
    [[nodiscard]] std::vector<double> to_vector() const;
    static NodeParams from_vector(std::span<const double> theta);
};

/// p x p adjacency; entry (i, j) = 1 means node j Granger-causes node i.
class Graph {
public:
    Graph() = default;
    explicit Graph(std::size_t p) : p_(p), adj_(p * p, 0) {}

    static Graph from_rows(const std::vector<Structure>& rows);
    /// Edges wherever alpha_ij > 0.
    static Graph from_model(const HawkesModel& model);

    [[nodiscard]] std::size_t dims() const noexcept { return p_; }
    [[nodiscard]] bool edge(std::size_t i, std::size_t j) const { return adj_.at(i * p_ + j) != 0; }
    void set(std::size_t i, std::size_t j, bool on) { adj_.at(i * p_ + j) = on ? 1 : 0; }
    [[nodiscard]] std::size_t edge_count() const noexcept;
    [[nodiscard]] Structure row(std::size_t i) const;

    friend bool operator==(const Graph&, const Graph&) = default;

private:
    std::size_t p_{0};
    std::vector<std::uint8_t> adj_;
};

/// Conditional intensity lambda_i(t). Events exactly at t do not contribute.
[[nodiscard]] double intensity(const HawkesModel& model, const EventData& data, std::size_t node, double t);

/// Compensator Lambda_i(t) = integral_0^t lambda_i(s) ds.
[[nodiscard]] double compensator(const HawkesModel& model, const EventData& data, std::size_t node, double t);

// Serialization. Events CSV: header "node_id,time", 1-based node ids, times
// written in shortest round-trip form and ordered by (time, node).

void write_events_csv(std::ostream& out, const EventData& data);
/// Reads an events CSV. dims = 0 infers p from the largest node id.
[[nodiscard]] EventData read_events_csv(std::istream& in, double horizon, std::size_t dims = 0);

void write_events_csv(const std::string& path, const EventData& data);
[[nodiscard]] EventData read_events_csv(const std::string& path, double horizon, std::size_t dims = 0);

[[nodiscard]] std::string model_to_json(const HawkesModel& model);
[[nodiscard]] HawkesModel model_from_json(const std::string& text);
[[nodiscard]] std::string graph_to_json(const Graph& graph);
[[nodiscard]] Graph graph_from_json(const std::string& text);

/// Shortest decimal form that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

} // namespace mmlh
