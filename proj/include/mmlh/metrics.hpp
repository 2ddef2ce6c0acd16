#pragma once

#include "mmlh/events.hpp"

#include <span>

namespace mmlh {

struct ScoreReport {
    double precision{0.0};
    double recall{0.0};
    double f1{0.0};
    std::size_t tp_count{0};
    std::size_t predicted_count{0};
    std::size_t truth_count{0};
};

/// Edge-level precision, recall and F1 of `predicted` against `truth`.
/// No predicted edges gives precision 0; empty truth with empty prediction
/// scores 1 across the board.
[[nodiscard]] ScoreReport score(const Graph& predicted, const Graph& truth);

struct Aggregate {
    double mean_f1{0.0};
    double std_f1{0.0};   // sample standard deviation (N - 1 divisor)
    double mean_tp_rate{0.0}; // mean recall
    std::size_t count{0};
};

[[nodiscard]] Aggregate aggregate(std::span<const ScoreReport> reports);

} // namespace mmlh
