#pragma once

#include "mmlh/events.hpp"

#include <cstdint>

namespace mmlh {

struct SimConfig {
    double horizon{0.0};
    std::uint64_t seed{0};
    std::size_t max_events{10'000'000};
};

/// Exact sample path on (0, T] by Ogata's thinning, starting from an empty
/// history. The dominating rate is the total intensity right after the last
/// candidate, which is valid because every kernel decays between events.
/// Deterministic in (model, cfg). Throws NumericalError when more than
/// cfg.max_events events are generated.
[[nodiscard]] EventData simulate(const HawkesModel& model, const SimConfig& cfg);

} // namespace mmlh
