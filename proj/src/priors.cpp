#include "mmlh/priors.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mmlh {

PriorSpec PriorSpec::uniform(double b) {
    if (!(b > 0.0) || !std::isfinite(b)) throw UsageError("uniform prior bound b must be positive");
    return {PriorKind::uniform, b};
}

PriorSpec PriorSpec::exponential(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw UsageError("exponential prior rate c must be positive");
    return {PriorKind::exponential, c};
}

PriorSpec PriorSpec::preset(PriorKind kind, const std::string& name) {
    if (name == "sparse") return kind == PriorKind::uniform ? uniform(1e5) : exponential(1e-5);
    if (name == "mid-dense") return kind == PriorKind::uniform ? uniform(4.0) : exponential(0.3);
    throw UsageError("unknown prior preset '" + name + "'");
}

std::string PriorSpec::to_string() const {
    return (kind == PriorKind::uniform ? "uniform:" : "exponential:") + format_double(hyper);
}

PriorSpec PriorSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw UsageError("prior must look like uniform:<b> or exponential:<c>");
    const auto name = text.substr(0, colon);
    double value = 0.0;
    try {
        std::size_t used = 0;
        value = std::stod(text.substr(colon + 1), &used);
        if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw UsageError("bad prior hyperparameter in '" + text + "'");
    }
    if (name == "uniform" || name == "u") return uniform(value);
    if (name == "exponential" || name == "exp" || name == "e") return exponential(value);
    throw UsageError("unknown prior kind '" + name + "'");
}

double neg_log_prior(const PriorSpec& spec, std::span<const double> theta) {
    const auto count = static_cast<double>(theta.size());
    if (spec.kind == PriorKind::uniform) {
        for (double x : theta) {
            if (x > spec.hyper) return std::numeric_limits<double>::infinity();
        }
        return count * std::log(spec.hyper);
    }
    double sum = 0.0;
    for (double x : theta) sum += x;
    return spec.hyper * sum - count * std::log(spec.hyper);
}

double neg_log_prior(const PriorSpec& spec, const NodeParams& theta, std::size_t k) {
    if (theta.alpha.size() != k) throw UsageError("parameter vector does not have k + 1 entries");
    const auto v = theta.to_vector();
    return neg_log_prior(spec, v);
}

} // namespace mmlh
