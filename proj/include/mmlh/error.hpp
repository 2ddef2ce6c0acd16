#pragma once

#include <stdexcept>
#include <string>

namespace mmlh {

// Exception hierarchy. The CLI maps each kind onto a process exit code.

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace mmlh
