#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mmlh::cli {

enum ExitCode : int { ok = 0, usage = 1, data = 2, numerical = 3 };

/// Entry point of the mmlh tool. Results go to files or `out`; progress and
/// errors go to `err`. Returns one of ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mmlh::cli
