#pragma once

#include <string>
#include <vector>

namespace ulpsim::cli {

/// Exit codes: 0 success, 1 parse/elaboration error, 2 convergence failure,
/// 3 measurement failure, 4 bad arguments.
int dispatch(const std::vector<std::string>& args);

} // namespace ulpsim::cli
