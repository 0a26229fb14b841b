#pragma once

#include <cstdint>
#include <string>

#include "cpl/config.hpp"

namespace cpl {

/// Executes a configured case, writing CSV outputs and a JSON manifest under
/// out_dir. Returns the process exit code: 0 success, 1 validation failure,
/// 2 solver failure.
int run_case(const RunConfig& cfg, const std::string& out_dir, int jobs = 1,
             std::uint64_t seed = 12345);

}  // namespace cpl
