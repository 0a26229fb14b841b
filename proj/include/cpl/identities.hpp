#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cpl {

/// One dual-route identity check over a grid-refinement ladder.
struct IdentityResult {
  std::string name;
  std::vector<double> gaps;  // per refinement level
  double slope = 0.0;        // fitted log2 slope per level pair
  double finest_gap = 0.0;
  bool pass(double slope_lo = 1.7, double slope_hi = 2.3, double gap_tol = 1e-6) const {
    return slope >= slope_lo && slope <= slope_hi && finest_gap <= gap_tol;
  }
};

/// Runs the four algebraic identity checks (quotient vs differentiated
/// momentum; pseudo-entropy vs heat; linear entropy vs linear heat;
/// transformed vs untransformed linear system) on one randomized synthetic
/// field set.
std::vector<IdentityResult> run_identity_set(std::uint64_t seed);

struct IdentitySuiteReport {
  std::vector<std::vector<IdentityResult>> sets;
  bool all_pass = true;
  double worst_gap = 0.0;
  double slope_min = 1e300, slope_max = -1e300;
};

IdentitySuiteReport run_identity_suite(std::uint64_t seed, int n_sets = 20);

}  // namespace cpl
