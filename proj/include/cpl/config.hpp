#pragma once

#include <string>
#include <vector>

namespace cpl {

enum class CaseKind { prandtl0, euler_layer, prandtl_lin, hierarchy, ns_sweep, identity_suite };

/// Run configuration parsed from the sectioned key = value format. Unknown
/// keys are rejected so numerical studies stay reproducible.
struct RunConfig {
  CaseKind kind = CaseKind::prandtl0;

  // physics
  double mu = 1.0, lambda = 1.0, kappa = 1.0;

  // geometry
  double L = 0.05, y_max = 20.0, Y_max = 15.0, stretch = 1.0;
  std::size_t n_x = 51, n_y = 201, n_Y = 121;

  // weights
  double l_exponent = 6.0, b_exponent = 4.0;

  // data family
  std::string family = "example";  // example | low_mach | high_subsonic
  std::string mode = "NBC";        // NBC | DBC
  double u_far = 1.35, T_far = 1.0, u_plus = 1.38;
  double sigma = 1.0;
  int k0 = 4;
  double Tb = 0.0;

  // schedule
  double theta0 = 0.2, theta_min = 1e-3, theta_factor = 0.5;

  // sweep
  int N = 1;
  std::vector<double> eps_list = {1e-1, 3e-2, 1e-2, 3e-3};

  // tolerances
  double picard_tol = 1e-10, mp_tol = 1e-8;
  int m = 3;

  std::string source_text;  // raw file contents (hashed into the manifest)
};

/// Parses and validates; throws std::runtime_error with a line reference on
/// parse errors and std::invalid_argument listing violated constraints.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<inline>");

std::string case_kind_name(CaseKind k);

}  // namespace cpl
