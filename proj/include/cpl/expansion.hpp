#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cpl/array2d.hpp"
#include "cpl/background.hpp"
#include "cpl/euler_layer.hpp"
#include "cpl/grid.hpp"
#include "cpl/prandtl.hpp"
#include "cpl/prandtl_linear.hpp"

namespace cpl {

/// Prandtl-side forcing bundle of one hierarchy order (G4 = G41 + G42).
struct PrandtlForcing {
  Array2D G1, G2, G3, G41, G42;
  Array2D G4() const {
    Array2D g = G41;
    for (std::size_t i = 0; i < g.nx(); ++i)
      for (std::size_t j = 0; j < g.ny(); ++j) g(i, j) += G42(i, j);
    return g;
  }
};

/// Order-by-order expansion data. Orders 1..N of Euler and Prandtl
/// corrections over a shared x-grid; the leading Prandtl trajectory is the
/// theta-minimum march. Everything is epsilon-independent.
struct Hierarchy {
  int N = 0;
  double mu = 1.0, kappa = 1.0, lambda = 1.0;
  ShearFlow flow{1.0, 1.0, 1.0};
  Grid1D gx, gy, gY;            // x, Prandtl y, Euler Y
  Trajectory base;               // leading-order march
  LinearBase linbase;            // base fields resampled for the linear solves
  std::vector<EulerCorrection> euler;    // k = 1..N
  std::vector<LayerSolution> prandtl;    // k = 1..N
  std::vector<EulerForcing> Fk;          // forcings used at each order
  std::vector<PrandtlForcing> Gk;

  // layer parts of the leading order (v subtracts the first Euler wall trace
  // once it exists)
  Array2D rho_p0, u_p0, v_p0, T_p0;
  Array2D vbar0;  // full leading vertical velocity (physical)

  struct Matching {
    double u_wall = 0.0;       // max |u_e^k(x,0) + u_p^k(x,0)|
    double v_wall = 0.0;       // max |v_e^k(x,0) - wall datum|
    double frak_v_wall = 0.0;  // max |frak_v^k(x,0)|
    double T_wall = 0.0;       // temperature matching residual per mode
  };
  std::vector<Matching> matching;
};

/// Euler forcing F^k from orders < k. k = 1 gives exact zeros.
EulerForcing euler_forcing(const Hierarchy& h, int k);

/// Prandtl forcing G^k from Euler orders <= k and Prandtl orders < k.
PrandtlForcing prandtl_forcing(const Hierarchy& h, int k);

struct HierarchyConfig {
  int N = 1;
  double mu = 1.0, kappa = 1.0, lambda = 1.0;
  double L = 0.04;
  std::size_t n_x = 41;
  std::size_t n_y = 201, n_Y = 121;
  double y_max = 20.0, Y_max = 15.0;
  double theta_min = 1e-3;
  ThermalMode mode = ThermalMode::NBC;
  std::string family = "example";  // example | low_mach | high_subsonic
  double sigma = 1.0;              // amplitude parameter of the scaled families
  int k0 = 4;
  double u_far = 1.35;   // example-data far field = u_e0(0)
  double T_far = 1.0;
  double u_plus = 1.38;
  double Tb0 = 0.0;      // DBC wall temperature
};

Hierarchy build_hierarchy(const HierarchyConfig& cfg);

/// Value-plus-derivative record of a composite field at a point, in the
/// stretched coordinate (x, y): f, fx, fy, fxx, fyy, fxy.
struct Deriv2 {
  double f = 0, fx = 0, fy = 0, fxx = 0, fyy = 0, fxy = 0;
};

/// Composite approximate solution for a fixed epsilon, evaluable on the audit
/// grid (x-slices of the hierarchy, y-nodes extended past the Prandtl grid to
/// cover the vertical-velocity cutoff support).
class CompositeSolution {
 public:
  CompositeSolution(const Hierarchy& h, double eps);

  double eps() const { return eps_; }
  const std::vector<double>& xs() const { return xs_; }
  const Grid1D& audit_grid() const { return gy_audit_; }

  /// adjusted fields (wall-exact, per the composite correction)
  Deriv2 rho(std::size_t i, std::size_t j) const;
  Deriv2 u(std::size_t i, std::size_t j) const;
  Deriv2 v_ns(std::size_t i, std::size_t j) const;  // physical sqrt(eps)-scaled
  Deriv2 T(std::size_t i, std::size_t j) const;

  /// raw (unadjusted) composite vertical velocity, for diagnostics
  Deriv2 v_ns_raw(std::size_t i, std::size_t j) const;

 public:
  struct Tables {
    Array2D f, fx, fy, fxx, fyy, fxy;
  };

 private:
  friend struct CompositeAccess;
  double eps_ = 0.1, se_ = 0.0;
  const Hierarchy* h_;
  std::vector<double> xs_;
  Grid1D gy_audit_;
  // assembled tables on the audit grid, already in (x, y) coordinates
  Tables rho_t, u_t, v_t, T_t;       // raw composite
  Tables vadj_t, Tadj_t;             // adjustment terms
};

/// NS residual audit of the adjusted composite: weighted sup norms of the
/// four equations, wall rows excluded per the x-window policy.
struct NsResidualReport {
  double mass = 0.0, mom_x = 0.0, mom_y = 0.0, energy = 0.0;
  double max_all = 0.0;
  std::size_t first_valid = 0, last_valid = 0;
};

NsResidualReport ns_residual(const CompositeSolution& comp, double mu, double lambda,
                             double kappa, double weight_exponent);

/// Dual-route mass check: the direct residual against the conservation-form
/// divergence assembled from the leftover fluxes (N <= 1).
struct MassIdentityReport {
  Array2D direct, divergence;
  double gap = 0.0;       // max |direct - divergence| over the valid window
  double scale = 0.0;     // max |direct|
};

MassIdentityReport mass_conservation_identity(const Hierarchy& h, double eps);

/// Fit log(residual) against log(sqrt(eps)); returns the slope.
double fit_sweep_slope(const std::vector<double>& eps_list,
                       const std::vector<double>& residuals);

}  // namespace cpl
