#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cpl/cutoff.hpp"
#include "cpl/grid.hpp"

namespace cpl {

enum class ThermalMode { NBC, DBC };

/// Background Euler shear flow (rho_e0, u_e0, 0, T_e0)(Y) with rho_e0*T_e0 = 1.
/// The profile family is u = u_plus - (u_plus - u_wall) e^{-Y},
/// T = 1 - (1 - T_wall) e^{-Y}; all derivatives are analytic.
class ShearFlow {
 public:
  ShearFlow(double u_wall, double u_plus, double T_wall, int deriv_order = 6);

  double u(double Y, int k = 0) const;
  double T(double Y, int k = 0) const;
  double rho(double Y, int k = 0) const;

  double u_wall() const { return u_wall_; }
  double u_plus() const { return u_plus_; }
  double T_wall() const { return T_wall_; }
  int deriv_order() const { return deriv_order_; }

  /// min over the sample nodes of 2*T - u^2 (uniform subsonic margin).
  double subsonic_margin(const Grid1D& grid) const;

 private:
  double u_wall_, u_plus_, T_wall_;
  int deriv_order_;
};

/// Initial data (U0, T0) for the nonlinear Prandtl problem, with analytic
/// y-derivative closures up to order 6 (one-sided at the piecewise joints).
struct InitialData {
  ThermalMode mode = ThermalMode::NBC;
  double u_far = 1.0;  // lim U0
  double T_far = 1.0;  // lim T0
  double Tb0 = 0.0;    // wall temperature at x=0 (DBC only)
  std::function<double(double, int)> U0;  // (y, derivative order)
  std::function<double(double, int)> T0;

  std::vector<double> sample_U0(const Grid1D& g, int k = 0) const;
  std::vector<double> sample_T0(const Grid1D& g, int k = 0) const;
};

/// The worked example family: U0 = ramp-to-u_far, T0 solving
/// kappa T0'' + mu |U0'|^2 = 0 on [0,1] with an exponential tail.
/// For u_far > 1 the ramp blends monotonically over [1, 1+min(1, u_far-1)]
/// so sup U0 = u_far; for u_far <= 1 the classical y*chi + u_far*(1-chi)
/// profile is used (which overshoots its far field near y = 1.4).
InitialData make_example_data(double mu, double kappa, double u_far,
                              ThermalMode mode = ThermalMode::NBC, double Tb0 = 0.0,
                              double T_far = 1.0);

/// Low Mach family: U0 = sigma*uhat(sqrt(sigma) y), T0 = 1 + sigma^2*That(sqrt(sigma) y),
/// uhat = (y + y^{k0} g1(y)) chi + chibar with polynomial g1.
InitialData make_low_mach_data(double sigma, int k0, const std::vector<double>& g1_coeffs,
                               double mu, double kappa, ThermalMode mode = ThermalMode::NBC,
                               double That0 = 0.0);

/// High subsonic family: (U0, T0)(y) = (uhat(sigma y), 1 + That(sigma y)).
InitialData make_high_subsonic_data(double sigma, double mu, double kappa,
                                    ThermalMode mode = ThermalMode::NBC, double That0 = 0.0);

/// Compatibility report for initial data at the corner (0,0), Eq.-(0.1)-style
/// conditions plus the derived x-derivatives at x=0.
struct CompatReport {
  bool wall_value_ok = false;       // U0(0) = 0
  bool slope_positive = false;      // U0'(0) > 0
  bool thermal_balance_ok = false;  // kappa T0''(0) + mu U0'(0)^2 = 0
  bool flatness_ok = false;         // U0''(0) = U0'''(0) = 0
  double wall_value = 0.0;
  double slope = 0.0;
  double thermal_residual = 0.0;
  double flatness_residual = 0.0;
  double far_gap_u = 0.0;  // |U0(ymax) - u_e0(0)|
  double far_gap_T = 0.0;
  std::vector<double> vbar0;   // vbar(0, y) from the compatibility integral
  std::vector<double> dx_ubar; // d/dx ubar at x=0
  std::vector<double> dx_T;    // d/dx T at x=0
  bool all_ok() const {
    return wall_value_ok && slope_positive && thermal_balance_ok && flatness_ok;
  }
};

CompatReport check_compatibility(const InitialData& data, const ShearFlow& flow,
                                 const Grid1D& grid, double mu, double kappa);

/// Shared C^2 cutoff instance (transition on [1,2]).
const Cutoff& standard_cutoff();

}  // namespace cpl
