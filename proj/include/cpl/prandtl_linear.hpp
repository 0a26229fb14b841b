#pragma once

#include <functional>
#include <vector>

#include "cpl/array2d.hpp"
#include "cpl/background.hpp"
#include "cpl/grid.hpp"
#include "cpl/prandtl.hpp"

namespace cpl {

/// Base-flow fields and derivatives entering the linear Prandtl operators.
/// u0, v0, T0 are the physical leading-order fields; m = rho0 u0;
/// hu = (theta + u0)/T0 is the regularized convection coefficient.
struct LinearBase {
  double theta = 1e-3;
  double mu = 1.0, kappa = 1.0;
  Grid1D grid;              // y-grid
  std::vector<double> xs;   // slice coordinates
  Array2D u0, v0, T0, rho0;
  Array2D u0_y, u0_yy, u0_x, v0_y;
  Array2D T0_y, T0_yy, T0_x;
  Array2D m, m_y, m_yy, m_x;
  Array2D hu, hu_y, rv;     // rv = rho0 v0
  Array2D phi, phi_x;       // phi = hu_y / hu

  static LinearBase from_trajectory(const Trajectory& traj, double theta_lin);
  /// Sampled from closures (x, y) -> value; derivatives are still discrete.
  static LinearBase from_closures(const std::function<double(double, double)>& u0,
                                  const std::function<double(double, double)>& v0,
                                  const std::function<double(double, double)>& T0,
                                  const Grid1D& gx, const Grid1D& gy, double theta_lin,
                                  double mu, double kappa);
};

/// Data of one linear layer solve: forcings, initial and wall data.
struct LinearInputs {
  Array2D G1, G2, G3, G4;          // on the (x, y) grid
  std::vector<double> u_init;       // u_p(0, y)
  std::vector<double> T_init;       // T_p(0, y)
  std::vector<double> u_wall;       // u_p(x, 0)
  std::vector<double> T_wall;       // NBC: dy T_p(x,0); DBC: T_p(x,0)
  ThermalMode mode = ThermalMode::NBC;
};

LinearInputs zero_inputs(std::size_t nx, std::size_t ny, ThermalMode mode = ThermalMode::NBC);

/// Zero-mean wall profile xi for the velocity lift: xi(0)=1, flat at 0,
/// discrete integral exactly zero. Two variants for the
/// representation-independence check.
struct XiProfile {
  std::vector<double> xi, xi_yy, Ixi;  // Ixi(y) = int_0^y xi
};

XiProfile make_xi(const Grid1D& gy, int variant = 0);

/// Homogenized data per (the lift construction): P1, P2 from the forcings,
/// the wall lift ell(x) = rho0(x,0) u_wall(x), and the temperature lift TB.
struct Homogenized {
  Array2D P1, P2, P1x, P1_y, TB, TB_y, TB_yy, TB_x;
  std::vector<double> ell, ell_x;
  XiProfile xi;
  std::vector<double> u_hom_init;   // bold-u at x = 0
  std::vector<double> th_init;      // bold-Theta at x = 0
  double decay_violation = 0.0;     // |G1| at y_max relative to max |G1|
};

Homogenized homogenize(const LinearBase& base, const LinearInputs& in, int xi_variant = 0);

/// Full linear-layer solution: homogenized unknowns and the recovered
/// physical layer fields.
struct LayerSolution {
  Array2D Psi, psi, Theta;        // stream-function unknowns
  Array2D u, v;                   // bold u = psi_y, bold v = -psi_x
  Array2D u_p, T_p, rho_p;        // recovered layer fields
  Array2D frak_v;                 // fraktur v (before far-field removal)
  Array2D v_p;                    // frak_v - frak_v(x, y_max)
  std::vector<double> frak_v_far; // frak_v(x, y_max)
};

struct LinearMarchOptions {
  double picard_tol = 1e-12;
  int picard_max = 60;
  const PrandtlSources* sources = nullptr;  // manufactured-study hooks (Psi, Theta)
};

LayerSolution solve_linear_layer(const LinearBase& base, const LinearInputs& in,
                                 int xi_variant = 0, const LinearMarchOptions& opts = {});

/// Corner-compatibility report: the two bracket expressions whose flatness at
/// (0,0) controls corner regularity, sampled on y in [0, 1].
struct CornerCompatReport {
  double mom_value = 0.0, mom_slope = 0.0;  // momentum bracket and its y-slope at 0
  double heat_value = 0.0;                   // heat bracket at 0
};

CornerCompatReport corner_compat_report(const LinearBase& base, const LinearInputs& in,
                                        int xi_variant = 0);

/// Adjusts u_init / T_init by wall-flat quadratic and cubic profiles so the
/// first-order corner conditions hold (the constructive form of the assumed
/// data compatibility). Iterates because the brackets depend on the data.
void compatibility_corner_fix(const LinearBase& base, LinearInputs& in, int xi_variant = 0,
                              int iters = 3);

/// Residuals of the untransformed linear layer system evaluated on
/// (rho_p, u_p, v_p, T_p); the forcing arrays are those of the inputs.
struct LinearSystemResiduals {
  Array2D eq1, eq2, eq3, eq4;
};

LinearSystemResiduals linear_system_residuals(const LinearBase& base, const LinearInputs& in,
                                              const Array2D& rho_p, const Array2D& u_p,
                                              const Array2D& v_p, const Array2D& T_p);

/// Residuals of the transformed (divergence/convection) form evaluated on
/// (bar-u, bar-v, T_p) with the same P1/P2 bookkeeping.
struct TransformedResiduals {
  Array2D cont, mom, heat;
};

TransformedResiduals transformed_residuals(const LinearBase& base, const LinearInputs& in,
                                           const Homogenized& hom, const Array2D& ub,
                                           const Array2D& vb, const Array2D& T_p);

/// Linear pseudo-entropy S_k = dx^k Theta - T0_y dx^k q, q = psi / hu, and the
/// residual of its equation against the dx^k-differentiated heat equation.
struct LinearEntropyResiduals {
  Array2D entropy_route, heat_route;
  std::size_t first_valid = 0;
  double identity_gap = 0.0;
  double weighted_norm = 0.0;
};

LinearEntropyResiduals linear_entropy_residual(const LinearBase& base, const Homogenized& hom,
                                               const LayerSolution& sol,
                                               const LinearInputs& in, int k,
                                               const Weight& w);

/// X/Y-type norm families of the homogenized unknowns.
struct LinearNormReport {
  std::vector<double> X_by_order, Y_by_order;
  bool finite() const;
};

LinearNormReport linear_norms(const LinearBase& base, const LayerSolution& sol,
                              const Weight& w, int m);

}  // namespace cpl
