#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cpl/array2d.hpp"
#include "cpl/grid.hpp"
#include "cpl/prandtl.hpp"

namespace cpl {

/// Backward-window x-derivative of every slice of a field (ring-buffer style,
/// order min(2, available)). Slices with fewer than k+1 predecessors carry 0;
/// first_valid_slice(k) marks where full accuracy starts.
Array2D dx_field(const Array2D& f, const std::vector<double>& xs, int k);
std::size_t first_valid_slice(int k);

/// y-derivative of every slice.
Array2D dy_field(const Array2D& f, const DiffOps& ops, int order);

/// Quotient q = vbar / (theta + ubar) and its derivatives on a trajectory.
struct QuotientField {
  Array2D q;       // (n_x, n_y)
  Array2D q_y;
  Array2D q_xy;
  double corner_q = 0.0;    // max over x of |q(x,0)|
  double corner_qy = 0.0;   // max over x of |q_y(x,0)| (wall limit via the
                            // quotient rule; vbar_y(x,0) = -ubar_x(x,0) = 0)
};

QuotientField compute_quotient(const Trajectory& traj);

/// Residual field of the quotient equation
///   ubar_theta^2 q_xy - mu vbar_yyy = F,  F = -f1 + f2 + f3.
struct ResidualField {
  Array2D r;
  std::size_t first_valid = 0;  // slices before this lack x-history
  double weighted_norm = 0.0;   // L2 over the valid range with the weight
};

ResidualField quotient_equation_residual(const Trajectory& traj, const Weight& w);

/// Independent route: residual of the x-differentiated momentum equation in
/// the (u_x, v_x) variables. The algebraic identity says this equals minus the
/// quotient-equation residual.
Array2D momentum_route_residual(const Trajectory& traj);

/// Auxiliary temperature fields: T_B (1 for NBC, Tb(x) chi + (1-chi) for DBC),
/// G_B, Theta = T - T_B.
struct ThetaField {
  Array2D T_B, G_B, Theta;
  double far_field_gap = 0.0;  // max over x of |Theta(x, y_max)|
  double corner = 0.0;         // NBC: max |Theta_y(x,0)|; DBC: max |Theta(x,0)|
};

ThetaField compute_theta_field(const Trajectory& traj,
                               const std::function<double(double)>& Tb = {});

/// Pseudo-entropy S_k = dx^k Theta + dx^{k-1} q * Theta_y.
Array2D pseudo_entropy(const Trajectory& traj, const ThetaField& th, int k);

/// Residual of the pseudo-entropy equation (order k), plus the independent
/// route through the x-differentiated heat equation. Their difference is the
/// algebraic-identity gap.
struct EntropyResiduals {
  Array2D entropy_route;
  Array2D heat_route;
  std::size_t first_valid = 0;
  double weighted_norm = 0.0;  // of the entropy route
  double identity_gap = 0.0;   // max |entropy - heat| over the valid range
};

EntropyResiduals pseudo_entropy_residual(const Trajectory& traj, const ThetaField& th, int k,
                                         const Weight& w);

/// The computable norm families of the estimate machinery.
struct NormReport {
  int m = 0;
  double weight_exponent = 0.0;
  double l0_exponent = 0.0;
  std::vector<double> X_by_order;  // ||q_y||^2_{X^i}, cumulative in i
  std::vector<double> Y_by_order;  // ||Theta||^2_{Y^i}, cumulative in i
  double triple_v = 0.0;           // |||vbar|||_{m,w}
  double triple_theta = 0.0;       // [[[Theta]]]_{m+1,w}
  bool finite() const;
};

NormReport norms(const Trajectory& traj, const ThetaField& th, const Weight& w, int m,
                 double l0_exponent);

/// Max |f| over slices >= first_valid, interior y-nodes.
double max_abs_interior(const Array2D& f, std::size_t first_valid);

}  // namespace cpl
