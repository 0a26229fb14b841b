#pragma once

#include <functional>
#include <vector>

#include "cpl/array2d.hpp"
#include "cpl/background.hpp"
#include "cpl/grid.hpp"

namespace cpl {

/// Coefficients of the divergence-form Euler-layer operator
///   L V = -dY(a11 VY) - dx(a22 Vx) + dY(b1 V),
/// sampled on the Y-grid.
struct EllipticCoeffs {
  std::vector<double> a11, a22, b1;
};

/// a11 = rho T u / (2T - u^2), a22 = rho u / 2, b1 per the shear-flow display.
EllipticCoeffs coeffs_from_flow(const ShearFlow& flow, const Grid1D& gY);

double subsonic_margin(const ShearFlow& flow, const Grid1D& gY);

/// Boundary lift S1 absorbing the inhomogeneous data of the elliptic problem.
struct BoundaryLift {
  Array2D S1;          // (n_x, n_Y)
  int branch = 0;      // 0: generic, 1: vp(0,0)=0, 2: vp(L,0)=0, 3: both
  double corner_residual = 0.0;  // max |V0(0)+vp(0,0)|, |VL(0)+vp(L,0)|
  double decay_constant = 0.0;   // measured sup |S1| <Y>^l / |vp(x,0)|
};

BoundaryLift build_lift(const std::vector<double>& V0, const std::vector<double>& VL,
                        const std::vector<double>& vp_wall, const Grid1D& gx,
                        const Grid1D& gY, double decay_exponent = 2.0);

/// Discrete operator application (5-point conservative scheme); boundary rows
/// return the node value (Dirichlet identity rows).
Array2D apply_operator(const EllipticCoeffs& c, const Array2D& V, const Grid1D& gx,
                       const Grid1D& gY);

struct EllipticSolveReport {
  double solver_residual = 0.0;   // max |L_h V - rhs| at interior nodes
  double coercivity = 0.0;        // measured Rayleigh quotient of the form
  double wall_residual = 0.0;     // max |V(x,0) + vp(x,0)|
};

/// Homogeneous-Dirichlet solve L_h Vbar = rhs (interior nodes), zero on all
/// four sides. Building block for solve_v and the manufactured studies.
Array2D solve_homogeneous(const EllipticCoeffs& c, const Array2D& rhs, const Grid1D& gx,
                          const Grid1D& gY, EllipticSolveReport* rep = nullptr);

/// Full boundary-value solve: V = Vbar + S1 with rhs dY(F) - L_h S1.
/// F is the flux combination of the forcing terms (may be all zero).
Array2D solve_v(const EllipticCoeffs& c, const BoundaryLift& lift, const Array2D& F,
                const Grid1D& gx, const Grid1D& gY, EllipticSolveReport* rep = nullptr);

/// Forcing bundle of one hierarchy order on the Euler grid.
struct EulerForcing {
  Array2D F1, F2, F3, F4;
};

EulerForcing zero_forcing(std::size_t nx, std::size_t nY);

/// The flux combination entering the elliptic right side:
/// F = T0 F2 - T0 u0 F1 - (T0/u0 + 1/(2u0)) (F4 - T0 F1).
Array2D elliptic_rhs_flux(const ShearFlow& flow, const EulerForcing& f, const Grid1D& gY);

/// Order-k Euler correction.
struct EulerCorrection {
  int order = 1;
  Array2D v, rho, u, T;  // on the (x, Y) grid
};

/// Transport recovery of (rho, u, T) from v by x-integration of the
/// first-order system, starting from inflow profiles at x = 0.
EulerCorrection recover_rho_u_T(const Array2D& v, const ShearFlow& flow,
                                const EulerForcing& f, const std::vector<double>& rho_in,
                                const std::vector<double>& u_in,
                                const std::vector<double>& T_in, const Grid1D& gx,
                                const Grid1D& gY, int order);

/// Residual fields of the four first-order Euler-layer equations evaluated on
/// a correction (diagnostic).
struct EulerSystemResiduals {
  Array2D mass, mom_x, mom_Y, energy;
  double max_abs = 0.0;
};

EulerSystemResiduals euler_system_residuals(const EulerCorrection& ec, const ShearFlow& flow,
                                            const EulerForcing& f, const Grid1D& gx,
                                            const Grid1D& gY);

}  // namespace cpl
