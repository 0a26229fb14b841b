#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpl/background.hpp"
#include "cpl/grid.hpp"

namespace cpl {

/// One marching slice of the theta-regularized nonlinear Prandtl system in the
/// (ubar, vbar, T) variables; u = T ubar, v = T vbar, rho = 1/T.
struct PrandtlSlice {
  double x = 0.0;
  std::vector<double> ubar, T, vbar;
};

struct ThetaSchedule {
  std::vector<double> thetas;  // strictly decreasing, last entry is theta_min
  double cauchy_tol = 1e-3;

  static ThetaSchedule geometric(double theta0, double theta_min, double factor = 0.5);
  void validate() const;
};

/// Optional manufactured-solution source hooks; added to the right sides of
/// the momentum and heat equations.
struct PrandtlSources {
  std::function<double(double, double)> s_u;  // (x, y)
  std::function<double(double, double)> s_T;
};

struct MarchOptions {
  double picard_tol = 1e-10;
  int picard_max = 50;
  double mp_tol = 1e-8;          // maximum-principle tolerance
  bool check_invariants = true;
  const PrandtlSources* sources = nullptr;
};

class MarchError : public std::runtime_error {
 public:
  MarchError(const std::string& what, double x) : std::runtime_error(what), x_fail(x) {}
  double x_fail;
};

/// Marched trajectory for one theta.
struct Trajectory {
  Grid1D grid;                     // y-grid
  std::vector<PrandtlSlice> slices;
  double theta = 0.0;
  double mu = 1.0, kappa = 1.0;
  ThermalMode mode = ThermalMode::NBC;
  double ubar_far = 1.0, T_far = 1.0;  // far-field Dirichlet values
  double u_cap = 1.0;                  // u_e0(0): the (3.70)-style cap
  double u_cap_data = 1.0;             // max(u_e0(0), sup of initial u)

  std::vector<double> xs() const;
  /// physical u = T ubar on slice i
  std::vector<double> u_of(std::size_t i) const;
  std::vector<double> v_of(std::size_t i) const;
  std::vector<double> rho_of(std::size_t i) const;
};

struct Prandtl0Problem {
  InitialData data;
  ShearFlow flow;
  double mu = 1.0, kappa = 1.0;
  double L = 0.05;
  std::size_t n_x = 51;  // slices including x = 0
  std::function<double(double)> Tb;  // wall temperature (DBC); defaults to data.Tb0
};

struct Prandtl0Result {
  Trajectory traj;                  // trajectory at theta_min
  std::vector<double> cauchy_gaps;  // between consecutive schedule entries
  std::vector<double> thetas;
};

/// Advances one implicit (backward-Euler) step of the theta-approximate system
/// with Picard iteration on the nonlinear terms. Returns the new slice.
PrandtlSlice march_step(const PrandtlSlice& state, const Trajectory& env, const DiffOps& ops,
                        double dx, double Tb_new, const MarchOptions& opts = {});

/// Full theta-continuation solve. Marches a trajectory for every theta in the
/// schedule and reports the Cauchy gaps; the returned trajectory is theta_min's.
Prandtl0Result solve_prandtl0(const Prandtl0Problem& prob, const ThetaSchedule& schedule,
                              const Grid1D& y_grid, const MarchOptions& opts = {});

/// Single-theta marching (building block of solve_prandtl0, also used by the
/// manufactured-solution studies).
Trajectory march_trajectory(const Prandtl0Problem& prob, double theta, const Grid1D& y_grid,
                            const MarchOptions& opts = {});

struct MonotoneWindowReport {
  double y0 = 0.0;         // window height from the initial data
  double min_du = 0.0;     // min over x in [0,L], y in [0,y0] of d(ubar*T)/dy
  double threshold = 0.0;  // 0.5 * U0'(0)
  bool pass = false;
};

MonotoneWindowReport monotone_window_check(const Trajectory& traj, const InitialData& data);

/// Discrete continuity defect |ubar_x + vbar_y| in the trapezoid-compatible
/// staggered form (machine-zero by construction of vbar).
double continuity_residual(const Trajectory& traj);

/// Margins of the structural invariants over the whole trajectory.
struct InvariantMargins {
  double rho_T_gap = 0.0;    // max |rho*T - 1|
  double u_min = 0.0;        // min of u
  double u_max_excess = 0.0; // max of u - u_cap
  double T_min = 0.0, T_max = 0.0;
  double continuity = 0.0;
};

InvariantMargins invariant_margins(const Trajectory& traj);

}  // namespace cpl
