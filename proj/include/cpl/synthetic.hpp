#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "cpl/grid.hpp"
#include "cpl/prandtl.hpp"

namespace cpl {

/// Smooth synthetic (ubar, vbar, T) bundle with continuity built in:
///   ubar = c0 + c1 (1 - e^{-y}) + a(x) B(y),  vbar = -a'(x) IB(y),
///   T    = t0 + tA e^{-y} + g(x) C(y),
/// where IB' = B, so ubar_x + vbar_y = 0 holds exactly. Not a PDE solution.
struct SyntheticPrandtl {
  double c0 = 0.3, c1 = 0.4;
  double aw = 3.0, a0 = 0.05, a1 = 0.05;   // a(x) = a0 + a1 sin(aw x)
  double bB = 1.0;                          // B(y) = y e^{-bB y}
  double t0 = 1.0, tA = 0.08;
  double gw = 2.0, g0 = 0.06, g1 = 0.04;   // g(x) = g0 + g1 cos(gw x)
  double cC = 1.0;                          // C(y) = y^2 e^{-cC y}

  double a(double x) const { return a0 + a1 * std::sin(aw * x); }
  double ap(double x) const { return a1 * aw * std::cos(aw * x); }
  double B(double y) const { return y * std::exp(-bB * y); }
  double IB(double y) const {
    return (1.0 - std::exp(-bB * y) * (1.0 + bB * y)) / (bB * bB);
  }
  double g(double x) const { return g0 + g1 * std::cos(gw * x); }
  double C(double y) const { return y * y * std::exp(-cC * y); }

  double ub(double x, double y) const { return c0 + c1 * (1.0 - std::exp(-y)) + a(x) * B(y); }
  double vb(double x, double y) const { return -ap(x) * IB(y); }
  double T(double x, double y) const { return t0 + tA * std::exp(-y) + g(x) * C(y); }

  /// Randomized instance with bounded amplitudes (fields stay positive).
  static SyntheticPrandtl randomized(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SyntheticPrandtl s;
    s.c0 = 0.3 + 0.1 * u(rng);
    s.c1 = 0.4 + 0.1 * u(rng);
    s.aw = 2.5 + u(rng);
    s.a0 = 0.035 * (1.0 + 0.5 * u(rng));
    s.a1 = 0.035 * (1.0 + 0.5 * u(rng));
    s.bB = 1.0 + 0.3 * u(rng);
    s.tA = 0.06 * (1.0 + 0.5 * u(rng));
    s.gw = 2.0 + u(rng);
    s.g0 = 0.045 * (1.0 + 0.5 * u(rng));
    s.g1 = 0.03 * (1.0 + 0.5 * u(rng));
    s.cC = 1.0 + 0.3 * u(rng);
    return s;
  }
};

/// Samples closures onto a trajectory (no marching; diagnostics input).
template <class F1, class F2, class F3>
Trajectory make_synthetic_trajectory(F1&& ub, F2&& vb, F3&& T, const Grid1D& gx,
                                     const Grid1D& gy, double theta, double mu, double kappa,
                                     ThermalMode mode = ThermalMode::NBC) {
  Trajectory traj;
  traj.grid = gy;
  traj.theta = theta;
  traj.mu = mu;
  traj.kappa = kappa;
  traj.mode = mode;
  traj.slices.resize(gx.size());
  for (std::size_t i = 0; i < gx.size(); ++i) {
    auto& s = traj.slices[i];
    s.x = gx.nodes[i];
    s.ubar.resize(gy.size());
    s.vbar.resize(gy.size());
    s.T.resize(gy.size());
    for (std::size_t j = 0; j < gy.size(); ++j) {
      s.ubar[j] = ub(s.x, gy.nodes[j]);
      s.vbar[j] = vb(s.x, gy.nodes[j]);
      s.T[j] = T(s.x, gy.nodes[j]);
    }
  }
  return traj;
}

inline Trajectory make_synthetic_trajectory(const SyntheticPrandtl& s, const Grid1D& gx,
                                            const Grid1D& gy, double theta, double mu,
                                            double kappa,
                                            ThermalMode mode = ThermalMode::NBC) {
  return make_synthetic_trajectory([&s](double x, double y) { return s.ub(x, y); },
                                   [&s](double x, double y) { return s.vb(x, y); },
                                   [&s](double x, double y) { return s.T(x, y); }, gx, gy,
                                   theta, mu, kappa, mode);
}

}  // namespace cpl
