#include "cpl/prandtl.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cpl/tridiag.hpp"

namespace cpl {

ThetaSchedule ThetaSchedule::geometric(double theta0, double theta_min, double factor) {
  ThetaSchedule s;
  for (double t = theta0; t > theta_min * (1.0 + 1e-12); t *= factor) s.thetas.push_back(t);
  s.thetas.push_back(theta_min);
  return s;
}

void ThetaSchedule::validate() const {
  if (thetas.empty()) throw std::invalid_argument("ThetaSchedule: empty");
  if (thetas.back() <= 0.0) throw std::invalid_argument("ThetaSchedule: theta_min must be > 0");
  for (std::size_t i = 1; i < thetas.size(); ++i)
    if (thetas[i] >= thetas[i - 1])
      throw std::invalid_argument("ThetaSchedule: must be strictly decreasing");
}

std::vector<double> Trajectory::xs() const {
  std::vector<double> out(slices.size());
  for (std::size_t i = 0; i < slices.size(); ++i) out[i] = slices[i].x;
  return out;
}

std::vector<double> Trajectory::u_of(std::size_t i) const {
  const auto& s = slices[i];
  std::vector<double> u(s.ubar.size());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = s.T[j] * s.ubar[j];
  return u;
}

std::vector<double> Trajectory::v_of(std::size_t i) const {
  const auto& s = slices[i];
  std::vector<double> v(s.vbar.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = s.T[j] * s.vbar[j];
  return v;
}

std::vector<double> Trajectory::rho_of(std::size_t i) const {
  const auto& s = slices[i];
  std::vector<double> r(s.T.size());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = 1.0 / s.T[j];
  return r;
}

namespace {

// N1(ubar, T) collects the compressible coupling terms of the momentum
// equation in the (ubar, T) variables.
std::vector<double> eval_N1(const std::vector<double>& ub, const std::vector<double>& T,
                            const DiffOps& ops, double mu, double kappa) {
  const auto uby = ops.apply(ub, 1);
  const auto Ty = ops.apply(T, 1);
  const auto Tyy = ops.apply(T, 2);
  std::vector<double> out(ub.size());
  for (std::size_t j = 0; j < ub.size(); ++j) {
    const double u = ub[j], uy = uby[j], t = T[j], ty = Ty[j], tyy = Tyy[j];
    out[j] = 2.0 * mu / t * ty * uy + (mu - 0.5 * kappa) * tyy / t * u -
             0.5 * mu / t * ty * ty * u * u * u - mu * ty * uy * u * u -
             0.5 * mu * t * uy * uy * u;
  }
  return out;
}

// N2 = mu |d/dy (T ubar)|^2
std::vector<double> eval_N2(const std::vector<double>& ub, const std::vector<double>& T,
                            const DiffOps& ops, double mu) {
  std::vector<double> u(ub.size());
  for (std::size_t j = 0; j < ub.size(); ++j) u[j] = T[j] * ub[j];
  const auto uy = ops.apply(u, 1);
  std::vector<double> out(ub.size());
  for (std::size_t j = 0; j < ub.size(); ++j) out[j] = mu * uy[j] * uy[j];
  return out;
}

struct YStencils {
  // 3-point first/second derivative weights per interior node
  std::vector<std::array<double, 3>> d1, d2;
};

YStencils make_ystencils(const Grid1D& g) {
  YStencils st;
  const std::size_t n = g.size();
  st.d1.resize(n);
  st.d2.resize(n);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    std::vector<double> xs = {g.nodes[j - 1], g.nodes[j], g.nodes[j + 1]};
    const auto w1 = fd_weights(xs, g.nodes[j], 1);
    const auto w2 = fd_weights(xs, g.nodes[j], 2);
    st.d1[j] = {w1[0], w1[1], w1[2]};
    st.d2[j] = {w2[0], w2[1], w2[2]};
  }
  return st;
}

}  // namespace

PrandtlSlice march_step(const PrandtlSlice& state, const Trajectory& env, const DiffOps& ops,
                        double dx, double Tb_new, const MarchOptions& opts) {
  const Grid1D& g = env.grid;
  const std::size_t n = g.size();
  const double theta = env.theta, mu = env.mu, kappa = env.kappa;
  const double x_new = state.x + dx;
  const YStencils st = make_ystencils(g);

  PrandtlSlice out;
  out.x = x_new;
  std::vector<double> ub_it = state.ubar, T_it = state.T, vb_it = state.vbar;
  std::vector<double> ub_new, T_new, vb_new;

  int iter = 0;
  for (;; ++iter) {
    if (iter >= opts.picard_max)
      throw MarchError("march_step: Picard iteration stalled", x_new);

    // momentum solve for ubar, frozen T and coefficients at the current iterate
    const auto N1 = eval_N1(ub_it, T_it, ops, mu, kappa);
    Tridiag mom(n);
    mom.b[0] = 1.0;
    mom.r[0] = 0.0;  // ubar(x, 0) = 0
    mom.b[n - 1] = 1.0;
    mom.r[n - 1] = env.ubar_far;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double ut = theta + ub_it[j];
      const double adv = vb_it[j];
      mom.a[j] = adv * st.d1[j][0] - mu * st.d2[j][0];
      mom.b[j] = ut / dx + adv * st.d1[j][1] - mu * st.d2[j][1];
      mom.c[j] = adv * st.d1[j][2] - mu * st.d2[j][2];
      mom.r[j] = ut * state.ubar[j] / dx + N1[j];
      if (opts.sources && opts.sources->s_u) mom.r[j] += opts.sources->s_u(x_new, g.nodes[j]);
    }
    ub_new = mom.solve();

    // continuity: vbar = -int_0^y ubar_x dz with the backward difference in x
    std::vector<double> f(n);
    for (std::size_t j = 0; j < n; ++j) f[j] = (ub_new[j] - state.ubar[j]) / dx;
    vb_new = cumtrapz(f, g);
    for (auto& v : vb_new) v = -v;

    // heat solve with the fresh velocity
    const auto N2 = eval_N2(ub_new, T_it, ops, mu);
    const bool nbc = (env.mode == ThermalMode::NBC);
    // rows 1..n-1; NBC closure T0 = (4 T1 - T2)/3 folded into row 1
    Tridiag heat(n);
    heat.b[n - 1] = 1.0;
    heat.r[n - 1] = env.T_far;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double ut = theta + ub_new[j];
      const double adv = 2.0 * vb_new[j];
      heat.a[j] = adv * st.d1[j][0] - kappa * st.d2[j][0];
      heat.b[j] = 2.0 * ut / dx + adv * st.d1[j][1] - kappa * st.d2[j][1];
      heat.c[j] = adv * st.d1[j][2] - kappa * st.d2[j][2];
      heat.r[j] = 2.0 * ut * state.T[j] / dx + N2[j];
      if (opts.sources && opts.sources->s_T) heat.r[j] += opts.sources->s_T(x_new, g.nodes[j]);
    }
    if (nbc) {
      heat.b[1] += heat.a[1] * 4.0 / 3.0;
      heat.c[1] -= heat.a[1] / 3.0;
      heat.a[1] = 0.0;
      heat.b[0] = 1.0;  // placeholder row, overwritten after the solve
      heat.r[0] = 0.0;
    } else {
      heat.b[0] = 1.0;
      heat.r[0] = Tb_new;
    }
    T_new = heat.solve();
    if (nbc) T_new[0] = (4.0 * T_new[1] - T_new[2]) / 3.0;

    double delta = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      delta = std::max(delta, std::abs(ub_new[j] - ub_it[j]) + std::abs(T_new[j] - T_it[j]));
    ub_it = ub_new;
    T_it = T_new;
    vb_it = vb_new;
    if (delta <= opts.picard_tol) break;
  }

  out.ubar = std::move(ub_new);
  out.T = std::move(T_new);
  out.vbar = std::move(vb_new);

  if (opts.check_invariants) {
    for (std::size_t j = 0; j < n; ++j) {
      const double u = out.T[j] * out.ubar[j];
      if (u < -opts.mp_tol || u > env.u_cap_data + opts.mp_tol)
        throw MarchError("march_step: maximum principle violated", x_new);
      if (out.T[j] < 0.25 - opts.mp_tol || out.T[j] > 3.0 + opts.mp_tol)
        throw MarchError("march_step: temperature left [1/4, 3]", x_new);
    }
  }
  return out;
}

namespace {

// theta-regularized compatibility integral: vbar(0,y) = -ubar_theta *
// int_0^y (mu ubar_yy + N1) / ubar_theta^2, the nonsingular form of the
// quotient relation at x = 0.
std::vector<double> initial_vbar(const InitialData& data, const Grid1D& g, double theta,
                                 double mu, double kappa) {
  const std::size_t n = g.size();
  std::vector<double> ub(n), ubyy(n), integrand(n);
  std::vector<double> T(n), Ty(n), Tyy(n), U(n), Uy(n), Uyy(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double y = g.nodes[j];
    U[j] = data.U0(y, 0);
    Uy[j] = data.U0(y, 1);
    Uyy[j] = data.U0(y, 2);
    T[j] = data.T0(y, 0);
    Ty[j] = data.T0(y, 1);
    Tyy[j] = data.T0(y, 2);
    ub[j] = U[j] / T[j];
  }
  for (std::size_t j = 0; j < n; ++j) {
    // ubar = U/T: quotient-rule second derivative
    const double uby = (Uy[j] - ub[j] * Ty[j]) / T[j];
    ubyy[j] = (Uyy[j] - 2.0 * uby * Ty[j] - ub[j] * Tyy[j]) / T[j];
    const double u = ub[j], t = T[j];
    const double N1 = 2.0 * mu / t * Ty[j] * uby + (mu - 0.5 * kappa) * Tyy[j] / t * u -
                      0.5 * mu / t * Ty[j] * Ty[j] * u * u * u - mu * Ty[j] * uby * u * u -
                      0.5 * mu * t * uby * uby * u;
    const double ut = theta + u;
    integrand[j] = (mu * ubyy[j] + N1) / (ut * ut);
  }
  auto I = cumtrapz(integrand, g);
  std::vector<double> vb(n);
  for (std::size_t j = 0; j < n; ++j) vb[j] = -(theta + ub[j]) * I[j];
  return vb;
}

}  // namespace

Trajectory march_trajectory(const Prandtl0Problem& prob, double theta, const Grid1D& y_grid,
                            const MarchOptions& opts) {
  Trajectory traj;
  traj.grid = y_grid;
  traj.theta = theta;
  traj.mu = prob.mu;
  traj.kappa = prob.kappa;
  traj.mode = prob.data.mode;
  traj.T_far = prob.data.T_far;
  traj.ubar_far = prob.data.u_far / prob.data.T_far;
  traj.u_cap = prob.flow.u(0.0);

  const std::size_t n = y_grid.size();
  PrandtlSlice s0;
  s0.x = 0.0;
  s0.ubar.resize(n);
  s0.T.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double y = y_grid.nodes[j];
    s0.T[j] = prob.data.T0(y, 0);
    s0.ubar[j] = prob.data.U0(y, 0) / s0.T[j];
  }
  s0.vbar = initial_vbar(prob.data, y_grid, theta, prob.mu, prob.kappa);

  double u0max = 0.0;
  for (std::size_t j = 0; j < n; ++j) u0max = std::max(u0max, s0.T[j] * s0.ubar[j]);
  traj.u_cap_data = std::max(traj.u_cap, u0max);

  traj.slices.push_back(std::move(s0));
  if (prob.L <= 0.0 || prob.n_x <= 1) return traj;

  const DiffOps ops(y_grid);
  const double dx = prob.L / static_cast<double>(prob.n_x - 1);
  auto Tb = prob.Tb ? prob.Tb : [&prob](double) { return prob.data.Tb0; };
  for (std::size_t i = 1; i < prob.n_x; ++i) {
    const double x_new = static_cast<double>(i) * dx;
    traj.slices.push_back(
        march_step(traj.slices.back(), traj, ops, dx, Tb(x_new), opts));
  }
  return traj;
}

Prandtl0Result solve_prandtl0(const Prandtl0Problem& prob, const ThetaSchedule& schedule,
                              const Grid1D& y_grid, const MarchOptions& opts) {
  schedule.validate();
  if (prob.L < 0.0) throw std::invalid_argument("solve_prandtl0: L must be nonnegative");

  Prandtl0Result res;
  res.thetas = schedule.thetas;
  std::optional<Trajectory> prev;
  for (double theta : schedule.thetas) {
    Trajectory t = march_trajectory(prob, theta, y_grid, opts);
    if (prev) {
      double gap = 0.0;
      for (std::size_t i = 0; i < t.slices.size(); ++i)
        for (std::size_t j = 0; j < y_grid.size(); ++j)
          gap = std::max(gap, std::abs(t.slices[i].ubar[j] - prev->slices[i].ubar[j]) +
                                  std::abs(t.slices[i].T[j] - prev->slices[i].T[j]));
      res.cauchy_gaps.push_back(gap);
    }
    prev = std::move(t);
  }
  for (std::size_t i = 1; i < res.cauchy_gaps.size(); ++i)
    if (res.cauchy_gaps[i] >= res.cauchy_gaps[i - 1])
      throw std::runtime_error("solve_prandtl0: theta-continuation Cauchy gap did not decrease");
  res.traj = std::move(*prev);
  return res;
}

MonotoneWindowReport monotone_window_check(const Trajectory& traj, const InitialData& data) {
  MonotoneWindowReport rep;
  rep.threshold = 0.5 * data.U0(0.0, 1);
  const Grid1D& g = traj.grid;
  std::size_t j0 = 0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (data.U0(g.nodes[j], 1) < rep.threshold) break;
    j0 = j;
  }
  rep.y0 = g.nodes[j0];
  const DiffOps ops(g);
  double mn = 1e300;
  for (std::size_t i = 0; i < traj.slices.size(); ++i) {
    const auto uy = ops.apply(traj.u_of(i), 1);
    for (std::size_t j = 0; j <= j0; ++j) mn = std::min(mn, uy[j]);
  }
  rep.min_du = mn;
  rep.pass = mn >= rep.threshold;
  return rep;
}

double continuity_residual(const Trajectory& traj) {
  double worst = 0.0;
  const Grid1D& g = traj.grid;
  for (std::size_t i = 1; i < traj.slices.size(); ++i) {
    const auto& cur = traj.slices[i];
    const auto& prv = traj.slices[i - 1];
    const double dx = cur.x - prv.x;
    for (std::size_t j = 1; j < g.size(); ++j) {
      const double fj = (cur.ubar[j] - prv.ubar[j]) / dx;
      const double fjm = (cur.ubar[j - 1] - prv.ubar[j - 1]) / dx;
      const double dv = (cur.vbar[j] - cur.vbar[j - 1]) / g.spacing(j - 1);
      worst = std::max(worst, std::abs(dv + 0.5 * (fj + fjm)));
    }
  }
  return worst;
}

InvariantMargins invariant_margins(const Trajectory& traj) {
  InvariantMargins m;
  m.u_min = 1e300;
  m.T_min = 1e300;
  m.T_max = -1e300;
  m.u_max_excess = -1e300;
  for (std::size_t i = 0; i < traj.slices.size(); ++i) {
    const auto& s = traj.slices[i];
    for (std::size_t j = 0; j < s.T.size(); ++j) {
      const double rho = 1.0 / s.T[j];
      m.rho_T_gap = std::max(m.rho_T_gap, std::abs(rho * s.T[j] - 1.0));
      const double u = s.T[j] * s.ubar[j];
      m.u_min = std::min(m.u_min, u);
      m.u_max_excess = std::max(m.u_max_excess, u - traj.u_cap);
      m.T_min = std::min(m.T_min, s.T[j]);
      m.T_max = std::max(m.T_max, s.T[j]);
    }
  }
  m.continuity = continuity_residual(traj);
  return m;
}

}  // namespace cpl
