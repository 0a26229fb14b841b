#include "cpl/prandtl_linear.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "cpl/diagnostics.hpp"
#include "cpl/tridiag.hpp"

namespace cpl {

namespace {

double binom(int k, int i) {
  double b = 1.0;
  for (int j = 1; j <= i; ++j) b = b * static_cast<double>(k - j + 1) / static_cast<double>(j);
  return b;
}

std::vector<double> dx_vector(const std::vector<double>& xs, const std::vector<double>& vals,
                              int k) {
  std::vector<double> out(vals.size(), 0.0);
  for (std::size_t i = static_cast<std::size_t>(k); i < vals.size(); ++i) {
    std::vector<double> win(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(i + 1));
    XStencil st(win, k);
    std::vector<double> v(vals.begin() + static_cast<std::ptrdiff_t>(i + 1 - st.window()),
                          vals.begin() + static_cast<std::ptrdiff_t>(i + 1));
    out[i] = st.apply(v);
  }
  return out;
}

}  // namespace

LinearBase LinearBase::from_trajectory(const Trajectory& traj, double theta_lin) {
  const std::size_t nx = traj.slices.size(), ny = traj.grid.size();
  LinearBase b;
  b.theta = theta_lin;
  b.mu = traj.mu;
  b.kappa = traj.kappa;
  b.grid = traj.grid;
  b.xs = traj.xs();
  b.u0 = Array2D(nx, ny);
  b.v0 = Array2D(nx, ny);
  b.T0 = Array2D(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      b.T0(i, j) = traj.slices[i].T[j];
      b.u0(i, j) = b.T0(i, j) * traj.slices[i].ubar[j];
      b.v0(i, j) = b.T0(i, j) * traj.slices[i].vbar[j];
    }
  const DiffOps ops(b.grid);
  b.rho0 = Array2D(nx, ny);
  b.m = Array2D(nx, ny);
  b.hu = Array2D(nx, ny);
  b.rv = Array2D(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      b.rho0(i, j) = 1.0 / b.T0(i, j);
      b.m(i, j) = b.rho0(i, j) * b.u0(i, j);
      b.hu(i, j) = (theta_lin + b.u0(i, j)) / b.T0(i, j);
      b.rv(i, j) = b.rho0(i, j) * b.v0(i, j);
    }
  b.u0_y = dy_field(b.u0, ops, 1);
  b.u0_yy = dy_field(b.u0, ops, 2);
  b.u0_x = dx_field(b.u0, b.xs, 1);
  b.v0_y = dy_field(b.v0, ops, 1);
  b.T0_y = dy_field(b.T0, ops, 1);
  b.T0_yy = dy_field(b.T0, ops, 2);
  b.T0_x = dx_field(b.T0, b.xs, 1);
  b.m_y = dy_field(b.m, ops, 1);
  b.m_yy = dy_field(b.m, ops, 2);
  b.m_x = dx_field(b.m, b.xs, 1);
  b.hu_y = dy_field(b.hu, ops, 1);
  b.phi = Array2D(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) b.phi(i, j) = b.hu_y(i, j) / b.hu(i, j);
  b.phi_x = dx_field(b.phi, b.xs, 1);
  return b;
}

LinearBase LinearBase::from_closures(const std::function<double(double, double)>& u0f,
                                     const std::function<double(double, double)>& v0f,
                                     const std::function<double(double, double)>& T0f,
                                     const Grid1D& gx, const Grid1D& gy, double theta_lin,
                                     double mu, double kappa) {
  Trajectory traj;
  traj.grid = gy;
  traj.theta = 0.0;
  traj.mu = mu;
  traj.kappa = kappa;
  traj.slices.resize(gx.size());
  for (std::size_t i = 0; i < gx.size(); ++i) {
    auto& s = traj.slices[i];
    s.x = gx.nodes[i];
    s.ubar.resize(gy.size());
    s.vbar.resize(gy.size());
    s.T.resize(gy.size());
    for (std::size_t j = 0; j < gy.size(); ++j) {
      const double T = T0f(s.x, gy.nodes[j]);
      s.T[j] = T;
      s.ubar[j] = u0f(s.x, gy.nodes[j]) / T;
      s.vbar[j] = v0f(s.x, gy.nodes[j]) / T;
    }
  }
  return from_trajectory(traj, theta_lin);
}

LinearInputs zero_inputs(std::size_t nx, std::size_t ny, ThermalMode mode) {
  LinearInputs in;
  in.G1 = Array2D(nx, ny, 0.0);
  in.G2 = Array2D(nx, ny, 0.0);
  in.G3 = Array2D(nx, ny, 0.0);
  in.G4 = Array2D(nx, ny, 0.0);
  in.u_init.assign(ny, 0.0);
  in.T_init.assign(ny, 0.0);
  in.u_wall.assign(nx, 0.0);
  in.T_wall.assign(nx, 0.0);
  in.mode = mode;
  return in;
}

XiProfile make_xi(const Grid1D& gy, int variant) {
  // xi = chi(y) - c * eta(y): equal to 1 with all derivatives vanishing at the
  // wall, compact support, discrete integral exactly zero. The bump is kept
  // wide so the lift stays resolved on desk-scale grids.
  const Cutoff& cut = standard_cutoff();
  const double start = (variant == 0) ? 1.0 : 1.5;
  const double width = (variant == 0) ? 4.0 : 3.0;  // eta support [start, start+width]
  auto eta = [start, width](double y, int k) -> double {
    const double t = (y - start) / width;
    if (t <= 0.0 || t >= 1.0) return 0.0;
    if (k == 0) return 64.0 * std::pow(t * (1.0 - t), 3);
    // second derivative of 64 t^3 (1-t)^3
    const double d2 = 6.0 * t - 36.0 * t * t + 60.0 * t * t * t - 30.0 * t * t * t * t;
    return 64.0 * d2 / (width * width);
  };
  XiProfile p;
  const std::size_t n = gy.size();
  std::vector<double> chi(n), etav(n);
  for (std::size_t j = 0; j < n; ++j) {
    chi[j] = cut.chi(gy.nodes[j]);
    etav[j] = eta(gy.nodes[j], 0);
  }
  const double c = trapz(chi, gy) / trapz(etav, gy);
  p.xi.resize(n);
  p.xi_yy.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    p.xi[j] = chi[j] - c * etav[j];
    p.xi_yy[j] = cut.d2chi(gy.nodes[j]) - c * eta(gy.nodes[j], 2);
  }
  p.Ixi = cumtrapz(p.xi, gy);
  return p;
}

namespace {

struct RowCtx {
  const LinearBase& b;
  const LinearInputs& in;
  const Homogenized& h;
  const Array2D& G1_y;
  std::size_t i;
};

// H1(bar-u, T_p): forcing of the transformed heat equation
std::vector<double> H1_row(const RowCtx& c, const std::vector<double>& ub,
                           const std::vector<double>& ub_y, const std::vector<double>& Tp,
                           const std::vector<double>& Tp_y) {
  const std::size_t ny = ub.size();
  std::vector<double> out(ny);
  const double mu = c.b.mu;
  const std::size_t i = c.i;
  for (std::size_t j = 0; j < ny; ++j) {
    const double u0y = c.b.u0_y(i, j);
    out[j] = 2.0 * mu * u0y * (c.b.T0(i, j) * ub_y[j] + c.b.T0_y(i, j) * ub[j]) +
             2.0 * mu * u0y * (c.b.m(i, j) * Tp_y[j] + c.b.m_y(i, j) * Tp[j]) +
             c.in.G4(i, j) -
             2.0 * mu * u0y * (c.in.G1(i, j) * c.b.u0(i, j) + c.h.P1(i, j) * u0y) +
             (c.b.u0(i, j) * c.h.P1x(i, j) + c.b.v0(i, j) * c.in.G1(i, j)) -
             c.in.G2(i, j) * c.b.T0(i, j) - 2.0 * c.h.P2(i, j) * c.b.T0_y(i, j);
  }
  return out;
}

// Q1(bar-u, T_p): forcing of the transformed momentum equation
std::vector<double> Q1_row(const RowCtx& c, const std::vector<double>& ub,
                           const std::vector<double>& ub_y, const std::vector<double>& Tp,
                           const std::vector<double>& Tp_y, const std::vector<double>& Tp_yy) {
  const std::size_t ny = ub.size();
  const auto h1 = H1_row(c, ub, ub_y, Tp, Tp_y);
  std::vector<double> out(ny);
  const double mu = c.b.mu, kappa = c.b.kappa;
  const std::size_t i = c.i;
  for (std::size_t j = 0; j < ny; ++j) {
    const double u0 = c.b.u0(i, j), v0 = c.b.v0(i, j), u0y = c.b.u0_y(i, j);
    const double m = c.b.m(i, j);
    out[j] = (2.0 * mu * c.b.T0_y(i, j) - v0) * ub_y[j] +
             (mu * c.b.T0_yy(i, j) - c.b.rho0(i, j) * v0 * c.b.T0_y(i, j) -
              c.b.u0_x(i, j)) *
                 ub[j] -
             0.5 * m * h1[j] - 0.5 * kappa * m * Tp_yy[j] +
             mu * (c.b.m_yy(i, j) * Tp[j] + 2.0 * c.b.m_y(i, j) * Tp_y[j] + m * Tp_yy[j]) -
             c.b.rho0(i, j) * (u0 * c.b.m_x(i, j) + v0 * c.b.m_y(i, j)) * Tp[j] +
             c.b.rho0(i, j) * (u0 * (c.h.P1x(i, j) * u0 + c.h.P1(i, j) * c.b.u0_x(i, j)) +
                               v0 * (c.in.G1(i, j) * u0 + c.h.P1(i, j) * u0y)) +
             c.in.G3(i, j) - u0y * c.h.P2(i, j) - c.h.P1x(i, j) -
             mu * (c.b.u0_yy(i, j) * c.h.P1(i, j) + 2.0 * u0y * c.in.G1(i, j) +
                   u0 * c.G1_y(i, j));
  }
  return out;
}

// homogenized Q/H at slice i from the lifted fields (needs the xi slope)
std::vector<double> Q_hom_row(const RowCtx& c, const std::vector<double>& xi_y,
                              const std::vector<double>& u_hom,
                              const std::vector<double>& u_hom_y,
                              const std::vector<double>& Th, const std::vector<double>& Th_y,
                              const std::vector<double>& Th_yy) {
  const std::size_t ny = u_hom.size();
  const std::size_t i = c.i;
  std::vector<double> ub(ny), uby(ny), tp(ny), tpy(ny), tpyy(ny);
  for (std::size_t j = 0; j < ny; ++j) {
    ub[j] = u_hom[j] + c.h.ell[i] * c.h.xi.xi[j];
    uby[j] = u_hom_y[j] + c.h.ell[i] * xi_y[j];
    tp[j] = Th[j] + c.h.TB(i, j);
    tpy[j] = Th_y[j] + c.h.TB_y(i, j);
    tpyy[j] = Th_yy[j] + c.h.TB_yy(i, j);
  }
  auto out = Q1_row(c, ub, uby, tp, tpy, tpyy);
  // the v-lift enters with +I_xi so that bold continuity u_x + v_y is preserved
  for (std::size_t j = 0; j < ny; ++j)
    out[j] += -c.b.u0(i, j) * c.h.ell_x[i] * c.h.xi.xi[j] +
              (c.b.u0_y(i, j) - c.b.m(i, j) * c.b.T0_y(i, j)) * c.h.ell_x[i] *
                  c.h.xi.Ixi[j] +
              c.b.mu * c.b.T0(i, j) * c.h.ell[i] * c.h.xi.xi_yy[j];
  return out;
}

std::vector<double> H_hom_row(const RowCtx& c, const std::vector<double>& xi_y,
                              const std::vector<double>& u_hom,
                              const std::vector<double>& u_hom_y,
                              const std::vector<double>& Th,
                              const std::vector<double>& Th_y) {
  const std::size_t ny = u_hom.size();
  const std::size_t i = c.i;
  std::vector<double> ub(ny), uby(ny), tp(ny), tpy(ny);
  for (std::size_t j = 0; j < ny; ++j) {
    ub[j] = u_hom[j] + c.h.ell[i] * c.h.xi.xi[j];
    uby[j] = u_hom_y[j] + c.h.ell[i] * xi_y[j];
    tp[j] = Th[j] + c.h.TB(i, j);
    tpy[j] = Th_y[j] + c.h.TB_y(i, j);
  }
  auto out = H1_row(c, ub, uby, tp, tpy);
  for (std::size_t j = 0; j < ny; ++j)
    out[j] += -2.0 * c.b.m(i, j) * c.h.TB_x(i, j) - 2.0 * c.b.rv(i, j) * c.h.TB_y(i, j) +
              c.b.kappa * c.h.TB_yy(i, j) -
              2.0 * c.b.T0_x(i, j) * c.h.ell[i] * c.h.xi.xi[j] +
              2.0 * c.b.T0_y(i, j) * c.h.ell_x[i] * c.h.xi.Ixi[j];
  return out;
}

}  // namespace

Homogenized homogenize(const LinearBase& base, const LinearInputs& in, int xi_variant) {
  const std::size_t nx = base.xs.size(), ny = base.grid.size();
  if (in.G1.nx() != nx || in.G1.ny() != ny)
    throw std::invalid_argument("homogenize: forcing shape mismatch");
  Homogenized h;
  h.xi = make_xi(base.grid, xi_variant);

  h.P1 = Array2D(nx, ny);
  h.P2 = Array2D(nx, ny);
  double g1max = 0.0, g1far = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    std::vector<double> g1(ny), g2(ny);
    for (std::size_t j = 0; j < ny; ++j) {
      g1[j] = in.G1(i, j);
      g2[j] = in.G2(i, j);
      g1max = std::max(g1max, std::abs(g1[j]));
    }
    g1far = std::max(g1far, std::abs(g1[ny - 1]));
    const auto I1 = cumtrapz(g1, base.grid);
    const auto I2 = cumtrapz(g2, base.grid);
    for (std::size_t j = 0; j < ny; ++j) {
      h.P1(i, j) = I1[j] - I1[ny - 1];  // -int_y^{ymax} G1
      h.P2(i, j) = I2[j];
    }
  }
  h.decay_violation = (g1max > 0.0) ? g1far / g1max : 0.0;
  if (g1max > 0.0 && g1far > 1e-8 * g1max)
    throw std::runtime_error("homogenize: G1 has not decayed by y_max");
  h.P1x = dx_field(h.P1, base.xs, 1);
  h.P1_y = in.G1;

  const Cutoff& cut = standard_cutoff();
  h.TB = Array2D(nx, ny);
  h.TB_y = Array2D(nx, ny);
  h.TB_yy = Array2D(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double y = base.grid.nodes[j];
      const double tb = in.T_wall[i];
      if (in.mode == ThermalMode::NBC) {
        h.TB(i, j) = y * cut.chi(y) * tb;
        h.TB_y(i, j) = (cut.chi(y) + y * cut.dchi(y)) * tb;
        h.TB_yy(i, j) = (2.0 * cut.dchi(y) + y * cut.d2chi(y)) * tb;
      } else {
        h.TB(i, j) = cut.chi(y) * tb;
        h.TB_y(i, j) = cut.dchi(y) * tb;
        h.TB_yy(i, j) = cut.d2chi(y) * tb;
      }
    }
  h.TB_x = dx_field(h.TB, base.xs, 1);

  h.ell.resize(nx);
  for (std::size_t i = 0; i < nx; ++i) h.ell[i] = base.rho0(i, 0) * in.u_wall[i];
  h.ell_x = dx_vector(base.xs, h.ell, 1);
  // slice 0 pairs with the forward difference used when recovering bold-v there
  if (nx > 1) h.ell_x[0] = (h.ell[1] - h.ell[0]) / (base.xs[1] - base.xs[0]);

  h.u_hom_init.resize(ny);
  h.th_init.resize(ny);
  for (std::size_t j = 0; j < ny; ++j) {
    const double r0 = base.rho0(0, j);
    h.u_hom_init[j] = r0 * in.u_init[j] +
                      base.u0(0, j) * (r0 * h.P1(0, j) - r0 * r0 * in.T_init[j]) -
                      h.ell[0] * h.xi.xi[j];
    h.th_init[j] = in.T_init[j] - h.TB(0, j);
  }
  return h;
}

LayerSolution solve_linear_layer(const LinearBase& base, const LinearInputs& in,
                                 int xi_variant, const LinearMarchOptions& opts) {
  const std::size_t nx = base.xs.size(), ny = base.grid.size();
  Homogenized hom = homogenize(base, in, xi_variant);
  const DiffOps ops(base.grid);
  const Array2D G1_y = dy_field(in.G1, ops, 1);
  const Grid1D& gy = base.grid;
  const std::vector<double> xi_y = ops.apply(hom.xi.xi, 1);

  LayerSolution sol;
  sol.Psi = Array2D(nx, ny);
  sol.psi = Array2D(nx, ny);
  sol.Theta = Array2D(nx, ny);

  {
    std::vector<double> psi0 = cumtrapz(hom.u_hom_init, gy);
    for (std::size_t j = 0; j < ny; ++j) {
      sol.psi(0, j) = psi0[j];
      sol.Psi(0, j) = hom.u_hom_init[j] - base.phi(0, j) * psi0[j];
      sol.Theta(0, j) = hom.th_init[j];
    }
  }

  std::vector<std::array<double, 3>> d1(ny), d2(ny);
  for (std::size_t j = 1; j + 1 < ny; ++j) {
    std::vector<double> pts = {gy.nodes[j - 1], gy.nodes[j], gy.nodes[j + 1]};
    const auto w1 = fd_weights(pts, gy.nodes[j], 1);
    const auto w2 = fd_weights(pts, gy.nodes[j], 2);
    d1[j] = {w1[0], w1[1], w1[2]};
    d2[j] = {w2[0], w2[1], w2[2]};
  }

  const bool nbc = (in.mode == ThermalMode::NBC);
  for (std::size_t i = 1; i < nx; ++i) {
    const double dx = base.xs[i] - base.xs[i - 1];
    RowCtx ctx{base, in, hom, G1_y, i};
    std::vector<double> Psi_prev(ny), Th_prev(ny), psi_prev(ny);
    for (std::size_t j = 0; j < ny; ++j) {
      Psi_prev[j] = sol.Psi(i - 1, j);
      Th_prev[j] = sol.Theta(i - 1, j);
      psi_prev[j] = sol.psi(i - 1, j);
    }
    std::vector<double> Psi_it = Psi_prev, Th_it = Th_prev, psi_it = psi_prev;
    std::vector<double> Psi_new(ny), Th_new(ny), psi_new(ny);

    int iter = 0;
    for (;; ++iter) {
      if (iter >= opts.picard_max)
        throw std::runtime_error("solve_linear_layer: coupled iteration stalled");

      std::vector<double> u_it(ny);
      for (std::size_t j = 0; j < ny; ++j) u_it[j] = Psi_it[j] + base.phi(i, j) * psi_it[j];
      const auto u_it_y = ops.apply(u_it, 1);
      const auto Th_y = ops.apply(Th_it, 1);
      const auto Th_yy = ops.apply(Th_it, 2);
      const auto Q = Q_hom_row(ctx, xi_y, u_it, u_it_y, Th_it, Th_y, Th_yy);

      std::vector<double> phipsi(ny);
      for (std::size_t j = 0; j < ny; ++j) phipsi[j] = base.phi(i, j) * psi_it[j];
      const auto phipsi_yy = ops.apply(phipsi, 2);

      Tridiag sys(ny);
      sys.b[0] = 1.0;
      sys.r[0] = 0.0;
      sys.b[ny - 1] = 1.0;
      sys.r[ny - 1] = 0.0;
      for (std::size_t j = 1; j + 1 < ny; ++j) {
        const double hu = base.hu(i, j);
        sys.a[j] = -base.mu * d2[j][0];
        sys.b[j] = hu / dx - base.mu * d2[j][1];
        sys.c[j] = -base.mu * d2[j][2];
        sys.r[j] = hu * Psi_prev[j] / dx + Q[j] / base.T0(i, j) + base.mu * phipsi_yy[j] -
                   hu * base.phi_x(i, j) * psi_it[j];
        if (opts.sources && opts.sources->s_u)
          sys.r[j] += opts.sources->s_u(base.xs[i], gy.nodes[j]);
      }
      Psi_new = sys.solve();

      std::vector<double> ratio(ny);
      for (std::size_t j = 0; j < ny; ++j) ratio[j] = Psi_new[j] / base.hu(i, j);
      const auto Ir = cumtrapz(ratio, gy);
      for (std::size_t j = 0; j < ny; ++j) psi_new[j] = base.hu(i, j) * Ir[j];
      std::vector<double> u_new(ny);
      for (std::size_t j = 0; j < ny; ++j)
        u_new[j] = Psi_new[j] + base.phi(i, j) * psi_new[j];
      const auto u_new_y = ops.apply(u_new, 1);

      const auto H = H_hom_row(ctx, xi_y, u_new, u_new_y, Th_it, Th_y);
      Tridiag heat(ny);
      heat.b[ny - 1] = 1.0;
      heat.r[ny - 1] = 0.0;
      for (std::size_t j = 1; j + 1 < ny; ++j) {
        const double hu = base.hu(i, j);
        const double adv = 2.0 * base.rv(i, j);
        heat.a[j] = adv * d1[j][0] - base.kappa * d2[j][0];
        heat.b[j] = 2.0 * hu / dx + adv * d1[j][1] - base.kappa * d2[j][1];
        heat.c[j] = adv * d1[j][2] - base.kappa * d2[j][2];
        const double psi_x = (psi_new[j] - psi_prev[j]) / dx;
        heat.r[j] = 2.0 * hu * Th_prev[j] / dx + H[j] - 2.0 * base.T0_x(i, j) * u_new[j] +
                    2.0 * base.T0_y(i, j) * psi_x;
        if (opts.sources && opts.sources->s_T)
          heat.r[j] += opts.sources->s_T(base.xs[i], gy.nodes[j]);
      }
      if (nbc) {
        heat.b[1] += heat.a[1] * 4.0 / 3.0;
        heat.c[1] -= heat.a[1] / 3.0;
        heat.a[1] = 0.0;
        heat.b[0] = 1.0;
        heat.r[0] = 0.0;
      } else {
        heat.b[0] = 1.0;
        heat.r[0] = 0.0;
      }
      Th_new = heat.solve();
      if (nbc) Th_new[0] = (4.0 * Th_new[1] - Th_new[2]) / 3.0;

      double delta = 0.0;
      for (std::size_t j = 0; j < ny; ++j)
        delta = std::max(delta,
                         std::abs(Psi_new[j] - Psi_it[j]) + std::abs(Th_new[j] - Th_it[j]));
      Psi_it = Psi_new;
      Th_it = Th_new;
      psi_it = psi_new;
      if (delta <= opts.picard_tol) break;
    }
    for (std::size_t j = 0; j < ny; ++j) {
      sol.Psi(i, j) = Psi_new[j];
      sol.psi(i, j) = psi_new[j];
      sol.Theta(i, j) = Th_new[j];
    }
  }

  // recovery
  sol.u = Array2D(nx, ny);
  sol.v = Array2D(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      sol.u(i, j) = sol.Psi(i, j) + base.phi(i, j) * sol.psi(i, j);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 1; i < nx; ++i)
      sol.v(i, j) = -(sol.psi(i, j) - sol.psi(i - 1, j)) / (base.xs[i] - base.xs[i - 1]);
    sol.v(0, j) =
        (nx > 1) ? -(sol.psi(1, j) - sol.psi(0, j)) / (base.xs[1] - base.xs[0]) : 0.0;
  }

  sol.u_p = Array2D(nx, ny);
  sol.T_p = Array2D(nx, ny);
  sol.rho_p = Array2D(nx, ny);
  sol.frak_v = Array2D(nx, ny);
  sol.v_p = Array2D(nx, ny);
  sol.frak_v_far.resize(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const double ub = sol.u(i, j) + hom.ell[i] * hom.xi.xi[j];
      const double vb = sol.v(i, j) - hom.ell_x[i] * hom.xi.Ixi[j];
      const double Tp = sol.Theta(i, j) + hom.TB(i, j);
      const double r0 = base.rho0(i, j);
      const double rp = r0 * hom.P1(i, j) - r0 * r0 * Tp;
      sol.T_p(i, j) = Tp;
      sol.rho_p(i, j) = rp;
      sol.u_p(i, j) = base.T0(i, j) * ub - rp * base.T0(i, j) * base.u0(i, j);
      sol.frak_v(i, j) = base.T0(i, j) * vb - rp * base.T0(i, j) * base.v0(i, j) +
                         base.T0(i, j) * hom.P2(i, j);
    }
    sol.frak_v_far[i] = sol.frak_v(i, ny - 1);
    for (std::size_t j = 0; j < ny; ++j)
      sol.v_p(i, j) = sol.frak_v(i, j) - sol.frak_v_far[i];
  }
  return sol;
}

namespace {

// Q(0,.) and H(0,.) evaluated on the current initial fields
std::pair<std::vector<double>, std::vector<double>> corner_rows(const LinearBase& base,
                                                                const LinearInputs& in,
                                                                const Homogenized& hom) {
  const std::size_t ny = base.grid.size();
  const DiffOps ops(base.grid);
  const Array2D G1_y = dy_field(in.G1, ops, 1);
  RowCtx ctx{base, in, hom, G1_y, 0};
  const std::vector<double> xi_y = ops.apply(hom.xi.xi, 1);
  std::vector<double> u0row(ny), th0row(ny);
  for (std::size_t j = 0; j < ny; ++j) {
    u0row[j] = hom.u_hom_init[j];
    th0row[j] = hom.th_init[j];
  }
  const auto u_y = ops.apply(u0row, 1);
  const auto th_y = ops.apply(th0row, 1);
  const auto th_yy = ops.apply(th0row, 2);
  auto Q = Q_hom_row(ctx, xi_y, u0row, u_y, th0row, th_y, th_yy);
  auto H = H_hom_row(ctx, xi_y, u0row, u_y, th0row, th_y);
  return {Q, H};
}

}  // namespace

CornerCompatReport corner_compat_report(const LinearBase& base, const LinearInputs& in,
                                        int xi_variant) {
  Homogenized hom = homogenize(base, in, xi_variant);
  auto [Q, H] = corner_rows(base, in, hom);
  const std::size_t ny = base.grid.size();
  const DiffOps ops(base.grid);
  std::vector<double> u0row(ny), th0row(ny), mom(ny), heat(ny);
  for (std::size_t j = 0; j < ny; ++j) {
    u0row[j] = hom.u_hom_init[j];
    th0row[j] = hom.th_init[j];
  }
  const auto u_yy = ops.apply(u0row, 2);
  const auto th_y = ops.apply(th0row, 1);
  const auto th_yy = ops.apply(th0row, 2);
  for (std::size_t j = 0; j < ny; ++j) {
    mom[j] = base.mu * u_yy[j] + Q[j] / base.T0(0, j);
    heat[j] = base.kappa * th_yy[j] - 2.0 * base.rv(0, j) * th_y[j] -
              2.0 * base.T0_x(0, j) * u0row[j] + H[j];
  }
  CornerCompatReport rep;
  rep.mom_value = mom[0];
  rep.mom_slope = ops.at(mom, 1, 0);
  rep.heat_value = heat[0];
  return rep;
}

void compatibility_corner_fix(const LinearBase& base, LinearInputs& in, int xi_variant,
                              int iters) {
  const std::size_t ny = base.grid.size();
  const Cutoff& cut = standard_cutoff();
  for (int it = 0; it < iters; ++it) {
    auto rep = corner_compat_report(base, in, xi_variant);
    // wall-flat profiles: bold-u gains (c2 y^2/2 + c3 y^3/6) chi,
    // Theta gains d2 y^2/2 chi; mapped back to the physical data
    const double c2 = -rep.mom_value / base.mu;
    const double c3 = -rep.mom_slope / base.mu;
    const double d2 = -rep.heat_value / base.kappa;
    for (std::size_t j = 0; j < ny; ++j) {
      const double y = base.grid.nodes[j];
      const double chi = cut.chi(y);
      const double du = (0.5 * c2 * y * y + c3 * y * y * y / 6.0) * chi;
      const double dth = 0.5 * d2 * y * y * chi;
      in.T_init[j] += dth;
      in.u_init[j] += base.T0(0, j) * du + base.u0(0, j) * base.rho0(0, j) * dth;
    }
  }
}

LinearSystemResiduals linear_system_residuals(const LinearBase& base, const LinearInputs& in,
                                              const Array2D& rho_p, const Array2D& u_p,
                                              const Array2D& v_p, const Array2D& T_p) {
  const std::size_t nx = base.xs.size(), ny = base.grid.size();
  const DiffOps ops(base.grid);

  Array2D pr(nx, ny), mflux_u(nx, ny), mflux_v(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      pr(i, j) = base.rho0(i, j) * T_p(i, j) + base.T0(i, j) * rho_p(i, j);
      mflux_u(i, j) = base.rho0(i, j) * u_p(i, j) + rho_p(i, j) * base.u0(i, j);
      mflux_v(i, j) = base.rho0(i, j) * v_p(i, j) + rho_p(i, j) * base.v0(i, j);
    }
  const Array2D pr_y = dy_field(pr, ops, 1);
  const Array2D pr_x = dx_field(pr, base.xs, 1);
  const Array2D mu_x = dx_field(mflux_u, base.xs, 1);
  const Array2D mv_y = dy_field(mflux_v, ops, 1);
  const Array2D up_x = dx_field(u_p, base.xs, 1);
  const Array2D up_y = dy_field(u_p, ops, 1);
  const Array2D up_yy = dy_field(u_p, ops, 2);
  const Array2D Tp_x = dx_field(T_p, base.xs, 1);
  const Array2D Tp_y = dy_field(T_p, ops, 1);
  const Array2D Tp_yy = dy_field(T_p, ops, 2);
  const Array2D vp_y = dy_field(v_p, ops, 1);

  LinearSystemResiduals r;
  r.eq1 = Array2D(nx, ny);
  r.eq2 = Array2D(nx, ny);
  r.eq3 = Array2D(nx, ny);
  r.eq4 = Array2D(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double r0 = base.rho0(i, j), u0 = base.u0(i, j), v0 = base.v0(i, j);
      r.eq1(i, j) = pr_y(i, j) - in.G1(i, j);
      r.eq2(i, j) = mu_x(i, j) + mv_y(i, j) - in.G2(i, j);
      r.eq3(i, j) = r0 * (u0 * up_x(i, j) + v0 * up_y(i, j)) +
                    r0 * (u_p(i, j) * base.u0_x(i, j) + v_p(i, j) * base.u0_y(i, j)) +
                    rho_p(i, j) * (u0 * base.u0_x(i, j) + v0 * base.u0_y(i, j)) +
                    pr_x(i, j) - base.mu * up_yy(i, j) - in.G3(i, j);
      r.eq4(i, j) = r0 * (u0 * Tp_x(i, j) + v0 * Tp_y(i, j)) +
                    r0 * (u_p(i, j) * base.T0_x(i, j) + v_p(i, j) * base.T0_y(i, j)) +
                    rho_p(i, j) * (u0 * base.T0_x(i, j) + v0 * base.T0_y(i, j)) +
                    pr(i, j) * (base.u0_x(i, j) + base.v0_y(i, j)) +
                    base.rho0(i, j) * base.T0(i, j) * (up_x(i, j) + vp_y(i, j)) -
                    base.kappa * Tp_yy(i, j) -
                    2.0 * base.mu * up_y(i, j) * base.u0_y(i, j) - in.G4(i, j);
    }
  return r;
}

TransformedResiduals transformed_residuals(const LinearBase& base, const LinearInputs& in,
                                           const Homogenized& hom, const Array2D& ub,
                                           const Array2D& vb, const Array2D& T_p) {
  const std::size_t nx = base.xs.size(), ny = base.grid.size();
  const DiffOps ops(base.grid);
  const Array2D G1_y = dy_field(in.G1, ops, 1);
  const Array2D ub_x = dx_field(ub, base.xs, 1);
  const Array2D ub_y = dy_field(ub, ops, 1);
  const Array2D ub_yy = dy_field(ub, ops, 2);
  const Array2D vb_y = dy_field(vb, ops, 1);
  const Array2D Tp_x = dx_field(T_p, base.xs, 1);
  const Array2D Tp_y = dy_field(T_p, ops, 1);
  const Array2D Tp_yy = dy_field(T_p, ops, 2);

  TransformedResiduals r;
  r.cont = Array2D(nx, ny);
  r.mom = Array2D(nx, ny);
  r.heat = Array2D(nx, ny);
  for (std::size_t i = 0; i < nx; ++i) {
    RowCtx ctx{base, in, hom, G1_y, i};
    std::vector<double> ubr(ny), ubyr(ny), tpr(ny), tpyr(ny), tpyyr(ny);
    for (std::size_t j = 0; j < ny; ++j) {
      ubr[j] = ub(i, j);
      ubyr[j] = ub_y(i, j);
      tpr[j] = T_p(i, j);
      tpyr[j] = Tp_y(i, j);
      tpyyr[j] = Tp_yy(i, j);
    }
    const auto q1 = Q1_row(ctx, ubr, ubyr, tpr, tpyr, tpyyr);
    const auto h1 = H1_row(ctx, ubr, ubyr, tpr, tpyr);
    for (std::size_t j = 0; j < ny; ++j) {
      r.cont(i, j) = ub_x(i, j) + vb_y(i, j);
      r.mom(i, j) = base.u0(i, j) * ub_x(i, j) +
                    (base.u0_y(i, j) - base.m(i, j) * base.T0_y(i, j)) * vb(i, j) -
                    base.mu * base.T0(i, j) * ub_yy(i, j) - q1[j];
      r.heat(i, j) = 2.0 * base.m(i, j) * Tp_x(i, j) + 2.0 * base.rv(i, j) * Tp_y(i, j) +
                     2.0 * base.T0_x(i, j) * ub(i, j) + 2.0 * base.T0_y(i, j) * vb(i, j) -
                     base.kappa * Tp_yy(i, j) - h1[j];
    }
  }
  return r;
}

LinearEntropyResiduals linear_entropy_residual(const LinearBase& base, const Homogenized& hom,
                                               const LayerSolution& sol,
                                               const LinearInputs& in, int k,
                                               const Weight& w) {
  if (k < 1 || k > 2) throw std::invalid_argument("linear_entropy_residual: k in {1,2}");
  const std::size_t nx = base.xs.size(), ny = base.grid.size();
  const DiffOps ops(base.grid);
  const Array2D G1_y = dy_field(in.G1, ops, 1);

  Array2D q(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) q(i, j) = sol.psi(i, j) / base.hu(i, j);
  const Array2D& Th = sol.Theta;
  const Array2D psi_y = dy_field(sol.psi, ops, 1);
  const Array2D psi_x = dx_field(sol.psi, base.xs, 1);

  // H field, evaluated on the (lifted) solution fields
  Array2D H(nx, ny);
  {
    const Array2D u_hom = sol.u.nx() ? sol.u : [&] {
      Array2D u(nx, ny);
      for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) u(i, j) = psi_y(i, j);
      return u;
    }();
    const Array2D u_y = dy_field(u_hom, ops, 1);
    const Array2D Th_y0 = dy_field(Th, ops, 1);
    const std::vector<double> xi_y = ops.apply(hom.xi.xi, 1);
    for (std::size_t i = 0; i < nx; ++i) {
      RowCtx ctx{base, in, hom, G1_y, i};
      std::vector<double> ur(ny), uyr(ny), thr(ny), thyr(ny);
      for (std::size_t j = 0; j < ny; ++j) {
        ur[j] = u_hom(i, j);
        uyr[j] = u_y(i, j);
        thr[j] = Th(i, j);
        thyr[j] = Th_y0(i, j);
      }
      const auto h = H_hom_row(ctx, xi_y, ur, uyr, thr, thyr);
      for (std::size_t j = 0; j < ny; ++j) H(i, j) = h[j];
    }
  }

  const Array2D Th_k = dx_field(Th, base.xs, k);
  const Array2D q_k = dx_field(q, base.xs, k);
  Array2D S(nx, ny), P(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      P(i, j) = base.T0_y(i, j) * q_k(i, j);
      S(i, j) = Th_k(i, j) - P(i, j);
    }
  const Array2D S_x = dx_field(S, base.xs, 1);
  const Array2D S_y = dy_field(S, ops, 1);
  const Array2D S_yy = dy_field(S, ops, 2);
  const Array2D P_y = dy_field(P, ops, 1);
  const Array2D P_yy = dy_field(P, ops, 2);
  const Array2D T0y_x = dx_field(base.T0_y, base.xs, 1);
  const Array2D Hk = dx_field(H, base.xs, k);

  Array2D TxPy(nx, ny), TyPx(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      TxPy(i, j) = base.T0_x(i, j) * psi_y(i, j);
      TyPx(i, j) = base.T0_y(i, j) * psi_x(i, j);
    }
  const Array2D TxPy_k = dx_field(TxPy, base.xs, k);
  const Array2D TyPx_k = dx_field(TyPx, base.xs, k);

  LinearEntropyResiduals out;
  out.entropy_route = Array2D(nx, ny);
  out.heat_route = Array2D(nx, ny);

  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double rhs = base.kappa * P_yy(i, j) - 2.0 * base.rv(i, j) * P_y(i, j) -
                         2.0 * base.hu(i, j) * T0y_x(i, j) * q_k(i, j) -
                         2.0 * TxPy_k(i, j) + Hk(i, j);
      out.entropy_route(i, j) = 2.0 * base.hu(i, j) * S_x(i, j) +
                                2.0 * base.rv(i, j) * S_y(i, j) - base.kappa * S_yy(i, j) -
                                rhs;
    }
  // + 2 T0_y sum_{i=1}^{k+1} C(k+1,i) dx^i(hu) dx^{k+1-i}(q) on the right side
  for (int i1 = 1; i1 <= k + 1; ++i1) {
    const double c = 2.0 * binom(k + 1, i1);
    const Array2D hu_i = dx_field(base.hu, base.xs, i1);
    const Array2D q_ki = dx_field(q, base.xs, k + 1 - i1);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j)
        out.entropy_route(i, j) -= c * base.T0_y(i, j) * hu_i(i, j) * q_ki(i, j);
  }
  // + 2 sum C(k,i) dx^i(T0_y) dx^{k+1-i}(psi) and the differentiated-coefficient
  // sums of the heat equation (which enter with the opposite sign)
  for (int i1 = 1; i1 <= k; ++i1) {
    const double c = 2.0 * binom(k, i1);
    const Array2D T0y_i = dx_field(base.T0_y, base.xs, i1);
    const Array2D psi_ki = dx_field(sol.psi, base.xs, k + 1 - i1);
    const Array2D hu_i = dx_field(base.hu, base.xs, i1);
    const Array2D rv_i = dx_field(base.rv, base.xs, i1);
    const Array2D Th_ki1 = dx_field(Th, base.xs, k + 1 - i1);
    const Array2D Th_ki = dx_field(Th, base.xs, k - i1);
    const Array2D Th_ki_y = dy_field(Th_ki, ops, 1);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        out.entropy_route(i, j) -= c * T0y_i(i, j) * psi_ki(i, j);
        out.entropy_route(i, j) += c * (hu_i(i, j) * Th_ki1(i, j) +
                                        rv_i(i, j) * Th_ki_y(i, j));
      }
  }

  const Array2D Th_k_x = dx_field(Th_k, base.xs, 1);
  const Array2D Th_k_y = dy_field(Th_k, ops, 1);
  const Array2D Th_k_yy = dy_field(Th_k, ops, 2);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      out.heat_route(i, j) = 2.0 * base.hu(i, j) * Th_k_x(i, j) +
                             2.0 * base.rv(i, j) * Th_k_y(i, j) -
                             base.kappa * Th_k_yy(i, j) + 2.0 * TxPy_k(i, j) -
                             2.0 * TyPx_k(i, j) - Hk(i, j);
  for (int i1 = 1; i1 <= k; ++i1) {
    const double c = 2.0 * binom(k, i1);
    const Array2D hu_i = dx_field(base.hu, base.xs, i1);
    const Array2D rv_i = dx_field(base.rv, base.xs, i1);
    const Array2D Th_ki1 = dx_field(Th, base.xs, k + 1 - i1);
    const Array2D Th_ki = dx_field(Th, base.xs, k - i1);
    const Array2D Th_ki_y = dy_field(Th_ki, ops, 1);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j)
        out.heat_route(i, j) += c * (hu_i(i, j) * Th_ki1(i, j) + rv_i(i, j) * Th_ki_y(i, j));
  }

  out.first_valid =
      std::min<std::size_t>(static_cast<std::size_t>(k + 4), nx > 0 ? nx - 1 : 0);
  for (std::size_t i = out.first_valid; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      out.identity_gap = std::max(out.identity_gap,
                                  std::abs(out.entropy_route(i, j) - out.heat_route(i, j)));
  if (nx > out.first_valid + 1) {
    Grid1D sub;
    sub.nodes.assign(base.xs.begin() + static_cast<std::ptrdiff_t>(out.first_valid),
                     base.xs.end());
    sub.truncation = base.xs.back();
    Array2D rr(nx - out.first_valid, ny);
    for (std::size_t i = out.first_valid; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j)
        rr(i - out.first_valid, j) = out.entropy_route(i, j);
    out.weighted_norm = weighted_l2(rr, w, sub, base.grid);
  }
  return out;
}

bool LinearNormReport::finite() const {
  for (double v : X_by_order)
    if (!std::isfinite(v)) return false;
  for (double v : Y_by_order)
    if (!std::isfinite(v)) return false;
  return true;
}

LinearNormReport linear_norms(const LinearBase& base, const LayerSolution& sol,
                              const Weight& w, int m) {
  const std::size_t nx = base.xs.size(), ny = base.grid.size();
  const DiffOps ops(base.grid);
  Array2D q(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) q(i, j) = sol.psi(i, j) / base.hu(i, j);
  const Array2D q_y = dy_field(q, ops, 1);
  const Array2D q_yy = dy_field(q, ops, 2);
  const Array2D Th_y = dy_field(sol.Theta, ops, 1);

  std::vector<double> wsq(ny);
  for (std::size_t j = 0; j < ny; ++j) wsq[j] = w.samples[j] * w.samples[j];
  const double dx = nx > 1 ? base.xs[1] - base.xs[0] : 1.0;

  auto slice_l2 = [&](const Array2D& f, int pw, std::size_t i) {
    // pw: 0 plain, 1 sqrt(hu), 2 hu
    std::vector<double> tmp(ny);
    for (std::size_t j = 0; j < ny; ++j) {
      double coef = 1.0;
      if (pw == 1) coef = std::sqrt(base.hu(i, j));
      if (pw == 2) coef = base.hu(i, j);
      const double v = coef * f(i, j);
      tmp[j] = v * v * wsq[j];
    }
    return trapz(tmp, base.grid);
  };

  LinearNormReport rep;
  double accX = 0.0, accY = 0.0;
  for (int i1 = 0; i1 <= m; ++i1) {
    const Array2D dqyy = dx_field(q_yy, base.xs, i1);
    const Array2D dqy = dx_field(q_y, base.xs, i1);
    const Array2D dThy = dx_field(Th_y, base.xs, i1);
    const Array2D dTh = dx_field(sol.Theta, base.xs, i1);
    const std::size_t i0 = std::min<std::size_t>(first_valid_slice(i1), nx - 1);
    double int1 = 0.0, int2 = 0.0, sup1 = 0.0, sup2 = 0.0;
    for (std::size_t i = std::max<std::size_t>(i0, 1); i < nx; ++i) {
      int1 += 0.5 * (slice_l2(dqyy, 1, i) + slice_l2(dqyy, 1, i - 1)) * dx;
      int2 += 0.5 * (slice_l2(dThy, 0, i) + slice_l2(dThy, 0, i - 1)) * dx;
    }
    for (std::size_t i = i0; i < nx; ++i) {
      sup1 = std::max(sup1, slice_l2(dqy, 2, i));
      sup2 = std::max(sup2, slice_l2(dTh, 1, i));
    }
    accX += int1 + sup1;
    accY += base.kappa * int2 + sup2;
    rep.X_by_order.push_back(accX);
    rep.Y_by_order.push_back(accY);
  }
  return rep;
}

}  // namespace cpl
