#include "cpl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cpl {

namespace {

double binom(int k, int i) {
  double b = 1.0;
  for (int j = 1; j <= i; ++j) b = b * static_cast<double>(k - j + 1) / static_cast<double>(j);
  return b;
}

struct BaseFields {
  Array2D ub, vb, T, ut;  // ut = theta + ubar
  Array2D ub_y, ub_yy, T_y, T_yy;
  std::vector<double> xs;
};

BaseFields base_fields(const Trajectory& traj) {
  const std::size_t nx = traj.slices.size(), ny = traj.grid.size();
  BaseFields f;
  f.ub = Array2D(nx, ny);
  f.vb = Array2D(nx, ny);
  f.T = Array2D(nx, ny);
  f.ut = Array2D(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      f.ub(i, j) = traj.slices[i].ubar[j];
      f.vb(i, j) = traj.slices[i].vbar[j];
      f.T(i, j) = traj.slices[i].T[j];
      f.ut(i, j) = traj.theta + f.ub(i, j);
    }
  const DiffOps ops(traj.grid);
  f.ub_y = dy_field(f.ub, ops, 1);
  f.ub_yy = dy_field(f.ub, ops, 2);
  f.T_y = dy_field(f.T, ops, 1);
  f.T_yy = dy_field(f.T, ops, 2);
  f.xs = traj.xs();
  return f;
}

// f1 of the quotient forcing: x-derivatives of the temperature coefficients
Array2D eval_f1(const BaseFields& f, double mu, double kappa) {
  const std::size_t nx = f.ub.nx(), ny = f.ub.ny();
  Array2D A1(nx, ny), A2(nx, ny), A3(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      A1(i, j) = 2.0 * mu * f.T_y(i, j) / f.T(i, j);
      A2(i, j) = f.T_yy(i, j) / f.T(i, j);
      A3(i, j) = 0.5 * mu * f.T_y(i, j) * f.T_y(i, j) / f.T(i, j);
    }
  const Array2D A1x = dx_field(A1, f.xs, 1);
  const Array2D A2x = dx_field(A2, f.xs, 1);
  const Array2D A3x = dx_field(A3, f.xs, 1);
  const Array2D Tyx = dx_field(f.T_y, f.xs, 1);
  const Array2D Tx = dx_field(f.T, f.xs, 1);
  Array2D f1(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double u = f.ub(i, j), uy = f.ub_y(i, j);
      f1(i, j) = uy * A1x(i, j) + (mu - 0.5 * kappa) * u * A2x(i, j) -
                 u * u * u * A3x(i, j) - mu * uy * u * u * Tyx(i, j) -
                 0.5 * mu * uy * uy * u * Tx(i, j);
    }
  return f1;
}

}  // namespace

Array2D dx_field(const Array2D& f, const std::vector<double>& xs, int k) {
  if (k == 0) return f;
  Array2D out(f.nx(), f.ny(), 0.0);
  for (std::size_t i = 0; i < f.nx(); ++i) {
    if (i < static_cast<std::size_t>(k)) continue;
    std::vector<double> win(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(i + 1));
    XStencil st(win, k);
    const std::size_t p = st.window();
    std::vector<double> vals(p);
    for (std::size_t j = 0; j < f.ny(); ++j) {
      for (std::size_t q = 0; q < p; ++q) vals[q] = f(i + 1 - p + q, j);
      out(i, j) = st.apply(vals);
    }
  }
  return out;
}

std::size_t first_valid_slice(int k) { return static_cast<std::size_t>(k + 1); }

Array2D dy_field(const Array2D& f, const DiffOps& ops, int order) {
  Array2D out(f.nx(), f.ny());
  std::vector<double> row(f.ny());
  for (std::size_t i = 0; i < f.nx(); ++i) {
    for (std::size_t j = 0; j < f.ny(); ++j) row[j] = f(i, j);
    const auto d = ops.apply(row, order);
    for (std::size_t j = 0; j < f.ny(); ++j) out(i, j) = d[j];
  }
  return out;
}

QuotientField compute_quotient(const Trajectory& traj) {
  const auto f = base_fields(traj);
  const std::size_t nx = f.ub.nx(), ny = f.ub.ny();
  QuotientField qf;
  qf.q = Array2D(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      if (f.ut(i, j) <= 0.0)
        throw std::runtime_error("compute_quotient: theta + ubar is not positive");
      qf.q(i, j) = f.vb(i, j) / f.ut(i, j);
    }
  const DiffOps ops(traj.grid);
  qf.q_y = dy_field(qf.q, ops, 1);
  qf.q_xy = dx_field(qf.q_y, f.xs, 1);

  // corner values: q(x,0) directly; q_y(x,0) by the quotient rule with the
  // continuity-compatible vbar_y(x,0) = -ubar_x(x,0)
  const Array2D ub_x = dx_field(f.ub, f.xs, 1);
  for (std::size_t i = 0; i < nx; ++i) {
    qf.corner_q = std::max(qf.corner_q, std::abs(qf.q(i, 0)));
    const double vby0 = -ub_x(i, 0);
    const double qy0 =
        (vby0 * f.ut(i, 0) - f.vb(i, 0) * f.ub_y(i, 0)) / (f.ut(i, 0) * f.ut(i, 0));
    qf.corner_qy = std::max(qf.corner_qy, std::abs(qy0));
  }
  return qf;
}

namespace {

Array2D quotient_residual_impl(const Trajectory& traj, const BaseFields& f) {
  const double mu = traj.mu, kappa = traj.kappa;
  const std::size_t nx = f.ub.nx(), ny = f.ub.ny();
  const DiffOps ops(traj.grid);

  Array2D q(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) q(i, j) = f.vb(i, j) / f.ut(i, j);
  const Array2D q_y = dy_field(q, ops, 1);
  const Array2D q_xy = dx_field(q_y, f.xs, 1);
  const Array2D vb_y = dy_field(f.vb, ops, 1);
  const Array2D vb_yy = dy_field(f.vb, ops, 2);
  const Array2D vb_yyy = dy_field(f.vb, ops, 3);
  const Array2D f1 = eval_f1(f, mu, kappa);

  Array2D r(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double u = f.ub(i, j), uy = f.ub_y(i, j), t = f.T(i, j);
      const double ty = f.T_y(i, j), tyy = f.T_yy(i, j), ut = f.ut(i, j);
      const double f2 = 2.0 * ut * vb_y(i, j) * q_y(i, j);
      const double f3 = ((mu - 0.5 * kappa) * tyy / t - 1.5 * mu / t * ty * ty * u * u -
                         2.0 * mu * ty * u * uy - 0.5 * mu * t * uy * uy) *
                            vb_y(i, j) +
                        (2.0 * mu / t * ty - mu * ty * u * u - mu * t * uy * u) * vb_yy(i, j);
      const double F = -f1(i, j) + f2 + f3;
      r(i, j) = ut * ut * q_xy(i, j) - mu * vb_yyy(i, j) - F;
    }
  return r;
}

double weighted_norm_from(const Array2D& r, const std::vector<double>& xs, const Grid1D& gy,
                          const Weight& w, std::size_t first_valid) {
  const std::size_t nx = r.nx();
  if (nx <= first_valid + 1) return 0.0;
  Grid1D sub;
  sub.nodes.assign(xs.begin() + static_cast<std::ptrdiff_t>(first_valid), xs.end());
  sub.truncation = xs.back();
  Array2D rr(nx - first_valid, r.ny());
  for (std::size_t i = first_valid; i < nx; ++i)
    for (std::size_t j = 0; j < r.ny(); ++j) rr(i - first_valid, j) = r(i, j);
  return weighted_l2(rr, w, sub, gy);
}

}  // namespace

ResidualField quotient_equation_residual(const Trajectory& traj, const Weight& w) {
  const auto f = base_fields(traj);
  ResidualField out;
  out.r = quotient_residual_impl(traj, f);
  out.first_valid = std::min<std::size_t>(5, traj.slices.size() - 1);
  out.weighted_norm = weighted_norm_from(out.r, f.xs, traj.grid, w, out.first_valid);
  return out;
}

Array2D momentum_route_residual(const Trajectory& traj) {
  const auto f = base_fields(traj);
  const double mu = traj.mu, kappa = traj.kappa;
  const std::size_t nx = f.ub.nx(), ny = f.ub.ny();
  const DiffOps ops(traj.grid);

  const Array2D fu = dx_field(f.ub, f.xs, 1);  // ubar_x
  const Array2D fv = dx_field(f.vb, f.xs, 1);  // vbar_x
  const Array2D fu_x = dx_field(fu, f.xs, 1);
  const Array2D fu_y = dy_field(fu, ops, 1);
  const Array2D fu_yy = dy_field(fu, ops, 2);
  const Array2D f1 = eval_f1(f, mu, kappa);

  Array2D B(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double u = f.ub(i, j), uy = f.ub_y(i, j), t = f.T(i, j);
      const double ty = f.T_y(i, j), tyy = f.T_yy(i, j), ut = f.ut(i, j);
      const double U = fu(i, j), Uy = fu_y(i, j);
      const double lhs =
          ut * fu_x(i, j) + uy * fv(i, j) + f.vb(i, j) * Uy + U * U - mu * fu_yy(i, j);
      const double rhs = 2.0 * mu / t * ty * Uy + (mu - 0.5 * kappa) * tyy / t * U -
                         1.5 * mu / t * ty * ty * u * u * U -
                         mu * ty * (Uy * u * u + 2.0 * u * uy * U) -
                         0.5 * mu * t * (2.0 * uy * u * Uy + uy * uy * U) + f1(i, j);
      B(i, j) = lhs - rhs;
    }
  return B;
}

ThetaField compute_theta_field(const Trajectory& traj, const std::function<double(double)>& Tb) {
  const auto f = base_fields(traj);
  const std::size_t nx = f.T.nx(), ny = f.T.ny();
  const DiffOps ops(traj.grid);
  const Cutoff& cut = standard_cutoff();

  ThetaField th;
  th.T_B = Array2D(nx, ny, 1.0);
  th.G_B = Array2D(nx, ny, 0.0);
  if (traj.mode == ThermalMode::DBC) {
    if (!Tb) throw std::invalid_argument("compute_theta_field: DBC needs a Tb(x) function");
    for (std::size_t i = 0; i < nx; ++i) {
      const double tb = Tb(f.xs[i]);
      for (std::size_t j = 0; j < ny; ++j) {
        const double c = cut.chi(traj.grid.nodes[j]);
        th.T_B(i, j) = tb * c + (1.0 - c);
      }
    }
    const Array2D TB_x = dx_field(th.T_B, f.xs, 1);
    const Array2D TB_y = dy_field(th.T_B, ops, 1);
    const Array2D TB_yy = dy_field(th.T_B, ops, 2);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j)
        th.G_B(i, j) = traj.kappa * TB_yy(i, j) -
                       2.0 * (f.ub(i, j) * TB_x(i, j) + f.vb(i, j) * TB_y(i, j));
  }
  th.Theta = Array2D(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) th.Theta(i, j) = f.T(i, j) - th.T_B(i, j);

  const Array2D Th_y = dy_field(th.Theta, ops, 1);
  for (std::size_t i = 0; i < nx; ++i) {
    th.far_field_gap = std::max(th.far_field_gap, std::abs(th.Theta(i, ny - 1)));
    th.corner = std::max(th.corner, traj.mode == ThermalMode::NBC ? std::abs(Th_y(i, 0))
                                                                  : std::abs(th.Theta(i, 0)));
  }
  return th;
}

Array2D pseudo_entropy(const Trajectory& traj, const ThetaField& th, int k) {
  if (k < 1) throw std::invalid_argument("pseudo_entropy: k must be >= 1");
  const auto f = base_fields(traj);
  const DiffOps ops(traj.grid);
  Array2D q(f.ub.nx(), f.ub.ny());
  for (std::size_t i = 0; i < q.nx(); ++i)
    for (std::size_t j = 0; j < q.ny(); ++j) q(i, j) = f.vb(i, j) / f.ut(i, j);
  const Array2D Th_y = dy_field(th.Theta, ops, 1);
  const Array2D Th_k = dx_field(th.Theta, f.xs, k);
  const Array2D q_km1 = dx_field(q, f.xs, k - 1);
  Array2D S(q.nx(), q.ny());
  for (std::size_t i = 0; i < q.nx(); ++i)
    for (std::size_t j = 0; j < q.ny(); ++j) S(i, j) = Th_k(i, j) + q_km1(i, j) * Th_y(i, j);
  return S;
}

EntropyResiduals pseudo_entropy_residual(const Trajectory& traj, const ThetaField& th, int k,
                                         const Weight& w) {
  if (k < 1 || k > 3) throw std::invalid_argument("pseudo_entropy_residual: k in {1,2,3}");
  const auto f = base_fields(traj);
  const DiffOps ops(traj.grid);
  const double mu = traj.mu, kappa = traj.kappa;
  const std::size_t nx = f.ub.nx(), ny = f.ub.ny();

  Array2D q(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) q(i, j) = f.vb(i, j) / f.ut(i, j);

  const Array2D Th_y = dy_field(th.Theta, ops, 1);
  const Array2D Th_xy = dx_field(Th_y, f.xs, 1);

  // dissipation source mu dx^k |d/dy(T ubar)|^2 and dx^k G_B, shared by both routes
  Array2D u(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) u(i, j) = f.T(i, j) * f.ub(i, j);
  const Array2D u_y = dy_field(u, ops, 1);
  Array2D diss(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) diss(i, j) = u_y(i, j) * u_y(i, j);
  const Array2D diss_k = dx_field(diss, f.xs, k);
  const Array2D GB_k = dx_field(th.G_B, f.xs, k);

  // pseudo-entropy route
  const Array2D q_km1 = dx_field(q, f.xs, k - 1);
  const Array2D Th_k = dx_field(th.Theta, f.xs, k);
  Array2D S(nx, ny), P(nx, ny);  // S_k and P = Theta_y dx^{k-1} q
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      P(i, j) = Th_y(i, j) * q_km1(i, j);
      S(i, j) = Th_k(i, j) + P(i, j);
    }
  const Array2D S_x = dx_field(S, f.xs, 1);
  const Array2D S_y = dy_field(S, ops, 1);
  const Array2D S_yy = dy_field(S, ops, 2);
  const Array2D P_y = dy_field(P, ops, 1);
  const Array2D P_yy = dy_field(P, ops, 2);

  Array2D rhs(nx, ny, 0.0);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      rhs(i, j) = 2.0 * f.ut(i, j) * Th_xy(i, j) * q_km1(i, j) +
                  2.0 * f.vb(i, j) * P_y(i, j) - kappa * P_yy(i, j) + mu * diss_k(i, j) +
                  GB_k(i, j);
  for (int i1 = 1; i1 <= k; ++i1) {
    const double c = 2.0 * binom(k, i1);
    const Array2D ub_i = dx_field(f.ub, f.xs, i1);
    const Array2D q_ki = dx_field(q, f.xs, k - i1);
    const Array2D Th_ki = dx_field(th.Theta, f.xs, k - i1);
    const Array2D Th_ki_x = dx_field(Th_ki, f.xs, 1);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j)
        rhs(i, j) -= c * (Th_y(i, j) * ub_i(i, j) * q_ki(i, j) + ub_i(i, j) * Th_ki_x(i, j));
    if (i1 <= k - 1) {
      const Array2D vb_i = dx_field(f.vb, f.xs, i1);
      const Array2D Th_ki_y = dy_field(Th_ki, ops, 1);
      for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) rhs(i, j) -= c * vb_i(i, j) * Th_ki_y(i, j);
    }
  }

  EntropyResiduals out;
  out.entropy_route = Array2D(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      out.entropy_route(i, j) = 2.0 * f.ut(i, j) * S_x(i, j) + 2.0 * f.vb(i, j) * S_y(i, j) -
                                kappa * S_yy(i, j) - rhs(i, j);

  // the dx^k-differentiated heat equation, structurally aligned (x-derivatives
  // of order k+1 always compose as dx of dx^k)
  const Array2D Th_k_x = dx_field(Th_k, f.xs, 1);
  const Array2D Th_k_y = dy_field(Th_k, ops, 1);
  const Array2D Th_k_yy = dy_field(Th_k, ops, 2);
  out.heat_route = Array2D(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      out.heat_route(i, j) = 2.0 * f.ut(i, j) * Th_k_x(i, j) +
                             2.0 * f.vb(i, j) * Th_k_y(i, j) - kappa * Th_k_yy(i, j) -
                             mu * diss_k(i, j) - GB_k(i, j);
  for (int i1 = 1; i1 <= k; ++i1) {
    const double c = 2.0 * binom(k, i1);
    const Array2D ub_i = dx_field(f.ub, f.xs, i1);
    const Array2D vb_i = dx_field(f.vb, f.xs, i1);
    const Array2D Th_ki = dx_field(th.Theta, f.xs, k - i1);
    const Array2D Th_ki_x = dx_field(Th_ki, f.xs, 1);
    const Array2D Th_ki_y = dy_field(Th_ki, ops, 1);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j)
        out.heat_route(i, j) += c * (ub_i(i, j) * Th_ki_x(i, j) + vb_i(i, j) * Th_ki_y(i, j));
  }

  out.first_valid =
      std::min<std::size_t>(static_cast<std::size_t>(k + 4), nx > 0 ? nx - 1 : 0);
  for (std::size_t i = out.first_valid; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      out.identity_gap = std::max(out.identity_gap,
                                  std::abs(out.entropy_route(i, j) - out.heat_route(i, j)));
  out.weighted_norm =
      weighted_norm_from(out.entropy_route, f.xs, traj.grid, w, out.first_valid);
  return out;
}

namespace {

double slice_l2(const Array2D& f, const Array2D& coef, const std::vector<double>& wsq,
                const Grid1D& gy, std::size_t i) {
  std::vector<double> tmp(f.ny());
  for (std::size_t j = 0; j < f.ny(); ++j) {
    const double v = coef.ny() ? coef(i, j) * f(i, j) : f(i, j);
    tmp[j] = v * v * wsq[j];
  }
  return trapz(tmp, gy);
}

}  // namespace

bool NormReport::finite() const {
  auto ok = [](double v) { return std::isfinite(v); };
  for (double v : X_by_order)
    if (!ok(v)) return false;
  for (double v : Y_by_order)
    if (!ok(v)) return false;
  return ok(triple_v) && ok(triple_theta);
}

NormReport norms(const Trajectory& traj, const ThetaField& th, const Weight& w, int m,
                 double l0_exponent) {
  if (m < 0 || m > 3) throw std::invalid_argument("norms: m must lie in [0, 3]");
  const auto f = base_fields(traj);
  const DiffOps ops(traj.grid);
  const Grid1D& gy = traj.grid;
  const std::size_t nx = f.ub.nx(), ny = f.ub.ny();

  NormReport rep;
  rep.m = m;
  rep.weight_exponent = w.exponent;
  rep.l0_exponent = l0_exponent;
  const Weight wl0 = weight_samples(gy, l0_exponent);
  std::vector<double> wsq(ny);
  for (std::size_t j = 0; j < ny; ++j) wsq[j] = w.samples[j] * w.samples[j];

  Array2D q(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) q(i, j) = f.vb(i, j) / f.ut(i, j);
  const Array2D q_y = dy_field(q, ops, 1);
  const Array2D q_yy = dy_field(q, ops, 2);
  const Array2D Th_y = dy_field(th.Theta, ops, 1);
  const Array2D vb_y = dy_field(f.vb, ops, 1);
  const Array2D vb_yy = dy_field(f.vb, ops, 2);
  Array2D sqrt_ut(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) sqrt_ut(i, j) = std::sqrt(f.ut(i, j));

  const double dx_step = nx > 1 ? f.xs[1] - f.xs[0] : 1.0;
  auto x_integral = [&](const std::vector<double>& per_slice, std::size_t i0) {
    double s = 0.0;
    for (std::size_t i = std::max<std::size_t>(i0, 1); i < per_slice.size(); ++i)
      s += 0.5 * (per_slice[i] + per_slice[i - 1]) * dx_step;
    return s;
  };
  auto clamp_first = [&](int k) {
    return std::min<std::size_t>(first_valid_slice(k), nx > 0 ? nx - 1 : 0);
  };

  const Array2D none;
  auto l2_xy = [&](const Array2D& field, int i1, const Array2D& coef) {
    const Array2D d = dx_field(field, f.xs, i1);
    std::vector<double> per(nx, 0.0);
    for (std::size_t i = clamp_first(i1); i < nx; ++i) per[i] = slice_l2(d, coef, wsq, gy, i);
    return x_integral(per, clamp_first(i1));
  };
  auto sup_l2y = [&](const Array2D& field, int i1, const Array2D& coef) {
    const Array2D d = dx_field(field, f.xs, i1);
    double s = 0.0;
    for (std::size_t i = clamp_first(i1); i < nx; ++i)
      s = std::max(s, slice_l2(d, coef, wsq, gy, i));
    return s;
  };
  auto sup_abs = [&](const Array2D& field, int i1, const std::vector<double>& ww) {
    const Array2D d = dx_field(field, f.xs, i1);
    double s = 0.0;
    for (std::size_t i = clamp_first(i1); i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) s = std::max(s, std::abs(d(i, j)) * ww[j]);
    return s;
  };

  double accX = 0.0, accY = 0.0;
  for (int i1 = 0; i1 <= m; ++i1) {
    accX += l2_xy(q_yy, i1, sqrt_ut) + sup_l2y(q_y, i1, f.ut);
    rep.X_by_order.push_back(accX);
    accY += traj.kappa * l2_xy(Th_y, i1, none) + sup_l2y(th.Theta, i1, sqrt_ut);
    rep.Y_by_order.push_back(accY);
  }

  // |||vbar|||_{m,w}: the 1 + X^m core plus the lower-order sup pieces
  const std::vector<double> unit(ny, 1.0);
  double tv = 1.0 + rep.X_by_order.back();
  for (int i1 = 0; i1 <= m - 1; ++i1) tv += sup_l2y(vb_yy, i1, none);
  for (int i1 = 0; i1 <= m; ++i1) tv += std::sqrt(l2_xy(vb_y, i1, none));
  for (int i1 = 0; i1 <= m - 1; ++i1) tv += sup_abs(q, i1, unit);
  for (int i1 = 1; i1 <= m - 1; ++i1) tv += sup_abs(f.ub, i1, wl0.samples);
  for (int i1 = 0; i1 <= m - 1; ++i1) tv += sup_abs(f.ub_y, i1, wl0.samples);
  for (int i1 = 0; i1 <= 1 + m / 2; ++i1) tv += sup_abs(f.ub_yy, i1, wl0.samples);
  rep.triple_v = tv;

  // [[[Theta]]]_{m+1,w}
  double tt = rep.Y_by_order.back();
  {
    const Array2D S = pseudo_entropy(traj, th, m + 1);
    const Array2D S_y = dy_field(S, ops, 1);
    std::vector<double> perS(nx, 0.0);
    double supS = 0.0;
    const std::size_t i0 = clamp_first(m + 1);
    for (std::size_t i = i0; i < nx; ++i) {
      supS = std::max(supS, slice_l2(S, sqrt_ut, wsq, gy, i));
      perS[i] = slice_l2(S_y, none, wsq, gy, i);
    }
    tt += traj.kappa * x_integral(perS, i0) + supS;
  }
  {
    const Array2D Th_yy = dy_field(th.Theta, ops, 2);
    const Array2D Th_yyy = dy_field(th.Theta, ops, 3);
    const Array2D Th_xy = dx_field(Th_y, f.xs, 1);
    const Array2D Th_xxy = dx_field(Th_y, f.xs, 2);
    double sup = 0.0;
    for (std::size_t i = clamp_first(2); i < nx; ++i) {
      const double s2 = slice_l2(Th_y, none, wsq, gy, i) + slice_l2(Th_yy, none, wsq, gy, i) +
                        slice_l2(Th_yyy, none, wsq, gy, i) + slice_l2(Th_xy, none, wsq, gy, i) +
                        slice_l2(Th_xxy, none, wsq, gy, i);
      sup = std::max(sup, std::sqrt(s2));
    }
    tt += sup;
    for (int i1 = 0; i1 <= 1 + m / 2; ++i1)
      tt += sup_abs(th.Theta, i1, wl0.samples) + sup_abs(Th_y, i1, wl0.samples);
    for (int i1 = 0; i1 <= m / 2; ++i1) tt += sup_abs(Th_yy, i1, wl0.samples);
  }
  rep.triple_theta = tt;
  return rep;
}

double max_abs_interior(const Array2D& f, std::size_t first_valid) {
  double s = 0.0;
  for (std::size_t i = first_valid; i < f.nx(); ++i)
    for (std::size_t j = 1; j + 1 < f.ny(); ++j) s = std::max(s, std::abs(f(i, j)));
  return s;
}

}  // namespace cpl
