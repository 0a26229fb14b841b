#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpl/diagnostics.hpp"
#include "cpl/expansion.hpp"

namespace cpl {

namespace {

std::vector<double> dx_vec(const std::vector<double>& xs, const std::vector<double>& vals,
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

// cubic Lagrange interpolation of a sampled function on a uniform grid
double interp_uniform(const std::vector<double>& nodes, const std::vector<double>& vals,
                      double x) {
  const std::size_t n = nodes.size();
  const double h = nodes[1] - nodes[0];
  double t = (x - nodes[0]) / h;
  std::ptrdiff_t i0 = static_cast<std::ptrdiff_t>(std::floor(t)) - 1;
  i0 = std::clamp<std::ptrdiff_t>(i0, 0, static_cast<std::ptrdiff_t>(n) - 4);
  double s = 0.0;
  for (int a = 0; a < 4; ++a) {
    double L = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (a == b) continue;
      L *= (x - nodes[static_cast<std::size_t>(i0 + b)]) /
           (nodes[static_cast<std::size_t>(i0 + a)] - nodes[static_cast<std::size_t>(i0 + b)]);
    }
    s += L * vals[static_cast<std::size_t>(i0 + a)];
  }
  return s;
}

}  // namespace

// ------------------------- CompositeSolution --------------------------------

// helper with full access to the private tables
struct CompositeAccess {
  using T = CompositeSolution::Tables;

  static T empty(std::size_t nx, std::size_t ny) {
    return T{Array2D(nx, ny, 0.0), Array2D(nx, ny, 0.0), Array2D(nx, ny, 0.0),
             Array2D(nx, ny, 0.0), Array2D(nx, ny, 0.0), Array2D(nx, ny, 0.0)};
  }

  static void axpy(T& acc, const T& t, double s) {
    auto ax = [s](Array2D& a, const Array2D& b) {
      for (std::size_t i = 0; i < a.nx(); ++i)
        for (std::size_t j = 0; j < a.ny(); ++j) a(i, j) += s * b(i, j);
    };
    ax(acc.f, t.f);
    ax(acc.fx, t.fx);
    ax(acc.fy, t.fy);
    ax(acc.fxx, t.fxx);
    ax(acc.fyy, t.fyy);
    ax(acc.fxy, t.fxy);
  }

  static T product(const T& a, const T& b) {
    const std::size_t nx = a.f.nx(), ny = a.f.ny();
    T out = empty(nx, ny);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        out.f(i, j) = a.f(i, j) * b.f(i, j);
        out.fx(i, j) = a.fx(i, j) * b.f(i, j) + a.f(i, j) * b.fx(i, j);
        out.fy(i, j) = a.fy(i, j) * b.f(i, j) + a.f(i, j) * b.fy(i, j);
        out.fxx(i, j) = a.fxx(i, j) * b.f(i, j) + 2.0 * a.fx(i, j) * b.fx(i, j) +
                        a.f(i, j) * b.fxx(i, j);
        out.fyy(i, j) = a.fyy(i, j) * b.f(i, j) + 2.0 * a.fy(i, j) * b.fy(i, j) +
                        a.f(i, j) * b.fyy(i, j);
        out.fxy(i, j) = a.fxy(i, j) * b.f(i, j) + a.fx(i, j) * b.fy(i, j) +
                        a.fy(i, j) * b.fx(i, j) + a.f(i, j) * b.fxy(i, j);
      }
    return out;
  }

  static T reciprocal(const T& a) {
    const std::size_t nx = a.f.nx(), ny = a.f.ny();
    T out = empty(nx, ny);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        const double f = a.f(i, j), r = 1.0 / f;
        out.f(i, j) = r;
        out.fx(i, j) = -a.fx(i, j) * r * r;
        out.fy(i, j) = -a.fy(i, j) * r * r;
        out.fxx(i, j) = (2.0 * a.fx(i, j) * a.fx(i, j) - f * a.fxx(i, j)) * r * r * r;
        out.fyy(i, j) = (2.0 * a.fy(i, j) * a.fy(i, j) - f * a.fyy(i, j)) * r * r * r;
        out.fxy(i, j) = (2.0 * a.fx(i, j) * a.fy(i, j) - f * a.fxy(i, j)) * r * r * r;
      }
    return out;
  }

  // tables of a Prandtl-grid field extended past y_max with a plateau
  static T prandtl_piece(const Array2D& vals, const std::vector<double>& xs,
                         const Grid1D& gy, const Grid1D& gaudit) {
    const std::size_t nx = vals.nx(), ny = gy.size(), na = gaudit.size();
    const DiffOps ops(gy);
    const Array2D vy = dy_field(vals, ops, 1);
    const Array2D vyy = dy_field(vals, ops, 2);
    T out = empty(nx, na);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < na; ++j) {
        if (j < ny) {
          out.f(i, j) = vals(i, j);
          out.fy(i, j) = vy(i, j);
          out.fyy(i, j) = vyy(i, j);
        } else {
          out.f(i, j) = vals(i, ny - 1);  // exponential tail below truncation
        }
      }
    out.fx = dx_field(out.f, xs, 1);
    out.fxx = dx_field(out.fx, xs, 1);
    out.fxy = dx_field(out.fy, xs, 1);
    return out;
  }

  // tables of an Euler-grid field evaluated at Y = sqrt(eps) y on the audit grid
  static T euler_piece(const Array2D& vals, const std::vector<double>& xs, const Grid1D& gY,
                       const Grid1D& gaudit, double se) {
    const std::size_t nx = vals.nx(), na = gaudit.size();
    const DiffOps ops(gY);
    const Array2D gx1 = dx_field(vals, xs, 1);
    const Array2D gx2 = dx_field(gx1, xs, 1);
    const Array2D gY1 = dy_field(vals, ops, 1);
    const Array2D gY2 = dy_field(vals, ops, 2);
    const Array2D gxY = dx_field(gY1, xs, 1);
    T out = empty(nx, na);
    for (std::size_t i = 0; i < nx; ++i) {
      const auto r = vals.row(i);
      const auto rx = gx1.row(i), rxx = gx2.row(i);
      const auto rY = gY1.row(i), rYY = gY2.row(i), rxY = gxY.row(i);
      for (std::size_t j = 0; j < na; ++j) {
        const double Y = se * gaudit.nodes[j];
        out.f(i, j) = interp_uniform(gY.nodes, r, Y);
        out.fx(i, j) = interp_uniform(gY.nodes, rx, Y);
        out.fxx(i, j) = interp_uniform(gY.nodes, rxx, Y);
        out.fy(i, j) = se * interp_uniform(gY.nodes, rY, Y);
        out.fyy(i, j) = se * se * interp_uniform(gY.nodes, rYY, Y);
        out.fxy(i, j) = se * interp_uniform(gY.nodes, rxY, Y);
      }
    }
    return out;
  }

  // background profile b(sqrt(eps) y), derivatives analytic
  template <class F>
  static T background_piece(F&& prof, std::size_t nx, const Grid1D& gaudit, double se) {
    const std::size_t na = gaudit.size();
    T out = empty(nx, na);
    for (std::size_t j = 0; j < na; ++j) {
      const double Y = se * gaudit.nodes[j];
      const double f = prof(Y, 0), f1 = prof(Y, 1), f2 = prof(Y, 2);
      for (std::size_t i = 0; i < nx; ++i) {
        out.f(i, j) = f;
        out.fy(i, j) = se * f1;
        out.fyy(i, j) = se * se * f2;
      }
    }
    return out;
  }

  // analytic function of y alone
  template <class F>
  static T yfunc_piece(F&& fn, std::size_t nx, const Grid1D& gaudit) {
    const std::size_t na = gaudit.size();
    T out = empty(nx, na);
    for (std::size_t j = 0; j < na; ++j) {
      const double y = gaudit.nodes[j];
      for (std::size_t i = 0; i < nx; ++i) {
        out.f(i, j) = fn(y, 0);
        out.fy(i, j) = fn(y, 1);
        out.fyy(i, j) = fn(y, 2);
      }
    }
    return out;
  }

  // x-profile broadcast over y
  static T xfunc_piece(const std::vector<double>& vals, const std::vector<double>& xs,
                       std::size_t na) {
    const std::size_t nx = vals.size();
    const auto d1 = dx_vec(xs, vals, 1);
    std::vector<double> d2 = dx_vec(xs, d1, 1);
    T out = empty(nx, na);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < na; ++j) {
        out.f(i, j) = vals[i];
        out.fx(i, j) = d1[i];
        out.fxx(i, j) = d2[i];
      }
    return out;
  }

  static Deriv2 at(const T& t, std::size_t i, std::size_t j) {
    return {t.f(i, j), t.fx(i, j), t.fy(i, j), t.fxx(i, j), t.fyy(i, j), t.fxy(i, j)};
  }

  static Deriv2 sum(const Deriv2& a, const Deriv2& b) {
    return {a.f + b.f,     a.fx + b.fx,   a.fy + b.fy,
            a.fxx + b.fxx, a.fyy + b.fyy, a.fxy + b.fxy};
  }
};

CompositeSolution::CompositeSolution(const Hierarchy& h, double eps)
    : eps_(eps), se_(std::sqrt(eps)), h_(&h), xs_(h.gx.nodes) {
  if (eps <= 0.0 || eps > 1.0)
    throw std::invalid_argument("CompositeSolution: eps must lie in (0, 1]");
  using A = CompositeAccess;
  const std::size_t nx = xs_.size();
  const Cutoff& cut = standard_cutoff();

  // audit grid: the Prandtl grid extended to cover the cutoff support 2/sqrt(eps)
  gy_audit_ = h.gy;
  {
    const double h_ext = h.gy.spacing(h.gy.size() - 2);
    const double y_end = std::max(h.gy.truncation, 2.2 / se_ + 1.0);
    double y = h.gy.truncation;
    while (y + h_ext <= y_end) {
      y += h_ext;
      gy_audit_.nodes.push_back(y);
    }
    gy_audit_.truncation = gy_audit_.nodes.back();
  }
  const std::size_t na = gy_audit_.size();

  // raw composite tables
  rho_t = A::background_piece([&](double Y, int k) { return h.flow.rho(Y, k); }, nx,
                              gy_audit_, se_);
  u_t = A::background_piece([&](double Y, int k) { return h.flow.u(Y, k); }, nx, gy_audit_,
                            se_);
  T_t = A::background_piece([&](double Y, int k) { return h.flow.T(Y, k); }, nx, gy_audit_,
                            se_);
  v_t = A::empty(nx, na);

  A::axpy(rho_t, A::prandtl_piece(h.rho_p0, xs_, h.gy, gy_audit_), 1.0);
  A::axpy(u_t, A::prandtl_piece(h.u_p0, xs_, h.gy, gy_audit_), 1.0);
  A::axpy(T_t, A::prandtl_piece(h.T_p0, xs_, h.gy, gy_audit_), 1.0);
  for (int k = 1; k <= h.N; ++k) {
    const double sk = std::pow(se_, k);
    const auto& ec = h.euler[static_cast<std::size_t>(k - 1)];
    const auto& lp = h.prandtl[static_cast<std::size_t>(k - 1)];
    A::axpy(rho_t, A::euler_piece(ec.rho, xs_, h.gY, gy_audit_, se_), sk);
    A::axpy(u_t, A::euler_piece(ec.u, xs_, h.gY, gy_audit_, se_), sk);
    A::axpy(T_t, A::euler_piece(ec.T, xs_, h.gY, gy_audit_, se_), sk);
    A::axpy(rho_t, A::prandtl_piece(lp.rho_p, xs_, h.gy, gy_audit_), sk);
    A::axpy(u_t, A::prandtl_piece(lp.u_p, xs_, h.gy, gy_audit_), sk);
    A::axpy(T_t, A::prandtl_piece(lp.T_p, xs_, h.gy, gy_audit_), sk);
  }

  // vertical velocity (physical scaling): sqrt(eps) * [sum of v-pieces]
  auto cutoff_piece = A::yfunc_piece(
      [&](double y, int k) {
        if (k == 0) return cut.chi(se_ * y);
        if (k == 1) return se_ * cut.dchi(se_ * y);
        return se_ * se_ * cut.d2chi(se_ * y);
      },
      nx, gy_audit_);
  for (int k = 0; k <= h.N; ++k) {
    const double sk = std::pow(se_, k + 1);
    if (k < h.N) {
      // v_e^{k+1} + v_p^k
      const auto& ecv = h.euler[static_cast<std::size_t>(k)].v;
      A::axpy(v_t, A::euler_piece(ecv, xs_, h.gY, gy_audit_, se_), sk);
      const Array2D& vpk = (k == 0) ? h.v_p0 : h.prandtl[static_cast<std::size_t>(k - 1)].v_p;
      A::axpy(v_t, A::prandtl_piece(vpk, xs_, h.gy, gy_audit_), sk);
    } else {
      // top order: cutoff times the fraktur velocity
      const Array2D& fv = (k == 0) ? h.vbar0 : h.prandtl[static_cast<std::size_t>(k - 1)].frak_v;
      auto piece = A::product(cutoff_piece, A::prandtl_piece(fv, xs_, h.gy, gy_audit_));
      A::axpy(v_t, piece, sk);
    }
  }

  // adjustments: delta_T = -sqrt(eps)^N chi(y) T_e^N (NBC only);
  // delta_v = -sqrt(eps) y chi(y) R0(x,0) / rho_s
  Tadj_t = A::empty(nx, na);
  if (h.base.mode == ThermalMode::NBC) {
    // cutoff in the outer variable: the wall flux is killed (chi'(0) = 0 and
    // chi(0) = 1) while the injected derivatives stay O(sqrt(eps)^N)
    auto chi_y = A::yfunc_piece(
        [&](double y, int k) {
          if (k == 0) return cut.chi(se_ * y);
          if (k == 1) return se_ * cut.dchi(se_ * y);
          return se_ * se_ * cut.d2chi(se_ * y);
        },
        nx, gy_audit_);
    CompositeSolution::Tables TeN =
        (h.N == 0)
            ? A::background_piece([&](double Y, int k) { return h.flow.T(Y, k); }, nx,
                                  gy_audit_, se_)
            : A::euler_piece(h.euler.back().T, xs_, h.gY, gy_audit_, se_);
    auto prod = A::product(chi_y, TeN);
    A::axpy(Tadj_t, prod, -std::pow(se_, h.N));
  }

  vadj_t = A::empty(nx, na);
  {
    // raw wall mass residual R0(x, 0)
    std::vector<double> s(nx, 0.0);
    for (std::size_t i = 0; i < nx; ++i) {
      const Deriv2 r = A::at(rho_t, i, 0), uu = A::at(u_t, i, 0), vv = A::at(v_t, i, 0);
      s[i] = r.fx * uu.f + r.f * uu.fx + (r.fy * vv.f + r.f * vv.fy) / se_;
    }
    auto s_t = A::xfunc_piece(s, xs_, na);
    auto g_t = A::yfunc_piece(
        [&](double y, int k) {
          if (k == 0) return y * cut.chi(y);
          if (k == 1) return cut.chi(y) + y * cut.dchi(y);
          return 2.0 * cut.dchi(y) + y * cut.d2chi(y);
        },
        nx, gy_audit_);
    auto piece = A::product(A::product(s_t, g_t), A::reciprocal(rho_t));
    A::axpy(vadj_t, piece, -se_);
  }
}

Deriv2 CompositeSolution::rho(std::size_t i, std::size_t j) const {
  return CompositeAccess::at(rho_t, i, j);
}
Deriv2 CompositeSolution::u(std::size_t i, std::size_t j) const {
  return CompositeAccess::at(u_t, i, j);
}
Deriv2 CompositeSolution::T(std::size_t i, std::size_t j) const {
  return CompositeAccess::sum(CompositeAccess::at(T_t, i, j),
                              CompositeAccess::at(Tadj_t, i, j));
}
Deriv2 CompositeSolution::v_ns(std::size_t i, std::size_t j) const {
  return CompositeAccess::sum(CompositeAccess::at(v_t, i, j),
                              CompositeAccess::at(vadj_t, i, j));
}
Deriv2 CompositeSolution::v_ns_raw(std::size_t i, std::size_t j) const {
  return CompositeAccess::at(v_t, i, j);
}

NsResidualReport ns_residual(const CompositeSolution& comp, double mu, double lambda,
                             double kappa, double weight_exponent) {
  const std::size_t nx = comp.xs().size(), ny = comp.audit_grid().size();
  const double eps = comp.eps();
  const double ise = 1.0 / std::sqrt(eps);
  NsResidualReport rep;
  // skip the corner-influence strip (first-order-compatible data still carries
  // an exponentially decaying corner transient) and the trailing slices where
  // the one-sided stencils close
  rep.first_valid = std::max<std::size_t>(5, nx / 2);
  rep.last_valid = (nx > 6) ? nx - 1 - std::max<std::size_t>(5, nx / 8) : nx - 1;
  for (std::size_t i = rep.first_valid; i <= rep.last_valid; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double w = std::pow(1.0 + comp.audit_grid().nodes[j], weight_exponent / 4.0);
      const Deriv2 r = comp.rho(i, j), u = comp.u(i, j), v = comp.v_ns(i, j),
                   T = comp.T(i, j);
      const double div = u.fx + ise * v.fy;
      const double div_x = u.fxx + ise * v.fxy;
      const double div_y = u.fxy + ise * v.fyy;

      const double mass = r.fx * u.f + r.f * u.fx + ise * (r.fy * v.f + r.f * v.fy);
      const double mom_x = r.f * (u.f * u.fx + v.f * ise * u.fy) +
                           (r.fx * T.f + r.f * T.fx) -
                           mu * eps * (u.fxx + u.fyy / eps) - lambda * eps * div_x;
      const double mom_y = r.f * (u.f * v.fx + v.f * ise * v.fy) +
                           ise * (r.fy * T.f + r.f * T.fy) -
                           mu * eps * (v.fxx + v.fyy / eps) -
                           lambda * eps * ise * div_y;
      const double SS = u.fx * u.fx + (ise * v.fy) * (ise * v.fy) +
                        0.5 * (ise * u.fy + v.fx) * (ise * u.fy + v.fx);
      const double energy = r.f * (u.f * T.fx + v.f * ise * T.fy) + r.f * T.f * div -
                            kappa * eps * (T.fxx + T.fyy / eps) - 2.0 * mu * eps * SS -
                            (lambda - mu) * eps * div * div;
      rep.mass = std::max(rep.mass, std::abs(mass) * w);
      rep.mom_x = std::max(rep.mom_x, std::abs(mom_x) * w);
      rep.mom_y = std::max(rep.mom_y, std::abs(mom_y) * w);
      rep.energy = std::max(rep.energy, std::abs(energy) * w);
    }
  rep.max_all = std::max(std::max(rep.mass, rep.mom_x), std::max(rep.mom_y, rep.energy));
  return rep;
}

MassIdentityReport mass_conservation_identity(const Hierarchy& h, double eps) {
  if (h.N > 1)
    throw std::invalid_argument("mass_conservation_identity: implemented for N <= 1");
  using A = CompositeAccess;
  CompositeSolution comp(h, eps);
  const double se = std::sqrt(eps);
  const std::size_t nx = h.gx.size();
  const Grid1D& ga = comp.audit_grid();
  const std::size_t na = ga.size();
  const std::vector<double>& xs = h.gx.nodes;
  const Cutoff& cut = standard_cutoff();

  // owned fluxes: the parts absorbed by the order-by-order equations
  // F1_owned = rho0bar u0bar + sqrt(eps)[(rho0bar u_p^1 + rho_p^1 u0bar) +
  //            (rho_e^0 u_e^1 + rho_e^1 u_e^0)(x, se y) + G2-level-1 x-fluxes]
  auto p0r = A::prandtl_piece(h.rho_p0, xs, h.gy, ga);
  auto p0u = A::prandtl_piece(h.u_p0, xs, h.gy, ga);
  auto p0v = A::prandtl_piece(h.v_p0, xs, h.gy, ga);
  const double r0w = h.flow.rho(0.0), u0w = h.flow.u(0.0);

  CompositeSolution::Tables F1o = A::empty(nx, na), F2o = A::empty(nx, na);
  // full leading-order products (constants shift derivatives by nothing)
  {
    auto rb = p0r;  // rho0bar = r0w + layer
    for (auto& v : rb.f.data()) v += r0w;
    auto ub = p0u;
    for (auto& v : ub.f.data()) v += u0w;
    A::axpy(F1o, A::product(rb, ub), 1.0);
    // v0bar = p0v + e1 wall trace (when built)
    auto vb = p0v;
    if (h.N >= 1) {
      std::vector<double> e1w(nx);
      for (std::size_t i = 0; i < nx; ++i) e1w[i] = h.euler[0].v(i, 0);
      A::axpy(vb, A::xfunc_piece(e1w, xs, na), 1.0);
    }
    A::axpy(F2o, A::product(rb, vb), 1.0);
  }
  if (h.N >= 1) {
    auto p1r = A::prandtl_piece(h.prandtl[0].rho_p, xs, h.gy, ga);
    auto p1u = A::prandtl_piece(h.prandtl[0].u_p, xs, h.gy, ga);
    auto fv1 = A::prandtl_piece(h.prandtl[0].frak_v, xs, h.gy, ga);
    auto rb = p0r;
    for (auto& v : rb.f.data()) v += r0w;
    auto ub = p0u;
    for (auto& v : ub.f.data()) v += u0w;
    auto vb = p0v;
    {
      std::vector<double> e1w(nx);
      for (std::size_t i = 0; i < nx; ++i) e1w[i] = h.euler[0].v(i, 0);
      A::axpy(vb, A::xfunc_piece(e1w, xs, na), 1.0);
    }
    A::axpy(F1o, A::product(rb, p1u), se);
    A::axpy(F1o, A::product(p1r, ub), se);
    A::axpy(F2o, A::product(rb, fv1), se);
    A::axpy(F2o, A::product(p1r, vb), se);
    // pure-Euler order-1 fluxes
    auto e1r = A::euler_piece(h.euler[0].rho, xs, h.gY, ga, se);
    auto e1u = A::euler_piece(h.euler[0].u, xs, h.gY, ga, se);
    auto e1v = A::euler_piece(h.euler[0].v, xs, h.gY, ga, se);
    auto bgr = A::background_piece([&](double Y, int k) { return h.flow.rho(Y, k); }, nx,
                                   ga, se);
    auto bgu = A::background_piece([&](double Y, int k) { return h.flow.u(Y, k); }, nx, ga,
                                   se);
    A::axpy(F1o, A::product(bgr, e1u), se);
    A::axpy(F1o, A::product(e1r, bgu), se);
    A::axpy(F2o, A::product(bgr, e1v), 1.0);  // the y-block carries no extra factor
    // level-1 Taylor fluxes owned through the forcing bookkeeping
    auto wallvec = [&](char name, int i, int l) {
      std::vector<double> out(nx, 0.0);
      const DiffOps opsY(h.gY);
      if ((name == 'v' ? i + 1 : i) == 0) {
        double val = name == 'r' ? h.flow.rho(0.0, l)
                     : name == 'u' ? h.flow.u(0.0, l)
                                   : h.flow.T(0.0, l);
        if (name == 'v') val = 0.0;
        std::fill(out.begin(), out.end(), val);
        return out;
      }
      const Array2D& f = (name == 'v') ? h.euler[static_cast<std::size_t>(i)].v
                                       : (name == 'r' ? h.euler[0].rho : h.euler[0].u);
      for (std::size_t a = 0; a < nx; ++a) {
        auto row = f.row(a);
        out[a] = (l == 0) ? row[0] : opsY.at(row, l, 0);
      }
      return out;
    };
    auto term = [&](const std::vector<double>& coef, int l, const CompositeSolution::Tables& p) {
      auto cf = A::xfunc_piece(coef, xs, na);
      auto yl = A::yfunc_piece(
          [l](double y, int k) {
            if (k == 0) return std::pow(y, l);
            if (k == 1) return l >= 1 ? l * std::pow(y, l - 1) : 0.0;
            return l >= 2 ? double(l) * (l - 1) * std::pow(y, l - 2) : 0.0;
          },
          nx, ga);
      return A::product(A::product(cf, yl), p);
    };
    // x-flux: [rho_e^1(x,0) u_p^0 + u_e^1(x,0) rho_p^0 + y(rho'(0) u_p^0 + u'(0) rho_p^0)]
    A::axpy(F1o, term(wallvec('r', 1, 0), 0, p0u), se);
    A::axpy(F1o, term(wallvec('u', 1, 0), 0, p0r), se);
    A::axpy(F1o, term(wallvec('r', 0, 1), 1, p0u), se);
    A::axpy(F1o, term(wallvec('u', 0, 1), 1, p0r), se);
    // y-flux: [rho_e^1(x,0) v_p^0 + y(rho'(0) v_p^0 + dY v_e^1(x,0) rho_p^0)]
    A::axpy(F2o, term(wallvec('r', 1, 0), 0, p0v), se);
    A::axpy(F2o, term(wallvec('r', 0, 1), 1, p0v), se);
    A::axpy(F2o, term(wallvec('v', 0, 1), 1, p0r), se);
  }

  // A fluxes: exact difference between the composite flux and the owned parts
  MassIdentityReport rep;
  Array2D A1(nx, na), A2(nx, na), A1x(nx, na), A2y(nx, na);
  {
    // rho_s u_s tables and the y-block flux rho_s * (v-pieces)
    CompositeSolution::Tables rs = A::empty(nx, na), us = A::empty(nx, na),
                              vblock = A::empty(nx, na);
    // reassemble raw tables through the public interface
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < na; ++j) {
        const Deriv2 r = comp.rho(i, j), u = comp.u(i, j), vr = comp.v_ns_raw(i, j);
        rs.f(i, j) = r.f;
        rs.fx(i, j) = r.fx;
        rs.fy(i, j) = r.fy;
        us.f(i, j) = u.f;
        us.fx(i, j) = u.fx;
        us.fy(i, j) = u.fy;
        vblock.f(i, j) = vr.f / se;  // v-block = v^NS / sqrt(eps)
        vblock.fx(i, j) = vr.fx / se;
        vblock.fy(i, j) = vr.fy / se;
      }
    auto ru = A::product(rs, us);
    auto rv = A::product(rs, vblock);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < na; ++j) {
        A1(i, j) = ru.f(i, j) - F1o.f(i, j);
        A2(i, j) = rv.f(i, j) - F2o.f(i, j);
      }
  }
  A1x = dx_field(A1, xs, 1);
  {
    const DiffOps opsa(ga);
    A2y = dy_field(A2, opsa, 1);
  }

  // direct residual and the equation-owned residual pieces
  rep.direct = Array2D(nx, na, 0.0);
  rep.divergence = Array2D(nx, na, 0.0);
  const std::size_t i0 = std::min<std::size_t>(5, nx - 1);
  // owned-equation residuals: leading Prandtl mass + order-1 pieces
  const DiffOps opsy(h.gy);
  Array2D prm0(nx, h.gy.size(), 0.0);
  {
    Array2D ru(nx, h.gy.size()), rv(nx, h.gy.size());
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < h.gy.size(); ++j) {
        ru(i, j) = h.base.slices[i].ubar[j];   // rho u = ubar
        rv(i, j) = h.base.slices[i].vbar[j];   // rho v = vbar
      }
    const Array2D rux = dx_field(ru, xs, 1);
    const Array2D rvy = dy_field(rv, opsy, 1);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < h.gy.size(); ++j) prm0(i, j) = rux(i, j) + rvy(i, j);
  }
  Array2D prm1, eul1;
  if (h.N >= 1) {
    auto r1 = linear_system_residuals(
        h.linbase,
        [&] {
          LinearInputs in = zero_inputs(nx, h.gy.size(), h.base.mode);
          in.G1 = h.Gk[0].G1;
          in.G2 = h.Gk[0].G2;
          in.G3 = h.Gk[0].G3;
          in.G4 = h.Gk[0].G4();
          return in;
        }(),
        h.prandtl[0].rho_p, h.prandtl[0].u_p, h.prandtl[0].frak_v, h.prandtl[0].T_p);
    prm1 = r1.eq2;
    auto er = euler_system_residuals(h.euler[0], h.flow, h.Fk[0], h.gx, h.gY);
    eul1 = er.mass;
  }

  for (std::size_t i = i0; i + 5 < nx; ++i)
    for (std::size_t j = 0; j < na; ++j) {
      const Deriv2 r = comp.rho(i, j), u = comp.u(i, j), vr = comp.v_ns_raw(i, j);
      const double direct = r.fx * u.f + r.f * u.fx + (r.fy * vr.f + r.f * vr.fy) / se;
      double owned = (j < h.gy.size()) ? prm0(i, j) : 0.0;
      if (h.N >= 1) {
        if (j < h.gy.size()) owned += se * prm1(i, j);
        // Euler mass residual interpolated to Y = se * y
        std::vector<double> row = eul1.row(i);
        owned += se * interp_uniform(h.gY.nodes, row, se * ga.nodes[j]);
      }
      const double divA = A1x(i, j) + A2y(i, j);
      rep.direct(i, j) = direct;
      rep.divergence(i, j) = owned + divA;
      rep.gap = std::max(rep.gap, std::abs(direct - rep.divergence(i, j)));
      rep.scale = std::max(rep.scale, std::abs(direct));
    }
  return rep;
}

}  // namespace cpl
