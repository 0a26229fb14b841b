#include "cpl/euler_layer.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpl/diagnostics.hpp"

namespace cpl {

EllipticCoeffs coeffs_from_flow(const ShearFlow& flow, const Grid1D& gY) {
  EllipticCoeffs c;
  const std::size_t n = gY.size();
  c.a11.resize(n);
  c.a22.resize(n);
  c.b1.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double Y = gY.nodes[j];
    const double rho = flow.rho(Y), u = flow.u(Y), T = flow.T(Y);
    const double rhoY = flow.rho(Y, 1), uY = flow.u(Y, 1), TY = flow.T(Y, 1);
    const double sub = 2.0 * T - u * u;
    if (sub <= 0.0) throw std::runtime_error("coeffs_from_flow: subsonic margin lost");
    c.a11[j] = rho * T * u / sub;
    c.a22[j] = 0.5 * rho * u;
    c.b1[j] = T * (rho * uY - u * rhoY - 2.0 * rho / u * TY) / sub + rho / u * TY;
  }
  return c;
}

double subsonic_margin(const ShearFlow& flow, const Grid1D& gY) {
  return flow.subsonic_margin(gY);
}

BoundaryLift build_lift(const std::vector<double>& V0, const std::vector<double>& VL,
                        const std::vector<double>& vp_wall, const Grid1D& gx,
                        const Grid1D& gY, double decay_exponent) {
  const std::size_t nx = gx.size(), nY = gY.size();
  if (V0.size() != nY || VL.size() != nY || vp_wall.size() != nx)
    throw std::invalid_argument("build_lift: shape mismatch");
  const double vp0 = vp_wall.front(), vpL = vp_wall.back();
  BoundaryLift lift;
  lift.corner_residual = std::max(std::abs(V0[0] + vp0), std::abs(VL[0] + vpL));
  if (lift.corner_residual > 1e-10)
    throw std::runtime_error("build_lift: corner compatibility V(0) = -vp violated");

  const double thr = 1e-12;
  const bool z0 = std::abs(vp0) <= thr, zL = std::abs(vpL) <= thr;
  const Cutoff& cut = standard_cutoff();
  const double L = gx.truncation;
  lift.S1 = Array2D(nx, nY);
  for (std::size_t i = 0; i < nx; ++i) {
    const double x = gx.nodes[i], vp = vp_wall[i];
    const double lam = (L > 0.0) ? x / L : 0.0;
    for (std::size_t j = 0; j < nY; ++j) {
      const double chi = cut.chi(gY.nodes[j]);
      double s;
      if (!z0 && !zL) {
        lift.branch = 0;
        s = (1.0 - lam) * V0[j] / vp0 * vp + lam * VL[j] / vpL * vp;
      } else if (z0 && !zL) {
        lift.branch = 1;
        s = (1.0 - lam) * (V0[j] - chi * vp) + lam * VL[j] / vpL * vp;
      } else if (!z0 && zL) {
        lift.branch = 2;
        s = (1.0 - lam) * V0[j] / vp0 * vp + lam * (VL[j] - chi * vp);
      } else {
        lift.branch = 3;
        s = (1.0 - lam) * V0[j] + lam * VL[j] - chi * vp;
      }
      lift.S1(i, j) = s;
    }
  }
  double C = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    const double denom = std::max(std::abs(vp_wall[i]), 1e-14);
    for (std::size_t j = 0; j < nY; ++j)
      C = std::max(C, std::abs(lift.S1(i, j)) *
                          std::pow(1.0 + gY.nodes[j], decay_exponent) / denom);
  }
  lift.decay_constant = C;
  return lift;
}

namespace {

// 5-point conservative stencil at an interior node
struct StencilRow {
  double c, e, w, n, s;  // center, x+1, x-1, Y+1, Y-1
};

StencilRow interior_row(const EllipticCoeffs& co, const Grid1D& gx, const Grid1D& gY,
                        std::size_t j) {
  const double hx = gx.spacing(0);
  const double hp = gY.spacing(j), hm = gY.spacing(j - 1);
  const double hc = 0.5 * (hp + hm);
  const double a_p = 0.5 * (co.a11[j] + co.a11[j + 1]);
  const double a_m = 0.5 * (co.a11[j] + co.a11[j - 1]);
  const double b_p = 0.5 * (co.b1[j] + co.b1[j + 1]);
  const double b_m = 0.5 * (co.b1[j] + co.b1[j - 1]);
  StencilRow r{};
  // -dY(a11 VY) as a flux difference
  r.n = -a_p / (hp * hc);
  r.s = -a_m / (hm * hc);
  r.c = (a_p / hp + a_m / hm) / hc;
  // -dx(a22 Vx)
  r.e = -co.a22[j] / (hx * hx);
  r.w = -co.a22[j] / (hx * hx);
  r.c += 2.0 * co.a22[j] / (hx * hx);
  // +dY(b1 V) with midpoint fluxes
  r.n += 0.5 * b_p / hc;
  r.s += -0.5 * b_m / hc;
  r.c += 0.5 * (b_p - b_m) / hc;
  return r;
}

}  // namespace

Array2D apply_operator(const EllipticCoeffs& c, const Array2D& V, const Grid1D& gx,
                       const Grid1D& gY) {
  const std::size_t nx = gx.size(), nY = gY.size();
  Array2D out(nx, nY);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < nY; ++j) {
      if (i == 0 || i == nx - 1 || j == 0 || j == nY - 1) {
        out(i, j) = V(i, j);
        continue;
      }
      const StencilRow r = interior_row(c, gx, gY, j);
      out(i, j) = r.c * V(i, j) + r.e * V(i + 1, j) + r.w * V(i - 1, j) +
                  r.n * V(i, j + 1) + r.s * V(i, j - 1);
    }
  return out;
}

namespace {

double rayleigh_quotient(const EllipticCoeffs& c, const Array2D& Vbar, const Grid1D& gx,
                         const Grid1D& gY) {
  // B(V,V) / (||V_Y||^2 + ||V_x||^2) with forward-difference gradients
  const Array2D LV = apply_operator(c, Vbar, gx, gY);
  const double hx = gx.size() > 1 ? gx.spacing(0) : 1.0;
  double B = 0.0, grad = 0.0;
  for (std::size_t i = 1; i + 1 < gx.size(); ++i)
    for (std::size_t j = 1; j + 1 < gY.size(); ++j) {
      const double cell = hx * 0.5 * (gY.spacing(j) + gY.spacing(j - 1));
      B += LV(i, j) * Vbar(i, j) * cell;
      const double vy = (Vbar(i, j + 1) - Vbar(i, j)) / gY.spacing(j);
      const double vx = (Vbar(i + 1, j) - Vbar(i, j)) / hx;
      grad += (vy * vy + vx * vx) * cell;
    }
  return grad > 0.0 ? B / grad : 0.0;
}

// measured over the solution (when nonzero) and a smooth probe
double measured_coercivity(const EllipticCoeffs& c, const Array2D& Vbar, const Grid1D& gx,
                           const Grid1D& gY) {
  Array2D probe(gx.size(), gY.size(), 0.0);
  const double L = gx.truncation, H = gY.truncation;
  for (std::size_t i = 1; i + 1 < gx.size(); ++i)
    for (std::size_t j = 1; j + 1 < gY.size(); ++j)
      probe(i, j) = std::sin(M_PI * gx.nodes[i] / L) * gY.nodes[j] *
                    std::exp(-gY.nodes[j]) * (1.0 - gY.nodes[j] / H);
  const double cp = rayleigh_quotient(c, probe, gx, gY);
  const double cs = rayleigh_quotient(c, Vbar, gx, gY);
  return cs > 0.0 ? std::min(cp, cs) : cp;
}

}  // namespace

Array2D solve_homogeneous(const EllipticCoeffs& c, const Array2D& rhs, const Grid1D& gx,
                          const Grid1D& gY, EllipticSolveReport* rep) {
  const std::size_t nx = gx.size(), nY = gY.size();
  if (rhs.nx() != nx || rhs.ny() != nY)
    throw std::invalid_argument("solve_homogeneous: shape mismatch");
  const std::size_t ni = nx - 2, nj = nY - 2;
  const auto idx = [nj](std::size_t i, std::size_t j) {
    return static_cast<int>((i - 1) * nj + (j - 1));
  };

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * ni * nj);
  Eigen::VectorXd b(static_cast<Eigen::Index>(ni * nj));
  for (std::size_t i = 1; i + 1 < nx; ++i)
    for (std::size_t j = 1; j + 1 < nY; ++j) {
      const StencilRow r = interior_row(c, gx, gY, j);
      const int row = idx(i, j);
      trip.emplace_back(row, idx(i, j), r.c);
      if (i + 2 < nx) trip.emplace_back(row, idx(i + 1, j), r.e);
      if (i >= 2) trip.emplace_back(row, idx(i - 1, j), r.w);
      if (j + 2 < nY) trip.emplace_back(row, idx(i, j + 1), r.n);
      if (j >= 2) trip.emplace_back(row, idx(i, j - 1), r.s);
      b(row) = rhs(i, j);
    }
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(ni * nj),
                                static_cast<Eigen::Index>(ni * nj));
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("solve_homogeneous: factorization failed");
  const Eigen::VectorXd sol = lu.solve(b);

  Array2D V(nx, nY, 0.0);
  for (std::size_t i = 1; i + 1 < nx; ++i)
    for (std::size_t j = 1; j + 1 < nY; ++j) V(i, j) = sol(idx(i, j));

  if (rep) {
    const Array2D LV = apply_operator(c, V, gx, gY);
    double res = 0.0, scale = 1e-300;
    for (std::size_t i = 1; i + 1 < nx; ++i)
      for (std::size_t j = 1; j + 1 < nY; ++j) {
        res = std::max(res, std::abs(LV(i, j) - rhs(i, j)));
        scale = std::max(scale, std::abs(rhs(i, j)));
      }
    rep->solver_residual = res / std::max(scale, 1.0);
    rep->coercivity = measured_coercivity(c, V, gx, gY);
    if (rep->coercivity < 0.0)
      throw std::runtime_error("solve_homogeneous: discrete form lost coercivity");
  }
  return V;
}

Array2D solve_v(const EllipticCoeffs& c, const BoundaryLift& lift, const Array2D& F,
                const Grid1D& gx, const Grid1D& gY, EllipticSolveReport* rep) {
  const std::size_t nx = gx.size(), nY = gY.size();
  const DiffOps opsY(gY);
  const Array2D dYF = dy_field(F, opsY, 1);
  const Array2D LS1 = apply_operator(c, lift.S1, gx, gY);
  Array2D rhs(nx, nY, 0.0);
  for (std::size_t i = 1; i + 1 < nx; ++i)
    for (std::size_t j = 1; j + 1 < nY; ++j) rhs(i, j) = dYF(i, j) - LS1(i, j);
  Array2D Vbar = solve_homogeneous(c, rhs, gx, gY, rep);
  Array2D V(nx, nY);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < nY; ++j) V(i, j) = Vbar(i, j) + lift.S1(i, j);
  if (rep) {
    double wr = 0.0;
    for (std::size_t i = 0; i < nx; ++i)
      wr = std::max(wr, std::abs(V(i, 0) - lift.S1(i, 0)));
    rep->wall_residual = wr;
  }
  return V;
}

EulerForcing zero_forcing(std::size_t nx, std::size_t nY) {
  return {Array2D(nx, nY, 0.0), Array2D(nx, nY, 0.0), Array2D(nx, nY, 0.0),
          Array2D(nx, nY, 0.0)};
}

Array2D elliptic_rhs_flux(const ShearFlow& flow, const EulerForcing& f, const Grid1D& gY) {
  const std::size_t nx = f.F1.nx(), nY = f.F1.ny();
  Array2D F(nx, nY);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < nY; ++j) {
      const double Y = gY.nodes[j];
      const double T0 = flow.T(Y), u0 = flow.u(Y);
      const double tail = f.F4(i, j) - T0 * f.F1(i, j);
      F(i, j) = T0 * f.F2(i, j) - T0 * u0 * f.F1(i, j) - (T0 / u0) * tail -
                tail / (2.0 * u0);
    }
  return F;
}

EulerCorrection recover_rho_u_T(const Array2D& v, const ShearFlow& flow,
                                const EulerForcing& f, const std::vector<double>& rho_in,
                                const std::vector<double>& u_in,
                                const std::vector<double>& T_in, const Grid1D& gx,
                                const Grid1D& gY, int order) {
  const std::size_t nx = gx.size(), nY = gY.size();
  const DiffOps opsY(gY);
  const Array2D vY = dy_field(v, opsY, 1);

  EulerCorrection ec;
  ec.order = order;
  ec.v = v;
  ec.rho = Array2D(nx, nY);
  ec.u = Array2D(nx, nY);
  ec.T = Array2D(nx, nY);

  auto slopes = [&](std::size_t i, std::size_t j, double& dr, double& dT, double& du) {
    const double Y = gY.nodes[j];
    const double rho0 = flow.rho(Y), u0 = flow.u(Y), T0 = flow.T(Y);
    const double rho0Y = flow.rho(Y, 1), u0Y = flow.u(Y, 1), T0Y = flow.T(Y, 1);
    const double sub = 2.0 * T0 - u0 * u0;
    const double tail = f.F4(i, j) - T0 * f.F1(i, j);
    dr = (rho0 * u0 * vY(i, j) -
          (rho0 * u0Y - u0 * rho0Y - 2.0 * rho0 / u0 * T0Y) * v(i, j) + f.F2(i, j) -
          u0 * f.F1(i, j) - tail / u0) /
         sub;
    dT = T0 / rho0 * dr - 2.0 / u0 * T0Y * v(i, j) + tail / (rho0 * u0);
    du = -u0 / rho0 * dr - vY(i, j) - rho0Y / rho0 * v(i, j) + f.F1(i, j) / rho0;
  };

  for (std::size_t j = 0; j < nY; ++j) {
    ec.rho(0, j) = rho_in[j];
    ec.u(0, j) = u_in[j];
    ec.T(0, j) = T_in[j];
  }
  for (std::size_t i = 1; i < nx; ++i) {
    const double dx = gx.spacing(i - 1);
    for (std::size_t j = 0; j < nY; ++j) {
      double dr0, dT0, du0, dr1, dT1, du1;
      slopes(i - 1, j, dr0, dT0, du0);
      slopes(i, j, dr1, dT1, du1);
      ec.rho(i, j) = ec.rho(i - 1, j) + 0.5 * dx * (dr0 + dr1);
      ec.T(i, j) = ec.T(i - 1, j) + 0.5 * dx * (dT0 + dT1);
      ec.u(i, j) = ec.u(i - 1, j) + 0.5 * dx * (du0 + du1);
    }
  }
  return ec;
}

EulerSystemResiduals euler_system_residuals(const EulerCorrection& ec, const ShearFlow& flow,
                                            const EulerForcing& f, const Grid1D& gx,
                                            const Grid1D& gY) {
  const std::size_t nx = gx.size(), nY = gY.size();
  const DiffOps opsY(gY);
  const std::vector<double>& xs = gx.nodes;

  const Array2D rho_x = dx_field(ec.rho, xs, 1);
  const Array2D u_x = dx_field(ec.u, xs, 1);
  const Array2D T_x = dx_field(ec.T, xs, 1);
  const Array2D v_x = dx_field(ec.v, xs, 1);
  const Array2D rho_Y = dy_field(ec.rho, opsY, 1);
  const Array2D T_Y = dy_field(ec.T, opsY, 1);
  const Array2D v_Y = dy_field(ec.v, opsY, 1);

  EulerSystemResiduals out;
  out.mass = Array2D(nx, nY, 0.0);
  out.mom_x = Array2D(nx, nY, 0.0);
  out.mom_Y = Array2D(nx, nY, 0.0);
  out.energy = Array2D(nx, nY, 0.0);
  for (std::size_t i = 2; i < nx; ++i)
    for (std::size_t j = 0; j < nY; ++j) {
      const double Y = gY.nodes[j];
      const double rho0 = flow.rho(Y), u0 = flow.u(Y), T0 = flow.T(Y);
      const double rho0Y = flow.rho(Y, 1), u0Y = flow.u(Y, 1), T0Y = flow.T(Y, 1);
      out.mass(i, j) = rho0 * u_x(i, j) + u0 * rho_x(i, j) + rho0 * v_Y(i, j) +
                       rho0Y * ec.v(i, j) - f.F1(i, j);
      out.mom_x(i, j) = rho0 * (u0 * u_x(i, j) + ec.v(i, j) * u0Y) +
                        (rho0 * T_x(i, j) + T0 * rho_x(i, j)) - f.F2(i, j);
      out.mom_Y(i, j) = rho0 * u0 * v_x(i, j) + rho0 * T_Y(i, j) + rho0Y * ec.T(i, j) +
                        T0 * rho_Y(i, j) + T0Y * ec.rho(i, j) - f.F3(i, j);
      out.energy(i, j) = rho0 * (u0 * T_x(i, j) + ec.v(i, j) * T0Y) +
                         rho0 * T0 * (u_x(i, j) + v_Y(i, j)) - f.F4(i, j);
      for (const Array2D* r : {&out.mass, &out.mom_x, &out.mom_Y, &out.energy})
        out.max_abs = std::max(out.max_abs, std::abs((*r)(i, j)));
    }
  return out;
}

}  // namespace cpl
