#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpl/background.hpp"
#include "cpl/grid.hpp"
#include "cpl/prandtl.hpp"
#include "cpl/prandtl_linear.hpp"

using namespace cpl;

namespace {

// synthetic base flow with exact base continuity: rho0 u0 = m0(y) + a(x) B'(y),
// rho0 v0 = -a'(x) B(y)
struct SynthBase {
  double c0 = 0.5, c1 = 0.5;
  double aw = 2.0, a0 = 0.04, a1 = 0.04;
  double tA = 0.15, tw = 1.5, tb = 0.05;

  double m0(double y) const { return c0 + c1 * (1.0 - std::exp(-y)); }
  double a(double x) const { return a0 + a1 * std::sin(aw * x); }
  double ap(double x) const { return a1 * aw * std::cos(aw * x); }
  double Bp(double y) const { return y * std::exp(-y); }
  double B(double y) const { return 1.0 - std::exp(-y) * (1.0 + y); }

  double T0(double x, double y) const {
    return 1.0 + tA * std::exp(-y) + tb * std::cos(tw * x) * y * std::exp(-y);
  }
  double u0(double x, double y) const { return T0(x, y) * (m0(y) + a(x) * Bp(y)); }
  double v0(double x, double y) const { return -T0(x, y) * ap(x) * B(y); }

  LinearBase base(const Grid1D& gx, const Grid1D& gy, double theta, double mu,
                  double kappa) const {
    return LinearBase::from_closures(
        [this](double x, double y) { return u0(x, y); },
        [this](double x, double y) { return v0(x, y); },
        [this](double x, double y) { return T0(x, y); }, gx, gy, theta, mu, kappa);
  }
};

Trajectory base_march(double L = 0.04, std::size_t nx = 21, std::size_t ny = 151) {
  auto data = make_example_data(1.0, 1.0, 1.35);
  ShearFlow flow(1.35, 1.38, 1.0);
  auto g = build_y_grid(20.0, ny, 1.0);
  Prandtl0Problem prob{data, flow, 1.0, 1.0, L, nx, {}};
  return march_trajectory(prob, 1e-3, g);
}

}  // namespace

TEST_CASE("xi profile: wall value, flat wall derivatives, discrete zero mean") {
  auto gy = build_y_grid(15.0, 301, 1.0);
  for (int variant : {0, 1}) {
    auto xi = make_xi(gy, variant);
    CHECK(xi.xi[0] == 1.0);
    CHECK(std::abs(trapz(xi.xi, gy)) < 1e-13);
    // identically 1 near the wall: derivatives vanish there
    auto d = d_dy(xi.xi, gy, 1);
    CHECK(std::abs(d[0]) < 1e-12);
    CHECK(std::abs(d[2]) < 1e-12);
    // Ixi(0) = 0 and Ixi(ymax) = 0 (zero mean)
    CHECK(xi.Ixi[0] == 0.0);
    CHECK(std::abs(xi.Ixi.back()) < 1e-13);
  }
}

TEST_CASE("zero inputs give the zero layer") {
  auto traj = base_march();
  auto base = LinearBase::from_trajectory(traj, 1e-3);
  auto in = zero_inputs(base.xs.size(), base.grid.size());
  auto sol = solve_linear_layer(base, in);
  for (std::size_t i = 0; i < base.xs.size(); ++i)
    for (std::size_t j = 0; j < base.grid.size(); ++j) {
      CHECK(std::abs(sol.u_p(i, j)) < 1e-14);
      CHECK(std::abs(sol.T_p(i, j)) < 1e-14);
      CHECK(std::abs(sol.v_p(i, j)) < 1e-14);
    }
}

TEST_CASE("linearity in the forcing") {
  auto traj = base_march();
  auto base = LinearBase::from_trajectory(traj, 1e-3);
  const std::size_t nx = base.xs.size(), ny = base.grid.size();
  auto in = zero_inputs(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double x = base.xs[i], y = base.grid.nodes[j];
      in.G1(i, j) = 0.05 * std::sin(3.0 * x + 0.3) * std::exp(-2.0 * y);
      in.G3(i, j) = 0.04 * std::cos(2.0 * x) * y * std::exp(-y);
      in.G4(i, j) = 0.03 * (1.0 + x) * std::exp(-1.5 * y);
    }
  auto in2 = in;
  const double lam = 3.7;
  for (auto* g : {&in2.G1, &in2.G2, &in2.G3, &in2.G4})
    for (auto& v : g->data()) v *= lam;

  auto s1 = solve_linear_layer(base, in);
  auto s2 = solve_linear_layer(base, in2);
  double rel = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      rel = std::max(rel, std::abs(s2.u_p(i, j) - lam * s1.u_p(i, j)) +
                              std::abs(s2.T_p(i, j) - lam * s1.T_p(i, j)));
      scale = std::max(scale, std::abs(lam * s1.u_p(i, j)));
    }
  CHECK(rel <= 1e-9 * std::max(scale, 1.0));
}

TEST_CASE("pressure relation holds by construction") {
  auto traj = base_march();
  auto base = LinearBase::from_trajectory(traj, 1e-3);
  const std::size_t nx = base.xs.size(), ny = base.grid.size();
  auto in = zero_inputs(nx, ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      in.G1(i, j) = 0.05 * (1.0 + base.xs[i]) * std::exp(-2.0 * base.grid.nodes[j]);
  auto hom = homogenize(base, in);
  auto sol = solve_linear_layer(base, in);
  // rho0 T_p + T0 rho_p == P1 pointwise
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      const double combo =
          base.rho0(i, j) * sol.T_p(i, j) + base.T0(i, j) * sol.rho_p(i, j);
      CHECK(std::abs(combo - hom.P1(i, j)) < 1e-12);
    }
}

TEST_CASE("wall and stream-function boundary structure") {
  auto traj = base_march();
  auto base = LinearBase::from_trajectory(traj, 1e-3);
  const std::size_t nx = base.xs.size(), ny = base.grid.size();
  auto in = zero_inputs(nx, ny);
  for (std::size_t i = 0; i < nx; ++i) {
    in.u_wall[i] = 0.02 * std::sin(5.0 * base.xs[i]);
    in.G4(i, 0) = 0.0;
  }
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j)
      in.G3(i, j) = 0.03 * std::cos(3.0 * base.xs[i]) * base.grid.nodes[j] *
                    std::exp(-base.grid.nodes[j]);
  auto sol = solve_linear_layer(base, in);
  for (std::size_t i = 0; i < nx; ++i) {
    CHECK(sol.psi(i, 0) == 0.0);                      // psi(x, 0) = 0 exactly
    CHECK(std::abs(sol.u(i, 0)) < 1e-13);             // bold-u vanishes at the wall
    // recovered wall velocity matches the datum
    CHECK(sol.u_p(i, 0) == doctest::Approx(in.u_wall[i]).epsilon(1e-10));
    // fraktur-v vanishes at the wall
    CHECK(std::abs(sol.frak_v(i, 0)) < 1e-12);
    // v_p at y_max is exactly zero by the far-field removal
    CHECK(sol.v_p(i, ny - 1) == 0.0);
  }
}

TEST_CASE("representation independence of the xi choice") {
  auto traj = base_march();
  auto base = LinearBase::from_trajectory(traj, 1e-3);
  const std::size_t nx = base.xs.size(), ny = base.grid.size();
  auto in = zero_inputs(nx, ny);
  for (std::size_t i = 0; i < nx; ++i) {
    in.u_wall[i] = 0.05 * std::sin(4.0 * base.xs[i]) + 0.02;
    in.T_wall[i] = 0.03 * std::cos(3.0 * base.xs[i]);
  }
  auto gap_at = [&](const LinearBase& b) {
    auto inb = zero_inputs(b.xs.size(), b.grid.size());
    for (std::size_t i = 0; i < b.xs.size(); ++i) {
      inb.u_wall[i] = 0.05 * std::sin(4.0 * b.xs[i]) + 0.02;
      inb.T_wall[i] = 0.03 * std::cos(3.0 * b.xs[i]);
    }
    auto sA = solve_linear_layer(b, inb, 0);
    auto sB = solve_linear_layer(b, inb, 1);
    double g = 0.0, raw = 0.0;
    for (std::size_t i = 0; i < b.xs.size(); ++i)
      for (std::size_t j = 0; j < b.grid.size(); ++j) {
        g = std::max(g, std::abs(sA.u_p(i, j) - sB.u_p(i, j)) +
                            std::abs(sA.T_p(i, j) - sB.T_p(i, j)) +
                            std::abs(sA.v_p(i, j) - sB.v_p(i, j)));
        raw = std::max(raw, std::abs(sA.u(i, j) - sB.u(i, j)));
      }
    CHECK(raw > 1e-3);  // the homogenized unknowns genuinely differ
    return g;
  };
  const double g_coarse = gap_at(base);
  auto traj_f = base_march(0.04, 41, 301);
  const double g_fine = gap_at(LinearBase::from_trajectory(traj_f, 1e-3));
  // the physical layer cannot depend on the lift profile beyond solver error:
  // the gap is small and shrinks under refinement
  CHECK(g_coarse < 5e-3);
  CHECK(g_fine < g_coarse);
}

TEST_CASE("manufactured march on a constant base converges") {
  // constant base: the transformed forcings collapse to a single
  // Theta_yy coupling, so exact sources are available in closed form
  const double cu = 0.8, cT = 1.25, theta = 0.05, mu = 1.0, kappa = 1.4;
  const double L = 0.1, H = 6.0;
  const double hu = (theta + cu) / cT;
  const double m = cu / cT;

  auto Psi_e = [&](double x, double y) {
    return 0.2 * (1.0 + 0.5 * std::sin(3.0 * x)) * std::sin(M_PI * y / H);
  };
  auto Psi_x = [&](double x, double y) {
    return 0.2 * 1.5 * std::cos(3.0 * x) * std::sin(M_PI * y / H);
  };
  auto Psi_yy = [&](double x, double y) {
    return -0.2 * (1.0 + 0.5 * std::sin(3.0 * x)) * std::pow(M_PI / H, 2) *
           std::sin(M_PI * y / H);
  };
  auto Th_e = [&](double x, double y) {
    return 0.1 * (1.0 + x) * (1.0 - std::cos(2.0 * M_PI * y / H));
  };
  auto Th_x = [&](double x, double y) { return 0.1 * (1.0 - std::cos(2.0 * M_PI * y / H)); (void)x; };
  auto Th_yy = [&](double x, double y) {
    return 0.1 * (1.0 + x) * std::pow(2.0 * M_PI / H, 2) * std::cos(2.0 * M_PI * y / H);
  };

  PrandtlSources src;
  src.s_u = [&](double x, double y) {
    return hu * Psi_x(x, y) - mu * Psi_yy(x, y) -
           (mu - 0.5 * kappa) * (m / cT) * Th_yy(x, y);
  };
  src.s_T = [&](double x, double y) { return 2.0 * hu * Th_x(x, y) - kappa * Th_yy(x, y); };

  auto err_at = [&](std::size_t nx, std::size_t ny) {
    auto gx = build_x_grid(L, nx);
    auto gy = build_y_grid(H, ny, 1.0);
    auto base = LinearBase::from_closures(
        [&](double, double) { return cu; }, [&](double, double) { return 0.0; },
        [&](double, double) { return cT; }, gx, gy, theta, mu, kappa);
    auto in = zero_inputs(nx, ny);
    // invert the homogenization map so bold-u(0,y) = Psi*(0,y), Theta(0,y) = Th*(0,y)
    for (std::size_t j = 0; j < ny; ++j) {
      in.T_init[j] = Th_e(0.0, gy.nodes[j]);
      in.u_init[j] = cT * Psi_e(0.0, gy.nodes[j]) + cu / cT * in.T_init[j];
    }
    LinearMarchOptions opts;
    opts.sources = &src;
    auto sol = solve_linear_layer(base, in, 0, opts);
    double e = 0.0;
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        e = std::max(e, std::abs(sol.Psi(i, j) - Psi_e(gx.nodes[i], gy.nodes[j])));
        e = std::max(e, std::abs(sol.Theta(i, j) - Th_e(gx.nodes[i], gy.nodes[j])));
      }
    return e;
  };

  // dx refinement (fine y-grid): first order slope
  const double a0 = err_at(11, 201), a1 = err_at(21, 201), a2 = err_at(41, 201);
  const double slope_dx = std::log2(a0 / a2) / 2.0;
  CHECK(slope_dx == doctest::Approx(1.0).epsilon(0.3));
  CHECK(a1 < a0);
  // h refinement (tiny dx): second order slope
  const double b0 = err_at(401, 26), b1 = err_at(401, 51), b2 = err_at(401, 101);
  const double slope_h = std::log2(b0 / b2) / 2.0;
  CHECK(slope_h == doctest::Approx(2.0).epsilon(0.15));
  CHECK(b1 < b0);
}

TEST_CASE("psi equals hu times the quotient integral representation") {
  auto traj = base_march();
  auto base = LinearBase::from_trajectory(traj, 1e-3);
  auto in = zero_inputs(base.xs.size(), base.grid.size());
  for (std::size_t i = 0; i < base.xs.size(); ++i) in.u_wall[i] = 0.03 + 0.01 * base.xs[i];
  auto sol = solve_linear_layer(base, in);
  // both representations of psi agree: psi = hu * int(Psi / hu)
  for (std::size_t i = 1; i < base.xs.size(); ++i) {
    std::vector<double> ratio(base.grid.size());
    for (std::size_t j = 0; j < base.grid.size(); ++j)
      ratio[j] = sol.Psi(i, j) / base.hu(i, j);
    auto I = cumtrapz(ratio, base.grid);
    for (std::size_t j = 0; j < base.grid.size(); ++j)
      CHECK(sol.psi(i, j) == doctest::Approx(base.hu(i, j) * I[j]).epsilon(1e-12));
  }
}

TEST_CASE("transformed system agrees with the untransformed one (dual route)") {
  SynthBase sb;
  double gaps[3] = {0, 0, 0};
  const std::size_t nxs[3] = {26, 51, 101};
  const std::size_t nys[3] = {801, 1601, 3201};
  for (int lev = 0; lev < 3; ++lev) {
    auto gx = build_x_grid(0.08, nxs[lev]);
    auto gy = build_y_grid(6.0, nys[lev], 1.0);
    auto base = sb.base(gx, gy, 0.0, 1.0, 1.4);
    const std::size_t nx = gx.size(), ny = gy.size();

    auto in = zero_inputs(nx, ny);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        const double x = gx.nodes[i], y = gy.nodes[j];
        in.G1(i, j) = 0.035 * (1.0 + 0.3 * std::sin(2.0 * x)) * std::exp(-3.5 * y);
        in.G2(i, j) = 0.03 * std::cos(3.0 * x) * y * std::exp(-2.0 * y);
        in.G3(i, j) = 0.02 * std::sin(x + 0.4) * std::exp(-y);
        in.G4(i, j) = 0.035 * std::cos(2.0 * x) * std::exp(-1.5 * y);
      }
    auto hom = homogenize(base, in);

    // synthetic transformed fields with exact continuity
    Array2D ub(nx, ny), vb(nx, ny), Tp(nx, ny);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        const double x = gx.nodes[i], y = gy.nodes[j];
        const double a = 0.04 + 0.025 * std::sin(2.5 * x);
        const double apx = 0.0625 * std::cos(2.5 * x);
        ub(i, j) = 0.035 * y * std::exp(-y) + a * y * y * std::exp(-1.2 * y);
        // IB for B = y^2 e^{-1.2 y}
        const double lam = 1.2;
        const double IB = (2.0 - std::exp(-lam * y) * (lam * lam * y * y + 2.0 * lam * y + 2.0)) /
                          (lam * lam * lam);
        vb(i, j) = -apx * IB;
        Tp(i, j) = 0.05 * std::cos(1.5 * x) * y * std::exp(-y);
      }
    // map to the untransformed unknowns with the same P bookkeeping
    Array2D rho_p(nx, ny), u_p(nx, ny), v_p(nx, ny);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        const double r0 = base.rho0(i, j);
        rho_p(i, j) = r0 * hom.P1(i, j) - r0 * r0 * Tp(i, j);
        u_p(i, j) = base.T0(i, j) * ub(i, j) - rho_p(i, j) * base.T0(i, j) * base.u0(i, j);
        v_p(i, j) = base.T0(i, j) * vb(i, j) - rho_p(i, j) * base.T0(i, j) * base.v0(i, j) +
                    base.T0(i, j) * hom.P2(i, j);
      }

    auto orig = linear_system_residuals(base, in, rho_p, u_p, v_p, Tp);
    auto trans = transformed_residuals(base, in, hom, ub, vb, Tp);

    double g = 0.0;
    for (std::size_t i = 5; i < nx; ++i)
      for (std::size_t j = 1; j + 1 < ny; ++j) {
        g = std::max(g, std::abs(orig.eq2(i, j) - trans.cont(i, j)));
        g = std::max(g, std::abs(orig.eq4(i, j) - trans.heat(i, j)));
        g = std::max(g, std::abs(orig.eq3(i, j) - trans.mom(i, j) -
                                 0.5 * base.m(i, j) * trans.heat(i, j)));
      }
    gaps[lev] = g;
  }
  const double slope = std::log2(gaps[0] / gaps[2]) / 2.0;
  CHECK(slope == doctest::Approx(2.0).epsilon(0.15));
  CHECK(gaps[2] <= 1e-6);
}

TEST_CASE("linear pseudo-entropy equation agrees with the heat route") {
  SynthBase sb;
  double gaps[3];
  const std::size_t nxs[3] = {25, 49, 97};
  const std::size_t nys[3] = {201, 401, 801};
  for (int lev = 0; lev < 3; ++lev) {
    auto gx = build_x_grid(0.08, nxs[lev]);
    auto gy = build_y_grid(6.0, nys[lev], 1.0);
    auto base = sb.base(gx, gy, 0.1, 1.0, 1.4);
    const std::size_t nx = gx.size(), ny = gy.size();
    auto in = zero_inputs(nx, ny);
    auto hom = homogenize(base, in);
    LayerSolution sol;
    sol.psi = Array2D(nx, ny);
    sol.Theta = Array2D(nx, ny);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        const double x = gx.nodes[i], y = gy.nodes[j];
        sol.psi(i, j) = 0.05 * (1.0 + 0.4 * std::sin(2.0 * x)) * y * y * std::exp(-y);
        sol.Theta(i, j) = 0.06 * std::cos(1.8 * x + 0.2) * y * std::exp(-1.3 * y);
      }
    auto w = weight_samples(gy, 2.0);
    auto res = linear_entropy_residual(base, hom, sol, in, 1, w);
    gaps[lev] = res.identity_gap;
  }
  const double slope = std::log2(gaps[0] / gaps[2]) / 2.0;
  CHECK(slope == doctest::Approx(2.0).epsilon(0.15));
  CHECK(gaps[2] <= 1e-6);
}

TEST_CASE("entropy residual collapses when q vanishes") {
  SynthBase sb;
  auto gx = build_x_grid(0.08, 25);
  auto gy = build_y_grid(6.0, 101, 1.0);
  auto base = sb.base(gx, gy, 0.1, 1.0, 1.4);
  auto in = zero_inputs(gx.size(), gy.size());
  auto hom = homogenize(base, in);
  LayerSolution sol;
  sol.psi = Array2D(gx.size(), gy.size(), 0.0);
  sol.Theta = Array2D(gx.size(), gy.size());
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < gy.size(); ++j)
      sol.Theta(i, j) = 0.1 * std::sin(2.0 * gx.nodes[i]) * gy.nodes[j] *
                        std::exp(-gy.nodes[j]);
  auto w = weight_samples(gy, 2.0);
  auto res = linear_entropy_residual(base, hom, sol, in, 1, w);
  CHECK(res.identity_gap <= 1e-10);
}

TEST_CASE("linear norms are finite and monotone") {
  auto traj = base_march();
  auto base = LinearBase::from_trajectory(traj, 1e-3);
  auto in = zero_inputs(base.xs.size(), base.grid.size());
  for (std::size_t i = 0; i < base.xs.size(); ++i) in.u_wall[i] = 0.02;
  auto sol = solve_linear_layer(base, in);
  auto w = weight_samples(base.grid, 4.0);
  auto rep = linear_norms(base, sol, w, 2);
  CHECK(rep.finite());
  for (std::size_t i = 1; i < rep.X_by_order.size(); ++i) {
    CHECK(rep.X_by_order[i] >= rep.X_by_order[i - 1]);
    CHECK(rep.Y_by_order[i] >= rep.Y_by_order[i - 1]);
  }
}
