#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpl/euler_layer.hpp"
#include "cpl/grid.hpp"

using namespace cpl;

namespace {

Grid1D yg(double H, std::size_t n) { return build_y_grid(H, n, 1.0); }

}  // namespace

TEST_CASE("subsonic margin values") {
  auto g = yg(15.0, 61);
  ShearFlow unit(1.0, 1.0, 1.0);
  CHECK(subsonic_margin(unit, g) == doctest::Approx(1.0));
  ShearFlow dflt(0.5, 1.0, 0.8);
  CHECK(subsonic_margin(dflt, g) > 0.0);
  // a supersonic profile cannot even be constructed
  CHECK_THROWS_AS(ShearFlow(2.0, 2.0, 1.0), std::invalid_argument);
  // direct arithmetic on the violating values
  CHECK(2.0 * 1.0 - 2.0 * 2.0 == doctest::Approx(-2.0));
}

TEST_CASE("coefficients positive and two transcriptions agree") {
  auto g = yg(15.0, 101);
  ShearFlow flow(0.5, 1.0, 0.8);
  auto c = coeffs_from_flow(flow, g);
  for (std::size_t j = 0; j < g.size(); ++j) {
    CHECK(c.a11[j] > 0.0);
    CHECK(c.a22[j] > 0.0);
    // independent transcription of the displayed coefficient expressions
    const double Y = g.nodes[j];
    const double rho = flow.rho(Y), u = flow.u(Y), T = flow.T(Y);
    const double a11 = rho * T * u / (2.0 * T - std::abs(u) * std::abs(u));
    const double a22 = 0.5 * rho * u;
    const double b1 =
        T * (rho * flow.u(Y, 1) - u * flow.rho(Y, 1) - 2.0 * rho / u * flow.T(Y, 1)) /
            (2.0 * T - u * u) +
        rho / u * flow.T(Y, 1);
    CHECK(std::abs(c.a11[j] - a11) <= 1e-12);
    CHECK(std::abs(c.a22[j] - a22) <= 1e-12);
    CHECK(std::abs(c.b1[j] - b1) <= 1e-12);
  }
}

TEST_CASE("boundary lift branches") {
  auto gx = build_x_grid(0.2, 21);
  auto gY = yg(15.0, 61);
  const std::size_t nY = gY.size();

  // all-zero data
  std::vector<double> zero_Y(nY, 0.0), zero_x(gx.size(), 0.0);
  auto l0 = build_lift(zero_Y, zero_Y, zero_x, gx, gY);
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < nY; ++j) CHECK(l0.S1(i, j) == 0.0);

  // generic branch with V0 = VL and constant vp: S1 is x-independent = V0
  std::vector<double> V0(nY), vp(gx.size(), 0.3);
  for (std::size_t j = 0; j < nY; ++j) V0[j] = -0.3 * std::exp(-gY.nodes[j]);
  auto lg = build_lift(V0, V0, vp, gx, gY);
  CHECK(lg.branch == 0);
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < nY; ++j)
      CHECK(lg.S1(i, j) == doctest::Approx(V0[j]).epsilon(1e-13));
  for (std::size_t i = 0; i < gx.size(); ++i)
    CHECK(lg.S1(i, 0) == doctest::Approx(-vp[i]).epsilon(1e-13));

  // mixed branch: vp(0,0) = 0, vp(L,0) != 0
  std::vector<double> vpx(gx.size());
  for (std::size_t i = 0; i < gx.size(); ++i) vpx[i] = 0.5 * gx.nodes[i] / gx.truncation;
  std::vector<double> VL(nY);
  for (std::size_t j = 0; j < nY; ++j) VL[j] = -0.5 * std::exp(-gY.nodes[j]);
  auto lm = build_lift(zero_Y, VL, vpx, gx, gY);
  CHECK(lm.branch == 1);
  for (std::size_t j = 0; j < nY; ++j) CHECK(lm.S1(0, j) == doctest::Approx(0.0));
  for (std::size_t i = 0; i < gx.size(); ++i)
    CHECK(lm.S1(i, 0) == doctest::Approx(-vpx[i]).epsilon(1e-12));

  // incompatible corner data
  std::vector<double> bad = V0;
  bad[0] = 1.0;
  CHECK_THROWS(build_lift(bad, V0, vp, gx, gY));
}

TEST_CASE("zero data gives the zero solution") {
  auto gx = build_x_grid(0.2, 17);
  auto gY = yg(15.0, 33);
  ShearFlow flow(0.5, 1.0, 0.8);
  auto c = coeffs_from_flow(flow, gY);
  std::vector<double> zY(gY.size(), 0.0), zx(gx.size(), 0.0);
  auto lift = build_lift(zY, zY, zx, gx, gY);
  Array2D F(gx.size(), gY.size(), 0.0);
  EllipticSolveReport rep;
  auto V = solve_v(c, lift, F, gx, gY, &rep);
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < gY.size(); ++j) CHECK(std::abs(V(i, j)) < 1e-14);
  CHECK(rep.coercivity > 0.0);
}

TEST_CASE("manufactured elliptic solve converges at order 2") {
  ShearFlow flow(0.5, 1.0, 0.8);
  const double L = 0.4, H = 15.0;
  auto exact = [&](double x, double Y) {
    return std::sin(M_PI * x / L) * Y * std::exp(-Y);
  };
  auto exact_Y = [&](double x, double Y) {
    return std::sin(M_PI * x / L) * (1.0 - Y) * std::exp(-Y);
  };
  auto exact_YY = [&](double x, double Y) {
    return std::sin(M_PI * x / L) * (Y - 2.0) * std::exp(-Y);
  };
  auto exact_xx = [&](double x, double Y) {
    return -std::pow(M_PI / L, 2) * std::sin(M_PI * x / L) * Y * std::exp(-Y);
  };
  // analytic operator application; coefficient slopes by tight central FD
  auto Lop = [&](double x, double Y) {
    const double h = 1e-5;
    auto a11 = [&](double YY) {
      return flow.rho(YY) * flow.T(YY) * flow.u(YY) /
             (2.0 * flow.T(YY) - flow.u(YY) * flow.u(YY));
    };
    auto b1f = [&](double YY) {
      const double sub = 2.0 * flow.T(YY) - flow.u(YY) * flow.u(YY);
      return flow.T(YY) *
                 (flow.rho(YY) * flow.u(YY, 1) - flow.u(YY) * flow.rho(YY, 1) -
                  2.0 * flow.rho(YY) / flow.u(YY) * flow.T(YY, 1)) /
                 sub +
             flow.rho(YY) / flow.u(YY) * flow.T(YY, 1);
    };
    const double a11p = (a11(Y + h) - a11(Y - h)) / (2.0 * h);
    const double b1p = (b1f(Y + h) - b1f(Y - h)) / (2.0 * h);
    const double a22 = 0.5 * flow.rho(Y) * flow.u(Y);
    return -a11p * exact_Y(x, Y) - a11(Y) * exact_YY(x, Y) - a22 * exact_xx(x, Y) +
           b1p * exact(x, Y) + b1f(Y) * exact_Y(x, Y);
  };

  double errs[3];
  const std::size_t ns[3] = {41, 81, 161};
  for (int lev = 0; lev < 3; ++lev) {
    auto gx = build_x_grid(L, ns[lev]);
    auto gY = yg(H, ns[lev]);
    auto c = coeffs_from_flow(flow, gY);
    Array2D rhs(gx.size(), gY.size(), 0.0);
    for (std::size_t i = 1; i + 1 < gx.size(); ++i)
      for (std::size_t j = 1; j + 1 < gY.size(); ++j)
        rhs(i, j) = Lop(gx.nodes[i], gY.nodes[j]);
    auto V = solve_homogeneous(c, rhs, gx, gY);
    double e2 = 0.0;
    for (std::size_t i = 0; i < gx.size(); ++i)
      for (std::size_t j = 0; j < gY.size(); ++j) {
        const double d = V(i, j) - exact(gx.nodes[i], gY.nodes[j]);
        e2 += d * d;
      }
    errs[lev] = std::sqrt(e2 / static_cast<double>(gx.size() * gY.size()));
  }
  const double slope = std::log2(errs[0] / errs[2]) / 2.0;
  CHECK(slope == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("constant-coefficient solve matches the discrete sine-series oracle") {
  const double L = 1.0, H = 2.0;
  auto gx = build_x_grid(L, 33);
  auto gY = yg(H, 41);
  EllipticCoeffs c;
  c.a11.assign(gY.size(), 1.0);
  c.a22.assign(gY.size(), 1.0);
  c.b1.assign(gY.size(), 0.0);
  Array2D rhs(gx.size(), gY.size(), 0.0);
  for (std::size_t i = 1; i + 1 < gx.size(); ++i)
    for (std::size_t j = 1; j + 1 < gY.size(); ++j)
      rhs(i, j) = std::exp(-gY.nodes[j]) * gx.nodes[i] * (L - gx.nodes[i]);
  auto V = solve_homogeneous(c, rhs, gx, gY);

  // diagonalization oracle: discrete sine transform with the 5-point eigenvalues
  const std::size_t ni = gx.size() - 2, nj = gY.size() - 2;
  const double hx = gx.spacing(0), hY = gY.spacing(0);
  Array2D Vo(gx.size(), gY.size(), 0.0);
  std::vector<std::vector<double>> fhat(ni, std::vector<double>(nj, 0.0));
  for (std::size_t m = 1; m <= ni; ++m)
    for (std::size_t n = 1; n <= nj; ++n) {
      double s = 0.0;
      for (std::size_t i = 1; i + 1 < gx.size(); ++i)
        for (std::size_t j = 1; j + 1 < gY.size(); ++j)
          s += rhs(i, j) * std::sin(M_PI * m * gx.nodes[i] / L) *
               std::sin(M_PI * n * gY.nodes[j] / H);
      fhat[m - 1][n - 1] = 4.0 * s / static_cast<double>((ni + 1) * (nj + 1));
    }
  for (std::size_t i = 1; i + 1 < gx.size(); ++i)
    for (std::size_t j = 1; j + 1 < gY.size(); ++j) {
      double s = 0.0;
      for (std::size_t m = 1; m <= ni; ++m)
        for (std::size_t n = 1; n <= nj; ++n) {
          const double lam =
              4.0 / (hx * hx) * std::pow(std::sin(M_PI * m * hx / (2.0 * L)), 2) +
              4.0 / (hY * hY) * std::pow(std::sin(M_PI * n * hY / (2.0 * H)), 2);
          s += fhat[m - 1][n - 1] / lam * std::sin(M_PI * m * gx.nodes[i] / L) *
               std::sin(M_PI * n * gY.nodes[j] / H);
        }
      Vo(i, j) = s;
    }
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < gY.size(); ++j)
      CHECK(std::abs(V(i, j) - Vo(i, j)) < 1e-6);
}

TEST_CASE("transport recovery") {
  auto gx = build_x_grid(0.3, 41);
  auto gY = yg(15.0, 301);
  ShearFlow flow(0.5, 1.0, 0.8);
  const std::size_t nx = gx.size(), nY = gY.size();

  // zero everything stays zero
  {
    Array2D v(nx, nY, 0.0);
    std::vector<double> z(nY, 0.0);
    auto ec = recover_rho_u_T(v, flow, zero_forcing(nx, nY), z, z, z, gx, gY, 1);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < nY; ++j)
        CHECK(std::abs(ec.rho(i, j)) + std::abs(ec.u(i, j)) + std::abs(ec.T(i, j)) == 0.0);
  }

  // manufactured transport: build forcings so prescribed smooth fields are exact
  auto rs = [](double x, double Y) { return 0.2 * std::sin(2.0 * x) * std::exp(-Y); };
  auto us = [](double x, double Y) { return 0.1 * std::cos(x) * std::exp(-0.5 * Y); };
  auto Ts = [](double x, double Y) { return 0.15 * x * (1.0 + x) * std::exp(-Y); };
  auto vs = [](double x, double Y) { return 0.25 * std::sin(3.0 * x) * Y * std::exp(-Y); };
  auto rs_x = [](double x, double Y) { return 0.4 * std::cos(2.0 * x) * std::exp(-Y); };
  auto us_x = [](double x, double Y) { return -0.1 * std::sin(x) * std::exp(-0.5 * Y); };
  auto Ts_x = [](double x, double Y) { return 0.15 * (1.0 + 2.0 * x) * std::exp(-Y); };
  auto vs_Y = [](double x, double Y) {
    return 0.25 * std::sin(3.0 * x) * (1.0 - Y) * std::exp(-Y);
  };

  EulerForcing f = zero_forcing(nx, nY);
  Array2D v(nx, nY);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < nY; ++j) {
      const double x = gx.nodes[i], Y = gY.nodes[j];
      const double rho0 = flow.rho(Y), u0 = flow.u(Y), T0 = flow.T(Y);
      const double rho0Y = flow.rho(Y, 1), u0Y = flow.u(Y, 1), T0Y = flow.T(Y, 1);
      v(i, j) = vs(x, Y);
      f.F1(i, j) = rho0 * us_x(x, Y) + u0 * rs_x(x, Y) + rho0 * vs_Y(x, Y) +
                   rho0Y * vs(x, Y);
      f.F4(i, j) = rho0 * u0 * (Ts_x(x, Y) - T0 / rho0 * rs_x(x, Y) +
                                2.0 / u0 * T0Y * vs(x, Y)) +
                   T0 * f.F1(i, j);
      const double tail = f.F4(i, j) - T0 * f.F1(i, j);
      f.F2(i, j) = (2.0 * T0 - u0 * u0) * rs_x(x, Y) - rho0 * u0 * vs_Y(x, Y) +
                   (rho0 * u0Y - u0 * rho0Y - 2.0 * rho0 / u0 * T0Y) * vs(x, Y) +
                   u0 * f.F1(i, j) + tail / u0;
    }
  std::vector<double> r_in(nY), u_in(nY), T_in(nY);
  for (std::size_t j = 0; j < nY; ++j) {
    r_in[j] = rs(0.0, gY.nodes[j]);
    u_in[j] = us(0.0, gY.nodes[j]);
    T_in[j] = Ts(0.0, gY.nodes[j]);
  }
  auto ec = recover_rho_u_T(v, flow, f, r_in, u_in, T_in, gx, gY, 1);
  double err = 0.0;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < nY; ++j) {
      err = std::max(err, std::abs(ec.rho(i, j) - rs(gx.nodes[i], gY.nodes[j])));
      err = std::max(err, std::abs(ec.T(i, j) - Ts(gx.nodes[i], gY.nodes[j])));
      err = std::max(err, std::abs(ec.u(i, j) - us(gx.nodes[i], gY.nodes[j])));
    }
  CHECK(err < 2e-4);

  // refinement halves dx: error drops ~4x
  auto gx2 = build_x_grid(0.3, 81);
  auto gY2 = gY;
  Array2D v2(gx2.size(), nY);
  EulerForcing f2 = zero_forcing(gx2.size(), nY);
  for (std::size_t i = 0; i < gx2.size(); ++i)
    for (std::size_t j = 0; j < nY; ++j) {
      const double x = gx2.nodes[i], Y = gY2.nodes[j];
      const double rho0 = flow.rho(Y), u0 = flow.u(Y), T0 = flow.T(Y);
      const double rho0Y = flow.rho(Y, 1), u0Y = flow.u(Y, 1), T0Y = flow.T(Y, 1);
      v2(i, j) = vs(x, Y);
      f2.F1(i, j) = rho0 * us_x(x, Y) + u0 * rs_x(x, Y) + rho0 * vs_Y(x, Y) +
                    rho0Y * vs(x, Y);
      f2.F4(i, j) = rho0 * u0 * (Ts_x(x, Y) - T0 / rho0 * rs_x(x, Y) +
                                 2.0 / u0 * T0Y * vs(x, Y)) +
                    T0 * f2.F1(i, j);
      const double tail = f2.F4(i, j) - T0 * f2.F1(i, j);
      f2.F2(i, j) = (2.0 * T0 - u0 * u0) * rs_x(x, Y) - rho0 * u0 * vs_Y(x, Y) +
                    (rho0 * u0Y - u0 * rho0Y - 2.0 * rho0 / u0 * T0Y) * vs(x, Y) +
                    u0 * f2.F1(i, j) + tail / u0;
    }
  auto ec2 = recover_rho_u_T(v2, flow, f2, r_in, u_in, T_in, gx2, gY2, 1);
  double err2 = 0.0;
  for (std::size_t i = 0; i < gx2.size(); ++i)
    for (std::size_t j = 0; j < nY; ++j)
      err2 = std::max(err2, std::abs(ec2.rho(i, j) - rs(gx2.nodes[i], gY2.nodes[j])));
  CHECK(err2 < err);
}

TEST_CASE("wall datum is met to solver tolerance") {
  auto gx = build_x_grid(0.2, 21);
  auto gY = yg(15.0, 41);
  ShearFlow flow(0.5, 1.0, 0.8);
  auto c = coeffs_from_flow(flow, gY);
  std::vector<double> vp(gx.size());
  for (std::size_t i = 0; i < gx.size(); ++i) vp[i] = 0.2 + 0.1 * std::sin(gx.nodes[i]);
  std::vector<double> V0(gY.size()), VL(gY.size());
  for (std::size_t j = 0; j < gY.size(); ++j) {
    V0[j] = -vp.front() * std::exp(-gY.nodes[j]);
    VL[j] = -vp.back() * std::exp(-gY.nodes[j]);
  }
  auto lift = build_lift(V0, VL, vp, gx, gY);
  Array2D F(gx.size(), gY.size(), 0.0);
  EllipticSolveReport rep;
  auto V = solve_v(c, lift, F, gx, gY, &rep);
  for (std::size_t i = 0; i < gx.size(); ++i)
    CHECK(V(i, 0) == doctest::Approx(-vp[i]).epsilon(1e-12));
  CHECK(rep.solver_residual < 1e-10);
  CHECK(rep.coercivity > 0.0);
}
