#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpl/background.hpp"
#include "cpl/grid.hpp"

using namespace cpl;

TEST_CASE("cutoff partition and regularity") {
  const Cutoff& cut = standard_cutoff();
  CHECK(cut.chi(0.5) == 1.0);
  CHECK(cut.chi(3.0) == 0.0);
  for (double s = 0.0; s < 3.0; s += 0.01) {
    CHECK(cut.chi(s) + cut.chi_bar(s) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cut.chi(s) >= 0.0);
    CHECK(cut.chi(s) <= 1.0);
  }
  // C^2 at the joints: finite-difference second derivative stays bounded
  for (double s : {1.0, 2.0}) {
    const double h = 1e-5;
    const double d2 = (cut.chi(s + h) - 2.0 * cut.chi(s) + cut.chi(s - h)) / (h * h);
    CHECK(std::abs(d2 - cut.d2chi(s)) < 1e-3);
  }
}

TEST_CASE("shear flow invariants") {
  ShearFlow flow(0.5, 1.0, 0.8);
  auto g = build_y_grid(20.0, 101, 1.0);
  for (double Y : g.nodes) {
    CHECK(flow.rho(Y) * flow.T(Y) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(flow.u(Y) >= flow.u(0.0));
    CHECK(flow.u(Y) <= flow.u_plus());
    CHECK(std::abs(flow.u(Y) - flow.u_plus()) <=
          std::abs(flow.u_plus() - flow.u(0.0)) * std::exp(-Y) + 1e-14);
  }
  CHECK(flow.subsonic_margin(g) > 0.0);
  // analytic rho derivatives against finite differences
  const double h = 1e-5;
  for (int k = 1; k <= 3; ++k) {
    const double fd = (flow.rho(1.0 + h, k - 1) - flow.rho(1.0 - h, k - 1)) / (2.0 * h);
    CHECK(flow.rho(1.0, k) == doctest::Approx(fd).epsilon(1e-7));
  }
  CHECK_THROWS_AS(ShearFlow(2.0, 2.0, 1.0), std::invalid_argument);  // supersonic
}

TEST_CASE("example data compatibility") {
  auto d = make_example_data(1.0, 1.0, 1.0);
  CHECK(d.U0(0.0, 0) == 0.0);
  CHECK(d.U0(0.0, 1) == doctest::Approx(1.0));
  CHECK(d.T0(0.0, 2) == doctest::Approx(-1.0).epsilon(1e-12));

  auto d2 = make_example_data(2.0, 1.0, 1.0);
  CHECK(d2.T0(0.0, 2) == doctest::Approx(-2.0).epsilon(1e-12));

  // thermal ODE holds on [0, 1]
  for (double y = 0.0; y <= 1.0; y += 0.1) {
    const double res = 1.0 * d.T0(y, 2) + 1.0 * d.U0(y, 1) * d.U0(y, 1) * 1.0;
    CHECK(std::abs(res) < 1e-12);
  }
  // exponential approach to T_far beyond
  CHECK(std::abs(d.T0(20.0, 0) - d.T_far) < 2e-5);
}

TEST_CASE("example data ramp stays below its far field for u_far > 1") {
  auto d = make_example_data(1.0, 1.0, 1.35);
  double mx = 0.0;
  for (double y = 0.0; y <= 10.0; y += 0.002) mx = std::max(mx, d.U0(y, 0));
  CHECK(mx <= 1.35 + 1e-12);
  CHECK(d.U0(10.0, 0) == doctest::Approx(1.35));
  // derivative closures match finite differences across the blend
  for (double y : {0.5, 1.05, 1.2, 1.3}) {
    const double h = 1e-6;
    const double fd = (d.U0(y + h, 0) - d.U0(y - h, 0)) / (2.0 * h);
    CHECK(d.U0(y, 1) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("paper profile overshoots for u_far = 1") {
  auto d = make_example_data(1.0, 1.0, 1.0);
  double mx = 0.0;
  for (double y = 1.0; y <= 2.0; y += 0.001) mx = std::max(mx, d.U0(y, 0));
  CHECK(mx > 1.2);  // the classical y*chi + chibar hump
}

TEST_CASE("low-Mach family scalings") {
  auto g = build_y_grid(20.0, 201, 1.0);
  auto d1 = make_low_mach_data(1.0, 4, {}, 1.0, 1.0);
  auto ds = make_low_mach_data(0.1, 4, {}, 1.0, 1.0);
  double tgap = 0.0;
  const double rs = std::sqrt(0.1);
  for (double y : g.nodes) {
    // pointwise: U0^sigma(y) = sigma * uhat(sqrt(sigma) y)
    CHECK(ds.U0(y, 0) == doctest::Approx(0.1 * d1.U0(rs * y, 0)).epsilon(1e-12));
    tgap = std::max(tgap, std::abs(ds.T0(y, 0) - 1.0));
  }
  // sup|T - 1| <= sigma^2 sup|That|
  double that_sup = 0.0;
  for (double y : g.nodes) that_sup = std::max(that_sup, std::abs(d1.T0(y, 0) - 1.0));
  CHECK(tgap <= 0.01 * that_sup + 1e-14);

  // compatibility residual vanishes for every sigma
  for (double sg : {1.0, 0.5, 0.25}) {
    auto d = make_low_mach_data(sg, 4, {}, 1.0, 1.0);
    const double res = d.T0(0.0, 2) + d.U0(0.0, 1) * d.U0(0.0, 1);
    CHECK(std::abs(res) < 1e-10);
    CHECK(std::abs(d.U0(0.0, 2)) + std::abs(d.U0(0.0, 3)) < 1e-10);
  }
  CHECK_THROWS_AS(make_low_mach_data(1.5, 4, {}, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_low_mach_data(0.5, 3, {}, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("high-subsonic family derivative smallness") {
  auto d1 = make_high_subsonic_data(1.0, 1.0, 1.0);
  auto ds = make_high_subsonic_data(0.2, 1.0, 1.0);
  double s1 = 0.0, ss = 0.0;
  for (double y = 0.0; y < 20.0; y += 0.01) {
    s1 = std::max(s1, std::abs(d1.U0(y, 1)));
    ss = std::max(ss, std::abs(ds.U0(y, 1)));
  }
  CHECK(ss == doctest::Approx(0.2 * s1).epsilon(1e-9));
  const double res = ds.T0(0.0, 2) + ds.U0(0.0, 1) * ds.U0(0.0, 1);
  CHECK(std::abs(res) < 1e-10);
  CHECK_THROWS_AS(make_high_subsonic_data(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("check_compatibility on the example data") {
  ShearFlow flow(1.0, 1.0, 1.0);
  auto g = build_y_grid(20.0, 201, 1.0);
  auto d = make_example_data(1.0, 1.0, 1.0);
  auto rep = check_compatibility(d, flow, g, 1.0, 1.0);
  CHECK(rep.all_ok());
  CHECK(std::abs(rep.thermal_residual) <= 1e-10);
  CHECK(rep.vbar0[0] == 0.0);
  // vbar vanishes on [0,1] where the data satisfies the ODE and U0'' = 0
  for (std::size_t j = 0; j < g.size() && g.nodes[j] <= 0.9; ++j)
    CHECK(std::abs(rep.vbar0[j]) < 1e-12);

  // broken third condition flags
  InitialData bad = d;
  bad.U0 = [](double y, int k) {
    if (k == 0) return y + 0.5 * y * y;
    if (k == 1) return 1.0 + y;
    if (k == 2) return 1.0;
    return 0.0;
  };
  auto rep2 = check_compatibility(bad, flow, g, 1.0, 1.0);
  CHECK_FALSE(rep2.flatness_ok);

  // degenerate data errors out
  InitialData flat = d;
  flat.U0 = [](double, int k) { return k == 0 ? 0.0 : 0.0; };
  CHECK_THROWS(check_compatibility(flat, flow, g, 1.0, 1.0));
}

TEST_CASE("low-Mach vbar bound from Remark scaling") {
  // |vbar| <= C sqrt(sigma) uhat(sqrt(sigma) y)^{k0-2}: measure C at sigma=1,
  // require max ratio <= 2C across smaller sigma
  ShearFlow flow(1.0, 1.0, 1.0);
  auto g = build_y_grid(20.0, 201, 1.0);
  const int k0 = 4;
  auto ratio = [&](double sg) {
    auto d = make_low_mach_data(sg, k0, {}, 1.0, 1.0);
    ShearFlow f(sg, sg, 1.0);
    auto rep = check_compatibility(d, f, g, 1.0, 1.0);
    double worst = 0.0;
    auto d1 = make_low_mach_data(1.0, k0, {}, 1.0, 1.0);
    for (std::size_t j = 1; j < g.size(); ++j) {
      const double uh = d1.U0(std::sqrt(sg) * g.nodes[j], 0);  // sigma=1 data is uhat itself
      const double denom = std::sqrt(sg) * std::pow(std::abs(uh), k0 - 2);
      if (denom > 1e-8) worst = std::max(worst, std::abs(rep.vbar0[j]) / denom);
    }
    return worst;
  };
  const double C1 = ratio(1.0);
  CHECK(ratio(0.5) <= 2.0 * C1);
  CHECK(ratio(0.25) <= 2.0 * C1);
}
