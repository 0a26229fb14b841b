#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cpl/grid.hpp"

using namespace cpl;

TEST_CASE("uniform grid basics") {
  auto g = build_y_grid(20.0, 201, 1.0);
  CHECK(g.nodes[0] == 0.0);
  CHECK(g.nodes[200] == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(g.spacing(7) == doctest::Approx(0.1).epsilon(1e-13));
  CHECK(g.spacing_kind == SpacingKind::uniform);
}

TEST_CASE("grid preconditions") {
  CHECK_THROWS_AS(build_y_grid(20.0, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_y_grid(20.0, 64, 1.3), std::invalid_argument);
  CHECK_THROWS_AS(build_y_grid(-1.0, 64, 1.0), std::invalid_argument);
}

TEST_CASE("stretched grid matches the geometric-series oracle") {
  // oracle: direct summation of h0 * r^i
  const double y_max = 40.0, r = 1.05;
  const std::size_t n = 301;
  auto g = build_y_grid(y_max, n, r);
  CHECK(std::abs(g.nodes[n - 1] - y_max) < 1e-12);
  const double h0 = y_max * (r - 1.0) / (std::pow(r, 300.0) - 1.0);
  double acc = 0.0, h = h0;
  for (std::size_t i = 1; i < n; ++i) {
    acc += h;
    h *= r;
    if (i < n - 1) CHECK(g.nodes[i] == doctest::Approx(acc).epsilon(1e-12));
  }
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const double ratio = g.spacing(i + 1) / g.spacing(i);
    CHECK(ratio == doctest::Approx(1.05).epsilon(1e-10));
  }
}

TEST_CASE("weight samples") {
  auto g = build_y_grid(3.0, 16, 1.0);
  auto w = weight_samples(g, 6.0);
  CHECK(w.samples[0] == 1.0);
  // node at y=1 -> 2^6, y=3 with exponent 4 -> 256
  auto g2 = build_y_grid(3.0, 16, 1.0);
  auto w4 = weight_samples(g2, 4.0);
  CHECK(w4.samples.back() == doctest::Approx(256.0).epsilon(1e-13));
  auto g3 = build_y_grid(1.0, 17, 1.0);
  auto w6 = weight_samples(g3, 6.0);
  CHECK(w6.samples.back() == doctest::Approx(64.0).epsilon(1e-13));
  CHECK_THROWS_AS(weight_samples(g, -1.0), std::invalid_argument);
  for (std::size_t i = 1; i < w.samples.size(); ++i) CHECK(w.samples[i] > w.samples[i - 1]);
}

TEST_CASE("stencil exactness on polynomials") {
  auto g = build_y_grid(2.0, 41, 1.0);
  std::vector<double> f(g.size()), expect(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double y = g.nodes[i];
    f[i] = y * y;
    expect[i] = 2.0 * y;
  }
  auto d1 = d_dy(f, g, 1);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(d1[i] == doctest::Approx(expect[i]).epsilon(1e-11));

  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::pow(g.nodes[i], 3);
  auto d3 = d_dy(f, g, 3);
  for (std::size_t i = 1; i + 1 < g.size(); ++i) CHECK(d3[i] == doctest::Approx(6.0).epsilon(1e-8));
}

TEST_CASE("stencils annihilate constants and are linear") {
  auto g = build_y_grid(5.0, 33, 1.1);
  std::vector<double> c(g.size(), 3.7), f(g.size()), h(g.size());
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& v : f) v = dist(rng);
  for (auto& v : h) v = dist(rng);
  const double hmin = g.spacing(0);  // stencil weights scale like h^-k
  for (int k = 1; k <= 4; ++k) {
    auto dc = d_dy(c, g, k);
    const double tol = 1e-12 / std::pow(hmin, k);
    for (double v : dc) CHECK(std::abs(v) < tol);
    auto df = d_dy(f, g, k);
    auto dh = d_dy(h, g, k);
    std::vector<double> lin(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) lin[i] = 2.0 * f[i] - 0.5 * h[i];
    auto dlin = d_dy(lin, g, k);
    for (std::size_t i = 0; i < g.size(); ++i)
      CHECK(dlin[i] == doctest::Approx(2.0 * df[i] - 0.5 * dh[i]).epsilon(1e-10));
  }
}

TEST_CASE("second derivative converges at order 2") {
  // error vs -sin(y) shrinks as O(h^2): slope 2 +- 0.2
  double errs[3];
  std::size_t ns[3] = {41, 81, 161};
  for (int lev = 0; lev < 3; ++lev) {
    auto g = build_y_grid(3.0, ns[lev], 1.0);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::sin(g.nodes[i]);
    auto d2 = d_dy(f, g, 2);
    double e = 0.0;
    for (std::size_t i = 1; i + 1 < g.size(); ++i)
      e = std::max(e, std::abs(d2[i] + std::sin(g.nodes[i])));
    errs[lev] = e;
  }
  const double slope = std::log2(errs[0] / errs[2]) / 2.0;
  CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("weighted_l2 exact for constants and against refined quadrature") {
  auto gy = build_y_grid(2.0, 41, 1.0);
  auto gx = build_x_grid(1.0, 21);
  Weight w1{1.0, std::vector<double>(gy.size(), 1.0)};

  Array2D zero(gx.size(), gy.size(), 0.0);
  CHECK(weighted_l2(zero, w1, gx, gy) == 0.0);

  Array2D one(gx.size(), gy.size(), 1.0);
  CHECK(weighted_l2(one, w1, gx, gy) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));

  // f = exp(-y), w = (1+y)^3 against a 10x refined trapezoid oracle
  auto w3 = weight_samples(gy, 3.0);
  Array2D f(gx.size(), gy.size());
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < gy.size(); ++j) f(i, j) = std::exp(-gy.nodes[j]);
  const double got = weighted_l2(f, w3, gx, gy);

  auto gy_f = build_y_grid(2.0, 401, 1.0);
  auto gx_f = build_x_grid(1.0, 201);
  auto w3f = weight_samples(gy_f, 3.0);
  Array2D ff(gx_f.size(), gy_f.size());
  for (std::size_t i = 0; i < gx_f.size(); ++i)
    for (std::size_t j = 0; j < gy_f.size(); ++j) ff(i, j) = std::exp(-gy_f.nodes[j]);
  const double ref = weighted_l2(ff, w3f, gx_f, gy_f);
  CHECK(std::abs(got - ref) < 1e-4 * ref);

  // monotone in the weight exponent for nonnegative fields
  auto w4 = weight_samples(gy, 4.0);
  CHECK(weighted_l2(f, w4, gx, gy) > got);
}

TEST_CASE("backward x-derivative windows") {
  std::vector<double> xs = {0.0, 0.1, 0.2, 0.3, 0.4};
  std::vector<double> vals(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) vals[i] = 3.0 * xs[i] * xs[i] + 2.0 * xs[i];
  XStencil d1(xs, 1);
  CHECK(d1.apply(vals) == doctest::Approx(3.0 * 2.0 * 0.4 + 2.0).epsilon(1e-10));
  XStencil d2(xs, 2);
  CHECK(d2.apply(vals) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK_THROWS(XStencil({0.0}, 1));
}
