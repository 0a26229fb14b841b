#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cpl/background.hpp"
#include "cpl/diagnostics.hpp"
#include "cpl/grid.hpp"
#include "cpl/prandtl.hpp"
#include "cpl/synthetic.hpp"

using namespace cpl;

namespace {

Trajectory example_traj(double L = 0.05, std::size_t n_x = 51, std::size_t n_y = 201,
                        double theta = 1e-3) {
  auto data = make_example_data(1.0, 1.0, 1.35);
  ShearFlow flow(1.35, 1.38, 1.0);
  auto g = build_y_grid(20.0, n_y, 1.0);
  Prandtl0Problem prob{data, flow, 1.0, 1.0, L, n_x, {}};
  return march_trajectory(prob, theta, g);
}

}  // namespace

TEST_CASE("quotient basics") {
  auto gx = build_x_grid(0.1, 9);
  auto gy = build_y_grid(5.0, 33, 1.0);
  // vbar == 0 -> q == 0
  auto t0 = make_synthetic_trajectory([](double, double y) { return 0.5 + y * 0.0; },
                                      [](double, double) { return 0.0; },
                                      [](double, double) { return 1.0; }, gx, gy, 0.1, 1.0,
                                      1.0);
  auto q0 = compute_quotient(t0);
  for (std::size_t i = 0; i < q0.q.nx(); ++i)
    for (std::size_t j = 0; j < q0.q.ny(); ++j) CHECK(q0.q(i, j) == 0.0);

  // vbar == ubar_theta -> q == 1
  auto t1 = make_synthetic_trajectory([](double, double) { return 0.5; },
                                      [](double, double) { return 0.6; },
                                      [](double, double) { return 1.0; }, gx, gy, 0.1, 1.0,
                                      1.0);
  auto q1 = compute_quotient(t1);
  for (std::size_t i = 0; i < q1.q.nx(); ++i)
    for (std::size_t j = 0; j < q1.q.ny(); ++j)
      CHECK(q1.q(i, j) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("corner flatness on solver output") {
  auto traj = example_traj();
  auto qf = compute_quotient(traj);
  CHECK(qf.corner_q + qf.corner_qy <= 1e-8);
}

TEST_CASE("quotient residual vanishes for x-independent shear with constant T") {
  auto gx = build_x_grid(0.1, 11);
  auto gy = build_y_grid(6.0, 41, 1.0);
  auto t = make_synthetic_trajectory(
      [](double, double y) { return 0.4 + 0.3 * (1.0 - std::exp(-y)); },
      [](double, double) { return 0.0; }, [](double, double) { return 1.2; }, gx, gy, 0.1,
      1.0, 1.0);
  auto w = weight_samples(gy, 2.0);
  auto rf = quotient_equation_residual(t, w);
  CHECK(max_abs_interior(rf.r, rf.first_valid) < 1e-11);
}

TEST_CASE("quotient equation agrees with the differentiated momentum route") {
  // dual-route algebraic identity on synthetic fields, refinement slope ~ 2
  std::mt19937_64 rng(11);
  auto s = SyntheticPrandtl::randomized(rng);
  double gaps[3];
  const std::size_t nxs[3] = {21, 41, 81};
  const std::size_t nys[3] = {401, 801, 1601};
  for (int lev = 0; lev < 3; ++lev) {
    auto gx = build_x_grid(0.08, nxs[lev]);
    auto gy = build_y_grid(5.0, nys[lev], 1.0);
    auto t = make_synthetic_trajectory(s, gx, gy, 0.1, 1.0, 1.4);
    auto w = weight_samples(gy, 2.0);
    auto A = quotient_equation_residual(t, w);
    auto B = momentum_route_residual(t);
    Array2D sum(A.r.nx(), A.r.ny());
    for (std::size_t i = 0; i < sum.nx(); ++i)
      for (std::size_t j = 0; j < sum.ny(); ++j) sum(i, j) = A.r(i, j) + B(i, j);
    gaps[lev] = max_abs_interior(sum, 5);
  }
  const double slope = std::log2(gaps[0] / gaps[2]) / 2.0;
  CHECK(slope == doctest::Approx(2.0).epsilon(0.15));
  CHECK(gaps[2] <= 1e-6);
}

TEST_CASE("theta field boundary structure") {
  auto traj = example_traj(0.02, 21, 201);
  auto th = compute_theta_field(traj);
  CHECK(th.corner <= 1e-10);            // NBC: Theta_y(x,0) = 0 via the closure
  CHECK(th.far_field_gap <= 1e-6);      // T_far = 1 here, so Theta -> 0
  // DBC variant
  auto data = make_example_data(1.0, 1.0, 1.35, ThermalMode::DBC, 2.2);
  ShearFlow flow(1.35, 1.38, 1.0);
  auto g = build_y_grid(20.0, 201, 1.0);
  auto Tb = [](double x) { return 2.2 - 0.4 * x; };
  Prandtl0Problem prob{data, flow, 1.0, 1.0, 0.02, 21, Tb};
  auto tdbc = march_trajectory(prob, 1e-3, g);
  auto thd = compute_theta_field(tdbc, Tb);
  CHECK(thd.corner <= 1e-12);           // DBC: Theta(x,0) = 0 exactly
}

TEST_CASE("pseudo-entropy boundary condition and collapse for q == 0") {
  auto gx = build_x_grid(0.1, 13);
  auto gy = build_y_grid(6.0, 61, 1.0);
  // vbar == 0: S_k = dx^k Theta and the two routes coincide identically
  auto t = make_synthetic_trajectory(
      [](double x, double y) { return 0.5 + 0.1 * std::sin(2.0 * x) * (1 - std::exp(-y)); },
      [](double, double) { return 0.0; },
      [](double x, double y) { return 1.0 + 0.1 * std::cos(x) * y * y * std::exp(-y); }, gx,
      gy, 0.1, 1.0, 1.0);
  auto th = compute_theta_field(t);
  auto w = weight_samples(gy, 2.0);
  for (int k = 1; k <= 2; ++k) {
    auto res = pseudo_entropy_residual(t, th, k, w);
    CHECK(res.identity_gap <= 1e-10);
  }
}

TEST_CASE("pseudo-entropy equation agrees with the differentiated heat route") {
  std::mt19937_64 rng(23);
  auto s = SyntheticPrandtl::randomized(rng);
  double gaps[3];
  const std::size_t nxs[3] = {25, 49, 97};
  const std::size_t nys[3] = {401, 801, 1601};
  for (int lev = 0; lev < 3; ++lev) {
    auto gx = build_x_grid(0.08, nxs[lev]);
    auto gy = build_y_grid(5.0, nys[lev], 1.0);
    auto t = make_synthetic_trajectory(s, gx, gy, 0.1, 1.0, 1.4);
    auto th = compute_theta_field(t);
    auto w = weight_samples(gy, 2.0);
    auto res = pseudo_entropy_residual(t, th, 1, w);
    gaps[lev] = res.identity_gap;
  }
  const double slope = std::log2(gaps[0] / gaps[2]) / 2.0;
  CHECK(slope == doctest::Approx(2.0).epsilon(0.15));
  CHECK(gaps[2] <= 1e-6);
}

namespace {

// weighted L2 restricted to x >= x_min: refinement comparisons must use a
// common window clear of the x = 0 corner transient
double restricted_norm(const Array2D& r, const Trajectory& t, const Weight& w, double x_min) {
  double acc = 0.0;
  const double dx = t.slices[1].x - t.slices[0].x;
  for (std::size_t i = 0; i < r.nx(); ++i) {
    if (t.slices[i].x < x_min) continue;
    std::vector<double> tmp(r.ny());
    for (std::size_t j = 0; j < r.ny(); ++j) {
      const double v = r(i, j) * w.samples[j];
      tmp[j] = v * v;
    }
    acc += trapz(tmp, t.grid) * dx;
  }
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("residual norms decrease under refinement on solver output") {
  double r_coarse, r_fine, e_coarse, e_fine;
  {
    auto t = example_traj(0.05, 26, 101);
    auto w = weight_samples(t.grid, 2.0);
    auto th = compute_theta_field(t);
    r_coarse = restricted_norm(quotient_equation_residual(t, w).r, t, w, 0.015);
    e_coarse = restricted_norm(pseudo_entropy_residual(t, th, 1, w).entropy_route, t, w, 0.015);
  }
  {
    auto t = example_traj(0.05, 101, 401);
    auto w = weight_samples(t.grid, 2.0);
    auto th = compute_theta_field(t);
    r_fine = restricted_norm(quotient_equation_residual(t, w).r, t, w, 0.015);
    e_fine = restricted_norm(pseudo_entropy_residual(t, th, 1, w).entropy_route, t, w, 0.015);
  }
  CHECK(std::log2(r_coarse / r_fine) / 2.0 >= 0.5);  // slope >= 1 over ratio-4 refinement
  CHECK(std::log2(e_coarse / e_fine) / 2.0 >= 0.5);
}

TEST_CASE("norm report: finiteness, monotonicity in m and in L") {
  auto t = example_traj(0.05, 51, 151);
  auto w = weight_samples(t.grid, 6.0);
  auto th = compute_theta_field(t);
  auto rep = norms(t, th, w, 3, 3.0);
  CHECK(rep.finite());
  for (std::size_t i = 1; i < rep.X_by_order.size(); ++i) {
    CHECK(rep.X_by_order[i] >= rep.X_by_order[i - 1]);
    CHECK(rep.Y_by_order[i] >= rep.Y_by_order[i - 1]);
  }
  // domain monotonicity: same march truncated at L/2
  auto t2 = example_traj(0.025, 26, 151);
  auto th2 = compute_theta_field(t2);
  auto rep2 = norms(t2, th2, w, 3, 3.0);
  CHECK(rep2.X_by_order.back() <= rep.X_by_order.back() + 1e-12);
  CHECK(rep2.Y_by_order.back() <= rep.Y_by_order.back() + 1e-12);
  CHECK(rep2.triple_v <= rep.triple_v + 1e-12);
  CHECK(rep2.triple_theta <= rep.triple_theta + 1e-12);
}

TEST_CASE("zero fields give the constant offsets") {
  auto gx = build_x_grid(0.1, 11);
  auto gy = build_y_grid(5.0, 41, 1.0);
  auto t = make_synthetic_trajectory([](double, double) { return 0.0; },
                                     [](double, double) { return 0.0; },
                                     [](double, double) { return 1.0; }, gx, gy, 0.1, 1.0,
                                     1.0);
  auto th = compute_theta_field(t);
  auto w = weight_samples(gy, 2.0);
  auto rep = norms(t, th, w, 2, 1.0);
  CHECK(rep.X_by_order.back() == 0.0);
  CHECK(rep.Y_by_order.back() == 0.0);
  CHECK(rep.triple_v == doctest::Approx(1.0));  // the additive 1 in |||vbar|||
  CHECK(rep.triple_theta == doctest::Approx(0.0));
}
