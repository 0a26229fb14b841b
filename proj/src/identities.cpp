#include "cpl/identities.hpp"

#include <cmath>
#include <random>

#include "cpl/diagnostics.hpp"
#include "cpl/prandtl_linear.hpp"
#include "cpl/synthetic.hpp"

namespace cpl {

namespace {

double fit_slope(const std::vector<double>& gaps) {
  // asymptotic halving exponent: the finest level pair (factor-2 grids)
  const std::size_t n = gaps.size();
  return std::log2(gaps[n - 2] / gaps[n - 1]);
}

// rms of (a + sign*b) over the x-valid window, interior y rows
double rms_gap(const Array2D& a, const Array2D& b, double sign, std::size_t i0) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = i0; i < a.nx(); ++i)
    for (std::size_t j = 1; j + 1 < a.ny(); ++j) {
      const double d = a(i, j) + sign * b(i, j);
      acc += d * d;
      ++n;
    }
  return std::sqrt(acc / static_cast<double>(n));
}

struct Level {
  std::size_t nx, ny;
};

const Level kLevels[3] = {{21, 401}, {41, 801}, {81, 1601}};
const Level kLevelsEnt[3] = {{25, 401}, {49, 801}, {97, 1601}};

// randomized linear-layer synthetic bundle (base + fields + forcings)
struct LinSet {
  double c0, c1, aw, a0, a1, tA, tw, tb;
  double fw1, fa1, fw2, fa2, fw3, fa3, fw4, fa4;
  double uamp, ufreq, tamp, tfreq, lamB;

  static LinSet randomized(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LinSet s;
    s.c0 = 0.5 + 0.1 * u(rng);
    s.c1 = 0.5 + 0.1 * u(rng);
    s.aw = 2.0 + 0.5 * u(rng);
    s.a0 = 0.04 * (1.0 + 0.25 * u(rng));
    s.a1 = 0.04 * (1.0 + 0.25 * u(rng));
    s.tA = 0.15 * (1.0 + 0.3 * u(rng));
    s.tw = 1.5 + 0.5 * u(rng);
    s.tb = 0.05 * (1.0 + 0.25 * u(rng));
    s.fw1 = 2.0 + u(rng);
    s.fa1 = 0.035 * (1.0 + 0.25 * u(rng));
    s.fw2 = 3.0 + u(rng);
    s.fa2 = 0.03 * (1.0 + 0.25 * u(rng));
    s.fw3 = 1.0 + 0.5 * u(rng);
    s.fa3 = 0.02 * (1.0 + 0.25 * u(rng));
    s.fw4 = 2.0 + u(rng);
    s.fa4 = 0.035 * (1.0 + 0.25 * u(rng));
    s.uamp = 0.035 * (1.0 + 0.25 * u(rng));
    s.ufreq = 2.5 + 0.5 * u(rng);
    s.tamp = 0.05 * (1.0 + 0.25 * u(rng));
    s.tfreq = 1.5 + 0.5 * u(rng);
    s.lamB = 1.2 + 0.2 * u(rng);
    return s;
  }

  double T0(double x, double y) const {
    return 1.0 + tA * std::exp(-y) + tb * std::cos(tw * x) * y * std::exp(-y);
  }
  double m0(double y) const { return c0 + c1 * (1.0 - std::exp(-y)); }
  double a(double x) const { return a0 + a1 * std::sin(aw * x); }
  double ap(double x) const { return a1 * aw * std::cos(aw * x); }
  double u0(double x, double y) const {
    return T0(x, y) * (m0(y) + a(x) * y * std::exp(-y));
  }
  double v0(double x, double y) const {
    return -T0(x, y) * ap(x) * (1.0 - std::exp(-y) * (1.0 + y));
  }

  LinearBase base(const Grid1D& gx, const Grid1D& gy, double theta, double mu,
                  double kappa) const {
    return LinearBase::from_closures(
        [this](double x, double y) { return u0(x, y); },
        [this](double x, double y) { return v0(x, y); },
        [this](double x, double y) { return T0(x, y); }, gx, gy, theta, mu, kappa);
  }
};

IdentityResult quotient_identity(const SyntheticPrandtl& s) {
  IdentityResult res;
  res.name = "quotient-vs-momentum";
  for (const Level& lv : kLevels) {
    auto gx = build_x_grid(0.08, lv.nx);
    auto gy = build_y_grid(5.0, lv.ny, 1.0);
    auto t = make_synthetic_trajectory(s, gx, gy, 0.1, 1.0, 1.4);
    auto w = weight_samples(gy, 2.0);
    auto A = quotient_equation_residual(t, w);
    auto B = momentum_route_residual(t);
    res.gaps.push_back(rms_gap(A.r, B, 1.0, 5));
  }
  res.slope = fit_slope(res.gaps);
  res.finest_gap = res.gaps.back();
  return res;
}

IdentityResult entropy_identity(const SyntheticPrandtl& s) {
  IdentityResult res;
  res.name = "pseudo-entropy-vs-heat";
  for (const Level& lv : kLevelsEnt) {
    auto gx = build_x_grid(0.08, lv.nx);
    auto gy = build_y_grid(5.0, lv.ny, 1.0);
    auto t = make_synthetic_trajectory(s, gx, gy, 0.1, 1.0, 1.4);
    auto th = compute_theta_field(t);
    auto w = weight_samples(gy, 2.0);
    auto er = pseudo_entropy_residual(t, th, 1, w);
    res.gaps.push_back(rms_gap(er.entropy_route, er.heat_route, -1.0, er.first_valid));
  }
  res.slope = fit_slope(res.gaps);
  res.finest_gap = res.gaps.back();
  return res;
}

IdentityResult linear_entropy_identity(const LinSet& s) {
  IdentityResult res;
  res.name = "linear-entropy-vs-heat";
  for (const Level& lv : kLevelsEnt) {
    auto gx = build_x_grid(0.08, lv.nx);
    auto gy = build_y_grid(6.0, lv.ny, 1.0);
    auto base = s.base(gx, gy, 0.1, 1.0, 1.4);
    auto in = zero_inputs(gx.size(), gy.size());
    auto hom = homogenize(base, in);
    LayerSolution sol;
    sol.psi = Array2D(gx.size(), gy.size());
    sol.Theta = Array2D(gx.size(), gy.size());
    for (std::size_t i = 0; i < gx.size(); ++i)
      for (std::size_t j = 0; j < gy.size(); ++j) {
        const double x = gx.nodes[i], y = gy.nodes[j];
        sol.psi(i, j) = s.uamp * (1.0 + 0.4 * std::sin(s.ufreq * x)) * y * y * std::exp(-y);
        sol.Theta(i, j) = s.tamp * std::cos(s.tfreq * x + 0.2) * y * std::exp(-s.lamB * y);
      }
    auto w = weight_samples(gy, 2.0);
    auto lr = linear_entropy_residual(base, hom, sol, in, 1, w);
    res.gaps.push_back(rms_gap(lr.entropy_route, lr.heat_route, -1.0, lr.first_valid));
  }
  res.slope = fit_slope(res.gaps);
  res.finest_gap = res.gaps.back();
  return res;
}

IdentityResult reformulation_identity(const LinSet& s) {
  IdentityResult res;
  res.name = "linear-reformulation";
  for (const Level& lv : kLevels) {
    auto gx = build_x_grid(0.08, lv.nx);
    auto gy = build_y_grid(6.0, lv.ny, 1.0);
    auto base = s.base(gx, gy, 0.0, 1.0, 1.4);
    const std::size_t nx = gx.size(), ny = gy.size();
    auto in = zero_inputs(nx, ny);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        const double x = gx.nodes[i], y = gy.nodes[j];
        in.G1(i, j) = s.fa1 * (1.0 + 0.3 * std::sin(s.fw1 * x)) * std::exp(-3.5 * y);
        in.G2(i, j) = s.fa2 * std::cos(s.fw2 * x) * y * std::exp(-2.0 * y);
        in.G3(i, j) = s.fa3 * std::sin(s.fw3 * x + 0.4) * std::exp(-y);
        in.G4(i, j) = s.fa4 * std::cos(s.fw4 * x) * std::exp(-1.5 * y);
      }
    auto hom = homogenize(base, in);

    Array2D ub(nx, ny), vb(nx, ny), Tp(nx, ny);
    const double lam = s.lamB;
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j) {
        const double x = gx.nodes[i], y = gy.nodes[j];
        const double aa = 0.04 + s.uamp * std::sin(s.ufreq * x);
        const double apx = s.uamp * s.ufreq * std::cos(s.ufreq * x);
        ub(i, j) = 0.05 * y * std::exp(-y) + aa * y * y * std::exp(-lam * y);
        const double IB =
            (2.0 - std::exp(-lam * y) * (lam * lam * y * y + 2.0 * lam * y + 2.0)) /
            (lam * lam * lam);
        vb(i, j) = -apx * IB;
        Tp(i, j) = s.tamp * std::cos(s.tfreq * x) * y * std::exp(-y);
      }
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
    Array2D mom_combo(nx, ny, 0.0);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j)
        mom_combo(i, j) = trans.mom(i, j) + 0.5 * base.m(i, j) * trans.heat(i, j);
    const double g = std::max({rms_gap(orig.eq2, trans.cont, -1.0, 5),
                               rms_gap(orig.eq4, trans.heat, -1.0, 5),
                               rms_gap(orig.eq3, mom_combo, -1.0, 5)});
    res.gaps.push_back(g);
  }
  res.slope = fit_slope(res.gaps);
  res.finest_gap = res.gaps.back();
  return res;
}

}  // namespace

std::vector<IdentityResult> run_identity_set(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto sp = SyntheticPrandtl::randomized(rng);
  auto ls = LinSet::randomized(rng);
  return {quotient_identity(sp), entropy_identity(sp), linear_entropy_identity(ls),
          reformulation_identity(ls)};
}

IdentitySuiteReport run_identity_suite(std::uint64_t seed, int n_sets) {
  IdentitySuiteReport rep;
  for (int s = 0; s < n_sets; ++s) {
    auto set = run_identity_set(seed + static_cast<std::uint64_t>(s));
    for (const auto& r : set) {
      rep.all_pass = rep.all_pass && r.pass();
      rep.worst_gap = std::max(rep.worst_gap, r.finest_gap);
      rep.slope_min = std::min(rep.slope_min, r.slope);
      rep.slope_max = std::max(rep.slope_max, r.slope);
    }
    rep.sets.push_back(std::move(set));
  }
  return rep;
}

}  // namespace cpl
