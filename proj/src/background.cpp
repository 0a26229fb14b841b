#include "cpl/background.hpp"

#include <cmath>
#include <stdexcept>

namespace cpl {

namespace {

constexpr double kCompatTol = 1e-10;

// --- small analytic toolkit -------------------------------------------------

// polynomial with real coefficients, p(y) = sum c_i y^i
struct Poly {
  std::vector<double> c;
  double eval(double y) const {
    double s = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) s = s * y + c[i];
    return s;
  }
  Poly deriv() const {
    if (c.size() <= 1) return Poly{{0.0}};
    Poly d;
    d.c.resize(c.size() - 1);
    for (std::size_t i = 1; i < c.size(); ++i) d.c[i - 1] = static_cast<double>(i) * c[i];
    return d;
  }
  Poly times_y(int k) const {
    Poly r;
    r.c.assign(static_cast<std::size_t>(k), 0.0);
    r.c.insert(r.c.end(), c.begin(), c.end());
    return r;
  }
  Poly scaled(double a) const {
    Poly r = *this;
    for (auto& v : r.c) v *= a;
    return r;
  }
  Poly plus(const Poly& o) const {
    Poly r = *this;
    if (o.c.size() > r.c.size()) r.c.resize(o.c.size(), 0.0);
    for (std::size_t i = 0; i < o.c.size(); ++i) r.c[i] += o.c[i];
    return r;
  }
};

// p(y) * exp(a*y): derivative maps p -> p' + a p
double exp_poly(const Poly& p, double a, double y, int k) {
  Poly q = p;
  for (int i = 0; i < k; ++i) q = q.deriv().plus(q.scaled(a));
  return q.eval(y) * std::exp(a * y);
}

// p(y) * exp(-y^2): derivative maps p -> p' - 2y p
double gauss_poly(const Poly& p, double y, int k) {
  Poly q = p;
  for (int i = 0; i < k; ++i) q = q.deriv().plus(q.times_y(1).scaled(-2.0));
  return q.eval(y) * std::exp(-y * y);
}

// p(y) * exp(-y^4): derivative maps p -> p' - 4 y^3 p
double quartic_exp_poly(const Poly& p, double y, int k) {
  Poly q = p;
  for (int i = 0; i < k; ++i) q = q.deriv().plus(q.times_y(3).scaled(-4.0));
  return q.eval(y) * std::exp(-y * y * y * y);
}

// derivatives of the quintic smoothstep cutoff on its transition interval
double chi_deriv(const Cutoff& cut, double s, int k) {
  if (k == 0) return cut.chi(s);
  if (s < 1.0 || s >= cut.hi) return 0.0;
  const double w = cut.hi - 1.0;
  const double t = (s - 1.0) / w;
  // chi = 1 - (10 t^3 - 15 t^4 + 6 t^5)
  static const double c3[] = {0.0, 0.0, 0.0, -10.0, 15.0, -6.0};
  Poly p{{c3[0], c3[1], c3[2], c3[3], c3[4], c3[5]}};
  for (int i = 0; i < k; ++i) p = p.deriv();
  return p.eval(t) / std::pow(w, k);
}

// uhat(y) = (y + y^{k0} g1(y)) chi(y) + (1 - chi(y)); derivatives by Leibniz
double uhat_eval(const Cutoff& cut, const Poly& inner, double y, int k) {
  // inner = y + y^{k0} g1(y) as a Poly
  double s = (k == 0) ? 1.0 : 0.0;  // the "+1" from chibar
  Poly p = inner;
  std::vector<double> pd(static_cast<std::size_t>(k + 1));
  for (int i = 0; i <= k; ++i) {
    pd[static_cast<std::size_t>(i)] = p.eval(y);
    p = p.deriv();
  }
  double binom = 1.0;
  for (int i = 0; i <= k; ++i) {
    // d^k [ (inner - 1) chi ] = sum C(k,i) inner^{(i)}-ish; handled via (inner*chi) - chi
    if (i > 0) binom = binom * static_cast<double>(k - i + 1) / static_cast<double>(i);
    s += binom * pd[static_cast<std::size_t>(i)] * chi_deriv(cut, y, k - i);
  }
  s -= chi_deriv(cut, y, k);  // from -chi inside (1 - chi) + inner*chi = 1 + (inner-1)*chi
  return s;
}

// ramp that rises as y until 1 then approaches u_far strictly from below:
// U0 = u_far - (u_far - 1)(1 + s t) e^{-2 s t}, t = y - 1, s = 1/(u_far - 1).
// C^2 at the joint (the curvature of the tail vanishes at t = 0) and monotone,
// so sup U0 = u_far is attained only in the limit.
double ramp_blend(double u_far, double y, int k) {
  if (u_far <= 1.0) throw std::logic_error("ramp_blend requires u_far > 1");
  if (y < 1.0) {
    if (k == 0) return y;
    if (k == 1) return 1.0;
    return 0.0;
  }
  const double s = 1.0 / (u_far - 1.0);
  const double base = (k == 0) ? u_far : 0.0;
  return base - (u_far - 1.0) * exp_poly(Poly{{1.0, s}}, -2.0 * s, y - 1.0, k);
}

// classical paper profile y*chi + u_far*(1 - chi)
double paper_profile(const Cutoff& cut, double u_far, double y, int k) {
  // = u_far + (y - u_far) chi
  if (k == 0) return u_far + (y - u_far) * cut.chi(y);
  return (y - u_far) * chi_deriv(cut, y, k) + static_cast<double>(k) * chi_deriv(cut, y, k - 1);
}

// That(y) = That0 e^{-y^4} - (mu/2kappa) y^2 e^{-y^2}
double that_eval(double That0, double mu, double kappa, double y, int k) {
  double s = 0.0;
  if (That0 != 0.0) s += quartic_exp_poly(Poly{{That0}}, y, k);
  s += gauss_poly(Poly{{0.0, 0.0, -mu / (2.0 * kappa)}}, y, k);
  return s;
}

}  // namespace

// --- ShearFlow ---------------------------------------------------------------

ShearFlow::ShearFlow(double u_wall, double u_plus, double T_wall, int deriv_order)
    : u_wall_(u_wall), u_plus_(u_plus), T_wall_(T_wall), deriv_order_(deriv_order) {
  if (!(0.0 < u_wall && u_wall <= u_plus))
    throw std::invalid_argument("ShearFlow: need 0 < u_e0(0) <= u_e^+");
  if (!(0.5 <= T_wall && T_wall <= 2.0))
    throw std::invalid_argument("ShearFlow: need T_e0 in [1/2, 2]");
  // uniform subsonic condition, probed along the profile
  for (int i = 0; i <= 400; ++i) {
    const double Y = 0.1 * static_cast<double>(i);
    if (2.0 * T(Y) - u(Y) * u(Y) <= 0.0)
      throw std::invalid_argument("ShearFlow: subsonic margin 2T - u^2 must stay positive");
  }
}

double ShearFlow::u(double Y, int k) const {
  const double a = u_plus_ - u_wall_;
  if (k == 0) return u_plus_ - a * std::exp(-Y);
  const double sign = (k % 2 == 1) ? 1.0 : -1.0;
  return sign * a * std::exp(-Y);
}

double ShearFlow::T(double Y, int k) const {
  const double a = 1.0 - T_wall_;
  if (k == 0) return 1.0 - a * std::exp(-Y);
  const double sign = (k % 2 == 1) ? 1.0 : -1.0;
  return sign * a * std::exp(-Y);
}

double ShearFlow::rho(double Y, int k) const {
  // rho T = 1: derivatives by the Leibniz recursion rho^{(k)} = -(sum_{i<k} C(k,i) rho^{(i)} T^{(k-i)})/T
  std::vector<double> r(static_cast<std::size_t>(k + 1));
  const double T0 = T(Y, 0);
  r[0] = 1.0 / T0;
  for (int m = 1; m <= k; ++m) {
    double s = 0.0;
    double binom = 1.0;
    for (int i = 0; i < m; ++i) {
      if (i > 0) binom = binom * static_cast<double>(m - i + 1) / static_cast<double>(i);
      s += binom * r[static_cast<std::size_t>(i)] * T(Y, m - i);
    }
    r[static_cast<std::size_t>(m)] = -s / T0;
  }
  return r[static_cast<std::size_t>(k)];
}

double ShearFlow::subsonic_margin(const Grid1D& grid) const {
  double m = 1e300;
  for (double Y : grid.nodes) {
    const double v = 2.0 * T(Y) - u(Y) * u(Y);
    if (v < m) m = v;
  }
  return m;
}

// --- InitialData -------------------------------------------------------------

std::vector<double> InitialData::sample_U0(const Grid1D& g, int k) const {
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = U0(g.nodes[i], k);
  return out;
}

std::vector<double> InitialData::sample_T0(const Grid1D& g, int k) const {
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = T0(g.nodes[i], k);
  return out;
}

const Cutoff& standard_cutoff() {
  static const Cutoff cut{};
  return cut;
}

InitialData make_example_data(double mu, double kappa, double u_far, ThermalMode mode,
                              double Tb0, double T_far_in) {
  if (mu <= 0.0 || kappa <= 0.0)
    throw std::invalid_argument("make_example_data: mu, kappa must be positive");
  if (u_far <= 0.0) throw std::invalid_argument("make_example_data: u_far must be positive");

  InitialData d;
  d.mode = mode;
  d.u_far = u_far;
  d.T_far = T_far_in;
  const double r = mu / kappa;

  if (u_far > 1.0) {
    d.U0 = [u_far](double y, int k) { return ramp_blend(u_far, y, k); };
  } else {
    const Cutoff& cut = standard_cutoff();
    d.U0 = [&cut, u_far](double y, int k) { return paper_profile(cut, u_far, y, k); };
  }

  // T0 = T_far + 3r/2 - (r/2) y^2 on [0,1]; tail T_far + r (1 + a t + b t^2) e^{-lam t}
  // with value/slope/curvature matched at y = 1 (a = lam - 1, b = (lam^2-2lam-1)/2).
  // The tail rate follows the velocity blend so the temperature variation
  // stays inside the region where U0 keeps a margin below u_far.
  const double T_far = d.T_far;
  const double lam = (u_far > 1.0) ? std::min(8.0, 2.0 / (u_far - 1.0)) : 1.0;
  const double ta = lam - 1.0;
  const double tb = 0.5 * (lam * lam - 2.0 * lam - 1.0);
  auto T_nbc = [T_far, r, lam, ta, tb](double y, int k) -> double {
    if (y <= 1.0) {
      Poly p{{T_far + 1.5 * r, 0.0, -0.5 * r}};
      for (int i = 0; i < k; ++i) p = p.deriv();
      return p.eval(y);
    }
    const double base = (k == 0) ? T_far : 0.0;
    return base + exp_poly(Poly{{r, r * ta, r * tb}}, -lam, y - 1.0, k);
  };

  if (mode == ThermalMode::NBC) {
    d.T0 = T_nbc;
  } else {
    if (Tb0 <= 0.0) throw std::invalid_argument("make_example_data: DBC needs Tb0 > 0");
    const Cutoff& cut = standard_cutoff();
    const double shift = Tb0 - T_nbc(0.0, 0);
    d.Tb0 = Tb0;
    d.T0 = [T_nbc, shift, &cut](double y, int k) {
      return T_nbc(y, k) + shift * chi_deriv(cut, y, k);
    };
  }
  return d;
}

InitialData make_low_mach_data(double sigma, int k0, const std::vector<double>& g1_coeffs,
                               double mu, double kappa, ThermalMode mode, double That0) {
  if (sigma <= 0.0 || sigma > 1.0)
    throw std::invalid_argument("make_low_mach_data: sigma must lie in (0, 1]");
  if (k0 < 4) throw std::invalid_argument("make_low_mach_data: k0 must be at least 4");
  if (mode == ThermalMode::NBC) That0 = 0.0;

  // inner polynomial y + y^{k0} g1(y)
  Poly inner{{0.0, 1.0}};
  if (!g1_coeffs.empty()) inner = inner.plus(Poly{g1_coeffs}.times_y(k0));
  const Cutoff& cut = standard_cutoff();
  const double rs = std::sqrt(sigma);

  InitialData d;
  d.mode = mode;
  d.u_far = sigma;
  d.T_far = 1.0;
  d.Tb0 = 1.0 + sigma * sigma * That0;
  d.U0 = [inner, &cut, sigma, rs](double y, int k) {
    return sigma * std::pow(rs, k) * uhat_eval(cut, inner, rs * y, k);
  };
  d.T0 = [That0, mu, kappa, sigma, rs](double y, int k) {
    const double base = (k == 0) ? 1.0 : 0.0;
    return base + sigma * sigma * std::pow(rs, k) * that_eval(That0, mu, kappa, rs * y, k);
  };
  return d;
}

InitialData make_high_subsonic_data(double sigma, double mu, double kappa, ThermalMode mode,
                                    double That0) {
  if (sigma <= 0.0 || sigma > 1.0)
    throw std::invalid_argument("make_high_subsonic_data: sigma must lie in (0, 1]");
  if (mode == ThermalMode::NBC) That0 = 0.0;

  Poly inner{{0.0, 1.0}};
  const Cutoff& cut = standard_cutoff();
  InitialData d;
  d.mode = mode;
  d.u_far = 1.0;
  d.T_far = 1.0;
  d.Tb0 = 1.0 + That0;
  d.U0 = [inner, &cut, sigma](double y, int k) {
    return std::pow(sigma, k) * uhat_eval(cut, inner, sigma * y, k);
  };
  d.T0 = [That0, mu, kappa, sigma](double y, int k) {
    const double base = (k == 0) ? 1.0 : 0.0;
    return base + std::pow(sigma, k) * that_eval(That0, mu, kappa, sigma * y, k);
  };
  return d;
}

CompatReport check_compatibility(const InitialData& data, const ShearFlow& flow,
                                 const Grid1D& grid, double mu, double kappa) {
  CompatReport rep;
  rep.wall_value = data.U0(0.0, 0);
  rep.slope = data.U0(0.0, 1);
  if (rep.slope <= 0.0)
    throw std::runtime_error("check_compatibility: degenerate data, U0'(0) <= 0");
  rep.thermal_residual = kappa * data.T0(0.0, 2) + mu * rep.slope * rep.slope;
  rep.flatness_residual = std::abs(data.U0(0.0, 2)) + std::abs(data.U0(0.0, 3));
  rep.wall_value_ok = std::abs(rep.wall_value) <= kCompatTol;
  rep.slope_positive = true;
  rep.thermal_balance_ok = std::abs(rep.thermal_residual) <= kCompatTol;
  rep.flatness_ok = rep.flatness_residual <= kCompatTol;
  rep.far_gap_u = std::abs(data.U0(grid.truncation, 0) - flow.u(0.0));
  rep.far_gap_T = std::abs(data.T0(grid.truncation, 0) - flow.T(0.0));

  // vbar(0, y) = -ubar * int_0^y (mu u_yy - u (kappa T_yy + mu u_y^2) / (2T)) / (T ubar^2)
  const std::size_t n = grid.size();
  std::vector<double> integrand(n), ubar(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double y = grid.nodes[j];
    const double u = data.U0(y, 0), uy = data.U0(y, 1), uyy = data.U0(y, 2);
    const double T = data.T0(y, 0), Tyy = data.T0(y, 2);
    ubar[j] = u / T;
    if (j == 0) {
      integrand[j] = 0.0;  // 0/0 limit, patched below
      continue;
    }
    const double num = mu * uyy - u / (2.0 * T) * (kappa * Tyy + mu * uy * uy);
    integrand[j] = num / (T * ubar[j] * ubar[j]);
  }
  // quadratic-in-y limit at the wall from the first two interior nodes
  if (n >= 3) {
    const double y1 = grid.nodes[1], y2 = grid.nodes[2];
    integrand[0] = (integrand[1] * y2 - integrand[2] * y1) / (y2 - y1);
  }
  const std::vector<double> I = cumtrapz(integrand, grid);
  rep.vbar0.resize(n);
  for (std::size_t j = 0; j < n; ++j) rep.vbar0[j] = -ubar[j] * I[j];

  // dx ubar|_{x=0} = -d/dy vbar0 ; dx T|_{x=0} per the derived formula
  rep.dx_ubar = d_dy(rep.vbar0, grid, 1);
  for (auto& v : rep.dx_ubar) v = -v;
  rep.dx_T.resize(n);
  for (std::size_t j = 1; j < n; ++j) {
    const double y = grid.nodes[j];
    const double uy = data.U0(y, 1), Ty = data.T0(y, 1), Tyy = data.T0(y, 2);
    rep.dx_T[j] = (kappa * Tyy + mu * uy * uy - 2.0 * rep.vbar0[j] * Ty) / (2.0 * ubar[j]);
  }
  if (n >= 3) {
    const double y1 = grid.nodes[1], y2 = grid.nodes[2];
    rep.dx_T[0] = (rep.dx_T[1] * y2 - rep.dx_T[2] * y1) / (y2 - y1);
  }
  return rep;
}

}  // namespace cpl
