#include "cpl/runner.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "cpl/diagnostics.hpp"
#include "cpl/expansion.hpp"
#include "cpl/identities.hpp"

namespace cpl {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_slice_csv(const fs::path& p, const Grid1D& gy, const PrandtlSlice& s) {
  std::ofstream f(p);
  f << "y,ubar,vbar,T,u,v,rho\n";
  for (std::size_t j = 0; j < gy.size(); ++j) {
    const double T = s.T[j];
    f << fmt(gy.nodes[j]) << ',' << fmt(s.ubar[j]) << ',' << fmt(s.vbar[j]) << ',' << fmt(T)
      << ',' << fmt(T * s.ubar[j]) << ',' << fmt(T * s.vbar[j]) << ',' << fmt(1.0 / T)
      << '\n';
  }
}

void write_field_csv(const fs::path& p, const Grid1D& gx, const Grid1D& gy,
                     const Array2D& f, const std::string& name) {
  std::ofstream o(p);
  o << "x,y," << name << "\n";
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < gy.size(); ++j)
      o << fmt(gx.nodes[i]) << ',' << fmt(gy.nodes[j]) << ',' << fmt(f(i, j)) << '\n';
}

InitialData data_from_config(const RunConfig& cfg) {
  const ThermalMode mode = cfg.mode == "NBC" ? ThermalMode::NBC : ThermalMode::DBC;
  if (cfg.family == "example")
    return make_example_data(cfg.mu, cfg.kappa, cfg.u_far, mode, cfg.Tb, cfg.T_far);
  if (cfg.family == "low_mach")
    return make_low_mach_data(cfg.sigma, cfg.k0, {}, cfg.mu, cfg.kappa, mode, cfg.Tb);
  return make_high_subsonic_data(cfg.sigma, cfg.mu, cfg.kappa, mode, cfg.Tb);
}

ShearFlow flow_from_config(const RunConfig& cfg, const InitialData& data) {
  // the background wall trace matches the data far field
  return ShearFlow(data.u_far, std::max(cfg.u_plus, data.u_far), data.T_far);
}

json base_manifest(const RunConfig& cfg) {
  json m;
  m["case"] = case_kind_name(cfg.kind);
  m["config_hash"] = fnv1a(cfg.source_text);
  m["version"] = "1.0.0";
  json p;
  p["mu"] = cfg.mu;
  p["lambda"] = cfg.lambda;
  p["kappa"] = cfg.kappa;
  p["L"] = cfg.L;
  p["n_x"] = cfg.n_x;
  p["n_y"] = cfg.n_y;
  p["n_Y"] = cfg.n_Y;
  p["y_max"] = cfg.y_max;
  p["Y_max"] = cfg.Y_max;
  p["l"] = cfg.l_exponent;
  p["b"] = cfg.b_exponent;
  p["family"] = cfg.family;
  p["mode"] = cfg.mode;
  m["parameters"] = p;
  return m;
}

int run_prandtl0(const RunConfig& cfg, const fs::path& out) {
  auto data = data_from_config(cfg);
  auto flow = flow_from_config(cfg, data);
  auto gy = build_y_grid(cfg.y_max, cfg.n_y, cfg.stretch);

  auto rep = check_compatibility(data, flow, gy, cfg.mu, cfg.kappa);
  if (!rep.all_ok()) {
    std::cerr << "prandtl0: initial data violates the corner compatibility conditions "
              << "(U0(0)=0, U0'(0)>0, kappa T0''(0) + mu U0'(0)^2 = 0, U0''(0)=U0'''(0)=0)\n";
    return 1;
  }

  Prandtl0Problem prob{data, flow, cfg.mu, cfg.kappa, cfg.L, cfg.n_x, {}};
  MarchOptions opts;
  opts.picard_tol = cfg.picard_tol;
  opts.mp_tol = cfg.mp_tol;
  ThetaSchedule sched = ThetaSchedule::geometric(cfg.theta0, cfg.theta_min, cfg.theta_factor);
  Prandtl0Result res;
  try {
    res = solve_prandtl0(prob, sched, gy, opts);
  } catch (const MarchError& e) {
    std::cerr << "prandtl0: march failed at x = " << e.x_fail << ": " << e.what() << "\n";
    return 2;
  }

  for (std::size_t i = 0; i < res.traj.slices.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "slice_%04zu.csv", i);
    write_slice_csv(out / name, gy, res.traj.slices[i]);
  }

  auto margins = invariant_margins(res.traj);
  auto qf = compute_quotient(res.traj);
  auto mono = monotone_window_check(res.traj, data);

  json m = base_manifest(cfg);
  m["schedule"] = res.thetas;
  m["cauchy_gaps"] = res.cauchy_gaps;
  json inv;
  inv["rho_T_gap"] = margins.rho_T_gap;
  inv["u_min"] = margins.u_min;
  inv["u_max_excess"] = margins.u_max_excess;
  inv["T_min"] = margins.T_min;
  inv["T_max"] = margins.T_max;
  inv["continuity"] = margins.continuity;
  inv["corner_q"] = qf.corner_q;
  inv["corner_qy"] = qf.corner_qy;
  inv["monotone_window_y0"] = mono.y0;
  inv["monotone_window_margin"] = mono.min_du - mono.threshold;
  inv["kappa_equals_2mu"] = (std::abs(cfg.kappa - 2.0 * cfg.mu) < 1e-14);
  m["invariants"] = inv;

  // norm diagnostics
  auto w = weight_samples(gy, cfg.l_exponent);
  auto th = compute_theta_field(res.traj);
  auto nr = norms(res.traj, th, w, cfg.m, 0.5 * cfg.l_exponent);
  json nrj;
  nrj["X_by_order"] = nr.X_by_order;
  nrj["Y_by_order"] = nr.Y_by_order;
  nrj["triple_v"] = nr.triple_v;
  nrj["triple_theta"] = nr.triple_theta;
  nrj["finite"] = nr.finite();
  m["norms"] = nrj;

  std::ofstream(out / "manifest.json") << m.dump(2) << "\n";
  return 0;
}

int run_euler(const RunConfig& cfg, const fs::path& out) {
  ShearFlow flow(cfg.u_far, std::max(cfg.u_plus, cfg.u_far), cfg.T_far);
  auto gx = build_x_grid(cfg.L, cfg.n_x);
  auto gY = build_y_grid(cfg.Y_max, cfg.n_Y, 1.0);
  auto coeffs = coeffs_from_flow(flow, gY);

  // demonstration wall datum: smooth displacement profile
  std::vector<double> vp(gx.size()), V0(gY.size()), VL(gY.size());
  for (std::size_t i = 0; i < gx.size(); ++i) vp[i] = -(0.25 + 0.1 * std::sin(gx.nodes[i]));
  for (std::size_t b = 0; b < gY.size(); ++b) {
    V0[b] = -vp.front() * std::exp(-gY.nodes[b]);
    VL[b] = -vp.back() * std::exp(-gY.nodes[b]);
  }
  auto lift = build_lift(V0, VL, vp, gx, gY);
  Array2D F(gx.size(), gY.size(), 0.0);
  EllipticSolveReport rep;
  Array2D V;
  try {
    V = solve_v(coeffs, lift, F, gx, gY, &rep);
  } catch (const std::exception& e) {
    std::cerr << "euler_layer: " << e.what() << "\n";
    return 2;
  }
  std::vector<double> zero(gY.size(), 0.0);
  auto ec = recover_rho_u_T(V, flow, zero_forcing(gx.size(), gY.size()), zero, zero, zero,
                            gx, gY, 1);
  write_field_csv(out / "v.csv", gx, gY, ec.v, "v");
  write_field_csv(out / "rho.csv", gx, gY, ec.rho, "rho");
  write_field_csv(out / "u.csv", gx, gY, ec.u, "u");
  write_field_csv(out / "T.csv", gx, gY, ec.T, "T");

  json m = base_manifest(cfg);
  m["subsonic_margin"] = subsonic_margin(flow, gY);
  m["coercivity"] = rep.coercivity;
  m["solver_residual"] = rep.solver_residual;
  m["wall_residual"] = rep.wall_residual;
  m["lift_branch"] = lift.branch;
  m["lift_decay_constant"] = lift.decay_constant;
  std::ofstream(out / "manifest.json") << m.dump(2) << "\n";
  return 0;
}

int run_prandtl_lin(const RunConfig& cfg, const fs::path& out) {
  auto data = data_from_config(cfg);
  auto flow = flow_from_config(cfg, data);
  auto gy = build_y_grid(cfg.y_max, cfg.n_y, cfg.stretch);
  Prandtl0Problem prob{data, flow, cfg.mu, cfg.kappa, cfg.L, cfg.n_x, {}};
  Trajectory traj;
  try {
    traj = march_trajectory(prob, cfg.theta_min, gy);
  } catch (const MarchError& e) {
    std::cerr << "prandtl_lin: base march failed at x = " << e.x_fail << "\n";
    return 2;
  }
  auto base = LinearBase::from_trajectory(traj, cfg.theta_min);
  auto in = zero_inputs(cfg.n_x, cfg.n_y,
                        cfg.mode == "NBC" ? ThermalMode::NBC : ThermalMode::DBC);
  for (std::size_t i = 0; i < cfg.n_x; ++i)
    in.u_wall[i] = 0.05 * std::sin(4.0 * base.xs[i]);
  LayerSolution sol;
  try {
    sol = solve_linear_layer(base, in);
  } catch (const std::exception& e) {
    std::cerr << "prandtl_lin: " << e.what() << "\n";
    return 2;
  }
  write_field_csv(out / "u_p.csv", traj.grid, traj.grid, sol.u_p, "u_p");
  write_field_csv(out / "T_p.csv", traj.grid, traj.grid, sol.T_p, "T_p");

  auto w = weight_samples(gy, cfg.l_exponent);
  auto nr = linear_norms(base, sol, w, std::min(cfg.m, 2));
  json m = base_manifest(cfg);
  m["X_by_order"] = nr.X_by_order;
  m["Y_by_order"] = nr.Y_by_order;
  m["finite"] = nr.finite();
  std::ofstream(out / "manifest.json") << m.dump(2) << "\n";
  return 0;
}

HierarchyConfig hierarchy_config(const RunConfig& cfg, int N) {
  HierarchyConfig hc;
  hc.N = N;
  hc.mu = cfg.mu;
  hc.kappa = cfg.kappa;
  hc.lambda = cfg.lambda;
  hc.L = cfg.L;
  hc.n_x = cfg.n_x;
  hc.n_y = cfg.n_y;
  hc.n_Y = cfg.n_Y;
  hc.y_max = cfg.y_max;
  hc.Y_max = cfg.Y_max;
  hc.theta_min = cfg.theta_min;
  hc.mode = cfg.mode == "NBC" ? ThermalMode::NBC : ThermalMode::DBC;
  hc.family = cfg.family;
  hc.sigma = cfg.sigma;
  hc.k0 = cfg.k0;
  hc.u_far = cfg.u_far;
  hc.T_far = cfg.T_far;
  hc.u_plus = cfg.u_plus;
  hc.Tb0 = cfg.Tb;
  return hc;
}

int run_hierarchy(const RunConfig& cfg, const fs::path& out) {
  Hierarchy h;
  try {
    h = build_hierarchy(hierarchy_config(cfg, cfg.N));
  } catch (const std::exception& e) {
    std::cerr << "hierarchy: " << e.what() << "\n";
    return 2;
  }
  json m = base_manifest(cfg);
  json match = json::array();
  for (const auto& mm : h.matching) {
    json one;
    one["u_wall"] = mm.u_wall;
    one["v_wall"] = mm.v_wall;
    one["frak_v_wall"] = mm.frak_v_wall;
    one["T_wall"] = mm.T_wall;
    match.push_back(one);
  }
  m["matching"] = match;
  std::ofstream(out / "manifest.json") << m.dump(2) << "\n";
  for (int k = 1; k <= h.N; ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "v_e%d.csv", k);
    write_field_csv(out / name, h.gx, h.gY, h.euler[static_cast<std::size_t>(k - 1)].v, "v");
    std::snprintf(name, sizeof(name), "u_p%d.csv", k);
    write_field_csv(out / name, h.gx, h.gy, h.prandtl[static_cast<std::size_t>(k - 1)].u_p,
                    "u_p");
  }
  return 0;
}

int run_sweep(const RunConfig& cfg, const fs::path& out, int jobs) {
  std::vector<Hierarchy> hs;
  for (int N = 0; N <= cfg.N; ++N) {
    try {
      hs.push_back(build_hierarchy(hierarchy_config(cfg, N)));
    } catch (const std::exception& e) {
      std::cerr << "ns_sweep: hierarchy N=" << N << " failed: " << e.what() << "\n";
      return 2;
    }
  }

  const std::size_t ne = cfg.eps_list.size();
  std::vector<std::vector<NsResidualReport>> reports(
      static_cast<std::size_t>(cfg.N + 1), std::vector<NsResidualReport>(ne));
  // sweep entries are independent: split across jobs
  auto work = [&](std::size_t start, std::size_t stride) {
    for (int N = 0; N <= cfg.N; ++N)
      for (std::size_t e = start; e < ne; e += stride) {
        CompositeSolution comp(hs[static_cast<std::size_t>(N)], cfg.eps_list[e]);
        reports[static_cast<std::size_t>(N)][e] =
            ns_residual(comp, cfg.mu, cfg.lambda, cfg.kappa, cfg.b_exponent);
      }
  };
  if (jobs > 1) {
    std::vector<std::thread> threads;
    const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(jobs), ne);
    for (std::size_t t = 0; t < nt; ++t) threads.emplace_back(work, t, nt);
    for (auto& t : threads) t.join();
  } else {
    work(0, 1);
  }

  std::ofstream csv(out / "sweep.csv");
  csv << "eps,N,mass,mom_x,mom_y,energy,max\n";
  json slopes;
  for (int N = 0; N <= cfg.N; ++N) {
    std::vector<double> res;
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& r = reports[static_cast<std::size_t>(N)][e];
      csv << fmt(cfg.eps_list[e]) << ',' << N << ',' << fmt(r.mass) << ',' << fmt(r.mom_x)
          << ',' << fmt(r.mom_y) << ',' << fmt(r.energy) << ',' << fmt(r.max_all) << '\n';
      res.push_back(r.max_all);
    }
    const double slope = fit_sweep_slope(cfg.eps_list, res);
    csv << "slope," << N << ",,,,," << fmt(slope) << '\n';
    slopes["N" + std::to_string(N)] = slope;
  }
  json m = base_manifest(cfg);
  m["slopes"] = slopes;
  std::ofstream(out / "manifest.json") << m.dump(2) << "\n";
  return 0;
}

int run_identities(const RunConfig& cfg, const fs::path& out, std::uint64_t seed) {
  auto rep = run_identity_suite(seed, 20);
  json m = base_manifest(cfg);
  m["seed"] = seed;
  m["all_pass"] = rep.all_pass;
  m["worst_gap"] = rep.worst_gap;
  m["slope_min"] = rep.slope_min;
  m["slope_max"] = rep.slope_max;
  json sets = json::array();
  for (const auto& set : rep.sets) {
    json s = json::array();
    for (const auto& r : set) {
      json one;
      one["name"] = r.name;
      one["gaps"] = r.gaps;
      one["slope"] = r.slope;
      one["finest_gap"] = r.finest_gap;
      one["pass"] = r.pass();
      s.push_back(one);
    }
    sets.push_back(s);
  }
  m["sets"] = sets;
  std::ofstream(out / "manifest.json") << m.dump(2) << "\n";
  for (const auto& set : rep.sets)
    for (const auto& r : set)
      std::cout << (r.pass() ? "pass " : "FAIL ") << r.name << " slope=" << r.slope
                << " gap=" << r.finest_gap << "\n";
  return rep.all_pass ? 0 : 2;
}

}  // namespace

int run_case(const RunConfig& cfg, const std::string& out_dir, int jobs, std::uint64_t seed) {
  fs::path out(out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  switch (cfg.kind) {
    case CaseKind::prandtl0: return run_prandtl0(cfg, out);
    case CaseKind::euler_layer: return run_euler(cfg, out);
    case CaseKind::prandtl_lin: return run_prandtl_lin(cfg, out);
    case CaseKind::hierarchy: return run_hierarchy(cfg, out);
    case CaseKind::ns_sweep: return run_sweep(cfg, out, jobs);
    case CaseKind::identity_suite: return run_identities(cfg, out, seed);
  }
  return 1;
}

}  // namespace cpl
