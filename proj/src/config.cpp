#include "cpl/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cpl {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw std::runtime_error("config line " + std::to_string(line) + ": bad number for '" +
                             key + "'");
  }
}

std::vector<double> to_list(const std::string& v, const std::string& key, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(item, key, line));
  }
  return out;
}

}  // namespace

std::string case_kind_name(CaseKind k) {
  switch (k) {
    case CaseKind::prandtl0: return "prandtl0";
    case CaseKind::euler_layer: return "euler_layer";
    case CaseKind::prandtl_lin: return "prandtl_lin";
    case CaseKind::hierarchy: return "hierarchy";
    case CaseKind::ns_sweep: return "ns_sweep";
    case CaseKind::identity_suite: return "identity_suite";
  }
  return "?";
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  cfg.source_text = text;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"case",     "physics", "geometry",  "weights",
                                    "data",     "schedule", "sweep",    "tolerances"};
      if (std::find_if(std::begin(known), std::end(known), [&](const char* s) {
            return section == s;
          }) == std::end(known))
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const std::string qual = section + "." + key;

    if (qual == "case.kind") {
      if (val == "prandtl0") cfg.kind = CaseKind::prandtl0;
      else if (val == "euler_layer") cfg.kind = CaseKind::euler_layer;
      else if (val == "prandtl_lin") cfg.kind = CaseKind::prandtl_lin;
      else if (val == "hierarchy") cfg.kind = CaseKind::hierarchy;
      else if (val == "ns_sweep") cfg.kind = CaseKind::ns_sweep;
      else if (val == "identity_suite") cfg.kind = CaseKind::identity_suite;
      else
        throw std::runtime_error("config line " + std::to_string(lineno) + ": unknown case kind '" +
                                 val + "'");
    } else if (qual == "physics.mu") cfg.mu = to_double(val, qual, lineno);
    else if (qual == "physics.lambda") cfg.lambda = to_double(val, qual, lineno);
    else if (qual == "physics.kappa") cfg.kappa = to_double(val, qual, lineno);
    else if (qual == "geometry.L") cfg.L = to_double(val, qual, lineno);
    else if (qual == "geometry.y_max") cfg.y_max = to_double(val, qual, lineno);
    else if (qual == "geometry.Y_max") cfg.Y_max = to_double(val, qual, lineno);
    else if (qual == "geometry.stretch") cfg.stretch = to_double(val, qual, lineno);
    else if (qual == "geometry.n_x") cfg.n_x = static_cast<std::size_t>(to_double(val, qual, lineno));
    else if (qual == "geometry.n_y") cfg.n_y = static_cast<std::size_t>(to_double(val, qual, lineno));
    else if (qual == "geometry.n_Y") cfg.n_Y = static_cast<std::size_t>(to_double(val, qual, lineno));
    else if (qual == "weights.l") cfg.l_exponent = to_double(val, qual, lineno);
    else if (qual == "weights.b") cfg.b_exponent = to_double(val, qual, lineno);
    else if (qual == "data.family") cfg.family = val;
    else if (qual == "data.mode") cfg.mode = val;
    else if (qual == "data.u_far") cfg.u_far = to_double(val, qual, lineno);
    else if (qual == "data.T_far") cfg.T_far = to_double(val, qual, lineno);
    else if (qual == "data.u_plus") cfg.u_plus = to_double(val, qual, lineno);
    else if (qual == "data.sigma") cfg.sigma = to_double(val, qual, lineno);
    else if (qual == "data.k0") cfg.k0 = static_cast<int>(to_double(val, qual, lineno));
    else if (qual == "data.Tb") cfg.Tb = to_double(val, qual, lineno);
    else if (qual == "schedule.theta0") cfg.theta0 = to_double(val, qual, lineno);
    else if (qual == "schedule.theta_min") cfg.theta_min = to_double(val, qual, lineno);
    else if (qual == "schedule.factor") cfg.theta_factor = to_double(val, qual, lineno);
    else if (qual == "sweep.N") cfg.N = static_cast<int>(to_double(val, qual, lineno));
    else if (qual == "sweep.eps") cfg.eps_list = to_list(val, qual, lineno);
    else if (qual == "tolerances.picard_tol") cfg.picard_tol = to_double(val, qual, lineno);
    else if (qual == "tolerances.mp_tol") cfg.mp_tol = to_double(val, qual, lineno);
    else if (qual == "tolerances.m") cfg.m = static_cast<int>(to_double(val, qual, lineno));
    else
      throw std::runtime_error("config line " + std::to_string(lineno) + " (" + origin +
                               "): unknown key '" + qual + "'");
  }

  // validation
  std::vector<std::string> bad;
  if (cfg.mu <= 0.0) bad.push_back("physics.mu must be positive");
  if (cfg.kappa <= 0.0) bad.push_back("physics.kappa must be positive");
  if (cfg.L <= 0.0) bad.push_back("geometry.L must be positive");
  if (cfg.n_y < 16) bad.push_back("geometry.n_y must be at least 16");
  if (cfg.l_exponent <= 0.0) bad.push_back("weights.l must be positive");
  if (cfg.theta_min <= 0.0) bad.push_back("schedule.theta_min must be positive");
  if (cfg.mode != "NBC" && cfg.mode != "DBC") bad.push_back("data.mode must be NBC or DBC");
  if (cfg.family != "example" && cfg.family != "low_mach" && cfg.family != "high_subsonic")
    bad.push_back("data.family unknown");
  if (cfg.N < 0 || cfg.N > 2) bad.push_back("sweep.N must lie in {0, 1, 2}");
  if (!bad.empty()) {
    std::string msg = "config validation failed:";
    for (const auto& b : bad) msg += "\n  - " + b;
    throw std::invalid_argument(msg);
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace cpl
