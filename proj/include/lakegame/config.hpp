#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lakegame/grid.hpp"
#include "lakegame/olne.hpp"
#include "lakegame/params.hpp"
#include "lakegame/sfvf.hpp"

namespace lakegame {

/// Full description of one experiment: solution concept, dimension, model
/// constants, grids and solver controls. Serializes to a flat key=value
/// file that round-trips doubles bit-exactly.
struct ExperimentConfig {
  std::string concept_name = "fbne";  // coop | olne | fbne
  std::string dim = "1d";             // 1d | 2d
  LakeParams params;
  Grid1D grid_p{0.0, 6.0, 601};
  Grid1D grid_m{150.0, 200.0, 101};
  SfvfConfig sfvf;
  OlneConfig bvp;
  int sweep_starts_1d = 121;
  int sweep_p = 31;
  int sweep_m = 11;
  std::string out_dir = "out";

  void validate() const {
    if (concept_name != "coop" && concept_name != "olne" && concept_name != "fbne")
      throw std::invalid_argument("concept must be coop, olne or fbne");
    if (dim != "1d" && dim != "2d")
      throw std::invalid_argument("dim must be 1d or 2d");
    params.validate();
    grid_p.validate();
    if (dim == "2d") grid_m.validate();
  }
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad numeric value '" + v + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad integer value '" + v + "'");
  }
}

}  // namespace detail

/// Apply one key=value assignment. Unknown keys throw, naming the key.
inline void config_set(ExperimentConfig& c, const std::string& key,
                       const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  if (key == "concept") c.concept_name = value;
  else if (key == "dim") c.dim = value;
  else if (key == "s") c.params.s = parse_double(key, value);
  else if (key == "varsigma") c.params.varsigma = parse_double(key, value);
  else if (key == "eta") c.params.eta = parse_double(key, value);
  else if (key == "r") c.params.r = parse_double(key, value);
  else if (key == "q") c.params.q = parse_double(key, value);
  else if (key == "alpha") c.params.alpha = parse_double(key, value);
  else if (key == "c") c.params.c = parse_double(key, value);
  else if (key == "rho") c.params.rho = parse_double(key, value);
  else if (key == "n") c.params.n = parse_int(key, value);
  else if (key == "M") c.params.M_const = parse_double(key, value);
  else if (key == "grid.p_min") c.grid_p.lo = parse_double(key, value);
  else if (key == "grid.p_max") c.grid_p.hi = parse_double(key, value);
  else if (key == "grid.p_count") c.grid_p.n = parse_int(key, value);
  else if (key == "grid.m_min") c.grid_m.lo = parse_double(key, value);
  else if (key == "grid.m_max") c.grid_m.hi = parse_double(key, value);
  else if (key == "grid.m_count") c.grid_m.n = parse_int(key, value);
  else if (key == "sfvf.omega") c.sfvf.omega = parse_double(key, value);
  else if (key == "sfvf.xi") c.sfvf.xi = parse_double(key, value);
  else if (key == "sfvf.tol_v") c.sfvf.tol_V = parse_double(key, value);
  else if (key == "sfvf.tol_g") c.sfvf.tol_G = parse_double(key, value);
  else if (key == "sfvf.max_iter") c.sfvf.max_iter = parse_int(key, value);
  else if (key == "sfvf.h") c.sfvf.h = parse_double(key, value);
  else if (key == "sfvf.T") c.sfvf.T = parse_double(key, value);
  else if (key == "bvp.lambda") c.bvp.lambda = parse_double(key, value);
  else if (key == "bvp.t_end") c.bvp.t_end = parse_double(key, value);
  else if (key == "bvp.mesh") c.bvp.mesh_points = parse_int(key, value);
  else if (key == "bvp.eps_ss_p") c.bvp.eps_ss_P = parse_double(key, value);
  else if (key == "bvp.eps_ss_m") c.bvp.eps_ss_M = parse_double(key, value);
  else if (key == "sweep.starts_1d") c.sweep_starts_1d = parse_int(key, value);
  else if (key == "sweep.p_count") c.sweep_p = parse_int(key, value);
  else if (key == "sweep.m_count") c.sweep_m = parse_int(key, value);
  else if (key == "out") c.out_dir = value;
  else throw std::invalid_argument("config key '" + key + "' is not recognized");
}

inline std::string write_config(const ExperimentConfig& c) {
  using detail::fmt_double;
  std::ostringstream os;
  os << "concept=" << c.concept_name << "\n";
  os << "dim=" << c.dim << "\n";
  os << "s=" << fmt_double(c.params.s) << "\n";
  os << "varsigma=" << fmt_double(c.params.varsigma) << "\n";
  os << "eta=" << fmt_double(c.params.eta) << "\n";
  os << "r=" << fmt_double(c.params.r) << "\n";
  os << "q=" << fmt_double(c.params.q) << "\n";
  os << "alpha=" << fmt_double(c.params.alpha) << "\n";
  os << "c=" << fmt_double(c.params.c) << "\n";
  os << "rho=" << fmt_double(c.params.rho) << "\n";
  os << "n=" << c.params.n << "\n";
  os << "M=" << fmt_double(c.params.M_const) << "\n";
  os << "grid.p_min=" << fmt_double(c.grid_p.lo) << "\n";
  os << "grid.p_max=" << fmt_double(c.grid_p.hi) << "\n";
  os << "grid.p_count=" << c.grid_p.n << "\n";
  os << "grid.m_min=" << fmt_double(c.grid_m.lo) << "\n";
  os << "grid.m_max=" << fmt_double(c.grid_m.hi) << "\n";
  os << "grid.m_count=" << c.grid_m.n << "\n";
  os << "sfvf.omega=" << fmt_double(c.sfvf.omega) << "\n";
  os << "sfvf.xi=" << fmt_double(c.sfvf.xi) << "\n";
  os << "sfvf.tol_v=" << fmt_double(c.sfvf.tol_V) << "\n";
  os << "sfvf.tol_g=" << fmt_double(c.sfvf.tol_G) << "\n";
  os << "sfvf.max_iter=" << c.sfvf.max_iter << "\n";
  os << "sfvf.h=" << fmt_double(c.sfvf.h) << "\n";
  os << "sfvf.T=" << fmt_double(c.sfvf.T) << "\n";
  os << "bvp.lambda=" << fmt_double(c.bvp.lambda) << "\n";
  os << "bvp.t_end=" << fmt_double(c.bvp.t_end) << "\n";
  os << "bvp.mesh=" << c.bvp.mesh_points << "\n";
  os << "bvp.eps_ss_p=" << fmt_double(c.bvp.eps_ss_P) << "\n";
  os << "bvp.eps_ss_m=" << fmt_double(c.bvp.eps_ss_M) << "\n";
  os << "sweep.starts_1d=" << c.sweep_starts_1d << "\n";
  os << "sweep.p_count=" << c.sweep_p << "\n";
  os << "sweep.m_count=" << c.sweep_m << "\n";
  os << "out=" << c.out_dir << "\n";
  return os.str();
}

/// Parse a key=value config. '#' starts a comment; blank lines are skipped.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value, got '" + t + "'");
    config_set(c, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return parse_config(in);
}

}  // namespace lakegame
