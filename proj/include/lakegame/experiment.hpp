#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lakegame/config.hpp"
#include "lakegame/csv.hpp"
#include "lakegame/olne.hpp"
#include "lakegame/sfvf.hpp"
#include "lakegame/steady_states.hpp"
#include "lakegame/table1.hpp"

namespace lakegame {

namespace detail {

inline double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Row builders: map solver outputs onto results-table blocks
// ---------------------------------------------------------------------------

/// Feedback row: closed-loop steady states of the converged strategy with
/// the value function read at each of them.
inline ExperimentRow fbne_row_1d(const Sfvf1DResult& res, const LakeParams& pr) {
  ExperimentRow row;
  row.concept_name = "fbne";
  row.dim = "1d";
  row.n = pr.n;
  row.M_const = pr.M_const;
  row.solver_converged = res.converged;
  const auto V = res.value_fn();
  for (const auto& ss : fbne_steady_from_strategy_1d(res.strategy_fn(), pr)) {
    SteadyRow e;
    e.P = ss.P();
    e.L = ss.L_total;
    e.V = V.eval(ss.P());
    e.stable = ss.stable;
    row.entries.push_back(e);
  }
  row.v_best = V.max_value();
  row.v_worst = V.min_value();
  return row;
}

/// Cooperative row for n agents from the optimal-management solve (n = 1):
/// same states and loadings, individual welfare shifted by -ln(n)/rho.
inline ExperimentRow coop_row_1d(const Sfvf1DResult& om, const LakeParams& pr_om,
                                 int n_agents) {
  ExperimentRow row;
  row.concept_name = "coop";
  row.dim = "1d";
  row.n = n_agents;
  row.M_const = pr_om.M_const;
  row.solver_converged = om.converged;
  const double shift = std::log(static_cast<double>(n_agents)) / pr_om.rho;
  const auto V = om.value_fn();
  for (const auto& ss : fbne_steady_from_strategy_1d(om.strategy_fn(), pr_om)) {
    SteadyRow e;
    e.P = ss.P();
    e.L = ss.L_total;
    e.V = V.eval(ss.P()) - shift;
    e.stable = ss.stable;
    row.entries.push_back(e);
  }
  row.v_best = V.max_value() - shift;
  row.v_worst = V.min_value() - shift;
  return row;
}

/// Open-loop 1D row: stationarity roots that win the welfare selection for
/// some start, plus the sweep-localized switch points, the way the results
/// table reports them. Never-selected algebraic roots stay in the
/// steady-state report, not in the row.
inline ExperimentRow olne_row_1d(const Olne1DResult& res, const LakeParams& pr,
                                 const OlneConfig& cfg, bool jump_probe) {
  ExperimentRow row;
  row.concept_name = "olne";
  row.dim = "1d";
  row.n = pr.n;
  row.M_const = pr.M_const;
  for (size_t t = 0; t < res.roots.size(); ++t) {
    if (!res.root_wins[t]) continue;
    SteadyRow e;
    e.P = res.roots[t].P();
    e.L = res.roots[t].L_total;
    e.V = res.root_welfare[t];
    e.stable = res.roots[t].stable;
    row.entries.push_back(e);
  }
  for (const auto& sk : res.skiba) {
    SteadyRow e;
    e.kind = "skiba";
    e.P = sk.P;
    const bool left_wins = sk.V_left >= sk.V_right;
    e.L = left_wins ? sk.L_left : sk.L_right;
    e.V = std::max(sk.V_left, sk.V_right);
    e.stable = false;
    row.entries.push_back(e);
  }
  std::sort(row.entries.begin(), row.entries.end(),
            [](const SteadyRow& a, const SteadyRow& b) { return a.P < b.P; });

  double best = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& s : res.starts) {
    if (!s.accepted) continue;
    best = std::max(best, s.welfare);
    worst = std::min(worst, s.welfare);
  }
  row.v_best = best;
  row.v_worst = worst;

  if (jump_probe) {
    const auto lo = olne_probe_1d(pr, res.roots, 1.47, cfg);
    const auto hi = olne_probe_1d(pr, res.roots, 1.49, cfg);
    if (lo.accepted && hi.accepted) row.jump_drop = lo.welfare - hi.welfare;
  }
  return row;
}

inline ExperimentRow fbne_row_2d(const Sfvf2DResult& res, const LakeParams& pr) {
  ExperimentRow row;
  row.concept_name = "fbne";
  row.dim = "2d";
  row.n = pr.n;
  row.solver_converged = res.converged;
  const auto V = res.value_fn();
  for (const auto& ss : fbne_steady_from_strategy_2d(res.strategy_fn(), pr)) {
    SteadyRow e;
    e.P = ss.P();
    e.M = ss.M();
    e.L = ss.L_total;
    e.V = V.eval(ss.P(), ss.M());
    e.stable = ss.stable;
    row.entries.push_back(e);
  }
  row.v_best = V.max_value();
  row.v_worst = V.min_value();
  return row;
}

inline ExperimentRow coop_row_2d(const Sfvf2DResult& om, const LakeParams& pr_om,
                                 int n_agents) {
  ExperimentRow row;
  row.concept_name = "coop";
  row.dim = "2d";
  row.n = n_agents;
  row.solver_converged = om.converged;
  const double shift = std::log(static_cast<double>(n_agents)) / pr_om.rho;
  const auto V = om.value_fn();
  for (const auto& ss : fbne_steady_from_strategy_2d(om.strategy_fn(), pr_om)) {
    SteadyRow e;
    e.P = ss.P();
    e.M = ss.M();
    e.L = ss.L_total;
    e.V = V.eval(ss.P(), ss.M()) - shift;
    e.stable = ss.stable;
    row.entries.push_back(e);
  }
  row.v_best = V.max_value() - shift;
  row.v_worst = V.min_value() - shift;
  return row;
}

/// Open-loop 2D row: stationarity roots that win somewhere in the sweep,
/// plus the switch-locus crossing of the Mdot = 0 isocline, each with the
/// welfare of the best accepted path started there.
inline ExperimentRow olne_row_2d(const Olne2DResult& res, const LakeParams& pr) {
  ExperimentRow row;
  row.concept_name = "olne";
  row.dim = "2d";
  row.n = pr.n;
  for (size_t t = 0; t < res.roots.size(); ++t) {
    if (!res.root_wins[t]) continue;
    SteadyRow e;
    e.P = res.roots[t].P();
    e.M = res.roots[t].M();
    e.L = res.roots[t].L_total;
    e.V = res.root_welfare[t];
    e.stable = res.roots[t].stable;
    row.entries.push_back(e);
  }
  for (const auto& sw : res.isocline_crossings) {
    SteadyRow e;
    e.kind = "skiba";
    e.P = sw.P;
    e.M = sw.M;
    const bool left_wins = sw.V_left >= sw.V_right;
    e.L = left_wins ? sw.L_left : sw.L_right;
    e.V = std::max(sw.V_left, sw.V_right);
    e.stable = false;
    row.entries.push_back(e);
  }
  std::sort(row.entries.begin(), row.entries.end(),
            [](const SteadyRow& a, const SteadyRow& b) { return a.P < b.P; });
  double best = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& s : res.starts) {
    if (!s.accepted) continue;
    best = std::max(best, s.welfare);
    worst = std::min(worst, s.welfare);
  }
  row.v_best = best;
  row.v_worst = worst;
  return row;
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

inline void write_steady_csv(const std::string& path, const ExperimentRow& row,
                             const std::vector<SteadyState>* all_roots = nullptr) {
  CsvWriter w(path);
  w.row({"concept", "dim", "n", "M_const", "P_star", "M_star", "L_star",
         "stable", "welfare"});
  auto put = [&](double P, double M, double L, const std::string& flag, double V) {
    w.row({row.concept_name, row.dim, std::to_string(row.n),
           row.dim == "1d" ? csv_num(row.M_const) : "",
           csv_num(P), row.dim == "2d" ? csv_num(M) : "", csv_num(L), flag,
           csv_num(V)});
  };
  for (const auto& e : row.entries)
    put(e.P, e.M, e.L, e.kind == "skiba" ? "skiba" : (e.stable ? "stable" : "unstable"),
        e.V);
  if (all_roots) {
    // unreachable algebraic roots omitted from the table row
    for (const auto& ss : *all_roots) {
      bool present = false;
      for (const auto& e : row.entries)
        if (e.kind == "root" && std::abs(e.P - ss.P()) < 1e-9) present = true;
      if (!present)
        put(ss.P(), ss.M(), ss.L_total, ss.stable ? "stable" : "unstable",
            ss.welfare);
    }
  }
}

inline void write_diag_log(const std::string& path,
                           const std::vector<SfvfIterDiag>& diags) {
  std::ofstream out(path);
  out << "iter,dV,dG,no_solution_nodes\n";
  for (const auto& d : diags)
    out << d.iteration << ',' << csv_num(d.dV) << ',' << csv_num(d.dG) << ','
        << d.no_solution_nodes << '\n';
}

inline void write_sweep_csv_1d(const std::string& path, const Olne1DResult& res) {
  CsvWriter w(path);
  w.row({"P0", "L0", "target_P", "welfare", "accepted_targets_count"});
  for (const auto& s : res.starts)
    w.row({csv_num(s.P0), csv_num(s.L0),
           s.accepted ? csv_num(res.roots[s.target].P()) : "",
           s.accepted ? csv_num(s.welfare) : "",
           std::to_string(s.accepted_count)});
}

inline void write_sweep_csv_2d(const std::string& path, const Olne2DResult& res) {
  CsvWriter w(path);
  w.row({"P0", "M0", "L0", "target_P", "target_M", "welfare",
         "accepted_targets_count"});
  for (const auto& s : res.starts)
    w.row({csv_num(s.P0), csv_num(s.M0), csv_num(s.L0),
           s.accepted ? csv_num(res.roots[s.target].P()) : "",
           s.accepted ? csv_num(res.roots[s.target].M()) : "",
           s.accepted ? csv_num(s.welfare) : "",
           std::to_string(s.accepted_count)});
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct ExperimentArtifacts {
  std::optional<Sfvf1DResult> sfvf1d;
  std::optional<Sfvf2DResult> sfvf2d;
  std::optional<Olne1DResult> olne1d;
  std::optional<Olne2DResult> olne2d;
};

struct ExperimentOutput {
  ExperimentRow row;
  ExperimentArtifacts artifacts;
};

struct RunOptions {
  bool write_files = true;
  bool all_roots = false;
  std::ostream* log = nullptr;
  const std::vector<double>* seed_V = nullptr;  // optional SFVF warm start
  const std::vector<double>* seed_G = nullptr;
};

/// Run one experiment described by the config and (optionally) write its
/// artifacts under cfg.out_dir. Cooperative runs solve optimal management
/// (n = 1) and report individually adjusted welfare for cfg.params.n.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg,
                                       const RunOptions& opt = {}) {
  cfg.validate();
  namespace fs = std::filesystem;
  ExperimentOutput out;
  const double t0 = detail::now_seconds();
  if (opt.write_files) fs::create_directories(cfg.out_dir);
  auto path = [&cfg](const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
  };

  std::vector<SfvfIterDiag> diags;
  SfvfConfig scfg = cfg.sfvf;
  if (opt.log || opt.write_files) {
    auto* log = opt.log;
    scfg.diag = [log, &diags](const SfvfIterDiag& d) {
      diags.push_back(d);
      if (log)
        *log << "  iter " << d.iteration << "  dV " << d.dV << "  dG " << d.dG
             << "  no-solution " << d.no_solution_nodes << "\n";
    };
  }

  const bool coop = cfg.concept_name == "coop";
  LakeParams pr = cfg.params;
  if (coop) pr.n = 1;

  if (cfg.concept_name == "fbne" || coop) {
    if (cfg.dim == "1d") {
      auto res = run_sfvf_1d(pr, cfg.grid_p, scfg, opt.seed_V, opt.seed_G);
      out.row = coop ? coop_row_1d(res, pr, cfg.params.n) : fbne_row_1d(res, pr);
      if (opt.write_files) {
        write_grid_csv(path("V.csv"), res.value_fn(), pr.M_const, "V");
        write_grid_csv(path("G.csv"), res.strategy_fn(), pr.M_const, "G");
        std::vector<double> pdot(cfg.grid_p.n), resid = res.residual;
        for (int i = 0; i < cfg.grid_p.n; ++i)
          pdot[i] = pr.n * res.G[i] + f_water(cfg.grid_p.node(i), pr.M_const, pr);
        write_grid_csv(path("pdot.csv"), PiecewiseLinear1D(cfg.grid_p, pdot),
                       pr.M_const, "pdot");
        write_grid_csv(path("residual.csv"), PiecewiseLinear1D(cfg.grid_p, resid),
                       pr.M_const, "residual");
        write_steady_csv(path("steady_states.csv"), out.row);
        write_diag_log(path("diagnostics.log"), diags);
      }
      out.artifacts.sfvf1d = std::move(res);
    } else {
      Grid2D grid{cfg.grid_p, cfg.grid_m};
      auto res = run_sfvf_2d(pr, grid, scfg, opt.seed_V, opt.seed_G);
      out.row = coop ? coop_row_2d(res, pr, cfg.params.n) : fbne_row_2d(res, pr);
      if (opt.write_files) {
        write_grid_csv(path("V.csv"), res.value_fn(), "V");
        write_grid_csv(path("G.csv"), res.strategy_fn(), "G");
        std::vector<double> pdot(grid.count());
        for (int i1 = 0; i1 < grid.p.n; ++i1)
          for (int i2 = 0; i2 < grid.m.n; ++i2)
            pdot[grid.index(i1, i2)] =
                pr.n * res.G[grid.index(i1, i2)] +
                f_water(grid.p.node(i1), grid.m.node(i2), pr);
        write_grid_csv(path("pdot.csv"), PiecewiseBilinear2D(grid, pdot), "pdot");
        write_grid_csv(path("residual.csv"), PiecewiseBilinear2D(grid, res.residual),
                       "residual");
        write_steady_csv(path("steady_states.csv"), out.row);
        write_diag_log(path("diagnostics.log"), diags);
      }
      out.artifacts.sfvf2d = std::move(res);
    }
  } else {  // olne
    if (cfg.dim == "1d") {
      auto res = run_olne_1d(pr, cfg.sweep_starts_1d, cfg.grid_p.hi, cfg.bvp);
      const bool jump = std::abs(pr.M_const - 240.0) < 1e-9;
      out.row = olne_row_1d(res, pr, cfg.bvp, jump);
      if (opt.write_files) {
        write_sweep_csv_1d(path("sweep.csv"), res);
        write_grid_csv(path("L0.csv"), res.loading_fn, pr.M_const, "L0");
        write_grid_csv(path("welfare.csv"), res.welfare_fn, pr.M_const, "welfare");
        write_steady_csv(path("steady_states.csv"), out.row,
                         opt.all_roots ? &res.roots : nullptr);
      }
      out.artifacts.olne1d = std::move(res);
    } else {
      auto res = run_olne_2d(pr, cfg.sweep_p, cfg.sweep_m, cfg.grid_p.hi,
                             cfg.grid_m.lo, cfg.grid_m.hi, cfg.bvp);
      out.row = olne_row_2d(res, pr);
      if (opt.write_files) {
        write_sweep_csv_2d(path("sweep.csv"), res);
        write_grid_csv(path("L0.csv"), res.loading_fn, "L0");
        write_grid_csv(path("welfare.csv"), res.welfare_fn, "welfare");
        write_steady_csv(path("steady_states.csv"), out.row,
                         opt.all_roots ? &res.roots : nullptr);
        CsvWriter jl(path("switch_locus.csv"));
        jl.row({"P", "M", "L_left", "L_right", "V_left", "V_right"});
        for (const auto& p : res.switch_rows)
          jl.row({csv_num(p.P), csv_num(p.M), csv_num(p.L_left),
                  csv_num(p.L_right), csv_num(p.V_left), csv_num(p.V_right)});
      }
      out.artifacts.olne2d = std::move(res);
    }
  }

  out.row.runtime_sec = detail::now_seconds() - t0;
  if (opt.write_files) {
    std::ofstream cfgout(path("config.used"));
    cfgout << write_config(cfg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full reproduction run
// ---------------------------------------------------------------------------

struct Table1Outputs {
  ResultsTable table;
  std::map<std::string, Sfvf1DResult> sfvf1d;
  std::map<std::string, Sfvf2DResult> sfvf2d;
  std::map<std::string, Olne1DResult> olne1d;
  std::map<std::string, Olne2DResult> olne2d;
};

namespace detail {

// One independently runnable slice of the reproduction run; rows come back
// in this group's fixed order so the merged table is order-stable.
struct Table1Group {
  std::string name;
  std::function<Table1Outputs()> run;
};

inline std::vector<Table1Group> table1_groups(const ExperimentConfig& base,
                                              bool keep_artifacts,
                                              bool write_files) {
  RunOptions ropt;
  ropt.write_files = write_files;

  std::vector<Table1Group> groups;
  for (double M : {179.0, 240.0}) {
    const std::string mtag = "M" + std::to_string(static_cast<int>(M));
    groups.push_back({"1d " + mtag, [base, M, mtag, keep_artifacts, ropt] {
      Table1Outputs out;
      ExperimentConfig cfg = base;
      cfg.dim = "1d";
      cfg.params.M_const = M;
      cfg.concept_name = "coop";
      cfg.params.n = 2;
      cfg.out_dir = base.out_dir + "/coop_1d_" + mtag;
      auto coop = run_experiment(cfg, ropt);
      LakeParams pr_om = cfg.params;
      pr_om.n = 1;
      for (int n : {2, 3}) {
        ExperimentRow row = coop_row_1d(*coop.artifacts.sfvf1d, pr_om, n);
        row.runtime_sec = coop.row.runtime_sec;
        out.table.rows.push_back(row);
      }
      if (keep_artifacts)
        out.sfvf1d["coop_" + mtag] = std::move(*coop.artifacts.sfvf1d);
      for (int n : {2, 3}) {
        const std::string ntag = "n" + std::to_string(n);
        cfg.params.n = n;
        cfg.concept_name = "olne";
        cfg.out_dir = base.out_dir + "/olne_1d_" + ntag + "_" + mtag;
        auto olne = run_experiment(cfg, ropt);
        out.table.rows.push_back(olne.row);
        if (keep_artifacts)
          out.olne1d[ntag + "_" + mtag] = std::move(*olne.artifacts.olne1d);
        cfg.concept_name = "fbne";
        cfg.out_dir = base.out_dir + "/fbne_1d_" + ntag + "_" + mtag;
        auto fb = run_experiment(cfg, ropt);
        out.table.rows.push_back(fb.row);
        if (keep_artifacts)
          out.sfvf1d["fbne_" + ntag + "_" + mtag] = std::move(*fb.artifacts.sfvf1d);
      }
      return out;
    }});
  }

  groups.push_back({"2d coop", [base, keep_artifacts, ropt] {
    Table1Outputs out;
    ExperimentConfig cfg = base;
    cfg.dim = "2d";
    cfg.concept_name = "coop";
    cfg.params.n = 2;
    cfg.out_dir = base.out_dir + "/coop_2d";
    auto coop = run_experiment(cfg, ropt);
    LakeParams pr_om = cfg.params;
    pr_om.n = 1;
    for (int n : {2, 3}) {
      ExperimentRow row = coop_row_2d(*coop.artifacts.sfvf2d, pr_om, n);
      row.runtime_sec = coop.row.runtime_sec;
      out.table.rows.push_back(row);
    }
    if (keep_artifacts) out.sfvf2d["coop"] = std::move(*coop.artifacts.sfvf2d);
    return out;
  }});

  for (int n : {2, 3}) {
    const std::string ntag = "n" + std::to_string(n);
    groups.push_back({"2d " + ntag, [base, n, ntag, keep_artifacts, ropt] {
      Table1Outputs out;
      ExperimentConfig cfg = base;
      cfg.dim = "2d";
      cfg.params.n = n;
      cfg.concept_name = "olne";
      cfg.out_dir = base.out_dir + "/olne_2d_" + ntag;
      auto olne = run_experiment(cfg, ropt);
      out.table.rows.push_back(olne.row);
      if (keep_artifacts) out.olne2d[ntag] = std::move(*olne.artifacts.olne2d);
      cfg.concept_name = "fbne";
      cfg.out_dir = base.out_dir + "/fbne_2d_" + ntag;
      auto fb = run_experiment(cfg, ropt);
      out.table.rows.push_back(fb.row);
      if (keep_artifacts) out.sfvf2d["fbne_" + ntag] = std::move(*fb.artifacts.sfvf2d);
      return out;
    }});
  }
  return groups;
}

inline void merge_outputs(Table1Outputs& into, Table1Outputs&& part) {
  for (auto& r : part.table.rows) into.table.rows.push_back(std::move(r));
  for (auto& kv : part.sfvf1d) into.sfvf1d[kv.first] = std::move(kv.second);
  for (auto& kv : part.sfvf2d) into.sfvf2d[kv.first] = std::move(kv.second);
  for (auto& kv : part.olne1d) into.olne1d[kv.first] = std::move(kv.second);
  for (auto& kv : part.olne2d) into.olne2d[kv.first] = std::move(kv.second);
}

}  // namespace detail

/// Run every block of the results table. Cooperative solves are shared
/// between the n = 2 and n = 3 blocks of the same (dim, M). With parallel
/// set, independent groups run concurrently (each internally single
/// threaded); committed values are identical either way.
inline Table1Outputs run_table1(const ExperimentConfig& base,
                                std::ostream* log = nullptr,
                                bool keep_artifacts = true,
                                bool write_files = false,
                                bool parallel = false) {
  auto groups = detail::table1_groups(base, keep_artifacts, write_files);
  std::vector<Table1Outputs> parts(groups.size());
  if (parallel) {
    const unsigned saved = thread_count().load();
    thread_count().store(1);
    std::vector<std::future<void>> futs;
    for (size_t g = 0; g < groups.size(); ++g)
      futs.push_back(std::async(std::launch::async,
                                [&, g] { parts[g] = groups[g].run(); }));
    for (auto& f : futs) f.get();
    thread_count().store(saved);
  } else {
    for (size_t g = 0; g < groups.size(); ++g) {
      if (log) *log << "[table1] group: " << groups[g].name << std::endl;
      parts[g] = groups[g].run();
    }
  }
  Table1Outputs out;
  for (auto& p : parts) detail::merge_outputs(out, std::move(p));
  return out;
}

}  // namespace lakegame
