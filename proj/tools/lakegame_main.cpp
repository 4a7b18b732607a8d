// Experiment runner for the lake differential game: steady-state reports,
// full concept solves, the reproduction table, and plot-ready grid dumps.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "lakegame/csv.hpp"
#include "lakegame/experiment.hpp"
#include "lakegame/parallel.hpp"

using namespace lakegame;

namespace {

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  std::string concept_name;
  std::string dim;
  int n = -1;
  double M = -1.0;
  double rho = -1.0;
  std::string seed_grids;
  int threads = 0;
  bool parallel = false;
  bool all_roots = false;
};

ExperimentConfig make_config(const CliOverrides& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = parse_config_file(o.config_path);
  if (!o.concept_name.empty()) cfg.concept_name = o.concept_name;
  if (!o.dim.empty()) cfg.dim = o.dim;
  if (o.n > 0) cfg.params.n = o.n;
  if (o.M > 0) cfg.params.M_const = o.M;
  if (o.rho > 0) cfg.params.rho = o.rho;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "key=value config file");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--concept", o.concept_name, "coop | olne | fbne");
  cmd->add_option("--dim", o.dim, "1d | 2d");
  cmd->add_option("--n", o.n, "number of agents");
  cmd->add_option("--M", o.M, "constant sediment density (1d)");
  cmd->add_option("--rho", o.rho, "discount rate");
  cmd->add_option("--seed-grids", o.seed_grids,
                  "directory with V.csv/G.csv used as iteration warm start");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  cmd->add_flag("--parallel", o.parallel, "run independent experiments concurrently");
  cmd->add_flag("--all-roots", o.all_roots,
                "include unreachable stationarity roots in steady reports");
}

RunOptions run_options(const CliOverrides& o, std::vector<double>* seedV,
                       std::vector<double>* seedG) {
  RunOptions ropt;
  ropt.all_roots = o.all_roots;
  ropt.log = &std::cerr;
  if (!o.seed_grids.empty()) {
    namespace fs = std::filesystem;
    *seedV = read_grid_values((fs::path(o.seed_grids) / "V.csv").string());
    *seedG = read_grid_values((fs::path(o.seed_grids) / "G.csv").string());
    ropt.seed_V = seedV;
    ropt.seed_G = seedG;
  }
  return ropt;
}

void print_row(const ExperimentRow& row) {
  std::cout << row.concept_name << " " << row.dim << " n=" << row.n;
  if (row.dim == "1d") std::cout << " M=" << row.M_const;
  std::cout << (row.solver_converged ? "" : "  [NOT CONVERGED]") << "\n";
  for (const auto& e : row.entries) {
    std::cout << "  " << (e.kind == "skiba" ? "skiba " : "steady") << "  P*=" << e.P;
    if (row.dim == "2d") std::cout << "  M*=" << e.M;
    std::cout << "  L*=" << e.L << "  V*=" << e.V
              << (e.kind == "skiba" ? "" : (e.stable ? "  stable" : "  unstable"))
              << "\n";
  }
  std::cout << "  V-range (" << row.v_best << ", " << row.v_worst << ")"
            << "  runtime " << row.runtime_sec << " s\n";
}

int cmd_solve(const CliOverrides& o, bool grids_only) {
  ExperimentConfig cfg = make_config(o);
  std::vector<double> seedV, seedG;
  RunOptions ropt = run_options(o, &seedV, &seedG);
  if (grids_only) ropt.log = nullptr;
  const auto out = run_experiment(cfg, ropt);
  print_row(out.row);
  std::cout << "artifacts written to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_steady(const CliOverrides& o) {
  ExperimentConfig cfg = make_config(o);
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::string path = (fs::path(cfg.out_dir) / "steady_states.csv").string();

  if (cfg.concept_name == "olne") {
    LakeParams pr = cfg.params;
    if (cfg.dim == "1d") {
      // coarse sweep only to localize the switch points
      auto res = run_olne_1d(pr, 13, cfg.grid_p.hi, cfg.bvp);
      const ExperimentRow row = olne_row_1d(res, pr, cfg.bvp, false);
      write_steady_csv(path, row, o.all_roots ? &res.roots : nullptr);
      print_row(row);
    } else {
      const auto roots = olne_steady_2d(pr);
      ExperimentRow row;
      row.concept_name = "olne";
      row.dim = "2d";
      row.n = pr.n;
      for (const auto& ss : roots) {
        SteadyRow e;
        e.P = ss.P();
        e.M = ss.M();
        e.L = ss.L_total;
        e.V = ss.welfare;
        e.stable = ss.stable;
        row.entries.push_back(e);
      }
      write_steady_csv(path, row);
      print_row(row);
    }
  } else {
    // feedback / cooperative steady states come from the converged strategy
    std::vector<double> seedV, seedG;
    RunOptions ropt = run_options(o, &seedV, &seedG);
    ropt.write_files = false;
    const auto out = run_experiment(cfg, ropt);
    write_steady_csv(path, out.row);
    print_row(out.row);
  }
  std::cout << "report written to " << path << "\n";
  return 0;
}

int cmd_table1(const CliOverrides& o) {
  ExperimentConfig cfg = make_config(o);
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const auto outputs = run_table1(cfg, &std::cerr, false, true, o.parallel);
  const auto report = compare_table1(outputs.table, cfg.params.rho);

  CsvWriter w((fs::path(cfg.out_dir) / "results_table.csv").string());
  w.row({"concept", "dim", "n", "M_const", "kind", "P_star", "M_star", "L_star",
         "stable", "V_star", "V_best", "V_worst", "runtime_sec"});
  for (const auto& row : outputs.table.rows)
    for (const auto& e : row.entries)
      w.row({row.concept_name, row.dim, std::to_string(row.n),
             row.dim == "1d" ? csv_num(row.M_const) : "", e.kind, csv_num(e.P),
             row.dim == "2d" ? csv_num(e.M) : "", csv_num(e.L),
             e.kind == "skiba" ? "skiba" : (e.stable ? "stable" : "unstable"),
             csv_num(e.V), csv_num(row.v_best), csv_num(row.v_worst),
             csv_num(row.runtime_sec)});

  std::ofstream rep((fs::path(cfg.out_dir) / "table1_report.txt").string());
  rep << report.text();
  std::cout << report.text();
  double total = 0.0;
  for (const auto& row : outputs.table.rows) total += row.runtime_sec;
  std::cout << "total solver time " << total << " s\n";
  return report.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solvers for cooperative, open-loop and feedback Nash "
               "equilibria of the shallow-lake pollution game"};
  app.require_subcommand(1);

  CliOverrides o;
  auto* steady = app.add_subcommand("steady", "steady-state report only");
  auto* solve = app.add_subcommand("solve", "full solve for one concept");
  auto* table1 = app.add_subcommand("table1", "run all reproduction experiments");
  auto* dump = app.add_subcommand("dump-grids",
                                  "value/strategy/velocity grids for plotting");
  for (auto* cmd : {steady, solve, table1, dump}) add_common(cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (o.threads > 0) thread_count().store(static_cast<unsigned>(o.threads));

  try {
    if (steady->parsed()) return cmd_steady(o);
    if (solve->parsed()) return cmd_solve(o, false);
    if (table1->parsed()) return cmd_table1(o);
    if (dump->parsed()) return cmd_solve(o, true);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
