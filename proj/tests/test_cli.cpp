#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "lakegame/config.hpp"
#include "lakegame/csv.hpp"
#include "lakegame/table1.hpp"

using namespace lakegame;

TEST_CASE("config round-trips bit-exactly") {
  ExperimentConfig cfg;
  cfg.concept_name = "olne";
  cfg.dim = "2d";
  cfg.params.n = 3;
  cfg.params.rho = 0.04300000000000001;
  cfg.params.q = 2.4;
  cfg.params.c = 0.1736;
  cfg.grid_p.n = 321;
  cfg.sfvf.omega = 0.5;
  cfg.out_dir = "some/dir";

  const std::string text = write_config(cfg);
  std::istringstream in(text);
  const ExperimentConfig back = parse_config(in);

  CHECK(back.concept_name == cfg.concept_name);
  CHECK(back.dim == cfg.dim);
  CHECK(back.params.n == cfg.params.n);
  // bit-exact doubles
  CHECK(back.params.s == cfg.params.s);
  CHECK(back.params.varsigma == cfg.params.varsigma);
  CHECK(back.params.eta == cfg.params.eta);
  CHECK(back.params.r == cfg.params.r);
  CHECK(back.params.q == cfg.params.q);
  CHECK(back.params.rho == cfg.params.rho);
  CHECK(back.params.c == cfg.params.c);
  CHECK(back.sfvf.omega == cfg.sfvf.omega);
  CHECK(back.grid_p.n == cfg.grid_p.n);
  CHECK(back.out_dir == cfg.out_dir);

  // a second round trip is textually identical
  std::istringstream in2(write_config(back));
  CHECK(write_config(parse_config(in2)) == text);
}

TEST_CASE("malformed config names the offending key") {
  ExperimentConfig cfg;
  CHECK_THROWS_WITH(config_set(cfg, "rho", "fast"),
                    Catch::Matchers::ContainsSubstring("rho"));
  CHECK_THROWS_WITH(config_set(cfg, "bogus_key", "1.0"),
                    Catch::Matchers::ContainsSubstring("bogus_key"));
  std::istringstream in("s=0.7\nnonsense line\n");
  CHECK_THROWS_WITH(parse_config(in),
                    Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("comment and blank handling") {
  std::istringstream in(
      "# full comment line\n"
      "\n"
      "n=3   # agents\n"
      "M=240\n");
  const ExperimentConfig cfg = parse_config(in);
  CHECK(cfg.params.n == 3);
  CHECK(cfg.params.M_const == 240.0);
}

TEST_CASE("table comparison passes against itself") {
  const auto ref = table1_reference();
  ResultsTable computed;
  for (const auto& block : ref) {
    ExperimentRow row;
    row.concept_name = block.concept_name;
    row.dim = block.dim;
    row.n = block.n;
    row.M_const = block.M;
    for (const auto& e : block.entries) {
      SteadyRow s;
      s.kind = e.is_skiba ? "skiba" : "root";
      s.P = e.P;
      s.M = e.M;
      s.L = e.L;
      s.V = e.V;
      s.stable = e.stable;
      row.entries.push_back(s);
    }
    row.v_best = block.v_best;
    row.v_worst = block.v_worst;
    if (block.has_jump_fixture) row.jump_drop = block.min_jump_drop + 10.0;
    computed.rows.push_back(row);
  }
  const auto report = compare_table1(computed, 0.043);
  CHECK(report.pass);

  // a broken cell is caught
  computed.rows[0].entries[0].P += 1.0;
  const auto report2 = compare_table1(computed, 0.043);
  CHECK_FALSE(report2.pass);
}

TEST_CASE("csv numbers round-trip") {
  for (double v : {0.7, 0.15, 0.001, 0.019, 2.4, -44.125, 1e-10, 193.95}) {
    CHECK(std::stod(csv_num(v)) == v);
  }
}
