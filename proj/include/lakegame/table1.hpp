#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace lakegame {

/// One reported equilibrium entry of a results block. kind distinguishes
/// genuine steady states ("root") from welfare-switch points ("skiba").
struct SteadyRow {
  std::string kind = "root";
  double P = 0.0;
  double M = std::numeric_limits<double>::quiet_NaN();  // NaN in 1D rows
  double L = 0.0;
  double V = 0.0;
  bool stable = false;
};

/// One block of the results table: a (dim, n, M, concept) cell with its
/// equilibrium entries and the per-agent welfare range over the state space.
struct ExperimentRow {
  std::string concept_name;
  std::string dim;
  int n = 1;
  double M_const = std::numeric_limits<double>::quiet_NaN();
  std::vector<SteadyRow> entries;
  double v_best = 0.0;   // max welfare over the state space
  double v_worst = 0.0;  // min welfare over the state space
  double jump_drop = std::numeric_limits<double>::quiet_NaN();  // V(1.47)-V(1.49)
  double runtime_sec = 0.0;
  bool solver_converged = true;
};

struct ResultsTable {
  std::vector<ExperimentRow> rows;

  const ExperimentRow* find(const std::string& concept_name, const std::string& dim,
                            int n, double M) const {
    for (const auto& r : rows)
      if (r.concept_name == concept_name && r.dim == dim && r.n == n &&
          (dim == "2d" || std::abs(r.M_const - M) < 1e-9))
        return &r;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Reference fixture
// ---------------------------------------------------------------------------

struct RefEntry {
  double P;
  double M;  // NaN in 1D
  double L;
  double V;
  bool stable;     // tight welfare tolerance only at stable entries
  bool is_skiba;   // 1D open-loop middle entries are switch points
  double tol_P;
  double tol_M;
  double tol_L;
};

struct RefBlock {
  std::string concept_name;
  std::string dim;
  int n;
  double M;  // NaN for 2D
  std::vector<RefEntry> entries;
  double v_best, v_worst;
  bool has_jump_fixture = false;
  double min_jump_drop = 0.0;
};

namespace detail {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline RefEntry re1(double P, double L, double V, bool stable, bool skiba,
                    double tol_P, double tol_L) {
  return {P, kNaN, L, V, stable, skiba, tol_P, 0.0, tol_L};
}

inline RefEntry re2(double P, double M, double L, double V, bool stable,
                    double tol_P, double tol_M, double tol_L) {
  return {P, M, L, V, stable, false, tol_P, tol_M, tol_L};
}

}  // namespace detail

/// Reference values with per-cell tolerances. P/L tolerances follow the
/// regression gates; welfare comparisons are made on rho-scaled values with
/// 3% at stable entries, loose elsewhere (values at switch points move by
/// double digits within one grid step, so only gross errors are gated).
inline std::vector<RefBlock> table1_reference() {
  using detail::re1;
  using detail::re2;
  std::vector<RefBlock> t;

  // --- 1D, M = 179 ---
  t.push_back({"coop", "1d", 2, 179.0,
               {re1(0.85, 0.34, -44, true, false, 0.03, 0.01)},
               -43, -67});
  t.push_back({"olne", "1d", 2, 179.0,
               {re1(0.95, 0.34, -45, true, false, 0.02, 0.02),
                re1(2.98, 0.44, -58, false, true, 0.02, 0.05),
                re1(3.81, 0.80, -81, true, false, 0.02, 0.02)},
               -43, -86});
  t.push_back({"fbne", "1d", 2, 179.0,
               {re1(0.82, 0.34, -44, true, false, 0.03, 0.01)},
               -43, -71});

  t.push_back({"coop", "1d", 3, 179.0,
               {re1(0.85, 0.34, -54, true, false, 0.03, 0.01)},
               -53, -77});
  t.push_back({"olne", "1d", 3, 179.0,
               {re1(0.99, 0.35, -55, true, false, 0.02, 0.02),
                re1(2.51, 1.35, -65, false, true, 0.02, 0.05),
                re1(4.56, 1.21, -106, true, false, 0.02, 0.02)},
               -53, -110});
  t.push_back({"fbne", "1d", 3, 179.0,
               {re1(0.80, 0.34, -54, true, false, 0.03, 0.01)},
               -53, -86});

  // --- 1D, M = 240 ---
  t.push_back({"coop", "1d", 2, 240.0,
               {re1(0.60, 0.24, -51, true, false, 0.03, 0.01),
                re1(1.48, 0.0003, -106, false, false, 0.03, 0.01),
                re1(4.65, 0.35, -129, true, false, 0.03, 0.01)},
               -49, -133});
  t.push_back({"olne", "1d", 2, 240.0,
               {re1(0.63, 0.24, -51, true, false, 0.02, 0.02),
                re1(1.48, 0.0003, -106, false, true, 0.02, 0.05),
                re1(5.28, 0.71, -124, true, false, 0.02, 0.02)},
               -50, -140, true, 25.0});
  t.push_back({"fbne", "1d", 2, 240.0,
               {re1(0.58, 0.24, -51, true, false, 0.03, 0.01),
                re1(1.48, 0.0006, -110, false, false, 0.03, 0.01),
                re1(4.63, 0.34, -129, true, false, 0.03, 0.01)},
               -50, -134});

  t.push_back({"coop", "1d", 3, 240.0,
               {re1(0.60, 0.24, -61, true, false, 0.03, 0.01),
                re1(1.48, 0.0003, -116, false, false, 0.03, 0.01),
                re1(4.65, 0.35, -139, true, false, 0.03, 0.01)},
               -59, -143});
  t.push_back({"olne", "1d", 3, 240.0,
               {re1(0.64, 0.24, -61, true, false, 0.02, 0.02),
                re1(1.48, 0.0003, -116, false, true, 0.02, 0.05),
                re1(5.80, 1.04, -162, true, false, 0.02, 0.02)},
               -59, -163, true, 25.0});
  t.push_back({"fbne", "1d", 3, 240.0,
               {re1(0.57, 0.24, -61, true, false, 0.03, 0.01),
                re1(1.48, 0.0008, -128, false, false, 0.03, 0.01),
                re1(4.61, 0.33, -139, true, false, 0.03, 0.01)},
               -60, -145});

  // --- 2D ---
  t.push_back({"coop", "2d", 2, detail::kNaN,
               {re2(0.774, 194.2, 0.31, -46, true, 0.02, 1.0, 0.01)},
               -39, -130});
  t.push_back({"olne", "2d", 2, detail::kNaN,
               {re2(0.87, 190, 0.32, -45, true, 0.05, 3.0, 0.03),
                re2(2.34, 160, 0.49, -48, false, 0.05, 3.0, 0.03),
                re2(3.37, 173, 0.68, -71, true, 0.05, 3.0, 0.03)},
               -40, -137});
  t.push_back({"fbne", "2d", 2, detail::kNaN,
               {re2(0.78, 193.95, 0.31, -46, true, 0.03, 1.5, 0.01)},
               -40, -132});

  t.push_back({"coop", "2d", 3, detail::kNaN,
               {re2(0.774, 194.2, 0.31, -56, true, 0.02, 1.0, 0.01)},
               -49, -140});
  t.push_back({"olne", "2d", 3, detail::kNaN,
               {re2(4.81, 208, 0.93, -121, true, 0.05, 3.0, 0.03)},
               -72, -158});
  t.push_back({"fbne", "2d", 3, detail::kNaN,
               {re2(0.72, 196, 0.30, -56, true, 0.03, 1.5, 0.01)},
               -49, -144});

  return t;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct ComparisonLine {
  std::string label;
  double expected = 0.0;
  double got = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct Table1Report {
  std::vector<ComparisonLine> lines;
  bool pass = true;

  std::string text() const {
    std::ostringstream os;
    for (const auto& l : lines)
      os << (l.pass ? "PASS  " : "FAIL  ") << l.label << "  expected "
         << l.expected << "  got " << l.got << "  tol " << l.tol << "\n";
    os << (pass ? "ALL CELLS PASS" : "REGRESSION FAILURES PRESENT") << "\n";
    return os.str();
  }
};

/// Cell-by-cell comparison against the reference fixture. Welfare cells are
/// rho-scaled to stay insensitive to the inferred discount rate.
inline Table1Report compare_table1(const ResultsTable& computed, double rho,
                                   const std::vector<RefBlock>& reference =
                                       table1_reference()) {
  Table1Report rep;
  auto add = [&rep](const std::string& label, double expect, double got,
                    double tol) {
    const bool ok = std::isfinite(got) && std::abs(got - expect) <= tol;
    rep.lines.push_back({label, expect, got, tol, ok});
    rep.pass = rep.pass && ok;
  };

  for (const auto& ref : reference) {
    std::ostringstream key;
    key << ref.dim << " n=" << ref.n;
    if (ref.dim == "1d") key << " M=" << ref.M;
    key << " " << ref.concept_name;
    const std::string k = key.str();

    const ExperimentRow* row = computed.find(ref.concept_name, ref.dim, ref.n, ref.M);
    if (!row) {
      rep.lines.push_back({k + " [missing row]", 0, 0, 0, false});
      rep.pass = false;
      continue;
    }
    if (row->entries.size() != ref.entries.size()) {
      rep.lines.push_back({k + " [entry count]",
                           static_cast<double>(ref.entries.size()),
                           static_cast<double>(row->entries.size()), 0, false});
      rep.pass = false;
      continue;
    }
    for (size_t i = 0; i < ref.entries.size(); ++i) {
      const RefEntry& e = ref.entries[i];
      const SteadyRow& g = row->entries[i];
      std::ostringstream lab;
      lab << k << " #" << i;
      add(lab.str() + " P*", e.P, g.P, e.tol_P);
      if (ref.dim == "2d") add(lab.str() + " M*", e.M, g.M, e.tol_M);
      add(lab.str() + " L*", e.L, g.L, e.tol_L);
      const double sv = rho * e.V;
      const double rel = e.stable ? 0.03 : 0.20;
      add(lab.str() + " rho*V*", sv, rho * g.V, rel * std::abs(sv));
    }
    add(k + " V-best", rho * ref.v_best, rho * row->v_best,
        0.05 * std::abs(rho * ref.v_best));
    add(k + " V-worst", rho * ref.v_worst, rho * row->v_worst,
        0.05 * std::abs(rho * ref.v_worst));
    if (ref.has_jump_fixture) {
      const bool ok = std::isfinite(row->jump_drop) &&
                      row->jump_drop >= ref.min_jump_drop;
      rep.lines.push_back({k + " jump-drop >= 25", ref.min_jump_drop,
                           row->jump_drop, 0, ok});
      rep.pass = rep.pass && ok;
    }
  }
  return rep;
}

}  // namespace lakegame
