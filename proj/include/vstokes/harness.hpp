#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "vstokes/bddc.hpp"
#include "vstokes/krylov.hpp"

namespace vstokes::harness {

struct ExperimentSpec {
  MeshFamily family = MeshFamily::Quad;
  std::vector<int> inv_h;
  std::vector<int> inv_H;
  std::string method = "pcg";  // "pcg" | "gmres"
  PrimalKind primal = PrimalKind::VerticesPlusFullAvg;
  SolverConfig solver;
  std::uint64_t seed = 1;
  int lloyd_iters = 100;
  std::string out_path;  // CSV destination, empty = don't write
};

struct ResultRow {
  std::string family;
  int inv_h = 0, inv_H = 0;
  std::string primal;  // "none" for GMRES
  int iterations = 0;
  double kappa2 = std::numeric_limits<double>::quiet_NaN();
  double lambda_min = std::numeric_limits<double>::quiet_NaN();
  double lambda_max = std::numeric_limits<double>::quiet_NaN();
  double vel_h1_error = std::numeric_limits<double>::quiet_NaN();
  double pressure_l2_error = std::numeric_limits<double>::quiet_NaN();
  double wall_time = 0.0;
  bool converged = false;
  bool flagged = false;  // partition failure or breakdown; row kept, not fatal
  double bu_inf = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t mesh_hash = 0, partition_hash = 0;
};

// Assembled discretization of the manufactured problem on one mesh, shared
// across subdomain counts.
struct ProblemContext {
  PolygonalMesh mesh;
  DofMap dofs;
  std::vector<LocalElementMatrices> elems;
  GlobalSystem sys;
};

ProblemContext make_problem(MeshFamily family, int n, std::uint64_t seed = 1,
                            int lloyd_iters = 100);

// One interface solve: "gmres" ignores the primal kind. Computes recovery,
// discretization errors and eigenvalue estimates.
ResultRow run_case(const ProblemContext& ctx, int inv_H, const std::string& method,
                   PrimalKind primal, const SolverConfig& cfg);

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

void write_csv(const std::vector<ResultRow>& rows, std::ostream& os);
void write_csv_file(const std::vector<ResultRow>& rows, const std::string& path);
void write_meta_file(const std::vector<ResultRow>& rows, const std::string& path);

// Paper-style table runs: 1 = GMRES baseline, 2 = vertices only,
// 3 = vertices + normal average, 4 = vertices + both averages.
// Grid: 1/H in {2,...,32}, 1/h in {8,...,128}, cells with H/h >= 4.
std::vector<ResultRow> run_table(int table_id, MeshFamily family, std::uint64_t seed = 1,
                                 const SolverConfig& cfg = {}, std::ostream* progress = nullptr,
                                 int max_inv_h = 128);

struct ReferenceCell {
  int inv_H, inv_h;
  int iterations;
  double kappa2;  // NaN where the paper reports none
};
// Bundled reference values (QUAD tables) for the tables-tier diff.
const std::vector<ReferenceCell>& reference_table(int table_id);

struct ConvergenceRow {
  int n = 0;
  double vel_h1 = 0.0, pressure_l2 = 0.0;
  double rate_h1 = std::numeric_limits<double>::quiet_NaN();
  double rate_l2 = std::numeric_limits<double>::quiet_NaN();
};

// Manufactured-solution study; solver is "monolithic" or "interface"
// (interface uses inv_H = 2 with the two-average primal space).
std::vector<ConvergenceRow> convergence_study(MeshFamily family, const std::vector<int>& ns,
                                              const std::string& solver = "monolithic",
                                              std::uint64_t seed = 1);

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

// level: "fast" (unit invariants), "full" (adds oracle equivalences and the
// property suites), "tables" (adds the QUAD table reproduction with a diff
// against the bundled reference values).
VerifyReport verify(const std::string& level, std::ostream* progress = nullptr);

// Minimal SVG polyline chart; series are (label, x, y) triples.
struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<SvgSeries>& series, bool logx = true);

}  // namespace vstokes::harness
