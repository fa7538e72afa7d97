// Command line front end: mesh generation, interface solves, table and
// convergence experiments, and the tiered verification suite.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vstokes/harness.hpp"
#include "vstokes/manufactured.hpp"

using namespace vstokes;

namespace {

MeshFamily parse_family(const std::string& s) { return family_from_name(s); }

int cmd_mesh_gen(const std::string& family, int n, std::uint64_t seed, int lloyd,
                 const std::string& out) {
  const PolygonalMesh mesh = generate_mesh(parse_family(family), n, seed, lloyd);
  const MeshQualityReport q = mesh_quality(mesh);
  if (out.empty()) {
    write_mesh(mesh, std::cout);
  } else {
    write_mesh_file(mesh, out);
    std::cout << family << " n=" << n << ": " << mesh.n_cells() << " cells, "
              << mesh.n_vertices() << " vertices, h=" << mesh.h
              << ", min edge ratio=" << q.min_edge_ratio
              << ", uniformity=" << q.uniformity_ratio
              << (q.all_star_shaped ? "" : ", NOT all star-shaped") << "\n"
              << "wrote " << out << " (fingerprint " << std::hex << mesh_fingerprint(mesh)
              << std::dec << ")\n";
  }
  return 0;
}

int cmd_solve(const std::string& mesh_path, int inv_H, const std::string& primal,
              const std::string& method, double tol, int max_iter, const std::string& out) {
  harness::ProblemContext ctx;
  ctx.mesh = read_mesh_file(mesh_path);
  ctx.dofs = build_dof_map(ctx.mesh);
  const Eigen::VectorXd nu = Eigen::VectorXd::Ones(ctx.mesh.n_cells());
  ctx.elems = compute_element_matrices(ctx.mesh, ctx.dofs, nu, manufactured::load);
  ctx.sys = assemble(ctx.mesh, ctx.elems, ctx.dofs, nu);

  SolverConfig cfg;
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  const PrimalKind kind = primal_from_name(primal);
  const harness::ResultRow row = harness::run_case(ctx, inv_H, method, kind, cfg);

  std::cout << "family=" << row.family << " 1/h=" << row.inv_h << " 1/H=" << row.inv_H
            << " primal=" << row.primal << " method=" << method << "\n"
            << "iterations=" << row.iterations << " converged=" << (row.converged ? "yes" : "no");
  if (!std::isnan(row.kappa2))
    std::cout << " kappa2=" << row.kappa2 << " lambda=[" << row.lambda_min << ","
              << row.lambda_max << "]";
  std::cout << "\nvel_h1_error=" << row.vel_h1_error
            << " pressure_l2_error=" << row.pressure_l2_error << " |Bu|_inf=" << row.bu_inf
            << "\n";
  if (!out.empty()) {
    harness::write_csv_file({row}, out);
    harness::write_meta_file({row}, out + ".meta");
    std::cout << "wrote " << out << "\n";
  }
  return row.flagged ? 1 : 0;
}

int cmd_table(int id, const std::string& family, std::uint64_t seed, double tol, int max_inv_h,
              const std::string& out, const std::string& svg) {
  SolverConfig cfg;
  cfg.tol = tol;
  const auto rows =
      harness::run_table(id, parse_family(family), seed, cfg, &std::cout, max_inv_h);
  if (!out.empty()) {
    harness::write_csv_file(rows, out);
    harness::write_meta_file(rows, out + ".meta");
    std::cout << "wrote " << out << "\n";
  }
  if (!svg.empty()) {
    // kappa2 (or iterations for tables 1 and 2) vs H/h, one series per 1/H
    std::vector<harness::SvgSeries> series;
    for (int H : {2, 4, 8, 16, 32}) {
      harness::SvgSeries s;
      s.label = "1/H=" + std::to_string(H);
      for (const auto& r : rows) {
        if (r.inv_H != H || r.flagged) continue;
        s.x.push_back(static_cast<double>(r.inv_h) / r.inv_H);
        s.y.push_back(std::isnan(r.kappa2) ? r.iterations : r.kappa2);
      }
      if (!s.x.empty()) series.push_back(std::move(s));
    }
    const std::string ylab = (id <= 2) ? "iterations" : "kappa2";
    harness::write_svg_chart(svg, "table " + std::to_string(id) + " (" + family + ")", "H/h",
                             ylab, series);
    std::cout << "wrote " << svg << "\n";
  }
  return 0;
}

int cmd_convergence(const std::string& family, std::vector<int> ns, const std::string& solver,
                    std::uint64_t seed, const std::string& out) {
  const auto rows = harness::convergence_study(parse_family(family), ns, solver, seed);
  std::ostringstream csv;
  csv << "n,vel_h1_error,rate_h1,pressure_l2_error,rate_l2\n";
  for (const auto& r : rows) {
    csv << r.n << ',' << r.vel_h1 << ',';
    if (!std::isnan(r.rate_h1)) csv << r.rate_h1;
    csv << ',' << r.pressure_l2 << ',';
    if (!std::isnan(r.rate_l2)) csv << r.rate_l2;
    csv << '\n';
  }
  std::cout << csv.str();
  if (!out.empty()) {
    std::ofstream os(out);
    os << csv.str();
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& level) {
  const harness::VerifyReport rep = harness::verify(level, &std::cout);
  int failed = 0;
  for (const auto& c : rep.checks)
    if (!c.pass) ++failed;
  std::cout << rep.checks.size() - failed << "/" << rep.checks.size() << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"divergence-free VEM Stokes solver with BDDC-preconditioned interface solves"};
  app.set_config("--config", "", "plain key=value config file; flags override");
  app.require_subcommand(1);

  // mesh gen
  auto* mesh = app.add_subcommand("mesh", "mesh utilities");
  auto* gen = mesh->add_subcommand("gen", "generate a mesh family on the unit square");
  std::string family = "QUAD", out, svg;
  int n = 8, lloyd = 100, inv_H = 2, max_iter = 5000, table_id = 3, max_inv_h = 128;
  std::uint64_t seed = 1;
  double tol = 1e-6;
  gen->add_option("--family", family, "QUAD|HEXA|TRI|CVT")->required();
  gen->add_option("--n", n, "cells per side")->required();
  gen->add_option("--seed", seed, "CVT seed");
  gen->add_option("--lloyd", lloyd, "CVT Lloyd iterations");
  gen->add_option("--out", out, "output mesh file (stdout if omitted)");

  // solve
  auto* solve = app.add_subcommand("solve", "interface solve on a mesh file");
  std::string mesh_path, primal = "v+f", method = "pcg";
  solve->add_option("--mesh", mesh_path, "mesh file")->required();
  solve->add_option("--invH", inv_H, "subdomains per side")->required();
  solve->add_option("--primal", primal, "v|v+n|v+f");
  solve->add_option("--method", method, "pcg|gmres")
      ->check(CLI::IsMember({"pcg", "gmres"}));
  solve->add_option("--tol", tol, "relative residual tolerance");
  solve->add_option("--max-iter", max_iter, "iteration cap");
  solve->add_option("--out", out, "CSV output path");

  // table
  auto* table = app.add_subcommand("table", "reproduce a results table");
  table->add_option("--id", table_id, "1: GMRES, 2: vertices, 3: +normal avg, 4: +both avgs")
      ->required()
      ->check(CLI::Range(1, 4));
  table->add_option("--family", family, "QUAD|HEXA|TRI|CVT");
  table->add_option("--seed", seed, "CVT seed");
  table->add_option("--tol", tol, "relative residual tolerance");
  table->add_option("--max-invh", max_inv_h, "largest 1/h to run");
  table->add_option("--out", out, "CSV output path");
  table->add_option("--svg", svg, "SVG chart output path");

  // convergence
  auto* conv = app.add_subcommand("convergence", "manufactured-solution error study");
  std::vector<int> ns{8, 16, 32};
  std::string conv_solver = "monolithic";
  conv->add_option("--family", family, "QUAD|HEXA|TRI|CVT");
  conv->add_option("--n-list", ns, "mesh sizes");
  conv->add_option("--solver", conv_solver, "monolithic|interface");
  conv->add_option("--seed", seed, "CVT seed");
  conv->add_option("--out", out, "CSV output path");

  // verify
  auto* ver = app.add_subcommand("verify", "run the verification suite");
  std::string level = "fast";
  ver->add_option("--level", level, "fast|full|tables")
      ->check(CLI::IsMember({"fast", "full", "tables"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_mesh_gen(family, n, seed, lloyd, out);
    if (solve->parsed()) return cmd_solve(mesh_path, inv_H, primal, method, tol, max_iter, out);
    if (table->parsed()) return cmd_table(table_id, family, seed, tol, max_inv_h, out, svg);
    if (conv->parsed()) return cmd_convergence(family, ns, conv_solver, seed, out);
    if (ver->parsed()) return cmd_verify(level);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
