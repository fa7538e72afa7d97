#include "vstokes/harness.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <sstream>

#include "vstokes/manufactured.hpp"
#include "vstokes/quadrature.hpp"
#include "vstokes/voronoi.hpp"

namespace vstokes::harness {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::uint64_t fnv64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t partition_fingerprint(const SubdomainPartition& part) {
  return fnv64(part.cell_subdomain.data(), part.cell_subdomain.size() * sizeof(int));
}

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

ProblemContext make_problem(MeshFamily family, int n, std::uint64_t seed, int lloyd_iters) {
  ProblemContext ctx;
  ctx.mesh = generate_mesh(family, n, seed, lloyd_iters);
  ctx.dofs = build_dof_map(ctx.mesh);
  const Eigen::VectorXd nu = Eigen::VectorXd::Ones(ctx.mesh.n_cells());
  ctx.elems = compute_element_matrices(ctx.mesh, ctx.dofs, nu, manufactured::load);
  ctx.sys = assemble(ctx.mesh, ctx.elems, ctx.dofs, nu);
  return ctx;
}

ResultRow run_case(const ProblemContext& ctx, int inv_H, const std::string& method,
                   PrimalKind primal, const SolverConfig& cfg) {
  ResultRow row;
  row.family = family_name(ctx.mesh.family);
  row.inv_h = static_cast<int>(std::lround(std::sqrt(
      ctx.mesh.family == MeshFamily::Tri ? ctx.mesh.n_cells() / 2.0 : ctx.mesh.n_cells())));
  row.inv_H = inv_H;
  row.primal = (method == "gmres") ? "none" : primal_name(primal);
  row.mesh_hash = mesh_fingerprint(ctx.mesh);

  const double t0 = now_seconds();
  SubdomainPartition part;
  try {
    part = partition_regular(ctx.mesh, ctx.dofs, inv_H);
  } catch (const PartitionError&) {
    row.flagged = true;
    row.wall_time = now_seconds() - t0;
    return row;
  }
  row.partition_hash = partition_fingerprint(part);
  const auto blocks = subdomain_local_systems(ctx.mesh, ctx.dofs, ctx.elems, part);

  RecoveredSolution rec;
  if (method == "gmres") {
    const InterfaceOperator op(ctx.dofs, part, blocks);
    const Eigen::VectorXd g = op.rhs();
    const auto res = gmres([&](const Eigen::VectorXd& x) { return op.apply(x); }, g, cfg);
    row.iterations = res.report.iterations;
    row.converged = res.report.converged;
    if (!res.report.converged) row.flagged = true;
    rec = op.recover(res.x);
  } else {
    const PrimalSpace pspace = select_primal(ctx.mesh, ctx.dofs, part, primal);
    const ChangeOfBasis basis = build_change_of_basis(part, pspace);
    const auto transforms = subdomain_transforms(part, basis);
    const InterfaceOperator op(ctx.dofs, part, blocks, &transforms);
    const BddcPreconditioner M(op, ctx.dofs, part, blocks, pspace, basis);
    const Eigen::VectorXd g = op.rhs();
    const auto res = pcg([&](const Eigen::VectorXd& x) { return op.apply(x); },
                         [&](const Eigen::VectorXd& r) { return M.apply(r); }, g, cfg);
    row.iterations = res.report.iterations;
    row.converged = res.report.converged;
    if (res.report.breakdown || !res.report.converged) row.flagged = true;
    if (res.report.has_eigs) {
      row.lambda_min = res.report.lambda_min;
      row.lambda_max = res.report.lambda_max;
      row.kappa2 = res.report.cond;
    }
    rec = op.recover(res.x);
  }

  row.bu_inf = (ctx.sys.B * rec.u).cwiseAbs().maxCoeff();
  row.vel_h1_error =
      velocity_h1_error(ctx.mesh, ctx.dofs, ctx.elems, rec.u, manufactured::velocity_gradient);
  row.pressure_l2_error = pressure_l2_error(ctx.mesh, rec.p, manufactured::pressure);
  row.wall_time = now_seconds() - t0;
  return row;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
  for (int h : spec.inv_h)
    if (!power_of_two(h) || h < 8 || h > 128)
      throw std::invalid_argument("inv_h values must be powers of two in [8,128]");
  for (int H : spec.inv_H)
    if (!power_of_two(H) || H < 2 || H > 32)
      throw std::invalid_argument("inv_H values must be powers of two in [2,32]");

  std::vector<ResultRow> rows;
  for (int n : spec.inv_h) {
    const ProblemContext ctx = make_problem(spec.family, n, spec.seed, spec.lloyd_iters);
    for (int H : spec.inv_H) {
      if (n / H < 4) continue;  // the paper's skipped cells
      const bool structured =
          spec.family == MeshFamily::Quad || spec.family == MeshFamily::Tri;
      if (structured && n % H != 0) continue;
      rows.push_back(run_case(ctx, H, spec.method, spec.primal, spec.solver));
    }
  }
  if (!spec.out_path.empty()) {
    write_csv_file(rows, spec.out_path);
    write_meta_file(rows, spec.out_path + ".meta");
  }
  return rows;
}

namespace {

void csv_field(std::ostream& os, double v) {
  if (std::isnan(v)) return;  // empty field
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  os << buf;
}

}  // namespace

void write_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
  os << "family,inv_h,inv_H,primal,iterations,kappa2,lambda_min,lambda_max,"
        "vel_h1_error,pressure_l2_error,wall_time\n";
  for (const auto& r : rows) {
    os << r.family << ',' << r.inv_h << ',' << r.inv_H << ',' << r.primal << ','
       << r.iterations << ',';
    csv_field(os, r.kappa2);
    os << ',';
    csv_field(os, r.lambda_min);
    os << ',';
    csv_field(os, r.lambda_max);
    os << ',';
    csv_field(os, r.vel_h1_error);
    os << ',';
    csv_field(os, r.pressure_l2_error);
    os << ',';
    csv_field(os, r.wall_time);
    os << '\n';
  }
}

void write_csv_file(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_csv(rows, os);
}

void write_meta_file(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "family inv_h inv_H mesh_fingerprint partition_fingerprint flagged\n";
  for (const auto& r : rows)
    os << r.family << ' ' << r.inv_h << ' ' << r.inv_H << ' ' << std::hex << r.mesh_hash << ' '
       << r.partition_hash << std::dec << ' ' << (r.flagged ? 1 : 0) << '\n';
}

std::vector<ResultRow> run_table(int table_id, MeshFamily family, std::uint64_t seed,
                                 const SolverConfig& cfg, std::ostream* progress, int max_inv_h) {
  std::string method = "pcg";
  PrimalKind primal = PrimalKind::VerticesOnly;
  switch (table_id) {
    case 1: method = "gmres"; break;
    case 2: primal = PrimalKind::VerticesOnly; break;
    case 3: primal = PrimalKind::VerticesPlusNormalAvg; break;
    case 4: primal = PrimalKind::VerticesPlusFullAvg; break;
    default: throw std::invalid_argument("table id must be 1..4");
  }
  std::vector<ResultRow> rows;
  for (int n : {8, 16, 32, 64, 128}) {
    if (n > max_inv_h) continue;
    const ProblemContext ctx = make_problem(family, n, seed, 100);
    for (int H : {2, 4, 8, 16, 32}) {
      if (n / H < 4 || n % H != 0) continue;
      rows.push_back(run_case(ctx, H, method, primal, cfg));
      if (progress) {
        const auto& r = rows.back();
        (*progress) << "table " << table_id << ' ' << r.family << " 1/h=" << n << " 1/H=" << H
                    << " it=" << r.iterations;
        if (!std::isnan(r.kappa2)) (*progress) << " k2=" << r.kappa2;
        (*progress) << (r.flagged ? " [flagged]" : "") << std::endl;
      }
    }
  }
  return rows;
}

const std::vector<ReferenceCell>& reference_table(int table_id) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  static const std::vector<ReferenceCell> t1 = {
      {2, 8, 7, nan},    {2, 16, 13, nan},  {2, 32, 18, nan},  {2, 64, 27, nan},
      {2, 128, 40, nan}, {4, 16, 40, nan},  {4, 32, 57, nan},  {4, 64, 79, nan},
      {4, 128, 99, nan}, {8, 32, 140, nan}, {8, 64, 203, nan}, {8, 128, 282, nan},
      {16, 64, 295, nan}, {16, 128, 437, nan}, {32, 128, 605, nan}};
  static const std::vector<ReferenceCell> t2 = {
      {2, 8, 7, nan},    {2, 16, 7, nan},  {2, 32, 7, nan},  {2, 64, 7, nan},
      {2, 128, 8, nan},  {4, 16, 12, nan}, {4, 32, 13, nan}, {4, 64, 15, nan},
      {4, 128, 17, nan}, {8, 32, 22, nan}, {8, 64, 23, nan}, {8, 128, 29, nan},
      {16, 64, 22, nan}, {16, 128, 26, nan}, {32, 128, 22, nan}};
  static const std::vector<ReferenceCell> t3 = {
      {2, 8, 7, 1.82},    {2, 16, 7, 2.11},  {2, 32, 7, 2.37},   {2, 64, 7, 2.80},
      {2, 128, 8, 3.24},  {4, 16, 9, 4.40},  {4, 32, 10, 5.75},  {4, 64, 11, 7.20},
      {4, 128, 12, 8.76}, {8, 32, 13, 5.78}, {8, 64, 15, 7.81},  {8, 128, 16, 10.09},
      {16, 64, 16, 6.16}, {16, 128, 19, 8.46}, {32, 128, 16, 6.29}};
  static const std::vector<ReferenceCell> t4 = {
      {2, 8, 7, 1.48},    {2, 16, 7, 1.68},  {2, 32, 7, 1.90},  {2, 64, 8, 2.18},
      {2, 128, 7, 2.51},  {4, 16, 9, 2.80},  {4, 32, 10, 3.73}, {4, 64, 10, 4.78},
      {4, 128, 11, 5.93}, {8, 32, 10, 2.99}, {8, 64, 11, 4.05}, {8, 128, 13, 5.20},
      {16, 64, 9, 2.72},  {16, 128, 10, 3.67}, {32, 128, 8, 2.64}};
  switch (table_id) {
    case 1: return t1;
    case 2: return t2;
    case 3: return t3;
    case 4: return t4;
  }
  throw std::invalid_argument("table id must be 1..4");
}

std::vector<ConvergenceRow> convergence_study(MeshFamily family, const std::vector<int>& ns,
                                              const std::string& solver, std::uint64_t seed) {
  std::vector<ConvergenceRow> rows;
  for (int n : ns) {
    const ProblemContext ctx = make_problem(family, n, seed, 100);
    ConvergenceRow row;
    row.n = n;
    if (solver == "monolithic") {
      const MonolithicSolution sol = solve_monolithic_direct(ctx.sys);
      row.vel_h1 = velocity_h1_error(ctx.mesh, ctx.dofs, ctx.elems, sol.u,
                                     manufactured::velocity_gradient);
      row.pressure_l2 = pressure_l2_error(ctx.mesh, sol.p, manufactured::pressure);
    } else {
      SolverConfig cfg;
      cfg.tol = 1e-10;
      const ResultRow r = run_case(ctx, 2, "pcg", PrimalKind::VerticesPlusFullAvg, cfg);
      if (r.flagged) throw std::runtime_error("interface solve failed in convergence study");
      row.vel_h1 = r.vel_h1_error;
      row.pressure_l2 = r.pressure_l2_error;
    }
    if (!rows.empty()) {
      row.rate_h1 = std::log2(rows.back().vel_h1 / row.vel_h1) /
                    std::log2(static_cast<double>(n) / rows.back().n);
      row.rate_l2 = std::log2(rows.back().pressure_l2 / row.pressure_l2) /
                    std::log2(static_cast<double>(n) / rows.back().n);
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// verification tiers
// ---------------------------------------------------------------------------

namespace {

struct CheckRunner {
  VerifyReport& report;
  std::ostream* progress;

  void operator()(const std::string& name, const std::function<std::string()>& body) {
    VerifyCheck c;
    c.name = name;
    try {
      c.detail = body();  // empty detail = pass
      c.pass = c.detail.empty();
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("exception: ") + e.what();
    }
    if (progress)
      (*progress) << (c.pass ? "PASS " : "FAIL ") << name
                  << (c.detail.empty() ? "" : "  [" + c.detail + "]") << std::endl;
    report.checks.push_back(std::move(c));
  }
};

std::string expect(bool ok, const std::string& detail) { return ok ? "" : detail; }

// dense matrix of a linear operator by columns
Eigen::MatrixXd densify(const LinearOp& op, int n) {
  Eigen::MatrixXd M(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    e(j) = 1.0;
    M.col(j) = op(e);
    e(j) = 0.0;
  }
  return M;
}

struct DdSetup {
  SubdomainPartition part;
  std::vector<SubdomainBlocks> blocks;
  PrimalSpace pspace;
  ChangeOfBasis basis;
  std::vector<SpMat> transforms;
  std::unique_ptr<InterfaceOperator> op;
  std::unique_ptr<BddcPreconditioner> M;
};

DdSetup make_dd(const ProblemContext& ctx, int inv_H, PrimalKind kind) {
  DdSetup s;
  s.part = partition_regular(ctx.mesh, ctx.dofs, inv_H);
  s.blocks = subdomain_local_systems(ctx.mesh, ctx.dofs, ctx.elems, s.part);
  s.pspace = select_primal(ctx.mesh, ctx.dofs, s.part, kind);
  s.basis = build_change_of_basis(s.part, s.pspace);
  s.transforms = subdomain_transforms(s.part, s.basis);
  s.op = std::make_unique<InterfaceOperator>(ctx.dofs, s.part, s.blocks, &s.transforms);
  s.M = std::make_unique<BddcPreconditioner>(*s.op, ctx.dofs, s.part, s.blocks, s.pspace,
                                             s.basis);
  return s;
}

// deterministic pseudo-random vector
Eigen::VectorXd test_vector(int n, std::uint64_t seed) {
  Eigen::VectorXd v(n);
  std::uint64_t state = seed;
  for (int i = 0; i < n; ++i) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    v(i) = static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
  }
  return v;
}

}  // namespace

VerifyReport verify(const std::string& level, std::ostream* progress) {
  if (level != "fast" && level != "full" && level != "tables")
    throw std::invalid_argument("verify level must be fast, full or tables");
  VerifyReport report;
  CheckRunner check{report, progress};

  // ---- fast tier ----
  check("gauss-lobatto-rule", [] {
    const EdgeRule r = gauss_lobatto_edge_rule(3);
    double i2 = 0.0, i3 = 0.0, i0 = 0.0;
    for (std::size_t g = 0; g < r.points.size(); ++g) {
      i0 += r.weights[g];
      i2 += r.weights[g] * r.points[g] * r.points[g];
      i3 += r.weights[g] * std::pow(r.points[g], 3);
    }
    return expect(std::abs(i0 - 2.0) < 1e-15 && std::abs(i2 - 2.0 / 3.0) < 1e-15 &&
                      std::abs(i3) < 1e-15,
                  "rule moments wrong");
  });

  check("mesh-families-invariants", [] {
    for (const MeshFamily fam :
         {MeshFamily::Quad, MeshFamily::Tri, MeshFamily::Hexa, MeshFamily::Cvt}) {
      const PolygonalMesh m = generate_mesh(fam, 8, 1, 40);
      double area = 0.0;
      for (int c = 0; c < m.n_cells(); ++c) area += cell_geometry(m, c).area;
      if (std::abs(area - 1.0) > 1e-12) return family_name(fam) + ": cell areas do not tile";
      const PolygonalMesh m2 = generate_mesh(fam, 8, 1, 40);
      if (mesh_to_string(m) != mesh_to_string(m2)) return family_name(fam) + ": not deterministic";
    }
    return std::string{};
  });

  check("mesh-io-roundtrip", [] {
    const PolygonalMesh m = generate_mesh(MeshFamily::Quad, 8);
    const std::string s1 = mesh_to_string(m);
    std::istringstream is(s1);
    const PolygonalMesh m2 = read_mesh(is);
    return expect(mesh_to_string(m2) == s1, "round trip not byte-identical");
  });

  check("dof-counts", [] {
    const PolygonalMesh m = generate_mesh(MeshFamily::Quad, 8);
    const DofMap d = build_dof_map(m);
    return expect(d.n_u == 450 && d.n_p == 64, "8x8 QUAD dof counts wrong");
  });

  check("projector-patch-test", [] {
    for (const MeshFamily fam :
         {MeshFamily::Quad, MeshFamily::Tri, MeshFamily::Hexa, MeshFamily::Cvt}) {
      const PolygonalMesh m = generate_mesh(fam, 4, 1, 40);
      const DofMap d = build_dof_map(m);
      const auto load = [](const Point2&) { return Point2{0, 0}; };
      for (int c = 0; c < m.n_cells(); ++c) {
        const auto el = local_matrices(m, d, c, 1.0, load);
        // dofs sampled from constant-divergence quadratics must be reproduced
        const int nloc = static_cast<int>(el.dofs.size());
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nloc, 12);
        for (int i = 0; i < nloc; ++i) {
          const int comp = d.comp_of(el.dofs[i]);
          const Point2 p = d.carrier_pos[d.carrier_of(el.dofs[i])];
          const double s = (p.x - el.xc.x) / el.hk, t = (p.y - el.xc.y) / el.hk;
          const double mono[6] = {1.0, s, t, s * s, s * t, t * t};
          for (int j = 0; j < 6; ++j) D(i, comp * 6 + j) = mono[j];
        }
        // divergence-free basis of [P2]^2 plus constant-divergence fields
        std::vector<Eigen::VectorXd> polys;
        const auto coef = [](std::initializer_list<std::pair<int, double>> items) {
          Eigen::VectorXd c = Eigen::VectorXd::Zero(12);
          for (auto [idx, v] : items) c(idx) = v;
          return c;
        };
        polys.push_back(coef({{3, 1.0}, {6 + 4, -2.0}}));  // (s^2, -2 s t)
        polys.push_back(coef({{1, 1.0}, {6 + 2, -1.0}}));  // (s, -t)
        polys.push_back(coef({{2, 1.0}}));                 // (t, 0)
        polys.push_back(coef({{1, 1.0}, {6 + 2, 1.0}}));   // (s, t): divergence 2/h
        for (const auto& pc : polys) {
          const Eigen::VectorXd rec = el.proj * (D * pc);
          if ((rec - pc).cwiseAbs().maxCoeff() > 1e-12)
            return family_name(fam) + ": projector does not reproduce quadratics on cell " +
                   std::to_string(c);
        }
        // constants span the stiffness kernel and carry no divergence
        const Eigen::VectorXd ones = D * coef({{0, 1.0}});
        if ((el.A * ones).cwiseAbs().maxCoeff() > 1e-12 * el.A.cwiseAbs().maxCoeff())
          return family_name(fam) + ": constant field not in stiffness kernel";
        if (std::abs(el.B * ones) > 1e-13) return family_name(fam) + ": constant has flux";
      }
    }
    return std::string{};
  });

  check("assembly-symmetry", [] {
    const ProblemContext ctx = make_problem(MeshFamily::Quad, 8);
    const SpMat diff = SpMat(ctx.sys.A - SpMat(ctx.sys.A.transpose()));
    double m = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
      for (SpMat::InnerIterator it(diff, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return expect(m == 0.0, "A not exactly symmetric, max " + std::to_string(m));
  });

  if (level == "fast") return report;

  // ---- full tier ----
  const ProblemContext q8 = make_problem(MeshFamily::Quad, 8);
  const ProblemContext q16 = make_problem(MeshFamily::Quad, 16);

  check("monolithic-vs-interface", [&] {
    const MonolithicSolution mono = solve_monolithic_direct(q16.sys);
    SolverConfig cfg;
    cfg.tol = 1e-12;
    DdSetup s = make_dd(q16, 4, PrimalKind::VerticesPlusFullAvg);
    const Eigen::VectorXd g = s.op->rhs();
    const auto res = pcg([&](const Eigen::VectorXd& x) { return s.op->apply(x); },
                         [&](const Eigen::VectorXd& r) { return s.M->apply(r); }, g, cfg);
    const RecoveredSolution rec = s.op->recover(res.x);
    const double du = (rec.u - mono.u).norm() / mono.u.norm();
    const double dp = (rec.p - mono.p).norm() / mono.p.norm();
    const double bu = (q16.sys.B * rec.u).cwiseAbs().maxCoeff();
    return expect(du <= 1e-8 && dp <= 1e-8 && bu <= 1e-9,
                  "u diff " + std::to_string(du) + ", p diff " + std::to_string(dp) +
                      ", |Bu| " + std::to_string(bu));
  });

  check("dense-schur-oracle", [&] {
    // oracle: one-shot dense elimination of the full saddle system written in
    // the subdomain pressure basis (zero-mean functions, then constants)
    const SubdomainPartition part = partition_regular(q8.mesh, q8.dofs, 2);
    const auto blocks = subdomain_local_systems(q8.mesh, q8.dofs, q8.elems, part);
    const InterfaceOperator op(q8.dofs, part, blocks);
    const int nfree = q8.dofs.n_free;
    const int np = q8.dofs.n_p;

    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(np, np);
    std::vector<int> q0_cols;
    int col = 0;
    for (int s = 0; s < part.N; ++s) {
      const auto& cells = part.cells_of[s];
      double area = 0.0;
      for (int c : cells) area += q8.sys.cell_areas(c);
      for (std::size_t j = 0; j + 1 < cells.size(); ++j, ++col) {
        Z(cells[j], col) += 1.0;
        const double w = q8.sys.cell_areas(cells[j]) / area;
        for (int c : cells) Z(c, col) -= w;
      }
    }
    for (int s = 0; s < part.N; ++s, ++col) {
      for (int c : part.cells_of[s]) Z(c, col) = 1.0;
      q0_cols.push_back(col);
    }

    const Eigen::MatrixXd Bt = Z.transpose() * Eigen::MatrixXd(q8.sys.B);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nfree + np, nfree + np);
    K.topLeftCorner(nfree, nfree) = Eigen::MatrixXd(q8.sys.A);
    K.bottomLeftCorner(np, nfree) = Bt;
    K.topRightCorner(nfree, np) = Bt.transpose();

    std::vector<int> iface, interior;
    std::vector<uint8_t> is_iface(nfree + np, 0);
    for (int d : op.iface_dofs()) is_iface[q8.dofs.free_index[d]] = 1;
    for (int c : q0_cols) is_iface[nfree + c] = 1;
    for (int d : op.iface_dofs()) iface.push_back(q8.dofs.free_index[d]);
    for (int c : q0_cols) iface.push_back(nfree + c);
    for (int i = 0; i < nfree + np; ++i)
      if (!is_iface[i]) interior.push_back(i);

    const int ni = static_cast<int>(interior.size());
    const int ng = static_cast<int>(iface.size());
    Eigen::MatrixXd Kii(ni, ni), Kig(ni, ng), Kgi(ng, ni), Kgg(ng, ng);
    for (int i = 0; i < ni; ++i)
      for (int j = 0; j < ni; ++j) Kii(i, j) = K(interior[i], interior[j]);
    for (int i = 0; i < ni; ++i)
      for (int j = 0; j < ng; ++j) Kig(i, j) = K(interior[i], iface[j]);
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ni; ++j) Kgi(i, j) = K(iface[i], interior[j]);
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j) Kgg(i, j) = K(iface[i], iface[j]);
    const Eigen::MatrixXd S_oracle = Kgg - Kgi * Kii.partialPivLu().solve(Kig);

    const Eigen::MatrixXd S_op =
        densify([&](const Eigen::VectorXd& x) { return op.apply(x); }, op.dim());
    const double diff = (S_oracle - S_op).cwiseAbs().maxCoeff();
    return expect(diff <= 1e-10, "max deviation " + std::to_string(diff));
  });

  check("schur-velocity-block-spd", [&] {
    const SubdomainPartition part = partition_regular(q8.mesh, q8.dofs, 2);
    const auto blocks = subdomain_local_systems(q8.mesh, q8.dofs, q8.elems, part);
    for (int s = 0; s < part.N; ++s) {
      const auto& b = blocks[s];
      const int nI = static_cast<int>(b.interior_dofs.size());
      const int nQ = static_cast<int>(b.B_II.rows());
      const int nG = static_cast<int>(b.interface_dofs.size());
      Eigen::MatrixXd K11 = Eigen::MatrixXd::Zero(nI + nQ, nI + nQ);
      K11.topLeftCorner(nI, nI) = Eigen::MatrixXd(b.A_II);
      K11.bottomLeftCorner(nQ, nI) = Eigen::MatrixXd(b.B_II);
      K11.topRightCorner(nI, nQ) = Eigen::MatrixXd(b.B_II).transpose();
      Eigen::MatrixXd K12(nI + nQ, nG);
      K12.topRows(nI) = Eigen::MatrixXd(b.A_GI).transpose();
      K12.bottomRows(nQ) = Eigen::MatrixXd(b.B_IG);
      const Eigen::MatrixXd S =
          Eigen::MatrixXd(b.A_GG) - K12.transpose() * K11.partialPivLu().solve(K12);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
      if (eig.eigenvalues().minCoeff() <= 0.0)
        return "subdomain " + std::to_string(s) + ": velocity Schur block not SPD";
    }
    return std::string{};
  });

  // property suites on a 4x4 decomposition
  for (const PrimalKind kind :
       {PrimalKind::VerticesPlusNormalAvg, PrimalKind::VerticesPlusFullAvg}) {
    const std::string tag = primal_name(kind);
    check("properties-" + tag, [&, kind] {
      DdSetup s = make_dd(q16, 4, kind);
      const int dim = s.op->dim();
      const int tdim = s.M->tilde_dim();

      // partition of unity of the counting scalings
      for (int c = 0; c < q16.dofs.n_carriers; ++c) {
        if (s.part.carrier_class[c] == CarrierClass::InterfaceEdge ||
            s.part.carrier_class[c] == CarrierClass::InterfaceVertex) {
          const int mult = s.part.multiplicity(c);
          if (std::abs(mult * (1.0 / mult) - 1.0) > 1e-15) return std::string("scaling broken");
          if (mult < 2) return std::string("interface carrier with multiplicity < 2");
        }
      }

      // R~^T R~_D = I and R~_D^T R~ = I
      const Eigen::VectorXd v = test_vector(dim, 7);
      if ((s.M->gather(s.M->scatter_scaled(v)) - v).cwiseAbs().maxCoeff() > 1e-12)
        return std::string("Rt^T Rt_D != I");
      if ((s.M->gather_scaled(s.M->scatter(v)) - v).cwiseAbs().maxCoeff() > 1e-12)
        return std::string("Rt_D^T Rt != I");

      // E_D idempotency
      const Eigen::VectorXd w = test_vector(tdim, 8);
      const Eigen::VectorXd ed = s.M->scatter(s.M->gather_scaled(w));
      if ((s.M->scatter(s.M->gather_scaled(ed)) - ed).cwiseAbs().maxCoeff() >
          1e-12 * (1.0 + ed.cwiseAbs().maxCoeff()))
        return std::string("E_D not idempotent");

      // Assumption 1: dual flux rows vanish after the change of basis
      if (s.M->assumption1_residual() > 1e-12)
        return "assumption-1 residual " + std::to_string(s.M->assumption1_residual());

      // coarse matrix symmetric
      if (s.M->coarse_asymmetry() > 1e-12)
        return "S_CC asymmetry " + std::to_string(s.M->coarse_asymmetry());

      // benign preservation: scaled gather of a benign vector stays benign
      Eigen::VectorXd bt = test_vector(tdim, 9);
      bt.tail(s.part.N).array() -= bt.tail(s.part.N).mean();
      // remove the primal flux components (dual ones vanish by assumption 1)
      Eigen::MatrixXd Mc = Eigen::MatrixXd::Zero(s.part.N, s.M->n_primal());
      for (int i = 0; i < s.part.N; ++i) {
        const auto& plocal = s.M->primal_local_indices(i);
        const auto& pgid = s.M->local_primal_gids(i);
        for (std::size_t j = 0; j < plocal.size(); ++j)
          Mc(i, pgid[j]) += s.op->B_0G(i)(plocal[j]);
      }
      Eigen::VectorXd pi_part = bt.segment(s.M->primal_offset(), s.M->n_primal());
      const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Mc);
      pi_part -= cod.solve(Mc * pi_part);
      bt.segment(s.M->primal_offset(), s.M->n_primal()) = pi_part;
      const Eigen::VectorXd flux_check = s.M->apply_tilde(bt).tail(s.part.N);
      if (flux_check.cwiseAbs().maxCoeff() > 1e-9)
        return std::string("failed to construct a benign test vector");
      const Eigen::VectorXd zb = s.M->gather_scaled(bt);
      const Eigen::VectorXd flux_hat = s.op->apply(zb).tail(s.part.N);
      if (flux_hat.cwiseAbs().maxCoeff() > 1e-9)
        return "benign subspace not preserved, flux " +
               std::to_string(flux_hat.cwiseAbs().maxCoeff());

      // S~^{-1} S~ x = x modulo the constant-p0 kernel
      Eigen::VectorXd xt = bt;
      Eigen::VectorXd back = s.M->solve_tilde(s.M->apply_tilde(xt));
      back.tail(s.part.N).array() -= back.tail(s.part.N).mean();
      xt.tail(s.part.N).array() -= xt.tail(s.part.N).mean();
      const double inv_err =
          (back - xt).cwiseAbs().maxCoeff() / (1.0 + xt.cwiseAbs().maxCoeff());
      if (inv_err > 1e-9) return "S~ inverse identity error " + std::to_string(inv_err);

      // eigenvalue-1 family: vectors (0, p0)
      Eigen::VectorXd pv = Eigen::VectorXd::Zero(dim);
      Eigen::VectorXd p0 = test_vector(s.part.N, 11);
      p0.array() -= p0.mean();
      pv.tail(s.part.N) = p0;
      const Eigen::VectorXd ms = s.M->apply(s.op->apply(pv));
      if ((ms - pv).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + pv.cwiseAbs().maxCoeff()))
        return "M^-1 S (0,p0) != (0,p0), err " +
               std::to_string((ms - pv).cwiseAbs().maxCoeff());

      // preconditioner symmetry
      const Eigen::VectorXd r1 = test_vector(dim, 12), r2 = test_vector(dim, 13);
      const double s12 = r1.dot(s.M->apply(r2)), s21 = r2.dot(s.M->apply(r1));
      if (std::abs(s12 - s21) > 1e-12 * (std::abs(s12) + 1.0))
        return std::string("preconditioner not symmetric");
      return std::string{};
    });
  }

  check("assumption1-fails-vertices-only", [&] {
    DdSetup s = make_dd(q16, 4, PrimalKind::VerticesOnly);
    return expect(s.M->assumption1_residual() > 1e-8,
                  "vertices-only unexpectedly satisfies assumption 1");
  });

  check("basis-consistency-dense-oracle", [&] {
    // the transformed operator path must reproduce a dense PCG bitwise in
    // exact arithmetic; require 1e-9 agreement of residual histories
    DdSetup s = make_dd(q8, 2, PrimalKind::VerticesPlusFullAvg);
    const int dim = s.op->dim();
    const Eigen::MatrixXd Sd =
        densify([&](const Eigen::VectorXd& x) { return s.op->apply(x); }, dim);
    const Eigen::MatrixXd Md =
        densify([&](const Eigen::VectorXd& r) { return s.M->apply(r); }, dim);
    const Eigen::VectorXd g = s.op->rhs();

    SolverConfig cfg;
    cfg.tol = 1e-10;
    const auto lib = pcg([&](const Eigen::VectorXd& x) { return s.op->apply(x); },
                         [&](const Eigen::VectorXd& r) { return s.M->apply(r); }, g, cfg);
    const auto dense = pcg([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(Sd * x); },
                           [&](const Eigen::VectorXd& r) { return Eigen::VectorXd(Md * r); }, g,
                           cfg);
    if (lib.report.iterations != dense.report.iterations)
      return "iteration counts differ: " + std::to_string(lib.report.iterations) + " vs " +
             std::to_string(dense.report.iterations);
    double dmax = 0.0;
    for (std::size_t i = 0; i < lib.report.residuals.size(); ++i)
      dmax = std::max(dmax, std::abs(lib.report.residuals[i] - dense.report.residuals[i]));
    return expect(dmax <= 1e-9, "residual history deviation " + std::to_string(dmax));
  });

  check("lanczos-min-eigenvalue", [&] {
    SolverConfig cfg;
    cfg.tol = 1e-10;
    const ResultRow row = run_case(q16, 2, "pcg", PrimalKind::VerticesPlusNormalAvg, cfg);
    return expect(row.lambda_min >= 0.9999 && row.lambda_min <= 1.0001,
                  "lambda_min " + std::to_string(row.lambda_min));
  });

  if (level != "tables") return report;

  // ---- tables tier: QUAD reproduction against the bundled reference ----
  for (const int id : {3, 4}) {
    check("table-" + std::to_string(id) + "a-bands", [&, id] {
      SolverConfig cfg;  // paper setting: 1e-6 relative residual
      std::vector<ResultRow> rows = run_table(id, MeshFamily::Quad, 1, cfg, progress);
      std::ostringstream diff;
      bool ok = true;
      for (const auto& ref : reference_table(id)) {
        const ResultRow* match = nullptr;
        for (const auto& r : rows)
          if (r.inv_H == ref.inv_H && r.inv_h == ref.inv_h) match = &r;
        if (!match) {
          ok = false;
          diff << " missing(" << ref.inv_H << "," << ref.inv_h << ")";
          continue;
        }
        const bool it_ok = std::abs(match->iterations - ref.iterations) <= 4;
        const bool k_ok = std::isnan(ref.kappa2) ||
                          (match->kappa2 >= 0.7 * ref.kappa2 && match->kappa2 <= 1.3 * ref.kappa2);
        if (!it_ok || !k_ok) {
          ok = false;
          diff << " (" << ref.inv_H << "," << ref.inv_h << "): it " << match->iterations << "/"
               << ref.iterations << " k2 " << match->kappa2 << "/" << ref.kappa2;
        }
      }
      return expect(ok, "outside bands:" + diff.str());
    });
  }

  return report;
}

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<SvgSeries>& series, bool logx) {
  const int W = 640, H = 480, ml = 60, mr = 20, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double xv = logx ? std::log2(s.x[i]) : s.x[i];
      xmin = std::min(xmin, xv);
      xmax = std::max(xmax, xv);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  ymin = std::min(0.0, ymin);
  const auto px = [&](double x) {
    const double xv = logx ? std::log2(x) : x;
    return ml + (xv - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  const auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
     << "</text>\n";
  os << "<text x='" << W / 2 << "' y='" << H - 12 << "' text-anchor='middle' font-size='12'>"
     << xlabel << "</text>\n";
  os << "<text x='16' y='" << H / 2 << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 "
     << H / 2 << ")'>" << ylabel << "</text>\n";
  os << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
     << "' stroke='black'/>\n";
  os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
     << "' stroke='black'/>\n";
  int si = 0;
  for (const auto& s : series) {
    const char* col = colors[si % 5];
    os << "<polyline fill='none' stroke='" << col << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    os << "'/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << "<circle cx='" << px(s.x[i]) << "' cy='" << py(s.y[i]) << "' r='3' fill='" << col
         << "'/>\n";
    os << "<text x='" << W - mr - 150 << "' y='" << mt + 16 * si << "' font-size='12' fill='"
       << col << "'>" << s.label << "</text>\n";
    ++si;
  }
  // y axis ticks
  for (int t = 0; t <= 4; ++t) {
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    os << "<text x='" << ml - 6 << "' y='" << py(yv) + 4
       << "' text-anchor='end' font-size='10'>" << std::setprecision(3) << yv << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace vstokes::harness
