#include "vstokes/vem.hpp"

#include <Eigen/SparseLU>
#include <array>
#include <cmath>

#include "vstokes/quadrature.hpp"

namespace vstokes {

DofMap build_dof_map(const PolygonalMesh& mesh) {
  DofMap d;
  d.n_vertices = mesh.n_vertices();
  d.n_edges = mesh.n_edges();
  d.n_cells = mesh.n_cells();
  d.n_carriers = d.n_vertices + d.n_edges;
  d.n_u = 2 * d.n_carriers;
  d.n_p = d.n_cells;

  d.carrier_pos.resize(d.n_carriers);
  d.carrier_on_boundary.resize(d.n_carriers);
  for (int v = 0; v < d.n_vertices; ++v) {
    d.carrier_pos[v] = mesh.vertices[v];
    d.carrier_on_boundary[v] = mesh.boundary_vertex[v];
  }
  for (int e = 0; e < d.n_edges; ++e) {
    const MeshEdge& me = mesh.edges[e];
    d.carrier_pos[d.n_vertices + e] = (mesh.vertices[me.v0] + mesh.vertices[me.v1]) * 0.5;
    d.carrier_on_boundary[d.n_vertices + e] = mesh.boundary_edge[e];
  }

  d.dirichlet.resize(d.n_u);
  d.free_index.assign(d.n_u, -1);
  for (int comp = 0; comp < 2; ++comp)
    for (int c = 0; c < d.n_carriers; ++c)
      d.dirichlet[d.dof(comp, c)] = d.carrier_on_boundary[c];
  for (int i = 0; i < d.n_u; ++i) {
    if (!d.dirichlet[i]) {
      d.free_index[i] = static_cast<int>(d.free_dofs.size());
      d.free_dofs.push_back(i);
    }
  }
  d.n_free = static_cast<int>(d.free_dofs.size());
  return d;
}

namespace {

constexpr int kNumMono = 6;   // scalar monomials of degree <= 2
constexpr int kNumPoly = 12;  // vector [P2]^2 basis, x-block then y-block

// exponents of the graded monomial layout
constexpr std::array<std::array<int, 2>, kNumMono> kExp = {
    {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}};

double mono_value(int j, const Point2& p, const Point2& xc, double h) {
  const double s = (p.x - xc.x) / h;
  const double t = (p.y - xc.y) / h;
  return std::pow(s, kExp[j][0]) * std::pow(t, kExp[j][1]);
}

Point2 mono_grad(int j, const Point2& p, const Point2& xc, double h) {
  const double s = (p.x - xc.x) / h;
  const double t = (p.y - xc.y) / h;
  const int a = kExp[j][0], b = kExp[j][1];
  Point2 g{0.0, 0.0};
  if (a > 0) g.x = a * std::pow(s, a - 1) * std::pow(t, b) / h;
  if (b > 0) g.y = b * std::pow(s, a) * std::pow(t, b - 1) / h;
  return g;
}

double mono_laplacian(int j, double h) {
  const int a = kExp[j][0], b = kExp[j][1];
  double v = 0.0;
  if (a >= 2) v += a * (a - 1) / (h * h);
  if (b >= 2) v += b * (b - 1) / (h * h);
  return v;
}

struct BoundaryNode {
  int carrier;   // local carrier index: [0,m) vertices, [m,2m) edges
  Point2 pos;
  double w;      // quadrature weight including the edge measure
  Point2 normal; // outward normal of the edge the node sits on
};

}  // namespace

LocalElementMatrices local_matrices(const PolygonalMesh& mesh, const DofMap& dofs, int cell,
                                    double nu_cell, const VectorField& load) {
  if (nu_cell <= 0.0) throw VemError("local_matrices: viscosity must be positive");
  const auto& cyc = mesh.cells[cell];
  const int m = static_cast<int>(cyc.size());
  const int nloc = 4 * m;  // 2 components x (m vertices + m edges)
  const auto poly = mesh.cell_polygon(cell);
  const double area = polygon_signed_area(poly);
  const Point2 xc = polygon_centroid(poly);
  const double hk = polygon_diameter(poly);

  LocalElementMatrices out;
  out.xc = xc;
  out.hk = hk;
  out.area = area;

  // local -> global dof map, component-major to match the global layout
  out.dofs.resize(nloc);
  for (int comp = 0; comp < 2; ++comp) {
    for (int i = 0; i < m; ++i) {
      out.dofs[comp * 2 * m + i] = dofs.dof(comp, dofs.vertex_carrier(cyc[i]));
      out.dofs[comp * 2 * m + m + i] =
          dofs.dof(comp, dofs.edge_carrier(mesh.cell_edges[cell][i]));
    }
  }
  const auto ldof = [m](int comp, int carrier) { return comp * 2 * m + carrier; };

  // 3-point Gauss-Lobatto nodes per edge: endpoints and the midpoint carrier.
  std::vector<BoundaryNode> nodes;
  nodes.reserve(3 * m);
  double perimeter = 0.0;
  for (int i = 0; i < m; ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % m];
    const Point2 d = b - a;
    const double len = d.norm();
    perimeter += len;
    const Point2 n{d.y / len, -d.x / len};
    const Point2 mid = (a + b) * 0.5;
    nodes.push_back({i, a, len / 6.0, n});
    nodes.push_back({m + i, mid, 2.0 * len / 3.0, n});
    nodes.push_back({(i + 1) % m, b, len / 6.0, n});
  }

  const auto mom = polygon_monomial_moments(poly, xc, hk, 2);

  // exact [P2]^2 stiffness from moments (viscosity-free)
  Eigen::MatrixXd Gc = Eigen::MatrixXd::Zero(kNumPoly, kNumPoly);
  for (int i = 0; i < kNumMono; ++i) {
    for (int j = 0; j < kNumMono; ++j) {
      const int ai = kExp[i][0], bi = kExp[i][1];
      const int aj = kExp[j][0], bj = kExp[j][1];
      double v = 0.0;
      if (ai > 0 && aj > 0) v += ai * aj * mom[monomial_index(ai + aj - 2, bi + bj)];
      if (bi > 0 && bj > 0) v += bi * bj * mom[monomial_index(ai + aj, bi + bj - 2)];
      v /= hk * hk;
      Gc(i, j) = v;
      Gc(kNumMono + i, kNumMono + j) = v;
    }
  }

  // dof evaluation of the polynomial basis
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nloc, kNumPoly);
  for (int comp = 0; comp < 2; ++comp) {
    for (int c = 0; c < 2 * m; ++c) {
      const Point2 pos = (c < m) ? poly[c] : (poly[c - m] + poly[(c - m + 1) % m]) * 0.5;
      for (int j = 0; j < kNumMono; ++j)
        D(ldof(comp, c), comp * kNumMono + j) = mono_value(j, pos, xc, hk);
    }
  }

  // divergence row: flux of each dof field through the cell boundary
  Eigen::RowVectorXd Brow = Eigen::RowVectorXd::Zero(nloc);
  for (const auto& nd : nodes) {
    Brow(ldof(0, nd.carrier)) += nd.w * nd.normal.x;
    Brow(ldof(1, nd.carrier)) += nd.w * nd.normal.y;
  }

  // projector right-hand side: a(P_beta, phi) via integration by parts; the
  // interior term uses that the divergence of space functions is constant and
  // that the linear antiderivative is centered at the centroid, so its cell
  // integral vanishes.
  Eigen::MatrixXd Bt = Eigen::MatrixXd::Zero(kNumPoly, nloc);
  for (const auto& nd : nodes) {
    for (int j = 0; j < kNumMono; ++j) {
      const Point2 g = mono_grad(j, nd.pos, xc, hk);
      const double gn = g.dot(nd.normal);
      Bt(j, ldof(0, nd.carrier)) += nd.w * gn;
      Bt(kNumMono + j, ldof(1, nd.carrier)) += nd.w * gn;
      const double lap = mono_laplacian(j, hk);
      if (lap != 0.0) {
        // c = lap * e_comp, q = c . (x - xc); flux term of the interior part
        const double q = lap * ((nd.pos.x - xc.x));
        const double qy = lap * ((nd.pos.y - xc.y));
        Bt(j, ldof(0, nd.carrier)) -= nd.w * nd.normal.x * q;
        Bt(j, ldof(1, nd.carrier)) -= nd.w * nd.normal.y * q;
        Bt(kNumMono + j, ldof(0, nd.carrier)) -= nd.w * nd.normal.x * qy;
        Bt(kNumMono + j, ldof(1, nd.carrier)) -= nd.w * nd.normal.y * qy;
      }
    }
  }

  // constant fields carry no energy: pin them with the boundary mean
  Eigen::MatrixXd G = Gc;
  for (int blk = 0; blk < 2; ++blk) {
    const int row = blk * kNumMono;
    G.row(row).setZero();
    Bt.row(row).setZero();
    for (const auto& nd : nodes) {
      for (int j = 0; j < kNumMono; ++j)
        G(row, blk * kNumMono + j) += nd.w * mono_value(j, nd.pos, xc, hk) / perimeter;
      Bt(row, ldof(blk, nd.carrier)) += nd.w / perimeter;
    }
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
  if (!lu.isInvertible())
    throw VemError("local_matrices: singular projector system on cell " + std::to_string(cell) +
                   " (degenerate geometry)");
  const Eigen::MatrixXd proj = lu.solve(Bt);

  const Eigen::MatrixXd consistency = proj.transpose() * Gc * proj;
  const double tau = consistency.trace() / nloc;
  const Eigen::MatrixXd stab =
      (Eigen::MatrixXd::Identity(nloc, nloc) - D * proj).transpose() *
      (Eigen::MatrixXd::Identity(nloc, nloc) - D * proj);
  const Eigen::MatrixXd a_raw = nu_cell * (consistency + tau * stab);
  out.A = 0.5 * (a_raw + a_raw.transpose());  // exact symmetry for the assembly
  out.B = Brow;
  out.proj = proj;

  // load against the P0 projection: fbar . integral of phi over K
  Point2 fbar{0.0, 0.0};
  const auto& tri = triangle_rule(4);
  for (int i = 0; i < m; ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % m];
    const double ta = 0.5 * std::abs((a - xc).cross(b - xc));
    for (const auto& q : tri) {
      const Point2 pt{q.l0 * xc.x + q.l1 * a.x + q.l2 * b.x,
                      q.l0 * xc.y + q.l1 * a.y + q.l2 * b.y};
      const Point2 fv = load(pt);
      fbar.x += q.w * ta * fv.x;
      fbar.y += q.w * ta * fv.y;
    }
  }
  fbar.x /= area;
  fbar.y /= area;

  out.f = Eigen::VectorXd::Zero(nloc);
  for (const auto& nd : nodes) {
    // integral of the dof field against the constant fbar through the boundary
    // flux identity; the linear antiderivative is centered so the interior
    // term drops out
    const double q = fbar.x * (nd.pos.x - xc.x) + fbar.y * (nd.pos.y - xc.y);
    out.f(ldof(0, nd.carrier)) += nd.w * nd.normal.x * q;
    out.f(ldof(1, nd.carrier)) += nd.w * nd.normal.y * q;
  }
  return out;
}

std::vector<LocalElementMatrices> compute_element_matrices(const PolygonalMesh& mesh,
                                                           const DofMap& dofs,
                                                           const Eigen::VectorXd& nu,
                                                           const VectorField& load) {
  std::vector<LocalElementMatrices> elems;
  elems.reserve(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c)
    elems.push_back(local_matrices(mesh, dofs, c, nu(c), load));
  return elems;
}

GlobalSystem assemble(const PolygonalMesh& mesh, const std::vector<LocalElementMatrices>& elems,
                      const DofMap& dofs, const Eigen::VectorXd& nu) {
  GlobalSystem sys;
  sys.dofs = dofs;
  sys.nu = nu;
  sys.cell_areas.resize(mesh.n_cells());

  std::vector<Eigen::Triplet<double>> ta, tb;
  sys.f = Eigen::VectorXd::Zero(dofs.n_free);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& el = elems[c];
    sys.cell_areas(c) = el.area;
    const int n = static_cast<int>(el.dofs.size());
    for (int i = 0; i < n; ++i) {
      const int gi = dofs.free_index[el.dofs[i]];
      if (gi < 0) continue;
      sys.f(gi) += el.f(i);
      if (el.B(i) != 0.0) tb.emplace_back(c, gi, el.B(i));
      for (int j = 0; j < n; ++j) {
        const int gj = dofs.free_index[el.dofs[j]];
        if (gj < 0) continue;
        if (el.A(i, j) != 0.0) ta.emplace_back(gi, gj, el.A(i, j));
      }
    }
  }
  sys.A.resize(dofs.n_free, dofs.n_free);
  sys.A.setFromTriplets(ta.begin(), ta.end());
  sys.B.resize(dofs.n_p, dofs.n_free);
  sys.B.setFromTriplets(tb.begin(), tb.end());
  return sys;
}

GlobalSystem assemble(const PolygonalMesh& mesh, double nu, const VectorField& load,
                      std::vector<LocalElementMatrices>* elems_out) {
  const DofMap dofs = build_dof_map(mesh);
  const Eigen::VectorXd nuv = Eigen::VectorXd::Constant(mesh.n_cells(), nu);
  auto elems = compute_element_matrices(mesh, dofs, nuv, load);
  GlobalSystem sys = assemble(mesh, elems, dofs, nuv);
  if (elems_out) *elems_out = std::move(elems);
  return sys;
}

MonolithicSolution solve_monolithic_direct(const GlobalSystem& sys) {
  const int nu_ = sys.A.rows();
  const int np = sys.B.rows();
  const int n = nu_ + np + 1;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(sys.A.nonZeros() + 2 * sys.B.nonZeros() + 2 * np);
  for (int k = 0; k < sys.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.A, k); it; ++it)
      t.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < sys.B.outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.B, k); it; ++it) {
      t.emplace_back(nu_ + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), nu_ + it.row(), it.value());
    }
  for (int c = 0; c < np; ++c) {
    t.emplace_back(nu_ + c, nu_ + np, sys.cell_areas(c));
    t.emplace_back(nu_ + np, nu_ + c, sys.cell_areas(c));
  }
  SpMat K(n, n);
  K.setFromTriplets(t.begin(), t.end());

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs.head(nu_) = sys.f;

  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(K);
  lu.factorize(K);
  if (lu.info() != Eigen::Success)
    throw VemError("solve_monolithic_direct: factorization failed (singular saddle system)");
  const Eigen::VectorXd x = lu.solve(rhs);

  MonolithicSolution sol;
  sol.u = x.head(nu_);
  sol.p = x.segment(nu_, np);
  const double rn = rhs.norm();
  sol.residual = (K * x - rhs).norm() / (rn > 0.0 ? rn : 1.0);
  if (sol.residual > 1e-10)
    throw VemError("solve_monolithic_direct: residual " + std::to_string(sol.residual) +
                   " exceeds 1e-10");
  return sol;
}

Eigen::VectorXd expand_velocity(const DofMap& dofs, const Eigen::VectorXd& u_free) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(dofs.n_u);
  for (int i = 0; i < dofs.n_free; ++i) full(dofs.free_dofs[i]) = u_free(i);
  return full;
}

double velocity_h1_error(const PolygonalMesh& mesh, const DofMap& dofs,
                         const std::vector<LocalElementMatrices>& elems,
                         const Eigen::VectorXd& u_free, const GradientField& grad_exact) {
  const Eigen::VectorXd u = expand_velocity(dofs, u_free);
  const auto& tri = triangle_rule(5);
  double err2 = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto& el = elems[c];
    const auto poly = mesh.cell_polygon(c);
    const int m = static_cast<int>(poly.size());
    Eigen::VectorXd uloc(el.dofs.size());
    for (std::size_t i = 0; i < el.dofs.size(); ++i) uloc(i) = u(el.dofs[i]);
    const Eigen::VectorXd coef = el.proj * uloc;  // 12 coefficients
    for (int i = 0; i < m; ++i) {
      const Point2& a = poly[i];
      const Point2& b = poly[(i + 1) % m];
      const double ta = 0.5 * std::abs((a - el.xc).cross(b - el.xc));
      for (const auto& q : tri) {
        const Point2 pt{q.l0 * el.xc.x + q.l1 * a.x + q.l2 * b.x,
                        q.l0 * el.xc.y + q.l1 * a.y + q.l2 * b.y};
        Eigen::Matrix2d gh = Eigen::Matrix2d::Zero();
        for (int j = 0; j < kNumMono; ++j) {
          const Point2 g = mono_grad(j, pt, el.xc, el.hk);
          gh(0, 0) += coef(j) * g.x;
          gh(0, 1) += coef(j) * g.y;
          gh(1, 0) += coef(kNumMono + j) * g.x;
          gh(1, 1) += coef(kNumMono + j) * g.y;
        }
        const Eigen::Matrix2d diff = grad_exact(pt) - gh;
        err2 += q.w * ta * diff.squaredNorm();
      }
    }
  }
  return std::sqrt(err2);
}

double pressure_l2_error(const PolygonalMesh& mesh, const Eigen::VectorXd& p,
                         const ScalarField& p_exact) {
  const auto& tri = triangle_rule(5);
  double err2 = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto poly = mesh.cell_polygon(c);
    const Point2 xc = polygon_centroid(poly);
    const int m = static_cast<int>(poly.size());
    for (int i = 0; i < m; ++i) {
      const Point2& a = poly[i];
      const Point2& b = poly[(i + 1) % m];
      const double ta = 0.5 * std::abs((a - xc).cross(b - xc));
      for (const auto& q : tri) {
        const Point2 pt{q.l0 * xc.x + q.l1 * a.x + q.l2 * b.x,
                        q.l0 * xc.y + q.l1 * a.y + q.l2 * b.y};
        const double d = p_exact(pt) - p(c);
        err2 += q.w * ta * d * d;
      }
    }
  }
  return std::sqrt(err2);
}

}  // namespace vstokes
