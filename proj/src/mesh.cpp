#include "vstokes/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "vstokes/voronoi.hpp"

namespace vstokes {

std::string family_name(MeshFamily f) {
  switch (f) {
    case MeshFamily::Quad: return "QUAD";
    case MeshFamily::Hexa: return "HEXA";
    case MeshFamily::Tri: return "TRI";
    case MeshFamily::Cvt: return "CVT";
  }
  return "?";
}

MeshFamily family_from_name(const std::string& s) {
  if (s == "QUAD") return MeshFamily::Quad;
  if (s == "HEXA") return MeshFamily::Hexa;
  if (s == "TRI") return MeshFamily::Tri;
  if (s == "CVT") return MeshFamily::Cvt;
  throw MeshError("unknown mesh family: " + s);
}

std::vector<Point2> PolygonalMesh::cell_polygon(int c) const {
  std::vector<Point2> poly;
  poly.reserve(cells[c].size());
  for (int v : cells[c]) poly.push_back(vertices[v]);
  return poly;
}

void PolygonalMesh::build() {
  const int nv = n_vertices();
  const int nc = n_cells();
  if (boundary_vertex.size() != static_cast<std::size_t>(nv))
    throw MeshError("boundary flag count does not match vertex count");

  edges.clear();
  cell_edges.assign(nc, {});
  vertex_cells.assign(nv, {});
  std::map<std::pair<int, int>, int> edge_ids;

  h = 0.0;
  for (int c = 0; c < nc; ++c) {
    const auto& cell = cells[c];
    if (cell.size() < 3) throw MeshError("cell " + std::to_string(c) + " has fewer than 3 vertices");
    for (int v : cell) {
      if (v < 0 || v >= nv)
        throw MeshError("cell " + std::to_string(c) + " references missing vertex " +
                        std::to_string(v));
      vertex_cells[v].push_back(c);
    }
    {
      std::vector<int> sorted = cell;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw MeshError("cell " + std::to_string(c) + " repeats a vertex");
    }
    const auto poly = cell_polygon(c);
    const double area = polygon_signed_area(poly);
    if (area <= 0.0)
      throw MeshError("cell " + std::to_string(c) + " is not counterclockwise or has zero area");
    h = std::max(h, polygon_diameter(poly));

    cell_edges[c].resize(cell.size());
    for (std::size_t i = 0; i < cell.size(); ++i) {
      const int a = cell[i];
      const int b = cell[(i + 1) % cell.size()];
      const auto key = std::minmax(a, b);
      auto it = edge_ids.find(key);
      if (it == edge_ids.end()) {
        const int id = static_cast<int>(edges.size());
        edges.push_back({key.first, key.second, c, -1});
        edge_ids.emplace(key, id);
        cell_edges[c][i] = id;
      } else {
        MeshEdge& e = edges[it->second];
        if (e.cell_b != -1)
          throw MeshError("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                          ") is shared by more than two cells");
        e.cell_b = c;
        cell_edges[c][i] = it->second;
      }
    }
  }

  boundary_edge.assign(edges.size(), 0);
  std::vector<uint8_t> derived_bv(nv, 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].cell_b == -1) {
      boundary_edge[e] = 1;
      derived_bv[edges[e].v0] = 1;
      derived_bv[edges[e].v1] = 1;
    }
  }
  for (int v = 0; v < nv; ++v) {
    if (derived_bv[v] != boundary_vertex[v])
      throw MeshError("vertex " + std::to_string(v) +
                      " boundary flag is inconsistent with edge structure");
    if (vertex_cells[v].empty())
      throw MeshError("vertex " + std::to_string(v) + " is not referenced by any cell");
  }
}

CellGeometry cell_geometry(const PolygonalMesh& mesh, int cell) {
  if (cell < 0 || cell >= mesh.n_cells()) throw MeshError("cell_geometry: cell index out of range");
  const auto poly = mesh.cell_polygon(cell);
  return {polygon_signed_area(poly), polygon_centroid(poly), polygon_diameter(poly)};
}

MeshQualityReport mesh_quality(const PolygonalMesh& mesh) {
  MeshQualityReport q;
  q.min_edge_ratio = std::numeric_limits<double>::infinity();
  double hmin = std::numeric_limits<double>::infinity(), hmax = 0.0;
  q.star_shaped.resize(mesh.n_cells());
  q.all_star_shaped = true;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto poly = mesh.cell_polygon(c);
    const double diam = polygon_diameter(poly);
    hmin = std::min(hmin, diam);
    hmax = std::max(hmax, diam);
    double emin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i)
      emin = std::min(emin, distance(poly[i], poly[(i + 1) % poly.size()]));
    q.min_edge_ratio = std::min(q.min_edge_ratio, emin / diam);
    q.star_shaped[c] = polygon_kernel_nonempty(poly) ? 1 : 0;
    if (!q.star_shaped[c]) q.all_star_shaped = false;
  }
  q.uniformity_ratio = hmax / hmin;
  return q;
}

namespace {

PolygonalMesh make_quad(int n) {
  PolygonalMesh m;
  m.family = MeshFamily::Quad;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      m.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
      m.boundary_vertex.push_back(i == 0 || i == n || j == 0 || j == n);
    }
  const auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      m.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
  return m;
}

PolygonalMesh make_tri(int n) {
  PolygonalMesh m = make_quad(n);
  m.family = MeshFamily::Tri;
  m.cells.clear();
  const auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      m.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      m.cells.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  return m;
}

// Weld vertices of a polygon soup on a spatial hash; returns a mesh with
// shared vertices and boundary flags set from the exact 0/1 coordinates the
// square clipping produces.
PolygonalMesh mesh_from_cells(const std::vector<std::vector<Point2>>& cell_polys,
                              MeshFamily family) {
  PolygonalMesh m;
  m.family = family;
  const double tol = 1e-9;
  const double grid = 4.0 * tol;
  std::unordered_map<std::int64_t, std::vector<int>> buckets;
  const auto key_of = [&](double x, double y) {
    const auto ix = static_cast<std::int64_t>(std::floor(x / grid));
    const auto iy = static_cast<std::int64_t>(std::floor(y / grid));
    return ix * 0x100000000LL + iy;
  };
  const auto weld = [&](const Point2& p) {
    const auto ix = static_cast<std::int64_t>(std::floor(p.x / grid));
    const auto iy = static_cast<std::int64_t>(std::floor(p.y / grid));
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = buckets.find((ix + dx) * 0x100000000LL + (iy + dy));
        if (it == buckets.end()) continue;
        for (int v : it->second)
          if (distance(m.vertices[v], p) <= tol) return v;
      }
    const int id = static_cast<int>(m.vertices.size());
    m.vertices.push_back(p);
    buckets[key_of(p.x, p.y)].push_back(id);
    return id;
  };

  for (const auto& poly : cell_polys) {
    const auto ring = dedup_ring(poly, tol);
    if (ring.size() < 3) continue;
    if (polygon_signed_area(ring) <= tol * tol) continue;
    std::vector<int> cell;
    cell.reserve(ring.size());
    for (const Point2& p : ring) cell.push_back(weld(p));
    std::vector<int> sorted = cell;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      continue;  // fully collapsed sliver
    m.cells.push_back(std::move(cell));
  }

  // Drop vertices orphaned by discarded slivers and renumber.
  std::vector<int> remap(m.vertices.size(), -1);
  for (const auto& cell : m.cells)
    for (int v : cell) remap[v] = 0;
  std::vector<Point2> kept;
  kept.reserve(m.vertices.size());
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    if (remap[v] == 0) {
      remap[v] = static_cast<int>(kept.size());
      kept.push_back(m.vertices[v]);
    }
  }
  for (auto& cell : m.cells)
    for (int& v : cell) v = remap[v];
  m.vertices = std::move(kept);

  m.boundary_vertex.resize(m.vertices.size());
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    const Point2& p = m.vertices[v];
    m.boundary_vertex[v] =
        (p.x <= tol || p.x >= 1.0 - tol || p.y <= tol || p.y >= 1.0 - tol) ? 1 : 0;
  }
  return m;
}

PolygonalMesh make_from_seeds(const std::vector<Point2>& seeds, MeshFamily family) {
  const auto cells = clipped_voronoi(seeds);
  return mesh_from_cells(cells, family);
}

}  // namespace

PolygonalMesh generate_mesh(MeshFamily family, int n, std::uint64_t seed, int lloyd_iters) {
  if (n < 2) throw MeshError("generate_mesh: n must be >= 2");
  if (lloyd_iters < 0) throw MeshError("generate_mesh: lloyd_iters must be >= 0");
  PolygonalMesh m;
  switch (family) {
    case MeshFamily::Quad: m = make_quad(n); break;
    case MeshFamily::Tri: m = make_tri(n); break;
    case MeshFamily::Hexa: m = make_from_seeds(hex_lattice_seeds(n), MeshFamily::Hexa); break;
    case MeshFamily::Cvt:
      m = make_from_seeds(cvt_seeds(n, seed, lloyd_iters), MeshFamily::Cvt);
      break;
  }
  m.build();
  return m;
}

void write_mesh(const PolygonalMesh& mesh, std::ostream& os) {
  os << "polymesh v1 " << family_name(mesh.family) << ' ' << mesh.n_vertices() << ' '
     << mesh.n_cells() << '\n';
  char buf[64];
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %d", mesh.vertices[v].x, mesh.vertices[v].y,
                  static_cast<int>(mesh.boundary_vertex[v]));
    os << buf << '\n';
  }
  for (int c = 0; c < mesh.n_cells(); ++c) {
    os << mesh.cells[c].size();
    for (int v : mesh.cells[c]) os << ' ' << v;
    os << '\n';
  }
}

void write_mesh_file(const PolygonalMesh& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw MeshError("cannot open for writing: " + path);
  write_mesh(mesh, os);
}

std::string mesh_to_string(const PolygonalMesh& mesh) {
  std::ostringstream os;
  write_mesh(mesh, os);
  return os.str();
}

PolygonalMesh read_mesh(std::istream& is) {
  PolygonalMesh m;
  std::string line;
  int lineno = 0;
  const auto next_line = [&]() {
    if (!std::getline(is, line)) throw MeshError("unexpected end of mesh file at line " +
                                                 std::to_string(lineno + 1));
    ++lineno;
  };

  next_line();
  std::istringstream head(line);
  std::string magic, version, fam;
  int nv = 0, nc = 0;
  if (!(head >> magic >> version >> fam >> nv >> nc) || magic != "polymesh" || version != "v1")
    throw MeshError("malformed mesh header at line 1");
  if (nv < 3 || nc < 1) throw MeshError("mesh header declares too few vertices or cells");
  m.family = family_from_name(fam);

  m.vertices.resize(nv);
  m.boundary_vertex.resize(nv);
  for (int v = 0; v < nv; ++v) {
    next_line();
    std::istringstream ls(line);
    int flag;
    if (!(ls >> m.vertices[v].x >> m.vertices[v].y >> flag) || (flag != 0 && flag != 1))
      throw MeshError("malformed vertex record at line " + std::to_string(lineno));
    if (!std::isfinite(m.vertices[v].x) || !std::isfinite(m.vertices[v].y))
      throw MeshError("non-finite vertex coordinate at line " + std::to_string(lineno));
    m.boundary_vertex[v] = static_cast<uint8_t>(flag);
  }
  m.cells.resize(nc);
  for (int c = 0; c < nc; ++c) {
    next_line();
    std::istringstream ls(line);
    int k;
    if (!(ls >> k) || k < 3) throw MeshError("malformed cell record at line " + std::to_string(lineno));
    m.cells[c].resize(k);
    for (int i = 0; i < k; ++i)
      if (!(ls >> m.cells[c][i]))
        throw MeshError("malformed cell record at line " + std::to_string(lineno));
  }
  m.build();  // connectivity and orientation validation
  return m;
}

PolygonalMesh read_mesh_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MeshError("cannot open mesh file: " + path);
  return read_mesh(is);
}

std::uint64_t mesh_fingerprint(const PolygonalMesh& mesh) {
  const std::string s = mesh_to_string(mesh);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace vstokes
