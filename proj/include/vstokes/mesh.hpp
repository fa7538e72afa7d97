#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vstokes/geometry.hpp"

namespace vstokes {

enum class MeshFamily { Quad, Hexa, Tri, Cvt };

std::string family_name(MeshFamily f);
MeshFamily family_from_name(const std::string& s);

struct MeshEdge {
  int v0 = -1, v1 = -1;      // v0 < v1
  int cell_a = -1;           // always set
  int cell_b = -1;           // -1 on the boundary
};

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Polygonal tessellation of the unit square. Cells are simple CCW vertex
// cycles; edges and boundary flags are derived. Immutable after build().
struct PolygonalMesh {
  MeshFamily family = MeshFamily::Quad;
  std::vector<Point2> vertices;
  std::vector<std::vector<int>> cells;
  std::vector<uint8_t> boundary_vertex;

  // derived by build()
  std::vector<MeshEdge> edges;
  std::vector<std::vector<int>> cell_edges;  // cell_edges[c][i] is the edge (v_i, v_{i+1})
  std::vector<uint8_t> boundary_edge;
  std::vector<std::vector<int>> vertex_cells;  // incident cells per vertex
  double h = 0.0;                              // max cell diameter

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }

  std::vector<Point2> cell_polygon(int c) const;

  // Derives edges/flags and validates: CCW simple cells with positive area,
  // edge adjacency counts, index bounds, boundary flag consistency.
  // Throws MeshError with the offending entity on failure.
  void build();
};

struct CellGeometry {
  double area;
  Point2 centroid;
  double diameter;
};

CellGeometry cell_geometry(const PolygonalMesh& mesh, int cell);

struct MeshQualityReport {
  double min_edge_ratio;    // min over cells of shortest edge / diameter
  double uniformity_ratio;  // max h_K / min h_K
  std::vector<uint8_t> star_shaped;
  bool all_star_shaped;
};

MeshQualityReport mesh_quality(const PolygonalMesh& mesh);

// Deterministic generation of the four mesh families on the unit square.
// seed and lloyd_iters are used by the CVT family only.
PolygonalMesh generate_mesh(MeshFamily family, int n, std::uint64_t seed = 0,
                            int lloyd_iters = 100);

// Text serialization:
//   polymesh v1 <family> <nv> <nc>
//   nv lines: x y boundary_flag        (17 significant digits)
//   nc lines: k i1 ... ik              (CCW vertex indices)
void write_mesh(const PolygonalMesh& mesh, std::ostream& os);
void write_mesh_file(const PolygonalMesh& mesh, const std::string& path);
PolygonalMesh read_mesh(std::istream& is);
PolygonalMesh read_mesh_file(const std::string& path);
std::string mesh_to_string(const PolygonalMesh& mesh);

// FNV-1a hash of the serialized mesh; used as a replay fingerprint.
std::uint64_t mesh_fingerprint(const PolygonalMesh& mesh);

}  // namespace vstokes
