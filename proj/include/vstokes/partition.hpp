#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "vstokes/vem.hpp"

namespace vstokes {

struct PartitionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CarrierClass : uint8_t { Dirichlet, Interior, InterfaceEdge, InterfaceVertex };

// Interface polyline shared by exactly the subdomain pair (si, sj), si < sj.
// The stored normal convention points outward from si; swapping the pair
// flips it. dofs lists both velocity components per carrier, carriers ordered
// along the polyline.
struct SubdomainEdge {
  int si = -1, sj = -1;
  std::vector<int> carriers;
  std::vector<int> dofs;       // global velocity dof ids, (x,y) per carrier
  std::vector<int> mesh_edges; // mesh edges forming the polyline
};

struct SubdomainPartition {
  int inv_H = 0;
  int N = 0;
  std::vector<int> cell_subdomain;

  std::vector<CarrierClass> carrier_class;
  std::vector<std::vector<int>> carrier_subdomains;  // sorted subdomain set per carrier

  std::vector<std::vector<int>> cells_of;        // per subdomain, ascending
  std::vector<std::vector<int>> interior_dofs;   // per subdomain, ascending global dof ids
  std::vector<std::vector<int>> local_interface; // per subdomain, ascending global dof ids
  std::vector<int> interface_dofs;               // the Gamma set, ascending
  std::vector<int> vertex_carriers;              // subdomain-vertex carriers (incl. promoted)
  std::vector<SubdomainEdge> edges;

  int multiplicity(int carrier) const {
    return static_cast<int>(carrier_subdomains[carrier].size());
  }
};

// Assign each cell to the inv_H x inv_H macro block containing its centroid
// (exact ties broken toward the lower block), validate that every subdomain
// is nonempty and edge-connected, and classify the interface.
SubdomainPartition partition_regular(const PolygonalMesh& mesh, const DofMap& dofs, int inv_H);

// Interface classification: fills carrier classes, interface/vertex sets and
// the Gamma_ij edge lists of an assigned partition. Called by
// partition_regular; exposed for direct testing.
void classify_interface(const PolygonalMesh& mesh, const DofMap& dofs, SubdomainPartition& part);

// Unassembled subdomain blocks of the saddle system. Interior pressures are
// expressed in the per-subdomain zero-mean basis; the subdomain constant is
// the B_0 row. The q0-against-interior coupling vanishes by the divergence
// theorem and is verified, then dropped.
struct SubdomainBlocks {
  std::vector<int> cells;
  std::vector<int> interior_dofs;   // ascending global dof ids
  std::vector<int> interface_dofs;  // ascending global dof ids
  SpMat A_II, A_GI, A_GG;           // A_GI is (n_iface x n_interior)
  SpMat B_II, B_IG;                 // (n_cells-1) zero-mean pressure rows
  Eigen::RowVectorXd B_0G;
  Eigen::VectorXd f_I, f_G;
  double area = 0.0;
  std::vector<double> cell_areas;
  double b0i_drop = 0.0;  // max |q0 row| entry over interior columns before dropping
};

std::vector<SubdomainBlocks> subdomain_local_systems(const PolygonalMesh& mesh, const DofMap& dofs,
                                                     const std::vector<LocalElementMatrices>& elems,
                                                     const SubdomainPartition& part);

// Debug dumps (External Interfaces): `cell subdomain` pairs and
// `dof class multiplicity` lines.
std::string partition_dump(const SubdomainPartition& part);
std::string interface_dump(const DofMap& dofs, const SubdomainPartition& part);

}  // namespace vstokes
