#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <vector>

#include "vstokes/mesh.hpp"

namespace vstokes {

using SpMat = Eigen::SparseMatrix<double>;
using VectorField = std::function<Point2(const Point2&)>;

// Velocity dofs for the order-2 divergence-free element: two components at
// every mesh vertex and at the single interior Gauss-Lobatto point (midpoint)
// of every edge. One pressure dof per cell. Component-major numbering:
// dof(comp, carrier) = comp * n_carriers + carrier, carriers listed vertices
// first, then edges.
struct DofMap {
  int n_vertices = 0, n_edges = 0, n_cells = 0;
  int n_carriers = 0;
  int n_u = 0, n_p = 0;
  std::vector<Point2> carrier_pos;
  std::vector<uint8_t> carrier_on_boundary;
  std::vector<uint8_t> dirichlet;  // per velocity dof
  std::vector<int> free_index;     // -1 for Dirichlet dofs
  std::vector<int> free_dofs;      // global ids of free dofs
  int n_free = 0;

  int dof(int comp, int carrier) const { return comp * n_carriers + carrier; }
  int vertex_carrier(int v) const { return v; }
  int edge_carrier(int e) const { return n_vertices + e; }
  int carrier_of(int dof_id) const { return dof_id % n_carriers; }
  int comp_of(int dof_id) const { return dof_id / n_carriers; }
};

DofMap build_dof_map(const PolygonalMesh& mesh);

struct LocalElementMatrices {
  std::vector<int> dofs;  // global velocity dof ids in local order
  Eigen::MatrixXd A;      // stiffness, n x n
  Eigen::RowVectorXd B;   // divergence row against the cell pressure, 1 x n
  Eigen::VectorXd f;      // load vector, n
  Eigen::MatrixXd proj;   // 12 x n energy projection onto [P2]^2, scaled monomials
  Point2 xc;              // monomial scaling center (cell centroid)
  double hk = 0.0;        // monomial scaling length (cell diameter)
  double area = 0.0;
};

struct VemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Element stiffness/divergence/load and the [P2]^2 energy projection for one
// cell. All integrals reduce to exact edge quadrature and polygon moments.
LocalElementMatrices local_matrices(const PolygonalMesh& mesh, const DofMap& dofs, int cell,
                                    double nu_cell, const VectorField& load);

std::vector<LocalElementMatrices> compute_element_matrices(const PolygonalMesh& mesh,
                                                           const DofMap& dofs,
                                                           const Eigen::VectorXd& nu,
                                                           const VectorField& load);

struct GlobalSystem {
  DofMap dofs;
  SpMat A;                    // n_free x n_free, Dirichlet rows/columns eliminated
  SpMat B;                    // n_p x n_free
  Eigen::VectorXd f;          // n_free
  Eigen::VectorXd cell_areas; // n_p, carries the zero-mean pressure constraint
  Eigen::VectorXd nu;         // per cell
};

GlobalSystem assemble(const PolygonalMesh& mesh, const std::vector<LocalElementMatrices>& elems,
                      const DofMap& dofs, const Eigen::VectorXd& nu);

// Convenience: dof map + element matrices + assembly with constant viscosity.
GlobalSystem assemble(const PolygonalMesh& mesh, double nu, const VectorField& load,
                      std::vector<LocalElementMatrices>* elems_out = nullptr);

struct MonolithicSolution {
  Eigen::VectorXd u;  // free velocity dofs
  Eigen::VectorXd p;  // cell pressures, zero area-weighted mean
  double residual;    // relative residual of the full saddle system
};

// Direct factorization of the full saddle-point system with the zero-mean
// pressure constraint enforced by one Lagrange multiplier row. Oracle for the
// interface solvers.
MonolithicSolution solve_monolithic_direct(const GlobalSystem& sys);

// Scatter a free-dof vector to the full velocity dof vector (zeros on the
// Dirichlet boundary).
Eigen::VectorXd expand_velocity(const DofMap& dofs, const Eigen::VectorXd& u_free);

using GradientField = std::function<Eigen::Matrix2d(const Point2&)>;  // rows: grad of each comp
using ScalarField = std::function<double(const Point2&)>;

// H1 seminorm of (u_exact - proj u_h), evaluated through the elementwise
// polynomial projection with a degree-5 rule on the centroid fan.
double velocity_h1_error(const PolygonalMesh& mesh, const DofMap& dofs,
                         const std::vector<LocalElementMatrices>& elems,
                         const Eigen::VectorXd& u_free, const GradientField& grad_exact);

double pressure_l2_error(const PolygonalMesh& mesh, const Eigen::VectorXd& p,
                         const ScalarField& p_exact);

}  // namespace vstokes
