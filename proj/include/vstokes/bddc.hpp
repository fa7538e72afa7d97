#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "vstokes/schur.hpp"

namespace vstokes {

struct BddcError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PrimalKind { VerticesOnly, VerticesPlusNormalAvg, VerticesPlusFullAvg };

std::string primal_name(PrimalKind k);
PrimalKind primal_from_name(const std::string& s);  // "v", "v+n", "v+f"

// Primal continuity constraints: both velocity components at every subdomain
// vertex, optionally augmented per interface edge with the discrete flux
// average (normal) or with flux and tangential averages (two constraints).
// Edge constraint rows are discrete Gauss-Lobatto line integrals over the
// Gamma_ij polyline with the true per-mesh-edge normals, so the subdomain
// boundary flux of every dual field vanishes exactly after the basis change.
struct PrimalSpace {
  PrimalKind kind = PrimalKind::VerticesOnly;
  int n_pi = 0;
  std::vector<int> vertex_dofs;  // global velocity dof ids
  struct EdgeConstraint {
    int edge_index;      // into SubdomainPartition::edges
    Eigen::MatrixXd C;   // k x m over the edge's dof list, rows normalized
  };
  std::vector<EdgeConstraint> constraints;
};

PrimalSpace select_primal(const PolygonalMesh& mesh, const DofMap& dofs,
                          const SubdomainPartition& part, PrimalKind kind);

// Per-edge invertible transforms making each edge constraint an explicit
// interface dof (slot 0, then 1, of the edge's dof list). Identity elsewhere.
struct ChangeOfBasis {
  int n_gamma = 0;
  struct Block {
    std::vector<int> pos;  // global interface positions of the edge's dofs
    Eigen::MatrixXd T;     // m x m, new -> old coordinates
    int k = 0;             // leading columns holding the constraint dofs
  };
  std::vector<Block> blocks;
  std::vector<int> primal_positions;  // vertex dof positions, then edge slots

  // v_new -> v_old on the interface part of a vector
  void to_original(Eigen::Ref<Eigen::VectorXd> x_gamma) const;
  // functional (or residual) old -> new coordinates
  void to_transformed(Eigen::Ref<Eigen::VectorXd> g_gamma) const;
};

ChangeOfBasis build_change_of_basis(const SubdomainPartition& part, const PrimalSpace& primal);

// Per-subdomain restriction of the global change of basis, for the
// InterfaceOperator constructor.
std::vector<SpMat> subdomain_transforms(const SubdomainPartition& part,
                                        const ChangeOfBasis& basis);

// Balancing domain decomposition by constraints for the interface saddle
// operator: dual subspace solves plus an assembled coarse problem, glued by
// the pseudoinverse counting scalings.
class BddcPreconditioner {
 public:
  BddcPreconditioner(const InterfaceOperator& op, const DofMap& dofs,
                     const SubdomainPartition& part, const std::vector<SubdomainBlocks>& blocks,
                     const PrimalSpace& primal, const ChangeOfBasis& basis);

  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;

  int n_primal() const { return n_pi_; }
  int coarse_dim() const { return n_pi_ + N_; }
  bool coarse_regularized() const { return coarse_regularized_; }
  double coarse_asymmetry() const { return coarse_asymmetry_; }

  // bookkeeping accessors for the verification suites
  const std::vector<int>& primal_positions() const { return primal_positions_; }
  const std::vector<int>& local_primal_gids(int i) const { return local_primal_gid_[i]; }
  const std::vector<int>& dual_local_indices(int i) const { return dual_local_[i]; }
  const std::vector<int>& primal_local_indices(int i) const { return primal_local_[i]; }

  // max |B_0 Delta| entry over subdomains in the working basis; zero (to
  // roundoff) when the primal space carries the edge flux averages
  double assumption1_residual() const;

  // -- partially assembled space, exposed for verification --
  // layout: duals of subdomain 0..N-1, then primal coords, then p0 block
  int tilde_dim() const { return p0_offset_ + N_; }
  int dual_offset(int i) const { return dual_offset_[i]; }
  int n_dual(int i) const { return static_cast<int>(dual_pos_[i].size()); }
  int primal_offset() const { return primal_offset_; }
  int p0_offset() const { return p0_offset_; }

  Eigen::VectorXd apply_tilde(const Eigen::VectorXd& x) const;     // S_tilde x
  Eigen::VectorXd solve_tilde(const Eigen::VectorXd& r) const;     // S_tilde^{-1} r
  Eigen::VectorXd scatter_scaled(const Eigen::VectorXd& r) const;  // R_D tilde
  Eigen::VectorXd gather_scaled(const Eigen::VectorXd& w) const;   // R_D tilde transpose
  Eigen::VectorXd scatter(const Eigen::VectorXd& v) const;         // R tilde
  Eigen::VectorXd gather(const Eigen::VectorXd& w) const;          // R tilde transpose

  struct Counters {
    long dual_solves = 0;
    long coarse_solves = 0;
    long applications = 0;
  };
  const Counters& counters() const { return counters_; }
  void reset_counters() const { counters_ = {}; }

 private:
  const InterfaceOperator* op_;
  int N_ = 0, n_gamma_ = 0, n_pi_ = 0;
  int primal_offset_ = 0, p0_offset_ = 0;
  std::vector<int> dual_offset_;

  std::vector<int> primal_positions_;        // global iface positions, primal index order
  std::vector<int> primal_index_of_pos_;     // per iface position, -1 if dual
  std::vector<std::vector<int>> dual_pos_;   // per subdomain: global iface positions
  std::vector<std::vector<double>> dual_scale_;
  std::vector<std::vector<int>> local_primal_gid_;  // per subdomain: global primal indices
  std::vector<std::vector<int>> dual_local_;        // per subdomain: local iface index of duals
  std::vector<std::vector<int>> primal_local_;      // per subdomain: local iface index of primals

  struct DualBlock {
    std::shared_ptr<Eigen::SparseLU<SpMat>> lu;  // [[A_II,B_II^T,A_DI^T],[B_II,0,B_ID],[A_DI,B_ID^T,A_DD]]
    int nI = 0, nQ = 0, nD = 0;
    Eigen::MatrixXd W_dual;  // dual rows of K^{-1} L, (nD x (n_pi_loc+1))
    Eigen::VectorXd B0D;     // dual entries of the subdomain flux row
  };
  std::vector<DualBlock> dual_;

  Eigen::PartialPivLU<Eigen::MatrixXd> coarse_lu_;
  bool coarse_regularized_ = false;
  double coarse_asymmetry_ = 0.0;

  mutable Counters counters_;
};

}  // namespace vstokes
