#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>
#include <vector>

#include "vstokes/partition.hpp"

namespace vstokes {

struct SchurError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Factorized subdomain Dirichlet problem [[A_II, B_II^T],[B_II, 0]] in the
// zero-mean interior pressure basis. Reused across many applications.
class SubdomainSolver {
 public:
  SubdomainSolver() = default;
  SubdomainSolver(const SubdomainBlocks& blocks, int subdomain_id);

  // rhs_u over interior velocity dofs, rhs_p over the zero-mean pressure rows
  std::pair<Eigen::VectorXd, Eigen::VectorXd> solve(const Eigen::VectorXd& rhs_u,
                                                    const Eigen::VectorXd& rhs_p) const;
  int n_velocity() const { return n_u_; }
  int n_pressure() const { return n_q_; }

 private:
  std::shared_ptr<Eigen::SparseLU<SpMat>> lu_;
  int n_u_ = 0, n_q_ = 0;
};

struct RecoveredSolution {
  Eigen::VectorXd u;  // free velocity dofs, original basis
  Eigen::VectorXd p;  // cell pressures, zero area-weighted mean
};

// The global interface saddle-point operator: interface velocities plus one
// constant pressure per subdomain. Applications cost one interior Dirichlet
// solve per subdomain; the matrix itself is never assembled. An optional
// per-edge change of basis premultiplies the interface blocks so primal
// averages become explicit dofs.
class InterfaceOperator {
 public:
  InterfaceOperator(const DofMap& dofs, const SubdomainPartition& part,
                    const std::vector<SubdomainBlocks>& blocks,
                    const std::vector<SpMat>* iface_transforms = nullptr);

  int n_gamma() const { return n_gamma_; }
  int n_subdomains() const { return N_; }
  int dim() const { return n_gamma_ + N_; }

  // position of a global velocity dof in the interface vector, -1 if interior
  int iface_position(int global_dof) const;
  const std::vector<int>& iface_dofs() const { return iface_dofs_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd rhs() const;
  RecoveredSolution recover(const Eigen::VectorXd& x) const;

  // action of the subdomain Schur complement S^(i) on (u_loc, p0);
  // u_loc in the working (transformed) basis. Used by the preconditioner.
  std::pair<Eigen::VectorXd, double> subdomain_apply(int i, const Eigen::VectorXd& u_loc,
                                                     double p0) const;

  const std::vector<int>& subdomain_positions(int i) const { return local_[i].gpos; }
  const SpMat& subdomain_transform(int i) const { return local_[i].T; }
  const SpMat& A_GI(int i) const { return local_[i].A_GI; }
  const SpMat& A_GG(int i) const { return local_[i].A_GG; }
  const SpMat& B_IG(int i) const { return local_[i].B_IG; }
  const Eigen::RowVectorXd& B_0G(int i) const { return local_[i].B_0G; }
  const SubdomainSolver& solver(int i) const { return local_[i].solver; }

  struct Counters {
    long local_solves = 0;
    long applications = 0;
  };
  const Counters& counters() const { return counters_; }
  void reset_counters() const { counters_ = {}; }

 private:
  struct Local {
    std::vector<int> gpos;
    SpMat T;
    SpMat A_GI, A_GG, B_IG;
    Eigen::RowVectorXd B_0G;
    Eigen::VectorXd f_I, f_G;
    SubdomainSolver solver;
    std::vector<int> interior_dofs;
    std::vector<int> cells;
    std::vector<double> cell_areas;
    double area = 0.0;
  };

  int n_gamma_ = 0, N_ = 0;
  std::vector<int> iface_dofs_;
  std::vector<int> iface_pos_;   // per global dof
  std::vector<int> iface_free_;  // free-dof index per interface position
  std::vector<std::vector<int>> interior_free_;
  std::vector<Local> local_;
  Eigen::VectorXd domain_cell_areas_;  // per global cell, for pressure recentering
  int n_free_ = 0;
  mutable Counters counters_;
};

}  // namespace vstokes
