#include "vstokes/schur.hpp"

#include <algorithm>

namespace vstokes {

SubdomainSolver::SubdomainSolver(const SubdomainBlocks& blocks, int subdomain_id) {
  n_u_ = static_cast<int>(blocks.interior_dofs.size());
  n_q_ = blocks.B_II.rows();
  const int n = n_u_ + n_q_;
  if (n == 0) return;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(blocks.A_II.nonZeros() + 2 * blocks.B_II.nonZeros());
  for (int k = 0; k < blocks.A_II.outerSize(); ++k)
    for (SpMat::InnerIterator it(blocks.A_II, k); it; ++it)
      t.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < blocks.B_II.outerSize(); ++k)
    for (SpMat::InnerIterator it(blocks.B_II, k); it; ++it) {
      t.emplace_back(n_u_ + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), n_u_ + it.row(), it.value());
    }
  SpMat K(n, n);
  K.setFromTriplets(t.begin(), t.end());
  lu_ = std::make_shared<Eigen::SparseLU<SpMat>>();
  lu_->analyzePattern(K);
  lu_->factorize(K);
  if (lu_->info() != Eigen::Success)
    throw SchurError("subdomain " + std::to_string(subdomain_id) +
                     ": singular interior saddle block (interior pressure constraint missing?)");
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> SubdomainSolver::solve(
    const Eigen::VectorXd& rhs_u, const Eigen::VectorXd& rhs_p) const {
  if (n_u_ + n_q_ == 0) return {Eigen::VectorXd(0), Eigen::VectorXd(0)};
  Eigen::VectorXd rhs(n_u_ + n_q_);
  rhs.head(n_u_) = rhs_u;
  rhs.tail(n_q_) = rhs_p;
  const Eigen::VectorXd x = lu_->solve(rhs);
  return {x.head(n_u_), x.tail(n_q_)};
}

InterfaceOperator::InterfaceOperator(const DofMap& dofs, const SubdomainPartition& part,
                                     const std::vector<SubdomainBlocks>& blocks,
                                     const std::vector<SpMat>* iface_transforms) {
  N_ = part.N;
  iface_dofs_ = part.interface_dofs;
  n_gamma_ = static_cast<int>(iface_dofs_.size());
  iface_pos_.assign(dofs.n_u, -1);
  for (int i = 0; i < n_gamma_; ++i) iface_pos_[iface_dofs_[i]] = i;
  n_free_ = dofs.n_free;
  iface_free_.resize(n_gamma_);
  for (int i = 0; i < n_gamma_; ++i) iface_free_[i] = dofs.free_index[iface_dofs_[i]];
  interior_free_.resize(N_);
  for (int s = 0; s < N_; ++s) {
    interior_free_[s].reserve(blocks[s].interior_dofs.size());
    for (int d : blocks[s].interior_dofs) interior_free_[s].push_back(dofs.free_index[d]);
  }

  domain_cell_areas_.resize(dofs.n_p);
  local_.resize(N_);
  for (int s = 0; s < N_; ++s) {
    const SubdomainBlocks& b = blocks[s];
    Local& l = local_[s];
    l.gpos.reserve(b.interface_dofs.size());
    for (int d : b.interface_dofs) l.gpos.push_back(iface_pos_[d]);
    const int nG = static_cast<int>(l.gpos.size());

    if (iface_transforms) {
      l.T = (*iface_transforms)[s];
      if (l.T.rows() != nG || l.T.cols() != nG)
        throw SchurError("interface transform dimension mismatch on subdomain " +
                         std::to_string(s));
      l.A_GI = l.T.transpose() * b.A_GI;
      l.A_GG = (l.T.transpose() * b.A_GG * l.T).pruned();
      l.B_IG = b.B_IG * l.T;
      l.B_0G = b.B_0G * l.T;
      l.f_G = l.T.transpose() * b.f_G;
    } else {
      SpMat id(nG, nG);
      id.setIdentity();
      l.T = id;
      l.A_GI = b.A_GI;
      l.A_GG = b.A_GG;
      l.B_IG = b.B_IG;
      l.B_0G = b.B_0G;
      l.f_G = b.f_G;
    }
    l.f_I = b.f_I;
    l.solver = SubdomainSolver(b, s);
    l.interior_dofs = b.interior_dofs;
    l.cells = b.cells;
    l.cell_areas = b.cell_areas;
    l.area = b.area;
    for (std::size_t lc = 0; lc < b.cells.size(); ++lc)
      domain_cell_areas_(b.cells[lc]) = b.cell_areas[lc];
  }
}

int InterfaceOperator::iface_position(int global_dof) const { return iface_pos_[global_dof]; }

std::pair<Eigen::VectorXd, double> InterfaceOperator::subdomain_apply(
    int i, const Eigen::VectorXd& u_loc, double p0) const {
  const Local& l = local_[i];
  const auto [w, r] = l.solver.solve(-(l.A_GI.transpose() * u_loc), -(l.B_IG * u_loc));
  ++counters_.local_solves;
  Eigen::VectorXd y = l.A_GG * u_loc + l.B_0G.transpose() * p0;
  if (w.size() > 0) y += l.A_GI * w;
  if (r.size() > 0) y += l.B_IG.transpose() * r;
  return {std::move(y), l.B_0G.dot(u_loc)};
}

Eigen::VectorXd InterfaceOperator::apply(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw SchurError("InterfaceOperator::apply: dimension mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim());
  for (int s = 0; s < N_; ++s) {
    const Local& l = local_[s];
    Eigen::VectorXd u_loc(l.gpos.size());
    for (std::size_t k = 0; k < l.gpos.size(); ++k) u_loc(k) = x(l.gpos[k]);
    const auto [y, y0] = subdomain_apply(s, u_loc, x(n_gamma_ + s));
    for (std::size_t k = 0; k < l.gpos.size(); ++k) out(l.gpos[k]) += y(k);
    out(n_gamma_ + s) = y0;
  }
  ++counters_.applications;
  return out;
}

Eigen::VectorXd InterfaceOperator::rhs() const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
  for (int s = 0; s < N_; ++s) {
    const Local& l = local_[s];
    const auto [w, r] =
        l.solver.solve(l.f_I, Eigen::VectorXd::Zero(l.solver.n_pressure()));
    ++counters_.local_solves;
    Eigen::VectorXd g_loc = l.f_G;
    if (w.size() > 0) g_loc -= l.A_GI * w;
    if (r.size() > 0) g_loc -= l.B_IG.transpose() * r;
    for (std::size_t k = 0; k < l.gpos.size(); ++k) g(l.gpos[k]) += g_loc(k);
  }
  return g;
}

RecoveredSolution InterfaceOperator::recover(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw SchurError("InterfaceOperator::recover: dimension mismatch");
  RecoveredSolution sol;
  sol.u = Eigen::VectorXd::Zero(n_free_);
  sol.p = Eigen::VectorXd::Zero(domain_cell_areas_.size());

  for (int s = 0; s < N_; ++s) {
    const Local& l = local_[s];
    Eigen::VectorXd u_loc(l.gpos.size());
    for (std::size_t k = 0; k < l.gpos.size(); ++k) u_loc(k) = x(l.gpos[k]);
    const double p0 = x(n_gamma_ + s);

    const auto [uI, qI] =
        l.solver.solve(l.f_I - l.A_GI.transpose() * u_loc, -(l.B_IG * u_loc));
    ++counters_.local_solves;

    // interface values back in the original basis (free-dof indices coincide
    // with global dof ids here; callers map through DofMap::free_index)
    const Eigen::VectorXd u_orig = l.T * u_loc;
    for (std::size_t k = 0; k < l.gpos.size(); ++k) sol.u(iface_free_[l.gpos[k]]) = u_orig(k);
    for (std::size_t k = 0; k < l.interior_dofs.size(); ++k)
      sol.u(interior_free_[s][k]) = uI(k);

    // pressures from the zero-mean basis plus the subdomain constant
    const int M = static_cast<int>(l.cells.size());
    double corr = 0.0;
    for (int j = 0; j + 1 < M; ++j) corr += qI(j) * l.cell_areas[j];
    corr /= l.area;
    for (int j = 0; j < M; ++j) {
      double v = p0 - corr;
      if (j + 1 < M) v += qI(j);
      sol.p(l.cells[j]) = v;
    }
  }
  const double mean = sol.p.dot(domain_cell_areas_) / domain_cell_areas_.sum();
  sol.p.array() -= mean;
  return sol;
}

}  // namespace vstokes
