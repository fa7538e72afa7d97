#include "vstokes/bddc.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <map>

namespace vstokes {

std::string primal_name(PrimalKind k) {
  switch (k) {
    case PrimalKind::VerticesOnly: return "v";
    case PrimalKind::VerticesPlusNormalAvg: return "v+n";
    case PrimalKind::VerticesPlusFullAvg: return "v+f";
  }
  return "?";
}

PrimalKind primal_from_name(const std::string& s) {
  if (s == "v") return PrimalKind::VerticesOnly;
  if (s == "v+n") return PrimalKind::VerticesPlusNormalAvg;
  if (s == "v+f") return PrimalKind::VerticesPlusFullAvg;
  throw BddcError("unknown primal kind: " + s + " (expected v, v+n or v+f)");
}

PrimalSpace select_primal(const PolygonalMesh& mesh, const DofMap& dofs,
                          const SubdomainPartition& part, PrimalKind kind) {
  PrimalSpace p;
  p.kind = kind;
  for (int c : part.vertex_carriers) {
    p.vertex_dofs.push_back(dofs.dof(0, c));
    p.vertex_dofs.push_back(dofs.dof(1, c));
  }
  std::sort(p.vertex_dofs.begin(), p.vertex_dofs.end());
  p.n_pi = static_cast<int>(p.vertex_dofs.size());
  if (kind == PrimalKind::VerticesOnly) return p;

  const int k = (kind == PrimalKind::VerticesPlusNormalAvg) ? 1 : 2;
  for (std::size_t ei = 0; ei < part.edges.size(); ++ei) {
    const SubdomainEdge& edge = part.edges[ei];
    const int m = static_cast<int>(edge.dofs.size());
    if (m < k)
      throw BddcError("subdomain edge (" + std::to_string(edge.si) + "," +
                      std::to_string(edge.sj) + ") has fewer dofs than edge constraints");
    std::map<int, int> carrier_slot;  // carrier -> index in edge.carriers
    for (std::size_t i = 0; i < edge.carriers.size(); ++i) carrier_slot[edge.carriers[i]] = i;

    // discrete line integrals of v.n and v.t over the polyline, with the
    // outward normal of the lower-numbered subdomain
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(k, m);
    for (int e : edge.mesh_edges) {
      const MeshEdge& me = mesh.edges[e];
      const int cell = (part.cell_subdomain[me.cell_a] == edge.si) ? me.cell_a : me.cell_b;
      const auto& cyc = mesh.cells[cell];
      const auto& ce = mesh.cell_edges[cell];
      int pos = -1;
      for (std::size_t i = 0; i < ce.size(); ++i)
        if (ce[i] == e) { pos = static_cast<int>(i); break; }
      const Point2 a = mesh.vertices[cyc[pos]];
      const Point2 b = mesh.vertices[cyc[(pos + 1) % cyc.size()]];
      const Point2 d = b - a;
      const double len = d.norm();
      const Point2 n{d.y / len, -d.x / len};
      const Point2 t{d.x / len, d.y / len};
      const int carr[3] = {cyc[pos], dofs.edge_carrier(e), cyc[(pos + 1) % cyc.size()]};
      const double w[3] = {len / 6.0, 2.0 * len / 3.0, len / 6.0};
      for (int g = 0; g < 3; ++g) {
        const auto it = carrier_slot.find(carr[g]);
        if (it == carrier_slot.end()) continue;  // primal vertex or Dirichlet endpoint
        const int sx = 2 * it->second, sy = 2 * it->second + 1;
        C(0, sx) += w[g] * n.x;
        C(0, sy) += w[g] * n.y;
        if (k == 2) {
          C(1, sx) += w[g] * t.x;
          C(1, sy) += w[g] * t.y;
        }
      }
    }
    for (int r = 0; r < k; ++r) {
      const double nrm = C.row(r).norm();
      if (nrm < 1e-14)
        throw BddcError("degenerate edge constraint on subdomain edge (" +
                        std::to_string(edge.si) + "," + std::to_string(edge.sj) + ")");
      C.row(r) /= nrm;
    }
    p.constraints.push_back({static_cast<int>(ei), std::move(C)});
    p.n_pi += k;
  }
  return p;
}

ChangeOfBasis build_change_of_basis(const SubdomainPartition& part, const PrimalSpace& primal) {
  ChangeOfBasis basis;
  basis.n_gamma = static_cast<int>(part.interface_dofs.size());
  const auto position = [&](int dof) {
    const auto it =
        std::lower_bound(part.interface_dofs.begin(), part.interface_dofs.end(), dof);
    return static_cast<int>(it - part.interface_dofs.begin());
  };

  for (const auto& ec : primal.constraints) {
    const SubdomainEdge& edge = part.edges[ec.edge_index];
    const int m = static_cast<int>(edge.dofs.size());
    const int k = static_cast<int>(ec.C.rows());
    ChangeOfBasis::Block blk;
    blk.k = k;
    blk.pos.reserve(m);
    for (int d : edge.dofs) blk.pos.push_back(position(d));

    // T = [Q1 R^{-T} | Q2] from the QR of C^T gives C T = [I 0]
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(ec.C.transpose());
    const Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd R =
        qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    for (int j = 0; j < k; ++j)
      if (std::abs(R(j, j)) < 1e-12)
        throw BddcError("rank-deficient edge constraints on subdomain edge (" +
                        std::to_string(edge.si) + "," + std::to_string(edge.sj) + ")");
    blk.T.resize(m, m);
    blk.T.leftCols(k) = Q.leftCols(k) * R.transpose().inverse();
    blk.T.rightCols(m - k) = Q.rightCols(m - k);
    basis.blocks.push_back(std::move(blk));
  }

  basis.primal_positions.clear();
  for (int d : primal.vertex_dofs) basis.primal_positions.push_back(position(d));
  for (const auto& blk : basis.blocks)
    for (int j = 0; j < blk.k; ++j) basis.primal_positions.push_back(blk.pos[j]);
  return basis;
}

void ChangeOfBasis::to_original(Eigen::Ref<Eigen::VectorXd> x) const {
  for (const auto& blk : blocks) {
    Eigen::VectorXd v(blk.pos.size());
    for (std::size_t i = 0; i < blk.pos.size(); ++i) v(i) = x(blk.pos[i]);
    const Eigen::VectorXd w = blk.T * v;
    for (std::size_t i = 0; i < blk.pos.size(); ++i) x(blk.pos[i]) = w(i);
  }
}

void ChangeOfBasis::to_transformed(Eigen::Ref<Eigen::VectorXd> g) const {
  for (const auto& blk : blocks) {
    Eigen::VectorXd v(blk.pos.size());
    for (std::size_t i = 0; i < blk.pos.size(); ++i) v(i) = g(blk.pos[i]);
    const Eigen::VectorXd w = blk.T.transpose() * v;
    for (std::size_t i = 0; i < blk.pos.size(); ++i) g(blk.pos[i]) = w(i);
  }
}

std::vector<SpMat> subdomain_transforms(const SubdomainPartition& part,
                                        const ChangeOfBasis& basis) {
  std::vector<SpMat> out(part.N);
  for (int s = 0; s < part.N; ++s) {
    const auto& loc = part.local_interface[s];
    const int nG = static_cast<int>(loc.size());
    std::map<int, int> pos_to_local;
    for (int i = 0; i < nG; ++i) {
      const auto it =
          std::lower_bound(part.interface_dofs.begin(), part.interface_dofs.end(), loc[i]);
      pos_to_local[static_cast<int>(it - part.interface_dofs.begin())] = i;
    }
    std::vector<uint8_t> in_block(nG, 0);
    std::vector<Eigen::Triplet<double>> t;
    for (const auto& blk : basis.blocks) {
      if (pos_to_local.find(blk.pos.front()) == pos_to_local.end()) continue;
      std::vector<int> lidx(blk.pos.size());
      for (std::size_t i = 0; i < blk.pos.size(); ++i) {
        lidx[i] = pos_to_local.at(blk.pos[i]);
        in_block[lidx[i]] = 1;
      }
      for (std::size_t i = 0; i < blk.pos.size(); ++i)
        for (std::size_t j = 0; j < blk.pos.size(); ++j)
          if (blk.T(i, j) != 0.0) t.emplace_back(lidx[i], lidx[j], blk.T(i, j));
    }
    for (int i = 0; i < nG; ++i)
      if (!in_block[i]) t.emplace_back(i, i, 1.0);
    out[s].resize(nG, nG);
    out[s].setFromTriplets(t.begin(), t.end());
  }
  return out;
}

namespace {

SpMat slice(const SpMat& A, const std::vector<int>& rows, const std::vector<int>& cols) {
  std::vector<int> rmap(A.rows(), -1), cmap(A.cols(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) rmap[rows[i]] = static_cast<int>(i);
  for (std::size_t j = 0; j < cols.size(); ++j) cmap[cols[j]] = static_cast<int>(j);
  std::vector<Eigen::Triplet<double>> t;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      if (rmap[it.row()] >= 0 && cmap[it.col()] >= 0)
        t.emplace_back(rmap[it.row()], cmap[it.col()], it.value());
  SpMat out(rows.size(), cols.size());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

std::vector<int> iota_vec(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

BddcPreconditioner::BddcPreconditioner(const InterfaceOperator& op, const DofMap& dofs,
                                       const SubdomainPartition& part,
                                       const std::vector<SubdomainBlocks>& blocks,
                                       const PrimalSpace& primal, const ChangeOfBasis& basis)
    : op_(&op) {
  N_ = part.N;
  if (N_ < 2) throw BddcError("BddcPreconditioner: at least two subdomains required");
  n_gamma_ = op.n_gamma();
  n_pi_ = primal.n_pi;
  primal_positions_ = basis.primal_positions;
  if (static_cast<int>(primal_positions_.size()) != n_pi_)
    throw BddcError("primal position bookkeeping mismatch");

  primal_index_of_pos_.assign(n_gamma_, -1);
  for (int g = 0; g < n_pi_; ++g) {
    if (primal_index_of_pos_[primal_positions_[g]] != -1)
      throw BddcError("duplicate primal position");
    primal_index_of_pos_[primal_positions_[g]] = g;
  }

  dual_pos_.resize(N_);
  dual_scale_.resize(N_);
  local_primal_gid_.resize(N_);
  dual_local_.resize(N_);
  primal_local_.resize(N_);
  dual_offset_.resize(N_);
  dual_.resize(N_);

  int off = 0;
  for (int s = 0; s < N_; ++s) {
    const auto& gpos = op.subdomain_positions(s);
    dual_offset_[s] = off;
    for (std::size_t i = 0; i < gpos.size(); ++i) {
      const int g = primal_index_of_pos_[gpos[i]];
      if (g >= 0) {
        primal_local_[s].push_back(static_cast<int>(i));
        local_primal_gid_[s].push_back(g);
      } else {
        dual_local_[s].push_back(static_cast<int>(i));
        dual_pos_[s].push_back(gpos[i]);
        const int carrier = dofs.carrier_of(part.interface_dofs[gpos[i]]);
        dual_scale_[s].push_back(1.0 / part.multiplicity(carrier));
      }
    }
    off += static_cast<int>(dual_pos_[s].size());
  }
  primal_offset_ = off;
  p0_offset_ = off + n_pi_;

  Eigen::MatrixXd scc = Eigen::MatrixXd::Zero(n_pi_ + N_, n_pi_ + N_);

  for (int s = 0; s < N_; ++s) {
    const SubdomainBlocks& b = blocks[s];
    const int nI = static_cast<int>(b.interior_dofs.size());
    const int nQ = static_cast<int>(b.B_II.rows());
    const int nD = static_cast<int>(dual_local_[s].size());
    const int nP = static_cast<int>(primal_local_[s].size());
    DualBlock& db = dual_[s];
    db.nI = nI;
    db.nQ = nQ;
    db.nD = nD;

    const SpMat A_DI = slice(op.A_GI(s), dual_local_[s], iota_vec(nI));
    const SpMat A_PI = slice(op.A_GI(s), primal_local_[s], iota_vec(nI));
    const SpMat A_DD = slice(op.A_GG(s), dual_local_[s], dual_local_[s]);
    const SpMat A_PD = slice(op.A_GG(s), primal_local_[s], dual_local_[s]);
    const SpMat A_PP = slice(op.A_GG(s), primal_local_[s], primal_local_[s]);
    const SpMat B_ID = slice(op.B_IG(s), iota_vec(nQ), dual_local_[s]);
    const SpMat B_IP = slice(op.B_IG(s), iota_vec(nQ), primal_local_[s]);
    db.B0D.resize(nD);
    for (int i = 0; i < nD; ++i) db.B0D(i) = op.B_0G(s)(dual_local_[s][i]);
    Eigen::VectorXd B0P(nP);
    for (int i = 0; i < nP; ++i) B0P(i) = op.B_0G(s)(primal_local_[s][i]);

    // dual block K = [[A_II, B_II^T, A_DI^T],[B_II, 0, B_ID],[A_DI, B_ID^T, A_DD]]
    const int n = nI + nQ + nD;
    std::vector<Eigen::Triplet<double>> t;
    const auto add_block = [&t](const SpMat& M, int r0, int c0, bool with_transpose) {
      for (int k = 0; k < M.outerSize(); ++k)
        for (SpMat::InnerIterator it(M, k); it; ++it) {
          t.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
          if (with_transpose) t.emplace_back(c0 + it.col(), r0 + it.row(), it.value());
        }
    };
    add_block(blocks[s].A_II, 0, 0, false);
    add_block(blocks[s].B_II, nI, 0, true);
    add_block(A_DI, nI + nQ, 0, true);
    add_block(B_ID, nI, nI + nQ, true);
    add_block(A_DD, nI + nQ, nI + nQ, false);
    SpMat K(n, n);
    K.setFromTriplets(t.begin(), t.end());
    db.lu = std::make_shared<Eigen::SparseLU<SpMat>>();
    if (n > 0) {
      db.lu->analyzePattern(K);
      db.lu->factorize(K);
      if (db.lu->info() != Eigen::Success)
        throw BddcError("subdomain " + std::to_string(s) +
                        ": singular dual block (insufficient primal constraints)");
    }

    // L columns: local primal couplings, then the subdomain constant pressure
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, nP + 1);
    if (nP > 0) {
      L.topLeftCorner(nI, nP) = Eigen::MatrixXd(A_PI).transpose();
      L.block(nI, 0, nQ, nP) = Eigen::MatrixXd(B_IP);
      L.block(nI + nQ, 0, nD, nP) = Eigen::MatrixXd(A_PD).transpose();
    }
    L.col(nP).tail(nD) = db.B0D;

    Eigen::MatrixXd W(n, nP + 1);
    if (n > 0)
      W = db.lu->solve(L);
    db.W_dual = W.bottomRows(nD);

    // coarse contribution
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nP + 1, nP + 1);
    local.topLeftCorner(nP, nP) = Eigen::MatrixXd(A_PP);
    local.block(0, nP, nP, 1) = B0P;
    local.block(nP, 0, 1, nP) = B0P.transpose();
    local -= L.transpose() * W;
    for (int i = 0; i <= nP; ++i) {
      const int gi = (i < nP) ? local_primal_gid_[s][i] : n_pi_ + s;
      for (int j = 0; j <= nP; ++j) {
        const int gj = (j < nP) ? local_primal_gid_[s][j] : n_pi_ + s;
        scc(gi, gj) += local(i, j);
      }
    }
  }

  coarse_asymmetry_ = (scc - scc.transpose()).cwiseAbs().maxCoeff();

  // remove the constant-p0 kernel direction when present
  Eigen::VectorXd k0 = Eigen::VectorXd::Zero(n_pi_ + N_);
  k0.tail(N_).setConstant(1.0 / std::sqrt(static_cast<double>(N_)));
  const double scale = scc.cwiseAbs().maxCoeff();
  const double kres = (scc * k0).cwiseAbs().maxCoeff();
  if (kres <= 1e-8 * scale) {
    scc += scale * k0 * k0.transpose();
    coarse_regularized_ = true;
  }
  coarse_lu_.compute(scc);
  {
    const Eigen::VectorXd probe = Eigen::VectorXd::LinSpaced(n_pi_ + N_, 1.0, 2.0);
    const Eigen::VectorXd sol = coarse_lu_.solve(probe);
    if (!(sol.allFinite()) || (scc * sol - probe).norm() > 1e-6 * probe.norm())
      throw BddcError("singular coarse problem (p0 kernel not removed?)");
  }
}

double BddcPreconditioner::assumption1_residual() const {
  double r = 0.0;
  for (int s = 0; s < N_; ++s)
    if (dual_[s].B0D.size() > 0) r = std::max(r, dual_[s].B0D.cwiseAbs().maxCoeff());
  return r;
}

Eigen::VectorXd BddcPreconditioner::scatter_scaled(const Eigen::VectorXd& r) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(tilde_dim());
  for (int s = 0; s < N_; ++s)
    for (std::size_t i = 0; i < dual_pos_[s].size(); ++i)
      x(dual_offset_[s] + i) = dual_scale_[s][i] * r(dual_pos_[s][i]);
  for (int g = 0; g < n_pi_; ++g) x(primal_offset_ + g) = r(primal_positions_[g]);
  x.tail(N_) = r.tail(N_);
  return x;
}

Eigen::VectorXd BddcPreconditioner::gather_scaled(const Eigen::VectorXd& w) const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n_gamma_ + N_);
  for (int s = 0; s < N_; ++s)
    for (std::size_t i = 0; i < dual_pos_[s].size(); ++i)
      z(dual_pos_[s][i]) += dual_scale_[s][i] * w(dual_offset_[s] + i);
  for (int g = 0; g < n_pi_; ++g) z(primal_positions_[g]) = w(primal_offset_ + g);
  z.tail(N_) = w.tail(N_);
  return z;
}

Eigen::VectorXd BddcPreconditioner::scatter(const Eigen::VectorXd& v) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(tilde_dim());
  for (int s = 0; s < N_; ++s)
    for (std::size_t i = 0; i < dual_pos_[s].size(); ++i)
      x(dual_offset_[s] + i) = v(dual_pos_[s][i]);
  for (int g = 0; g < n_pi_; ++g) x(primal_offset_ + g) = v(primal_positions_[g]);
  x.tail(N_) = v.tail(N_);
  return x;
}

Eigen::VectorXd BddcPreconditioner::gather(const Eigen::VectorXd& w) const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n_gamma_ + N_);
  for (int s = 0; s < N_; ++s)
    for (std::size_t i = 0; i < dual_pos_[s].size(); ++i)
      z(dual_pos_[s][i]) += w(dual_offset_[s] + i);
  for (int g = 0; g < n_pi_; ++g) z(primal_positions_[g]) = w(primal_offset_ + g);
  z.tail(N_) = w.tail(N_);
  return z;
}

Eigen::VectorXd BddcPreconditioner::apply_tilde(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(tilde_dim());
  for (int s = 0; s < N_; ++s) {
    const auto& gpos = op_->subdomain_positions(s);
    Eigen::VectorXd u_loc(gpos.size());
    for (std::size_t i = 0; i < dual_local_[s].size(); ++i)
      u_loc(dual_local_[s][i]) = x(dual_offset_[s] + i);
    for (std::size_t i = 0; i < primal_local_[s].size(); ++i)
      u_loc(primal_local_[s][i]) = x(primal_offset_ + local_primal_gid_[s][i]);
    const auto [yl, y0] = op_->subdomain_apply(s, u_loc, x(p0_offset_ + s));
    for (std::size_t i = 0; i < dual_local_[s].size(); ++i)
      y(dual_offset_[s] + i) += yl(dual_local_[s][i]);
    for (std::size_t i = 0; i < primal_local_[s].size(); ++i)
      y(primal_offset_ + local_primal_gid_[s][i]) += yl(primal_local_[s][i]);
    y(p0_offset_ + s) = y0;
  }
  return y;
}

Eigen::VectorXd BddcPreconditioner::solve_tilde(const Eigen::VectorXd& r) const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(tilde_dim());
  Eigen::VectorXd crhs(n_pi_ + N_);
  crhs.head(n_pi_) = r.segment(primal_offset_, n_pi_);
  crhs.tail(N_) = r.tail(N_);

  std::vector<Eigen::VectorXd> zdual(N_);
  for (int s = 0; s < N_; ++s) {
    const DualBlock& db = dual_[s];
    const int n = db.nI + db.nQ + db.nD;
    Eigen::VectorXd rd = r.segment(dual_offset_[s], db.nD);
    if (n > 0) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
      rhs.tail(db.nD) = rd;
      const Eigen::VectorXd z = db.lu->solve(rhs);
      ++counters_.dual_solves;
      zdual[s] = z.tail(db.nD);
    } else {
      zdual[s] = Eigen::VectorXd(0);
    }
    const Eigen::VectorXd corr = db.W_dual.transpose() * rd;  // (nP+1)
    const int nP = static_cast<int>(local_primal_gid_[s].size());
    for (int j = 0; j < nP; ++j) crhs(local_primal_gid_[s][j]) -= corr(j);
    crhs(n_pi_ + s) -= corr(nP);
  }

  const Eigen::VectorXd c = coarse_lu_.solve(crhs);
  ++counters_.coarse_solves;

  for (int s = 0; s < N_; ++s) {
    const DualBlock& db = dual_[s];
    const int nP = static_cast<int>(local_primal_gid_[s].size());
    Eigen::VectorXd c_loc(nP + 1);
    for (int j = 0; j < nP; ++j) c_loc(j) = c(local_primal_gid_[s][j]);
    c_loc(nP) = c(n_pi_ + s);
    Eigen::VectorXd wd = zdual[s];
    if (db.nD > 0) wd -= db.W_dual * c_loc;
    w.segment(dual_offset_[s], db.nD) = wd;
  }
  w.segment(primal_offset_, n_pi_) = c.head(n_pi_);
  w.tail(N_) = c.tail(N_);
  return w;
}

Eigen::VectorXd BddcPreconditioner::apply(const Eigen::VectorXd& r) const {
  if (r.size() != n_gamma_ + N_) throw BddcError("BddcPreconditioner::apply: dimension mismatch");
  Eigen::VectorXd z = gather_scaled(solve_tilde(scatter_scaled(r)));
  // quotient out the constant-p0 kernel direction
  z.tail(N_).array() -= z.tail(N_).mean();
  ++counters_.applications;
  return z;
}

}  // namespace vstokes
