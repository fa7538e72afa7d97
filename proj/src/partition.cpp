#include "vstokes/partition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace vstokes {

namespace {

int block_index_1d(double coord, int inv_H) {
  const double s = coord * inv_H;
  int i = static_cast<int>(std::floor(s));
  if (static_cast<double>(i) == s && i > 0) --i;  // exact tie goes to the lower block
  return std::min(inv_H - 1, std::max(0, i));
}

}  // namespace

SubdomainPartition partition_regular(const PolygonalMesh& mesh, const DofMap& dofs, int inv_H) {
  if (inv_H < 2) throw PartitionError("partition_regular: inv_H must be >= 2");
  if (inv_H * inv_H > mesh.n_cells())
    throw PartitionError("partition_regular: more subdomains than cells");

  SubdomainPartition part;
  part.inv_H = inv_H;
  part.N = inv_H * inv_H;
  part.cell_subdomain.resize(mesh.n_cells());
  part.cells_of.assign(part.N, {});
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Point2 ctr = polygon_centroid(mesh.cell_polygon(c));
    const int ix = block_index_1d(ctr.x, inv_H);
    const int iy = block_index_1d(ctr.y, inv_H);
    const int s = iy * inv_H + ix;
    part.cell_subdomain[c] = s;
    part.cells_of[s].push_back(c);
  }

  for (int s = 0; s < part.N; ++s) {
    if (part.cells_of[s].empty())
      throw PartitionError("subdomain " + std::to_string(s) + " is empty");
    // edge-connectivity sweep within the subdomain
    std::map<int, int> local;  // cell -> local index
    for (std::size_t i = 0; i < part.cells_of[s].size(); ++i) local[part.cells_of[s][i]] = i;
    std::vector<uint8_t> seen(part.cells_of[s].size(), 0);
    std::deque<int> queue{part.cells_of[s].front()};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!queue.empty()) {
      const int c = queue.front();
      queue.pop_front();
      for (int e : mesh.cell_edges[c]) {
        const MeshEdge& me = mesh.edges[e];
        const int other = (me.cell_a == c) ? me.cell_b : me.cell_a;
        if (other < 0 || part.cell_subdomain[other] != s) continue;
        const int li = local[other];
        if (!seen[li]) {
          seen[li] = 1;
          ++reached;
          queue.push_back(other);
        }
      }
    }
    if (reached != part.cells_of[s].size())
      throw PartitionError("subdomain " + std::to_string(s) + " is not edge-connected");
  }

  classify_interface(mesh, dofs, part);
  return part;
}

void classify_interface(const PolygonalMesh& mesh, const DofMap& dofs, SubdomainPartition& part) {
  const int nc = dofs.n_carriers;
  part.carrier_class.assign(nc, CarrierClass::Interior);
  part.carrier_subdomains.assign(nc, {});

  for (int v = 0; v < dofs.n_vertices; ++v) {
    std::set<int> subs;
    for (int c : mesh.vertex_cells[v]) subs.insert(part.cell_subdomain[c]);
    part.carrier_subdomains[v].assign(subs.begin(), subs.end());
  }
  for (int e = 0; e < dofs.n_edges; ++e) {
    std::set<int> subs{part.cell_subdomain[mesh.edges[e].cell_a]};
    if (mesh.edges[e].cell_b >= 0) subs.insert(part.cell_subdomain[mesh.edges[e].cell_b]);
    part.carrier_subdomains[dofs.edge_carrier(e)].assign(subs.begin(), subs.end());
  }

  for (int c = 0; c < nc; ++c) {
    if (dofs.carrier_on_boundary[c]) {
      part.carrier_class[c] = CarrierClass::Dirichlet;  // never in Gamma
    } else if (part.carrier_subdomains[c].size() == 1) {
      part.carrier_class[c] = CarrierClass::Interior;
    } else if (part.carrier_subdomains[c].size() == 2) {
      part.carrier_class[c] = CarrierClass::InterfaceEdge;
    } else {
      part.carrier_class[c] = CarrierClass::InterfaceVertex;
    }
  }

  // Every interior macro corner needs a subdomain vertex for the coarse
  // problem. Structured meshes produce one naturally; on Voronoi meshes the
  // nearest interface carrier of highest multiplicity is promoted if the
  // natural rule found none among the corner's subdomains.
  const int inv_H = part.inv_H;
  for (int gy = 1; gy < inv_H; ++gy) {
    for (int gx = 1; gx < inv_H; ++gx) {
      const Point2 corner{static_cast<double>(gx) / inv_H, static_cast<double>(gy) / inv_H};
      const std::set<int> around = {(gy - 1) * inv_H + (gx - 1), (gy - 1) * inv_H + gx,
                                    gy * inv_H + (gx - 1), gy * inv_H + gx};
      bool found = false;
      for (int c = 0; c < nc && !found; ++c) {
        if (part.carrier_class[c] != CarrierClass::InterfaceVertex) continue;
        int inside = 0;
        for (int s : part.carrier_subdomains[c]) inside += around.count(s);
        if (inside >= 3) found = true;
      }
      if (found) continue;
      int best = -1, best_mult = 2;
      double best_dist = std::numeric_limits<double>::infinity();
      for (int c = 0; c < nc; ++c) {
        if (part.carrier_class[c] != CarrierClass::InterfaceEdge &&
            part.carrier_class[c] != CarrierClass::InterfaceVertex)
          continue;
        int inside = 0;
        for (int s : part.carrier_subdomains[c]) inside += around.count(s);
        if (inside < 2) continue;
        const int mult = part.multiplicity(c);
        const double d = distance(dofs.carrier_pos[c], corner);
        if (mult > best_mult || (mult == best_mult && d < best_dist)) {
          best = c;
          best_mult = mult;
          best_dist = d;
        } else if (mult == best_mult && d == best_dist && c < best) {
          best = c;
        }
      }
      if (best < 0)
        throw PartitionError("no interface carrier available to promote at macro corner (" +
                             std::to_string(gx) + "," + std::to_string(gy) + ")");
      part.carrier_class[best] = CarrierClass::InterfaceVertex;
    }
  }

  // Gamma set, per-subdomain interior/interface dof lists
  part.interface_dofs.clear();
  part.vertex_carriers.clear();
  part.interior_dofs.assign(part.N, {});
  part.local_interface.assign(part.N, {});
  for (int comp = 0; comp < 2; ++comp) {
    for (int c = 0; c < nc; ++c) {
      const int d = dofs.dof(comp, c);
      switch (part.carrier_class[c]) {
        case CarrierClass::Dirichlet: break;
        case CarrierClass::Interior:
          part.interior_dofs[part.carrier_subdomains[c].front()].push_back(d);
          break;
        case CarrierClass::InterfaceEdge:
        case CarrierClass::InterfaceVertex:
          part.interface_dofs.push_back(d);
          for (int s : part.carrier_subdomains[c]) part.local_interface[s].push_back(d);
          break;
      }
    }
  }
  for (int c = 0; c < nc; ++c)
    if (part.carrier_class[c] == CarrierClass::InterfaceVertex) part.vertex_carriers.push_back(c);
  std::sort(part.interface_dofs.begin(), part.interface_dofs.end());
  for (auto& v : part.interior_dofs) std::sort(v.begin(), v.end());
  for (auto& v : part.local_interface) std::sort(v.begin(), v.end());

  // Gamma_ij polylines: mesh edges whose two cells live in distinct
  // subdomains, grouped by pair; member carriers are those shared by exactly
  // that pair and not promoted to vertices.
  std::map<std::pair<int, int>, SubdomainEdge> edge_map;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const MeshEdge& me = mesh.edges[e];
    if (me.cell_b < 0) continue;
    const int sa = part.cell_subdomain[me.cell_a];
    const int sb = part.cell_subdomain[me.cell_b];
    if (sa == sb) continue;
    const auto key = std::minmax(sa, sb);
    auto& entry = edge_map[key];
    entry.si = key.first;
    entry.sj = key.second;
    entry.mesh_edges.push_back(e);
  }
  part.edges.clear();
  for (auto& [key, entry] : edge_map) {
    std::set<int> carriers;
    for (int e : entry.mesh_edges) {
      const int cands[3] = {mesh.edges[e].v0, mesh.edges[e].v1, dofs.edge_carrier(e)};
      for (int c : cands) {
        if (part.carrier_class[c] != CarrierClass::InterfaceEdge) continue;
        const auto& subs = part.carrier_subdomains[c];
        if (subs.size() == 2 && subs[0] == key.first && subs[1] == key.second)
          carriers.insert(c);
      }
    }
    if (carriers.empty()) continue;
    entry.carriers.assign(carriers.begin(), carriers.end());
    // order along the polyline: sort by the projection onto the principal
    // direction of the carrier positions (deterministic for replay)
    Point2 mean{0, 0};
    for (int c : entry.carriers) mean = mean + dofs.carrier_pos[c];
    mean = mean * (1.0 / entry.carriers.size());
    double sxx = 0, sxy = 0, syy = 0;
    for (int c : entry.carriers) {
      const Point2 d = dofs.carrier_pos[c] - mean;
      sxx += d.x * d.x;
      sxy += d.x * d.y;
      syy += d.y * d.y;
    }
    const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    const Point2 dir{std::cos(theta), std::sin(theta)};
    std::stable_sort(entry.carriers.begin(), entry.carriers.end(), [&](int a, int b) {
      const double pa = dofs.carrier_pos[a].dot(dir), pb = dofs.carrier_pos[b].dot(dir);
      if (pa != pb) return pa < pb;
      const double qa = dofs.carrier_pos[a].cross(dir), qb = dofs.carrier_pos[b].cross(dir);
      if (qa != qb) return qa < qb;
      return a < b;
    });
    entry.dofs.clear();
    for (int c : entry.carriers) {
      entry.dofs.push_back(dofs.dof(0, c));
      entry.dofs.push_back(dofs.dof(1, c));
    }
    part.edges.push_back(std::move(entry));
  }
}

std::vector<SubdomainBlocks> subdomain_local_systems(const PolygonalMesh& mesh, const DofMap& dofs,
                                                     const std::vector<LocalElementMatrices>& elems,
                                                     const SubdomainPartition& part) {
  std::vector<SubdomainBlocks> blocks(part.N);
  for (int s = 0; s < part.N; ++s) {
    SubdomainBlocks& b = blocks[s];
    b.cells = part.cells_of[s];
    b.interior_dofs = part.interior_dofs[s];
    b.interface_dofs = part.local_interface[s];
    const int nI = static_cast<int>(b.interior_dofs.size());
    const int nG = static_cast<int>(b.interface_dofs.size());
    const int M = static_cast<int>(b.cells.size());

    // global dof id -> local index; interiors first, then interface
    std::map<int, int> lidx;
    for (int i = 0; i < nI; ++i) lidx[b.interior_dofs[i]] = i;
    for (int g = 0; g < nG; ++g) lidx[b.interface_dofs[g]] = nI + g;

    std::vector<Eigen::Triplet<double>> ta, traw;
    Eigen::VectorXd floc = Eigen::VectorXd::Zero(nI + nG);
    b.cell_areas.resize(M);
    b.area = 0.0;
    for (int lc = 0; lc < M; ++lc) {
      const auto& el = elems[b.cells[lc]];
      b.cell_areas[lc] = el.area;
      b.area += el.area;
      const int n = static_cast<int>(el.dofs.size());
      std::vector<int> loc(n, -1);
      for (int i = 0; i < n; ++i) {
        const auto it = lidx.find(el.dofs[i]);
        if (it != lidx.end()) loc[i] = it->second;
      }
      for (int i = 0; i < n; ++i) {
        if (loc[i] < 0) continue;
        floc(loc[i]) += el.f(i);
        if (el.B(i) != 0.0) traw.emplace_back(lc, loc[i], el.B(i));
        for (int j = 0; j < n; ++j)
          if (loc[j] >= 0 && el.A(i, j) != 0.0) ta.emplace_back(loc[i], loc[j], el.A(i, j));
      }
    }
    SpMat aloc(nI + nG, nI + nG);
    aloc.setFromTriplets(ta.begin(), ta.end());
    b.A_II = aloc.topLeftCorner(nI, nI);
    b.A_GI = aloc.bottomLeftCorner(nG, nI);
    b.A_GG = aloc.bottomRightCorner(nG, nG);
    b.f_I = floc.head(nI);
    b.f_G = floc.tail(nG);

    SpMat braw(M, nI + nG);
    braw.setFromTriplets(traw.begin(), traw.end());

    // pressure basis change: subdomain constant + zero-mean complement. The
    // constant row vanishes on interior columns (divergence theorem), so the
    // zero-mean correction touches only interface columns.
    Eigen::RowVectorXd q0 = Eigen::RowVectorXd::Zero(nI + nG);
    for (int k = 0; k < braw.outerSize(); ++k)
      for (SpMat::InnerIterator it(braw, k); it; ++it) q0(it.col()) += it.value();
    b.b0i_drop = (nI > 0) ? q0.head(nI).cwiseAbs().maxCoeff() : 0.0;
    if (b.b0i_drop > 1e-12)
      throw PartitionError("subdomain " + std::to_string(s) +
                           ": constant-pressure row does not vanish on interior dofs");
    b.B_0G = q0.tail(nG);

    std::vector<Eigen::Triplet<double>> tbi, tbg;
    for (int k = 0; k < braw.outerSize(); ++k)
      for (SpMat::InnerIterator it(braw, k); it; ++it) {
        const int j = static_cast<int>(it.row());
        if (j + 1 >= M) continue;
        if (it.col() < nI)
          tbi.emplace_back(j, it.col(), it.value());
        else
          tbg.emplace_back(j, static_cast<int>(it.col()) - nI, it.value());
      }
    for (int j = 0; j + 1 < M; ++j) {
      const double w = b.cell_areas[j] / b.area;
      for (int g = 0; g < nG; ++g)
        if (b.B_0G(g) != 0.0) tbg.emplace_back(j, g, -w * b.B_0G(g));
    }
    b.B_II.resize(std::max(0, M - 1), nI);
    b.B_II.setFromTriplets(tbi.begin(), tbi.end());
    b.B_IG.resize(std::max(0, M - 1), nG);
    b.B_IG.setFromTriplets(tbg.begin(), tbg.end());
  }
  return blocks;
}

std::string partition_dump(const SubdomainPartition& part) {
  std::ostringstream os;
  for (std::size_t c = 0; c < part.cell_subdomain.size(); ++c)
    os << c << ' ' << part.cell_subdomain[c] << '\n';
  return os.str();
}

std::string interface_dump(const DofMap& dofs, const SubdomainPartition& part) {
  static const char* names[] = {"dirichlet", "interior", "edge", "vertex"};
  std::ostringstream os;
  for (int comp = 0; comp < 2; ++comp)
    for (int c = 0; c < dofs.n_carriers; ++c)
      os << dofs.dof(comp, c) << ' ' << names[static_cast<int>(part.carrier_class[c])] << ' '
         << part.multiplicity(c) << '\n';
  return os.str();
}

}  // namespace vstokes
