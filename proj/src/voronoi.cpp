#include "vstokes/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vstokes {
namespace {

const std::vector<Point2> kUnitSquare = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};

// Clip the cell of seed s against the bisector with seed t, keeping the side
// of s. Halfplane: (p - m).(t - s) <= 0 with m the midpoint.
std::vector<Point2> clip_bisector(const std::vector<Point2>& poly, const Point2& s,
                                  const Point2& t) {
  const Point2 m = (s + t) * 0.5;
  const Point2 n = t - s;
  return clip_halfplane(poly, m, n);
}

double max_dist_to_vertices(const Point2& s, const std::vector<Point2>& poly) {
  double r = 0.0;
  for (const Point2& p : poly) r = std::max(r, distance(s, p));
  return r;
}

struct BucketGrid {
  int nb;
  double cell;
  std::vector<std::vector<int>> buckets;

  explicit BucketGrid(const std::vector<Point2>& seeds) {
    nb = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(seeds.size()))));
    cell = 1.0 / nb;
    buckets.assign(static_cast<std::size_t>(nb) * nb, {});
    for (int i = 0; i < static_cast<int>(seeds.size()); ++i) buckets[index_of(seeds[i])].push_back(i);
  }

  int clampi(int v) const { return std::min(nb - 1, std::max(0, v)); }

  std::size_t index_of(const Point2& p) const {
    const int ix = clampi(static_cast<int>(std::floor(p.x / cell)));
    const int iy = clampi(static_cast<int>(std::floor(p.y / cell)));
    return static_cast<std::size_t>(iy) * nb + ix;
  }

  // Collect seed ids within the ring of bucket-distance `ring` around p.
  void ring_candidates(const Point2& p, int ring, std::vector<int>& out) const {
    const int cx = clampi(static_cast<int>(std::floor(p.x / cell)));
    const int cy = clampi(static_cast<int>(std::floor(p.y / cell)));
    for (int iy = cy - ring; iy <= cy + ring; ++iy) {
      if (iy < 0 || iy >= nb) continue;
      for (int ix = cx - ring; ix <= cx + ring; ++ix) {
        if (ix < 0 || ix >= nb) continue;
        if (std::max(std::abs(ix - cx), std::abs(iy - cy)) != ring) continue;
        const auto& b = buckets[static_cast<std::size_t>(iy) * nb + ix];
        out.insert(out.end(), b.begin(), b.end());
      }
    }
  }
};

}  // namespace

std::vector<std::vector<Point2>> clipped_voronoi(const std::vector<Point2>& seeds) {
  const int ns = static_cast<int>(seeds.size());
  std::vector<std::vector<Point2>> cells(ns);
  BucketGrid grid(seeds);
  std::vector<int> cand;
  std::vector<std::pair<double, int>> ordered;
  for (int i = 0; i < ns; ++i) {
    std::vector<Point2> poly = kUnitSquare;
    double radius = max_dist_to_vertices(seeds[i], poly);
    const int max_ring = 2 * grid.nb;
    for (int ring = 0; ring <= max_ring && !poly.empty(); ++ring) {
      // Seeds in this ring are at least (ring-1)*cell away; once that exceeds
      // the 2R security radius no further seed can cut the cell.
      if (ring > 1 && (ring - 1) * grid.cell > 2.0 * radius) break;
      cand.clear();
      grid.ring_candidates(seeds[i], ring, cand);
      if (cand.empty()) continue;
      ordered.clear();
      for (int j : cand)
        if (j != i) ordered.push_back({distance(seeds[i], seeds[j]), j});
      std::sort(ordered.begin(), ordered.end());
      for (const auto& [d, j] : ordered) {
        if (d > 2.0 * radius) break;
        poly = clip_bisector(poly, seeds[i], seeds[j]);
        if (poly.empty()) break;
        radius = max_dist_to_vertices(seeds[i], poly);
      }
    }
    cells[i] = std::move(poly);
  }
  return cells;
}

std::vector<std::vector<Point2>> clipped_voronoi_bruteforce(const std::vector<Point2>& seeds) {
  const int ns = static_cast<int>(seeds.size());
  std::vector<std::vector<Point2>> cells(ns);
  for (int i = 0; i < ns; ++i) {
    std::vector<Point2> poly = kUnitSquare;
    for (int j = 0; j < ns && !poly.empty(); ++j) {
      if (j == i) continue;
      poly = clip_bisector(poly, seeds[i], seeds[j]);
    }
    cells[i] = std::move(poly);
  }
  return cells;
}

namespace {

// splitmix64: fixed-output generator independent of the standard library.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform01() { return (next() >> 11) * 0x1.0p-53; }
};

}  // namespace

std::vector<Point2> random_seeds(int count, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Point2> s(count);
  for (auto& p : s) {
    p.x = rng.uniform01();
    p.y = rng.uniform01();
  }
  return s;
}

std::vector<Point2> lloyd_relax(std::vector<Point2> seeds, int iters) {
  if (iters < 0) throw std::invalid_argument("lloyd_relax: iters must be >= 0");
  const double dup_tol = 1e-12;
  const int retry_budget = 16;
  SplitMix64 perturb(0x51a7ed5eedULL);
  for (int attempt = 0;; ++attempt) {
    std::vector<Point2> sorted = seeds;
    std::sort(sorted.begin(), sorted.end(),
              [](const Point2& a, const Point2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    bool dup = false;
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (distance(sorted[i - 1], sorted[i]) < dup_tol) dup = true;
    if (!dup) break;
    if (attempt >= retry_budget)
      throw std::runtime_error("lloyd_relax: duplicate seeds persist after perturb retries");
    for (auto& p : seeds) {
      p.x = std::min(1.0, std::max(0.0, p.x + (perturb.uniform01() - 0.5) * 1e-9));
      p.y = std::min(1.0, std::max(0.0, p.y + (perturb.uniform01() - 0.5) * 1e-9));
    }
  }
  for (int it = 0; it < iters; ++it) {
    const auto cells = clipped_voronoi(seeds);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      if (cells[i].size() >= 3) seeds[i] = polygon_centroid(cells[i]);
    }
  }
  return seeds;
}

std::vector<Point2> cvt_seeds(int n, std::uint64_t seed, int lloyd_iters) {
  return lloyd_relax(random_seeds(n * n, seed), lloyd_iters);
}

std::vector<Point2> hex_lattice_seeds(int n) {
  // Spacing chosen so each lattice cell has area ~1/n^2.
  const double a = std::sqrt(2.0 / std::sqrt(3.0)) / n;
  const double dy = a * std::sqrt(3.0) / 2.0;
  std::vector<Point2> seeds;
  const int jmax = static_cast<int>(std::ceil(1.0 / dy)) + 2;
  const int imax = static_cast<int>(std::ceil(1.0 / a)) + 2;
  for (int j = -2; j <= jmax; ++j) {
    const double y = j * dy;
    const double xoff = (j % 2 == 0) ? 0.0 : 0.5 * a;
    for (int i = -2; i <= imax; ++i) {
      seeds.push_back({i * a + xoff, y});
    }
  }
  return seeds;
}

}  // namespace vstokes
