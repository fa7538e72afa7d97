#pragma once

#include <cstdint>
#include <vector>

#include "vstokes/geometry.hpp"

namespace vstokes {

// Voronoi cells of the given seeds clipped to the unit square. Cells are
// returned in seed order; a cell may be empty if its seed lies far outside.
// Uses a bucket grid with the 2R security-radius cutoff, so cost is near
// linear in the number of seeds.
std::vector<std::vector<Point2>> clipped_voronoi(const std::vector<Point2>& seeds);

// Brute-force variant clipping every cell against all other seeds. Quadratic;
// kept as an independent check of the pruned construction.
std::vector<std::vector<Point2>> clipped_voronoi_bruteforce(const std::vector<Point2>& seeds);

// count uniformly random seeds in the unit square from a splitmix-style
// generator; deterministic across platforms for a given seed.
std::vector<Point2> random_seeds(int count, std::uint64_t seed);

// Lloyd relaxation: move each seed to the centroid of its clipped Voronoi
// cell, iters times. Duplicate seeds are perturbed and retried up to a fixed
// budget before failing.
std::vector<Point2> lloyd_relax(std::vector<Point2> seeds, int iters);

// Seeds of the CVT family after relaxation: n*n random seeds, lloyd_iters sweeps.
std::vector<Point2> cvt_seeds(int n, std::uint64_t seed, int lloyd_iters);

// Triangular lattice covering the square with ~n^2 Voronoi cells (regular
// hexagons away from the boundary).
std::vector<Point2> hex_lattice_seeds(int n);

}  // namespace vstokes
