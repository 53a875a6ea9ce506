#pragma once

#include <array>
#include <vector>

#include "palm/measure.hpp"

namespace palm {

// Measure-generalized Voronoi transport: each point x spreads unit mass
// uniformly over the smallest ball around x of psi-mass one. For a counting
// measure the territories are the classical Voronoi cells.
//
// All operations require psi total mass >= 1.

// sup{ s : psi(B(x, s)) <= 1 }; +inf when the cumulative mass never exceeds 1.
double voronoi_radius(const AtomicMeasure& psi, std::span<const double> x);

// Density value in [0,1] at (x, atom j): 1 strictly inside the radius, 0
// strictly outside, and on the boundary tie class the constant that makes the
// psi-integral equal one (1 when the radius is infinite).
double voronoi_density(const AtomicMeasure& psi, std::span<const double> x,
                       std::size_t center);

// All density values at once: interior/boundary/outside per atom.
std::vector<double> voronoi_density_row(const AtomicMeasure& psi,
                                        std::span<const double> x);

// Membership in the territory of atom j, via the open-ball test
// psi(B°(x, |x - xi_j|)) < 1; agrees with voronoi_density > 0.
bool in_territory(const AtomicMeasure& psi, std::span<const double> x,
                  std::size_t center);

struct TerritoryDiagnostics {
  bool star_shaped = true;
  bool bounded = true;
  double max_extent = 0.0;
  std::size_t rays = 0;
};

// Marches `ray_count` directions from the center (default 360 in d=2, 1000 in
// d=3, 2 in d=1) and checks that membership is a prefix of every ray. Extents
// are probed up to half the period on a torus, or `extent_limit` otherwise.
TerritoryDiagnostics territory_diagnostics(const AtomicMeasure& psi, std::size_t center,
                                           std::size_t ray_count = 0,
                                           double extent_limit = 0.0,
                                           std::size_t steps_per_ray = 512);

// Exact classical cell polygon for counting measures in d=2 (torus or window),
// for plotting. Vertices in order.
std::vector<std::array<double, 2>> classical_cell_polygon(const AtomicMeasure& psi,
                                                          std::size_t center,
                                                          double window_pad = 0.0);

}  // namespace palm
