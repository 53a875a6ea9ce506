#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "palm/geometry.hpp"

namespace palm {

struct Provenance {
  std::string kind = "explicit";  // explicit | grid | poisson | lattice | product | sum
  std::string note;
};

// A finite weighted atom set: exact counting measures, or grid discretizations
// of absolutely continuous measures. Immutable after construction.
//
// Invariants: all weights > 0; positions pairwise distinct (coincident input
// atoms are merged by summing weights); torus coordinates canonical.
class AtomicMeasure {
 public:
  AtomicMeasure(Geometry geom, std::vector<double> coords_flat,
                std::vector<double> weights, Provenance prov = {});

  const Geometry& geometry() const { return geom_; }
  std::size_t size() const { return weights_.size(); }
  int dim() const { return geom_.dimension; }

  std::span<const double> position(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim()),
            static_cast<std::size_t>(dim())};
  }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> coords_flat() const { return coords_; }

  double total_mass() const { return total_mass_; }
  double max_abs_coordinate() const { return max_abs_coord_; }

  // Tie class width for distances: 1e-9 * (1 + coordinate scale). On a torus
  // the scale is the period so the tolerance is translation invariant.
  double shell_epsilon() const;

  const Provenance& provenance() const { return prov_; }

 private:
  Geometry geom_;
  std::vector<double> coords_;
  std::vector<double> weights_;
  Provenance prov_;
  double total_mass_ = 0.0;
  double max_abs_coord_ = 0.0;
};

// --- constructors -----------------------------------------------------------

AtomicMeasure make_explicit(const Geometry& geom, std::vector<double> coords_flat,
                            std::vector<double> weights);

// One atom per cell center, weight = scale * cell volume. The window is a
// product of [lo_i, hi_i); in torus mode it defaults to the full period.
AtomicMeasure make_grid_lebesgue(const Geometry& geom,
                                 std::vector<std::pair<double, double>> window,
                                 std::vector<std::size_t> resolution, double scale,
                                 std::optional<std::uint64_t> jitter_seed = {});

// Atoms at offset + k * spacing per axis, fixed weight. On a torus the period
// must be an integer multiple of the spacing. translation_seed applies a
// uniform random shift in [0, spacing)^d; jitter_seed perturbs each atom by a
// uniform amount <= 1e-3 * spacing for generic-position instances.
AtomicMeasure make_lattice(const Geometry& geom, double spacing, double weight,
                           std::optional<std::uint64_t> translation_seed = {},
                           std::optional<std::uint64_t> jitter_seed = {},
                           std::vector<std::pair<double, double>> window = {});

// Poisson point process: atom count ~ Poisson(intensity * volume), positions
// uniform, unit weights.
AtomicMeasure make_poisson(const Geometry& geom, double intensity, std::uint64_t seed,
                           std::vector<std::pair<double, double>> window = {});

// Product measure of two lower-dimensional factors; dimensions add.
AtomicMeasure make_product(const AtomicMeasure& a, const AtomicMeasure& b,
                           const Geometry& joint);

// Superposition: atoms of both, coincident positions merged.
AtomicMeasure make_sum(const AtomicMeasure& a, const AtomicMeasure& b);

// The flow on measures: each atom p moves to p - v (canonicalized on a torus).
// Atom order and weights are preserved.
AtomicMeasure translate(const AtomicMeasure& m, std::span<const double> v);

// --- queries ----------------------------------------------------------------

enum class BallClosure { open, closed };

// Closed: weights of atoms with distance <= radius + shell tolerance.
// Open: distance < radius - shell tolerance (excluding the whole tie class).
double ball_mass(const AtomicMeasure& m, std::span<const double> center, double radius,
                 BallClosure closure);

// Distances from a query point grouped into tie classes ("shells"), with
// cumulative weights; makes closed-ball suprema exactly computable on atoms.
struct ShellIndex {
  std::vector<std::uint32_t> order;      // atom indices sorted by distance
  std::vector<std::uint64_t> shell_end;  // exclusive end into `order`, per shell
  std::vector<double> radius;            // per shell: max distance in the class
  std::vector<double> cum_weight;        // per shell: total weight through it

  std::size_t shell_count() const { return radius.size(); }
  std::pair<std::uint64_t, std::uint64_t> shell_range(std::size_t k) const {
    return {k == 0 ? 0 : shell_end[k - 1], shell_end[k]};
  }
  double shell_weight(std::size_t k) const {
    return cum_weight[k] - (k == 0 ? 0.0 : cum_weight[k - 1]);
  }
};

ShellIndex build_shells(const AtomicMeasure& m, std::span<const double> query);

}  // namespace palm
