#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace palm {

// Bad user input (instance specs, file contents).
class SpecError : public std::runtime_error {
 public:
  explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

// A broken precondition between library components.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

enum class GeomMode { euclidean, torus };

// Metric context: Euclidean R^d or a flat torus with per-axis periods.
// Immutable after construction; all operations are pure.
struct Geometry {
  GeomMode mode = GeomMode::euclidean;
  int dimension = 1;
  std::vector<double> period;  // torus mode only, one entry per axis

  static Geometry euclidean(int d);
  static Geometry torus(std::vector<double> period);

  bool is_torus() const { return mode == GeomMode::torus; }

  // Torus points are stored canonically in [0, period_i).
  void canonicalize(std::span<double> p) const;

  double distance(std::span<const double> p, std::span<const double> q) const;
  double squared_distance(std::span<const double> p, std::span<const double> q) const;

  // Relative scale used for tie tolerances. Torus: max period (translation
  // invariant). Euclidean: caller supplies the coordinate magnitude.
  double coordinate_scale(double max_abs_coord = 0.0) const;

  bool operator==(const Geometry& other) const = default;
};

struct HullBallResult {
  bool inside = false;
  std::string method;  // "interval", "hull-2d", "hull-3d", "sampling"
};

// True iff the closed ball B(a, r) lies in the interior of conv(points).
// Exact for d <= 3 via hull facets; direction sampling beyond that.
// Euclidean mode only.
HullBallResult ball_in_hull_interior(const Geometry& geom,
                                     std::span<const double> points_flat,
                                     std::size_t count, std::span<const double> a,
                                     double r, std::size_t sample_directions = 20000);

}  // namespace palm
