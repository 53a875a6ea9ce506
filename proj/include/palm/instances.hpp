#pragma once

#include <string>
#include <vector>

#include "palm/solver.hpp"

namespace palm {

// Named reference instances with closed-form targets, runnable from the CLI
// (`example NAME`) and from the acceptance suite.
//
//   interval       equal Lebesgue measures on [0, alpha], Euclidean window
//   z-line         unit atoms on the integers vs. a fine grid, torus
//   z-cross-r      planar grid vs. lines carrying length measure, torus
//   square-kernel  the naive square kernel on the z-cross-r instance
//   z-plus-r       doubled grid vs. grid plus unit integer atoms, torus
//   half-lines     grid on (0, a] vs. grid on [-a, 0), Euclidean window

struct ExampleParams {
  double alpha = 2.0;          // interval only
  std::size_t resolution = 0;  // 0: per-example default
  double period = 0.0;         // 0: per-example default
  double tol = 0.0;            // solver tolerance; 0: per-example default
};

struct CheckLine {
  std::string label;
  bool pass = false;
  std::string detail;
};

struct ExampleOutcome {
  std::string name;
  bool pass = false;
  std::vector<CheckLine> checks;
  double seconds = 0.0;
};

std::vector<std::string> example_names();

ExampleOutcome run_example(const std::string& name, const ExampleParams& params = {});

// A cell "matches" a reference formula when the weighted L1 gap of its row is
// within `row_tol`; returns the matched fraction.
double matched_cell_fraction(const ConstrainedDensity& f,
                             const std::vector<double>& reference, double row_tol);

// Piecewise reference densities used by the named instances (over the pair
// universe of the given table, in pair-id order).
std::vector<double> nearest_integer_reference(const PairTable& table);   // z-line
std::vector<double> hexagon_reference(const PairTable& table);           // z-cross-r
std::vector<double> square_kernel_reference(const PairTable& table);     // square-kernel
std::vector<double> folded_interval_reference(const PairTable& table);   // z-plus-r
std::vector<double> block_pairing_reference(const PairTable& table);     // half-lines

}  // namespace palm
