#pragma once

#include <cstdint>
#include <vector>

#include "palm/rng.hpp"
#include "palm/solver.hpp"
#include "palm/transport.hpp"

namespace palm {

// One realization of a randomized extra-head draw. Forward: Y is a psi atom
// drawn from the density row at the site nearest the origin, so the shifted
// realization has an atom exactly at the origin. Reverse: Y is a phi site
// drawn from the density column at the center nearest the origin.
struct CouplingSample {
  std::uint32_t anchor_atom = 0;  // the atom nearest the origin driving the draw
  std::uint32_t chosen_atom = 0;  // atom whose position becomes Y
  std::vector<double> shift;      // Y
  AtomicMeasure shifted;          // theta_Y psi
};

// Draw Y from the row density f(i0, .) psi at the site i0 nearest the origin.
// Requires the row to sum to 1 within `tol` (a balanced density); otherwise
// throws ContractViolation naming the deficit.
CouplingSample sample_extra_head(const SolveResult& f_s, Rng& rng, double tol = 1e-6);

// The reverse draw: from the column density f(., j0) phi at the center nearest
// the origin; Y becomes a site position.
CouplingSample reverse_extra_head(const SolveResult& f_s, Rng& rng, double tol = 1e-6);

struct PalmSampleRecord {
  std::size_t index = 0;
  bool kept = false;
  std::vector<double> counts;  // per radius; empty when dropped
};

struct PalmStatistics {
  std::vector<double> radii;
  std::vector<double> mean_count;  // non-origin atoms of theta_Y psi in B(0, r)
  std::vector<double> std_error;
  std::size_t samples = 0;
  std::size_t dropped = 0;  // non-converged solves, skipped and counted
  bool origin_always_atom = true;  // shifted realization has an atom exactly at 0
  std::vector<PalmSampleRecord> per_sample;
};

struct SlivnyakOptions {
  double intensity = 1.0;
  double period = 10.0;
  int dimension = 2;
  std::size_t grid_resolution = 100;  // cells per axis for the phi grid
  std::size_t samples = 500;
  std::uint64_t seed = 1;
  std::vector<double> radii = {0.5, 1.0};
  // generous stage cap: boundary tie classes can take many cheap stages to
  // drain before the exact fixpoint is reached
  SolveOptions solve{1e-10, 500000, ConstraintMode::density_cap};
};

// Monte Carlo harness: per sample, draw a Poisson realization psi on the
// torus, rescale the phi grid to match its total mass exactly, solve the
// site-optimal density, draw an extra head, and count atoms of the shifted
// realization around the origin. Samples are independent with per-index
// derived seeds, so results do not depend on the parallel schedule.
PalmStatistics slivnyak_experiment(const SlivnyakOptions& opts);

// Independent check target: direct simulation of a Poisson realization plus
// an origin atom (its Palm version), bypassing transport entirely.
PalmStatistics poisson_plus_origin_reference(double intensity, double period,
                                             int dimension, std::size_t samples,
                                             std::uint64_t seed,
                                             const std::vector<double>& radii);

// phi-weighted mean of g(inf) and psi-weighted mean of h(inf) on a torus.
// With require_stable (the default) an unstable density is a contract
// violation; pass false to evaluate the plain averages of any density.
std::pair<double, double> spatial_averages(const ConstrainedDensity& f,
                                           double stability_tol = 1e-9,
                                           bool require_stable = true);

struct CouplingCasesReport {
  double lambda_phi = 0.0, lambda_psi = 0.0;
  double unexhausted_mass = 0.0;    // phi weight of unexhausted sites
  double unsated_mass = 0.0;        // psi weight of unsated centers
  double unexhausted_deficit = 0.0; // undelivered sending capacity
  double unsated_deficit = 0.0;     // undelivered receiving capacity
  double predicted_deficit = 0.0;   // |mass gap|, from mass conservation
};

// Desk form of the intensity trichotomy: the side with the larger intensity
// carries a deficit equal to the mass gap; the other side's deficit vanishes.
CouplingCasesReport coupling_cases_check(const ConstrainedDensity& f, double tol = 1e-6);

}  // namespace palm
