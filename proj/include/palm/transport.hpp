#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "palm/solver.hpp"

namespace palm {

// --- profiles ---------------------------------------------------------------

// Mass a site sends within distance t (right-continuous, non-decreasing).
double g_profile(const ConstrainedDensity& f, std::size_t site, double t);
// Mass a center receives within distance t.
double h_profile(const ConstrainedDensity& f, std::size_t center, double t);

std::vector<double> row_sums(const ConstrainedDensity& f);  // g(inf) per site
std::vector<double> col_sums(const ConstrainedDensity& f);  // h(inf) per center

// Cumulative g per site tie class (aligned with the table's site shells);
// the natural grid for profile comparisons.
std::vector<double> g_shell_prefix(const ConstrainedDensity& f, std::size_t site);
std::vector<double> h_shell_prefix(const ConstrainedDensity& f, std::size_t center);

// --- constraint and balance checks -------------------------------------------

struct ConstraintViolationEntry {
  enum class Kind { cap, row, column, negative } kind;
  std::uint32_t site = 0, center = 0;  // row/column violations use one side
  double value = 0.0, bound = 0.0;
};

struct ValidationReport {
  std::vector<ConstraintViolationEntry> violations;  // listing capped at 1000
  std::size_t violation_count = 0;
  double max_excess = 0.0;
  bool ok() const { return violation_count == 0; }
};

// Tolerance 1e-9 * (1 + magnitude). Violations are data, not exceptions.
ValidationReport validate_constrained(const ConstrainedDensity& f);

struct BalanceReport {
  double max_row_deviation = 0.0;  // max |g(inf) - 1| over sites
  double max_col_deviation = 0.0;
  bool balanced(double tol) const {
    return max_row_deviation <= tol && max_col_deviation <= tol;
  }
};

BalanceReport check_balanced(const ConstrainedDensity& f);

// --- stability ----------------------------------------------------------------

enum class DesireReason { unsatisfied, farther_partner };

struct UnstablePair {
  std::uint32_t site = 0, center = 0;
  double distance = 0.0;
  DesireReason site_reason{}, center_reason{};
};

struct StabilityReport {
  std::vector<UnstablePair> unstable_pairs;  // listing capped at 1000
  std::size_t unstable_count = 0;
  double unexhausted_mass = 0.0;  // phi weight of sites with g(inf) < 1 - tol
  double unsated_mass = 0.0;      // psi weight of centers with h(inf) < 1 - tol
  double unexhausted_deficit = 0.0;  // sum of u*(1 - g(inf)) over those sites
  double unsated_deficit = 0.0;
  bool stable() const { return unstable_count == 0; }
};

// A site desires a center it could take more of (below cap) when it is
// unsatisfied or currently sends mass strictly farther; mirrored for centers;
// an unstable pair desires mutually. Strictness uses tolerance `tol` on f and
// the distance tie class, so exact spheres do not produce false pairs.
StabilityReport check_stable(const ConstrainedDensity& f, double tol = 1e-9);

// Max distance over pairs with f > tol, per site and per center (-inf if none).
struct SupportRadii {
  std::vector<double> site;
  std::vector<double> center;
};
SupportRadii support_radii(const ConstrainedDensity& f, double tol = 1e-9);

// Mutual-desire test for one (site, center) pair.
bool pair_unstable(const ConstrainedDensity& f, std::uint32_t site,
                   std::uint32_t center, double tol = 1e-9);

// --- exact identities ----------------------------------------------------------

// Total mass transported within distance t, accumulated from the site side and
// from the center side; a finite Fubini identity, equal to accumulation error.
std::pair<double, double> mass_transport_identity(const ConstrainedDensity& f, double t);

// T(S, B) = sum over S x B of u_i f(i,j) w_j.
double kernel_apply(const ConstrainedDensity& f, std::span<const std::uint32_t> sites,
                    std::span<const std::uint32_t> centers);

// --- comparison orderings as checks ----------------------------------------------

struct MonotonicityReport {
  std::size_t pointwise_violations = 0;  // f <= f_s where the site fully applies
  std::size_t g_violations = 0;          // g(f;nu) <= g(f_s;psi) at shell radii
  std::size_t h_violations = 0;          // h(f;mu) >= h(f_s;phi) at shell radii
  double max_violation = 0.0;
  bool ok() const { return pointwise_violations + g_violations + h_violations == 0; }
};

// f is a stable density for (mu, nu); f_s the site-optimal result for
// (phi, psi); requires mu >= phi and nu <= psi on identical atom positions.
// Generic position is assumed, not verified.
MonotonicityReport check_monotonicity(const ConstrainedDensity& f,
                                      const SolveResult& f_s, double tol = 1e-9);

struct UniquenessCertificate {
  bool certified = false;
  double max_g_deviation = 0.0;           // over sites and shell radii
  double max_shell_mass_deviation = 0.0;  // per (site, tie class) mass diff
};

// If the g-profiles of the site- and center-optimal densities agree for every
// site at every radius, every stable density coincides with them a.e.; the
// certificate also bounds the per-tie-class mass difference.
UniquenessCertificate uniqueness_certificate(const ConstrainedDensity& f_s,
                                             const ConstrainedDensity& f_c, double tol);

// --- allocations ----------------------------------------------------------------

struct Allocation {
  static constexpr std::int64_t kNone = -1;
  std::vector<std::int64_t> target;  // per site: center index or kNone
  double unassigned_mass = 0.0;      // phi weight mapped to kNone
};

// Requires psi to be a counting measure (unit weights) and f to be {0,1}-valued
// within tol; throws ContractViolation naming the offending atom or pair.
Allocation extract_allocation(const ConstrainedDensity& f, double tol = 1e-6);

struct AllocationStabilityReport {
  std::vector<UnstablePair> unstable_pairs;
  std::size_t unstable_count = 0;
  bool stable() const { return unstable_count == 0; }
};

// Site desires any strictly closer center than its match (or is unmatched);
// center desires a strictly closer site than its farthest pre-image (or is
// unsated).
AllocationStabilityReport check_stable_allocation(const Allocation& alloc,
                                                  const PairTable& table,
                                                  double tol = 1e-9);

}  // namespace palm
