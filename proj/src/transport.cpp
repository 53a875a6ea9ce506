#include "palm/transport.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>

#include "palm/parallel.hpp"

namespace palm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kListingCap = 1000;
}  // namespace

double g_profile(const ConstrainedDensity& f, std::size_t site, double t) {
  if (t < 0.0) throw ContractViolation("g_profile: t must be >= 0");
  const PairTable& tb = *f.table;
  const double eps = tb.epsilon();
  auto [b, e] = tb.row_range(site);
  double sum = 0.0;
  for (std::uint64_t p = b; p < e; ++p) {
    if (tb.pair_distance(p) > t + eps) break;
    sum += f.f[p] * tb.psi().weight(tb.pair_center(p));
  }
  return sum;
}

double h_profile(const ConstrainedDensity& f, std::size_t center, double t) {
  if (t < 0.0) throw ContractViolation("h_profile: t must be >= 0");
  const PairTable& tb = *f.table;
  const double eps = tb.epsilon();
  auto [b, e] = tb.col_range(center);
  double sum = 0.0;
  for (std::uint64_t idx = b; idx < e; ++idx) {
    const std::uint32_t p = tb.col_pair(idx);
    if (tb.pair_distance(p) > t + eps) break;
    sum += f.f[p] * tb.phi().weight(tb.pair_site(p));
  }
  return sum;
}

std::vector<double> row_sums(const ConstrainedDensity& f) {
  const PairTable& tb = *f.table;
  std::vector<double> out(tb.sites(), 0.0);
  parallel_for(tb.sites(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      auto [b, e] = tb.row_range(i);
      double sum = 0.0;
      for (std::uint64_t p = b; p < e; ++p)
        sum += f.f[p] * tb.psi().weight(tb.pair_center(p));
      out[i] = sum;
    }
  });
  return out;
}

std::vector<double> col_sums(const ConstrainedDensity& f) {
  const PairTable& tb = *f.table;
  std::vector<double> out(tb.centers(), 0.0);
  parallel_for(tb.centers(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      auto [b, e] = tb.col_range(j);
      double sum = 0.0;
      for (std::uint64_t idx = b; idx < e; ++idx) {
        const std::uint32_t p = tb.col_pair(idx);
        sum += f.f[p] * tb.phi().weight(tb.pair_site(p));
      }
      out[j] = sum;
    }
  });
  return out;
}

std::vector<double> g_shell_prefix(const ConstrainedDensity& f, std::size_t site) {
  const PairTable& tb = *f.table;
  std::vector<double> out(tb.site_shell_count(site), 0.0);
  double cum = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto [b, e] = tb.site_shell_range(site, k);
    for (std::uint64_t p = b; p < e; ++p)
      cum += f.f[p] * tb.psi().weight(tb.pair_center(p));
    out[k] = cum;
  }
  return out;
}

std::vector<double> h_shell_prefix(const ConstrainedDensity& f, std::size_t center) {
  const PairTable& tb = *f.table;
  std::vector<double> out(tb.center_shell_count(center), 0.0);
  double cum = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto [b, e] = tb.center_shell_range(center, k);
    for (std::uint64_t idx = b; idx < e; ++idx) {
      const std::uint32_t p = tb.col_pair(idx);
      cum += f.f[p] * tb.phi().weight(tb.pair_site(p));
    }
    out[k] = cum;
  }
  return out;
}

ValidationReport validate_constrained(const ConstrainedDensity& f) {
  const PairTable& tb = *f.table;
  ValidationReport rep;
  auto tol = [](double magnitude) { return 1e-9 * (1.0 + std::fabs(magnitude)); };

  auto note = [&](ConstraintViolationEntry v, double excess) {
    ++rep.violation_count;
    rep.max_excess = std::max(rep.max_excess, excess);
    if (rep.violations.size() < kListingCap) rep.violations.push_back(v);
  };

  for (std::size_t p = 0; p < tb.pairs(); ++p) {
    const double cap = f.cap(p);
    if (f.f[p] > cap + tol(cap))
      note({ConstraintViolationEntry::Kind::cap, tb.pair_site(p), tb.pair_center(p),
            f.f[p], cap},
           f.f[p] - cap);
    if (f.f[p] < -tol(0.0))
      note({ConstraintViolationEntry::Kind::negative, tb.pair_site(p),
            tb.pair_center(p), f.f[p], 0.0},
           -f.f[p]);
  }
  auto rows = row_sums(f);
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i] > 1.0 + tol(1.0))
      note({ConstraintViolationEntry::Kind::row, static_cast<std::uint32_t>(i), 0,
            rows[i], 1.0},
           rows[i] - 1.0);
  auto cols = col_sums(f);
  for (std::size_t j = 0; j < cols.size(); ++j)
    if (cols[j] > 1.0 + tol(1.0))
      note({ConstraintViolationEntry::Kind::column, 0, static_cast<std::uint32_t>(j),
            cols[j], 1.0},
           cols[j] - 1.0);
  return rep;
}

BalanceReport check_balanced(const ConstrainedDensity& f) {
  BalanceReport rep;
  for (double g : row_sums(f))
    rep.max_row_deviation = std::max(rep.max_row_deviation, std::fabs(g - 1.0));
  for (double h : col_sums(f))
    rep.max_col_deviation = std::max(rep.max_col_deviation, std::fabs(h - 1.0));
  return rep;
}

SupportRadii support_radii(const ConstrainedDensity& f, double tol) {
  const PairTable& tb = *f.table;
  SupportRadii sr;
  sr.site.assign(tb.sites(), -kInf);
  sr.center.assign(tb.centers(), -kInf);
  for (std::size_t p = 0; p < tb.pairs(); ++p) {
    if (f.f[p] <= tol) continue;
    const double d = tb.pair_distance(p);
    sr.site[tb.pair_site(p)] = std::max(sr.site[tb.pair_site(p)], d);
    sr.center[tb.pair_center(p)] = std::max(sr.center[tb.pair_center(p)], d);
  }
  return sr;
}

StabilityReport check_stable(const ConstrainedDensity& f, double tol) {
  const PairTable& tb = *f.table;
  const double eps = tb.epsilon();
  StabilityReport rep;

  auto rows = row_sums(f);
  auto cols = col_sums(f);
  auto sr = support_radii(f, tol);

  for (std::size_t i = 0; i < tb.sites(); ++i)
    if (rows[i] < 1.0 - tol) {
      rep.unexhausted_mass += tb.phi().weight(i);
      rep.unexhausted_deficit += tb.phi().weight(i) * (1.0 - rows[i]);
    }
  for (std::size_t j = 0; j < tb.centers(); ++j)
    if (cols[j] < 1.0 - tol) {
      rep.unsated_mass += tb.psi().weight(j);
      rep.unsated_deficit += tb.psi().weight(j) * (1.0 - cols[j]);
    }

  // per-chunk results keyed by the chunk's start offset, so the listing and
  // count never depend on thread scheduling
  std::atomic<std::size_t> count{0};
  std::mutex listing_mutex;
  std::vector<std::pair<std::size_t, std::vector<UnstablePair>>> chunks;
  parallel_for(tb.pairs(), [&](std::size_t lo, std::size_t hi) {
    std::vector<UnstablePair> local;
    for (std::size_t p = lo; p < hi; ++p) {
      const double cap = f.cap(p);
      if (f.f[p] >= cap - tol) continue;  // neither side can take more
      const std::uint32_t i = tb.pair_site(p);
      const std::uint32_t j = tb.pair_center(p);
      const double d = tb.pair_distance(p);

      bool site_unsat = rows[i] < 1.0 - tol;
      bool site_farther = sr.site[i] > d + eps;
      if (!site_unsat && !site_farther) continue;
      bool center_unsat = cols[j] < 1.0 - tol;
      bool center_farther = sr.center[j] > d + eps;
      if (!center_unsat && !center_farther) continue;

      count.fetch_add(1, std::memory_order_relaxed);
      if (local.size() < kListingCap)
        local.push_back(
            {i, j, d,
             site_unsat ? DesireReason::unsatisfied : DesireReason::farther_partner,
             center_unsat ? DesireReason::unsatisfied : DesireReason::farther_partner});
    }
    std::lock_guard<std::mutex> lock(listing_mutex);
    chunks.push_back({lo, std::move(local)});
  });
  rep.unstable_count = count.load();
  std::sort(chunks.begin(), chunks.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [lo, local] : chunks)
    for (auto& pair : local)
      if (rep.unstable_pairs.size() < kListingCap)
        rep.unstable_pairs.push_back(pair);
  return rep;
}

bool pair_unstable(const ConstrainedDensity& f, std::uint32_t site,
                   std::uint32_t center, double tol) {
  const PairTable& tb = *f.table;
  const double eps = tb.epsilon();
  const std::size_t p = tb.find_pair(site, center);
  if (f.f[p] >= f.cap(p) - tol) return false;
  const double d = tb.pair_distance(p);
  const double row = g_profile(f, site, std::numeric_limits<double>::infinity());
  const double col = h_profile(f, center, std::numeric_limits<double>::infinity());
  auto sr = support_radii(f, tol);
  const bool site_desires = row < 1.0 - tol || sr.site[site] > d + eps;
  const bool center_desires = col < 1.0 - tol || sr.center[center] > d + eps;
  return site_desires && center_desires;
}

std::pair<double, double> mass_transport_identity(const ConstrainedDensity& f,
                                                  double t) {
  const PairTable& tb = *f.table;
  const double eps = tb.epsilon();
  double site_side = 0.0, center_side = 0.0;
  for (std::size_t i = 0; i < tb.sites(); ++i) {
    auto [b, e] = tb.row_range(i);
    double sum = 0.0;
    for (std::uint64_t p = b; p < e; ++p) {
      if (tb.pair_distance(p) > t + eps) break;
      sum += f.f[p] * tb.psi().weight(tb.pair_center(p));
    }
    site_side += tb.phi().weight(i) * sum;
  }
  for (std::size_t j = 0; j < tb.centers(); ++j) {
    auto [b, e] = tb.col_range(j);
    double sum = 0.0;
    for (std::uint64_t idx = b; idx < e; ++idx) {
      const std::uint32_t p = tb.col_pair(idx);
      if (tb.pair_distance(p) > t + eps) break;
      sum += f.f[p] * tb.phi().weight(tb.pair_site(p));
    }
    center_side += tb.psi().weight(j) * sum;
  }
  return {site_side, center_side};
}

double kernel_apply(const ConstrainedDensity& f, std::span<const std::uint32_t> sites,
                    std::span<const std::uint32_t> centers) {
  const PairTable& tb = *f.table;
  std::vector<char> in_b(tb.centers(), 0);
  for (std::uint32_t j : centers) in_b[j] = 1;
  double total = 0.0;
  for (std::uint32_t i : sites) {
    auto [b, e] = tb.row_range(i);
    double sum = 0.0;
    for (std::uint64_t p = b; p < e; ++p)
      if (in_b[tb.pair_center(p)])
        sum += f.f[p] * tb.psi().weight(tb.pair_center(p));
    total += tb.phi().weight(i) * sum;
  }
  return total;
}

MonotonicityReport check_monotonicity(const ConstrainedDensity& f,
                                      const SolveResult& f_s, double tol) {
  const PairTable& small = *f.table;      // (mu, nu)
  const PairTable& big = *f_s.density.table;  // (phi, psi)
  if (small.sites() != big.sites() || small.centers() != big.centers())
    throw ContractViolation("monotonicity: atom counts differ");
  // identical positions, ordered weights: mu >= phi, nu <= psi
  for (std::size_t i = 0; i < big.sites(); ++i) {
    auto a = small.phi().position(i);
    auto b = big.phi().position(i);
    if (!std::equal(a.begin(), a.end(), b.begin()))
      throw ContractViolation("monotonicity: site positions differ");
    if (small.phi().weight(i) < big.phi().weight(i) - 1e-12)
      throw ContractViolation("monotonicity: mu >= phi fails at a site");
  }
  for (std::size_t j = 0; j < big.centers(); ++j) {
    auto a = small.psi().position(j);
    auto b = big.psi().position(j);
    if (!std::equal(a.begin(), a.end(), b.begin()))
      throw ContractViolation("monotonicity: center positions differ");
    if (small.psi().weight(j) > big.psi().weight(j) + 1e-12)
      throw ContractViolation("monotonicity: nu <= psi fails at a center");
  }
  if (f_s.role_swap)
    throw ContractViolation("monotonicity: f_s must come from the site-optimal run");

  MonotonicityReport rep;
  // identical positions give identical pair ordering in both tables
  for (std::size_t p = 0; p < big.pairs(); ++p) {
    if (!f_s.fully_applied(p)) continue;
    const double diff = f.f[p] - f_s.density.f[p];
    if (diff > tol) {
      ++rep.pointwise_violations;
      rep.max_violation = std::max(rep.max_violation, diff);
    }
  }
  for (std::size_t i = 0; i < big.sites(); ++i) {
    auto gs = g_shell_prefix(f_s.density, i);
    auto gf = g_shell_prefix(f, i);
    for (std::size_t k = 0; k < gs.size(); ++k) {
      const double diff = gf[k] - gs[k];
      if (diff > tol) {
        ++rep.g_violations;
        rep.max_violation = std::max(rep.max_violation, diff);
      }
    }
  }
  for (std::size_t j = 0; j < big.centers(); ++j) {
    auto hs = h_shell_prefix(f_s.density, j);
    auto hf = h_shell_prefix(f, j);
    for (std::size_t k = 0; k < hs.size(); ++k) {
      const double diff = hs[k] - hf[k];
      if (diff > tol) {
        ++rep.h_violations;
        rep.max_violation = std::max(rep.max_violation, diff);
      }
    }
  }
  return rep;
}

UniquenessCertificate uniqueness_certificate(const ConstrainedDensity& f_s,
                                             const ConstrainedDensity& f_c,
                                             double tol) {
  if (f_s.table != f_c.table)
    throw ContractViolation("uniqueness: densities must share a pair table");
  const PairTable& tb = *f_s.table;
  UniquenessCertificate cert;
  for (std::size_t i = 0; i < tb.sites(); ++i) {
    auto gs = g_shell_prefix(f_s, i);
    auto gc = g_shell_prefix(f_c, i);
    double prev_s = 0.0, prev_c = 0.0;
    for (std::size_t k = 0; k < gs.size(); ++k) {
      cert.max_g_deviation = std::max(cert.max_g_deviation, std::fabs(gs[k] - gc[k]));
      const double shell_s = gs[k] - prev_s;
      const double shell_c = gc[k] - prev_c;
      cert.max_shell_mass_deviation =
          std::max(cert.max_shell_mass_deviation, std::fabs(shell_s - shell_c));
      prev_s = gs[k];
      prev_c = gc[k];
    }
  }
  cert.certified = cert.max_g_deviation <= tol;
  return cert;
}

Allocation extract_allocation(const ConstrainedDensity& f, double tol) {
  const PairTable& tb = *f.table;
  for (std::size_t j = 0; j < tb.centers(); ++j)
    if (std::fabs(tb.psi().weight(j) - 1.0) > tol)
      throw ContractViolation("extract_allocation: psi is not a counting measure (atom " +
                              std::to_string(j) + " has weight " +
                              std::to_string(tb.psi().weight(j)) + ")");
  Allocation alloc;
  alloc.target.assign(tb.sites(), Allocation::kNone);
  for (std::size_t p = 0; p < tb.pairs(); ++p) {
    const double v = f.f[p];
    if (v > tol && v < 1.0 - tol)
      throw ContractViolation(
          "extract_allocation: density is not {0,1}-valued at pair (" +
          std::to_string(tb.pair_site(p)) + ", " + std::to_string(tb.pair_center(p)) +
          "): f = " + std::to_string(v));
    if (v >= 1.0 - tol) {
      auto& slot = alloc.target[tb.pair_site(p)];
      if (slot != Allocation::kNone)
        throw ContractViolation("extract_allocation: site " +
                                std::to_string(tb.pair_site(p)) +
                                " has two full assignments");
      slot = tb.pair_center(p);
    }
  }
  for (std::size_t i = 0; i < tb.sites(); ++i)
    if (alloc.target[i] == Allocation::kNone)
      alloc.unassigned_mass += tb.phi().weight(i);
  return alloc;
}

AllocationStabilityReport check_stable_allocation(const Allocation& alloc,
                                                  const PairTable& tb, double tol) {
  const double eps = tb.epsilon();
  if (alloc.target.size() != tb.sites())
    throw ContractViolation("allocation/table size mismatch");

  // per-site distance to the current match; per-center load and farthest
  // pre-image distance
  std::vector<double> match_dist(tb.sites(), kInf);
  std::vector<double> load(tb.centers(), 0.0);
  std::vector<double> farthest(tb.centers(), -kInf);
  for (std::size_t i = 0; i < tb.sites(); ++i) {
    const std::int64_t j = alloc.target[i];
    if (j == Allocation::kNone) continue;
    const std::size_t p = tb.find_pair(static_cast<std::uint32_t>(i),
                                       static_cast<std::uint32_t>(j));
    match_dist[i] = tb.pair_distance(p);
    load[j] += tb.phi().weight(i);
    farthest[j] = std::max(farthest[j], match_dist[i]);
  }

  AllocationStabilityReport rep;
  for (std::size_t p = 0; p < tb.pairs(); ++p) {
    const std::uint32_t i = tb.pair_site(p);
    const std::uint32_t j = tb.pair_center(p);
    if (alloc.target[i] == static_cast<std::int64_t>(j)) continue;
    const double d = tb.pair_distance(p);

    bool site_unmatched = alloc.target[i] == Allocation::kNone;
    bool site_closer = d < match_dist[i] - eps;
    if (!site_unmatched && !site_closer) continue;
    bool center_unsated = load[j] < tb.psi().weight(j) - tol;
    bool center_farther = farthest[j] > d + eps;
    if (!center_unsated && !center_farther) continue;

    ++rep.unstable_count;
    if (rep.unstable_pairs.size() < kListingCap)
      rep.unstable_pairs.push_back(
          {i, j, d,
           site_unmatched ? DesireReason::unsatisfied : DesireReason::farther_partner,
           center_unsated ? DesireReason::unsatisfied : DesireReason::farther_partner});
  }
  return rep;
}

}  // namespace palm
