#include "palm/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "palm/parallel.hpp"

namespace palm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// max-reduction buffer shared by parallel chunks; combined after join
struct MaxSlots {
  explicit MaxSlots(std::size_t n) : slots(n, 0.0) {}
  std::vector<double> slots;
  double combined() const {
    double m = 0.0;
    for (double v : slots) m = std::max(m, v);
    return m;
  }
};
}  // namespace

GaleShapleySolver::GaleShapleySolver(std::shared_ptr<const PairTable> table,
                                     SolveOptions opts, bool swap_roles)
    : table_(std::move(table)), opts_(opts), swap_(swap_roles) {
  if (!(opts_.convergence_tol > 0.0))
    throw ContractViolation("convergence tolerance must be > 0");
  const std::size_t P = table_->pairs();
  A_.assign(P, 0.0);
  R_.assign(P, 0.0);
  prop_shell_.assign(proposer_count(), kNoShell);
  prop_blend_.assign(proposer_count(), 1.0);
  prop_radius_.assign(proposer_count(), kInf);
  resp_shell_.assign(responder_count(), kNoShell);
  resp_blend_.assign(responder_count(), 0.0);
  resp_radius_.assign(responder_count(), kInf);
  prop_dirty_ = std::make_unique<std::atomic<std::uint8_t>[]>(proposer_count());
  resp_dirty_ = std::make_unique<std::atomic<std::uint8_t>[]>(responder_count());
  for (std::size_t q = 0; q < proposer_count(); ++q) prop_dirty_[q] = 1;
  for (std::size_t s = 0; s < responder_count(); ++s) resp_dirty_[s] = 0;
}

void GaleShapleySolver::application_step() {
  const PairTable& t = *table_;
  const std::size_t N = proposer_count();
  const unsigned workers = thread_cap();
  MaxSlots delta(workers);

  std::atomic<unsigned> next_slot{0};
  parallel_for(N, [&](std::size_t lo, std::size_t hi) {
    const unsigned slot = next_slot.fetch_add(1);
    double local_max = 0.0;
    for (std::size_t q = lo; q < hi; ++q) {
      if (!prop_dirty_[q].load(std::memory_order_relaxed)) continue;
      prop_dirty_[q].store(0, std::memory_order_relaxed);
      const std::size_t shells =
          swap_ ? t.center_shell_count(q) : t.site_shell_count(q);
      auto pair_at = [&](std::uint64_t idx) -> std::uint32_t {
        return swap_ ? t.col_pair(idx) : static_cast<std::uint32_t>(idx);
      };
      auto responder_of = [&](std::uint32_t p) -> std::uint32_t {
        return swap_ ? t.pair_site(p) : t.pair_center(p);
      };

      // application radius: first tie class where the cumulative unrejected
      // mass exceeds one
      double cum = 0.0;
      std::uint32_t boundary = kNoShell;
      double blend = 1.0;
      for (std::size_t k = 0; k < shells; ++k) {
        auto [b, e] = swap_ ? t.center_shell_range(q, k) : t.site_shell_range(q, k);
        double res = 0.0;
        for (std::uint64_t idx = b; idx < e; ++idx) {
          const std::uint32_t p = pair_at(idx);
          res += (pair_cap(p) - R_[p]) * application_weight(p);
        }
        if (cum + res > 1.0) {
          boundary = static_cast<std::uint32_t>(k);
          blend = 1.0 - (1.0 - cum) / res;
          break;
        }
        cum += res;
      }
      prop_shell_[q] = boundary;
      prop_blend_[q] = blend;
      prop_radius_[q] =
          boundary == kNoShell
              ? kInf
              : (swap_ ? t.center_shell_radius(q, boundary)
                       : t.site_shell_radius(q, boundary));

      const std::size_t last_interior =
          boundary == kNoShell ? shells : static_cast<std::size_t>(boundary);
      for (std::size_t k = 0; k < last_interior; ++k) {
        auto [b, e] = swap_ ? t.center_shell_range(q, k) : t.site_shell_range(q, k);
        for (std::uint64_t idx = b; idx < e; ++idx) {
          const std::uint32_t p = pair_at(idx);
          const double nv = pair_cap(p);
          if (nv != A_[p]) {
            local_max = std::max(local_max, nv - A_[p]);
            A_[p] = nv;
            resp_dirty_[responder_of(p)].store(1, std::memory_order_relaxed);
          }
        }
      }
      if (boundary != kNoShell) {
        auto [b, e] = swap_ ? t.center_shell_range(q, boundary)
                            : t.site_shell_range(q, boundary);
        for (std::uint64_t idx = b; idx < e; ++idx) {
          const std::uint32_t p = pair_at(idx);
          const double nv = blend * R_[p] + (1.0 - blend) * pair_cap(p);
          if (nv != A_[p]) {
            local_max = std::max(local_max, std::fabs(nv - A_[p]));
            A_[p] = nv;
            resp_dirty_[responder_of(p)].store(1, std::memory_order_relaxed);
          }
        }
      }
    }
    delta.slots[slot] = std::max(delta.slots[slot], local_max);
  });
  app_residual_ = delta.combined();
}

void GaleShapleySolver::rejection_step() {
  const PairTable& t = *table_;
  const std::size_t M = responder_count();
  const unsigned workers = thread_cap();
  MaxSlots delta(workers);

  std::atomic<unsigned> next_slot{0};
  parallel_for(M, [&](std::size_t lo, std::size_t hi) {
    const unsigned slot = next_slot.fetch_add(1);
    double local_max = 0.0;
    for (std::size_t s = lo; s < hi; ++s) {
      if (!resp_dirty_[s].load(std::memory_order_relaxed)) continue;
      resp_dirty_[s].store(0, std::memory_order_relaxed);
      const std::size_t shells =
          swap_ ? t.site_shell_count(s) : t.center_shell_count(s);
      auto pair_at = [&](std::uint64_t idx) -> std::uint32_t {
        return swap_ ? static_cast<std::uint32_t>(idx) : t.col_pair(idx);
      };
      auto proposer_of = [&](std::uint32_t p) -> std::uint32_t {
        return swap_ ? t.pair_center(p) : t.pair_site(p);
      };

      double cum = 0.0;
      std::uint32_t boundary = kNoShell;
      double blend = 0.0;
      for (std::size_t k = 0; k < shells; ++k) {
        auto [b, e] = swap_ ? t.site_shell_range(s, k) : t.center_shell_range(s, k);
        double app = 0.0;
        for (std::uint64_t idx = b; idx < e; ++idx) {
          const std::uint32_t p = pair_at(idx);
          app += A_[p] * rejection_weight(p);
        }
        if (cum + app > 1.0) {
          boundary = static_cast<std::uint32_t>(k);
          blend = 1.0 - (1.0 - cum) / app;
          break;
        }
        cum += app;
      }
      resp_shell_[s] = boundary;
      resp_blend_[s] = boundary == kNoShell ? 0.0 : blend;
      resp_radius_[s] =
          boundary == kNoShell
              ? kInf
              : (swap_ ? t.site_shell_radius(s, boundary)
                       : t.center_shell_radius(s, boundary));

      if (boundary == kNoShell) continue;  // an unsated responder rejects nothing
      {
        auto [b, e] = swap_ ? t.site_shell_range(s, boundary)
                            : t.center_shell_range(s, boundary);
        for (std::uint64_t idx = b; idx < e; ++idx) {
          const std::uint32_t p = pair_at(idx);
          const double nv = blend * A_[p];
          if (nv != R_[p]) {
            local_max = std::max(local_max, std::fabs(nv - R_[p]));
            R_[p] = nv;
            prop_dirty_[proposer_of(p)].store(1, std::memory_order_relaxed);
          }
        }
      }
      for (std::size_t k = boundary + 1; k < shells; ++k) {
        auto [b, e] = swap_ ? t.site_shell_range(s, k) : t.center_shell_range(s, k);
        for (std::uint64_t idx = b; idx < e; ++idx) {
          const std::uint32_t p = pair_at(idx);
          const double nv = A_[p];
          if (nv != R_[p]) {
            local_max = std::max(local_max, std::fabs(nv - R_[p]));
            R_[p] = nv;
            prop_dirty_[proposer_of(p)].store(1, std::memory_order_relaxed);
          }
        }
      }
    }
    delta.slots[slot] = std::max(delta.slots[slot], local_max);
  });
  residual_ = std::max(app_residual_, delta.combined());
}

double GaleShapleySolver::run_stage() {
  ++stage_;
  application_step();
  rejection_step();
  return residual_;
}

StageView GaleShapleySolver::view() const {
  StageView v;
  v.stage = stage_;
  v.A = A_;
  v.R = R_;
  v.proposer_boundary_shell = prop_shell_;
  v.proposer_blend = prop_blend_;
  v.proposer_radius = prop_radius_;
  v.responder_boundary_shell = resp_shell_;
  v.responder_blend = resp_blend_;
  v.responder_radius = resp_radius_;
  v.residual = residual_;
  return v;
}

SolveResult GaleShapleySolver::finish() const {
  const PairTable& t = *table_;
  SolveResult r;
  r.density.table = table_;
  r.density.mode = opts_.constraint_mode;
  r.density.role_swap = swap_;
  r.density.f.resize(t.pairs());
  for (std::size_t p = 0; p < t.pairs(); ++p) r.density.f[p] = A_[p] - R_[p];

  r.stages_run = stage_;
  r.residual = residual_;
  r.converged = residual_ <= opts_.convergence_tol;
  r.role_swap = swap_;
  r.proposer_boundary_shell = prop_shell_;
  r.proposer_blend = prop_blend_;
  r.proposer_radius = prop_radius_;
  r.responder_boundary_shell = resp_shell_;
  r.responder_blend = resp_blend_;
  r.responder_radius = resp_radius_;

  r.site_g_inf.assign(t.sites(), 0.0);
  r.center_h_inf.assign(t.centers(), 0.0);
  for (std::size_t i = 0; i < t.sites(); ++i) {
    auto [b, e] = t.row_range(i);
    double sum = 0.0;
    for (std::uint64_t p = b; p < e; ++p)
      sum += r.density.f[p] * t.psi().weight(t.pair_center(p));
    r.site_g_inf[i] = sum;
  }
  for (std::size_t j = 0; j < t.centers(); ++j) {
    auto [b, e] = t.col_range(j);
    double sum = 0.0;
    for (std::uint64_t idx = b; idx < e; ++idx) {
      const std::uint32_t p = t.col_pair(idx);
      sum += r.density.f[p] * t.phi().weight(t.pair_site(p));
    }
    r.center_h_inf[j] = sum;
  }
  return r;
}

bool SolveResult::fully_applied(std::size_t pair) const {
  const PairTable& t = *density.table;
  if (!role_swap) {
    const std::uint32_t k = proposer_boundary_shell[t.pair_site(pair)];
    return k == kNoShell || t.pair_site_shell(pair) < k;
  }
  const std::uint32_t k = proposer_boundary_shell[t.pair_center(pair)];
  return k == kNoShell || t.pair_center_shell(pair) < k;
}

namespace {
SolveResult solve_impl(std::shared_ptr<const PairTable> table, const SolveOptions& opts,
                       const StageObserver& observer, bool swap) {
  GaleShapleySolver solver(std::move(table), opts, swap);
  bool converged = false;
  while (solver.stage() < opts.max_stages) {
    const double res = solver.run_stage();
    if (observer) observer(solver.view());
    if (res <= opts.convergence_tol) {
      converged = true;
      break;
    }
  }
  SolveResult result = solver.finish();
  result.converged = converged;
  return result;
}
}  // namespace

SolveResult solve_site_optimal(std::shared_ptr<const PairTable> table,
                               const SolveOptions& opts, const StageObserver& observer) {
  return solve_impl(std::move(table), opts, observer, false);
}

SolveResult solve_center_optimal(std::shared_ptr<const PairTable> table,
                                 const SolveOptions& opts,
                                 const StageObserver& observer) {
  return solve_impl(std::move(table), opts, observer, true);
}

}  // namespace palm
