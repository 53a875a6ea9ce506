#pragma once

#include <atomic>
#include <functional>
#include <limits>
#include <memory>
#include <span>

#include "palm/pair_table.hpp"

namespace palm {

// Cap style for the density: plain densities are bounded by 1 everywhere;
// the weighted-discrete variant bounds f(.,xi_j) by 1/w_j so that the induced
// kernel is constrained by the counting measure on psi's support.
enum class ConstraintMode { density_cap, counting_cap };

struct SolveOptions {
  double convergence_tol = 1e-12;
  std::size_t max_stages = 10000;
  ConstraintMode constraint_mode = ConstraintMode::density_cap;
};

// A matrix-valued density over the pair universe with cap, row and column
// constraints. f is indexed by pair id of `table`.
struct ConstrainedDensity {
  std::shared_ptr<const PairTable> table;
  std::vector<double> f;
  ConstraintMode mode = ConstraintMode::density_cap;
  bool role_swap = false;  // true when produced by the center-optimal run

  double cap(std::size_t pair) const {
    return mode == ConstraintMode::counting_cap
               ? 1.0 / table->psi().weight(table->pair_center(pair))
               : 1.0;
  }
};

inline constexpr std::uint32_t kNoShell = std::numeric_limits<std::uint32_t>::max();

// Snapshot of one completed stage, for invariant checks and diagnostics.
// Proposers are the applying side (phi sites unless roles are swapped).
struct StageView {
  std::size_t stage = 0;
  std::span<const double> A;  // per pair id
  std::span<const double> R;
  std::span<const std::uint32_t> proposer_boundary_shell;  // application radius class
  std::span<const double> proposer_blend;                  // boundary constant
  std::span<const double> proposer_radius;
  std::span<const std::uint32_t> responder_boundary_shell;  // rejection radius class
  std::span<const double> responder_blend;
  std::span<const double> responder_radius;
  double residual = 0.0;
};

using StageObserver = std::function<void(const StageView&)>;

struct SolveResult {
  ConstrainedDensity density;
  std::size_t stages_run = 0;
  double residual = 0.0;
  bool converged = false;

  // always indexed by phi atoms (sites) and psi atoms (centers)
  std::vector<double> site_g_inf;    // row sums of f against psi weights
  std::vector<double> center_h_inf;  // column sums against phi weights

  bool role_swap = false;
  std::vector<std::uint32_t> proposer_boundary_shell;
  std::vector<double> proposer_blend;
  std::vector<double> proposer_radius;
  std::vector<std::uint32_t> responder_boundary_shell;
  std::vector<double> responder_blend;
  std::vector<double> responder_radius;

  // True iff the proposing side applies with full weight on this pair
  // (strictly inside its application radius, or the radius is infinite).
  bool fully_applied(std::size_t pair) const;
};

// Stage iteration with sites proposing. Each stage: every site applies to the
// closest centers up to unit mass net of standing rejections (interpolating on
// the boundary tie class), then every center rejects all weight beyond the
// radius where accumulated applications reach unit mass. Applications and
// rejections only grow, so the pair-wise sup-norm change is a faithful
// convergence measure.
class GaleShapleySolver {
 public:
  GaleShapleySolver(std::shared_ptr<const PairTable> table, SolveOptions opts,
                    bool swap_roles = false);

  void application_step();
  void rejection_step();
  // both halves; returns the stage residual
  double run_stage();

  std::size_t stage() const { return stage_; }
  double residual() const { return residual_; }
  StageView view() const;

  SolveResult finish() const;

  std::span<const double> A() const { return A_; }
  std::span<const double> R() const { return R_; }

 private:
  std::size_t proposer_count() const { return swap_ ? table_->centers() : table_->sites(); }
  std::size_t responder_count() const { return swap_ ? table_->sites() : table_->centers(); }
  double pair_cap(std::size_t p) const {
    return opts_.constraint_mode == ConstraintMode::counting_cap
               ? 1.0 / table_->psi().weight(table_->pair_center(p))
               : 1.0;
  }
  // weight integrated while a proposer applies (mass of the opposite atom)
  double application_weight(std::size_t p) const {
    return swap_ ? table_->phi().weight(table_->pair_site(p))
                 : table_->psi().weight(table_->pair_center(p));
  }
  double rejection_weight(std::size_t p) const {
    return swap_ ? table_->psi().weight(table_->pair_center(p))
                 : table_->phi().weight(table_->pair_site(p));
  }

  std::shared_ptr<const PairTable> table_;
  SolveOptions opts_;
  bool swap_;
  std::size_t stage_ = 0;
  double residual_ = 0.0;
  double app_residual_ = 0.0;

  std::vector<double> A_, R_;
  std::vector<std::uint32_t> prop_shell_;
  std::vector<double> prop_blend_, prop_radius_;
  std::vector<std::uint32_t> resp_shell_;
  std::vector<double> resp_blend_, resp_radius_;

  // A proposer's step is a pure function of R on its row (and mirrored for
  // responders), so untouched rows are skipped; the fixpoint and all
  // intermediate values are identical to the full recomputation.
  std::unique_ptr<std::atomic<std::uint8_t>[]> prop_dirty_, resp_dirty_;
};

SolveResult solve_site_optimal(std::shared_ptr<const PairTable> table,
                               const SolveOptions& opts = {},
                               const StageObserver& observer = {});

// The mirror run with centers proposing, reported over the same pair universe.
SolveResult solve_center_optimal(std::shared_ptr<const PairTable> table,
                                 const SolveOptions& opts = {},
                                 const StageObserver& observer = {});

}  // namespace palm
