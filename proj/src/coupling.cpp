#include "palm/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "palm/parallel.hpp"

namespace palm {

namespace {

std::uint32_t atom_nearest_origin(const AtomicMeasure& m) {
  std::vector<double> origin(m.dim(), 0.0);
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double d = m.geometry().distance(m.position(i), origin);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(i);
    }
  }
  return best;
}

CouplingSample draw_from_row(const SolveResult& f_s, Rng& rng, double tol,
                             bool reverse) {
  const PairTable& tb = *f_s.density.table;
  const AtomicMeasure& anchor_side = reverse ? tb.psi() : tb.phi();
  const AtomicMeasure& drawn_side = reverse ? tb.phi() : tb.psi();

  const std::uint32_t anchor = atom_nearest_origin(anchor_side);
  std::vector<double> mass(drawn_side.size(), 0.0);
  double total = 0.0;
  if (!reverse) {
    auto [b, e] = tb.row_range(anchor);
    for (std::uint64_t p = b; p < e; ++p) {
      const double m = f_s.density.f[p] * tb.psi().weight(tb.pair_center(p));
      mass[tb.pair_center(p)] = m;
      total += m;
    }
  } else {
    auto [b, e] = tb.col_range(anchor);
    for (std::uint64_t idx = b; idx < e; ++idx) {
      const std::uint32_t p = tb.col_pair(idx);
      const double m = f_s.density.f[p] * tb.phi().weight(tb.pair_site(p));
      mass[tb.pair_site(p)] = m;
      total += m;
    }
  }
  if (total < 1.0 - tol)
    throw ContractViolation(std::string(reverse ? "reverse extra head: column"
                                                : "extra head: row") +
                            " at the origin atom sums to " + std::to_string(total) +
                            " (deficit " + std::to_string(1.0 - total) + ")");

  // inverse-cdf draw in ascending atom order
  const double u = rng.uniform01() * total;
  std::uint32_t chosen = static_cast<std::uint32_t>(drawn_side.size() - 1);
  double cum = 0.0;
  for (std::size_t k = 0; k < drawn_side.size(); ++k) {
    cum += mass[k];
    if (u < cum) {
      chosen = static_cast<std::uint32_t>(k);
      break;
    }
  }

  auto pos = drawn_side.position(chosen);
  std::vector<double> shift(pos.begin(), pos.end());
  return {anchor, chosen, shift, translate(tb.psi(), shift)};
}


}  // namespace

CouplingSample sample_extra_head(const SolveResult& f_s, Rng& rng, double tol) {
  return draw_from_row(f_s, rng, tol, false);
}

CouplingSample reverse_extra_head(const SolveResult& f_s, Rng& rng, double tol) {
  return draw_from_row(f_s, rng, tol, true);
}

PalmStatistics slivnyak_experiment(const SlivnyakOptions& opts) {
  if (opts.dimension < 1) throw SpecError("slivnyak: dimension must be >= 1");
  const Geometry geom =
      Geometry::torus(std::vector<double>(opts.dimension, opts.period));
  const double volume = std::pow(opts.period, opts.dimension);
  const Rng master(opts.seed);

  const std::size_t R = opts.radii.size();
  std::vector<double> sum(R, 0.0), sumsq(R, 0.0);
  std::vector<std::uint8_t> kept(opts.samples, 0);
  std::vector<std::uint8_t> origin_ok(opts.samples, 1);
  std::vector<std::vector<double>> counts(opts.samples);

  parallel_for(opts.samples, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t s = lo; s < hi; ++s) {
      Rng rng = master.fork(s);
      AtomicMeasure psi = make_poisson(geom, opts.intensity, rng.next_u64());
      if (psi.size() == 0) continue;  // dropped (no atoms to shift onto)
      const double scale = psi.total_mass() / volume;
      AtomicMeasure phi = make_grid_lebesgue(
          geom, {}, std::vector<std::size_t>(opts.dimension, opts.grid_resolution),
          scale);
      auto table = PairTable::build(std::move(phi), std::move(psi));
      SolveResult res = solve_site_optimal(table, opts.solve);
      if (!res.converged) continue;
      CouplingSample sample = sample_extra_head(res, rng, 1e-6);

      std::vector<double> origin(opts.dimension, 0.0);
      std::vector<double> c(R, 0.0);
      const double eps = sample.shifted.shell_epsilon();
      bool at_zero = true;
      for (int k = 0; k < opts.dimension; ++k)
        at_zero &= sample.shifted.position(sample.chosen_atom)[k] == 0.0;
      origin_ok[s] = at_zero ? 1 : 0;
      for (std::size_t a = 0; a < sample.shifted.size(); ++a) {
        if (a == sample.chosen_atom) continue;  // the origin atom itself
        const double d = geom.distance(sample.shifted.position(a), origin);
        for (std::size_t r = 0; r < R; ++r)
          if (d <= opts.radii[r] + eps) c[r] += 1.0;
      }
      counts[s] = std::move(c);
      kept[s] = 1;
    }
  });

  PalmStatistics stats;
  stats.radii = opts.radii;
  stats.per_sample.reserve(opts.samples);
  for (std::size_t s = 0; s < opts.samples; ++s) {
    if (!kept[s]) {
      ++stats.dropped;
      stats.per_sample.push_back({s, false, {}});
      continue;
    }
    ++stats.samples;
    stats.origin_always_atom &= origin_ok[s] != 0;
    stats.per_sample.push_back({s, true, counts[s]});
    for (std::size_t r = 0; r < R; ++r) {
      sum[r] += counts[s][r];
      sumsq[r] += counts[s][r] * counts[s][r];
    }
  }
  stats.mean_count.assign(R, 0.0);
  stats.std_error.assign(R, 0.0);
  const double n = static_cast<double>(stats.samples);
  for (std::size_t r = 0; r < R && n > 1; ++r) {
    stats.mean_count[r] = sum[r] / n;
    const double var = std::max(0.0, (sumsq[r] - sum[r] * sum[r] / n) / (n - 1.0));
    stats.std_error[r] = std::sqrt(var / n);
  }
  return stats;
}

PalmStatistics poisson_plus_origin_reference(double intensity, double period,
                                             int dimension, std::size_t samples,
                                             std::uint64_t seed,
                                             const std::vector<double>& radii) {
  const Geometry geom = Geometry::torus(std::vector<double>(dimension, period));
  const Rng master(seed);
  const std::size_t R = radii.size();
  std::vector<double> sum(R, 0.0), sumsq(R, 0.0);
  std::vector<double> origin(dimension, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = master.fork(s);
    AtomicMeasure psi = make_poisson(geom, intensity, rng.next_u64());
    std::vector<double> c(R, 0.0);
    for (std::size_t a = 0; a < psi.size(); ++a) {
      const double d = geom.distance(psi.position(a), origin);
      for (std::size_t r = 0; r < R; ++r)
        if (d <= radii[r] + psi.shell_epsilon()) c[r] += 1.0;
    }
    for (std::size_t r = 0; r < R; ++r) {
      sum[r] += c[r];
      sumsq[r] += c[r] * c[r];
    }
  }
  PalmStatistics stats;
  stats.radii = radii;
  stats.samples = samples;
  stats.mean_count.assign(R, 0.0);
  stats.std_error.assign(R, 0.0);
  const double n = static_cast<double>(samples);
  for (std::size_t r = 0; r < R && n > 1; ++r) {
    stats.mean_count[r] = sum[r] / n;
    const double var = std::max(0.0, (sumsq[r] - sum[r] * sum[r] / n) / (n - 1.0));
    stats.std_error[r] = std::sqrt(var / n);
  }
  return stats;
}

std::pair<double, double> spatial_averages(const ConstrainedDensity& f,
                                           double stability_tol,
                                           bool require_stable) {
  if (!f.table->geometry().is_torus())
    throw ContractViolation("spatial_averages: torus mode required");
  if (require_stable) {
    StabilityReport stab = check_stable(f, stability_tol);
    if (!stab.stable())
      throw ContractViolation("spatial_averages: density is not stable (" +
                              std::to_string(stab.unstable_count) + " pairs)");
  }
  const PairTable& tb = *f.table;
  auto rows = row_sums(f);
  auto cols = col_sums(f);
  double num_g = 0.0, num_h = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    num_g += tb.phi().weight(i) * rows[i];
  for (std::size_t j = 0; j < cols.size(); ++j)
    num_h += tb.psi().weight(j) * cols[j];
  return {num_g / tb.phi().total_mass(), num_h / tb.psi().total_mass()};
}

CouplingCasesReport coupling_cases_check(const ConstrainedDensity& f, double tol) {
  const PairTable& tb = *f.table;
  if (!tb.geometry().is_torus())
    throw ContractViolation("coupling_cases_check: torus mode required");
  double volume = 1.0;
  for (double L : tb.geometry().period) volume *= L;

  CouplingCasesReport rep;
  rep.lambda_phi = tb.phi().total_mass() / volume;
  rep.lambda_psi = tb.psi().total_mass() / volume;
  auto rows = row_sums(f);
  auto cols = col_sums(f);
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i] < 1.0 - tol) {
      rep.unexhausted_mass += tb.phi().weight(i);
      rep.unexhausted_deficit += tb.phi().weight(i) * (1.0 - rows[i]);
    }
  for (std::size_t j = 0; j < cols.size(); ++j)
    if (cols[j] < 1.0 - tol) {
      rep.unsated_mass += tb.psi().weight(j);
      rep.unsated_deficit += tb.psi().weight(j) * (1.0 - cols[j]);
    }
  rep.predicted_deficit = std::fabs(tb.phi().total_mass() - tb.psi().total_mass());
  return rep;
}

}  // namespace palm
