#include "palm/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "palm/rng.hpp"

namespace palm {

namespace {

std::vector<std::pair<double, double>> full_period_window(const Geometry& geom) {
  std::vector<std::pair<double, double>> w;
  for (double L : geom.period) w.push_back({0.0, L});
  return w;
}

void check_window(const Geometry& geom, const std::vector<std::pair<double, double>>& w) {
  if (static_cast<int>(w.size()) != geom.dimension)
    throw SpecError("window dimension does not match geometry");
  for (auto& [lo, hi] : w)
    if (!(hi > lo)) throw SpecError("window must have positive extent per axis");
}

double window_volume(const std::vector<std::pair<double, double>>& w) {
  double v = 1.0;
  for (auto& [lo, hi] : w) v *= hi - lo;
  return v;
}

}  // namespace

AtomicMeasure::AtomicMeasure(Geometry geom, std::vector<double> coords_flat,
                             std::vector<double> weights, Provenance prov)
    : geom_(std::move(geom)), coords_(std::move(coords_flat)),
      weights_(std::move(weights)), prov_(std::move(prov)) {
  const std::size_t d = static_cast<std::size_t>(geom_.dimension);
  if (coords_.size() != weights_.size() * d)
    throw SpecError("coordinate/weight size mismatch");
  for (double w : weights_)
    if (!(w > 0.0)) throw SpecError("atom weights must be > 0");

  for (std::size_t i = 0; i < weights_.size(); ++i)
    geom_.canonicalize(std::span<double>(coords_.data() + i * d, d));

  // Merge coincident atoms (exact coordinate equality after canonicalization)
  // so per-atom statements stand in for almost-everywhere ones. A stable sort
  // keeps the surviving order deterministic and translation invariant.
  std::vector<std::uint32_t> idx(weights_.size());
  std::iota(idx.begin(), idx.end(), 0u);
  auto eq = [&](std::uint32_t a, std::uint32_t b) {
    for (std::size_t k = 0; k < d; ++k)
      if (coords_[a * d + k] != coords_[b * d + k]) return false;
    return true;
  };
  auto lex_less = [&](std::uint32_t a, std::uint32_t b) {
    for (std::size_t k = 0; k < d; ++k) {
      if (coords_[a * d + k] < coords_[b * d + k]) return true;
      if (coords_[a * d + k] > coords_[b * d + k]) return false;
    }
    return a < b;
  };
  std::vector<std::uint32_t> sorted = idx;
  std::sort(sorted.begin(), sorted.end(), lex_less);
  std::vector<double> extra(weights_.size(), 0.0);
  std::vector<bool> dead(weights_.size(), false);
  for (std::size_t s = 0; s + 1 < sorted.size();) {
    std::size_t t = s + 1;
    while (t < sorted.size() && eq(sorted[s], sorted[t])) ++t;
    if (t > s + 1) {
      // merge into the earliest original index of the class
      std::uint32_t keep = *std::min_element(sorted.begin() + s, sorted.begin() + t);
      for (std::size_t u = s; u < t; ++u)
        if (sorted[u] != keep) {
          extra[keep] += weights_[sorted[u]];
          dead[sorted[u]] = true;
        }
    }
    s = t;
  }
  if (std::find(dead.begin(), dead.end(), true) != dead.end()) {
    std::vector<double> nc, nw;
    nc.reserve(coords_.size());
    nw.reserve(weights_.size());
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (dead[i]) continue;
      for (std::size_t k = 0; k < d; ++k) nc.push_back(coords_[i * d + k]);
      nw.push_back(weights_[i] + extra[i]);
    }
    coords_ = std::move(nc);
    weights_ = std::move(nw);
  } else {
    for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i] += extra[i];
  }

  total_mass_ = 0.0;
  for (double w : weights_) total_mass_ += w;
  max_abs_coord_ = 0.0;
  for (double c : coords_) max_abs_coord_ = std::max(max_abs_coord_, std::fabs(c));
}

double AtomicMeasure::shell_epsilon() const {
  return 1e-9 * (1.0 + geom_.coordinate_scale(geom_.is_torus() ? 0.0 : max_abs_coord_));
}

AtomicMeasure make_explicit(const Geometry& geom, std::vector<double> coords_flat,
                            std::vector<double> weights) {
  return AtomicMeasure(geom, std::move(coords_flat), std::move(weights),
                       {"explicit", ""});
}

AtomicMeasure make_grid_lebesgue(const Geometry& geom,
                                 std::vector<std::pair<double, double>> window,
                                 std::vector<std::size_t> resolution, double scale,
                                 std::optional<std::uint64_t> jitter_seed) {
  if (window.empty() && geom.is_torus()) window = full_period_window(geom);
  check_window(geom, window);
  if (!(scale > 0.0)) throw SpecError("grid scale must be > 0");
  if (resolution.size() == 1 && geom.dimension > 1)
    resolution.assign(static_cast<std::size_t>(geom.dimension), resolution[0]);
  if (static_cast<int>(resolution.size()) != geom.dimension)
    throw SpecError("grid resolution dimension mismatch");
  std::size_t count = 1;
  for (std::size_t r : resolution) {
    if (r == 0) throw SpecError("grid resolution must be positive");
    count *= r;
  }

  const int d = geom.dimension;
  std::vector<double> h(d);
  double cell_volume = 1.0;
  for (int k = 0; k < d; ++k) {
    h[k] = (window[k].second - window[k].first) / static_cast<double>(resolution[k]);
    cell_volume *= h[k];
  }
  const double w = scale * cell_volume;

  std::optional<Rng> rng;
  if (jitter_seed) rng.emplace(*jitter_seed);

  std::vector<double> coords(count * d);
  std::vector<std::size_t> ix(d, 0);
  for (std::size_t i = 0; i < count; ++i) {
    for (int k = 0; k < d; ++k) {
      double c = window[k].first + (static_cast<double>(ix[k]) + 0.5) * h[k];
      if (rng) c += rng->uniform(-1e-3, 1e-3) * h[k];
      coords[i * d + k] = c;
    }
    for (int k = d - 1; k >= 0; --k) {
      if (++ix[k] < resolution[k]) break;
      ix[k] = 0;
    }
  }
  return AtomicMeasure(geom, std::move(coords), std::vector<double>(count, w),
                       {"grid", "scale=" + std::to_string(scale)});
}

AtomicMeasure make_lattice(const Geometry& geom, double spacing, double weight,
                           std::optional<std::uint64_t> translation_seed,
                           std::optional<std::uint64_t> jitter_seed,
                           std::vector<std::pair<double, double>> window) {
  if (!(spacing > 0.0)) throw SpecError("lattice spacing must be > 0");
  if (!(weight > 0.0)) throw SpecError("lattice weight must be > 0");
  if (window.empty()) {
    if (!geom.is_torus())
      throw SpecError("lattice in euclidean mode requires a window");
    window = full_period_window(geom);
  }
  check_window(geom, window);

  const int d = geom.dimension;
  std::vector<std::size_t> counts(d);
  for (int k = 0; k < d; ++k) {
    double extent = window[k].second - window[k].first;
    double cells = extent / spacing;
    double rounded = std::round(cells);
    if (geom.is_torus() && std::fabs(cells - rounded) > 1e-9 * (1.0 + cells))
      throw SpecError("torus period must be a multiple of the lattice spacing");
    counts[k] = static_cast<std::size_t>(
        geom.is_torus() ? rounded : std::floor(cells + 1e-12));
    if (counts[k] == 0) throw SpecError("lattice window too small for spacing");
  }

  std::vector<double> offset(d, 0.0);
  if (translation_seed) {
    Rng rng(*translation_seed);
    for (int k = 0; k < d; ++k) offset[k] = rng.uniform(0.0, spacing);
  }
  std::optional<Rng> jit;
  if (jitter_seed) jit.emplace(*jitter_seed);

  std::size_t count = 1;
  for (std::size_t c : counts) count *= c;
  std::vector<double> coords(count * d);
  std::vector<std::size_t> ix(d, 0);
  for (std::size_t i = 0; i < count; ++i) {
    for (int k = 0; k < d; ++k) {
      double c = window[k].first + offset[k] + static_cast<double>(ix[k]) * spacing;
      if (jit) c += jit->uniform(-1e-3, 1e-3) * spacing;
      coords[i * d + k] = c;
    }
    for (int k = d - 1; k >= 0; --k) {
      if (++ix[k] < counts[k]) break;
      ix[k] = 0;
    }
  }
  return AtomicMeasure(geom, std::move(coords), std::vector<double>(count, weight),
                       {"lattice", "spacing=" + std::to_string(spacing)});
}

AtomicMeasure make_poisson(const Geometry& geom, double intensity, std::uint64_t seed,
                           std::vector<std::pair<double, double>> window) {
  if (!(intensity > 0.0)) throw SpecError("poisson intensity must be > 0");
  if (window.empty()) {
    if (!geom.is_torus())
      throw SpecError("poisson in euclidean mode requires a window");
    window = full_period_window(geom);
  }
  check_window(geom, window);

  Rng rng(seed);
  const std::uint64_t n = rng.poisson(intensity * window_volume(window));
  const int d = geom.dimension;
  std::vector<double> coords(n * d);
  for (std::uint64_t i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k)
      coords[i * d + k] = rng.uniform(window[k].first, window[k].second);
  return AtomicMeasure(geom, std::move(coords), std::vector<double>(n, 1.0),
                       {"poisson", "intensity=" + std::to_string(intensity)});
}

AtomicMeasure make_product(const AtomicMeasure& a, const AtomicMeasure& b,
                           const Geometry& joint) {
  if (joint.dimension != a.dim() + b.dim())
    throw SpecError("product: joint dimension must be the sum of factor dimensions");
  if ((joint.is_torus() && (!a.geometry().is_torus() || !b.geometry().is_torus())) ||
      (!joint.is_torus() && (a.geometry().is_torus() || b.geometry().is_torus())))
    throw SpecError("product: factor modes must match the joint geometry");
  const std::size_t n = a.size() * b.size();
  const int d = joint.dimension;
  std::vector<double> coords(n * static_cast<std::size_t>(d));
  std::vector<double> weights(n);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j, ++idx) {
      auto pa = a.position(i);
      auto pb = b.position(j);
      std::copy(pa.begin(), pa.end(), coords.begin() + idx * d);
      std::copy(pb.begin(), pb.end(), coords.begin() + idx * d + a.dim());
      weights[idx] = a.weight(i) * b.weight(j);
    }
  return AtomicMeasure(joint, std::move(coords), std::move(weights), {"product", ""});
}

AtomicMeasure make_sum(const AtomicMeasure& a, const AtomicMeasure& b) {
  if (!(a.geometry() == b.geometry()))
    throw SpecError("sum: geometries must match");
  std::vector<double> coords(a.coords_flat().begin(), a.coords_flat().end());
  coords.insert(coords.end(), b.coords_flat().begin(), b.coords_flat().end());
  std::vector<double> weights(a.weights().begin(), a.weights().end());
  weights.insert(weights.end(), b.weights().begin(), b.weights().end());
  return AtomicMeasure(a.geometry(), std::move(coords), std::move(weights),
                       {"sum", ""});
}

AtomicMeasure translate(const AtomicMeasure& m, std::span<const double> v) {
  if (static_cast<int>(v.size()) != m.dim())
    throw ContractViolation("translate: vector dimension mismatch");
  const std::size_t d = static_cast<std::size_t>(m.dim());
  std::vector<double> coords(m.coords_flat().begin(), m.coords_flat().end());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t k = 0; k < d; ++k) coords[i * d + k] -= v[k];
  return AtomicMeasure(m.geometry(), std::move(coords),
                       std::vector<double>(m.weights().begin(), m.weights().end()),
                       m.provenance());
}

double ball_mass(const AtomicMeasure& m, std::span<const double> center, double radius,
                 BallClosure closure) {
  if (radius < 0.0) throw ContractViolation("ball_mass: radius must be >= 0");
  const double eps = m.shell_epsilon();
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double d = m.geometry().distance(m.position(i), center);
    bool in = closure == BallClosure::closed ? d <= radius + eps : d < radius - eps;
    if (in) total += m.weight(i);
  }
  return total;
}

ShellIndex build_shells(const AtomicMeasure& m, std::span<const double> query) {
  if (m.size() == 0) throw ContractViolation("build_shells: empty measure");
  const std::size_t n = m.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i)
    dist[i] = m.geometry().distance(m.position(i), query);

  ShellIndex sx;
  sx.order.resize(n);
  std::iota(sx.order.begin(), sx.order.end(), 0u);
  std::sort(sx.order.begin(), sx.order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });

  const double eps = m.shell_epsilon();
  double cum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && dist[sx.order[j]] - dist[sx.order[j - 1]] <= eps) ++j;
    for (std::size_t t = i; t < j; ++t) cum += m.weight(sx.order[t]);
    sx.shell_end.push_back(j);
    sx.radius.push_back(dist[sx.order[j - 1]]);
    sx.cum_weight.push_back(cum);
    i = j;
  }
  return sx;
}

}  // namespace palm
