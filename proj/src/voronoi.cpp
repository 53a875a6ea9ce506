#include "palm/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace palm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_mass(const AtomicMeasure& psi) {
  if (psi.total_mass() < 1.0 - 1e-12)
    throw ContractViolation("voronoi: psi total mass must be >= 1");
}

struct RadiusInfo {
  double radius = kInf;            // s(x)
  std::size_t boundary_shell = 0;  // valid when finite
  bool finite = false;
  double interior_mass = 0.0;  // mass strictly inside the boundary class
  double boundary_mass = 0.0;
};

RadiusInfo radius_info(const ShellIndex& sx) {
  RadiusInfo info;
  double cum = 0.0;
  for (std::size_t k = 0; k < sx.shell_count(); ++k) {
    const double w = sx.shell_weight(k);
    if (cum + w > 1.0) {
      info.finite = true;
      info.boundary_shell = k;
      info.radius = sx.radius[k];
      info.interior_mass = cum;
      info.boundary_mass = w;
      return info;
    }
    cum += w;
  }
  return info;
}
}  // namespace

double voronoi_radius(const AtomicMeasure& psi, std::span<const double> x) {
  require_mass(psi);
  return radius_info(build_shells(psi, x)).radius;
}

std::vector<double> voronoi_density_row(const AtomicMeasure& psi,
                                        std::span<const double> x) {
  require_mass(psi);
  const ShellIndex sx = build_shells(psi, x);
  const RadiusInfo info = radius_info(sx);
  std::vector<double> v(psi.size(), 0.0);
  if (!info.finite) {
    std::fill(v.begin(), v.end(), 1.0);
    return v;
  }
  const double c = (1.0 - info.interior_mass) / info.boundary_mass;
  for (std::size_t k = 0; k <= info.boundary_shell; ++k) {
    auto [b, e] = sx.shell_range(k);
    const double value = k == info.boundary_shell ? c : 1.0;
    for (std::uint64_t t = b; t < e; ++t) v[sx.order[t]] = value;
  }
  return v;
}

double voronoi_density(const AtomicMeasure& psi, std::span<const double> x,
                       std::size_t center) {
  return voronoi_density_row(psi, x)[center];
}

bool in_territory(const AtomicMeasure& psi, std::span<const double> x,
                  std::size_t center) {
  require_mass(psi);
  const double d = psi.geometry().distance(x, psi.position(center));
  // open-ball test; the boundary class contains the atom itself, so membership
  // reduces to strict inequality of the open mass
  return ball_mass(psi, x, d, BallClosure::open) < 1.0;
}

TerritoryDiagnostics territory_diagnostics(const AtomicMeasure& psi, std::size_t center,
                                           std::size_t ray_count, double extent_limit,
                                           std::size_t steps_per_ray) {
  require_mass(psi);
  const Geometry& geom = psi.geometry();
  const int d = geom.dimension;
  if (d > 3) throw ContractViolation("territory_diagnostics: d <= 3 only");
  if (ray_count == 0) ray_count = d == 1 ? 2 : (d == 2 ? 360 : 1000);

  double limit = extent_limit;
  if (geom.is_torus()) {
    double half_min = kInf;
    for (double L : geom.period) half_min = std::min(half_min, L / 2.0);
    limit = limit > 0.0 ? std::min(limit, half_min) : half_min;
  } else if (limit <= 0.0) {
    // default probe range: spread of the atom cloud around the center
    double far = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i)
      far = std::max(far, geom.distance(psi.position(i), psi.position(center)));
    limit = 4.0 * (far + 1.0);
  }

  auto center_pos = psi.position(center);
  TerritoryDiagnostics diag;
  diag.rays = ray_count;
  std::vector<double> dir(d), probe(d);

  for (std::size_t rayi = 0; rayi < ray_count; ++rayi) {
    if (d == 1) {
      dir[0] = rayi == 0 ? 1.0 : -1.0;
    } else if (d == 2) {
      const double a = 6.283185307179586 * static_cast<double>(rayi) /
                       static_cast<double>(ray_count);
      dir[0] = std::cos(a);
      dir[1] = std::sin(a);
    } else {
      // Fibonacci sphere
      const double golden = 2.399963229728653;
      const double z = 1.0 - 2.0 * (static_cast<double>(rayi) + 0.5) /
                                 static_cast<double>(ray_count);
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      dir[0] = rho * std::cos(golden * static_cast<double>(rayi));
      dir[1] = rho * std::sin(golden * static_cast<double>(rayi));
      dir[2] = z;
    }

    double extent = 0.0;
    bool outside_seen = false;
    bool hit_limit = false;
    for (std::size_t s = 1; s <= steps_per_ray; ++s) {
      const double t = limit * static_cast<double>(s) / static_cast<double>(steps_per_ray);
      for (int k = 0; k < d; ++k) probe[k] = center_pos[k] + t * dir[k];
      geom.canonicalize(probe);
      if (in_territory(psi, probe, center)) {
        if (outside_seen) diag.star_shaped = false;  // gap along the ray
        extent = t;
        if (s == steps_per_ray) hit_limit = true;
      } else {
        outside_seen = true;
      }
    }
    diag.max_extent = std::max(diag.max_extent, extent);
    if (hit_limit && !geom.is_torus()) diag.bounded = false;
  }
  return diag;
}

std::vector<std::array<double, 2>> classical_cell_polygon(const AtomicMeasure& psi,
                                                          std::size_t center,
                                                          double window_pad) {
  const Geometry& geom = psi.geometry();
  if (geom.dimension != 2)
    throw ContractViolation("classical_cell_polygon: d = 2 only");
  for (std::size_t j = 0; j < psi.size(); ++j)
    if (std::fabs(psi.weight(j) - 1.0) > 1e-9)
      throw ContractViolation("classical_cell_polygon: counting measure required");

  // bounding polygon, then clip by each bisector half-plane
  double lox, hix, loy, hiy;
  if (geom.is_torus()) {
    lox = loy = 0.0;
    hix = geom.period[0];
    hiy = geom.period[1];
  } else {
    lox = loy = kInf;
    hix = hiy = -kInf;
    for (std::size_t j = 0; j < psi.size(); ++j) {
      lox = std::min(lox, psi.position(j)[0]);
      hix = std::max(hix, psi.position(j)[0]);
      loy = std::min(loy, psi.position(j)[1]);
      hiy = std::max(hiy, psi.position(j)[1]);
    }
    const double pad = window_pad > 0.0 ? window_pad : (hix - lox + hiy - loy + 1.0);
    lox -= pad;
    hix += pad;
    loy -= pad;
    hiy += pad;
  }
  std::vector<std::array<double, 2>> poly = {
      {lox, loy}, {hix, loy}, {hix, hiy}, {lox, hiy}};

  auto c0 = psi.position(center);
  std::array<double, 2> cc{c0[0], c0[1]};

  // neighbor images: the atoms themselves, plus 3x3 unwrapped copies on a torus
  std::vector<std::array<double, 2>> neighbors;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    auto pj = psi.position(j);
    if (geom.is_torus()) {
      for (int sx = -1; sx <= 1; ++sx)
        for (int sy = -1; sy <= 1; ++sy) {
          std::array<double, 2> q{pj[0] + sx * geom.period[0],
                                  pj[1] + sy * geom.period[1]};
          if (j == center && sx == 0 && sy == 0) continue;
          neighbors.push_back(q);
        }
    } else if (j != center) {
      neighbors.push_back({pj[0], pj[1]});
    }
  }

  for (const auto& q : neighbors) {
    // keep the side of the bisector closer to cc
    const double mx = (cc[0] + q[0]) / 2.0, my = (cc[1] + q[1]) / 2.0;
    const double nx = q[0] - cc[0], ny = q[1] - cc[1];
    if (nx == 0.0 && ny == 0.0) continue;
    std::vector<std::array<double, 2>> out;
    const std::size_t n = poly.size();
    for (std::size_t a = 0; a < n; ++a) {
      const auto& P = poly[a];
      const auto& Q = poly[(a + 1) % n];
      const double sp = (P[0] - mx) * nx + (P[1] - my) * ny;
      const double sq = (Q[0] - mx) * nx + (Q[1] - my) * ny;
      if (sp <= 0.0) out.push_back(P);
      if ((sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0)) {
        const double t = sp / (sp - sq);
        out.push_back({P[0] + t * (Q[0] - P[0]), P[1] + t * (Q[1] - P[1])});
      }
    }
    poly = std::move(out);
    if (poly.empty()) break;
  }
  return poly;
}

}  // namespace palm
