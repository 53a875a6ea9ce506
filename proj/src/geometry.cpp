#include "palm/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "palm/rng.hpp"

namespace palm {

Geometry Geometry::euclidean(int d) {
  if (d < 1) throw SpecError("geometry dimension must be >= 1");
  Geometry g;
  g.mode = GeomMode::euclidean;
  g.dimension = d;
  return g;
}

Geometry Geometry::torus(std::vector<double> period) {
  if (period.empty()) throw SpecError("torus period must be non-empty");
  for (double L : period)
    if (!(L > 0.0)) throw SpecError("torus period components must be > 0");
  Geometry g;
  g.mode = GeomMode::torus;
  g.dimension = static_cast<int>(period.size());
  g.period = std::move(period);
  return g;
}

void Geometry::canonicalize(std::span<double> p) const {
  if (static_cast<int>(p.size()) != dimension)
    throw ContractViolation("point dimension mismatch");
  if (!is_torus()) return;
  for (int i = 0; i < dimension; ++i) {
    double L = period[i];
    double v = p[i];
    if (v >= 0.0 && v < L) continue;
    v = std::fmod(v, L);
    if (v < 0.0) v += L;
    if (v >= L) v = 0.0;  // fmod can land exactly on L after the add
    p[i] = v;
  }
}

double Geometry::squared_distance(std::span<const double> p,
                                  std::span<const double> q) const {
  if (static_cast<int>(p.size()) != dimension ||
      static_cast<int>(q.size()) != dimension)
    throw ContractViolation("point dimension mismatch");
  double s = 0.0;
  if (is_torus()) {
    for (int i = 0; i < dimension; ++i) {
      double L = period[i];
      double d = std::fabs(p[i] - q[i]);
      if (d > L - d) d = L - d;
      s += d * d;
    }
  } else {
    for (int i = 0; i < dimension; ++i) {
      double d = p[i] - q[i];
      s += d * d;
    }
  }
  return s;
}

double Geometry::distance(std::span<const double> p, std::span<const double> q) const {
  return std::sqrt(squared_distance(p, q));
}

double Geometry::coordinate_scale(double max_abs_coord) const {
  double s = max_abs_coord;
  if (is_torus())
    for (double L : period) s = std::max(s, L);
  return s;
}

namespace {

struct Vec3 {
  double x = 0, y = 0, z = 0;
};
Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

bool interval_test(std::span<const double> pts, std::size_t n, double a, double r) {
  double lo = pts[0], hi = pts[0];
  for (std::size_t i = 1; i < n; ++i) {
    lo = std::min(lo, pts[i]);
    hi = std::max(hi, pts[i]);
  }
  return a - r > lo && a + r < hi;
}

// Andrew monotone chain, counterclockwise hull.
std::vector<std::array<double, 2>> hull_2d(std::span<const double> pts, std::size_t n) {
  std::vector<std::array<double, 2>> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = {pts[2 * i], pts[2 * i + 1]};
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  n = p.size();
  if (n < 3) return p;
  auto cross2 = [](const std::array<double, 2>& o, const std::array<double, 2>& u,
                   const std::array<double, 2>& v) {
    return (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0]);
  };
  std::vector<std::array<double, 2>> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

bool hull_2d_test(std::span<const double> pts, std::size_t n, std::span<const double> a,
                  double r) {
  auto h = hull_2d(pts, n);
  if (h.size() < 3) return false;  // degenerate hull has empty interior
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& u = h[i];
    const auto& v = h[(i + 1) % h.size()];
    double ex = v[0] - u[0], ey = v[1] - u[1];
    double len = std::hypot(ex, ey);
    if (len == 0.0) continue;
    // signed distance of a to edge line, positive on the interior side
    double d = ((a[0] - u[0]) * ey - (a[1] - u[1]) * ex) / len;
    d = -d;  // ccw orientation: interior is to the left
    if (!(d > r)) return false;
  }
  return true;
}

// Incremental 3d hull. Returns facets as vertex index triples with outward
// normals, or empty when the input is degenerate.
struct Facet {
  int a, b, c;
  Vec3 normal;
  double offset;  // plane: dot(normal, x) = offset
};

std::vector<Facet> hull_3d(const std::vector<Vec3>& p) {
  const std::size_t n = p.size();
  if (n < 4) return {};
  double scale = 0.0;
  for (const auto& v : p) scale = std::max({scale, std::fabs(v.x), std::fabs(v.y), std::fabs(v.z)});
  const double eps = 1e-12 * (1.0 + scale);

  // initial non-degenerate tetrahedron
  int i0 = 0, i1 = -1, i2 = -1, i3 = -1;
  for (std::size_t i = 1; i < n; ++i)
    if (norm(p[i] - p[i0]) > eps) {
      i1 = static_cast<int>(i);
      break;
    }
  if (i1 < 0) return {};
  for (std::size_t i = 0; i < n; ++i)
    if (norm(cross(p[i1] - p[i0], p[i] - p[i0])) > eps * (1.0 + scale)) {
      i2 = static_cast<int>(i);
      break;
    }
  if (i2 < 0) return {};
  Vec3 nrm = cross(p[i1] - p[i0], p[i2] - p[i0]);
  for (std::size_t i = 0; i < n; ++i)
    if (std::fabs(dot(nrm, p[i] - p[i0])) > eps * (1.0 + scale) * (1.0 + scale)) {
      i3 = static_cast<int>(i);
      break;
    }
  if (i3 < 0) return {};

  struct Tri {
    int a, b, c;
    bool alive = true;
  };
  std::vector<Tri> tris;
  auto add_tri = [&](int a, int b, int c, Vec3 inside_ref) {
    Vec3 nn = cross(p[b] - p[a], p[c] - p[a]);
    if (dot(nn, inside_ref - p[a]) > 0) std::swap(b, c);  // make nn point outward
    tris.push_back({a, b, c, true});
  };
  Vec3 centroid{(p[i0].x + p[i1].x + p[i2].x + p[i3].x) / 4,
                (p[i0].y + p[i1].y + p[i2].y + p[i3].y) / 4,
                (p[i0].z + p[i1].z + p[i2].z + p[i3].z) / 4};
  add_tri(i0, i1, i2, centroid);
  add_tri(i0, i1, i3, centroid);
  add_tri(i0, i2, i3, centroid);
  add_tri(i1, i2, i3, centroid);

  auto outward = [&](const Tri& t) {
    return cross(p[t.b] - p[t.a], p[t.c] - p[t.a]);
  };

  for (std::size_t i = 0; i < n; ++i) {
    int idx = static_cast<int>(i);
    // collect facets visible from p[i]
    std::vector<std::size_t> visible;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!tris[t].alive) continue;
      Vec3 nn = outward(tris[t]);
      if (dot(nn, p[idx] - p[tris[t].a]) > eps * (1.0 + norm(nn))) visible.push_back(t);
    }
    if (visible.empty()) continue;
    // horizon = edges shared by exactly one visible facet
    struct Edge {
      int u, v;
    };
    std::vector<Edge> horizon;
    auto edge_key = [](int u, int v) {
      return (static_cast<std::int64_t>(std::min(u, v)) << 32) | std::max(u, v);
    };
    std::vector<std::pair<std::int64_t, Edge>> counts;
    for (std::size_t t : visible) {
      const Tri& tr = tris[t];
      const Edge es[3] = {{tr.a, tr.b}, {tr.b, tr.c}, {tr.c, tr.a}};
      for (const Edge& e : es) {
        auto key = edge_key(e.u, e.v);
        auto it = std::find_if(counts.begin(), counts.end(),
                               [&](const auto& kv) { return kv.first == key; });
        if (it == counts.end())
          counts.push_back({key, e});
        else
          counts.erase(it);
      }
    }
    for (auto& kv : counts) horizon.push_back(kv.second);
    for (std::size_t t : visible) tris[t].alive = false;
    for (const Edge& e : horizon) add_tri(e.u, e.v, idx, centroid);
  }

  std::vector<Facet> out;
  for (const Tri& t : tris) {
    if (!t.alive) continue;
    Vec3 nn = outward(t);
    double ln = norm(nn);
    if (ln <= eps) continue;
    nn = {nn.x / ln, nn.y / ln, nn.z / ln};
    out.push_back({t.a, t.b, t.c, nn, dot(nn, p[t.a])});
  }
  return out;
}

bool hull_3d_test(std::span<const double> pts, std::size_t n, std::span<const double> a,
                  double r, bool& degenerate) {
  std::vector<Vec3> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = {pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]};
  auto facets = hull_3d(p);
  degenerate = facets.empty();
  if (degenerate) return false;
  Vec3 q{a[0], a[1], a[2]};
  for (const auto& f : facets) {
    double margin = f.offset - dot(f.normal, q);  // > 0 when strictly inside
    if (!(margin > r)) return false;
  }
  return true;
}

bool sampling_test(std::span<const double> pts, std::size_t n, int d,
                   std::span<const double> a, double r, std::size_t directions) {
  // B(a,r) in the interior of the hull iff the support function of the hull
  // exceeds a.v + r in every direction v. Sampled with a fixed-seed stream.
  Rng rng(0x5EEDBA11u);
  std::vector<double> v(d);
  for (std::size_t s = 0; s < directions; ++s) {
    // isotropic direction via Box-Muller pairs
    double nrm = 0.0;
    for (int i = 0; i < d; ++i) {
      double u1 = rng.uniform01(), u2 = rng.uniform01();
      while (u1 <= 0.0) u1 = rng.uniform01();
      v[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
      nrm += v[i] * v[i];
    }
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) continue;
    double support = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      double dp = 0.0;
      for (int k = 0; k < d; ++k) dp += pts[i * d + k] * v[k] / nrm;
      support = std::max(support, dp);
    }
    double av = 0.0;
    for (int k = 0; k < d; ++k) av += a[k] * v[k] / nrm;
    if (!(support - av > r)) return false;
  }
  return true;
}

}  // namespace

HullBallResult ball_in_hull_interior(const Geometry& geom,
                                     std::span<const double> points_flat,
                                     std::size_t count, std::span<const double> a,
                                     double r, std::size_t sample_directions) {
  if (geom.is_torus())
    throw ContractViolation("ball_in_hull_interior is Euclidean-only");
  if (count == 0) throw ContractViolation("ball_in_hull_interior: empty point set");
  if (!(r > 0.0)) throw ContractViolation("ball_in_hull_interior: radius must be > 0");
  const int d = geom.dimension;
  if (points_flat.size() != count * static_cast<std::size_t>(d) ||
      a.size() != static_cast<std::size_t>(d))
    throw ContractViolation("ball_in_hull_interior: dimension mismatch");

  if (d == 1) return {interval_test(points_flat, count, a[0], r), "interval"};
  if (d == 2) return {hull_2d_test(points_flat, count, a, r), "hull-2d"};
  if (d == 3) {
    bool degenerate = false;
    bool in = hull_3d_test(points_flat, count, a, r, degenerate);
    if (!degenerate) return {in, "hull-3d"};
    return {false, "hull-3d"};  // flat hull: empty interior
  }
  return {sampling_test(points_flat, count, d, a, r, sample_directions), "sampling"};
}

}  // namespace palm
