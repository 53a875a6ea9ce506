#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "palm/rng.hpp"
#include "palm/solver.hpp"
#include "palm/voronoi.hpp"

using namespace palm;

namespace {
AtomicMeasure integer_atoms(int lo, int hi) {
  auto g = Geometry::euclidean(1);
  std::vector<double> c;
  for (int k = lo; k <= hi; ++k) c.push_back(k);
  return make_explicit(g, c, std::vector<double>(c.size(), 1.0));
}
}  // namespace

TEST_CASE("voronoi radius on the integer line") {
  auto psi = integer_atoms(-5, 5);
  {
    double x[] = {0.6};
    CHECK(voronoi_radius(psi, x) == doctest::Approx(0.6));
  }
  {
    double x[] = {0.0};
    CHECK(voronoi_radius(psi, x) == doctest::Approx(1.0));
  }
  {
    auto g = Geometry::euclidean(1);
    auto single = make_explicit(g, {3.0}, {1.0});
    double x[] = {0.0};
    CHECK(std::isinf(voronoi_radius(single, x)));
  }
}

TEST_CASE("voronoi density values: interior, tie, and saturated boundary") {
  auto psi = integer_atoms(-5, 5);
  const std::size_t j0 = 5;  // the atom at 0
  {
    double x[] = {0.5};
    CHECK(voronoi_density(psi, x, j0) == doctest::Approx(0.5));
    CHECK(voronoi_density(psi, x, j0 + 1) == doctest::Approx(0.5));
  }
  {
    double x[] = {0.4};
    CHECK(voronoi_density(psi, x, j0) == doctest::Approx(1.0));
  }
  {
    // interior already holds unit mass: boundary constant is zero
    double x[] = {0.6};
    CHECK(voronoi_density(psi, x, j0) == doctest::Approx(0.0));
  }
}

TEST_CASE("voronoi normalization is exact at every query") {
  Rng rng(9);
  auto g = Geometry::torus({8.0, 8.0});
  std::vector<double> c, w;
  for (int k = 0; k < 25; ++k) {
    c.push_back(rng.uniform(0.0, 8.0));
    c.push_back(rng.uniform(0.0, 8.0));
    w.push_back(rng.uniform(0.2, 1.5));
  }
  auto psi = make_explicit(g, c, w);
  for (int q = 0; q < 200; ++q) {
    double x[] = {rng.uniform(0.0, 8.0), rng.uniform(0.0, 8.0)};
    auto row = voronoi_density_row(psi, x);
    double total = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j) total += row[j] * psi.weight(j);
    if (std::isfinite(voronoi_radius(psi, x)))
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    else
      CHECK(total == doctest::Approx(psi.total_mass()).epsilon(1e-12));
  }
}

TEST_CASE("voronoi density equals the first application function") {
  Rng rng(15);
  auto g = Geometry::torus({8.0});
  std::vector<double> pc, qc, qw;
  for (int i = 0; i < 7; ++i) pc.push_back(rng.uniform(0.0, 8.0));
  for (int j = 0; j < 9; ++j) {
    qc.push_back(rng.uniform(0.0, 8.0));
    qw.push_back(rng.uniform(0.2, 1.0));
  }
  auto phi = make_explicit(g, pc, std::vector<double>(7, 1.0));
  auto psi = make_explicit(g, qc, qw);
  auto table = PairTable::build(phi, psi);
  GaleShapleySolver solver(table, {});
  solver.application_step();
  for (std::size_t i = 0; i < table->sites(); ++i) {
    auto row = voronoi_density_row(psi, phi.position(i));
    auto [b, e] = table->row_range(i);
    for (std::uint64_t p = b; p < e; ++p)
      CHECK(solver.A()[p] == doctest::Approx(row[table->pair_center(p)]).epsilon(1e-12));
  }
}

TEST_CASE("territory membership: the two evaluation paths agree") {
  Rng rng(21);
  auto g = Geometry::torus({8.0, 8.0});
  std::vector<double> c, w;
  for (int k = 0; k < 20; ++k) {
    c.push_back(rng.uniform(0.0, 8.0));
    c.push_back(rng.uniform(0.0, 8.0));
    w.push_back(rng.uniform(0.3, 1.2));
  }
  auto psi = make_explicit(g, c, w);
  std::size_t checked = 0;
  for (int q = 0; q < 10000; ++q) {
    double x[] = {rng.uniform(0.0, 8.0), rng.uniform(0.0, 8.0)};
    const std::size_t j = rng.uniform_index(psi.size());
    const bool fast = in_territory(psi, x, j);
    const bool via_density = voronoi_density(psi, x, j) > 0.0;
    CHECK(fast == via_density);
    ++checked;
  }
  CHECK(checked == 10000);
}

TEST_CASE("membership basics") {
  auto psi = integer_atoms(-5, 5);
  const std::size_t j0 = 5;
  double a[] = {0.5};
  CHECK(in_territory(psi, a, j0));
  double b[] = {0.6};
  CHECK_FALSE(in_territory(psi, b, j0));
  // an atom is always in its own territory
  CHECK(in_territory(psi, psi.position(j0), j0));
}

TEST_CASE("counting-measure territories are classical voronoi cells") {
  Rng rng(33);
  for (int inst = 0; inst < 3; ++inst) {
    auto g = Geometry::euclidean(2);
    std::vector<double> c;
    const std::size_t m = 12;
    for (std::size_t k = 0; k < 2 * m; ++k) c.push_back(rng.uniform(-4.0, 4.0));
    auto psi = make_explicit(g, c, std::vector<double>(m, 1.0));
    const double btol = 1e-9;
    for (int q = 0; q < 3000; ++q) {
      double x[] = {rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)};
      const std::size_t j = rng.uniform_index(m);
      double dj = g.distance(x, psi.position(j));
      double dmin = 1e300;
      for (std::size_t k = 0; k < m; ++k)
        dmin = std::min(dmin, g.distance(x, psi.position(k)));
      if (std::fabs(dj - dmin) <= btol) continue;  // bisector tie class
      CHECK(in_territory(psi, x, j) == (dj < dmin + btol));
    }
  }
}

TEST_CASE("equilateral half-weight triangle: star-shaped, not convex") {
  auto g = Geometry::euclidean(2);
  const double R = 2.0;
  std::vector<double> c;
  for (int k = 0; k < 3; ++k) {
    c.push_back(R * std::cos(2.0 * M_PI * k / 3.0));
    c.push_back(R * std::sin(2.0 * M_PI * k / 3.0));
  }
  auto psi = make_explicit(g, c, std::vector<double>(3, 0.5));
  auto diag = territory_diagnostics(psi, 0, 360, 50.0);
  CHECK(diag.star_shaped);
  CHECK_FALSE(diag.bounded);  // a cone of directions escapes

  // non-convexity: two member points whose midpoint leaves the territory
  auto p1v = psi.position(1);
  auto p2v = psi.position(2);
  double near1[] = {p1v[0] * 0.98, p1v[1] * 0.98};
  double near2[] = {p2v[0] * 0.98, p2v[1] * 0.98};
  REQUIRE(in_territory(psi, near1, 0));
  REQUIRE(in_territory(psi, near2, 0));
  double mid[] = {(near1[0] + near2[0]) / 2.0, (near1[1] + near2[1]) / 2.0};
  CHECK_FALSE(in_territory(psi, mid, 0));
}

TEST_CASE("two atoms: unbounded territories") {
  auto g = Geometry::euclidean(1);
  auto psi = make_explicit(g, {0.0, 1.0}, {1.0, 1.0});
  auto diag = territory_diagnostics(psi, 0, 2, 100.0);
  CHECK_FALSE(diag.bounded);
}

TEST_CASE("dense torus point set: all territories bounded and small") {
  auto g = Geometry::torus({10.0, 10.0});
  auto psi = make_poisson(g, 2.0, 424242);
  REQUIRE(psi.total_mass() > 1.0);
  double worst = 0.0;
  for (std::size_t j = 0; j < std::min<std::size_t>(psi.size(), 30); ++j) {
    auto diag = territory_diagnostics(psi, j, 90, 0.0, 200);
    CHECK(diag.bounded);
    worst = std::max(worst, diag.max_extent);
  }
  CHECK(worst < 5.0);  // far below the half-period probe limit
}

TEST_CASE("classical cell polygons partition around their centers") {
  Rng rng(77);
  auto g = Geometry::euclidean(2);
  std::vector<double> c;
  for (int k = 0; k < 12; ++k) c.push_back(rng.uniform(-3.0, 3.0));
  auto psi = make_explicit(g, c, std::vector<double>(6, 1.0));
  for (std::size_t j = 0; j < 6; ++j) {
    auto poly = classical_cell_polygon(psi, j);
    REQUIRE(poly.size() >= 3);
    // the center lies inside its own cell polygon (ray test)
    auto ctr = psi.position(j);
    int crossings = 0;
    for (std::size_t a = 0; a < poly.size(); ++a) {
      auto& P = poly[a];
      auto& Q = poly[(a + 1) % poly.size()];
      if ((P[1] > ctr[1]) != (Q[1] > ctr[1])) {
        double t = (ctr[1] - P[1]) / (Q[1] - P[1]);
        if (P[0] + t * (Q[0] - P[0]) > ctr[0]) ++crossings;
      }
    }
    CHECK(crossings % 2 == 1);
  }
}

TEST_CASE("voronoi preconditions") {
  auto g = Geometry::euclidean(1);
  auto tiny = make_explicit(g, {0.0}, {0.5});
  double x[] = {0.2};
  CHECK_THROWS_AS(voronoi_radius(tiny, x), ContractViolation);
  CHECK_THROWS_AS(in_territory(tiny, x, 0), ContractViolation);
}
